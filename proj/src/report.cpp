#include "riskassess/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "riskassess/case_io.hpp"

namespace riskassess {

using ojson = nlohmann::ordered_json;

void RunConfig::check() const {
  if (n_s < 1) throw DataError("sample count must be >= 1");
  if (orders.empty()) throw DataError("no contingency classes requested");
  if (cost_modes.empty()) throw DataError("no cost mode requested");
  if (k_segments < 1) throw DataError("segment count must be >= 1");
  if (!(shed_penalty > 0.0) || !std::isfinite(shed_penalty)) throw DataError("shed penalty must be positive");
  if (!(sigma_ratio >= 0.0)) throw DataError("sigma ratio must be >= 0");
  for (auto n : probe_sizes)
    if (n < 1) throw DataError("probe sizes must be >= 1");
  table.check();
}

double max_marginal_cost(const Network& network) {
  double best = 0.0;
  for (const auto& g : network.generators)
    if (g.in_service) best = std::max(best, 2.0 * g.cost.a * g.p_max + g.cost.b);
  return best;
}

namespace {

std::string pct(double fraction) { return format_double(100.0 * fraction); }

AssessmentConfig assessment_config(const RunConfig& rc) {
  AssessmentConfig ac;
  ac.seed = rc.seed;
  ac.n_s = rc.n_s;
  ac.orders = rc.orders;
  ac.opf.k_segments = rc.k_segments;
  ac.opf.shed_penalty = rc.shed_penalty;
  ac.table = rc.table;
  ac.sigma_ratio = rc.sigma_ratio;
  ac.workers = std::max(1u, rc.workers);
  return ac;
}

void emit(const std::function<void(const std::string&)>& log, const std::string& msg) {
  if (log) log(msg);
}

}  // namespace

RiskReport run_assessment(const RunConfig& config, const std::function<void(const std::string&)>& log) {
  config.check();
  RiskReport report;
  report.config = config;
  const Network base = load_case(config.case_path);

  std::vector<PenetrationScenario> scenarios;
  for (const auto& p : config.scenario_paths) scenarios.push_back(load_scenario(p));
  const bool scan = !scenarios.empty();
  if (std::none_of(scenarios.begin(), scenarios.end(), [](const auto& s) { return s.conversions.empty(); }))
    scenarios.insert(scenarios.begin(), PenetrationScenario{"0%", {}});
  std::set<std::string> seen;
  for (const auto& s : scenarios)
    if (!seen.insert(s.label).second) throw DataError("duplicate scenario label '" + s.label + "'");

  std::vector<PenetrationCase> cases;
  double marginal = 0.0;
  for (const auto& s : scenarios) {
    cases.push_back(build_penetration_case(base, s, config.sigma_ratio));
    marginal = std::max(marginal, max_marginal_cost(cases.back().network));
  }
  if (config.shed_penalty <= marginal) {
    std::ostringstream os;
    os << "shed penalty " << format_double(config.shed_penalty) << " $/MWh does not exceed the highest marginal cost "
       << format_double(marginal) << " $/MWh; shedding may be chosen over generation";
    report.warnings.push_back(os.str());
    emit(log, "warning: " + os.str());
  }

  AssessmentConfig ac = assessment_config(config);
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& s = scenarios[i];
    emit(log, "scenario " + s.label + " (penetration " + pct(cases[i].penetration) + "%)");
    auto last = std::chrono::steady_clock::now();
    ac.progress = [&](std::size_t done, std::size_t total) {
      const auto now = std::chrono::steady_clock::now();
      if (done == total || now - last >= std::chrono::seconds(1)) {
        last = now;
        emit(log, "  " + s.label + ": " + std::to_string(done) + "/" + std::to_string(total) + " states");
      }
    };
    auto net = std::make_shared<const Network>(cases[i].network);
    for (auto& a : assess_scenario(net, cases[i].spec, s.label, cases[i].penetration, config.cost_modes, ac))
      report.assessments.push_back(std::move(a));
  }
  if (scan) {
    for (CostMode m : config.cost_modes) {
      std::vector<ScenarioAssessment> same;
      for (const auto& a : report.assessments)
        if (a.cost_mode == m) same.push_back(a);
      report.scans.push_back(build_threshold_scan(same, config.criterion));
    }
  }
  annotate(report);
  check_self_consistency(report);
  for (const auto& o : report.observations) emit(log, "observation: " + o);
  std::map<std::string, std::size_t> by_kind;
  for (const auto& f : report.flags) {
    ++by_kind[f.kind];
    if (f.kind == "criteria_disagree") emit(log, "flag: " + f.cost_mode + " " + f.detail);
  }
  for (const auto& [kind, n] : by_kind) emit(log, "flags: " + std::to_string(n) + " x " + kind);
  return report;
}

void annotate(RiskReport& report) {
  report.flags.clear();
  report.observations.clear();
  for (const auto& a : report.assessments)
    for (const auto& r : a.risk.results)
      if (r.negative())
        report.flags.push_back({"negative_delta_c", a.label, to_string(a.cost_mode), r.contingency.label,
                                "delta_c = " + format_double(r.delta_c)});

  // QF vs LF, per contingency and scenario.
  std::map<std::string, const ScenarioAssessment*> lf, qf;
  for (const auto& a : report.assessments) (a.cost_mode == CostMode::lf ? lf : qf)[a.label] = &a;
  for (const auto& a : report.assessments) {
    if (a.cost_mode != CostMode::lf || !qf.count(a.label)) continue;
    const auto& q = *qf[a.label];
    for (std::size_t i = 0; i < a.risk.results.size(); ++i) {
      const auto& rl = a.risk.results[i];
      const auto& rq = q.risk.results[i];
      if (rq.delta_c < rl.delta_c || rq.risk < rl.risk)
        report.flags.push_back({"qf_below_lf", a.label, "QF", rl.contingency.label,
                                "delta_c LF " + format_double(rl.delta_c) + ", QF " + format_double(rq.delta_c)});
    }
  }

  for (const auto& s : report.scans) {
    const std::string mode = to_string(s.cost_mode);
    if (s.criteria_disagree())
      report.flags.push_back({"criteria_disagree", "", mode, "",
                              "avg_delta_c picks " + s.worst_by_avg_delta_c + ", total_risk picks " +
                                  s.worst_by_total_risk});

    // Which bus ranks first in each scenario.
    std::vector<std::string> top;
    for (const auto& r : s.rows)
      for (const auto& cs : r.summaries)
        if (cs.cls == ContingencyClass::bus) top.push_back(cs.most_critical);
    if (!top.empty()) {
      if (std::all_of(top.begin(), top.end(), [&](const auto& t) { return t == top.front(); })) {
        report.observations.push_back(mode + ": " + top.front() + " ranks first among bus outages in every scenario");
      } else {
        std::string list;
        for (std::size_t i = 0; i < top.size(); ++i) list += (i ? ", " : "") + s.rows[i].label + " " + top[i];
        report.observations.push_back(mode + ": top-ranked bus outage varies by scenario (" + list + ")");
      }
    }
    if (s.rows.size() >= 3) {
      for (auto [name, worst] : {std::pair<std::string, std::string>{"avg_delta_c", s.worst_by_avg_delta_c},
                                 {"total_risk", s.worst_by_total_risk}}) {
        double lo = s.rows.front().penetration, hi = lo, at = 0.0;
        for (const auto& r : s.rows) {
          lo = std::min(lo, r.penetration);
          hi = std::max(hi, r.penetration);
          if (r.label == worst) at = r.penetration;
        }
        const bool interior = at > lo && at < hi;
        report.observations.push_back(mode + ": " + name + " maximum at " + worst +
                                      (interior ? " (interior penetration level)" : " (boundary penetration level)"));
      }
    }
  }
}

void check_self_consistency(const RiskReport& report) {
  auto fail = [](const std::string& what) { throw InvariantError("report self-consistency: " + what); };
  for (const auto& a : report.assessments) {
    const std::string where = a.label + " " + to_string(a.cost_mode);
    for (const auto& r : a.risk.results) {
      if (r.delta_c != r.mean_cost - a.base.c_o) fail(where + " " + r.contingency.label + " delta_c");
      if (r.risk != r.contingency.probability * r.delta_c) fail(where + " " + r.contingency.label + " risk");
    }
    for (const auto& s : a.risk.summaries) {
      std::vector<ContingencyResult> members;
      for (const auto& r : a.risk.results)
        if (r.contingency.cls == s.cls) members.push_back(r);
      const ClassSummary t = summarize_class(s.cls, members, report.config.table.for_class(s.cls));
      if (t.count != s.count || t.probability != s.probability || t.total_risk != s.total_risk ||
          t.avg_delta_c != s.avg_delta_c || t.most_critical != s.most_critical ||
          t.least_critical != s.least_critical || t.negative_count != s.negative_count)
        fail(where + " class " + to_string(s.cls));
    }
  }
  for (const auto& scan : report.scans) {
    std::vector<ScenarioAssessment> same;
    for (const auto& a : report.assessments)
      if (a.cost_mode == scan.cost_mode) same.push_back(a);
    const ThresholdScan t = build_threshold_scan(same, scan.criterion);
    if (t.worst_by_avg_delta_c != scan.worst_by_avg_delta_c || t.worst_by_total_risk != scan.worst_by_total_risk ||
        t.rows.size() != scan.rows.size())
      fail("threshold scan " + to_string(scan.cost_mode));
  }
}

// ---- serialization ----

namespace {

ojson stats_json(const McStats& s) {
  return ojson{{"n_s", s.n_s}, {"c_o", s.c_o}, {"c_sigma", s.c_sigma}, {"c_cov", s.c_cov}, {"c_err", s.c_err}};
}

std::vector<const ContingencyResult*> ranked(const ScenarioAssessment& a, ContingencyClass cls) {
  std::vector<const ContingencyResult*> out;
  for (const auto& r : a.risk.results)
    if (r.contingency.cls == cls) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(), [](const auto* x, const auto* y) {
    if (x->risk != y->risk) return x->risk > y->risk;
    return x->contingency.label < y->contingency.label;
  });
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      if (!first) os_ << ',';
      os_ << h;
      first = false;
    }
    os_ << '\n';
  }
  Csv& operator<<(const std::string& s) { return field(csv_field(s)); }
  Csv& operator<<(const char* s) { return field(csv_field(s)); }
  Csv& operator<<(double v) { return field(format_double(v)); }
  Csv& operator<<(std::size_t v) { return field(std::to_string(v)); }
  Csv& operator<<(std::int64_t v) { return field(std::to_string(v)); }
  Csv& operator<<(bool v) { return field(v ? "1" : "0"); }
  void end() {
    os_ << '\n';
    open_ = false;
  }
  std::string str() const { return os_.str(); }

 private:
  Csv& field(const std::string& s) {
    if (open_) os_ << ',';
    os_ << s;
    open_ = true;
    return *this;
  }
  std::ostringstream os_;
  bool open_ = false;
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << content;
  if (!f) throw DataError("write failed for " + path.string());
}

}  // namespace

std::string report_json(const RiskReport& rep) {
  const RunConfig& c = rep.config;
  ojson j;
  j["schema_version"] = kReportSchemaVersion;
  j["generator"] = {{"name", "riskassess"}, {"version", std::string(kVersion)}};
  ojson cfg;
  cfg["case"] = c.case_path;
  cfg["scenarios"] = c.scenario_paths;
  cfg["seed"] = c.seed;
  cfg["rng"] = std::string(kRngIdentifier);
  cfg["n_s"] = c.n_s;
  cfg["orders"] = ojson::array();
  for (auto o : c.orders) cfg["orders"].push_back(to_string(o));
  cfg["cost_modes"] = ojson::array();
  for (auto m : c.cost_modes) cfg["cost_modes"].push_back(to_string(m));
  cfg["segments"] = c.k_segments;
  cfg["shed_penalty"] = c.shed_penalty;
  cfg["probabilities"] = {{"L1", c.table.pr_l1}, {"L2", c.table.pr_l2}, {"L3", c.table.pr_l3}, {"BUS", c.table.pr_bus}};
  cfg["sigma_ratio"] = c.sigma_ratio;
  cfg["criterion"] = to_string(c.criterion);
  j["config"] = cfg;

  j["scenarios"] = ojson::array();
  for (const auto& a : rep.assessments) {
    ojson s;
    s["label"] = a.label;
    s["penetration_pct"] = 100.0 * a.penetration;
    s["cost_mode"] = to_string(a.cost_mode);
    s["base"] = stats_json(a.base);
    s["summaries"] = ojson::array();
    for (const auto& cs : a.risk.summaries)
      s["summaries"].push_back({{"class", to_string(cs.cls)},
                                {"count", cs.count},
                                {"probability", cs.probability},
                                {"total_risk", cs.total_risk},
                                {"avg_delta_c", cs.avg_delta_c},
                                {"most_critical", cs.most_critical},
                                {"least_critical", cs.least_critical},
                                {"negative_count", cs.negative_count}});
    s["rankings"] = ojson::object();
    for (const auto& cs : a.risk.summaries) {
      ojson order = ojson::array();
      for (const auto* r : ranked(a, cs.cls)) order.push_back(r->contingency.label);
      s["rankings"][to_string(cs.cls)] = order;
    }
    s["contingencies"] = ojson::array();
    for (const auto& r : a.risk.results)
      s["contingencies"].push_back({{"class", to_string(r.contingency.cls)},
                                    {"label", r.contingency.label},
                                    {"probability", r.contingency.probability},
                                    {"mean_cost", r.mean_cost},
                                    {"delta_c", r.delta_c},
                                    {"risk", r.risk},
                                    {"negative", r.negative()}});
    j["scenarios"].push_back(s);
  }

  j["threshold_scans"] = ojson::array();
  for (const auto& sc : rep.scans) {
    ojson s;
    s["cost_mode"] = to_string(sc.cost_mode);
    s["criterion"] = to_string(sc.criterion);
    s["worst_case"] = sc.worst_case();
    s["worst_by_avg_delta_c"] = sc.worst_by_avg_delta_c;
    s["worst_by_total_risk"] = sc.worst_by_total_risk;
    s["criteria_disagree"] = sc.criteria_disagree();
    s["rows"] = ojson::array();
    for (const auto& r : sc.rows)
      s["rows"].push_back({{"label", r.label},
                           {"penetration_pct", 100.0 * r.penetration},
                           {"c_o", r.base.c_o},
                           {"max_avg_delta_c", r.max_avg_delta_c()},
                           {"total_risk", r.total_risk()}});
    j["threshold_scans"].push_back(s);
  }

  j["flags"] = ojson::array();
  for (const auto& f : rep.flags)
    j["flags"].push_back({{"kind", f.kind},
                          {"scenario", f.scenario},
                          {"cost_mode", f.cost_mode},
                          {"label", f.label},
                          {"detail", f.detail}});
  j["observations"] = rep.observations;
  j["warnings"] = rep.warnings;
  return j.dump(2) + "\n";
}

std::string contingencies_csv(const RiskReport& rep) {
  Csv csv{"scenario", "penetration_pct", "cost_mode", "class", "label", "probability", "mean_cost", "delta_c", "risk",
          "negative"};
  for (const auto& a : rep.assessments)
    for (const auto& r : a.risk.results) {
      csv << a.label << 100.0 * a.penetration << to_string(a.cost_mode) << to_string(r.contingency.cls)
          << r.contingency.label << r.contingency.probability << r.mean_cost << r.delta_c << r.risk << r.negative();
      csv.end();
    }
  return csv.str();
}

std::string summary_csv(const RiskReport& rep) {
  Csv csv{"scenario",   "penetration_pct", "cost_mode",     "class",          "count",
          "probability", "total_risk",     "avg_delta_c",   "most_critical",  "least_critical",
          "negative_count"};
  for (const auto& a : rep.assessments)
    for (const auto& s : a.risk.summaries) {
      csv << a.label << 100.0 * a.penetration << to_string(a.cost_mode) << to_string(s.cls) << s.count
          << s.probability << s.total_risk << s.avg_delta_c << s.most_critical << s.least_critical
          << s.negative_count;
      csv.end();
    }
  return csv.str();
}

std::string threshold_csv(const RiskReport& rep) {
  Csv csv{"cost_mode", "scenario", "penetration_pct", "n_s", "c_o", "c_sigma", "c_cov", "c_err", "max_avg_delta_c",
          "total_risk", "worst_by_avg_delta_c", "worst_by_total_risk"};
  for (const auto& sc : rep.scans)
    for (const auto& r : sc.rows) {
      csv << to_string(sc.cost_mode) << r.label << 100.0 * r.penetration << r.base.n_s << r.base.c_o
          << r.base.c_sigma << r.base.c_cov << r.base.c_err << r.max_avg_delta_c() << r.total_risk()
          << (r.label == sc.worst_by_avg_delta_c) << (r.label == sc.worst_by_total_risk);
      csv.end();
    }
  return csv.str();
}

std::string fig_risk_csv(const RiskReport& rep, ContingencyClass cls) {
  Csv csv{"cost_mode", "scenario", "penetration_pct", "label", "risk"};
  for (const auto& a : rep.assessments)
    for (const auto& r : a.risk.results)
      if (r.contingency.cls == cls) {
        csv << to_string(a.cost_mode) << a.label << 100.0 * a.penetration << r.contingency.label << r.risk;
        csv.end();
      }
  return csv.str();
}

std::string fig_rt_csv(const RiskReport& rep) {
  Csv csv{"cost_mode", "scenario", "penetration_pct", "class", "total_risk"};
  for (const auto& a : rep.assessments)
    for (const auto& s : a.risk.summaries) {
      csv << to_string(a.cost_mode) << a.label << 100.0 * a.penetration << to_string(s.cls) << s.total_risk;
      csv.end();
    }
  return csv.str();
}

std::string fig_dcavg_csv(const RiskReport& rep) {
  Csv csv{"cost_mode", "scenario", "penetration_pct", "class", "avg_delta_c"};
  for (const auto& a : rep.assessments)
    for (const auto& s : a.risk.summaries) {
      csv << to_string(a.cost_mode) << a.label << 100.0 * a.penetration << to_string(s.cls) << s.avg_delta_c;
      csv.end();
    }
  return csv.str();
}

std::string fig_lf_qf_csv(const RiskReport& rep) {
  Csv csv{"scenario", "penetration_pct", "class", "label", "delta_c_lf", "delta_c_qf", "risk_lf", "risk_qf",
          "qf_ge_lf"};
  std::map<std::string, const ScenarioAssessment*> qf;
  for (const auto& a : rep.assessments)
    if (a.cost_mode == CostMode::qf) qf[a.label] = &a;
  for (const auto& a : rep.assessments) {
    if (a.cost_mode != CostMode::lf || !qf.count(a.label)) continue;
    const auto& q = *qf[a.label];
    for (std::size_t i = 0; i < a.risk.results.size(); ++i) {
      const auto& l = a.risk.results[i];
      const auto& r = q.risk.results[i];
      csv << a.label << 100.0 * a.penetration << to_string(l.contingency.cls) << l.contingency.label << l.delta_c
          << r.delta_c << l.risk << r.risk << (r.delta_c >= l.delta_c && r.risk >= l.risk);
      csv.end();
    }
  }
  return csv.str();
}

void write_report_files(const RiskReport& rep, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / "report.json", report_json(rep));
  write_file(dir / "contingencies.csv", contingencies_csv(rep));
  write_file(dir / "summary.csv", summary_csv(rep));
  write_file(dir / "threshold.csv", threshold_csv(rep));
  write_file(dir / "fig_risk_l1.csv", fig_risk_csv(rep, ContingencyClass::l1));
  write_file(dir / "fig_risk_bus.csv", fig_risk_csv(rep, ContingencyClass::bus));
  write_file(dir / "fig_rt.csv", fig_rt_csv(rep));
  write_file(dir / "fig_dcavg.csv", fig_dcavg_csv(rep));
  write_file(dir / "fig_lf_qf.csv", fig_lf_qf_csv(rep));
}

// ---- probe ----

std::vector<McStats> run_probe(const RunConfig& config, std::vector<std::string>* warnings) {
  config.check();
  if (config.probe_sizes.empty()) throw DataError("no probe sizes given");
  auto net = std::make_shared<const Network>(load_case(config.case_path));
  const StochasticSpec spec = StochasticSpec::from_network(*net, config.sigma_ratio);
  const std::int64_t n_max = *std::max_element(config.probe_sizes.begin(), config.probe_sizes.end());
  const std::vector<Sample> samples = draw_samples(spec, config.seed, n_max);

  OpfOptions opt;
  opt.cost_mode = config.cost_modes.front();
  opt.k_segments = config.k_segments;
  opt.shed_penalty = config.shed_penalty;
  std::vector<double> costs(samples.size());
  const NetworkState intact(net);
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (samples.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, std::max(1u, config.workers), [&](std::size_t c) {
    const std::size_t lo = c * kChunk, hi = std::min(samples.size(), lo + kChunk);
    const auto part = state_costs(intact, "intact network", std::span(samples).subspan(lo, hi - lo), opt);
    std::copy(part.begin(), part.end(), costs.begin() + static_cast<std::ptrdiff_t>(lo));
  });

  std::vector<McStats> rows;
  for (auto n : config.probe_sizes) {
    rows.push_back(mc_stats(std::span(costs).first(static_cast<std::size_t>(n))));
    if (n == 1 && warnings) warnings->push_back("N_s = 1: c_sigma is undefined and reported as 0");
  }
  return rows;
}

void write_probe_file(const std::vector<McStats>& rows, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  Csv csv{"n_s", "c_o", "c_sigma", "c_cov", "c_err"};
  for (const auto& r : rows) {
    csv << r.n_s << r.c_o << r.c_sigma << r.c_cov << r.c_err;
    csv.end();
  }
  write_file(dir / "probe.csv", csv.str());
}

void print_probe_table(std::ostream& os, const std::vector<McStats>& rows) {
  os << std::setw(8) << "N_s" << std::setw(16) << "C_o" << std::setw(14) << "C_sigma" << std::setw(8) << "C_cov"
     << std::setw(12) << "C_err" << '\n';
  os << std::fixed;
  for (const auto& r : rows)
    os << std::setw(8) << r.n_s << std::setw(16) << std::setprecision(2) << r.c_o << std::setw(14) << r.c_sigma
       << std::setw(8) << r.c_cov << std::setw(12) << r.c_err << '\n';
  os << std::defaultfloat;
}

// ---- rank ----

std::vector<RankRow> rank_from_report(const std::filesystem::path& path, ContingencyClass cls,
                                      const std::string& scenario_filter, const std::string& mode_filter) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open report " + path.string());
  ojson j;
  try {
    j = ojson::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed report " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion)
      throw DataError("unsupported report schema version " + j.at("schema_version").dump());
    const std::string want = to_string(cls);
    bool evaluated = false;
    for (const auto& o : j.at("config").at("orders"))
      if (o.get<std::string>() == want) evaluated = true;
    if (!evaluated) throw DataError("class not evaluated: " + want);

    std::vector<RankRow> out;
    bool matched = false;
    for (const auto& s : j.at("scenarios")) {
      const std::string label = s.at("label").get<std::string>();
      const std::string mode = s.at("cost_mode").get<std::string>();
      if (!scenario_filter.empty() && label != scenario_filter) continue;
      if (!mode_filter.empty() && mode != to_string(cost_mode_from_string(mode_filter))) continue;
      matched = true;
      std::vector<RankRow> block;
      for (const auto& r : s.at("contingencies")) {
        if (r.at("class").get<std::string>() != want) continue;
        block.push_back({label, mode, 0, r.at("label").get<std::string>(), r.at("risk").get<double>(),
                         r.at("delta_c").get<double>(), r.at("mean_cost").get<double>()});
      }
      std::stable_sort(block.begin(), block.end(), [](const RankRow& a, const RankRow& b) {
        if (a.risk != b.risk) return a.risk > b.risk;
        return a.label < b.label;
      });
      for (std::size_t i = 0; i < block.size(); ++i) block[i].rank = i + 1;
      out.insert(out.end(), block.begin(), block.end());
    }
    if (!matched) throw DataError("no scenario in the report matches the filter");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed report " + path.string() + ": " + e.what());
  }
}

void print_rank_table(std::ostream& os, const std::vector<RankRow>& rows) {
  std::string block;
  for (const auto& r : rows) {
    const std::string key = r.scenario + " " + r.cost_mode;
    if (key != block) {
      if (!block.empty()) os << '\n';
      os << "# scenario " << r.scenario << ", " << r.cost_mode << '\n';
      os << std::setw(5) << "rank" << "  " << std::left << std::setw(24) << "contingency" << std::right
         << std::setw(16) << "risk" << std::setw(16) << "delta_c" << std::setw(18) << "mean_cost" << '\n';
      block = key;
    }
    os << std::setw(5) << r.rank << "  " << std::left << std::setw(24) << r.label << std::right << std::setw(16)
       << format_double(r.risk) << std::setw(16) << format_double(r.delta_c) << std::setw(18)
       << format_double(r.mean_cost) << '\n';
  }
}

}  // namespace riskassess

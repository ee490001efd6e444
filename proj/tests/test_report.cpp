#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "riskassess/report.hpp"

using namespace riskassess;
using nlohmann::json;

namespace {

RunConfig small_config(unsigned workers = 1) {
  RunConfig c;
  c.case_path = fixture::path("radial3.case");
  c.scenario_paths = {fixture::path("radial3_wind.scn")};
  c.n_s = 12;
  c.workers = workers;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

using Table = std::vector<std::map<std::string, std::string>>;

// Field values never contain commas or quotes in these runs.
Table parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  Table rows;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  std::getline(in, line);
  header = split(line);
  while (std::getline(in, line)) {
    const auto cells = split(line);
    REQUIRE(cells.size() == header.size());
    std::map<std::string, std::string> r;
    for (std::size_t i = 0; i < cells.size(); ++i) r[header[i]] = cells[i];
    rows.push_back(r);
  }
  return rows;
}

const RiskReport& shared_report() {
  static const RiskReport rep = run_assessment(small_config());
  return rep;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("a base scenario is added in front") {
    const auto& rep = shared_report();
    REQUIRE(rep.assessments.size() == 4);
    CHECK(rep.assessments[0].label == "0%");
    CHECK(rep.assessments[0].cost_mode == CostMode::lf);
    CHECK(rep.assessments[1].label == "0%");
    CHECK(rep.assessments[1].cost_mode == CostMode::qf);
    CHECK(rep.assessments[2].label == "67%");
    REQUIRE(rep.scans.size() == 2);
    CHECK(rep.scans[0].rows.size() == 2);
    CHECK_NOTHROW(check_self_consistency(rep));
  }

  TEST_CASE("all output files are written") {
    const auto dir = fixture::scratch_dir("report_files");
    write_report_files(shared_report(), dir);
    for (const char* f : {"report.json", "contingencies.csv", "summary.csv", "threshold.csv", "fig_risk_l1.csv",
                          "fig_risk_bus.csv", "fig_rt.csv", "fig_dcavg.csv", "fig_lf_qf.csv"})
      CHECK_MESSAGE(std::filesystem::file_size(dir / f) > 0, f);
    const auto j = json::parse(slurp(dir / "report.json"));
    CHECK(j["schema_version"] == kReportSchemaVersion);
    CHECK(j["config"]["rng"] == std::string(kRngIdentifier));
    CHECK(j["config"]["seed"] == kDefaultSeed);
    CHECK(j["config"]["n_s"] == 12);
    CHECK_FALSE(j["config"].contains("workers"));
  }

  TEST_CASE("CSV and JSON carry the same numbers") {
    const auto& rep = shared_report();
    const auto j = json::parse(report_json(rep));
    const auto rows = parse_csv(contingencies_csv(rep));
    std::size_t n = 0;
    for (const auto& s : j["scenarios"]) {
      for (const auto& c : s["contingencies"]) {
        const auto& r = rows.at(n++);
        CHECK(r.at("scenario") == s["label"].get<std::string>());
        CHECK(r.at("cost_mode") == s["cost_mode"].get<std::string>());
        CHECK(r.at("label") == c["label"].get<std::string>());
        CHECK(std::stod(r.at("delta_c")) == c["delta_c"].get<double>());
        CHECK(std::stod(r.at("risk")) == c["risk"].get<double>());
        CHECK(std::stod(r.at("mean_cost")) == c["mean_cost"].get<double>());
      }
    }
    CHECK(n == rows.size());

    const auto sums = parse_csv(summary_csv(rep));
    n = 0;
    for (const auto& s : j["scenarios"])
      for (const auto& c : s["summaries"]) {
        const auto& r = sums.at(n++);
        CHECK(r.at("class") == c["class"].get<std::string>());
        CHECK(std::stod(r.at("total_risk")) == c["total_risk"].get<double>());
        CHECK(std::stod(r.at("avg_delta_c")) == c["avg_delta_c"].get<double>());
        CHECK(r.at("most_critical") == c["most_critical"].get<std::string>());
      }
    CHECK(n == sums.size());

    const auto thr = parse_csv(threshold_csv(rep));
    REQUIRE(thr.size() == 4);
    int worst_flags = 0;
    for (const auto& r : thr) worst_flags += std::stoi(r.at("worst_by_avg_delta_c"));
    CHECK(worst_flags == 2);
  }

  TEST_CASE("CSV rows sum to the class totals") {
    const auto& rep = shared_report();
    const auto rows = parse_csv(contingencies_csv(rep));
    for (const auto& s : parse_csv(summary_csv(rep))) {
      double dc = 0.0;
      std::size_t count = 0;
      for (const auto& r : rows)
        if (r.at("scenario") == s.at("scenario") && r.at("cost_mode") == s.at("cost_mode") &&
            r.at("class") == s.at("class")) {
          dc += std::stod(r.at("delta_c"));
          ++count;
        }
      CHECK(count == std::stoul(s.at("count")));
      CHECK(std::stod(s.at("probability")) * dc == doctest::Approx(std::stod(s.at("total_risk"))).epsilon(1e-12));
    }
  }

  TEST_CASE("self-consistency catches a tampered summary") {
    RiskReport rep = shared_report();
    rep.assessments[1].risk.summaries[0].total_risk += 1e-9;
    CHECK_THROWS_AS(check_self_consistency(rep), InvariantError);
    rep = shared_report();
    rep.assessments[2].risk.summaries[1].most_critical = "B99";
    CHECK_THROWS_AS(check_self_consistency(rep), InvariantError);
  }

  TEST_CASE("reruns and worker counts give identical bytes") {
    const auto a = report_json(shared_report());
    CHECK(report_json(run_assessment(small_config())) == a);
    const auto par = run_assessment(small_config(4));
    CHECK(report_json(par) == a);
    CHECK(contingencies_csv(par) == contingencies_csv(shared_report()));
    CHECK(fig_lf_qf_csv(par) == fig_lf_qf_csv(shared_report()));
  }

  TEST_CASE("base-case-only run has no threshold scan") {
    auto cfg = small_config();
    cfg.scenario_paths.clear();
    cfg.cost_modes = {CostMode::qf};
    const auto rep = run_assessment(cfg);
    REQUIRE(rep.assessments.size() == 1);
    CHECK(rep.assessments[0].label == "0%");
    CHECK(rep.scans.empty());
    CHECK(parse_csv(threshold_csv(rep)).empty());
    CHECK(parse_csv(fig_lf_qf_csv(rep)).empty());
  }

  TEST_CASE("flags and warnings") {
    const auto& rep = shared_report();
    // The converted unit sits on bus 1, so its outage lowers the QF deviation.
    bool qf_flag = false;
    for (const auto& f : rep.flags)
      if (f.kind == "qf_below_lf" && f.scenario == "67%" && f.label == "B1") qf_flag = true;
    CHECK(qf_flag);

    auto cfg = small_config();
    cfg.scenario_paths.clear();
    cfg.shed_penalty = 20.0;
    const auto low = run_assessment(cfg);
    REQUIRE_FALSE(low.warnings.empty());
    CHECK(low.warnings[0].find("penalty") != std::string::npos);
  }

  TEST_CASE("configuration errors") {
    auto cfg = small_config();
    SUBCASE("duplicate labels") { cfg.scenario_paths.push_back(cfg.scenario_paths[0]); }
    SUBCASE("missing case") { cfg.case_path = fixture::path("nope.case"); }
    SUBCASE("bad case") { cfg.case_path = fixture::path("bad_bus99.case"); }
    SUBCASE("no samples") { cfg.n_s = 0; }
    SUBCASE("no cost modes") { cfg.cost_modes.clear(); }
    CHECK_THROWS_AS(run_assessment(cfg), DataError);
  }

  TEST_CASE("rank reads a written report") {
    const auto dir = fixture::scratch_dir("report_rank");
    write_report_files(shared_report(), dir);
    const auto rows = rank_from_report(dir / "report.json", ContingencyClass::bus, "0%", "LF");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].label == "B2");
    CHECK(rows[0].rank == 1);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].risk >= rows[i].risk);
    CHECK(rank_from_report(dir / "report.json", ContingencyClass::l1).size() == 2 * 4);
    CHECK_THROWS_AS(rank_from_report(dir / "report.json", ContingencyClass::l1, "nope"), DataError);
    CHECK_THROWS_AS(rank_from_report(dir / "report.json", ContingencyClass::l3), DataError);
    CHECK_THROWS_AS(rank_from_report(dir / "missing.json", ContingencyClass::l1), DataError);
    std::ostringstream os;
    print_rank_table(os, rows);
    CHECK(os.str().find("B2") != std::string::npos);
  }

  TEST_CASE("probe uses nested sample sets") {
    RunConfig cfg = small_config();
    cfg.probe_sizes = {1, 10, 40};
    std::vector<std::string> warnings;
    const auto rows = run_probe(cfg, &warnings);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].n_s == 1);
    CHECK(rows[0].c_sigma == 0.0);
    CHECK(rows[2].n_s == 40);
    CHECK_FALSE(warnings.empty());

    cfg.probe_sizes = {10};
    CHECK(run_probe(cfg)[0].c_o == rows[1].c_o);
    cfg.workers = 3;
    CHECK(run_probe(cfg)[0].c_sigma == rows[1].c_sigma);

    const auto dir = fixture::scratch_dir("report_probe");
    write_probe_file(rows, dir);
    CHECK(parse_csv(slurp(dir / "probe.csv")).size() == 3);
    std::ostringstream os;
    print_probe_table(os, rows);
    CHECK(os.str().find("40") != std::string::npos);
  }
}

#include "riskassess/risk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace riskassess {

double ProbabilityTable::for_class(ContingencyClass c) const {
  switch (c) {
    case ContingencyClass::l1: return pr_l1;
    case ContingencyClass::l2: return pr_l2;
    case ContingencyClass::l3: return pr_l3;
    case ContingencyClass::bus: return pr_bus;
  }
  return 0.0;
}

void ProbabilityTable::check() const {
  for (double p : {pr_l1, pr_l2, pr_l3, pr_bus})
    if (!(p > 0.0 && p < 1.0)) throw DataError("outage probabilities must lie in (0, 1)");
}

namespace {

int order_of(ContingencyClass c) {
  switch (c) {
    case ContingencyClass::l1: return 1;
    case ContingencyClass::l2: return 2;
    case ContingencyClass::l3: return 3;
    case ContingencyClass::bus: return 0;
  }
  return 0;
}

void append_line_combinations(const Network& net, int k, ContingencyClass cls, double pr,
                              std::vector<Contingency>& out) {
  std::vector<int> ids;
  for (const auto& l : net.lines)
    if (l.in_service) ids.push_back(l.id);
  std::sort(ids.begin(), ids.end());
  const int n = static_cast<int>(ids.size());
  if (k > n) return;
  std::vector<int> pick(k);
  for (int i = 0; i < k; ++i) pick[i] = i;
  while (true) {
    Contingency c;
    c.cls = cls;
    c.probability = pr;
    for (int i = 0; i < k; ++i) {
      c.line_ids.push_back(ids[pick[i]]);
      if (i) c.label += "+";
      c.label += net.line_label(ids[pick[i]]);
    }
    out.push_back(std::move(c));
    int i = k - 1;
    while (i >= 0 && pick[i] == n - k + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
}

double mean_of(std::span<const double> xs) { return mc_stats(xs).c_o; }

}  // namespace

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& job,
                  const std::function<void(std::size_t, std::size_t)>& progress) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex progress_mutex;
  std::size_t done = 0;
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
        abort.store(true);
        continue;
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(++done, count);
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<Contingency> enumerate_contingencies(const Network& net, std::span<const ContingencyClass> orders,
                                                 const ProbabilityTable& table) {
  std::vector<Contingency> out;
  for (ContingencyClass cls : orders) {
    if (cls == ContingencyClass::bus) {
      std::vector<int> ids;
      for (const auto& b : net.buses) ids.push_back(b.id);
      std::sort(ids.begin(), ids.end());
      for (int id : ids) {
        Contingency c;
        c.cls = cls;
        c.bus_id = id;
        c.probability = table.pr_bus;
        c.label = "B" + std::to_string(id);
        out.push_back(std::move(c));
      }
    } else {
      append_line_combinations(net, order_of(cls), cls, table.for_class(cls), out);
    }
  }
  return out;
}

std::vector<double> state_costs(const NetworkState& state, const std::string& label, std::span<const Sample> samples,
                                const OpfOptions& options) {
  std::vector<double> costs;
  costs.reserve(samples.size());
  for (const auto& s : samples) {
    try {
      costs.push_back(scenario_cost(state, s, options));
    } catch (const SolverError& e) {
      throw SolverError(label + ", sample " + std::to_string(s.index) + ": " + e.what());
    }
  }
  return costs;
}

std::vector<double> contingency_costs(const std::shared_ptr<const Network>& network, const Contingency& c,
                                      std::span<const Sample> samples, const OpfOptions& options) {
  return state_costs(apply_contingency(network, c), "contingency " + c.label, samples, options);
}

double contingency_mean_cost(const std::shared_ptr<const Network>& network, const Contingency& c,
                             std::span<const Sample> samples, const OpfOptions& options) {
  return mean_of(contingency_costs(network, c, samples, options));
}

void snap_unchanged(std::span<double> costs, std::span<const double> intact, double rel_tol) {
  if (costs.size() != intact.size()) throw DataError("snap_unchanged: series lengths differ");
  for (std::size_t i = 0; i < costs.size(); ++i)
    if (std::abs(costs[i] - intact[i]) <= rel_tol * std::max(1.0, std::abs(intact[i]))) costs[i] = intact[i];
}

ClassSummary summarize_class(ContingencyClass cls, std::span<const ContingencyResult> members, double probability) {
  if (members.empty()) throw DataError("contingency class " + to_string(cls) + " has no members");
  ClassSummary s;
  s.cls = cls;
  s.count = members.size();
  s.probability = probability;
  double sum_delta = 0.0;
  const ContingencyResult* most = &members.front();
  const ContingencyResult* least = &members.front();
  for (const auto& r : members) {
    sum_delta += r.delta_c;
    if (r.negative()) ++s.negative_count;
    if (r.risk > most->risk || (r.risk == most->risk && r.contingency.label < most->contingency.label)) most = &r;
    if (r.risk < least->risk || (r.risk == least->risk && r.contingency.label < least->contingency.label)) least = &r;
  }
  s.total_risk = probability * sum_delta;
  s.avg_delta_c = sum_delta / static_cast<double>(s.count);
  s.most_critical = most->contingency.label;
  s.least_critical = least->contingency.label;
  return s;
}

RiskTable compute_risk(std::vector<ContingencyResult> inputs, double c_o, const ProbabilityTable& table,
                       std::span<const ContingencyClass> orders) {
  RiskTable out;
  for (auto& r : inputs) {
    r.contingency.probability = table.for_class(r.contingency.cls);
    r.delta_c = r.mean_cost - c_o;
    r.risk = r.contingency.probability * r.delta_c;
  }
  for (ContingencyClass cls : orders) {
    std::vector<ContingencyResult> members;
    for (const auto& r : inputs)
      if (r.contingency.cls == cls) members.push_back(r);
    out.summaries.push_back(summarize_class(cls, members, table.for_class(cls)));
  }
  out.results = std::move(inputs);
  return out;
}

std::vector<ScenarioAssessment> assess_scenario(const std::shared_ptr<const Network>& network,
                                                const StochasticSpec& spec, const std::string& label,
                                                double penetration, std::span<const CostMode> modes,
                                                const AssessmentConfig& config) {
  if (config.n_s < 1) throw DataError("sample count must be >= 1");
  config.table.check();
  const std::vector<Sample> samples = draw_samples(spec, config.seed, config.n_s);
  const std::vector<Contingency> contingencies = enumerate_contingencies(*network, config.orders, config.table);

  auto opf_for = [&](std::size_t m) {
    OpfOptions opt = config.opf;
    opt.cost_mode = modes[m];
    return opt;
  };
  auto tagged = [&](std::size_t m, const SolverError& e) {
    return SolverError("scenario " + label + " (" + to_string(modes[m]) + "), " + e.what());
  };

  // Intact costs first: every contingency is compared against them per sample.
  const NetworkState intact(network);
  std::vector<std::vector<double>> base_costs(modes.size(), std::vector<double>(samples.size()));
  parallel_for(samples.size() * modes.size(), config.workers, [&](std::size_t i) {
    const std::size_t m = i / samples.size(), k = i % samples.size();
    try {
      base_costs[m][k] = state_costs(intact, "intact network", std::span(samples).subspan(k, 1), opf_for(m)).front();
    } catch (const SolverError& e) {
      throw tagged(m, e);
    }
  });

  std::vector<std::vector<double>> means(modes.size(), std::vector<double>(contingencies.size()));
  parallel_for(
      contingencies.size(), config.workers,
      [&](std::size_t i) {
        for (std::size_t m = 0; m < modes.size(); ++m) {
          try {
            auto costs = contingency_costs(network, contingencies[i], samples, opf_for(m));
            snap_unchanged(costs, base_costs[m]);
            means[m][i] = mean_of(costs);
          } catch (const SolverError& e) {
            throw tagged(m, e);
          }
        }
      },
      config.progress);

  std::vector<ScenarioAssessment> out;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    ScenarioAssessment a;
    a.label = label;
    a.penetration = penetration;
    a.cost_mode = modes[m];
    a.base = mc_stats(base_costs[m]);
    std::vector<ContingencyResult> inputs;
    inputs.reserve(contingencies.size());
    for (std::size_t k = 0; k < contingencies.size(); ++k) inputs.push_back({contingencies[k], means[m][k], 0.0, 0.0});
    a.risk = compute_risk(std::move(inputs), a.base.c_o, config.table, config.orders);
    out.push_back(std::move(a));
  }
  return out;
}

ScenarioAssessment assess_scenario(const std::shared_ptr<const Network>& network, const StochasticSpec& spec,
                                   const std::string& label, double penetration, CostMode mode,
                                   const AssessmentConfig& config) {
  const CostMode modes[] = {mode};
  return std::move(assess_scenario(network, spec, label, penetration, modes, config).front());
}

std::string to_string(WorstCaseCriterion c) {
  return c == WorstCaseCriterion::avg_delta_c ? "avg_delta_c" : "total_risk";
}

double ThresholdRow::max_avg_delta_c() const {
  double best = -kInf;
  for (const auto& s : summaries) best = std::max(best, s.avg_delta_c);
  return best;
}

double ThresholdRow::total_risk() const {
  double t = 0.0;
  for (const auto& s : summaries) t += s.total_risk;
  return t;
}

ThresholdScan build_threshold_scan(std::span<const ScenarioAssessment> assessments, WorstCaseCriterion criterion) {
  if (assessments.empty()) throw DataError("threshold scan needs at least one scenario");
  ThresholdScan scan;
  scan.cost_mode = assessments.front().cost_mode;
  scan.criterion = criterion;
  for (const auto& a : assessments) {
    if (a.cost_mode != scan.cost_mode) throw DataError("threshold scan mixes cost modes");
    scan.rows.push_back({a.label, a.penetration, a.base, a.risk.summaries});
  }
  auto pick = [&](auto metric) {
    const ThresholdRow* best = &scan.rows.front();
    for (const auto& r : scan.rows) {
      const double v = metric(r), bv = metric(*best);
      if (v > bv || (v == bv && r.penetration < best->penetration)) best = &r;
    }
    return best->label;
  };
  scan.worst_by_avg_delta_c = pick([](const ThresholdRow& r) { return r.max_avg_delta_c(); });
  scan.worst_by_total_risk = pick([](const ThresholdRow& r) { return r.total_risk(); });
  return scan;
}

ScanResult threshold_scan(const Network& base, std::span<const PenetrationScenario> scenarios,
                          std::span<const CostMode> modes, const AssessmentConfig& config,
                          WorstCaseCriterion criterion) {
  if (std::none_of(scenarios.begin(), scenarios.end(), [](const auto& s) { return s.conversions.empty(); }))
    throw DataError("threshold scan needs the base case (a scenario without conversions)");
  ScanResult out;
  for (const auto& sc : scenarios) {
    const PenetrationCase pc = build_penetration_case(base, sc, config.sigma_ratio);
    auto net = std::make_shared<const Network>(pc.network);
    for (auto& a : assess_scenario(net, pc.spec, sc.label, pc.penetration, modes, config))
      out.assessments.push_back(std::move(a));
  }
  for (std::size_t m = 0; m < modes.size(); ++m) {
    std::vector<ScenarioAssessment> same_mode;
    for (const auto& a : out.assessments)
      if (a.cost_mode == modes[m]) same_mode.push_back(a);
    out.scans.push_back(build_threshold_scan(same_mode, criterion));
  }
  return out;
}

}  // namespace riskassess

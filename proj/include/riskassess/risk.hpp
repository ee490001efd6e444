#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "riskassess/dcopf.hpp"
#include "riskassess/grid.hpp"
#include "riskassess/sampler.hpp"

namespace riskassess {

/// Outage probability per contingency class.
struct ProbabilityTable {
  double pr_l1 = 1e-2;
  double pr_l2 = 1e-4;
  double pr_l3 = 1e-6;
  double pr_bus = 1e-7;

  double for_class(ContingencyClass c) const;
  /// Throws DataError unless every probability lies in (0, 1).
  void check() const;
};

/// Runs job(i) for i in [0, count) on up to `workers` threads. Each index
/// runs exactly once; failures are rethrown after all threads stop, lowest
/// index first. `progress` may be empty.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& job,
                  const std::function<void(std::size_t, std::size_t)>& progress = {});

/// All k-combinations of in-service lines for each requested L-k class and
/// every bus for BUS, in class order then lexicographic id order.
std::vector<Contingency> enumerate_contingencies(const Network& network, std::span<const ContingencyClass> orders,
                                                 const ProbabilityTable& table);

/// Per-sample costs of a network state. Solver failures are rethrown tagged
/// with `label` and the sample index.
std::vector<double> state_costs(const NetworkState& state, const std::string& label, std::span<const Sample> samples,
                                const OpfOptions& options);

/// state_costs of the post-contingency network.
std::vector<double> contingency_costs(const std::shared_ptr<const Network>& network, const Contingency& c,
                                      std::span<const Sample> samples, const OpfOptions& options);

/// Mean of contingency_costs, using the same summation as mc_stats.
double contingency_mean_cost(const std::shared_ptr<const Network>& network, const Contingency& c,
                             std::span<const Sample> samples, const OpfOptions& options);

/// Relative gap below which a post-contingency cost counts as unchanged.
inline constexpr double kUnchangedCostTolerance = 1e-9;

/// Sets each cost within rel_tol of the intact cost of the same sample to
/// that intact cost, so an outage that changes nothing has a deviation of
/// exactly zero instead of LP rounding noise.
void snap_unchanged(std::span<double> costs, std::span<const double> intact,
                    double rel_tol = kUnchangedCostTolerance);

struct ContingencyResult {
  Contingency contingency;
  double mean_cost = 0.0;  // $/h
  double delta_c = 0.0;    // mean_cost - c_o
  double risk = 0.0;       // probability * delta_c

  bool negative() const { return delta_c < 0.0; }
};

struct ClassSummary {
  ContingencyClass cls = ContingencyClass::l1;
  std::size_t count = 0;
  double probability = 0.0;
  double total_risk = 0.0;   // probability * sum(delta_c), summed in row order
  double avg_delta_c = 0.0;  // sum(delta_c) / count
  std::string most_critical;
  std::string least_critical;
  std::size_t negative_count = 0;
};

/// Summarizes the members of one class. Ties in risk go to the
/// lexicographically smallest label. Throws DataError when empty.
ClassSummary summarize_class(ContingencyClass cls, std::span<const ContingencyResult> members, double probability);

struct RiskTable {
  std::vector<ContingencyResult> results;
  std::vector<ClassSummary> summaries;  // one per requested class, in request order
};

/// Fills delta_c and risk of each input (mean_cost must be set) and builds a
/// summary for every requested class. Throws DataError if a requested class
/// has no members.
RiskTable compute_risk(std::vector<ContingencyResult> inputs, double c_o, const ProbabilityTable& table,
                       std::span<const ContingencyClass> orders);

struct AssessmentConfig {
  std::uint64_t seed = 0;
  std::int64_t n_s = 200;
  std::vector<ContingencyClass> orders{ContingencyClass::l1, ContingencyClass::bus};
  OpfOptions opf;  // cost_mode is overridden per run
  ProbabilityTable table;
  double sigma_ratio = kDefaultSigmaRatio;
  unsigned workers = 1;
  /// Called under a lock after each finished contingency; may run on any worker.
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Base-case statistics and risk table of one penetration level and cost mode.
struct ScenarioAssessment {
  std::string label;
  double penetration = 0.0;
  CostMode cost_mode = CostMode::lf;
  McStats base;
  RiskTable risk;
};

/// Runs the intact case and every contingency over samples 1..n_s drawn once
/// for the scenario (common random numbers). Results do not depend on the
/// worker count.
ScenarioAssessment assess_scenario(const std::shared_ptr<const Network>& network, const StochasticSpec& spec,
                                   const std::string& label, double penetration, CostMode mode,
                                   const AssessmentConfig& config);

/// Same as above but for several cost modes over one sample stream.
std::vector<ScenarioAssessment> assess_scenario(const std::shared_ptr<const Network>& network,
                                                const StochasticSpec& spec, const std::string& label,
                                                double penetration, std::span<const CostMode> modes,
                                                const AssessmentConfig& config);

enum class WorstCaseCriterion { avg_delta_c, total_risk };

std::string to_string(WorstCaseCriterion c);

struct ThresholdRow {
  std::string label;
  double penetration = 0.0;
  McStats base;
  std::vector<ClassSummary> summaries;

  double max_avg_delta_c() const;
  double total_risk() const;  // sum of class totals
};

struct ThresholdScan {
  CostMode cost_mode = CostMode::lf;
  WorstCaseCriterion criterion = WorstCaseCriterion::avg_delta_c;
  std::vector<ThresholdRow> rows;
  std::string worst_by_avg_delta_c;
  std::string worst_by_total_risk;

  const std::string& worst_case() const {
    return criterion == WorstCaseCriterion::avg_delta_c ? worst_by_avg_delta_c : worst_by_total_risk;
  }
  bool criteria_disagree() const { return worst_by_avg_delta_c != worst_by_total_risk; }
};

/// Picks the worst-case level under both criteria; ties go to the lower
/// penetration. Assessments must share one cost mode.
ThresholdScan build_threshold_scan(std::span<const ScenarioAssessment> assessments, WorstCaseCriterion criterion);

struct ScanResult {
  std::vector<ScenarioAssessment> assessments;  // scenario-major, then mode
  std::vector<ThresholdScan> scans;             // one per mode
};

/// Full pipeline over every scenario. One scenario must be the base case
/// (no conversions). Throws DataError otherwise.
ScanResult threshold_scan(const Network& base, std::span<const PenetrationScenario> scenarios,
                          std::span<const CostMode> modes, const AssessmentConfig& config,
                          WorstCaseCriterion criterion = WorstCaseCriterion::avg_delta_c);

}  // namespace riskassess

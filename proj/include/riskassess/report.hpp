#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskassess/risk.hpp"

namespace riskassess {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultSeed = 20240917;
inline constexpr const char* kSeedEnvVar = "RISKASSESS_SEED";

/// A computed report contradicts its own inputs.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string case_path;
  std::vector<std::string> scenario_paths;
  std::uint64_t seed = kDefaultSeed;
  std::int64_t n_s = 200;
  std::vector<ContingencyClass> orders{ContingencyClass::l1, ContingencyClass::bus};
  std::vector<CostMode> cost_modes{CostMode::lf, CostMode::qf};
  int k_segments = kDefaultSegments;
  double shed_penalty = kDefaultShedPenalty;
  ProbabilityTable table;
  double sigma_ratio = kDefaultSigmaRatio;
  WorstCaseCriterion criterion = WorstCaseCriterion::avg_delta_c;
  std::vector<std::int64_t> probe_sizes{100, 1000, 10000};
  std::filesystem::path out_dir;
  unsigned workers = 1;

  /// Throws DataError for n_s < 1, empty orders or cost modes, k < 1,
  /// nonpositive penalty or probabilities outside (0, 1).
  void check() const;
};

/// Something an analyst should look at: negative_delta_c, criteria_disagree
/// or qf_below_lf.
struct Flag {
  std::string kind;
  std::string scenario;
  std::string cost_mode;
  std::string label;  // contingency label, empty for scan-level flags
  std::string detail;
};

struct RiskReport {
  RunConfig config;
  std::vector<ScenarioAssessment> assessments;  // scenario-major, then cost mode
  std::vector<ThresholdScan> scans;             // empty for a base-case-only run
  std::vector<Flag> flags;
  std::vector<std::string> observations;
  std::vector<std::string> warnings;
};

/// Highest marginal cost 2a*p_max + b over in-service units.
double max_marginal_cost(const Network& network);

/// Loads the case and scenarios named in the config and runs the full
/// procedure: base case, contingency sweep, risk aggregation, threshold scan.
RiskReport run_assessment(const RunConfig& config,
                          const std::function<void(const std::string&)>& log = {});

/// Flags and observations derived from the assessments and scans.
void annotate(RiskReport& report);

/// Base-case statistics of the intact network for each probe size. Sample
/// sets are nested: size N uses samples 1..N.
std::vector<McStats> run_probe(const RunConfig& config, std::vector<std::string>* warnings = nullptr);

/// Re-aggregates every scenario's rows and throws InvariantError unless each
/// class summary is reproduced exactly.
void check_self_consistency(const RiskReport& report);

/// Writes report.json and the CSV tables into config.out_dir.
void write_report_files(const RiskReport& report, const std::filesystem::path& out_dir);
void write_probe_file(const std::vector<McStats>& rows, const std::filesystem::path& out_dir);

std::string report_json(const RiskReport& report);
std::string contingencies_csv(const RiskReport& report);
std::string summary_csv(const RiskReport& report);
std::string threshold_csv(const RiskReport& report);
std::string fig_risk_csv(const RiskReport& report, ContingencyClass cls);
std::string fig_rt_csv(const RiskReport& report);
std::string fig_dcavg_csv(const RiskReport& report);
std::string fig_lf_qf_csv(const RiskReport& report);

/// Human-readable convergence table; c_cov to two decimals.
void print_probe_table(std::ostream& os, const std::vector<McStats>& rows);

struct RankRow {
  std::string scenario;
  std::string cost_mode;
  std::size_t rank = 0;
  std::string label;
  double risk = 0.0;
  double delta_c = 0.0;
  double mean_cost = 0.0;
};

/// Contingencies of one class from a report.json, sorted by risk descending
/// (ties by label). Empty filters select everything. Throws DataError if the
/// class was not evaluated or the report cannot be read.
std::vector<RankRow> rank_from_report(const std::filesystem::path& report_path, ContingencyClass cls,
                                      const std::string& scenario_filter = {},
                                      const std::string& cost_mode_filter = {});
void print_rank_table(std::ostream& os, const std::vector<RankRow>& rows);

}  // namespace riskassess

// riskassess: probe / assess / rank front end.
#include <cstdlib>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "riskassess/case_io.hpp"
#include "riskassess/report.hpp"

using namespace riskassess;

namespace {

enum Exit { kOk = 0, kDataError = 1, kSolverError = 2, kInvariant = 3 };

std::uint64_t default_seed() {
  const char* env = std::getenv(kSeedEnvVar);
  if (!env || !*env) return kDefaultSeed;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string(kSeedEnvVar) + " is not an unsigned integer: '" + env + "'");
  }
}

std::vector<CostMode> parse_modes(const std::string& s) {
  if (s == "both") return {CostMode::lf, CostMode::qf};
  return {cost_mode_from_string(s)};
}

std::vector<ContingencyClass> parse_orders(const std::vector<std::string>& names) {
  std::vector<ContingencyClass> out;
  std::set<ContingencyClass> seen;
  for (const auto& n : names)
    if (auto c = contingency_class_from_string(n); seen.insert(c).second) out.push_back(c);
  return out;
}

struct Common {
  std::string case_path;
  std::uint64_t seed = 0;
  std::string cost_mode = "both";
  int segments = kDefaultSegments;
  double penalty = kDefaultShedPenalty;
  double sigma_ratio = kDefaultSigmaRatio;
  std::string out;
  unsigned workers = 1;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool out_required) {
  app->add_option("--case", c.case_path, "case file")->required();
  app->add_option("--seed", c.seed, std::string("RNG seed (default: $") + kSeedEnvVar + " or " +
                                        std::to_string(kDefaultSeed) + ")");
  app->add_option("--segments", c.segments, "linear segments per quadratic cost curve")->capture_default_str();
  app->add_option("--penalty", c.penalty, "load-shedding penalty, $/MWh")->capture_default_str();
  app->add_option("--sigma-ratio", c.sigma_ratio, "standard deviation as a fraction of the mean")
      ->capture_default_str();
  auto* out = app->add_option("--out", c.out, "output directory");
  if (out_required) out->required();
  app->add_option("--workers", c.workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_flag("--quiet", c.quiet, "no progress on stderr");
}

RunConfig base_config(const Common& c, bool seed_given) {
  RunConfig rc;
  rc.case_path = c.case_path;
  rc.seed = seed_given ? c.seed : default_seed();
  rc.cost_modes = parse_modes(c.cost_mode);
  rc.k_segments = c.segments;
  rc.shed_penalty = c.penalty;
  rc.sigma_ratio = c.sigma_ratio;
  rc.out_dir = c.out;
  rc.workers = c.workers;
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-based static security assessment with wind generation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  auto* probe = app.add_subcommand("probe", "base-case convergence statistics for several sample counts");
  add_common(probe, common, false);
  std::vector<std::int64_t> sizes{100, 1000, 10000};
  probe->add_option("--sizes", sizes, "sample counts to probe")->delimiter(',')->capture_default_str();
  std::string probe_mode = "lf";
  probe->add_option("--cost-mode", probe_mode, "lf or qf")->capture_default_str();

  auto* assess = app.add_subcommand("assess", "contingency sweep, risk indices and threshold scan");
  add_common(assess, common, true);
  std::vector<std::string> scenario_paths;
  assess->add_option("--scenarios", scenario_paths, "penetration scenario files")->check(CLI::ExistingFile);
  std::int64_t samples = 200;
  assess->add_option("--samples", samples, "Monte Carlo samples per state")->capture_default_str();
  std::vector<std::string> orders{"l1", "bus"};
  assess->add_option("--orders", orders, "contingency classes: l1,l2,l3,bus")->delimiter(',')->capture_default_str();
  assess->add_option("--cost-mode", common.cost_mode, "lf, qf or both")->capture_default_str();
  ProbabilityTable table;
  assess->add_option("--pr-l1", table.pr_l1, "probability of an L-1 outage")->capture_default_str();
  assess->add_option("--pr-l2", table.pr_l2, "probability of an L-2 outage")->capture_default_str();
  assess->add_option("--pr-l3", table.pr_l3, "probability of an L-3 outage")->capture_default_str();
  assess->add_option("--pr-bus", table.pr_bus, "probability of a bus outage")->capture_default_str();
  std::string criterion = "avg_delta_c";
  assess->add_option("--criterion", criterion, "worst-case criterion: avg_delta_c or total_risk")
      ->check(CLI::IsMember({"avg_delta_c", "total_risk"}))
      ->capture_default_str();

  auto* rank = app.add_subcommand("rank", "rank one contingency class of a report by risk");
  std::string report_path, rank_class, rank_scenario, rank_mode;
  rank->add_option("report", report_path, "report.json written by assess")->required();
  rank->add_option("--class", rank_class, "l1, l2, l3 or bus")->required();
  rank->add_option("--scenario", rank_scenario, "only this scenario label");
  rank->add_option("--cost-mode", rank_mode, "only this cost mode (lf or qf)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kDataError;
  }

  auto log = [&](const std::string& msg) {
    if (!common.quiet) std::cerr << msg << std::endl;
  };

  try {
    if (*probe) {
      RunConfig rc = base_config(common, probe->count("--seed") > 0);
      rc.cost_modes = parse_modes(probe_mode);
      if (rc.cost_modes.size() != 1) throw DataError("probe takes a single cost mode");
      rc.probe_sizes = sizes;
      std::vector<std::string> warnings;
      const auto rows = run_probe(rc, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      print_probe_table(std::cout, rows);
      if (!common.out.empty()) write_probe_file(rows, common.out);
    } else if (*assess) {
      RunConfig rc = base_config(common, assess->count("--seed") > 0);
      rc.scenario_paths = scenario_paths;
      rc.n_s = samples;
      rc.orders = parse_orders(orders);
      rc.table = table;
      rc.criterion = criterion == "total_risk" ? WorstCaseCriterion::total_risk : WorstCaseCriterion::avg_delta_c;
      const RiskReport report = run_assessment(rc, log);
      write_report_files(report, rc.out_dir);
      log("wrote " + rc.out_dir.string());
      for (const auto& s : report.scans)
        std::cout << to_string(s.cost_mode) << " worst case: " << s.worst_case() << " (by avg_delta_c "
                  << s.worst_by_avg_delta_c << ", by total_risk " << s.worst_by_total_risk << ")\n";
    } else if (*rank) {
      const auto rows = rank_from_report(report_path, contingency_class_from_string(rank_class), rank_scenario,
                                         rank_mode);
      print_rank_table(std::cout, rows);
    }
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverError;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInvariant;
  }
  return kOk;
}

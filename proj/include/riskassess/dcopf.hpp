#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskassess/grid.hpp"
#include "riskassess/lp.hpp"
#include "riskassess/sampler.hpp"

namespace riskassess {

/// Price of shed load in $/MWh.
inline constexpr double kDefaultShedPenalty = 10000.0;
inline constexpr int kDefaultSegments = 10;

/// The LP failed for a reason other than structural infeasibility.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// LF prices wind with its curve's quadratic term dropped; QF keeps it.
enum class CostMode { lf, qf };

std::string to_string(CostMode m);
CostMode cost_mode_from_string(const std::string& s);

struct OpfOptions {
  CostMode cost_mode = CostMode::lf;
  int k_segments = kDefaultSegments;
  double shed_penalty = kDefaultShedPenalty;
  SimplexOptions simplex;
};

struct BranchRef {
  bool transformer = false;
  std::size_t index = 0;  // into Network::lines or Network::transformers
};

/// LP of one energized island. Generator output is p_min plus the sum of its
/// segment variables; each load has a shed variable in [0, demand]; each
/// branch a flow variable in [-rating, rating].
struct IslandProblem {
  Island island;
  LinearProgram lp;
  double constant_cost = 0.0;  // sum of cost(p_min) over committed units

  struct GeneratorVars {
    std::size_t generator = 0;
    double p_min = 0.0;
    int first = 0;
    int count = 0;
  };
  std::vector<GeneratorVars> generator_vars;
  std::vector<std::pair<std::size_t, int>> shed_vars;  // (load index, column)
  std::vector<std::pair<BranchRef, int>> flow_vars;    // (branch, column)
  double demand = 0.0;
  double p_min_total = 0.0;
};

struct OpfProblem {
  std::vector<IslandProblem> islands;  // energized islands only
  std::vector<double> demand;          // sampled MW per load index
  std::vector<double> forced_shed;     // MW per load index that no generator can reach
  double penalty = kDefaultShedPenalty;
  std::size_t generator_count = 0;
  std::size_t line_count = 0;
  std::size_t transformer_count = 0;
  SimplexOptions simplex;
};

enum class OpfStatus { optimal, infeasible };

struct OpfSolution {
  OpfStatus status = OpfStatus::optimal;
  double cost = 0.0;                       // $/h
  std::vector<double> dispatch;            // MW per generator index
  std::vector<double> line_flows;          // MW per line index, from -> to
  std::vector<double> transformer_flows;   // MW per transformer index
  std::vector<double> shed;                // MW per load index, forced shed included
  double forced_shed_total = 0.0;
  std::vector<std::string> infeasible_islands;  // one message per failed island
  std::int64_t lp_iterations = 0;
};

/// Builds one LP per energized island. Throws DataError if the sample does not
/// cover every load or every in-service wind generator.
OpfProblem build_problem(const NetworkState& state, const Sample& sample, const OpfOptions& options);

/// Solves each island LP. Structurally infeasible islands set status to
/// infeasible; numerical failures throw SolverError.
OpfSolution solve_opf(const OpfProblem& problem);

/// Optimal operating cost of one (state, sample) pair in $/h. Throws
/// SolverError unless every island solves to optimality.
double scenario_cost(const NetworkState& state, const Sample& sample, const OpfOptions& options);

}  // namespace riskassess

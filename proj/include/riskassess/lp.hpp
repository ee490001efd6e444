#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskassess/grid.hpp"

namespace riskassess {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// min c'x  s.t.  A x = b,  lower <= x <= upper. Duplicate triplets are summed.
struct LinearProgram {
  int n = 0;
  int m = 0;
  std::vector<double> objective;
  std::vector<Triplet> entries;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;

  /// Appends a variable and returns its column index.
  int add_variable(double cost, double lo, double hi);
  /// Appends an equality row with the given right-hand side and returns its index.
  int add_row(double rhs_value);
  void add_entry(int row, int col, double value) { entries.push_back({row, col, value}); }

  /// Throws std::invalid_argument on inconsistent dimensions or crossed bounds.
  void check() const;
};

enum class LpStatus { optimal, infeasible, unbounded, numerical_failure, iteration_limit };

std::string to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::numerical_failure;
  std::vector<double> x;
  double objective_value = 0.0;
  std::int64_t iterations = 0;
  /// c_j - y'A_j at the final basis (zero for basic variables).
  std::vector<double> reduced_costs;
  std::vector<bool> basic;
  std::string diagnostics;
};

enum class PricingRule {
  bland,    // smallest eligible index, always
  dantzig,  // most negative reduced cost; drops to Bland during degenerate stalls
};

struct SimplexOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  std::int64_t max_iterations = 100000;
  int refactor_interval = 50;
  PricingRule pricing = PricingRule::dantzig;
  int degenerate_stall_limit = 25;
};

/// Bounded-variable revised simplex (two-phase). Deterministic for identical
/// input. Throws std::invalid_argument if lp.check() fails.
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

/// Convex piecewise-linear approximation of a cost curve on [p_min, p_max].
struct PiecewiseSegments {
  std::vector<double> breakpoints;  // k + 1 increasing values, MW
  std::vector<double> slopes;       // k secant slopes, $/MWh, nondecreasing

  double width(std::size_t j) const { return breakpoints[j + 1] - breakpoints[j]; }
};

/// k equal-width segments whose slopes are the secants of the curve. Throws
/// std::invalid_argument for k == 0, p_min >= p_max, or a < 0.
PiecewiseSegments piecewise_linearize(const CostCurve& curve, double p_min, double p_max, int k);

}  // namespace riskassess

#include "riskassess/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace riskassess {

int LinearProgram::add_variable(double cost, double lo, double hi) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  return n++;
}

int LinearProgram::add_row(double rhs_value) {
  rhs.push_back(rhs_value);
  return m++;
}

void LinearProgram::check() const {
  if (n < 0 || m < 0) throw std::invalid_argument("negative LP dimension");
  const auto un = static_cast<std::size_t>(n);
  if (objective.size() != un || lower.size() != un || upper.size() != un)
    throw std::invalid_argument("LP objective/bound vectors do not match n");
  if (rhs.size() != static_cast<std::size_t>(m)) throw std::invalid_argument("LP rhs does not match m");
  for (const auto& t : entries)
    if (t.row < 0 || t.row >= m || t.col < 0 || t.col >= n)
      throw std::invalid_argument("LP entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                                  ") out of range");
    else if (!std::isfinite(t.value))
      throw std::invalid_argument("LP entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                                  ") is not finite");
  for (double v : rhs)
    if (!std::isfinite(v)) throw std::invalid_argument("LP rhs is not finite");
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(objective[j])) throw std::invalid_argument("LP cost of variable " + std::to_string(j) + " is not finite");
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j]) throw std::invalid_argument("LP bounds crossed for variable " + std::to_string(j));
    if (lower[j] == kInf || upper[j] == -kInf)
      throw std::invalid_argument("LP bound infinite on the wrong side for variable " + std::to_string(j));
  }
}

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::numerical_failure: return "numerical_failure";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "?";
}

namespace {

// Columns 0..n-1 are structural, n..n+m-1 artificial (sign_i * e_i).
class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt), n_(lp.n), m_(lp.m) {
    build_columns();
    total_ = n_ + m_;
    lo_.assign(total_, 0.0);
    hi_.assign(total_, kInf);
    std::copy(lp.lower.begin(), lp.lower.end(), lo_.begin());
    std::copy(lp.upper.begin(), lp.upper.end(), hi_.begin());
    x_.assign(total_, 0.0);
    is_basic_.assign(total_, false);
    basis_.resize(m_);
    sign_.assign(m_, 1.0);
    cost_.assign(total_, 0.0);
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    y_.assign(m_, 0.0);
    alpha_.assign(m_, 0.0);
    b_norm_ = 0.0;
    for (double v : lp.rhs) b_norm_ = std::max(b_norm_, std::abs(v));
  }

  LpSolution run() {
    LpSolution sol;
    initial_basis();

    // Phase 1: minimize the sum of artificials.
    for (int i = 0; i < m_; ++i) cost_[n_ + i] = 1.0;
    LpStatus st = iterate();
    if (st != LpStatus::optimal) return finish(sol, st == LpStatus::unbounded ? LpStatus::numerical_failure : st);
    double infeas = 0.0;
    for (int i = 0; i < m_; ++i) infeas = std::max(infeas, x_[n_ + i]);
    if (infeas > opt_.feasibility_tol * (1.0 + b_norm_)) return finish(sol, LpStatus::infeasible);

    // Phase 2: artificials are fixed at zero and never re-enter.
    for (int i = 0; i < m_; ++i) {
      cost_[n_ + i] = 0.0;
      hi_[n_ + i] = 0.0;
      if (!is_basic_[n_ + i]) x_[n_ + i] = 0.0;
    }
    drive_out_artificials();
    for (int j = 0; j < n_; ++j) cost_[j] = lp_.objective[j];
    st = iterate();
    return finish(sol, st);
  }

 private:
  void build_columns() {
    std::vector<int> count(n_ + 1, 0);
    for (const auto& t : lp_.entries) ++count[t.col + 1];
    for (int j = 0; j < n_; ++j) count[j + 1] += count[j];
    col_start_ = count;
    row_idx_.resize(lp_.entries.size());
    val_.resize(lp_.entries.size());
    std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
    for (const auto& t : lp_.entries) {
      const int p = fill[t.col]++;
      row_idx_[p] = t.row;
      val_[p] = t.value;
    }
    // Merge duplicates within each column (rows sorted for determinism).
    std::vector<int> new_start(n_ + 1, 0);
    std::vector<int> rows;
    std::vector<double> vals;
    for (int j = 0; j < n_; ++j) {
      std::vector<std::pair<int, double>> col;
      for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) col.emplace_back(row_idx_[p], val_[p]);
      std::stable_sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t k = 0; k < col.size(); ++k) {
        if (!rows.empty() && static_cast<int>(rows.size()) > new_start[j] && rows.back() == col[k].first)
          vals.back() += col[k].second;
        else {
          rows.push_back(col[k].first);
          vals.push_back(col[k].second);
        }
      }
      new_start[j + 1] = static_cast<int>(rows.size());
    }
    col_start_ = std::move(new_start);
    row_idx_ = std::move(rows);
    val_ = std::move(vals);
  }

  double& binv(int i, int j) { return binv_[static_cast<std::size_t>(i) * m_ + j]; }

  void initial_basis() {
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j]))
        x_[j] = lo_[j];
      else if (std::isfinite(hi_[j]))
        x_[j] = hi_[j];
      else
        x_[j] = 0.0;
    }
    std::vector<double> r(lp_.rhs);
    for (int j = 0; j < n_; ++j)
      if (x_[j] != 0.0)
        for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) r[row_idx_[p]] -= val_[p] * x_[j];
    std::fill(binv_.begin(), binv_.end(), 0.0);
    for (int i = 0; i < m_; ++i) {
      sign_[i] = r[i] >= 0.0 ? 1.0 : -1.0;
      const int a = n_ + i;
      basis_[i] = a;
      is_basic_[a] = true;
      x_[a] = std::abs(r[i]);
      binv(i, i) = sign_[i];
    }
  }

  // y' = c_B' B^-1
  void compute_duals() {
    std::fill(y_.begin(), y_.end(), 0.0);
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &binv_[static_cast<std::size_t>(i) * m_];
      for (int k = 0; k < m_; ++k) y_[k] += cb * row[k];
    }
  }

  double reduced_cost(int j) const {
    double d = cost_[j];
    if (j < n_) {
      for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) d -= y_[row_idx_[p]] * val_[p];
    } else {
      d -= y_[j - n_] * sign_[j - n_];
    }
    return d;
  }

  // alpha = B^-1 A_j
  void ftran(int j) {
    std::fill(alpha_.begin(), alpha_.end(), 0.0);
    if (j < n_) {
      for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) {
        const int r = row_idx_[p];
        const double v = val_[p];
        for (int i = 0; i < m_; ++i) alpha_[i] += binv(i, r) * v;
      }
    } else {
      const int r = j - n_;
      for (int i = 0; i < m_; ++i) alpha_[i] = binv(i, r) * sign_[r];
    }
  }

  // Returns +1 (increase), -1 (decrease) or 0 (not eligible).
  int eligible_direction(int j, double d) const {
    if (is_basic_[j] || lo_[j] == hi_[j]) return 0;
    const double tol = opt_.optimality_tol;
    if (d < -tol && x_[j] < hi_[j]) return +1;
    if (d > tol && x_[j] > lo_[j]) return -1;
    return 0;
  }

  LpStatus iterate() {
    int since_refactor = 0;
    int degenerate_run = 0;
    compute_duals();
    while (true) {
      if (iterations_ >= opt_.max_iterations) return LpStatus::iteration_limit;

      const bool use_bland = opt_.pricing == PricingRule::bland || degenerate_run >= opt_.degenerate_stall_limit;
      int q = -1;
      int dir = 0;
      double best = 0.0;
      double d_q = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (is_basic_[j] || lo_[j] == hi_[j]) continue;
        const double d = reduced_cost(j);
        const int s = eligible_direction(j, d);
        if (s == 0) continue;
        if (use_bland) {
          q = j;
          dir = s;
          d_q = d;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          q = j;
          dir = s;
          d_q = d;
        }
      }
      if (q < 0) return LpStatus::optimal;

      ftran(q);

      // Ratio test. The entering variable may hit its own opposite bound.
      double t_max = kInf;
      int leave_row = -1;
      bool leave_to_upper = false;
      if (std::isfinite(hi_[q]) && std::isfinite(lo_[q])) t_max = hi_[q] - lo_[q];
      for (int i = 0; i < m_; ++i) {
        const double a = alpha_[i];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const int bv = basis_[i];
        const double delta = -dir * a;  // rate of change of basic variable i
        double limit;
        bool to_upper;
        if (delta < 0.0) {
          if (!std::isfinite(lo_[bv])) continue;
          limit = (x_[bv] - lo_[bv]) / -delta;
          to_upper = false;
        } else {
          if (!std::isfinite(hi_[bv])) continue;
          limit = (hi_[bv] - x_[bv]) / delta;
          to_upper = true;
        }
        limit = std::max(limit, 0.0);
        bool take = false;
        if (limit < t_max - 1e-12 * std::max(1.0, t_max == kInf ? 1.0 : t_max)) {
          take = true;
        } else if (leave_row >= 0 && limit <= t_max + 1e-12 * std::max(1.0, t_max)) {
          // Tie: Bland keeps the smallest variable index, otherwise prefer the larger pivot.
          take = use_bland ? bv < basis_[leave_row] : std::abs(a) > std::abs(alpha_[leave_row]);
        }
        if (take) {
          t_max = limit;
          leave_row = i;
          leave_to_upper = to_upper;
        }
      }
      if (t_max == kInf) return LpStatus::unbounded;

      ++iterations_;
      degenerate_run = t_max <= 0.0 ? degenerate_run + 1 : 0;
      const double step = dir * t_max;
      x_[q] += step;
      for (int i = 0; i < m_; ++i)
        if (alpha_[i] != 0.0) x_[basis_[i]] -= step * alpha_[i];

      if (leave_row < 0) {
        // Bound flip: basis and duals unchanged.
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        continue;
      }

      const int leaving = basis_[leave_row];
      x_[leaving] = leave_to_upper ? hi_[leaving] : lo_[leaving];
      is_basic_[leaving] = false;
      is_basic_[q] = true;
      basis_[leave_row] = q;
      pivot(leave_row);
      // y_new = y + d_q * (row leave_row of the updated inverse).
      const double* row = &binv_[static_cast<std::size_t>(leave_row) * m_];
      for (int k = 0; k < m_; ++k) y_[k] += d_q * row[k];

      if (++since_refactor >= opt_.refactor_interval) {
        if (!refactor()) return LpStatus::numerical_failure;
        compute_duals();
        since_refactor = 0;
      }
    }
  }

  void pivot(int r) {
    const double piv = alpha_[r];
    double* row_r = &binv_[static_cast<std::size_t>(r) * m_];
    for (int k = 0; k < m_; ++k) row_r[k] /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == r || alpha_[i] == 0.0) continue;
      const double f = alpha_[i];
      double* row_i = &binv_[static_cast<std::size_t>(i) * m_];
      for (int k = 0; k < m_; ++k) row_i[k] -= f * row_r[k];
    }
  }

  // Rebuild B^-1 by Gauss-Jordan with partial pivoting and recompute x_B.
  bool refactor() {
    const std::size_t mm = static_cast<std::size_t>(m_);
    std::vector<double> bmat(mm * mm, 0.0);
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      if (j < n_) {
        for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) bmat[row_idx_[p] * mm + i] = val_[p];
      } else {
        bmat[(j - n_) * mm + i] = sign_[j - n_];
      }
    }
    std::vector<double> inv(mm * mm, 0.0);
    for (std::size_t i = 0; i < mm; ++i) inv[i * mm + i] = 1.0;
    for (std::size_t c = 0; c < mm; ++c) {
      std::size_t p = c;
      for (std::size_t r = c + 1; r < mm; ++r)
        if (std::abs(bmat[r * mm + c]) > std::abs(bmat[p * mm + c])) p = r;
      if (std::abs(bmat[p * mm + c]) < 1e-12) {
        diagnostics_ = "singular basis at refactorization (column " + std::to_string(c) + ")";
        return false;
      }
      if (p != c)
        for (std::size_t k = 0; k < mm; ++k) {
          std::swap(bmat[p * mm + k], bmat[c * mm + k]);
          std::swap(inv[p * mm + k], inv[c * mm + k]);
        }
      const double d = bmat[c * mm + c];
      for (std::size_t k = 0; k < mm; ++k) {
        bmat[c * mm + k] /= d;
        inv[c * mm + k] /= d;
      }
      for (std::size_t r = 0; r < mm; ++r) {
        if (r == c) continue;
        const double f = bmat[r * mm + c];
        if (f == 0.0) continue;
        for (std::size_t k = 0; k < mm; ++k) {
          bmat[r * mm + k] -= f * bmat[c * mm + k];
          inv[r * mm + k] -= f * inv[c * mm + k];
        }
      }
    }
    binv_ = std::move(inv);
    recompute_basic_values();
    return true;
  }

  void recompute_basic_values() {
    std::vector<double> r(lp_.rhs);
    for (int j = 0; j < total_; ++j) {
      if (is_basic_[j] || x_[j] == 0.0) continue;
      if (j < n_)
        for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) r[row_idx_[p]] -= val_[p] * x_[j];
      else
        r[j - n_] -= sign_[j - n_] * x_[j];
    }
    for (int i = 0; i < m_; ++i) {
      double v = 0.0;
      for (int k = 0; k < m_; ++k) v += binv(i, k) * r[k];
      x_[basis_[i]] = v;
    }
  }

  // Degenerate pivots replacing zero-valued basic artificials by structurals.
  void drive_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      int best = -1;
      double best_abs = opt_.pivot_tol * 1e3;
      for (int j = 0; j < n_; ++j) {
        if (is_basic_[j]) continue;
        double v = 0.0;
        for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) v += binv(r, row_idx_[p]) * val_[p];
        if (std::abs(v) > best_abs) {
          best_abs = std::abs(v);
          best = j;
        }
      }
      if (best < 0) continue;  // redundant row; the artificial stays basic at zero
      ftran(best);
      const int leaving = basis_[r];
      x_[leaving] = 0.0;
      is_basic_[leaving] = false;
      is_basic_[best] = true;
      basis_[r] = best;
      pivot(r);
    }
    if (m_ > 0) refactor();
  }

  LpSolution& finish(LpSolution& sol, LpStatus st) {
    sol.iterations = iterations_;
    sol.status = st;
    sol.diagnostics = diagnostics_;
    if (st == LpStatus::optimal && m_ > 0) {
      if (!refactor()) {
        sol.status = LpStatus::numerical_failure;
        sol.diagnostics = diagnostics_;
        return sol;
      }
    }
    sol.x.assign(x_.begin(), x_.begin() + n_);
    sol.basic.assign(is_basic_.begin(), is_basic_.begin() + n_);
    if (st != LpStatus::optimal) return sol;

    // Snap values that drifted through a bound within tolerance.
    const double tol = opt_.feasibility_tol * (1.0 + b_norm_);
    for (int j = 0; j < n_; ++j) {
      if (sol.x[j] < lo_[j]) {
        if (sol.x[j] < lo_[j] - tol) return fail(sol, "variable " + std::to_string(j) + " below its lower bound");
        sol.x[j] = lo_[j];
      } else if (sol.x[j] > hi_[j]) {
        if (sol.x[j] > hi_[j] + tol) return fail(sol, "variable " + std::to_string(j) + " above its upper bound");
        sol.x[j] = hi_[j];
      }
    }
    std::vector<double> resid(lp_.rhs);
    for (int j = 0; j < n_; ++j)
      for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) resid[row_idx_[p]] -= val_[p] * sol.x[j];
    for (int i = 0; i < m_; ++i)
      if (std::abs(resid[i]) > tol) {
        std::ostringstream os;
        os << "row " << i << " residual " << resid[i] << " exceeds tolerance";
        return fail(sol, os.str());
      }

    compute_duals();
    sol.reduced_costs.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j)
      if (!is_basic_[j]) sol.reduced_costs[j] = reduced_cost(j);
    sol.objective_value = 0.0;
    for (int j = 0; j < n_; ++j) sol.objective_value += lp_.objective[j] * sol.x[j];
    return sol;
  }

  LpSolution& fail(LpSolution& sol, const std::string& why) {
    sol.status = LpStatus::numerical_failure;
    sol.diagnostics = why;
    return sol;
  }

  const LinearProgram& lp_;
  const SimplexOptions& opt_;
  int n_, m_, total_ = 0;
  std::vector<int> col_start_, row_idx_;
  std::vector<double> val_;
  std::vector<double> lo_, hi_, x_, cost_, sign_, binv_, y_, alpha_;
  std::vector<bool> is_basic_;
  std::vector<int> basis_;
  double b_norm_ = 0.0;
  std::int64_t iterations_ = 0;
  std::string diagnostics_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  lp.check();
  Simplex s(lp, options);
  return s.run();
}

PiecewiseSegments piecewise_linearize(const CostCurve& curve, double p_min, double p_max, int k) {
  if (k < 1) throw std::invalid_argument("piecewise_linearize: segment count must be >= 1");
  if (!(p_min < p_max)) throw std::invalid_argument("piecewise_linearize: p_min must be below p_max");
  if (curve.a < 0.0) throw std::invalid_argument("piecewise_linearize: curve is not convex");
  PiecewiseSegments seg;
  seg.breakpoints.resize(static_cast<std::size_t>(k) + 1);
  const double width = (p_max - p_min) / k;
  for (int j = 0; j <= k; ++j) seg.breakpoints[j] = j == k ? p_max : p_min + width * j;
  seg.slopes.resize(static_cast<std::size_t>(k));
  // Secant of a*P^2 + b*P between p and q is a*(p+q) + b; exact when a == 0.
  for (int j = 0; j < k; ++j) seg.slopes[j] = curve.a * (seg.breakpoints[j] + seg.breakpoints[j + 1]) + curve.b;
  return seg;
}

}  // namespace riskassess

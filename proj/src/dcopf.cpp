#include "riskassess/dcopf.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <sstream>

namespace riskassess {

std::string to_string(CostMode m) { return m == CostMode::lf ? "LF" : "QF"; }

CostMode cost_mode_from_string(const std::string& s) {
  std::string u;
  for (char ch : s) u += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (u == "lf") return CostMode::lf;
  if (u == "qf") return CostMode::qf;
  throw DataError("unknown cost mode '" + s + "'");
}

namespace {

const Branch& branch_of(const Network& net, BranchRef r) {
  return r.transformer ? net.transformers[r.index] : net.lines[r.index];
}

// Adds the KVL rows of one island: a BFS spanning tree from the smallest bus
// and one loop row per non-tree branch, scaled so the largest |x| is 1.
void add_loop_rows(const Network& net, IslandProblem& ip, const std::vector<int>& local_of_bus) {
  const std::size_t nb = ip.island.buses.size();
  struct Edge {
    int flow_var;
    std::size_t a, b;  // local from / to
    double x;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> adj(nb);
  for (const auto& [ref, col] : ip.flow_vars) {
    const Branch& br = branch_of(net, ref);
    Edge e{col, static_cast<std::size_t>(local_of_bus[net.bus_index(br.from_bus)]),
           static_cast<std::size_t>(local_of_bus[net.bus_index(br.to_bus)]), br.reactance};
    adj[e.a].push_back(edges.size());
    adj[e.b].push_back(edges.size());
    edges.push_back(e);
  }
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent_edge(nb, kNone), depth(nb, 0);
  std::vector<bool> seen(nb, false), tree(edges.size(), false);
  std::deque<std::size_t> queue{0};
  seen[0] = true;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t ei : adj[u]) {
      const std::size_t v = edges[ei].a == u ? edges[ei].b : edges[ei].a;
      if (seen[v]) continue;
      seen[v] = true;
      tree[ei] = true;
      parent_edge[v] = ei;
      depth[v] = depth[u] + 1;
      queue.push_back(v);
    }
  }
  auto parent = [&](std::size_t v) {
    const Edge& e = edges[parent_edge[v]];
    return e.a == v ? e.b : e.a;
  };
  // theta_from - theta_to = x * f for every branch; the loop sum vanishes.
  for (std::size_t ei = 0; ei < edges.size(); ++ei) {
    if (tree[ei]) continue;
    std::vector<std::pair<int, double>> terms{{edges[ei].flow_var, edges[ei].x}};
    // Walk from `to` back to `from` through the tree: steps a -> p add
    // (theta_a - theta_p); steps on the `from` side are traversed downwards.
    std::size_t v = edges[ei].b, u = edges[ei].a;
    while (v != u) {
      if (depth[v] >= depth[u]) {
        const Edge& e = edges[parent_edge[v]];
        terms.emplace_back(e.flow_var, e.a == v ? e.x : -e.x);
        v = parent(v);
      } else {
        const Edge& e = edges[parent_edge[u]];
        terms.emplace_back(e.flow_var, e.a == u ? -e.x : e.x);
        u = parent(u);
      }
    }
    double scale = 0.0;
    for (const auto& t : terms) scale = std::max(scale, std::abs(t.second));
    const int row = ip.lp.add_row(0.0);
    for (const auto& [col, coef] : terms) ip.lp.add_entry(row, col, coef / scale);
  }
}

}  // namespace

OpfProblem build_problem(const NetworkState& state, const Sample& sample, const OpfOptions& opt) {
  const Network& net = state.base();
  OpfProblem prob;
  prob.penalty = opt.shed_penalty;
  prob.simplex = opt.simplex;
  prob.generator_count = net.generators.size();
  prob.line_count = net.lines.size();
  prob.transformer_count = net.transformers.size();

  prob.demand.assign(net.loads.size(), -1.0);
  for (const auto& ev : sample.loads) prob.demand[net.load_index(ev.id)] = ev.value;
  for (std::size_t i = 0; i < net.loads.size(); ++i)
    if (prob.demand[i] < 0.0)
      throw DataError("sample " + std::to_string(sample.index) + " has no demand for load " +
                      std::to_string(net.loads[i].id));
  std::vector<double> wind_avail(net.generators.size(), -1.0);
  for (const auto& ev : sample.winds) wind_avail[net.generator_index(ev.id)] = ev.value;

  // Loads at an outaged bus are shed by force; islands without generation too.
  prob.forced_shed.assign(net.loads.size(), 0.0);
  for (std::size_t i = 0; i < net.loads.size(); ++i)
    if (!state.load_in_service(i)) prob.forced_shed[i] = prob.demand[i];

  std::vector<int> local_of_bus(net.buses.size(), -1);
  for (auto& isl : islands(state)) {
    if (!isl.has_generation) {
      for (int id : isl.loads) {
        const std::size_t li = net.load_index(id);
        prob.forced_shed[li] = prob.demand[li];
      }
      continue;
    }
    IslandProblem ip;
    ip.island = std::move(isl);
    const auto& buses = ip.island.buses;
    for (std::size_t k = 0; k < buses.size(); ++k) local_of_bus[net.bus_index(buses[k])] = static_cast<int>(k);
    std::vector<double> bus_rhs(buses.size(), 0.0);
    LinearProgram& lp = ip.lp;
    for (std::size_t k = 0; k < buses.size(); ++k) lp.add_row(0.0);

    for (int gid : ip.island.generators) {
      const std::size_t gi = net.generator_index(gid);
      const Generator& g = net.generators[gi];
      CostCurve curve = g.cost;
      double upper = g.p_max;
      if (g.kind == GeneratorKind::wind) {
        if (wind_avail[gi] < 0.0)
          throw DataError("sample " + std::to_string(sample.index) + " has no availability for wind generator " +
                          std::to_string(gid));
        upper = std::min(upper, wind_avail[gi]);
        if (opt.cost_mode == CostMode::lf) curve.a = 0.0;
      }
      // Availability below p_min leaves the unit pinned at p_min.
      upper = std::max(upper, g.p_min);
      const int row = local_of_bus[net.bus_index(g.bus)];
      IslandProblem::GeneratorVars gv{gi, g.p_min, lp.n, 0};
      ip.constant_cost += curve(g.p_min);
      ip.p_min_total += g.p_min;
      bus_rhs[row] -= g.p_min;
      if (upper > g.p_min) {
        if (curve.a > 0.0) {
          const auto seg = piecewise_linearize(curve, g.p_min, upper, opt.k_segments);
          for (std::size_t j = 0; j < seg.slopes.size(); ++j) {
            const int col = lp.add_variable(seg.slopes[j], 0.0, seg.width(j));
            lp.add_entry(row, col, 1.0);
          }
          gv.count = static_cast<int>(seg.slopes.size());
        } else {
          const int col = lp.add_variable(curve.b, 0.0, upper - g.p_min);
          lp.add_entry(row, col, 1.0);
          gv.count = 1;
        }
      }
      ip.generator_vars.push_back(gv);
    }
    for (int lid : ip.island.loads) {
      const std::size_t li = net.load_index(lid);
      const double d = prob.demand[li];
      const int row = local_of_bus[net.bus_index(net.loads[li].bus)];
      bus_rhs[row] += d;
      ip.demand += d;
      const int col = lp.add_variable(opt.shed_penalty, 0.0, d);
      lp.add_entry(row, col, 1.0);
      ip.shed_vars.emplace_back(li, col);
    }
    auto add_flow = [&](BranchRef ref) {
      const Branch& br = branch_of(net, ref);
      const int col = lp.add_variable(0.0, -br.rating, br.rating);
      lp.add_entry(local_of_bus[net.bus_index(br.from_bus)], col, -1.0);
      lp.add_entry(local_of_bus[net.bus_index(br.to_bus)], col, 1.0);
      ip.flow_vars.emplace_back(ref, col);
    };
    for (int id : ip.island.lines) add_flow({false, net.line_index(id)});
    for (int id : ip.island.transformers) {
      std::size_t ti = 0;
      while (net.transformers[ti].id != id) ++ti;
      add_flow({true, ti});
    }
    lp.rhs.assign(bus_rhs.begin(), bus_rhs.end());
    add_loop_rows(net, ip, local_of_bus);
    for (int b : buses) local_of_bus[net.bus_index(b)] = -1;
    prob.islands.push_back(std::move(ip));
  }
  return prob;
}

OpfSolution solve_opf(const OpfProblem& prob) {
  OpfSolution sol;
  sol.dispatch.assign(prob.generator_count, 0.0);
  sol.line_flows.assign(prob.line_count, 0.0);
  sol.transformer_flows.assign(prob.transformer_count, 0.0);
  sol.shed = prob.forced_shed;
  for (double s : prob.forced_shed) sol.forced_shed_total += s;

  double cost = 0.0;
  for (const auto& ip : prob.islands) {
    const LpSolution lps = solve_lp(ip.lp, prob.simplex);
    sol.lp_iterations += lps.iterations;
    if (lps.status == LpStatus::infeasible) {
      std::ostringstream os;
      os << "island at bus " << ip.island.buses.front() << ": total p_min " << ip.p_min_total
         << " MW exceeds demand " << ip.demand << " MW";
      sol.infeasible_islands.push_back(os.str());
      sol.status = OpfStatus::infeasible;
      continue;
    }
    if (lps.status != LpStatus::optimal) {
      std::ostringstream os;
      os << "LP for island at bus " << ip.island.buses.front() << " ended with status " << to_string(lps.status);
      if (!lps.diagnostics.empty()) os << " (" << lps.diagnostics << ")";
      throw SolverError(os.str());
    }
    cost += ip.constant_cost + lps.objective_value;
    for (const auto& gv : ip.generator_vars) {
      double p = gv.p_min;
      for (int j = 0; j < gv.count; ++j) p += lps.x[gv.first + j];
      sol.dispatch[gv.generator] = p;
    }
    for (const auto& [li, col] : ip.shed_vars) sol.shed[li] = lps.x[col];
    for (const auto& [ref, col] : ip.flow_vars)
      (ref.transformer ? sol.transformer_flows : sol.line_flows)[ref.index] = lps.x[col];
  }
  sol.cost = cost + prob.penalty * sol.forced_shed_total;
  return sol;
}

double scenario_cost(const NetworkState& state, const Sample& sample, const OpfOptions& options) {
  const OpfSolution sol = solve_opf(build_problem(state, sample, options));
  if (sol.status != OpfStatus::optimal) {
    std::string msg = "infeasible OPF for sample " + std::to_string(sample.index);
    for (const auto& s : sol.infeasible_islands) msg += "; " + s;
    throw SolverError(msg);
  }
  return sol.cost;
}

}  // namespace riskassess

#include <cmath>
#include <deque>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "riskassess/dcopf.hpp"
#include "riskassess/risk.hpp"

using namespace riskassess;

namespace {

Contingency bus_out(int id) {
  Contingency c;
  c.cls = ContingencyClass::bus;
  c.bus_id = id;
  c.label = "B" + std::to_string(id);
  return c;
}

Contingency line_out(int id) {
  Contingency c;
  c.line_ids = {id};
  c.label = "L" + std::to_string(id);
  return c;
}

OpfOptions opts(CostMode mode = CostMode::lf, int k = kDefaultSegments) {
  OpfOptions o;
  o.cost_mode = mode;
  o.k_segments = k;
  return o;
}

// Balance per island, branch limits, unit limits and angle consistency.
void check_physics(const NetworkState& st, const Sample& s, const OpfSolution& sol) {
  const Network& net = st.base();
  std::map<int, double> avail;
  for (const auto& w : s.winds) avail[w.id] = w.value;
  for (const auto& isl : islands(st)) {
    double gen = 0.0, load = 0.0, shed = 0.0;
    for (int g : isl.generators) gen += sol.dispatch[net.generator_index(g)];
    for (int d : isl.loads) {
      const std::size_t li = net.load_index(d);
      load += s.loads[li].value;
      shed += sol.shed[li];
    }
    CHECK(gen + shed == doctest::Approx(load).epsilon(1e-9).scale(1.0));
  }
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    if (!st.generator_in_service(g)) continue;
    const auto& u = net.generators[g];
    double hi = u.p_max;
    if (u.kind == GeneratorKind::wind) hi = std::max(u.p_min, std::min(hi, avail[u.id]));
    CHECK(sol.dispatch[g] >= u.p_min - 1e-7);
    CHECK(sol.dispatch[g] <= hi + 1e-7);
  }
  for (std::size_t l = 0; l < net.lines.size(); ++l) CHECK(std::abs(sol.line_flows[l]) <= net.lines[l].rating + 1e-7);

  // Angles from a BFS over in-service branches must explain every flow.
  std::map<int, std::vector<std::tuple<int, double, double>>> adj;  // bus -> (other, x, flow out)
  std::vector<std::pair<const Branch*, double>> branches;
  for (std::size_t l = 0; l < net.lines.size(); ++l)
    if (st.line_in_service(l)) branches.emplace_back(&net.lines[l], sol.line_flows[l]);
  for (std::size_t t = 0; t < net.transformers.size(); ++t)
    if (st.transformer_in_service(t)) branches.emplace_back(&net.transformers[t], sol.transformer_flows[t]);
  for (const auto& [br, f] : branches) {
    adj[br->from_bus].emplace_back(br->to_bus, br->reactance, f);
    adj[br->to_bus].emplace_back(br->from_bus, br->reactance, -f);
  }
  std::map<int, double> theta;
  for (const auto& [start, _] : adj) {
    if (theta.count(start)) continue;
    theta[start] = 0.0;
    std::deque<int> q{start};
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      for (const auto& [v, x, f] : adj[u])
        if (!theta.count(v)) {
          theta[v] = theta[u] - x * f;
          q.push_back(v);
        }
    }
  }
  for (const auto& [br, f] : branches)
    CHECK(theta[br->from_bus] - theta[br->to_bus] == doctest::Approx(br->reactance * f).epsilon(1e-9).scale(1.0));
}

}  // namespace

TEST_SUITE("dcopf") {
  TEST_CASE("two-bus hand values") {
    auto net = fixture::load("two_bus.case");
    const NetworkState st(net);
    SUBCASE("line limit binds") {
      // G1 stops at the 80 MW limit; G2 covers 20. Both land on breakpoints.
      const auto sol = solve_opf(build_problem(st, oracle::nominal_sample(*net), opts(CostMode::qf)));
      CHECK(sol.dispatch[0] == doctest::Approx(80));
      CHECK(sol.dispatch[1] == doctest::Approx(20));
      CHECK(sol.cost == doctest::Approx(1764.0 + 858.0).epsilon(1e-12));
      CHECK(sol.line_flows[0] == doctest::Approx(80));
    }
    SUBCASE("shedding at the penalty") {
      const auto sol = solve_opf(build_problem(st, oracle::nominal_sample(*net, 1.5), opts()));
      CHECK(sol.shed[0] == doctest::Approx(20));
      CHECK(sol.cost == doctest::Approx(1764.0 + 2100.0 + 20 * 10000.0).epsilon(1e-12));
    }
    SUBCASE("loose line") {
      Network n = *net;
      n.lines[0].rating = 150;
      n.validate();
      const NetworkState loose(std::make_shared<const Network>(n));
      const auto sol = solve_opf(build_problem(loose, oracle::nominal_sample(n), opts()));
      CHECK(sol.dispatch[0] == doctest::Approx(100));
      CHECK(sol.cost == doctest::Approx(2200.0 + 50.0).epsilon(1e-12));
    }
    SUBCASE("bus outages") {
      const auto s = oracle::nominal_sample(*net);
      // Bus 1 lost: G2 alone serves 50 of 100 MW.
      CHECK(scenario_cost(apply_contingency(net, bus_out(1)), s, opts()) ==
            doctest::Approx(2100.0 + 50 * 10000.0).epsilon(1e-12));
      // Bus 2 lost: its load is shed by force; G1 idles at its no-load cost.
      const auto st2 = apply_contingency(net, bus_out(2));
      const auto sol = solve_opf(build_problem(st2, s, opts()));
      CHECK(sol.forced_shed_total == 100.0);
      CHECK(sol.cost == doctest::Approx(100 * 10000.0 + 100.0).epsilon(1e-12));
    }
  }

  TEST_CASE("islanded load without generation is shed at the penalty") {
    Network n = *fixture::load("four_bus.case");
    n.generators.pop_back();
    n.validate();
    auto net = std::make_shared<const Network>(n);
    const auto st = apply_contingency(net, line_out(4));
    const auto sol = solve_opf(build_problem(st, oracle::nominal_sample(n), opts()));
    CHECK(sol.forced_shed_total == 70.0);
    CHECK(sol.shed[1] == 70.0);
    CHECK(sol.status == OpfStatus::optimal);
  }

  TEST_CASE("solutions are physically consistent") {
    for (const auto& inst : oracle::opf_corpus()) {
      CAPTURE(inst.name);
      const auto sol = solve_opf(build_problem(inst.state, inst.sample, opts(inst.mode)));
      REQUIRE(sol.status == OpfStatus::optimal);
      check_physics(inst.state, inst.sample, sol);
    }
    auto net = fixture::ieee39();
    const auto s = oracle::nominal_sample(*net);
    const NetworkState st(net);
    const auto sol = solve_opf(build_problem(st, s, opts()));
    REQUIRE(sol.status == OpfStatus::optimal);
    check_physics(st, s, sol);
    double shed = 0.0;
    for (double v : sol.shed) shed += v;
    CHECK(shed == 0.0);
  }

  TEST_CASE("corpus agrees with the dispatch-grid oracle") {
    for (const auto& inst : oracle::opf_corpus()) {
      CAPTURE(inst.name);
      const auto sol = solve_opf(build_problem(inst.state, inst.sample, opts(inst.mode)));
      const auto ref = oracle::opf_grid(inst.state, inst.sample, inst.mode, kDefaultSegments, kDefaultShedPenalty,
                                        inst.grid_step);
      REQUIRE(ref.feasible);
      CHECK(sol.cost <= ref.cost + 1e-6);
      CHECK(std::abs(sol.cost - ref.cost) <= 1e-3 * std::abs(ref.cost));
    }
  }

  TEST_CASE("p_min above demand makes the island infeasible") {
    Network n = *fixture::load("two_bus.case");
    n.generators[0].p_min = 150;
    n.lines[0].rating = 300;
    n.validate();
    auto net = std::make_shared<const Network>(n);
    const NetworkState st(net);
    const auto s = oracle::nominal_sample(n);
    const auto sol = solve_opf(build_problem(st, s, opts()));
    CHECK(sol.status == OpfStatus::infeasible);
    REQUIRE(sol.infeasible_islands.size() == 1);
    CHECK(sol.infeasible_islands[0].find("p_min") != std::string::npos);
    CHECK_THROWS_AS(scenario_cost(st, s, opts()), SolverError);
  }

  TEST_CASE("sample must cover every load and wind unit") {
    auto net = fixture::load("triangle.case");
    const NetworkState st(net);
    Sample s = oracle::nominal_sample(*net);
    SUBCASE("load") { s.loads.clear(); }
    SUBCASE("wind") { s.winds.clear(); }
    CHECK_THROWS_AS(build_problem(st, s, opts()), DataError);
  }

  TEST_CASE("cost never falls as demand rises") {
    for (const char* name : {"two_bus.case", "triangle.case", "four_bus.case"}) {
      auto net = fixture::load(name);
      const NetworkState st(net);
      for (CostMode mode : {CostMode::lf, CostMode::qf}) {
        double prev = -1.0;
        for (int step = 0; step <= 20; ++step) {
          const double c = scenario_cost(st, oracle::nominal_sample(*net, 0.2 + 0.07 * step), opts(mode));
          CHECK(c >= prev - 1e-9);
          prev = c;
        }
      }
    }
  }

  TEST_CASE("quadratic wind pricing never lowers a state's cost") {
    auto net = fixture::load("triangle.case");
    const ContingencyClass orders[] = {ContingencyClass::l1, ContingencyClass::bus};
    for (const auto& c : enumerate_contingencies(*net, orders, ProbabilityTable{}))
      for (double w : {0.0, 20.0, 45.0, 60.0}) {
        const auto st = apply_contingency(net, c);
        const auto s = oracle::nominal_sample(*net, 1.0, {{3, w}});
        CHECK(scenario_cost(st, s, opts(CostMode::qf)) >= scenario_cost(st, s, opts(CostMode::lf)) - 1e-9);
      }
  }

  TEST_CASE("losing a wind unit can make the quadratic deviation smaller") {
    // Bus 2 carries the wind unit. With 45 MW available it runs flat out in
    // both modes, so the intact QF cost carries an extra a * 45^2 that the
    // post-outage state does not.
    auto net = fixture::load("triangle.case");
    const auto s = oracle::nominal_sample(*net, 1.0, {{3, 45.0}});
    const NetworkState intact(net);
    const auto lost = apply_contingency(net, bus_out(2));
    const double dc_lf = scenario_cost(lost, s, opts(CostMode::lf)) - scenario_cost(intact, s, opts(CostMode::lf));
    const double dc_qf = scenario_cost(lost, s, opts(CostMode::qf)) - scenario_cost(intact, s, opts(CostMode::qf));
    CHECK(dc_qf - dc_lf == doctest::Approx(-0.005 * 45 * 45).epsilon(1e-9));
  }

  TEST_CASE("refining the segments never raises the cost") {
    auto net = fixture::load("triangle.case");
    const NetworkState st(net);
    for (double scale : {0.5, 1.0, 1.3}) {
      const auto s = oracle::nominal_sample(*net, scale);
      const double k5 = scenario_cost(st, s, opts(CostMode::qf, 5));
      const double k10 = scenario_cost(st, s, opts(CostMode::qf, 10));
      const double k20 = scenario_cost(st, s, opts(CostMode::qf, 20));
      CHECK(k10 <= k5 + 1e-9);
      CHECK(k20 <= k10 + 1e-9);
    }
  }

  TEST_CASE("cost modes parse") {
    CHECK(cost_mode_from_string("lf") == CostMode::lf);
    CHECK(cost_mode_from_string("QF") == CostMode::qf);
    CHECK_THROWS_AS(cost_mode_from_string("cubic"), DataError);
  }
}

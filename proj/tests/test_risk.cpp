#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "fixtures.hpp"
#include "riskassess/risk.hpp"

using namespace riskassess;

namespace {

constexpr ContingencyClass kL1Bus[] = {ContingencyClass::l1, ContingencyClass::bus};

AssessmentConfig nominal_config(std::int64_t n_s = 1) {
  AssessmentConfig cfg;
  cfg.seed = 20240917;
  cfg.n_s = n_s;
  cfg.sigma_ratio = 0.0;
  return cfg;
}

const ContingencyResult& find(const RiskTable& t, const std::string& label) {
  for (const auto& r : t.results)
    if (r.contingency.label == label) return r;
  throw std::runtime_error("no contingency " + label);
}

ContingencyResult row(ContingencyClass cls, const std::string& label, double mean) {
  ContingencyResult r;
  r.contingency.cls = cls;
  r.contingency.label = label;
  r.mean_cost = mean;
  return r;
}

ScenarioAssessment fake_level(const std::string& label, double pen, double l1_total, double avg) {
  ScenarioAssessment a;
  a.label = label;
  a.penetration = pen;
  ClassSummary s;
  s.total_risk = l1_total;
  s.avg_delta_c = avg;
  a.risk.summaries = {s};
  return a;
}

}  // namespace

TEST_SUITE("risk") {
  TEST_CASE("enumeration counts on the 39-bus system") {
    auto net = fixture::ieee39();
    const ProbabilityTable t;
    const ContingencyClass all[] = {ContingencyClass::l1, ContingencyClass::l2, ContingencyClass::l3,
                                    ContingencyClass::bus};
    const auto cs = enumerate_contingencies(*net, all, t);
    std::size_t n[4] = {};
    std::set<std::string> labels;
    for (const auto& c : cs) {
      ++n[static_cast<int>(c.cls)];
      labels.insert(c.label);
      CHECK(c.probability == t.for_class(c.cls));
    }
    CHECK(n[0] == 34);
    CHECK(n[1] == 561);
    CHECK(n[2] == 5984);
    CHECK(n[3] == 39);
    CHECK(labels.size() == cs.size());
    CHECK(cs.front().label == net->line_label(net->lines.front().id));
    CHECK(cs.back().label == "B39");
  }

  TEST_CASE("multi-line labels and order") {
    auto net = fixture::load("triangle.case");
    const ContingencyClass l2[] = {ContingencyClass::l2};
    const auto cs = enumerate_contingencies(*net, l2, ProbabilityTable{});
    REQUIRE(cs.size() == 3);
    CHECK(cs[0].label == "L1-2+L2-3");
    CHECK(cs[1].label == "L1-2+L1-3");
    CHECK(cs[2].label == "L2-3+L1-3");
  }

  TEST_CASE("probability table validation") {
    ProbabilityTable t;
    CHECK_NOTHROW(t.check());
    t.pr_l2 = 0.0;
    CHECK_THROWS_AS(t.check(), DataError);
    t.pr_l2 = 1.0;
    CHECK_THROWS_AS(t.check(), DataError);
    t.pr_l2 = std::nan("");
    CHECK_THROWS_AS(t.check(), DataError);
  }

  TEST_CASE("risk identities") {
    const ProbabilityTable t;
    std::vector<ContingencyResult> in = {row(ContingencyClass::l1, "L1-2", 150.0),
                                         row(ContingencyClass::l1, "L2-3", 90.0),
                                         row(ContingencyClass::bus, "B1", 1100.0)};
    const auto rt = compute_risk(in, 100.0, t, kL1Bus);
    CHECK(find(rt, "L1-2").delta_c == 50.0);
    CHECK(find(rt, "L2-3").delta_c == -10.0);
    CHECK(find(rt, "L2-3").negative());
    CHECK(find(rt, "L1-2").risk == 1e-2 * 50.0);
    CHECK(find(rt, "B1").risk == 1e-7 * 1000.0);
    REQUIRE(rt.summaries.size() == 2);
    const auto& l1 = rt.summaries[0];
    CHECK(l1.cls == ContingencyClass::l1);
    CHECK(l1.count == 2);
    CHECK(l1.total_risk == 1e-2 * 40.0);
    CHECK(l1.avg_delta_c == 20.0);
    CHECK(l1.most_critical == "L1-2");
    CHECK(l1.least_critical == "L2-3");
    CHECK(l1.negative_count == 1);
    const ContingencyClass l2[] = {ContingencyClass::l2};
    CHECK_THROWS_AS(compute_risk(in, 100.0, t, l2), DataError);
  }

  TEST_CASE("class totals match the per-row sums") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-500.0, 5000.0);
    const ProbabilityTable t;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<ContingencyResult> in;
      for (int i = 0; i < 1 + trial % 40; ++i) in.push_back(row(ContingencyClass::l1, "L" + std::to_string(i), u(rng)));
      const double c_o = u(rng);
      const ContingencyClass l1[] = {ContingencyClass::l1};
      const auto rt = compute_risk(in, c_o, t, l1);
      double risk_sum = 0.0, dc_sum = 0.0;
      for (const auto& r : rt.results) {
        risk_sum += r.risk;
        dc_sum += r.delta_c;
      }
      const auto& s = rt.summaries[0];
      CHECK(s.total_risk == doctest::Approx(risk_sum).epsilon(1e-12).scale(1e-9));
      CHECK(s.avg_delta_c * double(s.count) == doctest::Approx(dc_sum).epsilon(1e-12).scale(1e-9));
      for (const auto& r : rt.results) {
        CHECK(find(rt, s.most_critical).risk >= r.risk);
        CHECK(find(rt, s.least_critical).risk <= r.risk);
      }
    }
  }

  TEST_CASE("equal risks go to the smallest label") {
    std::vector<ContingencyResult> in = {row(ContingencyClass::bus, "B3", 10.0), row(ContingencyClass::bus, "B10", 10.0),
                                         row(ContingencyClass::bus, "B2", 10.0)};
    const ContingencyClass bus[] = {ContingencyClass::bus};
    const auto rt = compute_risk(in, 0.0, ProbabilityTable{}, bus);
    CHECK(rt.summaries[0].most_critical == "B10");
    CHECK(rt.summaries[0].least_critical == "B10");
  }

  TEST_CASE("radial 3-bus assessment by hand") {
    auto net = fixture::load("radial3.case");
    const auto spec = StochasticSpec::from_network(*net, 0.0);
    const auto a = assess_scenario(net, spec, "0%", 0.0, CostMode::lf, nominal_config(3));
    CHECK(a.base.c_o == 2112.0);
    CHECK(a.base.c_sigma == 0.0);
    CHECK(find(a.risk, "L1-2").delta_c == 500900.0);
    CHECK(find(a.risk, "L2-3").delta_c == 400.0);
    CHECK(find(a.risk, "B1").delta_c == 500895.0);
    CHECK(find(a.risk, "B2").delta_c == 999400.0);
    CHECK(find(a.risk, "B3").delta_c == 498893.0);
    CHECK(find(a.risk, "B2").risk == 1e-7 * 999400.0);
    const auto& l1 = a.risk.summaries[0];
    CHECK(l1.total_risk == 1e-2 * 501300.0);
    CHECK(l1.avg_delta_c == 250650.0);
    CHECK(l1.most_critical == "L1-2");
    const auto& bus = a.risk.summaries[1];
    CHECK(bus.total_risk == 1e-7 * 1999188.0);
    CHECK(bus.avg_delta_c == 666396.0);
    CHECK(bus.most_critical == "B2");
    CHECK(bus.least_critical == "B3");
  }

  TEST_CASE("removing a line that carries no flow costs nothing") {
    Network n = *fixture::load("radial3.case");
    n.buses.push_back({4, "Spur"});
    n.lines.push_back({3, 3, 4, 0.1, 50.0});
    n.validate();
    auto net = std::make_shared<const Network>(n);
    auto cfg = nominal_config(20);
    cfg.sigma_ratio = 0.1;
    const auto spec = StochasticSpec::from_network(n, 0.1);
    for (CostMode mode : {CostMode::lf, CostMode::qf}) {
      const auto a = assess_scenario(net, spec, "0%", 0.0, mode, cfg);
      CHECK(find(a.risk, "L3-4").delta_c == 0.0);
      CHECK(find(a.risk, "B4").delta_c == 0.0);
      CHECK(find(a.risk, "B4").risk == 0.0);
    }
  }

  TEST_CASE("costs within rounding of the intact cost snap to it") {
    const double intact[] = {250000.0, 250000.0, 0.0, 1000.0};
    double costs[] = {std::nextafter(250000.0, 1e9), 250000.01, 1e-12, 999.9999999995};
    snap_unchanged(costs, intact);
    CHECK(costs[0] == 250000.0);
    CHECK(costs[1] == 250000.01);
    CHECK(costs[2] == 0.0);
    CHECK(costs[3] == 1000.0);
    const double shorter[] = {1.0};
    CHECK_THROWS_AS(snap_unchanged(costs, shorter), DataError);
  }

  TEST_CASE("mean cost matches the sample series") {
    auto net = fixture::load("triangle.case");
    const auto spec = StochasticSpec::from_network(*net);
    const auto samples = draw_samples(spec, 4, 25);
    OpfOptions opt;
    for (const auto& c : enumerate_contingencies(*net, kL1Bus, ProbabilityTable{})) {
      const auto costs = contingency_costs(net, c, samples, opt);
      REQUIRE(costs.size() == 25);
      CHECK(contingency_mean_cost(net, c, samples, opt) == mc_stats(costs).c_o);
    }
  }

  TEST_CASE("results do not depend on the worker count") {
    auto net = fixture::load("four_bus.case");
    const auto spec = StochasticSpec::from_network(*net);
    auto cfg = nominal_config(40);
    cfg.sigma_ratio = 0.1;
    cfg.orders = {ContingencyClass::l1, ContingencyClass::l2, ContingencyClass::bus};
    const CostMode modes[] = {CostMode::lf, CostMode::qf};
    cfg.workers = 1;
    const auto ref = assess_scenario(net, spec, "0%", 0.0, modes, cfg);
    for (unsigned w : {2u, 3u, 8u}) {
      cfg.workers = w;
      const auto got = assess_scenario(net, spec, "0%", 0.0, modes, cfg);
      REQUIRE(got.size() == ref.size());
      for (std::size_t m = 0; m < ref.size(); ++m) {
        CHECK(got[m].base.c_o == ref[m].base.c_o);
        CHECK(got[m].base.c_sigma == ref[m].base.c_sigma);
        REQUIRE(got[m].risk.results.size() == ref[m].risk.results.size());
        for (std::size_t i = 0; i < ref[m].risk.results.size(); ++i) {
          CHECK(got[m].risk.results[i].contingency.label == ref[m].risk.results[i].contingency.label);
          CHECK(got[m].risk.results[i].mean_cost == ref[m].risk.results[i].mean_cost);
        }
        for (std::size_t s = 0; s < ref[m].risk.summaries.size(); ++s)
          CHECK(got[m].risk.summaries[s].total_risk == ref[m].risk.summaries[s].total_risk);
      }
    }
  }

  TEST_CASE("a shared sample stream serves both cost modes") {
    auto net = fixture::load("triangle.case");
    const auto spec = StochasticSpec::from_network(*net);
    auto cfg = nominal_config(15);
    cfg.sigma_ratio = 0.1;
    const CostMode both[] = {CostMode::lf, CostMode::qf};
    const auto pair = assess_scenario(net, spec, "x", 0.0, both, cfg);
    const auto lf = assess_scenario(net, spec, "x", 0.0, CostMode::lf, cfg);
    const auto qf = assess_scenario(net, spec, "x", 0.0, CostMode::qf, cfg);
    CHECK(pair[0].base.c_o == lf.base.c_o);
    CHECK(pair[1].base.c_o == qf.base.c_o);
    CHECK(pair[1].cost_mode == CostMode::qf);
  }

  TEST_CASE("scaling every cost curve scales delta C and risk") {
    Network n = *fixture::load("radial3.case");
    auto base = std::make_shared<const Network>(n);
    for (auto& g : n.generators) {
      g.cost.b *= 3.0;
      g.cost.c *= 3.0;
    }
    n.validate();
    auto scaled = std::make_shared<const Network>(n);
    auto cfg = nominal_config(1);
    cfg.opf.shed_penalty = 3.0 * kDefaultShedPenalty;
    const auto spec = StochasticSpec::from_network(n, 0.0);
    const auto a = assess_scenario(base, spec, "a", 0.0, CostMode::lf, nominal_config(1));
    const auto b = assess_scenario(scaled, spec, "b", 0.0, CostMode::lf, cfg);
    for (std::size_t i = 0; i < a.risk.results.size(); ++i)
      CHECK(b.risk.results[i].risk == doctest::Approx(3.0 * a.risk.results[i].risk).epsilon(1e-12));
  }

  TEST_CASE("parallel_for runs each index once and rethrows the lowest failure") {
    std::vector<std::atomic<int>> hits(500);
    parallel_for(hits.size(), 6, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);
    try {
      parallel_for(100, 4, [](std::size_t i) {
        if (i == 17 || i == 60) throw DataError("item " + std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()) == "item 17");
    }
  }

  TEST_CASE("threshold scan picks the worst level and breaks ties low") {
    std::vector<ScenarioAssessment> levels = {fake_level("0%", 0.0, 10.0, 100.0), fake_level("26%", 0.26, 30.0, 300.0),
                                              fake_level("52%", 0.52, 30.0, 250.0),
                                              fake_level("82%", 0.82, 20.0, 300.0)};
    const auto scan = build_threshold_scan(levels, WorstCaseCriterion::total_risk);
    CHECK(scan.worst_by_total_risk == "26%");
    CHECK(scan.worst_by_avg_delta_c == "26%");
    CHECK_FALSE(scan.criteria_disagree());
    CHECK(scan.worst_case() == "26%");

    levels[2] = fake_level("52%", 0.52, 31.0, 250.0);
    const auto split = build_threshold_scan(levels, WorstCaseCriterion::avg_delta_c);
    CHECK(split.worst_by_total_risk == "52%");
    CHECK(split.worst_by_avg_delta_c == "26%");
    CHECK(split.criteria_disagree());
    CHECK(split.worst_case() == "26%");

    levels[1].cost_mode = CostMode::qf;
    CHECK_THROWS_AS(build_threshold_scan(levels, WorstCaseCriterion::avg_delta_c), DataError);
  }

  TEST_CASE("threshold scan needs a base scenario") {
    auto net = fixture::load("radial3.case");
    const auto wind = load_scenario(fixture::path("radial3_wind.scn"));
    const CostMode lf[] = {CostMode::lf};
    const PenetrationScenario only_wind[] = {wind};
    CHECK_THROWS_AS(threshold_scan(*net, only_wind, lf, nominal_config(2)), DataError);

    const PenetrationScenario both[] = {{"0%", {}}, wind};
    const auto res = threshold_scan(*net, both, lf, nominal_config(2));
    REQUIRE(res.assessments.size() == 2);
    REQUIRE(res.scans.size() == 1);
    CHECK(res.scans[0].rows[1].label == "67%");
    CHECK(res.scans[0].rows[1].penetration == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("bad run settings are rejected") {
    auto net = fixture::load("radial3.case");
    const auto spec = StochasticSpec::from_network(*net, 0.0);
    auto cfg = nominal_config(0);
    CHECK_THROWS_AS(assess_scenario(net, spec, "0%", 0.0, CostMode::lf, cfg), DataError);
    cfg.n_s = 2;
    cfg.table.pr_bus = 2.0;
    CHECK_THROWS_AS(assess_scenario(net, spec, "0%", 0.0, CostMode::lf, cfg), DataError);
  }
}

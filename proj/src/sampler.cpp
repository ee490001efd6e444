#include "riskassess/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace riskassess {

namespace {

constexpr std::uint64_t kLoadStream = 1;
constexpr std::uint64_t kWindStream = 2;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Open interval (0, 1).
double to_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

double clamped_draw(const NormalParams& p, std::uint64_t seed, std::uint64_t kind, std::int64_t i) {
  if (p.sigma == 0.0) return std::max(p.mu, 0.0);
  const double z = keyed_standard_normal(seed, kind, p.id, i);
  return std::clamp(p.mu + p.sigma * z, 0.0, p.mu + 3.0 * p.sigma);
}

}  // namespace

double keyed_standard_normal(std::uint64_t seed, std::uint64_t kind, std::int64_t element_id, std::int64_t i) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ kind);
  key = splitmix64(key ^ static_cast<std::uint64_t>(element_id));
  key = splitmix64(key ^ static_cast<std::uint64_t>(i));
  const double u1 = to_unit(splitmix64(key));
  const double u2 = to_unit(splitmix64(key + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

StochasticSpec StochasticSpec::from_network(const Network& net, double sigma_ratio) {
  StochasticSpec s;
  for (const auto& d : net.loads) s.loads.push_back({d.id, d.p_nominal, sigma_ratio * d.p_nominal});
  for (const auto& g : net.generators) {
    if (g.kind != GeneratorKind::wind) continue;
    const double mu = g.p_max / (1.0 + 3.0 * sigma_ratio);
    s.winds.push_back({g.id, mu, sigma_ratio * mu});
  }
  return s;
}

bool Sample::operator==(const Sample& o) const {
  auto same = [](const std::vector<ElementValue>& a, const std::vector<ElementValue>& b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                      [](const ElementValue& x, const ElementValue& y) { return x.id == y.id && x.value == y.value; });
  };
  return index == o.index && same(loads, o.loads) && same(winds, o.winds);
}

Sample draw_sample(const StochasticSpec& spec, std::uint64_t seed, std::int64_t i) {
  Sample s;
  s.index = i;
  s.loads.reserve(spec.loads.size());
  s.winds.reserve(spec.winds.size());
  for (const auto& p : spec.loads) s.loads.push_back({p.id, clamped_draw(p, seed, kLoadStream, i)});
  for (const auto& p : spec.winds) s.winds.push_back({p.id, clamped_draw(p, seed, kWindStream, i)});
  return s;
}

std::vector<Sample> draw_samples(const StochasticSpec& spec, std::uint64_t seed, std::int64_t n_s) {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(n_s, 0)));
  for (std::int64_t i = 1; i <= n_s; ++i) out.push_back(draw_sample(spec, seed, i));
  return out;
}

McStats mc_stats(std::span<const double> costs) {
  if (costs.empty()) throw DataError("mc_stats: empty cost series");
  std::vector<double> sorted(costs.begin(), costs.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double sum = 0.0;
  for (double c : sorted) sum += c;
  McStats st;
  st.n_s = static_cast<std::int64_t>(sorted.size());
  st.c_o = sum / n;
  if (sorted.size() > 1) {
    double ss = 0.0;
    for (double c : sorted) ss += (c - st.c_o) * (c - st.c_o);
    st.c_sigma = std::sqrt(ss / (n - 1.0));
  }
  st.c_cov = st.c_o != 0.0 ? st.c_sigma / st.c_o : 0.0;
  st.c_err = st.c_sigma / std::sqrt(n);
  return st;
}

std::string PenetrationCase::computed_label() const {
  return std::to_string(static_cast<long>(std::lround(penetration * 100.0))) + "%";
}

PenetrationCase build_penetration_case(const Network& base, const PenetrationScenario& scenario,
                                       double sigma_ratio) {
  PenetrationCase out{base, {}, 0.0};
  double thermal_total = 0.0;
  for (const auto& g : base.generators)
    if (g.kind == GeneratorKind::thermal) thermal_total += g.p_max;

  std::set<int> seen;
  double replaced = 0.0;
  for (const auto& conv : scenario.conversions) {
    if (!seen.insert(conv.generator_id).second)
      throw DataError("scenario '" + scenario.label + "' converts generator " +
                      std::to_string(conv.generator_id) + " twice");
    Generator& g = out.network.generators[base.generator_index(conv.generator_id)];
    if (g.kind != GeneratorKind::thermal)
      throw DataError("scenario '" + scenario.label + "' converts non-thermal generator " +
                      std::to_string(conv.generator_id));
    if (conv.cost.a < 0.0 || conv.cost.b < 0.0)
      throw DataError("scenario '" + scenario.label + "' has a decreasing wind cost for generator " +
                      std::to_string(conv.generator_id));
    const double mu = g.p_max;
    replaced += mu;
    g.kind = GeneratorKind::wind;
    g.p_min = 0.0;
    g.p_max = mu + 3.0 * sigma_ratio * mu;
    g.cost = conv.cost;
  }
  out.network.validate();
  out.spec = StochasticSpec::from_network(out.network, sigma_ratio);
  // Converted units keep mu equal to the replaced capacity exactly, not p_max / 1.3.
  for (auto& w : out.spec.winds) {
    for (const auto& conv : scenario.conversions)
      if (conv.generator_id == w.id) {
        w.mu = base.generators[base.generator_index(w.id)].p_max;
        w.sigma = sigma_ratio * w.mu;
      }
  }
  out.penetration = thermal_total > 0.0 ? replaced / thermal_total : 0.0;
  return out;
}

}  // namespace riskassess

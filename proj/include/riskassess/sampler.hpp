#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "riskassess/grid.hpp"

namespace riskassess {

/// Identifier of the keyed normal generator; written into every report.
inline constexpr std::string_view kRngIdentifier = "splitmix64-keyed/box-muller/v1";

/// Default ratio of standard deviation to mean for loads and wind.
inline constexpr double kDefaultSigmaRatio = 0.10;

struct NormalParams {
  int id = 0;  // load id or wind generator id
  double mu = 0.0;
  double sigma = 0.0;
};

struct StochasticSpec {
  std::vector<NormalParams> loads;
  std::vector<NormalParams> winds;

  /// Loads at their nominal demand with sigma = ratio * mu; winds from the
  /// network's wind generators with mu = p_max / (1 + 3 * ratio).
  static StochasticSpec from_network(const Network& net, double sigma_ratio = kDefaultSigmaRatio);
};

struct ElementValue {
  int id = 0;
  double value = 0.0;
};

/// One Monte Carlo realization. Element order follows the StochasticSpec.
struct Sample {
  std::int64_t index = 0;
  std::vector<ElementValue> loads;
  std::vector<ElementValue> winds;

  bool operator==(const Sample& o) const;
};

/// Draws sample i (i >= 1). Each value depends only on (seed, element kind,
/// element id, i), is Normal(mu, sigma) and clamped to [0, mu + 3 sigma].
Sample draw_sample(const StochasticSpec& spec, std::uint64_t seed, std::int64_t i);

/// Samples 1..n_s.
std::vector<Sample> draw_samples(const StochasticSpec& spec, std::uint64_t seed, std::int64_t n_s);

/// Standard normal variate for a key; exposed for statistical tests.
double keyed_standard_normal(std::uint64_t seed, std::uint64_t kind, std::int64_t element_id, std::int64_t i);

struct McStats {
  std::int64_t n_s = 0;
  double c_o = 0.0;
  double c_sigma = 0.0;
  double c_cov = 0.0;
  double c_err = 0.0;
};

/// Mean, n-1 standard deviation, coefficient of variation and standard error.
/// Sums run over the sorted series so the result does not depend on order.
McStats mc_stats(std::span<const double> costs);

struct WindConversion {
  int generator_id = 0;
  CostCurve cost;  // quadratic (QF) wind curve; LF uses a = 0
};

struct PenetrationScenario {
  std::string label;
  std::vector<WindConversion> conversions;
};

struct PenetrationCase {
  Network network;
  StochasticSpec spec;
  double penetration = 0.0;  // fraction of original thermal capacity replaced
  std::string computed_label() const;
};

/// Replaces the listed thermal units by wind units of equal mean output.
PenetrationCase build_penetration_case(const Network& base, const PenetrationScenario& scenario,
                                       double sigma_ratio = kDefaultSigmaRatio);

}  // namespace riskassess

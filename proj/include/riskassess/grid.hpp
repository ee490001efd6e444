#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace riskassess {

/// Bad input data: case/scenario files, configuration, mismatched samples.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadratic operating cost a*P^2 + b*P + c in $/h with P in MW.
struct CostCurve {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double operator()(double p) const { return (a * p + b) * p + c; }
  bool operator==(const CostCurve&) const = default;
};

enum class GeneratorKind { thermal, wind };

struct Bus {
  int id = 0;
  std::string name;
  bool operator==(const Bus&) const = default;
};

// Series branch. Lines and transformers share the representation; only lines
// are candidates for L-k outage enumeration.
struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;  // per unit on base_mva
  double rating = 0.0;     // MW
  bool in_service = true;
  bool operator==(const Branch&) const = default;
};
using Line = Branch;

struct Generator {
  int id = 0;
  int bus = 0;
  GeneratorKind kind = GeneratorKind::thermal;
  double p_min = 0.0;
  double p_max = 0.0;
  CostCurve cost;
  bool in_service = true;
  bool operator==(const Generator&) const = default;
};

struct Load {
  int id = 0;
  int bus = 0;
  double p_nominal = 0.0;
  bool operator==(const Load&) const = default;
};

/// Static grid model. Immutable after validate(); share it by const reference
/// or shared_ptr across threads.
class Network {
 public:
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Branch> transformers;
  std::vector<Generator> generators;
  std::vector<Load> loads;

  /// Checks every invariant and builds the id lookup tables. Throws DataError
  /// naming the offending element.
  void validate();

  std::size_t bus_index(int id) const;
  std::size_t line_index(int id) const;
  std::size_t generator_index(int id) const;
  std::size_t load_index(int id) const;
  bool has_bus(int id) const { return bus_lookup_.contains(id); }
  bool has_line(int id) const { return line_lookup_.contains(id); }

  /// "L<from>-<to>", with "#<id>" appended when another line joins the same buses.
  std::string line_label(int line_id) const;

  bool operator==(const Network& o) const {
    return base_mva == o.base_mva && buses == o.buses && lines == o.lines &&
           transformers == o.transformers && generators == o.generators &&
           loads == o.loads;
  }

 private:
  std::unordered_map<int, std::size_t> bus_lookup_;
  std::unordered_map<int, std::size_t> line_lookup_;
  std::unordered_map<int, std::size_t> generator_lookup_;
  std::unordered_map<int, std::size_t> load_lookup_;
};

enum class ContingencyClass { l1, l2, l3, bus };

std::string to_string(ContingencyClass c);
ContingencyClass contingency_class_from_string(const std::string& s);

struct Contingency {
  ContingencyClass cls = ContingencyClass::l1;
  std::vector<int> line_ids;  // 1-3 ids for line classes
  std::optional<int> bus_id;  // set for the bus class
  double probability = 0.0;
  std::string label;
};

/// Post-contingency view over a base network. Never copies or mutates the base.
class NetworkState {
 public:
  explicit NetworkState(std::shared_ptr<const Network> base);

  const Network& base() const { return *base_; }
  const std::shared_ptr<const Network>& base_ptr() const { return base_; }
  const std::vector<int>& removed_lines() const { return removed_lines_; }
  std::optional<int> removed_bus() const { return removed_bus_; }

  bool bus_in_service(std::size_t bus_idx) const { return bus_on_[bus_idx]; }
  bool line_in_service(std::size_t line_idx) const { return line_on_[line_idx]; }
  bool transformer_in_service(std::size_t idx) const { return xfmr_on_[idx]; }
  bool generator_in_service(std::size_t idx) const { return gen_on_[idx]; }
  bool load_in_service(std::size_t idx) const { return load_on_[idx]; }

 private:
  friend NetworkState apply_contingency(std::shared_ptr<const Network>, const Contingency&);

  std::shared_ptr<const Network> base_;
  std::vector<int> removed_lines_;
  std::optional<int> removed_bus_;
  std::vector<bool> bus_on_, line_on_, xfmr_on_, gen_on_, load_on_;
};

NetworkState apply_contingency(std::shared_ptr<const Network> network, const Contingency& c);

/// Connected component of the in-service network. Element lists hold ids in
/// ascending order.
struct Island {
  std::vector<int> buses;
  std::vector<int> lines;
  std::vector<int> transformers;
  std::vector<int> generators;
  std::vector<int> loads;
  bool has_generation = false;
};

/// Islands ordered by their smallest bus id.
std::vector<Island> islands(const NetworkState& state);

}  // namespace riskassess

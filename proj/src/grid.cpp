#include "riskassess/grid.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>

namespace riskassess {

namespace {

template <typename T>
std::unordered_map<int, std::size_t> build_lookup(const std::vector<T>& items, const char* what) {
  std::unordered_map<int, std::size_t> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!out.emplace(items[i].id, i).second)
      throw DataError(std::string("duplicate ") + what + " id " + std::to_string(items[i].id));
  }
  return out;
}

std::size_t find_or_throw(const std::unordered_map<int, std::size_t>& m, int id, const char* what) {
  auto it = m.find(id);
  if (it == m.end()) throw DataError(std::string("unknown ") + what + " id " + std::to_string(id));
  return it->second;
}

void check_branch(const Network& n, const Branch& br, const char* what) {
  const std::string tag = std::string(what) + " " + std::to_string(br.id);
  if (!n.has_bus(br.from_bus))
    throw DataError(tag + " references unknown bus " + std::to_string(br.from_bus));
  if (!n.has_bus(br.to_bus))
    throw DataError(tag + " references unknown bus " + std::to_string(br.to_bus));
  if (br.from_bus == br.to_bus) throw DataError(tag + " connects bus " + std::to_string(br.from_bus) + " to itself");
  if (!(br.reactance > 0.0)) throw DataError(tag + " has nonpositive reactance");
  if (!(br.rating > 0.0)) throw DataError(tag + " has nonpositive rating");
}

}  // namespace

void Network::validate() {
  if (!(base_mva > 0.0)) throw DataError("base_mva must be positive");
  for (const auto& b : buses)
    if (b.id < 1) throw DataError("bus id " + std::to_string(b.id) + " must be >= 1");
  bus_lookup_ = build_lookup(buses, "bus");
  line_lookup_ = build_lookup(lines, "line");
  {
    // Line and transformer ids share one namespace so flows stay unambiguous.
    std::set<int> ids;
    for (const auto& l : lines) ids.insert(l.id);
    for (const auto& t : transformers)
      if (!ids.insert(t.id).second)
        throw DataError("duplicate branch id " + std::to_string(t.id));
  }
  generator_lookup_ = build_lookup(generators, "generator");
  load_lookup_ = build_lookup(loads, "load");

  for (const auto& l : lines) check_branch(*this, l, "line");
  for (const auto& t : transformers) check_branch(*this, t, "transformer");
  if (generators.empty()) throw DataError("case has no generators");
  for (const auto& g : generators) {
    const std::string tag = "generator " + std::to_string(g.id);
    if (!has_bus(g.bus)) throw DataError(tag + " references unknown bus " + std::to_string(g.bus));
    if (!(g.p_min >= 0.0 && g.p_min <= g.p_max)) throw DataError(tag + " violates 0 <= pmin <= pmax");
    if (g.cost.a < 0.0) throw DataError(tag + " has negative quadratic cost coefficient");
    // Nondecreasing on [pmin, pmax] means the derivative at pmin is >= 0.
    if (2.0 * g.cost.a * g.p_min + g.cost.b < 0.0) throw DataError(tag + " cost decreases on [pmin, pmax]");
  }
  for (const auto& d : loads) {
    const std::string tag = "load " + std::to_string(d.id);
    if (!has_bus(d.bus)) throw DataError(tag + " references unknown bus " + std::to_string(d.bus));
    if (!(d.p_nominal >= 0.0)) throw DataError(tag + " has negative demand");
  }
}

std::size_t Network::bus_index(int id) const { return find_or_throw(bus_lookup_, id, "bus"); }
std::size_t Network::line_index(int id) const { return find_or_throw(line_lookup_, id, "line"); }
std::size_t Network::generator_index(int id) const { return find_or_throw(generator_lookup_, id, "generator"); }
std::size_t Network::load_index(int id) const { return find_or_throw(load_lookup_, id, "load"); }

std::string Network::line_label(int line_id) const {
  const Line& l = lines[line_index(line_id)];
  const int lo = std::min(l.from_bus, l.to_bus);
  const int hi = std::max(l.from_bus, l.to_bus);
  std::string label = "L" + std::to_string(lo) + "-" + std::to_string(hi);
  for (const auto& other : lines) {
    if (other.id == l.id) continue;
    if (std::min(other.from_bus, other.to_bus) == lo && std::max(other.from_bus, other.to_bus) == hi) {
      label += "#" + std::to_string(l.id);
      break;
    }
  }
  return label;
}

std::string to_string(ContingencyClass c) {
  switch (c) {
    case ContingencyClass::l1: return "L1";
    case ContingencyClass::l2: return "L2";
    case ContingencyClass::l3: return "L3";
    case ContingencyClass::bus: return "BUS";
  }
  return "?";
}

ContingencyClass contingency_class_from_string(const std::string& s) {
  std::string u;
  for (char ch : s) u += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (u == "L1") return ContingencyClass::l1;
  if (u == "L2") return ContingencyClass::l2;
  if (u == "L3") return ContingencyClass::l3;
  if (u == "BUS" || u == "B") return ContingencyClass::bus;
  throw DataError("unknown contingency class '" + s + "'");
}

NetworkState::NetworkState(std::shared_ptr<const Network> base)
    : base_(std::move(base)),
      bus_on_(base_->buses.size(), true),
      line_on_(base_->lines.size()),
      xfmr_on_(base_->transformers.size()),
      gen_on_(base_->generators.size()),
      load_on_(base_->loads.size(), true) {
  for (std::size_t i = 0; i < base_->lines.size(); ++i) line_on_[i] = base_->lines[i].in_service;
  for (std::size_t i = 0; i < base_->transformers.size(); ++i) xfmr_on_[i] = base_->transformers[i].in_service;
  for (std::size_t i = 0; i < base_->generators.size(); ++i) gen_on_[i] = base_->generators[i].in_service;
}

NetworkState apply_contingency(std::shared_ptr<const Network> network, const Contingency& c) {
  NetworkState st(std::move(network));
  const Network& net = st.base();
  if (c.cls == ContingencyClass::bus) {
    if (!c.bus_id) throw DataError("bus contingency '" + c.label + "' has no bus id");
    const int b = *c.bus_id;
    st.bus_on_[net.bus_index(b)] = false;
    st.removed_bus_ = b;
    for (std::size_t i = 0; i < net.lines.size(); ++i) {
      const auto& l = net.lines[i];
      if (l.from_bus == b || l.to_bus == b) {
        if (st.line_on_[i]) st.removed_lines_.push_back(l.id);
        st.line_on_[i] = false;
      }
    }
    for (std::size_t i = 0; i < net.transformers.size(); ++i) {
      const auto& t = net.transformers[i];
      if (t.from_bus == b || t.to_bus == b) st.xfmr_on_[i] = false;
    }
    for (std::size_t i = 0; i < net.generators.size(); ++i)
      if (net.generators[i].bus == b) st.gen_on_[i] = false;
    for (std::size_t i = 0; i < net.loads.size(); ++i)
      if (net.loads[i].bus == b) st.load_on_[i] = false;
  } else {
    if (c.line_ids.empty() || c.line_ids.size() > 3)
      throw DataError("line contingency '" + c.label + "' must list 1-3 lines");
    for (int id : c.line_ids) {
      const std::size_t idx = net.line_index(id);
      if (st.line_on_[idx]) st.removed_lines_.push_back(id);
      st.line_on_[idx] = false;
    }
  }
  std::sort(st.removed_lines_.begin(), st.removed_lines_.end());
  return st;
}

std::vector<Island> islands(const NetworkState& state) {
  const Network& net = state.base();
  const std::size_t nb = net.buses.size();
  std::vector<std::size_t> parent(nb);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](const Branch& br) {
    const std::size_t a = find(net.bus_index(br.from_bus));
    const std::size_t b = find(net.bus_index(br.to_bus));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  for (std::size_t i = 0; i < net.lines.size(); ++i)
    if (state.line_in_service(i)) unite(net.lines[i]);
  for (std::size_t i = 0; i < net.transformers.size(); ++i)
    if (state.transformer_in_service(i)) unite(net.transformers[i]);

  // Key each component by its smallest bus id for deterministic ordering.
  std::map<std::size_t, int> root_min_id;
  for (std::size_t i = 0; i < nb; ++i) {
    if (!state.bus_in_service(i)) continue;
    auto [it, inserted] = root_min_id.emplace(find(i), net.buses[i].id);
    if (!inserted) it->second = std::min(it->second, net.buses[i].id);
  }
  std::map<int, Island> by_min;
  std::map<std::size_t, Island*> by_root;
  for (const auto& [root, min_id] : root_min_id) by_root[root] = &by_min[min_id];

  for (std::size_t i = 0; i < nb; ++i)
    if (state.bus_in_service(i)) by_root.at(find(i))->buses.push_back(net.buses[i].id);
  for (std::size_t i = 0; i < net.lines.size(); ++i)
    if (state.line_in_service(i))
      by_root.at(find(net.bus_index(net.lines[i].from_bus)))->lines.push_back(net.lines[i].id);
  for (std::size_t i = 0; i < net.transformers.size(); ++i)
    if (state.transformer_in_service(i))
      by_root.at(find(net.bus_index(net.transformers[i].from_bus)))->transformers.push_back(net.transformers[i].id);
  for (std::size_t i = 0; i < net.generators.size(); ++i)
    if (state.generator_in_service(i)) {
      Island* isl = by_root.at(find(net.bus_index(net.generators[i].bus)));
      isl->generators.push_back(net.generators[i].id);
      isl->has_generation = true;
    }
  for (std::size_t i = 0; i < net.loads.size(); ++i)
    if (state.load_in_service(i))
      by_root.at(find(net.bus_index(net.loads[i].bus)))->loads.push_back(net.loads[i].id);

  std::vector<Island> out;
  out.reserve(by_min.size());
  for (auto& [_, isl] : by_min) {
    for (auto* v : {&isl.buses, &isl.lines, &isl.transformers, &isl.generators, &isl.loads})
      std::sort(v->begin(), v->end());
    out.push_back(std::move(isl));
  }
  return out;
}

}  // namespace riskassess

#include "riskassess/case_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace riskassess {

namespace {

struct Row {
  int line = 0;
  std::vector<std::string> tokens;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Row> rows;
};

std::vector<std::string> tokenize(std::string_view s, int line_no) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char ch = s[i];
    if (ch == '#') break;
    if (ch == ' ' || ch == '\t' || ch == '\r') {
      ++i;
      continue;
    }
    if (ch == '"') {
      const std::size_t end = s.find('"', i + 1);
      if (end == std::string_view::npos) throw ParseError(line_no, "unterminated quoted text");
      out.emplace_back(s.substr(i + 1, end - i - 1));
      i = end + 1;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r' && s[j] != '#') ++j;
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<Section> split_sections(std::string_view text) {
  std::vector<Section> sections;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    auto tokens = tokenize(raw, line_no);
    if (tokens.empty()) continue;
    if (tokens.front().starts_with('[')) {
      if (tokens.size() != 1 || !tokens.front().ends_with(']') || tokens.front().size() < 3)
        throw ParseError(line_no, "malformed section header");
      const std::string name = tokens.front().substr(1, tokens.front().size() - 2);
      for (const auto& s : sections)
        if (s.name == name) throw ParseError(line_no, "duplicate section [" + name + "]");
      sections.push_back({name, line_no, {}});
      continue;
    }
    if (sections.empty()) throw ParseError(line_no, "content before the first section header");
    sections.back().rows.push_back({line_no, std::move(tokens)});
  }
  if (sections.empty()) throw ParseError(0, "empty document");
  return sections;
}

double parse_number(const std::string& tok, int line, const std::string& field) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last)
    throw ParseError(line, "field '" + field + "': '" + tok + "' is not a number");
  return v;
}

int parse_int(const std::string& tok, int line, const std::string& field) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    throw ParseError(line, "field '" + field + "': '" + tok + "' is not an integer");
  return v;
}

// Key/value section: every row is `key = value`.
std::map<std::string, std::pair<std::string, int>> key_values(const Section& s,
                                                             const std::vector<std::string>& allowed) {
  std::map<std::string, std::pair<std::string, int>> out;
  for (const auto& r : s.rows) {
    if (r.tokens.size() != 3 || r.tokens[1] != "=")
      throw ParseError(r.line, "expected 'key = value' in [" + s.name + "]");
    if (std::find(allowed.begin(), allowed.end(), r.tokens[0]) == allowed.end())
      throw ParseError(r.line, "unknown field '" + r.tokens[0] + "' in [" + s.name + "]");
    if (!out.emplace(r.tokens[0], std::pair{r.tokens[2], r.line}).second)
      throw ParseError(r.line, "duplicate field '" + r.tokens[0] + "'");
  }
  for (const auto& k : allowed)
    if (!out.contains(k)) throw ParseError(s.line, "[" + s.name + "] is missing field '" + k + "'");
  return out;
}

// Tabular section: header row then records. Calls emit(record) with a
// field-name accessor.
class Table {
 public:
  Table(const Section& s, const std::vector<std::string>& fields) : section_(s) {
    if (s.rows.empty()) throw ParseError(s.line, "[" + s.name + "] has no header row");
    const Row& header = s.rows.front();
    for (const auto& name : header.tokens) {
      if (std::find(fields.begin(), fields.end(), name) == fields.end())
        throw ParseError(header.line, "unknown field '" + name + "' in [" + s.name + "]");
      if (column_.contains(name)) throw ParseError(header.line, "duplicate field '" + name + "'");
      column_[name] = column_.size();
    }
    for (const auto& f : fields)
      if (!column_.contains(f)) throw ParseError(header.line, "[" + s.name + "] header is missing field '" + f + "'");
    for (std::size_t i = 1; i < s.rows.size(); ++i)
      if (s.rows[i].tokens.size() != fields.size())
        throw ParseError(s.rows[i].line, "expected " + std::to_string(fields.size()) + " fields, found " +
                                             std::to_string(s.rows[i].tokens.size()));
  }

  std::size_t size() const { return section_.rows.size() - 1; }
  int line(std::size_t r) const { return section_.rows[r + 1].line; }
  const std::string& text(std::size_t r, const std::string& f) const {
    return section_.rows[r + 1].tokens[column_.at(f)];
  }
  double number(std::size_t r, const std::string& f) const { return parse_number(text(r, f), line(r), f); }
  int integer(std::size_t r, const std::string& f) const { return parse_int(text(r, f), line(r), f); }

 private:
  const Section& section_;
  std::map<std::string, std::size_t> column_;
};

const Section* find_section(const std::vector<Section>& secs, const std::string& name) {
  for (const auto& s : secs)
    if (s.name == name) return &s;
  return nullptr;
}

void reject_unknown_sections(const std::vector<Section>& secs, const std::vector<std::string>& known) {
  for (const auto& s : secs)
    if (std::find(known.begin(), known.end(), s.name) == known.end())
      throw ParseError(s.line, "unknown section [" + s.name + "]");
}

const std::vector<std::string> kBranchFields = {"id", "from", "to", "reactance_pu", "rating_mw"};

std::vector<Branch> read_branches(const Section* s) {
  std::vector<Branch> out;
  if (!s) return out;
  Table t(*s, kBranchFields);
  for (std::size_t r = 0; r < t.size(); ++r)
    out.push_back({t.integer(r, "id"), t.integer(r, "from"), t.integer(r, "to"), t.number(r, "reactance_pu"),
                   t.number(r, "rating_mw"), true});
  return out;
}

std::string quote_if_needed(const std::string& s) {
  const bool plain = !s.empty() && s.find_first_of(" \t#\"") == std::string::npos && !s.starts_with('[');
  return plain ? s : "\"" + s + "\"";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Network parse_case(std::string_view text) {
  const auto secs = split_sections(text);
  reject_unknown_sections(secs, {"system", "bus", "line", "transformer", "generator", "load"});
  for (const char* required : {"system", "bus", "generator"})
    if (!find_section(secs, required)) throw ParseError(0, std::string("missing section [") + required + "]");

  Network net;
  {
    const auto kv = key_values(*find_section(secs, "system"), {"base_mva"});
    const auto& [val, line] = kv.at("base_mva");
    net.base_mva = parse_number(val, line, "base_mva");
  }
  {
    Table t(*find_section(secs, "bus"), {"id", "name"});
    for (std::size_t r = 0; r < t.size(); ++r) net.buses.push_back({t.integer(r, "id"), t.text(r, "name")});
  }
  net.lines = read_branches(find_section(secs, "line"));
  net.transformers = read_branches(find_section(secs, "transformer"));
  {
    Table t(*find_section(secs, "generator"),
            {"id", "bus", "kind", "pmin_mw", "pmax_mw", "cost_a", "cost_b", "cost_c"});
    for (std::size_t r = 0; r < t.size(); ++r) {
      Generator g;
      g.id = t.integer(r, "id");
      g.bus = t.integer(r, "bus");
      const auto& kind = t.text(r, "kind");
      if (kind == "thermal")
        g.kind = GeneratorKind::thermal;
      else if (kind == "wind")
        g.kind = GeneratorKind::wind;
      else
        throw ParseError(t.line(r), "field 'kind': expected thermal or wind, found '" + kind + "'");
      g.p_min = t.number(r, "pmin_mw");
      g.p_max = t.number(r, "pmax_mw");
      g.cost = {t.number(r, "cost_a"), t.number(r, "cost_b"), t.number(r, "cost_c")};
      net.generators.push_back(g);
    }
  }
  if (const Section* s = find_section(secs, "load")) {
    Table t(*s, {"id", "bus", "p_mw"});
    for (std::size_t r = 0; r < t.size(); ++r)
      net.loads.push_back({t.integer(r, "id"), t.integer(r, "bus"), t.number(r, "p_mw")});
  }
  net.validate();
  return net;
}

Network load_case(const std::string& path) {
  try {
    return parse_case(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

std::string serialize_case(const Network& n) {
  std::ostringstream o;
  o << "[system]\nbase_mva = " << format_double(n.base_mva) << "\n\n[bus]\nid name\n";
  for (const auto& b : n.buses) o << b.id << ' ' << quote_if_needed(b.name) << '\n';
  auto branches = [&](const char* name, const std::vector<Branch>& v) {
    if (v.empty()) return;
    o << "\n[" << name << "]\nid from to reactance_pu rating_mw\n";
    for (const auto& br : v)
      o << br.id << ' ' << br.from_bus << ' ' << br.to_bus << ' ' << format_double(br.reactance) << ' '
        << format_double(br.rating) << '\n';
  };
  branches("line", n.lines);
  branches("transformer", n.transformers);
  o << "\n[generator]\nid bus kind pmin_mw pmax_mw cost_a cost_b cost_c\n";
  for (const auto& g : n.generators)
    o << g.id << ' ' << g.bus << ' ' << (g.kind == GeneratorKind::wind ? "wind" : "thermal") << ' '
      << format_double(g.p_min) << ' ' << format_double(g.p_max) << ' ' << format_double(g.cost.a) << ' '
      << format_double(g.cost.b) << ' ' << format_double(g.cost.c) << '\n';
  if (!n.loads.empty()) {
    o << "\n[load]\nid bus p_mw\n";
    for (const auto& d : n.loads) o << d.id << ' ' << d.bus << ' ' << format_double(d.p_nominal) << '\n';
  }
  return o.str();
}

PenetrationScenario parse_scenario(std::string_view text) {
  const auto secs = split_sections(text);
  reject_unknown_sections(secs, {"scenario", "conversion"});
  const Section* head = find_section(secs, "scenario");
  if (!head) throw ParseError(0, "missing section [scenario]");
  PenetrationScenario sc;
  sc.label = key_values(*head, {"label"}).at("label").first;
  if (const Section* s = find_section(secs, "conversion")) {
    Table t(*s, {"generator", "cost_a", "cost_b", "cost_c"});
    for (std::size_t r = 0; r < t.size(); ++r)
      sc.conversions.push_back(
          {t.integer(r, "generator"), {t.number(r, "cost_a"), t.number(r, "cost_b"), t.number(r, "cost_c")}});
  }
  return sc;
}

PenetrationScenario load_scenario(const std::string& path) {
  try {
    return parse_scenario(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

std::string serialize_scenario(const PenetrationScenario& sc) {
  std::ostringstream o;
  o << "[scenario]\nlabel = " << quote_if_needed(sc.label) << "\n\n[conversion]\ngenerator cost_a cost_b cost_c\n";
  for (const auto& c : sc.conversions)
    o << c.generator_id << ' ' << format_double(c.cost.a) << ' ' << format_double(c.cost.b) << ' '
      << format_double(c.cost.c) << '\n';
  return o.str();
}

}  // namespace riskassess

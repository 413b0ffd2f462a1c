#include "qvf/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

namespace qvf {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: identical bytes on every platform
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

double parse_double(std::string_view field, std::size_t line_no) {
  double v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw CsvParseError(line_no, "bad numeric field '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) throw CsvParseError(line_no, "non-finite field");
  return v;
}

Index parse_node(const std::string& tok, Index p, const std::string& path, std::size_t line_no) {
  Index v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": bad node '" + tok + "'");
  }
  if (v < 0 || v >= p) {
    throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": node " + tok +
                                " out of range for p=" + std::to_string(p));
  }
  return v;
}

}  // namespace

std::string format_value(double v) {
  if (std::isfinite(v) && std::floor(v) == v && std::abs(v) < 9.007199254740992e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    return buf;
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_value failed");
  return std::string(buf, ptr);
}

void write_count_csv(const std::string& path, const CountMatrix& data) {
  std::ofstream out = open_out(path);
  for (Index j = 0; j < data.cols(); ++j) out << (j ? ",x" : "x") << j;
  out << "\n";
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      if (j) out << ',';
      out << format_value(data(i, j));
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

CountMatrix read_count_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw CsvParseError(1, "missing header");
  strip_cr(line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header.push_back(tok);
  }
  const Index p = static_cast<Index>(header.size());
  if (p == 0) throw CsvParseError(1, "empty header");
  for (Index j = 0; j < p; ++j) {
    if (header[static_cast<std::size_t>(j)] != "x" + std::to_string(j)) {
      throw CsvParseError(1, "header column " + std::to_string(j) + " must be x" +
                                 std::to_string(j) + ", got '" +
                                 header[static_cast<std::size_t>(j)] + "'");
    }
  }
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;  // trailing newline
    std::size_t start = 0;
    Index fields = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      std::string_view field(line.data() + start,
                             (comma == std::string::npos ? line.size() : comma) - start);
      values.push_back(parse_double(field, line_no));
      ++fields;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields != p) {
      throw CsvParseError(line_no, "expected " + std::to_string(p) + " fields, got " +
                                       std::to_string(fields));
    }
    ++rows;
  }
  CountMatrix data(rows, p);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < p; ++j) {
      data(i, j) = values[static_cast<std::size_t>(i * p + j)];
    }
  }
  return data;
}

void write_directed_edges(const std::string& path,
                          const std::set<std::pair<Index, Index>>& edges) {
  std::ofstream out = open_out(path);
  for (const auto& [a, b] : edges) out << a << ' ' << b << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::set<std::pair<Index, Index>> read_directed_edges(const std::string& path, Index p) {
  std::ifstream in = open_in(path);
  std::set<std::pair<Index, Index>> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string ta, tb, extra;
    if (!(ss >> ta >> tb) || (ss >> extra)) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected 'a b' per line");
    }
    Index a = parse_node(ta, p, path, line_no);
    Index b = parse_node(tb, p, path, line_no);
    if (a == b) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": self-loop");
    }
    edges.insert({a, b});
  }
  return edges;
}

void write_undirected_edges(const std::string& path, const UndirectedGraph& g) {
  std::ofstream out = open_out(path);
  for (const auto& [a, b] : g.edge_set()) out << a << " -- " << b << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

UndirectedGraph read_undirected_edges(const std::string& path, Index p) {
  std::ifstream in = open_in(path);
  UndirectedGraph g(p);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string ta, sep, tb, extra;
    if (!(ss >> ta >> sep >> tb) || sep != "--" || (ss >> extra)) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected 'a -- b' per line");
    }
    g.add_edge(parse_node(ta, p, path, line_no), parse_node(tb, p, path, line_no));
  }
  return g;
}

void write_ordering(const std::string& path, const Ordering& ordering) {
  std::ofstream out = open_out(path);
  for (std::size_t t = 0; t < ordering.nodes.size(); ++t) {
    if (t) out << ' ';
    out << ordering.nodes[t];
  }
  out << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

Ordering read_ordering(const std::string& path, Index p) {
  std::ifstream in = open_in(path);
  Ordering ord;
  std::string tok;
  while (in >> tok) ord.nodes.push_back(parse_node(tok, p, path, 1));
  if (ord.nodes.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument(path + ": expected " + std::to_string(p) + " nodes");
  }
  std::vector<bool> seen(static_cast<std::size_t>(p), false);
  for (Index v : ord.nodes) {
    if (seen[static_cast<std::size_t>(v)]) {
      throw std::invalid_argument(path + ": node " + std::to_string(v) + " repeats");
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
  return ord;
}

namespace {

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument(path + ": " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path, const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) config_fail(path, std::string("unknown key '") + key + "' in " + where);
  }
}

FamilySpec parse_family(const json& j, const std::string& path) {
  if (!j.is_object()) config_fail(path, "family must be an object");
  check_keys(j, {"name", "N", "R", "alpha", "lambda2"}, path, "family");
  FamilySpec spec;
  if (!j.contains("name")) config_fail(path, "family.name is required");
  spec.name = j.at("name").get<std::string>();
  if (j.contains("N")) spec.trials = j.at("N").get<int>();
  if (j.contains("R")) spec.successes = j.at("R").get<int>();
  if (j.contains("alpha")) spec.alpha = j.at("alpha").get<double>();
  if (j.contains("lambda2")) spec.lambda2 = j.at("lambda2").get<double>();
  spec.make();  // validate now so errors name the config file
  return spec;
}

GlmOptions parse_glm(const json& j, const std::string& path) {
  check_keys(j,
             {"max_iter", "tol", "kkt_tol", "support_tol", "max_sweeps", "max_halvings",
              "weight_floor", "standardize", "num_threads"},
             path, "glm");
  GlmOptions g;
  if (j.contains("max_iter")) g.max_iter = j.at("max_iter").get<int>();
  if (j.contains("tol")) g.tol = j.at("tol").get<double>();
  if (j.contains("kkt_tol")) g.kkt_tol = j.at("kkt_tol").get<double>();
  if (j.contains("support_tol")) g.support_tol = j.at("support_tol").get<double>();
  if (j.contains("max_sweeps")) g.max_sweeps = j.at("max_sweeps").get<int>();
  if (j.contains("max_halvings")) g.max_halvings = j.at("max_halvings").get<int>();
  if (j.contains("weight_floor")) g.weight_floor = j.at("weight_floor").get<double>();
  if (j.contains("standardize")) g.standardize = j.at("standardize").get<bool>();
  if (j.contains("num_threads")) g.num_threads = j.at("num_threads").get<int>();
  return g;
}

OdsConfig parse_config(const json& j, const std::string& path) {
  if (!j.is_object()) config_fail(path, "config must be an object");
  check_keys(j,
             {"p", "n", "num_parents", "family", "theta_range", "intercept", "lambda",
              "lambda_d", "c0", "rule", "fallback", "trials", "seed", "oracle_moral_graph",
              "literal_last_node", "stable_timings", "glm"},
             path, "config");
  OdsConfig cfg;
  if (j.contains("p")) cfg.p = j.at("p").get<Index>();
  if (j.contains("n")) cfg.n = j.at("n").get<Index>();
  if (j.contains("num_parents")) cfg.num_parents = j.at("num_parents").get<Index>();
  if (j.contains("family")) cfg.family = parse_family(j.at("family"), path);
  if (j.contains("theta_range")) {
    const json& r = j.at("theta_range");
    if (!r.is_array() || r.size() != 2) config_fail(path, "theta_range must be [lo, hi]");
    cfg.theta_lo = r[0].get<double>();
    cfg.theta_hi = r[1].get<double>();
  }
  if (j.contains("intercept")) cfg.intercept = j.at("intercept").get<double>();
  if (j.contains("lambda") && !j.at("lambda").is_null()) {
    cfg.lambda = j.at("lambda").get<double>();
  }
  if (j.contains("lambda_d") && !j.at("lambda_d").is_null()) {
    cfg.lambda_d = j.at("lambda_d").get<double>();
  }
  if (j.contains("c0")) cfg.c0 = j.at("c0").get<double>();
  if (j.contains("rule")) {
    std::string rule = j.at("rule").get<std::string>();
    if (rule == "or") {
      cfg.rule = SymmetrizationRule::any_direction;
    } else if (rule == "and") {
      cfg.rule = SymmetrizationRule::both_directions;
    } else {
      config_fail(path, "rule must be 'or' or 'and'");
    }
  }
  if (j.contains("fallback")) {
    std::string fb = j.at("fallback").get<std::string>();
    if (fb == "widen") {
      cfg.fallback = EmptyCandidatePolicy::widen_to_all_unordered;
    } else if (fb == "fail") {
      cfg.fallback = EmptyCandidatePolicy::fail;
    } else {
      config_fail(path, "fallback must be 'widen' or 'fail'");
    }
  }
  if (j.contains("trials")) cfg.trials = j.at("trials").get<Index>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("oracle_moral_graph")) {
    cfg.oracle_moral_graph = j.at("oracle_moral_graph").get<bool>();
  }
  if (j.contains("literal_last_node")) {
    cfg.literal_last_node = j.at("literal_last_node").get<bool>();
  }
  if (j.contains("stable_timings")) cfg.stable_timings = j.at("stable_timings").get<bool>();
  if (j.contains("glm")) cfg.glm = parse_glm(j.at("glm"), path);
  return cfg;
}

json load_json(const std::string& path) {
  std::ifstream in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace

OdsConfig load_ods_config(const std::string& path, bool* seed_present) {
  json j = load_json(path);
  if (seed_present) *seed_present = j.is_object() && j.contains("seed");
  return parse_config(j, path);
}

std::vector<OdsConfig> load_benchmark_grid(const std::string& path) {
  json j = load_json(path);
  std::vector<OdsConfig> grid;
  if (j.is_object() && j.contains("grid")) {
    check_keys(j, {"grid"}, path, "grid file");
    for (const json& e : j.at("grid")) grid.push_back(parse_config(e, path));
  } else {
    grid.push_back(parse_config(j, path));
  }
  if (grid.empty()) config_fail(path, "empty grid");
  return grid;
}

void write_benchmark_csv(const std::string& path, const std::vector<TrialRecord>& rows) {
  std::ofstream out = open_out(path);
  out << "family,p,n,num_parents,trial,ordering_consistent,skeleton_hamming_norm,"
         "directed_hamming_norm,step1_ms,step2_ms,step3_ms,degenerate_cells\n";
  for (const TrialRecord& r : rows) {
    out << r.family << ',' << r.p << ',' << r.n << ',' << r.num_parents << ',' << r.trial << ',';
    if (r.failed) {
      out << ",,,,,,\n";  // identity columns only
      continue;
    }
    out << (r.ordering_consistent ? 1 : 0) << ',' << format_value(r.skeleton_hamming_norm) << ','
        << format_value(r.directed_hamming_norm) << ',';
    if (r.stable_timings) {
      out << "0,0,0,";
    } else {
      out << format_value(r.step1_ms) << ',' << format_value(r.step2_ms) << ','
          << format_value(r.step3_ms) << ',';
    }
    out << r.degenerate_cells << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace qvf

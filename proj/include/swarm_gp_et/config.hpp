#pragma once

// Scenario files.
//
//   # comment
//   key = value
//   [section]          # later keys are read as section.key
//   key = [1, 2, 3]    # arrays nest and may span lines
//   key = "text"       # strings may also be bare words
//
// Overrides ("section.key=value") replace file entries before validation.
// Unknown keys, missing required keys and bad values raise ConfigError naming
// the key.

#include "swarm_gp_et/error.hpp"
#include "swarm_gp_et/scenario.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace swarm_gp_et::config {

struct Value {
  bool is_list = false;
  bool quoted = false;
  std::string text;
  std::vector<Value> items;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Drops a trailing comment that is not inside quotes.
inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline int bracket_balance(const std::string& s) {
  int depth = 0;
  bool in_str = false;
  for (char c : s) {
    if (c == '"') in_str = !in_str;
    if (in_str) continue;
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, std::string key) : text_(text), key_(std::move(key)) {}

  Value parse() {
    Value v = value();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(key_, what + " in '" + std::string(text_) + "'");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Value value() {
    skip_ws();
    if (pos_ >= text_.size()) fail("missing value");
    if (text_[pos_] == '[') return list();
    if (text_[pos_] == '"') {
      const std::size_t end = text_.find('"', pos_ + 1);
      if (end == std::string_view::npos) fail("unterminated string");
      Value v;
      v.quoted = true;
      v.text = std::string(text_.substr(pos_ + 1, end - pos_ - 1));
      pos_ = end + 1;
      return v;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']') ++pos_;
    Value v;
    v.text = trim(text_.substr(start, pos_ - start));
    if (v.text.empty()) fail("empty element");
    return v;
  }

  Value list() {
    Value v;
    v.is_list = true;
    ++pos_;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return v;
    }
    for (;;) {
      v.items.push_back(value());
      skip_ws();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == ']') {
        ++pos_;
        return v;
      }
      if (text_[pos_] != ',') fail("expected ',' or ']'");
      ++pos_;
    }
  }

  std::string_view text_;
  std::string key_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Value parse_value(std::string_view text, const std::string& key) {
  return detail::ValueParser(text, key).parse();
}

using Entries = std::map<std::string, Value>;

inline Entries parse_entries(std::istream& in) {
  Entries out;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string text = detail::trim(detail::strip_comment(line));
    if (text.empty()) continue;
    if (text.front() == '[' && text.find('=') == std::string::npos) {
      if (text.back() != ']' || text.size() < 3)
        throw ConfigError("line " + std::to_string(line_no), "malformed section header");
      section = detail::trim(std::string_view(text).substr(1, text.size() - 2));
      continue;
    }
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    const std::string name = detail::trim(std::string_view(text).substr(0, eq));
    const std::string key = section.empty() ? name : section + "." + name;
    std::string rhs = detail::trim(std::string_view(text).substr(eq + 1));
    while (detail::bracket_balance(rhs) > 0 && std::getline(in, line)) {
      ++line_no;
      rhs += " " + detail::trim(detail::strip_comment(line));
    }
    if (out.count(key)) throw ConfigError(key, "given twice");
    out[key] = parse_value(rhs, key);
  }
  return out;
}

/// "key=value" override.
inline void apply_override(Entries& entries, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "override must look like key=value");
  const std::string key = detail::trim(std::string_view(assignment).substr(0, eq));
  entries[key] = parse_value(detail::trim(std::string_view(assignment).substr(eq + 1)), key);
}

namespace detail {

class Reader {
 public:
  explicit Reader(const Entries& e) : entries_(e) {}

  bool has(const std::string& key) {
    used_.insert(key);
    return entries_.count(key) > 0;
  }

  const Value& get(const std::string& key) {
    if (!has(key)) throw ConfigError(key, "missing required key");
    return entries_.at(key);
  }

  static double number(const Value& v, const std::string& key) {
    if (v.is_list || v.quoted) throw ConfigError(key, "expected a number");
    double out = 0.0;
    const char* first = v.text.data();
    const char* last = first + v.text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw ConfigError(key, "'" + v.text + "' is not a number");
    return out;
  }

  static long long integer(const Value& v, const std::string& key) {
    if (v.is_list || v.quoted) throw ConfigError(key, "expected an integer");
    long long out = 0;
    const char* first = v.text.data();
    const char* last = first + v.text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw ConfigError(key, "'" + v.text + "' is not an integer");
    return out;
  }

  double number(const std::string& key) { return number(get(key), key); }
  long long integer(const std::string& key) { return integer(get(key), key); }

  std::string string(const std::string& key) {
    const Value& v = get(key);
    if (v.is_list) throw ConfigError(key, "expected a string");
    return v.text;
  }

  bool boolean(const std::string& key) {
    const std::string s = string(key);
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError(key, "expected true or false");
  }

  std::vector<double> numbers(const std::string& key) {
    const Value& v = get(key);
    if (!v.is_list) throw ConfigError(key, "expected an array of numbers");
    std::vector<double> out;
    for (const Value& item : v.items) out.push_back(number(item, key));
    return out;
  }

  /// A scalar broadcast to `n` agents, or an array of exactly n entries.
  std::vector<double> per_agent(const std::string& key, int n) {
    const Value& v = get(key);
    if (!v.is_list) return std::vector<double>(n, number(v, key));
    std::vector<double> out = numbers(key);
    if (static_cast<int>(out.size()) != n)
      throw ConfigError(key, "needs one entry per agent (" + std::to_string(n) + ")");
    return out;
  }

  Matrix matrix(const std::string& key) {
    const Value& v = get(key);
    if (!v.is_list || v.items.empty()) throw ConfigError(key, "expected a nested array");
    const auto rows = static_cast<Eigen::Index>(v.items.size());
    const auto cols = static_cast<Eigen::Index>(v.items[0].items.size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Value& row = v.items[r];
      if (!row.is_list || static_cast<Eigen::Index>(row.items.size()) != cols)
        throw ConfigError(key, "rows must be arrays of equal length");
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = number(row.items[c], key);
    }
    return m;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : entries_)
      if (!used_.count(key)) throw ConfigError(key, "unknown key");
  }

 private:
  const Entries& entries_;
  std::set<std::string> used_;
};

inline std::vector<Edge> read_edges(Reader& r, int agents) {
  const Value& v = r.get("edges");
  if (!v.is_list) throw ConfigError("edges", "expected an array of [from, to] or [from, to, weight]");
  std::vector<Edge> edges;
  for (const Value& e : v.items) {
    if (!e.is_list || e.items.size() < 2 || e.items.size() > 3)
      throw ConfigError("edges", "malformed edge tuple; use [from, to] or [from, to, weight]");
    Edge edge;
    edge.from = static_cast<int>(Reader::integer(e.items[0], "edges"));
    edge.to = static_cast<int>(Reader::integer(e.items[1], "edges"));
    if (e.items.size() == 3) edge.weight = Reader::number(e.items[2], "edges");
    edges.push_back(edge);
  }
  try {
    (void)build_topology(edges, agents);
  } catch (const InvalidArgument& ex) {
    throw ConfigError("edges", ex.what());
  }
  return edges;
}

template <class F>
auto checked(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& ex) {
    throw ConfigError(key, ex.what());
  }
}

}  // namespace detail

inline Scenario build_scenario(const Entries& entries) {
  detail::Reader r(entries);
  Scenario s;
  s.agent_count = static_cast<int>(r.integer("agents"));
  if (s.agent_count < 1) throw ConfigError("agents", "must be positive");
  const int N = s.agent_count;
  s.order = static_cast<int>(r.integer("order"));
  if (s.order < 2) throw ConfigError("order", "must be at least 2");
  s.edges = detail::read_edges(r, N);

  const std::vector<double> lo = r.numbers("domain.lower");
  const std::vector<double> hi = r.numbers("domain.upper");
  if (static_cast<int>(lo.size()) != s.order) throw ConfigError("domain.lower", "needs `order` entries");
  if (static_cast<int>(hi.size()) != s.order) throw ConfigError("domain.upper", "needs `order` entries");
  s.domain.lower = Eigen::Map<const Vector>(lo.data(), s.order);
  s.domain.upper = Eigen::Map<const Vector>(hi.data(), s.order);
  detail::checked("domain.upper", [&] { s.domain.validate(); return 0; });

  if (r.has("drift")) s.drift = r.string("drift");
  detail::checked("drift", [&] { return Drift::from_spec(s.drift, s.order); });

  const std::vector<double> sf = r.per_agent("gp.signal_std", N);
  const std::vector<double> ell = r.per_agent("gp.lengthscale", N);
  s.noise_stds = r.per_agent("gp.noise_std", N);
  s.kernels.clear();
  for (int i = 0; i < N; ++i) {
    s.kernels.push_back(KernelConfig{sf[i], ell[i]});
    detail::checked("gp.signal_std", [&] { s.kernels.back().validate(); return 0; });
  }
  for (double so : s.noise_stds)
    if (!(so > 0.0)) throw ConfigError("gp.noise_std", "must be positive");
  if (r.has("gp.tau")) s.tau = r.number("gp.tau");
  if (r.has("gp.delta")) s.delta = r.number("gp.delta");
  if (!(s.tau > 0.0)) throw ConfigError("gp.tau", "must be positive");
  if (!(s.delta > 0.0 && s.delta < 1.0)) throw ConfigError("gp.delta", "must lie in (0, 1)");
  if (r.has("gp.lipschitz_f")) s.lipschitz_f = r.number("gp.lipschitz_f");
  if (r.has("gp.lipschitz_mu")) s.lipschitz_mu = r.number("gp.lipschitz_mu");
  if (r.has("gp.lipschitz_sigma")) s.lipschitz_sigma = r.number("gp.lipschitz_sigma");

  if (r.has("weights")) {
    const Value& w = r.get("weights");
    if (!w.is_list && w.text == "local") {
      s.weights = AggregationWeights::local_only(N);
    } else {
      s.weights.omega = r.matrix("weights");
      if (s.weights.omega.rows() != N || s.weights.omega.cols() != N)
        throw ConfigError("weights", "must be an agents x agents matrix");
    }
  } else {
    s.weights = AggregationWeights::local_only(N);
  }
  detail::checked("weights", [&] { s.weights.validate(build_topology(s.edges, N)); return 0; });

  s.gains.c = r.number("c");
  const std::vector<double> lambda = r.numbers("lambda");
  s.gains.lambda = Eigen::Map<const Vector>(lambda.data(), static_cast<Eigen::Index>(lambda.size()));
  if (s.gains.order() != s.order) throw ConfigError("lambda", "needs `order` entries");
  detail::checked("lambda", [&] { s.gains.validate(); return 0; });
  if (r.has("q_eps")) {
    const Value& q = r.get("q_eps");
    if (q.is_list) {
      s.q_eps = r.matrix("q_eps");
    } else {
      s.q_eps = Matrix::Identity(s.order - 1, s.order - 1) * detail::Reader::number(q, "q_eps");
    }
  } else {
    s.q_eps = Matrix::Identity(s.order - 1, s.order - 1);
  }
  if (s.q_eps.rows() != s.order - 1 || s.q_eps.cols() != s.order - 1)
    throw ConfigError("q_eps", "must be (order - 1) x (order - 1)");
  if (r.has("auto_gain")) s.auto_gain = r.boolean("auto_gain");
  if (r.has("theta_bar")) {
    const Value& v = r.get("theta_bar");
    if (v.is_list || v.text != "min") s.theta_bar = detail::Reader::number(v, "theta_bar");
  }

  if (r.has("trigger.mode"))
    s.mode = detail::checked("trigger.mode", [&] { return parse_trigger_mode(r.string("trigger.mode")); });
  if (r.has("trigger.epsilon_strategy")) {
    const std::string e = r.string("trigger.epsilon_strategy");
    if (e == "dwell") s.epsilon_strategy = EpsilonStrategy::Dwell;
    else if (e == "floor") s.epsilon_strategy = EpsilonStrategy::Floor;
    else throw ConfigError("trigger.epsilon_strategy", "expected dwell or floor");
  }
  if (r.has("trigger.dwell")) s.dwell_target = r.number("trigger.dwell");
  if (!(s.dwell_target > 0.0)) throw ConfigError("trigger.dwell", "must be positive");
  if (r.has("trigger.floor_value")) s.floor_value = r.number("trigger.floor_value");

  double amplitude = 1.0, frequency = 1.0;
  if (r.has("reference.amplitude")) amplitude = r.number("reference.amplitude");
  if (r.has("reference.frequency")) frequency = r.number("reference.frequency");
  if (!(frequency != 0.0)) throw ConfigError("reference.frequency", "must be nonzero");
  s.reference = SinusoidReference::spread(N, amplitude, frequency);
  if (r.has("reference.phases")) {
    s.reference.phases = r.numbers("reference.phases");
    if (static_cast<int>(s.reference.phases.size()) != N)
      throw ConfigError("reference.phases", "needs one entry per agent");
  }

  if (r.has("dt")) s.dt = r.number("dt");
  if (!(s.dt > 0.0)) throw ConfigError("dt", "must be positive");
  if (r.has("horizon")) s.horizon = r.number("horizon");
  if (!(s.horizon > 0.0)) throw ConfigError("horizon", "must be positive");
  if (r.has("seed")) {
    const long long seed = r.integer("seed");
    if (seed < 0) throw ConfigError("seed", "must be nonnegative");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  if (r.has("runs")) s.runs = static_cast<int>(r.integer("runs"));
  if (s.runs < 1) throw ConfigError("runs", "must be at least 1");
  if (r.has("offline_dataset_size")) s.offline_dataset_size = static_cast<int>(r.integer("offline_dataset_size"));
  if (s.offline_dataset_size < 0) throw ConfigError("offline_dataset_size", "must be nonnegative");
  if (r.has("online_initial_size")) s.online_initial_size = static_cast<int>(r.integer("online_initial_size"));
  if (s.online_initial_size < 0) throw ConfigError("online_initial_size", "must be nonnegative");

  r.reject_unknown();
  detail::checked("reference", [&] { swarm_gp_et::detail::validate_scenario(s); return 0; });
  return s;
}

inline Scenario parse_config(std::istream& in, const std::vector<std::string>& overrides = {}) {
  Entries entries = parse_entries(in);
  for (const std::string& o : overrides) apply_override(entries, o);
  return build_scenario(entries);
}

inline Scenario parse_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config file '" + path + "'");
  return parse_config(in, overrides);
}

/// The four-agent formation experiment; same content as configs/paper.cfg.
inline constexpr std::string_view kPaperPreset = R"(# Four-agent formation tracking with event-triggered GP learning.
agents = 4
order = 2
edges = [[1, 2], [2, 1], [2, 3], [3, 1], [3, 4], [4, 1], [4, 2]]
drift = "paper"
weights = local

c = 2
lambda = [1, 1]
q_eps = 1
theta_bar = min

dt = 0.001
horizon = 15
seed = 1
runs = 100
offline_dataset_size = 200

[domain]
lower = [-1.5, -1.5]
upper = [1.5, 1.5]

[gp]
signal_std = 0.5
lengthscale = 0.2
noise_std = 0.01
tau = 1e-6
delta = 0.05

[trigger]
mode = distributed
epsilon_strategy = floor
dwell = 0.01

[reference]
amplitude = 1
frequency = 1
)";

inline Scenario paper_preset(const std::vector<std::string>& overrides = {}) {
  std::istringstream in{std::string(kPaperPreset)};
  return parse_config(in, overrides);
}

}  // namespace swarm_gp_et::config

#pragma once

#include "mskp/path_csv.hpp"
#include "mskp/penalized.hpp"
#include "mskp/verify.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mskp {

// Malformed scenario; the message starts with "source:line:".
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Flat `key = value` text with `#` comments; keys use dotted sections.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static Config parse(const std::string& text, const std::string& source) {
    Config c;
    c.source_ = source;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
      ++line;
      auto hash = raw.find('#');
      std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (s.empty()) continue;
      auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(line) + ": expected 'key = value'");
      std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(line) + ": empty key");
      if (c.entries_.count(key))
        throw ConfigError(source + ":" + std::to_string(line) + ": duplicate key '" + key + "' (first on line " +
                          std::to_string(c.entries_[key].line) + ")");
      c.entries_[key] = {value, line};
    }
    return c;
  }

  static Config load(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file + ":0: cannot open scenario file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), file);
  }

  const std::string& source() const { return source_; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string where(const std::string& key) const {
    auto it = entries_.find(key);
    return source_ + ":" + std::to_string(it == entries_.end() ? 0 : it->second.line);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(where(key) + ": " + key + ": " + msg);
  }

  std::string str(const std::string& key, const std::optional<std::string>& fallback = std::nullopt) const {
    used_.insert(key);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second.value;
    if (!fallback) throw ConfigError(source_ + ":0: missing required key '" + key + "'");
    return *fallback;
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key) && fallback) {
      used_.insert(key);
      return *fallback;
    }
    return parse_double(key, str(key));
  }

  long integer(const std::string& key, std::optional<long> fallback = std::nullopt) const {
    double v = number(key, fallback ? std::optional<double>(static_cast<double>(*fallback)) : std::nullopt);
    if (v != std::floor(v) || std::abs(v) > 1e15) fail(key, "expected an integer");
    return static_cast<long>(v);
  }

  std::vector<double> list(const std::string& key, const std::optional<std::vector<double>>& fallback = std::nullopt) const {
    if (!has(key) && fallback) {
      used_.insert(key);
      return *fallback;
    }
    std::vector<double> out;
    std::istringstream is(str(key));
    std::string tok;
    while (is >> tok) out.push_back(parse_double(key, tok));
    if (out.empty()) fail(key, "expected at least one number");
    return out;
  }

  // A vector of length d; a single number is broadcast.
  Vec vec(const std::string& key, int d, const std::optional<Vec>& fallback = std::nullopt) const {
    if (!has(key) && fallback) {
      used_.insert(key);
      return *fallback;
    }
    auto v = list(key);
    if (v.size() == 1) return Vec::Constant(d, v[0]);
    if (static_cast<int>(v.size()) != d)
      fail(key, "expected " + std::to_string(d) + " numbers, got " + std::to_string(v.size()));
    return Eigen::Map<const Vec>(v.data(), d);
  }

  // Rows separated by ';'.
  Mat matrix(const std::string& key) const {
    std::vector<std::vector<double>> rows;
    for (const auto& r : detail::split(str(key), ';')) {
      std::vector<double> row;
      std::istringstream is(r);
      std::string tok;
      while (is >> tok) row.push_back(parse_double(key, tok));
      if (row.empty()) fail(key, "empty matrix row");
      rows.push_back(row);
    }
    Mat L(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) fail(key, "matrix must be square");
      for (std::size_t j = 0; j < rows.size(); ++j) L(i, j) = rows[i][j];
    }
    return L;
  }

  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  double parse_double(const std::string& key, const std::string& s) const {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      fail(key, "cannot parse number '" + s + "'");
    }
    if (used != s.size() || std::isnan(v)) fail(key, "cannot parse number '" + s + "'");
    return v;
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

struct Scenario {
  Scenario(Operator a, Projection p, Path input) : A(std::move(a)), P(std::move(p)), m(std::move(input)) {}

  std::string source;
  double horizon = 1;
  std::uint64_t seed = 1;
  Operator A;
  Projection P;
  Path m;
  std::string input_kind;
  bool generated_input = false;  // input came from a generator; emitted to CSV and re-read
  SolverConfig solver;
  PenaltyScheme scheme = PenaltyScheme::Free;
  double eps = 0.05;
  double h = 0.005;
  std::vector<double> study_eps;
  double h_ratio = 0.1;
  int observation = 1000;
  std::vector<std::string> checks;
  int depth = 6;
  int point_samples = 200;
  int graph_samples = 32;
  double certify_eps = 0.05;
};

namespace detail {

inline ConvexSet build_set(const Config& c, int& d) {
  std::string kind = c.str("operator.set.kind", "whole");
  auto dim_key = [&](int fallback) {
    long v = c.integer("operator.set.dim", fallback);
    if (v < 1 || v > 1000) c.fail("operator.set.dim", "dimension must lie in [1, 1000]");
    return static_cast<int>(v);
  };
  if (kind == "whole") {
    d = dim_key(d > 0 ? d : 1);
    return ConvexSet::whole(d);
  }
  if (kind == "half_line") {
    d = 1;
    return ConvexSet::half_line();
  }
  if (kind == "orthant") {
    d = dim_key(d > 0 ? d : 1);
    long n = c.integer("operator.set.constrained", d);
    if (n < 0 || n > d) c.fail("operator.set.constrained", "must lie in [0, dim]");
    return ConvexSet::orthant(d, static_cast<int>(n));
  }
  if (kind == "box") {
    auto lo = c.list("operator.set.lower");
    d = static_cast<int>(lo.size());
    Vec hi = c.vec("operator.set.upper", d, Vec::Constant(d, kInf));
    Vec l = Eigen::Map<const Vec>(lo.data(), d);
    for (int i = 0; i < d; ++i)
      if (!(l[i] < hi[i])) c.fail("operator.set.upper", "upper bounds must exceed lower bounds");
    return ConvexSet::box(l, hi);
  }
  if (kind == "ball") {
    auto center = c.list("operator.set.center");
    d = static_cast<int>(center.size());
    double r = c.number("operator.set.radius");
    if (!(r > 0)) c.fail("operator.set.radius", "radius must be positive");
    return ConvexSet::ball(Eigen::Map<const Vec>(center.data(), d), r);
  }
  if (kind == "half_space") {
    auto n = c.list("operator.set.normal");
    d = static_cast<int>(n.size());
    Vec nv = Eigen::Map<const Vec>(n.data(), d);
    if (!(nv.norm() > 0)) c.fail("operator.set.normal", "normal must be nonzero");
    return ConvexSet::half_space(nv, c.number("operator.set.offset", 0.0));
  }
  c.fail("operator.set.kind", "unknown set kind '" + kind + "' (whole, half_line, orthant, box, ball, half_space)");
}

inline Operator build_operator(const Config& c) {
  std::string kind = c.str("operator.kind");
  double r0 = c.number("operator.r0", 1.0);
  if (!(r0 > 0)) c.fail("operator.r0", "interior-ball radius must be positive");
  try {
    if (kind == "indicator") {
      int d = 0;
      auto set = build_set(c, d);
      return Operator::indicator(set, r0);
    }
    if (kind == "linear") return Operator::linear(c.matrix("operator.matrix"), r0);
    if (kind == "scaled_identity") {
      long d = c.integer("operator.dim", 1);
      if (d < 1 || d > 1000) c.fail("operator.dim", "dimension must lie in [1, 1000]");
      return Operator::scaled_identity(static_cast<int>(d), c.number("operator.lambda"), r0);
    }
    if (kind == "sum") {
      Mat L = c.matrix("operator.matrix");
      int d = static_cast<int>(L.rows());
      auto set = build_set(c, d);
      if (set.dim() != L.rows()) c.fail("operator.matrix", "matrix and set dimensions differ");
      return Operator::sum(L, set, r0);
    }
    if (kind == "prox") {
      auto center = c.list("operator.center");
      return Operator::prox_quadratic(Eigen::Map<const Vec>(center.data(), static_cast<Eigen::Index>(center.size())),
                                      c.number("operator.lambda"), r0);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    c.fail("operator.kind", e.what());
  }
  c.fail("operator.kind", "unknown operator kind '" + kind + "' (indicator, linear, scaled_identity, sum, prox)");
}

inline GFunction parse_g(const Config& c) {
  std::string s = c.str("projection.g", "linear:0");
  auto colon = s.find(':');
  if (colon == std::string::npos) c.fail("projection.g", "expected linear:<c> or cap:<v>");
  std::string name = s.substr(0, colon), arg = s.substr(colon + 1);
  double v = 0;
  try {
    v = detail::parse_number(arg, c.where("projection.g"));
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (name == "linear") return LinearG{v};
  if (name == "cap") return CapG{v};
  c.fail("projection.g", "expected linear:<c> or cap:<v>");
}

inline Projection build_projection(const Config& c, const ConvexSet& dom) {
  std::string kind = c.str("projection.kind", "orthogonal");
  try {
    Projection p = [&] {
      if (kind == "orthogonal") return Projection::orthogonal(dom);
      if (kind == "elastic") return Projection::elastic(dom, c.number("projection.delta"));
      if (kind == "iterated")
        return Projection::iterated(dom, c.number("projection.delta"), static_cast<int>(c.integer("projection.n")));
      if (kind == "limit") return Projection::limit(dom, c.number("projection.delta"), c.number("projection.tol", 1e-12));
      if (kind == "custom") return Projection::custom(dom, parse_g(c));
      c.fail("projection.kind", "unknown projection kind '" + kind + "' (orthogonal, elastic, iterated, limit, custom)");
    }();
    p.require_admissible();
    return p;
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    c.fail("projection.kind", e.what());
  }
}

// "t: v v; t: v v" with t increasing from 0.
inline Path parse_step_literal(const Config& c, double T, int d) {
  std::vector<double> ts;
  std::vector<Vec> vs;
  for (const auto& piece : detail::split(c.str("input.step"), ';')) {
    auto colon = piece.find(':');
    if (colon == std::string::npos) c.fail("input.step", "expected 't: values' pieces separated by ';'");
    std::vector<double> nums;
    std::istringstream is(piece.substr(colon + 1));
    std::string tok;
    try {
      std::string t = piece.substr(0, colon);
      t.erase(0, t.find_first_not_of(" \t"));
      t.erase(t.find_last_not_of(" \t") + 1);
      ts.push_back(detail::parse_number(t, c.where("input.step")));
      while (is >> tok) nums.push_back(detail::parse_number(tok, c.where("input.step")));
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string(e.what()));
    }
    if (static_cast<int>(nums.size()) != d)
      c.fail("input.step", "each piece needs " + std::to_string(d) + " values");
    vs.push_back(Eigen::Map<const Vec>(nums.data(), d));
  }
  try {
    return Path::step(T, ts, vs);
  } catch (const InvalidInput& e) {
    c.fail("input.step", e.what());
  }
}

inline Path sinusoid_input(const Vec& offset, const Vec& amplitude, double frequency, const Vec& drift, double T,
                           int samples) {
  std::vector<Knot> ks;
  for (int i = 0; i <= samples; ++i) {
    double t = i == samples ? T : T * i / samples;
    Vec v = offset + amplitude * std::sin(frequency * t) + drift * t;
    ks.push_back({t, v, v, false});
  }
  return Path::sampled(T, std::move(ks));
}

// Seeded jump train: `jumps` times uniform on (0, T), sizes bias + scale * N(0, I).
inline Path jump_train(const Vec& start, double T, int jumps, double scale, const Vec& bias, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> ts;
  for (int i = 0; i < jumps; ++i) ts.push_back(rng.uniform(0.0, T));
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<double> times{0.0};
  std::vector<Vec> vals{start};
  for (double t : ts) {
    if (!(t > 0 && t < T)) continue;
    times.push_back(t);
    vals.push_back(vals.back() + bias + scale * rng.normal_vec(static_cast<int>(start.size())));
  }
  return Path::step(T, times, vals);
}

inline Path build_input(const Config& c, const std::filesystem::path& dir, double T, int d, std::uint64_t seed,
                        std::string& kind, bool& generated) {
  kind = c.str("input.kind");
  generated = false;
  if (kind == "step") return parse_step_literal(c, T, d);
  if (kind == "csv") {
    std::filesystem::path f = c.str("input.file");
    if (f.is_relative()) f = dir / f;
    std::ifstream in(f);
    if (!in) c.fail("input.file", "cannot open '" + f.string() + "'");
    Path p = [&] {
      try {
        return read_path_csv(in, T, f.string());
      } catch (const InvalidInput& e) {
        c.fail("input.file", e.what());
      }
    }();
    if (p.dim() != d) c.fail("input.file", "path has dimension " + std::to_string(p.dim()) + ", operator has " + std::to_string(d));
    return p;
  }
  Vec start = c.vec("input.start", d, Vec::Zero(d));
  if (kind == "sinusoid") {
    long n = c.integer("input.samples", 1000);
    if (n < 1 || n > 10000000) c.fail("input.samples", "must lie in [1, 1e7]");
    return sinusoid_input(start, c.vec("input.amplitude", d, Vec::Ones(d)), c.number("input.frequency", 1.0),
                          c.vec("input.drift", d, Vec::Zero(d)), T, static_cast<int>(n));
  }
  if (kind == "drift") {
    Vec end = start + T * c.vec("input.drift", d);
    return Path::sampled(T, {{0.0, start, start, false}, {T, end, end, false}});
  }
  if (kind == "jump_train") {
    long n = c.integer("input.jumps", 20);
    if (n < 0 || n > 10000000) c.fail("input.jumps", "must lie in [0, 1e7]");
    double scale = c.number("input.scale", 1.0);
    if (!(scale >= 0)) c.fail("input.scale", "must be nonnegative");
    auto s = static_cast<std::uint64_t>(c.integer("input.seed", static_cast<long>(seed)));
    generated = true;
    Path p = jump_train(start, T, static_cast<int>(n), scale, c.vec("input.bias", d, Vec::Zero(d)), s);
    return path_from_csv(path_to_csv(p), T);
  }
  c.fail("input.kind", "unknown input kind '" + kind + "' (step, csv, sinusoid, drift, jump_train)");
}

inline std::vector<double> positive_list(const Config& c, const std::string& key, std::vector<double> fallback) {
  auto v = c.list(key, fallback);
  for (double x : v)
    if (!(x > 0)) c.fail(key, "values must be positive");
  return v;
}

}  // namespace detail

// Builds and validates a scenario. `seed` overrides the `seed` key.
inline Scenario build_scenario(const Config& c, const std::filesystem::path& dir,
                               std::optional<std::uint64_t> seed = std::nullopt) {
  auto A = detail::build_operator(c);
  auto P = detail::build_projection(c, A.domain());
  double T = c.number("horizon", 1.0);
  if (!(T > 0 && T <= 1e6)) c.fail("horizon", "horizon must lie in (0, 1e6]");
  long s = c.integer("seed", 1);
  if (s < 0) c.fail("seed", "seed must be nonnegative");
  std::uint64_t sd = seed.value_or(static_cast<std::uint64_t>(s));
  std::string kind;
  bool generated = false;
  Path m = detail::build_input(c, dir, T, A.dim(), sd, kind, generated);
  if (!A.domain().contains(m.at(0)))
    c.fail("input.kind", "initial value m_0 = " + fmt_vec(m.at(0)) + " is outside the closed domain: violates " +
                             A.domain().violated_constraint(m.at(0)));

  Scenario scn(A, P, m);
  scn.source = c.source();
  scn.horizon = T;
  scn.seed = sd;
  scn.input_kind = kind;
  scn.generated_input = generated;
  auto& cfg = scn.solver;
  cfg.n_sub = static_cast<int>(c.integer("solver.n_sub", cfg.n_sub));
  cfg.h0 = c.number("solver.h0", cfg.h0);
  cfg.osc0 = c.number("solver.osc0", cfg.osc0);
  cfg.refine = c.number("solver.refine", cfg.refine);
  cfg.max_levels = static_cast<int>(c.integer("solver.max_levels", cfg.max_levels));
  cfg.tol_conv = c.number("solver.tol", cfg.tol_conv);
  cfg.samples_per_interval = static_cast<int>(c.integer("solver.samples", cfg.samples_per_interval));
  cfg.geometric_samples = static_cast<int>(c.integer("solver.geometric", cfg.geometric_samples));
  if (c.has("solver.level")) cfg.fixed_level = static_cast<int>(c.integer("solver.level"));
  if (cfg.n_sub < 1 || cfg.n_sub > 1000000) c.fail("solver.n_sub", "must lie in [1, 1e6]");
  if (!(cfg.h0 > 0)) c.fail("solver.h0", "must be positive");
  if (!(cfg.osc0 > 0)) c.fail("solver.osc0", "must be positive");
  if (!(cfg.refine > 1)) c.fail("solver.refine", "must exceed 1");
  if (cfg.max_levels < 0 || cfg.max_levels > 40) c.fail("solver.max_levels", "must lie in [0, 40]");
  if (!(cfg.tol_conv > 0)) c.fail("solver.tol", "must be positive");
  if (cfg.samples_per_interval < 0 || cfg.samples_per_interval > 1000) c.fail("solver.samples", "must lie in [0, 1000]");
  if (cfg.geometric_samples < 0 || cfg.geometric_samples > 50) c.fail("solver.geometric", "must lie in [0, 50]");
  if (cfg.fixed_level && (*cfg.fixed_level < 0 || *cfg.fixed_level > 40)) c.fail("solver.level", "must lie in [0, 40]");

  std::string scheme = c.str("penalized.scheme", "amortized");
  if (scheme == "free") scn.scheme = PenaltyScheme::Free;
  else if (scheme == "amortized") scn.scheme = PenaltyScheme::Amortized;
  else c.fail("penalized.scheme", "expected free or amortized");
  scn.eps = detail::positive_list(c, "penalized.eps", {0.05})[0];
  scn.h = detail::positive_list(c, "penalized.h", {scn.eps / 10})[0];

  scn.study_eps = detail::positive_list(c, "study.eps", {0.2, 0.1, 0.05, 0.025});
  scn.h_ratio = detail::positive_list(c, "study.h_ratio", {0.1})[0];
  scn.observation = static_cast<int>(c.integer("study.observation", 1000));
  if (scn.observation < 1 || scn.observation > 10000000) c.fail("study.observation", "must lie in [1, 1e7]");

  std::string checks = c.str("certify.checks", "all");
  if (checks == "all") {
    scn.checks = check_ids();
  } else {
    auto known = check_ids();
    for (auto id : detail::split(checks, ',')) {
      id.erase(0, id.find_first_not_of(' '));
      id.erase(id.find_last_not_of(' ') + 1);
      if (std::find(known.begin(), known.end(), id) == known.end()) c.fail("certify.checks", "unknown check id '" + id + "'");
      scn.checks.push_back(id);
    }
  }
  scn.depth = static_cast<int>(c.integer("certify.depth", 6));
  if (scn.depth < 0 || scn.depth > 12) c.fail("certify.depth", "must lie in [0, 12]");
  scn.point_samples = static_cast<int>(c.integer("certify.samples", 200));
  if (scn.point_samples < 1 || scn.point_samples > 1000000) c.fail("certify.samples", "must lie in [1, 1e6]");
  scn.graph_samples = static_cast<int>(c.integer("certify.graph_samples", 32));
  if (scn.graph_samples < 1 || scn.graph_samples > 100000) c.fail("certify.graph_samples", "must lie in [1, 1e5]");
  scn.certify_eps = detail::positive_list(c, "certify.eps", {0.05})[0];

  auto extra = c.unused();
  if (!extra.empty()) c.fail(extra.front(), "unknown key");
  return scn;
}

inline Scenario load_scenario(const std::string& file, std::optional<std::uint64_t> seed = std::nullopt) {
  auto c = Config::load(file);
  return build_scenario(c, std::filesystem::path(file).parent_path(), seed);
}

// Certification bundle: the refined solution, a paired solution driven by
// m + (a - m_0) / 2, and amortized solutions of both.
inline Bundle certification_bundle(const Scenario& s) {
  auto hist = solve_with_history(s.A, s.P, s.m, s.solver);
  if (!hist.converged) throw ConvergenceError("refinement did not converge; rerun with --level or a looser solver.tol");
  const Path& m = hist.inputs.back();
  Bundle b(s.A, s.P, m, hist.levels.back());
  Path mh = shifted(m, 0.5 * (s.A.certificate().a - m.at(0)));
  b.m_hat = mh;
  b.sol_hat = solve_step_input(s.A, s.P, mh, s.solver);
  b.amortized = solve_amortized(s.A, s.P, s.certify_eps, m, s.certify_eps * s.h_ratio);
  b.amortized_hat = solve_amortized(s.A, s.P, s.certify_eps, mh, s.certify_eps * s.h_ratio);
  b.seed = s.seed;
  b.window_depth = s.depth;
  b.point_samples = s.point_samples;
  b.graph_sample_count = s.graph_samples;
  return b;
}

// Truncated bidiagonal system x^i' + x^i + x^{i+1} with the first n
// coordinates constrained to [0, inf) and two free coordinates appended.
struct ExampleFiles {
  std::string scenario;
  std::string input_csv;
};

inline ExampleFiles bidiagonal_example(int n, std::uint64_t seed, const std::string& csv_name) {
  if (n < 1 || n > 8) throw InvalidInput("example size must lie in [1, 8]");
  const int d = n + 2;
  std::string mat;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) mat += std::string(j ? " " : "") + (i == j || j == i + 1 ? "1" : "0");
    if (i + 1 < d) mat += "; ";
  }
  Path m = detail::jump_train(Vec::Ones(d), 1.0, 20, 0.6, Vec::Constant(d, -0.2), seed);
  ExampleFiles f;
  f.input_csv = path_to_csv(m);
  f.scenario = "# bidiagonal system, " + std::to_string(n) + " constrained coordinates out of " + std::to_string(d) +
               "\n"
               "horizon = 1\n"
               "seed = " + std::to_string(seed) + "\n"
               "operator.kind = sum\n"
               "operator.matrix = " + mat + "\n"
               "operator.set.kind = orthant\n"
               "operator.set.dim = " + std::to_string(d) + "\n"
               "operator.set.constrained = " + std::to_string(n) + "\n"
               "projection.kind = orthogonal\n"
               "input.kind = csv\n"
               "input.file = " + csv_name + "\n"
               "solver.n_sub = 200\n";
  return f;
}

}  // namespace mskp

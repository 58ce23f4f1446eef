#pragma once

// Path CSV: header "t,flag,c1,...,cd". A jump time emits two rows with the
// same t: the left limit (flag R) followed by the right value (flag J).

#include "mskp/paths.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace mskp {

inline void write_path_csv(std::ostream& os, const Path& p) {
  os << "t,flag";
  for (int i = 1; i <= p.dim(); ++i) os << ",c" << i;
  os << '\n';
  auto row = [&](double t, char flag, const Vec& v) {
    os << fmt_double(t) << ',' << flag;
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << fmt_double(v[i]);
    os << '\n';
  };
  for (const auto& k : p.knots()) {
    if (k.jump || k.left != k.right) {
      row(k.t, 'R', k.left);
      row(k.t, 'J', k.right);
    } else {
      row(k.t, 'R', k.right);
    }
  }
  if (p.knots().back().t < p.horizon()) row(p.horizon(), 'R', p.at(p.horizon()));
}

inline std::string path_to_csv(const Path& p) {
  std::ostringstream os;
  write_path_csv(os, p);
  return os.str();
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidInput(where + ": cannot parse number '" + s + "'");
  }
  if (used != s.size()) throw InvalidInput(where + ": cannot parse number '" + s + "'");
  return v;
}

}  // namespace detail

// Reads a path CSV. The horizon defaults to the last time in the file.
// A path whose pieces are all constant comes back as STEP, otherwise SAMPLED.
inline Path read_path_csv(std::istream& is, std::optional<double> horizon = std::nullopt,
                          const std::string& source = "path csv") {
  std::string line;
  int lineno = 0;
  int dim = -1;
  std::vector<Knot> knots;
  bool pending_left = false;
  while (std::getline(is, line)) {
    ++lineno;
    std::string where = source + ":" + std::to_string(lineno);
    if (line.empty() || line == "\r") continue;
    auto f = detail::split(line, ',');
    if (dim < 0) {
      if (f.size() < 3 || f[0] != "t" || f[1] != "flag")
        throw InvalidInput(where + ": expected header 't,flag,c1,...,cd'");
      dim = static_cast<int>(f.size()) - 2;
      continue;
    }
    if (static_cast<int>(f.size()) != dim + 2)
      throw InvalidInput(where + ": expected " + std::to_string(dim + 2) + " fields");
    double t = detail::parse_number(f[0], where);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = detail::parse_number(f[i + 2], where);
    const std::string& flag = f[1];
    if (flag == "J") {
      if (knots.empty() || knots.back().t != t || !pending_left)
        throw InvalidInput(where + ": J row must follow an R row with the same time");
      knots.back().right = v;
      knots.back().jump = true;
      pending_left = false;
    } else if (flag == "R") {
      if (!knots.empty()) {
        if (t < knots.back().t) throw InvalidInput(where + ": times must be nondecreasing");
        if (t == knots.back().t) throw InvalidInput(where + ": repeated time without a J row");
      }
      Knot k;
      k.t = t;
      k.left = v;
      k.right = v;
      knots.push_back(std::move(k));
      pending_left = true;
    } else {
      throw InvalidInput(where + ": flag must be R or J");
    }
  }
  if (knots.empty()) throw InvalidInput(source + ": no data rows");
  if (knots.front().t != 0.0) throw InvalidInput(source + ": first row must be at t=0");
  if (knots.front().jump) throw InvalidInput(source + ": a path cannot jump at t=0");
  double T = horizon.value_or(knots.back().t);
  if (knots.back().t > T) throw InvalidInput(source + ": data beyond the horizon");
  if (!(T > 0)) throw InvalidInput(source + ": horizon must be positive");
  bool step = true;
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (knots[i].left != knots[i - 1].right) step = false;
  if (step) {
    std::vector<double> ts;
    std::vector<Vec> vs;
    for (const auto& k : knots) {
      ts.push_back(k.t);
      vs.push_back(k.right);
    }
    return Path::step(T, ts, vs);
  }
  return Path::sampled(T, std::move(knots));
}

inline Path path_from_csv(const std::string& text, std::optional<double> horizon = std::nullopt) {
  std::istringstream is(text);
  return read_path_csv(is, horizon);
}

}  // namespace mskp

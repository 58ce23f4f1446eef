#include "mskp/scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace mskp;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Write to a temporary sibling, then rename over the target.
void write_atomic(const fs::path& target, const std::string& content) {
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string line(const std::string& key, const std::string& value) { return key + " " + value + "\n"; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Options {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> level;
};

fs::path out_dir(const Options& o) {
  fs::path dir = !o.out.empty() ? fs::path(o.out) : (std::getenv("MSKP_OUT") ? fs::path(std::getenv("MSKP_OUT")) : fs::path("out"));
  fs::create_directories(dir);
  return dir;
}

Scenario load(const Options& o) {
  auto s = load_scenario(o.scenario, o.seed);
  if (o.level) s.solver.fixed_level = *o.level;
  return s;
}

std::string header(const Scenario& s) {
  return line("scenario", s.source) + line("operator", s.A.describe()) + line("projection", s.P.describe()) +
         line("input", s.input_kind + " dim " + std::to_string(s.m.dim()) + " horizon " + num(s.horizon)) +
         line("seed", std::to_string(s.seed));
}

void emit_input(const fs::path& dir, const Scenario& s) {
  if (s.generated_input) write_atomic(dir / "input.csv", path_to_csv(s.m));
}

int cmd_solve(const Options& o) {
  auto s = load(o);
  auto dir = out_dir(o);
  emit_input(dir, s);
  auto hist = solve_with_history(s.A, s.P, s.m, s.solver);
  std::string diffs;
  for (double v : hist.level_diffs) diffs += (diffs.empty() ? "" : " ") + num(v);
  if (!hist.converged)
    throw ConvergenceError("refinement did not reach tol " + num(s.solver.tol_conv) + " within " +
                           std::to_string(s.solver.max_levels) + " levels; level differences: " + diffs);
  const auto& sol = hist.levels.back();
  write_atomic(dir / "x.csv", path_to_csv(sol.x));
  write_atomic(dir / "k.csv", path_to_csv(sol.k));
  write_atomic(dir / "kc.csv", path_to_csv(sol.kc));
  write_atomic(dir / "kd.csv", path_to_csv(sol.kd));
  write_atomic(dir / "reaction.csv", path_to_csv(sol.reaction));
  std::string d = header(s);
  d += line("level", std::to_string(sol.level)) + line("cells", std::to_string(sol.cells));
  d += line("level_differences", diffs.empty() ? "none" : diffs);
  d += line("jumps", std::to_string(sol.jumps.size()));
  d += line("variation_k", num(sol.variation)) + line("sup_x", num(sol.sup_x));
  d += line("apriori_margin", num(apriori_margin(s.A.certificate(), hist.inputs.back(), sol.x, sol.k)));
  write_atomic(dir / "diagnostics.txt", d);
  std::cout << "solved level " << sol.level << " (" << sol.cells << " cells), outputs in " << dir.string() << "\n";
  return 0;
}

int cmd_penalize(const Options& o) {
  auto s = load(o);
  auto dir = out_dir(o);
  emit_input(dir, s);
  auto sol = s.scheme == PenaltyScheme::Free ? solve_yosida_free(s.A, s.eps, s.m, s.h)
                                             : solve_amortized(s.A, s.P, s.eps, s.m, s.h);
  write_atomic(dir / "x_eps.csv", path_to_csv(sol.x));
  write_atomic(dir / "k_eps.csv", path_to_csv(sol.k));
  write_atomic(dir / "kc_eps.csv", path_to_csv(sol.kc));
  write_atomic(dir / "kd_eps.csv", path_to_csv(sol.kd));
  std::size_t projected = 0;
  for (const auto& j : sol.jumps)
    if (j.dk.squaredNorm() > 0) ++projected;
  std::string d = header(s);
  d += line("scheme", s.scheme == PenaltyScheme::Free ? "free" : "amortized");
  d += line("eps", num(s.eps)) + line("h", num(s.h)) + line("steps", std::to_string(sol.grid.size() - 1));
  d += line("jumps", std::to_string(sol.jumps.size())) + line("projected_jumps", std::to_string(projected));
  d += line("energy", num(sol.energy));
  write_atomic(dir / "diagnostics.txt", d);
  std::cout << "penalized run with eps " << num(s.eps) << ", outputs in " << dir.string() << "\n";
  return 0;
}

int cmd_study(const Options& o) {
  auto s = load(o);
  auto dir = out_dir(o);
  emit_input(dir, s);
  auto rows = convergence_study(s.A, s.P, s.m, s.study_eps, s.h_ratio, s.solver, s.observation);
  std::string csv = "eps,h,err_free_xbar,err_jeps_x,int_aeps,err_amortized,bound_margin\n";
  for (const auto& r : rows)
    csv += num(r.eps) + "," + num(r.h) + "," + num(r.err_free_xbar) + "," + num(r.err_jeps_x) + "," + num(r.int_aeps) +
           "," + num(r.err_amortized) + "," + num(r.bound_margin) + "\n";
  write_atomic(dir / "study.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_certify(const Options& o) {
  auto s = load(o);
  auto dir = out_dir(o);
  emit_input(dir, s);
  auto reports = run_invariant_suite(certification_bundle(s), s.checks);
  write_atomic(dir / "report.csv", reports_csv(reports));
  std::string table = reports_table(reports);
  write_atomic(dir / "report.txt", table);
  std::cout << table;
  return all_pass(reports) ? 0 : kExitCheckFailed;
}

int cmd_example(int n, const Options& o) {
  auto dir = out_dir(o);
  std::string base = "bidiagonal_" + std::to_string(n);
  auto files = bidiagonal_example(n, o.seed.value_or(1), base + "_input.csv");
  write_atomic(dir / (base + "_input.csv"), files.input_csv);
  write_atomic(dir / (base + ".cfg"), files.scenario);
  std::cout << "wrote " << (dir / (base + ".cfg")).string() << "\n";
  return 0;
}

void write_failure(const Options& o, const std::string& what) {
  try {
    write_atomic(out_dir(o) / "diagnostics.txt", line("status", "numerical failure") + line("error", what) +
                                                     line("scenario", o.scenario));
  } catch (const std::exception&) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skorokhod problems with maximal monotone operators and generalized projections"};
  app.require_subcommand(1);
  Options o;
  int example_n = 3;
  auto add_common = [&](CLI::App* sub, bool needs_scenario) {
    if (needs_scenario) sub->add_option("--scenario", o.scenario, "scenario file")->required();
    sub->add_option("--out", o.out, "output directory (default $MSKP_OUT or ./out)");
    sub->add_option("--seed", o.seed, "seed overriding the scenario");
  };
  auto solve_cmd = app.add_subcommand("solve", "solve the Skorokhod problem by step-input refinement");
  auto pen_cmd = app.add_subcommand("penalize", "run the penalized (Yosida) scheme");
  auto study_cmd = app.add_subcommand("study", "convergence study of the penalized schemes");
  auto cert_cmd = app.add_subcommand("certify", "run the invariant suite; nonzero exit when a check fails");
  auto ex_cmd = app.add_subcommand("example", "write the bidiagonal example scenario");
  for (auto* s : {solve_cmd, pen_cmd, study_cmd, cert_cmd}) {
    add_common(s, true);
    s->add_option("--level", o.level, "stop refinement at this level");
  }
  add_common(ex_cmd, false);
  ex_cmd->add_option("N", example_n, "number of constrained coordinates")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*solve_cmd) return cmd_solve(o);
    if (*pen_cmd) return cmd_penalize(o);
    if (*study_cmd) return cmd_study(o);
    if (*cert_cmd) return cmd_certify(o);
    if (*ex_cmd) return cmd_example(example_n, o);
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_failure(o, e.what());
    return kExitNumerical;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_failure(o, e.what());
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}

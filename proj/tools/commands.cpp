#include "commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "implicit/grid_io.hpp"
#include "problem.hpp"

namespace implicit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax:
    case ErrorKind::UnknownIdentifier:
    case ErrorKind::VariableIndex:
    case ErrorKind::InvalidArgument:
    case ErrorKind::UnsupportedDimension:
    case ErrorKind::EmptyMargin:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::ZeroLambda:
    case ErrorKind::WrongMode:
    case ErrorKind::WrongBaseMode:
    case ErrorKind::GridTooSmall:
    case ErrorKind::Io:
      return exit_code::usage;
    case ErrorKind::SingularMinor:
    case ErrorKind::RankDeficient:
    case ErrorKind::DegenerateSeed:
    case ErrorKind::NotCritical:
    case ErrorKind::NoRegularPoints:
      return exit_code::singular;
    case ErrorKind::Domain:
    case ErrorKind::DomainEscape:
    case ErrorKind::EmptyCloud:
      return exit_code::runtime;
  }
  return exit_code::runtime;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json cloud_summary(const PointCloud& cloud) {
  return {{"points", cloud.size()}, {"truncated", cloud.truncated}};
}

fs::path output_dir(const CommandOptions& options, const ProblemFile& problem) {
  const fs::path dir = options.out.value_or(problem.output_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

// Top-level keys as "key,value" lines; arrays are space separated.
void print_report(const json& report, Format format, std::ostream& out) {
  if (format == Format::Json) {
    out << report.dump(2) << '\n';
    return;
  }
  out << "key,value\n";
  for (const auto& [key, value] : report.items()) {
    out << key << ',';
    if (value.is_array()) {
      bool first = true;
      for (const auto& e : value) {
        out << (first ? "" : " ") << (e.is_number_float() ? format_double(e.get<double>()) : e.dump());
        first = false;
      }
    } else if (value.is_number_float()) {
      out << format_double(value.get<double>());
    } else if (value.is_string()) {
      out << value.get<std::string>();
    } else {
      out << value.dump();
    }
    out << '\n';
  }
}

std::shared_ptr<spdlog::logger> logger() {
  if (auto existing = spdlog::get("implicit_trace")) return existing;
  auto created = spdlog::stderr_logger_mt("implicit_trace");
  created->set_pattern("[%l] %v");
  const char* env = std::getenv("IMPLICIT_TRACE_LOG");
  created->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  return created;
}

std::vector<double> require(const std::vector<double>& v, const char* what) {
  if (v.empty()) fail(ErrorKind::InvalidArgument, std::string("problem file: missing ") + what);
  return v;
}

json verification_json(const VerificationReport& rep, const ParamGrid& grid, double residual_tol,
                       double regularity_tol, bool& pass) {
  json j = to_json(rep);
  j["mode"] = std::string(to_string(grid.mode()));
  j["nodes"] = grid.size();
  j["spans"] = [&] {
    std::vector<double> s;
    for (std::size_t k = 0; k < grid.params(); ++k) s.push_back(grid.span(k));
    return s;
  }();
  j["steps"] = grid.steps();
  j["perm"] = grid.perm().order();
  j["residual_tol"] = residual_tol;
  j["regularity_tol"] = regularity_tol;
  double worst = 0.0;
  for (double r : rep.max_residual) worst = std::max(worst, r);
  pass = worst <= residual_tol && (!rep.regularity || rep.regularity->pass(regularity_tol));
  j["pass"] = pass;
  return j;
}

}  // namespace

json to_json(const VerificationReport& rep) {
  json j;
  j["max_residual"] = rep.max_residual;
  if (rep.regularity) {
    j["min_detM"] = rep.regularity->min_det;
    j["max_detM"] = rep.regularity->max_det;
    j["max_detM_deviation"] = rep.regularity->max_deviation;
  } else {
    j["min_detM"] = nullptr;
    j["max_detM"] = nullptr;
    j["max_detM_deviation"] = nullptr;
  }
  j["min_rank_B"] = rep.min_rank_b;
  j["injective"] = rep.injectivity.injective;
  j["injectivity_bound"] = finite_or_null(rep.injectivity.bound);
  j["injectivity_min_ratio"] = finite_or_null(rep.injectivity.min_ratio);
  j["injectivity_exhaustive"] = rep.injectivity.exhaustive;
  if (rep.injectivity.witness)
    j["witness"] = {rep.injectivity.witness->first, rep.injectivity.witness->second};
  else
    j["witness"] = nullptr;
  return j;
}

json to_json(const GenSolReport& rep) {
  json j;
  j["radii"] = rep.radii;
  j["samples_per_cloud"] = rep.samples_per_cloud;
  json clouds = json::array();
  for (const auto& c : rep.clouds) clouds.push_back(cloud_summary(c));
  j["clouds"] = clouds;
  json steps = json::array();
  for (double s : rep.hausdorff_steps) steps.push_back(finite_or_null(s));
  j["hausdorff_steps"] = steps;
  j["limit_points"] = rep.limit.size();
  j["seed_distance"] = finite_or_null(rep.seed_distance);
  j["max_residual"] = rep.max_residual;
  j["truncated"] = rep.truncated;
  return j;
}

json to_json(const ConvergenceReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"lambda", r.lambda},
                    {"err_stage1", {r.stage1[0], r.stage1[1], r.stage1[2]}},
                    {"err_stage2", {r.stage2[0], r.stage2[1], r.stage2[2]}},
                    {"err_max", r.total},
                    {"order", finite_or_null(r.order)}});
  }
  return {{"rows", rows}, {"decreasing", rep.decreasing}};
}

int cmd_parametrize(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  auto log = logger();
  const ProblemFile problem = load_problem(options.problem);
  const ImplicitSystem system = problem.system();
  ChainConfig config;
  config.spans = require(problem.chain.spans, "[chain] spans");
  config.steps = require(problem.chain.steps, "[chain] steps");
  config.mode = problem.chain.mode;
  config.threads = options.threads;
  log->info("integrating chain: d = {}, l = {}, mode = {}", system.dim(), system.codim(), to_string(config.mode));
  const ParamGrid grid = integrate_chain(system, config);
  log->info("grid has {} nodes", grid.size());

  const fs::path dir = output_dir(options, problem);
  {
    auto csv = open_out(dir / "grid.csv");
    write_grid_csv(csv, grid, system);
  }
  save_grid_binary(dir / "grid.bin", grid);

  InjectivityOptions inj;
  inj.threads = options.threads;
  const VerificationReport rep = verify_grid(grid, system, inj);
  bool pass = false;
  json j = verification_json(rep, grid, options.tol.value_or(problem.checks.residual_tol),
                             problem.checks.regularity_tol, pass);
  j["command"] = "parametrize";
  {
    auto file = open_out(dir / "report.json");
    file << j.dump(2) << '\n';
  }
  print_report(j, options.format, out);
  if (!pass) {
    err << "CheckFailed: residual or regularity check exceeded its tolerance, see " << (dir / "report.json").string()
        << '\n';
    return exit_code::check_failed;
  }
  return exit_code::ok;
}

int cmd_verify(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const ProblemFile problem = load_problem(options.problem);
  const ImplicitSystem system = problem.system();
  const fs::path path = options.grid.value_or(options.out.value_or(problem.output_dir) / "grid.bin");
  const ParamGrid grid = load_grid_binary(path);
  if (grid.dim() != system.dim() || grid.codim() != system.codim())
    fail(ErrorKind::ShapeMismatch, "cached grid does not match the problem dimensions");
  InjectivityOptions inj;
  inj.threads = options.threads;
  const VerificationReport rep = verify_grid(grid, system, inj);
  bool pass = false;
  json j = verification_json(rep, grid, options.tol.value_or(problem.checks.residual_tol),
                             problem.checks.regularity_tol, pass);
  j["command"] = "verify";
  j["grid"] = path.string();
  print_report(j, options.format, out);
  if (!pass) {
    err << "CheckFailed: residual or regularity check exceeded its tolerance\n";
    return exit_code::check_failed;
  }
  return exit_code::ok;
}

namespace {

void write_gnuplot(std::ostream& gp, const GenSolReport& rep, std::size_t dim) {
  gp << "# Traced level sets T_n (one file per radius) and the merged limit cloud.\n"
     << "set datafile separator ','\n"
     << "set key outside\n";
  const char* cmd = dim == 3 ? "splot" : "plot";
  const char* cols = dim == 3 ? "1:2:3" : "1:2";
  if (dim == 2) gp << "set size ratio -1\nset xlabel 'x_1'\nset ylabel 'x_2'\n";
  if (dim > 3) gp << "# d > 3: projection onto (x_1, x_2)\n";
  gp << cmd << ' ';
  for (std::size_t i = 0; i < rep.clouds.size(); ++i)
    gp << "'cloud_r" << (i + 1) << ".csv' every ::1 using " << cols << " with points pt 7 ps 0.2 title 'r = "
       << format_double(rep.radii[i]) << "', \\\n     ";
  gp << "'limit.csv' every ::1 using " << cols << " with points pt 7 ps 0.4 lc rgb 'black' title 'limit'\n";
}

}  // namespace

int cmd_gensol(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  auto log = logger();
  const ProblemFile problem = load_problem(options.problem);
  const ImplicitSystem system = problem.system();
  GenSolOptions g;
  g.radii = require(problem.gensol.radii, "[gensol] radii");
  g.per_radius = problem.gensol.per_radius;
  g.window = problem.window();
  g.trace.mode = problem.gensol.mode;
  g.trace.step = problem.gensol.step;
  g.trace.chunk_steps = problem.gensol.chunk;
  g.trace.budget = problem.gensol.budget;
  g.trace.trace_tol = problem.gensol.trace_tol;
  g.trace.threads = options.threads;
  g.eps_stop = problem.gensol.eps_stop;
  log->info("generalized solution over {} radii, {} directions each", g.radii.size(), g.per_radius);
  const GenSolReport rep = generalized_solution(system, system.seed(), g);

  const fs::path dir = output_dir(options, problem);
  for (std::size_t i = 0; i < rep.clouds.size(); ++i) {
    auto csv = open_out(dir / ("cloud_r" + std::to_string(i + 1) + ".csv"));
    write_cloud_csv(csv, rep.clouds[i]);
  }
  {
    auto csv = open_out(dir / "limit.csv");
    write_cloud_csv(csv, rep.limit);
  }
  {
    auto gp = open_out(dir / "gensol.gp");
    write_gnuplot(gp, rep, system.dim());
  }
  const double residual_tol = options.tol.value_or(problem.checks.gensol_residual_tol);
  const double seed_bound = rep.radii.back() + problem.checks.seed_slack;
  const bool pass = rep.max_residual <= residual_tol && rep.seed_distance <= seed_bound;
  json j = to_json(rep);
  j["command"] = "gensol";
  j["residual_tol"] = residual_tol;
  j["seed_distance_bound"] = seed_bound;
  j["pass"] = pass;
  {
    auto file = open_out(dir / "gensol.json");
    file << j.dump(2) << '\n';
  }
  print_report(j, options.format, out);
  if (!pass) {
    err << "CheckFailed: limit cloud misses x0 or violates the residual bound\n";
    return exit_code::check_failed;
  }
  return exit_code::ok;
}

int cmd_variations(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  auto log = logger();
  const ProblemFile problem = load_problem(options.problem);
  if (problem.dim != 3 || problem.codim != 1)
    fail(ErrorKind::UnsupportedDimension,
         "variations support d = 3, l = 1 only (see docs/formats.md, [variations])");
  if (!problem.perturbation) fail(ErrorKind::InvalidArgument, "problem file: variations need 'perturbation'");
  const ImplicitSystem system = problem.system();
  const ScalarField bump = parse(*problem.perturbation, 3);
  const std::vector<double> lambdas = options.lambdas.empty() ? problem.variations.lambdas : options.lambdas;
  if (lambdas.empty()) fail(ErrorKind::InvalidArgument, "no lambdas given ([variations] lambdas or --lambda)");
  const auto spans = require(problem.chain.spans, "[chain] spans");
  const auto steps = require(problem.chain.steps, "[chain] steps");
  const ParamGrid base = hamiltonian_chain_3d(system, spans, steps, options.threads);
  log->info("base chain has {} nodes", base.size());
  const ConvergenceReport rep = convergence_report(system, bump, base, lambdas, options.threads);

  const fs::path dir = output_dir(options, problem);
  {
    auto csv = open_out(dir / "convergence.csv");
    write_convergence_csv(csv, rep);
  }
  if (options.format == Format::Json)
    out << to_json(rep).dump(2) << '\n';
  else
    write_convergence_csv(out, rep);
  if (!rep.decreasing) {
    err << "CheckFailed: errors do not decrease along the lambda sequence\n";
    return exit_code::check_failed;
  }
  return exit_code::ok;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trace solution sets of implicit systems F_j(x) = 0 by iterated ODE chains.", "implicit_trace"};
  app.require_subcommand(1);
  CommandOptions options;
  std::string format = "csv";

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--problem", options.problem, "Problem file (.toml or .json)")->required();
    sub->add_option("--out", options.out, "Output directory (default: [output] dir)");
    sub->add_option("--tol", options.tol, "Residual tolerance override");
    sub->add_option("--threads", options.threads, "Worker cap, 0 = all cores");
    sub->add_option("--format", format, "Report format on stdout")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* parametrize = app.add_subcommand("parametrize", "Integrate the chain and check the grid");
  auto* gensol = app.add_subcommand("gensol", "Approximate the generalized solution at a critical seed");
  auto* variations = app.add_subcommand("variations", "Convergence of difference quotients (d = 3, l = 1)");
  auto* verify = app.add_subcommand("verify", "Re-check a cached grid");
  for (auto* sub : {parametrize, gensol, variations, verify}) common(sub);
  variations->add_option("--lambda", options.lambdas, "Perturbation size, repeatable");
  verify->add_option("--grid", options.grid, "Cached grid (default: <out>/grid.bin)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::usage;
  }
  options.format = format == "json" ? Format::Json : Format::Csv;

  try {
    if (parametrize->parsed()) return cmd_parametrize(options, out, err);
    if (gensol->parsed()) return cmd_gensol(options, out, err);
    if (variations->parsed()) return cmd_variations(options, out, err);
    return cmd_verify(options, out, err);
  } catch (const Error& e) {
    err << e.name() << ": " << e.what() << '\n';
    if (e.kind() == ErrorKind::RankDeficient || e.kind() == ErrorKind::SingularMinor)
      err << "hint: the seed looks critical; try `implicit_trace gensol`\n";
    else if (e.kind() == ErrorKind::NotCritical)
      err << "hint: the seed is regular; use `implicit_trace parametrize`\n";
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    err << "InvalidArgument: problem file: " << e.what() << '\n';
    return exit_code::usage;
  } catch (const fs::filesystem_error& e) {
    err << "IoError: " << e.what() << '\n';
    return exit_code::usage;
  } catch (const std::exception& e) {
    err << "RuntimeError: " << e.what() << '\n';
    return exit_code::runtime;
  }
}

}  // namespace implicit::cli

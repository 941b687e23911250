#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "implicit/integrate.hpp"

namespace implicit::cli {

struct ProblemFile {
  std::filesystem::path source;
  std::string name;
  std::size_t dim = 0;
  std::size_t codim = 0;
  std::vector<std::string> expressions;
  std::optional<std::string> perturbation;
  std::vector<double> seed;
  double seed_tol = ImplicitSystem::kDefaultSeedTol;
  std::vector<double> domain_lo;
  std::vector<double> domain_hi;

  struct Chain {
    std::vector<double> spans;
    std::vector<double> steps;
    FieldMode mode = FieldMode::IdentityCompletion;
  } chain;

  struct GenSol {
    std::vector<double> radii;
    std::size_t per_radius = 8;
    std::vector<double> window_lo;  // empty: the domain
    std::vector<double> window_hi;
    std::size_t budget = 2'000'000;
    double step = 1e-3;
    std::size_t chunk = 64;
    FieldMode mode = FieldMode::IdentityCompletion;
    double trace_tol = 1e-8;
    std::optional<double> eps_stop;
  } gensol;

  struct Variations {
    std::vector<double> lambdas;
  } variations;

  struct Checks {
    double residual_tol = 1e-8;
    double regularity_tol = 1e-5;
    double gensol_residual_tol = 1e-6;
    /// Allowed excess of dist(x0, limit) over the smallest radius.
    double seed_slack = 1e-2;
  } checks;

  std::filesystem::path output_dir = "out";

  ImplicitSystem system() const;
  Box domain() const;
  Box window() const;
};

/// Schema is documented in docs/formats.md. Throws Error(Io) when the file
/// cannot be read and Error(InvalidArgument) on schema violations.
ProblemFile parse_problem(const nlohmann::json& doc, const std::filesystem::path& source = {});
/// `.json` files are read as JSON, everything else as TOML.
ProblemFile load_problem(const std::filesystem::path& path);

}  // namespace implicit::cli

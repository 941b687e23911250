#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "implicit/expr.hpp"

namespace implicit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box [lo, hi] in R^d.
struct Box {
  Vector lo;
  Vector hi;

  Box() = default;
  Box(Vector lower, Vector upper);
  static Box around(const Vector& center, double half_width);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lo.size()); }
  bool contains(std::span<const double> x) const;
  bool strictly_contains(std::span<const double> x) const;
  Box intersect(const Box& other) const;
};

/// F_j(x) = c_j, j = 1..l in R^d with a seed point x0 on the solution set.
/// The levels c_j are zero for the original problem; shifted() produces the
/// level-set systems traced at regular points near a critical seed.
class ImplicitSystem {
 public:
  static constexpr double kDefaultSeedTol = 1e-10;

  ImplicitSystem(std::vector<ScalarField> fields, Box domain, Vector seed,
                 double seed_tol = kDefaultSeedTol);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t codim() const noexcept { return fields_.size(); }
  std::size_t params() const noexcept { return dim_ - fields_.size(); }
  const std::vector<ScalarField>& fields() const noexcept { return fields_; }
  const ScalarField& field(std::size_t j) const { return fields_.at(j); }
  const Box& domain() const noexcept { return domain_; }
  const Vector& seed() const noexcept { return seed_; }
  const Vector& levels() const noexcept { return levels_; }

  /// F_j(x) - c_j for every j.
  Vector residual(std::span<const double> x) const;

  /// The system F_j(x) = F_j(new_seed), seeded at new_seed.
  ImplicitSystem shifted(const Vector& new_seed) const;

 private:
  ImplicitSystem() = default;

  std::size_t dim_ = 0;
  std::vector<ScalarField> fields_;
  Box domain_;
  Vector seed_;
  Vector levels_;
};

}  // namespace implicit

#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "implicit/integrate.hpp"

namespace implicit {

struct ResidualReport {
  std::size_t codim = 0;
  /// |F_j(y(node)) - c_j| node-major: values[node * codim + j].
  std::vector<double> values;
  /// Per-field maxima over the grid.
  std::vector<double> max;

  double overall_max() const;
};

ResidualReport residuals(const ParamGrid& grid, const ImplicitSystem& system, unsigned threads = 0);

/// d x (d-l) derivative matrices B of the parametrization, one per node.
class ParamJacobians {
 public:
  ParamJacobians() = default;
  ParamJacobians(std::size_t dim, std::size_t params, std::size_t nodes)
      : dim_(dim), params_(params), data_(dim * params * nodes, 0.0) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t params() const noexcept { return params_; }
  std::size_t size() const noexcept { return dim_ * params_ == 0 ? 0 : data_.size() / (dim_ * params_); }

  Eigen::Map<const Matrix> at(std::size_t node) const {
    return {data_.data() + node * dim_ * params_, static_cast<Eigen::Index>(dim_),
            static_cast<Eigen::Index>(params_)};
  }
  Eigen::Map<Matrix> at(std::size_t node) {
    return {data_.data() + node * dim_ * params_, static_cast<Eigen::Index>(dim_),
            static_cast<Eigen::Index>(params_)};
  }

 private:
  std::size_t dim_ = 0;
  std::size_t params_ = 0;
  std::vector<double> data_;
};

/// Central differences inside, second-order one-sided differences on faces.
/// Throws GridTooSmall when a direction has fewer than 3 nodes.
ParamJacobians jacobian_of_parametrization(const ParamGrid& grid, unsigned threads = 0);

struct RegularityReport {
  double min_det = 0.0;
  double max_det = 0.0;
  double max_deviation = 0.0;  // max |det M - 1|
  std::size_t worst_node = 0;

  bool pass(double tol) const { return max_deviation <= tol; }
};

/// det of the trailing block of B (rows perm[l..d-1]) at every node.
/// Throws WrongMode unless the grid was built with identity-completion fields.
RegularityReport regularity_check(const ParamGrid& grid, unsigned threads = 0);
RegularityReport regularity_check(const ParamGrid& grid, const ParamJacobians& b);

struct InjectivityOptions {
  double separation_factor = 2.0;
  /// Exhaustive pairwise comparison below this many nodes.
  std::size_t exhaustive_limit = 20000;
  /// Hashed mode compares only pairs whose images lie closer than
  /// bound * neighbourhood, with neighbourhood = this factor times the
  /// largest step.
  double neighbourhood_factor = 8.0;
  unsigned threads = 0;
};

struct InjectivityReport {
  bool injective = true;
  /// min over nodes of sigma_min(B) divided by the separation factor.
  double bound = 0.0;
  /// Smallest |y(a) - y(b)| / |t(a) - t(b)| among the compared pairs.
  double min_ratio = 0.0;
  /// Violating pair (a < b) with the smallest ratio.
  std::optional<std::pair<std::size_t, std::size_t>> witness;
  bool exhaustive = true;
};

InjectivityReport injectivity_check(const ParamGrid& grid, const InjectivityOptions& options = {});
InjectivityReport injectivity_check(const ParamGrid& grid, const ParamJacobians& b,
                                    const InjectivityOptions& options = {});

struct VerificationReport {
  std::vector<double> max_residual;
  /// Present only for identity-completion grids.
  std::optional<RegularityReport> regularity;
  std::size_t min_rank_b = 0;
  InjectivityReport injectivity;
};

VerificationReport verify_grid(const ParamGrid& grid, const ImplicitSystem& system,
                               const InjectivityOptions& options = {});

}  // namespace implicit

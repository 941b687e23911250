#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "implicit/linsolve.hpp"
#include "implicit/system.hpp"

namespace implicit {

enum class FieldMode {
  IdentityCompletion,  // trailing components fixed to identity rows
  Scaled,              // identity completion multiplied by det A
  Hamiltonian,         // (-F_2, F_1) in 2D; (-F_2, F_1, 0), (-F_3, 0, F_1) in 3D
};

std::string_view to_string(FieldMode mode) noexcept;
/// Accepts "identity", "scaled", "hamiltonian".
FieldMode parse_field_mode(std::string_view text);

struct ChainConfig {
  /// Half-widths of the symmetric parameter intervals [-span_j, span_j].
  std::vector<double> spans;
  /// RK4 step per direction; span_j / step_j must be an integer.
  std::vector<double> steps;
  FieldMode mode = FieldMode::IdentityCompletion;
  /// Chosen at the seed by greedy pivoting when empty, then frozen.
  std::optional<VariablePermutation> perm;
  double minor_rel_tol = kDefaultMinorTol;
  /// Worker cap, 0 = hardware concurrency.
  unsigned threads = 0;
};

/// Tensor grid of chain points y(t_1, ..., t_{d-l}). Nodes are stored
/// row-major in the parameter multi-index (t_1 slowest); node m has
/// parameters t_j = (m_j - N_j) * h_j.
class ParamGrid {
 public:
  ParamGrid() = default;
  ParamGrid(std::size_t dim, std::vector<std::size_t> half_counts, std::vector<double> steps,
            FieldMode mode, VariablePermutation perm, double minor_rel_tol = kDefaultMinorTol);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t codim() const noexcept { return perm_.leading(); }
  std::size_t params() const noexcept { return half_.size(); }
  std::size_t size() const noexcept { return nodes_; }

  const std::vector<std::size_t>& half_counts() const noexcept { return half_; }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  const std::vector<double>& steps() const noexcept { return steps_; }
  double span(std::size_t j) const { return static_cast<double>(half_[j]) * steps_[j]; }
  std::size_t stride(std::size_t j) const { return strides_[j]; }

  FieldMode mode() const noexcept { return mode_; }
  const VariablePermutation& perm() const noexcept { return perm_; }
  double minor_rel_tol() const noexcept { return minor_rel_tol_; }

  std::size_t flat(std::span<const std::size_t> multi) const;
  std::vector<std::size_t> multi(std::size_t flat) const;
  std::size_t origin() const;
  double param(std::size_t j, std::size_t index) const {
    return (static_cast<double>(index) - static_cast<double>(half_[j])) * steps_[j];
  }
  std::vector<double> params_at(std::size_t flat) const;

  std::span<const double> point(std::size_t flat) const { return {points_.data() + flat * dim_, dim_}; }
  std::span<double> point(std::size_t flat) { return {points_.data() + flat * dim_, dim_}; }
  const std::vector<double>& data() const noexcept { return points_; }
  std::vector<double>& data() noexcept { return points_; }

  /// Same shape, steps, mode and permutation.
  bool same_layout(const ParamGrid& other) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> half_;
  std::vector<std::size_t> shape_;
  std::vector<std::size_t> strides_;
  std::vector<double> steps_;
  std::size_t nodes_ = 0;
  FieldMode mode_ = FieldMode::IdentityCompletion;
  VariablePermutation perm_;
  double minor_rel_tol_ = kDefaultMinorTol;
  std::vector<double> points_;
};

struct ExistenceOptions {
  FieldMode mode = FieldMode::IdentityCompletion;
  /// Tensor sampling resolution of the outer box, endpoints included.
  std::size_t samples_per_axis = 9;
  /// Outer neighbourhood V; defaults to the box of half-width sum(margins)
  /// around the seed, clipped to the domain.
  std::optional<Box> outer;
  std::optional<VariablePermutation> perm;
  double minor_rel_tol = kDefaultMinorTol;
};

/// span_j = b_j / M with M the largest frame-vector norm sampled over V.
/// Sampling can under-estimate M for fields that oscillate between samples.
std::vector<double> existence_intervals(const ImplicitSystem& system,
                                        std::span<const double> nested_margins,
                                        const ExistenceOptions& options = {});

/// Iterated chain: direction 1 from the seed, then direction j from every
/// node produced so far, classical RK4 with the j-th frame vector
/// re-evaluated at each stage point.
ParamGrid integrate_chain(const ImplicitSystem& system, const ChainConfig& config);

/// Extends direction `direction` by extra_span on both sides, continuing the
/// existing trajectories; later directions are integrated for the new nodes.
ParamGrid resume_chain(const ImplicitSystem& system, const ParamGrid& grid, std::size_t direction,
                       double extra_span, unsigned threads = 0);

}  // namespace implicit

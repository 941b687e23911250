#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "implicit/system.hpp"

namespace implicit {

/// Column order of the Jacobian. The first `leading()` entries name the
/// variables whose columns form the nonsingular minor A; the remaining ones
/// are completed with identity rows.
class VariablePermutation {
 public:
  VariablePermutation() = default;
  VariablePermutation(std::vector<std::size_t> order, std::size_t leading);
  static VariablePermutation identity(std::size_t dim, std::size_t leading);

  std::size_t size() const noexcept { return order_.size(); }
  std::size_t leading() const noexcept { return leading_; }
  std::size_t trailing() const noexcept { return order_.size() - leading_; }
  /// Variable (0-based) placed at position k.
  std::size_t operator[](std::size_t k) const { return order_[k]; }
  /// Position of variable `var`.
  std::size_t position(std::size_t var) const { return inverse_[var]; }
  const std::vector<std::size_t>& order() const noexcept { return order_; }
  bool is_identity() const noexcept;

  friend bool operator==(const VariablePermutation& a, const VariablePermutation& b) {
    return a.order_ == b.order_ && a.leading_ == b.leading_;
  }

 private:
  std::vector<std::size_t> order_;
  std::vector<std::size_t> inverse_;
  std::size_t leading_ = 0;
};

/// d-l vectors spanning the tangent space, stored as the columns of a
/// d x (d-l) matrix.
struct TangentFrame {
  Matrix vectors;
  double det_a = 0.0;
  bool scaled = false;
};

inline constexpr double kDefaultMinorTol = 1e-8;

/// Row j is the gradient of F_j at point.
Matrix jacobian(const ImplicitSystem& system, std::span<const double> point);

/// Closed form for n <= 3, LU with partial pivoting above.
double determinant(const Matrix& a);
/// Cramer's rule for n <= 3, LU with partial pivoting above. Throws
/// SingularMinor when the matrix is exactly singular.
Vector solve(const Matrix& a, const Vector& b);

/// rel_tol times the largest column norm of jac.
double minor_tolerance(const Matrix& jac, double rel_tol = kDefaultMinorTol);

/// The l x l block of jac formed by the leading columns of perm.
Matrix leading_minor(const Matrix& jac, const VariablePermutation& perm);

/// Greedy column pivoting over the rows of jac (partial-pivoted LU order).
/// Leading columns are the pivots in pivot order; trailing variables stay in
/// ascending order. Throws RankDeficient when |det A| <= tol (default:
/// kDefaultMinorTol times the largest column norm).
VariablePermutation select_permutation(const Matrix& jac, std::optional<double> tol = std::nullopt);

/// Number of pivots above rel_tol * (largest column norm) under the same
/// column-pivoted elimination.
std::size_t numerical_rank(const Matrix& jac, double rel_tol = kDefaultMinorTol);

/// Identity-completion tangent vector i (0-based) into `out`: trailing
/// components are the i-th identity row, leading ones solve A w = -b_i.
/// Scaled mode multiplies by det A (computed through Cramer numerators, so it
/// stays defined when det A = 0). Returns det A.
double tangent_vector(const Matrix& jac, const VariablePermutation& perm, std::size_t i, bool scaled,
                      double tol, std::span<double> out);

TangentFrame tangent_fields(const Matrix& jac, const VariablePermutation& perm, bool scaled,
                            std::optional<double> tol = std::nullopt);
TangentFrame tangent_fields(const ImplicitSystem& system, std::span<const double> point,
                            const VariablePermutation& perm, bool scaled,
                            std::optional<double> tol = std::nullopt);

/// Hamiltonian fields from a gradient: d = 2 gives (-g2, g1); d = 3 gives
/// (-g2, g1, 0) and (-g3, 0, g1).
void hamiltonian_vector(std::span<const double> grad, std::size_t i, std::span<double> out);
TangentFrame hamiltonian_frame(const ImplicitSystem& system, std::span<const double> point);

}  // namespace implicit

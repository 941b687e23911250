#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace implicit {

namespace detail {
struct Tree;
}

/// A scalar function R^d -> R parsed from the expression language documented
/// in docs/grammar.md. Immutable once parsed; copies share the tree and may be
/// evaluated concurrently.
///
/// Gradients and Hessians come from forward-mode automatic differentiation of
/// the active piecewise branch. Continuity of derivatives across branch
/// boundaries is the caller's responsibility.
class ScalarField {
 public:
  ScalarField() = default;

  std::size_t dim() const noexcept { return dim_; }
  const std::string& source() const noexcept { return source_; }
  /// Highest variable index referenced in the expression (0 for constants).
  std::size_t max_variable() const noexcept;
  bool empty() const noexcept { return tree_ == nullptr; }

  double eval(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  Eigen::VectorXd gradient(std::span<const double> x) const;
  /// Symmetric by construction: only the upper triangle is differentiated.
  Eigen::MatrixXd hessian(std::span<const double> x) const;

  /// Canonical text form; parse(print()) reproduces the same tree.
  std::string print() const;

  /// Structural equality of the expression trees.
  bool same_tree(const ScalarField& other) const;

  friend ScalarField parse(std::string_view source, std::size_t dim);

 private:
  std::shared_ptr<const detail::Tree> tree_;
  std::size_t dim_ = 0;
  std::string source_;
};

/// Grammar: + - * / ^(integer literal), parentheses, unary minus, x1..xd,
/// numeric literals, sin cos exp log sqrt abs min max, and
/// `piecewise{ cond : expr ; ... ; otherwise : expr }` with conditions built
/// from < <= > >= and/or. Throws SyntaxError (kinds Syntax,
/// UnknownIdentifier, VariableIndex) with the offending offset.
ScalarField parse(std::string_view source, std::size_t dim);

inline std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<double> as_span(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace implicit

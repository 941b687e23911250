#include "implicit/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include <Eigen/LU>

#include "implicit/error.hpp"

namespace implicit {

VariablePermutation::VariablePermutation(std::vector<std::size_t> order, std::size_t leading)
    : order_(std::move(order)), inverse_(order_.size(), order_.size()), leading_(leading) {
  if (leading_ > order_.size())
    fail(ErrorKind::InvalidArgument, "permutation leading count exceeds its size");
  for (std::size_t k = 0; k < order_.size(); ++k) {
    const std::size_t v = order_[k];
    if (v >= order_.size() || inverse_[v] != order_.size())
      fail(ErrorKind::InvalidArgument, "not a permutation of 0..d-1");
    inverse_[v] = k;
  }
}

VariablePermutation VariablePermutation::identity(std::size_t dim, std::size_t leading) {
  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return {std::move(order), leading};
}

bool VariablePermutation::is_identity() const noexcept {
  for (std::size_t k = 0; k < order_.size(); ++k)
    if (order_[k] != k) return false;
  return true;
}

Matrix jacobian(const ImplicitSystem& system, std::span<const double> point) {
  const auto l = static_cast<Eigen::Index>(system.codim());
  const auto d = static_cast<Eigen::Index>(system.dim());
  // Row-major scratch so each gradient lands contiguously.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(l, d);
  for (Eigen::Index j = 0; j < l; ++j)
    system.field(static_cast<std::size_t>(j))
        .gradient(point, std::span<double>(rows.row(j).data(), static_cast<std::size_t>(d)));
  return rows;
}

namespace {

double det2(double a, double b, double c, double d) { return a * d - b * c; }

double det_small(const Matrix& a) {
  switch (a.rows()) {
    case 0: return 1.0;
    case 1: return a(0, 0);
    case 2: return det2(a(0, 0), a(0, 1), a(1, 0), a(1, 1));
    case 3:
      return a(0, 0) * det2(a(1, 1), a(1, 2), a(2, 1), a(2, 2)) -
             a(0, 1) * det2(a(1, 0), a(1, 2), a(2, 0), a(2, 2)) +
             a(0, 2) * det2(a(1, 0), a(1, 1), a(2, 0), a(2, 1));
    default: break;
  }
  return Eigen::PartialPivLU<Matrix>(a).determinant();
}

// det of `a` with column k replaced by rhs.
double replaced_det(const Matrix& a, Eigen::Index k, const Vector& rhs) {
  Matrix m = a;
  m.col(k) = rhs;
  return det_small(m);
}

// Column-pivoted elimination shared by select_permutation and numerical_rank.
struct Pivoting {
  std::vector<std::size_t> order;
  std::vector<double> pivots;
};

Pivoting pivot_columns(const Matrix& jac) {
  Matrix u = jac;
  const auto l = u.rows();
  const auto d = u.cols();
  Pivoting p;
  p.order.resize(static_cast<std::size_t>(d));
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  for (Eigen::Index k = 0; k < std::min(l, d); ++k) {
    Eigen::Index best = k;
    double best_abs = std::abs(u(k, k));
    for (Eigen::Index c = k + 1; c < d; ++c) {
      if (std::abs(u(k, c)) > best_abs) {
        best = c;
        best_abs = std::abs(u(k, c));
      }
    }
    if (best != k) {
      u.col(k).swap(u.col(best));
      std::swap(p.order[static_cast<std::size_t>(k)], p.order[static_cast<std::size_t>(best)]);
    }
    p.pivots.push_back(u(k, k));
    if (u(k, k) == 0.0) continue;
    for (Eigen::Index i = k + 1; i < l; ++i) {
      const double factor = u(i, k) / u(k, k);
      u.row(i) -= factor * u.row(k);
      u(i, k) = 0.0;
    }
  }
  return p;
}

}  // namespace

double determinant(const Matrix& a) {
  if (a.rows() != a.cols()) fail(ErrorKind::InvalidArgument, "determinant of non-square matrix");
  return det_small(a);
}

Vector solve(const Matrix& a, const Vector& b) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    fail(ErrorKind::InvalidArgument, "solve: dimension mismatch");
  const auto n = a.rows();
  if (n <= 3) {
    const double det = det_small(a);
    if (det == 0.0) fail(ErrorKind::SingularMinor, "singular matrix in Cramer solve");
    Vector x(n);
    for (Eigen::Index k = 0; k < n; ++k) x[k] = replaced_det(a, k, b) / det;
    return x;
  }
  Eigen::PartialPivLU<Matrix> lu(a);
  if (lu.determinant() == 0.0) fail(ErrorKind::SingularMinor, "singular matrix in LU solve");
  return lu.solve(b);
}

double minor_tolerance(const Matrix& jac, double rel_tol) {
  double max_norm = 0.0;
  for (Eigen::Index c = 0; c < jac.cols(); ++c) max_norm = std::max(max_norm, jac.col(c).norm());
  return rel_tol * max_norm;
}

Matrix leading_minor(const Matrix& jac, const VariablePermutation& perm) {
  const auto l = static_cast<Eigen::Index>(perm.leading());
  if (jac.rows() != l || static_cast<std::size_t>(jac.cols()) != perm.size())
    fail(ErrorKind::InvalidArgument, "Jacobian shape does not match permutation");
  Matrix a(l, l);
  for (Eigen::Index k = 0; k < l; ++k) a.col(k) = jac.col(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(k)]));
  return a;
}

VariablePermutation select_permutation(const Matrix& jac, std::optional<double> tol) {
  const auto l = static_cast<std::size_t>(jac.rows());
  const auto d = static_cast<std::size_t>(jac.cols());
  if (l == 0 || l >= d) fail(ErrorKind::InvalidArgument, "Jacobian must be l x d with 1 <= l < d");
  const Pivoting p = pivot_columns(jac);
  std::vector<std::size_t> order(p.order.begin(), p.order.begin() + static_cast<std::ptrdiff_t>(l));
  std::vector<std::size_t> rest(p.order.begin() + static_cast<std::ptrdiff_t>(l), p.order.end());
  std::sort(rest.begin(), rest.end());
  order.insert(order.end(), rest.begin(), rest.end());
  VariablePermutation perm(std::move(order), l);
  const double threshold = tol.value_or(minor_tolerance(jac));
  const double det = det_small(leading_minor(jac, perm));
  if (!(std::abs(det) > threshold))
    fail(ErrorKind::RankDeficient, "no l x l minor of the Jacobian exceeds tolerance (|det A| = " +
                                       std::to_string(std::abs(det)) +
                                       "); critical point, use the generalized-solution path");
  return perm;
}

std::size_t numerical_rank(const Matrix& jac, double rel_tol) {
  const double threshold = minor_tolerance(jac, rel_tol);
  if (!(threshold > 0.0) && rel_tol > 0.0) return 0;
  const Pivoting p = pivot_columns(jac);
  std::size_t rank = 0;
  for (double piv : p.pivots)
    if (std::abs(piv) > threshold) ++rank;
  return rank;
}

double tangent_vector(const Matrix& jac, const VariablePermutation& perm, std::size_t i, bool scaled,
                      double tol, std::span<double> out) {
  const std::size_t l = perm.leading();
  const std::size_t d = perm.size();
  if (i >= d - l) fail(ErrorKind::InvalidArgument, "tangent vector index out of range");
  const Matrix a = leading_minor(jac, perm);
  const Vector rhs = -jac.col(static_cast<Eigen::Index>(perm[l + i]));
  const double det = det_small(a);
  if (!scaled && !(std::abs(det) > tol))
    fail(ErrorKind::SingularMinor, "minor A is singular (|det A| = " + std::to_string(std::abs(det)) + ")");
  for (std::size_t m = 0; m < d - l; ++m) out[perm[l + m]] = (m == i) ? (scaled ? det : 1.0) : 0.0;
  if (scaled) {
    for (std::size_t k = 0; k < l; ++k)
      out[perm[k]] = replaced_det(a, static_cast<Eigen::Index>(k), rhs);
  } else if (l <= 3) {
    for (std::size_t k = 0; k < l; ++k)
      out[perm[k]] = replaced_det(a, static_cast<Eigen::Index>(k), rhs) / det;
  } else {
    const Vector w = Eigen::PartialPivLU<Matrix>(a).solve(rhs);
    for (std::size_t k = 0; k < l; ++k) out[perm[k]] = w[static_cast<Eigen::Index>(k)];
  }
  return det;
}

TangentFrame tangent_fields(const Matrix& jac, const VariablePermutation& perm, bool scaled,
                            std::optional<double> tol) {
  const std::size_t d = perm.size();
  const std::size_t k = d - perm.leading();
  const double threshold = tol.value_or(minor_tolerance(jac));
  TangentFrame frame;
  frame.scaled = scaled;
  frame.vectors.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    auto col = frame.vectors.col(static_cast<Eigen::Index>(i));
    frame.det_a = tangent_vector(jac, perm, i, scaled, threshold, std::span<double>(col.data(), d));
  }
  return frame;
}

TangentFrame tangent_fields(const ImplicitSystem& system, std::span<const double> point,
                            const VariablePermutation& perm, bool scaled, std::optional<double> tol) {
  return tangent_fields(jacobian(system, point), perm, scaled, tol);
}

void hamiltonian_vector(std::span<const double> grad, std::size_t i, std::span<double> out) {
  if (grad.size() == 2 && i == 0) {
    out[0] = -grad[1];
    out[1] = grad[0];
  } else if (grad.size() == 3 && i < 2) {
    if (i == 0) {
      out[0] = -grad[1];
      out[1] = grad[0];
      out[2] = 0.0;
    } else {
      out[0] = -grad[2];
      out[1] = 0.0;
      out[2] = grad[0];
    }
  } else {
    fail(ErrorKind::UnsupportedDimension, "Hamiltonian fields exist only for d = 2 or d = 3 with l = 1");
  }
}

TangentFrame hamiltonian_frame(const ImplicitSystem& system, std::span<const double> point) {
  const std::size_t d = system.dim();
  if (system.codim() != 1 || (d != 2 && d != 3))
    fail(ErrorKind::UnsupportedDimension, "Hamiltonian fields exist only for d = 2 or d = 3 with l = 1");
  const Vector g = system.field(0).gradient(point);
  TangentFrame frame;
  frame.scaled = true;
  frame.det_a = g[0];
  frame.vectors.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d - 1));
  for (std::size_t i = 0; i + 1 < d; ++i) {
    auto col = frame.vectors.col(static_cast<Eigen::Index>(i));
    hamiltonian_vector(as_span(g), i, std::span<double>(col.data(), d));
  }
  return frame;
}

}  // namespace implicit

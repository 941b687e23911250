#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "implicit/integrate.hpp"

namespace implicit {

/// F + lambda * h in R^3 with h(x0) = 0, sharing the base system's domain
/// and seed.
class PerturbedSystem {
 public:
  PerturbedSystem(ImplicitSystem base, ScalarField bump, double lambda);

  const ImplicitSystem& base() const noexcept { return base_; }
  const ScalarField& bump() const noexcept { return bump_; }
  double lambda() const noexcept { return lambda_; }

  double eval(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;

 private:
  ImplicitSystem base_;
  ScalarField bump_;
  double lambda_;
};

/// Two-stage chain with the fields (-F_2, F_1, 0) then (-F_3, 0, F_1).
/// Throws UnsupportedDimension unless d = 3, l = 1, and DegenerateSeed when
/// F_1(x0) vanishes (reorder the variables so that x1 carries a nonzero
/// partial derivative).
ParamGrid hamiltonian_chain_3d(const ImplicitSystem& system, std::span<const double> spans,
                               std::span<const double> steps, unsigned threads = 0);

/// Same chain for F + lambda h. lambda = 0 delegates to hamiltonian_chain_3d.
ParamGrid perturbed_chain(const PerturbedSystem& psys, std::span<const double> spans,
                          std::span<const double> steps, unsigned threads = 0);

/// Six functions attached to a (t, s) base grid.
/// stage1[i * 3 + c]: component c of (x1~, x2~, x3~) at t-node i.
/// stage2[node * 3 + c]: component c of (phi~, psi~, xi~) at grid node
/// `node` (same layout as the base ParamGrid).
struct VariationGrid {
  std::vector<std::size_t> shape;
  std::vector<double> steps;
  std::vector<double> stage1;
  std::vector<double> stage2;

  std::size_t t_nodes() const { return shape.at(0); }
  std::size_t nodes() const { return shape.at(0) * shape.at(1); }
};

/// (pert - base) / lambda on the stage-1 slice and the full grid. Throws
/// ShapeMismatch for different layouts and ZeroLambda for lambda = 0.
VariationGrid difference_quotients(const ParamGrid& base, const ParamGrid& pert, double lambda);

/// RK4 on the linear variation systems along the base trajectories.
/// Coefficients come from the Hessian of F and gradient of h at base nodes;
/// RK4 half-steps use the average of the two adjacent nodes. x3~ = 0 and
/// psi~(t, s) = x2~(t) hold exactly. Throws WrongBaseMode unless `base` is a
/// three-dimensional Hamiltonian chain.
VariationGrid variation_chain(const ScalarField& f, const ScalarField& bump, const ParamGrid& base,
                              unsigned threads = 0);

struct ConvergenceRow {
  double lambda = 0.0;
  double stage1[3] = {0.0, 0.0, 0.0};
  double stage2[3] = {0.0, 0.0, 0.0};
  /// Max over the six components.
  double total = 0.0;
  /// log(total_prev / total) / log(lambda_prev / lambda); NaN on the first
  /// row or when either error is zero.
  double order = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  /// Each total is below its predecessor, or both are zero.
  bool decreasing = true;
};

/// Sup-norm gap between difference quotients and the variation chain for
/// each lambda (decreasing, positive). The perturbed chains reuse the base
/// grid's spans and steps.
ConvergenceReport convergence_report(const ImplicitSystem& system, const ScalarField& bump,
                                     const ParamGrid& base, std::span<const double> lambdas,
                                     unsigned threads = 0);

/// Header lambda,err_x1,err_x2,err_x3,err_phi,err_psi,err_xi,err_max,order.
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);

}  // namespace implicit

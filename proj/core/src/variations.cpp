#include "implicit/variations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "chain_core.hpp"
#include "implicit/error.hpp"
#include "implicit/grid_io.hpp"
#include "parallel.hpp"

namespace implicit {

namespace {

void require_3d(const ImplicitSystem& system) {
  if (system.dim() != 3 || system.codim() != 1)
    fail(ErrorKind::UnsupportedDimension, "functional variations are implemented for d = 3, l = 1 only");
}

void require_nondegenerate(std::span<const double> grad) {
  const double norm = std::sqrt(grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]);
  if (!(std::abs(grad[0]) > kDefaultMinorTol * norm))
    fail(ErrorKind::DegenerateSeed,
         "F_1 vanishes at the seed; reorder the variables so that x1 has a nonzero partial derivative");
}

}  // namespace

PerturbedSystem::PerturbedSystem(ImplicitSystem base, ScalarField bump, double lambda)
    : base_(std::move(base)), bump_(std::move(bump)), lambda_(lambda) {
  require_3d(base_);
  if (bump_.dim() != 3) fail(ErrorKind::InvalidArgument, "perturbation must be a function of x1, x2, x3");
  if (!std::isfinite(lambda_)) fail(ErrorKind::InvalidArgument, "lambda must be finite");
  const double h0 = bump_.eval(as_span(base_.seed()));
  if (!(std::abs(h0) <= ImplicitSystem::kDefaultSeedTol))
    fail(ErrorKind::InvalidArgument, "perturbation must vanish at the seed, h(x0) = " + format_double(h0));
}

double PerturbedSystem::eval(std::span<const double> x) const {
  return base_.field(0).eval(x) + lambda_ * bump_.eval(x);
}

void PerturbedSystem::gradient(std::span<const double> x, std::span<double> out) const {
  base_.field(0).gradient(x, out);
  if (lambda_ == 0.0) return;
  double g[3];
  bump_.gradient(x, g);
  for (std::size_t i = 0; i < 3; ++i) out[i] += lambda_ * g[i];
}

ParamGrid hamiltonian_chain_3d(const ImplicitSystem& system, std::span<const double> spans,
                               std::span<const double> steps, unsigned threads) {
  require_3d(system);
  require_nondegenerate(as_span(system.field(0).gradient(as_span(system.seed()))));
  ChainConfig config;
  config.spans.assign(spans.begin(), spans.end());
  config.steps.assign(steps.begin(), steps.end());
  config.mode = FieldMode::Hamiltonian;
  config.threads = threads;
  return integrate_chain(system, config);
}

ParamGrid perturbed_chain(const PerturbedSystem& psys, std::span<const double> spans,
                          std::span<const double> steps, unsigned threads) {
  if (psys.lambda() == 0.0) return hamiltonian_chain_3d(psys.base(), spans, steps, threads);
  const ImplicitSystem& base = psys.base();
  double g0[3];
  psys.gradient(as_span(base.seed()), g0);
  require_nondegenerate(g0);
  auto half = detail::half_counts(spans, steps, 2);
  const detail::StageField field = [&psys](std::size_t stage, std::span<const double> y, std::span<double> out) {
    double g[3];
    psys.gradient(y, g);
    hamiltonian_vector(std::span<const double>(g, 3), stage, out);
  };
  return detail::run_chain(field, base.domain(), base.seed(), std::move(half),
                           std::vector<double>(steps.begin(), steps.end()), FieldMode::Hamiltonian,
                           VariablePermutation::identity(3, 1), kDefaultMinorTol, threads);
}

namespace {

void require_variation_base(const ParamGrid& grid) {
  if (grid.mode() != FieldMode::Hamiltonian || grid.dim() != 3 || grid.params() != 2)
    fail(ErrorKind::WrongBaseMode, "variations need a three-dimensional Hamiltonian chain as base");
}

VariationGrid empty_like(const ParamGrid& grid) {
  VariationGrid v;
  v.shape = grid.shape();
  v.steps = grid.steps();
  v.stage1.assign(v.t_nodes() * 3, 0.0);
  v.stage2.assign(v.nodes() * 3, 0.0);
  return v;
}

// Flat index of t-node i on the s = 0 slice.
std::size_t slice_node(const ParamGrid& grid, std::size_t i) {
  return i * grid.stride(0) + grid.half_counts()[1] * grid.stride(1);
}

struct Coefficients {
  Eigen::Matrix3d a;
  Eigen::Vector3d g;
};

// Stage 1: rows (-H_1., H_0., 0), g = (-h_2, h_1, 0).
// Stage 2: rows (-H_2., 0, H_0.), g = (-h_3, 0, h_1).
Coefficients coefficients(const ScalarField& f, const ScalarField& bump, std::span<const double> x,
                          std::size_t stage) {
  const Matrix hess = f.hessian(x);
  const Vector gh = bump.gradient(x);
  Coefficients c;
  c.a.setZero();
  c.g.setZero();
  const Eigen::Index other = stage == 0 ? 1 : 2;
  c.a.row(0) = -hess.row(other);
  c.a.row(other) = hess.row(0);
  c.g[0] = -gh[other];
  c.g[other] = gh[0];
  return c;
}

// RK4 for z' = A(t) z + g(t) over consecutive slots, outward from `origin`.
// Coefficients at half steps are the average of the two adjacent slots.
void integrate_line(const std::vector<Coefficients>& coef, std::size_t origin, double h,
                    std::vector<Eigen::Vector3d>& z) {
  const std::size_t n = coef.size();
  auto rhs = [](const Eigen::Matrix3d& a, const Eigen::Vector3d& g, const Eigen::Vector3d& y) -> Eigen::Vector3d {
    return a * y + g;
  };
  for (int sign : {+1, -1}) {
    const double step = sign * h;
    std::size_t from = origin;
    while (sign > 0 ? from + 1 < n : from > 0) {
      const std::size_t to = sign > 0 ? from + 1 : from - 1;
      const Eigen::Matrix3d am = 0.5 * (coef[from].a + coef[to].a);
      const Eigen::Vector3d gm = 0.5 * (coef[from].g + coef[to].g);
      const Eigen::Vector3d& y = z[from];
      const Eigen::Vector3d k1 = rhs(coef[from].a, coef[from].g, y);
      const Eigen::Vector3d k2 = rhs(am, gm, y + (0.5 * step) * k1);
      const Eigen::Vector3d k3 = rhs(am, gm, y + (0.5 * step) * k2);
      const Eigen::Vector3d k4 = rhs(coef[to].a, coef[to].g, y + step * k3);
      z[to] = y + step * ((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0);
      from = to;
    }
  }
}

}  // namespace

VariationGrid difference_quotients(const ParamGrid& base, const ParamGrid& pert, double lambda) {
  if (lambda == 0.0) fail(ErrorKind::ZeroLambda, "difference quotients need lambda != 0");
  if (!base.same_layout(pert) || base.dim() != 3 || base.params() != 2)
    fail(ErrorKind::ShapeMismatch, "base and perturbed chains must share a three-dimensional (t, s) layout");
  VariationGrid q = empty_like(base);
  for (std::size_t i = 0; i < q.t_nodes(); ++i) {
    const std::size_t f = slice_node(base, i);
    for (std::size_t c = 0; c < 3; ++c) q.stage1[i * 3 + c] = (pert.point(f)[c] - base.point(f)[c]) / lambda;
  }
  for (std::size_t f = 0; f < q.nodes(); ++f)
    for (std::size_t c = 0; c < 3; ++c) q.stage2[f * 3 + c] = (pert.point(f)[c] - base.point(f)[c]) / lambda;
  return q;
}

VariationGrid variation_chain(const ScalarField& f, const ScalarField& bump, const ParamGrid& base,
                              unsigned threads) {
  require_variation_base(base);
  if (f.dim() != 3 || bump.dim() != 3) fail(ErrorKind::InvalidArgument, "F and h must be functions of x1, x2, x3");
  VariationGrid v = empty_like(base);
  const std::size_t n1 = base.shape()[0];
  const std::size_t n2 = base.shape()[1];
  const std::size_t half1 = base.half_counts()[0];
  const std::size_t half2 = base.half_counts()[1];

  std::vector<Coefficients> coef1(n1);
  detail::parallel_for(n1, threads, [&](std::size_t i) {
    coef1[i] = coefficients(f, bump, base.point(slice_node(base, i)), 0);
  });
  std::vector<Eigen::Vector3d> z1(n1, Eigen::Vector3d::Zero());
  integrate_line(coef1, half1, base.steps()[0], z1);
  for (std::size_t i = 0; i < n1; ++i) {
    v.stage1[i * 3 + 0] = z1[i][0];
    v.stage1[i * 3 + 1] = z1[i][1];
    v.stage1[i * 3 + 2] = 0.0;
  }

  detail::parallel_for(n1, threads, [&](std::size_t i) {
    std::vector<Coefficients> coef2(n2);
    const std::size_t row = i * base.stride(0);
    for (std::size_t j = 0; j < n2; ++j) coef2[j] = coefficients(f, bump, base.point(row + j * base.stride(1)), 1);
    std::vector<Eigen::Vector3d> z2(n2, Eigen::Vector3d::Zero());
    z2[half2] = Eigen::Vector3d(v.stage1[i * 3 + 0], v.stage1[i * 3 + 1], 0.0);
    integrate_line(coef2, half2, base.steps()[1], z2);
    for (std::size_t j = 0; j < n2; ++j) {
      const std::size_t node = row + j * base.stride(1);
      v.stage2[node * 3 + 0] = z2[j][0];
      v.stage2[node * 3 + 1] = v.stage1[i * 3 + 1];
      v.stage2[node * 3 + 2] = z2[j][2];
    }
  });
  return v;
}

ConvergenceReport convergence_report(const ImplicitSystem& system, const ScalarField& bump,
                                     const ParamGrid& base, std::span<const double> lambdas,
                                     unsigned threads) {
  require_variation_base(base);
  const VariationGrid var = variation_chain(system.field(0), bump, base, threads);
  const std::vector<double> spans = {base.span(0), base.span(1)};
  ConvergenceReport report;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) fail(ErrorKind::InvalidArgument, "lambdas must be positive");
    if (!report.rows.empty() && !(lambda < report.rows.back().lambda))
      fail(ErrorKind::InvalidArgument, "lambdas must be strictly decreasing");
    const PerturbedSystem psys(system, bump, lambda);
    const ParamGrid pert = perturbed_chain(psys, spans, base.steps(), threads);
    const VariationGrid q = difference_quotients(base, pert, lambda);
    ConvergenceRow row;
    row.lambda = lambda;
    for (std::size_t i = 0; i < var.stage1.size(); ++i)
      row.stage1[i % 3] = std::max(row.stage1[i % 3], std::abs(q.stage1[i] - var.stage1[i]));
    for (std::size_t i = 0; i < var.stage2.size(); ++i)
      row.stage2[i % 3] = std::max(row.stage2[i % 3], std::abs(q.stage2[i] - var.stage2[i]));
    for (std::size_t c = 0; c < 3; ++c) row.total = std::max({row.total, row.stage1[c], row.stage2[c]});
    row.order = std::numeric_limits<double>::quiet_NaN();
    if (!report.rows.empty()) {
      const ConvergenceRow& prev = report.rows.back();
      if (prev.total > 0.0 && row.total > 0.0)
        row.order = std::log(prev.total / row.total) / std::log(prev.lambda / row.lambda);
      if (!(row.total < prev.total || (row.total == 0.0 && prev.total == 0.0))) report.decreasing = false;
    }
    report.rows.push_back(row);
  }
  return report;
}

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "lambda,err_x1,err_x2,err_x3,err_phi,err_psi,err_xi,err_max,order\n";
  for (const auto& r : report.rows) {
    out << format_double(r.lambda);
    for (double e : r.stage1) out << ',' << format_double(e);
    for (double e : r.stage2) out << ',' << format_double(e);
    out << ',' << format_double(r.total) << ',' << (std::isnan(r.order) ? std::string("nan") : format_double(r.order))
        << '\n';
  }
}

}  // namespace implicit

#include "implicit/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "chain_core.hpp"
#include "implicit/error.hpp"
#include "parallel.hpp"

namespace implicit {

std::string_view to_string(FieldMode mode) noexcept {
  switch (mode) {
    case FieldMode::IdentityCompletion: return "identity";
    case FieldMode::Scaled: return "scaled";
    case FieldMode::Hamiltonian: return "hamiltonian";
  }
  return "identity";
}

FieldMode parse_field_mode(std::string_view text) {
  if (text == "identity" || text == "identity-completion") return FieldMode::IdentityCompletion;
  if (text == "scaled") return FieldMode::Scaled;
  if (text == "hamiltonian") return FieldMode::Hamiltonian;
  fail(ErrorKind::InvalidArgument, "unknown field mode '" + std::string(text) + "'");
}

ParamGrid::ParamGrid(std::size_t dim, std::vector<std::size_t> half_counts, std::vector<double> steps,
                     FieldMode mode, VariablePermutation perm, double minor_rel_tol)
    : dim_(dim),
      half_(std::move(half_counts)),
      steps_(std::move(steps)),
      mode_(mode),
      perm_(std::move(perm)),
      minor_rel_tol_(minor_rel_tol) {
  if (half_.size() != steps_.size()) fail(ErrorKind::InvalidArgument, "grid: spans and steps differ in length");
  if (perm_.size() != dim_ || perm_.trailing() != half_.size())
    fail(ErrorKind::InvalidArgument, "grid: permutation does not match d and d-l");
  shape_.resize(half_.size());
  strides_.resize(half_.size());
  nodes_ = 1;
  for (std::size_t j = half_.size(); j-- > 0;) {
    shape_[j] = 2 * half_[j] + 1;
    strides_[j] = nodes_;
    nodes_ *= shape_[j];
  }
  points_.assign(nodes_ * dim_, std::numeric_limits<double>::quiet_NaN());
}

std::size_t ParamGrid::flat(std::span<const std::size_t> multi) const {
  std::size_t f = 0;
  for (std::size_t j = 0; j < half_.size(); ++j) f += multi[j] * strides_[j];
  return f;
}

std::vector<std::size_t> ParamGrid::multi(std::size_t flat) const {
  std::vector<std::size_t> m(half_.size());
  for (std::size_t j = 0; j < half_.size(); ++j) {
    m[j] = flat / strides_[j];
    flat %= strides_[j];
  }
  return m;
}

std::size_t ParamGrid::origin() const { return flat(half_); }

std::vector<double> ParamGrid::params_at(std::size_t flat_index) const {
  const auto m = multi(flat_index);
  std::vector<double> t(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) t[j] = param(j, m[j]);
  return t;
}

bool ParamGrid::same_layout(const ParamGrid& other) const {
  return dim_ == other.dim_ && half_ == other.half_ && steps_ == other.steps_ && mode_ == other.mode_ &&
         perm_ == other.perm_;
}

namespace detail {

namespace {

std::string format_vec(std::span<const double> v) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

}  // namespace

StageField make_stage_field(const ImplicitSystem& system, FieldMode mode, const VariablePermutation& perm,
                            double minor_rel_tol) {
  if (mode == FieldMode::Hamiltonian) {
    const std::size_t d = system.dim();
    if (system.codim() != 1 || (d != 2 && d != 3))
      fail(ErrorKind::UnsupportedDimension, "Hamiltonian fields exist only for d = 2 or d = 3 with l = 1");
    const ScalarField& f = system.field(0);
    return [f, d](std::size_t stage, std::span<const double> y, std::span<double> out) {
      double g[3];
      f.gradient(y, std::span<double>(g, d));
      hamiltonian_vector(std::span<const double>(g, d), stage, out);
    };
  }
  const bool scaled = mode == FieldMode::Scaled;
  return [&system, perm, scaled, minor_rel_tol](std::size_t stage, std::span<const double> y,
                                                 std::span<double> out) {
    const Matrix jac = jacobian(system, y);
    tangent_vector(jac, perm, stage, scaled, minor_tolerance(jac, minor_rel_tol), out);
  };
}

std::vector<std::size_t> half_counts(std::span<const double> spans, std::span<const double> steps,
                                     std::size_t expected) {
  if (spans.size() != expected || steps.size() != expected)
    fail(ErrorKind::InvalidArgument, "chain needs " + std::to_string(expected) + " spans and steps");
  std::vector<std::size_t> half(expected);
  for (std::size_t j = 0; j < expected; ++j) {
    const double span = spans[j];
    const double h = steps[j];
    if (!(span > 0.0)) fail(ErrorKind::InvalidArgument, "span_" + std::to_string(j + 1) + " must be positive");
    if (!(h > 0.0) || h > span * (1.0 + 1e-12))
      fail(ErrorKind::InvalidArgument, "step_" + std::to_string(j + 1) + " must lie in (0, span]");
    const double ratio = span / h;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
      fail(ErrorKind::InvalidArgument,
           "span_" + std::to_string(j + 1) + " / step_" + std::to_string(j + 1) + " is not an integer");
    half[j] = static_cast<std::size_t>(rounded);
  }
  return half;
}

void integrate_stage(ParamGrid& grid, const StageField& field, const Box& domain, std::size_t stage,
                     std::size_t start_step, const NodeFilter& include, unsigned threads) {
  const std::size_t d = grid.dim();
  const std::size_t k = grid.params();
  const auto& half = grid.half_counts();
  const auto& shape = grid.shape();
  const double h = grid.steps()[stage];
  const std::size_t n_steps = half[stage];
  if (start_step >= n_steps) return;

  std::size_t combos = 1;
  for (std::size_t i = 0; i < stage; ++i) combos *= shape[i];

  parallel_for(combos, threads, [&](std::size_t c) {
    std::vector<std::size_t> m(k);
    std::size_t rest = c;
    for (std::size_t i = stage; i-- > 0;) {
      m[i] = rest % shape[i];
      rest /= shape[i];
    }
    for (std::size_t i = stage; i < k; ++i) m[i] = half[i];
    if (include && !include(m)) return;

    std::vector<double> y(d), carry(d), tmp(d), k1(d), k2(d), k3(d), k4(d);
    const std::size_t stride = grid.stride(stage);
    const std::size_t base = grid.flat(m) - half[stage] * stride;

    for (int sign : {+1, -1}) {
      const double step = sign * h;
      const double half_step = 0.5 * step;
      const std::size_t start_slot = sign > 0 ? half[stage] + start_step : half[stage] - start_step;
      auto src = grid.point(base + start_slot * stride);
      std::copy(src.begin(), src.end(), y.begin());
      std::fill(carry.begin(), carry.end(), 0.0);
      for (std::size_t q = start_step + 1; q <= n_steps; ++q) {
        const std::size_t slot = sign > 0 ? half[stage] + q : half[stage] - q;
        const std::size_t target = base + slot * stride;
        auto eval = [&](std::span<const double> at, std::vector<double>& out) {
          try {
            field(stage, at, out);
          } catch (const ChainError&) {
            throw;
          } catch (const Error& e) {
            throw ChainError(e.kind(),
                             std::string(e.what()) + " at x = " + format_vec(at) +
                                 " while producing node t = " + format_vec(grid.params_at(target)) +
                                 " (direction " + std::to_string(stage + 1) + ")",
                             std::vector<double>(at.begin(), at.end()), grid.params_at(target));
          }
        };
        eval(y, k1);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + half_step * k1[i];
        eval(tmp, k2);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + half_step * k2[i];
        eval(tmp, k3);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + step * k3[i];
        eval(tmp, k4);
        // Compensated update: carry holds the low-order bits lost by y += dy.
        for (std::size_t i = 0; i < d; ++i) {
          const double dy = step * ((k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0) - carry[i];
          const double next = y[i] + dy;
          carry[i] = (next - y[i]) - dy;
          y[i] = next;
        }
        if (!domain.contains(y))
          throw ChainError(ErrorKind::DomainEscape,
                           "trajectory left the domain at x = " + format_vec(y) + ", node t = " +
                               format_vec(grid.params_at(target)) + " (direction " +
                               std::to_string(stage + 1) + ")",
                           y, grid.params_at(target));
        auto dst = grid.point(target);
        std::copy(y.begin(), y.end(), dst.begin());
      }
    }
  });
}

ParamGrid run_chain(const StageField& field, const Box& domain, const Vector& seed,
                    std::vector<std::size_t> half, std::vector<double> steps, FieldMode mode,
                    VariablePermutation perm, double minor_rel_tol, unsigned threads) {
  ParamGrid grid(static_cast<std::size_t>(seed.size()), std::move(half), std::move(steps), mode,
                 std::move(perm), minor_rel_tol);
  auto origin = grid.point(grid.origin());
  std::copy(seed.data(), seed.data() + seed.size(), origin.begin());
  for (std::size_t s = 0; s < grid.params(); ++s) integrate_stage(grid, field, domain, s, 0, {}, threads);
  return grid;
}

}  // namespace detail

namespace {

VariablePermutation chain_permutation(const ImplicitSystem& system, FieldMode mode,
                                      const std::optional<VariablePermutation>& requested, double rel_tol) {
  if (mode == FieldMode::Hamiltonian) {
    const std::size_t d = system.dim();
    if (system.codim() != 1 || (d != 2 && d != 3))
      fail(ErrorKind::UnsupportedDimension, "Hamiltonian fields exist only for d = 2 or d = 3 with l = 1");
    return VariablePermutation::identity(d, 1);
  }
  if (requested) {
    if (requested->size() != system.dim() || requested->leading() != system.codim())
      fail(ErrorKind::InvalidArgument, "permutation does not match the system");
    return *requested;
  }
  const Matrix jac = jacobian(system, as_span(system.seed()));
  return select_permutation(jac, minor_tolerance(jac, rel_tol));
}

}  // namespace

std::vector<double> existence_intervals(const ImplicitSystem& system, std::span<const double> nested_margins,
                                        const ExistenceOptions& options) {
  const std::size_t k = system.params();
  if (nested_margins.size() != k)
    fail(ErrorKind::InvalidArgument, "need " + std::to_string(k) + " nested margins");
  double total = 0.0;
  for (double b : nested_margins) {
    if (!(b > 0.0)) fail(ErrorKind::EmptyMargin, "nested margins must be positive");
    total += b;
  }
  if (options.samples_per_axis < 2) fail(ErrorKind::InvalidArgument, "need at least 2 samples per axis");
  const Box outer = options.outer ? *options.outer : Box::around(system.seed(), total).intersect(system.domain());
  const VariablePermutation perm = chain_permutation(system, options.mode, options.perm, options.minor_rel_tol);
  const detail::StageField field = detail::make_stage_field(system, options.mode, perm, options.minor_rel_tol);

  const std::size_t d = system.dim();
  const std::size_t n = options.samples_per_axis;
  std::size_t total_samples = 1;
  for (std::size_t i = 0; i < d; ++i) total_samples *= n;

  double max_norm = 0.0;
  std::vector<double> x(d), v(d);
  for (std::size_t s = 0; s < total_samples; ++s) {
    std::size_t rest = s;
    for (std::size_t i = 0; i < d; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double frac = static_cast<double>(rest % n) / static_cast<double>(n - 1);
      rest /= n;
      x[i] = outer.lo[ii] + frac * (outer.hi[ii] - outer.lo[ii]);
    }
    for (std::size_t j = 0; j < k; ++j) {
      field(j, x, v);
      double norm2 = 0.0;
      for (double c : v) norm2 += c * c;
      max_norm = std::max(max_norm, std::sqrt(norm2));
    }
  }
  std::vector<double> spans(k);
  for (std::size_t j = 0; j < k; ++j)
    spans[j] = max_norm > 0.0 ? nested_margins[j] / max_norm : std::numeric_limits<double>::infinity();
  return spans;
}

ParamGrid integrate_chain(const ImplicitSystem& system, const ChainConfig& config) {
  auto half = detail::half_counts(config.spans, config.steps, system.params());
  VariablePermutation perm = chain_permutation(system, config.mode, config.perm, config.minor_rel_tol);
  const detail::StageField field = detail::make_stage_field(system, config.mode, perm, config.minor_rel_tol);
  return detail::run_chain(field, system.domain(), system.seed(), std::move(half), config.steps, config.mode,
                           std::move(perm), config.minor_rel_tol, config.threads);
}

ParamGrid resume_chain(const ImplicitSystem& system, const ParamGrid& grid, std::size_t direction,
                       double extra_span, unsigned threads) {
  if (direction >= grid.params()) fail(ErrorKind::InvalidArgument, "resume direction out of range");
  if (grid.dim() != system.dim() || grid.codim() != system.codim())
    fail(ErrorKind::ShapeMismatch, "grid does not belong to this system");
  if (extra_span < 0.0) fail(ErrorKind::InvalidArgument, "extra span must be non-negative");
  if (extra_span == 0.0) return grid;
  const double h = grid.steps()[direction];
  const std::size_t extra = detail::half_counts(std::vector<double>{extra_span}, std::vector<double>{h}, 1)[0];

  std::vector<std::size_t> half = grid.half_counts();
  const std::size_t old_half = half[direction];
  half[direction] += extra;
  ParamGrid out(grid.dim(), half, grid.steps(), grid.mode(), grid.perm(), grid.minor_rel_tol());

  const std::size_t d = grid.dim();
  for (std::size_t f = 0; f < grid.size(); ++f) {
    auto m = grid.multi(f);
    m[direction] += extra;
    auto src = grid.point(f);
    auto dst = out.point(out.flat(m));
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(d), dst.begin());
  }

  const detail::StageField field =
      detail::make_stage_field(system, grid.mode(), grid.perm(), grid.minor_rel_tol());
  detail::integrate_stage(out, field, system.domain(), direction, old_half, {}, threads);
  const std::size_t lo_new = extra;
  const std::size_t hi_new = extra + 2 * old_half;
  const detail::NodeFilter only_new = [=](std::span<const std::size_t> m) {
    return m[direction] < lo_new || m[direction] > hi_new;
  };
  for (std::size_t s = direction + 1; s < grid.params(); ++s)
    detail::integrate_stage(out, field, system.domain(), s, 0, only_new, threads);
  return out;
}

}  // namespace implicit

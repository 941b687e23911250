#include "implicit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include <Eigen/SVD>

#include "implicit/error.hpp"
#include "parallel.hpp"

namespace implicit {

double ResidualReport::overall_max() const {
  double m = 0.0;
  for (double v : max) m = std::max(m, v);
  return m;
}

ResidualReport residuals(const ParamGrid& grid, const ImplicitSystem& system, unsigned threads) {
  if (grid.dim() != system.dim() || grid.codim() != system.codim())
    fail(ErrorKind::ShapeMismatch, "grid and system dimensions differ");
  const std::size_t l = system.codim();
  ResidualReport report;
  report.codim = l;
  report.values.resize(grid.size() * l);
  detail::parallel_for(grid.size(), threads, [&](std::size_t f) {
    const Vector r = system.residual(grid.point(f));
    for (std::size_t j = 0; j < l; ++j) report.values[f * l + j] = std::abs(r[static_cast<Eigen::Index>(j)]);
  });
  report.max.assign(l, 0.0);
  for (std::size_t f = 0; f < grid.size(); ++f)
    for (std::size_t j = 0; j < l; ++j) report.max[j] = std::max(report.max[j], report.values[f * l + j]);
  return report;
}

ParamJacobians jacobian_of_parametrization(const ParamGrid& grid, unsigned threads) {
  const std::size_t d = grid.dim();
  const std::size_t k = grid.params();
  for (std::size_t j = 0; j < k; ++j)
    if (grid.shape()[j] < 3)
      fail(ErrorKind::GridTooSmall, "direction " + std::to_string(j + 1) + " has fewer than 3 nodes");
  ParamJacobians b(d, k, grid.size());
  detail::parallel_for(grid.size(), threads, [&](std::size_t f) {
    const auto m = grid.multi(f);
    auto out = b.at(f);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t s = grid.stride(j);
      const std::size_t n = grid.shape()[j];
      const double h2 = 2.0 * grid.steps()[j];
      const auto col = static_cast<Eigen::Index>(j);
      for (std::size_t i = 0; i < d; ++i) {
        const auto y = [&](std::size_t node) { return grid.point(node)[i]; };
        double v;
        if (m[j] == 0)
          v = (-3.0 * y(f) + 4.0 * y(f + s) - y(f + 2 * s)) / h2;
        else if (m[j] == n - 1)
          v = (3.0 * y(f) - 4.0 * y(f - s) + y(f - 2 * s)) / h2;
        else
          v = (y(f + s) - y(f - s)) / h2;
        out(static_cast<Eigen::Index>(i), col) = v;
      }
    }
  });
  return b;
}

RegularityReport regularity_check(const ParamGrid& grid, unsigned threads) {
  if (grid.mode() != FieldMode::IdentityCompletion)
    fail(ErrorKind::WrongMode, "regularity identity holds only for identity-completion grids, got " +
                                   std::string(to_string(grid.mode())));
  return regularity_check(grid, jacobian_of_parametrization(grid, threads));
}

RegularityReport regularity_check(const ParamGrid& grid, const ParamJacobians& b) {
  if (grid.mode() != FieldMode::IdentityCompletion)
    fail(ErrorKind::WrongMode, "regularity identity holds only for identity-completion grids, got " +
                                   std::string(to_string(grid.mode())));
  if (b.size() != grid.size() || b.dim() != grid.dim()) fail(ErrorKind::ShapeMismatch, "B does not match grid");
  const std::size_t k = grid.params();
  const std::size_t l = grid.codim();
  RegularityReport report;
  report.min_det = std::numeric_limits<double>::infinity();
  report.max_det = -std::numeric_limits<double>::infinity();
  Matrix block(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const auto bf = b.at(f);
    for (std::size_t r = 0; r < k; ++r)
      block.row(static_cast<Eigen::Index>(r)) = bf.row(static_cast<Eigen::Index>(grid.perm()[l + r]));
    const double det = determinant(block);
    report.min_det = std::min(report.min_det, det);
    report.max_det = std::max(report.max_det, det);
    const double dev = std::abs(det - 1.0);
    if (dev > report.max_deviation || f == 0) {
      report.max_deviation = dev;
      report.worst_node = f;
    }
  }
  return report;
}

namespace {

double sigma_min(const Matrix& b) {
  Eigen::JacobiSVD<Matrix> svd(b);
  return svd.singularValues().minCoeff();
}

struct PairBest {
  double ratio = std::numeric_limits<double>::infinity();
  std::size_t a = 0;
  std::size_t b = 0;
};

double pair_ratio(const ParamGrid& grid, const std::vector<std::vector<double>>& params, std::size_t a,
                  std::size_t b) {
  const auto ya = grid.point(a);
  const auto yb = grid.point(b);
  double dy = 0.0;
  for (std::size_t i = 0; i < ya.size(); ++i) dy += (ya[i] - yb[i]) * (ya[i] - yb[i]);
  double dp = 0.0;
  for (std::size_t j = 0; j < params[a].size(); ++j) dp += (params[a][j] - params[b][j]) * (params[a][j] - params[b][j]);
  return std::sqrt(dy) / std::sqrt(dp);
}

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& key) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int64_t v : key) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

InjectivityReport injectivity_check(const ParamGrid& grid, const InjectivityOptions& options) {
  if (grid.size() < 2) {
    InjectivityReport report;
    report.min_ratio = std::numeric_limits<double>::infinity();
    return report;
  }
  return injectivity_check(grid, jacobian_of_parametrization(grid, options.threads), options);
}

InjectivityReport injectivity_check(const ParamGrid& grid, const ParamJacobians& b,
                                    const InjectivityOptions& options) {
  InjectivityReport report;
  report.min_ratio = std::numeric_limits<double>::infinity();
  const std::size_t n = grid.size();
  if (n < 2) return report;
  if (!(options.separation_factor > 0.0)) fail(ErrorKind::InvalidArgument, "separation factor must be positive");
  if (b.size() != n) fail(ErrorKind::ShapeMismatch, "B does not match grid");

  double smin = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < n; ++f) smin = std::min(smin, sigma_min(b.at(f)));
  report.bound = smin / options.separation_factor;

  std::vector<std::vector<double>> params(n);
  for (std::size_t f = 0; f < n; ++f) params[f] = grid.params_at(f);

  std::vector<PairBest> best(n);
  if (n < options.exhaustive_limit) {
    detail::parallel_for(n, options.threads, [&](std::size_t a) {
      for (std::size_t c = a + 1; c < n; ++c) {
        const double r = pair_ratio(grid, params, a, c);
        if (r < best[a].ratio) best[a] = {r, a, c};
      }
    });
  } else {
    report.exhaustive = false;
    double h_max = 0.0;
    for (double h : grid.steps()) h_max = std::max(h_max, h);
    const double cell = report.bound * options.neighbourhood_factor * h_max;
    if (!(cell > 0.0)) {
      report.injective = false;
      return report;
    }
    const std::size_t d = grid.dim();
    auto key_of = [&](std::size_t f) {
      std::vector<std::int64_t> key(d);
      const auto y = grid.point(f);
      for (std::size_t i = 0; i < d; ++i) key[i] = static_cast<std::int64_t>(std::floor(y[i] / cell));
      return key;
    };
    std::unordered_map<std::vector<std::int64_t>, std::vector<std::size_t>, KeyHash> cells;
    for (std::size_t f = 0; f < n; ++f) cells[key_of(f)].push_back(f);
    std::size_t neighbours = 1;
    for (std::size_t i = 0; i < d; ++i) neighbours *= 3;
    detail::parallel_for(n, options.threads, [&](std::size_t a) {
      const auto base = key_of(a);
      std::vector<std::int64_t> key(d);
      for (std::size_t c = 0; c < neighbours; ++c) {
        std::size_t rest = c;
        for (std::size_t i = 0; i < d; ++i) {
          key[i] = base[i] + static_cast<std::int64_t>(rest % 3) - 1;
          rest /= 3;
        }
        const auto it = cells.find(key);
        if (it == cells.end()) continue;
        for (std::size_t other : it->second) {
          if (other <= a) continue;
          const double r = pair_ratio(grid, params, a, other);
          if (r < best[a].ratio || (r == best[a].ratio && other < best[a].b)) best[a] = {r, a, other};
        }
      }
    });
  }

  PairBest overall;
  for (const auto& p : best)
    if (p.ratio < overall.ratio) overall = p;
  report.min_ratio = overall.ratio;
  if (!(report.bound > 0.0)) {
    report.injective = false;
    return report;
  }
  if (overall.ratio < report.bound) {
    report.injective = false;
    report.witness = std::make_pair(overall.a, overall.b);
  }
  return report;
}

VerificationReport verify_grid(const ParamGrid& grid, const ImplicitSystem& system,
                               const InjectivityOptions& options) {
  VerificationReport report;
  report.max_residual = residuals(grid, system, options.threads).max;
  const ParamJacobians b = jacobian_of_parametrization(grid, options.threads);
  if (grid.mode() == FieldMode::IdentityCompletion) report.regularity = regularity_check(grid, b);
  report.min_rank_b = grid.params();
  for (std::size_t f = 0; f < grid.size(); ++f)
    report.min_rank_b = std::min(report.min_rank_b, numerical_rank(Matrix(b.at(f).transpose())));
  report.injectivity = injectivity_check(grid, b, options);
  return report;
}

}  // namespace implicit

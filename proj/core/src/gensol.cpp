#include "implicit/gensol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <unordered_map>

#include "implicit/error.hpp"
#include "implicit/grid_io.hpp"
#include "parallel.hpp"

namespace implicit {

namespace {

struct CellHash {
  std::size_t operator()(const std::vector<std::int64_t>& key) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int64_t v : key) h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Appends the points of `flat` that are inside `window` and not within tol
// of an already accepted point.
class Deduplicator {
 public:
  Deduplicator(std::size_t dim, double tol) : dim_(dim), tol_(tol) {}

  bool accept(std::span<const double> x, const std::vector<double>& kept) {
    if (tol_ <= 0.0) return exact_.insert(std::vector<double>(x.begin(), x.end())).second;
    std::vector<std::int64_t> key(dim_);
    for (std::size_t i = 0; i < dim_; ++i) key[i] = static_cast<std::int64_t>(std::floor(x[i] / tol_));
    std::size_t neighbours = 1;
    for (std::size_t i = 0; i < dim_; ++i) neighbours *= 3;
    std::vector<std::int64_t> probe(dim_);
    for (std::size_t c = 0; c < neighbours; ++c) {
      std::size_t rest = c;
      for (std::size_t i = 0; i < dim_; ++i) {
        probe[i] = key[i] + static_cast<std::int64_t>(rest % 3) - 1;
        rest /= 3;
      }
      const auto it = cells_.find(probe);
      if (it == cells_.end()) continue;
      for (std::size_t idx : it->second)
        if (dist2(x, std::span<const double>(kept.data() + idx * dim_, dim_)) < tol_ * tol_) return false;
    }
    cells_[key].push_back(kept.size() / dim_);
    return true;
  }

 private:
  std::size_t dim_;
  double tol_;
  std::unordered_map<std::vector<std::int64_t>, std::vector<std::size_t>, CellHash> cells_;
  std::set<std::vector<double>> exact_;
};

}  // namespace

PointCloud::PointCloud(Box window, std::span<const double> flat, double dedup_tol) : window_(std::move(window)) {
  const std::size_t d = window_.dim();
  if (d == 0 || flat.size() % d != 0) fail(ErrorKind::ShapeMismatch, "point data does not match the window dimension");
  Deduplicator dedup(d, dedup_tol);
  for (std::size_t i = 0; i < flat.size() / d; ++i) {
    const auto x = flat.subspan(i * d, d);
    if (!window_.contains(x)) continue;
    if (!dedup.accept(x, points_)) continue;
    points_.insert(points_.end(), x.begin(), x.end());
  }
}

PointCloud merge(std::span<const PointCloud> clouds, double dedup_tol) {
  if (clouds.empty()) fail(ErrorKind::EmptyCloud, "nothing to merge");
  std::vector<double> all;
  bool truncated = false;
  for (const auto& c : clouds) {
    if (c.dim() != clouds[0].dim()) fail(ErrorKind::ShapeMismatch, "clouds of different dimension");
    all.insert(all.end(), c.data().begin(), c.data().end());
    truncated = truncated || c.truncated;
  }
  PointCloud out(clouds[0].window(), all, dedup_tol);
  out.truncated = truncated;
  return out;
}

void write_cloud_csv(std::ostream& out, const PointCloud& cloud) {
  const std::size_t d = cloud.dim();
  for (std::size_t i = 0; i < d; ++i) out << "x_" << (i + 1) << (i + 1 < d ? "," : "\n");
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    const auto x = cloud.point(p);
    for (std::size_t i = 0; i < d; ++i) out << format_double(x[i]) << (i + 1 < d ? "," : "\n");
  }
}

std::size_t rank_at(const ImplicitSystem& system, std::span<const double> point, double rel_tol) {
  return numerical_rank(jacobian(system, point), rel_tol);
}

Vector sample_direction(std::size_t dim, std::size_t k) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  if (k < 2 * dim) {
    v[static_cast<Eigen::Index>(k / 2)] = (k % 2 == 0) ? 1.0 : -1.0;
    return v;
  }
  const std::size_t n = k - 2 * dim + 1;
  if (dim == 2) {
    const double angle = 2.0 * std::numbers::pi * std::fmod(static_cast<double>(n) * (std::numbers::phi - 1.0), 1.0);
    v << std::cos(angle), std::sin(angle);
    return v;
  }
  // R_d sequence: g is the positive root of x^(d+1) = x + 1.
  double g = 2.0;
  for (int it = 0; it < 64; ++it) g = std::pow(1.0 + g, 1.0 / static_cast<double>(dim + 1));
  for (std::size_t i = 0; i < dim; ++i) {
    const double alpha = std::pow(1.0 / g, static_cast<double>(i + 1));
    v[static_cast<Eigen::Index>(i)] = 2.0 * std::fmod(0.5 + alpha * static_cast<double>(n), 1.0) - 1.0;
  }
  const double norm = v.norm();
  if (norm < 1e-3) return sample_direction(dim, k + 1);
  return v / norm;
}

std::vector<RegularSample> sample_regular_points(const ImplicitSystem& system, const Vector& x0,
                                                 std::span<const double> radii, std::size_t per_radius,
                                                 double rank_tol) {
  if (static_cast<std::size_t>(x0.size()) != system.dim())
    fail(ErrorKind::InvalidArgument, "x0 has the wrong dimension");
  if (radii.empty() || per_radius == 0) fail(ErrorKind::InvalidArgument, "need radii and per_radius > 0");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) fail(ErrorKind::InvalidArgument, "radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) fail(ErrorKind::InvalidArgument, "radii must be strictly decreasing");
  }
  std::vector<RegularSample> out;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    std::size_t found = 0;
    for (std::size_t k = 0; k < per_radius; ++k) {
      const Vector x = x0 + radii[r] * sample_direction(system.dim(), k);
      if (!system.domain().strictly_contains(as_span(x))) continue;
      if (rank_at(system, as_span(x), rank_tol) != system.codim()) continue;
      out.push_back({x, r, k});
      ++found;
    }
    if (found == 0)
      fail(ErrorKind::NoRegularPoints,
           "no point of full rank among " + std::to_string(per_radius) + " samples at radius " +
               format_double(radii[r]) + "; the functionals may be dependent near x0");
  }
  return out;
}

namespace {

bool face_in_window(const ParamGrid& grid, std::size_t j, const Box& window) {
  const std::size_t last = grid.shape()[j] - 1;
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const std::size_t m = (f / grid.stride(j)) % grid.shape()[j];
    if ((m == 0 || m == last) && window.contains(grid.point(f))) return true;
  }
  return false;
}

// Largest residual over nodes outside the old block [lo, hi] in direction j.
double slab_residual(const ImplicitSystem& system, const ParamGrid& grid, std::size_t j, std::size_t lo,
                     std::size_t hi) {
  double worst = 0.0;
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const std::size_t m = (f / grid.stride(j)) % grid.shape()[j];
    if (m >= lo && m <= hi) continue;
    const Vector r = system.residual(grid.point(f));
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

PointCloud level_set_trace(const ImplicitSystem& system, const Vector& xn, const Box& window,
                           const TraceOptions& options) {
  if (window.dim() != system.dim()) fail(ErrorKind::ShapeMismatch, "window dimension differs from the system");
  if (!(options.step > 0.0) || options.chunk_steps == 0)
    fail(ErrorKind::InvalidArgument, "trace step and chunk must be positive");
  PointCloud empty(window);
  empty.truncated = true;
  if (options.budget == 0) return empty;

  const ImplicitSystem shifted = system.shifted(xn);
  const std::size_t k = shifted.params();
  std::size_t chunk = options.chunk_steps;
  const auto block = [k](std::size_t c) { return std::pow(static_cast<double>(2 * c + 1), static_cast<double>(k)); };
  while (chunk > 0 && block(chunk) > static_cast<double>(options.budget)) chunk /= 2;
  if (chunk == 0) return empty;

  ChainConfig config;
  config.spans.assign(k, static_cast<double>(chunk) * options.step);
  config.steps.assign(k, options.step);
  config.mode = options.mode;
  config.threads = options.threads;
  ParamGrid grid = integrate_chain(shifted, config);

  bool truncated = false;
  std::vector<bool> active(k, true);
  const double extra = static_cast<double>(chunk) * options.step;
  while (std::find(active.begin(), active.end(), true) != active.end()) {
    for (std::size_t j = 0; j < k; ++j) {
      if (!active[j]) continue;
      if (!face_in_window(grid, j, window)) {
        active[j] = false;
        continue;
      }
      const std::size_t n_old = grid.shape()[j];
      const double next_size = static_cast<double>(grid.size() / n_old) * static_cast<double>(n_old + 2 * chunk);
      if (next_size > static_cast<double>(options.budget)) {
        truncated = true;
        std::fill(active.begin(), active.end(), false);
        break;
      }
      ParamGrid next;
      try {
        next = resume_chain(shifted, grid, j, extra, options.threads);
      } catch (const Error&) {
        active[j] = false;
        continue;
      }
      if (slab_residual(shifted, next, j, chunk, chunk + n_old - 1) > options.trace_tol) {
        active[j] = false;
        continue;
      }
      grid = std::move(next);
    }
  }
  PointCloud cloud(window, grid.data(), options.dedup_tol);
  cloud.truncated = truncated;
  return cloud;
}

namespace {

constexpr std::size_t kBruteForceLimit = 10000;

// Uniform cell grid over the bounding box of a cloud, CSR layout.
class CellGrid {
 public:
  explicit CellGrid(const PointCloud& cloud) : cloud_(cloud), d_(cloud.dim()) {
    const std::size_t n = cloud.size();
    lo_.assign(d_, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d_, -std::numeric_limits<double>::infinity());
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t i = 0; i < d_; ++i) {
        lo_[i] = std::min(lo_[i], cloud.point(p)[i]);
        hi[i] = std::max(hi[i], cloud.point(p)[i]);
      }
    double extent = 0.0;
    for (std::size_t i = 0; i < d_; ++i) extent = std::max(extent, hi[i] - lo_[i]);
    const double per_axis = std::max(1.0, std::ceil(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d_))));
    cell_ = extent > 0.0 ? extent / per_axis : 1.0;
    counts_.resize(d_);
    std::size_t total = 1;
    for (std::size_t i = 0; i < d_; ++i) {
      counts_[i] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor((hi[i] - lo_[i]) / cell_)) + 1);
      total *= counts_[i];
    }
    start_.assign(total + 1, 0);
    std::vector<std::size_t> cell_of(n);
    for (std::size_t p = 0; p < n; ++p) {
      cell_of[p] = flat(coords(cloud.point(p)));
      ++start_[cell_of[p] + 1];
    }
    for (std::size_t c = 0; c < total; ++c) start_[c + 1] += start_[c];
    items_.resize(n);
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t p = 0; p < n; ++p) items_[fill[cell_of[p]]++] = p;
  }

  double nearest(std::span<const double> q) const {
    const auto base = coords(q);
    std::size_t max_r = 0;
    for (std::size_t c : counts_) max_r = std::max(max_r, c);
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::int64_t> off(d_);
    std::vector<std::size_t> cell(d_);
    for (std::size_t r = 0; r <= max_r; ++r) {
      const auto ri = static_cast<std::int64_t>(r);
      std::size_t combos = 1;
      for (std::size_t i = 0; i < d_; ++i) combos *= 2 * r + 1;
      for (std::size_t c = 0; c < combos; ++c) {
        std::size_t rest = c;
        bool shell = false;
        bool inside = true;
        for (std::size_t i = 0; i < d_; ++i) {
          off[i] = static_cast<std::int64_t>(rest % (2 * r + 1)) - ri;
          rest /= 2 * r + 1;
          shell = shell || off[i] == ri || off[i] == -ri;
          const std::int64_t v = static_cast<std::int64_t>(base[i]) + off[i];
          if (v < 0 || v >= static_cast<std::int64_t>(counts_[i])) inside = false;
          else cell[i] = static_cast<std::size_t>(v);
        }
        if (!shell || !inside) continue;
        const std::size_t f = flat(cell);
        for (std::size_t s = start_[f]; s < start_[f + 1]; ++s)
          best = std::min(best, std::sqrt(dist2(q, cloud_.point(items_[s]))));
      }
      if (best <= static_cast<double>(r) * cell_) break;
    }
    return best;
  }

 private:
  std::vector<std::size_t> coords(std::span<const double> x) const {
    std::vector<std::size_t> c(d_);
    for (std::size_t i = 0; i < d_; ++i) {
      const double v = std::floor((x[i] - lo_[i]) / cell_);
      c[i] = v <= 0.0 ? 0 : std::min(counts_[i] - 1, static_cast<std::size_t>(v));
    }
    return c;
  }
  std::size_t flat(const std::vector<std::size_t>& c) const {
    std::size_t f = 0;
    for (std::size_t i = 0; i < d_; ++i) f = f * counts_[i] + c[i];
    return f;
  }

  const PointCloud& cloud_;
  std::size_t d_;
  std::vector<double> lo_;
  double cell_ = 1.0;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
};

double directed(const PointCloud& a, const PointCloud& b, bool use_grid, unsigned threads) {
  std::vector<double> nearest(a.size());
  if (use_grid) {
    const CellGrid grid(b);
    detail::parallel_for(a.size(), threads, [&](std::size_t p) { nearest[p] = grid.nearest(a.point(p)); });
  } else {
    detail::parallel_for(a.size(), threads, [&](std::size_t p) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < b.size(); ++q) best = std::min(best, dist2(a.point(p), b.point(q)));
      nearest[p] = std::sqrt(best);
    });
  }
  return *std::max_element(nearest.begin(), nearest.end());
}

}  // namespace

double hausdorff(const PointCloud& a, const PointCloud& b, unsigned threads) {
  if (a.empty() || b.empty()) fail(ErrorKind::EmptyCloud, "Hausdorff distance of an empty cloud");
  if (a.dim() != b.dim()) fail(ErrorKind::ShapeMismatch, "clouds of different dimension");
  const bool use_grid = a.size() > kBruteForceLimit || b.size() > kBruteForceLimit;
  return std::max(directed(a, b, use_grid, threads), directed(b, a, use_grid, threads));
}

GenSolReport generalized_solution(const ImplicitSystem& system, const Vector& x0, const GenSolOptions& options) {
  if (rank_at(system, as_span(x0), options.rank_tol) == system.codim())
    fail(ErrorKind::NotCritical, "the Jacobian has full rank at x0; use the regular parametrization instead");
  if (options.window.dim() != system.dim()) fail(ErrorKind::ShapeMismatch, "window dimension differs from the system");
  const auto samples = sample_regular_points(system, x0, options.radii, options.per_radius, options.rank_tol);

  GenSolReport report;
  std::size_t next = 0;
  for (std::size_t r = 0; r < options.radii.size(); ++r) {
    std::vector<PointCloud> traces;
    for (; next < samples.size() && samples[next].radius_index == r; ++next)
      traces.push_back(level_set_trace(system, samples[next].point, options.window, options.trace));
    report.radii.push_back(options.radii[r]);
    report.samples_per_cloud.push_back(traces.size());
    report.clouds.push_back(merge(traces, options.trace.dedup_tol));
    report.truncated = report.truncated || report.clouds.back().truncated;
    if (report.clouds.size() >= 2) {
      const auto n = report.clouds.size();
      const bool empty = report.clouds[n - 2].empty() || report.clouds[n - 1].empty();
      report.hausdorff_steps.push_back(empty ? std::numeric_limits<double>::infinity()
                                             : hausdorff(report.clouds[n - 2], report.clouds[n - 1],
                                                         options.trace.threads));
      if (options.eps_stop && report.hausdorff_steps.back() < *options.eps_stop) break;
    }
  }
  report.limit = report.clouds.back();
  report.seed_distance = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < report.limit.size(); ++p) {
    const auto x = report.limit.point(p);
    report.seed_distance = std::min(report.seed_distance, std::sqrt(dist2(x, as_span(x0))));
    for (std::size_t j = 0; j < system.codim(); ++j)
      report.max_residual = std::max(report.max_residual, std::abs(system.field(j).eval(x)));
  }
  return report;
}

}  // namespace implicit

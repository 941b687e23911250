#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "implicit/integrate.hpp"

namespace implicit {

/// Finite point set clipped to a window. Invariants: every point lies in
/// the window; no two points are closer than the dedup tolerance used to
/// build it.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(Box window) : window_(std::move(window)) {}
  /// Clips `flat` (node-major, window.dim() values per point) to the window
  /// and drops points within dedup_tol of an earlier kept point.
  PointCloud(Box window, std::span<const double> flat, double dedup_tol);

  std::size_t dim() const noexcept { return window_.dim(); }
  std::size_t size() const noexcept { return dim() == 0 ? 0 : points_.size() / dim(); }
  bool empty() const noexcept { return points_.empty(); }
  std::span<const double> point(std::size_t i) const { return {points_.data() + i * dim(), dim()}; }
  const std::vector<double>& data() const noexcept { return points_; }
  const Box& window() const noexcept { return window_; }

  bool truncated = false;

 private:
  Box window_;
  std::vector<double> points_;
};

PointCloud merge(std::span<const PointCloud> clouds, double dedup_tol);

/// Header x_1..x_d, 17 significant digits.
void write_cloud_csv(std::ostream& out, const PointCloud& cloud);

/// Pivots above rel_tol times the largest Jacobian column norm; an all-zero
/// Jacobian has rank 0.
std::size_t rank_at(const ImplicitSystem& system, std::span<const double> point,
                    double rel_tol = kDefaultMinorTol);

struct RegularSample {
  Vector point;
  std::size_t radius_index = 0;
  /// Position in the direction sequence that produced this point.
  std::size_t direction_index = 0;
};

/// Direction k on the unit sphere of R^d: the 2d signed axes first
/// (+e1, -e1, +e2, ...), then a Kronecker sequence (golden angle in 2D).
Vector sample_direction(std::size_t dim, std::size_t k);

/// Scans per_radius directions on each sphere |x - x0| = r, keeping points
/// strictly inside the domain where rank J = l. Throws NoRegularPoints for
/// the first radius that yields none.
std::vector<RegularSample> sample_regular_points(const ImplicitSystem& system, const Vector& x0,
                                                 std::span<const double> radii, std::size_t per_radius,
                                                 double rank_tol = kDefaultMinorTol);

struct TraceOptions {
  FieldMode mode = FieldMode::IdentityCompletion;
  double step = 1e-3;
  /// Steps added per direction and side at each extension.
  std::size_t chunk_steps = 64;
  /// Node cap on the traced grid.
  std::size_t budget = 2'000'000;
  /// An extension whose new nodes exceed this |F - F(x^n)| is discarded.
  double trace_tol = 1e-8;
  double dedup_tol = 1e-12;
  unsigned threads = 0;
};

/// Traces F_j(x) = F_j(xn) from xn, extending each direction while some node
/// on its frontier faces lies in the window. Extension in a direction stops
/// at the first integration error or residual above trace_tol; the cloud is
/// flagged truncated when the budget stops it.
PointCloud level_set_trace(const ImplicitSystem& system, const Vector& xn, const Box& window,
                           const TraceOptions& options = {});

/// Hausdorff-Pompeiu distance. Brute force up to 10^4 points per cloud, a
/// uniform cell grid above. Throws EmptyCloud.
double hausdorff(const PointCloud& a, const PointCloud& b, unsigned threads = 0);

struct GenSolOptions {
  std::vector<double> radii;
  std::size_t per_radius = 8;
  Box window;
  TraceOptions trace;
  double rank_tol = kDefaultMinorTol;
  /// Stop once a Hausdorff step falls below this value.
  std::optional<double> eps_stop;
};

struct GenSolReport {
  std::vector<double> radii;
  /// Merged trace clouds T_n, one per radius actually processed.
  std::vector<PointCloud> clouds;
  std::vector<std::size_t> samples_per_cloud;
  /// hausdorff(clouds[i], clouds[i + 1]).
  std::vector<double> hausdorff_steps;
  PointCloud limit;
  double seed_distance = 0.0;
  /// max_j |F_j| over the limit cloud (original levels).
  double max_residual = 0.0;
  bool truncated = false;
};

/// Throws NotCritical when rank J(x0) = l.
GenSolReport generalized_solution(const ImplicitSystem& system, const Vector& x0, const GenSolOptions& options);

}  // namespace implicit

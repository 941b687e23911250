#include "implicit/system.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "implicit/error.hpp"

namespace implicit {

Box::Box(Vector lower, Vector upper) : lo(std::move(lower)), hi(std::move(upper)) {
  if (lo.size() != hi.size() || lo.size() == 0)
    fail(ErrorKind::InvalidArgument, "box bounds must be non-empty and of equal length");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) fail(ErrorKind::InvalidArgument, "box has lo > hi in coordinate " + std::to_string(i + 1));
}

Box Box::around(const Vector& center, double half_width) {
  return Box(center.array() - half_width, center.array() + half_width);
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (!(x[i] >= lo[k] && x[i] <= hi[k])) return false;
  }
  return true;
}

bool Box::strictly_contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (!(x[i] > lo[k] && x[i] < hi[k])) return false;
  }
  return true;
}

Box Box::intersect(const Box& other) const {
  Vector l = lo.cwiseMax(other.lo);
  Vector h = hi.cwiseMin(other.hi);
  return Box(l, h.cwiseMax(l));
}

ImplicitSystem::ImplicitSystem(std::vector<ScalarField> fields, Box domain, Vector seed,
                               double seed_tol)
    : dim_(static_cast<std::size_t>(seed.size())),
      fields_(std::move(fields)),
      domain_(std::move(domain)),
      seed_(std::move(seed)),
      levels_(Vector::Zero(static_cast<Eigen::Index>(fields_.size()))) {
  if (fields_.empty() || fields_.size() >= dim_)
    fail(ErrorKind::InvalidArgument, "need 1 <= l <= d-1 equations (got l=" +
                                         std::to_string(fields_.size()) + ", d=" +
                                         std::to_string(dim_) + ")");
  for (const auto& f : fields_)
    if (f.dim() != dim_) fail(ErrorKind::InvalidArgument, "field dimension differs from seed length");
  if (domain_.dim() != dim_) fail(ErrorKind::InvalidArgument, "domain dimension differs from seed length");
  if (!domain_.strictly_contains(as_span(seed_)))
    fail(ErrorKind::InvalidArgument, "seed must lie strictly inside the domain");
  for (std::size_t j = 0; j < fields_.size(); ++j) {
    const double v = fields_[j].eval(as_span(seed_));
    if (!(std::abs(v) <= seed_tol))
      fail(ErrorKind::InvalidArgument, "F_" + std::to_string(j + 1) + "(seed) = " +
                                           std::to_string(v) + " exceeds seed tolerance");
  }
}

Vector ImplicitSystem::residual(std::span<const double> x) const {
  Vector r(static_cast<Eigen::Index>(fields_.size()));
  for (std::size_t j = 0; j < fields_.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    r[k] = fields_[j].eval(x) - levels_[k];
  }
  return r;
}

ImplicitSystem ImplicitSystem::shifted(const Vector& new_seed) const {
  if (new_seed.size() != static_cast<Eigen::Index>(dim_))
    fail(ErrorKind::InvalidArgument, "shifted seed has wrong dimension");
  if (!domain_.strictly_contains(as_span(new_seed)))
    fail(ErrorKind::InvalidArgument, "shifted seed must lie strictly inside the domain");
  ImplicitSystem s;
  s.dim_ = dim_;
  s.fields_ = fields_;
  s.domain_ = domain_;
  s.seed_ = new_seed;
  s.levels_.resize(static_cast<Eigen::Index>(fields_.size()));
  for (std::size_t j = 0; j < fields_.size(); ++j)
    s.levels_[static_cast<Eigen::Index>(j)] = fields_[j].eval(as_span(new_seed));
  return s;
}

}  // namespace implicit

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "implicit/error.hpp"
#include "implicit/integrate.hpp"
#include "implicit/verify.hpp"
#include "oracles.hpp"

using namespace implicit;

namespace {

ChainConfig config(std::vector<double> spans, std::vector<double> steps,
                   FieldMode mode = FieldMode::IdentityCompletion, unsigned threads = 0) {
  ChainConfig c;
  c.spans = std::move(spans);
  c.steps = std::move(steps);
  c.mode = mode;
  c.threads = threads;
  return c;
}

double circle_sup_error(const ParamGrid& g) {
  double worst = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto exact = oracle::circle_at(g.params_at(n)[0]);
    const auto p = g.point(n);
    worst = std::max({worst, std::abs(p[0] - exact[0]), std::abs(p[1] - exact[1])});
  }
  return worst;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("existence intervals") {
  ExistenceOptions ham;
  ham.mode = FieldMode::Hamiltonian;
  ham.outer = Box::around(oracle::vec({1, 0}), 1.0);
  const std::vector<double> b{0.5};
  // |(-2 x2, 2 x1)| peaks at the corners (2, +-1) of [0,2]x[-1,1].
  const auto span = existence_intervals(oracle::circle(), b, ham);
  REQUIRE(span.size() == 1);
  CHECK(span[0] == doctest::Approx(0.5 / (2 * std::sqrt(5.0))).epsilon(1e-12));

  const std::vector<double> margins{0.2, 0.6};
  const auto lin = existence_intervals(oracle::plane(), margins);
  CHECK(lin[0] == doctest::Approx(0.2 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(lin[1] == doctest::Approx(0.6 / std::sqrt(2.0)).epsilon(1e-14));

  const std::vector<double> zero{0.0, 0.5};
  CHECK(kind_of([&] { (void)existence_intervals(oracle::plane(), zero); }) == ErrorKind::EmptyMargin);
  const std::vector<double> negative{0.1, -0.5};
  CHECK(kind_of([&] { (void)existence_intervals(oracle::plane(), negative); }) == ErrorKind::EmptyMargin);
}

TEST_CASE("grid layout") {
  const ParamGrid g(3, {2, 1}, {0.5, 0.25}, FieldMode::IdentityCompletion, VariablePermutation::identity(3, 1));
  CHECK(g.size() == 15);
  CHECK(g.shape() == std::vector<std::size_t>{5, 3});
  CHECK(g.origin() == 7);
  CHECK(g.stride(0) == 3);
  const std::vector<std::size_t> m{4, 0};
  CHECK(g.flat(m) == 12);
  CHECK(g.multi(12) == m);
  CHECK(g.params_at(12) == std::vector<double>{1.0, -0.25});
  CHECK(g.span(0) == 1.0);
}

TEST_CASE("linear system integrates exactly") {
  const auto g = integrate_chain(oracle::plane(), config({1, 1}, {0.1, 0.1}));
  CHECK(g.shape() == std::vector<std::size_t>{21, 21});
  double worst = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto t = g.params_at(n);
    const auto y = g.point(n);
    worst = std::max({worst, std::abs(y[0] + t[0] + t[1]), std::abs(y[1] - t[0]), std::abs(y[2] - t[1])});
  }
  CHECK(worst <= 1e-15);
  CHECK(residuals(g, oracle::plane()).overall_max() <= 1e-15);
}

TEST_CASE("circle under the Hamiltonian field") {
  const auto circle = oracle::circle();
  const double pi = std::numbers::pi;
  const auto quarter = integrate_chain(circle, config({pi / 4}, {pi / 400}, FieldMode::Hamiltonian));
  const auto top = quarter.point(quarter.size() - 1);
  CHECK(std::abs(top[0]) <= 1e-8);
  CHECK(std::abs(top[1] - 1.0) <= 1e-8);
  CHECK(circle_sup_error(quarter) <= 1e-8);

  const auto g = integrate_chain(circle, config({3.2}, {0.01}, FieldMode::Hamiltonian));
  CHECK(g.size() == 641);
  CHECK(circle_sup_error(g) <= 1e-7);
  CHECK(residuals(g, circle).overall_max() <= 1e-8);
  const auto origin = g.point(g.origin());
  CHECK(origin[0] == 1.0);
  CHECK(origin[1] == 0.0);
}

TEST_CASE("wedge level curve from (-1/2, 0)") {
  const auto wedge = oracle::system({oracle::kWedge}, 2, oracle::vec({0, 0}));
  const auto shifted = wedge.shifted(oracle::vec({-0.5, 0}));
  const auto g = integrate_chain(shifted, config({0.5}, {1e-3}, FieldMode::Hamiltonian));
  CHECK(residuals(g, shifted).overall_max() <= 1e-9);
}

TEST_CASE("resume_chain") {
  const auto circle = oracle::circle();
  const double pi = std::numbers::pi;
  const auto half = integrate_chain(circle, config({pi / 2}, {pi / 400}, FieldMode::Hamiltonian));
  const auto same = resume_chain(circle, half, 0, 0.0);
  CHECK(same.data() == half.data());
  CHECK(same.same_layout(half));

  const auto full = resume_chain(circle, half, 0, pi / 2);
  CHECK(full.half_counts()[0] == 400);
  CHECK(full.span(0) == doctest::Approx(pi));
  CHECK(circle_sup_error(full) <= 1e-6);
  const auto end = full.point(full.size() - 1);
  CHECK(std::hypot(end[0] - 1.0, end[1]) <= 1e-6);
  bool left = false;
  for (std::size_t n = 0; n < full.size(); ++n) left = left || full.point(n)[0] < -0.5;
  CHECK(left);
  // Old nodes keep their values.
  for (std::size_t n = 0; n < half.size(); ++n) {
    const auto a = half.point(n);
    const auto b = full.point(n + 200);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
  }

  const auto plane = integrate_chain(oracle::plane(), config({1, 0.5}, {0.1, 0.1}));
  CHECK(kind_of([&] { (void)resume_chain(oracle::plane(), plane, 0, 2.0); }) == ErrorKind::DomainEscape);
  CHECK(kind_of([&] { (void)resume_chain(oracle::plane(), plane, 2, 0.1); }) == ErrorKind::InvalidArgument);

  const auto grown = resume_chain(oracle::plane(), plane, 1, 0.3);
  CHECK(grown.shape() == std::vector<std::size_t>{21, 17});
  CHECK(residuals(grown, oracle::plane()).overall_max() <= 1e-15);
}

TEST_CASE("chain errors carry the point and parameters") {
  CHECK(kind_of([] { (void)integrate_chain(oracle::plane(), config({3, 0.1}, {0.1, 0.1})); }) ==
        ErrorKind::DomainEscape);
  try {
    (void)integrate_chain(oracle::plane(), config({3, 0.1}, {0.1, 0.1}));
  } catch (const ChainError& e) {
    CHECK(e.point().size() == 3);
    CHECK(e.params().size() == 2);
    CHECK(std::abs(e.params()[0]) > 1.9);
  }
  // A = dF/dx1 = x3 vanishes once the second direction drives x3 from 1 to 0.
  const auto saddle = oracle::system({"x1*x3 - x2"}, 3, oracle::vec({1, 1, 1}), 100.0);
  try {
    (void)integrate_chain(saddle, config({0.1, 1.5}, {0.1, 0.1}));
    FAIL("expected a chain error");
  } catch (const ChainError& e) {
    CHECK(e.kind() == ErrorKind::SingularMinor);
    REQUIRE(e.params().size() == 2);
    CHECK(e.params()[1] < -0.85);
    CHECK(std::abs(e.point()[2]) < 1e-8);
  }
  CHECK(kind_of([] { (void)integrate_chain(oracle::plane(), config({1, 1}, {0.3, 0.1})); }) ==
        ErrorKind::InvalidArgument);
  CHECK(kind_of([] { (void)integrate_chain(oracle::plane(), config({1}, {0.1})); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("nesting consistency and determinism") {
  const auto sphere = oracle::sphere();
  const auto wide = integrate_chain(sphere, config({0.3, 0.2}, {0.01, 0.01}, FieldMode::IdentityCompletion, 4));
  const auto narrow = integrate_chain(sphere, config({0.3, 0.1}, {0.01, 0.01}, FieldMode::IdentityCompletion, 1));
  const auto origin = wide.point(wide.origin());
  CHECK(origin[0] == 1.0);
  CHECK(origin[1] == 0.0);
  CHECK(origin[2] == 0.0);
  std::size_t mismatches = 0;
  for (std::size_t n = 0; n < narrow.size(); ++n) {
    auto m = narrow.multi(n);
    m[1] += 10;
    const auto a = narrow.point(n);
    const auto b = wide.point(wide.flat(m));
    for (std::size_t c = 0; c < 3; ++c) mismatches += a[c] != b[c];
  }
  CHECK(mismatches == 0);

  const auto serial = integrate_chain(sphere, config({0.3, 0.2}, {0.01, 0.01}, FieldMode::IdentityCompletion, 1));
  CHECK(serial.data() == wide.data());
}

TEST_CASE("property: RK4 residual order at resolvable steps") {
  for (const auto& sys : {oracle::sphere(), oracle::quadric()}) {
    const auto coarse = integrate_chain(sys, config({0.3, 0.3}, {0.1, 0.1}));
    const auto fine = integrate_chain(sys, config({0.3, 0.3}, {0.05, 0.05}));
    const auto finer = integrate_chain(sys, config({0.3, 0.3}, {0.025, 0.025}));
    const double r0 = residuals(coarse, sys).overall_max();
    const double r1 = residuals(fine, sys).overall_max();
    const double r2 = residuals(finer, sys).overall_max();
    CHECK(r0 / r1 >= 8);
    CHECK(r0 / r1 <= 32);
    CHECK(r1 / r2 >= 8);
    CHECK(r1 / r2 <= 32);
  }
}

TEST_CASE("field mode names") {
  CHECK(parse_field_mode("identity") == FieldMode::IdentityCompletion);
  CHECK(parse_field_mode("scaled") == FieldMode::Scaled);
  CHECK(parse_field_mode("hamiltonian") == FieldMode::Hamiltonian);
  CHECK(parse_field_mode(to_string(FieldMode::Scaled)) == FieldMode::Scaled);
  CHECK_THROWS_AS((void)parse_field_mode("orthonormal"), Error);
}

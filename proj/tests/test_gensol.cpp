#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "implicit/error.hpp"
#include "implicit/gensol.hpp"
#include "oracles.hpp"

using namespace implicit;

namespace {

ImplicitSystem wedge() { return oracle::system({oracle::kWedge}, 2, oracle::vec({0, 0})); }

Box wedge_window() { return {oracle::vec({-1, -1}), oracle::vec({0, 1})}; }

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error");
  return ErrorKind::Io;
}

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g;
  std::vector<double> flat(n * d);
  for (auto& v : flat) v = g(rng);
  return PointCloud(oracle::cube(d, 100), flat, 0.0);
}

// Direct double loop, independent of the library's search structures.
double brute_hausdorff(const PointCloud& a, const PointCloud& b) {
  const auto directed = [](const PointCloud& p, const PointCloud& q) {
    double worst = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double best = INFINITY;
      for (std::size_t j = 0; j < q.size(); ++j) {
        double s = 0;
        for (std::size_t c = 0; c < p.dim(); ++c) s += (p.point(i)[c] - q.point(j)[c]) * (p.point(i)[c] - q.point(j)[c]);
        best = std::min(best, s);
      }
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace

TEST_CASE("rank at points") {
  CHECK(rank_at(wedge(), std::vector<double>{0, 0}) == 0);
  CHECK(rank_at(wedge(), std::vector<double>{-0.5, 0}) == 1);
  CHECK(rank_at(oracle::sphere(), std::vector<double>{1, 0, 0}) == 1);
  const auto dup = oracle::system({"x1", "x1"}, 3, oracle::vec({0, 0, 0}));
  CHECK(rank_at(dup, std::vector<double>{0.3, 0.2, 0.1}) == 1);
}

TEST_CASE("sample directions") {
  CHECK(sample_direction(2, 0) == oracle::vec({1, 0}));
  CHECK(sample_direction(2, 1) == oracle::vec({-1, 0}));
  CHECK(sample_direction(2, 2) == oracle::vec({0, 1}));
  CHECK(sample_direction(2, 3) == oracle::vec({0, -1}));
  for (std::size_t d : {2u, 3u, 5u})
    for (std::size_t k = 0; k < 40; ++k) CHECK(sample_direction(d, k).norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sample_direction(3, 20) != sample_direction(3, 21));
}

TEST_CASE("regular samples near the critical wedge point") {
  const std::vector<double> radii{0.5, 0.2};
  const auto s = sample_regular_points(wedge(), oracle::vec({0, 0}), radii, 4);
  bool half = false;
  bool fifth = false;
  for (const auto& r : s) {
    CHECK(rank_at(wedge(), as_span(r.point)) == 1);
    half = half || (r.point - oracle::vec({-0.5, 0})).norm() <= 1e-15;
    fifth = fifth || (r.point - oracle::vec({-0.2, 0})).norm() <= 1e-15;
  }
  CHECK(half);
  CHECK(fifth);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i - 1].radius_index <= s[i].radius_index);

  const std::vector<double> two{0.5, 0.25};
  CHECK(sample_regular_points(oracle::sphere(), oracle::vec({1, 0, 0}), two, 8).size() == 16);

  const auto dup = oracle::system({"x1", "x1"}, 3, oracle::vec({0, 0, 0}));
  CHECK(kind_of([&] { (void)sample_regular_points(dup, oracle::vec({0, 0, 0}), two, 8); }) ==
        ErrorKind::NoRegularPoints);
  const std::vector<double> rising{0.25, 0.5};
  CHECK(kind_of([&] { (void)sample_regular_points(wedge(), oracle::vec({0, 0}), rising, 8); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("level set traces") {
  TraceOptions opt;
  opt.mode = FieldMode::Hamiltonian;
  opt.trace_tol = 1e-9;
  const auto xn = oracle::vec({-0.5, 0});
  const auto cloud = level_set_trace(wedge(), xn, wedge_window(), opt);
  REQUIRE(!cloud.empty());
  CHECK(!cloud.truncated);
  const double level = oracle::wedge(-0.5, 0);
  double worst = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    CHECK(wedge_window().contains(p));
    worst = std::max(worst, std::abs(oracle::wedge(p[0], p[1]) - level));
  }
  CHECK(worst <= 1e-9);

  TraceOptions none = opt;
  none.budget = 0;
  const auto empty = level_set_trace(wedge(), xn, wedge_window(), none);
  CHECK(empty.empty());
  CHECK(empty.truncated);

  TraceOptions small = opt;
  small.budget = 200;
  const auto cut = level_set_trace(wedge(), xn, wedge_window(), small);
  CHECK(cut.truncated);
  CHECK(cut.size() <= 200);

  const auto sphere = oracle::sphere();
  TraceOptions reg;
  reg.step = 0.01;
  reg.chunk_steps = 8;
  const Box patch(oracle::vec({0.5, -0.3, -0.3}), oracle::vec({1.1, 0.3, 0.3}));
  const auto s = level_set_trace(sphere, oracle::vec({1, 0, 0}), patch, reg);
  REQUIRE(!s.empty());
  double sw = 0;
  for (std::size_t i = 0; i < s.size(); ++i) sw = std::max(sw, std::abs(sphere.residual(s.point(i))[0]));
  CHECK(sw <= 1e-8);
}

TEST_CASE("point clouds clip and deduplicate") {
  const Box unit(oracle::vec({0, 0}), oracle::vec({1, 1}));
  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5 + 1e-14, 2, 0.5, 0.2, 0.9, 0.2, 0.9};
  const PointCloud c(unit, flat, 1e-12);
  CHECK(c.size() == 2);
  const PointCloud exact(unit, flat, 0.0);
  CHECK(exact.size() == 3);
  const PointCloud other(unit, std::vector<double>{0.2, 0.9, 0.7, 0.1}, 1e-12);
  const std::vector<PointCloud> both{c, other};
  CHECK(merge(both, 1e-12).size() == 3);
  std::ostringstream out;
  write_cloud_csv(out, c);
  CHECK(out.str() == "x_1,x_2\n0.5,0.5\n0.20000000000000001,0.90000000000000002\n");
  CHECK(kind_of([&] { PointCloud(unit, std::vector<double>{1, 2, 3}, 0.0); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("hausdorff distance") {
  const Box big = oracle::cube(2, 10);
  const PointCloud a(big, std::vector<double>{0, 0}, 0);
  const PointCloud b(big, std::vector<double>{3, 4}, 0);
  CHECK(hausdorff(a, a) == 0.0);
  CHECK(hausdorff(a, b) == 5.0);
  CHECK(kind_of([&] { (void)hausdorff(a, PointCloud(big)); }) == ErrorKind::EmptyCloud);

  std::mt19937_64 rng(17);
  const auto p = random_cloud(rng, 12000, 2);
  const auto q = random_cloud(rng, 11000, 2);
  CHECK(hausdorff(p, q) == doctest::Approx(brute_hausdorff(p, q)).epsilon(1e-15));
  const auto p3 = random_cloud(rng, 15000, 3);
  const auto q3 = random_cloud(rng, 300, 3);
  CHECK(hausdorff(p3, q3) == doctest::Approx(brute_hausdorff(p3, q3)).epsilon(1e-15));
}

TEST_CASE("property: hausdorff is a metric on random clouds") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 30; ++t) {
    const std::size_t d = 2 + static_cast<std::size_t>(t % 2);
    const auto a = random_cloud(rng, 20 + rng() % 200, d);
    const auto b = random_cloud(rng, 20 + rng() % 200, d);
    const auto c = random_cloud(rng, 20 + rng() % 200, d);
    const double ab = hausdorff(a, b);
    CHECK(ab == hausdorff(b, a));
    CHECK(ab > 0);
    CHECK(hausdorff(a, a) == 0.0);
    CHECK(hausdorff(a, c) <= ab + hausdorff(b, c) + 1e-12);
  }
}

TEST_CASE("generalized solution guards") {
  GenSolOptions opt;
  opt.radii = {0.5, 0.25};
  opt.window = oracle::cube(3, 1.5);
  CHECK(kind_of([&] { (void)generalized_solution(oracle::sphere(), oracle::vec({1, 0, 0}), opt); }) ==
        ErrorKind::NotCritical);
}

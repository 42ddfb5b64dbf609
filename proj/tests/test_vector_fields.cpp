#include <cmath>
#include <random>

#include "doctest.h"
#include "stability_index/vector_fields.hpp"

using namespace stability_index;

namespace {

const SystemSpec kAttract2{Family::PowerAttract, 2.0, std::nullopt};
const SystemSpec kRepelHalf{Family::PowerRepel, 0.5, std::nullopt};
const SystemSpec kPhi{Family::PhiSystem, 2.0, std::nullopt};
const SystemSpec kPiecewise{Family::PiecewiseLinear, 2.0, std::nullopt};

void check_velocity(Velocity v, double dx, double dy) {
  CHECK(v.dx == doctest::Approx(dx).epsilon(1e-14));
  CHECK(v.dy == doctest::Approx(dy).epsilon(1e-14));
}

}  // namespace

TEST_CASE("quadrant right-hand sides") {
  check_velocity(eval_quadrant(kAttract2, {0, 0}), 0, 0);
  check_velocity(eval_quadrant(kAttract2, {1, 0}), 1, 0);
  check_velocity(eval_quadrant(kAttract2, {0, 1}), 0, -1);
  check_velocity(eval_quadrant(kRepelHalf, {1, 0}), 0.5, 0);
  check_velocity(eval_quadrant(kPhi, {0, 0.5}), 0, 0.25);
}

TEST_CASE("phi values") {
  CHECK(phi(0.0) == 0.0);
  CHECK(phi(1.0) == doctest::Approx(1.103638323514327).epsilon(1e-15));
  CHECK(phi(0.5) == doctest::Approx(0.2706705664732254).epsilon(1e-15));
  CHECK_THROWS(phi(-0.1));
  CHECK(phi(1e-3) == 0.0);  // exp(-1000) underflows, matching phi(0)
}

TEST_CASE("phi is strictly increasing and phi_inverse inverts it") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.02, 5.0);
  for (int i = 0; i < 2000; ++i) {
    double x1 = u(rng);
    double x2 = u(rng);
    if (x1 == x2) continue;
    if (x1 > x2) std::swap(x1, x2);
    CHECK(phi(x1) < phi(x2));
    CHECK(phi_inverse(phi(x1)) == doctest::Approx(x1).epsilon(1e-10));
  }
}

TEST_CASE("plane extension") {
  check_velocity(eval_plane(kPiecewise, {-1, -1}), 1, 1);
  check_velocity(eval_plane(kPiecewise, {1, 1}), 1, 1);
  check_velocity(eval_plane(kPiecewise, {-1, 1}), 1, 1);
  check_velocity(eval_plane(kPiecewise, {1, -1}), 1, 1);
  check_velocity(eval_plane(kAttract2, {-1, 0}), -1, 0);
  for (const auto& spec : {kAttract2, kRepelHalf, kPhi, kPiecewise})
    check_velocity(eval_plane(spec, {0, 0}), 0, 0);
}

TEST_CASE("transformed system") {
  SystemSpec t1 = kAttract2;
  t1.p = 1.0;
  SystemSpec t2 = kAttract2;
  t2.p = 2.0;
  check_velocity(eval_transformed(t1, {1, 0}), 1, 0);
  check_velocity(eval_transformed(t2, {0, 1}), 0, -1);
  check_velocity(eval_transformed(t2, {1, 0}), 0.5, 0);
  for (double u = 0.0; u <= 1.0; u += 0.05) {
    for (double v = 0.0; v <= 1.0; v += 0.05) {
      const Velocity a = eval_transformed(t1, {u, v});
      const Velocity b = eval_quadrant(kAttract2, {u, v});
      CHECK(a.dx == doctest::Approx(b.dx).epsilon(1e-15));
      CHECK(a.dy == doctest::Approx(b.dy).epsilon(1e-15));
    }
  }
  CHECK_THROWS_AS(eval_transformed(kAttract2, {1, 1}), InvalidSpec);
}

TEST_CASE("spec validation and errors") {
  CHECK_THROWS_AS(validate(SystemSpec{Family::PowerAttract, 1.0, std::nullopt}), InvalidSpec);
  CHECK_THROWS_AS(validate(SystemSpec{Family::PowerRepel, 1.0, std::nullopt}), InvalidSpec);
  CHECK_THROWS_AS(validate(SystemSpec{Family::PowerRepel, 0.5, 2.0}), InvalidSpec);
  CHECK_THROWS_AS(validate(SystemSpec{Family::PowerAttract, 2.0, 0.4}), InvalidSpec);
  CHECK_NOTHROW(validate(SystemSpec{Family::PowerAttract, 2.0, 0.6}));
  CHECK_THROWS_AS(eval_quadrant(kAttract2, {std::nan(""), 0}), InvalidState);
  CHECK_THROWS_AS(eval_plane(kAttract2, {INFINITY, 0}), InvalidState);
}

TEST_CASE("config entry round trip") {
  for (const auto& spec : {kAttract2, kRepelHalf, kPhi, kPiecewise,
                           SystemSpec{Family::PowerAttract, 2.0, 2.0},
                           SystemSpec{Family::PowerRepel, 1.0 / 3.0, std::nullopt}}) {
    CHECK(parse_config_entry(to_config_entry(spec)) == spec);
  }
  CHECK(parse_config_entry("power-attract a=2 p=2") ==
        SystemSpec{Family::PowerAttract, 2.0, 2.0});
  CHECK_THROWS(parse_config_entry("spiral a=2"));
}

TEST_CASE("axis invariance, sign patterns and mirror symmetry on random states") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(1e-3, 2.0);
  for (int i = 0; i < 5000; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    for (const auto& spec : {kAttract2, kRepelHalf, kPhi, SystemSpec{Family::PowerAttract, 2.0, 2.0}}) {
      CHECK(eval_plane(spec, {x, 0}).dy == 0.0);
      CHECK(eval_plane(spec, {0, y}).dx == 0.0);
      const Velocity v = eval_plane(spec, {x, y});
      const Velocity mx = eval_plane(spec, {-x, y});
      const Velocity my = eval_plane(spec, {x, -y});
      CHECK(mx.dx == -v.dx);
      CHECK(mx.dy == v.dy);
      CHECK(my.dx == v.dx);
      CHECK(my.dy == -v.dy);
    }
    const double xa = std::pow(x, 2.0);
    const Velocity a = eval_quadrant(kAttract2, {x, y});
    if (std::abs(y - xa) > 1e-9) CHECK((a.dx > 0) == (y < xa));
    if (std::abs(y - 0.5 * xa) > 1e-9) CHECK((a.dy > 0) == (y < 0.5 * xa));
    const double xh = std::sqrt(x);
    const Velocity r = eval_quadrant(kRepelHalf, {x, y});
    if (std::abs(y - 0.5 * xh) > 1e-9) CHECK((r.dx > 0) == (y < 0.5 * xh));
    if (std::abs(y - xh) > 1e-9) CHECK((r.dy > 0) == (y < xh));
    const double ph = phi(x);
    const Velocity p = eval_quadrant(kPhi, {x, y});
    if (std::abs(y - 0.5 * ph) > 1e-9) CHECK((p.dx > 0) == (y > 0.5 * ph));
    if (std::abs(y - ph) > 1e-9) CHECK((p.dy > 0) == (y > ph));
  }
}

TEST_CASE("VectorField matches eval_plane") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const auto& spec : {kAttract2, kRepelHalf, kPhi, kPiecewise,
                           SystemSpec{Family::PowerAttract, 2.0, 2.0}}) {
    const VectorField f(spec);
    for (int i = 0; i < 500; ++i) {
      const State s{u(rng), u(rng)};
      CHECK(f(s) == eval_plane(spec, s));
    }
  }
}

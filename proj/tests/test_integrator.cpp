#include <cmath>
#include <random>

#include "doctest.h"
#include "stability_index/integrator.hpp"

using namespace stability_index;

namespace {

const SystemSpec kAttract2{Family::PowerAttract, 2.0, std::nullopt};
const SystemSpec kRepelHalf{Family::PowerRepel, 0.5, std::nullopt};
const SystemSpec kPhi{Family::PhiSystem, 2.0, std::nullopt};
const SystemSpec kPiecewise{Family::PiecewiseLinear, 2.0, std::nullopt};

void check_outcome_invariants(const Outcome& o, const IntegratorConfig& cfg) {
  const double r = std::hypot(o.final.x, o.final.y);
  switch (o.kind) {
    case OutcomeKind::Converged: CHECK(r <= cfg.r_in * (1.0 + 1e-6)); break;
    case OutcomeKind::Escaped: CHECK(r >= cfg.r_out * (1.0 - 1e-6)); break;
    case OutcomeKind::LeftDelta: CHECK(r >= *cfg.delta * (1.0 - 1e-6)); break;
    case OutcomeKind::TimedOut: break;
  }
}

}  // namespace

TEST_CASE("config validation") {
  IntegratorConfig c;
  CHECK_NOTHROW(c.validate());
  c.delta = 0.5;
  CHECK_NOTHROW(c.validate());
  c.delta = 3.0;
  CHECK_THROWS(c.validate());
  c.delta.reset();
  c.r_in = 5.0;
  CHECK_THROWS(c.validate());
  IntegratorConfig d;
  d.tol = 0.0;
  CHECK_THROWS(d.validate());
  IntegratorConfig e;
  e.h_min = 1.0;
  CHECK_THROWS(e.validate());
  CHECK_THROWS_AS(integrate(kAttract2, {NAN, 0.0}, IntegratorConfig{}), InvalidState);
}

TEST_CASE("integration examples") {
  IntegratorConfig cfg;
  const Outcome y_axis = integrate(kAttract2, {0.0, 0.5}, cfg);
  CHECK(y_axis.kind == OutcomeKind::Converged);
  check_outcome_invariants(y_axis, cfg);

  IntegratorConfig unit = cfg;
  unit.r_out = 1.0;
  const Outcome x_axis = integrate(kAttract2, {0.5, 0.0}, unit);
  CHECK(x_axis.kind == OutcomeKind::Escaped);
  check_outcome_invariants(x_axis, unit);

  for (const auto& spec : {kAttract2, kRepelHalf, kPhi, kPiecewise}) {
    const Outcome o = integrate(spec, {0.0, 0.0}, cfg);
    CHECK(o.kind == OutcomeKind::Converged);
    CHECK(o.t_exit == 0.0);
  }
}

TEST_CASE("phi system excursion leaves the delta tube but converges") {
  IntegratorConfig cfg;
  cfg.r_in = 0.05;
  cfg.r_out = 10.0;
  cfg.delta = 0.6;
  const Outcome local = integrate(kPhi, {0.5, 1.0}, cfg);
  CHECK(local.kind == OutcomeKind::LeftDelta);
  check_outcome_invariants(local, cfg);

  // Started inside the tube: the trajectory first moves away from the origin.
  IntegratorConfig small = cfg;
  small.delta = 0.3;
  const Outcome inside = integrate(kPhi, {0.2, 0.1}, small);
  CHECK(inside.kind == OutcomeKind::LeftDelta);
  CHECK(inside.t_exit > 0.0);

  cfg.delta.reset();
  const Outcome global = integrate(kPhi, {0.5, 1.0}, cfg);
  CHECK(global.kind == OutcomeKind::Converged);
  check_outcome_invariants(global, cfg);
}

TEST_CASE("classification examples") {
  IntegratorConfig cfg;
  const Classification a = classify(kAttract2, {0.1, 0.02}, cfg, true);
  CHECK(a.label == BasinLabel::InBasin);
  CHECK(a.certified);
  const Classification a_int = classify(kAttract2, {0.1, 0.02}, cfg, false);
  CHECK(a_int.label == BasinLabel::InBasin);
  CHECK_FALSE(a_int.certified);

  CHECK(classify(kRepelHalf, {0.25, 0.1}, cfg, true).label == BasinLabel::OutOfBasin);
  CHECK(classify(kRepelHalf, {0.25, 0.1}, cfg, false).label == BasinLabel::OutOfBasin);
  CHECK(classify(kPiecewise, {-0.3, -0.4}, cfg, true).label == BasinLabel::InBasin);
  CHECK(classify(kPiecewise, {-0.3, -0.4}, cfg, false).label == BasinLabel::InBasin);
  CHECK(classify(kPiecewise, {0.3, -0.4}, cfg, false).label == BasinLabel::OutOfBasin);

  IntegratorConfig local = cfg;
  local.delta = 0.3;
  CHECK(classify(kAttract2, {0.1, 0.02}, local, true).label == BasinLabel::InLocalBasin);
  CHECK(classify(kAttract2, {0.1, 0.02}, local, false).label == BasinLabel::InLocalBasin);
}

TEST_CASE("axis confinement") {
  IntegratorConfig cfg;
  cfg.t_max = 50.0;
  for (const auto& spec : {kAttract2, kRepelHalf, kPhi, SystemSpec{Family::PowerAttract, 2.0, 2.0}}) {
    for (const State s0 : {State{0.0, 0.7}, State{0.3, 0.0}, State{0.0, -0.4}, State{-0.2, 0.0}}) {
      double worst = 0.0;
      integrate(spec, s0, cfg, [&](double t, State s) {
        const double drift = s0.x == 0.0 ? std::fabs(s.x) : std::fabs(s.y);
        if (t > 0.0) worst = std::max(worst, drift / t);
      });
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("third-quadrant piecewise solution decays as exp(-t)") {
  IntegratorConfig cfg;
  const State s0{-0.6, -0.8};
  const double r0 = 1.0;
  double worst = 0.0;
  const Outcome o = integrate(kPiecewise, s0, cfg, [&](double t, State s) {
    const double exact = r0 * std::exp(-t);
    worst = std::max(worst, std::fabs(std::hypot(s.x, s.y) - exact) / exact);
  });
  CHECK(o.kind == OutcomeKind::Converged);
  CHECK(worst <= 10.0 * cfg.tol);
  CHECK(o.t_exit == doctest::Approx(std::log(r0 / cfg.r_in)).epsilon(1e-6));
}

TEST_CASE("labels are stable under tolerance halving") {
  IntegratorConfig coarse;
  IntegratorConfig fine = coarse;
  fine.tol = coarse.tol / 2.0;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.005, 0.1);
  int probes = 0;
  while (probes < 50) {
    const State s{u(rng), u(rng)};
    // Keep probes away from the boundary y = 1.5 x^2.
    const double ratio = s.y / (1.5 * s.x * s.x);
    if (std::fabs(ratio - 1.0) < 0.05) continue;
    ++probes;
    const Outcome a = integrate(kAttract2, s, coarse);
    const Outcome b = integrate(kAttract2, s, fine);
    CHECK(a.kind == b.kind);
    CHECK(a.kind != OutcomeKind::TimedOut);
  }
}

TEST_CASE("certified labels agree with integration") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  IntegratorConfig cfg;
  for (const auto& spec : {kAttract2, kRepelHalf, kPiecewise, SystemSpec{Family::PowerAttract, 2.0, 2.0}}) {
    const ConeParams cones = certified_cones(spec, cfg);
    int checked = 0;
    while (checked < 100) {
      const State s{u(rng), u(rng)};
      const ConeLabel label = certified_label(spec, s, cones);
      if (label == ConeLabel::Undetermined) continue;
      ++checked;
      const Classification c = classify(spec, s, cfg, false);
      CHECK_FALSE(c.timed_out);
      CHECK((c.label == BasinLabel::InBasin) == (label == ConeLabel::InBasin));
    }
  }
}

TEST_CASE("repel escape extent") {
  IntegratorConfig cfg;
  const double half = certify_repel_extent(kRepelHalf, 0.25, cfg);
  CHECK(half > 0.0);
  CHECK(half <= repel_invariance_limit(0.5, 0.25));
  CHECK(certified_cones(kRepelHalf, cfg).repel_extent == half);
  CHECK(certified_cones(kAttract2, cfg).repel_extent == 0.0);
  CHECK_THROWS(certify_repel_extent(kAttract2, 0.25, cfg));
}

TEST_CASE("Lyapunov function increases along phi trajectories") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(0.05, 0.6);
  IntegratorConfig cfg;
  cfg.r_in = 0.02;
  cfg.r_out = 5.0;
  cfg.max_steps = 20000;
  for (int i = 0; i < 10; ++i) {
    const State s0{u(rng), u(rng)};
    double last = -1.0;
    bool increasing = true;
    integrate(kPhi, s0, cfg, [&](double, State s) {
      const double v = lyapunov_V(s);
      if (!(v > last)) increasing = false;
      last = v;
    });
    CHECK(increasing);
  }
}

TEST_CASE("off-axis runs stay in their quadrant without stiff step counts") {
  IntegratorConfig cfg;
  for (const State s0 : {State{0.01, 0.15}, State{-0.1, -0.15}, State{0.02, -0.3}, State{-0.05, 0.1}}) {
    bool same_quadrant = true;
    const Outcome o = integrate(kRepelHalf, s0, cfg, [&](double, State s) {
      if (std::signbit(s.x) != std::signbit(s0.x) || std::signbit(s.y) != std::signbit(s0.y))
        same_quadrant = false;
    });
    CHECK(same_quadrant);
    CHECK(o.kind != OutcomeKind::TimedOut);
  }
  // Near the y-axis the x-rate is -y; the approach to r_in takes ~1e12 time units.
  const Outcome o = integrate(kRepelHalf, {0.01, 0.15}, cfg);
  CHECK(o.kind == OutcomeKind::Converged);
  CHECK(o.steps < 10000);
  CHECK(o.t_exit > 1e11);
}

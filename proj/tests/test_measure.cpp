#include <cmath>
#include <random>

#include "doctest.h"
#include "stability_index/measure.hpp"
#include "stability_index/report.hpp"

using namespace stability_index;

namespace {

const SystemSpec kAttract2{Family::PowerAttract, 2.0, std::nullopt};
const SystemSpec kPhi{Family::PhiSystem, 2.0, std::nullopt};
const SystemSpec kPiecewise{Family::PiecewiseLinear, 2.0, std::nullopt};

MeasureSample synthetic(double eps, double fraction, std::uint64_t n = 100000) {
  MeasureSample s;
  s.eps = eps;
  s.n_total = n;
  s.fraction = fraction;
  s.log_fraction = fraction > 0.0 ? std::log(fraction) : -INFINITY;
  s.log_complement = fraction < 1.0 ? std::log1p(-fraction) : -INFINITY;
  s.resolution = 2.0 / static_cast<double>(n);
  s.zero_degenerate = fraction < s.resolution;
  s.one_degenerate = 1.0 - fraction < s.resolution;
  return s;
}

template <class F>
std::vector<MeasureSample> synthetic_ladder(F&& fraction, std::uint64_t n = 100000) {
  std::vector<MeasureSample> ladder;
  for (double eps : default_ladder()) ladder.push_back(synthetic(eps, fraction(eps), n));
  return ladder;
}

MeasureOptions uniform_options() {
  MeasureOptions o;
  o.mode = SamplingMode::Uniform;
  return o;
}

}  // namespace

TEST_CASE("ladders") {
  const auto l = default_ladder();
  REQUIRE(l.size() == 8);
  CHECK(l.front() == 0.1);
  CHECK(l.back() == doctest::Approx(1e-3).epsilon(1e-14));
  for (std::size_t i = 1; i < l.size(); ++i)
    CHECK(l[i - 1] / l[i] == doctest::Approx(std::pow(100.0, 1.0 / 7.0)));
  const auto loc = local_ladder(0.3);
  CHECK(loc.front() == doctest::Approx(0.03));
  CHECK(loc.back() == doctest::Approx(3e-4));
}

TEST_CASE("fit of synthetic ladders") {
  SUBCASE("bound-shaped ladder 1 - eps/3") {
    const auto e = fit_indices(synthetic_ladder([](double eps) { return 1.0 - eps / 3.0; }));
    CHECK(e.sigma_plus.value() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(e.sigma_minus.value()) < 0.02);
    CHECK(e.sigma.value() == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("constant quarter") {
    const auto e = fit_indices(synthetic_ladder([](double) { return 0.25; }));
    CHECK(std::fabs(e.sigma_minus.value()) < 1e-12);
    CHECK(std::fabs(e.sigma_plus.value()) < 1e-12);
    CHECK(std::fabs(e.sigma.value()) < 1e-12);
  }
  SUBCASE("full basin at every rung") {
    const auto e = fit_indices(synthetic_ladder([](double) { return 1.0; }));
    CHECK(e.sigma_plus.is_pos_inf());
    CHECK(e.sigma.is_pos_inf());
    CHECK(std::isnan(e.raw_slope_plus));
  }
  SUBCASE("empty basin at every rung") {
    const auto e = fit_indices(synthetic_ladder([](double) { return 0.0; }));
    CHECK(e.sigma_minus.is_pos_inf());
    CHECK(e.sigma.is_neg_inf());
  }
  SUBCASE("mixed degenerate rungs are dropped with a warning") {
    auto ladder = synthetic_ladder([](double eps) { return eps * eps; }, 1000000000);
    ladder.back() = synthetic(ladder.back().eps, 0.0, 1000000000);
    const auto e = fit_indices(ladder);
    CHECK(e.rungs_minus == 7);
    CHECK(e.sigma_minus.value() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK_FALSE(e.warnings.empty());
  }
  SUBCASE("slopes above the cutoff are infinite") {
    auto cubic = [](double eps) { return std::pow(eps, 3.0); };
    FitConventions tight;
    tight.slope_cutoff = 2.0;
    const auto e = fit_indices(synthetic_ladder(cubic, 1000000000000), tight);
    CHECK(e.sigma_minus.is_pos_inf());
    CHECK(e.raw_slope_minus == doctest::Approx(3.0));
    CHECK(e.sigma.is_neg_inf());
    CHECK(fit_indices(synthetic_ladder(cubic, 1000000000000)).sigma_minus.value() ==
          doctest::Approx(3.0));
  }
  SUBCASE("short ladders are rejected") {
    std::vector<MeasureSample> three{synthetic(0.1, 0.5), synthetic(0.01, 0.5), synthetic(0.001, 0.5)};
    CHECK_THROWS_AS(fit_indices(three), FitError);
    std::vector<MeasureSample> narrow;
    for (double eps : geometric_ladder(0.1, 0.01, 8)) narrow.push_back(synthetic(eps, 0.5));
    CHECK_THROWS_AS(fit_indices(narrow), FitError);
  }
}

TEST_CASE("slope recovery on noisy power laws") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> uq(0.2, 3.0);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int rep = 0; rep < 200; ++rep) {
    const double q = uq(rng);
    const double c = 0.5;
    std::vector<MeasureSample> ladder;
    for (double eps : default_ladder())
      ladder.push_back(synthetic(eps, c * std::pow(eps, q) * std::exp(noise(rng)), 1000000000));
    const auto e = fit_indices(ladder);
    CHECK(std::fabs(e.sigma_minus.value() - q) <= 0.01 * q + 2.0 * e.stderr_minus);
  }
}

TEST_CASE("sigma equals sigma_plus minus sigma_minus") {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int rep = 0; rep < 50; ++rep) {
    const double f0 = u(rng);
    const double q = u(rng);
    const auto e = fit_indices(synthetic_ladder([&](double eps) { return f0 * std::pow(eps / 0.1, q * 0.1); }));
    CHECK(e.sigma == e.sigma_plus - e.sigma_minus);
  }
}

TEST_CASE("estimate_fraction examples") {
  MeasureOptions strat;
  const auto pw = estimate_fraction(kPiecewise, 0.5, std::nullopt, 100000, 1, strat);
  CHECK(pw.fraction == doctest::Approx(0.25).epsilon(1e-14));

  const auto pw_u = estimate_fraction(kPiecewise, 0.5, std::nullopt, 100000, 1, uniform_options());
  CHECK(std::fabs(pw_u.fraction - 0.25) <= 3.0 * pw_u.std_error);
  CHECK(pw_u.n_total == 100000);
  CHECK(pw_u.n_basin <= pw_u.n_total);

  // The basin boundary is the invariant curve y = 1.5 x^2, so 1 - Sigma = 1.5 eps / 3.
  const auto a2 = estimate_fraction(kAttract2, 0.1, std::nullopt, 20000, 2, strat);
  CHECK(1.0 - a2.fraction >= 0.1 / 3.0);
  CHECK(1.0 - a2.fraction <= 1.6 * 0.1 / 3.0);
  CHECK(std::fabs((1.0 - a2.fraction) - 0.05) <= 3.0 * a2.std_error + 1e-4);

  const auto a2_u = estimate_fraction(kAttract2, 0.1, std::nullopt, 20000, 2, uniform_options());
  CHECK(std::fabs((1.0 - a2_u.fraction) - 0.05) <= 3.0 * a2_u.std_error);

  const auto ph = estimate_fraction(kPhi, 0.1, std::nullopt, 1000, 3, uniform_options());
  CHECK(ph.fraction >= 1.0 - 1.0 / 1000.0);

  CHECK_THROWS(estimate_fraction(kAttract2, 0.0, std::nullopt, 1000, 1, strat));
  CHECK_THROWS(estimate_fraction(kAttract2, 0.1, std::nullopt, 99, 1, strat));
}

TEST_CASE("uniform integration stays inside the certified bounds") {
  MeasureOptions opts = uniform_options();
  opts.oracle_cones = false;
  for (double eps : {0.1, 0.01}) {
    const auto s = estimate_fraction(kAttract2, eps, std::nullopt, 1000, 5, opts);
    const SigmaBounds b = sigma_eps_bounds(kAttract2, eps);
    CHECK(s.fraction >= b.lower - 3.0 * s.std_error - 1e-12);
    CHECK(s.fraction <= b.upper + 3.0 * s.std_error + 1e-12);
    CHECK(s.n_timeout == 0);
  }
}

TEST_CASE("determinism across worker counts") {
  MeasureOptions one;
  MeasureOptions four;
  four.threads = 4;
  for (const auto mode : {SamplingMode::Stratified, SamplingMode::Uniform}) {
    one.mode = four.mode = mode;
    const auto a = estimate_fraction(kAttract2, 0.05, std::nullopt, 3000, 9, one);
    const auto b = estimate_fraction(kAttract2, 0.05, std::nullopt, 3000, 9, four);
    CHECK(a.n_basin == b.n_basin);
    CHECK(a.fraction == b.fraction);
    const std::vector<MeasureSample> la{a};
    const std::vector<MeasureSample> lb{b};
    CHECK(ladder_csv(la) == ladder_csv(lb));
    const auto c = estimate_fraction(kAttract2, 0.05, std::nullopt, 3000, 10, one);
    CHECK(c.seed != a.seed);
  }
}

TEST_CASE("binomial error shrinks by about sqrt(2) when n doubles") {
  MeasureOptions opts = uniform_options();
  auto spread = [&](std::uint64_t n) {
    std::vector<double> v;
    for (std::uint64_t seed = 100; seed < 120; ++seed)
      v.push_back(estimate_fraction(kPiecewise, 0.3, std::nullopt, n, seed, opts).fraction);
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  const double ratio = spread(2000) / spread(4000);
  CHECK(ratio > 1.0);
  CHECK(ratio < 2.2);
  // The analytic error ratio is exactly sqrt(2).
  const auto s1 = estimate_fraction(kPiecewise, 0.3, std::nullopt, 2000, 1, opts);
  const auto s2 = estimate_fraction(kPiecewise, 0.3, std::nullopt, 4000, 1, opts);
  CHECK(s1.std_error / s2.std_error == doctest::Approx(std::sqrt(2.0)).epsilon(0.1));
}

TEST_CASE("local index") {
  MeasureOptions opts;
  const auto pw = local_index(kPiecewise, {0.3}, {}, 2000, 1, opts);
  CHECK(std::fabs(pw.final_estimate.sigma.value()) < 1e-12);

  const auto a2 = local_index(kAttract2, {0.3}, {}, 5000, 1, opts);
  CHECK(a2.final_estimate.sigma.value() == doctest::Approx(1.0).epsilon(0.1));
  for (const auto& s : a2.final_estimate.ladder) {
    REQUIRE(s.delta.has_value());
    CHECK(s.eps <= *s.delta / 10.0 + 1e-15);
    REQUIRE(s.n_local.has_value());
    CHECK(*s.n_local <= s.n_basin);
  }
  CHECK_THROWS(local_index(kAttract2, {}, {}, 1000, 1, opts));
}

TEST_CASE("basin maps") {
  MeasureOptions opts;
  const BasinMap pw = basin_map(kPiecewise, Rect{-1, 1, -1, 1}, 20, 20, std::nullopt, opts);
  REQUIRE(pw.cells.size() == 400);
  for (const auto& c : pw.cells)
    CHECK((c.label == BasinLabel::InBasin) == (c.x < 0.0 && c.y < 0.0));

  const BasinMap a2 = basin_map(kAttract2, Rect{0, 1, 0, 1}, 40, 40, std::nullopt, opts);
  for (const auto& c : a2.cells) {
    const double boundary = 1.5 * c.x * c.x;
    if (c.y > boundary * 1.01) CHECK(c.label == BasinLabel::InBasin);
    if (c.y < boundary * 0.99) CHECK(c.label == BasinLabel::OutOfBasin);
  }

  const BasinMap ph = basin_map(kPhi, Rect{0, 1, 0, 1}, 20, 20, 0.5, opts);
  for (const auto& c : ph.cells)
    if (c.y < phi(c.x) && std::hypot(std::max(c.x, phi_inverse(2.0 * c.y)), c.y) < 0.5)
      CHECK(c.label == BasinLabel::InLocalBasin);

  CHECK_THROWS(basin_map(kPiecewise, Rect{0, 0, 0, 1}, 10, 10, std::nullopt, opts));
  CHECK_THROWS(basin_map(kPiecewise, Rect{0, 1, 0, 1}, 5000, 10, std::nullopt, opts));
  CHECK(basin_map_csv(pw).rfind("x,y,label\n", 0) == 0);
}

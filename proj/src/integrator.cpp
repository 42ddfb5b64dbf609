#include "stability_index/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace stability_index {

namespace {

// Dormand-Prince 5(4) tableau with Hairer's continuous extension.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// Absolute floor of the error scale; states are controlled relative to their size.
constexpr double kAbsTol = 1e-30;

using Vec = std::array<double, 2>;

Vec to_vec(State s) { return {s.x, s.y}; }
State to_state(const Vec& v) { return {v[0], v[1]}; }

double radius(const Vec& v) { return std::hypot(v[0], v[1]); }

struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec, 5> rcont{};

  Vec at(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    Vec out{};
    for (int i = 0; i < 2; ++i) {
      out[i] = rcont[0][i] +
               th * (rcont[1][i] + th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])));
    }
    return out;
  }
};

enum class Stop { None, Converged, Escaped, LeftDelta, TimedOut, Certified };

struct RunResult {
  Outcome outcome;
  Stop stop = Stop::None;
  ConeLabel certified = ConeLabel::Undetermined;
};

using Certifier = std::function<ConeLabel(State)>;

// Off the axes every field has the form (x g(x, y), y h(x, y)) and keeps the
// open quadrants invariant, so trajectories are integrated in
// w = (ln|x|, ln|y|). There the fast decay of a coordinate near an axis is a
// bounded rate instead of a stiff mode. Axis starts use x, y directly.
class Propagator {
 public:
  Propagator(const VectorField& field, const IntegratorConfig& cfg) : field_(field), cfg_(cfg) {}

  RunResult run(State s0, const StepObserver& observer, const Certifier& certify);

 private:
  Vec to_phys(const Vec& w) const {
    if (!log_chart_) return w;
    return {sx_ * std::exp(w[0]), sy_ * std::exp(w[1])};
  }

  Vec from_phys(const Vec& p) const {
    if (!log_chart_) return p;
    return {std::log(std::fabs(p[0])), std::log(std::fabs(p[1]))};
  }

  Vec velocity(const Vec& p) const {
    const Velocity v = field_(to_state(p));
    return {v.dx, v.dy};
  }

  Vec rhs(const Vec& w) const {
    if (!log_chart_) return velocity(w);
    // Rates stay finite after exp underflows; evaluate at the smallest normal.
    constexpr double kTiny = 1e-300;
    const Vec p = to_phys(w);
    const Vec q{sx_ * std::max(std::fabs(p[0]), kTiny), sy_ * std::max(std::fabs(p[1]), kTiny)};
    const Vec v = velocity(q);
    return {v[0] / q[0], v[1] / q[1]};
  }

  double error_scale(double w0, double w1) const {
    if (log_chart_) return cfg_.tol;
    return kAbsTol + cfg_.tol * std::max(std::fabs(w0), std::fabs(w1));
  }

  double radius_of(const Vec& w) const { return radius(to_phys(w)); }

  bool converged_at(const Vec& w) const {
    const Vec p = to_phys(w);
    if (radius(p) > cfg_.r_in) return false;
    const Vec f = velocity(p);
    if (f[0] == 0.0 && f[1] == 0.0) return true;
    return p[0] * f[0] + p[1] * f[1] < 0.0;
  }

  // First time in [t0, t1] where the radius reaches `target`, given that
  // `inside` holds at t1 but not at t0.
  template <class Pred>
  std::pair<double, Vec> locate(const DenseStep& step, double t1, const Vec& y1, double target,
                                Pred inside) const {
    double lo = step.t0;
    double hi = t1;
    Vec y_hi = y1;
    for (int i = 0; i < 200; ++i) {
      if (std::fabs(radius_of(y_hi) - target) <= 10.0 * cfg_.tol * target) break;
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const Vec y_mid = step.at(mid);
      if (inside(y_mid)) {
        hi = mid;
        y_hi = y_mid;
      } else {
        lo = mid;
      }
    }
    return {hi, y_hi};
  }

  const VectorField& field_;
  const IntegratorConfig& cfg_;
  bool log_chart_ = false;
  double sx_ = 1.0;
  double sy_ = 1.0;
};

RunResult Propagator::run(State s0, const StepObserver& observer, const Certifier& certify) {
  RunResult result;
  Outcome& out = result.outcome;

  auto finish = [&](Stop stop, OutcomeKind kind, double t, const Vec& y) {
    result.stop = stop;
    out.kind = kind;
    out.t_exit = t;
    out.final = to_state(to_phys(y));
    return result;
  };
  auto outside_delta = [&](const Vec& y) { return cfg_.delta && radius_of(y) >= *cfg_.delta; };
  auto outside_escape = [&](const Vec& y) { return radius_of(y) >= cfg_.r_out; };

  log_chart_ = s0.x != 0.0 && s0.y != 0.0;
  sx_ = s0.x < 0.0 ? -1.0 : 1.0;
  sy_ = s0.y < 0.0 ? -1.0 : 1.0;
  Vec y = from_phys(to_vec(s0));
  double t = 0.0;
  if (observer) observer(t, s0);

  if (converged_at(y)) return finish(Stop::Converged, OutcomeKind::Converged, t, y);
  if (outside_delta(y)) return finish(Stop::LeftDelta, OutcomeKind::LeftDelta, t, y);
  if (outside_escape(y)) return finish(Stop::Escaped, OutcomeKind::Escaped, t, y);
  if (certify) {
    const ConeLabel label = certify(s0);
    if (label != ConeLabel::Undetermined) {
      result.certified = label;
      return finish(Stop::Certified, OutcomeKind::TimedOut, t, y);
    }
  }

  Vec k1 = rhs(y);
  double h = cfg_.h_init;
  bool last_rejected = false;

  while (true) {
    if (t >= cfg_.t_max || out.steps >= cfg_.max_steps)
      return finish(Stop::TimedOut, OutcomeKind::TimedOut, t, y);
    if (h < cfg_.h_min) {
      throw IntegrationFailure("step size fell below h_min at t=" + std::to_string(t));
    }
    h = std::min(h, cfg_.t_max - t);

    Vec tmp{};
    auto stage = [&](auto&& combine) {
      for (int i = 0; i < 2; ++i) tmp[i] = y[i] + h * combine(i);
      return rhs(tmp);
    };
    const Vec k2 = stage([&](int i) { return a21 * k1[i]; });
    const Vec k3 = stage([&](int i) { return a31 * k1[i] + a32 * k2[i]; });
    const Vec k4 = stage([&](int i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; });
    const Vec k5 =
        stage([&](int i) { return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]; });
    const Vec k6 = stage([&](int i) {
      return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
    });
    Vec y1{};
    for (int i = 0; i < 2; ++i)
      y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);

    double err = 0.0;
    Vec k7{};
    const bool finite_step = std::isfinite(y1[0]) && std::isfinite(y1[1]);
    if (finite_step) {
      k7 = rhs(y1);
      for (int i = 0; i < 2; ++i) {
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                              e7 * k7[i]);
        const double scale = error_scale(y[i], y1[i]);
        err = std::max(err, std::fabs(e) / scale);
      }
    }
    if (!finite_step || !std::isfinite(err) || err > 1.0) {
      const double shrink = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h *= shrink;
      last_rejected = true;
      continue;
    }

    DenseStep dense;
    dense.t0 = t;
    dense.h = h;
    for (int i = 0; i < 2; ++i) {
      const double ydiff = y1[i] - y[i];
      const double bspl = h * k1[i] - ydiff;
      dense.rcont[0][i] = y[i];
      dense.rcont[1][i] = ydiff;
      dense.rcont[2][i] = bspl;
      dense.rcont[3][i] = ydiff - h * k7[i] - bspl;
      dense.rcont[4][i] =
          h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }

    const double t1 = t + h;
    ++out.steps;
    const State p1 = to_state(to_phys(y1));
    if (observer) observer(t1, p1);

    if (outside_delta(y1)) {
      const auto [te, ye] = locate(dense, t1, y1, *cfg_.delta, outside_delta);
      return finish(Stop::LeftDelta, OutcomeKind::LeftDelta, te, ye);
    }
    if (outside_escape(y1)) {
      const auto [te, ye] = locate(dense, t1, y1, cfg_.r_out, outside_escape);
      return finish(Stop::Escaped, OutcomeKind::Escaped, te, ye);
    }
    if (converged_at(y1)) {
      const auto [te, ye] =
          locate(dense, t1, y1, cfg_.r_in, [&](const Vec& v) { return radius_of(v) <= cfg_.r_in; });
      return finish(Stop::Converged, OutcomeKind::Converged, te, ye);
    }
    if (certify) {
      const ConeLabel label = certify(p1);
      if (label != ConeLabel::Undetermined) {
        result.certified = label;
        return finish(Stop::Certified, OutcomeKind::TimedOut, t1, y1);
      }
    }

    y = y1;
    t = t1;
    k1 = k7;
    double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    grow = std::clamp(grow, 0.2, 5.0);
    if (last_rejected) grow = std::min(grow, 1.0);
    last_rejected = false;
    h *= grow;
  }
}

}  // namespace

void IntegratorConfig::validate() const {
  auto positive_finite = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive_finite(r_in)) throw std::invalid_argument("r_in must be positive");
  if (!(r_out > r_in) || !std::isfinite(r_out)) throw std::invalid_argument("r_out must exceed r_in");
  if (delta && !(*delta > r_in && *delta < r_out))
    throw std::invalid_argument("delta must satisfy r_in < delta < r_out");
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  if (max_steps == 0) throw std::invalid_argument("max_steps must be positive");
  if (!positive_finite(tol)) throw std::invalid_argument("tol must be positive");
  if (!positive_finite(h_init)) throw std::invalid_argument("h_init must be positive");
  if (!(h_min >= 0.0 && h_min < h_init)) throw std::invalid_argument("h_min must be below h_init");
}

std::string_view outcome_name(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Converged: return "Converged";
    case OutcomeKind::Escaped: return "Escaped";
    case OutcomeKind::LeftDelta: return "LeftDelta";
    case OutcomeKind::TimedOut: return "TimedOut";
  }
  return "?";
}

std::string_view basin_label_name(BasinLabel label) {
  switch (label) {
    case BasinLabel::InBasin: return "InBasin";
    case BasinLabel::InLocalBasin: return "InLocalBasin";
    case BasinLabel::OutOfBasin: return "OutOfBasin";
  }
  return "?";
}

Outcome integrate(const SystemSpec& spec, State s0, const IntegratorConfig& cfg,
                  const StepObserver& observer) {
  cfg.validate();
  require_finite(s0);
  const VectorField field(spec);
  return Propagator(field, cfg).run(s0, observer, {}).outcome;
}

Classification classify(const SystemSpec& spec, State s0, const IntegratorConfig& cfg,
                        bool oracle_cones, const ConeParams& cones) {
  cfg.validate();
  require_finite(s0);
  const VectorField field(spec);
  const BasinLabel in_label = cfg.delta ? BasinLabel::InLocalBasin : BasinLabel::InBasin;

  Certifier certify;
  if (oracle_cones) {
    certify = [&](State s) { return certified_label(spec, s, cones, cfg.delta); };
  }
  const RunResult run = Propagator(field, cfg).run(s0, {}, certify);

  Classification c;
  c.steps = run.outcome.steps;
  switch (run.stop) {
    case Stop::Certified:
      c.certified = true;
      c.label = run.certified == ConeLabel::InBasin ? in_label : BasinLabel::OutOfBasin;
      break;
    case Stop::Converged:
      c.label = in_label;
      break;
    case Stop::TimedOut:
      c.timed_out = true;
      c.label = BasinLabel::OutOfBasin;
      break;
    default:
      c.label = BasinLabel::OutOfBasin;
      break;
  }
  return c;
}

Classification classify(const SystemSpec& spec, State s0, const IntegratorConfig& cfg,
                        bool oracle_cones) {
  return classify(spec, s0, cfg, oracle_cones, certified_cones(spec, cfg));
}

double certify_repel_extent(const SystemSpec& spec, double k_out, const IntegratorConfig& cfg) {
  validate(spec);
  if (spec.family != Family::PowerRepel) throw InvalidSpec("repel extent needs power-repel");
  IntegratorConfig probe = cfg;
  probe.delta.reset();
  probe.validate();
  const double a = spec.a;
  double x_c = repel_invariance_limit(a, k_out);
  for (int attempt = 0; attempt < 80; ++attempt, x_c *= 0.75) {
    // Start slightly above the corner to absorb the integration error.
    const State corner{x_c, k_out * power(x_c, a) * (1.0 + 1e-6)};
    bool below_nullcline = true;
    const Outcome o = integrate(spec, corner, probe, [&](double, State s) {
      if (!(s.y < 0.5 * power(s.x, a) * (1.0 - 1e-6))) below_nullcline = false;
    });
    if (o.kind == OutcomeKind::Escaped && below_nullcline) return x_c;
  }
  return 0.0;
}

ConeParams certified_cones(const SystemSpec& spec, const IntegratorConfig& cfg) {
  ConeParams cones = default_cones(spec);
  if (spec.family == Family::PowerRepel)
    cones.repel_extent = certify_repel_extent(spec, cones.k_out, cfg);
  return cones;
}

}  // namespace stability_index

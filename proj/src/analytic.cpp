#include "stability_index/analytic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stability_index {

// ---------------------------------------------------------------------------
// ExtendedReal

ExtendedReal ExtendedReal::finite(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("ExtendedReal::finite needs a finite value");
  return ExtendedReal(Tag::Finite, value);
}

ExtendedReal ExtendedReal::from_double(double value) {
  if (std::isnan(value)) throw std::invalid_argument("NaN is not an extended real");
  if (value == std::numeric_limits<double>::infinity()) return pos_inf();
  if (value == -std::numeric_limits<double>::infinity()) return neg_inf();
  return ExtendedReal(Tag::Finite, value);
}

double ExtendedReal::value() const {
  if (tag_ != Tag::Finite) throw std::logic_error("value() on an infinite ExtendedReal");
  return value_;
}

double ExtendedReal::to_double() const noexcept {
  switch (tag_) {
    case Tag::PosInf: return std::numeric_limits<double>::infinity();
    case Tag::NegInf: return -std::numeric_limits<double>::infinity();
    case Tag::Finite: break;
  }
  return value_;
}

std::string ExtendedReal::to_string() const {
  if (tag_ == Tag::PosInf) return "+inf";
  if (tag_ == Tag::NegInf) return "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value_);
  return std::string(buf, res.ptr);
}

ExtendedReal operator-(ExtendedReal v) {
  if (v.is_pos_inf()) return ExtendedReal::neg_inf();
  if (v.is_neg_inf()) return ExtendedReal::pos_inf();
  return ExtendedReal::finite(-v.value_);
}

ExtendedReal operator-(ExtendedReal lhs, ExtendedReal rhs) {
  if (!lhs.is_finite() && !rhs.is_finite() && lhs.tag_ == rhs.tag_)
    throw std::domain_error("infinity minus infinity is undefined");
  if (!lhs.is_finite()) return lhs;
  if (!rhs.is_finite()) return -rhs;
  return ExtendedReal::finite(lhs.value_ - rhs.value_);
}

// ---------------------------------------------------------------------------
// Closed-form indices

std::string_view label_name(ConeLabel label) {
  switch (label) {
    case ConeLabel::InBasin: return "InBasin";
    case ConeLabel::OutOfBasin: return "OutOfBasin";
    case ConeLabel::Undetermined: return "Undetermined";
  }
  return "?";
}

AnalyticIndex analytic_sigma(const SystemSpec& spec) {
  validate(spec);
  switch (spec.family) {
    case Family::PowerAttract: {
      const double exponent = spec.p ? *spec.p * spec.a : spec.a;
      const auto s = ExtendedReal::finite(exponent - 1.0);
      return {s, s};
    }
    case Family::PowerRepel: {
      const auto s = ExtendedReal::finite(1.0 - 1.0 / spec.a);
      return {s, s};
    }
    case Family::PhiSystem:
      return {ExtendedReal::pos_inf(), ExtendedReal::neg_inf()};
    case Family::PiecewiseLinear:
      return {ExtendedReal::finite(0.0), ExtendedReal::finite(0.0)};
  }
  throw InvalidSpec("unknown family");
}

std::string stability_class(const ExtendedReal& sigma) {
  if (sigma.is_neg_inf()) return "neither";
  if (sigma.is_pos_inf() || sigma.value() > 0.0) return "e.a.s.";
  return "f.a.s.";
}

SystemSpec a_for_target_sigma(double s) {
  if (!std::isfinite(s) || s == 0.0)
    throw std::invalid_argument("target index must be finite and nonzero");
  if (s > 0.0) return SystemSpec{Family::PowerAttract, s + 1.0, std::nullopt};
  return SystemSpec{Family::PowerRepel, 1.0 / (1.0 - s), std::nullopt};
}

double k_threshold(double a) {
  if (!(a > 1.0) || !std::isfinite(a)) throw std::invalid_argument("k_threshold needs a > 1");
  return (a - 0.5) / (a - 1.0);
}

double invariance_inner_product(const SystemSpec& spec, double k, double x) {
  validate(spec);
  if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("inner product needs x > 0");
  const double a = spec.a;
  const double x2a = power(x, 2.0 * a);
  switch (spec.family) {
    case Family::PowerAttract:
      return k * x2a * (k * (a - 1.0) - a + 0.5);
    case Family::PowerRepel:
      return k * x2a * (a * (0.5 - k) - k * power(x, a) * (1.0 - k));
    default:
      throw InvalidSpec("inner product is defined for the power families only");
  }
}

double repel_invariance_limit(double a, double k) {
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("repel_invariance_limit needs 0 < a < 1");
  if (!(k > 0.0 && k < 0.5)) throw std::invalid_argument("repel_invariance_limit needs 0 < k < 1/2");
  // a (1/2 - k) = k x^a (1 - k)
  return std::pow(a * (0.5 - k) / (k * (1.0 - k)), 1.0 / a);
}

ConeParams default_cones(const SystemSpec& spec) {
  switch (spec.family) {
    case Family::PowerAttract: return {k_threshold(spec.a) * (1.0 + 1e-3), 1.0};
    case Family::PowerRepel: return {1.0, 0.25};
    default: return {};
  }
}

namespace {

double cone_exponent(const SystemSpec& spec) { return spec.p ? *spec.p * spec.a : spec.a; }

ConeLabel classify_open_quadrant(const SystemSpec& spec, State s, const ConeParams& cones,
                                 BasinScope scope) {
  switch (spec.family) {
    case Family::PowerAttract: {
      const double xe = power(s.x, cone_exponent(spec));
      if (s.y > cones.k_in * xe) return ConeLabel::InBasin;
      if (s.y < xe) return ConeLabel::OutOfBasin;
      return ConeLabel::Undetermined;
    }
    case Family::PowerRepel: {
      const double xa = power(s.x, spec.a);
      if (s.y > cones.k_in * xa) return ConeLabel::InBasin;
      if (s.y < cones.k_out * xa && s.x < repel_invariance_limit(spec.a, cones.k_out))
        return ConeLabel::OutOfBasin;
      return ConeLabel::Undetermined;
    }
    case Family::PhiSystem:
      if (scope == BasinScope::Global) return ConeLabel::InBasin;
      return s.y < phi(s.x) ? ConeLabel::InBasin : ConeLabel::OutOfBasin;
    case Family::PiecewiseLinear:
      return ConeLabel::OutOfBasin;
  }
  return ConeLabel::Undetermined;
}

void check_cones(const SystemSpec& spec, const ConeParams& cones) {
  if (spec.family == Family::PowerAttract) {
    if (!(cones.k_in > k_threshold(spec.a)))
      throw std::invalid_argument("k_in must exceed k_threshold(a)");
  } else if (spec.family == Family::PowerRepel) {
    if (cones.k_in < 1.0) throw std::invalid_argument("k_in must be >= 1 for power-repel");
    if (!(cones.k_out > 0.0 && cones.k_out < 0.5))
      throw std::invalid_argument("k_out must lie in (0, 1/2) for power-repel");
  }
}

// Bound on how far a phi-system trajectory started below y = phi(x) can travel.
double phi_excursion_radius(double x, double y) {
  const double x_max = std::max(x, phi_inverse(2.0 * y));
  return std::hypot(x_max, y);
}

}  // namespace

ConeLabel cone_classify(const SystemSpec& spec, State s, double k_in, double k_out,
                        BasinScope scope) {
  validate(spec);
  require_finite(s);
  if (!(s.x > 0.0 && s.y > 0.0)) throw InvalidState("cone_classify needs a state off the axes in the first quadrant");
  const ConeParams cones{k_in, k_out};
  check_cones(spec, cones);
  return classify_open_quadrant(spec, s, cones, scope);
}

ConeLabel certified_label(const SystemSpec& spec, State s, const ConeParams& cones,
                          std::optional<double> delta) {
  const double radius = std::hypot(s.x, s.y);
  if (delta && radius >= *delta) return ConeLabel::OutOfBasin;

  if (spec.family == Family::PiecewiseLinear) {
    // Third-quadrant radius decreases monotonically, so delta-confinement is automatic.
    return (s.x <= 0.0 && s.y <= 0.0) ? ConeLabel::InBasin : ConeLabel::OutOfBasin;
  }
  const State q{std::fabs(s.x), std::fabs(s.y)};
  if (q.x == 0.0 || q.y == 0.0) return ConeLabel::Undetermined;

  ConeLabel global = classify_open_quadrant(spec, q, cones, BasinScope::Global);
  // Inside the repelled cone x grows until x = x0, where the cone stops being
  // invariant; the trajectory may then return to the origin. Only exits from
  // a delta-ball with delta <= x0 are certain.
  if (spec.family == Family::PowerRepel && global == ConeLabel::OutOfBasin &&
      !(q.x < cones.repel_extent) &&
      !(delta && *delta <= repel_invariance_limit(spec.a, cones.k_out)))
    global = ConeLabel::Undetermined;
  if (!delta) return global;

  switch (spec.family) {
    case Family::PowerAttract:
    case Family::PowerRepel:
      // Both coordinates decrease inside the attracted cone, so the radius
      // never exceeds its initial value there.
      return global;
    case Family::PhiSystem:
      if (q.y < phi(q.x) && phi_excursion_radius(q.x, q.y) < *delta) return ConeLabel::InBasin;
      return ConeLabel::Undetermined;
    case Family::PiecewiseLinear:
      break;
  }
  return ConeLabel::Undetermined;
}

// ---------------------------------------------------------------------------
// Lyapunov function of the phi system

double lyapunov_V(State s) {
  require_finite(s);
  if (!(s.y > 0.0) || s.x < 0.0) throw InvalidState("V = x/y needs x >= 0 and y > 0");
  return s.x / s.y;
}

double lyapunov_V_dot(State s) {
  require_finite(s);
  if (!(s.y > 0.0) || s.x < 0.0) throw InvalidState("dV/dt needs x >= 0 and y > 0");
  return s.x * phi(s.x) / (2.0 * s.y);
}

// ---------------------------------------------------------------------------
// Certified areas

double area_under_power(double k, double e, double x_max, double cap) {
  if (x_max <= 0.0 || cap <= 0.0) return 0.0;
  const double x_cross = std::pow(cap / k, 1.0 / e);
  if (x_max <= x_cross) return k * std::pow(x_max, e + 1.0) / (e + 1.0);
  return k * std::pow(x_cross, e + 1.0) / (e + 1.0) + cap * (x_max - x_cross);
}

double area_under_phi(double x_max, double cap) {
  // d/dx [x^2 exp(-1/x)] = phi(x)
  if (x_max <= 0.0 || cap <= 0.0) return 0.0;
  const double x_cross = phi_inverse(cap);
  if (x_max <= x_cross) return x_max * x_max * std::exp(-1.0 / x_max);
  return x_cross * x_cross * cap / (2.0 * x_cross + 1.0) + cap * (x_max - x_cross);
}

Strata::Strata(const SystemSpec& spec, double eps, const ConeParams& cones,
               std::optional<double> delta)
    : spec_(spec), cones_(cones), delta_(delta), eps_(eps) {
  validate(spec);
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
  if (delta && !(*delta > 0.0)) throw std::invalid_argument("delta must be positive");
  check_cones(spec, cones);

  if (spec.family == Family::PiecewiseLinear) {
    domain_ = {-eps, eps, -eps, eps};
    domain_area_ = domain_.area();
    local_in_certified_ = !delta || std::sqrt(2.0) * eps < *delta;
    in_area_ = local_in_certified_ ? eps * eps : 0.0;
    out_area_ = 3.0 * eps * eps;
    sample_box_ = local_in_certified_ ? Rect{} : Rect{-eps, 0.0, -eps, 0.0};
    log_in_area_ = in_area_ > 0.0 ? std::log(in_area_) : -std::numeric_limits<double>::infinity();
    return;
  }

  domain_ = {0.0, eps, 0.0, eps};
  domain_area_ = eps * eps;
  exponent_ = cone_exponent(spec);

  switch (spec.family) {
    case Family::PowerAttract:
    case Family::PowerRepel: {
      local_in_certified_ = !delta || std::sqrt(2.0) * eps < *delta;
      const double above_in = domain_area_ - area_under_power(cones.k_in, exponent_, eps, eps);
      in_area_ = local_in_certified_ ? above_in : 0.0;
      double x_hi = eps;
      if (spec.family == Family::PowerAttract) {
        out_area_ = area_under_power(1.0, exponent_, eps, eps);
        if (local_in_certified_) sample_box_ = {0.0, eps, 0.0, std::min(eps, cones.k_in * power(eps, exponent_))};
      } else {
        const double x0 = repel_invariance_limit(spec.a, cones.k_out);
        repel_limit_ = delta && *delta <= x0 ? x0 : std::min(x0, cones.repel_extent);
        out_area_ = area_under_power(cones.k_out, exponent_, std::min(eps, repel_limit_), eps);
        if (repel_limit_ >= eps) x_hi = std::min(eps, std::pow(eps / cones.k_out, 1.0 / exponent_));
        if (local_in_certified_) sample_box_ = {0.0, x_hi, 0.0, eps};
      }
      if (!local_in_certified_) sample_box_ = domain_;
      break;
    }
    case Family::PhiSystem:
      if (!delta) {
        in_area_ = domain_area_;
        sample_box_ = {};
      } else {
        const double y_worst = std::min(eps, phi(eps));
        local_in_certified_ = phi_excursion_radius(eps, y_worst) < *delta;
        in_area_ = local_in_certified_ ? area_under_phi(eps, eps) : 0.0;
        sample_box_ = domain_;
        if (local_in_certified_ && phi(eps) <= eps) {
          // x^2 exp(-1/x) at x = eps, kept in log form because it underflows
          // for eps below ~1.4e-3.
          log_in_area_ = 2.0 * std::log(eps) - 1.0 / eps;
          return;
        }
      }
      break;
    case Family::PiecewiseLinear:
      break;
  }
  log_in_area_ = in_area_ > 0.0 ? std::log(in_area_) : -std::numeric_limits<double>::infinity();
}

double Strata::undetermined_area() const noexcept {
  return std::max(0.0, domain_area_ - in_area_ - out_area_);
}

bool Strata::contains_undetermined(State s) const {
  const Rect& d = domain_;
  if (s.x < d.x_lo || s.x > d.x_hi || s.y < d.y_lo || s.y > d.y_hi) return false;
  switch (spec_.family) {
    case Family::PiecewiseLinear:
      return !local_in_certified_ && s.x <= 0.0 && s.y <= 0.0;
    case Family::PowerAttract: {
      const double xe = power(s.x, exponent_);
      if (s.y < xe) return false;
      return !(local_in_certified_ && s.y > cones_.k_in * xe);
    }
    case Family::PowerRepel: {
      const double xa = power(s.x, exponent_);
      if (s.y < cones_.k_out * xa && s.x < repel_limit_) return false;
      return !(local_in_certified_ && s.y > cones_.k_in * xa);
    }
    case Family::PhiSystem:
      if (!delta_) return false;
      return !(local_in_certified_ && s.y < phi(s.x));
  }
  return false;
}

SigmaBounds sigma_eps_bounds(const SystemSpec& spec, double eps, const ConeParams& cones,
                             std::optional<double> delta) {
  const Strata strata(spec, eps, cones, delta);
  return {strata.in_area() / strata.domain_area(),
          1.0 - strata.out_area() / strata.domain_area()};
}

SigmaBounds sigma_eps_bounds(const SystemSpec& spec, double eps) {
  return sigma_eps_bounds(spec, eps, default_cones(spec));
}

}  // namespace stability_index

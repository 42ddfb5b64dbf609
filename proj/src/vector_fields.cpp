#include "stability_index/vector_fields.hpp"

#include <cmath>
#include <sstream>

namespace stability_index {

namespace {

double copy_sign_nonzero(double magnitude, double reference) {
  // Axes are invariant, so the sign of a zero coordinate never matters.
  return reference < 0.0 ? -magnitude : magnitude;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void validate(const SystemSpec& spec) {
  switch (spec.family) {
    case Family::PowerAttract:
      if (!std::isfinite(spec.a) || spec.a <= 1.0)
        throw InvalidSpec("power-attract requires a > 1, got a=" + format_real(spec.a));
      if (spec.p) {
        if (!std::isfinite(*spec.p) || *spec.p <= 0.0)
          throw InvalidSpec("transform power must satisfy p > 0");
        if (*spec.p * spec.a <= 1.0)
          throw InvalidSpec("transform power must satisfy p*a > 1");
      }
      return;
    case Family::PowerRepel:
      if (!std::isfinite(spec.a) || spec.a <= 0.0 || spec.a >= 1.0)
        throw InvalidSpec("power-repel requires 0 < a < 1, got a=" + format_real(spec.a));
      break;
    case Family::PhiSystem:
    case Family::PiecewiseLinear:
      break;
  }
  if (spec.p) throw InvalidSpec("transform power p is only defined for power-attract");
}

void require_finite(State s) {
  if (!std::isfinite(s.x) || !std::isfinite(s.y))
    throw InvalidState("state must have finite coordinates");
}

std::string_view family_name(Family family) {
  switch (family) {
    case Family::PowerAttract: return "power-attract";
    case Family::PowerRepel: return "power-repel";
    case Family::PhiSystem: return "phi";
    case Family::PiecewiseLinear: return "piecewise";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::PowerAttract, Family::PowerRepel, Family::PhiSystem,
                   Family::PiecewiseLinear}) {
    if (family_name(f) == name) return f;
  }
  throw InvalidSpec("unknown family '" + std::string(name) + "'");
}

std::string to_config_entry(const SystemSpec& spec) {
  std::string out(family_name(spec.family));
  if (spec.family == Family::PowerAttract || spec.family == Family::PowerRepel)
    out += " a=" + format_real(spec.a);
  if (spec.p) out += " p=" + format_real(*spec.p);
  return out;
}

SystemSpec parse_config_entry(std::string_view entry) {
  std::istringstream in{std::string(entry)};
  std::string token;
  if (!(in >> token)) throw InvalidSpec("empty system entry");
  SystemSpec spec;
  spec.family = parse_family(token);
  bool have_a = false;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw InvalidSpec("expected key=value, got '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    double parsed = 0.0;
    try {
      std::size_t used = 0;
      parsed = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw InvalidSpec("not a number: '" + value + "'");
    }
    if (key == "a") {
      spec.a = parsed;
      have_a = true;
    } else if (key == "p") {
      spec.p = parsed;
    } else {
      throw InvalidSpec("unknown key '" + key + "'");
    }
  }
  if (!have_a && (spec.family == Family::PowerAttract || spec.family == Family::PowerRepel))
    throw InvalidSpec("family requires a=<real>");
  validate(spec);
  return spec;
}

double power(double x, double a) {
  if (x <= 0.0) return 0.0;
  return std::exp(a * std::log(x));
}

double phi(double x) {
  if (std::isnan(x) || x < 0.0) throw std::domain_error("phi is defined for x >= 0");
  if (x == 0.0) return 0.0;
  return (2.0 * x + 1.0) * std::exp(-1.0 / x);
}

double phi_inverse(double value) {
  if (std::isnan(value) || value < 0.0)
    throw std::domain_error("phi_inverse is defined for values >= 0");
  if (value == 0.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (phi(hi) < value) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (phi(mid) < value ? lo : hi) = mid;
  }
  return hi;
}

VectorField::VectorField(const SystemSpec& spec) : spec_(spec), exponent_(spec.a), x_rate_(1.0) {
  validate(spec);
  if (spec.p) {
    exponent_ = *spec.p * spec.a;
    x_rate_ = 1.0 / *spec.p;
  }
}

Velocity VectorField::quadrant(double x, double y) const noexcept {
  switch (spec_.family) {
    case Family::PowerAttract: {
      const double xa = power(x, exponent_);
      return {x_rate_ * x * (xa - y), y * (0.5 * xa - y)};
    }
    case Family::PowerRepel: {
      const double xa = power(x, exponent_);
      return {x * (0.5 * xa - y), y * y * (xa - y)};
    }
    case Family::PhiSystem: {
      const double f = x > 0.0 ? (2.0 * x + 1.0) * std::exp(-1.0 / x) : 0.0;
      return {x * (y - 0.5 * f), y * (y - f)};
    }
    case Family::PiecewiseLinear:
      return {x, y};
  }
  return {};
}

Velocity VectorField::operator()(State s) const noexcept {
  if (spec_.family == Family::PiecewiseLinear) {
    // Expanding in each coordinate except in the closed third quadrant.
    const bool third = s.x <= 0.0 && s.y <= 0.0;
    if (third) return {-s.x, -s.y};
    if (s.x < 0.0) return {-s.x, s.y};
    if (s.y < 0.0) return {s.x, -s.y};
    return {s.x, s.y};
  }
  const Velocity q = quadrant(std::fabs(s.x), std::fabs(s.y));
  return {copy_sign_nonzero(q.dx, s.x), copy_sign_nonzero(q.dy, s.y)};
}

Velocity eval_quadrant(const SystemSpec& spec, State s) {
  validate(spec);
  require_finite(s);
  if (s.x < 0.0 || s.y < 0.0) throw InvalidState("state must lie in the closed first quadrant");
  SystemSpec plain = spec;
  plain.p.reset();
  return VectorField(plain)(s);
}

Velocity eval_transformed(const SystemSpec& spec, State s) {
  validate(spec);
  if (spec.family != Family::PowerAttract || !spec.p)
    throw InvalidSpec("transformed system needs power-attract with p set");
  require_finite(s);
  if (s.x < 0.0 || s.y < 0.0) throw InvalidState("state must lie in the closed first quadrant");
  return VectorField(spec)(s);
}

Velocity eval_plane(const SystemSpec& spec, State s) {
  require_finite(s);
  return VectorField(spec)(s);
}

}  // namespace stability_index

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stability_index {

/// A point in the phase plane.
struct State {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const State&, const State&) = default;
};

/// Time derivative of a State.
struct Velocity {
  double dx = 0.0;
  double dy = 0.0;

  friend bool operator==(const Velocity&, const Velocity&) = default;
};

enum class Family { PowerAttract, PowerRepel, PhiSystem, PiecewiseLinear };

/// Which planar system to study, with its parameters.
///
/// PowerAttract:     x' = x (x^a - y),        y' = y (x^a / 2 - y),   a > 1
/// PowerRepel:       x' = x (x^a / 2 - y),    y' = y^2 (x^a - y),     0 < a < 1
/// PhiSystem:        x' = x (y - phi(x) / 2), y' = y (y - phi(x))
/// PiecewiseLinear:  x' = +-x, y' = +-y with the third quadrant a sink
///
/// The quadrant systems are defined on x, y >= 0 and extended to the plane
/// by odd reflection in each coordinate. When `p` is set (PowerAttract
/// only) the system is studied in coordinates (u, v) with x = u^p, y = v.
struct SystemSpec {
  Family family = Family::PowerAttract;
  double a = 2.0;
  std::optional<double> p;

  friend bool operator==(const SystemSpec&, const SystemSpec&) = default;
};

class InvalidSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidState : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws InvalidSpec when a parameter is out of range for the family.
void validate(const SystemSpec& spec);

/// Throws InvalidState unless both coordinates are finite.
void require_finite(State s);

std::string_view family_name(Family family);
Family parse_family(std::string_view name);

/// Plain-text entry: `<family> [a=<real>] [p=<real>]`, e.g. `power-attract a=2 p=2`.
std::string to_config_entry(const SystemSpec& spec);
SystemSpec parse_config_entry(std::string_view entry);

/// x^a for x >= 0, taken as 0 at x = 0.
double power(double x, double a);

/// phi(x) = (2x + 1) exp(-1/x) for x > 0, phi(0) = 0.
double phi(double x);

/// Inverse of phi on [0, inf); `value` must be nonnegative.
double phi_inverse(double value);

/// Right-hand side of the family's quadrant system (ignores `p`).
Velocity eval_quadrant(const SystemSpec& spec, State s);

/// Pullback of the PowerAttract system under (x, y) = (u^p, v).
Velocity eval_transformed(const SystemSpec& spec, State s);

/// Right-hand side on the whole plane. For PiecewiseLinear this is the
/// quadrant law; otherwise the effective quadrant system (transformed when
/// `p` is set) evaluated at (|x|, |y|) with signs re-applied.
Velocity eval_plane(const SystemSpec& spec, State s);

/// Validated, allocation-free evaluator of `eval_plane` for hot loops.
class VectorField {
 public:
  explicit VectorField(const SystemSpec& spec);

  Velocity operator()(State s) const noexcept;

  const SystemSpec& spec() const noexcept { return spec_; }

 private:
  Velocity quadrant(double x, double y) const noexcept;

  SystemSpec spec_;
  double exponent_;    // a, or p*a for the transformed system
  double x_rate_;      // 1/p for the transformed system, else 1
};

}  // namespace stability_index

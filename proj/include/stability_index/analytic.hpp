#pragma once

#include <optional>
#include <string>

#include "stability_index/vector_fields.hpp"

namespace stability_index {

/// A value in [-inf, +inf]. Subtracting equal infinities is rejected.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;

  static ExtendedReal finite(double value);
  static constexpr ExtendedReal pos_inf() { return ExtendedReal(Tag::PosInf, 0.0); }
  static constexpr ExtendedReal neg_inf() { return ExtendedReal(Tag::NegInf, 0.0); }
  /// Maps IEEE infinities onto the tags; NaN is rejected.
  static ExtendedReal from_double(double value);

  bool is_finite() const noexcept { return tag_ == Tag::Finite; }
  bool is_pos_inf() const noexcept { return tag_ == Tag::PosInf; }
  bool is_neg_inf() const noexcept { return tag_ == Tag::NegInf; }

  /// Finite value; throws std::logic_error on an infinity.
  double value() const;
  double to_double() const noexcept;
  /// "+inf", "-inf", or the shortest round-tripping decimal.
  std::string to_string() const;

  friend ExtendedReal operator-(ExtendedReal lhs, ExtendedReal rhs);
  friend ExtendedReal operator-(ExtendedReal v);
  friend bool operator==(const ExtendedReal&, const ExtendedReal&) = default;

 private:
  enum class Tag { Finite, PosInf, NegInf };
  constexpr ExtendedReal(Tag tag, double value) : tag_(tag), value_(value) {}

  Tag tag_ = Tag::Finite;
  double value_ = 0.0;
};

struct AnalyticIndex {
  ExtendedReal sigma;
  ExtendedReal sigma_loc;
};

enum class ConeLabel { InBasin, OutOfBasin, Undetermined };

/// Whether a cone label refers to the basin or to the delta-local basin.
enum class BasinScope { Global, Local };

std::string_view label_name(ConeLabel label);

/// Closed-form stability index and local index of the origin.
AnalyticIndex analytic_sigma(const SystemSpec& spec);

/// "e.a.s." for sigma > 0, "f.a.s." for -inf < sigma <= 0, "neither" otherwise.
std::string stability_class(const ExtendedReal& sigma);

/// The quadrant system whose origin has index `s` (s != 0).
SystemSpec a_for_target_sigma(double s);

/// Smallest k for which y > k x^a is forward invariant in the attracting system.
double k_threshold(double a);

/// Scalar product of the flow with the normal of the curve y = k x^a, at x.
///
/// PowerAttract uses the normal (-a k x^(a-1), 1) and PowerRepel uses
/// (a k x^(a-1), -1); a positive value means the flow crosses the curve into
/// the certified region (above it for PowerAttract, below it for PowerRepel).
double invariance_inner_product(const SystemSpec& spec, double k, double x);

/// Largest x below which the repelling cone y < k x^a is forward invariant.
double repel_invariance_limit(double a, double k);

/// Cone coefficients: attracted region above k_in x^a, repelled region
/// below k_out x^a.
struct ConeParams {
  double k_in = 1.0;
  double k_out = 1.0;
  /// PowerRepel: the repelled cone is a certified escape region for x below
  /// this extent (see certified_cones); 0 disables the global certificate.
  double repel_extent = 0.0;
};

/// k_in just above k_threshold for PowerAttract; k_in = 1, k_out = 1/4 for PowerRepel.
ConeParams default_cones(const SystemSpec& spec);

/// Region label from the invariant cones, for a state in the open first
/// quadrant (in (u, v) coordinates when the spec carries `p`).
///
/// For PhiSystem the global label is InBasin everywhere and the local label
/// is InBasin iff y < phi(x). PiecewiseLinear points in the first quadrant
/// are OutOfBasin. The PowerRepel OutOfBasin cone is repelling only near the
/// origin: it excludes points from delta-local basins with
/// delta <= repel_invariance_limit(a, k_out), not from the basin itself.
ConeLabel cone_classify(const SystemSpec& spec, State s, double k_in, double k_out,
                        BasinScope scope = BasinScope::Global);

/// Label certified for any plane state. With `delta` the label refers to the
/// delta-local basin and InBasin additionally guarantees the trajectory stays
/// inside the open delta-ball. Axis points are left Undetermined except for
/// PiecewiseLinear. The PowerRepel repelled cone certifies OutOfBasin for
/// x < cones.repel_extent, and for x < repel_invariance_limit when a delta no
/// larger than that limit is given.
ConeLabel certified_label(const SystemSpec& spec, State s, const ConeParams& cones,
                          std::optional<double> delta = std::nullopt);

/// V(x, y) = x / y for the phi system.
double lyapunov_V(State s);
/// dV/dt = x phi(x) / (2 y) along the phi system.
double lyapunov_V_dot(State s);

struct Rect {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;

  double area() const noexcept { return (x_hi - x_lo) * (y_hi - y_lo); }
};

/// Decomposition of the sampling square B_eps into certified-basin,
/// certified-complement, and undetermined parts.
///
/// The square is [0, eps]^2 for the quadrant systems and [-eps, eps]^2 for
/// PiecewiseLinear. `contains_undetermined` and the areas describe the same
/// set exactly; `sample_box` contains every undetermined point.
class Strata {
 public:
  Strata(const SystemSpec& spec, double eps, const ConeParams& cones,
         std::optional<double> delta = std::nullopt);

  double eps() const noexcept { return eps_; }
  double domain_area() const noexcept { return domain_area_; }
  double in_area() const noexcept { return in_area_; }
  /// ln(in_area), finite even where in_area underflows.
  double log_in_area() const noexcept { return log_in_area_; }
  double out_area() const noexcept { return out_area_; }
  double undetermined_area() const noexcept;
  const Rect& domain() const noexcept { return domain_; }
  const Rect& sample_box() const noexcept { return sample_box_; }

  bool contains_undetermined(State s) const;

 private:
  SystemSpec spec_;
  ConeParams cones_;
  std::optional<double> delta_;
  double eps_;
  double exponent_ = 1.0;
  double repel_limit_ = 0.0;
  bool local_in_certified_ = true;
  double domain_area_ = 0.0;
  double in_area_ = 0.0;
  double log_in_area_ = 0.0;
  double out_area_ = 0.0;
  Rect domain_;
  Rect sample_box_;
};

struct SigmaBounds {
  double lower = 0.0;
  double upper = 1.0;
};

/// Rigorous bounds on Sigma_eps (or Sigma_{eps,delta}) from the certified
/// regions.
SigmaBounds sigma_eps_bounds(const SystemSpec& spec, double eps, const ConeParams& cones,
                             std::optional<double> delta = std::nullopt);
SigmaBounds sigma_eps_bounds(const SystemSpec& spec, double eps);

/// Integral of min(cap, k x^e) over [0, x_max].
double area_under_power(double k, double e, double x_max, double cap);

/// Integral of min(cap, phi(x)) over [0, x_max].
double area_under_phi(double x_max, double cap);

}  // namespace stability_index

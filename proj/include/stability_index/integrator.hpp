#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>

#include "stability_index/analytic.hpp"
#include "stability_index/vector_fields.hpp"

namespace stability_index {

/// Event radii and step control for one trajectory.
struct IntegratorConfig {
  double r_in = 1e-6;               ///< convergence radius
  double r_out = 2.0;               ///< escape radius
  std::optional<double> delta;      ///< radius of the delta-tube, local runs only
  double t_max = 1e15;              ///< time budget
  std::uint64_t max_steps = 200000; ///< accepted-step budget
  double h_init = 1e-3;
  double tol = 1e-9;                ///< relative local error tolerance
  double h_min = 1e-14;

  /// Throws std::invalid_argument unless 0 < r_in < delta < r_out etc.
  void validate() const;
};

enum class OutcomeKind { Converged, Escaped, LeftDelta, TimedOut };

std::string_view outcome_name(OutcomeKind kind);

struct Outcome {
  OutcomeKind kind = OutcomeKind::TimedOut;
  double t_exit = 0.0;
  State final;
  std::uint64_t steps = 0;
};

/// Step size underflow or a non-finite state.
class IntegrationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Called with the initial state and after every accepted step.
using StepObserver = std::function<void(double t, State s)>;

/// Integrates with an embedded Dormand-Prince 5(4) pair until the first of:
/// |s| <= r_in while moving inward (Converged), |s| >= delta (LeftDelta),
/// |s| >= r_out (Escaped), or the time/step budget runs out (TimedOut).
/// Radius events are located by bisection on the dense output to relative
/// accuracy 10 * tol. Off-axis starts are integrated in (ln|x|, ln|y|), so
/// `tol` bounds the relative error of each coordinate.
Outcome integrate(const SystemSpec& spec, State s0, const IntegratorConfig& cfg,
                  const StepObserver& observer = {});

enum class BasinLabel { InBasin, InLocalBasin, OutOfBasin };

std::string_view basin_label_name(BasinLabel label);

struct Classification {
  BasinLabel label = BasinLabel::OutOfBasin;
  bool timed_out = false;
  bool certified = false;  ///< decided by an invariant region, not by an event
  std::uint64_t steps = 0;
};

/// Basin membership of one initial state. Without cfg.delta the answer is
/// InBasin / OutOfBasin; with it, InLocalBasin / OutOfBasin.
///
/// With `oracle_cones` the certified regions short-circuit both the initial
/// state and every accepted step, so only the undetermined part of a
/// trajectory is integrated.
Classification classify(const SystemSpec& spec, State s0, const IntegratorConfig& cfg,
                        bool oracle_cones, const ConeParams& cones);
Classification classify(const SystemSpec& spec, State s0, const IntegratorConfig& cfg,
                        bool oracle_cones = true);

/// Largest x_c <= repel_invariance_limit(a, k_out), found by geometric
/// backoff, such that the trajectory from the cone corner (x_c, k_out x_c^a)
/// reaches cfg.r_out while staying below the x-nullcline y = x^a / 2. Points
/// of the repelled cone with x < x_c stay below that trajectory with x
/// increasing, so they escape. Returns 0 if no corner qualifies.
double certify_repel_extent(const SystemSpec& spec, double k_out, const IntegratorConfig& cfg);

/// default_cones(spec) plus the PowerRepel escape extent for cfg.r_out.
ConeParams certified_cones(const SystemSpec& spec, const IntegratorConfig& cfg);

}  // namespace stability_index

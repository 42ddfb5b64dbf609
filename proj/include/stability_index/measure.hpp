#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stability_index/analytic.hpp"
#include "stability_index/integrator.hpp"

namespace stability_index {

/// How points of B_eps are drawn.
///
/// Uniform draws from the whole square. Stratified uses the certified
/// regions as exactly-known strata and draws only from the undetermined
/// remainder, so counts refer to that stratum.
enum class SamplingMode { Stratified, Uniform };

std::string_view sampling_mode_name(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view name);

struct MeasureOptions {
  IntegratorConfig integrator;         ///< `delta` is set per call
  SamplingMode mode = SamplingMode::Stratified;
  bool oracle_cones = true;
  std::optional<ConeParams> cones;     ///< certified_cones(spec, integrator) when unset
  unsigned threads = 1;
  double max_failure_fraction = 0.01;
  double timeout_warning_fraction = 0.005;
};

class MeasurementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MeasureSample {
  double eps = 0.0;
  std::optional<double> delta;
  std::uint64_t n_total = 0;
  std::uint64_t n_basin = 0;
  std::optional<std::uint64_t> n_local;
  std::uint64_t n_timeout = 0;
  std::uint64_t n_failed = 0;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::Uniform;
  double certified_in = 0.0;   ///< certified basin fraction of B_eps (stratified)
  double certified_out = 0.0;  ///< certified complement fraction of B_eps (stratified)
  double sampled_weight = 1.0; ///< fraction of B_eps represented by the samples
  double fraction = 0.0;       ///< estimate of Sigma_eps (Sigma_{eps,delta} with delta)
  double log_fraction = 0.0;   ///< ln of `fraction`, exact even when it underflows
  double log_complement = 0.0; ///< ln(1 - fraction)
  double std_error = 0.0;
  double resolution = 0.0;     ///< 2/n scaled by `sampled_weight`
  bool zero_degenerate = false;
  bool one_degenerate = false;
  std::vector<std::string> warnings;
};

/// Estimates the basin fraction of B_eps(0). Deterministic in `seed`
/// regardless of options.threads.
MeasureSample estimate_fraction(const SystemSpec& spec, double eps, std::optional<double> delta,
                                std::uint64_t n, std::uint64_t seed, const MeasureOptions& options);

/// Conventions applied when turning ladder slopes into indices.
struct FitConventions {
  double degenerate_factor = 2.0;  ///< a rung is degenerate below factor/n
  double slope_cutoff = 50.0;      ///< slopes above this are reported as +inf
  double min_decades = 1.5;
  std::size_t min_rungs = 4;
};

class FitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct IndexEstimate {
  ExtendedReal sigma_minus;
  ExtendedReal sigma_plus;
  ExtendedReal sigma;
  double raw_slope_minus = 0.0;  ///< NaN when the convention applied without a fit
  double raw_slope_plus = 0.0;
  double stderr_minus = 0.0;
  double stderr_plus = 0.0;
  double slope_stderr = 0.0;
  std::size_t rungs_minus = 0;
  std::size_t rungs_plus = 0;
  std::vector<MeasureSample> ladder;
  std::vector<std::string> warnings;
};

/// Least-squares slopes of ln(Sigma) and ln(1 - Sigma) against ln(eps).
IndexEstimate fit_indices(std::span<const MeasureSample> ladder,
                          const FitConventions& conventions = {});

/// `rungs` radii geometric from `hi` down to `lo`.
std::vector<double> geometric_ladder(double hi, double lo, std::size_t rungs);

/// Default ladder: 8 rungs from 1e-1 to 1e-3.
std::vector<double> default_ladder();

/// Radii for one delta of a local run: from delta/10 down `decades` decades.
std::vector<double> local_ladder(double delta, std::size_t rungs = 8, double decades = 2.0);

/// Estimates and fits the global index over an eps ladder.
IndexEstimate estimate_index(const SystemSpec& spec, std::span<const double> eps_ladder,
                             std::uint64_t n, std::uint64_t seed, const MeasureOptions& options,
                             const FitConventions& conventions = {});

struct LocalIndexEstimate {
  std::vector<double> deltas;              ///< in decreasing order
  std::vector<IndexEstimate> per_delta;
  IndexEstimate final_estimate;            ///< the smallest delta
};

/// Local index from Sigma_{eps,delta}: one ladder per delta, each rung
/// satisfying eps <= delta/10. When `eps_ladder` is empty each delta gets
/// local_ladder(delta); otherwise the admissible rungs of `eps_ladder` are used.
LocalIndexEstimate local_index(const SystemSpec& spec, std::vector<double> deltas,
                               std::span<const double> eps_ladder, std::uint64_t n,
                               std::uint64_t seed, const MeasureOptions& options,
                               const FitConventions& conventions = {});

struct MapCell {
  double x = 0.0;
  double y = 0.0;
  BasinLabel label = BasinLabel::OutOfBasin;
};

struct BasinMap {
  Rect window;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<MapCell> cells;  ///< row-major, y outer
};

/// Classification at cell centres. With `delta`, cells in the delta-local
/// basin are InLocalBasin and the rest are split into InBasin / OutOfBasin.
BasinMap basin_map(const SystemSpec& spec, const Rect& window, std::size_t nx, std::size_t ny,
                   std::optional<double> delta, const MeasureOptions& options);

}  // namespace stability_index

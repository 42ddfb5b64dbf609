#pragma once

#include <span>
#include <string>

#include "json.hpp"
#include "stability_index/measure.hpp"
#include "stability_index/run_config.hpp"

namespace stability_index {

/// Header plus one row per rung:
/// eps,delta,n_total,n_basin,n_local,n_timeout,sigma_hat_fraction.
/// Absent delta / n_local are empty fields.
std::string ladder_csv(std::span<const MeasureSample> ladder);

/// Header `x,y,label` plus one row per cell.
std::string basin_map_csv(const BasinMap& map);

/// Finite values as numbers, infinities as "+inf" / "-inf".
nlohmann::ordered_json to_json(const ExtendedReal& value);

nlohmann::ordered_json conventions_json(const RunConfig& config);

/// {sigma_minus, sigma_plus, sigma, stderr, conventions, ...}.
nlohmann::ordered_json index_report(const IndexEstimate& estimate, const RunConfig& config);

/// Report of a local run: the index report of the smallest delta with the
/// per-delta slope sequence appended.
nlohmann::ordered_json local_index_report(const LocalIndexEstimate& estimate,
                                          const RunConfig& config);

/// Rows `a,sigma_expected,sigma_measured`.
struct SweepRow {
  double a = 0.0;
  ExtendedReal expected;
  ExtendedReal measured;
};
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace stability_index

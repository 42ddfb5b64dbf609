#include "stability_index/report.hpp"

#include <cmath>
#include <sstream>

namespace stability_index {

using nlohmann::ordered_json;

namespace {

ordered_json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return to_json(ExtendedReal::from_double(v));
}

ordered_json integrator_json(const IntegratorConfig& c) {
  return ordered_json{{"r_in", c.r_in},   {"r_out", c.r_out}, {"t_max", c.t_max},
                      {"max_steps", c.max_steps}, {"h_init", c.h_init}, {"tol", c.tol},
                      {"h_min", c.h_min}};
}

ordered_json rung_json(const MeasureSample& s) {
  ordered_json j{{"eps", s.eps},
                 {"delta", s.delta ? ordered_json(*s.delta) : ordered_json(nullptr)},
                 {"n_total", s.n_total},
                 {"n_basin", s.n_basin},
                 {"n_local", s.n_local ? ordered_json(*s.n_local) : ordered_json(nullptr)},
                 {"n_timeout", s.n_timeout},
                 {"n_failed", s.n_failed},
                 {"sampling", sampling_mode_name(s.mode)},
                 {"certified_in", s.certified_in},
                 {"certified_out", s.certified_out},
                 {"sampled_weight", s.sampled_weight},
                 {"fraction", s.fraction},
                 {"log_fraction", number_or_null(s.log_fraction)},
                 {"log_complement", number_or_null(s.log_complement)},
                 {"std_error", s.std_error},
                 {"resolution", s.resolution},
                 {"zero_degenerate", s.zero_degenerate},
                 {"one_degenerate", s.one_degenerate}};
  return j;
}

}  // namespace

ordered_json to_json(const ExtendedReal& value) {
  if (value.is_finite()) return value.value();
  return value.to_string();
}

std::string ladder_csv(std::span<const MeasureSample> ladder) {
  std::ostringstream out;
  out << "eps,delta,n_total,n_basin,n_local,n_timeout,sigma_hat_fraction\n";
  for (const auto& s : ladder) {
    out << format_real(s.eps) << ',' << (s.delta ? format_real(*s.delta) : "") << ','
        << s.n_total << ',' << s.n_basin << ','
        << (s.n_local ? std::to_string(*s.n_local) : "") << ',' << s.n_timeout << ','
        << format_real(s.fraction) << '\n';
  }
  return out.str();
}

std::string basin_map_csv(const BasinMap& map) {
  std::ostringstream out;
  out << "x,y,label\n";
  for (const auto& c : map.cells)
    out << format_real(c.x) << ',' << format_real(c.y) << ',' << basin_label_name(c.label) << '\n';
  return out.str();
}

ordered_json conventions_json(const RunConfig& config) {
  const auto& fc = config.conventions;
  const MeasureOptions options = config.measure_options();
  return ordered_json{
      {"degenerate_fraction", "degenerate_factor / n per sampled stratum"},
      {"degenerate_factor", fc.degenerate_factor},
      {"slope_cutoff", fc.slope_cutoff},
      {"min_decades", fc.min_decades},
      {"min_rungs", fc.min_rungs},
      {"sigma_minus_if_all_zero", "+inf"},
      {"sigma_plus_if_all_one", "+inf"},
      {"timeouts_counted_as", "OutOfBasin"},
      {"timeout_warning_fraction", options.timeout_warning_fraction},
      {"max_failure_fraction", options.max_failure_fraction},
      {"local_eps_max_over_delta", 0.1},
      {"local_verdict", "slope fitted at the smallest delta"},
      {"sampling", sampling_mode_name(config.sampling)},
      {"oracle_cones", config.oracle_cones},
      {"eps_ladder", config.eps_ladder},
      {"deltas", config.deltas},
      {"samples_per_rung", config.samples_per_rung},
      {"seed", config.seed},
      {"integrator", integrator_json(config.integrator)}};
}

ordered_json index_report(const IndexEstimate& e, const RunConfig& config) {
  const AnalyticIndex expected = analytic_sigma(config.spec);
  ordered_json rungs = ordered_json::array();
  for (const auto& s : e.ladder) rungs.push_back(rung_json(s));
  ordered_json warnings = ordered_json::array();
  for (const auto& w : e.warnings) warnings.push_back(w);
  return ordered_json{
      {"sigma_minus", to_json(e.sigma_minus)},
      {"sigma_plus", to_json(e.sigma_plus)},
      {"sigma", to_json(e.sigma)},
      {"stderr", e.slope_stderr},
      {"stderr_minus", e.stderr_minus},
      {"stderr_plus", e.stderr_plus},
      {"raw_slope_minus", number_or_null(e.raw_slope_minus)},
      {"raw_slope_plus", number_or_null(e.raw_slope_plus)},
      {"rungs_minus", e.rungs_minus},
      {"rungs_plus", e.rungs_plus},
      {"system", to_config_entry(config.spec)},
      {"expected_sigma", to_json(expected.sigma)},
      {"expected_sigma_loc", to_json(expected.sigma_loc)},
      {"stability_class", stability_class(e.sigma)},
      {"conventions", conventions_json(config)},
      {"rungs", rungs},
      {"warnings", warnings}};
}

ordered_json local_index_report(const LocalIndexEstimate& e, const RunConfig& config) {
  ordered_json report = index_report(e.final_estimate, config);
  ordered_json seq = ordered_json::array();
  for (std::size_t i = 0; i < e.deltas.size(); ++i) {
    const IndexEstimate& d = e.per_delta[i];
    seq.push_back(ordered_json{{"delta", e.deltas[i]},
                               {"sigma_minus", to_json(d.sigma_minus)},
                               {"sigma_plus", to_json(d.sigma_plus)},
                               {"sigma", to_json(d.sigma)},
                               {"raw_slope_minus", number_or_null(d.raw_slope_minus)},
                               {"raw_slope_plus", number_or_null(d.raw_slope_plus)},
                               {"stderr", d.slope_stderr}});
  }
  report["local"] = true;
  report["per_delta"] = seq;
  return report;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "a,sigma_expected,sigma_measured\n";
  for (const auto& r : rows)
    out << format_real(r.a) << ',' << r.expected.to_string() << ',' << r.measured.to_string()
        << '\n';
  return out.str();
}

}  // namespace stability_index

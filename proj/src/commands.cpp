#include "stability_index/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>

namespace stability_index {

namespace {

void ensure_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw ConfigError("output directory '" + dir.string() + "' is not writable");
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::string local_ladder_csv(const LocalIndexEstimate& e) {
  std::vector<MeasureSample> all;
  for (const auto& d : e.per_delta) all.insert(all.end(), d.ladder.begin(), d.ladder.end());
  return ladder_csv(all);
}

void print_warnings(const IndexEstimate& e, std::ostream& out) {
  for (const auto& w : e.warnings) out << "warning: " << w << '\n';
  for (const auto& s : e.ladder)
    for (const auto& w : s.warnings) out << "warning: " << w << '\n';
}

bool within(const ExtendedReal& expected, const ExtendedReal& measured, double tol) {
  if (!expected.is_finite()) return expected == measured;
  return measured.is_finite() && std::abs(measured.value() - expected.value()) <= tol;
}

/// Slope of the minus side; +inf when the convention was applied without a fit.
double effective_minus_slope(const IndexEstimate& e) {
  if (!std::isnan(e.raw_slope_minus)) return e.raw_slope_minus;
  return e.sigma_minus.to_double();
}

LocalIndexEstimate run_local(const RunConfig& config) {
  std::vector<double> ladder;
  if (config.eps_ladder != default_ladder()) ladder = config.eps_ladder;
  return local_index(config.spec, config.deltas, ladder, config.samples_per_rung, config.seed,
                     config.measure_options(), config.conventions);
}

IndexEstimate run_global(const RunConfig& config) {
  return estimate_index(config.spec, config.eps_ladder, config.samples_per_rung, config.seed,
                        config.measure_options(), config.conventions);
}

}  // namespace

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("STABIDX_OUT"); env && *env) return env;
  return ".";
}

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const IntegrationFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  } catch (const MeasurementError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  }
}

int cmd_estimate_index(const RunConfig& config, std::ostream& out) {
  validate(config);
  ensure_output_dir(config.output_dir);
  const IndexEstimate global = run_global(config);
  write_file(config.output_dir / "ladder.csv", ladder_csv(global.ladder));
  write_file(config.output_dir / "report.json", dump(index_report(global, config)));
  print_warnings(global, out);
  out << "system " << to_config_entry(config.spec) << '\n'
      << "sigma_minus " << global.sigma_minus.to_string() << '\n'
      << "sigma_plus " << global.sigma_plus.to_string() << '\n'
      << "sigma " << global.sigma.to_string() << " (" << stability_class(global.sigma) << ")\n";
  if (!config.deltas.empty()) {
    const LocalIndexEstimate local = run_local(config);
    write_file(config.output_dir / "local_ladder.csv", local_ladder_csv(local));
    write_file(config.output_dir / "local_report.json", dump(local_index_report(local, config)));
    for (std::size_t i = 0; i < local.deltas.size(); ++i)
      out << "delta " << format_real(local.deltas[i]) << " sigma_loc "
          << local.per_delta[i].sigma.to_string() << '\n';
    out << "sigma_loc " << local.final_estimate.sigma.to_string() << '\n';
  }
  return kExitOk;
}

double default_tolerance(const SystemSpec& spec) {
  switch (spec.family) {
    case Family::PowerAttract: return spec.p ? 0.15 : 0.10;
    case Family::PowerRepel: return 0.20;
    case Family::PiecewiseLinear: return 0.05;
    case Family::PhiSystem: return 0.0;
  }
  return 0.0;
}

std::vector<VerifyRow> verify_rows(const RunConfig& config, std::optional<double> tolerance,
                                   std::ostream& out) {
  validate(config);
  ensure_output_dir(config.output_dir);
  const AnalyticIndex expected = analytic_sigma(config.spec);
  const double tol = tolerance.value_or(default_tolerance(config.spec));
  const std::string tol_text = expected.sigma.is_finite() ? "+-" + format_real(tol) : "exact";
  std::vector<VerifyRow> rows;

  const IndexEstimate global = run_global(config);
  write_file(config.output_dir / "ladder.csv", ladder_csv(global.ladder));
  write_file(config.output_dir / "report.json", dump(index_report(global, config)));
  print_warnings(global, out);
  rows.push_back({"sigma", expected.sigma.to_string(), global.sigma.to_string(), tol_text,
                  within(expected.sigma, global.sigma, tol)});

  if (config.spec.family == Family::PiecewiseLinear) {
    for (const auto& s : global.ladder) {
      rows.push_back({"Sigma_eps at eps=" + format_real(s.eps), "0.25", format_real(s.fraction),
                      "+-0.01", std::abs(s.fraction - 0.25) <= 0.01});
    }
  }
  if (expected.sigma.is_pos_inf()) {
    bool all_high = true;
    for (const auto& s : global.ladder)
      all_high = all_high && s.fraction >= 1.0 - config.conventions.degenerate_factor /
                                                     static_cast<double>(s.n_total);
    rows.push_back({"Sigma_eps >= 1 - 2/n at every rung", "yes", all_high ? "yes" : "no", "exact",
                    all_high});
  }

  RunConfig local_config = config;
  if (local_config.deltas.empty() && !(expected.sigma_loc == expected.sigma))
    local_config.deltas = {0.3, 0.1, 0.03};
  if (!local_config.deltas.empty()) {
    const LocalIndexEstimate local = run_local(local_config);
    write_file(config.output_dir / "local_ladder.csv", local_ladder_csv(local));
    write_file(config.output_dir / "local_report.json",
               dump(local_index_report(local, local_config)));
    print_warnings(local.final_estimate, out);
    std::string sequence;
    bool nondecreasing = true;
    double previous = -std::numeric_limits<double>::infinity();
    for (const auto& d : local.per_delta) {
      const double slope = effective_minus_slope(d);
      if (!sequence.empty()) sequence += ' ';
      sequence += ExtendedReal::from_double(slope).to_string();
      nondecreasing = nondecreasing && slope >= previous;
      previous = slope;
    }
    if (expected.sigma_loc.is_neg_inf()) {
      const bool beyond = previous > config.conventions.slope_cutoff;
      rows.push_back({"local sigma_minus slopes by decreasing delta",
                      "increasing past " + format_real(config.conventions.slope_cutoff), sequence,
                      "exact", nondecreasing && beyond});
    } else {
      rows.push_back({"local sigma_minus slopes by decreasing delta", "reported", sequence, "-",
                      true});
    }
    rows.push_back({"sigma_loc", expected.sigma_loc.to_string(),
                    local.final_estimate.sigma.to_string(),
                    expected.sigma_loc.is_finite() ? tol_text : "exact",
                    within(expected.sigma_loc, local.final_estimate.sigma, tol)});
  }
  return rows;
}

int cmd_verify(const RunConfig& config, std::optional<double> tolerance, std::ostream& out) {
  const auto rows = verify_rows(config, tolerance, out);
  out << "system " << to_config_entry(config.spec) << '\n';
  out << std::left << std::setw(46) << "quantity" << std::setw(22) << "expected" << std::setw(40)
      << "measured" << std::setw(10) << "tolerance" << "result\n";
  bool ok = true;
  for (const auto& r : rows) {
    out << std::left << std::setw(46) << r.quantity << std::setw(22) << r.expected
        << std::setw(40) << r.measured << std::setw(10) << r.tolerance
        << (r.pass ? "PASS" : "FAIL") << '\n';
    ok = ok && r.pass;
  }
  return ok ? kExitOk : kExitVerifyFailed;
}

int cmd_basin_map(const RunConfig& config, const Rect& window, std::size_t nx, std::size_t ny,
                  std::ostream& out) {
  validate(config);
  ensure_output_dir(config.output_dir);
  std::optional<double> delta;
  if (!config.deltas.empty()) delta = config.deltas.front();
  const BasinMap map = basin_map(config.spec, window, nx, ny, delta, config.measure_options());
  const auto path = config.output_dir / "basin_map.csv";
  write_file(path, basin_map_csv(map));
  out << "wrote " << path.string() << " (" << map.cells.size() << " cells)\n";
  return kExitOk;
}

int cmd_classify(const RunConfig& config, State s0, std::ostream& out) {
  validate(config);
  IntegratorConfig cfg = config.integrator;
  if (!config.deltas.empty()) cfg.delta = config.deltas.front();
  const Classification c = classify(config.spec, s0, cfg, config.oracle_cones);
  out << "label " << basin_label_name(c.label) << '\n'
      << "certified " << (c.certified ? "yes" : "no") << '\n'
      << "timed_out " << (c.timed_out ? "yes" : "no") << '\n'
      << "steps " << c.steps << '\n';
  return kExitOk;
}

int cmd_sweep(const RunConfig& config, const std::vector<double>& a_values, std::ostream& out) {
  validate(config);
  ensure_output_dir(config.output_dir);
  if (a_values.empty()) throw ConfigError("sweep needs at least one a value");
  std::vector<SweepRow> rows;
  for (double a : a_values) {
    RunConfig c = config;
    c.spec.a = a;
    validate(c);
    const IndexEstimate e = run_global(c);
    rows.push_back({a, analytic_sigma(c.spec).sigma, e.sigma});
    out << "a " << format_real(a) << " expected " << rows.back().expected.to_string()
        << " measured " << e.sigma.to_string() << '\n';
  }
  write_file(config.output_dir / "sweep.csv", sweep_csv(rows));
  return kExitOk;
}

}  // namespace stability_index

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stability_index/integrator.hpp"
#include "stability_index/measure.hpp"
#include "stability_index/vector_fields.hpp"

namespace stability_index {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything one CLI run needs.
struct RunConfig {
  SystemSpec spec;
  IntegratorConfig integrator;
  std::vector<double> eps_ladder = default_ladder();
  std::vector<double> deltas;  ///< non-empty requests a local-index run
  std::uint64_t samples_per_rung = 100000;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = ".";
  SamplingMode sampling = SamplingMode::Stratified;
  bool oracle_cones = true;
  unsigned threads = 1;
  FitConventions conventions;

  MeasureOptions measure_options() const;
};

bool operator==(const RunConfig& lhs, const RunConfig& rhs);

/// Throws ConfigError if any component invariant fails.
void validate(const RunConfig& config);

/// `key = value` lines; `#` starts a comment. Keys not present keep the
/// values from `base`.
RunConfig parse_config(std::string_view text, RunConfig base = {});
std::string emit_config(const RunConfig& config);

/// Comma-separated reals, e.g. "0.1,0.01".
std::vector<double> parse_real_list(std::string_view text);

/// Shortest decimal that round-trips to the same double.
std::string format_real(double value);

}  // namespace stability_index

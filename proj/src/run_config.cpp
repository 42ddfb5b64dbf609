#include "stability_index/run_config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace stability_index {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_real(std::string_view text, std::string_view key) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw ConfigError("'" + std::string(key) + "' expects a real number, got '" + t + "'");
  return v;
}

std::uint64_t parse_count(std::string_view text, std::string_view key) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw ConfigError("'" + std::string(key) + "' expects a nonnegative integer, got '" + t + "'");
  return v;
}

bool parse_bool(std::string_view text, std::string_view key) {
  const std::string t = trim(text);
  if (t == "on" || t == "true" || t == "1") return true;
  if (t == "off" || t == "false" || t == "0") return false;
  throw ConfigError("'" + std::string(key) + "' expects on/off, got '" + t + "'");
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i]);
  }
  return out;
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                           : comma - start);
    if (!trim(piece).empty()) out.push_back(parse_real(piece, "list"));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

MeasureOptions RunConfig::measure_options() const {
  MeasureOptions options;
  options.integrator = integrator;
  options.mode = sampling;
  options.oracle_cones = oracle_cones;
  options.threads = threads;
  return options;
}

bool operator==(const RunConfig& lhs, const RunConfig& rhs) {
  auto same_integrator = [](const IntegratorConfig& a, const IntegratorConfig& b) {
    return a.r_in == b.r_in && a.r_out == b.r_out && a.delta == b.delta && a.t_max == b.t_max &&
           a.max_steps == b.max_steps && a.h_init == b.h_init && a.tol == b.tol &&
           a.h_min == b.h_min;
  };
  auto same_conventions = [](const FitConventions& a, const FitConventions& b) {
    return a.degenerate_factor == b.degenerate_factor && a.slope_cutoff == b.slope_cutoff &&
           a.min_decades == b.min_decades && a.min_rungs == b.min_rungs;
  };
  return lhs.spec == rhs.spec && same_integrator(lhs.integrator, rhs.integrator) &&
         lhs.eps_ladder == rhs.eps_ladder && lhs.deltas == rhs.deltas &&
         lhs.samples_per_rung == rhs.samples_per_rung && lhs.seed == rhs.seed &&
         lhs.output_dir == rhs.output_dir && lhs.sampling == rhs.sampling &&
         lhs.oracle_cones == rhs.oracle_cones && lhs.threads == rhs.threads &&
         same_conventions(lhs.conventions, rhs.conventions);
}

void validate(const RunConfig& config) {
  try {
    validate(config.spec);
    config.integrator.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (double eps : config.eps_ladder)
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps ladder entries must be positive");
  for (double delta : config.deltas) {
    if (!(delta > config.integrator.r_in && delta < config.integrator.r_out))
      throw ConfigError("each delta must satisfy r_in < delta < r_out");
  }
  if (config.samples_per_rung < 100) throw ConfigError("samples per rung must be at least 100");
  if (config.threads == 0) throw ConfigError("threads must be positive");
  if (!(config.conventions.slope_cutoff > 0.0)) throw ConfigError("slope cutoff must be positive");
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  RunConfig cfg = std::move(base);
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    try {
      if (key == "system") {
        cfg.spec = parse_config_entry(value);
      } else if (key == "eps_ladder") {
        cfg.eps_ladder = parse_real_list(value);
      } else if (key == "delta") {
        cfg.deltas = parse_real_list(value);
      } else if (key == "samples") {
        cfg.samples_per_rung = parse_count(value, key);
      } else if (key == "seed") {
        cfg.seed = parse_count(value, key);
      } else if (key == "out") {
        cfg.output_dir = value;
      } else if (key == "sampling") {
        cfg.sampling = parse_sampling_mode(value);
      } else if (key == "cones") {
        cfg.oracle_cones = parse_bool(value, key);
      } else if (key == "threads") {
        cfg.threads = static_cast<unsigned>(parse_count(value, key));
      } else if (key == "r_in") {
        cfg.integrator.r_in = parse_real(value, key);
      } else if (key == "r_out") {
        cfg.integrator.r_out = parse_real(value, key);
      } else if (key == "t_max") {
        cfg.integrator.t_max = parse_real(value, key);
      } else if (key == "max_steps") {
        cfg.integrator.max_steps = parse_count(value, key);
      } else if (key == "h_init") {
        cfg.integrator.h_init = parse_real(value, key);
      } else if (key == "tol") {
        cfg.integrator.tol = parse_real(value, key);
      } else if (key == "h_min") {
        cfg.integrator.h_min = parse_real(value, key);
      } else if (key == "slope_cutoff") {
        cfg.conventions.slope_cutoff = parse_real(value, key);
      } else if (key == "degenerate_factor") {
        cfg.conventions.degenerate_factor = parse_real(value, key);
      } else if (key == "min_decades") {
        cfg.conventions.min_decades = parse_real(value, key);
      } else if (key == "min_rungs") {
        cfg.conventions.min_rungs = parse_count(value, key);
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream out;
  out << "system = " << to_config_entry(c.spec) << '\n'
      << "eps_ladder = " << join(c.eps_ladder) << '\n'
      << "delta = " << join(c.deltas) << '\n'
      << "samples = " << c.samples_per_rung << '\n'
      << "seed = " << c.seed << '\n'
      << "out = " << c.output_dir.string() << '\n'
      << "sampling = " << sampling_mode_name(c.sampling) << '\n'
      << "cones = " << (c.oracle_cones ? "on" : "off") << '\n'
      << "threads = " << c.threads << '\n'
      << "r_in = " << format_real(c.integrator.r_in) << '\n'
      << "r_out = " << format_real(c.integrator.r_out) << '\n'
      << "t_max = " << format_real(c.integrator.t_max) << '\n'
      << "max_steps = " << c.integrator.max_steps << '\n'
      << "h_init = " << format_real(c.integrator.h_init) << '\n'
      << "tol = " << format_real(c.integrator.tol) << '\n'
      << "h_min = " << format_real(c.integrator.h_min) << '\n'
      << "slope_cutoff = " << format_real(c.conventions.slope_cutoff) << '\n'
      << "degenerate_factor = " << format_real(c.conventions.degenerate_factor) << '\n'
      << "min_decades = " << format_real(c.conventions.min_decades) << '\n'
      << "min_rungs = " << c.conventions.min_rungs << '\n';
  return out.str();
}

}  // namespace stability_index

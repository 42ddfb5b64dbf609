#include "cli.hpp"

#include <algorithm>
#include <map>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "stability_index/commands.hpp"

namespace stability_index {

namespace {

struct Flags {
  std::string config_file;
  std::string family;
  double a = 0.0;
  double p = 0.0;
  double target_sigma = 0.0;
  std::string eps_ladder;
  std::string delta;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::string out;
  unsigned threads = 1;
  std::string sampling;
  bool no_cones = false;
  double slope_cutoff = 0.0;
  bool emit_config = false;

  CLI::Option* family_opt = nullptr;
  CLI::Option* a_opt = nullptr;
  CLI::Option* p_opt = nullptr;
  CLI::Option* target_opt = nullptr;
  CLI::Option* ladder_opt = nullptr;
  CLI::Option* delta_opt = nullptr;
  CLI::Option* samples_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* sampling_opt = nullptr;
  CLI::Option* cutoff_opt = nullptr;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "Config file (key = value lines)");
  f.family_opt = cmd->add_option("--family", f.family, "power-attract|power-repel|phi|piecewise");
  f.a_opt = cmd->add_option("--a", f.a, "Exponent a");
  f.p_opt = cmd->add_option("--p", f.p, "Coordinate transform exponent (power-attract)");
  f.target_opt = cmd->add_option("--target-sigma", f.target_sigma,
                                 "Pick the power system with this index");
  f.ladder_opt = cmd->add_option("--eps-ladder", f.eps_ladder, "Comma-separated eps radii");
  f.delta_opt = cmd->add_option("--delta", f.delta, "Comma-separated delta radii (local runs)");
  f.samples_opt = cmd->add_option("--samples", f.samples, "Samples per rung");
  f.seed_opt = cmd->add_option("--seed", f.seed, "RNG seed");
  f.out_opt = cmd->add_option("--out", f.out, "Output directory (default $STABIDX_OUT or .)");
  f.threads_opt = cmd->add_option("--threads", f.threads, "Worker threads");
  f.sampling_opt = cmd->add_option("--sampling", f.sampling, "stratified|uniform");
  cmd->add_flag("--no-cones", f.no_cones, "Integrate every point; no certified shortcuts");
  f.cutoff_opt = cmd->add_option("--slope-cutoff", f.slope_cutoff, "Slope reported as infinite");
  cmd->add_flag("--emit-config", f.emit_config, "Print the resolved config and exit");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Defaults, then config file, then flags.
RunConfig resolve(const Flags& f) {
  RunConfig c;
  c.output_dir = default_output_dir();
  if (!f.config_file.empty()) c = parse_config(read_file(f.config_file), c);

  if (f.target_opt->count()) {
    if (f.family_opt->count() || f.a_opt->count())
      throw ConfigError("--target-sigma cannot be combined with --family or --a");
    c.spec = a_for_target_sigma(f.target_sigma);
  }
  if (f.family_opt->count()) {
    c.spec.family = parse_family(f.family);
    c.spec.p.reset();
    if (c.spec.family == Family::PowerRepel && !f.a_opt->count()) c.spec.a = 0.5;
    if (c.spec.family != Family::PowerRepel && !f.a_opt->count()) c.spec.a = 2.0;
  }
  if (f.a_opt->count()) c.spec.a = f.a;
  if (f.p_opt->count()) c.spec.p = f.p;
  if (f.ladder_opt->count()) c.eps_ladder = parse_real_list(f.eps_ladder);
  if (f.delta_opt->count()) c.deltas = parse_real_list(f.delta);
  if (f.samples_opt->count()) c.samples_per_rung = f.samples;
  if (f.seed_opt->count()) c.seed = f.seed;
  if (f.out_opt->count()) c.output_dir = f.out;
  if (f.threads_opt->count()) c.threads = f.threads;
  if (f.sampling_opt->count()) c.sampling = parse_sampling_mode(f.sampling);
  if (f.no_cones) c.oracle_cones = false;
  if (f.cutoff_opt->count()) c.conventions.slope_cutoff = f.slope_cutoff;
  validate(c);
  return c;
}

Rect parse_window(const std::string& text) {
  const auto v = parse_real_list(text);
  if (v.size() != 4) throw ConfigError("--window expects x_lo,x_hi,y_lo,y_hi");
  return Rect{v[0], v[1], v[2], v[3]};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stability index estimation for planar flows with a degenerate equilibrium", "stabidx"};
  app.require_subcommand(1);

  std::map<const CLI::App*, Flags> flags;
  auto* estimate = app.add_subcommand("estimate-index", "Fit the index over an eps ladder");
  add_common(estimate, flags[estimate]);
  auto* local = app.add_subcommand("local-index", "Fit the local index over a delta ladder");
  add_common(local, flags[local]);

  auto* verify = app.add_subcommand("verify", "Compare fitted indices with closed forms");
  add_common(verify, flags[verify]);
  double tolerance = 0.0;
  auto* tol_opt = verify->add_option("--tolerance", tolerance, "Override the index tolerance");

  auto* map = app.add_subcommand("basin-map", "Classify a grid of cell centres");
  add_common(map, flags[map]);
  std::string window_text = "0,1,0,1";
  std::size_t nx = 100;
  std::size_t ny = 100;
  map->add_option("--window", window_text, "x_lo,x_hi,y_lo,y_hi");
  map->add_option("--nx", nx, "Cells along x");
  map->add_option("--ny", ny, "Cells along y");

  auto* cls = app.add_subcommand("classify", "Classify one initial state");
  add_common(cls, flags[cls]);
  double x0 = 0.0;
  double y0 = 0.0;
  cls->add_option("--x", x0, "Initial x")->required();
  cls->add_option("--y", y0, "Initial y")->required();

  auto* sweep = app.add_subcommand("sweep", "Index across a range of a");
  add_common(sweep, flags[sweep]);
  std::string a_values = "1.5,2,3";
  sweep->add_option("--a-values", a_values, "Comma-separated exponents");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    out << app.help();
    for (auto* sub : app.get_subcommands()) out << sub->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  }

  return run_guarded(
      [&]() -> int {
        const Flags& f = flags.at(app.get_subcommands().front());
        RunConfig config = resolve(f);
        if (*local && config.deltas.empty()) config.deltas = {0.3, 0.1, 0.03};
        if (f.emit_config) {
          out << emit_config(config);
          return kExitOk;
        }
        if (*estimate) return cmd_estimate_index(config, out);
        if (*local) return cmd_estimate_index(config, out);
        if (*verify) {
          std::optional<double> tol;
          if (tol_opt->count()) tol = tolerance;
          return cmd_verify(config, tol, out);
        }
        if (*map) return cmd_basin_map(config, parse_window(window_text), nx, ny, out);
        if (*cls) return cmd_classify(config, State{x0, y0}, out);
        if (*sweep) return cmd_sweep(config, parse_real_list(a_values), out);
        return kExitConfigError;
      },
      err);
}

}  // namespace stability_index

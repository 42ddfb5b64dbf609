#include "stability_index/measure.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace stability_index {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Counter-based seeding: each point gets its own stream, so results do not
// depend on how points are distributed over workers.
struct SplitMix64 {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

std::uint64_t point_seed(std::uint64_t seed, double eps, std::optional<double> delta,
                         std::uint64_t index) {
  SplitMix64 mix{seed};
  std::uint64_t h = mix.next() ^ std::bit_cast<std::uint64_t>(eps);
  h = SplitMix64{h}.next() ^ (delta ? std::bit_cast<std::uint64_t>(*delta) : 0x5bd1e995ULL);
  h = SplitMix64{h}.next() ^ index;
  return SplitMix64{h}.next();
}

// Runs body(i) for i in [0, n) on `threads` workers.
void parallel_for(std::uint64_t n, unsigned threads, const std::function<void(std::uint64_t, unsigned)>& body) {
  threads = std::max(1u, threads);
  if (threads == 1 || n < 2) {
    for (std::uint64_t i = 0; i < n; ++i) body(i, 0);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        constexpr std::uint64_t chunk = 64;
        try {
          while (true) {
            const std::uint64_t start = next.fetch_add(chunk);
            if (start >= n) break;
            const std::uint64_t stop = std::min(n, start + chunk);
            for (std::uint64_t i = start; i < stop; ++i) body(i, w);
          }
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

struct PointResult {
  bool failed = false;
  bool timed_out = false;
  bool basin = false;
  bool local = false;
};

struct Counts {
  std::uint64_t basin = 0;
  std::uint64_t local = 0;
  std::uint64_t timeout = 0;
  std::uint64_t failed = 0;
};

PointResult classify_point(const SystemSpec& spec, State s, const MeasureOptions& options,
                           const ConeParams& cones, std::optional<double> delta) {
  PointResult r;
  try {
    IntegratorConfig cfg = options.integrator;
    cfg.delta = delta;
    const Classification first = classify(spec, s, cfg, options.oracle_cones, cones);
    r.timed_out = first.timed_out;
    if (!delta) {
      r.basin = first.label == BasinLabel::InBasin;
      return r;
    }
    r.local = first.label == BasinLabel::InLocalBasin;
    if (r.local) {
      r.basin = true;
      return r;
    }
    cfg.delta.reset();
    const Classification global = classify(spec, s, cfg, options.oracle_cones, cones);
    r.basin = global.label == BasinLabel::InBasin;
  } catch (const IntegrationFailure&) {
    r.failed = true;
  }
  return r;
}

void check_rung_inputs(double eps, std::optional<double> delta, std::uint64_t n) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
  if (delta && !(*delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (n < 100) throw std::invalid_argument("at least 100 samples per rung are required");
}

}  // namespace

std::string_view sampling_mode_name(SamplingMode mode) {
  return mode == SamplingMode::Stratified ? "stratified" : "uniform";
}

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "stratified") return SamplingMode::Stratified;
  if (name == "uniform") return SamplingMode::Uniform;
  throw std::invalid_argument("unknown sampling mode '" + std::string(name) + "'");
}

MeasureSample estimate_fraction(const SystemSpec& spec, double eps, std::optional<double> delta,
                                std::uint64_t n, std::uint64_t seed, const MeasureOptions& options) {
  validate(spec);
  check_rung_inputs(eps, delta, n);
  IntegratorConfig probe = options.integrator;
  probe.delta = delta;
  probe.validate();

  const ConeParams cones = options.cones ? *options.cones : certified_cones(spec, options.integrator);
  const Strata strata(spec, eps, cones, delta);

  MeasureSample out;
  out.eps = eps;
  out.delta = delta;
  out.seed = seed;
  out.mode = options.mode;

  const bool stratified = options.mode == SamplingMode::Stratified;
  const double domain = strata.domain_area();
  const double weight = stratified ? strata.undetermined_area() / domain : 1.0;
  const Rect box = stratified ? strata.sample_box() : strata.domain();
  const bool sample = !stratified || (weight > 0.0 && box.area() > 0.0);
  const std::uint64_t n_draw = sample ? n : 0;

  std::vector<Counts> partial(std::max(1u, options.threads));
  parallel_for(n_draw, options.threads, [&](std::uint64_t i, unsigned worker) {
    SplitMix64 rng{point_seed(seed, eps, delta, i)};
    State s;
    for (std::uint64_t attempt = 0;; ++attempt) {
      s = {box.x_lo + (box.x_hi - box.x_lo) * rng.uniform(),
           box.y_lo + (box.y_hi - box.y_lo) * rng.uniform()};
      if (!stratified || strata.contains_undetermined(s)) break;
      if (attempt > 100000000) throw MeasurementError("rejection sampling did not terminate");
    }
    const PointResult r = classify_point(spec, s, options, cones, delta);
    Counts& c = partial[worker];
    c.failed += r.failed;
    c.timeout += r.timed_out;
    c.basin += r.basin;
    c.local += r.local;
  });

  Counts total;
  for (const Counts& c : partial) {
    total.basin += c.basin;
    total.local += c.local;
    total.timeout += c.timeout;
    total.failed += c.failed;
  }

  out.n_total = n_draw;
  out.n_basin = total.basin;
  if (delta) out.n_local = total.local;
  out.n_timeout = total.timeout;
  out.n_failed = total.failed;
  out.sampled_weight = sample ? weight : 0.0;

  if (n_draw > 0 && static_cast<double>(total.failed) > options.max_failure_fraction * n_draw) {
    throw MeasurementError("integration failed for " + std::to_string(total.failed) + " of " +
                           std::to_string(n_draw) + " samples at eps=" + std::to_string(eps));
  }
  if (n_draw > 0 && static_cast<double>(total.timeout) > options.timeout_warning_fraction * n_draw) {
    out.warnings.push_back("timed-out fraction " +
                           std::to_string(static_cast<double>(total.timeout) / n_draw) +
                           " at eps=" + std::to_string(eps));
  }

  // Failed points are excluded from the sample.
  const std::uint64_t valid = n_draw - total.failed;
  const std::uint64_t hits = delta ? total.local : total.basin;
  const double p_hat = valid > 0 ? static_cast<double>(hits) / valid : 0.0;
  const double valid_d = static_cast<double>(valid);

  if (stratified) {
    out.certified_in = strata.in_area() / domain;
    out.certified_out = strata.out_area() / domain;
    const double und = strata.undetermined_area();
    const double sampled_in = sample ? und * p_hat : 0.0;
    const double sampled_out = sample ? und * (1.0 - p_hat) : 0.0;
    out.fraction = (strata.in_area() + sampled_in) / domain;
    out.log_fraction = log_add(strata.log_in_area(), safe_log(sampled_in)) - std::log(domain);
    out.log_complement = safe_log(strata.out_area() + sampled_out) - std::log(domain);
    out.std_error = sample && valid > 0 ? weight * std::sqrt(p_hat * (1.0 - p_hat) / valid_d) : 0.0;
    out.resolution = sample && valid > 0 ? 2.0 * weight / valid_d : 0.0;
    const std::uint64_t misses = valid - hits;
    out.zero_degenerate = strata.log_in_area() == kNegInf && (!sample || hits < 2);
    out.one_degenerate = strata.out_area() == 0.0 && (!sample || misses < 2);
  } else {
    out.fraction = p_hat;
    out.log_fraction = safe_log(p_hat);
    out.log_complement = safe_log(1.0 - p_hat);
    out.std_error = valid > 0 ? std::sqrt(p_hat * (1.0 - p_hat) / valid_d) : 0.0;
    out.resolution = valid > 0 ? 2.0 / valid_d : 1.0;
    out.zero_degenerate = out.fraction < out.resolution;
    out.one_degenerate = 1.0 - out.fraction < out.resolution;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct LineFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double m = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  if (xs.size() > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - (my + fit.slope * (xs[i] - mx));
      ssr += r * r;
    }
    fit.stderr_slope = std::sqrt(ssr / (m - 2.0) / sxx);
  }
  return fit;
}

struct SideFit {
  ExtendedReal value;
  double raw = std::numeric_limits<double>::quiet_NaN();
  double stderr_slope = 0.0;
  std::size_t rungs = 0;
};

// One side of the index: the slope of ln(quantity) over the non-degenerate rungs.
SideFit fit_side(std::span<const MeasureSample> ladder, bool minus_side,
                 const FitConventions& conventions, std::vector<std::string>& warnings) {
  const char* name = minus_side ? "sigma_minus" : "sigma_plus";
  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t degenerate = 0;
  for (const MeasureSample& s : ladder) {
    const bool deg = minus_side ? s.zero_degenerate : s.one_degenerate;
    const double y = minus_side ? s.log_fraction : s.log_complement;
    if (deg || !std::isfinite(y)) {
      ++degenerate;
      continue;
    }
    xs.push_back(std::log(s.eps));
    ys.push_back(y);
  }
  SideFit side;
  side.rungs = xs.size();
  if (degenerate == ladder.size()) {
    side.value = ExtendedReal::pos_inf();
    return side;
  }
  if (degenerate > 0) {
    warnings.push_back(std::string(name) + ": dropped " + std::to_string(degenerate) +
                       " degenerate rung(s) from the fit");
  }
  if (xs.size() < 2) {
    warnings.push_back(std::string(name) + ": fewer than two usable rungs, applying the infinity convention");
    side.value = ExtendedReal::pos_inf();
    return side;
  }
  const LineFit fit = least_squares(xs, ys);
  side.raw = fit.slope;
  side.stderr_slope = fit.stderr_slope;
  if (fit.slope > conventions.slope_cutoff) {
    side.value = ExtendedReal::pos_inf();
  } else {
    side.value = ExtendedReal::finite(fit.slope);
  }
  return side;
}

}  // namespace

IndexEstimate fit_indices(std::span<const MeasureSample> ladder, const FitConventions& conventions) {
  std::vector<double> eps;
  for (const MeasureSample& s : ladder) eps.push_back(s.eps);
  std::sort(eps.begin(), eps.end());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
  if (eps.size() < conventions.min_rungs)
    throw FitError("ladder needs at least " + std::to_string(conventions.min_rungs) +
                   " distinct eps values");
  if (std::log10(eps.back() / eps.front()) < conventions.min_decades - 1e-12)
    throw FitError("ladder must span at least " + std::to_string(conventions.min_decades) + " decades");

  IndexEstimate est;
  est.ladder.assign(ladder.begin(), ladder.end());
  for (const MeasureSample& s : ladder)
    est.warnings.insert(est.warnings.end(), s.warnings.begin(), s.warnings.end());

  const SideFit minus = fit_side(ladder, true, conventions, est.warnings);
  const SideFit plus = fit_side(ladder, false, conventions, est.warnings);
  est.sigma_minus = minus.value;
  est.sigma_plus = plus.value;
  est.raw_slope_minus = minus.raw;
  est.raw_slope_plus = plus.raw;
  est.stderr_minus = minus.stderr_slope;
  est.stderr_plus = plus.stderr_slope;
  est.rungs_minus = minus.rungs;
  est.rungs_plus = plus.rungs;
  est.slope_stderr = std::hypot(minus.value.is_finite() ? minus.stderr_slope : 0.0,
                                plus.value.is_finite() ? plus.stderr_slope : 0.0);
  est.sigma = est.sigma_plus - est.sigma_minus;
  return est;
}

std::vector<double> geometric_ladder(double hi, double lo, std::size_t rungs) {
  if (!(hi > lo && lo > 0.0)) throw std::invalid_argument("ladder needs hi > lo > 0");
  if (rungs < 2) throw std::invalid_argument("ladder needs at least two rungs");
  std::vector<double> out(rungs);
  const double step = std::log(lo / hi) / static_cast<double>(rungs - 1);
  for (std::size_t i = 0; i < rungs; ++i) out[i] = hi * std::exp(step * static_cast<double>(i));
  out.back() = lo;
  return out;
}

std::vector<double> default_ladder() { return geometric_ladder(1e-1, 1e-3, 8); }

std::vector<double> local_ladder(double delta, std::size_t rungs, double decades) {
  const double hi = delta / 10.0;
  return geometric_ladder(hi, hi * std::pow(10.0, -decades), rungs);
}

IndexEstimate estimate_index(const SystemSpec& spec, std::span<const double> eps_ladder,
                             std::uint64_t n, std::uint64_t seed, const MeasureOptions& options,
                             const FitConventions& conventions) {
  std::vector<MeasureSample> ladder;
  ladder.reserve(eps_ladder.size());
  for (double eps : eps_ladder)
    ladder.push_back(estimate_fraction(spec, eps, std::nullopt, n, seed, options));
  return fit_indices(ladder, conventions);
}

LocalIndexEstimate local_index(const SystemSpec& spec, std::vector<double> deltas,
                               std::span<const double> eps_ladder, std::uint64_t n,
                               std::uint64_t seed, const MeasureOptions& options,
                               const FitConventions& conventions) {
  if (deltas.empty()) throw std::invalid_argument("local_index needs at least one delta");
  std::sort(deltas.begin(), deltas.end(), std::greater<>());

  LocalIndexEstimate out;
  out.deltas = deltas;
  for (double delta : deltas) {
    std::vector<double> radii;
    if (eps_ladder.empty()) {
      radii = local_ladder(delta);
    } else {
      for (double eps : eps_ladder)
        if (eps <= delta / 10.0) radii.push_back(eps);
    }
    std::vector<MeasureSample> ladder;
    for (double eps : radii) ladder.push_back(estimate_fraction(spec, eps, delta, n, seed, options));
    out.per_delta.push_back(fit_indices(ladder, conventions));
  }
  out.final_estimate = out.per_delta.back();
  return out;
}

BasinMap basin_map(const SystemSpec& spec, const Rect& window, std::size_t nx, std::size_t ny,
                   std::optional<double> delta, const MeasureOptions& options) {
  validate(spec);
  if (!(window.x_hi > window.x_lo) || !(window.y_hi > window.y_lo))
    throw std::invalid_argument("basin map window is degenerate");
  if (nx == 0 || ny == 0 || nx > 4096 || ny > 4096)
    throw std::invalid_argument("basin map resolution must be in [1, 4096] per axis");
  IntegratorConfig probe = options.integrator;
  probe.delta = delta;
  probe.validate();

  const ConeParams cones = options.cones ? *options.cones : certified_cones(spec, options.integrator);
  BasinMap map;
  map.window = window;
  map.nx = nx;
  map.ny = ny;
  map.cells.resize(nx * ny);
  const double dx = (window.x_hi - window.x_lo) / static_cast<double>(nx);
  const double dy = (window.y_hi - window.y_lo) / static_cast<double>(ny);

  parallel_for(nx * ny, options.threads, [&](std::uint64_t idx, unsigned) {
    const std::size_t i = idx % nx;
    const std::size_t j = idx / nx;
    MapCell& cell = map.cells[idx];
    cell.x = window.x_lo + (static_cast<double>(i) + 0.5) * dx;
    cell.y = window.y_lo + (static_cast<double>(j) + 0.5) * dy;
    const PointResult r = classify_point(spec, {cell.x, cell.y}, options, cones, delta);
    if (r.local) {
      cell.label = BasinLabel::InLocalBasin;
    } else if (r.basin) {
      cell.label = BasinLabel::InBasin;
    } else {
      cell.label = BasinLabel::OutOfBasin;
    }
  });
  return map;
}

}  // namespace stability_index

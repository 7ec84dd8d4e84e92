#pragma once

// Godunov-type scheme for q_t + (V1(gamma * V2(q)) q)_x = 0:
//
//   q_j^{n+1} = q_j^n - lambda (q_j^n V_j^n - q_{j-1}^n V_{j-1}^n),
//   V_j^n     = V1( sum_{k<N_eta} gamma_k V2(q_{j+k+1}^n) ),
//
// with exact kernel weights gamma_k and a time step bounded by the CFL limit
// of the initial range.

#include <nonlocal/correlation.hpp>
#include <nonlocal/diagnostics.hpp>
#include <nonlocal/error.hpp>
#include <nonlocal/grid.hpp>
#include <nonlocal/kernel.hpp>
#include <nonlocal/velocity.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace nonlocal {

enum class NonlocalPath { Naive, Fast, Both };

inline const char* to_string(NonlocalPath p) {
  switch (p) {
    case NonlocalPath::Naive: return "naive";
    case NonlocalPath::Fast: return "fast";
    case NonlocalPath::Both: return "both";
  }
  return "naive";
}

struct LambdaPolicy {
  enum class Kind { Cfl, PaperPreset, Fixed };
  Kind kind = Kind::Cfl;
  double value = 0.0;  // Fixed only

  static LambdaPolicy cfl() { return {Kind::Cfl, 0.0}; }
  // dt = dx / (3 gamma_0 + 1)
  static LambdaPolicy paper_preset() { return {Kind::PaperPreset, 0.0}; }
  static LambdaPolicy fixed(double lambda) { return {Kind::Fixed, lambda}; }
};

struct SolverConfig {
  Grid1D grid;
  Kernel kernel;
  VelocityModel v1;
  VelocityModel v2;
  InitialDatum initial;
  double final_time = 0.0;
  LambdaPolicy lambda = LambdaPolicy::cfl();
  std::vector<double> snapshot_times;
  NonlocalPath path = NonlocalPath::Naive;
  double compare_tol = 1e-12;
  bool diagnostics = true;
  std::optional<double> eta;  // defaults to truncation_eta(kernel, dx)
};

// V_j^n for j = -1 .. n-1; index -1 is the cell left of the mesh.
struct NonlocalField {
  double ghost = 0.0;
  std::vector<double> v_at;

  double at(std::ptrdiff_t j) const { return j < 0 ? ghost : v_at[static_cast<std::size_t>(j)]; }
};

// Bounds entering the CFL limit
//   lambda <= 1 / (gamma_0 |V1'| |V2'| q_M + |V1|),
// |V2'| over [q_m, q_M] and |V1|, |V1'| over the range of the weighted sums.
inline CflBounds cfl_bounds(const WeightVector& w, const VelocityModel& v1, const VelocityModel& v2,
                            const Interval& density) {
  validate_interval(density);
  CflBounds b;
  b.density = density;
  b.v2_image = image_interval(v2, density);
  const double total = w.total();
  // Truncated weights sum to total <= 1, so the sums lie in the hull of the
  // V2 image and its scaled copy.
  b.nonlocal = Interval::hull(b.v2_image, {b.v2_image.lo * total, b.v2_image.hi * total, false});
  b.sup_v1 = sup_abs_value(v1, b.nonlocal);
  b.sup_dv1 = sup_abs_derivative(v1, b.nonlocal);
  b.sup_dv2 = sup_abs_derivative(v2, density);
  const double denom = w.front() * b.sup_dv1 * b.sup_dv2 * density.hi + b.sup_v1;
  if (denom > 0.0) {
    b.lambda_max = 1.0 / denom;
  } else {
    b.degenerate = true;
    b.lambda_max = 1.0;
  }
  return b;
}

inline double cfl_lambda(const CflBounds& bounds, const LambdaPolicy& policy, double gamma_0) {
  switch (policy.kind) {
    case LambdaPolicy::Kind::Cfl: return bounds.lambda_max;
    case LambdaPolicy::Kind::PaperPreset: return 1.0 / (3.0 * gamma_0 + 1.0);
    case LambdaPolicy::Kind::Fixed: return policy.value;
  }
  return bounds.lambda_max;
}

// Everything derived from a configuration before the first step.
struct Setup {
  WeightVector weights;
  double eta = 0.0;
  State initial;
  CflBounds bounds;
  double lambda = 0.0;
  double dt = 0.0;
  bool sign_condition = false;
  bool kernel_monotone = false;
  std::vector<std::string> warnings;
};

inline Setup prepare(const SolverConfig& config) {
  Setup s;
  const double dx = config.grid.dx();
  s.eta = config.eta.value_or(truncation_eta(config.kernel, dx));
  s.weights = weights(config.kernel, dx, s.eta);
  if (config.grid.n_cells() < 2 * s.weights.n_eta)
    throw ConfigError("grid has " + std::to_string(config.grid.n_cells()) + " cells, fewer than 2 N_eta = " +
                      std::to_string(2 * s.weights.n_eta));
  if (!std::isfinite(config.final_time) || config.final_time < 0.0)
    throw ValidationError("final time must be finite and >= 0");
  for (std::size_t i = 0; i < config.snapshot_times.size(); ++i) {
    const double t = config.snapshot_times[i];
    if (!std::isfinite(t) || t < 0.0 || t > config.final_time * (1.0 + 1e-12))
      throw ValidationError("snapshot time " + std::to_string(t) + " outside [0, T]");
    if (i > 0 && t < config.snapshot_times[i - 1]) throw ValidationError("snapshot times must be sorted");
  }

  s.initial = project_initial(config.initial, config.grid);
  double q_m = std::min(s.initial.ghost_left, s.initial.ghost_right);
  double q_M = std::max(s.initial.ghost_left, s.initial.ghost_right);
  for (double q : s.initial.interior) {
    q_m = std::min(q_m, q);
    q_M = std::max(q_M, q);
  }
  s.bounds = cfl_bounds(s.weights, config.v1, config.v2, {q_m, q_M});
  if (s.bounds.degenerate) s.warnings.push_back("degenerate model: CFL denominator vanishes, using lambda = 1");
  if (s.bounds.sup_dv1 == 0.0)
    s.warnings.push_back("degenerate model: V1' vanishes, the nonlocal term has no effect");

  s.kernel_monotone = config.kernel.is_monotone_decreasing();
  if (!s.kernel_monotone) {
    if (config.diagnostics)
      throw ValidationError("kernel is not monotonically decreasing; required when diagnostics are enabled");
    s.warnings.push_back("kernel is not monotonically decreasing; maximum principle not guaranteed");
  }
  s.sign_condition = sign_condition_holds(config.v1, config.v2, s.bounds.density, s.bounds.nonlocal);
  if (!s.sign_condition)
    s.warnings.push_back("V1', V2' do not have opposite signs on the initial range; maximum principle not guaranteed");

  s.lambda = cfl_lambda(s.bounds, config.lambda, s.weights.front());
  if (!std::isfinite(s.lambda) || s.lambda <= 0.0) throw ValidationError("lambda must be > 0");
  if (s.lambda > s.bounds.lambda_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os.precision(17);
    os << "lambda = " << s.lambda << " violates the CFL bound " << s.bounds.lambda_max;
    throw ValidationError(os.str());
  }
  s.dt = s.lambda * dx;
  return s;
}

inline double cfl_lambda(const SolverConfig& config) { return prepare(config).lambda; }

namespace detail {
// V2 applied to q_i, i = 0 .. n + N_eta - 1 (ghost values past the mesh).
inline std::vector<double> transformed_cells(const State& s, std::size_t n_eta, const VelocityModel& v2) {
  const std::size_t n = s.size();
  std::vector<double> w(n + n_eta);
  for (std::size_t i = 0; i < n; ++i) w[i] = v2(s.interior[i]);
  const double far = v2(s.ghost_right);
  std::fill(w.begin() + static_cast<std::ptrdiff_t>(n), w.end(), far);
  return w;
}

inline NonlocalField apply_outer(std::span<const double> sums, const VelocityModel& v1) {
  NonlocalField f;
  f.ghost = v1(sums[0]);
  f.v_at.resize(sums.size() - 1);
  for (std::size_t j = 0; j + 1 < sums.size(); ++j) f.v_at[j] = v1(sums[j + 1]);
  return f;
}
}  // namespace detail

// Direct evaluation of every weighted sum in fixed order k = 0 .. N_eta - 1
// with compensated accumulation.
inline NonlocalField nonlocal_field_naive(const State& state, const WeightVector& weights,
                                          const VelocityModel& v1, const VelocityModel& v2) {
  const std::size_t n = state.size();
  const std::size_t N = weights.n_eta;
  const auto w = detail::transformed_cells(state, N, v2);
  std::vector<double> sums(n + 1);
  for (std::size_t m = 0; m <= n; ++m) {
    // m = j + 1, reads w[j + k + 1]
    double sum = 0.0, c = 0.0;
    const double* row = w.data() + m;
    for (std::size_t k = 0; k < N; ++k) {
      const double y = weights.gamma[k] * row[k] - c;
      const double t = sum + y;
      c = (t - sum) - y;
      sum = t;
    }
    sums[m] = sum;
  }
  return detail::apply_outer(sums, v1);
}

// Same field through FFT correlation. The far-field value is subtracted
// first so the transformed signal has finite support; it re-enters as
// V2(far) * sum(gamma).
class FastNonlocalField {
public:
  FastNonlocalField(const WeightVector& weights, std::size_t n_cells)
      : weights_(weights), n_(n_cells), total_(weights.total()),
        corr_(weights.gamma, n_cells, n_cells + 1), u_(n_cells), sums_(n_cells + 1) {}

  static bool feasible(const WeightVector& weights, std::size_t n_cells) {
    return SlidingCorrelator::feasible(weights.n_eta, n_cells + 1, n_cells);
  }

  NonlocalField operator()(const State& state, const VelocityModel& v1, const VelocityModel& v2) {
    if (state.size() != n_) throw ValidationError("fast field: state size mismatch");
    const double far = v2(state.ghost_right);
    for (std::size_t i = 0; i < n_; ++i) u_[i] = v2(state.interior[i]) - far;
    corr_(u_, sums_);
    const double base = far * total_;
    for (double& s : sums_) s += base;
    return detail::apply_outer(sums_, v1);
  }

  std::size_t transform_size() const { return corr_.transform_size(); }

private:
  WeightVector weights_;
  std::size_t n_;
  double total_;
  SlidingCorrelator corr_;
  std::vector<double> u_;
  std::vector<double> sums_;
};

inline NonlocalField nonlocal_field_fast(const State& state, const WeightVector& weights,
                                         const VelocityModel& v1, const VelocityModel& v2) {
  FastNonlocalField f(weights, state.size());
  return f(state, v1, v2);
}

// Largest elementwise relative difference |a - b| / |b|.
inline double relative_deviation(const NonlocalField& a, const NonlocalField& b) {
  auto rel = [](double x, double ref) {
    const double d = std::abs(x - ref);
    if (d == 0.0) return 0.0;
    return d / std::max(std::abs(ref), std::numeric_limits<double>::min());
  };
  double m = rel(a.ghost, b.ghost);
  for (std::size_t j = 0; j < a.v_at.size(); ++j) m = std::max(m, rel(a.v_at[j], b.v_at[j]));
  return m;
}

// One conservative update; the flux into cell 0 uses the left far-field
// value and the ghost velocity.
inline State step(const State& state, const NonlocalField& field, double lambda, double dx,
                  std::size_t step_index = 0) {
  State next;
  next.ghost_left = state.ghost_left;
  next.ghost_right = state.ghost_right;
  next.time = state.time + lambda * dx;
  const std::size_t n = state.size();
  next.interior.resize(n);
  double flux_left = state.ghost_left * field.ghost;
  for (std::size_t j = 0; j < n; ++j) {
    const double flux_right = state.interior[j] * field.v_at[j];
    const double q = state.interior[j] - lambda * (flux_right - flux_left);
    if (!std::isfinite(q)) throw SolverError("non-finite density", step_index, static_cast<std::ptrdiff_t>(j));
    next.interior[j] = q;
    flux_left = flux_right;
  }
  return next;
}

namespace detail {
inline TraceEntry observe(const State& s, std::size_t n, const NonlocalField& field, double dx,
                          const CflBounds& b, double gamma_0) {
  TraceEntry e;
  e.step = n;
  e.time = s.time;
  const auto& q = s.interior;
  e.min = e.max = q.empty() ? 0.0 : q[0];
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (q[j] < e.min) {
      e.min = q[j];
      e.argmin = static_cast<std::ptrdiff_t>(j);
    }
    if (q[j] > e.max) {
      e.max = q[j];
      e.argmax = static_cast<std::ptrdiff_t>(j);
    }
  }
  e.total_variation = total_variation(s);
  e.mass = mass(s.cells(), dx);
  e.monotonicity = monotonicity_flag(s, 1e-12);
  const double L = b.sup_dv1 * b.sup_dv2 * gamma_0;
  double up = -std::numeric_limits<double>::infinity();
  double low = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < q.size(); ++j) {
    const auto jj = static_cast<std::ptrdiff_t>(j);
    const double diff = field.at(jj - 1) - field.at(jj);
    up = std::max(up, diff - L * (b.density.hi - q[j]));
    low = std::max(low, L * (b.density.lo - q[j]) - diff);
  }
  e.velocity_residual = up;
  e.velocity_residual_lower = low;
  return e;
}

// Total variation next to both edges over the stencil width, far-field jumps
// included.
inline double boundary_variation(const State& s, std::size_t width) {
  const auto& q = s.interior;
  const std::size_t m = std::min(q.size(), width + 1);
  double tv = std::abs(q.front() - s.ghost_left) + std::abs(s.ghost_right - q.back());
  for (std::size_t j = 1; j < m; ++j) {
    tv += std::abs(q[j] - q[j - 1]);
    tv += std::abs(q[q.size() - j] - q[q.size() - j - 1]);
  }
  return tv;
}
}  // namespace detail

inline RunReport run(const SolverConfig& config) {
  Setup setup = prepare(config);
  const double dx = config.grid.dx();
  const double T = config.final_time;

  RunReport r;
  r.x_min = config.grid.x_min();
  r.dx = dx;
  r.n_cells = config.grid.n_cells();
  r.final_time = T;
  r.lambda = setup.lambda;
  r.dt = setup.dt;
  r.eta = setup.eta;
  r.gamma_0 = setup.weights.front();
  r.n_eta = setup.weights.n_eta;
  r.weight_total = setup.weights.total();
  r.cfl = setup.bounds;
  r.sign_condition = setup.sign_condition;
  r.kernel_monotone = setup.kernel_monotone;
  r.warnings = setup.warnings;
  r.path = to_string(config.path);

  NonlocalPath path = config.path;
  std::optional<FastNonlocalField> fast;
  if (path != NonlocalPath::Naive) {
    if (FastNonlocalField::feasible(setup.weights, r.n_cells)) {
      fast.emplace(setup.weights, r.n_cells);
    } else {
      r.warnings.push_back("transform size too large; falling back to the naive nonlocal sum");
      path = NonlocalPath::Naive;
      r.path = "naive";
    }
  }
  auto field_of = [&](const State& s, double& deviation) {
    deviation = 0.0;
    if (path == NonlocalPath::Fast) return (*fast)(s, config.v1, config.v2);
    NonlocalField naive = nonlocal_field_naive(s, setup.weights, config.v1, config.v2);
    if (path == NonlocalPath::Both) deviation = relative_deviation((*fast)(s, config.v1, config.v2), naive);
    return naive;
  };

  State s = std::move(setup.initial);
  r.initial_mass = mass(s.cells(), dx);
  r.snapshots.push_back({0.0, 0.0, s.interior});
  std::size_t next_snapshot = 0;
  auto take_snapshots = [&] {
    while (next_snapshot < config.snapshot_times.size()) {
      const double want = config.snapshot_times[next_snapshot];
      if (s.time < want - 1e-12 * std::max(1.0, T)) break;
      if (want > 0.0) r.snapshots.push_back({want, s.time, s.interior});
      ++next_snapshot;
    }
  };
  take_snapshots();

  KahanSum inflow, outflow;
  bool contaminated = false;
  const double contamination_tol = 1e-10;
  const double initial_edge_tv = detail::boundary_variation(s, r.n_eta);
  std::size_t n = 0;
  while (true) {
    double deviation = 0.0;
    const NonlocalField field = field_of(s, deviation);
    r.max_path_deviation = std::max(r.max_path_deviation, deviation);
    if (config.diagnostics) {
      TraceEntry e = detail::observe(s, n, field, dx, setup.bounds, r.gamma_0);
      e.path_deviation = deviation;
      r.trace.push_back(e);
    }
    const double remaining = T - s.time;
    if (remaining <= 0.0) break;
    const bool last = remaining <= setup.dt * (1.0 + 1e-10);
    const double dt = last ? remaining : setup.dt;
    inflow.add(dt * s.ghost_left * field.ghost);
    outflow.add(dt * s.interior.back() * field.v_at.back());
    s = step(s, field, dt / dx, dx, n);
    ++n;
    s.time = last ? T : static_cast<double>(n) * setup.dt;
    take_snapshots();
    if (!contaminated && detail::boundary_variation(s, r.n_eta) > initial_edge_tv + contamination_tol) {
      contaminated = true;
      std::ostringstream os;
      os << "boundary contamination: variation near the domain edges grew by more than " << contamination_tol
         << " at t = " << s.time << "; enlarge the domain";
      r.warnings.push_back(os.str());
    }
  }
  r.steps = n;
  r.final_mass = mass(s.cells(), dx);
  r.inflow = inflow.value();
  r.outflow = outflow.value();
  if (path == NonlocalPath::Both && r.max_path_deviation > config.compare_tol) {
    std::ostringstream os;
    os << "fast and naive nonlocal fields differ by " << r.max_path_deviation << " (tolerance "
       << config.compare_tol << ")";
    r.warnings.push_back(os.str());
  }
  return r;
}

}  // namespace nonlocal

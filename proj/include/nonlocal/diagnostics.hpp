#pragma once

// Run reports and the discrete invariants checked against them: range bounds,
// total variation, monotonicity, mass bookkeeping, and experimental order of
// convergence from three nested grids.

#include <nonlocal/error.hpp>
#include <nonlocal/grid.hpp>
#include <nonlocal/velocity.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nonlocal {

enum class Monotonicity { NonDecreasing, NonIncreasing, Neither };

inline const char* to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::NonDecreasing: return "non_decreasing";
    case Monotonicity::NonIncreasing: return "non_increasing";
    case Monotonicity::Neither: return "neither";
  }
  return "neither";
}

struct Snapshot {
  double requested = 0.0;  // time asked for
  double time = 0.0;       // time of the step boundary actually recorded
  std::vector<double> q;
};

// Observables of one time level.
struct TraceEntry {
  std::size_t step = 0;
  double time = 0.0;
  double min = 0.0;
  std::ptrdiff_t argmin = 0;
  double max = 0.0;
  std::ptrdiff_t argmax = 0;
  double total_variation = 0.0;
  double mass = 0.0;
  Monotonicity monotonicity = Monotonicity::Neither;
  // max_j [V_{j-1} - V_j - L gamma_0 (q_M - q_j)], L = |V1'|_inf |V2'|_inf
  double velocity_residual = 0.0;
  // max_j [L gamma_0 (q_m - q_j) - (V_{j-1} - V_j)]
  double velocity_residual_lower = 0.0;
  // max relative fast/naive disagreement of the nonlocal field (Both path)
  double path_deviation = 0.0;
};

// CFL ingredients, all taken over the initial range.
struct CflBounds {
  Interval density;       // [q_m, q_M]
  Interval v2_image;      // V2([q_m, q_M])
  Interval nonlocal;      // range of the weighted sums fed to V1
  double sup_v1 = 0.0;    // sup |V1| on `nonlocal`
  double sup_dv1 = 0.0;   // sup |V1'| on `nonlocal`
  double sup_dv2 = 0.0;   // sup |V2'| on `density`
  double lambda_max = 0.0;
  bool degenerate = false;  // denominator vanished
};

struct RunReport {
  std::string tag;
  double x_min = 0.0;
  double dx = 0.0;
  std::size_t n_cells = 0;
  double final_time = 0.0;
  double lambda = 0.0;
  double dt = 0.0;
  double eta = 0.0;
  double gamma_0 = 0.0;
  std::size_t n_eta = 0;
  double weight_total = 0.0;
  CflBounds cfl;
  bool sign_condition = false;
  bool kernel_monotone = false;
  std::size_t steps = 0;
  std::string path;  // naive | fast | both

  std::vector<Snapshot> snapshots;
  std::vector<TraceEntry> trace;  // one per time level when diagnostics are on

  double initial_mass = 0.0;
  double final_mass = 0.0;
  double inflow = 0.0;   // int q V at the left boundary
  double outflow = 0.0;  // int q V at the right boundary
  double max_path_deviation = 0.0;

  std::vector<std::string> warnings;

  double q_min() const { return cfl.density.lo; }
  double q_max() const { return cfl.density.hi; }

  const Snapshot* snapshot_at(double requested) const {
    for (const auto& s : snapshots)
      if (std::abs(s.requested - requested) <= 1e-12 * std::max(1.0, std::abs(requested))) return &s;
    return nullptr;
  }
};

// Compensated summation.
class KahanSum {
public:
  void add(double v) {
    const double y = v - c_;
    const double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

inline double mass(std::span<const double> q, double dx) {
  KahanSum s;
  for (double v : q) s.add(v);
  return s.value() * dx;
}

// Sum of absolute jumps, including the jumps to both far-field values.
inline double total_variation(const State& s) {
  if (s.interior.empty()) return std::abs(s.ghost_right - s.ghost_left);
  double tv = std::abs(s.interior.front() - s.ghost_left);
  for (std::size_t j = 1; j < s.interior.size(); ++j) tv += std::abs(s.interior[j] - s.interior[j - 1]);
  return tv + std::abs(s.ghost_right - s.interior.back());
}

// Adjacent-difference scan. A constant array is reported NonDecreasing.
inline Monotonicity monotonicity_flag(std::span<const double> q, double tol) {
  bool up = true, down = true;
  for (std::size_t j = 1; j < q.size(); ++j) {
    const double d = q[j] - q[j - 1];
    if (d < -tol) up = false;
    if (d > tol) down = false;
  }
  if (up) return Monotonicity::NonDecreasing;
  if (down) return Monotonicity::NonIncreasing;
  return Monotonicity::Neither;
}

inline Monotonicity monotonicity_flag(const State& s, double tol) { return monotonicity_flag(s.cells(), tol); }

struct Violation {
  std::size_t step = 0;
  std::ptrdiff_t cell = 0;
  double value = 0.0;
};

struct MaxPrincipleResult {
  bool pass = true;
  std::optional<Violation> first;
};

// q_m - tol <= q_j^n <= q_M + tol at every recorded time level.
inline MaxPrincipleResult check_max_principle(const RunReport& report, double q_m, double q_M, double tol) {
  for (const auto& e : report.trace) {
    if (e.min < q_m - tol) return {false, Violation{e.step, e.argmin, e.min}};
    if (e.max > q_M + tol) return {false, Violation{e.step, e.argmax, e.max}};
  }
  return {};
}

// |mass_N - mass_0 - (inflow - outflow)| / max(1, mass_0)
inline double mass_balance(const RunReport& report) {
  const double change = report.final_mass - report.initial_mass;
  return std::abs(change - (report.inflow - report.outflow)) / std::max(1.0, report.initial_mass);
}

inline double max_velocity_residual(const RunReport& report) {
  double r = -std::numeric_limits<double>::infinity();
  for (const auto& e : report.trace) r = std::max({r, e.velocity_residual, e.velocity_residual_lower});
  return r;
}

// Cell averages on a uniform grid.
struct GridSolution {
  double x_min = 0.0;
  double dx = 0.0;
  std::vector<double> q;
};

namespace detail {
// Average pairs of fine cells onto the grid with twice the spacing.
inline std::vector<double> restrict_by_two(const std::vector<double>& fine) {
  std::vector<double> coarse(fine.size() / 2);
  for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = 0.5 * (fine[2 * i] + fine[2 * i + 1]);
  return coarse;
}

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b, double dx) {
  KahanSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(std::abs(a[i] - b[i]));
  return s.value() * dx;
}
}  // namespace detail

// Experimental order log2(|u_h - u_{h/2}|_1 / |u_{h/2} - u_{h/4}|_1) from three
// solutions with spacings h, h/2, h/4 (any argument order).
inline double eoc(GridSolution a, GridSolution b, GridSolution c) {
  std::array<GridSolution*, 3> s{&a, &b, &c};
  std::sort(s.begin(), s.end(), [](auto* l, auto* r) { return l->dx > r->dx; });
  const auto& coarse = *s[0];
  const auto& mid = *s[1];
  const auto& fine = *s[2];
  auto check = [](const GridSolution& lo, const GridSolution& hi) {
    if (std::abs(lo.dx - 2.0 * hi.dx) > 1e-12 * lo.dx || hi.q.size() != 2 * lo.q.size() ||
        std::abs(lo.x_min - hi.x_min) > 1e-12 * std::max(1.0, std::abs(lo.x_min)))
      throw ValidationError("eoc: solutions must live on nested grids with ratio 2");
  };
  check(coarse, mid);
  check(mid, fine);
  const double e1 = detail::l1_distance(coarse.q, detail::restrict_by_two(mid.q), coarse.dx);
  const double e2 = detail::l1_distance(mid.q, detail::restrict_by_two(fine.q), mid.dx);
  if (e2 == 0.0 || e1 == 0.0) throw Error("eoc: undefined order (successive differences vanish)");
  return std::log2(e1 / e2);
}

inline GridSolution solution_at(const RunReport& r, double t_star) {
  const Snapshot* s = r.snapshot_at(t_star);
  if (!s) throw ValidationError("eoc: report '" + r.tag + "' has no snapshot at t = " + std::to_string(t_star));
  return {r.x_min, r.dx, s->q};
}

inline double eoc(const RunReport& a, const RunReport& b, const RunReport& c, double t_star) {
  return eoc(solution_at(a, t_star), solution_at(b, t_star), solution_at(c, t_star));
}

}  // namespace nonlocal

#pragma once

// Uniform 1-D mesh, cell-average projection of the initial density, and the
// state vector with constant far-field extension on both sides.

#include <nonlocal/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nonlocal {

class Grid1D {
public:
  Grid1D(double x_min, double x_max, double dx) : x_min_(x_min), x_max_(x_max), dx_(dx) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
      throw ValidationError("grid: need finite x_min < x_max");
    if (!std::isfinite(dx) || dx <= 0.0) throw ValidationError("grid: dx must be > 0");
    const double ratio = (x_max - x_min) / dx;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
      throw ValidationError("grid: (x_max - x_min)/dx = " + std::to_string(ratio) +
                            " is not an integer");
    n_cells_ = static_cast<std::size_t>(n);
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double dx() const { return dx_; }
  std::size_t n_cells() const { return n_cells_; }

  // Face x_{j-1/2} of cell j; face(n_cells) is x_max.
  double face(std::ptrdiff_t j) const {
    if (j == static_cast<std::ptrdiff_t>(n_cells_)) return x_max_;
    return x_min_ + static_cast<double>(j) * dx_;
  }
  double center(std::ptrdiff_t j) const { return x_min_ + (static_cast<double>(j) + 0.5) * dx_; }

private:
  double x_min_, x_max_, dx_;
  std::size_t n_cells_ = 0;
};

// Initial density: piecewise constant with closed-form cell averages, or a
// general function averaged by Gauss-Legendre quadrature.
class InitialDatum {
public:
  using Function = std::function<double(double)>;

  // values[0] is the left tail, values.back() the right tail;
  // values.size() == breakpoints.size() + 1.
  static InitialDatum piecewise_constant(std::vector<double> breakpoints, std::vector<double> values) {
    if (values.size() != breakpoints.size() + 1)
      throw ValidationError("initial datum: need breakpoints.size() + 1 values");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
      if (!std::isfinite(breakpoints[i])) throw ValidationError("initial datum: breakpoints must be finite");
      if (i > 0 && !(breakpoints[i] > breakpoints[i - 1]))
        throw ValidationError("initial datum: breakpoints must be strictly increasing");
    }
    for (double v : values)
      if (!std::isfinite(v) || v < 0.0) throw ValidationError("initial datum: values must be finite and >= 0");
    InitialDatum d;
    d.breaks_ = std::move(breakpoints);
    d.values_ = std::move(values);
    return d;
  }

  static InitialDatum constant(double c) { return piecewise_constant({}, {c}); }

  // `smooth` is informational; the quadrature is the same either way.
  static InitialDatum callable(Function f, bool smooth = true) {
    if (!f) throw ValidationError("initial datum: empty function");
    InitialDatum d;
    d.func_ = std::move(f);
    d.smooth_ = smooth;
    return d;
  }

  bool is_piecewise() const { return !func_; }
  bool smooth() const { return smooth_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(double x) const {
    if (func_) return func_(x);
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    return values_[static_cast<std::size_t>(it - breaks_.begin())];
  }

  // Exact integral of a piecewise constant datum over [lo, hi].
  double integral(double lo, double hi) const {
    if (func_) throw UnsupportedOperation("initial datum: closed-form integral needs a piecewise datum");
    double sum = 0.0;
    double left = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double right = i < breaks_.size() ? breaks_[i] : std::numeric_limits<double>::infinity();
      const double a = std::max(lo, left), b = std::min(hi, right);
      if (b > a) sum += values_[i] * (b - a);
      left = right;
    }
    return sum;
  }

  // Average over [lo, hi]: exact for piecewise data, 5-point Gauss-Legendre
  // otherwise.
  double average(double lo, double hi) const {
    if (!func_) {
      // Breakpoints within rounding of a face do not split the cell.
      const double tol = 1e-9 * (hi - lo);
      bool split = false;
      for (double b : breaks_)
        if (b > lo + tol && b < hi - tol) split = true;
      if (!split) return (*this)(0.5 * (lo + hi));
      return integral(lo, hi) / (hi - lo);
    }
    static constexpr std::array<double, 5> nodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                                 0.5384693101056831, 0.9061798459386640};
    static constexpr std::array<double, 5> wts{0.2369268850561891, 0.4786286704993665,
                                               0.5688888888888889, 0.4786286704993665,
                                               0.2369268850561891};
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double x = mid + half * nodes[i];
      const double v = func_(x);
      if (!std::isfinite(v) || v < 0.0)
        throw ValidationError("initial datum: value " + std::to_string(v) + " at x = " +
                              std::to_string(x) + " is negative or non-finite");
      sum += wts[i] * v;
    }
    return 0.5 * sum;
  }

private:
  InitialDatum() = default;

  std::vector<double> breaks_;
  std::vector<double> values_;
  Function func_;
  bool smooth_ = false;
};

// Cell averages q_j at one time level plus the far-field values used beyond
// the mesh.
struct State {
  std::vector<double> interior;
  double ghost_left = 0.0;
  double ghost_right = 0.0;
  double time = 0.0;

  std::size_t size() const { return interior.size(); }
  std::span<const double> cells() const { return interior; }
};

// Cell value at any signed index; out-of-range indices read the constant
// extension.
inline double extend(const State& s, std::ptrdiff_t index) {
  if (index < 0) return s.ghost_left;
  if (static_cast<std::size_t>(index) >= s.interior.size()) return s.ghost_right;
  return s.interior[static_cast<std::size_t>(index)];
}

// q_j^0 = (1/dx) int_{cell j} q0. Ghosts take the datum's tail constants
// (piecewise) or the average over the adjacent outside cell (callable).
inline State project_initial(const InitialDatum& datum, const Grid1D& grid) {
  State s;
  s.interior.resize(grid.n_cells());
  const auto n = static_cast<std::ptrdiff_t>(grid.n_cells());
  for (std::ptrdiff_t j = 0; j < n; ++j)
    s.interior[static_cast<std::size_t>(j)] = datum.average(grid.face(j), grid.face(j + 1));
  if (datum.is_piecewise()) {
    s.ghost_left = datum.values().front();
    s.ghost_right = datum.values().back();
  } else {
    s.ghost_left = datum.average(grid.x_min() - grid.dx(), grid.x_min());
    s.ghost_right = datum.average(grid.x_max(), grid.x_max() + grid.dx());
  }
  s.time = 0.0;
  return s;
}

}  // namespace nonlocal

#pragma once

// Nonlocal weight gamma on [0, eta] as a piecewise polynomial (degree <= 3),
// together with its exact per-cell integrals.

#include <nonlocal/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace nonlocal {

// One polynomial piece c0 + c1 x + c2 x^2 + c3 x^3 on [a, b), in the global
// coordinate x.
struct KernelPiece {
  double a = 0.0;
  double b = 0.0;
  std::array<double, 4> coeffs{};

  double value(double x) const {
    return coeffs[0] + x * (coeffs[1] + x * (coeffs[2] + x * coeffs[3]));
  }

  double slope(double x) const { return coeffs[1] + x * (2.0 * coeffs[2] + x * 3.0 * coeffs[3]); }

  // Antiderivative vanishing at x = 0.
  double primitive(double x) const {
    return x * (coeffs[0] + x * (coeffs[1] / 2.0 + x * (coeffs[2] / 3.0 + x * coeffs[3] / 4.0)));
  }

  // Exact integral over [lo, hi] intersected with the piece.
  double integral(double lo, double hi) const {
    lo = std::max(lo, a);
    hi = std::min(hi, b);
    if (hi <= lo) return 0.0;
    return primitive(hi) - primitive(lo);
  }

  // Interior stationary points of the value (roots of the slope in (a, b)).
  std::vector<double> critical_points() const {
    std::vector<double> out;
    const double A = 3.0 * coeffs[3], B = 2.0 * coeffs[2], C = coeffs[1];
    auto push = [&](double x) {
      if (x > a && x < b) out.push_back(x);
    };
    if (A == 0.0) {
      if (B != 0.0) push(-C / B);
      return out;
    }
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) return out;
    const double s = std::sqrt(disc);
    push((-B - s) / (2.0 * A));
    push((-B + s) / (2.0 * A));
    return out;
  }
};

struct WeightVector {
  std::vector<double> gamma;  // gamma_k = integral of the kernel over [k dx, (k+1) dx]
  std::size_t n_eta = 0;
  double dx = 0.0;

  double front() const { return gamma.front(); }

  // Compensated sum of the weights.
  double total() const {
    double sum = 0.0, c = 0.0;
    for (double g : gamma) {
      const double y = g - c;
      const double t = sum + y;
      c = (t - sum) - y;
      sum = t;
    }
    return sum;
  }
};

class Kernel {
public:
  enum class Kind { LinearDecreasing, Constant, Piecewise };

  // gamma(x) = 2 (eta - x) / eta^2 on [0, eta]; unit mass.
  static Kernel linear_decreasing(double eta) {
    check_eta(eta);
    const double s = 2.0 / (eta * eta);
    Kernel k(Kind::LinearDecreasing, {{0.0, eta, {s * eta, -s, 0.0, 0.0}}});
    k.eta_param_ = eta;
    return k;
  }

  // gamma(x) = 1 / eta on [0, eta].
  static Kernel constant(double eta) {
    check_eta(eta);
    Kernel k(Kind::Constant, {{0.0, eta, {1.0 / eta, 0.0, 0.0, 0.0}}});
    k.eta_param_ = eta;
    return k;
  }

  // Pieces must tile [0, support_end] without gaps, in increasing order.
  static Kernel piecewise(std::vector<KernelPiece> pieces) {
    return Kernel(Kind::Piecewise, std::move(pieces));
  }

  Kind kind() const { return kind_; }
  const std::vector<KernelPiece>& pieces() const { return pieces_; }
  double support_end() const { return pieces_.back().b; }
  double eta_parameter() const { return eta_param_; }

  double operator()(double x) const {
    if (x < 0.0 || x > support_end()) return 0.0;
    for (const auto& p : pieces_)
      if (x < p.b) return p.value(x);
    return pieces_.back().value(x);
  }

  // Exact integral of the kernel over [lo, hi].
  double integral(double lo, double hi) const {
    double sum = 0.0;
    for (const auto& p : pieces_) sum += p.integral(lo, hi);
    return sum;
  }

  double total_integral() const { return integral(0.0, support_end()); }

  // Non-increasing within every piece and across every breakpoint.
  bool is_monotone_decreasing(double tol = 1e-12) const {
    const double scale = std::max(1.0, max_value());
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const auto& p = pieces_[i];
      // The slope is at most quadratic, so its maximum on [a, b] is at an
      // endpoint or at its own vertex.
      std::vector<double> pts{p.a, p.b};
      if (p.coeffs[3] != 0.0) {
        const double v = -p.coeffs[2] / (3.0 * p.coeffs[3]);
        if (v > p.a && v < p.b) pts.push_back(v);
      }
      for (double x : pts)
        if (p.slope(x) > tol * scale) return false;
      if (i + 1 < pieces_.size() && pieces_[i + 1].value(p.b) > p.value(p.b) + tol * scale)
        return false;
    }
    return true;
  }

  double max_value() const {
    double m = 0.0;
    for (const auto& p : pieces_) {
      m = std::max({m, p.value(p.a), p.value(p.b)});
      for (double x : p.critical_points()) m = std::max(m, p.value(x));
    }
    return m;
  }

private:
  Kernel(Kind kind, std::vector<KernelPiece> pieces) : kind_(kind), pieces_(std::move(pieces)) {
    validate();
  }

  static void check_eta(double eta) {
    if (!std::isfinite(eta) || eta <= 0.0) throw ValidationError("kernel: eta must be > 0");
  }

  void validate() const {
    if (pieces_.empty()) throw ValidationError("kernel: at least one piece required");
    double expected = 0.0;
    for (const auto& p : pieces_) {
      for (double c : p.coeffs)
        if (!std::isfinite(c)) throw ValidationError("kernel: coefficients must be finite");
      if (!std::isfinite(p.b) || p.a != expected || !(p.b > p.a))
        throw ValidationError("kernel: pieces must tile [0, support_end] in increasing order");
      expected = p.b;
      std::vector<double> pts{p.a, p.b};
      for (double x : p.critical_points()) pts.push_back(x);
      for (double x : pts)
        if (p.value(x) < -1e-14 * std::max(1.0, std::abs(p.coeffs[0])))
          throw ValidationError("kernel: gamma must be nonnegative (negative at x = " +
                                std::to_string(x) + ")");
    }
  }

  Kind kind_;
  std::vector<KernelPiece> pieces_;
  double eta_param_ = 0.0;
};

// Number of whole cells of width dx inside [0, eta]: floor(eta / dx), with a
// relative guard so that eta = N dx up to rounding yields N.
inline std::size_t kernel_cells(double eta, double dx) {
  const double r = eta / dx;
  return static_cast<std::size_t>(std::floor(r * (1.0 + 1e-12)));
}

// Truncation length of the kernel support. Only compactly supported kernels
// exist, so this is the supremum of the support.
inline double truncation_eta(const Kernel& kernel, double /*dx*/) { return kernel.support_end(); }

// gamma_k = int_{k dx}^{(k+1) dx} gamma, k = 0 .. floor(eta/dx) - 1, by the
// closed-form antiderivative of each piece.
inline WeightVector weights(const Kernel& kernel, double dx, double eta) {
  if (!std::isfinite(dx) || dx <= 0.0) throw ValidationError("weights: dx must be > 0");
  if (!std::isfinite(eta) || eta <= 0.0) throw ValidationError("weights: eta must be > 0");
  if (eta > kernel.support_end() * (1.0 + 1e-12))
    throw ValidationError("weights: eta exceeds the kernel support");
  const std::size_t n = kernel_cells(eta, dx);
  if (n == 0)
    throw ConfigError("kernel unresolved by grid: floor(eta/dx) = 0 (eta = " + std::to_string(eta) +
                      ", dx = " + std::to_string(dx) + ")");
  WeightVector w;
  w.n_eta = n;
  w.dx = dx;
  w.gamma.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lo = static_cast<double>(k) * dx;
    const double hi = static_cast<double>(k + 1) * dx;
    w.gamma[k] = kernel.integral(lo, hi);
  }
  return w;
}

inline WeightVector weights(const Kernel& kernel, double dx) {
  return weights(kernel, dx, truncation_eta(kernel, dx));
}

}  // namespace nonlocal

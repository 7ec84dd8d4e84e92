#pragma once

// Scalar velocity / transformation functions entering the flux
// q * V1(gamma * V2(q)), with the interval bounds needed to pick a stable
// time step.

#include <nonlocal/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

namespace nonlocal {

// Sign of a quantity over a working interval. Zero means identically zero,
// which satisfies both NonPositive and NonNegative.
enum class Sign { Zero, NonPositive, NonNegative, Unknown };

inline bool allows_nonpositive(Sign s) { return s == Sign::Zero || s == Sign::NonPositive; }
inline bool allows_nonnegative(Sign s) { return s == Sign::Zero || s == Sign::NonNegative; }

inline const char* to_string(Sign s) {
  switch (s) {
    case Sign::Zero: return "zero";
    case Sign::NonPositive: return "nonpositive";
    case Sign::NonNegative: return "nonnegative";
    case Sign::Unknown: return "unknown";
  }
  return "unknown";
}

// Closed interval [lo, hi]. `approximate` marks bounds obtained by sampling.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool approximate = false;

  static Interval hull(const Interval& a, const Interval& b) {
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi), a.approximate || b.approximate};
  }

  bool contains(double x) const { return lo <= x && x <= hi; }
  double width() const { return hi - lo; }
};

inline void validate_interval(const Interval& I) {
  if (!std::isfinite(I.lo) || !std::isfinite(I.hi))
    throw ValidationError("interval bounds must be finite");
  if (I.lo > I.hi) throw ValidationError("interval must satisfy lo <= hi");
}

namespace detail {
inline constexpr int kSamplePoints = 1025;
inline constexpr double kSampleInflation = 1.01;

template <class F>
void for_each_sample(const Interval& I, F&& f) {
  if (I.lo == I.hi) {
    f(I.lo);
    return;
  }
  const double h = I.width() / (kSamplePoints - 1);
  for (int i = 0; i < kSamplePoints; ++i) f(i == kSamplePoints - 1 ? I.hi : I.lo + i * h);
}
}  // namespace detail

class VelocityModel {
public:
  enum class Kind { Identity, GreenshieldsSquared, QuadraticFree, Estimation, Preference, Custom };

  using Function = std::function<double(double)>;

  // V(q) = q
  static VelocityModel identity() {
    VelocityModel m(Kind::Identity);
    m.poly_ = {0.0, 1.0, 0.0};
    m.monotonicity_ = Sign::NonNegative;
    m.curvature_ = Sign::Zero;
    return m;
  }

  // V(q) = 1 - q^2
  static VelocityModel greenshields_squared() {
    VelocityModel m(Kind::GreenshieldsSquared);
    m.poly_ = {1.0, 0.0, -1.0};
    m.monotonicity_ = Sign::NonPositive;
    m.curvature_ = Sign::NonPositive;
    m.verify_declared_signs();
    return m;
  }

  // V(q) = (1 - q)^2
  static VelocityModel quadratic_free() {
    VelocityModel m(Kind::QuadraticFree);
    m.poly_ = {1.0, -2.0, 1.0};
    m.monotonicity_ = Sign::NonPositive;
    m.curvature_ = Sign::NonNegative;
    m.verify_declared_signs();
    return m;
  }

  // Perceived density V(q) = q + eps q (1 - q); eps < 0 underestimates,
  // eps > 0 overestimates, eps = 0 is exact perception.
  static VelocityModel estimation(double eps) {
    if (!std::isfinite(eps) || eps < -1.0 || eps > 1.0)
      throw ValidationError("estimation: eps must lie in [-1, 1]");
    VelocityModel m(Kind::Estimation);
    m.eps_ = eps;
    m.poly_ = {0.0, 1.0 + eps, -eps};
    m.monotonicity_ = Sign::NonNegative;
    m.curvature_ = eps > 0 ? Sign::NonPositive : (eps < 0 ? Sign::NonNegative : Sign::Zero);
    m.verify_declared_signs();
    return m;
  }

  // Mixed preference V(q) = alpha q/q_max + (1 - alpha)(1 - v(q)/v_max).
  static VelocityModel preference(double alpha, double q_max, double v_max, VelocityModel inner) {
    if (!std::isfinite(alpha) || alpha < 0.0 || alpha > 1.0)
      throw ValidationError("preference: alpha must lie in [0, 1]");
    if (!std::isfinite(q_max) || q_max <= 0.0) throw ValidationError("preference: q_max must be > 0");
    if (!std::isfinite(v_max) || v_max <= 0.0) throw ValidationError("preference: v_max must be > 0");
    VelocityModel m(Kind::Preference);
    m.alpha_ = alpha;
    m.q_max_ = q_max;
    m.v_max_ = v_max;
    m.domain_ = {0.0, q_max};
    if (inner.poly_) {
      const auto& c = *inner.poly_;
      const double w = 1.0 - alpha;
      m.poly_ = {w * (1.0 - c[0] / v_max), alpha / q_max - w * c[1] / v_max, -w * c[2] / v_max};
    }
    const Sign im = inner.monotonicity_;
    if (alpha == 1.0 || im == Sign::Zero)
      m.monotonicity_ = Sign::NonNegative;
    else if (im == Sign::NonPositive)
      m.monotonicity_ = Sign::NonNegative;
    else
      m.monotonicity_ = Sign::Unknown;
    m.curvature_ = alpha == 1.0 ? Sign::Zero : flip(inner.curvature_);
    m.inner_ = std::make_shared<const VelocityModel>(std::move(inner));
    if (m.has_derivative()) m.verify_declared_signs();
    return m;
  }

  // User supplied function. Declared signs are verified on `domain` when a
  // derivative is available.
  static VelocityModel custom(Function value, Function derivative = {},
                              Sign monotonicity = Sign::Unknown, Sign curvature = Sign::Unknown,
                              Interval domain = {0.0, 1.0}, std::string name = "custom") {
    if (!value) throw ValidationError("custom velocity needs a value function");
    validate_interval(domain);
    VelocityModel m(Kind::Custom);
    m.value_ = std::move(value);
    m.derivative_ = std::move(derivative);
    m.monotonicity_ = monotonicity;
    m.curvature_ = curvature;
    m.domain_ = domain;
    m.name_ = std::move(name);
    if (m.derivative_) m.verify_declared_signs();
    return m;
  }

  Kind kind() const { return kind_; }
  Sign monotonicity() const { return monotonicity_; }
  Sign curvature() const { return curvature_; }
  double eps() const { return eps_; }
  double alpha() const { return alpha_; }
  double q_max() const { return q_max_; }
  double v_max() const { return v_max_; }
  const VelocityModel* inner() const { return inner_.get(); }
  const std::string& name() const { return name_; }
  bool has_derivative() const {
    if (kind_ == Kind::Custom) return static_cast<bool>(derivative_);
    if (kind_ == Kind::Preference) return inner_->has_derivative();
    return true;
  }

  // Quadratic coefficients {c0, c1, c2} when the model is a polynomial of
  // degree <= 2 (all built-ins with built-in inner models).
  const std::optional<std::array<double, 3>>& polynomial() const { return poly_; }

  double operator()(double q) const {
    switch (kind_) {
      case Kind::Identity: return q;
      case Kind::GreenshieldsSquared: return 1.0 - q * q;
      case Kind::QuadraticFree: return (1.0 - q) * (1.0 - q);
      case Kind::Estimation: return q + eps_ * q * (1.0 - q);
      case Kind::Preference:
        return alpha_ * q / q_max_ + (1.0 - alpha_) * (1.0 - (*inner_)(q) / v_max_);
      case Kind::Custom: {
        const double v = value_(q);
        if (!std::isfinite(v)) throw EvaluationError("custom velocity '" + name_ + "' returned a non-finite value", q);
        return v;
      }
    }
    return q;
  }

  double derivative(double q) const {
    switch (kind_) {
      case Kind::Identity: return 1.0;
      case Kind::GreenshieldsSquared: return -2.0 * q;
      case Kind::QuadraticFree: return -2.0 * (1.0 - q);
      case Kind::Estimation: return 1.0 + eps_ * (1.0 - 2.0 * q);
      case Kind::Preference:
        return alpha_ / q_max_ - (1.0 - alpha_) * inner_->derivative(q) / v_max_;
      case Kind::Custom: {
        if (!derivative_)
          throw UnsupportedOperation("custom velocity '" + name_ + "' has no derivative");
        const double d = derivative_(q);
        if (!std::isfinite(d))
          throw EvaluationError("custom velocity '" + name_ + "' derivative is non-finite", q);
        return d;
      }
    }
    return 0.0;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::Identity: os << "identity"; break;
      case Kind::GreenshieldsSquared: os << "greenshields_squared"; break;
      case Kind::QuadraticFree: os << "quadratic_free"; break;
      case Kind::Estimation: os << "estimation(eps=" << eps_ << ")"; break;
      case Kind::Preference:
        os << "preference(alpha=" << alpha_ << ", q_max=" << q_max_ << ", v_max=" << v_max_
           << ", inner=" << inner_->describe() << ")";
        break;
      case Kind::Custom: os << name_; break;
    }
    return os.str();
  }

private:
  explicit VelocityModel(Kind k) : kind_(k) {}

  static Sign flip(Sign s) {
    switch (s) {
      case Sign::NonPositive: return Sign::NonNegative;
      case Sign::NonNegative: return Sign::NonPositive;
      default: return s;
    }
  }

  // Checks the declared V' and V'' signs on the working domain by sampling.
  void verify_declared_signs() const {
    constexpr double tol = 1e-12;
    bool ok = true;
    double bad = 0.0;
    detail::for_each_sample(domain_, [&](double q) {
      const double d = derivative(q);
      if ((monotonicity_ == Sign::NonPositive && d > tol) ||
          (monotonicity_ == Sign::NonNegative && d < -tol) ||
          (monotonicity_ == Sign::Zero && std::abs(d) > tol)) {
        ok = false;
        bad = q;
      }
    });
    if (!ok)
      throw ValidationError("velocity '" + describe() + "': declared monotonicity '" +
                            to_string(monotonicity_) + "' violated at q = " + std::to_string(bad));
    if (curvature_ == Sign::Unknown) return;
    // Second differences of the derivative.
    const double h = std::max(domain_.width(), 1.0) * 1e-4;
    detail::for_each_sample(domain_, [&](double q) {
      const double d2 = (derivative(q + h) - derivative(q - h)) / (2.0 * h);
      if ((curvature_ == Sign::NonPositive && d2 > 1e-6) ||
          (curvature_ == Sign::NonNegative && d2 < -1e-6) ||
          (curvature_ == Sign::Zero && std::abs(d2) > 1e-6)) {
        ok = false;
        bad = q;
      }
    });
    if (!ok)
      throw ValidationError("velocity '" + describe() + "': declared curvature '" +
                            to_string(curvature_) + "' violated at q = " + std::to_string(bad));
  }

  Kind kind_;
  double eps_ = 0.0;
  double alpha_ = 0.0;
  double q_max_ = 1.0;
  double v_max_ = 1.0;
  Interval domain_{0.0, 1.0};
  std::optional<std::array<double, 3>> poly_;
  std::shared_ptr<const VelocityModel> inner_;
  Function value_;
  Function derivative_;
  Sign monotonicity_ = Sign::Unknown;
  Sign curvature_ = Sign::Unknown;
  std::string name_;
};

inline double eval(const VelocityModel& model, double q) { return model(q); }
inline double derivative(const VelocityModel& model, double q) { return model.derivative(q); }

namespace detail {
// Points of [lo, hi] where a quadratic can attain its extrema.
inline std::array<double, 3> quadratic_candidates(const std::array<double, 3>& c, const Interval& I,
                                                  int& count) {
  std::array<double, 3> pts{I.lo, I.hi, I.lo};
  count = 2;
  if (c[2] != 0.0) {
    const double vertex = -c[1] / (2.0 * c[2]);
    if (I.contains(vertex)) pts[count++] = vertex;
  }
  return pts;
}

inline bool is_monotone(Sign s) { return s != Sign::Unknown; }
}  // namespace detail

// sup |V| over [lo, hi]. Exact for quadratics and declared-monotone models,
// otherwise a 1025-point sample maximum inflated by 1%.
inline double sup_abs_value(const VelocityModel& model, const Interval& I) {
  validate_interval(I);
  if (const auto& p = model.polynomial()) {
    int n = 0;
    const auto pts = detail::quadratic_candidates(*p, I, n);
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::abs(model(pts[i])));
    return m;
  }
  if (detail::is_monotone(model.monotonicity()))
    return std::max(std::abs(model(I.lo)), std::abs(model(I.hi)));
  double m = 0.0;
  detail::for_each_sample(I, [&](double q) { m = std::max(m, std::abs(model(q))); });
  return m * detail::kSampleInflation;
}

// sup |V'| over [lo, hi]; exact for quadratics (V' is affine).
inline double sup_abs_derivative(const VelocityModel& model, const Interval& I) {
  validate_interval(I);
  if (model.polynomial())
    return std::max(std::abs(model.derivative(I.lo)), std::abs(model.derivative(I.hi)));
  double m = 0.0;
  detail::for_each_sample(I, [&](double q) { m = std::max(m, std::abs(model.derivative(q))); });
  return m * detail::kSampleInflation;
}

// Image of [lo, hi] under V.
inline Interval image_interval(const VelocityModel& model, const Interval& I) {
  validate_interval(I);
  if (model.kind() == VelocityModel::Kind::Identity) return {I.lo, I.hi, false};
  if (const auto& p = model.polynomial()) {
    int n = 0;
    const auto pts = detail::quadratic_candidates(*p, I, n);
    Interval r{model(pts[0]), model(pts[0]), false};
    for (int i = 1; i < n; ++i) {
      const double v = model(pts[i]);
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
    return r;
  }
  if (detail::is_monotone(model.monotonicity())) {
    const double a = model(I.lo), b = model(I.hi);
    return {std::min(a, b), std::max(a, b), false};
  }
  Interval r{model(I.lo), model(I.lo), true};
  detail::for_each_sample(I, [&](double q) {
    const double v = model(q);
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
  });
  return r;
}

// Sampled sign of V' over an interval (1025 points, tolerance `tol`).
inline Sign sampled_derivative_sign(const VelocityModel& model, const Interval& I, double tol = 1e-12) {
  validate_interval(I);
  bool nonneg = true, nonpos = true;
  detail::for_each_sample(I, [&](double q) {
    const double d = model.derivative(q);
    if (d < -tol) nonneg = false;
    if (d > tol) nonpos = false;
  });
  if (nonneg && nonpos) return Sign::Zero;
  if (nonneg) return Sign::NonNegative;
  if (nonpos) return Sign::NonPositive;
  return Sign::Unknown;
}

// Opposite monotonicity of V1 and V2: (V1' <= 0 and V2' >= 0) or
// (V1' >= 0 and V2' <= 0). V2' is sampled on the density range, V1' on the
// range of the nonlocal term (where V1 is actually evaluated).
inline bool sign_condition_holds(const VelocityModel& v1, const VelocityModel& v2,
                                 const Interval& density, const Interval& nonlocal) {
  const Sign s1 = sampled_derivative_sign(v1, nonlocal);
  const Sign s2 = sampled_derivative_sign(v2, density);
  return (allows_nonpositive(s1) && allows_nonnegative(s2)) ||
         (allows_nonnegative(s1) && allows_nonpositive(s2));
}

}  // namespace nonlocal

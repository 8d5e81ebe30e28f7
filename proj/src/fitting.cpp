#include "mapgate/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include "mapgate/errors.hpp"

namespace mapgate {
namespace {

constexpr double kPi = std::numbers::pi;

// Parameters (c, a, b, w) of c + a cos(w x) + b sin(w x).
struct CosineResidual {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const Eigen::VectorXd& x;
  const Eigen::VectorXd& y;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(x.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      f(i) = p(0) + p(1) * std::cos(p(3) * x(i)) + p(2) * std::sin(p(3) * x(i)) - y(i);
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double c = std::cos(p(3) * x(i));
      const double s = std::sin(p(3) * x(i));
      jac(i, 0) = 1.0;
      jac(i, 1) = c;
      jac(i, 2) = s;
      jac(i, 3) = x(i) * (-p(1) * s + p(2) * c);
    }
    return 0;
  }
};

// Linear least squares of c + a cos(w x) + b sin(w x) at fixed w.
Eigen::Vector3d linear_at(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double w, double* rss) {
  Eigen::MatrixXd design(x.size(), 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::cos(w * x(i));
    design(i, 2) = std::sin(w * x(i));
  }
  Eigen::Vector3d coef = design.colPivHouseholderQr().solve(y);
  if (rss) *rss = (design * coef - y).squaredNorm();
  return coef;
}

}  // namespace

double wrap_phase(double phi) {
  double r = std::remainder(phi, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

CosineFit fit_cosine(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ConfigError("fit_cosine: x and y differ in length");
  if (xs.size() < 5) throw ConfigError("fit_cosine: at least 5 samples required");
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(xs.data(), n);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);

  // Centre and scale x for conditioning; map back at the end.
  const double lo = x0.minCoeff();
  const double hi = x0.maxCoeff();
  const double span = hi - lo;
  if (!(span > 0.0)) throw ConfigError("fit_cosine: x values must span a nonzero range");
  const Eigen::VectorXd x = (x0.array() - lo) / span;

  double min_gap = 1.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double g = std::abs(x(i) - x(i - 1));
    if (g > 0.0) min_gap = std::min(min_gap, g);
  }
  const double w_max = kPi / min_gap;
  const double w_step = kPi / 8.0;

  double best_rss = std::numeric_limits<double>::infinity();
  double best_w = w_step;
  for (double w = w_step; w <= w_max; w += w_step) {
    double rss = 0.0;
    linear_at(x, y, w, &rss);
    if (rss < best_rss) {
      best_rss = rss;
      best_w = w;
    }
  }

  Eigen::VectorXd p(4);
  const Eigen::Vector3d seed = linear_at(x, y, best_w, nullptr);
  p << seed(0), seed(1), seed(2), best_w;

  CosineResidual functor{x, y};
  Eigen::LevenbergMarquardt<CosineResidual> lm(functor);
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-12;
  lm.parameters.maxfev = 2000;
  const auto status = lm.minimize(p);

  CosineFit fit;
  fit.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                  status == Eigen::LevenbergMarquardtSpace::FtolTooSmall;
  if (p(3) < 0.0) {
    p(3) = -p(3);
    p(2) = -p(2);
  }
  Eigen::VectorXd resid(n);
  functor(p, resid);
  fit.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  fit.offset = p(0);
  fit.amplitude = std::hypot(p(1), p(2));
  fit.frequency = p(3) / span;
  // a cos(u) + b sin(u) = A cos(u + phi) with phi = atan2(-b, a); u = w (x0 - lo) / span.
  fit.phase = wrap_phase(std::atan2(-p(2), p(1)) - fit.frequency * lo);
  fit.converged = fit.converged && std::isfinite(fit.residual_rms);
  return fit;
}

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ConfigError("fit_line: need at least two paired samples");
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = xs[i];
    design(i, 1) = 1.0;
    y(i) = ys[i];
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(y);
  LineFit fit;
  fit.slope = coef(0);
  fit.intercept = coef(1);
  fit.residual_rms = std::sqrt((design * coef - y).squaredNorm() / static_cast<double>(n));
  return fit;
}

std::vector<double> unwrap(const std::vector<double>& phases) {
  std::vector<double> out(phases);
  for (std::size_t i = 1; i < out.size(); ++i) {
    out[i] = out[i - 1] + wrap_phase(phases[i] - phases[i - 1]);
  }
  return out;
}

std::optional<double> first_crossing(const std::vector<double>& x, const std::vector<double>& y, double level) {
  if (x.size() != y.size()) throw ConfigError("first_crossing: x and y differ in length");
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = std::abs(y[i]);
    if (v < level) continue;
    if (i == 0) return x[0];
    const double u = std::abs(y[i - 1]);
    const double t = (level - u) / (v - u);
    return x[i - 1] + t * (x[i] - x[i - 1]);
  }
  return std::nullopt;
}

}  // namespace mapgate

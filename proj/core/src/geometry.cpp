#include "hack/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hack {

namespace {

void require_inside(double sq_norm, const char* which) {
  if (!(sq_norm < 1.0)) {
    throw std::domain_error(std::string("hyp_distance: ") + which +
                            " lies on or outside the unit ball");
  }
}

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

BallParams BallParams::from_curvature(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw std::domain_error("BallParams: curvature must be positive and finite");
  }
  return BallParams{c, 1.0 / std::sqrt(c)};
}

BallPoint BallPoint::checked(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y) || !(x * x + y * y < 1.0)) {
    throw std::domain_error("BallPoint: coordinates must lie strictly inside the unit ball");
  }
  return BallPoint{x, y};
}

double BallPoint::angle() const {
  double a = std::atan2(coords[1], coords[0]);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a >= 2.0 * std::numbers::pi ? 0.0 : a;
}

double squared_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

double arcosh1p(double delta) {
  if (delta <= 0.0) return 0.0;
  // arcosh(1+x) = sqrt(2x) (1 - x/12 + O(x^2))
  if (delta < 1e-12) return std::sqrt(2.0 * delta) * (1.0 - delta / 12.0);
  return std::log1p(delta + std::sqrt(delta * (delta + 2.0)));
}

double hyp_distance(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u.size(), v.size(), "hyp_distance");
  const double uu = squared_norm(u);
  const double vv = squared_norm(v);
  require_inside(uu, "u");
  require_inside(vv, "v");
  double diff = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    diff += d * d;
  }
  const double delta = 2.0 * diff / ((1.0 - uu) * (1.0 - vv));
  // delta >= 0 is the clamp arg >= 1 of the arcosh argument.
  return arcosh1p(std::max(delta, 0.0));
}

double hyp_distance(const BallPoint& u, const BallPoint& v) {
  return hyp_distance(u.span(), v.span());
}

double hyp_distance_grad(std::span<const double> u, std::span<const double> v,
                         std::span<double> grad_u) {
  require_same_dim(u.size(), v.size(), "hyp_distance_grad");
  require_same_dim(u.size(), grad_u.size(), "hyp_distance_grad");
  const double uu = squared_norm(u);
  const double vv = squared_norm(v);
  require_inside(uu, "u");
  require_inside(vv, "v");
  double diff = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    diff += d * d;
  }
  const double alpha = 1.0 - uu;
  const double beta = 1.0 - vv;
  const double delta = 2.0 * diff / (alpha * beta);
  const double dist = arcosh1p(delta);
  if (diff == 0.0) {
    for (double& g : grad_u) g = 0.0;
    return dist;
  }
  // d arcosh(1+delta) / d delta = 1 / sqrt(delta (delta + 2)).
  const double outer = 1.0 / std::sqrt(delta * (delta + 2.0));
  const double scale = outer * 4.0 / (alpha * beta);
  for (std::size_t i = 0; i < u.size(); ++i) {
    grad_u[i] = scale * ((u[i] - v[i]) + diff * u[i] / alpha);
  }
  return dist;
}

void exp_map0(std::span<const double> v, const BallParams& ball, std::span<double> out) {
  require_same_dim(v.size(), out.size(), "exp_map0");
  const double sqrt_c = std::sqrt(ball.c);
  const double n = std::sqrt(squared_norm(v));
  if (n == 0.0) {
    for (double& o : out) o = 0.0;
    return;
  }
  const double a = sqrt_c * n;
  const double g = std::tanh(a) / a;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = g * v[i];
}

BallPoint exp_map0(const Vec2& v, const BallParams& ball) {
  BallPoint p;
  exp_map0(v, ball, p.coords);
  return p;
}

void exp_map0_jacobian(std::span<const double> v, const BallParams& ball,
                       std::span<double> jac) {
  const std::size_t d = v.size();
  if (jac.size() != d * d) throw std::invalid_argument("exp_map0_jacobian: bad output size");
  const double sqrt_c = std::sqrt(ball.c);
  const double n = std::sqrt(squared_norm(v));
  const double a = sqrt_c * n;
  double g = 1.0;
  double dg_over_n = 0.0;  // g'(n) / n
  if (a < 1e-6) {
    // g(n) = 1 - (a^2)/3 + ..., g'(n)/n = -2c/3 + O(a^2)
    g = 1.0 - a * a / 3.0;
    dg_over_n = -2.0 * ball.c / 3.0;
  } else {
    const double t = std::tanh(a);
    const double sech2 = 1.0 - t * t;
    g = t / a;
    // g'(n) = (a sech^2(a) - tanh(a)) / (sqrt_c n^2)
    dg_over_n = (a * sech2 - t) / (sqrt_c * n * n * n);
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      jac[i * d + j] = (i == j ? g : 0.0) + dg_over_n * v[i] * v[j];
    }
  }
}

void clip_to_radius(std::span<const double> p, double r_clip, std::span<double> out) {
  require_same_dim(p.size(), out.size(), "clip_to_radius");
  if (!(r_clip > 0.0 && r_clip < 1.0)) {
    throw std::domain_error("clip_to_radius: r_clip must lie in (0, 1)");
  }
  const double n = std::sqrt(squared_norm(p));
  if (n <= r_clip) {
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i];
    return;
  }
  const double f = (r_clip - kClipMargin) / n;
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = f * p[i];
}

BallPoint clip_to_radius(const Vec2& p, double r_clip) {
  BallPoint q;
  clip_to_radius(p, r_clip, q.coords);
  return q;
}

void clip_to_radius_jacobian(std::span<const double> p, double r_clip, std::span<double> jac) {
  const std::size_t d = p.size();
  if (jac.size() != d * d) throw std::invalid_argument("clip_to_radius_jacobian: bad output size");
  const double n = std::sqrt(squared_norm(p));
  if (n <= r_clip) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) jac[i * d + j] = i == j ? 1.0 : 0.0;
    return;
  }
  // d/dp [R p / |p|] = R/|p| (I - p p^T / |p|^2)
  const double f = (r_clip - kClipMargin) / n;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      jac[i * d + j] = f * ((i == j ? 1.0 : 0.0) - p[i] * p[j] / (n * n));
    }
  }
}

}  // namespace hack

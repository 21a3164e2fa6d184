#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace hack {

using Vec2 = std::array<double, 2>;

/// Curvature bookkeeping for the Poincare ball. `s` is the ball scale 1/sqrt(c).
struct BallParams {
  double c = 1.0;
  double s = 1.0;

  static BallParams from_curvature(double c);
};

/// A point of the two-dimensional Poincare ball, stored as ambient coordinates.
struct BallPoint {
  Vec2 coords{0.0, 0.0};

  BallPoint() = default;
  constexpr BallPoint(double x, double y) : coords{x, y} {}
  explicit constexpr BallPoint(const Vec2& v) : coords(v) {}

  /// Throws std::domain_error unless the point lies strictly inside the unit ball.
  static BallPoint checked(double x, double y);

  double x() const { return coords[0]; }
  double y() const { return coords[1]; }
  double norm() const { return std::hypot(coords[0], coords[1]); }
  double angle() const;  // in [0, 2*pi)

  std::span<const double> span() const { return coords; }
  bool operator==(const BallPoint&) const = default;
};

double squared_norm(std::span<const double> v);

/// arcosh(1 + delta) evaluated without cancellation near delta = 0.
double arcosh1p(double delta);

// ---------------------------------------------------------------------------
// Hyperbolic distance on the unit ball
// ---------------------------------------------------------------------------

/// Geodesic distance arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2))).
/// Throws std::domain_error if either point has norm >= 1.
double hyp_distance(std::span<const double> u, std::span<const double> v);
double hyp_distance(const BallPoint& u, const BallPoint& v);

/// Gradient of hyp_distance(u, v) with respect to u, written into `grad_u`
/// (same dimension as u). Returns the distance. The gradient is zero at u == v.
double hyp_distance_grad(std::span<const double> u, std::span<const double> v,
                         std::span<double> grad_u);

// ---------------------------------------------------------------------------
// Maps into the ball
// ---------------------------------------------------------------------------

/// Exponential map at the origin: tanh(sqrt(c)|v|) v / (sqrt(c)|v|).
void exp_map0(std::span<const double> v, const BallParams& ball, std::span<double> out);
BallPoint exp_map0(const Vec2& v, const BallParams& ball);

/// Jacobian of exp_map0 at v (row-major dim x dim).
void exp_map0_jacobian(std::span<const double> v, const BallParams& ball,
                       std::span<double> jac);

inline constexpr double kClipMargin = 1e-5;

/// Points with norm above r_clip are rescaled to norm r_clip - kClipMargin.
void clip_to_radius(std::span<const double> p, double r_clip, std::span<double> out);
BallPoint clip_to_radius(const Vec2& p, double r_clip);

/// Jacobian of clip_to_radius at p (row-major dim x dim). Identity inside the radius.
void clip_to_radius_jacobian(std::span<const double> p, double r_clip, std::span<double> jac);

}  // namespace hack

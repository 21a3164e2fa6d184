#include "hack/packing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "hack/random.hpp"

namespace hack {

void PackingSpec::validate() const {
  if (n < 1) throw std::invalid_argument("PackingSpec: n must be >= 1");
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("PackingSpec: r must lie in (0, 1)");
  if (!(k > 0.0)) throw std::invalid_argument("PackingSpec: k must be positive");
  if (!(margin >= 0.0)) throw std::invalid_argument("PackingSpec: margin must be nonnegative");
  if (!(lr > 0.0)) throw std::invalid_argument("PackingSpec: lr must be positive");
}

const char* to_string(PackStatus status) {
  return status == PackStatus::converged ? "converged" : "not_converged";
}

double hyperbolic_radius(double r, const BallParams& ball) {
  const double s = ball.s;
  if (!(r > 0.0) || !(r < s)) throw std::domain_error("hyperbolic_radius: r must lie in (0, s)");
  return s * std::log((s + r) / (s - r));
}

double per_particle_radius(std::size_t n, double r, const BallParams& ball) {
  if (n < 1) throw std::invalid_argument("per_particle_radius: n must be >= 1");
  const double s = ball.s;
  const double r_ball = hyperbolic_radius(r, ball);
  const double sh = std::sinh(r_ball / (2.0 * s));
  const double area_ball = 4.0 * std::numbers::pi * s * s * sh * sh;
  const double area_each = area_ball / static_cast<double>(n);
  return 2.0 * s * std::asinh(std::sqrt(area_each / (4.0 * std::numbers::pi * s * s)));
}

double per_particle_radius(const PackingSpec& spec, const BallParams& ball) {
  return per_particle_radius(spec.n, spec.r, ball);
}

double repulsion_loss(double d, double r_n, double k) {
  if (d <= kCoincidentDistance) return kCoincidentLossCap;
  const double contact = 2.0 * r_n;
  if (d >= contact) return 0.0;
  const double c_k = std::pow(contact, k + 1.0) / k;
  const double bracket = contact - std::max(0.0, contact - d);
  return (std::pow(bracket, -k) - std::pow(contact, -k)) * c_k;
}

double repulsion_loss(const BallPoint& i, const BallPoint& j, double r_n, double k) {
  return repulsion_loss(hyp_distance(i, j), r_n, k);
}

double repulsion_loss_derivative(double d, double r_n, double k) {
  const double contact = 2.0 * r_n;
  if (d <= kCoincidentDistance || d >= contact) return 0.0;
  // d/dd [d^-k C] = -k d^(-k-1) (2 r_n)^(k+1) / k
  return -std::pow(contact / d, k + 1.0);
}

double boundary_loss(const BallPoint& p, double r, double margin) {
  return std::max(0.0, p.norm() - r + margin);
}

PackingEnergy packing_energy(std::span<const BallPoint> positions, double r_n,
                             const PackingSpec& spec, std::span<Vec2> grad) {
  const std::size_t n = positions.size();
  const bool want_grad = !grad.empty();
  if (want_grad) {
    if (grad.size() != n) throw std::invalid_argument("packing_energy: gradient size mismatch");
    std::fill(grad.begin(), grad.end(), Vec2{0.0, 0.0});
  }

  std::vector<double> alpha(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sq = squared_norm(positions[i].span());
    if (!(sq < 1.0)) throw std::domain_error("packing_energy: particle outside the unit ball");
    alpha[i] = 1.0 - sq;
  }

  // d < 2 r_n  <=>  delta < cosh(2 r_n) - 1, which avoids the arcosh for far pairs.
  const double contact = 2.0 * r_n;
  const double delta_contact = std::cosh(contact) - 1.0;
  PackingEnergy energy;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& pi = positions[i].coords;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& pj = positions[j].coords;
      const double dx = pi[0] - pj[0];
      const double dy = pi[1] - pj[1];
      const double diff = dx * dx + dy * dy;
      const double ab = alpha[i] * alpha[j];
      const double delta = 2.0 * diff / ab;
      if (delta >= delta_contact) continue;
      const double d = arcosh1p(delta);
      energy.repulsion += repulsion_loss(d, r_n, spec.k);
      if (!want_grad) continue;
      const double dv = repulsion_loss_derivative(d, r_n, spec.k);
      if (dv == 0.0) continue;
      const double scale = dv / std::sqrt(delta * (delta + 2.0)) * 4.0 / ab;
      grad[i][0] += scale * (dx + diff * pi[0] / alpha[i]);
      grad[i][1] += scale * (dy + diff * pi[1] / alpha[i]);
      grad[j][0] += scale * (-dx + diff * pj[0] / alpha[j]);
      grad[j][1] += scale * (-dy + diff * pj[1] / alpha[j]);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double norm = positions[i].norm();
    const double hinge = norm - spec.r + spec.margin;
    if (hinge > 0.0) {
      energy.boundary += hinge;
      if (want_grad) {
        grad[i][0] += positions[i].coords[0] / norm;
        grad[i][1] += positions[i].coords[1] / norm;
      }
    }
  }
  return energy;
}

namespace {

std::vector<BallPoint> initial_positions(const PackingSpec& spec) {
  Rng rng = make_rng(spec.seed);
  const double radius = spec.r / 2.0;
  std::vector<BallPoint> pts(spec.n);
  for (auto& p : pts) {
    const double rho = radius * std::sqrt(uniform01(rng));
    const double theta = 2.0 * std::numbers::pi * uniform01(rng);
    p = BallPoint{rho * std::cos(theta), rho * std::sin(theta)};
  }
  return pts;
}

// Coincident pairs get pushed apart by 1e-6 along x, once, before optimisation.
void separate_coincident(std::vector<BallPoint>& pts) {
  constexpr double kJitter = 1e-6;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (hyp_distance(pts[i], pts[j]) <= kCoincidentDistance) {
        pts[i].coords[0] -= kJitter;
        pts[j].coords[0] += kJitter;
      }
    }
  }
}

struct Iterate {
  std::vector<BallPoint> positions;
  std::vector<Vec2> grad;
  PackingEnergy energy;
};

}  // namespace

ParticleSet pack(const PackingSpec& spec, const BallParams& ball) {
  spec.validate();
  if (!(spec.r < ball.s)) throw std::domain_error("pack: r must be below the ball scale s");

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  constexpr std::size_t kWindow = 10;
  constexpr int kHalvings = 3;

  ParticleSet out;
  out.spec = spec;
  out.ball = ball;
  out.r_n = per_particle_radius(spec, ball);

  Iterate cur;
  cur.positions = initial_positions(spec);
  separate_coincident(cur.positions);
  for (auto& p : cur.positions) p = clip_to_radius(p.coords, spec.r);
  cur.grad.resize(spec.n);
  cur.energy = packing_energy(cur.positions, out.r_n, spec, cur.grad);

  out.initial_repulsion = cur.energy.repulsion;
  out.loss_history.reserve(spec.epochs + 1);
  out.loss_history.push_back(cur.energy.total());

  // The last kWindow accepted iterates; recent.back() is always `cur`.
  std::deque<Iterate> recent{cur};
  std::vector<Vec2> m(spec.n, Vec2{0.0, 0.0});
  std::vector<Vec2> v(spec.n, Vec2{0.0, 0.0});
  Iterate trial;
  trial.positions.resize(spec.n);
  trial.grad.resize(spec.n);
  std::vector<Vec2> direction(spec.n);

  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(epoch));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(epoch));
    for (std::size_t i = 0; i < spec.n; ++i) {
      for (int a = 0; a < 2; ++a) {
        const double g = cur.grad[i][a];
        m[i][a] = kBeta1 * m[i][a] + (1.0 - kBeta1) * g;
        v[i][a] = kBeta2 * v[i][a] + (1.0 - kBeta2) * g * g;
        direction[i][a] = (m[i][a] / bc1) / (std::sqrt(v[i][a] / bc2) + kEps);
      }
    }

    // Each recorded loss must not exceed the loss recorded kWindow epochs earlier.
    const std::size_t h = out.loss_history.size();
    const double reference = h >= kWindow ? out.loss_history[h - kWindow]
                                          : std::numeric_limits<double>::infinity();
    bool accepted = false;
    double step = spec.lr;
    for (int attempt = 0; attempt <= kHalvings && !accepted; ++attempt, step *= 0.5) {
      for (std::size_t i = 0; i < spec.n; ++i) {
        const Vec2 moved{cur.positions[i].coords[0] - step * direction[i][0],
                         cur.positions[i].coords[1] - step * direction[i][1]};
        trial.positions[i] = clip_to_radius(moved, spec.r);
      }
      trial.energy = packing_energy(trial.positions, out.r_n, spec, trial.grad);
      accepted = trial.energy.total() <= reference;
    }

    if (accepted) {
      cur = trial;
    } else {
      // Fall back to the best iterate in the window, whose loss is <= reference.
      const Iterate* best = &recent.front();
      for (const auto& it : recent) {
        if (it.energy.total() < best->energy.total()) best = &it;
      }
      cur = *best;
    }
    out.loss_history.push_back(cur.energy.total());
    recent.push_back(cur);
    if (recent.size() > kWindow) recent.pop_front();
  }

  out.positions = std::move(cur.positions);
  out.final_repulsion = cur.energy.repulsion;
  out.final_loss = cur.energy.total();
  out.status = out.final_repulsion > 1e-3 * out.initial_repulsion ? PackStatus::not_converged
                                                                   : PackStatus::converged;
  return out;
}

std::vector<double> nearest_neighbor_distances(std::span<const BallPoint> positions) {
  const std::size_t n = positions.size();
  if (n < 2) throw std::invalid_argument("nearest_neighbor_distances: need at least two points");
  std::vector<double> nn(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = hyp_distance(positions[i], positions[j]);
      nn[i] = std::min(nn[i], d);
      nn[j] = std::min(nn[j], d);
    }
  }
  return nn;
}

}  // namespace hack

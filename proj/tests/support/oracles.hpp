#pragma once

// Independent reference computations for the tests. Kept deliberately naive:
// long double, textbook formulas, no shared code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

inline long double hyp_distance(long double ux, long double uy, long double vx, long double vy) {
  const long double du = ux * ux + uy * uy, dv = vx * vx + vy * vy;
  const long double diff = (ux - vx) * (ux - vx) + (uy - vy) * (uy - vy);
  const long double arg = 1.0L + 2.0L * diff / ((1.0L - du) * (1.0L - dv));
  return std::acosh(std::max(arg, 1.0L));
}

struct RadiusChain {
  long double r_b, area_b, area_n, r_n;
};

inline RadiusChain radius_chain(std::size_t n, long double r, long double c) {
  const long double pi = 3.14159265358979323846264338327950288L;
  const long double s = 1.0L / std::sqrt(c);
  RadiusChain out{};
  out.r_b = s * std::log((s + r) / (s - r));
  out.area_b = 4.0L * pi * s * s * std::pow(std::sinh(out.r_b / (2.0L * s)), 2.0L);
  out.area_n = out.area_b / static_cast<long double>(n);
  out.r_n = 2.0L * s * std::asinh(std::sqrt(out.area_n / (4.0L * pi * s * s)));
  return out;
}

/// Minimum over all b! permutations, and the lexicographically first minimiser.
inline double brute_force_assignment(const std::vector<std::vector<double>>& cost, std::vector<std::size_t>* best = nullptr) {
  const std::size_t b = cost.size();
  std::vector<std::size_t> perm(b);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double min = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) total += cost[i][perm[i]];
    if (total < min) {
      min = total;
      if (best) *best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return min;
}

/// Central difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor): relative error with an absolute floor for tiny values.
inline double rel_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace oracle

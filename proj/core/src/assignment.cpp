#include "hack/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "hack/random.hpp"

namespace hack {

CostMatrix::CostMatrix(std::size_t b, double fill) : b_(b), data_(b * b, fill) {}

CostMatrix CostMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  CostMatrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) {
      throw std::invalid_argument("CostMatrix: matrix must be square");
    }
    std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * m.b_));
  }
  m.validate();
  return m;
}

void CostMatrix::validate() const {
  if (data_.size() != b_ * b_) throw std::invalid_argument("CostMatrix: matrix must be square");
  for (double x : data_) {
    if (!std::isfinite(x)) throw std::invalid_argument("CostMatrix: entries must be finite");
    if (x < 0.0) throw std::invalid_argument("CostMatrix: entries must be nonnegative");
  }
}

double matching_cost(const CostMatrix& cost, std::span<const std::size_t> column_of) {
  double total = 0.0;
  for (std::size_t i = 0; i < column_of.size(); ++i) total += cost(i, column_of[i]);
  return total;
}

namespace {

struct Duals {
  std::vector<double> row;  // u
  std::vector<double> col;  // v
  std::vector<std::size_t> column_of;
};

// Shortest augmenting path Hungarian; the duals satisfy cost(i,j) - u_i - v_j >= 0
// with equality on the matching.
Duals solve_with_potentials(const CostMatrix& a) {
  const std::size_t n = a.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based, index 0 is the virtual source row/column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Duals d;
  d.row.assign(u.begin() + 1, u.end());
  d.col.assign(v.begin() + 1, v.end());
  d.column_of.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) d.column_of[p[j] - 1] = j - 1;
  return d;
}

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Every optimal matching uses only zero-reduced-cost edges of an optimal dual,
// so the lexicographically smallest optimum is the lexicographically smallest
// perfect matching of that equality subgraph. Rows are fixed greedily; moving
// row i onto column j is feasible iff the displaced row can reach i's old
// column along an alternating path among the unfixed rows.
std::vector<std::size_t> lexicographic_optimum(const CostMatrix& a, const Duals& d) {
  const std::size_t n = a.size();
  double scale = 1.0;
  for (double x : a.data()) scale = std::max(scale, std::abs(x));
  const double tol = 1e-9 * scale;
  auto tight = [&](std::size_t i, std::size_t j) {
    return a(i, j) - d.row[i] - d.col[j] <= tol;
  };

  std::vector<std::size_t> col_of = d.column_of;
  std::vector<std::size_t> row_of(n);
  for (std::size_t i = 0; i < n; ++i) row_of[col_of[i]] = i;

  std::vector<std::size_t> parent_col(n);
  std::vector<char> seen_col(n);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < col_of[i]; ++j) {
      if (!tight(i, j)) continue;
      const std::size_t owner = row_of[j];
      if (owner < i) continue;  // column held by a fixed row
      const std::size_t freed = col_of[i];

      // BFS over columns: from row `owner`, find an alternating path to `freed`.
      std::fill(seen_col.begin(), seen_col.end(), 0);
      std::fill(parent_col.begin(), parent_col.end(), kNone);
      seen_col[j] = 1;
      std::queue<std::size_t> frontier;  // rows to expand
      frontier.push(owner);
      bool found = false;
      while (!frontier.empty() && !found) {
        const std::size_t r = frontier.front();
        frontier.pop();
        for (std::size_t c = 0; c < n; ++c) {
          if (seen_col[c] || !tight(r, c)) continue;
          const std::size_t holder = row_of[c];
          if (c != freed && holder <= i) continue;
          seen_col[c] = 1;
          parent_col[c] = r;
          if (c == freed) {
            found = true;
            break;
          }
          frontier.push(holder);
        }
      }
      if (!found) continue;

      // Walk back from `freed`, shifting each row on the path onto its new column.
      std::size_t c = freed;
      while (true) {
        const std::size_t r = parent_col[c];
        const std::size_t previous = col_of[r];
        col_of[r] = c;
        row_of[c] = r;
        if (r == owner) break;
        c = previous;
      }
      col_of[i] = j;
      row_of[j] = i;
      break;
    }
  }
  return col_of;
}

}  // namespace

Matching hungarian(const CostMatrix& cost) {
  cost.validate();
  Matching out;
  if (cost.size() == 0) return out;
  const Duals duals = solve_with_potentials(cost);
  out.column_of = lexicographic_optimum(cost, duals);
  out.total = matching_cost(cost, out.column_of);
  return out;
}

AssignmentState AssignmentState::identity(std::size_t n) {
  AssignmentState s;
  s.particle_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.particle_of[i] = i;
  return s;
}

AssignmentState AssignmentState::random(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return AssignmentState{random_permutation(n, rng)};
}

bool AssignmentState::is_bijection() const {
  std::vector<char> hit(particle_of.size(), 0);
  for (std::size_t p : particle_of) {
    if (p >= hit.size() || hit[p]) return false;
    hit[p] = 1;
  }
  return true;
}

double batch_cost(std::span<const BallPoint> features, std::span<const std::size_t> batch_ids,
                  const AssignmentState& state, std::span<const BallPoint> particles) {
  double total = 0.0;
  for (std::size_t i = 0; i < batch_ids.size(); ++i) {
    total += hyp_distance(features[i], particles[state.particle_of.at(batch_ids[i])]);
  }
  return total;
}

double batch_reassign(std::span<const BallPoint> features, std::span<const std::size_t> batch_ids,
                      AssignmentState& state, std::span<const BallPoint> particles) {
  const std::size_t b = batch_ids.size();
  if (features.size() != b) throw std::invalid_argument("batch_reassign: features/batch size mismatch");
  if (b < 2) return batch_cost(features, batch_ids, state, particles);

  // Columns are the owned particle ids in ascending order, so the cost matrix
  // depends only on which particles the batch holds.
  std::vector<std::size_t> owned(b);
  for (std::size_t i = 0; i < b; ++i) owned[i] = state.particle_of.at(batch_ids[i]);
  std::sort(owned.begin(), owned.end());
  if (std::adjacent_find(owned.begin(), owned.end()) != owned.end()) {
    throw std::invalid_argument("batch_reassign: batch ids must be distinct in a bijection");
  }

  CostMatrix cost(b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) cost(i, j) = hyp_distance(features[i], particles[owned[j]]);

  const double before = batch_cost(features, batch_ids, state, particles);
  const Matching m = hungarian(cost);
  AssignmentState next = state;
  for (std::size_t i = 0; i < b; ++i) next.particle_of[batch_ids[i]] = owned[m.column_of[i]];
  const double after = batch_cost(features, batch_ids, next, particles);
  // Equal-cost optima can differ from the incumbent by rounding in the last bit.
  if (after > before) return before;
  state = std::move(next);
  return after;
}

}  // namespace hack

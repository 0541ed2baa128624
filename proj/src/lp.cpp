#include "pwlv/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace pwlv {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr double kCostTol = 1e-7;
constexpr double kDegenTol = 1e-11;
constexpr int kBlandTrigger = 50;
constexpr int kRefactorEvery = 64;

struct Simplex {
  // columns: [0, n) structural, [n, n+m) slacks, [n+m, ncols) artificials
  int m = 0, n = 0, ncols = 0;
  std::vector<double> cols;  // dense m x ncols, column-major
  std::vector<double> lo, hi;
  std::vector<double> rhs;
  std::vector<double> cost;   // current phase objective (maximize)
  std::vector<int> basis;     // basic column per row
  std::vector<int> row_of;    // row of a basic column, -1 if nonbasic
  std::vector<unsigned char> at_up;  // nonbasic at upper bound
  std::vector<double> binv;   // dense m x m, row-major
  std::vector<double> xb;     // basic values
  std::vector<std::pair<int, int>> pivots;
  int iterations = 0;
  int degenerate_streak = 0;
  bool bland = false;
  std::string error;

  double& a(int r, int c) { return cols[static_cast<size_t>(c) * m + r]; }
  double aval(int r, int c) const { return cols[static_cast<size_t>(c) * m + r]; }

  double nonbasic_value(int c) const {
    if (at_up[c]) return hi[c];
    if (lo[c] > -kInf) return lo[c];
    if (hi[c] < kInf) return hi[c];
    return 0.0;  // free variable rests at zero
  }

  // xb = binv * (rhs - N * x_N)
  void compute_basic_values() {
    std::vector<double> r = rhs;
    for (int c = 0; c < ncols; ++c) {
      if (row_of[c] >= 0) continue;
      double v = nonbasic_value(c);
      if (v == 0.0) continue;
      for (int i = 0; i < m; ++i) r[i] -= aval(i, c) * v;
    }
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      const double* bi = &binv[static_cast<size_t>(i) * m];
      for (int k = 0; k < m; ++k) s += bi[k] * r[k];
      xb[i] = s;
    }
  }

  bool refactorize() {
    // Gauss-Jordan inversion of the basis matrix with partial pivoting.
    std::vector<double> work(static_cast<size_t>(m) * 2 * m, 0.0);
    auto w = [&](int r, int c) -> double& { return work[static_cast<size_t>(r) * 2 * m + c]; };
    for (int i = 0; i < m; ++i) {
      for (int r = 0; r < m; ++r) w(r, i) = aval(r, basis[i]);
      w(i, m + i) = 1.0;
    }
    for (int c = 0; c < m; ++c) {
      int piv = c;
      double best = std::abs(w(c, c));
      for (int r = c + 1; r < m; ++r) {
        double v = std::abs(w(r, c));
        if (v > best) best = v, piv = r;
      }
      if (best < 1e-12) {
        error = "singular basis during refactorization";
        return false;
      }
      if (piv != c)
        for (int k = 0; k < 2 * m; ++k) std::swap(w(piv, k), w(c, k));
      double d = w(c, c);
      for (int k = 0; k < 2 * m; ++k) w(c, k) /= d;
      for (int r = 0; r < m; ++r) {
        if (r == c) continue;
        double f = w(r, c);
        if (f == 0.0) continue;
        for (int k = 0; k < 2 * m; ++k) w(r, k) -= f * w(c, k);
      }
    }
    for (int r = 0; r < m; ++r)
      for (int k = 0; k < m; ++k) binv[static_cast<size_t>(r) * m + k] = w(r, m + k);
    compute_basic_values();
    return true;
  }

  std::vector<double> price() const {
    // y = c_B * binv
    std::vector<double> y(m, 0.0);
    for (int i = 0; i < m; ++i) {
      double cb = cost[basis[i]];
      if (cb == 0.0) continue;
      const double* bi = &binv[static_cast<size_t>(i) * m];
      for (int k = 0; k < m; ++k) y[k] += cb * bi[k];
    }
    return y;
  }

  double reduced_cost(const std::vector<double>& y, int c) const {
    double s = cost[c];
    for (int i = 0; i < m; ++i) s -= y[i] * aval(i, c);
    return s;
  }

  std::vector<double> ftran(int c) const {
    std::vector<double> w(m, 0.0);
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      const double* bi = &binv[static_cast<size_t>(i) * m];
      for (int k = 0; k < m; ++k) s += bi[k] * aval(k, c);
      w[i] = s;
    }
    return w;
  }

  // Runs the simplex loop on the current phase objective.
  // Returns: 0 optimal, 1 unbounded, -1 numeric failure.
  int iterate(int max_iters) {
    for (int it = 0; it < max_iters; ++it) {
      if (iterations > 0 && iterations % kRefactorEvery == 0) {
        if (!refactorize()) return -1;
      }
      std::vector<double> y = price();

      int enter = -1, dir = 0;
      double best_score = kCostTol;
      for (int c = 0; c < ncols; ++c) {
        if (row_of[c] >= 0) continue;
        if (lo[c] == hi[c]) continue;  // fixed, never enters
        double rc = reduced_cost(y, c);
        bool free_var = lo[c] == -kInf && hi[c] == kInf;
        int d = 0;
        if (free_var) {
          if (rc > kCostTol) d = 1;
          else if (rc < -kCostTol) d = -1;
        } else if (at_up[c]) {
          if (rc < -kCostTol) d = -1;
        } else {
          if (rc > kCostTol) d = 1;
        }
        if (d == 0) continue;
        if (bland) { enter = c; dir = d; break; }
        double score = std::abs(rc);
        if (score > best_score) { best_score = score; enter = c; dir = d; }
      }
      if (enter < 0) return 0;  // optimal for this phase

      std::vector<double> w = ftran(enter);

      // Ratio test: the entering variable moves by theta * dir.
      double own_range = (lo[enter] > -kInf && hi[enter] < kInf) ? hi[enter] - lo[enter] : kInf;
      double theta = own_range;
      int leave_row = -1;       // -1 means bound flip
      int leave_to_upper = 0;   // bound the leaving variable hits
      double leave_piv = 0.0;
      for (int i = 0; i < m; ++i) {
        double rate = -dir * w[i];  // change rate of basic i per unit theta
        int bc = basis[i];
        double t;
        int to_up;
        if (rate > kPivotTol) {
          if (hi[bc] == kInf) continue;
          t = (hi[bc] - xb[i]) / rate;
          to_up = 1;
        } else if (rate < -kPivotTol) {
          if (lo[bc] == -kInf) continue;
          t = (lo[bc] - xb[i]) / rate;
          to_up = 0;
        } else {
          continue;
        }
        if (t < 0.0) t = 0.0;  // tolerate slight bound drift
        bool better = false;
        if (t < theta - 1e-12) {
          better = true;
        } else if (t <= theta + 1e-12 && leave_row >= 0) {
          // tie between blockers: Bland takes the smallest column,
          // otherwise prefer the largest pivot magnitude
          better = bland ? bc < basis[leave_row] : std::abs(w[i]) > std::abs(leave_piv);
        }
        if (better) {
          theta = std::min(theta, t);
          leave_row = i;
          leave_to_upper = to_up;
          leave_piv = w[i];
        }
      }

      if (theta == kInf) return 1;  // unbounded direction

      ++iterations;
      if (theta < kDegenTol) {
        if (++degenerate_streak >= kBlandTrigger) bland = true;
      } else {
        degenerate_streak = 0;
        if (bland) bland = false;
      }

      if (leave_row < 0) {
        // bound flip: entering moves to its opposite bound
        at_up[enter] = dir > 0 ? 1 : 0;
        for (int i = 0; i < m; ++i) xb[i] -= dir * w[i] * theta;
        pivots.emplace_back(enter, -1);
        continue;
      }

      if (std::abs(w[leave_row]) < kDegenTol) {
        error = "pivot element below tolerance";
        return -1;
      }

      int leave_col = basis[leave_row];
      double enter_val = nonbasic_value(enter) + dir * theta;
      for (int i = 0; i < m; ++i) xb[i] -= dir * w[i] * theta;

      // eta update of binv
      double piv = w[leave_row];
      double* br = &binv[static_cast<size_t>(leave_row) * m];
      for (int k = 0; k < m; ++k) br[k] /= piv;
      for (int i = 0; i < m; ++i) {
        if (i == leave_row) continue;
        double f = w[i];
        if (f == 0.0) continue;
        double* bi = &binv[static_cast<size_t>(i) * m];
        for (int k = 0; k < m; ++k) bi[k] -= f * br[k];
      }

      basis[leave_row] = enter;
      row_of[enter] = leave_row;
      row_of[leave_col] = -1;
      at_up[leave_col] = static_cast<unsigned char>(leave_to_upper);
      xb[leave_row] = enter_val;
      pivots.emplace_back(enter, leave_col);
    }
    error = "iteration limit exceeded";
    return -1;
  }
};

}  // namespace

double LinearConstraint::activity(const std::vector<double>& x) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.coef * x[t.var];
  return s;
}

double LinearConstraint::violation(const std::vector<double>& x) const {
  double lhs = activity(x);
  switch (sense) {
    case Sense::LE: return lhs - rhs;
    case Sense::GE: return rhs - lhs;
    case Sense::EQ: return std::abs(lhs - rhs);
  }
  return 0.0;
}

int LpProblem::add_var(double l, double h, double c) {
  lo.push_back(l);
  hi.push_back(h);
  obj.push_back(c);
  return static_cast<int>(lo.size()) - 1;
}

LpResult solve_lp(const LpProblem& p) {
  LpResult res;
  const int n = p.num_vars();
  const int m = static_cast<int>(p.rows.size());

  for (int j = 0; j < n; ++j) {
    if (p.lo[j] > p.hi[j] + 1e-12) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    if (!std::isfinite(p.obj[j])) {
      res.status = LpStatus::NumericError;
      res.message = "non-finite objective coefficient";
      return res;
    }
  }

  Simplex s;
  s.m = m;
  s.n = n;
  s.ncols = n + m;
  s.cols.assign(static_cast<size_t>(s.ncols) * std::max(m, 1), 0.0);
  s.lo.assign(p.lo.begin(), p.lo.end());
  s.hi.assign(p.hi.begin(), p.hi.end());
  s.rhs.resize(m);
  s.row_of.assign(s.ncols, -1);
  s.at_up.assign(s.ncols, 0);
  s.basis.resize(m);
  s.binv.assign(static_cast<size_t>(m) * m, 0.0);
  s.xb.assign(m, 0.0);

  const double sign = p.maximize ? 1.0 : -1.0;

  for (int r = 0; r < m; ++r) {
    const auto& row = p.rows[r];
    for (const auto& t : row.terms) {
      if (t.var < 0 || t.var >= n || !std::isfinite(t.coef)) {
        res.status = LpStatus::NumericError;
        res.message = "bad row term";
        return res;
      }
      s.a(r, t.var) += t.coef;
    }
    s.rhs[r] = row.rhs;
    int sc = n + r;
    s.a(r, sc) = 1.0;
    switch (row.sense) {
      case Sense::LE: s.lo.push_back(0.0); s.hi.push_back(kInf); break;
      case Sense::GE: s.lo.push_back(-kInf); s.hi.push_back(0.0); break;
      case Sense::EQ: s.lo.push_back(0.0); s.hi.push_back(0.0); break;
    }
    s.basis[r] = sc;
    s.row_of[sc] = r;
    s.binv[static_cast<size_t>(r) * m + r] = 1.0;
  }

  s.compute_basic_values();

  // Phase 1 with artificial columns on rows whose slack basis is infeasible.
  bool need_phase1 = false;
  for (int r = 0; r < m; ++r) {
    int bc = s.basis[r];
    if (s.xb[r] < s.lo[bc] - kFeasTol || s.xb[r] > s.hi[bc] + kFeasTol) {
      need_phase1 = true;
      break;
    }
  }

  int max_iters = 2000 + 200 * (n + m);

  if (need_phase1) {
    std::vector<int> art_cols;
    for (int r = 0; r < m; ++r) {
      int bc = s.basis[r];
      double v = s.xb[r];
      double clamped = std::min(std::max(v, s.lo[bc]), s.hi[bc]);
      if (clamped == v) continue;
      // slack leaves the basis at its nearest bound; artificial absorbs the rest
      double residual = v - clamped;
      int ac = s.ncols;
      s.ncols += 1;
      s.cols.resize(static_cast<size_t>(s.ncols) * m, 0.0);
      s.a(r, ac) = residual > 0 ? 1.0 : -1.0;
      s.lo.push_back(0.0);
      s.hi.push_back(kInf);
      s.row_of.push_back(r);
      s.at_up.push_back(0);
      s.row_of[bc] = -1;
      s.at_up[bc] = (clamped == s.hi[bc] && s.hi[bc] < kInf) ? 1 : 0;
      s.basis[r] = ac;
      s.xb[r] = std::abs(residual);
      art_cols.push_back(ac);
    }
    s.cost.assign(s.ncols, 0.0);
    for (int ac : art_cols) s.cost[ac] = -1.0;
    if (!s.refactorize()) {
      res.status = LpStatus::NumericError;
      res.message = s.error;
      return res;
    }
    int rc1 = s.iterate(max_iters);
    if (rc1 < 0) {
      res.status = LpStatus::NumericError;
      res.message = s.error;
      res.pivots = s.pivots;
      return res;
    }
    double infeas = 0.0;
    for (int ac : art_cols)
      infeas += s.row_of[ac] >= 0 ? s.xb[s.row_of[ac]] : s.nonbasic_value(ac);
    if (infeas > kFeasTol) {
      res.status = LpStatus::Infeasible;
      res.pivots = s.pivots;
      res.iterations = s.iterations;
      return res;
    }
    // Fix artificials to zero; basic ones stay (value ~0) on redundant rows.
    for (int ac : art_cols) {
      s.lo[ac] = s.hi[ac] = 0.0;
      s.at_up[ac] = 0;
    }
  } else {
    s.cost.assign(s.ncols, 0.0);
  }

  // Phase 2
  s.cost.assign(s.ncols, 0.0);
  for (int j = 0; j < n; ++j) s.cost[j] = sign * p.obj[j];
  s.bland = false;
  s.degenerate_streak = 0;
  int rc2 = s.iterate(max_iters);
  if (rc2 < 0) {
    res.status = LpStatus::NumericError;
    res.message = s.error;
    res.pivots = s.pivots;
    return res;
  }
  res.pivots = s.pivots;
  res.iterations = s.iterations;
  if (rc2 == 1) {
    res.status = LpStatus::Unbounded;
    return res;
  }

  if (!s.refactorize()) {
    res.status = LpStatus::NumericError;
    res.message = s.error;
    return res;
  }

  res.x.assign(n, 0.0);
  for (int j = 0; j < n; ++j)
    res.x[j] = s.row_of[j] >= 0 ? s.xb[s.row_of[j]] : s.nonbasic_value(j);

  // Feasibility audit; drift here is a numeric breakdown, not infeasibility.
  double worst = 0.0;
  for (int r = 0; r < m; ++r) {
    double act = p.rows[r].activity(res.x);
    double v = 0.0;
    switch (p.rows[r].sense) {
      case Sense::LE: v = act - p.rows[r].rhs; break;
      case Sense::GE: v = p.rows[r].rhs - act; break;
      case Sense::EQ: v = std::abs(act - p.rows[r].rhs); break;
    }
    worst = std::max(worst, v / (1.0 + std::abs(p.rows[r].rhs)));
  }
  for (int j = 0; j < n; ++j) {
    worst = std::max(worst, (s.lo[j] - res.x[j]) / (1.0 + std::abs(s.lo[j])));
    worst = std::max(worst, (res.x[j] - s.hi[j]) / (1.0 + std::abs(s.hi[j])));
  }
  if (worst > kFeasTol) {
    res.status = LpStatus::NumericError;
    res.message = "primal residual above tolerance after solve";
    return res;
  }

  std::vector<double> y = s.price();
  res.duals.resize(m);
  for (int r = 0; r < m; ++r) res.duals[r] = sign * y[r];
  res.reduced_costs.resize(n);
  for (int j = 0; j < n; ++j) res.reduced_costs[j] = sign * s.reduced_cost(y, j);
  res.basis = s.basis;
  res.at_upper.assign(s.at_up.begin(), s.at_up.begin() + n);
  res.objective = 0.0;
  for (int j = 0; j < n; ++j) res.objective += p.obj[j] * res.x[j];
  res.status = LpStatus::Optimal;
  return res;
}

}  // namespace pwlv

#include "pwlv/cuts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pwlv {

namespace {

void push(LinearConstraint& c, int var, double coef) {
  if (coef != 0.0) c.terms.push_back({var, coef});
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

QueryPoint make_query(const std::vector<double>& lp_point, const VarBinding& bind) {
  QueryPoint q;
  q.x.reserve(bind.x.size());
  for (int v : bind.x) q.x.push_back(lp_point[v]);
  q.y = lp_point[bind.y];
  q.z.reserve(bind.z.size());
  double sum = 0.0;
  for (int v : bind.z) {
    q.z.push_back(clamp01(lp_point[v]));
    sum += q.z.back();
  }
  if (bind.z.size() >= 2 && sum > 0.0 && std::abs(sum - 1.0) > 1e-15)
    for (double& v : q.z) v /= sum;
  return q;
}

double row_violation_at(const LinearConstraint& row, const QueryPoint& q, const VarBinding& bind) {
  auto value_of = [&](int var) -> double {
    if (var == bind.y) return q.y;
    for (size_t k = 0; k < bind.z.size(); ++k)
      if (bind.z[k] == var) return q.z[k];
    for (size_t i = 0; i < bind.x.size(); ++i)
      if (bind.x[i] == var) return q.x[i];
    throw ModelError("row references a variable outside the binding");
  };
  double lhs = 0.0;
  for (const auto& t : row.terms) lhs += t.coef * value_of(t.var);
  return row.sense == Sense::GE ? row.rhs - lhs : lhs - row.rhs;
}

std::string subset_witness(const std::vector<char>& in_set) {
  std::string s = "I:";
  for (char c : in_set) s += c ? '1' : '0';
  return s;
}

std::string mapping_witness(const std::vector<int>& mapping) {
  std::string s = "J:";
  for (size_t i = 0; i < mapping.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(mapping[i]);
  }
  return s;
}

LinearConstraint relu_member_row(const NeuronContext& ctx, const std::vector<int>& choice,
                                 const VarBinding& bind, const std::string& name) {
  const AffineFunc& f = ctx.pieces[0];
  LinearConstraint c;
  push(c, bind.y, 1.0);
  double zc = -f.b;
  double rhs = 0.0;
  for (size_t b = 0; b < ctx.domain.blocks.size(); ++b) {
    const auto& blk = ctx.domain.blocks[b];
    if (blk.simplex) {
      const auto& order = ctx.simplex_order[b];
      int J = choice[b];
      double wJ = f.w[blk.offset + order[J - 1]];
      for (int pos = J; pos < blk.p; ++pos) {
        int j = order[pos];
        push(c, bind.x[blk.offset + j], -(f.w[blk.offset + j] - wJ));
      }
      zc -= wJ;
    } else {
      int i = blk.offset;
      double lo = f.w[i] >= 0 ? blk.lo : blk.hi;
      double hi = f.w[i] >= 0 ? blk.hi : blk.lo;
      if (choice[b] == 1) {
        push(c, bind.x[i], -f.w[i]);
        zc -= f.w[i] * lo;
        rhs += -f.w[i] * lo;
      } else {
        zc -= f.w[i] * hi;
      }
    }
  }
  push(c, bind.z[0], zc);
  c.sense = Sense::LE;
  c.rhs = rhs;
  c.name = name;
  return c;
}

LinearConstraint maxd_member_row(const NeuronContext& ctx, const std::vector<int>& mapping,
                                 const VarBinding& bind, const std::string& name) {
  const int d = ctx.num_pieces();
  const int n = ctx.dim();
  LinearConstraint c;
  push(c, bind.y, 1.0);
  std::vector<double> zc(d, 0.0);
  for (int k = 0; k < d; ++k) zc[k] = -ctx.pieces[k].b;
  for (int i = 0; i < n; ++i) {
    const auto& blk = ctx.domain.blocks[i];
    int l = mapping[i];
    push(c, bind.x[i], -ctx.pieces[l].w[i]);
    for (int k = 0; k < d; ++k) {
      double dw = ctx.pieces[k].w[i] - ctx.pieces[l].w[i];
      zc[k] -= std::max(dw * blk.lo, dw * blk.hi);
    }
  }
  for (int k = 0; k < d; ++k) push(c, bind.z[k], zc[k]);
  c.sense = Sense::LE;
  c.rhs = 0.0;
  c.name = name;
  return c;
}

LinearConstraint leaky_member_row(const NeuronContext& ctx, const std::vector<char>& in_set,
                                  const VarBinding& bind, const std::string& name) {
  const AffineFunc& f = ctx.pieces[0];
  const double a = ctx.alpha;
  LinearConstraint c;
  push(c, bind.y, 1.0);
  // y <= sum_{i in I} w_i (x_i - lo_i (1-z)) + (b + sum_{i not in I} w_i hi_i) z
  //      + a [ sum_{i not in I} w_i (x_i - hi_i z) + (b + sum_{i in I} w_i lo_i)(1-z) ]
  double zc = -(1 - a) * f.b;
  double rhs = a * f.b;
  for (int i = 0; i < ctx.dim(); ++i) {
    const auto& blk = ctx.domain.blocks[i];
    double lo = f.w[i] >= 0 ? blk.lo : blk.hi;
    double hi = f.w[i] >= 0 ? blk.hi : blk.lo;
    if (in_set[i]) {
      push(c, bind.x[i], -f.w[i]);
      zc -= (1 - a) * f.w[i] * lo;
      rhs += -(1 - a) * f.w[i] * lo;
    } else {
      push(c, bind.x[i], -a * f.w[i]);
      zc -= (1 - a) * f.w[i] * hi;
    }
  }
  push(c, bind.z[0], zc);
  c.sense = Sense::LE;
  c.rhs = rhs;
  c.name = name;
  return c;
}

LinearConstraint clipped_member_row(const NeuronContext& ctx, const std::vector<char>& in_set,
                                    bool upper_family, const VarBinding& bind,
                                    const std::string& name) {
  const AffineFunc& f = ctx.pieces[0];
  LinearConstraint c;
  push(c, bind.y, 1.0);
  int z1 = bind.z[0], z2 = bind.z[1], z3 = bind.z[2];
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;  // z coefficients of the bound side
  if (upper_family) {
    // y <= sum_I w_i x_i + (b + sum_!I w_i hi_i)(z2+z3) - (sum_I w_i lo_i) z1
    c2 = f.b;
    c3 = f.b;
    for (int i = 0; i < ctx.dim(); ++i) {
      const auto& blk = ctx.domain.blocks[i];
      double lo = f.w[i] >= 0 ? blk.lo : blk.hi;
      double hi = f.w[i] >= 0 ? blk.hi : blk.lo;
      if (in_set[i]) {
        push(c, bind.x[i], -f.w[i]);
        c1 -= f.w[i] * lo;
      } else {
        c2 += f.w[i] * hi;
        c3 += f.w[i] * hi;
      }
    }
    push(c, z1, -c1);
    push(c, z2, -c2);
    push(c, z3, -c3);
    c.sense = Sense::LE;
  } else {
    // y >= sum_I w_i x_i + (b + sum_!I w_i lo_i)(z1+z2) - (sum_I w_i hi_i - C) z3
    c1 = f.b;
    c2 = f.b;
    c3 = ctx.cap;
    for (int i = 0; i < ctx.dim(); ++i) {
      const auto& blk = ctx.domain.blocks[i];
      double lo = f.w[i] >= 0 ? blk.lo : blk.hi;
      double hi = f.w[i] >= 0 ? blk.hi : blk.lo;
      if (in_set[i]) {
        push(c, bind.x[i], -f.w[i]);
        c3 -= f.w[i] * hi;
      } else {
        c1 += f.w[i] * lo;
        c2 += f.w[i] * lo;
      }
    }
    push(c, z1, -c1);
    push(c, z2, -c2);
    push(c, z3, -c3);
    c.sense = Sense::GE;
  }
  c.rhs = 0.0;
  c.name = name;
  return c;
}

std::optional<Cut> separate_relu_ideal(const QueryPoint& q, const NeuronContext& ctx,
                                       const VarBinding& bind) {
  const AffineFunc& f = ctx.pieces[0];
  const double z = clamp01(q.z[0]);
  double rhs = f.b * z;
  std::vector<int> choice(ctx.domain.blocks.size(), 2);
  std::vector<char> in_set(ctx.dim(), 0);
  for (int i = 0; i < ctx.dim(); ++i) {
    const auto& blk = ctx.domain.blocks[i];
    double lo = f.w[i] >= 0 ? blk.lo : blk.hi;
    double hi = f.w[i] >= 0 ? blk.hi : blk.lo;
    if (f.w[i] * q.x[i] < f.w[i] * (lo * (1 - z) + hi * z)) {
      choice[i] = 1;
      in_set[i] = 1;
      rhs += f.w[i] * (q.x[i] - lo * (1 - z));
    } else {
      rhs += f.w[i] * hi * z;
    }
  }
  double viol = q.y - rhs;
  if (viol <= kCutTol) return std::nullopt;
  Cut cut;
  cut.family = FamilyKind::ReluIdeal;
  cut.witness = subset_witness(in_set);
  cut.row = relu_member_row(ctx, choice, bind, "cut");
  cut.violation = row_violation_at(cut.row, q, bind);
  return cut;
}

std::optional<Cut> separate_onehot_relu(const QueryPoint& q, const NeuronContext& ctx,
                                        const VarBinding& bind) {
  const AffineFunc& f = ctx.pieces[0];
  const double z = clamp01(q.z[0]);
  double rhs = f.b * z;
  std::vector<int> choice(ctx.domain.blocks.size(), 0);
  for (size_t b = 0; b < ctx.domain.blocks.size(); ++b) {
    const auto& blk = ctx.domain.blocks[b];
    if (blk.simplex) {
      const auto& order = ctx.simplex_order[b];
      // term(J) = w_J z + suffix of (w_j - w_J) x_j; suffix sums give O(p)
      double suf_wx = 0.0, suf_x = 0.0;
      double best = kInf;
      int bestJ = 1;
      std::vector<double> term(blk.p);
      for (int J = blk.p; J >= 1; --J) {
        double wJ = f.w[blk.offset + order[J - 1]];
        term[J - 1] = wJ * z + suf_wx - wJ * suf_x;
        double xJ = q.x[blk.offset + order[J - 1]];
        suf_wx += wJ * xJ;
        suf_x += xJ;
      }
      for (int J = 1; J <= blk.p; ++J) {
        if (term[J - 1] < best) {
          best = term[J - 1];
          bestJ = J;
        }
      }
      choice[b] = bestJ;
      rhs += best;
    } else {
      int i = blk.offset;
      double lo = f.w[i] >= 0 ? blk.lo : blk.hi;
      double hi = f.w[i] >= 0 ? blk.hi : blk.lo;
      double t1 = f.w[i] * (q.x[i] - lo * (1 - z));
      double t2 = f.w[i] * hi * z;
      if (t1 < t2) {
        choice[b] = 1;
        rhs += t1;
      } else {
        choice[b] = 2;
        rhs += t2;
      }
    }
  }
  double viol = q.y - rhs;
  if (viol <= kCutTol) return std::nullopt;
  Cut cut;
  cut.family = FamilyKind::OneHotRelu;
  cut.witness = mapping_witness(choice);
  cut.row = relu_member_row(ctx, choice, bind, "cut");
  cut.violation = row_violation_at(cut.row, q, bind);
  return cut;
}

std::optional<Cut> separate_max_d_box(const QueryPoint& q, const NeuronContext& ctx,
                                      const VarBinding& bind) {
  const int d = ctx.num_pieces();
  const int n = ctx.dim();
  std::vector<int> mapping(n, 0);
  double rhs = 0.0;
  for (int k = 0; k < d; ++k) rhs += ctx.pieces[k].b * q.z[k];

  for (int i = 0; i < n; ++i) {
    const auto& blk = ctx.domain.blocks[i];
    const auto& order = ctx.coord_piece_order[i];
    // prefix/suffix sums over the sorted piece order make each candidate O(1)
    std::vector<double> pref_wl(d + 1, 0.0), suf_wu(d + 2, 0.0), pref_z(d + 1, 0.0),
        suf_z(d + 2, 0.0);
    for (int pos = 1; pos <= d; ++pos) {
      int k = order[pos - 1];
      pref_wl[pos] = pref_wl[pos - 1] + ctx.pieces[k].w[i] * blk.lo * q.z[k];
      pref_z[pos] = pref_z[pos - 1] + q.z[k];
    }
    for (int pos = d; pos >= 1; --pos) {
      int k = order[pos - 1];
      suf_wu[pos] = suf_wu[pos + 1] + ctx.pieces[k].w[i] * blk.hi * q.z[k];
      suf_z[pos] = suf_z[pos + 1] + q.z[k];
    }
    double best = kInf;
    int best_piece = 0;
    for (int pos = 1; pos <= d; ++pos) {
      int l = order[pos - 1];
      double wl = ctx.pieces[l].w[i];
      double val = wl * q.x[i] + pref_wl[pos] - wl * blk.lo * pref_z[pos] + suf_wu[pos + 1] -
                   wl * blk.hi * suf_z[pos + 1];
      if (val < best || (val == best && l < best_piece)) {
        best = val;
        best_piece = l;
      }
    }
    mapping[i] = best_piece;
    rhs += best;
  }

  double viol = q.y - rhs;
  if (viol <= kCutTol) return std::nullopt;
  Cut cut;
  cut.family = FamilyKind::MaxDBox;
  cut.witness = mapping_witness(mapping);
  cut.row = maxd_member_row(ctx, mapping, bind, "cut");
  cut.violation = row_violation_at(cut.row, q, bind);
  return cut;
}

std::optional<Cut> separate_leaky(const QueryPoint& q, const NeuronContext& ctx,
                                  const VarBinding& bind) {
  if (!(ctx.alpha > 0.0 && ctx.alpha < 1.0)) throw ModelError("leaky alpha outside (0,1)");
  const AffineFunc& f = ctx.pieces[0];
  const double a = ctx.alpha;
  const double z = clamp01(q.z[0]);
  double rhs = f.b * z + a * f.b * (1 - z);
  std::vector<char> in_set(ctx.dim(), 0);
  for (int i = 0; i < ctx.dim(); ++i) {
    const auto& blk = ctx.domain.blocks[i];
    double lo = f.w[i] >= 0 ? blk.lo : blk.hi;
    double hi = f.w[i] >= 0 ? blk.hi : blk.lo;
    double t_in = f.w[i] * q.x[i] - (1 - a) * f.w[i] * lo * (1 - z);
    double t_out = a * f.w[i] * q.x[i] + (1 - a) * f.w[i] * hi * z;
    if (t_in < t_out) {
      in_set[i] = 1;
      rhs += t_in;
    } else {
      rhs += t_out;
    }
  }
  double viol = q.y - rhs;
  if (viol <= kCutTol) return std::nullopt;
  Cut cut;
  cut.family = FamilyKind::Leaky;
  cut.witness = subset_witness(in_set);
  cut.row = leaky_member_row(ctx, in_set, bind, "cut");
  cut.violation = row_violation_at(cut.row, q, bind);
  return cut;
}

std::vector<Cut> separate_clipped(const QueryPoint& q, const NeuronContext& ctx,
                                  const VarBinding& bind) {
  if (!(ctx.cap > 0.0)) throw ModelError("clipped cap must be positive");
  const AffineFunc& f = ctx.pieces[0];
  const double C = ctx.cap;
  double z1 = q.z[0], z2 = q.z[1], z3 = q.z[2];
  std::vector<Cut> out;

  auto phi = [&](const std::vector<char>& in) {
    double s = f.b;
    for (int i = 0; i < ctx.dim(); ++i) {
      const auto& blk = ctx.domain.blocks[i];
      double lo = f.w[i] >= 0 ? blk.lo : blk.hi;
      double hi = f.w[i] >= 0 ? blk.hi : blk.lo;
      s += in[i] ? f.w[i] * lo : f.w[i] * hi;
    }
    return s;
  };

  // upper family: minimize the bound
  {
    double rhs = f.b * (z2 + z3);
    std::vector<char> in_set(ctx.dim(), 0);
    for (int i = 0; i < ctx.dim(); ++i) {
      const auto& blk = ctx.domain.blocks[i];
      double lo = f.w[i] >= 0 ? blk.lo : blk.hi;
      double hi = f.w[i] >= 0 ? blk.hi : blk.lo;
      double t_in = f.w[i] * q.x[i] - f.w[i] * lo * z1;
      double t_out = f.w[i] * hi * (z2 + z3);
      if (t_in < t_out) {
        in_set[i] = 1;
        rhs += t_in;
      } else {
        rhs += t_out;
      }
    }
    if (q.y - rhs > kCutTol) {
      Cut cut;
      cut.family = FamilyKind::Clipped;
      cut.witness = "u," + subset_witness(in_set);
      cut.row = clipped_member_row(ctx, in_set, true, bind, "cut");
      cut.violation = row_violation_at(cut.row, q, bind);
      cut.facet = phi(in_set) < C;
      out.push_back(std::move(cut));
    }
  }

  // lower family: maximize the bound
  {
    double rhs = f.b * (z1 + z2) + C * z3;
    std::vector<char> in_set(ctx.dim(), 0);
    for (int i = 0; i < ctx.dim(); ++i) {
      const auto& blk = ctx.domain.blocks[i];
      double lo = f.w[i] >= 0 ? blk.lo : blk.hi;
      double hi = f.w[i] >= 0 ? blk.hi : blk.lo;
      double t_in = f.w[i] * q.x[i] - f.w[i] * hi * z3;
      double t_out = f.w[i] * lo * (z1 + z2);
      if (t_in > t_out) {
        in_set[i] = 1;
        rhs += t_in;
      } else {
        rhs += t_out;
      }
    }
    if (rhs - q.y > kCutTol) {
      Cut cut;
      cut.family = FamilyKind::Clipped;
      cut.witness = "l," + subset_witness(in_set);
      cut.row = clipped_member_row(ctx, in_set, false, bind, "cut");
      cut.violation = row_violation_at(cut.row, q, bind);
      std::vector<char> comp(ctx.dim());
      for (int i = 0; i < ctx.dim(); ++i) comp[i] = !in_set[i];
      cut.facet = phi(comp) > 0;
      out.push_back(std::move(cut));
    }
  }
  return out;
}

std::optional<Cut> separate_ideal_dual_subgradient(const QueryPoint& q, const NeuronContext& ctx,
                                                   const Polytope& P, const VarBinding& bind,
                                                   int iters) {
  const int d = ctx.num_pieces();
  const int n = ctx.dim();

  // empty attainment regions turn into z_k = 0 feasibility cuts
  std::vector<char> empty(d, 0);
  {
    std::vector<double> zero(n, 0.0);
    for (int k = 0; k < d; ++k) {
      RegionLp r = region_lp(P, ctx.pieces, k, zero, true);
      if (r.status == LpStatus::Infeasible) empty[k] = 1;
      else if (r.status != LpStatus::Optimal)
        throw ModelError("dual separation: inner LP failed");
    }
  }
  for (int k = 0; k < d; ++k) {
    if (!empty[k]) continue;
    if (q.z[k] > kCutTol) {
      Cut cut;
      cut.family = FamilyKind::IdealDualSubgradient;
      cut.witness = "prune:" + std::to_string(k);
      LinearConstraint c;
      push(c, bind.z[k], 1.0);
      c.sense = Sense::LE;
      c.rhs = 0.0;
      c.name = "cut";
      cut.row = std::move(c);
      cut.violation = q.z[k];
      return cut;
    }
  }

  // L(alpha) = alpha.x + sum_k z_k (max_{D|k} (w^k - alpha).x + b^k)
  auto evaluate = [&](const std::vector<double>& alpha, std::vector<double>& grad) {
    double L = 0.0;
    for (int i = 0; i < n; ++i) L += alpha[i] * q.x[i];
    grad.assign(q.x.begin(), q.x.end());
    for (int k = 0; k < d; ++k) {
      if (empty[k] || q.z[k] <= 1e-12) continue;
      std::vector<double> obj(n);
      for (int i = 0; i < n; ++i) obj[i] = ctx.pieces[k].w[i] - alpha[i];
      RegionLp r = region_lp(P, ctx.pieces, k, obj, true);
      if (r.status != LpStatus::Optimal) throw ModelError("dual separation: inner LP failed");
      L += q.z[k] * (r.value + ctx.pieces[k].b);
      for (int i = 0; i < n; ++i) grad[i] -= q.z[k] * r.x[i];
    }
    return L;
  };

  std::vector<double> alpha(n, 0.0);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < n; ++i) alpha[i] += q.z[k] * ctx.pieces[k].w[i];

  std::vector<double> best_alpha = alpha;
  double best_L = kInf;
  std::vector<double> grad;
  for (int t = 1; t <= iters; ++t) {
    double L = evaluate(alpha, grad);
    if (L < best_L) {
      best_L = L;
      best_alpha = alpha;
    }
    double step = 1.0 / std::sqrt(static_cast<double>(t));
    for (int i = 0; i < n; ++i) alpha[i] -= step * grad[i];
  }

  if (q.y - best_L <= kCutTol) return std::nullopt;

  // full coefficient set at the best multiplier
  LinearConstraint c;
  push(c, bind.y, 1.0);
  for (int i = 0; i < n; ++i) push(c, bind.x[i], -best_alpha[i]);
  for (int k = 0; k < d; ++k) {
    if (empty[k]) continue;  // z_k is pinned to zero by the feasibility cut
    std::vector<double> obj(n);
    for (int i = 0; i < n; ++i) obj[i] = ctx.pieces[k].w[i] - best_alpha[i];
    RegionLp r = region_lp(P, ctx.pieces, k, obj, true);
    if (r.status != LpStatus::Optimal) throw ModelError("dual separation: inner LP failed");
    push(c, bind.z[k], -(r.value + ctx.pieces[k].b));
  }
  c.sense = Sense::LE;
  c.rhs = 0.0;
  c.name = "cut";

  Cut cut;
  cut.family = FamilyKind::IdealDualSubgradient;
  std::ostringstream w;
  w << "alpha:";
  for (int i = 0; i < n; ++i) w << (i ? "," : "") << best_alpha[i];
  cut.witness = w.str();
  cut.row = std::move(c);
  cut.violation = row_violation_at(cut.row, q, bind);
  if (cut.violation <= kCutTol) return std::nullopt;
  return cut;
}

KnapsackResult knapsack_transport_d2(const std::vector<double>& x, const std::array<double, 2>& z,
                                     const std::vector<double>& w1, const std::vector<double>& w2) {
  const int p = static_cast<int>(x.size());
  if (w1.size() != x.size() || w2.size() != x.size())
    throw ModelError("knapsack_transport_d2: length mismatch");
  double sx = 0.0;
  for (double v : x) sx += v;
  if (std::abs(sx - 1.0) > 1e-9 || std::abs(z[0] + z[1] - 1.0) > 1e-9)
    throw ModelError("knapsack_transport_d2: marginals not normalized");

  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return w1[a] - w2[a] < w1[b] - w2[b]; });

  double base = 0.0;
  for (int j = 0; j < p; ++j) base += w2[j] * x[j];

  // running suffix sums of wtilde_j x_j and x_j over the sorted order
  std::vector<double> suf_wx(p + 2, 0.0), suf_x(p + 2, 0.0);
  for (int pos = p; pos >= 1; --pos) {
    int j = order[pos - 1];
    double wt = w1[j] - w2[j];
    suf_wx[pos] = suf_wx[pos + 1] + wt * x[j];
    suf_x[pos] = suf_x[pos + 1] + x[j];
  }
  KnapsackResult res;
  res.value = kInf;
  for (int J = 1; J <= p; ++J) {
    int j = order[J - 1];
    double wt = w1[j] - w2[j];
    double v = wt * z[0] + suf_wx[J + 1] - wt * suf_x[J + 1];
    if (v < res.value) {
      res.value = v;
      res.argmin = J;
    }
  }
  res.value += base;
  return res;
}

KnapsackResult knapsack_transport_p2(const std::array<double, 2>& x, const std::vector<double>& z,
                                     const std::vector<std::array<double, 2>>& pieces) {
  const int d = static_cast<int>(z.size());
  if (pieces.size() != z.size()) throw ModelError("knapsack_transport_p2: length mismatch");
  double sz = 0.0;
  for (double v : z) sz += v;
  if (std::abs(sz - 1.0) > 1e-9 || std::abs(x[0] + x[1] - 1.0) > 1e-9)
    throw ModelError("knapsack_transport_p2: marginals not normalized");

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return pieces[a][0] - pieces[a][1] < pieces[b][0] - pieces[b][1];
  });

  // prefix of w^k_2 z_k, suffix of w^k_1 z_k and z_k over the sorted order
  std::vector<double> pref_w2(d + 1, 0.0), suf_w1(d + 2, 0.0), suf_z(d + 2, 0.0);
  for (int pos = 1; pos <= d; ++pos) {
    int k = order[pos - 1];
    pref_w2[pos] = pref_w2[pos - 1] + pieces[k][1] * z[k];
  }
  for (int pos = d; pos >= 1; --pos) {
    int k = order[pos - 1];
    suf_w1[pos] = suf_w1[pos + 1] + pieces[k][0] * z[k];
    suf_z[pos] = suf_z[pos + 1] + z[k];
  }
  KnapsackResult res;
  res.value = kInf;
  for (int K = 1; K <= d; ++K) {
    int k = order[K - 1];
    double wt = pieces[k][0] - pieces[k][1];
    double v = wt * x[0] + pref_w2[K] + suf_w1[K + 1] - wt * suf_z[K + 1];
    if (v < res.value) {
      res.value = v;
      res.argmin = K;
    }
  }
  return res;
}

std::vector<Cut> separate_family(const MipModel& model, const CutFamily& fam,
                                 const std::vector<double>& lp_point) {
  const NeuronContext& ctx = model.contexts[fam.context];
  QueryPoint q = make_query(lp_point, fam.bind);
  std::vector<Cut> out;
  switch (fam.kind) {
    case FamilyKind::ReluIdeal: {
      auto c = separate_relu_ideal(q, ctx, fam.bind);
      if (c) out.push_back(std::move(*c));
      break;
    }
    case FamilyKind::OneHotRelu: {
      auto c = separate_onehot_relu(q, ctx, fam.bind);
      if (c) out.push_back(std::move(*c));
      break;
    }
    case FamilyKind::MaxDBox: {
      auto c = separate_max_d_box(q, ctx, fam.bind);
      if (c) out.push_back(std::move(*c));
      break;
    }
    case FamilyKind::Leaky: {
      auto c = separate_leaky(q, ctx, fam.bind);
      if (c) out.push_back(std::move(*c));
      break;
    }
    case FamilyKind::Clipped: {
      out = separate_clipped(q, ctx, fam.bind);
      break;
    }
    case FamilyKind::IdealDualSubgradient: {
      Polytope P = domain_polytope(ctx.domain);
      auto c = separate_ideal_dual_subgradient(q, ctx, P, fam.bind);
      if (c) out.push_back(std::move(*c));
      break;
    }
  }
  return out;
}

}  // namespace pwlv

#include "pwlv/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace pwlv {

namespace {

constexpr int kFamilyGuard = 1 << 14;
constexpr long long kPatternGuard = 1 << 20;

void push(LinearConstraint& c, int var, double coef) {
  if (coef != 0.0) c.terms.push_back({var, coef});
}

}  // namespace

double support_function_maxgraph(const NeuronContext& ctx, const Domain& dom,
                                 const SupportQuery& q, const std::vector<int>* active) {
  Polytope P = domain_polytope(dom);
  const int n = dom.dim();
  const int d = ctx.num_pieces();
  std::vector<int> pieces;
  if (active) pieces = *active;
  else {
    pieces.resize(d);
    for (int k = 0; k < d; ++k) pieces[k] = k;
  }

  double best = -kInf;
  for (int k : pieces) {
    std::vector<double> obj(n);
    for (int i = 0; i < n; ++i) obj[i] = q.cx[i] + q.cy * ctx.pieces[k].w[i];
    RegionLp r = region_lp(P, ctx.pieces, k, obj, true);
    if (r.status == LpStatus::Infeasible) continue;  // empty attainment region
    if (r.status != LpStatus::Optimal) throw ModelError("support LP failed");
    double v = r.value + q.cy * ctx.pieces[k].b;
    if (!q.cz.empty()) v += q.cz[k];
    best = std::max(best, v);
  }
  if (best == -kInf) throw ModelError("support: no piece attains the max");
  return best;
}

double enumerate_activation_optimum(const Network& net, const Domain& dom,
                                    const std::vector<double>& objective,
                                    const std::vector<Interval>* coord_clamp) {
  // nonlinear neurons and their per-pattern choice counts
  struct Slot {
    int layer, neuron;
    int choices;
  };
  std::vector<Slot> slots;
  long long patterns = 1;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    for (size_t j = 0; j < net.layers[i].neurons.size(); ++j) {
      const Neuron& nr = net.layers[i].neurons[j];
      int c = 0;
      switch (nr.act.kind) {
        case ActKind::Linear: break;
        case ActKind::Relu:
        case ActKind::Leaky: c = 2; break;
        case ActKind::Clipped: c = 3; break;
        case ActKind::MaxOfD: c = nr.act.pieces; break;
      }
      if (c > 0) {
        slots.push_back({static_cast<int>(i), static_cast<int>(j), c});
        patterns *= c;
        if (patterns > kPatternGuard) throw GuardError("activation enumeration guard exceeded");
      }
    }
  }

  // variable layout: inputs, then every layer's outputs
  std::vector<int> layer_base(net.layers.size());
  int nv = dom.dim();
  for (size_t i = 0; i < net.layers.size(); ++i) {
    layer_base[i] = nv;
    nv += net.layers[i].out_dim();
  }
  if (static_cast<int>(objective.size()) != nv)
    throw ModelError("objective length does not match the network layout");

  LpProblem base;
  base.maximize = true;
  auto boxes = dom.coordinate_boxes();
  if (coord_clamp) {
    for (int i = 0; i < dom.dim(); ++i) {
      boxes[i].lo = std::max(boxes[i].lo, (*coord_clamp)[i].lo);
      boxes[i].hi = std::min(boxes[i].hi, (*coord_clamp)[i].hi);
    }
  }
  for (int i = 0; i < dom.dim(); ++i) base.add_var(boxes[i].lo, boxes[i].hi, objective[i]);
  for (size_t i = 0; i < net.layers.size(); ++i)
    for (int j = 0; j < net.layers[i].out_dim(); ++j)
      base.add_var(-kInf, kInf, objective[layer_base[i] + j]);
  for (const auto& blk : dom.blocks) {
    if (!blk.simplex) continue;
    LinearConstraint c;
    for (int j = 0; j < blk.p; ++j) c.terms.push_back({blk.offset + j, 1.0});
    c.sense = Sense::EQ;
    c.rhs = 1.0;
    base.add_row(std::move(c));
  }

  auto in_var = [&](int layer, int i) {
    return layer == 0 ? i : layer_base[layer - 1] + i;
  };

  // linear neurons are pattern-independent
  for (size_t i = 0; i < net.layers.size(); ++i) {
    for (size_t j = 0; j < net.layers[i].neurons.size(); ++j) {
      const Neuron& nr = net.layers[i].neurons[j];
      if (nr.act.kind != ActKind::Linear) continue;
      LinearConstraint c;
      push(c, layer_base[i] + static_cast<int>(j), 1.0);
      for (int t = 0; t < nr.pieces[0].dim(); ++t)
        push(c, in_var(static_cast<int>(i), t), -nr.pieces[0].w[t]);
      c.sense = Sense::EQ;
      c.rhs = nr.pieces[0].b;
      base.add_row(std::move(c));
    }
  }

  double best = -kInf;
  std::vector<int> pick(slots.size(), 0);
  for (long long pat = 0; pat < patterns; ++pat) {
    long long rem = pat;
    for (size_t s = 0; s < slots.size(); ++s) {
      pick[s] = static_cast<int>(rem % slots[s].choices);
      rem /= slots[s].choices;
    }
    LpProblem lp = base;
    for (size_t s = 0; s < slots.size(); ++s) {
      const Neuron& nr = net.layers[slots[s].layer].neurons[slots[s].neuron];
      int li = slots[s].layer;
      int yv = layer_base[li] + slots[s].neuron;
      const AffineFunc& f = nr.pieces[0];
      auto eq_row = [&](const AffineFunc& g, double scale) {
        // y = scale * g(x_in)
        LinearConstraint c;
        push(c, yv, 1.0);
        for (int t = 0; t < g.dim(); ++t) push(c, in_var(li, t), -scale * g.w[t]);
        c.sense = Sense::EQ;
        c.rhs = scale * g.b;
        lp.add_row(std::move(c));
      };
      auto f_row = [&](Sense sense, double rhs_shift) {
        // f(x_in) sense rhs_shift
        LinearConstraint c;
        for (int t = 0; t < f.dim(); ++t) push(c, in_var(li, t), f.w[t]);
        c.sense = sense;
        c.rhs = rhs_shift - f.b;
        lp.add_row(std::move(c));
      };
      switch (nr.act.kind) {
        case ActKind::Relu:
          if (pick[s] == 1) {
            eq_row(f, 1.0);
            f_row(Sense::GE, 0.0);
          } else {
            eq_row(AffineFunc{std::vector<double>(f.dim(), 0.0), 0.0}, 1.0);
            f_row(Sense::LE, 0.0);
          }
          break;
        case ActKind::Leaky:
          if (pick[s] == 1) {
            eq_row(f, 1.0);
            f_row(Sense::GE, 0.0);
          } else {
            eq_row(f, nr.act.alpha);
            f_row(Sense::LE, 0.0);
          }
          break;
        case ActKind::Clipped:
          if (pick[s] == 0) {
            eq_row(AffineFunc{std::vector<double>(f.dim(), 0.0), 0.0}, 1.0);
            f_row(Sense::LE, 0.0);
          } else if (pick[s] == 1) {
            eq_row(f, 1.0);
            f_row(Sense::GE, 0.0);
            f_row(Sense::LE, nr.act.cap);
          } else {
            eq_row(AffineFunc{std::vector<double>(f.dim(), 0.0), nr.act.cap}, 1.0);
            f_row(Sense::GE, nr.act.cap);
          }
          break;
        case ActKind::MaxOfD: {
          int k = pick[s];
          eq_row(nr.pieces[k], 1.0);
          for (int l = 0; l < static_cast<int>(nr.pieces.size()); ++l) {
            if (l == k) continue;
            LinearConstraint c;
            for (int t = 0; t < f.dim(); ++t)
              push(c, in_var(li, t), nr.pieces[k].w[t] - nr.pieces[l].w[t]);
            c.sense = Sense::GE;
            c.rhs = nr.pieces[l].b - nr.pieces[k].b;
            lp.add_row(std::move(c));
          }
          break;
        }
        default: break;
      }
    }
    LpResult r = solve_lp(lp);
    if (r.status == LpStatus::Infeasible) continue;
    if (r.status != LpStatus::Optimal) throw ModelError("pattern LP failed");
    best = std::max(best, r.objective);
  }
  if (best == -kInf) throw ModelError("no feasible activation pattern");
  return best;
}

std::vector<double> flatten_objective(const MipModel& model, const Network& net) {
  std::vector<int> layer_base(net.layers.size());
  int nv = net.input_dim;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    layer_base[i] = nv;
    nv += net.layers[i].out_dim();
  }
  std::vector<double> out(nv, 0.0);
  for (const auto& t : model.objective.terms) {
    const Variable& v = model.vars[t.var];
    if (v.tag == Variable::Tag::Input) {
      out[v.neuron] += t.coef;
    } else if (v.tag == Variable::Tag::Output) {
      out[layer_base[v.layer - 1] + v.neuron] += t.coef;
    } else {
      throw ModelError("objective touches auxiliary variables; cannot flatten");
    }
  }
  return out;
}

double transport_lp(const std::vector<double>& x, const std::vector<double>& z,
                    const std::vector<std::vector<double>>& weights) {
  const int p = static_cast<int>(x.size());
  const int d = static_cast<int>(z.size());
  double sx = 0.0, sz = 0.0;
  for (double v : x) sx += v;
  for (double v : z) sz += v;
  if (std::abs(sx - 1.0) > 1e-9 || std::abs(sz - 1.0) > 1e-9)
    throw ModelError("transport_lp: marginals not normalized");
  if (static_cast<int>(weights.size()) != d) throw ModelError("transport_lp: weight shape");

  LpProblem lp;
  lp.maximize = true;
  for (int k = 0; k < d; ++k) {
    if (static_cast<int>(weights[k].size()) != p) throw ModelError("transport_lp: weight shape");
    // flows live on [0, inf); the marginal equalities cap them, and keeping the
    // bound side trivial makes the dual audit the plain row-multiplier sum
    for (int j = 0; j < p; ++j) lp.add_var(0.0, kInf, weights[k][j]);
  }
  for (int j = 0; j < p; ++j) {
    LinearConstraint c;
    for (int k = 0; k < d; ++k) c.terms.push_back({k * p + j, 1.0});
    c.sense = Sense::EQ;
    c.rhs = x[j];
    lp.add_row(std::move(c));
  }
  for (int k = 0; k < d; ++k) {
    LinearConstraint c;
    for (int j = 0; j < p; ++j) c.terms.push_back({k * p + j, 1.0});
    c.sense = Sense::EQ;
    c.rhs = z[k];
    lp.add_row(std::move(c));
  }
  LpResult r = solve_lp(lp);
  if (r.status != LpStatus::Optimal) throw ModelError("transport_lp failed");

  // duality audit: min sum alpha_j x_j + sum gamma_k z_k, alpha_j + gamma_k >= w^k_j
  double dual = 0.0;
  for (int j = 0; j < p; ++j) dual += r.duals[j] * x[j];
  for (int k = 0; k < d; ++k) dual += r.duals[p + k] * z[k];
  if (std::abs(dual - r.objective) > 1e-8)
    throw ModelError("transport_lp: duality residual above 1e-8");
  return r.objective;
}

namespace {

// enumerates choice vectors (one value per slot with per-slot cardinality)
bool next_choice(std::vector<int>& v, const std::vector<int>& card, const std::vector<int>& base) {
  for (size_t i = 0; i < v.size(); ++i) {
    if (++v[i] < base[i] + card[i]) return true;
    v[i] = base[i];
  }
  return false;
}

}  // namespace

std::vector<LinearConstraint> enumerate_family_rows(const NeuronContext& ctx,
                                                    const VarBinding& bind, FamilyKind family) {
  std::vector<LinearConstraint> rows;
  const int n = ctx.dim();
  switch (family) {
    case FamilyKind::ReluIdeal:
    case FamilyKind::OneHotRelu: {
      size_t nb = ctx.domain.blocks.size();
      std::vector<int> card(nb), base(nb, 1), v(nb, 1);
      long long total = 1;
      for (size_t b = 0; b < nb; ++b) {
        card[b] = ctx.domain.blocks[b].simplex ? ctx.domain.blocks[b].p : 2;
        total *= card[b];
        if (total > kFamilyGuard) throw GuardError("family guard exceeded");
      }
      do {
        rows.push_back(relu_member_row(ctx, v, bind, "fam"));
      } while (next_choice(v, card, base));
      break;
    }
    case FamilyKind::MaxDBox: {
      std::vector<int> card(n, ctx.num_pieces()), base(n, 0), v(n, 0);
      long long total = 1;
      for (int i = 0; i < n; ++i) {
        total *= ctx.num_pieces();
        if (total > kFamilyGuard) throw GuardError("family guard exceeded");
      }
      do {
        rows.push_back(maxd_member_row(ctx, v, bind, "fam"));
      } while (next_choice(v, card, base));
      break;
    }
    case FamilyKind::Leaky: {
      if (n > 14) throw GuardError("family guard exceeded");
      for (long long mask = 0; mask < (1LL << n); ++mask) {
        std::vector<char> in(n);
        for (int i = 0; i < n; ++i) in[i] = (mask >> i) & 1;
        rows.push_back(leaky_member_row(ctx, in, bind, "fam"));
      }
      break;
    }
    case FamilyKind::Clipped: {
      if (n > 13) throw GuardError("family guard exceeded");
      for (long long mask = 0; mask < (1LL << n); ++mask) {
        std::vector<char> in(n);
        for (int i = 0; i < n; ++i) in[i] = (mask >> i) & 1;
        rows.push_back(clipped_member_row(ctx, in, true, bind, "fam"));
        rows.push_back(clipped_member_row(ctx, in, false, bind, "fam"));
      }
      break;
    }
    case FamilyKind::IdealDualSubgradient:
      throw ModelError("dual family has no finite enumeration");
  }
  return rows;
}

SeparationTruth exhaustive_separation(const QueryPoint& q, const NeuronContext& ctx,
                                      FamilyKind family, bool clipped_lower) {
  SeparationTruth best;
  const int n = ctx.dim();

  VarBinding bind;  // local index space: x = 0..n-1, y = n, z = n+1..
  for (int i = 0; i < n; ++i) bind.x.push_back(i);
  bind.y = n;
  int zc = ctx.kind == NeuronKind::Clipped ? 3 : (ctx.kind == NeuronKind::MaxD ? ctx.num_pieces() : 1);
  for (int k = 0; k < zc; ++k) bind.z.push_back(n + 1 + k);

  switch (family) {
    case FamilyKind::ReluIdeal:
    case FamilyKind::OneHotRelu: {
      size_t nb = ctx.domain.blocks.size();
      std::vector<int> card(nb), base(nb, 1), v(nb, 1);
      long long total = 1;
      for (size_t b = 0; b < nb; ++b) {
        card[b] = ctx.domain.blocks[b].simplex ? ctx.domain.blocks[b].p : 2;
        total *= card[b];
        if (total > kFamilyGuard) throw GuardError("family guard exceeded");
      }
      do {
        LinearConstraint row = relu_member_row(ctx, v, bind, "fam");
        double viol = row_violation_at(row, q, bind);
        if (viol > best.violation) {
          best.violation = viol;
          if (family == FamilyKind::ReluIdeal) {
            std::vector<char> in(nb);
            for (size_t b = 0; b < nb; ++b) in[b] = v[b] == 1;
            best.witness = subset_witness(in);
          } else {
            best.witness = mapping_witness(v);
          }
        }
      } while (next_choice(v, card, base));
      break;
    }
    case FamilyKind::MaxDBox: {
      std::vector<int> card(n, ctx.num_pieces()), base(n, 0), v(n, 0);
      long long total = 1;
      for (int i = 0; i < n; ++i) {
        total *= ctx.num_pieces();
        if (total > kFamilyGuard) throw GuardError("family guard exceeded");
      }
      do {
        LinearConstraint row = maxd_member_row(ctx, v, bind, "fam");
        double viol = row_violation_at(row, q, bind);
        if (viol > best.violation) {
          best.violation = viol;
          best.witness = mapping_witness(v);
        }
      } while (next_choice(v, card, base));
      break;
    }
    case FamilyKind::Leaky: {
      if (n > 14) throw GuardError("family guard exceeded");
      for (long long mask = 0; mask < (1LL << n); ++mask) {
        std::vector<char> in(n);
        for (int i = 0; i < n; ++i) in[i] = (mask >> i) & 1;
        LinearConstraint row = leaky_member_row(ctx, in, bind, "fam");
        double viol = row_violation_at(row, q, bind);
        if (viol > best.violation) {
          best.violation = viol;
          best.witness = subset_witness(in);
        }
      }
      break;
    }
    case FamilyKind::Clipped: {
      if (n > 14) throw GuardError("family guard exceeded");
      for (long long mask = 0; mask < (1LL << n); ++mask) {
        std::vector<char> in(n);
        for (int i = 0; i < n; ++i) in[i] = (mask >> i) & 1;
        LinearConstraint row = clipped_member_row(ctx, in, !clipped_lower, bind, "fam");
        double viol = row_violation_at(row, q, bind);
        if (viol > best.violation) {
          best.violation = viol;
          best.witness = (clipped_lower ? "l," : "u,") + subset_witness(in);
        }
      }
      break;
    }
    case FamilyKind::IdealDualSubgradient:
      throw ModelError("dual family has no finite enumeration");
  }
  return best;
}

}  // namespace pwlv

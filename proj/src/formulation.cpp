#include "pwlv/formulation.hpp"

#include <algorithm>
#include <cmath>

#include "pwlv/cuts.hpp"

namespace pwlv {

namespace {

void require_box(const NeuronContext& ctx, const char* who) {
  if (!ctx.domain.pure_box())
    throw ModelError(std::string(who) + ": simplex blocks present (use the one-hot path)");
  for (const auto& blk : ctx.domain.blocks)
    if (!std::isfinite(blk.lo) || !std::isfinite(blk.hi))
      throw ModelError(std::string(who) + ": unbounded box");
}

Interval post_interval(const NeuronContext& ctx) {
  switch (ctx.kind) {
    case NeuronKind::Relu: {
      Interval r = ctx.piece_range[0];
      return {std::max(0.0, r.lo), std::max(0.0, r.hi)};
    }
    case NeuronKind::Leaky: {
      Interval r = ctx.piece_range[0];
      return {r.lo >= 0 ? r.lo : ctx.alpha * r.lo, r.hi >= 0 ? r.hi : ctx.alpha * r.hi};
    }
    case NeuronKind::Clipped: {
      Interval r = ctx.piece_range[0];
      return {std::min(ctx.cap, std::max(0.0, r.lo)), std::min(ctx.cap, std::max(0.0, r.hi))};
    }
    case NeuronKind::MaxD: {
      Interval out{-kInf, -kInf};
      for (const auto& r : ctx.piece_range) {
        out.lo = std::max(out.lo, r.lo);
        out.hi = std::max(out.hi, r.hi);
      }
      return out;
    }
  }
  return {0, 0};
}

int add_output_var(MipModel& m, const NeuronContext& ctx, const std::string& suffix) {
  Interval post = post_interval(ctx);
  int y = m.add_var("y_" + suffix, VarKind::Continuous, post.lo, post.hi);
  return y;
}

int add_binary(MipModel& m, const std::string& suffix, int k) {
  int z = m.add_var("z_" + suffix + "_" + std::to_string(k), VarKind::Binary, 0.0, 1.0);
  return z;
}

void push(LinearConstraint& c, int var, double coef) {
  if (coef != 0.0) c.terms.push_back({var, coef});
}

}  // namespace

Polytope domain_polytope(const Domain& dom) {
  Polytope P;
  P.bounds = dom.coordinate_boxes();
  for (size_t b = 0; b < dom.blocks.size(); ++b) {
    const auto& blk = dom.blocks[b];
    if (!blk.simplex) continue;
    LinearConstraint c;
    for (int j = 0; j < blk.p; ++j) c.terms.push_back({blk.offset + j, 1.0});
    c.sense = Sense::EQ;
    c.rhs = 1.0;
    c.name = "s_" + std::to_string(b + 1);
    P.rows.push_back(std::move(c));
  }
  return P;
}

RegionLp region_lp(const Polytope& P, const std::vector<AffineFunc>& pieces, int piece,
                   const std::vector<double>& obj, bool maximize) {
  LpProblem lp;
  lp.maximize = maximize;
  for (int i = 0; i < P.dim(); ++i) lp.add_var(P.bounds[i].lo, P.bounds[i].hi, obj[i]);
  lp.rows = P.rows;
  if (piece >= 0) {
    for (size_t l = 0; l < pieces.size(); ++l) {
      if (static_cast<int>(l) == piece) continue;
      LinearConstraint c;
      for (int i = 0; i < P.dim(); ++i)
        push(c, i, pieces[piece].w[i] - pieces[l].w[i]);
      c.sense = Sense::GE;
      c.rhs = pieces[l].b - pieces[piece].b;
      lp.add_row(std::move(c));
    }
  }
  LpResult r = pwlv::solve_lp(lp);
  RegionLp out;
  out.status = r.status;
  if (r.status == LpStatus::Optimal) {
    out.value = r.objective;
    out.x = r.x;
  }
  return out;
}

BlockResult relu_bigm(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                      const std::string& suffix) {
  const NeuronContext& ctx = m.contexts[ctx_idx];
  require_box(ctx, "relu_bigm");
  const AffineFunc& f = ctx.pieces[0];
  double mlo = ctx.piece_range[0].lo, mhi = ctx.piece_range[0].hi;

  BlockResult out;
  out.bind.x = xvars;
  out.bind.y = add_output_var(m, ctx, suffix);
  int z = add_binary(m, suffix, 1);
  out.bind.z = {z};

  LinearConstraint ge;  // y >= f(x)
  push(ge, out.bind.y, 1.0);
  for (int i = 0; i < f.dim(); ++i) push(ge, xvars[i], -f.w[i]);
  ge.sense = Sense::GE;
  ge.rhs = f.b;
  ge.name = "r_" + suffix + "_ge";
  out.rows.push_back(m.add_row(std::move(ge)));

  LinearConstraint ub0;  // y <= f(x) - M^-(1 - z)
  push(ub0, out.bind.y, 1.0);
  for (int i = 0; i < f.dim(); ++i) push(ub0, xvars[i], -f.w[i]);
  push(ub0, z, -mlo);
  ub0.sense = Sense::LE;
  ub0.rhs = f.b - mlo;
  ub0.name = "r_" + suffix + "_m0";
  out.rows.push_back(m.add_row(std::move(ub0)));

  LinearConstraint ub1;  // y <= M^+ z
  push(ub1, out.bind.y, 1.0);
  push(ub1, z, -mhi);
  ub1.sense = Sense::LE;
  ub1.rhs = 0.0;
  ub1.name = "r_" + suffix + "_m1";
  out.rows.push_back(m.add_row(std::move(ub1)));

  LinearConstraint pos;  // y >= 0
  push(pos, out.bind.y, 1.0);
  pos.sense = Sense::GE;
  pos.rhs = 0.0;
  pos.name = "r_" + suffix + "_pos";
  out.rows.push_back(m.add_row(std::move(pos)));

  return out;
}

namespace {

// Piece description for the multiple-choice construction.
struct UnionPiece {
  AffineFunc value;
  std::vector<LinearConstraint> region;  // rows over the neuron's coordinates
};

std::vector<UnionPiece> union_pieces(const NeuronContext& ctx) {
  std::vector<UnionPiece> out;
  int n = ctx.dim();
  auto dominance = [&](int k) {
    std::vector<LinearConstraint> rows;
    for (int l = 0; l < ctx.num_pieces(); ++l) {
      if (l == k) continue;
      LinearConstraint c;
      for (int i = 0; i < n; ++i) push(c, i, ctx.pieces[k].w[i] - ctx.pieces[l].w[i]);
      c.sense = Sense::GE;
      c.rhs = ctx.pieces[l].b - ctx.pieces[k].b;
      rows.push_back(std::move(c));
    }
    return rows;
  };
  if (ctx.kind == NeuronKind::Clipped) {
    const AffineFunc& f = ctx.pieces[0];
    AffineFunc zero{std::vector<double>(n, 0.0), 0.0};
    AffineFunc capf{std::vector<double>(n, 0.0), ctx.cap};
    LinearConstraint off;  // f(x) <= 0
    for (int i = 0; i < n; ++i) push(off, i, f.w[i]);
    off.sense = Sense::LE;
    off.rhs = -f.b;
    LinearConstraint on = off;  // f(x) >= 0
    on.sense = Sense::GE;
    LinearConstraint below;  // f(x) <= cap
    for (int i = 0; i < n; ++i) push(below, i, f.w[i]);
    below.sense = Sense::LE;
    below.rhs = ctx.cap - f.b;
    LinearConstraint above = below;  // f(x) >= cap
    above.sense = Sense::GE;
    out.push_back({zero, {off}});
    out.push_back({f, {on, below}});
    out.push_back({capf, {above}});
  } else {
    for (int k = 0; k < ctx.num_pieces(); ++k) out.push_back({ctx.pieces[k], dominance(k)});
  }
  return out;
}

}  // namespace

BlockResult balas_extended(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                           const std::string& suffix) {
  const NeuronContext& ctx = m.contexts[ctx_idx];
  auto pieces = union_pieces(ctx);
  const int K = static_cast<int>(pieces.size());
  const int n = ctx.dim();
  auto boxes = ctx.domain.coordinate_boxes();
  for (const auto& iv : boxes)
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw ModelError("balas_extended: unbounded domain");

  BlockResult out;
  out.bind.x = xvars;
  out.bind.y = add_output_var(m, ctx, suffix);

  // binaries: a single z for two pieces (z = z_1, 1-z = z_2), else one per piece
  std::vector<int> zvars;
  bool two = K == 2;
  if (two) {
    zvars = {add_binary(m, suffix, 1)};
  } else {
    for (int k = 0; k < K; ++k) zvars.push_back(add_binary(m, suffix, k + 1));
  }
  out.bind.z = zvars;

  // z_k expressed as (coefficient on each z var, constant)
  auto z_coef = [&](int k) -> std::pair<std::vector<double>, double> {
    std::vector<double> c(zvars.size(), 0.0);
    if (two) {
      if (k == 0) c[0] = 1.0;
      else c[0] = -1.0;
      return {c, k == 0 ? 0.0 : 1.0};
    }
    c[k] = 1.0;
    return {c, 0.0};
  };

  // copies for pieces 2..K; piece 1's copy is x minus the rest
  std::vector<std::vector<int>> copies(K);
  for (int k = 1; k < K; ++k) {
    for (int i = 0; i < n; ++i) {
      double lo = std::min(0.0, boxes[i].lo), hi = std::max(0.0, boxes[i].hi);
      copies[k].push_back(m.add_var(
          "v_" + suffix + "_" + std::to_string((k - 1) * n + i + 1), VarKind::Continuous, lo, hi));
      out.bind.aux.push_back(copies[k].back());
    }
  }

  // coefficient of coordinate i of piece-k copy applied to a row
  auto add_copy_terms = [&](LinearConstraint& c, int k, int i, double coef) {
    if (coef == 0.0) return;
    if (k == 0) {
      push(c, xvars[i], coef);
      for (int l = 1; l < K; ++l) push(c, copies[l][i], -coef);
    } else {
      push(c, copies[k][i], coef);
    }
  };

  // y = sum_k (w^k . xk + b^k z_k)
  LinearConstraint val;
  push(val, out.bind.y, 1.0);
  double val_rhs = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < n; ++i) add_copy_terms(val, k, i, -pieces[k].value.w[i]);
    auto [zc, z0] = z_coef(k);
    for (size_t t = 0; t < zvars.size(); ++t) push(val, zvars[t], -pieces[k].value.b * zc[t]);
    val_rhs += pieces[k].value.b * z0;
  }
  val.sense = Sense::EQ;
  val.rhs = val_rhs;
  val.name = "x_" + suffix + "_val";
  out.rows.push_back(m.add_row(std::move(val)));

  if (!two) {
    LinearConstraint sum;
    for (int zv : zvars) push(sum, zv, 1.0);
    sum.sense = Sense::EQ;
    sum.rhs = 1.0;
    sum.name = "x_" + suffix + "_sum";
    out.rows.push_back(m.add_row(std::move(sum)));
  }

  // per piece: scaled region rows, domain rows, and coordinate bound rows
  for (int k = 0; k < K; ++k) {
    auto [zc, z0] = z_coef(k);
    int rowno = 0;
    auto scaled = [&](const LinearConstraint& reg) {
      LinearConstraint c;
      for (const auto& t : reg.terms) add_copy_terms(c, k, t.var, t.coef);
      for (size_t tz = 0; tz < zvars.size(); ++tz) push(c, zvars[tz], -reg.rhs * zc[tz]);
      c.sense = reg.sense;
      c.rhs = reg.rhs * z0;
      c.name = "x_" + suffix + "_p" + std::to_string(k + 1) + "_" + std::to_string(++rowno);
      out.rows.push_back(m.add_row(std::move(c)));
    };
    for (const auto& reg : pieces[k].region) scaled(reg);
    for (const auto& blk : ctx.domain.blocks) {
      if (!blk.simplex) continue;
      LinearConstraint c;
      for (int j = 0; j < blk.p; ++j) c.terms.push_back({blk.offset + j, 1.0});
      c.sense = Sense::EQ;
      c.rhs = 1.0;
      scaled(c);
    }
    for (int i = 0; i < n; ++i) {
      LinearConstraint up;
      up.terms.push_back({i, 1.0});
      up.sense = Sense::LE;
      up.rhs = boxes[i].hi;
      scaled(up);
      LinearConstraint dn;
      dn.terms.push_back({i, 1.0});
      dn.sense = Sense::GE;
      dn.rhs = boxes[i].lo;
      scaled(dn);
    }
  }
  return out;
}

BlockResult relu_extended(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                          const std::string& suffix) {
  const NeuronContext& ctx = m.contexts[ctx_idx];
  require_box(ctx, "relu_extended");
  return balas_extended(m, ctx_idx, xvars, suffix);
}

double coeff_paper(const NeuronContext& ctx, int ell, int k) {
  if (ell == k) return 0.0;
  double s = 0.0;
  for (int i = 0; i < ctx.dim(); ++i) {
    double dw = ctx.pieces[k].w[i] - ctx.pieces[ell].w[i];
    const auto& blk = ctx.domain.blocks[i];
    s += std::max(dw * blk.lo, dw * blk.hi);
  }
  return s;
}

double coeff_tjeng(const NeuronContext& ctx, int ell, int k) {
  if (ell == k) return 0.0;
  // comparison coefficients: interval bounds of each piece, decoupled over pieces
  double best = -kInf;
  for (int t = 0; t < ctx.num_pieces(); ++t) {
    if (t == ell) continue;
    best = std::max(best, ctx.piece_range[t].hi);
  }
  double lo_ell = ctx.piece_range[ell].lo;
  return best - lo_ell + ctx.pieces[ell].b - ctx.pieces[k].b;
}

BlockResult max_d_bigm_box(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                           const std::string& suffix, CoeffMode coeff) {
  const NeuronContext& ctx = m.contexts[ctx_idx];
  require_box(ctx, "max_d_bigm_box");
  const int d = ctx.num_pieces();

  BlockResult out;
  out.bind.x = xvars;
  out.bind.y = add_output_var(m, ctx, suffix);
  for (int k = 0; k < d; ++k) out.bind.z.push_back(add_binary(m, suffix, k + 1));

  for (int l = 0; l < d; ++l) {
    LinearConstraint up;  // y <= w^l . x + sum_k (N^{l,k} + b^k) z_k
    push(up, out.bind.y, 1.0);
    for (int i = 0; i < ctx.dim(); ++i) push(up, xvars[i], -ctx.pieces[l].w[i]);
    for (int k = 0; k < d; ++k) {
      double N = coeff == CoeffMode::Paper ? coeff_paper(ctx, l, k) : coeff_tjeng(ctx, l, k);
      push(up, out.bind.z[k], -(N + ctx.pieces[k].b));
    }
    up.sense = Sense::LE;
    up.rhs = 0.0;
    up.name = "m_" + suffix + "_u" + std::to_string(l + 1);
    out.rows.push_back(m.add_row(std::move(up)));
  }
  for (int k = 0; k < d; ++k) {
    LinearConstraint lo;  // y >= w^k . x + b^k
    push(lo, out.bind.y, 1.0);
    for (int i = 0; i < ctx.dim(); ++i) push(lo, xvars[i], -ctx.pieces[k].w[i]);
    lo.sense = Sense::GE;
    lo.rhs = ctx.pieces[k].b;
    lo.name = "m_" + suffix + "_l" + std::to_string(k + 1);
    out.rows.push_back(m.add_row(std::move(lo)));
  }
  LinearConstraint sum;
  for (int zv : out.bind.z) push(sum, zv, 1.0);
  sum.sense = Sense::EQ;
  sum.rhs = 1.0;
  sum.name = "m_" + suffix + "_sum";
  out.rows.push_back(m.add_row(std::move(sum)));
  return out;
}

NeuronContext prune_pieces_polytope(const NeuronContext& ctx, const Polytope& P) {
  std::vector<AffineFunc> kept;
  const int d = ctx.num_pieces();
  std::vector<double> zero(P.dim(), 0.0);
  for (int k = 0; k < d; ++k) {
    // delta* = max margin by which piece k beats the rest
    LpProblem lp;
    for (int i = 0; i < P.dim(); ++i) lp.add_var(P.bounds[i].lo, P.bounds[i].hi);
    int dv = lp.add_var(-kInf, kInf, 1.0);
    lp.rows = P.rows;
    for (int l = 0; l < d; ++l) {
      if (l == k) continue;
      LinearConstraint c;
      for (int i = 0; i < P.dim(); ++i) push(c, i, -(ctx.pieces[k].w[i] - ctx.pieces[l].w[i]));
      c.terms.push_back({dv, 1.0});
      c.sense = Sense::LE;
      c.rhs = ctx.pieces[k].b - ctx.pieces[l].b;
      lp.add_row(std::move(c));
    }
    LpResult r = pwlv::solve_lp(lp);
    if (r.status == LpStatus::Unbounded) throw ModelError("unbounded polytope");
    if (r.status != LpStatus::Optimal) throw ModelError("piece pruning LP failed");
    if (r.objective >= -1e-9) kept.push_back(ctx.pieces[k]);
  }
  if (kept.empty()) throw ModelError("all pieces pruned");
  if (static_cast<int>(kept.size()) == d) return ctx;
  return NeuronContext::max_d(kept.size() >= 2 ? kept
                                                : std::vector<AffineFunc>{kept[0], kept[0]},
                              ctx.domain);
}

double coeff_polytope(const NeuronContext& ctx, const Polytope& P, int ell, int k, bool plus) {
  if (ell == k) return 0.0;
  std::vector<double> obj(P.dim());
  for (int i = 0; i < P.dim(); ++i) obj[i] = ctx.pieces[k].w[i] - ctx.pieces[ell].w[i];
  RegionLp r = region_lp(P, ctx.pieces, -1, obj, plus);
  if (r.status == LpStatus::Unbounded) throw ModelError("unbounded polytope");
  if (r.status != LpStatus::Optimal) throw ModelError("coefficient LP failed");
  return r.value;
}

BlockResult max_d_bigm_polytope(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                                const std::string& suffix, const Polytope& P) {
  const NeuronContext& ctx = m.contexts[ctx_idx];
  const int d = ctx.num_pieces();
  for (const auto& iv : P.bounds)
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw ModelError("unbounded polytope");

  // 2 d (d-1) coefficient LPs
  std::vector<std::vector<double>> Np(d, std::vector<double>(d, 0.0));
  std::vector<std::vector<double>> Nm(d, std::vector<double>(d, 0.0));
  for (int l = 0; l < d; ++l) {
    for (int k = 0; k < d; ++k) {
      if (l == k) continue;
      Np[l][k] = coeff_polytope(ctx, P, l, k, true);
      Nm[l][k] = coeff_polytope(ctx, P, l, k, false);
    }
  }

  BlockResult out;
  out.bind.x = xvars;
  out.bind.y = add_output_var(m, ctx, suffix);
  for (int k = 0; k < d; ++k) out.bind.z.push_back(add_binary(m, suffix, k + 1));

  for (int l = 0; l < d; ++l) {
    LinearConstraint up;
    push(up, out.bind.y, 1.0);
    for (int i = 0; i < ctx.dim(); ++i) push(up, xvars[i], -ctx.pieces[l].w[i]);
    for (int k = 0; k < d; ++k) push(up, out.bind.z[k], -(Np[l][k] + ctx.pieces[k].b));
    up.sense = Sense::LE;
    up.rhs = 0.0;
    up.name = "m_" + suffix + "_u" + std::to_string(l + 1);
    out.rows.push_back(m.add_row(std::move(up)));

    LinearConstraint dn;
    push(dn, out.bind.y, 1.0);
    for (int i = 0; i < ctx.dim(); ++i) push(dn, xvars[i], -ctx.pieces[l].w[i]);
    for (int k = 0; k < d; ++k) push(dn, out.bind.z[k], -(Nm[l][k] + ctx.pieces[k].b));
    dn.sense = Sense::GE;
    dn.rhs = 0.0;
    dn.name = "m_" + suffix + "_d" + std::to_string(l + 1);
    out.rows.push_back(m.add_row(std::move(dn)));
  }
  LinearConstraint sum;
  for (int zv : out.bind.z) push(sum, zv, 1.0);
  sum.sense = Sense::EQ;
  sum.rhs = 1.0;
  sum.name = "m_" + suffix + "_sum";
  out.rows.push_back(m.add_row(std::move(sum)));
  return out;
}

BlockResult leaky_bigm(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                       const std::string& suffix) {
  const NeuronContext& ctx = m.contexts[ctx_idx];
  require_box(ctx, "leaky_bigm");
  if (!(ctx.alpha > 0.0 && ctx.alpha < 1.0)) throw ModelError("leaky alpha outside (0,1)");
  const AffineFunc& f = ctx.pieces[0];
  const double a = ctx.alpha;
  double mlo = ctx.piece_range[0].lo, mhi = ctx.piece_range[0].hi;

  BlockResult out;
  out.bind.x = xvars;
  out.bind.y = add_output_var(m, ctx, suffix);
  int z = add_binary(m, suffix, 1);
  out.bind.z = {z};

  LinearConstraint g1;  // y >= f
  push(g1, out.bind.y, 1.0);
  for (int i = 0; i < f.dim(); ++i) push(g1, xvars[i], -f.w[i]);
  g1.sense = Sense::GE;
  g1.rhs = f.b;
  g1.name = "k_" + suffix + "_g1";
  out.rows.push_back(m.add_row(std::move(g1)));

  LinearConstraint g2;  // y >= alpha f
  push(g2, out.bind.y, 1.0);
  for (int i = 0; i < f.dim(); ++i) push(g2, xvars[i], -a * f.w[i]);
  g2.sense = Sense::GE;
  g2.rhs = a * f.b;
  g2.name = "k_" + suffix + "_g2";
  out.rows.push_back(m.add_row(std::move(g2)));

  LinearConstraint u1;  // y <= f - (1-alpha) M^- (1-z)
  push(u1, out.bind.y, 1.0);
  for (int i = 0; i < f.dim(); ++i) push(u1, xvars[i], -f.w[i]);
  push(u1, z, -(1 - a) * mlo);
  u1.sense = Sense::LE;
  u1.rhs = f.b - (1 - a) * mlo;
  u1.name = "k_" + suffix + "_u1";
  out.rows.push_back(m.add_row(std::move(u1)));

  LinearConstraint u2;  // y <= alpha f + (1-alpha) M^+ z
  push(u2, out.bind.y, 1.0);
  for (int i = 0; i < f.dim(); ++i) push(u2, xvars[i], -a * f.w[i]);
  push(u2, z, -(1 - a) * mhi);
  u2.sense = Sense::LE;
  u2.rhs = a * f.b;
  u2.name = "k_" + suffix + "_u2";
  out.rows.push_back(m.add_row(std::move(u2)));

  return out;
}

BlockResult clipped_bigm(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                         const std::string& suffix) {
  const NeuronContext& ctx = m.contexts[ctx_idx];
  require_box(ctx, "clipped_bigm");
  if (!(ctx.cap > 0.0)) throw ModelError("clipped cap must be positive");
  const AffineFunc& f = ctx.pieces[0];
  const double C = ctx.cap;
  double mlo = ctx.piece_range[0].lo, mhi = ctx.piece_range[0].hi;

  BlockResult out;
  out.bind.x = xvars;
  out.bind.y = add_output_var(m, ctx, suffix);
  for (int k = 1; k <= 3; ++k) out.bind.z.push_back(add_binary(m, suffix, k));
  int z1 = out.bind.z[0], z2 = out.bind.z[1], z3 = out.bind.z[2];

  LinearConstraint lo;  // y >= C z3
  push(lo, out.bind.y, 1.0);
  push(lo, z3, -C);
  lo.sense = Sense::GE;
  lo.rhs = 0.0;
  lo.name = "c_" + suffix + "_lo";
  out.rows.push_back(m.add_row(std::move(lo)));

  LinearConstraint hi;  // y <= C (z2 + z3)
  push(hi, out.bind.y, 1.0);
  push(hi, z2, -C);
  push(hi, z3, -C);
  hi.sense = Sense::LE;
  hi.rhs = 0.0;
  hi.name = "c_" + suffix + "_hi";
  out.rows.push_back(m.add_row(std::move(hi)));

  LinearConstraint u;  // y <= f - M^- z1
  push(u, out.bind.y, 1.0);
  for (int i = 0; i < f.dim(); ++i) push(u, xvars[i], -f.w[i]);
  push(u, z1, mlo);
  u.sense = Sense::LE;
  u.rhs = f.b;
  u.name = "c_" + suffix + "_u";
  out.rows.push_back(m.add_row(std::move(u)));

  LinearConstraint g;  // y >= f + (C - M^+) z3
  push(g, out.bind.y, 1.0);
  for (int i = 0; i < f.dim(); ++i) push(g, xvars[i], -f.w[i]);
  push(g, z3, -(C - mhi));
  g.sense = Sense::GE;
  g.rhs = f.b;
  g.name = "c_" + suffix + "_g";
  out.rows.push_back(m.add_row(std::move(g)));

  LinearConstraint sum;
  push(sum, z1, 1.0);
  push(sum, z2, 1.0);
  push(sum, z3, 1.0);
  sum.sense = Sense::EQ;
  sum.rhs = 1.0;
  sum.name = "c_" + suffix + "_sum";
  out.rows.push_back(m.add_row(std::move(sum)));

  return out;
}

BlockResult onehot_relu_block(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                              const std::string& suffix, bool register_family) {
  const NeuronContext& ctx = m.contexts[ctx_idx];
  if (ctx.kind != NeuronKind::Relu) throw ModelError("onehot_relu_block: relu context expected");
  if (!ctx.domain.has_simplex())
    throw ModelError("onehot_relu_block: no simplex block present (use relu_bigm)");
  const AffineFunc& f = ctx.pieces[0];

  BlockResult out;
  out.bind.x = xvars;
  out.bind.y = add_output_var(m, ctx, suffix);
  out.bind.z = {add_binary(m, suffix, 1)};

  LinearConstraint ge;  // y >= f
  push(ge, out.bind.y, 1.0);
  for (int i = 0; i < f.dim(); ++i) push(ge, xvars[i], -f.w[i]);
  ge.sense = Sense::GE;
  ge.rhs = f.b;
  ge.name = "h_" + suffix + "_ge";
  out.rows.push_back(m.add_row(std::move(ge)));

  LinearConstraint pos;  // y >= 0
  push(pos, out.bind.y, 1.0);
  pos.sense = Sense::GE;
  pos.rhs = 0.0;
  pos.name = "h_" + suffix + "_pos";
  out.rows.push_back(m.add_row(std::move(pos)));

  // seeded members: all blocks at their minimum / maximum weight choices
  std::vector<int> seed_lo(ctx.domain.blocks.size()), seed_hi(ctx.domain.blocks.size());
  for (size_t b = 0; b < ctx.domain.blocks.size(); ++b) {
    const auto& blk = ctx.domain.blocks[b];
    seed_lo[b] = 1;
    seed_hi[b] = blk.simplex ? blk.p : 2;
  }
  out.rows.push_back(m.add_row(relu_member_row(ctx, seed_lo, out.bind, "h_" + suffix + "_m0")));
  out.rows.push_back(m.add_row(relu_member_row(ctx, seed_hi, out.bind, "h_" + suffix + "_m1")));

  if (register_family) {
    CutFamily fam;
    fam.kind = FamilyKind::OneHotRelu;
    fam.context = ctx_idx;
    fam.bind = out.bind;
    m.families.push_back(std::move(fam));
  }
  return out;
}

namespace {

Domain box_domain_from(const std::vector<Interval>& boxes) { return Domain::box(boxes); }

void add_domain_rows(MipModel& m, const Domain& dom, const std::vector<int>& xvars) {
  for (size_t b = 0; b < dom.blocks.size(); ++b) {
    const auto& blk = dom.blocks[b];
    if (!blk.simplex) continue;
    LinearConstraint c;
    for (int j = 0; j < blk.p; ++j) push(c, xvars[blk.offset + j], 1.0);
    c.sense = Sense::EQ;
    c.rhs = 1.0;
    c.name = "s_" + std::to_string(b + 1);
    m.add_row(std::move(c));
  }
}

// Dispatch one nonlinear neuron into the model; registers families in cut mode.
BlockResult dispatch_neuron(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                            const std::string& suffix, const BuildOptions& opt) {
  NeuronKind kind = m.contexts[ctx_idx].kind;
  bool box = m.contexts[ctx_idx].domain.pure_box();
  bool cuts = opt.mode == FormulationMode::BigMWithCuts;

  if (opt.mode == FormulationMode::Extended) return balas_extended(m, ctx_idx, xvars, suffix);

  BlockResult out;
  switch (kind) {
    case NeuronKind::Relu:
      if (box) {
        out = relu_bigm(m, ctx_idx, xvars, suffix);
        if (cuts) {
          CutFamily fam;
          fam.kind = FamilyKind::ReluIdeal;
          fam.context = ctx_idx;
          fam.bind = out.bind;
          m.families.push_back(std::move(fam));
        }
      } else {
        out = onehot_relu_block(m, ctx_idx, xvars, suffix, cuts);
      }
      break;
    case NeuronKind::Leaky:
      out = leaky_bigm(m, ctx_idx, xvars, suffix);
      if (cuts) {
        CutFamily fam;
        fam.kind = FamilyKind::Leaky;
        fam.context = ctx_idx;
        fam.bind = out.bind;
        m.families.push_back(std::move(fam));
      }
      break;
    case NeuronKind::Clipped:
      out = clipped_bigm(m, ctx_idx, xvars, suffix);
      if (cuts) {
        CutFamily fam;
        fam.kind = FamilyKind::Clipped;
        fam.context = ctx_idx;
        fam.bind = out.bind;
        m.families.push_back(std::move(fam));
      }
      break;
    case NeuronKind::MaxD:
      if (box) {
        out = max_d_bigm_box(m, ctx_idx, xvars, suffix, opt.coeff);
        if (cuts) {
          CutFamily fam;
          fam.kind = FamilyKind::MaxDBox;
          fam.context = ctx_idx;
          fam.bind = out.bind;
          m.families.push_back(std::move(fam));
        }
      } else {
        Polytope P = domain_polytope(m.contexts[ctx_idx].domain);
        out = max_d_bigm_polytope(m, ctx_idx, xvars, suffix, P);
        if (cuts) {
          CutFamily fam;
          fam.kind = FamilyKind::IdealDualSubgradient;
          fam.context = ctx_idx;
          fam.bind = out.bind;
          m.families.push_back(std::move(fam));
        }
      }
      break;
  }
  return out;
}

}  // namespace

MipModel build_neuron_model(const NeuronContext& ctx, const BuildOptions& opt) {
  MipModel m;
  std::vector<int> xvars;
  auto boxes = ctx.domain.coordinate_boxes();
  for (int i = 0; i < ctx.dim(); ++i) {
    int v = m.add_var("x_0_" + std::to_string(i + 1), VarKind::Continuous, boxes[i].lo, boxes[i].hi);
    m.vars[v].tag = Variable::Tag::Input;
    m.vars[v].neuron = i;
    xvars.push_back(v);
  }
  add_domain_rows(m, ctx.domain, xvars);
  m.contexts.push_back(ctx);
  BlockResult blk = dispatch_neuron(m, 0, xvars, "1_1", opt);
  m.vars[blk.bind.y].tag = Variable::Tag::Output;
  m.vars[blk.bind.y].layer = 1;
  m.vars[blk.bind.y].neuron = 0;
  NeuronEntry ne;
  ne.kind = ctx.kind;
  ne.context = 0;
  ne.bind = blk.bind;
  m.neurons.push_back(std::move(ne));
  return m;
}

MipModel assemble_network_formulation(const Network& net, const Domain& dom,
                                      const VerificationInstance* inst,
                                      const BuildOptions& opt) {
  Domain eff = inst ? effective_domain(dom, *inst) : dom;
  eff.validate();
  BoundsTable bounds = propagate_bounds(net, eff);
  Network lin = linearize_stable_neurons(net, bounds);
  bounds = propagate_bounds(lin, eff);

  MipModel m;
  std::vector<int> xvars;
  for (const auto& blk : eff.blocks) {
    for (int j = 0; j < blk.size(); ++j) {
      double lo, hi;
      if (blk.simplex) {
        lo = 0.0;
        hi = 1.0;
        if (inst) {
          // the ball clamps simplex coordinates through variable bounds
          double c = inst->center[blk.offset + j];
          lo = std::max(lo, c - inst->epsilon);
          hi = std::min(hi, c + inst->epsilon);
        }
      } else {
        lo = blk.lo;
        hi = blk.hi;
      }
      int v = m.add_var("x_0_" + std::to_string(blk.offset + j + 1), VarKind::Continuous, lo, hi);
      m.vars[v].tag = Variable::Tag::Input;
      m.vars[v].neuron = blk.offset + j;
      xvars.push_back(v);
    }
  }
  add_domain_rows(m, eff, xvars);

  std::vector<int> prev = xvars;
  for (size_t li = 0; li < lin.layers.size(); ++li) {
    const Layer& layer = lin.layers[li];
    std::vector<int> outs;
    Domain in_dom;
    if (li == 0) {
      in_dom = eff;
    } else {
      std::vector<Interval> boxes;
      for (const auto& nb : bounds[li - 1]) boxes.push_back(nb.post);
      in_dom = box_domain_from(boxes);
    }
    for (size_t j = 0; j < layer.neurons.size(); ++j) {
      const Neuron& nr = layer.neurons[j];
      std::string suffix = std::to_string(li + 1) + "_" + std::to_string(j + 1);
      if (nr.act.kind == ActKind::Linear) {
        Interval r = bounds[li][j].pre;
        int y = m.add_var("y_" + suffix, VarKind::Continuous, r.lo, r.hi);
        m.vars[y].tag = Variable::Tag::Output;
        m.vars[y].layer = static_cast<int>(li + 1);
        m.vars[y].neuron = static_cast<int>(j);
        LinearConstraint c;
        push(c, y, 1.0);
        for (int i = 0; i < nr.pieces[0].dim(); ++i) push(c, prev[i], -nr.pieces[0].w[i]);
        c.sense = Sense::EQ;
        c.rhs = nr.pieces[0].b;
        c.name = "lin_" + suffix;
        m.add_row(std::move(c));
        outs.push_back(y);
        continue;
      }

      NeuronContext ctx;
      Domain neuron_dom = in_dom;
      switch (nr.act.kind) {
        case ActKind::Relu:
          ctx = NeuronContext::relu(nr.pieces[0], neuron_dom);
          break;
        case ActKind::Leaky:
          // leaky and clipped formulations need a box; relax simplex blocks
          if (!neuron_dom.pure_box()) neuron_dom = box_domain_from(neuron_dom.coordinate_boxes());
          ctx = NeuronContext::leaky(nr.pieces[0], nr.act.alpha, neuron_dom);
          break;
        case ActKind::Clipped:
          if (!neuron_dom.pure_box()) neuron_dom = box_domain_from(neuron_dom.coordinate_boxes());
          ctx = NeuronContext::clipped(nr.pieces[0], nr.act.cap, neuron_dom);
          break;
        case ActKind::MaxOfD: {
          ctx = NeuronContext::max_d(nr.pieces, neuron_dom);
          if (!neuron_dom.pure_box())
            ctx = prune_pieces_polytope(ctx, domain_polytope(neuron_dom));
          break;
        }
        default:
          throw ModelError("unexpected activation");
      }
      int ctx_idx = static_cast<int>(m.contexts.size());
      m.contexts.push_back(std::move(ctx));
      BlockResult blk = dispatch_neuron(m, ctx_idx, prev, suffix, opt);
      m.vars[blk.bind.y].tag = Variable::Tag::Output;
      m.vars[blk.bind.y].layer = static_cast<int>(li + 1);
      m.vars[blk.bind.y].neuron = static_cast<int>(j);
      NeuronEntry ne;
      ne.kind = m.contexts[ctx_idx].kind;
      ne.context = ctx_idx;
      ne.bind = blk.bind;
      m.neurons.push_back(std::move(ne));
      outs.push_back(blk.bind.y);
    }
    prev = std::move(outs);
  }

  if (inst) {
    m.objective.maximize = true;
    m.objective.terms.push_back({prev[inst->target_label], 1.0});
    m.objective.terms.push_back({prev[inst->source_label], -1.0});
  }
  return m;
}

BoundsTable propagate_bounds_lp(const Network& net, const Domain& dom) {
  BoundsTable table = propagate_bounds(net, dom);
  // Tighten layer by layer: each neuron's pre-activation is optimized over the
  // relaxed big-M model of the preceding layers (built with bounds tightened
  // so far), then intersected with the interval result.
  for (size_t li = 0; li < net.layers.size(); ++li) {
    // Relaxation of layers [0, li); layer 0 uses the bare domain.
    MipModel pm;
    if (li > 0) {
      Network prefix;
      prefix.input_dim = net.input_dim;
      prefix.layers.assign(net.layers.begin(), net.layers.begin() + li);
      BuildOptions opt;
      opt.mode = FormulationMode::BigM;
      pm = assemble_network_formulation(prefix, dom, nullptr, opt);
    } else {
      auto boxes = dom.coordinate_boxes();
      for (int i = 0; i < dom.dim(); ++i)
        pm.add_var("x_0_" + std::to_string(i + 1), VarKind::Continuous, boxes[i].lo, boxes[i].hi);
      for (size_t b = 0; b < dom.blocks.size(); ++b) {
        const auto& blk = dom.blocks[b];
        if (!blk.simplex) continue;
        LinearConstraint c;
        for (int j = 0; j < blk.p; ++j) push(c, blk.offset + j, 1.0);
        c.sense = Sense::EQ;
        c.rhs = 1.0;
        pm.add_row(std::move(c));
      }
    }
    // variables of the layer's inputs in pm
    std::vector<int> invars;
    if (li == 0) {
      for (int i = 0; i < dom.dim(); ++i) invars.push_back(i);
    } else {
      for (size_t v = 0; v < pm.vars.size(); ++v)
        if (pm.vars[v].tag == Variable::Tag::Output &&
            pm.vars[v].layer == static_cast<int>(li))
          invars.push_back(static_cast<int>(v));
    }
    for (size_t j = 0; j < net.layers[li].neurons.size(); ++j) {
      auto& nb = table[li][j];
      for (size_t k = 0; k < net.layers[li].neurons[j].pieces.size(); ++k) {
        const AffineFunc& f = net.layers[li].neurons[j].pieces[k];
        Objective omax;
        omax.maximize = true;
        for (int i = 0; i < f.dim(); ++i)
          if (f.w[i] != 0.0) omax.terms.push_back({invars[i], f.w[i]});
        LpResult up = solve_lp(pm, &omax);
        Objective omin = omax;
        omin.maximize = false;
        LpResult dn = solve_lp(pm, &omin);
        if (up.status == LpStatus::Optimal) nb.piece_pre[k].hi = std::min(nb.piece_pre[k].hi, up.objective + f.b);
        if (dn.status == LpStatus::Optimal) nb.piece_pre[k].lo = std::max(nb.piece_pre[k].lo, dn.objective + f.b);
      }
      // recombine pre/post from the tightened piece ranges
      const Neuron& nr = net.layers[li].neurons[j];
      if (nr.pieces.size() == 1) {
        nb.pre = nb.piece_pre[0];
      } else {
        nb.pre = {-kInf, -kInf};
        for (const auto& r : nb.piece_pre) {
          nb.pre.lo = std::max(nb.pre.lo, r.lo);
          nb.pre.hi = std::max(nb.pre.hi, r.hi);
        }
      }
      switch (nr.act.kind) {
        case ActKind::Linear: nb.post = nb.pre; break;
        case ActKind::Relu: nb.post = {std::max(0.0, nb.pre.lo), std::max(0.0, nb.pre.hi)}; break;
        case ActKind::Leaky:
          nb.post = {nb.pre.lo >= 0 ? nb.pre.lo : nr.act.alpha * nb.pre.lo,
                     nb.pre.hi >= 0 ? nb.pre.hi : nr.act.alpha * nb.pre.hi};
          break;
        case ActKind::Clipped:
          nb.post = {std::min(nr.act.cap, std::max(0.0, nb.pre.lo)),
                     std::min(nr.act.cap, std::max(0.0, nb.pre.hi))};
          break;
        case ActKind::MaxOfD: nb.post = nb.pre; break;
      }
    }
  }
  return table;
}

}  // namespace pwlv

#include "pwlv/mip.hpp"

#include <algorithm>
#include <numeric>

namespace pwlv {

double NeuronContext::lo_side(double w, int i) const {
  const auto& blk = domain.blocks[i];
  return w >= 0 ? blk.lo : blk.hi;
}

double NeuronContext::hi_side(double w, int i) const {
  const auto& blk = domain.blocks[i];
  return w >= 0 ? blk.hi : blk.lo;
}

namespace {

void fill_ranges(NeuronContext& ctx) {
  for (const auto& f : ctx.pieces) ctx.piece_range.push_back(affine_bounds_domain(f, ctx.domain));
}

// For d=2 kinds on simplex blocks: coordinates sorted ascending by w1 - w2.
void fill_simplex_order(NeuronContext& ctx) {
  const AffineFunc& f1 = ctx.pieces[0];
  const AffineFunc& f2 = ctx.pieces[1];
  ctx.simplex_order.resize(ctx.domain.blocks.size());
  for (size_t b = 0; b < ctx.domain.blocks.size(); ++b) {
    const auto& blk = ctx.domain.blocks[b];
    if (!blk.simplex) continue;
    std::vector<int> order(blk.p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
      double wa = f1.w[blk.offset + a] - f2.w[blk.offset + a];
      double wc = f1.w[blk.offset + c] - f2.w[blk.offset + c];
      return wa < wc;
    });
    ctx.simplex_order[b] = std::move(order);
  }
}

// For MaxD over boxes: per coordinate, pieces sorted ascending by w^k (U - L).
void fill_coord_piece_order(NeuronContext& ctx) {
  int n = ctx.dim();
  int d = ctx.num_pieces();
  ctx.coord_piece_order.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& blk = ctx.domain.blocks[i];
    if (blk.simplex) continue;
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    double span = blk.hi - blk.lo;
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
      return ctx.pieces[a].w[i] * span < ctx.pieces[c].w[i] * span;
    });
    ctx.coord_piece_order[i] = std::move(order);
  }
}

}  // namespace

NeuronContext NeuronContext::relu(AffineFunc f, Domain dom) {
  NeuronContext ctx;
  ctx.kind = NeuronKind::Relu;
  AffineFunc zero{std::vector<double>(f.w.size(), 0.0), 0.0};
  ctx.pieces = {std::move(f), std::move(zero)};
  ctx.domain = std::move(dom);
  ctx.domain.reindex();
  fill_ranges(ctx);
  fill_simplex_order(ctx);
  return ctx;
}

NeuronContext NeuronContext::leaky(AffineFunc f, double alpha, Domain dom) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ModelError("leaky alpha must lie inside (0,1)");
  NeuronContext ctx;
  ctx.kind = NeuronKind::Leaky;
  ctx.alpha = alpha;
  AffineFunc scaled = f;
  for (double& v : scaled.w) v *= alpha;
  scaled.b *= alpha;
  ctx.pieces = {std::move(f), std::move(scaled)};
  ctx.domain = std::move(dom);
  ctx.domain.reindex();
  fill_ranges(ctx);
  fill_simplex_order(ctx);
  return ctx;
}

NeuronContext NeuronContext::clipped(AffineFunc f, double cap, Domain dom) {
  if (!(cap > 0.0)) throw ModelError("clipped cap must be positive");
  NeuronContext ctx;
  ctx.kind = NeuronKind::Clipped;
  ctx.cap = cap;
  ctx.pieces = {std::move(f)};
  ctx.domain = std::move(dom);
  ctx.domain.reindex();
  fill_ranges(ctx);
  return ctx;
}

NeuronContext NeuronContext::max_d(std::vector<AffineFunc> pieces, Domain dom) {
  if (pieces.size() < 2) throw ModelError("max neuron needs d >= 2 pieces");
  NeuronContext ctx;
  ctx.kind = NeuronKind::MaxD;
  ctx.pieces = std::move(pieces);
  ctx.domain = std::move(dom);
  ctx.domain.reindex();
  fill_ranges(ctx);
  fill_coord_piece_order(ctx);
  return ctx;
}

const char* family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::ReluIdeal: return "relu";
    case FamilyKind::MaxDBox: return "maxd";
    case FamilyKind::OneHotRelu: return "onehot";
    case FamilyKind::Leaky: return "leaky";
    case FamilyKind::Clipped: return "clipped";
    case FamilyKind::IdealDualSubgradient: return "dual";
  }
  return "?";
}

int MipModel::add_var(std::string name, VarKind kind, double lo, double hi) {
  Variable v;
  v.name = std::move(name);
  v.kind = kind;
  v.lo = lo;
  v.hi = hi;
  vars.push_back(std::move(v));
  return static_cast<int>(vars.size()) - 1;
}

int MipModel::add_row(LinearConstraint c) {
  std::sort(c.terms.begin(), c.terms.end(), [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
  // merge duplicates so rows stay canonical
  std::vector<LinTerm> merged;
  for (const auto& t : c.terms) {
    if (!merged.empty() && merged.back().var == t.var) merged.back().coef += t.coef;
    else merged.push_back(t);
  }
  c.terms = std::move(merged);
  rows.push_back(std::move(c));
  return static_cast<int>(rows.size()) - 1;
}

int MipModel::num_binaries() const {
  int n = 0;
  for (const auto& v : vars)
    if (v.kind == VarKind::Binary) ++n;
  return n;
}

std::vector<int> MipModel::binary_vars() const {
  std::vector<int> out;
  for (size_t i = 0; i < vars.size(); ++i)
    if (vars[i].kind == VarKind::Binary) out.push_back(static_cast<int>(i));
  return out;
}

LpProblem MipModel::relax(const Objective* override_obj) const {
  LpProblem lp;
  const Objective& obj = override_obj ? *override_obj : objective;
  lp.maximize = obj.maximize;
  for (const auto& v : vars) lp.add_var(v.lo, v.hi);
  for (const auto& t : obj.terms) lp.obj[t.var] = t.coef;
  lp.rows = rows;
  return lp;
}

LpResult solve_lp(const MipModel& model, const Objective* override_obj) {
  return solve_lp(model.relax(override_obj));
}

}  // namespace pwlv

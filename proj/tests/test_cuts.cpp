#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pwlv/cuts.hpp"
#include "pwlv/oracle.hpp"
#include "test_util.hpp"

using namespace pwlv;
using testutil::Rng;

namespace {

VarBinding local_binding(const NeuronContext& ctx) {
  VarBinding b;
  int n = ctx.dim();
  for (int i = 0; i < n; ++i) b.x.push_back(i);
  b.y = n;
  int zc = ctx.kind == NeuronKind::Clipped ? 3 : ctx.kind == NeuronKind::MaxD ? ctx.num_pieces() : 1;
  for (int k = 0; k < zc; ++k) b.z.push_back(n + 1 + k);
  return b;
}

QueryPoint random_query(Rng& rng, const NeuronContext& ctx) {
  QueryPoint q;
  q.x = testutil::random_point(rng, ctx.domain);
  int zc = ctx.kind == NeuronKind::Clipped ? 3 : ctx.kind == NeuronKind::MaxD ? ctx.num_pieces() : 1;
  if (zc == 1) {
    q.z = {testutil::uniform(rng, 0, 1)};
  } else {
    q.z = testutil::random_simplex(rng, zc);
  }
  // y near and above the graph so that violated queries are common
  double g = 0;
  switch (ctx.kind) {
    case NeuronKind::Relu: g = std::max(0.0, ctx.pieces[0].eval(q.x)); break;
    case NeuronKind::Leaky: {
      double f = ctx.pieces[0].eval(q.x);
      g = std::max(f, ctx.alpha * f);
      break;
    }
    case NeuronKind::Clipped: g = std::min(ctx.cap, std::max(0.0, ctx.pieces[0].eval(q.x))); break;
    case NeuronKind::MaxD: {
      g = -kInf;
      for (const auto& f : ctx.pieces) g = std::max(g, f.eval(q.x));
      break;
    }
  }
  q.y = g + testutil::uniform(rng, -0.3, 0.8);
  return q;
}

// fast separator violation (0 when no cut) vs exhaustive truth
void check_exact(Rng& rng, const NeuronContext& ctx, FamilyKind family, int queries) {
  VarBinding bind = local_binding(ctx);
  for (int t = 0; t < queries; ++t) {
    QueryPoint q = random_query(rng, ctx);
    double fast = 0.0;
    switch (family) {
      case FamilyKind::ReluIdeal: {
        auto c = separate_relu_ideal(q, ctx, bind);
        fast = c ? c->violation : 0.0;
        break;
      }
      case FamilyKind::OneHotRelu: {
        auto c = separate_onehot_relu(q, ctx, bind);
        fast = c ? c->violation : 0.0;
        break;
      }
      case FamilyKind::MaxDBox: {
        auto c = separate_max_d_box(q, ctx, bind);
        fast = c ? c->violation : 0.0;
        break;
      }
      case FamilyKind::Leaky: {
        auto c = separate_leaky(q, ctx, bind);
        fast = c ? c->violation : 0.0;
        break;
      }
      default: REQUIRE(false);
    }
    SeparationTruth truth = exhaustive_separation(q, ctx, family);
    if (truth.violation > kCutTol) {
      REQUIRE(std::abs(fast - truth.violation) <= 1e-9);
    } else {
      REQUIRE(fast <= kCutTol + 1e-9);
    }
  }
}

// every returned cut must hold on every integer slice of the block
void certify_cut_validity(const NeuronContext& ctx, const Cut& cut, const VarBinding& bind) {
  BuildOptions opt;
  opt.mode = FormulationMode::BigM;
  MipModel m = build_neuron_model(ctx, opt);
  // maximize cut violation over each integer z slice
  int zc = static_cast<int>(bind.z.size());
  std::vector<std::vector<double>> patterns;
  if (zc == 1) patterns = {{0.0}, {1.0}};
  else {
    for (int k = 0; k < zc; ++k) {
      std::vector<double> z(zc, 0.0);
      z[k] = 1.0;
      patterns.push_back(z);
    }
  }
  for (const auto& zpat : patterns) {
    LpProblem lp = m.relax();
    const VarBinding& mb = m.neurons[0].bind;
    for (int k = 0; k < zc; ++k) lp.lo[mb.z[k]] = lp.hi[mb.z[k]] = zpat[k];
    for (double& c : lp.obj) c = 0;
    // objective: the cut's violated side (lhs - rhs for LE rows)
    double sign = cut.row.sense == Sense::GE ? -1.0 : 1.0;
    for (const auto& t : cut.row.terms) {
      int mv;  // map the local binding onto the model's variables
      if (t.var == bind.y) mv = mb.y;
      else {
        mv = -1;
        for (size_t i = 0; i < bind.x.size(); ++i)
          if (bind.x[i] == t.var) mv = mb.x[i];
        for (size_t k = 0; k < bind.z.size(); ++k)
          if (bind.z[k] == t.var) mv = mb.z[k];
        REQUIRE(mv >= 0);
      }
      lp.obj[mv] += sign * t.coef;
    }
    lp.maximize = true;
    LpResult r = solve_lp(lp);
    if (r.status == LpStatus::Infeasible) continue;
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective - sign * cut.row.rhs <= 1e-8);
  }
}

}  // namespace

TEST_CASE("worked relu separation example") {
  NeuronContext ctx = testutil::example1_ctx();
  VarBinding bind = local_binding(ctx);
  QueryPoint q{{1.0, 0.0}, 0.25, {0.5}};
  auto cut = separate_relu_ideal(q, ctx, bind);
  REQUIRE(cut);
  CHECK(cut->witness == "I:01");  // the second coordinate enters the subset
  CHECK(cut->violation == doctest::Approx(0.5).epsilon(1e-9));

  // the member is y <= x2 - 0.5 z: check coefficients
  auto coef_of = [&](int var) {
    for (const auto& t : cut->row.terms)
      if (t.var == var) return t.coef;
    return 0.0;
  };
  CHECK(coef_of(bind.y) == doctest::Approx(1.0));
  CHECK(coef_of(bind.x[1]) == doctest::Approx(-1.0));
  CHECK(coef_of(bind.z[0]) == doctest::Approx(0.5));
  CHECK(cut->row.rhs == doctest::Approx(0.0));

  // matches the exhaustive subset search
  SeparationTruth truth = exhaustive_separation(q, ctx, FamilyKind::ReluIdeal);
  CHECK(truth.witness == "I:01");
  CHECK(truth.violation == doctest::Approx(0.5));

  // integer-feasible points are never separated
  QueryPoint integral{{1.0, 1.0}, 0.5, {1.0}};
  CHECK_FALSE(separate_relu_ideal(integral, ctx, bind));
}

TEST_CASE("relu separation equals exhaustive subsets") {
  Rng rng(1001);
  for (int t = 0; t < 12; ++t) {
    int n = testutil::uniform_int(rng, 1, 12);
    NeuronContext ctx =
        NeuronContext::relu(testutil::random_affine(rng, n), testutil::random_box(rng, n));
    check_exact(rng, ctx, FamilyKind::ReluIdeal, 90);
  }
}

TEST_CASE("worked max-of-d separation example") {
  NeuronContext ctx = NeuronContext::max_d(
      {AffineFunc{{1.0, 1.0}, -1.5}, AffineFunc{{0.0, 0.0}, 0.0}},
      Domain::box({{0, 1}, {0, 1}}));
  VarBinding bind = local_binding(ctx);
  QueryPoint q{{1.0, 0.0}, 0.25, {0.5, 0.5}};
  auto cut = separate_max_d_box(q, ctx, bind);
  REQUIRE(cut);
  CHECK(cut->violation == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(cut->witness == "J:1,0");  // piece 2 then piece 1, zero-based

  // constant mappings reproduce the big-M upper rows
  LinearConstraint row0 = maxd_member_row(ctx, {0, 0}, bind, "c0");
  BuildOptions opt;
  MipModel m = build_neuron_model(ctx, opt);
  const LinearConstraint* u1 = nullptr;
  for (const auto& r : m.rows)
    if (r.name == "m_1_1_u1") u1 = &r;
  REQUIRE(u1);
  auto coef_by_var = [](const LinearConstraint& r, int var) {
    for (const auto& t : r.terms)
      if (t.var == var) return t.coef;
    return 0.0;
  };
  for (int v = 0; v < 5; ++v)  // x1 x2 y z1 z2 share indices in both models
    CHECK(coef_by_var(row0, v) == doctest::Approx(coef_by_var(*u1, v)));
  CHECK(row0.rhs == doctest::Approx(u1->rhs));
}

TEST_CASE("max-of-d separation equals exhaustive mappings") {
  Rng rng(2002);
  for (int t = 0; t < 10; ++t) {
    int n = testutil::uniform_int(rng, 1, 6);
    int d = testutil::uniform_int(rng, 2, 3);
    std::vector<AffineFunc> pieces;
    for (int k = 0; k < d; ++k) pieces.push_back(testutil::random_affine(rng, n));
    NeuronContext ctx = NeuronContext::max_d(pieces, testutil::random_box(rng, n));
    check_exact(rng, ctx, FamilyKind::MaxDBox, 80);
  }
}

TEST_CASE("worked one-hot separation example") {
  Domain dom;
  Domain::Block blk;
  blk.simplex = true;
  blk.p = 2;
  dom.blocks = {blk};
  dom.reindex();
  NeuronContext ctx = NeuronContext::relu(AffineFunc{{1.0, 3.0}, -2.0}, dom);
  VarBinding bind = local_binding(ctx);
  QueryPoint q{{0.5, 0.5}, 0.8, {0.5}};
  auto cut = separate_onehot_relu(q, ctx, bind);
  REQUIRE(cut);
  CHECK(cut->violation == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(cut->witness == "J:1");  // both choices tie at 0.5; smallest J wins

  // a graph vertex is never separated: x = e^2, y = relu(1) = 1, z = 1
  QueryPoint vertex{{0.0, 1.0}, 1.0, {1.0}};
  CHECK_FALSE(separate_onehot_relu(vertex, ctx, bind));
}

TEST_CASE("one-hot separation equals exhaustive mappings") {
  Rng rng(3003);
  for (int t = 0; t < 10; ++t) {
    Domain dom = testutil::random_domain(rng, testutil::uniform_int(rng, 1, 3), 4, true);
    NeuronContext ctx = NeuronContext::relu(testutil::random_affine(rng, dom.dim()), dom);
    check_exact(rng, ctx, FamilyKind::OneHotRelu, 80);
  }
}

TEST_CASE("leaky separation") {
  SUBCASE("alpha to one collapses every member to the function bound") {
    // algebraic identity check at alpha -> 1: member rows approach y <= f(x)
    Domain dom = Domain::box({{-1, 1}, {0, 2}});
    AffineFunc f{{1.0, -0.5}, 0.25};
    VarBinding bind;
    bind.x = {0, 1};
    bind.y = 2;
    bind.z = {3};
    double alpha = 1 - 1e-9;
    NeuronContext ctx = NeuronContext::leaky(f, alpha, dom);
    for (int mask = 0; mask < 4; ++mask) {
      std::vector<char> in = {static_cast<char>(mask & 1), static_cast<char>((mask >> 1) & 1)};
      LinearConstraint row = leaky_member_row(ctx, in, bind, "m");
      // evaluate at a generic point: row value must equal y - f(x) up to 1e-6
      QueryPoint q{{0.3, 1.2}, 0.7, {0.4}};
      double viol = row_violation_at(row, q, bind);
      double direct = q.y - f.eval(q.x);
      CHECK(std::abs(viol - direct) <= 1e-6);
    }
  }
  SUBCASE("exhaustive agreement") {
    Rng rng(4004);
    for (int t = 0; t < 10; ++t) {
      int n = testutil::uniform_int(rng, 1, 10);
      NeuronContext ctx =
          NeuronContext::leaky(testutil::random_affine(rng, n), testutil::uniform(rng, 0.05, 0.9),
                               testutil::random_box(rng, n));
      check_exact(rng, ctx, FamilyKind::Leaky, 80);
    }
  }
  SUBCASE("integer-feasible points are not separated") {
    NeuronContext ctx = NeuronContext::leaky(AffineFunc{{1.0}, 0.0}, 0.1, Domain::box({{-1, 1}}));
    VarBinding bind = local_binding(ctx);
    QueryPoint q{{1.0}, 1.0, {1.0}};
    CHECK_FALSE(separate_leaky(q, ctx, bind));
  }
}

TEST_CASE("clipped separation") {
  NeuronContext ctx = NeuronContext::clipped(AffineFunc{{1.0}, 0.0}, 1.0, Domain::box({{-1, 2}}));
  VarBinding bind = local_binding(ctx);

  SUBCASE("facet filter on the worked instance") {
    // phi({1}) = -1 < C so the upper member at I={1} is facet-tagged;
    // phi(empty) = 2 > C so I=empty is not
    QueryPoint q{{0.4}, 0.9, {0.25, 0.5, 0.25}};
    auto cuts = separate_clipped(q, ctx, bind);
    for (const auto& c : cuts) {
      if (c.witness == "u,I:1") CHECK(c.facet);
      if (c.witness == "u,I:0") CHECK_FALSE(c.facet);
    }
  }
  SUBCASE("integer point is never separated") {
    QueryPoint q{{2.0}, 1.0, {0.0, 0.0, 1.0}};
    CHECK(separate_clipped(q, ctx, bind).empty());
  }
  SUBCASE("exhaustive agreement for both families") {
    Rng rng(5005);
    for (int t = 0; t < 8; ++t) {
      int n = testutil::uniform_int(rng, 1, 10);
      NeuronContext c2 =
          NeuronContext::clipped(testutil::random_affine(rng, n), testutil::uniform(rng, 0.2, 1.2),
                                 testutil::random_box(rng, n));
      VarBinding b2 = local_binding(c2);
      for (int s = 0; s < 60; ++s) {
        QueryPoint q = random_query(rng, c2);
        auto cuts = separate_clipped(q, c2, b2);
        double fast_u = 0, fast_l = 0;
        for (const auto& c : cuts) {
          if (c.witness[0] == 'u') fast_u = c.violation;
          else fast_l = c.violation;
        }
        SeparationTruth tu = exhaustive_separation(q, c2, FamilyKind::Clipped, false);
        SeparationTruth tl = exhaustive_separation(q, c2, FamilyKind::Clipped, true);
        if (tu.violation > kCutTol) REQUIRE(std::abs(fast_u - tu.violation) <= 1e-9);
        else REQUIRE(fast_u <= kCutTol + 1e-9);
        if (tl.violation > kCutTol) REQUIRE(std::abs(fast_l - tl.violation) <= 1e-9);
        else REQUIRE(fast_l <= kCutTol + 1e-9);
      }
    }
  }
}

TEST_CASE("returned cuts are valid on every integer slice") {
  Rng rng(6006);
  int certified = 0;
  for (int t = 0; t < 30 && certified < 60; ++t) {
    int n = testutil::uniform_int(rng, 1, 3);
    int kind = testutil::uniform_int(rng, 0, 3);
    NeuronContext ctx;
    switch (kind) {
      case 0:
        ctx = NeuronContext::relu(testutil::random_affine(rng, n), testutil::random_box(rng, n));
        break;
      case 1:
        ctx = NeuronContext::leaky(testutil::random_affine(rng, n),
                                   testutil::uniform(rng, 0.05, 0.9), testutil::random_box(rng, n));
        break;
      case 2:
        ctx = NeuronContext::clipped(testutil::random_affine(rng, n),
                                     testutil::uniform(rng, 0.2, 1.2), testutil::random_box(rng, n));
        break;
      default: {
        std::vector<AffineFunc> pieces;
        int d = testutil::uniform_int(rng, 2, 3);
        for (int k = 0; k < d; ++k) pieces.push_back(testutil::random_affine(rng, n));
        ctx = NeuronContext::max_d(pieces, testutil::random_box(rng, n));
      }
    }
    VarBinding bind = local_binding(ctx);
    for (int s = 0; s < 10; ++s) {
      QueryPoint q = random_query(rng, ctx);
      std::vector<Cut> cuts;
      switch (ctx.kind) {
        case NeuronKind::Relu: {
          auto c = separate_relu_ideal(q, ctx, bind);
          if (c) cuts.push_back(*c);
          break;
        }
        case NeuronKind::Leaky: {
          auto c = separate_leaky(q, ctx, bind);
          if (c) cuts.push_back(*c);
          break;
        }
        case NeuronKind::Clipped: cuts = separate_clipped(q, ctx, bind); break;
        case NeuronKind::MaxD: {
          auto c = separate_max_d_box(q, ctx, bind);
          if (c) cuts.push_back(*c);
          break;
        }
      }
      for (const auto& cut : cuts) {
        certify_cut_validity(ctx, cut, bind);
        ++certified;
        // violation is consistent with a direct re-evaluation
        CHECK(std::abs(cut.violation - row_violation_at(cut.row, q, bind)) <= 1e-12);
      }
    }
  }
  CHECK(certified >= 60);
}

TEST_CASE("knapsack closed form for two pieces") {
  SUBCASE("single route") {
    auto r = knapsack_transport_d2({1.0}, {0.3, 0.7}, {5.0}, {2.0});
    CHECK(r.value == doctest::Approx(2.9));
    CHECK(r.argmin == 1);
  }
  SUBCASE("all mass on the first side") {
    auto r = knapsack_transport_d2({0.5, 0.5}, {1.0, 0.0}, {1.0, 3.0}, {0.0, 0.0});
    CHECK(r.value == doctest::Approx(2.0));
    CHECK(r.argmin == 1);
  }
  SUBCASE("matches the transportation LP") {
    Rng rng(7007);
    for (int t = 0; t < 1000; ++t) {
      int p = testutil::uniform_int(rng, 1, 6);
      auto x = testutil::random_simplex(rng, p);
      auto zv = testutil::random_simplex(rng, 2);
      std::vector<double> w1(p), w2(p);
      for (int j = 0; j < p; ++j) {
        w1[j] = testutil::uniform(rng, -3, 3);
        w2[j] = testutil::uniform(rng, -3, 3);
      }
      auto r = knapsack_transport_d2(x, {zv[0], zv[1]}, w1, w2);
      double lp = transport_lp(x, zv, {w1, w2});
      REQUIRE(std::abs(r.value - lp) <= 1e-8);
    }
  }
  SUBCASE("normalization violations throw") {
    CHECK_THROWS_AS(knapsack_transport_d2({0.5, 0.4}, {0.5, 0.5}, {1, 2}, {0, 0}), ModelError);
  }
}

TEST_CASE("knapsack closed form for two-coordinate simplices") {
  SUBCASE("unit z picks the matching piece value") {
    Rng rng(8008);
    for (int t = 0; t < 50; ++t) {
      int d = testutil::uniform_int(rng, 2, 5);
      std::vector<std::array<double, 2>> pieces(d);
      for (auto& w : pieces) w = {testutil::uniform(rng, -2, 2), testutil::uniform(rng, -2, 2)};
      auto x = testutil::random_simplex(rng, 2);
      int k = testutil::uniform_int(rng, 0, d - 1);
      std::vector<double> z(d, 0.0);
      z[k] = 1.0;
      auto r = knapsack_transport_p2({x[0], x[1]}, z, pieces);
      CHECK(r.value == doctest::Approx(pieces[k][0] * x[0] + pieces[k][1] * x[1]));
    }
  }
  SUBCASE("agrees with the d2 form when both apply") {
    Rng rng(9009);
    for (int t = 0; t < 300; ++t) {
      std::vector<std::array<double, 2>> pieces(2);
      for (auto& w : pieces) w = {testutil::uniform(rng, -2, 2), testutil::uniform(rng, -2, 2)};
      auto x = testutil::random_simplex(rng, 2);
      auto z = testutil::random_simplex(rng, 2);
      // swap roles: transport(x, z; pieces) has suppliers x and consumers z
      auto a = knapsack_transport_p2({x[0], x[1]}, z, pieces);
      std::vector<double> w1 = {pieces[0][0], pieces[0][1]};
      std::vector<double> w2 = {pieces[1][0], pieces[1][1]};
      // transpose: d2 view ships x over the two pieces
      auto b = knapsack_transport_d2(x, {z[0], z[1]}, {w1[0], w1[1]}, {w2[0], w2[1]});
      CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
    }
  }
  SUBCASE("matches the transportation LP") {
    Rng rng(1010);
    for (int t = 0; t < 1000; ++t) {
      int d = testutil::uniform_int(rng, 1, 5);
      std::vector<std::array<double, 2>> pieces(d);
      for (auto& w : pieces) w = {testutil::uniform(rng, -3, 3), testutil::uniform(rng, -3, 3)};
      auto x = testutil::random_simplex(rng, 2);
      auto z = testutil::random_simplex(rng, d);
      auto r = knapsack_transport_p2({x[0], x[1]}, z, pieces);
      std::vector<std::vector<double>> w(d);
      for (int k = 0; k < d; ++k) w[k] = {pieces[k][0], pieces[k][1]};
      double lp = transport_lp({x[0], x[1]}, z, w);
      REQUIRE(std::abs(r.value - lp) <= 1e-8);
    }
  }
}

TEST_CASE("dual subgradient separation") {
  SUBCASE("never beats the closed-form family on d=2 boxes") {
    // the equivalence of the two envelopes for two pieces holds where the
    // embedding's (x, z) slice is nonempty, so queries are built as mixtures
    // of per-piece attainment points
    Rng rng(1111);
    for (int t = 0; t < 6; ++t) {
      int n = testutil::uniform_int(rng, 1, 2);
      std::vector<AffineFunc> pieces = {testutil::random_affine(rng, n),
                                        testutil::random_affine(rng, n)};
      Domain dom = testutil::random_box(rng, n);
      NeuronContext ctx = NeuronContext::max_d(pieces, dom);
      // only irreducible neurons: both attainment regions full-dimensional
      Polytope P = domain_polytope(dom);
      auto irr = check_irreducible(pieces, dom);
      if (!irr[0] || !irr[1]) continue;
      VarBinding bind = local_binding(ctx);
      for (int s = 0; s < 8; ++s) {
        QueryPoint q;
        q.z = testutil::random_simplex(rng, 2);
        q.x.assign(n, 0.0);
        double graph_mix = 0.0;
        for (int k = 0; k < 2; ++k) {
          std::vector<double> c(n);
          for (double& v : c) v = testutil::uniform(rng, -1, 1);
          RegionLp r = region_lp(P, ctx.pieces, k, c, true);
          REQUIRE(r.status == LpStatus::Optimal);
          for (int i = 0; i < n; ++i) q.x[i] += q.z[k] * r.x[i];
          graph_mix += q.z[k] * ctx.pieces[k].eval(r.x);
        }
        q.y = graph_mix + testutil::uniform(rng, 0.0, 0.6);
        auto sharp = separate_max_d_box(q, ctx, bind);
        auto dual = separate_ideal_dual_subgradient(q, ctx, P, bind, 150);
        double vs = sharp ? sharp->violation : 0.0;
        double vd = dual ? dual->violation : 0.0;
        CHECK(vd <= vs + 1e-6);  // both families are exact for two pieces
      }
    }
  }
  SUBCASE("integer graph points yield no cut") {
    NeuronContext ctx = NeuronContext::max_d(
        {AffineFunc{{1.0}, 0.0}, AffineFunc{{-1.0}, 0.0}}, Domain::box({{-1, 1}}));
    Polytope P = domain_polytope(ctx.domain);
    VarBinding bind = local_binding(ctx);
    QueryPoint q{{0.7}, 0.7, {1.0, 0.0}};
    CHECK_FALSE(separate_ideal_dual_subgradient(q, ctx, P, bind, 60));
  }
  SUBCASE("three-piece hat function separates where the sharp family cannot") {
    // pieces -x+1, 0, x-2 over [0,3]; the query sits between the sharp and
    // ideal upper envelopes at z = (0, 1/2, 1/2)
    NeuronContext ctx = NeuronContext::max_d(
        {AffineFunc{{-1.0}, 1.0}, AffineFunc{{0.0}, 0.0}, AffineFunc{{1.0}, -2.0}},
        Domain::box({{0, 3}}));
    Polytope P = domain_polytope(ctx.domain);
    VarBinding bind = local_binding(ctx);
    QueryPoint q{{1.75}, 0.45, {0.0, 0.5, 0.5}};

    auto sharp = separate_max_d_box(q, ctx, bind);
    CHECK_FALSE(sharp);

    auto dual = separate_ideal_dual_subgradient(q, ctx, P, bind, 200);
    REQUIRE(dual);
    CHECK(dual->violation > 0.1);

    // grid oracle over the dual multiplier: the ideal envelope reaches 0.25
    double best = kInf;
    for (double a = -3; a <= 3.0001; a += 1e-3) {
      // inner maxima computed in closed form on the two active regions
      double v2 = std::max({-a * 1.0, -a * 2.0});      // region of the zero piece: [1,2]
      double v3 = std::max((1 - a) * 2, (1 - a) * 3);  // region of x-2: [2,3]
      best = std::min(best, a * 1.75 + 0.5 * v2 + 0.5 * (v3 - 2.0));
    }
    CHECK(best == doctest::Approx(0.25).epsilon(1e-3));
    CHECK(dual->violation <= q.y - best + 1e-3);
  }
  SUBCASE("empty attainment regions become feasibility cuts") {
    NeuronContext ctx = NeuronContext::max_d(
        {AffineFunc{{1.0}, 0.0}, AffineFunc{{0.0}, 0.0}, AffineFunc{{0.5}, -1.0}},
        Domain::box({{0, 1}}));
    Polytope P = domain_polytope(ctx.domain);
    VarBinding bind = local_binding(ctx);
    QueryPoint q{{0.5}, 0.5, {0.3, 0.3, 0.4}};
    auto cut = separate_ideal_dual_subgradient(q, ctx, P, bind, 50);
    REQUIRE(cut);
    CHECK(cut->witness == "prune:2");
    CHECK(cut->row.terms.size() == 1);
    CHECK(cut->row.terms[0].var == bind.z[2]);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "pwlv/oracle.hpp"
#include "test_util.hpp"

using namespace pwlv;
using testutil::Rng;

namespace {

Network single_relu_net(const AffineFunc& f) {
  Network net;
  net.input_dim = f.dim();
  Layer l;
  l.in_dim = f.dim();
  Neuron nr;
  nr.act.kind = ActKind::Relu;
  nr.pieces = {f};
  l.neurons.push_back(nr);
  net.layers.push_back(l);
  return net;
}

}  // namespace

TEST_CASE("support function of the worked example") {
  NeuronContext ctx = testutil::example1_ctx();
  SUBCASE("maximum output value") {
    SupportQuery q{{0, 0}, 1.0, {}};
    CHECK(support_function_maxgraph(ctx, ctx.domain, q) == doctest::Approx(0.5));
  }
  SUBCASE("the strengthened direction is exact at zero") {
    SupportQuery q{{0, -0.5}, 1.0, {}};
    CHECK(support_function_maxgraph(ctx, ctx.domain, q) == doctest::Approx(0.0));
  }
  SUBCASE("minimizing the output reaches zero") {
    SupportQuery q{{0, 0}, -1.0, {}};
    CHECK(support_function_maxgraph(ctx, ctx.domain, q) == doctest::Approx(0.0));
  }
}

TEST_CASE("support function invariances") {
  Rng rng(11);
  for (int t = 0; t < 15; ++t) {
    int n = testutil::uniform_int(rng, 1, 3);
    int d = testutil::uniform_int(rng, 2, 3);
    Domain dom = testutil::random_box(rng, n);
    std::vector<AffineFunc> pieces;
    for (int k = 0; k < d; ++k) pieces.push_back(testutil::random_affine(rng, n));
    NeuronContext ctx = NeuronContext::max_d(pieces, dom);
    SupportQuery q;
    q.cx.resize(n);
    for (double& v : q.cx) v = testutil::uniform(rng, -1, 1);
    q.cy = testutil::uniform(rng, -1, 1);
    double base = support_function_maxgraph(ctx, dom, q);

    {
      // piece order must not matter
      std::vector<AffineFunc> rev(pieces.rbegin(), pieces.rend());
      NeuronContext rctx = NeuronContext::max_d(rev, dom);
      CHECK(support_function_maxgraph(rctx, dom, q) == doctest::Approx(base).epsilon(1e-9));

      // appending a strictly dominated piece changes nothing
      AffineFunc dominated = pieces[0];
      dominated.b -= 50.0;
      std::vector<AffineFunc> plus = pieces;
      plus.push_back(dominated);
      NeuronContext pctx = NeuronContext::max_d(plus, dom);
      CHECK(support_function_maxgraph(pctx, dom, q) == doctest::Approx(base).epsilon(1e-9));
    }
  }
}

TEST_CASE("activation enumeration on the worked example") {
  SUBCASE("identity relu reaches its ceiling") {
    Network net = single_relu_net(AffineFunc{{1.0}, 0.0});
    double v = enumerate_activation_optimum(net, Domain::box({{-1, 1}}), {0.0, 1.0});
    CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("example-1 optimum over two patterns") {
    Network net = single_relu_net(AffineFunc{{1.0, 1.0}, -1.5});
    double v =
        enumerate_activation_optimum(net, Domain::box({{0, 1}, {0, 1}}), {0.0, 0.0, 1.0});
    CHECK(v == doctest::Approx(0.5));
  }
  SUBCASE("objective value dominates sampled forward passes") {
    Rng rng(21);
    testutil::RandomNetSpec spec;
    spec.input_dim = 2;
    spec.widths = {3, 2};
    spec.maxd = true;
    Network net = testutil::random_network(rng, spec);
    Domain dom = testutil::random_box(rng, 2);
    std::vector<double> obj(2 + 3 + 2, 0.0);
    obj[5] = 1.0;
    obj[6] = -0.5;
    double best = enumerate_activation_optimum(net, dom, obj);
    for (int s = 0; s < 1000; ++s) {
      std::vector<double> x = testutil::random_point(rng, dom);
      auto out = net.forward(x);
      double v = out[0] - 0.5 * out[1];
      REQUIRE(v <= best + 1e-7);
    }
  }
  SUBCASE("pattern guard") {
    testutil::RandomNetSpec spec;
    spec.input_dim = 2;
    spec.widths = {21, 1};
    Rng rng(5);
    Network net = testutil::random_network(rng, spec);
    std::vector<double> obj(2 + 21 + 1, 0.0);
    obj.back() = 1.0;
    CHECK_THROWS_AS(enumerate_activation_optimum(net, testutil::random_box(rng, 2), obj),
                    GuardError);
  }
}

TEST_CASE("transportation LP") {
  SUBCASE("single cell") {
    CHECK(transport_lp({1.0}, {1.0}, {{4.5}}) == doctest::Approx(4.5));
  }
  SUBCASE("unit supplier picks its row") {
    Rng rng(31);
    for (int t = 0; t < 30; ++t) {
      int p = testutil::uniform_int(rng, 1, 5);
      int d = testutil::uniform_int(rng, 1, 4);
      std::vector<std::vector<double>> w(d, std::vector<double>(p));
      for (auto& row : w)
        for (double& v : row) v = testutil::uniform(rng, -2, 2);
      auto x = testutil::random_simplex(rng, p);
      int k = testutil::uniform_int(rng, 0, d - 1);
      std::vector<double> z(d, 0.0);
      z[k] = 1.0;
      double want = 0;
      for (int j = 0; j < p; ++j) want += w[k][j] * x[j];
      CHECK(transport_lp(x, z, w) == doctest::Approx(want).epsilon(1e-8));
    }
  }
  SUBCASE("symmetry under exchanging the marginals") {
    Rng rng(41);
    for (int t = 0; t < 100; ++t) {
      int p = testutil::uniform_int(rng, 1, 4);
      int d = testutil::uniform_int(rng, 1, 4);
      std::vector<std::vector<double>> w(d, std::vector<double>(p));
      for (auto& row : w)
        for (double& v : row) v = testutil::uniform(rng, -2, 2);
      auto x = testutil::random_simplex(rng, p);
      auto z = testutil::random_simplex(rng, d);
      std::vector<std::vector<double>> wt(p, std::vector<double>(d));
      for (int k = 0; k < d; ++k)
        for (int j = 0; j < p; ++j) wt[j][k] = w[k][j];
      CHECK(transport_lp(x, z, w) == doctest::Approx(transport_lp(z, x, wt)).epsilon(1e-8));
    }
  }
  SUBCASE("unnormalized marginals throw") {
    CHECK_THROWS_AS(transport_lp({0.6, 0.6}, {1.0}, {{1, 1}}), ModelError);
  }
}

TEST_CASE("exhaustive separation matches the worked example") {
  NeuronContext ctx = testutil::example1_ctx();
  QueryPoint q{{1.0, 0.0}, 0.25, {0.5}};
  SeparationTruth t = exhaustive_separation(q, ctx, FamilyKind::ReluIdeal);
  CHECK(t.witness == "I:01");
  CHECK(t.violation == doctest::Approx(0.5));

  QueryPoint integral{{1.0, 1.0}, 0.5, {1.0}};
  SeparationTruth ti = exhaustive_separation(integral, ctx, FamilyKind::ReluIdeal);
  CHECK(ti.violation <= 1e-9);
}

TEST_CASE("family enumeration respects the guard") {
  std::vector<Interval> big(15, Interval{0, 1});
  NeuronContext ctx = NeuronContext::relu(AffineFunc{std::vector<double>(15, 1.0), 0.0},
                                          Domain::box(big));
  VarBinding bind;
  for (int i = 0; i < 15; ++i) bind.x.push_back(i);
  bind.y = 15;
  bind.z = {16};
  CHECK_THROWS_AS(enumerate_family_rows(ctx, bind, FamilyKind::ReluIdeal), GuardError);
}

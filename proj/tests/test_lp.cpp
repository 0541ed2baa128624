#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pwlv/formulation.hpp"
#include "pwlv/lp.hpp"
#include "test_util.hpp"

using namespace pwlv;
using testutil::Rng;

namespace {

// rows are anchored at a random interior point so every instance is feasible
LpProblem random_bounded_lp(Rng& rng, int nvars, int nrows) {
  LpProblem lp;
  std::vector<double> anchor(nvars);
  for (int j = 0; j < nvars; ++j) {
    double a = testutil::uniform(rng, -5, 5), b = testutil::uniform(rng, -5, 5);
    lp.add_var(std::min(a, b), std::max(a, b) + 0.05, testutil::uniform(rng, -2, 2));
    anchor[j] = testutil::uniform(rng, lp.lo[j], lp.hi[j]);
  }
  for (int r = 0; r < nrows; ++r) {
    LinearConstraint c;
    for (int j = 0; j < nvars; ++j)
      if (testutil::uniform(rng, 0, 1) < 0.6) c.terms.push_back({j, testutil::uniform(rng, -2, 2)});
    int s = testutil::uniform_int(rng, 0, 4);
    c.sense = s <= 1 ? Sense::LE : s <= 3 ? Sense::GE : Sense::EQ;
    double at = c.activity(anchor);
    double slack = testutil::uniform(rng, 0, 2);
    c.rhs = c.sense == Sense::LE ? at + slack : c.sense == Sense::GE ? at - slack : at;
    lp.add_row(std::move(c));
  }
  return lp;
}

// dual objective of max{c x : rows, l <= x <= u} at an optimal basis
double dual_objective(const LpProblem& p, const LpResult& r) {
  double v = 0.0;
  for (size_t i = 0; i < p.rows.size(); ++i) v += r.duals[i] * p.rows[i].rhs;
  for (int j = 0; j < p.num_vars(); ++j) {
    double rc = r.reduced_costs[j];
    if (rc > 0) v += rc * p.hi[j];
    else if (rc < 0) v += rc * p.lo[j];
  }
  return v;
}

}  // namespace

TEST_CASE("example 1 big-M relaxation maximizes y at 0.5") {
  NeuronContext ctx = testutil::example1_ctx();
  BuildOptions opt;
  MipModel m = build_neuron_model(ctx, opt);
  Objective obj;
  obj.maximize = true;
  obj.terms.push_back({m.neurons[0].bind.y, 1.0});
  LpResult r = solve_lp(m, &obj);
  REQUIRE(r.status == LpStatus::Optimal);

  // independent grid oracle over (x, z): max y = min of the two upper rows
  double best = -kInf;
  for (int i1 = 0; i1 <= 20; ++i1)
    for (int i2 = 0; i2 <= 20; ++i2)
      for (int iz = 0; iz <= 20; ++iz) {
        double x1 = i1 / 20.0, x2 = i2 / 20.0, z = iz / 20.0;
        double f = x1 + x2 - 1.5;
        double ub = std::min(f + 1.5 * (1 - z), 0.5 * z);
        double lb = std::max(f, 0.0);
        if (ub >= lb - 1e-12) best = std::max(best, ub);
      }
  CHECK(r.objective == doctest::Approx(best).epsilon(1e-9));
  CHECK(r.objective == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("infeasible bounds are reported") {
  LpProblem lp;
  lp.add_var(-kInf, kInf, 1.0);
  LinearConstraint c1;
  c1.terms = {{0, 1.0}};
  c1.sense = Sense::LE;
  c1.rhs = 1.0;
  lp.add_row(c1);
  LinearConstraint c2;
  c2.terms = {{0, 1.0}};
  c2.sense = Sense::GE;
  c2.rhs = 2.0;
  lp.add_row(c2);
  CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("free variable with no rows is unbounded") {
  LpProblem lp;
  lp.add_var(-kInf, kInf, 1.0);
  CHECK(solve_lp(lp).status == LpStatus::Unbounded);
}

TEST_CASE("contradictory variable bounds are infeasible") {
  LpProblem lp;
  lp.add_var(2.0, 1.0, 1.0);
  CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("duality and vertex property on random bounded instances") {
  Rng rng(20240811);
  int solved = 0;
  for (int t = 0; t < 1000; ++t) {
    int n = testutil::uniform_int(rng, 1, 30);
    int mrows = testutil::uniform_int(rng, 0, 30);
    LpProblem lp = random_bounded_lp(rng, n, mrows);
    LpResult r = solve_lp(lp);
    REQUIRE(r.status != LpStatus::NumericError);
    REQUIRE(r.status != LpStatus::Unbounded);  // all variables bounded
    if (r.status != LpStatus::Optimal) continue;
    ++solved;

    double dual = dual_objective(lp, r);
    CHECK(std::abs(dual - r.objective) <= 1e-7 * (1 + std::abs(r.objective)));

    // basic solutions keep at most (#rows) variables strictly between bounds
    int interior = 0;
    for (int j = 0; j < n; ++j)
      if (r.x[j] > lp.lo[j] + 1e-7 && r.x[j] < lp.hi[j] - 1e-7) ++interior;
    CHECK(interior <= mrows);

    // feasibility of the returned point
    for (const auto& row : lp.rows) CHECK(row.violation(r.x) <= 1e-6);
  }
  CHECK(solved == 1000);  // anchored generation keeps every instance feasible
}

TEST_CASE("identical inputs give identical pivot sequences") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    LpProblem lp = random_bounded_lp(rng, 12, 10);
    LpResult a = solve_lp(lp);
    LpResult b = solve_lp(lp);
    CHECK(a.status == b.status);
    REQUIRE(a.pivots.size() == b.pivots.size());
    CHECK(a.pivots == b.pivots);
    if (a.status == LpStatus::Optimal) CHECK(a.objective == b.objective);
  }
}

TEST_CASE("equality-constrained LP needs phase one") {
  // max x + y s.t. x + y = 1, x - y = 0 -> x = y = 0.5
  LpProblem lp;
  lp.add_var(-10, 10, 1.0);
  lp.add_var(-10, 10, 1.0);
  LinearConstraint c1;
  c1.terms = {{0, 1.0}, {1, 1.0}};
  c1.sense = Sense::EQ;
  c1.rhs = 1.0;
  lp.add_row(c1);
  LinearConstraint c2;
  c2.terms = {{0, 1.0}, {1, -1.0}};
  c2.sense = Sense::EQ;
  c2.rhs = 0.0;
  lp.add_row(c2);
  LpResult r = solve_lp(lp);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(1.0));
  CHECK(r.x[0] == doctest::Approx(0.5));
}

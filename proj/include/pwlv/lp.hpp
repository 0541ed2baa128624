#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace pwlv {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinTerm {
  int var;
  double coef;
};

enum class Sense { LE, EQ, GE };

struct LinearConstraint {
  std::vector<LinTerm> terms;  // sorted by var index, no duplicates
  Sense sense = Sense::LE;
  double rhs = 0.0;
  std::string name;

  double activity(const std::vector<double>& x) const;
  // lhs - rhs for LE rows, rhs - lhs for GE rows, |lhs - rhs| for EQ rows
  double violation(const std::vector<double>& x) const;
};

// A bounded LP in the form: maximize obj . x subject to rows, lo <= x <= hi.
struct LpProblem {
  std::vector<double> lo, hi, obj;
  std::vector<LinearConstraint> rows;
  bool maximize = true;

  int num_vars() const { return static_cast<int>(lo.size()); }
  int add_var(double l, double h, double c = 0.0);
  void add_row(LinearConstraint c) { rows.push_back(std::move(c)); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericError };

struct LpResult {
  LpStatus status = LpStatus::NumericError;
  double objective = 0.0;
  std::vector<double> x;              // structural variable values
  std::vector<double> duals;          // one multiplier per row
  std::vector<double> reduced_costs;  // per structural variable
  std::vector<int> basis;             // basic column per row (>= n means slack)
  std::vector<unsigned char> at_upper;
  std::vector<std::pair<int, int>> pivots;  // (entering, leaving); leaving=-1 is a bound flip
  int iterations = 0;
  std::string message;  // detail for NumericError
};

// Dense bounded-variable primal simplex. Dantzig pricing with a Bland
// fallback after 50 consecutive degenerate pivots; phase 1 uses auxiliary
// artificial columns. Deterministic: identical inputs yield identical
// pivot sequences.
LpResult solve_lp(const LpProblem& p);

}  // namespace pwlv

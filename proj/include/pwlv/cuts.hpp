#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pwlv/formulation.hpp"
#include "pwlv/mip.hpp"

namespace pwlv {

// tolerance for emitting a cut
constexpr double kCutTol = 1e-6;

// Relaxation values at one neuron: inputs, output, binaries.
struct QueryPoint {
  std::vector<double> x;
  double y = 0.0;
  std::vector<double> z;
};

struct Cut {
  LinearConstraint row;  // over model variables (via the binding)
  double violation = 0.0;
  FamilyKind family;
  std::string witness;
  bool facet = true;
};

// Assembles a query from an LP point and clamps z back onto the simplex
// (LP noise only; anything beyond 1e-9 is the caller's bug).
QueryPoint make_query(const std::vector<double>& lp_point, const VarBinding& bind);

// lhs-rhs of a row evaluated at a query through its binding (positive = violated
// for LE rows; GE rows report rhs-lhs).
double row_violation_at(const LinearConstraint& row, const QueryPoint& q, const VarBinding& bind);

// Family member rows. Choices are per-block for the d=2 families (interval
// blocks: 1 = active-side term, 2 = inactive-side term; simplex blocks: 1-based
// position in the cached ascending weight order).
LinearConstraint relu_member_row(const NeuronContext& ctx, const std::vector<int>& choice,
                                 const VarBinding& bind, const std::string& name);
// mapping: 0-based piece index per coordinate
LinearConstraint maxd_member_row(const NeuronContext& ctx, const std::vector<int>& mapping,
                                 const VarBinding& bind, const std::string& name);
// subset flags per coordinate
LinearConstraint leaky_member_row(const NeuronContext& ctx, const std::vector<char>& in_set,
                                  const VarBinding& bind, const std::string& name);
LinearConstraint clipped_member_row(const NeuronContext& ctx, const std::vector<char>& in_set,
                                    bool upper_family, const VarBinding& bind,
                                    const std::string& name);

std::string subset_witness(const std::vector<char>& in_set);
std::string mapping_witness(const std::vector<int>& mapping);

// Closed-form separation oracles. Each returns the most violated family member
// when its violation exceeds kCutTol.
std::optional<Cut> separate_relu_ideal(const QueryPoint& q, const NeuronContext& ctx,
                                       const VarBinding& bind);
std::optional<Cut> separate_onehot_relu(const QueryPoint& q, const NeuronContext& ctx,
                                        const VarBinding& bind);
std::optional<Cut> separate_max_d_box(const QueryPoint& q, const NeuronContext& ctx,
                                      const VarBinding& bind);
std::optional<Cut> separate_leaky(const QueryPoint& q, const NeuronContext& ctx,
                                  const VarBinding& bind);
// up to two cuts: the upper and the lower family
std::vector<Cut> separate_clipped(const QueryPoint& q, const NeuronContext& ctx,
                                  const VarBinding& bind);

// Subgradient separation of the ideal dual family over a polytope domain.
// Pieces whose attainment region is empty yield a z_k = 0 feasibility cut.
std::optional<Cut> separate_ideal_dual_subgradient(const QueryPoint& q, const NeuronContext& ctx,
                                                   const Polytope& P, const VarBinding& bind,
                                                   int iters = 200);

// Transportation closed forms. Indices follow the ascending-sorted weight
// order; ties resolve to the smallest index.
struct KnapsackResult {
  double value = 0.0;
  int argmin = 0;  // 1-based position in sorted order
};
KnapsackResult knapsack_transport_d2(const std::vector<double>& x, const std::array<double, 2>& z,
                                     const std::vector<double>& w1, const std::vector<double>& w2);
KnapsackResult knapsack_transport_p2(const std::array<double, 2>& x, const std::vector<double>& z,
                                     const std::vector<std::array<double, 2>>& pieces);

// Dispatch used by the solver's cut loop.
std::vector<Cut> separate_family(const MipModel& model, const CutFamily& fam,
                                 const std::vector<double>& lp_point);

}  // namespace pwlv

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pwlv/cuts.hpp"
#include "pwlv/formulation.hpp"
#include "pwlv/mip.hpp"

namespace pwlv {

// Linear objective over a neuron's (x, y) space, optionally with z costs
// (the Cayley embedding objective).
struct SupportQuery {
  std::vector<double> cx;
  double cy = 0.0;
  std::vector<double> cz;  // empty or one per piece
};

// Exact support function of the convex hull of the neuron's graph (or of the
// Cayley embedding when cz is set): one LP per piece over its attainment
// region. `active` restricts which pieces may act as the maximizer (dominance
// rows always run over all pieces); nullptr means all.
double support_function_maxgraph(const NeuronContext& ctx, const Domain& dom,
                                 const SupportQuery& q,
                                 const std::vector<int>* active = nullptr);

// Exact network optimum by enumerating integer activation assignments. The
// objective is a dense coefficient vector over [inputs..., layer-1 outputs...,
// ..., layer-s outputs...]. Guard: at most 2^20 activation patterns.
// coord_clamp, when set, intersects the per-coordinate input boxes (used for
// instance balls on simplex blocks).
double enumerate_activation_optimum(const Network& net, const Domain& dom,
                                    const std::vector<double>& objective,
                                    const std::vector<Interval>* coord_clamp = nullptr);
// Projects a model objective (over model variables) to the flat layout above.
std::vector<double> flatten_objective(const MipModel& model, const Network& net);

// Max-weight transportation LP; validates the dual residual to 1e-8.
double transport_lp(const std::vector<double>& x, const std::vector<double>& z,
                    const std::vector<std::vector<double>>& weights);

// True maximum violation over an entire family by enumeration.
struct SeparationTruth {
  std::string witness;
  double violation = -kInf;
};
// family: ReluIdeal / OneHotRelu / MaxDBox / Leaky enumerate their members;
// Clipped enumerates one of its two families, selected by `clipped_lower`.
SeparationTruth exhaustive_separation(const QueryPoint& q, const NeuronContext& ctx,
                                      FamilyKind family, bool clipped_lower = false);

// All members of a family as rows (small sizes only; guard 2^14).
std::vector<LinearConstraint> enumerate_family_rows(const NeuronContext& ctx,
                                                    const VarBinding& bind, FamilyKind family);

}  // namespace pwlv

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pwlv/mip.hpp"

namespace pwlv {

enum class FormulationMode { BigM, Extended, BigMWithCuts };
enum class CoeffMode { Paper, Tjeng };

struct BuildOptions {
  FormulationMode mode = FormulationMode::BigM;
  CoeffMode coeff = CoeffMode::Paper;
};

// General polytope domain: coordinate bounds plus extra rows over coordinates.
struct Polytope {
  std::vector<Interval> bounds;
  std::vector<LinearConstraint> rows;

  int dim() const { return static_cast<int>(bounds.size()); }
};

Polytope domain_polytope(const Domain& dom);

// LP over a polytope, optionally restricted to the region where one piece
// attains the max. Returns nullopt when the region is empty.
struct RegionLp {
  LpStatus status;
  double value = 0.0;
  std::vector<double> x;
};
RegionLp region_lp(const Polytope& P, const std::vector<AffineFunc>& pieces, int piece,
                   const std::vector<double>& obj, bool maximize);

struct BlockResult {
  VarBinding bind;
  std::vector<int> rows;  // indices of rows the block appended
};

// Per-neuron constraint blocks. Each creates the neuron's output and binary
// variables, appends its rows, and returns the bindings. `suffix` feeds the
// deterministic variable naming scheme (y_<suffix>, z_<suffix>_k, v_<suffix>_t).
BlockResult relu_bigm(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                      const std::string& suffix);
BlockResult relu_extended(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                          const std::string& suffix);
BlockResult max_d_bigm_box(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                           const std::string& suffix, CoeffMode coeff);
BlockResult leaky_bigm(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                       const std::string& suffix);
BlockResult clipped_bigm(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                         const std::string& suffix);
// Base rows plus the two seeded family members (the big-M analogue on one-hot
// and mixed domains). register_family controls whether the lazy family is kept.
BlockResult onehot_relu_block(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                              const std::string& suffix, bool register_family);

// Big-M formulation over an arbitrary bounded polytope, with coefficients from
// 2d(d-1) LPs. Pieces whose attainment region is empty must be pruned first.
BlockResult max_d_bigm_polytope(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                                const std::string& suffix, const Polytope& P);
// Drops pieces that never attain the max anywhere on P (one LP per piece).
NeuronContext prune_pieces_polytope(const NeuronContext& ctx, const Polytope& P);

// Union-of-pieces extended formulation (the multiple-choice construction).
// Handles every neuron kind; for d=2 it reduces to the single-binary form.
BlockResult balas_extended(MipModel& m, int ctx_idx, const std::vector<int>& xvars,
                           const std::string& suffix);

// Paper-mode and comparison-mode big-M coefficients for max-of-d over a box.
double coeff_paper(const NeuronContext& ctx, int ell, int k);
double coeff_tjeng(const NeuronContext& ctx, int ell, int k);
// LP-based coefficient over an arbitrary polytope (plus: max, minus: min).
double coeff_polytope(const NeuronContext& ctx, const Polytope& P, int ell, int k, bool plus);

// Standalone model for one neuron: domain variables and rows plus the block.
MipModel build_neuron_model(const NeuronContext& ctx, const BuildOptions& opt);

// Full verification model: bounds propagated, stable neurons linearized,
// per-neuron blocks composed layer by layer, objective = target - source logit.
MipModel assemble_network_formulation(const Network& net, const Domain& dom,
                                      const VerificationInstance* inst,
                                      const BuildOptions& opt);

// LP-based per-neuron bound tightening (opt-in alternative to pure intervals).
BoundsTable propagate_bounds_lp(const Network& net, const Domain& dom);

}  // namespace pwlv

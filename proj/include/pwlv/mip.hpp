#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pwlv/lp.hpp"
#include "pwlv/model.hpp"

namespace pwlv {

enum class VarKind { Continuous, Binary };

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lo = -kInf, hi = kInf;

  // provenance tag used to project model objectives into network space
  enum class Tag { Input, Output, Binary, Aux } tag = Tag::Aux;
  int layer = -1, neuron = -1, piece = -1;
};

struct Objective {
  bool maximize = true;
  std::vector<LinTerm> terms;
};

enum class NeuronKind { Relu, Leaky, Clipped, MaxD };

// Everything one neuron's formulation and separation needs: the affine
// pieces over the neuron's input domain, plus caches derived from them.
struct NeuronContext {
  NeuronKind kind = NeuronKind::Relu;
  double alpha = 0.0;  // Leaky
  double cap = 0.0;    // Clipped
  std::vector<AffineFunc> pieces;     // Relu {f, 0}; Leaky {f, alpha f}; MaxD d pieces; Clipped {f}
  Domain domain;                      // the neuron's input blocks
  std::vector<Interval> piece_range;  // affine range per piece over domain

  // per simplex block (d=2 kinds): coordinate order ascending by w1-w2
  std::vector<std::vector<int>> simplex_order;
  // per interval coordinate (MaxD): piece order ascending by w^k*(U-L)
  std::vector<std::vector<int>> coord_piece_order;

  int dim() const { return domain.dim(); }
  int num_pieces() const { return static_cast<int>(pieces.size()); }
  const AffineFunc& f() const { return pieces[0]; }
  // bound of coordinate i minimizing / maximizing w * x_i (the paper's breve bounds)
  double lo_side(double w, int i) const;
  double hi_side(double w, int i) const;

  static NeuronContext relu(AffineFunc f, Domain dom);
  static NeuronContext leaky(AffineFunc f, double alpha, Domain dom);
  static NeuronContext clipped(AffineFunc f, double cap, Domain dom);
  static NeuronContext max_d(std::vector<AffineFunc> pieces, Domain dom);
};

enum class FamilyKind { ReluIdeal, MaxDBox, OneHotRelu, Leaky, Clipped, IdealDualSubgradient };

const char* family_name(FamilyKind k);

// Where a neuron's variables live in the model.
struct VarBinding {
  std::vector<int> x;  // the neuron's input variables, in domain coordinate order
  int y = -1;
  std::vector<int> z;  // binaries (1 for d=2 kinds, 3 for Clipped, d for MaxD)
  std::vector<int> aux;
};

struct CutFamily {
  FamilyKind kind;
  int context = -1;  // index into MipModel::contexts
  VarBinding bind;
};

// One nonlinear neuron's footprint in the model (all modes; drives the
// rounding heuristic and activation-pattern enumeration).
struct NeuronEntry {
  NeuronKind kind;
  int context = -1;
  VarBinding bind;
};

struct MipModel {
  std::vector<Variable> vars;
  std::vector<LinearConstraint> rows;
  Objective objective;
  std::vector<NeuronContext> contexts;
  std::vector<CutFamily> families;
  std::vector<NeuronEntry> neurons;

  int add_var(std::string name, VarKind kind, double lo, double hi);
  int add_row(LinearConstraint c);
  int num_binaries() const;
  std::vector<int> binary_vars() const;

  // LP relaxation (integrality dropped); optional objective override
  LpProblem relax(const Objective* override_obj = nullptr) const;
};

LpResult solve_lp(const MipModel& model, const Objective* override_obj = nullptr);

}  // namespace pwlv

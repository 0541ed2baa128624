#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pwlv/lp.hpp"

namespace pwlv {

struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Size guards fail loudly rather than truncating.
struct GuardError : ModelError {
  explicit GuardError(const std::string& what) : ModelError(what) {}
};

struct Interval {
  double lo = 0.0, hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
};

struct AffineFunc {
  std::vector<double> w;
  double b = 0.0;

  int dim() const { return static_cast<int>(w.size()); }
  double eval(const std::vector<double>& x) const;
  double eval(const double* x) const;
};

enum class ActKind { Linear, Relu, Leaky, Clipped, MaxOfD };

struct Activation {
  ActKind kind = ActKind::Linear;
  double alpha = 0.0;  // Leaky slope, in (0,1)
  double cap = 0.0;    // Clipped ceiling, > 0
  int pieces = 1;      // MaxOfD piece count, >= 2

  double apply(double v) const;  // scalar kinds only
};

struct Neuron {
  std::vector<AffineFunc> pieces;  // one entry for scalar kinds, d for MaxOfD
  Activation act;

  double eval(const std::vector<double>& in) const;
};

struct Layer {
  int in_dim = 0;
  std::vector<Neuron> neurons;

  int out_dim() const { return static_cast<int>(neurons.size()); }
};

struct Network {
  int input_dim = 0;
  std::vector<Layer> layers;

  int output_dim() const { return layers.back().out_dim(); }
  int num_layers() const { return static_cast<int>(layers.size()); }
  std::vector<double> forward(const std::vector<double>& input) const;
  void validate() const;  // throws ModelError with layer/neuron coordinates
};

// Input domain: an ordered product of interval and simplex blocks.
struct Domain {
  struct Block {
    bool simplex = false;
    double lo = 0.0, hi = 0.0;  // interval blocks
    int p = 0;                  // simplex coordinate count, >= 2
    int offset = 0;             // first coordinate index

    int size() const { return simplex ? p : 1; }
  };
  std::vector<Block> blocks;

  int dim() const;
  void reindex();  // recompute block offsets
  void validate() const;
  bool pure_box() const;
  bool has_simplex() const;
  // per-coordinate box relaxation (simplex coordinates relax to [0,1])
  std::vector<Interval> coordinate_boxes() const;
  bool contains(const std::vector<double>& x, double tol = 1e-9) const;
  static Domain box(const std::vector<Interval>& boxes);
};

struct VerificationInstance {
  std::vector<double> center;
  double epsilon = 0.0;
  int source_label = 0;
  int target_label = 0;
};

struct LoadedModel {
  Network net;
  Domain domain;
};

// Parsers for the documented JSON schemas; throw ModelError on violations.
LoadedModel load_network(const std::string& text);
LoadedModel load_network_file(const std::string& path);
VerificationInstance load_instance(const std::string& text, const Network& net, const Domain& dom);
VerificationInstance load_instance_file(const std::string& path, const Network& net, const Domain& dom);

// Exact range of an affine function over a box (closed form, no LP).
Interval affine_bounds(const AffineFunc& f, const std::vector<Interval>& box);
// Same but per domain block: simplex blocks contribute max/min weight, not box corners.
Interval affine_bounds_domain(const AffineFunc& f, const Domain& dom);

struct NeuronBounds {
  Interval pre;                      // range bound of the pre-activation (max of pieces for MaxOfD)
  Interval post;                     // activation applied to pre
  std::vector<Interval> piece_pre;   // per-piece affine ranges
};

using BoundsTable = std::vector<std::vector<NeuronBounds>>;

BoundsTable propagate_bounds(const Network& net, const Domain& dom);

// Replaces neurons whose bounds pin them to a single affine regime with linear
// neurons; the returned network computes the same function on the domain.
Network linearize_stable_neurons(const Network& net, const BoundsTable& bounds);

// Per piece: is it strictly maximal somewhere on dom? Closed-form on boxes for
// d=2, one LP per piece otherwise. Tolerance 1e-7 on the dominance margin.
std::vector<bool> check_irreducible(const std::vector<AffineFunc>& pieces, const Domain& dom);

// Intersection of dom with the instance's infinity-norm ball. Interval blocks
// shrink; simplex blocks keep their structure (the per-coordinate clamp is
// applied to variable bounds when the model is assembled).
Domain effective_domain(const Domain& dom, const VerificationInstance& inst);

}  // namespace pwlv

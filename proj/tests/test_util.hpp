#pragma once

#include <random>
#include <vector>

#include "pwlv/formulation.hpp"
#include "pwlv/mip.hpp"
#include "pwlv/model.hpp"

namespace pwlv::testutil {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline AffineFunc random_affine(Rng& rng, int dim, double scale = 1.0) {
  AffineFunc f;
  f.w.resize(dim);
  for (double& v : f.w) v = uniform(rng, -scale, scale);
  f.b = uniform(rng, -scale, scale);
  return f;
}

inline Domain random_box(Rng& rng, int dim, double span = 2.0) {
  std::vector<Interval> boxes(dim);
  for (auto& iv : boxes) {
    double a = uniform(rng, -span, span), b = uniform(rng, -span, span);
    iv = {std::min(a, b), std::max(a, b) + 0.1};
  }
  return Domain::box(boxes);
}

// mixed interval/simplex domain
inline Domain random_domain(Rng& rng, int nblocks, int max_p, bool allow_simplex) {
  Domain d;
  for (int b = 0; b < nblocks; ++b) {
    Domain::Block blk;
    if (allow_simplex && uniform(rng, 0, 1) < 0.5) {
      blk.simplex = true;
      blk.p = uniform_int(rng, 2, max_p);
    } else {
      double a = uniform(rng, -2, 2), c = uniform(rng, -2, 2);
      blk.lo = std::min(a, c);
      blk.hi = std::max(a, c) + 0.1;
    }
    d.blocks.push_back(blk);
  }
  d.reindex();
  return d;
}

// a point of the domain, coordinates uniform (simplex blocks normalized)
inline std::vector<double> random_point(Rng& rng, const Domain& dom) {
  std::vector<double> x(dom.dim());
  for (const auto& blk : dom.blocks) {
    if (blk.simplex) {
      double s = 0;
      for (int j = 0; j < blk.p; ++j) {
        x[blk.offset + j] = -std::log(uniform(rng, 1e-9, 1.0));
        s += x[blk.offset + j];
      }
      for (int j = 0; j < blk.p; ++j) x[blk.offset + j] /= s;
    } else {
      x[blk.offset] = uniform(rng, blk.lo, blk.hi);
    }
  }
  return x;
}

inline std::vector<double> random_simplex(Rng& rng, int n) {
  std::vector<double> z(n);
  double s = 0;
  for (double& v : z) {
    v = -std::log(uniform(rng, 1e-9, 1.0));
    s += v;
  }
  for (double& v : z) v /= s;
  return z;
}

// random feedforward network over a box domain; activations sampled from kinds
struct RandomNetSpec {
  int input_dim = 3;
  std::vector<int> widths = {3, 2};
  bool relu = true, leaky = false, clipped = false, maxd = false;
  double weight_scale = 1.0;
};

inline Network random_network(Rng& rng, const RandomNetSpec& spec) {
  Network net;
  net.input_dim = spec.input_dim;
  int prev = spec.input_dim;
  for (size_t li = 0; li < spec.widths.size(); ++li) {
    Layer layer;
    layer.in_dim = prev;
    bool last = li + 1 == spec.widths.size();
    for (int j = 0; j < spec.widths[li]; ++j) {
      Neuron nr;
      if (last) {
        nr.act.kind = ActKind::Linear;
        nr.pieces = {random_affine(rng, prev, spec.weight_scale)};
      } else {
        std::vector<ActKind> kinds;
        if (spec.relu) kinds.push_back(ActKind::Relu);
        if (spec.leaky) kinds.push_back(ActKind::Leaky);
        if (spec.clipped) kinds.push_back(ActKind::Clipped);
        if (spec.maxd) kinds.push_back(ActKind::MaxOfD);
        nr.act.kind = kinds[uniform_int(rng, 0, static_cast<int>(kinds.size()) - 1)];
        switch (nr.act.kind) {
          case ActKind::Leaky:
            nr.act.alpha = uniform(rng, 0.05, 0.5);
            nr.pieces = {random_affine(rng, prev, spec.weight_scale)};
            break;
          case ActKind::Clipped:
            nr.act.cap = uniform(rng, 0.3, 1.5);
            nr.pieces = {random_affine(rng, prev, spec.weight_scale)};
            break;
          case ActKind::MaxOfD: {
            nr.act.pieces = uniform_int(rng, 2, 3);
            for (int k = 0; k < nr.act.pieces; ++k)
              nr.pieces.push_back(random_affine(rng, prev, spec.weight_scale));
            break;
          }
          default:
            nr.pieces = {random_affine(rng, prev, spec.weight_scale)};
        }
      }
      layer.neurons.push_back(std::move(nr));
    }
    net.layers.push_back(std::move(layer));
    prev = spec.widths[li];
  }
  return net;
}

// Example data used throughout: f(x) = x1 + x2 - 1.5 over the unit square
inline NeuronContext example1_ctx() {
  AffineFunc f{{1.0, 1.0}, -1.5};
  return NeuronContext::relu(f, Domain::box({{0, 1}, {0, 1}}));
}

}  // namespace pwlv::testutil

#include "pwlv/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pwlv {

using nlohmann::json;

double AffineFunc::eval(const std::vector<double>& x) const { return eval(x.data()); }

double AffineFunc::eval(const double* x) const {
  double s = b;
  for (size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

double Activation::apply(double v) const {
  switch (kind) {
    case ActKind::Linear: return v;
    case ActKind::Relu: return std::max(0.0, v);
    case ActKind::Leaky: return std::max(alpha * v, v);
    case ActKind::Clipped: return std::min(cap, std::max(0.0, v));
    case ActKind::MaxOfD: break;
  }
  throw ModelError("scalar activation expected");
}

double Neuron::eval(const std::vector<double>& in) const {
  if (act.kind == ActKind::MaxOfD) {
    double best = -kInf;
    for (const auto& f : pieces) best = std::max(best, f.eval(in));
    return best;
  }
  return act.apply(pieces[0].eval(in));
}

std::vector<double> Network::forward(const std::vector<double>& input) const {
  std::vector<double> cur = input;
  for (const auto& layer : layers) {
    std::vector<double> next(layer.neurons.size());
    for (size_t j = 0; j < layer.neurons.size(); ++j) next[j] = layer.neurons[j].eval(cur);
    cur = std::move(next);
  }
  return cur;
}

void Network::validate() const {
  if (layers.empty()) throw ModelError("network must have at least one layer");
  int prev = input_dim;
  for (size_t i = 0; i < layers.size(); ++i) {
    const Layer& layer = layers[i];
    if (layer.in_dim != prev)
      throw ModelError("dimension mismatch at layer " + std::to_string(i + 1) + ": expects " +
                       std::to_string(layer.in_dim) + " inputs, previous layer provides " +
                       std::to_string(prev));
    if (layer.neurons.empty())
      throw ModelError("layer " + std::to_string(i + 1) + " has no neurons");
    for (size_t j = 0; j < layer.neurons.size(); ++j) {
      const Neuron& nr = layer.neurons[j];
      std::string at = "layer " + std::to_string(i + 1) + " neuron " + std::to_string(j + 1);
      if (nr.pieces.empty()) throw ModelError(at + ": no affine pieces");
      if (nr.act.kind == ActKind::MaxOfD) {
        if (static_cast<int>(nr.pieces.size()) != nr.act.pieces || nr.act.pieces < 2)
          throw ModelError(at + ": max neuron needs its declared d >= 2 pieces");
      } else if (nr.pieces.size() != 1) {
        throw ModelError(at + ": scalar activation with multiple pieces");
      }
      if (nr.act.kind == ActKind::Leaky && !(nr.act.alpha > 0.0 && nr.act.alpha < 1.0))
        throw ModelError(at + ": leaky alpha must lie strictly inside (0,1)");
      if (nr.act.kind == ActKind::Clipped && !(nr.act.cap > 0.0))
        throw ModelError(at + ": clipped cap must be positive");
      for (const auto& f : nr.pieces) {
        if (f.dim() != layer.in_dim)
          throw ModelError(at + ": weight row length " + std::to_string(f.dim()) +
                           ", expected " + std::to_string(layer.in_dim));
        for (double v : f.w)
          if (!std::isfinite(v)) throw ModelError(at + ": non-finite weight");
        if (!std::isfinite(f.b)) throw ModelError(at + ": non-finite bias");
      }
    }
    prev = layer.out_dim();
  }
}

int Domain::dim() const {
  int d = 0;
  for (const auto& b : blocks) d += b.size();
  return d;
}

void Domain::reindex() {
  int off = 0;
  for (auto& b : blocks) {
    b.offset = off;
    off += b.size();
  }
}

void Domain::validate() const {
  for (size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.simplex) {
      if (b.p < 2) throw ModelError("domain block " + std::to_string(i + 1) + ": simplex needs p >= 2");
    } else {
      if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
        throw ModelError("domain block " + std::to_string(i + 1) + ": interval must be finite");
      if (b.lo > b.hi)
        throw ModelError("domain block " + std::to_string(i + 1) + ": interval has lo > hi");
    }
  }
}

bool Domain::pure_box() const {
  for (const auto& b : blocks)
    if (b.simplex) return false;
  return true;
}

bool Domain::has_simplex() const { return !pure_box(); }

std::vector<Interval> Domain::coordinate_boxes() const {
  std::vector<Interval> out(dim());
  for (const auto& b : blocks) {
    if (b.simplex) {
      for (int j = 0; j < b.p; ++j) out[b.offset + j] = {0.0, 1.0};
    } else {
      out[b.offset] = {b.lo, b.hi};
    }
  }
  return out;
}

bool Domain::contains(const std::vector<double>& x, double tol) const {
  for (const auto& b : blocks) {
    if (b.simplex) {
      double sum = 0.0;
      for (int j = 0; j < b.p; ++j) {
        double v = x[b.offset + j];
        if (v < -tol || v > 1.0 + tol) return false;
        sum += v;
      }
      if (std::abs(sum - 1.0) > tol * b.p + tol) return false;
    } else {
      if (x[b.offset] < b.lo - tol || x[b.offset] > b.hi + tol) return false;
    }
  }
  return true;
}

Domain Domain::box(const std::vector<Interval>& boxes) {
  Domain d;
  for (const auto& iv : boxes) {
    Block b;
    b.lo = iv.lo;
    b.hi = iv.hi;
    d.blocks.push_back(b);
  }
  d.reindex();
  return d;
}

namespace {

Activation parse_activation(const json& j, const std::string& at) {
  Activation a;
  std::string kind;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else if (j.is_object()) {
    if (!j.contains("kind")) throw ModelError(at + ": activation needs a kind");
    kind = j["kind"].get<std::string>();
  } else {
    throw ModelError(at + ": activation must be a string or object");
  }
  if (kind == "linear") {
    a.kind = ActKind::Linear;
  } else if (kind == "relu") {
    a.kind = ActKind::Relu;
  } else if (kind == "leaky") {
    a.kind = ActKind::Leaky;
    if (!j.is_object() || !j.contains("alpha")) throw ModelError(at + ": leaky needs alpha");
    a.alpha = j["alpha"].get<double>();
  } else if (kind == "clipped") {
    a.kind = ActKind::Clipped;
    if (!j.is_object() || !j.contains("cap")) throw ModelError(at + ": clipped needs cap");
    a.cap = j["cap"].get<double>();
  } else if (kind == "max") {
    a.kind = ActKind::MaxOfD;
    if (!j.is_object() || !j.contains("pieces")) throw ModelError(at + ": max needs pieces");
    a.pieces = j["pieces"].get<int>();
  } else {
    throw ModelError(at + ": unknown activation kind '" + kind + "'");
  }
  return a;
}

std::vector<double> parse_vector(const json& j, const std::string& at) {
  if (!j.is_array()) throw ModelError(at + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw ModelError(at + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

LoadedModel load_network(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("network file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("input_dim") || !j.contains("layers"))
    throw ModelError("network file needs input_dim and layers");

  LoadedModel lm;
  lm.net.input_dim = j["input_dim"].get<int>();
  if (lm.net.input_dim <= 0) throw ModelError("input_dim must be positive");

  if (j.contains("domain")) {
    for (const auto& bj : j["domain"]) {
      Domain::Block b;
      if (bj.contains("interval")) {
        auto iv = parse_vector(bj["interval"], "domain interval");
        if (iv.size() != 2) throw ModelError("domain interval needs [L,U]");
        b.lo = iv[0];
        b.hi = iv[1];
      } else if (bj.contains("simplex")) {
        b.simplex = true;
        b.p = bj["simplex"].get<int>();
      } else {
        throw ModelError("domain block needs interval or simplex");
      }
      lm.domain.blocks.push_back(b);
    }
  } else {
    // default unit box
    Domain::Block b;
    b.lo = 0.0;
    b.hi = 1.0;
    lm.domain.blocks.assign(lm.net.input_dim, b);
  }
  lm.domain.reindex();
  lm.domain.validate();
  if (lm.domain.dim() != lm.net.input_dim)
    throw ModelError("domain covers " + std::to_string(lm.domain.dim()) +
                     " coordinates, input_dim is " + std::to_string(lm.net.input_dim));

  if (!j["layers"].is_array() || j["layers"].empty())
    throw ModelError("network must have at least one layer");

  int prev = lm.net.input_dim;
  int li = 0;
  for (const auto& lj : j["layers"]) {
    ++li;
    std::string at = "layer " + std::to_string(li);
    if (!lj.contains("weights") || !lj.contains("bias"))
      throw ModelError(at + ": needs weights and bias");
    std::vector<std::vector<double>> rows;
    for (const auto& rj : lj["weights"]) rows.push_back(parse_vector(rj, at + " weights"));
    std::vector<double> bias = parse_vector(lj["bias"], at + " bias");
    if (bias.size() != rows.size())
      throw ModelError(at + ": bias length " + std::to_string(bias.size()) + " does not match " +
                       std::to_string(rows.size()) + " weight rows");

    std::vector<Activation> acts;
    if (lj.contains("activation") && lj["activation"].is_array()) {
      for (const auto& aj : lj["activation"]) acts.push_back(parse_activation(aj, at));
    } else {
      Activation a = lj.contains("activation") ? parse_activation(lj["activation"], at)
                                               : Activation{};
      // uniform activation: infer the neuron count from the row count
      int per = a.kind == ActKind::MaxOfD ? a.pieces : 1;
      if (per < 1 || rows.size() % per != 0)
        throw ModelError(at + ": weight row count " + std::to_string(rows.size()) +
                         " is not a multiple of pieces " + std::to_string(per));
      acts.assign(rows.size() / per, a);
    }

    Layer layer;
    // infer the input width from the rows; validate() reports chaining breaks
    layer.in_dim = rows.empty() ? prev : static_cast<int>(rows[0].size());
    size_t r = 0;
    for (size_t nj = 0; nj < acts.size(); ++nj) {
      Neuron nr;
      nr.act = acts[nj];
      int per = nr.act.kind == ActKind::MaxOfD ? nr.act.pieces : 1;
      for (int k = 0; k < per; ++k) {
        if (r >= rows.size())
          throw ModelError(at + ": ran out of weight rows at neuron " + std::to_string(nj + 1));
        AffineFunc f;
        f.w = rows[r];
        f.b = bias[r];
        ++r;
        nr.pieces.push_back(std::move(f));
      }
      layer.neurons.push_back(std::move(nr));
    }
    if (r != rows.size())
      throw ModelError(at + ": " + std::to_string(rows.size() - r) + " unused weight rows");
    lm.net.layers.push_back(std::move(layer));
    prev = lm.net.layers.back().out_dim();
  }

  lm.net.validate();
  return lm;
}

LoadedModel load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open network file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_network(ss.str());
}

VerificationInstance load_instance(const std::string& text, const Network& net, const Domain& dom) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("instance file is not valid JSON: ") + e.what());
  }
  VerificationInstance inst;
  if (!j.contains("center") || !j.contains("epsilon") || !j.contains("source_label") ||
      !j.contains("target_label"))
    throw ModelError("instance file needs center, epsilon, source_label, target_label");
  inst.center = parse_vector(j["center"], "center");
  inst.epsilon = j["epsilon"].get<double>();
  inst.source_label = j["source_label"].get<int>();
  inst.target_label = j["target_label"].get<int>();

  if (static_cast<int>(inst.center.size()) != net.input_dim)
    throw ModelError("center has " + std::to_string(inst.center.size()) +
                     " coordinates, input_dim is " + std::to_string(net.input_dim));
  if (inst.epsilon < 0) throw ModelError("epsilon must be nonnegative");
  if (!dom.contains(inst.center, 1e-9)) throw ModelError("center lies outside the declared domain");
  int out = net.output_dim();
  if (inst.source_label < 0 || inst.source_label >= out || inst.target_label < 0 ||
      inst.target_label >= out)
    throw ModelError("labels must index the output layer (0-based)");
  if (inst.source_label == inst.target_label)
    throw ModelError("source and target labels must differ");
  return inst;
}

VerificationInstance load_instance_file(const std::string& path, const Network& net,
                                        const Domain& dom) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open instance file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_instance(ss.str(), net, dom);
}

Interval affine_bounds(const AffineFunc& f, const std::vector<Interval>& box) {
  if (f.w.size() != box.size()) throw ModelError("affine_bounds: length mismatch");
  double lo = f.b, hi = f.b;
  for (size_t i = 0; i < f.w.size(); ++i) {
    double a = f.w[i] * box[i].lo, b2 = f.w[i] * box[i].hi;
    lo += std::min(a, b2);
    hi += std::max(a, b2);
  }
  return {lo, hi};
}

Interval affine_bounds_domain(const AffineFunc& f, const Domain& dom) {
  if (f.dim() != dom.dim()) throw ModelError("affine_bounds_domain: length mismatch");
  double lo = f.b, hi = f.b;
  for (const auto& blk : dom.blocks) {
    if (blk.simplex) {
      double wmin = kInf, wmax = -kInf;
      for (int j = 0; j < blk.p; ++j) {
        wmin = std::min(wmin, f.w[blk.offset + j]);
        wmax = std::max(wmax, f.w[blk.offset + j]);
      }
      lo += wmin;
      hi += wmax;
    } else {
      double a = f.w[blk.offset] * blk.lo, b2 = f.w[blk.offset] * blk.hi;
      lo += std::min(a, b2);
      hi += std::max(a, b2);
    }
  }
  return {lo, hi};
}

namespace {

Interval activation_interval(const Activation& act, const Interval& pre) {
  switch (act.kind) {
    case ActKind::Linear: return pre;
    case ActKind::Relu: return {std::max(0.0, pre.lo), std::max(0.0, pre.hi)};
    case ActKind::Leaky:
      return {pre.lo >= 0 ? pre.lo : act.alpha * pre.lo, pre.hi >= 0 ? pre.hi : act.alpha * pre.hi};
    case ActKind::Clipped:
      return {std::min(act.cap, std::max(0.0, pre.lo)), std::min(act.cap, std::max(0.0, pre.hi))};
    case ActKind::MaxOfD: return pre;
  }
  return pre;
}

}  // namespace

BoundsTable propagate_bounds(const Network& net, const Domain& dom) {
  if (dom.dim() != net.input_dim) throw ModelError("propagate_bounds: domain dimension mismatch");
  BoundsTable table(net.layers.size());
  std::vector<Interval> in_box;  // box of the current layer's inputs
  bool first = true;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& layer = net.layers[i];
    table[i].resize(layer.neurons.size());
    std::vector<Interval> out_box(layer.neurons.size());
    for (size_t j = 0; j < layer.neurons.size(); ++j) {
      const Neuron& nr = layer.neurons[j];
      NeuronBounds nb;
      for (const auto& f : nr.pieces)
        nb.piece_pre.push_back(first ? affine_bounds_domain(f, dom) : affine_bounds(f, in_box));
      if (nr.pieces.size() == 1) {
        nb.pre = nb.piece_pre[0];
      } else {
        // the max of the pieces is floored by the best piece floor
        nb.pre = {-kInf, -kInf};
        for (const auto& r : nb.piece_pre) {
          nb.pre.lo = std::max(nb.pre.lo, r.lo);
          nb.pre.hi = std::max(nb.pre.hi, r.hi);
        }
      }
      nb.post = activation_interval(nr.act, nb.pre);
      out_box[j] = nb.post;
      table[i][j] = std::move(nb);
    }
    in_box = std::move(out_box);
    first = false;
  }
  return table;
}

Network linearize_stable_neurons(const Network& net, const BoundsTable& bounds) {
  Network out = net;
  for (size_t i = 0; i < out.layers.size(); ++i) {
    for (size_t j = 0; j < out.layers[i].neurons.size(); ++j) {
      Neuron& nr = out.layers[i].neurons[j];
      const NeuronBounds& nb = bounds[i][j];
      auto make_linear = [&](AffineFunc f) {
        nr.pieces = {std::move(f)};
        nr.act = Activation{};
      };
      switch (nr.act.kind) {
        case ActKind::Linear: break;
        case ActKind::Relu:
          if (nb.pre.lo >= 0.0) make_linear(nr.pieces[0]);
          else if (nb.pre.hi <= 0.0) make_linear(AffineFunc{std::vector<double>(nr.pieces[0].w.size(), 0.0), 0.0});
          break;
        case ActKind::Leaky: {
          if (nb.pre.lo >= 0.0) make_linear(nr.pieces[0]);
          else if (nb.pre.hi <= 0.0) {
            AffineFunc f = nr.pieces[0];
            for (double& v : f.w) v *= nr.act.alpha;
            f.b *= nr.act.alpha;
            make_linear(std::move(f));
          }
          break;
        }
        case ActKind::Clipped: {
          double cap = nr.act.cap;
          if (nb.pre.hi <= 0.0)
            make_linear(AffineFunc{std::vector<double>(nr.pieces[0].w.size(), 0.0), 0.0});
          else if (nb.pre.lo >= cap)
            make_linear(AffineFunc{std::vector<double>(nr.pieces[0].w.size(), 0.0), cap});
          else if (nb.pre.lo >= 0.0 && nb.pre.hi <= cap)
            make_linear(nr.pieces[0]);
          break;
        }
        case ActKind::MaxOfD: {
          // a piece whose floor clears every other piece's ceiling wins outright
          for (size_t k = 0; k < nr.pieces.size(); ++k) {
            bool dominant = true;
            for (size_t l = 0; l < nr.pieces.size() && dominant; ++l)
              if (l != k && nb.piece_pre[k].lo < nb.piece_pre[l].hi) dominant = false;
            if (dominant) {
              make_linear(nr.pieces[k]);
              break;
            }
          }
          break;
        }
      }
    }
  }
  return out;
}

std::vector<bool> check_irreducible(const std::vector<AffineFunc>& pieces, const Domain& dom) {
  if (pieces.size() < 2) throw ModelError("check_irreducible: need at least two pieces");
  const double tol = 1e-7;
  const int d = static_cast<int>(pieces.size());
  std::vector<bool> flags(d, false);

  if (d == 2 && dom.pure_box()) {
    // closed-form corner computation: max of (f^k - f^l) over the box
    auto boxes = dom.coordinate_boxes();
    for (int k = 0; k < 2; ++k) {
      AffineFunc diff = pieces[k];
      for (int i = 0; i < diff.dim(); ++i) diff.w[i] -= pieces[1 - k].w[i];
      diff.b -= pieces[1 - k].b;
      flags[k] = affine_bounds(diff, boxes).hi > tol;
    }
    return flags;
  }

  for (int k = 0; k < d; ++k) {
    // max delta s.t. x in dom, delta <= f^k(x) - f^l(x) for all l != k
    LpProblem lp;
    int n = pieces[0].dim();
    auto boxes = dom.coordinate_boxes();
    for (int i = 0; i < n; ++i) lp.add_var(boxes[i].lo, boxes[i].hi);
    int dv = lp.add_var(-kInf, kInf, 1.0);
    for (const auto& blk : dom.blocks) {
      if (!blk.simplex) continue;
      LinearConstraint c;
      for (int j = 0; j < blk.p; ++j) c.terms.push_back({blk.offset + j, 1.0});
      c.sense = Sense::EQ;
      c.rhs = 1.0;
      lp.add_row(std::move(c));
    }
    for (int l = 0; l < d; ++l) {
      if (l == k) continue;
      LinearConstraint c;
      for (int i = 0; i < n; ++i) {
        double w = pieces[k].w[i] - pieces[l].w[i];
        if (w != 0.0) c.terms.push_back({i, -w});
      }
      c.terms.push_back({dv, 1.0});
      c.sense = Sense::LE;
      c.rhs = pieces[k].b - pieces[l].b;
      lp.add_row(std::move(c));
    }
    LpResult r = solve_lp(lp);
    if (r.status != LpStatus::Optimal) throw ModelError("check_irreducible: LP solve failed");
    flags[k] = r.objective > tol;
  }
  return flags;
}

Domain effective_domain(const Domain& dom, const VerificationInstance& inst) {
  Domain out = dom;
  for (auto& blk : out.blocks) {
    if (blk.simplex) continue;
    double c = inst.center[blk.offset];
    blk.lo = std::max(blk.lo, c - inst.epsilon);
    blk.hi = std::min(blk.hi, c + inst.epsilon);
  }
  return out;
}

}  // namespace pwlv

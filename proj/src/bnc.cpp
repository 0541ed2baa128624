#include "pwlv/bnc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <set>

namespace pwlv {

namespace {

constexpr double kIntTol = 1e-6;

struct Node {
  long long id = 0;
  int depth = 0;
  double bound = kInf;
  std::vector<std::pair<int, double>> fixings;  // (binary var, value)
};

struct BestBoundOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;  // larger bound first
    return a.id > b.id;                                // then older first
  }
};

class Solver {
 public:
  Solver(const MipModel& model, const SolveParams& params)
      : model_(model), params_(params), start_(std::chrono::steady_clock::now()) {
    base_ = model.relax();
    binaries_ = model.binary_vars();
  }

  MipResult run() {
    MipResult res;
    for (auto fam : {FamilyKind::ReluIdeal, FamilyKind::MaxDBox, FamilyKind::OneHotRelu,
                     FamilyKind::Leaky, FamilyKind::Clipped, FamilyKind::IdealDualSubgradient})
      res.cuts_added[fam] = 0;

    Node root;
    root.id = next_id_++;
    LpResult rlp = solve_node_lp(root);
    if (rlp.status == LpStatus::Infeasible) {
      res.status = MipStatus::Infeasible;
      res.bound = -kInf;
      res.nodes = 1;
      finish(res);
      return res;
    }
    if (rlp.status == LpStatus::Unbounded) throw ModelError("relaxation is unbounded");
    if (rlp.status == LpStatus::NumericError)
      throw ModelError("root LP failed: " + rlp.message);
    res.root_bound_before_cuts = rlp.objective;

    rlp = cut_loop(root, rlp, params_.root_cut_rounds, res);
    res.root_bound_after_cuts = rlp.status == LpStatus::Optimal ? rlp.objective : -kInf;
    if (rlp.status == LpStatus::Infeasible) {
      res.status = MipStatus::Infeasible;
      res.bound = -kInf;
      res.nodes = 1;
      finish(res);
      return res;
    }
    root.bound = rlp.objective;

    process(root, rlp, res);
    res.nodes = 1;

    while (!open_.empty() || !plunge_.empty()) {
      if (res.nodes >= params_.node_limit || elapsed() > params_.time_limit_seconds) {
        res.status = MipStatus::NodeLimit;
        res.bound = current_bound();
        finish(res);
        return res;
      }
      if (params_.bound_target && current_bound() < *params_.bound_target) {
        res.status = MipStatus::BoundedBy;
        res.bound = current_bound();
        finish(res);
        return res;
      }
      if (params_.incumbent_target && incumbent_ &&
          *incumbent_ > *params_.incumbent_target) {
        res.status = MipStatus::NodeLimit;
        res.bound = current_bound();
        finish(res);
        return res;
      }

      Node node = pop_node();
      if (incumbent_ && node.bound <= *incumbent_ + gap_slack()) continue;  // pruned by bound

      LpResult lp = solve_node_lp(node);
      ++res.nodes;
      if (lp.status == LpStatus::Infeasible) continue;
      if (lp.status != LpStatus::Optimal)
        throw ModelError("node LP failed: " + lp.message);

      lp = cut_loop(node, lp, params_.node_cut_rounds, res);
      if (lp.status == LpStatus::Infeasible) continue;
      node.bound = lp.objective;
      if (incumbent_ && node.bound <= *incumbent_ + gap_slack()) continue;

      process(node, lp, res);
    }

    if (incumbent_) {
      res.status = MipStatus::Optimal;
      res.bound = *incumbent_;
    } else {
      res.status = MipStatus::Infeasible;
      res.bound = -kInf;
    }
    finish(res);
    return res;
  }

 private:
  const MipModel& model_;
  SolveParams params_;
  std::chrono::steady_clock::time_point start_;
  LpProblem base_;
  std::vector<int> binaries_;
  std::vector<LinearConstraint> pool_;
  std::set<std::string> pool_witness_;
  std::priority_queue<Node, std::vector<Node>, BestBoundOrder> open_;
  std::vector<Node> plunge_;  // LIFO stack used until the first incumbent
  std::optional<double> incumbent_;
  std::vector<double> incumbent_point_;
  long long next_id_ = 0;

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  double gap_slack() const {
    double inc = incumbent_ ? std::abs(*incumbent_) : 0.0;
    return params_.gap_tol * std::max(1.0, inc);
  }

  double current_bound() const {
    double b = incumbent_ ? *incumbent_ : -kInf;
    if (!open_.empty()) b = std::max(b, open_.top().bound);
    for (const auto& n : plunge_) b = std::max(b, n.bound);
    return b;
  }

  Node pop_node() {
    if (!incumbent_ && !plunge_.empty()) {
      Node n = plunge_.back();
      plunge_.pop_back();
      return n;
    }
    if (plunge_.empty()) {
      Node n = open_.top();
      open_.pop();
      return n;
    }
    if (open_.empty()) {
      Node n = plunge_.back();
      plunge_.pop_back();
      return n;
    }
    // both nonempty with an incumbent: best bound wins
    if (open_.top().bound >= plunge_.back().bound) {
      Node n = open_.top();
      open_.pop();
      return n;
    }
    Node n = plunge_.back();
    plunge_.pop_back();
    return n;
  }

  LpProblem node_problem(const Node& node) const {
    LpProblem lp = base_;
    for (const auto& c : pool_) lp.rows.push_back(c);
    for (const auto& [var, val] : node.fixings) {
      lp.lo[var] = val;
      lp.hi[var] = val;
    }
    return lp;
  }

  LpResult solve_node_lp(const Node& node) const { return pwlv::solve_lp(node_problem(node)); }

  LpResult cut_loop(const Node& node, LpResult lp, int rounds, MipResult& res) {
    if (model_.families.empty()) return lp;
    for (int round = 0; round < rounds; ++round) {
      if (lp.status != LpStatus::Optimal) return lp;
      int added = 0;
      for (const auto& fam : model_.families) {
        std::vector<Cut> cuts = separate_family(model_, fam, lp.x);
        std::stable_sort(cuts.begin(), cuts.end(),
                         [](const Cut& a, const Cut& b) { return a.violation > b.violation; });
        int taken = 0;
        for (auto& cut : cuts) {
          if (taken >= params_.max_cuts_per_round_per_neuron) break;
          if (cut.violation <= params_.violation_tol) continue;
          std::string key = family_name(fam.kind) + std::to_string(fam.context) + ":" + cut.witness;
          if (!pool_witness_.insert(key).second) continue;
          cut.row.name = "cut_" + std::to_string(pool_.size() + 1);
          pool_.push_back(cut.row);
          res.cuts_added[fam.kind] += 1;
          ++added;
          ++taken;
        }
      }
      if (added == 0) return lp;
      lp = solve_node_lp(node);
    }
    return lp;
  }

  // most fractional binary; -1 when integral
  int pick_branch_var(const LpResult& lp) const {
    int best = -1;
    double best_frac = kIntTol;
    for (int v : binaries_) {
      double val = lp.x[v];
      double frac = std::min(val, 1.0 - val);
      if (frac > best_frac) {
        best_frac = frac;
        best = v;
      }
    }
    return best;
  }

  void accept_incumbent(double value, const std::vector<double>& point) {
    if (!incumbent_ || value > *incumbent_) {
      incumbent_ = value;
      incumbent_point_ = point;
      if (!plunge_.empty()) {
        // plunging ends once an incumbent exists; fold the stack into the queue
        for (auto& n : plunge_) open_.push(std::move(n));
        plunge_.clear();
      }
    }
  }

  // fix each neuron's binaries by the sign pattern of its pieces at the LP
  // point, solve the resulting LP, and keep the point if feasible
  void rounding_heuristic(const Node& node, const LpResult& lp) {
    if (model_.neurons.empty()) return;
    Node fixed = node;
    for (const auto& ne : model_.neurons) {
      const NeuronContext& ctx = model_.contexts[ne.context];
      std::vector<double> xin(ne.bind.x.size());
      for (size_t i = 0; i < xin.size(); ++i) xin[i] = lp.x[ne.bind.x[i]];
      switch (ne.kind) {
        case NeuronKind::Relu:
        case NeuronKind::Leaky: {
          double f = ctx.pieces[0].eval(xin);
          fixed.fixings.push_back({ne.bind.z[0], f >= 0 ? 1.0 : 0.0});
          break;
        }
        case NeuronKind::Clipped: {
          double f = ctx.pieces[0].eval(xin);
          int regime = f <= 0 ? 0 : (f >= ctx.cap ? 2 : 1);
          for (int k = 0; k < 3; ++k)
            fixed.fixings.push_back({ne.bind.z[k], k == regime ? 1.0 : 0.0});
          break;
        }
        case NeuronKind::MaxD: {
          int arg = 0;
          double best = -kInf;
          for (int k = 0; k < ctx.num_pieces(); ++k) {
            double v = ctx.pieces[k].eval(xin);
            if (v > best) {
              best = v;
              arg = k;
            }
          }
          for (int k = 0; k < ctx.num_pieces(); ++k)
            fixed.fixings.push_back({ne.bind.z[k], k == arg ? 1.0 : 0.0});
          break;
        }
      }
    }
    LpResult r = solve_node_lp(fixed);
    if (r.status == LpStatus::Optimal) accept_incumbent(r.objective, r.x);
  }

  bool integral(const LpResult& lp) const {
    for (int v : binaries_) {
      double val = lp.x[v];
      if (std::min(val, 1.0 - val) > kIntTol) return false;
    }
    return true;
  }

  void process(const Node& node, const LpResult& lp, MipResult& res) {
    (void)res;
    if (integral(lp)) {
      accept_incumbent(lp.objective, lp.x);
      return;
    }
    rounding_heuristic(node, lp);
    if (incumbent_ && node.bound <= *incumbent_ + gap_slack()) return;

    int var = pick_branch_var(lp);
    if (var < 0) {
      accept_incumbent(lp.objective, lp.x);
      return;
    }
    double frac = lp.x[var];
    Node down = node, up = node;
    down.id = next_id_++;
    up.id = next_id_++;
    ++down.depth;
    ++up.depth;
    down.fixings.push_back({var, 0.0});
    up.fixings.push_back({var, 1.0});
    down.bound = node.bound;
    up.bound = node.bound;
    if (!incumbent_) {
      // plunge toward the rounding direction first (explored last-in-first-out)
      if (frac >= 0.5) {
        plunge_.push_back(std::move(down));
        plunge_.push_back(std::move(up));
      } else {
        plunge_.push_back(std::move(up));
        plunge_.push_back(std::move(down));
      }
    } else {
      open_.push(std::move(down));
      open_.push(std::move(up));
    }
  }

  void finish(MipResult& res) {
    res.incumbent = incumbent_;
    res.incumbent_point = incumbent_point_;
    if (res.status == MipStatus::Optimal) res.bound = *incumbent_;
    if (incumbent_) {
      res.gap = res.bound - *incumbent_;
    } else {
      res.gap = kInf;
    }
    res.wall_seconds = elapsed();
  }
};

}  // namespace

int MipResult::total_cuts() const {
  int n = 0;
  for (const auto& [k, v] : cuts_added) n += v;
  return n;
}

MipResult solve_mip(const MipModel& model, const SolveParams& params) {
  Solver s(model, params);
  return s.run();
}

double root_bound(const MipModel& model, const SolveParams& params) {
  SolveParams p = params;
  p.node_limit = 1;
  MipResult r = solve_mip(model, p);
  if (r.status == MipStatus::Infeasible) return -kInf;
  return r.root_bound_after_cuts;
}

}  // namespace pwlv

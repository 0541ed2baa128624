#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pwlv/cuts.hpp"
#include "pwlv/mip.hpp"

namespace pwlv {

enum class MipStatus { Optimal, BoundedBy, Infeasible, NodeLimit };

struct MipResult {
  MipStatus status = MipStatus::NodeLimit;
  std::optional<double> incumbent;
  std::vector<double> incumbent_point;
  double bound = kInf;  // best dual bound (maximization)
  double gap = kInf;
  long long nodes = 0;
  std::map<FamilyKind, int> cuts_added;
  double root_bound_before_cuts = kInf;
  double root_bound_after_cuts = kInf;
  double wall_seconds = 0.0;

  int total_cuts() const;
};

struct SolveParams {
  long long node_limit = 1000000;
  double time_limit_seconds = kInf;
  int root_cut_rounds = 10;
  int node_cut_rounds = 2;
  int max_cuts_per_round_per_neuron = 1;
  double violation_tol = 1e-6;
  double gap_tol = 1e-6;
  bool deterministic = true;
  // stop as soon as the global bound is certified below this value
  std::optional<double> bound_target;
  // stop as soon as an incumbent above this value is found
  std::optional<double> incumbent_target;
};

// Branch and cut: best-bound node selection with depth-first plunging until
// the first incumbent, most-fractional branching, lazy separation of the
// model's registered cut families into a global pool.
MipResult solve_mip(const MipModel& model, const SolveParams& params = {});

// LP bound after the root cut loop only (no branching).
double root_bound(const MipModel& model, const SolveParams& params = {});

}  // namespace pwlv

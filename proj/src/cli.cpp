#include "pwlv/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "pwlv/bnc.hpp"
#include "pwlv/emit.hpp"
#include "pwlv/formulation.hpp"
#include "pwlv/oracle.hpp"

namespace pwlv {

namespace {

FormulationMode parse_mode(const std::string& s) {
  if (s == "bigm") return FormulationMode::BigM;
  if (s == "extended") return FormulationMode::Extended;
  if (s == "ideal-cuts") return FormulationMode::BigMWithCuts;
  throw ModelError("unknown formulation '" + s + "'");
}

long long env_seed() {
  const char* s = std::getenv("PWLV_SEED");
  if (!s) return 0;
  return std::atoll(s);
}

std::string fmt(double v) { return format_number(v); }

int cmd_bounds(const std::string& net_path, const std::string& inst_path, bool lp_tighten) {
  LoadedModel lm = load_network_file(net_path);
  Domain dom = lm.domain;
  if (!inst_path.empty()) {
    VerificationInstance inst = load_instance_file(inst_path, lm.net, lm.domain);
    dom = effective_domain(lm.domain, inst);
  }
  BoundsTable table =
      lp_tighten ? propagate_bounds_lp(lm.net, dom) : propagate_bounds(lm.net, dom);

  int total = 0, stable = 0;
  for (size_t i = 0; i < lm.net.layers.size(); ++i) {
    for (size_t j = 0; j < lm.net.layers[i].neurons.size(); ++j) {
      const Neuron& nr = lm.net.layers[i].neurons[j];
      const NeuronBounds& nb = table[i][j];
      std::string cls;
      bool counts = true;
      switch (nr.act.kind) {
        case ActKind::Linear:
          cls = "linear";
          counts = false;
          break;
        case ActKind::Relu:
        case ActKind::Leaky:
          cls = nb.pre.lo >= 0 ? "always-on" : nb.pre.hi <= 0 ? "always-off" : "unstable";
          break;
        case ActKind::Clipped:
          cls = nb.pre.hi <= 0              ? "always-off"
                : nb.pre.lo >= nr.act.cap   ? "always-capped"
                : (nb.pre.lo >= 0 && nb.pre.hi <= nr.act.cap) ? "always-on"
                                                              : "unstable";
          break;
        case ActKind::MaxOfD: {
          cls = "unstable";
          for (size_t k = 0; k < nr.pieces.size(); ++k) {
            bool dom_piece = true;
            for (size_t l = 0; l < nr.pieces.size() && dom_piece; ++l)
              if (l != k && nb.piece_pre[k].lo < nb.piece_pre[l].hi) dom_piece = false;
            if (dom_piece) {
              cls = "single-piece";
              break;
            }
          }
          break;
        }
      }
      if (counts) {
        ++total;
        if (cls != "unstable") ++stable;
      }
      std::cout << "layer=" << i + 1 << " neuron=" << j + 1 << " pre=[" << fmt(nb.pre.lo) << ","
                << fmt(nb.pre.hi) << "] post=[" << fmt(nb.post.lo) << "," << fmt(nb.post.hi)
                << "] class=" << cls << "\n";
    }
  }
  double pct = total == 0 ? 100.0 : 100.0 * stable / total;
  std::cout << "linearizable=" << stable << "/" << total << " (" << pct << "%)";
  if (total == stable) std::cout << " fully linearized";
  std::cout << "\n";
  return 0;
}

struct VerifyOutcome {
  std::string report;
  int exit_code = 3;
};

VerifyOutcome verify_one(const LoadedModel& lm, const std::string& inst_path,
                         const std::string& mode_name, CoeffMode coeff, double time_limit,
                         long long node_limit, long long seed) {
  VerificationInstance inst = load_instance_file(inst_path, lm.net, lm.domain);
  BuildOptions opt;
  opt.mode = parse_mode(mode_name);
  opt.coeff = coeff;
  MipModel model = assemble_network_formulation(lm.net, lm.domain, &inst, opt);

  SolveParams params;
  params.node_limit = node_limit;
  params.time_limit_seconds = time_limit;
  params.bound_target = 0.0;    // robustness certified once the bound is negative
  params.incumbent_target = 1e-6;  // stop at the first genuine counterexample
  MipResult r = solve_mip(model, params);

  int code = 3;
  std::string verdict = "inconclusive";
  if (r.bound < 0) {
    code = 0;
    verdict = "robust";
  } else if (r.incumbent && *r.incumbent > 1e-6) {
    code = 1;
    verdict = "counterexample";
  }

  std::string status;
  switch (r.status) {
    case MipStatus::Optimal: status = "optimal"; break;
    case MipStatus::BoundedBy: status = "bounded"; break;
    case MipStatus::Infeasible: status = "infeasible"; break;
    case MipStatus::NodeLimit: status = "node_limit"; break;
  }

  std::ostringstream os;
  os << "instance=" << inst_path << " mode=" << mode_name
     << " coeff=" << (coeff == CoeffMode::Paper ? "paper" : "tjeng") << " status=" << status
     << " incumbent=" << (r.incumbent ? fmt(*r.incumbent) : "-") << " bound=" << fmt(r.bound)
     << " gap=" << (r.incumbent ? fmt(r.bound - *r.incumbent) : "-") << " nodes=" << r.nodes;
  for (auto famkind : {FamilyKind::ReluIdeal, FamilyKind::MaxDBox, FamilyKind::OneHotRelu,
                       FamilyKind::Leaky, FamilyKind::Clipped, FamilyKind::IdealDualSubgradient})
    os << " cuts_" << family_name(famkind) << "=" << r.cuts_added.at(famkind);
  os << " root_lp=" << fmt(r.root_bound_before_cuts)
     << " root_cuts=" << fmt(r.root_bound_after_cuts) << " time_s=" << r.wall_seconds
     << " seed=" << seed << " verdict=" << verdict;
  if (code == 1) {
    os << " counterexample=";
    for (size_t i = 0; i < model.vars.size(); ++i) {
      if (model.vars[i].tag != Variable::Tag::Input) continue;
      if (model.vars[i].neuron > 0) os << ":";
      os << fmt(r.incumbent_point[i]);
    }
  }
  return {os.str(), code};
}

int cmd_verify(const std::string& net_path, const std::vector<std::string>& inst_paths,
               const std::string& mode_name, const std::string& coeff_name, double time_limit,
               long long node_limit, long long seed, int jobs) {
  LoadedModel lm = load_network_file(net_path);
  CoeffMode coeff = coeff_name == "tjeng" ? CoeffMode::Tjeng : CoeffMode::Paper;
  if (coeff_name != "paper" && coeff_name != "tjeng")
    throw ModelError("unknown coefficient mode '" + coeff_name + "'");

  std::vector<VerifyOutcome> outcomes(inst_paths.size());
  std::vector<std::string> errors(inst_paths.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= inst_paths.size()) return;
      try {
        outcomes[i] = verify_one(lm, inst_paths[i], mode_name, coeff, time_limit, node_limit, seed);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        outcomes[i].exit_code = 2;
      }
    }
  };
  int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(inst_paths.size())));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  int code = 0;
  bool any1 = false, any3 = false;
  for (size_t i = 0; i < inst_paths.size(); ++i) {
    if (outcomes[i].exit_code == 2) {
      std::cerr << "error: " << inst_paths[i] << ": " << errors[i] << "\n";
      return 2;
    }
    std::cout << outcomes[i].report << "\n";
    any1 = any1 || outcomes[i].exit_code == 1;
    any3 = any3 || outcomes[i].exit_code == 3;
  }
  if (any1) code = 1;
  else if (any3) code = 3;
  return code;
}

int cmd_emit(const std::string& net_path, const std::string& inst_path,
             const std::string& mode_name, const std::string& format, const std::string& cuts,
             long long cut_limit, const std::string& out_path) {
  LoadedModel lm = load_network_file(net_path);
  VerificationInstance inst = load_instance_file(inst_path, lm.net, lm.domain);
  BuildOptions opt;
  opt.mode = cuts == "enumerate" ? FormulationMode::BigMWithCuts : parse_mode(mode_name);
  MipModel model = assemble_network_formulation(lm.net, lm.domain, &inst, opt);

  if (cuts == "enumerate") {
    for (const auto& fam : model.families) {
      std::vector<LinearConstraint> rows =
          enumerate_family_rows(model.contexts[fam.context], fam.bind, fam.kind);
      if (static_cast<long long>(rows.size()) > cut_limit)
        throw GuardError("family size " + std::to_string(rows.size()) + " exceeds limit " +
                         std::to_string(cut_limit));
      for (size_t i = 0; i < rows.size(); ++i) {
        rows[i].name = "cut_" + std::to_string(model.rows.size() + 1);
        model.add_row(rows[i]);
      }
    }
    model.families.clear();
  } else if (cuts != "seeded") {
    throw ModelError("unknown cuts option '" + cuts + "' (use seeded or enumerate)");
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path);
    if (!file) throw ModelError("cannot open output file: " + out_path);
    out = &file;
  }
  if (format == "mps") write_mps(model, *out);
  else if (format == "lp") write_lp(model, *out);
  else throw ModelError("unknown format '" + format + "'");
  return 0;
}

int cmd_oracle(const std::string& net_path, const std::string& inst_path) {
  LoadedModel lm = load_network_file(net_path);
  VerificationInstance inst = load_instance_file(inst_path, lm.net, lm.domain);
  Domain eff = effective_domain(lm.domain, inst);
  BoundsTable bounds = propagate_bounds(lm.net, eff);
  Network lin = linearize_stable_neurons(lm.net, bounds);

  std::vector<double> obj(lm.net.input_dim, 0.0);
  for (const auto& layer : lin.layers) obj.resize(obj.size() + layer.out_dim(), 0.0);
  int out_base = static_cast<int>(obj.size()) - lin.layers.back().out_dim();
  obj[out_base + inst.target_label] = 1.0;
  obj[out_base + inst.source_label] = -1.0;

  // the instance ball clamps simplex coordinates just as the assembled model does
  std::vector<Interval> clamp = eff.coordinate_boxes();
  for (const auto& blk : eff.blocks) {
    if (!blk.simplex) continue;
    for (int j = 0; j < blk.p; ++j) {
      double c = inst.center[blk.offset + j];
      clamp[blk.offset + j].lo = std::max(clamp[blk.offset + j].lo, c - inst.epsilon);
      clamp[blk.offset + j].hi = std::min(clamp[blk.offset + j].hi, c + inst.epsilon);
    }
  }

  double v = enumerate_activation_optimum(lin, eff, obj, &clamp);
  std::cout << "optimum=" << fmt(v) << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"MIP formulations and exact verification for piecewise-linear networks"};
  app.require_subcommand(1);

  std::string net_path, inst_path, out_path = "-";
  std::vector<std::string> inst_paths;
  std::string mode = "ideal-cuts", coeff = "paper", format = "mps", cuts = "seeded";
  double time_limit = kInf;
  long long node_limit = 1000000, seed = env_seed(), cut_limit = 4096;
  int jobs = 1;
  bool lp_tighten = false;

  auto* bounds = app.add_subcommand("bounds", "per-neuron activation bounds and stability");
  bounds->add_option("net", net_path)->required();
  bounds->add_option("--instance", inst_path, "intersect the domain with an instance ball");
  bounds->add_flag("--lp-tighten", lp_tighten, "LP-based bound tightening");

  auto* verify = app.add_subcommand("verify", "solve robustness instances exactly");
  verify->add_option("net", net_path)->required();
  verify->add_option("instances", inst_paths)->required()->expected(-1);
  verify->add_option("--formulation", mode, "bigm|extended|ideal-cuts");
  verify->add_option("--coeff", coeff, "paper|tjeng");
  verify->add_option("--time-limit", time_limit, "seconds");
  verify->add_option("--node-limit", node_limit);
  verify->add_option("--seed", seed, "report seed (default from PWLV_SEED)");
  verify->add_option("--jobs", jobs, "instances solved in parallel");

  auto* emit = app.add_subcommand("emit", "write the model in MPS or LP format");
  emit->add_option("net", net_path)->required();
  emit->add_option("instance", inst_path)->required();
  emit->add_option("--formulation", mode, "bigm|extended|ideal-cuts");
  emit->add_option("--format", format, "mps|lp");
  emit->add_option("--cuts", cuts, "seeded|enumerate");
  emit->add_option("--cut-limit", cut_limit, "family size guard for enumerate");
  emit->add_option("-o,--output", out_path);

  auto* oracle = app.add_subcommand("oracle", "exact optimum by activation enumeration");
  oracle->add_option("net", net_path)->required();
  oracle->add_option("instance", inst_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (bounds->parsed()) return cmd_bounds(net_path, inst_path, lp_tighten);
    if (verify->parsed())
      return cmd_verify(net_path, inst_paths, mode, coeff, time_limit, node_limit, seed, jobs);
    if (emit->parsed())
      return cmd_emit(net_path, inst_path, mode, format, cuts, cut_limit, out_path);
    if (oracle->parsed()) return cmd_oracle(net_path, inst_path);
  } catch (const GuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace pwlv

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvmdp/check.hpp"
#include "mvmdp/errors.hpp"
#include "mvmdp/format.hpp"
#include "mvmdp/frontier.hpp"
#include "mvmdp/io.hpp"
#include "mvmdp/manifest.hpp"
#include "mvmdp/oracle.hpp"
#include "mvmdp/portfolio.hpp"
#include "mvmdp/solvers.hpp"

using namespace mvmdp;
using ojson = nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kInput = 2, kNonConvergence = 3, kInternal = 4 };

// JSON number carrying at most 10 significant digits.
ojson num(double v) { return std::strtod(fmt10(v).c_str(), nullptr); }

std::string manifest_path(const std::string& explicit_path, const std::string& out) {
  return explicit_path.empty() ? out + ".manifest.json" : explicit_path;
}

std::vector<double> parse_betas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw InputError("bad beta '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InputError("empty beta list");
  return out;
}

struct SolveArgs {
  std::string mdp, out = "solve.json", trace_out, manifest, solver = "dmvvi";
  double beta = 0.0, theta = 1e-5;
  std::optional<double> lambda0;
  std::size_t max_outer = 1000;
  bool exact_lambda = false;
};

int cmd_solve(const SolveArgs& a, RunManifest& man) {
  const Mdp mdp = load_mdp_file(a.mdp);
  man.add_input(a.mdp);
  SolverConfig cfg;
  cfg.theta = a.theta;
  cfg.lambda_init = a.lambda0;
  cfg.inner = parse_solver_variant(a.solver);
  cfg.max_outer = a.max_outer;
  cfg.exact_lambda = a.exact_lambda;
  cfg.validate();
  man.config = {{"beta", a.beta}, {"solver", a.solver}, {"theta", a.theta},
                {"lambda0", a.lambda0 ? ojson(*a.lambda0) : ojson(nullptr)}, {"max_outer", a.max_outer},
                {"exact_lambda", a.exact_lambda}};

  const auto res = bilevel_solve(mdp, a.beta, cfg);
  ojson s;
  s["policy"] = res.policy.encode();
  s["eta"] = num(res.bundle.eta);
  s["zeta"] = num(res.bundle.zeta);
  s["xi"] = num(res.bundle.xi);
  s["beta"] = num(a.beta);
  s["local_residual"] = num(res.local_residual);
  s["final_lambda"] = num(res.final_lambda);
  s["outer_iterations"] = res.trace.size();
  s["converged"] = res.converged;
  write_text_file(a.out, s.dump(2) + "\n");
  man.add_output(a.out);
  const std::string trace = a.trace_out.empty() ? a.out + ".trace.csv" : a.trace_out;
  std::ostringstream csv;
  write_trace_csv(csv, res);
  write_text_file(trace, csv.str());
  man.add_output(trace);
  man.write(manifest_path(a.manifest, a.out));

  std::cout << "policy " << s["policy"].get<std::string>() << "\n"
            << "eta " << fmt10(res.bundle.eta) << "\nzeta " << fmt10(res.bundle.zeta) << "\nxi "
            << fmt10(res.bundle.xi) << "\nresidual " << fmt10(res.local_residual) << "\nouter "
            << res.trace.size() << "\nconverged " << (res.converged ? "yes" : "no") << "\n";
  return res.converged ? kOk : kNonConvergence;
}

struct PortfolioArgs {
  std::string params, out = "portfolio.json", manifest;
};

int cmd_portfolio(const PortfolioArgs& a, RunManifest& man) {
  const Calibration cal = calibrate_portfolio();
  PortfolioParams p = reference_params();
  if (!a.params.empty()) {
    p = portfolio_params_from_json(read_text_file(a.params), &cal);
    man.add_input(a.params);
  }
  const auto inst = build_portfolio(p);
  save_mdp_file(inst.mdp, a.out);
  man.add_output(a.out);
  man.config = ojson::parse(portfolio_params_to_json(p));
  ojson cands = ojson::array();
  for (const auto& c : cal.candidates) {
    cands.push_back({{"default_mode", to_string(c.mode)}, {"initial_high_prob", num(c.initial_high_prob)},
                     {"eta", num(c.eta)}, {"zeta", num(c.zeta)}, {"distance", num(c.distance)}});
  }
  man.notes["calibration"] = {{"anchor_eta", num(cal.anchor_eta)}, {"anchor_zeta", num(cal.anchor_zeta)},
                              {"selected_default_mode", to_string(cal.mode)},
                              {"selected_initial_high_prob", num(cal.initial_high_prob)}, {"candidates", cands}};
  man.notes["used"] = {{"default_mode", to_string(p.default_mode)}, {"initial_high_prob", num(p.initial_high_prob)},
                       {"states", inst.mdp.num_states()}};
  man.write(manifest_path(a.manifest, a.out));
  std::cout << "states " << inst.mdp.num_states() << "\ndefault_mode " << to_string(p.default_mode)
            << "\ninitial_high_prob " << fmt10(p.initial_high_prob) << "\n";
  return kOk;
}

struct FrontierArgs {
  std::string mdp, betas, out = "frontier.csv", plot_out, manifest, solver = "dmvvi";
  bool oracle = false;
  double theta = 1e-5;
  std::optional<double> lambda0;
  unsigned threads = 0;
};

int cmd_frontier(const FrontierArgs& a, RunManifest& man) {
  const Mdp mdp = load_mdp_file(a.mdp);
  man.add_input(a.mdp);
  const auto betas = a.betas.empty() ? default_beta_grid() : parse_betas(a.betas);
  SweepOptions opt;
  opt.config.theta = a.theta;
  opt.config.lambda_init = a.lambda0;
  opt.config.inner = parse_solver_variant(a.solver);
  opt.oracle = a.oracle;
  opt.threads = a.threads;
  man.config = {{"betas", betas}, {"oracle", a.oracle}, {"solver", a.solver}, {"theta", a.theta},
                {"lambda0", a.lambda0 ? ojson(*a.lambda0) : ojson(nullptr)}};

  auto points = beta_sweep(mdp, betas, opt);
  for (const auto& p : points) {
    if (!p.ok) std::cerr << "beta " << fmt10(p.beta) << ": " << p.error << "\n";
  }
  if (a.oracle) {
    for (auto& v : oracle_frontier(mdp)) points.push_back(std::move(v));
  }
  std::vector<std::size_t> live;
  std::vector<MeanVariance> mv;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].ok) {
      live.push_back(i);
      mv.push_back({points[i].eta, points[i].zeta});
    }
  }
  std::vector<std::size_t> hull;
  for (std::size_t v : convex_efficient_frontier(mv)) hull.push_back(live[v]);
  for (auto& p : points) p.is_vertex = false;
  for (std::size_t i : hull) points[i].is_vertex = true;
  const std::size_t vertices = hull.size();

  std::ostringstream csv, plot;
  write_frontier_csv(csv, points);
  write_plot_data(plot, points);
  write_text_file(a.out, csv.str());
  man.add_output(a.out);
  const std::string plot_path = a.plot_out.empty() ? a.out + ".plot.csv" : a.plot_out;
  write_text_file(plot_path, plot.str());
  man.add_output(plot_path);
  man.notes["vertices"] = vertices;
  man.write(manifest_path(a.manifest, a.out));

  std::cout << "points " << mv.size() << "\nvertices " << vertices << "\n";
  for (std::size_t i : hull) {
    const auto& p = points[i];
    std::cout << "vertex eta=" << fmt10(p.eta) << " zeta=" << fmt10(p.zeta) << " beta=" << fmt10(p.beta) << "\n";
  }
  for (const auto& p : points) {
    if (!p.ok) return kNonConvergence;
  }
  return kOk;
}

struct CheckArgs {
  std::string mdp, policy, out, manifest;
  double beta = 0.0;
  std::uint64_t seed = 1;
  std::size_t mc_n = 10000;
};

int cmd_check(const CheckArgs& a, RunManifest& man) {
  const Mdp mdp = load_mdp_file(a.mdp);
  man.add_input(a.mdp);
  const Policy policy = Policy::decode(a.policy);
  check_admissible(mdp, policy);
  man.seed = a.seed;
  man.config = {{"policy", a.policy}, {"beta", a.beta}, {"mc_n", a.mc_n}};

  MonteCarloOptions mc;
  mc.seed = a.seed;
  mc.trajectories = a.mc_n;
  const auto results = run_identity_suite(mdp, policy, a.beta, mc);
  ojson report = ojson::array();
  for (const auto& r : results) {
    const char* tag = r.informational ? "INFO" : (r.passed ? "PASS" : "FAIL");
    std::cout << tag << ' ' << r.name << " residual=" << fmt10(r.residual) << " tol=" << fmt10(r.tolerance);
    if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
    std::cout << "\n";
    report.push_back({{"name", r.name}, {"status", tag}, {"residual", num(r.residual)},
                      {"tolerance", num(r.tolerance)}, {"detail", r.detail}});
  }
  const bool ok = suite_passed(results);
  std::cout << (ok ? "all identities pass" : "identity failure") << "\n";
  if (!a.out.empty()) {
    write_text_file(a.out, report.dump(2) + "\n");
    man.add_output(a.out);
    man.write(manifest_path(a.manifest, a.out));
  } else if (!a.manifest.empty()) {
    man.write(a.manifest);
  }
  return ok ? kOk : kInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-variance optimization for discounted MDPs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Run a bilevel solver on an MDP file");
  solve->add_option("mdp", sa.mdp, "MDP JSON file")->required();
  solve->add_option("--beta", sa.beta, "Risk-aversion weight")->required();
  solve->add_option("--solver", sa.solver, "pi-standard|pi-optimistic|vi-standard|vi-optimistic|dmvvi");
  solve->add_option("--lambda0", sa.lambda0, "Initial pseudo mean");
  solve->add_option("--theta", sa.theta, "Outer and inner tolerance");
  solve->add_option("--max-outer", sa.max_outer, "Outer iteration cap");
  solve->add_flag("--exact-lambda", sa.exact_lambda, "Use the exact mean of the improved policy as next lambda");
  solve->add_option("--out", sa.out, "Summary JSON path");
  solve->add_option("--trace-out", sa.trace_out, "Trace CSV path (default <out>.trace.csv)");
  solve->add_option("--manifest", sa.manifest, "Manifest path (default <out>.manifest.json)");

  PortfolioArgs pa;
  auto* port = app.add_subcommand("portfolio", "Build the portfolio MDP");
  port->add_option("params", pa.params, "Portfolio params JSON (default: reference instance)");
  port->add_option("--out", pa.out, "MDP JSON path");
  port->add_option("--manifest", pa.manifest, "Manifest path (default <out>.manifest.json)");

  FrontierArgs fa;
  auto* front = app.add_subcommand("frontier", "Sweep beta and compute the convex efficient frontier");
  front->add_option("mdp", fa.mdp, "MDP JSON file")->required();
  front->add_option("--betas", fa.betas, "Comma-separated beta list");
  front->add_flag("--oracle", fa.oracle, "Use exact global optima and add the exact frontier vertices");
  front->add_option("--solver", fa.solver, "Solver variant for non-oracle points");
  front->add_option("--lambda0", fa.lambda0, "Initial pseudo mean");
  front->add_option("--theta", fa.theta, "Solver tolerance");
  front->add_option("--threads", fa.threads, "Worker threads (default MVMDP_THREADS or hardware)");
  front->add_option("--out", fa.out, "Frontier CSV path");
  front->add_option("--plot-out", fa.plot_out, "Plot data path (default <out>.plot.csv)");
  front->add_option("--manifest", fa.manifest, "Manifest path (default <out>.manifest.json)");

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "Run the identity suite on a policy");
  check->add_option("mdp", ca.mdp, "MDP JSON file")->required();
  check->add_option("--policy", ca.policy, "Action indices, e.g. 0-1-1")->required();
  check->add_option("--beta", ca.beta, "Risk-aversion weight")->required();
  check->add_option("--mc-seed", ca.seed, "Monte-Carlo seed");
  check->add_option("--mc-n", ca.mc_n, "Monte-Carlo trajectories");
  check->add_option("--out", ca.out, "Report JSON path");
  check->add_option("--manifest", ca.manifest, "Manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  RunManifest man;
  man.command_line.assign(argv, argv + argc);
  man.started = utc_timestamp();
  try {
    if (*solve) return cmd_solve(sa, man);
    if (*port) return cmd_portfolio(pa, man);
    if (*front) return cmd_frontier(fa, man);
    if (*check) return cmd_check(ca, man);
  } catch (const ModelError& e) {
    std::cerr << "invalid model: " << e.violations().size() << " violation(s)\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v.message << "\n";
    return kInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const InadmissibleActionError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const ConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

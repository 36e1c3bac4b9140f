// bvi: solver front end.
//
// Subcommands:
//   solve         adaptive mirror-prox on one problem
//   restart       restarted variant (needs mu > 0)
//   check-oracle  sampled validation of the declared oracle properties
//   certify       solve + restart, then replay every guarantee verifier
//   bench         run the bundled problem registry, one thread per problem
//
// Exit codes: 0 success, 1 bad input, 2 did not converge, 3 a declared
// property or certificate failed to hold.
//
// Artifacts written under --out-dir (trace.csv, summary.json, stages.json,
// report.json, certificates.json) are deterministic for a fixed command
// line; wall-clock timings go to stdout or bench.json only.

#include <bvi/bvi.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace bvi;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitPropertyViolation = 3;

struct CommonOpts {
  std::string problem;
  double epsilon = 1e-3;
  double delta = 0.0;
  double l0 = 1.0;
  double l_scale = 1.0;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::int64_t samples = 0;
  std::int64_t max_iters = 1'000'000;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_problem = true) {
  auto* p = cmd->add_option("--problem", o.problem,
                            "bundled instance name or path to a problem JSON file");
  if (needs_problem) p->required();
  cmd->add_option("--epsilon", o.epsilon, "target accuracy")->check(CLI::PositiveNumber);
  cmd->add_option("--delta", o.delta, "wrap the oracle with calibrated noise of this size")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--l0", o.l0, "initial smoothness guess")->check(CLI::PositiveNumber);
  cmd->add_option("--l-scale", o.l_scale,
                  "multiply the declared smoothness constant (stress knob)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "seed for noise wrapping and sampling");
  cmd->add_option("--out-dir", o.out_dir, "directory for artifacts");
  cmd->add_option("--max-iters", o.max_iters, "iteration cap")->check(CLI::PositiveNumber);
}

ProblemInstance resolve_problem(const CommonOpts& o) {
  ProblemInstance inst;
  bool found = false;
  for (auto& cand : bundled_instances())
    if (cand.name == o.problem) {
      inst = std::move(cand);
      found = true;
      break;
    }
  if (!found) {
    if (!std::filesystem::exists(o.problem)) {
      std::string names;
      for (const auto& cand : bundled_instances()) names += "\n  " + cand.name;
      throw DomainError("unknown problem '" + o.problem + "'; bundled instances are:" + names);
    }
    inst = load_problem(o.problem);
  }
  if (o.delta > 0.0) inst = perturbed(inst, o.delta, o.seed);
  inst.oracle.L_rel *= o.l_scale;
  return inst;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::optional<std::vector<double>> v_column(const ProblemInstance& p,
                                            const std::vector<IterationRecord>& recs) {
  if (!p.x_star) return std::nullopt;
  std::vector<double> col;
  col.reserve(recs.size());
  for (const auto& r : recs) col.push_back(bregman(p.setup, *p.x_star, r.z));
  return col;
}

std::optional<std::vector<double>> gap_column(const ProblemInstance& p,
                                              const std::vector<IterationRecord>& recs,
                                              const CommonOpts& o) {
  if (o.samples <= 0) return std::nullopt;
  std::vector<double> col;
  col.reserve(recs.size());
  for (const auto& r : recs)
    col.push_back(minty_gap_sampled(p.oracle, p.set, r.w, o.samples, o.seed));
  return col;
}

int run_solve(const CommonOpts& o, const std::string& stop_mode_name, double sum_threshold) {
  ProblemInstance p = resolve_problem(o);

  UmpConfig cfg;
  cfg.epsilon = o.epsilon;
  cfg.L0 = o.l0;
  cfg.z0 = p.set.center_point();
  cfg.max_outer_iters = o.max_iters;
  if (stop_mode_name == "sum-threshold") {
    if (!(sum_threshold > 0.0))
      throw DomainError("--stop-mode sum-threshold requires --sum-threshold > 0");
    cfg.stop_mode = StopMode::SumThreshold;
    cfg.sum_threshold = sum_threshold;
  }

  const auto t0 = std::chrono::steady_clock::now();
  UmpTrace trace = ump_solve(p.oracle, p.setup, p.set, cfg);
  const double ms = elapsed_ms(t0);

  std::cout << "problem " << p.name << " (dim " << p.set.dim() << ")\n"
            << "iterations " << trace.iterations.size() << ", oracle calls "
            << trace.oracle_calls << ", S_N " << format_double(trace.S_N) << " (target "
            << format_double(trace.stop_target) << ")\n"
            << "converged " << (trace.converged ? "yes" : "no") << ", " << format_double(ms)
            << " ms\n";
  if (p.x_star)
    std::cout << "V(x_star, last_z) "
              << format_double(bregman(p.setup, *p.x_star, trace.last_z)) << ", V(x_star, last_w) "
              << format_double(bregman(p.setup, *p.x_star, trace.last_w)) << "\n";

  if (!o.out_dir.empty()) {
    const std::filesystem::path dir(o.out_dir);
    write_trace_csv(dir / "trace.csv", trace, v_column(p, trace.iterations),
                    gap_column(p, trace.iterations, o));
    json summary = trace_summary_json(trace);
    summary["problem"] = p.name;
    summary["epsilon"] = o.epsilon;
    summary["delta"] = p.oracle.delta;
    atomic_write_file(dir / "summary.json", summary.dump(2) + "\n");
  }
  return trace.converged ? kExitOk : kExitNoConvergence;
}

int run_restart(const CommonOpts& o, const std::string& rule_name, double r0_sq) {
  ProblemInstance p = resolve_problem(o);
  if (!(p.oracle.mu > 0.0))
    throw DomainError("restart needs a problem with mu > 0; '" + p.name + "' declares mu = " +
                      format_double(p.oracle.mu));

  RestartConfig cfg;
  cfg.epsilon = o.epsilon;
  cfg.mu = p.oracle.mu;
  cfg.omega = p.setup.omega;
  cfg.x0 = p.set.center_point();
  cfg.L0 = o.l0;
  cfg.R0_sq = r0_sq > 0.0 ? r0_sq : max_bregman_over_set(p.setup, p.set, cfg.x0);
  cfg.radius_rule = rule_name == "paper" ? RadiusRule::PaperExplicit : RadiusRule::RecursiveHalving;
  cfg.max_inner_iters_per_stage = o.max_iters;

  const auto t0 = std::chrono::steady_clock::now();
  RestartState state = restart_solve(p.oracle, p.setup, p.set, cfg);
  const double ms = elapsed_ms(t0);

  std::cout << "problem " << p.name << " (dim " << p.set.dim() << "), R0^2 "
            << format_double(cfg.R0_sq) << "\n";
  for (const auto& st : state.stages) {
    std::cout << "stage " << st.index << ": R^2 " << format_double(st.radius_sq) << ", inner "
              << st.trace.iterations.size() << ", S " << format_double(st.trace.S_N)
              << (st.radius_clamped ? " (radius clamped at epsilon/2)" : "") << "\n";
    if (st.radius_clamped && cfg.radius_rule == RadiusRule::PaperExplicit)
      std::cerr << "warning: stage " << st.index
                << " radius hit the epsilon/2 floor; the explicit rule is running out of "
                   "progress it can certify\n";
  }
  std::cout << "stages " << state.stages.size() << ", total inner "
            << state.total_inner_iterations << ", oracle calls " << state.oracle_calls
            << ", converged " << (state.converged ? "yes" : "no") << ", " << format_double(ms)
            << " ms\n";
  if (p.x_star)
    std::cout << "V(x_star, final_x) "
              << format_double(bregman(p.setup, *p.x_star, state.final_x)) << "\n";

  if (!o.out_dir.empty()) {
    const std::filesystem::path dir(o.out_dir);
    UmpTrace merged;
    std::vector<int> stage_col;
    for (const auto& st : state.stages)
      for (const auto& rec : st.trace.iterations) {
        merged.iterations.push_back(rec);
        stage_col.push_back(st.index);
      }
    write_trace_csv(dir / "trace.csv", merged, v_column(p, merged.iterations),
                    gap_column(p, merged.iterations, o), stage_col);
    atomic_write_file(dir / "stages.json", restart_json(state).dump(2) + "\n");
    json summary = {{"problem", p.name},
                    {"epsilon", o.epsilon},
                    {"delta", p.oracle.delta},
                    {"R0_sq", cfg.R0_sq},
                    {"stages", state.stages.size()},
                    {"total_inner_iterations", state.total_inner_iterations},
                    {"oracle_calls", state.oracle_calls},
                    {"converged", state.converged},
                    {"final_x", vector_json(state.final_x)}};
    atomic_write_file(dir / "summary.json", summary.dump(2) + "\n");
  }
  return state.converged ? kExitOk : kExitNoConvergence;
}

int run_check_oracle(const CommonOpts& o) {
  ProblemInstance p = resolve_problem(o);
  const std::int64_t n = o.samples > 0 ? o.samples : 1000;

  std::vector<PropertyReport> reports;
  if (p.oracle.has_exact())
    reports.push_back(check_inexactness(p.oracle, p.set, n, o.seed));
  else
    std::cout << "inexactness: skipped (no exact oracle to compare against)\n";
  reports.push_back(check_rel_strong_monotonicity(p.oracle, p.setup, p.set, n, o.seed + 1));
  reports.push_back(check_rel_smoothness(p.oracle, p.setup, p.set, n, o.seed + 2));

  bool all_pass = true;
  json out = json::array();
  for (const auto& r : reports) {
    all_pass = all_pass && r.passes();
    std::cout << r.property << ": " << (r.passes() ? "PASS" : "FAIL") << " (max violation "
              << format_double(r.max_violation) << " over " << r.samples_checked
              << " samples)\n";
    out.push_back(report_json(r));
  }
  if (!o.out_dir.empty())
    atomic_write_file(std::filesystem::path(o.out_dir) / "report.json", out.dump(2) + "\n");
  return all_pass ? kExitOk : kExitPropertyViolation;
}

int run_certify(const CommonOpts& o, const std::string& rule_name, double grid_res,
                double gap_tol) {
  ProblemInstance p = resolve_problem(o);
  if (!p.x_star) throw DomainError("certify needs a problem with a known solution");
  const Vector& x_star = *p.x_star;

  UmpConfig ucfg;
  ucfg.epsilon = o.epsilon;
  ucfg.L0 = o.l0;
  ucfg.z0 = p.set.center_point();
  ucfg.max_outer_iters = o.max_iters;
  UmpTrace trace = ump_solve(p.oracle, p.setup, p.set, ucfg);
  if (!trace.converged) {
    std::cerr << "solve did not converge; nothing to certify\n";
    return kExitNoConvergence;
  }

  std::vector<Certificate> certs;
  certs.push_back(verify_lemma1(trace, x_star, p.setup, p.oracle.delta));
  certs.push_back(verify_lemma1_aggregate(trace, x_star, p.setup, p.oracle.delta));
  if (p.oracle.has_exact() && p.oracle.delta == 0.0)
    certs.push_back(verify_theorem1(trace, p.oracle, x_star, p.setup, p.set));
  certs.push_back(verify_acceptance_replay(trace, p.oracle, p.setup));

  RestartState state;
  if (p.oracle.mu > 0.0) {
    RestartConfig rcfg;
    rcfg.epsilon = o.epsilon;
    rcfg.mu = p.oracle.mu;
    rcfg.omega = p.setup.omega;
    rcfg.x0 = p.set.center_point();
    rcfg.L0 = o.l0;
    rcfg.R0_sq = max_bregman_over_set(p.setup, p.set, rcfg.x0);
    rcfg.radius_rule =
        rule_name == "paper" ? RadiusRule::PaperExplicit : RadiusRule::RecursiveHalving;
    rcfg.max_inner_iters_per_stage = o.max_iters;
    state = restart_solve(p.oracle, p.setup, p.set, rcfg);
    if (!state.converged) {
      std::cerr << "restart did not converge; nothing to certify\n";
      return kExitNoConvergence;
    }
    certs.push_back(verify_theorem2(state, x_star, p.setup, rcfg.mu, rcfg.omega, p.oracle.L_rel,
                                    p.oracle.delta, o.epsilon));
    certs.push_back(
        verify_theorem2_itercount(state, rcfg.mu, rcfg.omega, p.oracle.L_rel, o.epsilon));
  }

  // weak-VI gap of the restart output (falls back to the averaged solve
  // output when the problem has no mu)
  const Vector& candidate = p.oracle.mu > 0.0 ? state.final_x : trace.averaged_w;
  const std::int64_t n_samples = o.samples > 0 ? o.samples : 100'000;
  const double sampled = minty_gap_sampled(p.oracle, p.set, candidate, n_samples, o.seed);
  Certificate gap_cert;
  gap_cert.claim = ClaimKind::MintyGap;
  gap_cert.margin = gap_tol - sampled;
  gap_cert.holds = sampled <= gap_tol;
  gap_cert.details = {{"sampled_gap", sampled}, {"samples", n_samples}, {"tolerance", gap_tol}};
  if (p.set.dim() <= 3) {
    const double grid = minty_gap(p.oracle, p.set, candidate, grid_res);
    gap_cert.details["grid_gap"] = grid;
    gap_cert.details["grid_resolution"] = grid_res;
    gap_cert.holds = gap_cert.holds && grid <= gap_tol;
    gap_cert.margin = std::min(gap_cert.margin, gap_tol - grid);
  }
  certs.push_back(gap_cert);

  bool all_hold = true;
  json out = json::array();
  for (const auto& c : certs) {
    all_hold = all_hold && c.holds;
    std::cout << "certificate " << claim_name(c.claim) << ": " << (c.holds ? "PASS" : "FAIL")
              << " (margin " << format_double(c.margin) << ")\n";
    out.push_back(certificate_json(c));
  }
  if (!o.out_dir.empty())
    atomic_write_file(std::filesystem::path(o.out_dir) / "certificates.json", out.dump(2) + "\n");
  return all_hold ? kExitOk : kExitPropertyViolation;
}

int run_bench(const CommonOpts& o) {
  const auto instances = bundled_instances();

  unsigned threads = std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;
  if (const char* env = std::getenv("BREGMAN_VI_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v < 1) throw DomainError("BREGMAN_VI_THREADS must be a positive integer");
    threads = static_cast<unsigned>(std::min<long>(v, 64));
  }
  threads = std::min<unsigned>(threads, static_cast<unsigned>(instances.size()));

  struct Row {
    std::string name;
    Eigen::Index dim = 0;
    std::size_t solve_iters = 0;
    std::int64_t solve_calls = 0;
    double solve_ms = 0.0;
    std::size_t restart_stages = 0;
    std::int64_t restart_inner = 0;
    double restart_ms = 0.0;
    double v_final = std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<Row> rows(instances.size());

  std::mutex next_mtx;
  std::size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(next_mtx);
        if (next >= instances.size()) return;
        i = next++;
      }
      const auto& p = instances[i];
      Row row;
      row.name = p.name;
      row.dim = p.set.dim();

      UmpConfig ucfg;
      ucfg.epsilon = o.epsilon;
      ucfg.z0 = p.set.center_point();
      auto t0 = std::chrono::steady_clock::now();
      UmpTrace trace = ump_solve(p.oracle, p.setup, p.set, ucfg);
      row.solve_ms = elapsed_ms(t0);
      row.solve_iters = trace.iterations.size();
      row.solve_calls = trace.oracle_calls;

      RestartConfig rcfg;
      rcfg.epsilon = 1e-6;
      rcfg.mu = p.oracle.mu;
      rcfg.omega = p.setup.omega;
      rcfg.x0 = p.set.center_point();
      rcfg.R0_sq = max_bregman_over_set(p.setup, p.set, rcfg.x0);
      t0 = std::chrono::steady_clock::now();
      RestartState state = restart_solve(p.oracle, p.setup, p.set, rcfg);
      row.restart_ms = elapsed_ms(t0);
      row.restart_stages = state.stages.size();
      row.restart_inner = state.total_inner_iterations;
      if (p.x_star) row.v_final = bregman(p.setup, *p.x_star, state.final_x);
      rows[i] = std::move(row);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::cout << "threads " << threads << "\n";
  json out = json::array();
  for (const auto& r : rows) {
    std::cout << r.name << " (dim " << r.dim << "): solve " << r.solve_iters << " iters / "
              << format_double(r.solve_ms) << " ms; restart " << r.restart_stages << " stages, "
              << r.restart_inner << " inner / " << format_double(r.restart_ms) << " ms";
    if (!std::isnan(r.v_final)) std::cout << "; V(x_star, final) " << format_double(r.v_final);
    std::cout << "\n";
    out.push_back({{"name", r.name},
                   {"dim", r.dim},
                   {"solve_iters", r.solve_iters},
                   {"solve_oracle_calls", r.solve_calls},
                   {"solve_ms", r.solve_ms},
                   {"restart_stages", r.restart_stages},
                   {"restart_inner_iterations", r.restart_inner},
                   {"restart_ms", r.restart_ms}});
  }
  if (!o.out_dir.empty())
    atomic_write_file(std::filesystem::path(o.out_dir) / "bench.json", out.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational inequality solver with relative smoothness"};
  app.require_subcommand(1);

  CommonOpts solve_opts, restart_opts, check_opts, certify_opts, bench_opts;
  std::string stop_mode = "epsilon";
  double sum_threshold = 0.0;
  std::string radius_rule = "halving";
  std::string certify_rule = "halving";
  double r0_sq = 0.0;
  double grid_res = 1e-2;
  double gap_tol = 1e-2;

  auto* solve = app.add_subcommand("solve", "run the adaptive method once");
  add_common(solve, solve_opts);
  solve->add_option("--stop-mode", stop_mode, "epsilon | sum-threshold")
      ->check(CLI::IsMember({"epsilon", "sum-threshold"}));
  solve->add_option("--sum-threshold", sum_threshold,
                    "stop once sum(1/L_{k+1}) reaches this value");

  auto* restart = app.add_subcommand("restart", "run the restarted method");
  add_common(restart, restart_opts);
  restart->add_option("--radius-rule", radius_rule, "halving | paper")
      ->check(CLI::IsMember({"halving", "paper"}));
  restart->add_option("--r0-sq", r0_sq, "initial squared radius (default: set bound)");

  auto* check = app.add_subcommand("check-oracle", "validate declared oracle properties");
  add_common(check, check_opts);
  check->add_option("--samples", check_opts.samples, "sample count per property (default 1000)");

  auto* certify = app.add_subcommand("certify", "run both methods and verify every guarantee");
  add_common(certify, certify_opts);
  certify->add_option("--radius-rule", certify_rule, "halving | paper")
      ->check(CLI::IsMember({"halving", "paper"}));
  certify->add_option("--samples", certify_opts.samples,
                      "Monte Carlo samples for the gap (default 100000)");
  certify->add_option("--grid-res", grid_res, "grid resolution for dim <= 3")
      ->check(CLI::PositiveNumber);
  certify->add_option("--gap-tol", gap_tol, "acceptable weak-VI gap")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "run the bundled registry");
  add_common(bench, bench_opts, /*needs_problem=*/false);
  bench->add_option("--samples", bench_opts.samples)->group("");  // accepted, unused

  auto* solve_samples =
      solve->add_option("--samples", solve_opts.samples,
                        "per-iteration sampled gap column (expensive: samples x iterations)");
  restart->add_option("--samples", restart_opts.samples, solve_samples->get_description());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (solve->parsed()) return run_solve(solve_opts, stop_mode, sum_threshold);
    if (restart->parsed()) return run_restart(restart_opts, radius_rule, r0_sq);
    if (check->parsed()) return run_check_oracle(check_opts);
    if (certify->parsed()) return run_certify(certify_opts, certify_rule, grid_res, gap_tol);
    if (bench->parsed()) return run_bench(bench_opts);
  } catch (const LineSearchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  return kExitBadInput;
}

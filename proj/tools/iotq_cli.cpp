#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "iotq/config.hpp"
#include "iotq/simulator.hpp"
#include "iotq/solver.hpp"

namespace {

using iotq::SystemParams;
using iotq::config::ExperimentConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;
constexpr int kExitValidation = 3;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

int resolve_jobs(int flag_jobs, const ExperimentConfig& cfg) {
  if (flag_jobs > 0) return flag_jobs;
  if (cfg.jobs > 0) return cfg.jobs;
  if (const char* env = std::getenv("IOTQ_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) return j;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Writes to the --out path (or config's out_path), falling back to stdout.
int with_output(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(std::cout);
    return kExitOk;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot open output file: " << path << "\n";
    return kExitConfig;
  }
  fn(out);
  return kExitOk;
}

int cmd_analyze(const ExperimentConfig& cfg, const std::string& out, int jobs) {
  std::ostringstream csv;
  csv << "alpha,a,scheme,stable,margin,p_ra,p_aval,p_tx_or_p,x0,"
         "mean_queue,wait_mean,wait_var,dispersion,iterations\n";
  bool solver_error = false;
  for (auto scheme : cfg.schemes) {
    const auto rows = iotq::solver::sweep(cfg.params, scheme, cfg.sweep_axis,
                                          cfg.sweep_values, cfg.solver_opts, jobs);
    for (const auto& row : rows) {
      if (!row.report) {
        std::cerr << "solver error at " << cfg.sweep_axis << "=" << row.value
                  << ": " << row.error << "\n";
        solver_error = true;
        continue;
      }
      SystemParams pt = cfg.params;
      iotq::solver::set_axis(pt, cfg.sweep_axis, row.value);
      const auto& r = *row.report;
      const bool scul = scheme == iotq::solver::Scheme::ScUl;
      csv << fmt(pt.device_intensity / pt.bs_intensity) << ','
          << fmt(pt.arrival) << ',' << iotq::solver::to_string(scheme) << ','
          << (r.stable ? 1 : 0) << ',' << fmt(r.margin) << ','
          << (scul ? fmt(r.p_ra) : "") << ',' << (scul ? fmt(r.p_aval) : "")
          << ',' << fmt(r.p_tx) << ',' << fmt(r.x0) << ',';
      if (r.metrics) {
        csv << fmt(r.metrics->mean_queue_len) << ',' << fmt(r.metrics->wait_mean)
            << ',' << fmt(r.metrics->wait_var) << ','
            << fmt(r.metrics->dispersion);
      } else {
        csv << ",,,";
      }
      csv << ',' << r.iterations << '\n';
    }
  }
  const int rc = with_output(out, [&](std::ostream& os) { os << csv.str(); });
  if (rc != kExitOk) return rc;
  return solver_error ? kExitSolver : kExitOk;
}

int cmd_frontier(const ExperimentConfig& cfg, const std::string& out, int jobs) {
  (void)jobs;
  std::ostringstream csv;
  csv << "scheme,alpha,a_star\n";
  try {
    for (auto scheme : cfg.schemes) {
      const auto pts = iotq::solver::pareto_frontier(
          cfg.params, scheme, cfg.frontier_alphas, cfg.frontier_a_tol,
          cfg.solver_opts);
      for (const auto& fp : pts)
        csv << iotq::solver::to_string(scheme) << ',' << fmt(fp.alpha) << ','
            << fmt(fp.a_star) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
  return with_output(out, [&](std::ostream& os) { os << csv.str(); });
}

struct SimRun {
  iotq::solver::Scheme scheme;
  int seed_index = 0;
  iotq::sim::SimStats stats;
  std::string error;
};

std::vector<SimRun> run_replications(const ExperimentConfig& cfg, int jobs) {
  std::vector<SimRun> runs;
  for (auto scheme : cfg.schemes)
    for (int i = 0; i < cfg.seeds; ++i)
      runs.push_back({scheme, i, {}, {}});

  auto run_one = [&](SimRun r) -> SimRun {
    try {
      const std::uint64_t base = cfg.seed_base + 2ull * r.seed_index;
      const auto net = iotq::sim::realize_network(
          cfg.params, cfg.region_half_width_km, base);
      r.stats = iotq::sim::run_sim(net, cfg.params, r.scheme, cfg.sim_slots,
                                   cfg.sim_warmup, base + 1);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  };

  if (jobs <= 1) {
    for (auto& r : runs) r = run_one(r);
    return runs;
  }
  for (std::size_t base = 0; base < runs.size();
       base += static_cast<std::size_t>(jobs)) {
    const std::size_t end =
        std::min(runs.size(), base + static_cast<std::size_t>(jobs));
    std::vector<std::future<SimRun>> pending;
    for (std::size_t i = base; i < end; ++i)
      pending.push_back(std::async(std::launch::async, run_one, runs[i]));
    for (std::size_t i = base; i < end; ++i) runs[i] = pending[i - base].get();
  }
  return runs;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out, int jobs) {
  const auto runs = run_replications(cfg, jobs);
  std::ostringstream csv;
  csv << "scheme,seed,warmup_used,slots_collected,p_ra,p_ra_se,p_ra_n,"
         "p_tx,p_tx_se,p_tx_n,p,p_se,p_n,mean_queue,mean_queue_se,"
         "wait_mean,wait_mean_se,dispersion,overflow\n";
  bool failed = false;
  for (const auto& r : runs) {
    if (!r.error.empty()) {
      std::cerr << "simulation error (" << iotq::solver::to_string(r.scheme)
                << ", seed " << r.seed_index << "): " << r.error << "\n";
      failed = true;
      continue;
    }
    const auto& s = r.stats;
    csv << iotq::solver::to_string(r.scheme) << ',' << r.seed_index << ','
        << s.warmup_used << ',' << s.slots_collected << ','
        << fmt(s.p_ra_hat.value) << ',' << fmt(s.p_ra_hat.se) << ','
        << s.p_ra_hat.n << ',' << fmt(s.p_tx_hat.value) << ','
        << fmt(s.p_tx_hat.se) << ',' << s.p_tx_hat.n << ','
        << fmt(s.p_hat.value) << ',' << fmt(s.p_hat.se) << ',' << s.p_hat.n
        << ',' << fmt(s.mean_queue_hat.value) << ','
        << fmt(s.mean_queue_hat.se) << ',' << fmt(s.wait_mean_hat.value) << ','
        << fmt(s.wait_mean_hat.se) << ',' << fmt(s.dispersion_hat) << ','
        << s.overflow_count << '\n';
  }
  const int rc = with_output(out, [&](std::ostream& os) { os << csv.str(); });
  if (rc != kExitOk) return rc;
  return failed ? kExitSolver : kExitOk;
}

int cmd_validate(const ExperimentConfig& cfg, const std::string& out, int jobs) {
  const auto runs = run_replications(cfg, jobs);
  std::ostringstream csv;
  csv << "scheme,seed,metric,sim,analysis,gap,z,tol,skipped,pass\n";
  bool all_pass = true;
  for (const auto& r : runs) {
    if (!r.error.empty()) {
      std::cerr << "simulation error (" << iotq::solver::to_string(r.scheme)
                << ", seed " << r.seed_index << "): " << r.error << "\n";
      return kExitSolver;
    }
    iotq::solver::SolverReport rep;
    try {
      rep = iotq::solver::solve(cfg.params, r.scheme, cfg.solver_opts);
    } catch (const std::exception& e) {
      std::cerr << "solver error: " << e.what() << "\n";
      return kExitSolver;
    }
    const auto cmp = iotq::sim::compare_to_analysis(r.stats, rep, cfg.tol);
    for (const auto& g : cmp.gaps) {
      std::cout << iotq::solver::to_string(r.scheme) << " seed "
                << r.seed_index << "  " << g.name << ": "
                << (g.skipped
                        ? std::string("skipped (no samples)")
                        : "sim=" + fmt(g.sim) + " analysis=" + fmt(g.analysis) +
                              " gap=" + fmt(g.gap) + " z=" + fmt(g.z) +
                              " tol=" + fmt(g.tol) +
                              (g.pass ? "  PASS" : "  FAIL"))
                << "\n";
      csv << iotq::solver::to_string(r.scheme) << ',' << r.seed_index << ','
          << g.name << ',' << fmt(g.sim) << ',' << fmt(g.analysis) << ','
          << fmt(g.gap) << ',' << fmt(g.z) << ',' << fmt(g.tol) << ','
          << (g.skipped ? 1 : 0) << ',' << (g.pass ? 1 : 0) << '\n';
    }
    if (!cmp.pass) all_pass = false;
  }
  if (!out.empty()) {
    const int rc = with_output(out, [&](std::ostream& os) { os << csv.str(); });
    if (rc != kExitOk) return rc;
  }
  std::cout << (all_pass ? "validation: PASS" : "validation: FAIL") << "\n";
  return all_pass ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatiotemporal analysis of scheduled and grant-free IoT uplink"};
  app.require_subcommand(1);
  app.fallthrough();  // --config etc. may appear after the subcommand

  std::string config_path, out_path;
  int seeds_flag = 0, jobs_flag = 0;
  app.add_option("--config", config_path, "experiment config file");
  app.add_option("--out", out_path, "output path (default stdout)");
  app.add_option("--seeds", seeds_flag, "number of simulation replications");
  app.add_option("--jobs", jobs_flag, "parallel jobs (default $IOTQ_JOBS)");

  auto* analyze = app.add_subcommand("analyze", "solver sweep to CSV");
  auto* frontier = app.add_subcommand("frontier", "stability frontier to CSV");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo replications to CSV");
  auto* validate = app.add_subcommand("validate", "simulation-vs-analysis check");

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = iotq::config::load_config(config_path);
  } catch (const iotq::config::ConfigError& e) {
    std::cerr << "config error (line " << e.line() << "): " << e.what() << "\n";
    return kExitConfig;
  }
  if (seeds_flag > 0) cfg.seeds = seeds_flag;
  if (!out_path.empty()) cfg.out_path = out_path;
  const int jobs = resolve_jobs(jobs_flag, cfg);

  try {
    if (analyze->parsed()) return cmd_analyze(cfg, cfg.out_path, jobs);
    if (frontier->parsed()) return cmd_frontier(cfg, cfg.out_path, jobs);
    if (simulate->parsed()) return cmd_simulate(cfg, cfg.out_path, jobs);
    if (validate->parsed()) return cmd_validate(cfg, cfg.out_path, jobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}

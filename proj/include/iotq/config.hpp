#pragma once

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iotq/simulator.hpp"
#include "iotq/solver.hpp"
#include "iotq/spatial.hpp"

namespace iotq::config {

/// Parse failure with the offending line for the CLI diagnostic.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line)
      : std::runtime_error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentConfig {
  SystemParams params;  // dB/dBm keys converted to linear/watts on load
  std::vector<solver::Scheme> schemes{solver::Scheme::ScUl,
                                      solver::Scheme::RaUl};
  std::string sweep_axis = "alpha";
  std::vector<double> sweep_values;
  std::vector<double> frontier_alphas;
  double frontier_a_tol = 1e-3;
  std::int64_t sim_slots = 3000;
  std::int64_t sim_warmup = 1000;
  int seeds = 1;
  std::uint64_t seed_base = 1;
  double region_half_width_km = 5.0;
  std::string out_path;  // empty means stdout
  sim::Tolerances tol;
  int jobs = 0;  // 0: take IOTQ_JOBS or hardware concurrency
  solver::Options solver_opts;
};

double db_to_linear(double db);      // 10^(db/10)
double dbm_to_watts(double dbm);     // 10^(dbm/10) mW

/// Flat key = value text; '#' comments; unknown keys rejected.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

}  // namespace iotq::config

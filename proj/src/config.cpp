#include "iotq/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace iotq::config {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_num(const std::string& v, int line) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + v + "'", line);
  }
  if (used != v.size())
    throw ConfigError("trailing characters in number: '" + v + "'", line);
  return x;
}

std::int64_t parse_int(const std::string& v, int line) {
  const double x = parse_num(v, line);
  const auto i = static_cast<std::int64_t>(x);
  if (static_cast<double>(i) != x)
    throw ConfigError("expected an integer: '" + v + "'", line);
  return i;
}

std::vector<double> parse_list(const std::string& v, int line) {
  std::string tmp = v;
  for (char& c : tmp)
    if (c == ',') c = ' ';
  std::istringstream ss(tmp);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) out.push_back(parse_num(tok, line));
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string raw;
  int line = 0;
  bool saw_alpha = false, saw_mu = false;
  double alpha = 0.0;

  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s.erase(hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value': '" + s + "'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("empty key or value", line);

    SystemParams& p = cfg.params;
    if (key == "bs_intensity_per_km2") p.bs_intensity = parse_num(val, line);
    else if (key == "device_intensity_per_km2") {
      p.device_intensity = parse_num(val, line);
      saw_mu = true;
    } else if (key == "alpha") {
      alpha = parse_num(val, line);
      saw_alpha = true;
    } else if (key == "eta") p.eta = parse_num(val, line);
    else if (key == "arrival_prob") p.arrival = parse_num(val, line);
    else if (key == "rho_dbm") p.rho = dbm_to_watts(parse_num(val, line));
    else if (key == "noise_dbm") p.noise = dbm_to_watts(parse_num(val, line));
    else if (key == "theta_sr_db") p.theta_sr = db_to_linear(parse_num(val, line));
    else if (key == "theta_tx_db") p.theta_tx = db_to_linear(parse_num(val, line));
    else if (key == "theta_ul_db") p.theta_ul = db_to_linear(parse_num(val, line));
    else if (key == "cell_const") p.cell_const = parse_num(val, line);
    else if (key == "n_zc") p.n_zc = static_cast<int>(parse_int(val, line));
    else if (key == "n_chan") p.n_chan = static_cast<int>(parse_int(val, line));
    else if (key == "q_blocks") p.q_blocks = static_cast<int>(parse_int(val, line));
    else if (key == "n_slots") p.n_slots = static_cast<int>(parse_int(val, line));
    else if (key == "scheme") {
      if (val == "scul") cfg.schemes = {solver::Scheme::ScUl};
      else if (val == "raul") cfg.schemes = {solver::Scheme::RaUl};
      else if (val == "both")
        cfg.schemes = {solver::Scheme::ScUl, solver::Scheme::RaUl};
      else
        throw ConfigError("scheme must be scul, raul, or both: '" + val + "'",
                          line);
    } else if (key == "sweep_axis") cfg.sweep_axis = val;
    else if (key == "sweep_values") cfg.sweep_values = parse_list(val, line);
    else if (key == "frontier_alphas") cfg.frontier_alphas = parse_list(val, line);
    else if (key == "frontier_a_tol") cfg.frontier_a_tol = parse_num(val, line);
    else if (key == "sim_slots") cfg.sim_slots = parse_int(val, line);
    else if (key == "sim_warmup") cfg.sim_warmup = parse_int(val, line);
    else if (key == "seeds") cfg.seeds = static_cast<int>(parse_int(val, line));
    else if (key == "seed_base")
      cfg.seed_base = static_cast<std::uint64_t>(parse_int(val, line));
    else if (key == "region_half_width_km")
      cfg.region_half_width_km = parse_num(val, line);
    else if (key == "out_path") cfg.out_path = val;
    else if (key == "tol_p_tx") cfg.tol.p_tx = parse_num(val, line);
    else if (key == "tol_p") cfg.tol.p = parse_num(val, line);
    else if (key == "tol_p_ra") cfg.tol.p_ra = parse_num(val, line);
    else if (key == "jobs") cfg.jobs = static_cast<int>(parse_int(val, line));
    else if (key == "solver_eps") cfg.solver_opts.eps = parse_num(val, line);
    else if (key == "solver_max_iter")
      cfg.solver_opts.max_iter = static_cast<int>(parse_int(val, line));
    else
      throw ConfigError("unknown key '" + key + "'", line);
  }

  if (saw_alpha && saw_mu)
    throw ConfigError(
        "alpha and device_intensity_per_km2 are mutually exclusive", 0);
  if (saw_alpha) cfg.params.device_intensity = alpha * cfg.params.bs_intensity;

  try {
    cfg.params.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what(), 0);
  }
  if (cfg.seeds < 1) throw ConfigError("seeds must be >= 1", 0);
  if (cfg.sim_slots <= cfg.sim_warmup)
    throw ConfigError("sim_slots must exceed sim_warmup", 0);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path, 0);
  return parse_config(in);
}

}  // namespace iotq::config

#include "iotq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <stdexcept>

namespace iotq::sim {

namespace {

constexpr double kObsRadius = 1.0;   // km, statistics disc
constexpr double kGuardRing = 4.0;   // km, minimum buffer around the disc
constexpr int kBatches = 20;         // batch-means segments
constexpr int kWindow = 200;         // slots per warmup stabilisation window

struct BatchAcc {
  std::vector<double> num, den;
  BatchAcc() : num(kBatches, 0.0), den(kBatches, 0.0) {}
  void add(int b, double x, double w = 1.0) { num[b] += x; den[b] += w; }
  Estimate estimate() const {
    Estimate e;
    double tn = 0.0, td = 0.0;
    for (int b = 0; b < kBatches; ++b) { tn += num[b]; td += den[b]; }
    e.n = static_cast<std::int64_t>(td + 0.5);
    if (td <= 0.0) return e;
    e.value = tn / td;
    // spread of the per-batch means around the pooled mean
    double ss = 0.0;
    int nb = 0;
    for (int b = 0; b < kBatches; ++b) {
      if (den[b] <= 0.0) continue;
      const double d = num[b] / den[b] - e.value;
      ss += d * d;
      ++nb;
    }
    if (nb > 1) e.se = std::sqrt(ss / (nb - 1) / nb);
    return e;
  }
};

}  // namespace

NetworkRealization realize_network(const SystemParams& params,
                                   double region_half_width, std::uint64_t seed) {
  params.validate();
  if (!(region_half_width >= kObsRadius + kGuardRing))
    throw std::domain_error(
        "realize_network: region too small for the observation disc guard ring");

  std::mt19937_64 rng(seed);
  const double hw = region_half_width;
  const double area = 4.0 * hw * hw;
  std::uniform_real_distribution<double> pos(-hw, hw);

  NetworkRealization net;
  net.half_width = hw;

  const int n_bs = std::poisson_distribution<int>(params.bs_intensity * area)(rng);
  if (n_bs == 0)
    throw std::runtime_error("realize_network: degenerate realization (no BS)");
  net.bs_points.resize(n_bs);
  for (auto& p : net.bs_points) p = {pos(rng), pos(rng)};

  const int n_dev =
      std::poisson_distribution<int>(params.device_intensity * area)(rng);
  net.device_points.resize(n_dev);
  for (auto& p : net.device_points) p = {pos(rng), pos(rng)};

  net.association.resize(n_dev);
  net.service_distance.resize(n_dev);
  net.tx_power.resize(n_dev);
  for (int d = 0; d < n_dev; ++d) {
    const auto& dp = net.device_points[d];
    int best = 0;
    double best2 = std::numeric_limits<double>::infinity();
    for (int b = 0; b < n_bs; ++b) {
      const double dx = dp[0] - net.bs_points[b][0];
      const double dy = dp[1] - net.bs_points[b][1];
      const double d2 = dx * dx + dy * dy;
      if (d2 < best2) { best2 = d2; best = b; }
    }
    net.association[d] = best;
    const double r = std::sqrt(best2);
    net.service_distance[d] = r;
    net.tx_power[d] = params.rho * std::pow(r, params.eta);

    // An observed device whose nearest in-region BS is farther away than the
    // region boundary might really be served by an unseen outside BS.
    const double edge = hw - std::max(std::abs(dp[0]), std::abs(dp[1]));
    if (dp[0] * dp[0] + dp[1] * dp[1] <= kObsRadius * kObsRadius && r > edge)
      throw std::runtime_error(
          "realize_network: degenerate realization (observed device may "
          "associate outside the region)");
  }
  return net;
}

SimStats run_sim(const NetworkRealization& net, const SystemParams& params,
                 solver::Scheme scheme, std::int64_t slots, std::int64_t warmup,
                 std::uint64_t seed) {
  params.validate();
  if (slots <= warmup)
    throw std::domain_error("run_sim: slots must exceed warmup");
  const int n_bs = static_cast<int>(net.bs_points.size());
  const int n_dev = static_cast<int>(net.device_points.size());
  const int N = params.n_slots;
  const bool scul = scheme == solver::Scheme::ScUl;
  const int n_codes = scul ? params.n_zc : params.n_chan;
  const int n_blocks = params.q_blocks;

  // Normalized cross gains: a transmission from device d received at BS b has
  // mean power rho * (r_d / dist(d, b))^eta; at the serving BS this is rho.
  std::vector<double> w(static_cast<std::size_t>(n_dev) * n_bs);
  for (int d = 0; d < n_dev; ++d) {
    const auto& dp = net.device_points[d];
    const double r = net.service_distance[d];
    for (int b = 0; b < n_bs; ++b) {
      const double dx = dp[0] - net.bs_points[b][0];
      const double dy = dp[1] - net.bs_points[b][1];
      const double dist = std::sqrt(dx * dx + dy * dy);
      w[static_cast<std::size_t>(d) * n_bs + b] =
          dist > 0.0 ? std::pow(r / dist, params.eta)
                     : std::numeric_limits<double>::infinity();
    }
  }

  std::vector<int> inner_idx(n_dev, -1);  // device -> compact observed index
  std::vector<int> inner_devs;
  for (int d = 0; d < n_dev; ++d) {
    const auto& dp = net.device_points[d];
    if (dp[0] * dp[0] + dp[1] * dp[1] <= kObsRadius * kObsRadius) {
      inner_idx[d] = static_cast<int>(inner_devs.size());
      inner_devs.push_back(d);
    }
  }

  enum Phase : std::uint8_t { kIdle = 0, kRa = 1, kTx = 2 };
  std::vector<int> qlen(n_dev, 0);
  std::vector<std::uint8_t> phase(n_dev, kIdle);
  std::vector<int> txk(n_dev, 0);            // EA-Tx slot counter, 1..N
  std::vector<int> grants(n_bs, 0);          // active grants per BS, <= q
  std::vector<std::vector<int>> granted(n_bs);  // device ids holding a grant
  std::vector<std::deque<std::int64_t>> fifo(inner_devs.size());
  std::vector<std::int64_t> last_dep(inner_devs.size(), -1);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::exponential_distribution<double> expd(1.0);
  std::uniform_int_distribution<int> code_pick(0, n_codes - 1);

  SimStats stats;
  BatchAcc acc_ra, acc_tx, acc_p, acc_q, acc_w;
  std::vector<std::int64_t> wait_hist;
  double wait_sum = 0.0, wait_sq = 0.0;
  std::int64_t wait_n = 0;

  // channel -> transmitting devices this slot
  std::vector<std::vector<int>> on_code(std::max(n_codes, n_blocks));
  std::vector<int> touched;  // BS indices with contenders on the current channel
  std::vector<int> seen(n_bs, -1);
  std::vector<double> itot(n_bs, 0.0);
  std::vector<double> best_v(n_bs, 0.0);
  std::vector<int> best_t(n_bs, -1);
  std::vector<int> block_scratch(n_blocks);
  for (int i = 0; i < n_blocks; ++i) block_scratch[i] = i;
  std::vector<std::vector<int>> members(n_bs);  // devices per cell
  for (int d = 0; d < n_dev; ++d) members[net.association[d]].push_back(d);
  std::vector<int> pool(n_bs);  // per-block interferer per cell
  std::vector<std::uint8_t> won_ra(n_dev, 0), won_tx(n_dev, 0), att_ra(n_dev, 0);
  int stamp = 0;

  // Highest-SINR capture on one channel: at most one success per BS.
  // Marks winners in `won`; every transmitter in `txs` counts as an attempt.
  auto capture = [&](const std::vector<int>& txs, double theta,
                     std::vector<std::uint8_t>& won) {
    const int chan = ++stamp;
    touched.clear();
    for (int t : txs) {
      const int b = net.association[t];
      if (seen[b] != chan) {
        seen[b] = chan;
        itot[b] = params.noise;
        best_v[b] = 0.0;
        best_t[b] = -1;
        touched.push_back(b);
      }
    }
    for (int b : touched) {
      const double* wb = w.data() + b;
      double total = itot[b];
      for (int t : txs) {
        const double v =
            params.rho * expd(rng) * wb[static_cast<std::size_t>(t) * n_bs];
        total += v;
        if (net.association[t] == b && v > best_v[b]) {
          best_v[b] = v;
          best_t[b] = t;
        }
      }
      const double sinr = best_v[b] / (total - best_v[b]);
      if (best_t[b] >= 0 && sinr > theta) won[best_t[b]] = 1;
    }
  };

  // Warmup extension: wait until the sliding-window mean queue settles.
  const std::int64_t warmup_cap = std::min<std::int64_t>(
      10 * std::max<std::int64_t>(warmup, 1),
      std::max<std::int64_t>(warmup, slots / 2));
  std::int64_t collect_start = -1;
  double win_sum = 0.0, prev_win = -1.0;

  const double a = params.arrival;
  for (std::int64_t slot = 0; slot < slots; ++slot) {
    const bool collecting = collect_start >= 0;
    const int batch =
        collecting ? static_cast<int>((slot - collect_start) * kBatches /
                                      (slots - collect_start))
                   : 0;

    for (auto& v : on_code) v.clear();

    if (scul) {
      // RA-SR contenders choose a preamble code uniformly.
      std::fill(att_ra.begin(), att_ra.end(), 0);
      for (int d = 0; d < n_dev; ++d)
        if (phase[d] == kRa) {
          on_code[code_pick(rng)].push_back(d);
          att_ra[d] = 1;
        }
      std::fill(won_ra.begin(), won_ra.end(), 0);
      for (int z = 0; z < n_codes; ++z)
        if (!on_code[z].empty()) capture(on_code[z], params.theta_sr, won_ra);

      // Each BS re-randomizes its granted devices over distinct blocks.
      std::vector<std::vector<int>>& on_block = on_code;  // reuse
      for (auto& v : on_block) v.clear();
      for (int b = 0; b < n_bs; ++b) {
        const int g = static_cast<int>(granted[b].size());
        for (int i = 0; i < g; ++i) {
          std::uniform_int_distribution<int> pick(i, n_blocks - 1);
          std::swap(block_scratch[i], block_scratch[pick(rng)]);
          on_block[block_scratch[i]].push_back(granted[b][i]);
        }
      }

      // EA-Tx: no intracell interference, and each transmission faces exactly
      // one scheduled interferer per other cell on its block -- the cell's
      // own transmitter when it has one there, otherwise a uniformly drawn
      // member standing in as that cell's scheduled device.
      std::fill(won_tx.begin(), won_tx.end(), 0);
      for (int z = 0; z < n_blocks; ++z) {
        const auto& txs = on_block[z];
        if (txs.empty()) continue;
        pool.assign(n_bs, -1);
        for (int t : txs) pool[net.association[t]] = t;
        for (int b = 0; b < n_bs; ++b)
          if (pool[b] < 0 && !members[b].empty())
            pool[b] = members[b][std::uniform_int_distribution<std::size_t>(
                0, members[b].size() - 1)(rng)];
        for (int t : txs) {
          const int b = net.association[t];
          const double sig = params.rho * expd(rng);
          double total = params.noise;
          const double* wb = w.data() + b;
          for (int bp = 0; bp < n_bs; ++bp) {
            if (bp == b || pool[bp] < 0) continue;
            total += params.rho * expd(rng) *
                     wb[static_cast<std::size_t>(pool[bp]) * n_bs];
          }
          if (sig / total > params.theta_tx) won_tx[t] = 1;
        }
      }

      for (int b = 0; b < n_bs; ++b) {
        auto& lst = granted[b];
        for (std::size_t i = 0; i < lst.size();) {
          const int d = lst[i];
          ++txk[d];
          if (collecting && inner_idx[d] >= 0)
            acc_tx.add(batch, won_tx[d] ? 1.0 : 0.0);
          if (won_tx[d]) {
            --qlen[d];
            if (inner_idx[d] >= 0) {
              auto& f = fifo[inner_idx[d]];
              f.pop_front();
              last_dep[inner_idx[d]] = slot;
              // the successor has now cleared its queue: it waited from its
              // arrival slot through this one, inclusive
              if (!f.empty() && collecting) {
                const std::int64_t wv = slot - f.front() + 1;
                if (static_cast<std::size_t>(wv) >= wait_hist.size())
                  wait_hist.resize(wv + 1, 0);
                ++wait_hist[wv];
                wait_sum += wv;
                wait_sq += static_cast<double>(wv) * wv;
                ++wait_n;
                acc_w.add(batch, static_cast<double>(wv));
              }
            }
          }
          const bool done = qlen[d] == 0;
          if (done || txk[d] >= N) {
            phase[d] = done ? kIdle : kRa;
            txk[d] = 0;
            --grants[b];
            lst[i] = lst.back();
            lst.pop_back();
          } else {
            ++i;
          }
        }
      }

      // RA-SR outcome stats + grant admission; the BS allocates blocks for
      // the next slot, so grants freed above are available again.
      for (int d = 0; d < n_dev; ++d) {
        if (!att_ra[d]) continue;
        if (collecting && inner_idx[d] >= 0)
          acc_ra.add(batch, won_ra[d] ? 1.0 : 0.0);
        if (won_ra[d]) {
          const int b = net.association[d];
          if (grants[b] < n_blocks) {
            ++grants[b];
            granted[b].push_back(d);
            phase[d] = kTx;
            txk[d] = 0;  // first EA-Tx slot is the next one
          }
        }
      }
    } else {
      // RA-UL: every backlogged device transmits on a uniform block.
      for (int d = 0; d < n_dev; ++d)
        if (qlen[d] > 0) on_code[code_pick(rng)].push_back(d);
      std::fill(won_ra.begin(), won_ra.end(), 0);
      for (int z = 0; z < n_codes; ++z)
        if (!on_code[z].empty()) capture(on_code[z], params.theta_ul, won_ra);

      for (int d = 0; d < n_dev; ++d) {
        if (qlen[d] == 0) continue;
        if (collecting && inner_idx[d] >= 0)
          acc_p.add(batch, won_ra[d] ? 1.0 : 0.0);
        if (won_ra[d]) {
          --qlen[d];
          if (inner_idx[d] >= 0) {
            auto& f = fifo[inner_idx[d]];
            f.pop_front();
            last_dep[inner_idx[d]] = slot;
            if (!f.empty() && collecting) {
              const std::int64_t wv = slot - f.front() + 1;
              if (static_cast<std::size_t>(wv) >= wait_hist.size())
                wait_hist.resize(wv + 1, 0);
              ++wait_hist[wv];
              wait_sum += wv;
              wait_sq += static_cast<double>(wv) * wv;
              ++wait_n;
              acc_w.add(batch, static_cast<double>(wv));
            }
          }
        }
      }
    }

    // End-of-slot arrivals: a packet landing now is first served next slot.
    if (a > 0.0) {
      for (int d = 0; d < n_dev; ++d) {
        if (uni(rng) >= a) continue;
        if (qlen[d] >= kBufferCap) {
          ++stats.overflow_count;
          continue;
        }
        ++qlen[d];
        if (inner_idx[d] >= 0) {
          auto& f = fifo[inner_idx[d]];
          f.push_back(slot);
          if (f.size() == 1 && collecting) {
            // Empty queue on arrival.  If the last predecessor left during
            // this very slot the system was busy at the slot start, which the
            // analysis counts as a one-slot wait; otherwise zero.
            const std::int64_t wv = last_dep[inner_idx[d]] == slot ? 1 : 0;
            if (static_cast<std::size_t>(wv) >= wait_hist.size())
              wait_hist.resize(wv + 1, 0);
            ++wait_hist[wv];
            wait_sum += wv;
            wait_sq += static_cast<double>(wv) * wv;
            ++wait_n;
            acc_w.add(batch, static_cast<double>(wv));
          }
        }
        if (phase[d] == kIdle) phase[d] = scul ? kRa : kIdle;
      }
    }

    // queue length excludes the head-of-line packet, matching E{Q_L}
    double qsum = 0.0;
    for (int d : inner_devs) qsum += qlen[d] > 0 ? qlen[d] - 1 : 0;
    if (collecting && !inner_devs.empty())
      acc_q.add(batch, qsum / inner_devs.size());

    if (!collecting) {
      win_sum += inner_devs.empty() ? 0.0 : qsum / inner_devs.size();
      if ((slot + 1) % kWindow == 0) {
        const double m = win_sum / kWindow;
        const bool settled =
            prev_win >= 0.0 &&
            std::abs(m - prev_win) <= 0.05 * std::max(prev_win, 1e-9);
        prev_win = m;
        win_sum = 0.0;
        if (slot + 1 >= warmup && (settled || slot + 1 >= warmup_cap))
          collect_start = slot + 1;
      }
    }
  }

  if (collect_start < 0) collect_start = slots - 1;  // degenerate but nonempty
  stats.warmup_used = static_cast<int>(collect_start);
  stats.slots_collected = slots - collect_start;
  stats.p_ra_hat = acc_ra.estimate();
  stats.p_tx_hat = acc_tx.estimate();
  stats.p_hat = acc_p.estimate();
  stats.mean_queue_hat = acc_q.estimate();
  stats.wait_mean_hat = acc_w.estimate();
  if (wait_n > 0) {
    stats.wait_pmf_hat.probs.resize(wait_hist.size());
    for (std::size_t i = 0; i < wait_hist.size(); ++i)
      stats.wait_pmf_hat.probs[i] = static_cast<double>(wait_hist[i]) / wait_n;
    const double mean = wait_sum / wait_n;
    if (wait_n > 1 && mean > 0.0) {
      const double var = (wait_sq - wait_sum * mean) / (wait_n - 1);
      stats.dispersion_hat = var / mean;
    }
  } else {
    stats.wait_pmf_hat.probs = {1.0};
  }
  return stats;
}

Discrepancy compare_to_analysis(const SimStats& stats,
                                const solver::SolverReport& report,
                                const Tolerances& tol) {
  Discrepancy out;
  auto add = [&](const std::string& name, const Estimate& e, double ana,
                 double t) {
    MetricGap g;
    g.name = name;
    g.analysis = ana;
    g.tol = t;
    if (e.n == 0) {
      g.skipped = true;
    } else {
      g.sim = e.value;
      g.gap = std::abs(e.value - ana);
      g.z = e.se > 0.0 ? g.gap / e.se : 0.0;
      g.pass = g.gap <= t;
    }
    if (!g.pass) out.pass = false;
    out.gaps.push_back(g);
  };

  if (report.scheme == solver::Scheme::ScUl) {
    add("p_ra", stats.p_ra_hat, report.p_ra, tol.p_ra);
    add("p_tx", stats.p_tx_hat, report.p_tx, tol.p_tx);
  } else {
    add("p", stats.p_hat, report.p_tx, tol.p);
  }
  return out;
}

}  // namespace iotq::sim

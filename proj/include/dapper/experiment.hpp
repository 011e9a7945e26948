#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "dapper/actions.hpp"
#include "dapper/baselines.hpp"
#include "dapper/capture.hpp"
#include "dapper/config.hpp"
#include "dapper/dapper.hpp"
#include "dapper/simulator.hpp"
#include "dapper/workload.hpp"

namespace dapper {

using AnyTracker = std::variant<NullTracker, ParaTracker, HydraTracker, CometTracker, AbacusTracker, DapperS, DapperH>;

inline DapperParams dapper_params(const ExperimentConfig& c, Time t_reset) {
  DapperParams p;
  p.geometry = c.geometry;
  p.n_m = effective_n_m(c);
  p.group_size = c.tp.group_size;
  p.t_reset = t_reset;
  p.seed = c.seed;
  p.reset_clamp = c.tp.dapper_h_reset_clamp;
  return p;
}

inline AnyTracker make_tracker(const ExperimentConfig& c) {
  c.validate();
  switch (c.tracker) {
    case TrackerKind::Null: return NullTracker{};
    case TrackerKind::Para: return ParaTracker(para_probability(c.n_rh, c.tp.para_k), c.seed);
    case TrackerKind::Hydra: {
      HydraParams p;
      p.geometry = c.geometry;
      p.n_m = effective_n_m(c);
      p.group_rows = c.tp.hydra_group_rows;
      p.gc_fraction = c.tp.hydra_gc_fraction;
      p.rcc_entries = c.tp.hydra_rcc_entries;
      p.rcc_ways = c.tp.hydra_rcc_ways;
      p.seed = c.seed;
      return HydraTracker(p);
    }
    case TrackerKind::Comet: {
      CometParams p;
      p.geometry = c.geometry;
      p.threshold = std::max<std::uint32_t>(1, c.n_rh / 4);
      p.hashes = c.tp.comet_hashes;
      p.counters = c.tp.comet_counters;
      p.rat_entries = c.tp.comet_rat_entries;
      p.history = c.tp.comet_history;
      p.miss_rate_limit = c.tp.comet_miss_rate;
      p.reset_period = c.timing.t_refw / 3;
      p.periodic_refresh = c.tp.comet_periodic_refresh;
      p.seed = c.seed;
      return CometTracker(p);
    }
    case TrackerKind::Abacus: {
      AbacusParams p;
      p.geometry = c.geometry;
      p.n_m = effective_n_m(c);
      p.entries = c.tp.abacus_entries ? c.tp.abacus_entries : abacus_entries(c.n_rh, c.timing);
      return AbacusTracker(p);
    }
    case TrackerKind::DapperS: return DapperS(dapper_params(c, effective_dapper_s_reset(c)));
    case TrackerKind::DapperH: return DapperH(dapper_params(c, c.timing.t_refw));
  }
  throw ConfigError("unknown tracker");
}

inline std::unique_ptr<Workload> make_benign(WorkloadKind k, const ExperimentConfig& c, std::uint64_t sub) {
  switch (k) {
    case WorkloadKind::UniformRandom: return std::make_unique<UniformRandom>(c.geometry, c.seed, sub);
    case WorkloadKind::Zipfian: return std::make_unique<Zipfian>(c.geometry, c.wp.zipf_theta, c.seed, sub);
    case WorkloadKind::SequentialStream: return std::make_unique<SequentialStream>(c.geometry);
    default: throw ConfigError("not a benign workload: " + std::string(to_string(k)));
  }
}

inline bool is_capture(WorkloadKind k) { return k == WorkloadKind::CaptureS || k == WorkloadKind::CaptureH; }

// The primary stream alone, without the co-runner.
inline std::unique_ptr<Workload> make_primary(const ExperimentConfig& c) {
  const Geometry& g = c.geometry;
  const WorkloadParams& w = c.wp;
  switch (w.kind) {
    case WorkloadKind::None: throw ConfigError("workload = none has nothing to run");
    case WorkloadKind::UniformRandom:
    case WorkloadKind::Zipfian:
    case WorkloadKind::SequentialStream: return make_benign(w.kind, c, 0);
    case WorkloadKind::RefreshAttack: return refresh_attack(g, w.attack_rows_per_bank, c.seed, w.attack_rank);
    case WorkloadKind::StreamingAttack: return std::make_unique<StreamingAttack>(g, w.attack_rank);
    case WorkloadKind::HydraSetConflict:
      return hydra_set_conflict(g, w.attack_rows ? w.attack_rows : 64, c.tp.hydra_rcc_entries / c.tp.hydra_rcc_ways,
                                c.tp.hydra_group_rows, c.seed, w.attack_rank);
    case WorkloadKind::CometRatThrash:
      return comet_rat_thrash(g, w.attack_rows ? w.attack_rows : 192, c.seed, w.attack_rank, w.attack_bank);
    case WorkloadKind::AbacusSpill: return std::make_unique<AbacusSpill>(g, w.attack_rank);
    case WorkloadKind::CaptureS: {
      CaptureSParams p;
      p.geometry = g;
      p.rank = w.attack_rank;
      p.n_m = effective_n_m(c);
      p.t_reset = effective_dapper_s_reset(c);
      p.t_rc = c.timing.t_rc;
      p.t_rrd_s = c.timing.t_rrd_s;
      p.trials = w.capture_trials;
      p.seed = c.seed;
      return std::make_unique<CaptureDapperS>(p);
    }
    case WorkloadKind::CaptureH: {
      CaptureHParams p;
      p.geometry = g;
      p.rank = w.attack_rank;
      p.n_m = effective_n_m(c);
      p.align_windows = true;
      p.t_refw = c.timing.t_refw;
      p.trials = w.capture_trials;
      p.seed = c.seed;
      return std::make_unique<CaptureDapperH>(p);
    }
    case WorkloadKind::Trace: return std::make_unique<TraceWorkload>(w.trace_path, g);
  }
  throw ConfigError("unknown workload");
}

inline std::unique_ptr<Workload> make_workload(const ExperimentConfig& c) {
  auto primary = make_primary(c);
  WorkloadKind co = c.corunner();
  if (co == WorkloadKind::None) return primary;
  return std::make_unique<Interleave>(std::move(primary), make_benign(co, c, 1));
}

struct RunLimits {
  Time deadline = kNever;  // nothing is issued at or after this time
  std::uint64_t max_activations = 0;  // 0: unbounded
};

// Drives one engine with one workload until the stream ends or a limit hits.
template <Tracker T>
SimReport simulate(const ExperimentConfig& c, T& tracker, Workload& w, const RunLimits& lim,
                   std::ostream* log = nullptr) {
  Engine<T> e(c, tracker, log);
  while (lim.max_activations == 0 || e.activations() < lim.max_activations) {
    auto req = w.next(e.now());
    if (!req) break;
    ActResult res = e.activate(req->addr, req->not_before, lim.deadline);
    if (!res.issued) break;
    w.observe(*req, res);
  }
  SimReport r = e.report();
  r.workload = w.name();
  w.collect_stats(r.stats);
  return r;
}

inline SimReport simulate(const ExperimentConfig& c, AnyTracker& t, Workload& w, const RunLimits& lim,
                          std::ostream* log = nullptr) {
  return std::visit([&](auto& tr) { return simulate(c, tr, w, lim, log); }, t);
}

// Ratio of makespans for the same workload and seed.
inline double slowdown(const SimReport& r, const SimReport& base) {
  if (r.workload != base.workload || r.seed != base.seed)
    throw std::invalid_argument("slowdown: reports ran different workloads ('" + r.workload + "' vs '" +
                                base.workload + "')");
  if (base.makespan <= 0) return r.makespan <= 0 ? 1.0 : 0.0;
  return double(r.makespan) / double(base.makespan);
}

struct RunResult {
  ExperimentConfig config;
  SimReport report;
  bool has_baseline = false;
  SimReport baseline;
  double slowdown = 0;  // only meaningful when has_baseline
  std::string error;    // non-empty when the run failed
};

// The unprotected run fixes the activation count K (time-bounded to the
// configured windows, or `activations` when set); the tracked run then
// issues exactly K activations and the makespans are compared.
inline RunResult run_experiment(const ExperimentConfig& c) {
  RunResult out;
  out.config = c;
  try {
    c.validate();
    RunLimits lim;
    if (c.activations) lim.max_activations = c.activations;
    else if (!is_capture(c.wp.kind)) lim.deadline = c.timing.t_refw * Time(c.duration_windows);

    if (!is_capture(c.wp.kind)) {
      ExperimentConfig bc = c;
      bc.tracker = TrackerKind::Null;
      AnyTracker null_tracker = NullTracker{};
      auto bw = make_workload(bc);
      out.baseline = simulate(bc, null_tracker, *bw, lim);
      out.has_baseline = true;
      lim = RunLimits{kNever, out.baseline.activations};
    }

    AnyTracker tracker = make_tracker(c);
    auto w = make_workload(c);
    std::ofstream logf;
    if (!c.command_log.empty()) {
      logf.open(c.command_log);
      if (!logf) throw std::runtime_error("cannot write command log '" + c.command_log + "'");
    }
    // A count-bounded run with zero activations still issues nothing.
    if (out.has_baseline && lim.max_activations == 0) lim.deadline = 0;
    out.report = simulate(c, tracker, *w, lim, logf.is_open() ? &logf : nullptr);
    if (out.has_baseline) out.slowdown = slowdown(out.report, out.baseline);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

// Runs every config, `threads` at a time. Results keep plan order and do
// not depend on the thread count.
inline std::vector<RunResult> sweep(const std::vector<ExperimentConfig>& plan, unsigned threads = 1) {
  std::vector<RunResult> out(plan.size());
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(plan.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < plan.size();) out[i] = run_experiment(plan[i]);
  };
  if (threads <= 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace dapper

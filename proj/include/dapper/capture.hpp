#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dapper/geometry.hpp"
#include "dapper/random.hpp"
#include "dapper/workload.hpp"

namespace dapper {

struct CaptureObservation {
  std::uint64_t trial = 0;
  std::uint64_t activations = 0;  // spent in this trial
  std::uint64_t probes = 0;
  bool success = false;
  Time start = 0;     // issue time of the trial's first activation
  RowAddress target;  // captured pair (target, partner) when success
  RowAddress partner;
  std::vector<RowAddress> probed;  // capture-h only: the random probe rows
};

// Shared bookkeeping for the capture agents. They only ever see their own
// requests and the mitigation bit the engine reports back.
class CaptureAgent : public Workload {
 public:
  const std::vector<CaptureObservation>& observations() const { return obs_; }
  std::uint64_t trials_done() const { return obs_.size(); }
  std::uint64_t successes() const {
    std::uint64_t s = 0;
    for (auto& o : obs_) s += o.success;
    return s;
  }
  double success_rate() const { return obs_.empty() ? 0.0 : double(successes()) / double(obs_.size()); }

  void collect_stats(StatMap& s) const override {
    std::uint64_t probes = 0;
    for (auto& o : obs_) probes += o.probes;
    s["capture_trials"] = double(obs_.size());
    s["capture_successes"] = double(successes());
    s["capture_probes"] = double(probes);
    s["capture_success_rate"] = success_rate();
    s["capture_skipped_periods"] = double(skipped_);
  }

 protected:
  void finish_trial(bool success, const RowAddress& partner = {}) {
    cur_.success = success;
    if (success) cur_.partner = partner;
    obs_.push_back(cur_);
    cur_ = {};
    cur_.trial = obs_.size();
  }

  CaptureObservation cur_;
  std::vector<CaptureObservation> obs_;
  std::uint64_t skipped_ = 0;  // periods abandoned before the trial started
};

struct CaptureSParams {
  Geometry geometry;
  std::uint32_t rank = 0;
  std::uint32_t n_m = 250;
  Time t_reset = from_ns(32'000'000);
  Time t_rc = from_ns(48);
  Time t_rrd_s = from_ns(2.5);
  std::uint64_t trials = 100;
  std::uint64_t seed = 1;
};

// Per reset period: hammer one target N_M - 1 times right after the
// counters reset, then probe fresh rows in the other banks at tRRD_S rate
// until a refresh is observed or the period ends.
class CaptureDapperS final : public CaptureAgent {
 public:
  explicit CaptureDapperS(const CaptureSParams& p) : p_(p), rng_(make_rng(p.seed, Stream::Agent, 1)) {}

  std::optional<Request> next(Time now) override {
    if (obs_.size() >= p_.trials) return std::nullopt;
    if (phase_ == Phase::Start) begin_trial(now);
    if (phase_ == Phase::Hammer) {
      if (hammered_ < p_.n_m - 1) {
        ++hammered_;
        ++cur_.activations;
        return Request{target_, epoch_start_};
      }
      phase_ = Phase::Probe;
      probe_start_ = epoch_start_ + p_.t_rc * Time(p_.n_m - 1);
      last_probe_ = -1;
    }
    // Probe only if the ACT still fits in this period.
    Time when = last_probe_ < 0 ? std::max(probe_start_, now) : std::max(probe_start_, last_probe_ + p_.t_rrd_s);
    if (when + p_.t_rrd_s > epoch_start_ + p_.t_reset) {
      finish_trial(false);
      phase_ = Phase::Start;
      return next(now);
    }
    std::uint32_t nb = p_.geometry.banks_per_rank();
    std::uint64_t k = cur_.probes++;
    std::uint32_t bank = others_[k % others_.size()];
    std::uint32_t row = std::uint32_t((probe_base_ + k / others_.size()) % p_.geometry.rows_per_bank);
    ++cur_.activations;
    probe_ = bank_row(p_.rank * nb + bank, row, p_.geometry);
    return Request{probe_, probe_start_};
  }

  void observe(const Request& r, const ActResult& res) override {
    if (phase_ == Phase::Hammer && r.addr == target_) {
      // The bank was still busy at the period start (typically blocking
      // left over from the refresh the previous success caused): skip the
      // period instead of spending a trial on it.
      if (hammered_ == 1 && res.time > epoch_start_ + p_.t_rc) {
        ++skipped_;
        cur_ = {};
        cur_.trial = obs_.size();
        phase_ = Phase::Start;
      }
      return;
    }
    if (phase_ != Phase::Probe || !(r.addr == probe_)) return;
    last_probe_ = res.time;
    if (res.mitigated && res.time < epoch_start_ + p_.t_reset) {
      finish_trial(true, probe_);
      phase_ = Phase::Start;
    }
  }

  std::string name() const override { return "capture-s"; }

 private:
  enum class Phase { Start, Hammer, Probe };

  void begin_trial(Time now) {
    // First reset boundary at or after `now` (strictly after once a trial ran).
    std::uint64_t e = std::uint64_t((now + p_.t_reset - 1) / p_.t_reset);
    if (started_ && Time(e) * p_.t_reset <= last_epoch_start_) e = std::uint64_t(last_epoch_start_ / p_.t_reset) + 1;
    if (started_ && Time(e) * p_.t_reset <= now) ++e;
    epoch_start_ = Time(e) * p_.t_reset;
    cur_.start = epoch_start_;
    last_epoch_start_ = epoch_start_;
    started_ = true;
    std::uint32_t nb = p_.geometry.banks_per_rank();
    target_bank_ = std::uniform_int_distribution<std::uint32_t>(0, nb - 1)(rng_);
    std::uint32_t row = std::uniform_int_distribution<std::uint32_t>(0, p_.geometry.rows_per_bank - 1)(rng_);
    target_ = bank_row(p_.rank * nb + target_bank_, row, p_.geometry);
    others_.clear();
    for (std::uint32_t i = 0; i < nb; ++i)
      if (std::uint32_t b = interleaved_bank(i, p_.geometry); b != target_bank_) others_.push_back(b);
    if (others_.empty()) others_.push_back(target_bank_);  // single-bank rank: probe the target's bank
    probe_base_ = std::uniform_int_distribution<std::uint32_t>(0, p_.geometry.rows_per_bank - 1)(rng_);
    cur_.target = target_;
    hammered_ = 0;
    phase_ = Phase::Hammer;
  }

  CaptureSParams p_;
  std::mt19937_64 rng_;
  Phase phase_ = Phase::Start;
  RowAddress target_, probe_;
  std::vector<std::uint32_t> others_;
  std::uint32_t target_bank_ = 0, probe_base_ = 0, hammered_ = 0;
  Time epoch_start_ = 0, last_epoch_start_ = 0, probe_start_ = 0, last_probe_ = -1;
  bool started_ = false;
};

struct CaptureHParams {
  Geometry geometry;
  std::uint32_t rank = 0;
  std::uint32_t n_m = 250;
  std::uint32_t hammers = 0;  // 0 means n_m - 2
  std::uint32_t probes = 2;
  // Start every trial at a fresh window so trials are independent.
  bool align_windows = false;
  Time t_refw = from_ns(32'000'000);
  std::uint64_t trials = 100;
  std::uint64_t seed = 1;
};

// Per trial: a fresh target hammered N_M - 2 times, two random probes in
// the target's bank, then one check activation of the target.
class CaptureDapperH final : public CaptureAgent {
 public:
  explicit CaptureDapperH(const CaptureHParams& p) : p_(p), rng_(make_rng(p.seed, Stream::Agent, 2)) {
    if (p_.hammers == 0) p_.hammers = p_.n_m > 2 ? p_.n_m - 2 : 1;
  }

  std::optional<Request> next(Time now) override {
    if (obs_.size() >= p_.trials) return std::nullopt;
    if (step_ == 0) begin_trial(now);
    std::uint32_t total = p_.hammers + p_.probes + 1;
    std::uint32_t s = step_++;
    ++cur_.activations;
    Time nb = s == 0 ? start_ : 0;
    if (s < p_.hammers || s == total - 1) {
      last_ = target_;
      return Request{target_, nb};
    }
    ++cur_.probes;
    std::uint32_t row;
    do row = std::uniform_int_distribution<std::uint32_t>(0, p_.geometry.rows_per_bank - 1)(rng_);
    while (row == target_.row);
    last_ = target_;
    last_.row = row;
    cur_.probed.push_back(last_);
    return Request{last_, nb};
  }

  void observe(const Request& r, const ActResult& res) override {
    std::uint32_t total = p_.hammers + p_.probes + 1;
    if (step_ == 1) cur_.start = res.time;
    // Only probe and check activations carry information.
    if (step_ > p_.hammers && res.mitigated && !done_) {
      done_ = true;
      hit_ = r.addr;
    }
    if (step_ == total) {
      finish_trial(done_, hit_);
      step_ = 0;
      done_ = false;
    }
  }

  std::string name() const override { return "capture-h"; }

 private:
  void begin_trial(Time now) {
    start_ = 0;
    if (p_.align_windows) {
      std::uint64_t w = std::uint64_t(now / p_.t_refw) + (obs_.empty() && now == 0 ? 0 : 1);
      start_ = Time(w) * p_.t_refw;
    }
    std::uint32_t nb = p_.geometry.banks_per_rank();
    std::uint32_t bank = std::uniform_int_distribution<std::uint32_t>(0, nb - 1)(rng_);
    std::uint32_t row = std::uniform_int_distribution<std::uint32_t>(0, p_.geometry.rows_per_bank - 1)(rng_);
    target_ = bank_row(p_.rank * nb + bank, row, p_.geometry);
    cur_.target = target_;
  }

  CaptureHParams p_;
  std::mt19937_64 rng_;
  RowAddress target_, last_, hit_;
  std::uint32_t step_ = 0;
  Time start_ = 0;
  bool done_ = false;
};

}  // namespace dapper

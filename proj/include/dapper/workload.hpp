#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dapper/actions.hpp"
#include "dapper/geometry.hpp"
#include "dapper/llbc.hpp"
#include "dapper/random.hpp"
#include "dapper/simulator.hpp"

namespace dapper {

struct Request {
  RowAddress addr;
  Time not_before = 0;
};

// A stream of desired activations. Closed-loop agents also see, for each
// of their own requests, whether it was followed by a refresh.
class Workload {
 public:
  virtual ~Workload() = default;
  // nullopt ends the stream.
  virtual std::optional<Request> next(Time now) = 0;
  virtual void observe(const Request&, const ActResult&) {}
  virtual std::string name() const = 0;
  virtual void collect_stats(StatMap&) const {}
};

class UniformRandom final : public Workload {
 public:
  UniformRandom(const Geometry& g, std::uint64_t seed, std::uint64_t sub = 0)
      : g_(g), rng_(make_rng(seed, Stream::Workload, sub)), pick_(0, g.total_rows() - 1) {}
  std::optional<Request> next(Time) override {
    std::uint64_t x = pick_(rng_);
    return Request{unflatten(std::uint32_t(x / g_.rows_per_rank()), x % g_.rows_per_rank(), g_)};
  }
  std::string name() const override { return "uniform"; }

 private:
  Geometry g_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<std::uint64_t> pick_;
};

// Zipf over every row of the channel (Gray et al. rejection-free
// generator). Ranks are scattered across the address space by a fixed
// permutation so hot rows do not cluster in one bank.
class Zipfian final : public Workload {
 public:
  Zipfian(const Geometry& g, double theta, std::uint64_t seed, std::uint64_t sub = 0)
      : g_(g),
        n_(g.total_rows()),
        theta_(theta),
        rng_(make_rng(seed, Stream::Workload, sub)),
        scatter_(unsigned(std::countr_zero(g.total_rows())), seed, 0x21bf) {
    if (!(theta > 0 && theta < 1)) throw std::invalid_argument("zipf theta must be in (0, 1)");
    for (std::uint64_t i = 1; i <= n_; ++i) zetan_ += 1.0 / std::pow(double(i), theta_);
    double zeta2 = 1.0 + 1.0 / std::pow(2.0, theta_);
    alpha_ = 1.0 / (1.0 - theta_);
    eta_ = (1.0 - std::pow(2.0 / double(n_), 1.0 - theta_)) / (1.0 - zeta2 / zetan_);
  }
  std::optional<Request> next(Time) override {
    double u = unit_(rng_), uz = u * zetan_;
    std::uint64_t k;
    if (uz < 1.0) k = 0;
    else if (uz < 1.0 + std::pow(0.5, theta_)) k = 1;
    else k = std::min<std::uint64_t>(n_ - 1, std::uint64_t(double(n_) * std::pow(eta_ * u - eta_ + 1.0, alpha_)));
    std::uint64_t x = scatter_.encrypt(k);
    return Request{unflatten(std::uint32_t(x / g_.rows_per_rank()), x % g_.rows_per_rank(), g_)};
  }
  std::string name() const override { return "zipfian"; }

 private:
  Geometry g_;
  std::uint64_t n_;
  double theta_, zetan_ = 0, alpha_ = 0, eta_ = 0;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  LlbcCipher scatter_;
};

// Benign streaming: every row of the channel in order, banks interleaved
// across ranks and bank groups.
class SequentialStream final : public Workload {
 public:
  explicit SequentialStream(const Geometry& g) : g_(g) {}
  std::optional<Request> next(Time) override {
    std::uint64_t k = i_ % g_.total_banks();
    std::uint32_t rank = std::uint32_t(k % g_.ranks);
    std::uint32_t bank = interleaved_bank(std::uint32_t(k / g_.ranks), g_);
    std::uint32_t row = std::uint32_t((i_ / g_.total_banks()) % g_.rows_per_bank);
    ++i_;
    return Request{bank_row(rank * g_.banks_per_rank() + bank, row, g_)};
  }
  std::string name() const override { return "sequential"; }

 private:
  Geometry g_;
  std::uint64_t i_ = 0;
};

// Every row of one rank, consecutive ACTs in different banks.
class StreamingAttack final : public Workload {
 public:
  StreamingAttack(const Geometry& g, std::uint32_t rank = 0) : g_(g), rank_(rank) {}
  std::optional<Request> next(Time) override {
    std::uint32_t nb = g_.banks_per_rank();
    std::uint32_t bank = interleaved_bank(std::uint32_t(i_ % nb), g_);
    std::uint32_t row = std::uint32_t((i_ / nb) % g_.rows_per_bank);
    ++i_;
    return Request{bank_row(rank_ * nb + bank, row, g_)};
  }
  std::string name() const override { return "streaming"; }

 private:
  Geometry g_;
  std::uint32_t rank_;
  std::uint64_t i_ = 0;
};

// Round-robin over a fixed list of rows, in list order.
class RowRotation : public Workload {
 public:
  RowRotation(std::vector<RowAddress> rows, std::string name) : rows_(std::move(rows)), name_(std::move(name)) {}
  std::optional<Request> next(Time) override {
    if (rows_.empty()) return std::nullopt;
    const RowAddress& a = rows_[i_ % rows_.size()];
    ++i_;
    return Request{a};
  }
  std::string name() const override { return name_; }
  const std::vector<RowAddress>& rows() const { return rows_; }

 private:
  std::vector<RowAddress> rows_;
  std::string name_;
  std::uint64_t i_ = 0;
};

// Picks `count` distinct rows of one bank.
inline std::vector<std::uint32_t> pick_rows(std::uint32_t rows_per_bank, std::uint32_t count, std::mt19937_64& rng) {
  count = std::min(count, rows_per_bank);
  std::vector<std::uint32_t> out;
  std::uniform_int_distribution<std::uint32_t> d(0, rows_per_bank - 1);
  while (out.size() < count) {
    std::uint32_t r = d(rng);
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  return out;
}

// `rows_per_bank` fixed rows in every bank of one rank, hammered at the
// highest legal rate.
inline std::unique_ptr<RowRotation> refresh_attack(const Geometry& g, std::uint32_t rows_per_bank,
                                                   std::uint64_t seed, std::uint32_t rank = 0) {
  auto rng = make_rng(seed, Stream::Workload, 0xa7);
  std::uint32_t nb = g.banks_per_rank();
  std::vector<std::vector<std::uint32_t>> per_bank(nb);
  for (std::uint32_t b = 0; b < nb; ++b) per_bank[b] = pick_rows(g.rows_per_bank, rows_per_bank, rng);
  std::vector<RowAddress> rows;
  for (std::uint32_t j = 0; j < rows_per_bank && j < g.rows_per_bank; ++j)
    for (std::uint32_t i = 0; i < nb; ++i) {
      std::uint32_t b = interleaved_bank(i, g);
      rows.push_back(bank_row(rank * nb + b, per_bank[b][j], g));
    }
  return std::make_unique<RowRotation>(std::move(rows), "refresh-attack");
}

// `count` rows that all index one RCC set (set = flat mod sets), spread
// over the banks of one rank and over distinct counter groups.
inline std::unique_ptr<RowRotation> hydra_set_conflict(const Geometry& g, std::uint32_t count, std::uint32_t sets,
                                                       std::uint32_t group_rows, std::uint64_t seed,
                                                       std::uint32_t rank = 0) {
  if (sets == 0 || g.rows_per_bank % sets != 0)
    throw std::invalid_argument("RCC set count must divide rows_per_bank");
  auto rng = make_rng(seed, Stream::Workload, 0x4d);
  std::uint32_t set = std::uniform_int_distribution<std::uint32_t>(0, sets - 1)(rng);
  std::uint32_t nb = g.banks_per_rank();
  std::uint32_t step = std::max(sets, group_rows);
  std::uint32_t per_bank = (count + nb - 1) / nb;
  if (std::uint64_t(per_bank) * step > g.rows_per_bank)
    throw std::invalid_argument("too many set-conflict rows for this geometry");
  std::vector<RowAddress> rows;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t b = interleaved_bank(i % nb, g);
    std::uint32_t j = i / nb;
    rows.push_back(bank_row(rank * nb + b, set + j * step, g));
  }
  return std::make_unique<RowRotation>(std::move(rows), "hydra-set-conflict");
}

// `count` distinct rows of one bank, rotated.
inline std::unique_ptr<RowRotation> comet_rat_thrash(const Geometry& g, std::uint32_t count, std::uint64_t seed,
                                                     std::uint32_t rank = 0, std::uint32_t bank = 0) {
  auto rng = make_rng(seed, Stream::Workload, 0xc0);
  std::vector<RowAddress> rows;
  for (std::uint32_t r : pick_rows(g.rows_per_bank, count, rng))
    rows.push_back(bank_row(rank * g.banks_per_rank() + bank, r, g));
  return std::make_unique<RowRotation>(std::move(rows), "comet-rat-thrash");
}

// A new row id on every activation, banks interleaved.
class AbacusSpill final : public Workload {
 public:
  AbacusSpill(const Geometry& g, std::uint32_t rank = 0) : g_(g), rank_(rank) {}
  std::optional<Request> next(Time) override {
    std::uint32_t nb = g_.banks_per_rank();
    std::uint32_t bank = interleaved_bank(std::uint32_t(i_ % nb), g_);
    std::uint32_t row = std::uint32_t(i_ % g_.rows_per_bank);
    ++i_;
    return Request{bank_row(rank_ * nb + bank, row, g_)};
  }
  std::string name() const override { return "abacus-spill"; }

 private:
  Geometry g_;
  std::uint32_t rank_;
  std::uint64_t i_ = 0;
};

// Replays "t_ns rank bankgroup bank row" lines; t_ns is a not-before time.
class TraceWorkload final : public Workload {
 public:
  TraceWorkload(std::istream& in, const Geometry& g) { load(in, g); }
  TraceWorkload(const std::string& path, const Geometry& g) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read trace '" + path + "'");
    load(in, g);
  }
  std::optional<Request> next(Time) override {
    if (i_ >= reqs_.size()) return std::nullopt;
    return reqs_[i_++];
  }
  std::string name() const override { return "trace"; }
  std::size_t size() const { return reqs_.size(); }

 private:
  void load(std::istream& in, const Geometry& g) {
    std::string line;
    std::size_t n = 0;
    Time last = 0;
    while (std::getline(in, line)) {
      ++n;
      if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
      std::istringstream ss(line);
      double t;
      Request r;
      if (!(ss >> t)) continue;
      if (!(ss >> r.addr.rank >> r.addr.bankgroup >> r.addr.bank >> r.addr.row))
        throw std::runtime_error("trace line " + std::to_string(n) + ": expected 't_ns rank bankgroup bank row'");
      check_bounds(r.addr, g);
      r.not_before = from_ns(t);
      if (r.not_before < last) throw std::runtime_error("trace line " + std::to_string(n) + ": not sorted by time");
      last = r.not_before;
      reqs_.push_back(r);
    }
  }
  std::vector<Request> reqs_;
  std::size_t i_ = 0;
};

// Alternates the primary stream with a benign co-runner; ends with the primary.
class Interleave final : public Workload {
 public:
  Interleave(std::unique_ptr<Workload> primary, std::unique_ptr<Workload> corunner)
      : a_(std::move(primary)), b_(std::move(corunner)) {}
  std::optional<Request> next(Time now) override {
    bool use_b = b_ && turn_b_;
    turn_b_ = !turn_b_;
    if (use_b) {
      last_b_ = true;
      return b_->next(now);
    }
    last_b_ = false;
    return a_->next(now);
  }
  void observe(const Request& r, const ActResult& res) override {
    (last_b_ ? *b_ : *a_).observe(r, res);
  }
  std::string name() const override { return b_ ? a_->name() + "+" + b_->name() : a_->name(); }
  void collect_stats(StatMap& s) const override { a_->collect_stats(s); }
  Workload& primary() { return *a_; }

 private:
  std::unique_ptr<Workload> a_, b_;
  bool turn_b_ = false, last_b_ = false;
};

// Writes `n` requests of a generator in the trace format.
inline void dump_trace(Workload& w, std::uint64_t n, std::ostream& os) {
  for (std::uint64_t i = 0; i < n; ++i) {
    auto r = w.next(0);
    if (!r) break;
    os << format_ns(r->not_before) << ' ' << r->addr.rank << ' ' << r->addr.bankgroup << ' ' << r->addr.bank
       << ' ' << r->addr.row << '\n';
  }
}

}  // namespace dapper

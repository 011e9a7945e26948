#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dapper/geometry.hpp"
#include "dapper/ground_truth.hpp"

namespace dapper {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TrackerKind : std::uint8_t { Null, Para, Hydra, Comet, Abacus, DapperS, DapperH };

enum class WorkloadKind : std::uint8_t {
  None,
  UniformRandom,
  Zipfian,
  SequentialStream,
  RefreshAttack,
  StreamingAttack,
  HydraSetConflict,
  CometRatThrash,
  AbacusSpill,
  CaptureS,
  CaptureH,
  Trace,
};

enum class MitigationCommand : std::uint8_t { Vrr, DrfmSb };

namespace detail {
template <class E>
struct NameTable;

template <>
struct NameTable<TrackerKind> {
  static constexpr std::array<std::pair<std::string_view, TrackerKind>, 7> v{{
      {"null", TrackerKind::Null},
      {"para", TrackerKind::Para},
      {"hydra", TrackerKind::Hydra},
      {"comet", TrackerKind::Comet},
      {"abacus", TrackerKind::Abacus},
      {"dapper-s", TrackerKind::DapperS},
      {"dapper-h", TrackerKind::DapperH},
  }};
};

template <>
struct NameTable<WorkloadKind> {
  static constexpr std::array<std::pair<std::string_view, WorkloadKind>, 12> v{{
      {"none", WorkloadKind::None},
      {"uniform", WorkloadKind::UniformRandom},
      {"zipfian", WorkloadKind::Zipfian},
      {"sequential", WorkloadKind::SequentialStream},
      {"refresh-attack", WorkloadKind::RefreshAttack},
      {"streaming", WorkloadKind::StreamingAttack},
      {"hydra-set-conflict", WorkloadKind::HydraSetConflict},
      {"comet-rat-thrash", WorkloadKind::CometRatThrash},
      {"abacus-spill", WorkloadKind::AbacusSpill},
      {"capture-s", WorkloadKind::CaptureS},
      {"capture-h", WorkloadKind::CaptureH},
      {"trace", WorkloadKind::Trace},
  }};
};

template <>
struct NameTable<HammerModel> {
  static constexpr std::array<std::pair<std::string_view, HammerModel>, 2> v{{
      {"per-aggressor", HammerModel::PerAggressor},
      {"cumulative", HammerModel::Cumulative},
  }};
};

template <>
struct NameTable<MitigationCommand> {
  static constexpr std::array<std::pair<std::string_view, MitigationCommand>, 2> v{{
      {"vrr", MitigationCommand::Vrr},
      {"drfm-sb", MitigationCommand::DrfmSb},
  }};
};
}  // namespace detail

template <class E>
std::string_view to_string(E e) {
  for (auto& [n, v] : detail::NameTable<E>::v)
    if (v == e) return n;
  return "?";
}

template <class E>
E parse_enum(std::string_view s) {
  for (auto& [n, v] : detail::NameTable<E>::v)
    if (n == s) return v;
  std::string all;
  for (auto& [n, v] : detail::NameTable<E>::v) all += (all.empty() ? "" : "|") + std::string(n);
  throw ConfigError("unknown value '" + std::string(s) + "' (expected " + all + ")");
}

inline bool is_attack(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::RefreshAttack:
    case WorkloadKind::StreamingAttack:
    case WorkloadKind::HydraSetConflict:
    case WorkloadKind::CometRatThrash:
    case WorkloadKind::AbacusSpill:
    case WorkloadKind::CaptureS:
    case WorkloadKind::CaptureH:
      return true;
    default:
      return false;
  }
}

struct TrackerParams {
  std::uint32_t n_m = 0;  // 0 derives it from n_rh
  std::uint32_t group_size = 256;
  Time dapper_s_reset = 0;  // 0 means tREFW
  bool dapper_h_reset_clamp = false;
  double para_k = 20.0;
  std::uint32_t hydra_group_rows = 128;
  double hydra_gc_fraction = 0.8;
  std::uint32_t hydra_rcc_entries = 4096;
  std::uint32_t hydra_rcc_ways = 32;
  std::uint32_t comet_hashes = 4;
  std::uint32_t comet_counters = 512;
  std::uint32_t comet_rat_entries = 128;
  std::uint32_t comet_history = 256;
  double comet_miss_rate = 0.25;
  bool comet_periodic_refresh = true;
  std::uint32_t abacus_entries = 0;  // 0 uses the per-N_RH table
  bool operator==(const TrackerParams&) const = default;
};

struct WorkloadParams {
  WorkloadKind kind = WorkloadKind::StreamingAttack;
  // Benign stream round-robined with the primary one. "auto" picks uniform
  // for attacks and none for benign primaries.
  bool corunner_auto = true;
  WorkloadKind corunner = WorkloadKind::None;
  double zipf_theta = 0.99;
  std::uint32_t attack_rank = 0;
  std::uint32_t attack_bank = 0;  // bank index inside the rank
  std::uint32_t attack_rows_per_bank = 1;
  std::uint32_t attack_rows = 0;  // 0 picks the attack's default size
  std::uint64_t capture_trials = 100;
  std::string trace_path;
  bool operator==(const WorkloadParams&) const = default;
};

struct ExperimentConfig {
  Geometry geometry;
  TimingParams timing;
  std::uint32_t n_rh = 500;
  TrackerKind tracker = TrackerKind::DapperH;
  TrackerParams tp;
  WorkloadParams wp;
  std::uint64_t seed = 1;
  std::uint32_t duration_windows = 1;
  std::uint64_t activations = 0;  // > 0 bounds the run by count instead of time
  std::string output;
  HammerModel hammer_model = HammerModel::PerAggressor;
  MitigationCommand mitigation = MitigationCommand::Vrr;
  bool drfm_rate_limit = false;
  bool auto_refresh = true;
  std::string command_log;

  bool operator==(const ExperimentConfig&) const = default;

  WorkloadKind corunner() const {
    if (!wp.corunner_auto) return wp.corunner;
    // Capture agents time their own probes, so they run alone.
    bool capture = wp.kind == WorkloadKind::CaptureS || wp.kind == WorkloadKind::CaptureH;
    return is_attack(wp.kind) && !capture ? WorkloadKind::UniformRandom : WorkloadKind::None;
  }

  void validate() const {
    try {
      geometry.validate();
      timing.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (n_rh < 4) throw ConfigError("n_rh must be >= 4");
    if (n_rh > 65535) throw ConfigError("n_rh must be <= 65535");
    if (tp.group_size == 0 || !std::has_single_bit(tp.group_size) ||
        tp.group_size > geometry.rows_per_rank())
      throw ConfigError("group_size must be a power of two no larger than rows_per_rank");
    if (tp.dapper_s_reset < 0) throw ConfigError("dapper_s_reset_ns must be >= 0");
    if (!(tp.para_k > 0)) throw ConfigError("para_k must be positive");
    if (wp.attack_rank >= geometry.ranks) throw ConfigError("attack_rank outside geometry");
    if (wp.attack_bank >= geometry.banks_per_rank()) throw ConfigError("attack_bank outside geometry");
    if (activations == 0 && duration_windows == 0)
      throw ConfigError("windows must be >= 1 unless activations is set");
    if (wp.kind == WorkloadKind::Trace && wp.trace_path.empty())
      throw ConfigError("workload = trace needs trace_path");
  }
};

// Safety margin subtracted from floor(n_rh / 2) when n_m is derived. Both
// trackers skip one activation per bit-vector restart, so an aggressor
// straddling a window boundary reaches 2 * n_m (ABACUS) or 2 * n_m + 1
// (DAPPER-H) before being refreshed.
inline std::uint32_t n_m_margin(TrackerKind k) {
  switch (k) {
    case TrackerKind::DapperH: return 2;
    case TrackerKind::Abacus: return 1;
    default: return 0;
  }
}

inline std::uint32_t effective_n_m(const ExperimentConfig& c) {
  if (c.tp.n_m) return c.tp.n_m;
  std::uint32_t half = c.n_rh / 2, m = n_m_margin(c.tracker);
  return half > m ? half - m : 1;
}

inline Time effective_dapper_s_reset(const ExperimentConfig& c) {
  return c.tp.dapper_s_reset ? c.tp.dapper_s_reset : c.timing.t_refw;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_int(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("malformed integer '" + std::string(s) + "'");
  return v;
}

inline double parse_double(std::string_view s) {
  double v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("malformed number '" + std::string(s) + "'");
  return v;
}

inline bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw ConfigError("malformed boolean '" + std::string(s) + "'");
}

inline std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

struct Key {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Key uint_key(T ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, std::string_view v) { c.*m = parse_int<T>(v); },
          [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

template <class S, class T>
Key nested_uint(S ExperimentConfig::*s, T S::*m) {
  return {[s, m](ExperimentConfig& c, std::string_view v) { c.*s.*m = parse_int<T>(v); },
          [s, m](const ExperimentConfig& c) { return std::to_string(c.*s.*m); }};
}

template <class S>
Key nested_time(S ExperimentConfig::*s, Time S::*m) {
  return {[s, m](ExperimentConfig& c, std::string_view v) {
            double ns = parse_double(v);
            if (ns < 0) throw ConfigError("time must be >= 0");
            c.*s.*m = from_ns(ns);
          },
          [s, m](const ExperimentConfig& c) { return fmt_double(to_ns(c.*s.*m)); }};
}

template <class S>
Key nested_double(S ExperimentConfig::*s, double S::*m) {
  return {[s, m](ExperimentConfig& c, std::string_view v) { c.*s.*m = parse_double(v); },
          [s, m](const ExperimentConfig& c) { return fmt_double(c.*s.*m); }};
}

template <class S>
Key nested_bool(S ExperimentConfig::*s, bool S::*m) {
  return {[s, m](ExperimentConfig& c, std::string_view v) { c.*s.*m = parse_bool(v); },
          [s, m](const ExperimentConfig& c) { return std::string(c.*s.*m ? "true" : "false"); }};
}

template <class S, class E>
Key nested_enum(S ExperimentConfig::*s, E S::*m) {
  return {[s, m](ExperimentConfig& c, std::string_view v) { c.*s.*m = parse_enum<E>(v); },
          [s, m](const ExperimentConfig& c) { return std::string(to_string(c.*s.*m)); }};
}

template <class S>
Key nested_string(S ExperimentConfig::*s, std::string S::*m) {
  return {[s, m](ExperimentConfig& c, std::string_view v) { c.*s.*m = std::string(v); },
          [s, m](const ExperimentConfig& c) { return c.*s.*m; }};
}

// Ordered so serialization is stable.
inline const std::vector<std::pair<std::string, Key>>& keys() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Key>> k = {
      {"n_rh", uint_key(&C::n_rh)},
      {"tracker",
       {[](C& c, std::string_view v) { c.tracker = parse_enum<TrackerKind>(v); },
        [](const C& c) { return std::string(to_string(c.tracker)); }}},
      {"workload", nested_enum(&C::wp, &WorkloadParams::kind)},
      {"corunner",
       {[](C& c, std::string_view v) {
          if (v == "auto") {
            c.wp.corunner_auto = true;
            c.wp.corunner = WorkloadKind::None;
            return;
          }
          WorkloadKind w = parse_enum<WorkloadKind>(v);
          if (w != WorkloadKind::None && is_attack(w))
            throw ConfigError("corunner must be a benign workload");
          if (w == WorkloadKind::Trace) throw ConfigError("corunner cannot be a trace");
          c.wp.corunner_auto = false;
          c.wp.corunner = w;
        },
        [](const C& c) {
          return c.wp.corunner_auto ? std::string("auto") : std::string(to_string(c.wp.corunner));
        }}},
      {"seed", uint_key(&C::seed)},
      {"windows", uint_key(&C::duration_windows)},
      {"activations", uint_key(&C::activations)},
      {"output",
       {[](C& c, std::string_view v) { c.output = std::string(v); }, [](const C& c) { return c.output; }}},
      {"command_log",
       {[](C& c, std::string_view v) { c.command_log = std::string(v); },
        [](const C& c) { return c.command_log; }}},
      {"hammer_model",
       {[](C& c, std::string_view v) { c.hammer_model = parse_enum<HammerModel>(v); },
        [](const C& c) { return std::string(to_string(c.hammer_model)); }}},
      {"mitigation_cmd",
       {[](C& c, std::string_view v) { c.mitigation = parse_enum<MitigationCommand>(v); },
        [](const C& c) { return std::string(to_string(c.mitigation)); }}},
      {"drfm_rate_limit",
       {[](C& c, std::string_view v) { c.drfm_rate_limit = parse_bool(v); },
        [](const C& c) { return std::string(c.drfm_rate_limit ? "true" : "false"); }}},
      {"auto_refresh",
       {[](C& c, std::string_view v) { c.auto_refresh = parse_bool(v); },
        [](const C& c) { return std::string(c.auto_refresh ? "true" : "false"); }}},

      {"ranks", nested_uint(&C::geometry, &Geometry::ranks)},
      {"bankgroups", nested_uint(&C::geometry, &Geometry::bankgroups)},
      {"banks_per_group", nested_uint(&C::geometry, &Geometry::banks_per_group)},
      {"rows_per_bank", nested_uint(&C::geometry, &Geometry::rows_per_bank)},

      {"t_rc_ns", nested_time(&C::timing, &TimingParams::t_rc)},
      {"t_rrd_s_ns", nested_time(&C::timing, &TimingParams::t_rrd_s)},
      {"t_refw_ns", nested_time(&C::timing, &TimingParams::t_refw)},
      {"t_refi_ns", nested_time(&C::timing, &TimingParams::t_refi)},
      {"t_rfc_ns", nested_time(&C::timing, &TimingParams::t_rfc)},
      {"refs_per_window", nested_uint(&C::timing, &TimingParams::refs_per_window)},
      {"vrr_per_victim_ns", nested_time(&C::timing, &TimingParams::vrr_per_victim)},
      {"drfm_sb_ns", nested_time(&C::timing, &TimingParams::drfm_sb)},
      {"rfm_sb_ns", nested_time(&C::timing, &TimingParams::rfm_sb)},
      {"counter_access_ns", nested_time(&C::timing, &TimingParams::counter_access)},
      {"reset_cost_scale", nested_double(&C::timing, &TimingParams::reset_cost_scale)},
      {"blast_radius", nested_uint(&C::timing, &TimingParams::blast_radius)},

      {"n_m", nested_uint(&C::tp, &TrackerParams::n_m)},
      {"group_size", nested_uint(&C::tp, &TrackerParams::group_size)},
      {"dapper_s_reset_ns", nested_time(&C::tp, &TrackerParams::dapper_s_reset)},
      {"dapper_h_reset_clamp", nested_bool(&C::tp, &TrackerParams::dapper_h_reset_clamp)},
      {"para_k", nested_double(&C::tp, &TrackerParams::para_k)},
      {"hydra_group_rows", nested_uint(&C::tp, &TrackerParams::hydra_group_rows)},
      {"hydra_gc_fraction", nested_double(&C::tp, &TrackerParams::hydra_gc_fraction)},
      {"hydra_rcc_entries", nested_uint(&C::tp, &TrackerParams::hydra_rcc_entries)},
      {"hydra_rcc_ways", nested_uint(&C::tp, &TrackerParams::hydra_rcc_ways)},
      {"comet_hashes", nested_uint(&C::tp, &TrackerParams::comet_hashes)},
      {"comet_counters", nested_uint(&C::tp, &TrackerParams::comet_counters)},
      {"comet_rat_entries", nested_uint(&C::tp, &TrackerParams::comet_rat_entries)},
      {"comet_history", nested_uint(&C::tp, &TrackerParams::comet_history)},
      {"comet_miss_rate", nested_double(&C::tp, &TrackerParams::comet_miss_rate)},
      {"comet_periodic_refresh", nested_bool(&C::tp, &TrackerParams::comet_periodic_refresh)},
      {"abacus_entries", nested_uint(&C::tp, &TrackerParams::abacus_entries)},

      {"zipf_theta", nested_double(&C::wp, &WorkloadParams::zipf_theta)},
      {"attack_rank", nested_uint(&C::wp, &WorkloadParams::attack_rank)},
      {"attack_bank", nested_uint(&C::wp, &WorkloadParams::attack_bank)},
      {"attack_rows_per_bank", nested_uint(&C::wp, &WorkloadParams::attack_rows_per_bank)},
      {"attack_rows", nested_uint(&C::wp, &WorkloadParams::attack_rows)},
      {"capture_trials", nested_uint(&C::wp, &WorkloadParams::capture_trials)},
      {"trace_path", nested_string(&C::wp, &WorkloadParams::trace_path)},
  };
  return k;
}

inline const Key* find_key(std::string_view name) {
  for (auto& [n, k] : keys())
    if (n == name) return &k;
  return nullptr;
}

}  // namespace detail

// Sets one key; throws ConfigError for unknown keys or bad values.
inline void set_config_key(ExperimentConfig& c, std::string_view key, std::string_view value) {
  const detail::Key* k = detail::find_key(key);
  if (!k) throw ConfigError("unknown key '" + std::string(key) + "'");
  k->set(c, detail::trim(value));
}

inline std::string get_config_key(const ExperimentConfig& c, std::string_view key) {
  const detail::Key* k = detail::find_key(key);
  if (!k) throw ConfigError("unknown key '" + std::string(key) + "'");
  return k->get(c);
}

// Applies "key = value" lines on top of `base`. Errors name the line.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {},
                                     std::string_view source = "<config>") {
  std::size_t lineno = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto where = [&] { return std::string(source) + ":" + std::to_string(lineno) + ": "; };
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected 'key = value'");
    try {
      set_config_key(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what());
    }
  }
  base.validate();
  return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base), path);
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  for (auto& [n, k] : detail::keys()) out += n + " = " + k.get(c) + "\n";
  return out;
}

// FNV-1a over the serialized form; names output files.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : serialize_config(c)) {
    h ^= std::uint8_t(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  static const char* d = "0123456789abcdef";
  for (int i = 15; i >= 0; --i, v >>= 4) buf[i] = d[v & 15];
  buf[16] = 0;
  return buf;
}

// Scaled-down parameters for fast property runs.
inline void apply_preset(ExperimentConfig& c, std::string_view name) {
  if (name == "full" || name.empty()) return;
  if (name != "desk") throw ConfigError("unknown preset '" + std::string(name) + "'");
  c.geometry = Geometry{1, 2, 1, 4096};
  c.n_rh = 64;
  c.timing.t_refw = from_ns(1'000'000);
  c.timing.refs_per_window = 256;
  c.tp.hydra_rcc_entries = 512;
}

}  // namespace dapper

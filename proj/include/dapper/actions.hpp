#pragma once

#include <array>
#include <concepts>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dapper/geometry.hpp"

namespace dapper {

enum class ActionKind : std::uint8_t {
  VictimRefresh,  // refresh +-BR neighbors of `target`; blocks its bank
  DrfmSb,         // directed refresh, same bank number in every bank group
  RfmSb,          // refresh management, same scope as DrfmSb, no targeted rows
  RankReset,      // refresh every row of target.rank
  ChannelReset,   // refresh every row in the channel
  CounterRead,    // counter fetch from DRAM on target's bank
  CounterWrite,   // counter write-back on target's bank
};

inline constexpr std::size_t kActionKinds = 7;

inline constexpr std::array<std::string_view, kActionKinds> kActionNames = {
    "victim_refresh", "drfm_sb", "rfm_sb", "rank_reset", "channel_reset", "counter_read",
    "counter_write"};

inline std::string_view action_name(ActionKind k) { return kActionNames[std::size_t(k)]; }

struct MitigationAction {
  ActionKind kind = ActionKind::VictimRefresh;
  RowAddress target;

  bool operator==(const MitigationAction&) const = default;
};

using ActionList = std::vector<MitigationAction>;

// Tracker-specific counters surfaced in reports, sorted by name.
using StatMap = std::map<std::string, double>;

// Every tracker is driven by the engine through this surface. `activate` may
// append actions; `on_window` is delivered at each tREFW boundary.
template <class T>
concept Tracker = requires(T t, const T ct, const RowAddress& a, Time now, ActionList& out,
                           std::uint64_t w, StatMap& stats) {
  t.activate(a, now, out);
  t.on_window(w, now);
  { ct.name() } -> std::convertible_to<std::string_view>;
  ct.collect_stats(stats);
};

class NullTracker {
 public:
  void activate(const RowAddress&, Time, ActionList&) {}
  void on_window(std::uint64_t, Time) {}
  std::string_view name() const { return "null"; }
  void collect_stats(StatMap&) const {}
};

}  // namespace dapper

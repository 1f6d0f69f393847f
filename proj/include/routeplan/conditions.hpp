#ifndef ROUTEPLAN_CONDITIONS_HPP_
#define ROUTEPLAN_CONDITIONS_HPP_

#include <algorithm>
#include <array>
#include <bitset>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "routeplan/civil_time.hpp"
#include "routeplan/error.hpp"
#include "routeplan/network.hpp"

namespace routeplan {

using RuleId = std::int64_t;

/// Recurring window on selected weekdays, in minutes since local midnight.
/// A window with end < start wraps past midnight and belongs to the weekday
/// it starts on.
struct WeeklySchedule {
  std::bitset<7> weekdays;  // bit 0 = Monday
  int start_minute = 0;
  int end_minute = 0;
  bool operator==(const WeeklySchedule&) const = default;
};

/// One-off window; an absent end is open-ended.
struct AbsoluteSchedule {
  CivilTime start_at{};
  std::optional<CivilTime> end_at;
  bool operator==(const AbsoluteSchedule&) const = default;
};

using Schedule = std::variant<WeeklySchedule, AbsoluteSchedule>;

enum class ConditionKind { kClosed, kOneWayForward, kOneWayReverse, kCongestion };

struct ConditionRule {
  RuleId id = 0;
  SegmentId segment_id = 0;
  ConditionKind kind = ConditionKind::kClosed;
  std::optional<double> multiplier;
  Schedule schedule;
  std::string note;
  bool operator==(const ConditionRule&) const = default;
};

struct SegmentStatus {
  bool forward_open = true;
  bool reverse_open = true;
  double cost_multiplier = 1.0;
  bool operator==(const SegmentStatus&) const = default;
};

inline constexpr std::array<std::string_view, 7> kWeekdayNames{"MON", "TUE", "WED", "THU",
                                                              "FRI", "SAT", "SUN"};

inline std::string_view to_string(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::kClosed: return "CLOSED";
    case ConditionKind::kOneWayForward: return "ONE_WAY_FORWARD";
    case ConditionKind::kOneWayReverse: return "ONE_WAY_REVERSE";
    case ConditionKind::kCongestion: return "CONGESTION";
  }
  return "?";
}

inline ConditionKind condition_kind_from_string(std::string_view s) {
  for (auto k : {ConditionKind::kClosed, ConditionKind::kOneWayForward,
                 ConditionKind::kOneWayReverse, ConditionKind::kCongestion}) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("unknown rule kind '" + std::string(s) + "'");
}

inline bool rule_active_at(const WeeklySchedule& w, CivilTime t) {
  const int day = weekday_index(t);
  const int minute = minute_of_day(t);
  if (w.start_minute < w.end_minute) {
    return w.weekdays.test(day) && minute >= w.start_minute && minute < w.end_minute;
  }
  // Wrapping window: the tail after midnight belongs to the previous day.
  const int previous = (day + 6) % 7;
  return (w.weekdays.test(day) && minute >= w.start_minute) ||
         (w.weekdays.test(previous) && minute < w.end_minute);
}

inline bool rule_active_at(const AbsoluteSchedule& a, CivilTime t) {
  return a.start_at <= t && (!a.end_at || t < *a.end_at);
}

inline bool rule_active_at(const Schedule& schedule, CivilTime t) {
  return std::visit([t](const auto& s) { return rule_active_at(s, t); }, schedule);
}

inline bool rule_active_at(const ConditionRule& rule, CivilTime t) {
  return rule_active_at(rule.schedule, t);
}

/// Combines the rules active at `t` for one segment: any closure closes both
/// directions, one-way kinds close the opposite direction, congestion takes
/// the maximum multiplier.
inline SegmentStatus resolve_segment_status(std::span<const ConditionRule> rules,
                                            CivilTime t) {
  SegmentStatus status;
  for (const ConditionRule& r : rules) {
    if (r.segment_id != rules.front().segment_id) {
      throw MixedSegments("rules for segments " + std::to_string(rules.front().segment_id) +
                          " and " + std::to_string(r.segment_id) + " resolved together");
    }
  }
  bool closed = false;
  for (const ConditionRule& r : rules) {
    if (!rule_active_at(r, t)) continue;
    switch (r.kind) {
      case ConditionKind::kClosed: closed = true; break;
      case ConditionKind::kOneWayForward: status.reverse_open = false; break;
      case ConditionKind::kOneWayReverse: status.forward_open = false; break;
      case ConditionKind::kCongestion:
        status.cost_multiplier = std::max(status.cost_multiplier, r.multiplier.value_or(1.0));
        break;
    }
  }
  if (closed) status.forward_open = status.reverse_open = false;
  return status;
}

/// Checks rule invariants and that the segment exists in `network`.
inline void validate_rule(const ConditionRule& rule, const RoadNetwork& network) {
  if (rule.id <= 0) throw ValidationError("rule id must be positive");
  if (rule.kind == ConditionKind::kCongestion) {
    if (!rule.multiplier) throw ValidationError("multiplier required");
    if (!std::isfinite(*rule.multiplier) || *rule.multiplier <= 1.0) {
      throw ValidationError("multiplier must be finite and > 1");
    }
  } else if (rule.multiplier) {
    throw ValidationError("multiplier only allowed for CONGESTION");
  }
  if (const auto* w = std::get_if<WeeklySchedule>(&rule.schedule)) {
    if (w->weekdays.none()) throw ValidationError("weekdays must be nonempty");
    auto in_day = [](int m) { return m >= 0 && m <= kMinutesPerDay; };
    if (!in_day(w->start_minute) || !in_day(w->end_minute)) {
      throw ValidationError("start_minute and end_minute must lie in 0..1440");
    }
    if (w->start_minute == w->end_minute) {
      throw ValidationError("start_minute must differ from end_minute");
    }
  } else {
    const auto& a = std::get<AbsoluteSchedule>(rule.schedule);
    if (a.end_at && *a.end_at <= a.start_at) {
      throw ValidationError("end_at must be after start_at");
    }
  }
  if (network.find_segment(rule.segment_id) == nullptr) {
    throw ValidationError("unknown segment " + std::to_string(rule.segment_id));
  }
}

// JSON rule documents.

inline nlohmann::json to_json(const Schedule& schedule) {
  if (const auto* w = std::get_if<WeeklySchedule>(&schedule)) {
    nlohmann::json days = nlohmann::json::array();
    for (int d = 0; d < 7; ++d) {
      if (w->weekdays.test(d)) days.push_back(kWeekdayNames[d]);
    }
    return {{"kind", "WEEKLY"},
            {"weekdays", std::move(days)},
            {"start_minute", w->start_minute},
            {"end_minute", w->end_minute}};
  }
  const auto& a = std::get<AbsoluteSchedule>(schedule);
  nlohmann::json j{{"kind", "ABSOLUTE"}, {"start_at", format_iso(a.start_at)}};
  if (a.end_at) j["end_at"] = format_iso(*a.end_at);
  return j;
}

inline nlohmann::json to_json(const ConditionRule& rule) {
  nlohmann::json j{{"id", rule.id},
                   {"segment_id", rule.segment_id},
                   {"kind", to_string(rule.kind)},
                   {"schedule", to_json(rule.schedule)}};
  if (rule.multiplier) j["multiplier"] = *rule.multiplier;
  if (!rule.note.empty()) j["note"] = rule.note;
  return j;
}

inline Schedule schedule_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("schedule must be an object");
  const auto kind = detail::get_as<std::string>(detail::require(j, "kind", "schedule"), "schedule kind");
  if (kind == "WEEKLY") {
    detail::reject_unknown_keys(j, {"kind", "weekdays", "start_minute", "end_minute"}, "schedule");
    WeeklySchedule w;
    const auto& days = detail::require(j, "weekdays", "schedule");
    if (!days.is_array()) throw ParseError("schedule: weekdays must be an array");
    for (const auto& d : days) {
      const auto name = detail::get_as<std::string>(d, "weekday");
      auto it = std::find(kWeekdayNames.begin(), kWeekdayNames.end(), name);
      if (it == kWeekdayNames.end()) throw ParseError("unknown weekday '" + name + "'");
      w.weekdays.set(static_cast<size_t>(it - kWeekdayNames.begin()));
    }
    w.start_minute = detail::get_as<int>(detail::require(j, "start_minute", "schedule"), "start_minute");
    w.end_minute = detail::get_as<int>(detail::require(j, "end_minute", "schedule"), "end_minute");
    return w;
  }
  if (kind == "ABSOLUTE") {
    detail::reject_unknown_keys(j, {"kind", "start_at", "end_at"}, "schedule");
    AbsoluteSchedule a;
    a.start_at = parse_iso(detail::get_as<std::string>(detail::require(j, "start_at", "schedule"), "start_at"));
    if (auto it = j.find("end_at"); it != j.end() && !it->is_null()) {
      a.end_at = parse_iso(detail::get_as<std::string>(*it, "end_at"));
    }
    return a;
  }
  throw ParseError("unknown schedule kind '" + kind + "'");
}

inline ConditionRule rule_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("rule document must be a JSON object");
  detail::reject_unknown_keys(j, {"id", "segment_id", "kind", "multiplier", "schedule", "note"},
                              "rule");
  ConditionRule r;
  r.id = detail::get_as<RuleId>(detail::require(j, "id", "rule"), "rule id");
  r.segment_id = detail::get_as<SegmentId>(detail::require(j, "segment_id", "rule"), "segment_id");
  r.kind = condition_kind_from_string(
      detail::get_as<std::string>(detail::require(j, "kind", "rule"), "rule kind"));
  if (auto it = j.find("multiplier"); it != j.end() && !it->is_null()) {
    r.multiplier = detail::get_as<double>(*it, "multiplier");
  }
  r.schedule = schedule_from_json(detail::require(j, "schedule", "rule"));
  if (auto it = j.find("note"); it != j.end() && !it->is_null()) {
    r.note = detail::get_as<std::string>(*it, "note");
  }
  return r;
}

inline ConditionRule parse_rule(std::string_view document) {
  return rule_from_json(detail::parse_json(document));
}

/// Rules file: a JSON array of rule documents.
inline std::vector<ConditionRule> parse_rules(std::string_view document) {
  const auto j = detail::parse_json(document);
  if (!j.is_array()) throw ParseError("rules file must be a JSON array");
  std::vector<ConditionRule> rules;
  for (const auto& r : j) rules.push_back(rule_from_json(r));
  return rules;
}

inline std::string serialize_rules(std::span<const ConditionRule> rules) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rules) arr.push_back(to_json(r));
  return arr.dump(2);
}

}  // namespace routeplan

#endif  // ROUTEPLAN_CONDITIONS_HPP_

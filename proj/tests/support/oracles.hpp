// Test-only generators and brute-force oracles. Nothing here calls into the
// routing or schedule code it is used to check.
#ifndef ROUTEPLAN_TESTS_SUPPORT_ORACLES_HPP_
#define ROUTEPLAN_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "routeplan/conditions.hpp"
#include "routeplan/network.hpp"
#include "routeplan/routing.hpp"

namespace routeplan::testing {

struct OracleArc {
  SegmentId segment;
  VertexId tail;
  VertexId head;
  double cost;
};

struct OracleBest {
  double cost = 0.0;
  std::vector<SegmentId> segments;
};

/// Exhaustive DFS over all simple paths. Ties within `rel_tol` of the best
/// cost resolve to the lexicographically smallest segment sequence.
inline std::optional<OracleBest> brute_force_best(const std::vector<OracleArc>& arcs,
                                                  VertexId source, VertexId target,
                                                  double rel_tol = 1e-12) {
  if (source == target) return OracleBest{0.0, {}};
  std::vector<std::pair<double, std::vector<SegmentId>>> complete;
  std::vector<VertexId> on_path{source};
  std::vector<SegmentId> segs;
  auto dfs = [&](auto&& self, VertexId at, double cost) -> void {
    for (const OracleArc& a : arcs) {
      if (a.tail != at) continue;
      if (std::find(on_path.begin(), on_path.end(), a.head) != on_path.end()) continue;
      segs.push_back(a.segment);
      if (a.head == target) {
        complete.emplace_back(cost + a.cost, segs);
      } else {
        on_path.push_back(a.head);
        self(self, a.head, cost + a.cost);
        on_path.pop_back();
      }
      segs.pop_back();
    }
  };
  dfs(dfs, source, 0.0);
  if (complete.empty()) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [c, _] : complete) best = std::min(best, c);
  std::optional<OracleBest> out;
  for (const auto& [c, s] : complete) {
    if (c <= best * (1.0 + rel_tol) && (!out || s < out->segments)) out = OracleBest{c, s};
  }
  return out;
}

inline std::vector<OracleArc> oracle_arcs(const GraphSnapshot& snapshot) {
  std::vector<OracleArc> out;
  for (const Arc& a : snapshot.arcs()) out.push_back({a.segment_id, a.tail, a.head, a.cost});
  return out;
}

/// Minute-level activity of a weekly window over one week starting Monday
/// 00:00, built by marking each window's duration from its start day.
inline std::vector<bool> weekly_activity(const WeeklySchedule& w) {
  std::vector<bool> active(kMinutesPerWeek, false);
  const int duration = w.end_minute > w.start_minute
                           ? w.end_minute - w.start_minute
                           : kMinutesPerDay - w.start_minute + w.end_minute;
  for (int day = 0; day < 7; ++day) {
    if (!w.weekdays.test(day)) continue;
    for (int k = 0; k < duration; ++k) {
      active[(day * kMinutesPerDay + w.start_minute + k) % kMinutesPerWeek] = true;
    }
  }
  return active;
}

inline VertexId nearest_by_scan(const RoadNetwork& net, Point p) {
  VertexId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Vertex& v : net.vertices()) {
    const double d = std::sqrt((v.x - p.x) * (v.x - p.x) + (v.y - p.y) * (v.y - p.y));
    if (d < best_d || (d == best_d && v.id < best)) {
      best_d = d;
      best = v.id;
    }
  }
  return best;
}

struct RandomNetworkOptions {
  int min_vertices = 2;
  int max_vertices = 12;
  int max_segments = 24;
  double coordinate_range = 1000.0;
  bool integer_costs = true;
};

/// Random straight-segment network with integer coordinates. Integer base
/// costs (at least the chord length) make exact cost ties common.
inline RoadNetwork random_network(std::mt19937_64& rng, const RandomNetworkOptions& opt = {}) {
  std::uniform_int_distribution<int> nv(opt.min_vertices, opt.max_vertices);
  const int n = nv(rng);
  std::uniform_int_distribution<int> coord(0, static_cast<int>(opt.coordinate_range));
  std::vector<Vertex> vertices;
  for (int i = 1; i <= n; ++i) {
    Vertex v;
    v.id = i;
    v.x = coord(rng);
    v.y = coord(rng);
    vertices.push_back(v);
  }
  std::uniform_int_distribution<int> ns(0, opt.max_segments);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_int_distribution<int> extra(0, 300);
  const int m = ns(rng);
  std::vector<RoadSegment> segments;
  for (int i = 1; i <= m; ++i) {
    const Vertex& a = vertices[pick(rng)];
    const Vertex& b = vertices[pick(rng)];
    if (a.id == b.id || (a.x == b.x && a.y == b.y)) continue;
    RoadSegment s;
    s.id = static_cast<SegmentId>(segments.size() + 1);
    s.name = "Road " + std::to_string((i % 5) + 1);
    s.from = a.id;
    s.to = b.id;
    s.geometry = {a.coords(), b.coords()};
    const double chord = distance(a.coords(), b.coords());
    s.base_cost = opt.integer_costs ? std::ceil(chord) + extra(rng) : chord + extra(rng) * 0.37;
    segments.push_back(std::move(s));
  }
  return RoadNetwork("random", std::move(vertices), std::move(segments));
}

/// Always-active or never-active absolute rules of every kind; congestion
/// multipliers are exactly representable so costs stay exact.
inline std::vector<ConditionRule> random_rules(std::mt19937_64& rng, const RoadNetwork& net,
                                               CivilTime at, int max_rules = 8) {
  std::vector<ConditionRule> rules;
  if (net.segments().empty()) return rules;
  std::uniform_int_distribution<int> count(0, max_rules);
  std::uniform_int_distribution<size_t> seg(0, net.segments().size() - 1);
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_int_distribution<int> coin(0, 3);
  const double multipliers[] = {1.5, 2.0, 3.0, 1.25};
  std::uniform_int_distribution<int> mult(0, 3);
  const int k = count(rng);
  for (int i = 0; i < k; ++i) {
    ConditionRule r;
    r.id = i + 1;
    r.segment_id = net.segments()[seg(rng)].id;
    r.kind = static_cast<ConditionKind>(kind(rng));
    if (r.kind == ConditionKind::kCongestion) r.multiplier = multipliers[mult(rng)];
    // One in four rules starts after `at` and so is inactive.
    const bool active = coin(rng) != 0;
    r.schedule = AbsoluteSchedule{active ? at - std::chrono::hours{24} : at + std::chrono::hours{1},
                                  std::nullopt};
    rules.push_back(r);
  }
  return rules;
}

inline ConditionRule always_closed(RuleId id, SegmentId segment) {
  ConditionRule r;
  r.id = id;
  r.segment_id = segment;
  r.kind = ConditionKind::kClosed;
  r.schedule = AbsoluteSchedule{make_time(1970, 1, 1), std::nullopt};
  return r;
}

inline ConditionRule always(RuleId id, SegmentId segment, ConditionKind kind,
                            std::optional<double> multiplier = std::nullopt) {
  ConditionRule r = always_closed(id, segment);
  r.kind = kind;
  r.multiplier = multiplier;
  return r;
}

}  // namespace routeplan::testing

#endif  // ROUTEPLAN_TESTS_SUPPORT_ORACLES_HPP_

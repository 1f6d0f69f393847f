#ifndef ROUTEPLAN_ROUTING_HPP_
#define ROUTEPLAN_ROUTING_HPP_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "routeplan/civil_time.hpp"
#include "routeplan/conditions.hpp"
#include "routeplan/error.hpp"
#include "routeplan/network.hpp"

namespace routeplan {

enum class ArcDirection { kForward, kReverse };

/// How closed directions are represented in a snapshot. kStrict drops the
/// arc; kFaithful keeps it with its cost inflated by a large penalty factor.
enum class RoutingMode { kStrict, kFaithful };

inline std::string_view to_string(ArcDirection d) {
  return d == ArcDirection::kForward ? "FORWARD" : "REVERSE";
}
inline std::string_view to_string(RoutingMode m) {
  return m == RoutingMode::kStrict ? "strict" : "faithful";
}
inline RoutingMode routing_mode_from_string(std::string_view s) {
  if (s == "strict" || s == "STRICT") return RoutingMode::kStrict;
  if (s == "faithful" || s == "FAITHFUL") return RoutingMode::kFaithful;
  throw ParseError("unknown routing mode '" + std::string(s) + "'");
}

struct Arc {
  SegmentId segment_id = 0;
  VertexId tail = 0;
  VertexId head = 0;
  double cost = 0.0;
  ArcDirection direction = ArcDirection::kForward;
  bool operator==(const Arc&) const = default;
};

struct SnapshotOptions {
  RoutingMode mode = RoutingMode::kStrict;
  double penalty_factor = 1e6;
};

/// Supplies the per-segment base traversal cost before condition
/// multipliers are applied.
template <typename P>
concept CostProvider = requires(const P& provider, const RoadSegment& segment) {
  { provider(segment) } -> std::convertible_to<double>;
};

/// Distance cost model: the segment's base_cost in meters.
struct DistanceCost {
  double operator()(const RoadSegment& segment) const { return segment.base_cost; }
};

/// Directed weighted graph effective at one instant. Outgoing arcs of each
/// vertex are ordered by (segment id, direction).
class GraphSnapshot {
 public:
  GraphSnapshot() = default;

  GraphSnapshot(CivilTime instant, RoutingMode mode, std::vector<VertexId> vertices,
                std::vector<Arc> arcs)
      : instant_(instant), mode_(mode), vertices_(std::move(vertices)) {
    std::sort(vertices_.begin(), vertices_.end());
    vertices_.erase(std::unique(vertices_.begin(), vertices_.end()), vertices_.end());
    for (size_t i = 0; i < vertices_.size(); ++i) index_.emplace(vertices_[i], i);
    out_.resize(vertices_.size());
    for (const Arc& a : arcs) {
      if (!std::isfinite(a.cost) || a.cost <= 0.0) {
        throw ValidationError("arc for segment " + std::to_string(a.segment_id) +
                              " has non-positive or non-finite cost");
      }
      if (!contains(a.head)) throw UnknownVertex("unknown vertex " + std::to_string(a.head));
      out_[index_of(a.tail)].push_back(a);
      ++arc_count_;
    }
    for (auto& list : out_) {
      std::sort(list.begin(), list.end(), [](const Arc& a, const Arc& b) {
        return std::pair(a.segment_id, a.direction) < std::pair(b.segment_id, b.direction);
      });
    }
  }

  CivilTime instant() const { return instant_; }
  RoutingMode mode() const { return mode_; }
  std::span<const VertexId> vertices() const { return vertices_; }
  size_t arc_count() const { return arc_count_; }
  bool contains(VertexId v) const { return index_.contains(v); }

  size_t index_of(VertexId v) const {
    auto it = index_.find(v);
    if (it == index_.end()) throw UnknownVertex("unknown vertex " + std::to_string(v));
    return it->second;
  }
  std::span<const Arc> arcs_from(VertexId v) const { return out_[index_of(v)]; }
  std::span<const Arc> arcs_from_index(size_t i) const { return out_[i]; }

  std::vector<Arc> arcs() const {
    std::vector<Arc> all;
    all.reserve(arc_count_);
    for (const auto& list : out_) all.insert(all.end(), list.begin(), list.end());
    return all;
  }

  const Arc* find_arc(SegmentId segment, ArcDirection direction) const {
    for (const auto& list : out_) {
      for (const Arc& a : list) {
        if (a.segment_id == segment && a.direction == direction) return &a;
      }
    }
    return nullptr;
  }

 private:
  CivilTime instant_{};
  RoutingMode mode_ = RoutingMode::kStrict;
  std::vector<VertexId> vertices_;
  std::unordered_map<VertexId, size_t> index_;
  std::vector<std::vector<Arc>> out_;
  size_t arc_count_ = 0;
};

/// Resolves every segment's status at `t` and materializes the arcs.
template <CostProvider Provider = DistanceCost>
GraphSnapshot build_snapshot(const RoadNetwork& network, std::span<const ConditionRule> rules,
                             CivilTime t, const SnapshotOptions& options = {},
                             const Provider& provider = {}) {
  std::map<SegmentId, std::vector<ConditionRule>> by_segment;
  for (const ConditionRule& r : rules) by_segment[r.segment_id].push_back(r);

  std::vector<VertexId> vertices;
  vertices.reserve(network.vertices().size());
  for (const Vertex& v : network.vertices()) vertices.push_back(v.id);

  std::vector<Arc> arcs;
  arcs.reserve(network.segments().size() * 2);
  for (const RoadSegment& s : network.segments()) {
    SegmentStatus status;
    if (auto it = by_segment.find(s.id); it != by_segment.end()) {
      status = resolve_segment_status(it->second, t);
    }
    const double cost = static_cast<double>(provider(s)) * status.cost_multiplier;
    auto emit = [&](bool open, VertexId tail, VertexId head, ArcDirection dir) {
      if (open) {
        arcs.push_back({s.id, tail, head, cost, dir});
      } else if (options.mode == RoutingMode::kFaithful) {
        arcs.push_back({s.id, tail, head,
                        static_cast<double>(provider(s)) * options.penalty_factor, dir});
      }
    };
    emit(status.forward_open, s.from, s.to, ArcDirection::kForward);
    emit(status.reverse_open, s.to, s.from, ArcDirection::kReverse);
  }
  return GraphSnapshot(t, options.mode, std::move(vertices), std::move(arcs));
}

struct RoutePath {
  std::vector<VertexId> vertices;
  std::vector<Arc> arcs;
  double total_cost = 0.0;
  CivilTime instant{};

  std::vector<SegmentId> segment_ids() const {
    std::vector<SegmentId> ids;
    ids.reserve(arcs.size());
    for (const Arc& a : arcs) ids.push_back(a.segment_id);
    return ids;
  }
  bool uses_segment(SegmentId id) const {
    return std::any_of(arcs.begin(), arcs.end(), [id](const Arc& a) { return a.segment_id == id; });
  }
  bool operator==(const RoutePath&) const = default;
};

/// Minimum-cost path by Dijkstra. Among equal-cost paths the one with the
/// lexicographically smallest segment-id sequence is returned. Returns
/// nullopt when the target is unreachable.
inline std::optional<RoutePath> shortest_path(const GraphSnapshot& snapshot, VertexId source,
                                              VertexId target) {
  const size_t src = snapshot.index_of(source);
  const size_t dst = snapshot.index_of(target);
  RoutePath path;
  path.instant = snapshot.instant();
  path.vertices.push_back(source);
  if (src == dst) return path;

  const size_t n = snapshot.vertices().size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, kInf);
  double min_cost = kInf;

  using Entry = std::pair<double, size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  dist[src] = 0.0;
  frontier.emplace(0.0, src);
  while (!frontier.empty()) {
    const auto [d, u] = frontier.top();
    frontier.pop();
    if (d > dist[u]) continue;
    for (const Arc& a : snapshot.arcs_from_index(u)) {
      min_cost = std::min(min_cost, a.cost);
      const size_t v = snapshot.index_of(a.head);
      if (d + a.cost < dist[v]) {
        dist[v] = d + a.cost;
        frontier.emplace(dist[v], v);
      }
    }
  }
  if (dist[dst] == kInf) return std::nullopt;

  // An arc is tight when it lies on some shortest path. The slack bound stays
  // below min_cost / n so the tight subgraph cannot contain a cycle.
  const double slack_cap = min_cost / (4.0 * static_cast<double>(n + 1));
  auto tight = [&](size_t u, const Arc& a, size_t v) {
    if (dist[u] == kInf || dist[v] == kInf) return false;
    const double tol = std::min(1e-12 * std::max(1.0, dist[v]), slack_cap);
    return std::abs(dist[u] + a.cost - dist[v]) <= tol;
  };

  // Vertices from which the target is reachable along tight arcs.
  std::vector<std::vector<size_t>> tight_in(n);
  for (size_t u = 0; u < n; ++u) {
    for (const Arc& a : snapshot.arcs_from_index(u)) {
      const size_t v = snapshot.index_of(a.head);
      if (tight(u, a, v)) tight_in[v].push_back(u);
    }
  }
  std::vector<char> reaches(n, 0);
  std::vector<size_t> stack{dst};
  reaches[dst] = 1;
  while (!stack.empty()) {
    const size_t v = stack.back();
    stack.pop_back();
    for (size_t u : tight_in[v]) {
      if (!reaches[u]) {
        reaches[u] = 1;
        stack.push_back(u);
      }
    }
  }

  // Greedy walk: smallest segment id that keeps the target reachable.
  size_t at = src;
  while (at != dst) {
    const Arc* chosen = nullptr;
    for (const Arc& a : snapshot.arcs_from_index(at)) {
      const size_t v = snapshot.index_of(a.head);
      if (reaches[v] && tight(at, a, v)) {
        chosen = &a;
        break;
      }
    }
    if (chosen == nullptr || path.arcs.size() > n) {
      throw std::logic_error("shortest_path: tight subgraph walk failed");
    }
    path.arcs.push_back(*chosen);
    path.vertices.push_back(chosen->head);
    path.total_cost += chosen->cost;
    at = snapshot.index_of(chosen->head);
  }
  return path;
}

// Turn-by-turn directions.

enum class Instruction { kDepart, kContinue, kTurnLeft, kTurnRight, kUTurn, kArrive };

inline std::string_view to_string(Instruction i) {
  switch (i) {
    case Instruction::kDepart: return "DEPART";
    case Instruction::kContinue: return "CONTINUE";
    case Instruction::kTurnLeft: return "TURN_LEFT";
    case Instruction::kTurnRight: return "TURN_RIGHT";
    case Instruction::kUTurn: return "U_TURN";
    case Instruction::kArrive: return "ARRIVE";
  }
  return "?";
}

inline Instruction instruction_from_string(std::string_view s) {
  for (auto i : {Instruction::kDepart, Instruction::kContinue, Instruction::kTurnLeft,
                 Instruction::kTurnRight, Instruction::kUTurn, Instruction::kArrive}) {
    if (to_string(i) == s) return i;
  }
  throw ParseError("unknown instruction '" + std::string(s) + "'");
}

struct DirectionStep {
  Instruction instruction = Instruction::kContinue;
  std::string road_name;
  double distance_m = 0.0;
  bool operator==(const DirectionStep&) const = default;
};

inline constexpr double kContinueMaxDegrees = 30.0;
inline constexpr double kUTurnMinDegrees = 150.0;

/// Compass bearing of a->b in degrees, clockwise from north, in [0, 360).
inline double bearing_degrees(Point a, Point b) {
  double deg = std::atan2(b.x - a.x, b.y - a.y) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 360.0;
  return deg;
}

/// Signed heading change in (-180, 180]; positive turns clockwise (right).
inline double heading_change(double incoming, double outgoing) {
  double delta = std::fmod(outgoing - incoming, 360.0);
  if (delta <= -180.0) delta += 360.0;
  if (delta > 180.0) delta -= 360.0;
  return delta;
}

inline Instruction classify_turn(double delta) {
  const double magnitude = std::abs(delta);
  if (magnitude < kContinueMaxDegrees) return Instruction::kContinue;
  if (magnitude >= kUTurnMinDegrees) return Instruction::kUTurn;
  return delta > 0.0 ? Instruction::kTurnRight : Instruction::kTurnLeft;
}

namespace detail {

inline std::vector<Point> oriented_geometry(const RoadSegment& s, ArcDirection d) {
  std::vector<Point> pts = s.geometry;
  if (d == ArcDirection::kReverse) std::reverse(pts.begin(), pts.end());
  return pts;
}

// First leg of a polyline, skipping repeated points.
inline double first_leg_bearing(const std::vector<Point>& pts) {
  for (size_t i = 1; i < pts.size(); ++i) {
    if (!(pts[i] == pts[0])) return bearing_degrees(pts[0], pts[i]);
  }
  return 0.0;
}

inline double last_leg_bearing(const std::vector<Point>& pts) {
  const Point end = pts.back();
  for (size_t i = pts.size() - 1; i-- > 0;) {
    if (!(pts[i] == end)) return bearing_degrees(pts[i], end);
  }
  return 0.0;
}

}  // namespace detail

/// Checks that the path chains through `network` consistently.
inline void check_path(const RoadNetwork& network, const RoutePath& path) {
  if (path.vertices.size() != path.arcs.size() + 1) {
    throw InvalidPath("vertex and arc counts disagree");
  }
  for (size_t i = 0; i < path.arcs.size(); ++i) {
    const Arc& a = path.arcs[i];
    const RoadSegment* s = network.find_segment(a.segment_id);
    if (s == nullptr) throw InvalidPath("unknown segment " + std::to_string(a.segment_id));
    const bool forward = a.direction == ArcDirection::kForward;
    const VertexId tail = forward ? s->from : s->to;
    const VertexId head = forward ? s->to : s->from;
    if (a.tail != tail || a.head != head || path.vertices[i] != tail ||
        path.vertices[i + 1] != head) {
      throw InvalidPath("broken chain at arc " + std::to_string(i) + " (segment " +
                        std::to_string(a.segment_id) + ")");
    }
  }
}

inline std::vector<DirectionStep> generate_directions(const RoadNetwork& network,
                                                      const RoutePath& path) {
  if (path.arcs.empty()) {
    if (path.vertices.size() > 1) throw InvalidPath("vertex and arc counts disagree");
    return {{Instruction::kDepart, "", 0.0}, {Instruction::kArrive, "", 0.0}};
  }
  check_path(network, path);

  std::vector<DirectionStep> steps;
  const RoadSegment& first = network.segment(path.arcs.front().segment_id);
  steps.push_back({Instruction::kDepart, first.name, 0.0});
  std::vector<Point> previous;
  for (const Arc& a : path.arcs) {
    const RoadSegment& s = network.segment(a.segment_id);
    std::vector<Point> pts = detail::oriented_geometry(s, a.direction);
    const double length = polyline_length(pts);
    Instruction instr = Instruction::kContinue;
    if (!previous.empty()) {
      instr = classify_turn(heading_change(detail::last_leg_bearing(previous),
                                           detail::first_leg_bearing(pts)));
    }
    DirectionStep& last = steps.back();
    if (instr == Instruction::kContinue && last.instruction == Instruction::kContinue &&
        last.road_name == s.name) {
      last.distance_m += length;
    } else {
      steps.push_back({instr, s.name, length});
    }
    previous = std::move(pts);
  }
  const RoadSegment& final_segment = network.segment(path.arcs.back().segment_id);
  steps.push_back({Instruction::kArrive, final_segment.name, 0.0});
  return steps;
}

// End-to-end planning.

/// A query endpoint: a free point snapped to the nearest vertex, or a vertex.
using Endpoint = std::variant<Point, VertexId>;

inline nlohmann::json endpoint_to_json(const Endpoint& e) {
  if (const auto* id = std::get_if<VertexId>(&e)) return {{"vertex", *id}};
  const Point p = std::get<Point>(e);
  return {{"x", p.x}, {"y", p.y}};
}

/// `{"x": num, "y": num}` or `{"vertex": int}`.
inline Endpoint endpoint_from_json(const nlohmann::json& j, std::string_view where) {
  if (!j.is_object()) throw ParseError(std::string(where) + " must be an object");
  if (j.contains("vertex")) {
    detail::reject_unknown_keys(j, {"vertex"}, where);
    return detail::get_as<VertexId>(j.at("vertex"), where);
  }
  detail::reject_unknown_keys(j, {"x", "y"}, where);
  return Point{detail::get_as<double>(detail::require(j, "x", where), where),
               detail::get_as<double>(detail::require(j, "y", where), where)};
}

struct RouteResult {
  RoutePath path;
  std::vector<DirectionStep> steps;
  double snap_origin_m = 0.0;
  double snap_destination_m = 0.0;

  double cost() const { return path.total_cost; }
  CivilTime instant() const { return path.instant; }
  bool operator==(const RouteResult&) const = default;
};

namespace detail {

inline std::pair<VertexId, double> snap(const RoadNetwork& network, const Endpoint& e) {
  if (const auto* id = std::get_if<VertexId>(&e)) return {network.vertex(*id).id, 0.0};
  const Point p = std::get<Point>(e);
  const Vertex& v = nearest_vertex(network, p);
  return {v.id, distance(p, v.coords())};
}

}  // namespace detail

template <CostProvider Provider = DistanceCost>
RouteResult plan_route(const RoadNetwork& network, std::span<const ConditionRule> rules,
                       const Endpoint& origin, const Endpoint& destination, CivilTime t,
                       const SnapshotOptions& options = {}, const Provider& provider = {}) {
  if (network.empty()) throw EmptyNetwork("network has no vertices");
  const auto [source, source_offset] = detail::snap(network, origin);
  const auto [target, target_offset] = detail::snap(network, destination);
  const GraphSnapshot snapshot = build_snapshot(network, rules, t, options, provider);
  auto path = shortest_path(snapshot, source, target);
  if (!path) {
    throw NoRoute("no route from V" + std::to_string(source) + " to V" +
                  std::to_string(target) + " at " + format_iso(t));
  }
  RouteResult result;
  result.steps = generate_directions(network, *path);
  result.path = std::move(*path);
  result.snap_origin_m = source_offset;
  result.snap_destination_m = target_offset;
  return result;
}

inline nlohmann::json to_json(const DirectionStep& step) {
  return {{"instruction", to_string(step.instruction)},
          {"road", step.road_name},
          {"distance_m", step.distance_m}};
}

/// RouteResult wire form. `with_arcs` adds per-arc detail used for storage.
inline nlohmann::json to_json(const RouteResult& r, bool with_arcs = false) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  nlohmann::json j{{"instant", format_iso(r.instant())},
                   {"cost", r.cost()},
                   {"vertices", r.path.vertices},
                   {"segments", r.path.segment_ids()},
                   {"steps", std::move(steps)},
                   {"snap", {{"origin_m", r.snap_origin_m}, {"destination_m", r.snap_destination_m}}}};
  if (with_arcs) {
    nlohmann::json arcs = nlohmann::json::array();
    for (const Arc& a : r.path.arcs) {
      arcs.push_back({{"segment_id", a.segment_id},
                      {"direction", to_string(a.direction)},
                      {"cost", a.cost}});
    }
    j["arcs"] = std::move(arcs);
  }
  return j;
}

/// Inverse of to_json(r, /*with_arcs=*/true).
inline RouteResult route_result_from_json(const nlohmann::json& j) {
  try {
    RouteResult r;
    r.path.instant = parse_iso(j.at("instant").get<std::string>());
    r.path.total_cost = j.at("cost").get<double>();
    r.path.vertices = j.at("vertices").get<std::vector<VertexId>>();
    const auto& arcs = j.at("arcs");
    if (arcs.size() + 1 != r.path.vertices.size()) throw ParseError("arc count mismatch");
    for (size_t i = 0; i < arcs.size(); ++i) {
      Arc a;
      a.segment_id = arcs[i].at("segment_id").get<SegmentId>();
      a.direction = arcs[i].at("direction").get<std::string>() == "REVERSE"
                        ? ArcDirection::kReverse
                        : ArcDirection::kForward;
      a.cost = arcs[i].at("cost").get<double>();
      a.tail = r.path.vertices[i];
      a.head = r.path.vertices[i + 1];
      r.path.arcs.push_back(a);
    }
    for (const auto& s : j.at("steps")) {
      r.steps.push_back({instruction_from_string(s.at("instruction").get<std::string>()),
                         s.at("road").get<std::string>(), s.at("distance_m").get<double>()});
    }
    r.snap_origin_m = j.at("snap").at("origin_m").get<double>();
    r.snap_destination_m = j.at("snap").at("destination_m").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("route result: ") + e.what());
  }
}

}  // namespace routeplan

#endif  // ROUTEPLAN_ROUTING_HPP_

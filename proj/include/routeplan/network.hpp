#ifndef ROUTEPLAN_NETWORK_HPP_
#define ROUTEPLAN_NETWORK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "routeplan/error.hpp"

namespace routeplan {

using VertexId = std::int64_t;
using SegmentId = std::int64_t;

/// Planar projected coordinate in meters.
struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double polyline_length(std::span<const Point> pts) {
  double total = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) total += distance(pts[i - 1], pts[i]);
  return total;
}

struct Vertex {
  VertexId id = 0;
  double x = 0.0;
  double y = 0.0;
  std::optional<std::string> name;

  Point coords() const { return {x, y}; }
  bool operator==(const Vertex&) const = default;
};

struct RoadSegment {
  SegmentId id = 0;
  std::string name;
  VertexId from = 0;
  VertexId to = 0;
  std::vector<Point> geometry;
  double base_cost = 0.0;

  double length() const { return polyline_length(geometry); }
  bool operator==(const RoadSegment&) const = default;
};

struct Extent {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool operator==(const Extent&) const = default;
};

/// Immutable, validated road network. Vertices and segments are kept sorted
/// by id so every iteration order is deterministic.
class RoadNetwork {
 public:
  RoadNetwork() = default;

  /// Validates and takes ownership. Throws ValidationError naming the first
  /// offending id (vertices are checked before segments, in input order).
  RoadNetwork(std::string crs_label, std::vector<Vertex> vertices,
              std::vector<RoadSegment> segments);

  const std::string& crs_label() const { return crs_label_; }
  std::span<const Vertex> vertices() const { return vertices_; }
  std::span<const RoadSegment> segments() const { return segments_; }
  bool empty() const { return vertices_.empty(); }

  const Vertex* find_vertex(VertexId id) const {
    auto it = vertex_index_.find(id);
    return it == vertex_index_.end() ? nullptr : &vertices_[it->second];
  }
  const RoadSegment* find_segment(SegmentId id) const {
    auto it = segment_index_.find(id);
    return it == segment_index_.end() ? nullptr : &segments_[it->second];
  }
  const Vertex& vertex(VertexId id) const {
    if (auto* v = find_vertex(id)) return *v;
    throw UnknownVertex("unknown vertex " + std::to_string(id));
  }
  const RoadSegment& segment(SegmentId id) const {
    if (auto* s = find_segment(id)) return *s;
    throw ValidationError("unknown segment " + std::to_string(id));
  }

  bool operator==(const RoadNetwork& other) const {
    return crs_label_ == other.crs_label_ && vertices_ == other.vertices_ &&
           segments_ == other.segments_;
  }

 private:
  std::string crs_label_;
  std::vector<Vertex> vertices_;
  std::vector<RoadSegment> segments_;
  std::unordered_map<VertexId, size_t> vertex_index_;
  std::unordered_map<SegmentId, size_t> segment_index_;
};

namespace detail {

inline constexpr double kEndpointTolerance = 1e-6;

inline std::string vertex_tag(VertexId id) { return "vertex V" + std::to_string(id); }
inline std::string segment_tag(SegmentId id) { return "segment S" + std::to_string(id); }

inline bool finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

}  // namespace detail

inline RoadNetwork::RoadNetwork(std::string crs_label, std::vector<Vertex> vertices,
                                std::vector<RoadSegment> segments)
    : crs_label_(std::move(crs_label)) {
  for (size_t i = 0; i < vertices.size(); ++i) {
    const Vertex& v = vertices[i];
    if (v.id <= 0) throw ValidationError(detail::vertex_tag(v.id) + ": id must be positive");
    if (!detail::finite(v.coords())) {
      throw ValidationError(detail::vertex_tag(v.id) + ": non-finite coordinates");
    }
    if (!vertex_index_.emplace(v.id, i).second) {
      throw ValidationError(detail::vertex_tag(v.id) + ": duplicate id");
    }
  }
  for (size_t i = 0; i < segments.size(); ++i) {
    RoadSegment& s = segments[i];
    const std::string tag = detail::segment_tag(s.id);
    if (s.id <= 0) throw ValidationError(tag + ": id must be positive");
    if (!segment_index_.emplace(s.id, i).second) {
      throw ValidationError(tag + ": duplicate id");
    }
    for (VertexId end : {s.from, s.to}) {
      if (!vertex_index_.contains(end)) {
        throw ValidationError(tag + ": unknown vertex " + std::to_string(end));
      }
    }
    if (s.from == s.to) throw ValidationError(tag + ": from and to are the same vertex");
    if (s.geometry.size() < 2) throw ValidationError(tag + ": geometry needs at least 2 points");
    if (!std::all_of(s.geometry.begin(), s.geometry.end(), detail::finite)) {
      throw ValidationError(tag + ": non-finite geometry");
    }
    const Point from = vertices[vertex_index_.at(s.from)].coords();
    const Point to = vertices[vertex_index_.at(s.to)].coords();
    if (distance(s.geometry.front(), from) > detail::kEndpointTolerance ||
        distance(s.geometry.back(), to) > detail::kEndpointTolerance) {
      throw ValidationError(tag + ": geometry endpoints do not match its vertices");
    }
    const double length = s.length();
    if (!(length > 0.0)) throw ValidationError(tag + ": zero-length segment");
    if (s.base_cost == 0.0) s.base_cost = length;
    if (!std::isfinite(s.base_cost) || s.base_cost < 0.0) {
      throw ValidationError(tag + ": base_cost must be positive and finite");
    }
    if (s.base_cost < distance(from, to) - detail::kEndpointTolerance) {
      throw ValidationError(tag + ": base_cost below straight-line distance");
    }
  }

  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  std::sort(vertices.begin(), vertices.end(), by_id);
  std::sort(segments.begin(), segments.end(), by_id);
  vertices_ = std::move(vertices);
  segments_ = std::move(segments);
  vertex_index_.clear();
  segment_index_.clear();
  for (size_t i = 0; i < vertices_.size(); ++i) vertex_index_.emplace(vertices_[i].id, i);
  for (size_t i = 0; i < segments_.size(); ++i) segment_index_.emplace(segments_[i].id, i);
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string(where) + ": missing '" + key + "'");
  return *it;
}

template <typename T>
T get_as(const nlohmann::json& value, std::string_view where) {
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!value.is_number_integer()) throw ParseError("expected integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!value.is_number()) throw ParseError("expected number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!value.is_string()) throw ParseError("expected string");
    }
    return value.get<T>();
  } catch (const std::exception& e) {
    throw ParseError(std::string(where) + ": " + e.what());
  }
}

inline nlohmann::json parse_json(std::string_view document) {
  try {
    return nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

inline Point point_from_json(const nlohmann::json& pt, std::string_view where) {
  if (!pt.is_array() || pt.size() != 2) {
    throw ParseError(std::string(where) + ": geometry points must be [x, y]");
  }
  return {get_as<double>(pt[0], where), get_as<double>(pt[1], where)};
}

}  // namespace detail

/// Parses and validates a network document. Unknown keys are rejected.
inline RoadNetwork ingest_network(std::string_view document) {
  const nlohmann::json doc = detail::parse_json(document);
  if (!doc.is_object()) throw ParseError("network document must be a JSON object");
  detail::reject_unknown_keys(doc, {"crs_label", "vertices", "segments"}, "network");

  std::string crs;
  if (auto it = doc.find("crs_label"); it != doc.end()) crs = detail::get_as<std::string>(*it, "crs_label");

  std::vector<Vertex> vertices;
  const auto& vs = detail::require(doc, "vertices", "network");
  if (!vs.is_array()) throw ParseError("network: 'vertices' must be an array");
  for (const auto& v : vs) {
    if (!v.is_object()) throw ParseError("vertex entries must be objects");
    detail::reject_unknown_keys(v, {"id", "x", "y", "name"}, "vertex");
    Vertex out;
    out.id = detail::get_as<VertexId>(detail::require(v, "id", "vertex"), "vertex id");
    const std::string where = detail::vertex_tag(out.id);
    out.x = detail::get_as<double>(detail::require(v, "x", where), where);
    out.y = detail::get_as<double>(detail::require(v, "y", where), where);
    if (auto it = v.find("name"); it != v.end() && !it->is_null()) {
      out.name = detail::get_as<std::string>(*it, where);
    }
    vertices.push_back(std::move(out));
  }

  std::vector<RoadSegment> segments;
  const auto& ss = detail::require(doc, "segments", "network");
  if (!ss.is_array()) throw ParseError("network: 'segments' must be an array");
  for (const auto& s : ss) {
    if (!s.is_object()) throw ParseError("segment entries must be objects");
    detail::reject_unknown_keys(s, {"id", "name", "from", "to", "geometry", "base_cost"},
                                "segment");
    RoadSegment out;
    out.id = detail::get_as<SegmentId>(detail::require(s, "id", "segment"), "segment id");
    const std::string where = detail::segment_tag(out.id);
    out.name = detail::get_as<std::string>(detail::require(s, "name", where), where);
    out.from = detail::get_as<VertexId>(detail::require(s, "from", where), where);
    out.to = detail::get_as<VertexId>(detail::require(s, "to", where), where);
    const auto& geom = detail::require(s, "geometry", where);
    if (!geom.is_array()) throw ParseError(where + ": geometry must be an array");
    for (const auto& pt : geom) out.geometry.push_back(detail::point_from_json(pt, where));
    if (auto it = s.find("base_cost"); it != s.end() && !it->is_null()) {
      out.base_cost = detail::get_as<double>(*it, where);
      if (!(out.base_cost > 0.0)) {
        throw ValidationError(where + ": base_cost must be positive and finite");
      }
    }
    segments.push_back(std::move(out));
  }
  return RoadNetwork(std::move(crs), std::move(vertices), std::move(segments));
}

inline nlohmann::json to_json(const RoadNetwork& network) {
  nlohmann::json doc;
  doc["crs_label"] = network.crs_label();
  doc["vertices"] = nlohmann::json::array();
  for (const Vertex& v : network.vertices()) {
    nlohmann::json j{{"id", v.id}, {"x", v.x}, {"y", v.y}};
    if (v.name) j["name"] = *v.name;
    doc["vertices"].push_back(std::move(j));
  }
  doc["segments"] = nlohmann::json::array();
  for (const RoadSegment& s : network.segments()) {
    nlohmann::json geom = nlohmann::json::array();
    for (Point p : s.geometry) geom.push_back({p.x, p.y});
    doc["segments"].push_back({{"id", s.id},
                               {"name", s.name},
                               {"from", s.from},
                               {"to", s.to},
                               {"geometry", std::move(geom)},
                               {"base_cost", s.base_cost}});
  }
  return doc;
}

inline std::string serialize_network(const RoadNetwork& network) {
  return to_json(network).dump(2);
}

/// Closest vertex by Euclidean distance; ties go to the lowest id.
inline const Vertex& nearest_vertex(const RoadNetwork& network, Point point) {
  if (network.empty()) throw EmptyNetwork("network has no vertices");
  const Vertex* best = nullptr;
  double best_d2 = 0.0;
  for (const Vertex& v : network.vertices()) {
    const double dx = v.x - point.x;
    const double dy = v.y - point.y;
    const double d2 = dx * dx + dy * dy;
    if (best == nullptr || d2 < best_d2) {
      best = &v;
      best_d2 = d2;
    }
  }
  return *best;
}

/// Tight bounding box over vertices and every geometry point.
inline Extent network_extent(const RoadNetwork& network) {
  if (network.empty()) throw EmptyNetwork("network has no vertices");
  const Vertex& first = network.vertices().front();
  Extent e{first.x, first.y, first.x, first.y};
  auto grow = [&e](Point p) {
    e.min_x = std::min(e.min_x, p.x);
    e.min_y = std::min(e.min_y, p.y);
    e.max_x = std::max(e.max_x, p.x);
    e.max_y = std::max(e.max_y, p.y);
  };
  for (const Vertex& v : network.vertices()) grow(v.coords());
  for (const RoadSegment& s : network.segments()) {
    for (Point p : s.geometry) grow(p);
  }
  return e;
}

}  // namespace routeplan

#endif  // ROUTEPLAN_NETWORK_HPP_

#ifndef ROUTEPLAN_RENDER_HPP_
#define ROUTEPLAN_RENDER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "routeplan/civil_time.hpp"
#include "routeplan/conditions.hpp"
#include "routeplan/error.hpp"
#include "routeplan/network.hpp"
#include "routeplan/routing.hpp"

#ifndef ROUTEPLAN_ENABLE_RASTER
#define ROUTEPLAN_ENABLE_RASTER 1
#endif

#if ROUTEPLAN_ENABLE_RASTER
#include <zlib.h>
#endif

namespace routeplan {

struct StrokeStyle {
  std::string color;
  double width = 1.0;
};

/// Default palette: grey roads, dashed red closures, blue route overlay.
struct MapStyle {
  std::string background = "#ffffff";
  StrokeStyle road{"#8c8c8c", 3.0};
  StrokeStyle closed_road{"#d62728", 3.0};
  StrokeStyle route{"#1f5fbf", 6.0};
  std::string vertex_color = "#404040";
  double vertex_size = 5.0;
  std::string label_color = "#202020";
  double label_size = 11.0;
};

struct RenderConfig {
  int width_px = 640;
  int height_px = 480;
  std::optional<Extent> extent;  // nullopt = AUTO
  MapStyle style;
  bool label_roads = false;
};

inline constexpr int kMinViewportPx = 16;
inline constexpr double kAutoExtentPadding = 0.05;

inline void validate_config(const RenderConfig& config) {
  if (config.width_px < kMinViewportPx || config.height_px < kMinViewportPx) {
    throw ValidationError("width_px and height_px must be at least 16");
  }
  if (config.extent && (!(config.extent->width() > 0.0) || !(config.extent->height() > 0.0))) {
    throw ValidationError("explicit extent must be nonempty");
  }
}

/// Uniform-scale, y-flipped world->pixel mapping centered on the extent.
struct ViewTransform {
  double scale = 1.0;
  double center_x = 0.0;
  double center_y = 0.0;
  double width_px = 0.0;
  double height_px = 0.0;

  Point to_pixel(Point world) const {
    return {(world.x - center_x) * scale + width_px / 2.0,
            height_px / 2.0 - (world.y - center_y) * scale};
  }
  Point to_world(Point pixel) const {
    return {(pixel.x - width_px / 2.0) / scale + center_x,
            (height_px / 2.0 - pixel.y) / scale + center_y};
  }
};

/// Network extent padded by 5% of its span on every side. A degenerate
/// axis borrows the other axis' span, or 1 m when both are zero.
inline Extent auto_extent(const RoadNetwork& network) {
  Extent e = network_extent(network);
  double w = e.width();
  double h = e.height();
  if (w <= 0.0 && h <= 0.0) w = h = 1.0 / (2.0 * kAutoExtentPadding);
  if (w <= 0.0) w = h;
  if (h <= 0.0) h = w;
  const double px = std::max(w * kAutoExtentPadding, (w - e.width()) / 2.0);
  const double py = std::max(h * kAutoExtentPadding, (h - e.height()) / 2.0);
  return {e.min_x - px, e.min_y - py, e.max_x + px, e.max_y + py};
}

inline ViewTransform make_view_transform(const Extent& extent, int width_px, int height_px) {
  ViewTransform t;
  t.width_px = width_px;
  t.height_px = height_px;
  t.scale = std::min(width_px / extent.width(), height_px / extent.height());
  t.center_x = (extent.min_x + extent.max_x) / 2.0;
  t.center_y = (extent.min_y + extent.max_y) / 2.0;
  return t;
}

inline ViewTransform view_transform_for(const RoadNetwork& network, const RenderConfig& config) {
  validate_config(config);
  const Extent e = config.extent ? *config.extent : auto_extent(network);
  return make_view_transform(e, config.width_px, config.height_px);
}

namespace detail {

inline std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string points_attr(const ViewTransform& t, std::span<const Point> world) {
  std::string out;
  for (Point p : world) {
    const Point px = t.to_pixel(p);
    if (!out.empty()) out += ' ';
    out += fmt2(px.x) + "," + fmt2(px.y);
  }
  return out;
}

}  // namespace detail

/// Renders segments (id order), vertex markers, optional labels and the
/// route overlay (last) as an SVG 1.1 document.
inline std::string render_map(const RoadNetwork& network, std::span<const ConditionRule> rules,
                              CivilTime t, const RoutePath* path, const RenderConfig& config) {
  if (network.empty()) throw EmptyNetwork("network has no vertices");
  const ViewTransform view = view_transform_for(network, config);
  if (path != nullptr) {
    for (const Arc& a : path->arcs) {
      if (network.find_segment(a.segment_id) == nullptr) {
        throw PathNotInNetwork("path uses unknown segment " + std::to_string(a.segment_id));
      }
    }
    for (VertexId v : path->vertices) {
      if (network.find_vertex(v) == nullptr) {
        throw PathNotInNetwork("path uses unknown vertex " + std::to_string(v));
      }
    }
  }

  std::map<SegmentId, std::vector<ConditionRule>> by_segment;
  for (const auto& r : rules) by_segment[r.segment_id].push_back(r);

  const MapStyle& st = config.style;
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         std::to_string(config.width_px) + "\" height=\"" + std::to_string(config.height_px) +
         "\" viewBox=\"0 0 " + std::to_string(config.width_px) + " " +
         std::to_string(config.height_px) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(config.width_px) + "\" height=\"" +
         std::to_string(config.height_px) + "\" fill=\"" + st.background + "\"/>\n";

  for (const RoadSegment& s : network.segments()) {
    SegmentStatus status;
    if (auto it = by_segment.find(s.id); it != by_segment.end()) {
      status = resolve_segment_status(it->second, t);
    }
    const bool closed = !status.forward_open && !status.reverse_open;
    const bool one_way = status.forward_open != status.reverse_open;
    const StrokeStyle& stroke = closed ? st.closed_road : st.road;
    std::string cls = closed ? "road closed" : (one_way ? "road oneway" : "road");
    svg += "<polyline class=\"" + cls + "\" data-segment=\"" + std::to_string(s.id) +
           "\" points=\"" + detail::points_attr(view, s.geometry) +
           "\" fill=\"none\" stroke=\"" + stroke.color + "\" stroke-width=\"" +
           detail::fmt2(stroke.width) + "\"" +
           (closed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
  }

  const double half = st.vertex_size / 2.0;
  for (const Vertex& v : network.vertices()) {
    const Point p = view.to_pixel(v.coords());
    svg += "<rect class=\"vertex\" data-vertex=\"" + std::to_string(v.id) + "\" x=\"" +
           detail::fmt2(p.x - half) + "\" y=\"" + detail::fmt2(p.y - half) + "\" width=\"" +
           detail::fmt2(st.vertex_size) + "\" height=\"" + detail::fmt2(st.vertex_size) +
           "\" fill=\"" + st.vertex_color + "\"/>\n";
  }

  if (config.label_roads) {
    for (const RoadSegment& s : network.segments()) {
      const Point a = view.to_pixel(s.geometry.front());
      const Point b = view.to_pixel(s.geometry.back());
      svg += "<text x=\"" + detail::fmt2((a.x + b.x) / 2.0) + "\" y=\"" +
             detail::fmt2((a.y + b.y) / 2.0) + "\" font-size=\"" + detail::fmt2(st.label_size) +
             "\" fill=\"" + st.label_color + "\">" + detail::xml_escape(s.name) + "</text>\n";
    }
  }

  if (path != nullptr && !path->arcs.empty()) {
    std::vector<Point> overlay;
    for (const Arc& a : path->arcs) {
      const auto pts = detail::oriented_geometry(network.segment(a.segment_id), a.direction);
      auto begin = pts.begin();
      if (!overlay.empty()) ++begin;  // shared vertex
      overlay.insert(overlay.end(), begin, pts.end());
    }
    svg += "<polyline class=\"route\" points=\"" + detail::points_attr(view, overlay) +
           "\" fill=\"none\" stroke=\"" + st.route.color + "\" stroke-width=\"" +
           detail::fmt2(st.route.width) + "\" stroke-linejoin=\"round\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

inline bool raster_supported() { return ROUTEPLAN_ENABLE_RASTER != 0; }

namespace detail {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

inline std::optional<Rgb> parse_color(std::string_view s) {
  if (s.size() != 7 || s[0] != '#') return std::nullopt;
  auto hex = [&](size_t i) { return std::stoi(std::string(s.substr(i, 2)), nullptr, 16); };
  try {
    return Rgb{static_cast<std::uint8_t>(hex(1)), static_cast<std::uint8_t>(hex(3)),
               static_cast<std::uint8_t>(hex(5))};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::map<std::string, std::string> parse_attributes(const std::string& element) {
  static const std::regex attr(R"re(([A-Za-z_:][-A-Za-z0-9_:.]*)="([^"]*)")re");
  std::map<std::string, std::string> out;
  for (auto it = std::sregex_iterator(element.begin(), element.end(), attr);
       it != std::sregex_iterator(); ++it) {
    out[(*it)[1].str()] = (*it)[2].str();
  }
  return out;
}

inline double attr_number(const std::map<std::string, std::string>& attrs, const char* key,
                          double fallback) {
  auto it = attrs.find(key);
  if (it == attrs.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ParseError(std::string("bad numeric attribute ") + key);
  }
}

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), pixels_(static_cast<size_t>(w) * h * 3, 255) {}

  void fill_rect(double x0, double y0, double x1, double y1, Rgb c) {
    const int ix0 = std::max(0, static_cast<int>(std::floor(x0 + 0.5)));
    const int iy0 = std::max(0, static_cast<int>(std::floor(y0 + 0.5)));
    const int ix1 = std::min(w_, static_cast<int>(std::floor(x1 + 0.5)));
    const int iy1 = std::min(h_, static_cast<int>(std::floor(y1 + 0.5)));
    for (int y = iy0; y < iy1; ++y)
      for (int x = ix0; x < ix1; ++x) set(x, y, c);
  }

  // Pixels whose centers lie within half_width of segment a-b.
  void stroke_segment(Point a, Point b, double half_width, Rgb c) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - half_width)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - half_width)));
    const int x1 = std::min(w_ - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + half_width)));
    const int y1 = std::min(h_ - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + half_width)));
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        double u = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        const double ex = a.x + u * dx - px, ey = a.y + u * dy - py;
        if (ex * ex + ey * ey <= half_width * half_width) set(x, y, c);
      }
    }
  }

  int width() const { return w_; }
  int height() const { return h_; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

 private:
  void set(int x, int y, Rgb c) {
    auto* p = &pixels_[(static_cast<size_t>(y) * w_ + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  int w_, h_;
  std::vector<std::uint8_t> pixels_;
};

#if ROUTEPLAN_ENABLE_RASTER
inline void put_u32(std::string& out, std::uint32_t v) {
  out += static_cast<char>((v >> 24) & 0xff);
  out += static_cast<char>((v >> 16) & 0xff);
  out += static_cast<char>((v >> 8) & 0xff);
  out += static_cast<char>(v & 0xff);
}

inline void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body = std::string(type, 4) + data;
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0L, reinterpret_cast<const Bytef*>(body.data()), body.size())));
}

inline std::string encode_png(const Canvas& canvas) {
  const int w = canvas.width(), h = canvas.height();
  std::string raw;
  raw.reserve(static_cast<size_t>(h) * (w * 3 + 1));
  const auto& px = canvas.pixels();
  for (int y = 0; y < h; ++y) {
    raw += '\0';  // filter: none
    raw.append(reinterpret_cast<const char*>(&px[static_cast<size_t>(y) * w * 3]),
               static_cast<size_t>(w) * 3);
  }
  uLongf packed_size = compressBound(raw.size());
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
                reinterpret_cast<const Bytef*>(raw.data()), raw.size(), 6) != Z_OK) {
    throw std::runtime_error("zlib compression failed");
  }
  packed.resize(packed_size);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(w));
  put_u32(ihdr, static_cast<std::uint32_t>(h));
  ihdr += '\x08';  // bit depth
  ihdr += '\x02';  // truecolor RGB
  ihdr += std::string(3, '\0');
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", "");
  return png;
}
#endif

}  // namespace detail

/// Rasterizes an SVG produced by render_map to a PNG of exactly
/// width_px x height_px. Handles rect and polyline; text is skipped.
inline std::string rasterize(std::string_view svg, const RenderConfig& config) {
  if (!raster_supported()) throw RasterUnsupported("raster output disabled in this build");
  validate_config(config);
  const std::string doc(svg);
  static const std::regex element(R"(<(svg|rect|polyline)\b[^>]*>)");
  auto it = std::sregex_iterator(doc.begin(), doc.end(), element);
  if (it == std::sregex_iterator() || (*it)[1].str() != "svg") {
    throw ParseError("not an SVG document");
  }
  const auto root = detail::parse_attributes((*it)[0].str());
  const double svg_w = detail::attr_number(root, "width", 0.0);
  const double svg_h = detail::attr_number(root, "height", 0.0);
  if (!(svg_w > 0.0) || !(svg_h > 0.0)) throw ParseError("SVG root lacks width/height");
  const double sx = config.width_px / svg_w;
  const double sy = config.height_px / svg_h;

  detail::Canvas canvas(config.width_px, config.height_px);
  for (++it; it != std::sregex_iterator(); ++it) {
    const std::string tag = (*it)[1].str();
    const auto attrs = detail::parse_attributes((*it)[0].str());
    if (tag == "rect") {
      auto fill = attrs.count("fill") ? detail::parse_color(attrs.at("fill")) : std::nullopt;
      if (!fill) continue;
      const double x = detail::attr_number(attrs, "x", 0.0) * sx;
      const double y = detail::attr_number(attrs, "y", 0.0) * sy;
      canvas.fill_rect(x, y, x + detail::attr_number(attrs, "width", 0.0) * sx,
                       y + detail::attr_number(attrs, "height", 0.0) * sy, *fill);
    } else if (tag == "polyline") {
      auto stroke = attrs.count("stroke") ? detail::parse_color(attrs.at("stroke")) : std::nullopt;
      if (!stroke || !attrs.count("points")) continue;
      const double half = detail::attr_number(attrs, "stroke-width", 1.0) * (sx + sy) / 4.0;
      std::vector<Point> pts;
      std::string coords = attrs.at("points");
      std::replace(coords.begin(), coords.end(), ',', ' ');
      std::istringstream in(coords);
      double x = 0.0, y = 0.0;
      while (in >> x >> y) pts.push_back({x * sx, y * sy});
      for (size_t i = 1; i < pts.size(); ++i) {
        canvas.stroke_segment(pts[i - 1], pts[i], half, *stroke);
      }
    }
  }
#if ROUTEPLAN_ENABLE_RASTER
  return detail::encode_png(canvas);
#else
  return {};
#endif
}

}  // namespace routeplan

#endif  // ROUTEPLAN_RENDER_HPP_

#include <gtest/gtest.h>
#include <zlib.h>

#include <random>
#include <regex>

#include "routeplan/render.hpp"
#include "routeplan/sample_data.hpp"
#include "support/oracles.hpp"

namespace routeplan {
namespace {

const CivilTime kNoon = make_time(2026, 10, 13, 12, 0);

std::vector<std::string> polylines(const std::string& svg) {
  static const std::regex re(R"re(<polyline class="([^"]*)")re");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

std::string route_points(const std::string& svg) {
  static const std::regex re(R"re(<polyline class="route" points="([^"]*)")re");
  std::smatch m;
  if (!std::regex_search(svg, m, re)) return {};
  return m[1].str();
}

std::uint32_t be32(const std::string& s, size_t at) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + 3]));
}

struct DecodedPng {
  std::uint32_t width = 0, height = 0;
  std::vector<unsigned char> rows;  // filter byte + RGB per row

  std::array<unsigned char, 3> at(int x, int y) const {
    const size_t base = static_cast<size_t>(y) * (width * 3 + 1) + 1 + static_cast<size_t>(x) * 3;
    return {rows[base], rows[base + 1], rows[base + 2]};
  }
};

// Walks the chunk list, concatenates IDAT and inflates it.
DecodedPng decode(const std::string& png) {
  DecodedPng out;
  EXPECT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  std::string idat;
  for (size_t pos = 8; pos + 8 <= png.size();) {
    const std::uint32_t len = be32(png, pos);
    const std::string type = png.substr(pos + 4, 4);
    const std::string data = png.substr(pos + 8, len);
    const std::uint32_t crc = be32(png, pos + 8 + len);
    EXPECT_EQ(crc, crc32(0L, reinterpret_cast<const Bytef*>(png.data() + pos + 4), len + 4));
    if (type == "IHDR") {
      out.width = be32(data, 0);
      out.height = be32(data, 4);
    } else if (type == "IDAT") {
      idat += data;
    }
    pos += 12 + len;
  }
  out.rows.resize(static_cast<size_t>(out.height) * (out.width * 3 + 1));
  uLongf size = out.rows.size();
  EXPECT_EQ(uncompress(out.rows.data(), &size, reinterpret_cast<const Bytef*>(idat.data()), idat.size()), Z_OK);
  EXPECT_EQ(size, out.rows.size());
  return out;
}

TEST(ViewTransform, SquareWithDiagonalPixels) {
  const RoadNetwork net = sample::square_with_diagonal();
  const auto view = view_transform_for(net, RenderConfig{});
  // Extent padded to [-5, 105]^2, scale 480 / 110, centered in 640 x 480.
  const Point v1 = view.to_pixel({0, 0});
  EXPECT_NEAR(v1.x, 101.8181818, 1e-6);
  EXPECT_NEAR(v1.y, 458.1818182, 1e-6);
  const Point v3 = view.to_pixel({100, 100});
  EXPECT_NEAR(v3.x, 538.1818182, 1e-6);
  EXPECT_NEAR(v3.y, 21.8181818, 1e-6);
}

TEST(ViewTransform, RoundTripAndUniformScale) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  for (int i = 0; i < 100; ++i) {
    double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
    if (x0 == x1 || y0 == y1) continue;
    const Extent e{std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
    const auto t = make_view_transform(e, 300 + i, 200 + 2 * i);
    const Point p{u(rng), u(rng)};
    const Point back = t.to_world(t.to_pixel(p));
    EXPECT_NEAR(back.x, p.x, 1e-6);
    EXPECT_NEAR(back.y, p.y, 1e-6);
    // Corners land inside the viewport; at least one axis is filled exactly.
    const Point lo = t.to_pixel({e.min_x, e.min_y});
    const Point hi = t.to_pixel({e.max_x, e.max_y});
    EXPECT_GE(lo.x, -1e-6);
    EXPECT_LE(hi.x, t.width_px + 1e-6);
    EXPECT_GE(hi.y, -1e-6);
    EXPECT_LE(lo.y, t.height_px + 1e-6);
    const double dx = hi.x - lo.x, dy = lo.y - hi.y;
    EXPECT_NEAR(dx / dy, e.width() / e.height(), 1e-9 * (dx / dy));
    EXPECT_TRUE(std::abs(dx - t.width_px) < 1e-6 || std::abs(dy - t.height_px) < 1e-6);
  }
}

TEST(RenderMap, RoadsThenRouteOverlay) {
  const RoadNetwork net = sample::square_with_diagonal();
  const std::vector rules{testing::always_closed(1, 3)};
  const auto r = plan_route(net, rules, VertexId{1}, VertexId{3}, kNoon);
  const std::string svg = render_map(net, rules, kNoon, &r.path, RenderConfig{});
  EXPECT_EQ(polylines(svg),
            (std::vector<std::string>{"road", "road", "road closed", "road", "road", "route"}));
  EXPECT_EQ(route_points(svg), "101.82,458.18 538.18,458.18 538.18,21.82");
  EXPECT_LT(svg.find("class=\"vertex\""), svg.find("class=\"route\""));
  EXPECT_NE(svg.find("width=\"640\" height=\"480\""), std::string::npos);
}

TEST(RenderMap, OneWayClassAndLabels) {
  const RoadNetwork net = sample::square_with_diagonal();
  const std::vector rules{testing::always(1, 2, ConditionKind::kOneWayReverse)};
  RenderConfig config;
  config.label_roads = true;
  const std::string svg = render_map(net, rules, kNoon, nullptr, config);
  EXPECT_EQ(polylines(svg), (std::vector<std::string>{"road", "road oneway", "road", "road", "road"}));
  EXPECT_NE(svg.find(">Galle Road</text>"), std::string::npos);
}

TEST(RenderMap, Deterministic) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 20; ++i) {
    const RoadNetwork net = testing::random_network(rng, {.min_vertices = 3});
    const auto rules = testing::random_rules(rng, net, kNoon);
    const auto snap = build_snapshot(net, rules, kNoon);
    const auto path = shortest_path(snap, net.vertices().front().id, net.vertices().back().id);
    const RoutePath* p = path ? &*path : nullptr;
    const std::string a = render_map(net, rules, kNoon, p, RenderConfig{});
    EXPECT_EQ(a, render_map(net, rules, kNoon, p, RenderConfig{}));
    EXPECT_EQ(polylines(a).size(), net.segments().size() + (p && !p->arcs.empty() ? 1 : 0));
  }
}

TEST(RenderMap, ErrorCases) {
  const RoadNetwork net = sample::square_with_diagonal();
  EXPECT_THROW(render_map(RoadNetwork{}, {}, kNoon, nullptr, RenderConfig{}), EmptyNetwork);
  RoutePath bogus;
  bogus.vertices = {1, 9};
  bogus.arcs = {{77, 1, 9, 1.0, ArcDirection::kForward}};
  EXPECT_THROW(render_map(net, {}, kNoon, &bogus, RenderConfig{}), PathNotInNetwork);
  RenderConfig tiny;
  tiny.width_px = 8;
  EXPECT_THROW(render_map(net, {}, kNoon, nullptr, tiny), ValidationError);
  RenderConfig flat;
  flat.extent = Extent{0, 0, 10, 0};
  EXPECT_THROW(render_map(net, {}, kNoon, nullptr, flat), ValidationError);
}

TEST(RenderMap, SingleVertexNetwork) {
  const RoadNetwork net("x", {Vertex{1, 5, 5, std::nullopt}}, {});
  const std::string svg = render_map(net, {}, kNoon, nullptr, RenderConfig{});
  EXPECT_NE(svg.find("data-vertex=\"1\" x=\"317.50\" y=\"237.50\""), std::string::npos);
}

TEST(Rasterize, DimensionsPixelsAndDeterminism) {
  if (!raster_supported()) GTEST_SKIP() << "raster output disabled";
  const RoadNetwork net = sample::square_with_diagonal();
  const std::vector rules{testing::always_closed(1, 3)};
  const auto r = plan_route(net, rules, VertexId{1}, VertexId{3}, kNoon);
  RenderConfig config;
  const std::string svg = render_map(net, rules, kNoon, &r.path, config);
  const std::string png = rasterize(svg, config);
  EXPECT_EQ(png, rasterize(svg, config));
  const DecodedPng img = decode(png);
  EXPECT_EQ(img.width, 640u);
  EXPECT_EQ(img.height, 480u);
  // Route overlay drawn over the Galle Road midpoint; corner is background.
  EXPECT_EQ(img.at(320, 458), (std::array<unsigned char, 3>{0x1f, 0x5f, 0xbf}));
  EXPECT_EQ(img.at(2, 2), (std::array<unsigned char, 3>{0xff, 0xff, 0xff}));
}

TEST(Rasterize, ScalesToRequestedSize) {
  if (!raster_supported()) GTEST_SKIP() << "raster output disabled";
  const RoadNetwork net = sample::square_with_diagonal();
  RenderConfig config;
  const std::string svg = render_map(net, {}, kNoon, nullptr, config);
  RenderConfig half = config;
  half.width_px = 320;
  half.height_px = 240;
  const DecodedPng img = decode(rasterize(svg, half));
  EXPECT_EQ(img.width, 320u);
  EXPECT_EQ(img.height, 240u);
  EXPECT_THROW(rasterize("<html/>", config), ParseError);
}

}  // namespace
}  // namespace routeplan

#ifndef ROUTEPLAN_SERVICE_HPP_
#define ROUTEPLAN_SERVICE_HPP_

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "routeplan/accounts.hpp"
#include "routeplan/alerts.hpp"
#include "routeplan/civil_time.hpp"
#include "routeplan/conditions.hpp"
#include "routeplan/error.hpp"
#include "routeplan/network.hpp"
#include "routeplan/render.hpp"
#include "routeplan/routing.hpp"

namespace routeplan {

namespace fs = std::filesystem;

struct AdminSeed {
  std::string username;
  std::string password_digest;
};

struct ServiceConfig {
  std::string listen_address = "127.0.0.1";
  int port = 8080;
  std::optional<fs::path> data_dir;  // nullopt keeps everything in memory
  std::optional<fs::path> network_file;
  RoutingMode default_mode = RoutingMode::kStrict;
  double penalty_factor = 1e6;
  RenderConfig render;
  std::optional<fs::path> admin_bootstrap;
  std::vector<AdminSeed> admin_users;
  bool alert_on_improvement = true;
  std::chrono::seconds session_ttl = std::chrono::hours{12};
  std::optional<fs::path> outbox_dir;  // defaults to <data_dir>/outbox
};

namespace detail {

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Write-then-rename so readers never see a partial file.
inline void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::vector<AdminSeed> admin_seeds_from_json(const nlohmann::json& j) {
  std::vector<AdminSeed> seeds;
  const auto& list = require(j, "admin_users", "admin bootstrap");
  if (!list.is_array()) throw ParseError("admin_users must be an array");
  for (const auto& a : list) {
    reject_unknown_keys(a, {"username", "password_digest"}, "admin user");
    seeds.push_back({get_as<std::string>(require(a, "username", "admin user"), "username"),
                     get_as<std::string>(require(a, "password_digest", "admin user"),
                                         "password_digest")});
  }
  return seeds;
}

}  // namespace detail

/// Parses a service config document. Relative paths resolve against `base`.
inline ServiceConfig service_config_from_json(const nlohmann::json& j, const fs::path& base = {}) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  detail::reject_unknown_keys(
      j,
      {"listen_address", "port", "data_dir", "network_file", "mode", "penalty_factor", "render",
       "admin_bootstrap", "admin_users", "alert_on_improvement", "session_ttl_minutes",
       "outbox_dir"},
      "config");
  auto path_of = [&base](const nlohmann::json& v, const char* key) {
    fs::path p = detail::get_as<std::string>(v, key);
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  ServiceConfig c;
  if (auto it = j.find("listen_address"); it != j.end()) c.listen_address = detail::get_as<std::string>(*it, "listen_address");
  if (auto it = j.find("port"); it != j.end()) c.port = detail::get_as<int>(*it, "port");
  if (c.port < 0 || c.port > 65535) throw ValidationError("port out of range");
  if (auto it = j.find("data_dir"); it != j.end()) c.data_dir = path_of(*it, "data_dir");
  if (auto it = j.find("network_file"); it != j.end()) c.network_file = path_of(*it, "network_file");
  if (auto it = j.find("mode"); it != j.end()) c.default_mode = routing_mode_from_string(detail::get_as<std::string>(*it, "mode"));
  if (auto it = j.find("penalty_factor"); it != j.end()) {
    c.penalty_factor = detail::get_as<double>(*it, "penalty_factor");
    if (!(c.penalty_factor > 1.0)) throw ValidationError("penalty_factor must be > 1");
  }
  if (auto it = j.find("render"); it != j.end()) {
    detail::reject_unknown_keys(*it, {"width_px", "height_px", "label_roads"}, "render");
    if (auto w = it->find("width_px"); w != it->end()) c.render.width_px = detail::get_as<int>(*w, "width_px");
    if (auto h = it->find("height_px"); h != it->end()) c.render.height_px = detail::get_as<int>(*h, "height_px");
    if (auto l = it->find("label_roads"); l != it->end()) c.render.label_roads = l->get<bool>();
    validate_config(c.render);
  }
  if (auto it = j.find("admin_bootstrap"); it != j.end()) c.admin_bootstrap = path_of(*it, "admin_bootstrap");
  if (auto it = j.find("admin_users"); it != j.end()) {
    c.admin_users = detail::admin_seeds_from_json({{"admin_users", *it}});
  }
  if (auto it = j.find("alert_on_improvement"); it != j.end()) c.alert_on_improvement = it->get<bool>();
  if (auto it = j.find("session_ttl_minutes"); it != j.end()) {
    c.session_ttl = std::chrono::minutes{detail::get_as<int>(*it, "session_ttl_minutes")};
  }
  if (auto it = j.find("outbox_dir"); it != j.end()) c.outbox_dir = path_of(*it, "outbox_dir");
  return c;
}

inline ServiceConfig load_service_config(const fs::path& file) {
  return service_config_from_json(detail::parse_json(detail::read_file(file)),
                                  fs::absolute(file).parent_path());
}

struct HttpRequest {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> headers;  // lower-case names

  std::optional<std::string> header(std::string name) const {
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    auto it = headers.find(name);
    if (it == headers.end()) return std::nullopt;
    return it->second;
  }
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// The network and rules one request observes. Mutations publish a new
/// generation; readers keep whichever one they started with.
struct Generation {
  std::shared_ptr<const RoadNetwork> network;
  std::shared_ptr<const std::vector<ConditionRule>> rules;
  std::uint64_t number = 0;
};

struct RouteQuery {
  Endpoint origin;
  Endpoint destination;
  std::optional<CivilTime> when;
  std::optional<RoutingMode> mode;
  bool compact = false;
};

inline RouteQuery route_query_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("route request must be a JSON object");
  detail::reject_unknown_keys(j, {"origin", "destination", "when", "mode", "compact"}, "route request");
  RouteQuery q;
  q.origin = endpoint_from_json(detail::require(j, "origin", "route request"), "origin");
  q.destination = endpoint_from_json(detail::require(j, "destination", "route request"), "destination");
  if (auto it = j.find("when"); it != j.end() && !it->is_null()) {
    q.when = parse_iso(detail::get_as<std::string>(*it, "when"));
  }
  if (auto it = j.find("mode"); it != j.end() && !it->is_null()) {
    q.mode = routing_mode_from_string(detail::get_as<std::string>(*it, "mode"));
  }
  if (auto it = j.find("compact"); it != j.end()) {
    if (!it->is_boolean()) throw ParseError("compact must be a boolean");
    q.compact = it->get<bool>();
  }
  return q;
}

struct MutationOutcome {
  ConditionRule rule;
  std::uint64_t generation = 0;
  size_t affected_trips = 0;
  size_t notifications = 0;
};

/// Binds network, rules, accounts, alerts and rendering behind one API.
class RouteService {
 public:
  using Clock = std::function<CivilTime()>;

  static constexpr size_t kStoredRoutes = 256;

  explicit RouteService(ServiceConfig config, Clock clock = local_now,
                        std::ostream& console = std::cout)
      : config_(std::move(config)),
        clock_(std::move(clock)),
        accounts_(config_.data_dir, config_.session_ttl),
        alerts_(make_channels(config_, console),
                config_.data_dir ? std::optional<fs::path>(*config_.data_dir / "alerts.jsonl")
                                 : std::nullopt,
                AlertOptions{0.005, config_.alert_on_improvement,
                             {config_.default_mode, config_.penalty_factor}}) {
    RoadNetwork network;
    if (config_.network_file) {
      network = ingest_network(detail::read_file(*config_.network_file));
    } else if (config_.data_dir && fs::exists(*config_.data_dir / "network.json")) {
      network = ingest_network(detail::read_file(*config_.data_dir / "network.json"));
    }
    std::vector<ConditionRule> rules;
    std::uint64_t generation = 0;
    if (config_.data_dir) {
      if (fs::exists(rules_path())) rules = parse_rules(detail::read_file(rules_path()));
      if (fs::exists(state_path())) {
        generation = detail::parse_json(detail::read_file(state_path())).value("generation", 0ull);
      }
    }
    for (const auto& r : rules) validate_rule(r, network);
    current_ = {std::make_shared<const RoadNetwork>(std::move(network)),
                std::make_shared<const std::vector<ConditionRule>>(std::move(rules)), generation};

    std::vector<AdminSeed> seeds = config_.admin_users;
    if (config_.admin_bootstrap) {
      auto more = detail::admin_seeds_from_json(
          detail::parse_json(detail::read_file(*config_.admin_bootstrap)));
      seeds.insert(seeds.end(), more.begin(), more.end());
    }
    for (const auto& s : seeds) accounts_.ensure_admin(s.username, s.password_digest);
  }

  const ServiceConfig& config() const { return config_; }
  CivilTime now() const { return clock_(); }
  AccountStore& accounts() { return accounts_; }
  const AlertEngine& alerts() const { return alerts_; }

  Generation current() const {
    std::lock_guard lock(state_mutex_);
    return current_;
  }

  // Network ------------------------------------------------------------------

  /// Replaces the whole network. Existing rules must still reference
  /// existing segments.
  std::uint64_t install_network(RoadNetwork network) {
    std::lock_guard writer(writer_mutex_);
    const Generation gen = current();
    for (const auto& r : *gen.rules) validate_rule(r, network);
    if (config_.data_dir) {
      detail::write_file_atomic(*config_.data_dir / "network.json", serialize_network(network));
    }
    return publish(std::make_shared<const RoadNetwork>(std::move(network)), gen.rules);
  }

  // Rules ----------------------------------------------------------------------

  std::vector<ConditionRule> rules() const { return *current().rules; }

  MutationOutcome add_rule(const Session& actor, const ConditionRule& rule) {
    require_admin(actor);
    std::lock_guard writer(writer_mutex_);
    const Generation gen = current();
    validate_rule(rule, *gen.network);
    auto next = *gen.rules;
    if (std::any_of(next.begin(), next.end(), [&](const auto& r) { return r.id == rule.id; })) {
      throw ValidationError("rule " + std::to_string(rule.id) + " already exists");
    }
    next.push_back(rule);
    return commit(actor, ChangeKind::kCreated, rule, gen, std::move(next));
  }

  MutationOutcome update_rule(const Session& actor, const ConditionRule& rule) {
    require_admin(actor);
    std::lock_guard writer(writer_mutex_);
    const Generation gen = current();
    validate_rule(rule, *gen.network);
    auto next = *gen.rules;
    auto it = std::find_if(next.begin(), next.end(), [&](const auto& r) { return r.id == rule.id; });
    if (it == next.end()) throw NotFound("unknown rule " + std::to_string(rule.id));
    *it = rule;
    return commit(actor, ChangeKind::kUpdated, rule, gen, std::move(next));
  }

  MutationOutcome delete_rule(const Session& actor, RuleId id) {
    require_admin(actor);
    std::lock_guard writer(writer_mutex_);
    const Generation gen = current();
    auto next = *gen.rules;
    auto it = std::find_if(next.begin(), next.end(), [&](const auto& r) { return r.id == id; });
    if (it == next.end()) throw NotFound("unknown rule " + std::to_string(id));
    const ConditionRule removed = *it;
    next.erase(it);
    return commit(actor, ChangeKind::kDeleted, removed, gen, std::move(next));
  }

  // Routing ----------------------------------------------------------------------

  struct RouteAnswer {
    RouteResult result;
    std::string route_id;
    std::uint64_t generation = 0;
  };

  RouteAnswer route(const Session* session, const RouteQuery& query) {
    const CivilTime t = authorize_query(session, query.when, now());
    const Generation gen = current();
    SnapshotOptions options{query.mode.value_or(config_.default_mode), config_.penalty_factor};
    RouteResult result =
        plan_route(*gen.network, *gen.rules, query.origin, query.destination, t, options);
    std::lock_guard lock(routes_mutex_);
    const std::string id = "r" + std::to_string(++route_counter_);
    stored_routes_.emplace_back(id, StoredRoute{gen, result});
    if (stored_routes_.size() > kStoredRoutes) stored_routes_.pop_front();
    return {std::move(result), id, gen.number};
  }

  /// SVG for a previously computed route, drawn against the generation the
  /// route was planned on. "network" renders the bare network at now.
  std::string map_svg(const std::string& route_id) const {
    if (route_id == "network") {
      const Generation gen = current();
      return render_map(*gen.network, *gen.rules, now(), nullptr, config_.render);
    }
    std::lock_guard lock(routes_mutex_);
    for (const auto& [id, stored] : stored_routes_) {
      if (id == route_id) {
        return render_map(*stored.generation.network, *stored.generation.rules,
                          stored.result.instant(), &stored.result.path, config_.render);
      }
    }
    throw NotFound("unknown map " + route_id);
  }

  // Trips ------------------------------------------------------------------------

  PlannedTrip create_trip(const Session* session, const TripRequest& request) {
    const Generation gen = current();
    SnapshotOptions options{config_.default_mode, config_.penalty_factor};
    return accounts_.create_trip(
        session, request, now(), [&](const Endpoint& o, const Endpoint& d, CivilTime t) {
          return plan_route(*gen.network, *gen.rules, o, d, t, options);
        });
  }

  // HTTP -------------------------------------------------------------------------

  HttpResponse handle(const HttpRequest& request) {
    try {
      return dispatch_request(request);
    } catch (const ParseError& e) {
      return error(400, "BAD_REQUEST", e.what());
    } catch (const Unauthorized& e) {
      return error(401, "UNAUTHORIZED", e.what());
    } catch (const SessionExpired& e) {
      return error(401, "SESSION_EXPIRED", e.what());
    } catch (const Forbidden& e) {
      return error(403, e.code(), e.what());
    } catch (const NoRoute& e) {
      return error(404, "NO_ROUTE", e.what());
    } catch (const NotFound& e) {
      return error(404, "NOT_FOUND", e.what());
    } catch (const DuplicateUsername& e) {
      return error(409, "DUPLICATE_USERNAME", e.what());
    } catch (const WeakPassword& e) {
      return error(422, "WEAK_PASSWORD", e.what());
    } catch (const UnknownVertex& e) {
      return error(422, "UNKNOWN_VERTEX", e.what());
    } catch (const UnknownChannel& e) {
      return error(422, "UNKNOWN_CHANNEL", e.what());
    } catch (const ValidationError& e) {
      return error(422, "VALIDATION_ERROR", e.what());
    } catch (const EmptyNetwork& e) {
      return error(503, "EMPTY_NETWORK", e.what());
    } catch (const RasterUnsupported& e) {
      return error(501, "RASTER_UNSUPPORTED", e.what());
    } catch (const std::exception& e) {
      return error(500, "INTERNAL", e.what());
    }
  }

  /// Routes every /api request of `server` through handle().
  void bind(httplib::Server& server) {
    auto adapter = [this](const httplib::Request& req, httplib::Response& res) {
      HttpRequest r;
      r.method = req.method;
      r.path = req.path;
      r.body = req.body;
      for (const auto& [name, value] : req.headers) {
        std::string lower = name;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        r.headers[lower] = value;
      }
      const HttpResponse out = handle(r);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
    const std::string pattern = R"(/api/.*)";
    server.Get(pattern, adapter);
    server.Post(pattern, adapter);
    server.Put(pattern, adapter);
    server.Patch(pattern, adapter);
    server.Delete(pattern, adapter);
  }

 private:
  struct StoredRoute {
    Generation generation;
    RouteResult result;
  };

  static ChannelRegistry make_channels(const ServiceConfig& config, std::ostream& console) {
    ChannelRegistry channels;
    channels.add(Channel::kConsole, std::make_shared<ConsoleChannel>(console));
    std::optional<fs::path> outbox = config.outbox_dir;
    if (!outbox && config.data_dir) outbox = *config.data_dir / "outbox";
    if (outbox) {
      auto adapter = std::make_shared<OutboxChannel>(*outbox);
      channels.add(Channel::kEmail, adapter);
      channels.add(Channel::kSms, adapter);
    }
    return channels;
  }

  fs::path rules_path() const { return *config_.data_dir / "rules.json"; }
  fs::path state_path() const { return *config_.data_dir / "state.json"; }

  static void require_admin(const Session& actor) {
    if (actor.role != Role::kAdmin) {
      throw Forbidden("ADMIN_REQUIRED", "rule changes require an administrator");
    }
  }

  std::uint64_t publish(std::shared_ptr<const RoadNetwork> network,
                        std::shared_ptr<const std::vector<ConditionRule>> rules) {
    std::lock_guard lock(state_mutex_);
    current_ = {std::move(network), std::move(rules), current_.number + 1};
    if (config_.data_dir) {
      detail::write_file_atomic(state_path(),
                                nlohmann::json{{"generation", current_.number}}.dump());
    }
    return current_.number;
  }

  // Caller holds writer_mutex_.
  MutationOutcome commit(const Session& actor, ChangeKind change, const ConditionRule& rule,
                         const Generation& before, std::vector<ConditionRule> next) {
    if (config_.data_dir) detail::write_file_atomic(rules_path(), serialize_rules(next));
    auto rules = std::make_shared<const std::vector<ConditionRule>>(std::move(next));
    const std::uint64_t number = publish(before.network, rules);

    RuleChangeEvent event{static_cast<EventId>(number), change, rule, now(), actor.user_id};
    const auto trips = accounts_.all_trips();
    auto outcome = alerts_.process(event, trips, *before.network, *rules, event.at,
                                   [this](const PlannedTrip& trip, Channel channel) {
                                     const UserAccount u = accounts_.user(trip.owner);
                                     return channel == Channel::kSms ? u.phone : u.email;
                                   });
    for (const auto& r : outcome.affected) accounts_.update_trip_result(r.trip.id, r.new_result);
    return {rule, number, outcome.affected.size(), outcome.notifications.size()};
  }

  static HttpResponse json_response(int status, const nlohmann::json& body) {
    return {status, "application/json", body.dump()};
  }

  static HttpResponse error(int status, std::string_view code, std::string_view message) {
    return json_response(status, {{"error", code}, {"message", message}});
  }

  /// Anonymous when no Authorization header; a bad or stale token is an error.
  std::optional<Session> session_of(const HttpRequest& request) const {
    auto auth = request.header("authorization");
    if (!auth) return std::nullopt;
    constexpr std::string_view kBearer = "Bearer ";
    if (!std::string_view(*auth).starts_with(kBearer)) {
      throw Unauthorized("expected a bearer token");
    }
    return accounts_.session(std::string_view(*auth).substr(kBearer.size()), now());
  }

  Session require_session(const HttpRequest& request) const {
    auto s = session_of(request);
    if (!s) throw Unauthorized("login required");
    return *s;
  }

  Session require_admin_session(const HttpRequest& request) const {
    auto s = session_of(request);
    if (!s || s->role != Role::kAdmin) {
      throw Forbidden("ADMIN_REQUIRED", "rule changes require an administrator");
    }
    return *s;
  }

  static nlohmann::json body_json(const HttpRequest& request) {
    return detail::parse_json(request.body.empty() ? "{}" : request.body);
  }

  static std::optional<std::int64_t> trailing_id(std::string_view path, std::string_view prefix) {
    if (!path.starts_with(prefix)) return std::nullopt;
    const std::string rest(path.substr(prefix.size()));
    if (rest.empty() || !std::all_of(rest.begin(), rest.end(), ::isdigit)) {
      throw NotFound("no resource at " + std::string(path));
    }
    return std::stoll(rest);
  }

  static nlohmann::json mutation_json(const MutationOutcome& m) {
    return {{"rule", to_json(m.rule)},
            {"generation", m.generation},
            {"alerts", {{"affected_trips", m.affected_trips}, {"notifications", m.notifications}}}};
  }

  HttpResponse dispatch_request(const HttpRequest& req) {
    const std::string& m = req.method;
    const std::string& p = req.path;

    if (p == "/api/route" && m == "POST") {
      const RouteQuery q = route_query_from_json(body_json(req));
      const auto session = session_of(req);
      RouteAnswer answer = route(session ? &*session : nullptr, q);
      nlohmann::json body = to_json(answer.result);
      if (q.compact) body.erase("steps");
      body["map_url"] = "/api/maps/" + answer.route_id + ".svg";
      return json_response(200, body);
    }
    if (p == "/api/network" && m == "GET") {
      const Generation gen = current();
      nlohmann::json body = to_json(*gen.network);
      if (!gen.network->empty()) {
        const Extent e = network_extent(*gen.network);
        body["extent"] = {e.min_x, e.min_y, e.max_x, e.max_y};
      }
      body["generation"] = gen.number;
      return json_response(200, body);
    }
    if (p.starts_with("/api/maps/") && m == "GET") {
      std::string name = p.substr(std::string_view("/api/maps/").size());
      if (name.ends_with(".svg")) {
        return {200, "image/svg+xml", map_svg(name.substr(0, name.size() - 4))};
      }
      if (name.ends_with(".png")) {
        return {200, "image/png",
                rasterize(map_svg(name.substr(0, name.size() - 4)), config_.render)};
      }
      throw NotFound("unknown map " + name);
    }
    if (p == "/api/users" && m == "POST") {
      const auto j = body_json(req);
      detail::reject_unknown_keys(j, {"username", "password", "full_name", "email", "phone",
                                      "address", "closest_city"},
                                  "registration");
      Profile profile;
      profile.username = detail::get_as<std::string>(detail::require(j, "username", "registration"), "username");
      const auto password = detail::get_as<std::string>(detail::require(j, "password", "registration"), "password");
      profile.full_name = j.value("full_name", "");
      profile.email = j.value("email", "");
      profile.phone = j.value("phone", "");
      profile.address = j.value("address", "");
      profile.closest_city = j.value("closest_city", "");
      return json_response(201, to_json(accounts_.register_user(profile, password)));
    }
    if (p == "/api/sessions" && m == "POST") {
      const auto j = body_json(req);
      detail::reject_unknown_keys(j, {"username", "password"}, "login");
      const Session s = accounts_.login(
          detail::get_as<std::string>(detail::require(j, "username", "login"), "username"),
          detail::get_as<std::string>(detail::require(j, "password", "login"), "password"), now());
      return json_response(201, {{"token", s.token},
                                 {"user_id", s.user_id},
                                 {"role", to_string(s.role)},
                                 {"expires_at", format_iso(s.expires_at)}});
    }
    if (p == "/api/users/me") {
      const Session s = require_session(req);
      if (m == "GET") return json_response(200, to_json(accounts_.user(s.user_id)));
      if (m == "PATCH") {
        const auto update = profile_update_from_json(body_json(req));
        return json_response(200, to_json(accounts_.update_profile(s, update, now())));
      }
    }
    if (p == "/api/rules") {
      if (m == "GET") {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& r : *current().rules) list.push_back(to_json(r));
        return json_response(200, list);
      }
      if (m == "POST") {
        const Session s = require_admin_session(req);
        return json_response(201, mutation_json(add_rule(s, rule_from_json(body_json(req)))));
      }
    }
    if (auto id = trailing_id(p, "/api/rules/")) {
      if (m == "GET") {
        for (const auto& r : *current().rules) {
          if (r.id == *id) return json_response(200, to_json(r));
        }
        throw NotFound("unknown rule " + std::to_string(*id));
      }
      if (m == "PUT") {
        const Session s = require_admin_session(req);
        ConditionRule rule = rule_from_json(body_json(req));
        if (rule.id != *id) throw ValidationError("rule id does not match the URL");
        return json_response(200, mutation_json(update_rule(s, rule)));
      }
      if (m == "DELETE") {
        const Session s = require_admin_session(req);
        return json_response(200, mutation_json(delete_rule(s, *id)));
      }
    }
    if (p == "/api/trips") {
      const auto session = session_of(req);
      if (m == "POST") {
        const TripRequest request = trip_request_from_json(body_json(req));
        return json_response(201, to_json(create_trip(session ? &*session : nullptr, request)));
      }
      if (m == "GET") {
        if (!session) throw Unauthorized("login required");
        nlohmann::json list = nlohmann::json::array();
        for (const auto& t : accounts_.trips_of(session->user_id)) list.push_back(to_json(t));
        return json_response(200, list);
      }
    }
    if (auto id = trailing_id(p, "/api/trips/")) {
      const Session s = require_session(req);
      if (m == "GET") return json_response(200, to_json(accounts_.trip(s.user_id, *id)));
      if (m == "DELETE") {
        accounts_.delete_trip(s.user_id, *id);
        return json_response(200, {{"deleted", *id}});
      }
    }
    if (p == "/api/alerts" && m == "GET") {
      const Session s = require_session(req);
      nlohmann::json list = nlohmann::json::array();
      for (const auto& n : alerts_.notifications_for(s.user_id)) list.push_back(to_json(n));
      return json_response(200, list);
    }
    throw NotFound("no endpoint " + m + " " + p);
  }

  ServiceConfig config_;
  Clock clock_;
  AccountStore accounts_;
  AlertEngine alerts_;

  mutable std::mutex state_mutex_;
  std::mutex writer_mutex_;
  Generation current_;

  mutable std::mutex routes_mutex_;
  std::deque<std::pair<std::string, StoredRoute>> stored_routes_;
  std::uint64_t route_counter_ = 0;
};

}  // namespace routeplan

#endif  // ROUTEPLAN_SERVICE_HPP_

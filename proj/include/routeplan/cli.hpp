#ifndef ROUTEPLAN_CLI_HPP_
#define ROUTEPLAN_CLI_HPP_

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "routeplan/conditions.hpp"
#include "routeplan/network.hpp"
#include "routeplan/routing.hpp"
#include "routeplan/sample_data.hpp"
#include "routeplan/service.hpp"

namespace routeplan {

namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitInternal = 2;

inline Point parse_point(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ParseError("expected X,Y but got '" + text + "'");
  try {
    size_t used_x = 0, used_y = 0;
    const std::string xs = text.substr(0, comma), ys = text.substr(comma + 1);
    const double x = std::stod(xs, &used_x);
    const double y = std::stod(ys, &used_y);
    if (used_x != xs.size() || used_y != ys.size() || !std::isfinite(x) || !std::isfinite(y)) {
      throw ParseError("");
    }
    return {x, y};
  } catch (const std::exception&) {
    throw ParseError("expected X,Y but got '" + text + "'");
  }
}

inline std::optional<std::filesystem::path> resolve_data_dir(const std::string& flag) {
  if (!flag.empty()) return std::filesystem::path(flag);
  if (const char* env = std::getenv("ROUTE_DATA_DIR"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return std::nullopt;
}

/// Local operator acting through the CLI; holds administrator rights.
inline Session operator_session() { return {"", 0, Role::kAdmin, CivilTime::max()}; }

struct DemoCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Scripted scenario on the square-with-diagonal network: one-way
/// asymmetry in both modes and a time-dependent congestion window.
inline std::vector<DemoCheck> run_demo() {
  std::vector<DemoCheck> checks;
  const RoadNetwork net = sample::square_with_diagonal();
  constexpr double kTol = 1e-3;
  const CivilTime long_ago = make_time(2000, 1, 1);

  ConditionRule one_way;
  one_way.id = 1;
  one_way.segment_id = 3;
  one_way.kind = ConditionKind::kOneWayForward;
  one_way.schedule = AbsoluteSchedule{long_ago, std::nullopt};
  const std::vector<ConditionRule> one_way_rules{one_way};
  const CivilTime t = make_time(2026, 10, 13, 12, 0);

  const SnapshotOptions strict{RoutingMode::kStrict, 1e6};
  const SnapshotOptions faithful{RoutingMode::kFaithful, 1e6};
  const auto fwd = plan_route(net, one_way_rules, VertexId{1}, VertexId{3}, t, strict);
  const auto rev = plan_route(net, one_way_rules, VertexId{3}, VertexId{1}, t, strict);
  const auto fwd_f = plan_route(net, one_way_rules, VertexId{1}, VertexId{3}, t, faithful);
  const auto rev_f = plan_route(net, one_way_rules, VertexId{3}, VertexId{1}, t, faithful);
  checks.push_back({"one-way forward cost V1->V3 = 141.4214",
                    std::abs(fwd.cost() - 141.4214) <= kTol,
                    "cost " + std::to_string(fwd.cost())});
  checks.push_back({"one-way reverse cost V3->V1 = 200.0", std::abs(rev.cost() - 200.0) <= kTol,
                    "cost " + std::to_string(rev.cost())});
  checks.push_back({"faithful mode matches strict arc sequences",
                    fwd_f.path.arcs.size() == fwd.path.arcs.size() &&
                        fwd_f.path.segment_ids() == fwd.path.segment_ids() &&
                        rev_f.path.segment_ids() == rev.path.segment_ids(),
                    ""});

  ConditionRule rush;
  rush.id = 2;
  rush.segment_id = 3;
  rush.kind = ConditionKind::kCongestion;
  rush.multiplier = 3.0;
  WeeklySchedule weekdays;
  for (int d = 0; d < 5; ++d) weekdays.weekdays.set(d);
  weekdays.start_minute = 7 * 60;
  weekdays.end_minute = 9 * 60 + 30;
  rush.schedule = weekdays;
  const std::vector<ConditionRule> rush_rules{rush};
  const CivilTime tuesday_8 = make_time(2026, 10, 13, 8, 0);
  const CivilTime tuesday_12 = make_time(2026, 10, 13, 12, 0);
  const auto peak = plan_route(net, rush_rules, VertexId{1}, VertexId{3}, tuesday_8);
  const auto midday = plan_route(net, rush_rules, VertexId{1}, VertexId{3}, tuesday_12);
  checks.push_back({"peak-hour congestion routes around the diagonal at 08:00",
                    peak.path.segment_ids() == std::vector<SegmentId>{1, 2},
                    "cost " + std::to_string(peak.cost())});
  checks.push_back({"diagonal is used again at 12:00",
                    midday.path.segment_ids() == std::vector<SegmentId>{3},
                    "cost " + std::to_string(midday.cost())});
  return checks;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-aware road route planner"};
  app.require_subcommand(1);
  std::string data_dir_flag;
  app.add_option("--data-dir", data_dir_flag, "Data directory (default: $ROUTE_DATA_DIR)");

  auto* ingest = app.add_subcommand("ingest", "Validate a network file and install it");
  std::string ingest_file;
  ingest->add_option("file", ingest_file, "Network JSON file")->required();

  auto* route = app.add_subcommand("route", "Plan a route and print it as JSON");
  std::string from, to, at, mode = "strict", as_user, password, network_file;
  route->add_option("--from", from, "Origin X,Y in meters")->required();
  route->add_option("--to", to, "Destination X,Y in meters")->required();
  route->add_option("--at", at, "Departure instant YYYY-MM-DDTHH:MM[:SS]");
  route->add_option("--mode", mode, "strict or faithful")->check(CLI::IsMember({"strict", "faithful"}));
  route->add_option("--as-user", as_user, "Username (required for --at)");
  route->add_option("--password", password, "Password for --as-user");
  route->add_option("--network", network_file, "Network file (default: installed network)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string config_file;
  serve->add_option("--config", config_file, "Service config (default: $ROUTE_CONFIG)");

  auto* rule = app.add_subcommand("rule", "Manage condition rules");
  rule->require_subcommand(1);
  auto* rule_add = rule->add_subcommand("add", "Add a rule from a JSON file");
  std::string rule_file;
  rule_add->add_option("file", rule_file, "Rule JSON document")->required();
  auto* rule_rm = rule->add_subcommand("rm", "Remove a rule by id");
  RuleId rule_id = 0;
  rule_rm->add_option("id", rule_id, "Rule id")->required();
  auto* rule_list = rule->add_subcommand("list", "Print all rules");

  auto* demo = app.add_subcommand("demo", "Run the scripted sample scenario");

  auto* digest = app.add_subcommand("digest", "Print a credential digest for admin bootstrap");
  std::string digest_password;
  digest->add_option("password", digest_password)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUser;
  }

  try {
    const auto data_dir = resolve_data_dir(data_dir_flag);
    auto open_service = [&](std::optional<std::filesystem::path> network) {
      ServiceConfig config;
      config.data_dir = data_dir;
      config.network_file = std::move(network);
      return std::make_unique<RouteService>(config, local_now, out);
    };

    if (*ingest) {
      RoadNetwork network = ingest_network(detail::read_file(ingest_file));
      out << "valid network: " << network.vertices().size() << " vertices, "
          << network.segments().size() << " segments\n";
      if (data_dir) {
        const auto generation = open_service(std::nullopt)->install_network(std::move(network));
        out << "installed into " << data_dir->string() << " (generation " << generation << ")\n";
      }
      return kExitOk;
    }
    if (*route) {
      auto service = open_service(network_file.empty()
                                      ? std::nullopt
                                      : std::optional<std::filesystem::path>(network_file));
      std::optional<Session> session;
      if (!as_user.empty()) session = service->accounts().login(as_user, password, service->now());
      RouteQuery q;
      q.origin = parse_point(from);
      q.destination = parse_point(to);
      if (!at.empty()) q.when = parse_iso(at);
      q.mode = routing_mode_from_string(mode);
      const auto answer = service->route(session ? &*session : nullptr, q);
      out << to_json(answer.result).dump(2) << "\n";
      return kExitOk;
    }
    if (*serve) {
      if (config_file.empty()) {
        if (const char* env = std::getenv("ROUTE_CONFIG"); env != nullptr) config_file = env;
      }
      if (config_file.empty()) throw ValidationError("serve needs --config or ROUTE_CONFIG");
      ServiceConfig config = load_service_config(config_file);
      if (data_dir) config.data_dir = data_dir;
      RouteService service(config, local_now, out);
      httplib::Server server;
      service.bind(server);
      out << "listening on " << config.listen_address << ":" << config.port << "\n";
      out.flush();
      if (!server.listen(config.listen_address, config.port)) {
        err << "error: cannot listen on " << config.listen_address << ":" << config.port << "\n";
        return kExitInternal;
      }
      return kExitOk;
    }
    if (*rule) {
      auto service = open_service(std::nullopt);
      if (*rule_add) {
        const auto m = service->add_rule(operator_session(), parse_rule(detail::read_file(rule_file)));
        out << "added rule " << m.rule.id << " (generation " << m.generation << ", "
            << m.affected_trips << " trips affected, " << m.notifications << " alerts)\n";
      } else if (*rule_rm) {
        const auto m = service->delete_rule(operator_session(), rule_id);
        out << "removed rule " << m.rule.id << " (generation " << m.generation << ", "
            << m.affected_trips << " trips affected, " << m.notifications << " alerts)\n";
      } else if (*rule_list) {
        out << serialize_rules(service->rules()) << "\n";
      }
      return kExitOk;
    }
    if (*demo) {
      bool all = true;
      for (const auto& check : run_demo()) {
        all = all && check.passed;
        out << (check.passed ? "PASS " : "FAIL ") << check.name;
        if (!check.detail.empty()) out << " [" << check.detail << "]";
        out << "\n";
      }
      return all ? kExitOk : kExitUser;
    }
    if (*digest) {
      if (digest_password.size() < kMinPasswordLength) {
        throw WeakPassword("password must have at least 8 characters");
      }
      out << make_credential_digest(digest_password) << "\n";
      return kExitOk;
    }
  } catch (const NoRoute& e) {
    err << "no route: " << e.what() << "\n";
    return kExitUser;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUser;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUser;
}

}  // namespace cli

}  // namespace routeplan

#endif  // ROUTEPLAN_CLI_HPP_

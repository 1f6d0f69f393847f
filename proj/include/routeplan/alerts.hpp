#ifndef ROUTEPLAN_ALERTS_HPP_
#define ROUTEPLAN_ALERTS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "routeplan/accounts.hpp"
#include "routeplan/civil_time.hpp"
#include "routeplan/conditions.hpp"
#include "routeplan/error.hpp"
#include "routeplan/network.hpp"
#include "routeplan/routing.hpp"

namespace routeplan {

using EventId = std::int64_t;
using NotificationId = std::int64_t;

enum class ChangeKind { kCreated, kUpdated, kDeleted };

inline std::string_view to_string(ChangeKind c) {
  switch (c) {
    case ChangeKind::kCreated: return "CREATED";
    case ChangeKind::kUpdated: return "UPDATED";
    case ChangeKind::kDeleted: return "DELETED";
  }
  return "?";
}

struct RuleChangeEvent {
  EventId id = 0;
  ChangeKind change = ChangeKind::kCreated;
  ConditionRule rule;
  CivilTime at{};
  UserId actor = 0;
};

enum class DeliveryState { kPending, kSent, kFailed };

inline std::string_view to_string(DeliveryState s) {
  switch (s) {
    case DeliveryState::kPending: return "PENDING";
    case DeliveryState::kSent: return "SENT";
    case DeliveryState::kFailed: return "FAILED";
  }
  return "?";
}

struct NotificationEvent {
  NotificationId id = 0;
  TripId trip_id = 0;
  EventId event_id = 0;
  UserId owner = 0;
  Channel channel = Channel::kConsole;
  std::string recipient;
  std::string body;
  CivilTime created_at{};
  DeliveryState delivery_state = DeliveryState::kPending;
  std::string failure_reason;
};

inline nlohmann::json to_json(const NotificationEvent& n) {
  nlohmann::json j{{"id", n.id},
                   {"trip_id", n.trip_id},
                   {"event_id", n.event_id},
                   {"owner", n.owner},
                   {"channel", to_string(n.channel)},
                   {"recipient", n.recipient},
                   {"body", n.body},
                   {"created_at", format_iso(n.created_at)},
                   {"delivery_state", to_string(n.delivery_state)}};
  if (!n.failure_reason.empty()) j["failure_reason"] = n.failure_reason;
  return j;
}

inline NotificationEvent notification_from_json(const nlohmann::json& j) {
  NotificationEvent n;
  n.id = j.at("id").get<NotificationId>();
  n.trip_id = j.at("trip_id").get<TripId>();
  n.event_id = j.at("event_id").get<EventId>();
  n.owner = j.value("owner", UserId{0});
  n.channel = channel_from_string(j.at("channel").get<std::string>());
  n.recipient = j.value("recipient", "");
  n.body = j.at("body").get<std::string>();
  n.created_at = parse_iso(j.at("created_at").get<std::string>());
  const auto state = j.at("delivery_state").get<std::string>();
  n.delivery_state = state == "SENT"     ? DeliveryState::kSent
                     : state == "FAILED" ? DeliveryState::kFailed
                                         : DeliveryState::kPending;
  n.failure_reason = j.value("failure_reason", "");
  return n;
}

// Re-evaluation -----------------------------------------------------------------

struct AlertOptions {
  double relative_cost_threshold = 0.005;
  bool alert_on_improvement = true;
  SnapshotOptions snapshot;
};

struct TripReevaluation {
  PlannedTrip trip;
  std::optional<RouteResult> old_result;
  std::optional<RouteResult> new_result;  // nullopt: no route
};

/// True when two outcomes differ in segment sequence, reachability, or in
/// cost by more than `threshold` relative to the old cost.
inline bool routes_differ(const std::optional<RouteResult>& old_result,
                          const std::optional<RouteResult>& new_result, double threshold) {
  if (!old_result || !new_result) return old_result.has_value() != new_result.has_value();
  if (old_result->path.segment_ids() != new_result->path.segment_ids()) return true;
  const double old_cost = old_result->cost();
  return std::abs(new_result->cost() - old_cost) > threshold * std::abs(old_cost);
}

/// Re-plans every upcoming trip under `rules_after`. A trip is affected when
/// its stored route crosses the changed segment while the changed rule is
/// active at travel time, or when the re-planned route differs.
inline std::vector<TripReevaluation> evaluate_trips(const RuleChangeEvent& event,
                                                    std::span<const PlannedTrip> trips,
                                                    const RoadNetwork& network,
                                                    std::span<const ConditionRule> rules_after,
                                                    const AlertOptions& options = {}) {
  std::vector<TripReevaluation> affected;
  for (const PlannedTrip& trip : trips) {
    if (trip.travel_at < event.at) continue;
    std::optional<RouteResult> replanned;
    try {
      replanned = plan_route(network, rules_after, trip.origin, trip.destination, trip.travel_at,
                             options.snapshot);
    } catch (const NoRoute&) {
    } catch (const UnknownVertex&) {
    } catch (const EmptyNetwork&) {
    }
    const bool crosses_changed_segment = trip.last_result &&
                                         trip.last_result->path.uses_segment(event.rule.segment_id) &&
                                         rule_active_at(event.rule, trip.travel_at);
    if (crosses_changed_segment ||
        routes_differ(trip.last_result, replanned, options.relative_cost_threshold)) {
      affected.push_back({trip, trip.last_result, std::move(replanned)});
    }
  }
  return affected;
}

namespace detail {

inline std::string cost_text(double cost) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", cost);
  return buf;
}

inline std::string signed_cost_text(double delta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.2f", delta);
  return buf;
}

}  // namespace detail

/// Human-readable alert text for one affected trip.
inline std::string compose_alert(const PlannedTrip& trip, const std::optional<RouteResult>& old_result,
                                 const std::optional<RouteResult>& new_result,
                                 const RuleChangeEvent& event, const RoadNetwork& network) {
  const RoadSegment* segment = network.find_segment(event.rule.segment_id);
  const std::string road = segment ? segment->name : "segment " + std::to_string(event.rule.segment_id);

  std::string condition;
  switch (event.rule.kind) {
    case ConditionKind::kClosed: condition = "closed"; break;
    case ConditionKind::kOneWayForward:
    case ConditionKind::kOneWayReverse: condition = "one-way"; break;
    case ConditionKind::kCongestion:
      condition = "congested (x" + detail::cost_text(event.rule.multiplier.value_or(1.0)) +
                  "), delay expected";
      break;
  }
  std::string body = "Route alert for trip #" + std::to_string(trip.id) + " travelling at " +
                     format_iso(trip.travel_at) + ".\n";
  if (event.change == ChangeKind::kDeleted) {
    body += "Condition lifted: " + road + " is no longer " + condition + ".\n";
  } else {
    body += road + " is " + condition;
    if (!event.rule.note.empty()) body += " (" + event.rule.note + ")";
    body += ".\n";
  }
  const std::string old_text = old_result ? detail::cost_text(old_result->cost()) : "none";
  if (!new_result) {
    body += "Planned route cost " + old_text + "; no route available at the planned time.\n";
    return body;
  }
  body += "Planned route cost " + old_text + "; new route cost " +
          detail::cost_text(new_result->cost());
  if (old_result) body += " (" + detail::signed_cost_text(new_result->cost() - old_result->cost()) + ")";
  body += ".\n";
  if (old_result && old_result->path.segment_ids() != new_result->path.segment_ids()) {
    body += "Your route has changed; check the updated directions.\n";
  }
  return body;
}

// Delivery ------------------------------------------------------------------------

class ChannelAdapter {
 public:
  virtual ~ChannelAdapter() = default;
  /// Throws on delivery failure.
  virtual void deliver(const NotificationEvent& notification) = 0;
};

class ConsoleChannel : public ChannelAdapter {
 public:
  explicit ConsoleChannel(std::ostream& out) : out_(out) {}
  void deliver(const NotificationEvent& n) override {
    out_ << "[alert " << n.id << "] trip " << n.trip_id << ": " << n.body;
    out_.flush();
  }

 private:
  std::ostream& out_;
};

/// Stand-in for a mail/SMS gateway: writes one RFC-822 style message per
/// notification to `<outbox>/<notification-id>.<channel>.msg`.
class OutboxChannel : public ChannelAdapter {
 public:
  explicit OutboxChannel(std::filesystem::path outbox) : outbox_(std::move(outbox)) {}

  void deliver(const NotificationEvent& n) override {
    std::filesystem::create_directories(outbox_);
    const auto file = outbox_ / file_name(n);
    std::ofstream out(file, std::ios::trunc);
    out << "To: " << n.recipient << "\r\n"
        << "Subject: Route alert for trip #" << n.trip_id << "\r\n"
        << "Date: " << format_iso(n.created_at) << "\r\n"
        << "X-Channel: " << to_string(n.channel) << "\r\n"
        << "\r\n"
        << n.body;
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + file.string());
  }

  static std::string file_name(const NotificationEvent& n) {
    std::string channel(to_string(n.channel));
    std::transform(channel.begin(), channel.end(), channel.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return std::to_string(n.id) + "." + channel + ".msg";
  }

 private:
  std::filesystem::path outbox_;
};

class ChannelRegistry {
 public:
  void add(Channel channel, std::shared_ptr<ChannelAdapter> adapter) {
    adapters_[channel] = std::move(adapter);
  }
  bool contains(Channel channel) const { return adapters_.contains(channel); }
  ChannelAdapter& at(Channel channel) const {
    auto it = adapters_.find(channel);
    if (it == adapters_.end()) {
      throw UnknownChannel("channel " + std::string(to_string(channel)) + " is not registered");
    }
    return *it->second;
  }

 private:
  std::map<Channel, std::shared_ptr<ChannelAdapter>> adapters_;
};

/// Invokes the channel adapter once for a pending notification. Already
/// dispatched notifications are returned unchanged.
inline DeliveryState dispatch(NotificationEvent& notification, const ChannelRegistry& channels) {
  if (notification.delivery_state != DeliveryState::kPending) return notification.delivery_state;
  ChannelAdapter& adapter = channels.at(notification.channel);
  try {
    adapter.deliver(notification);
    notification.delivery_state = DeliveryState::kSent;
  } catch (const std::exception& e) {
    notification.delivery_state = DeliveryState::kFailed;
    notification.failure_reason = e.what();
  }
  return notification.delivery_state;
}

/// Consumes rule-change events in order, re-evaluates trips and emits at most
/// one notification per (trip, event, channel). Every notification is
/// appended to the JSON-lines alerts log.
class AlertEngine {
 public:
  using RecipientLookup = std::function<std::string(const PlannedTrip&, Channel)>;

  struct Outcome {
    std::vector<TripReevaluation> affected;
    std::vector<NotificationEvent> notifications;
  };

  AlertEngine(ChannelRegistry channels, std::optional<std::filesystem::path> alerts_log,
              AlertOptions options = {})
      : channels_(std::move(channels)), log_path_(std::move(alerts_log)), options_(options) {
    if (log_path_ && std::filesystem::exists(*log_path_)) {
      std::ifstream in(*log_path_);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        NotificationEvent n;
        try {
          n = notification_from_json(nlohmann::json::parse(line));
        } catch (const std::exception&) {
          continue;
        }
        remember(n);
      }
    }
  }

  const AlertOptions& options() const { return options_; }

  Outcome process(const RuleChangeEvent& event, std::span<const PlannedTrip> trips,
                  const RoadNetwork& network, std::span<const ConditionRule> rules_after,
                  CivilTime now, const RecipientLookup& recipient = {}) {
    std::lock_guard lock(mutex_);
    Outcome outcome;
    if (!processed_events_.insert(event.id).second) return outcome;
    outcome.affected = evaluate_trips(event, trips, network, rules_after, options_);
    for (const TripReevaluation& r : outcome.affected) {
      const bool improved = r.old_result && r.new_result && r.new_result->cost() < r.old_result->cost();
      if (improved && !options_.alert_on_improvement) continue;
      const std::string body = compose_alert(r.trip, r.old_result, r.new_result, event, network);
      for (Channel channel : r.trip.channels) {
        if (!keys_.insert({r.trip.id, event.id, channel}).second) continue;
        NotificationEvent n;
        n.id = next_id_++;
        n.trip_id = r.trip.id;
        n.event_id = event.id;
        n.owner = r.trip.owner;
        n.channel = channel;
        n.recipient = recipient ? recipient(r.trip, channel) : std::string();
        n.body = body;
        n.created_at = now;
        try {
          dispatch(n, channels_);
        } catch (const UnknownChannel& e) {
          n.delivery_state = DeliveryState::kFailed;
          n.failure_reason = e.what();
        }
        append_log(n);
        notifications_.push_back(n);
        outcome.notifications.push_back(std::move(n));
      }
    }
    return outcome;
  }

  std::vector<NotificationEvent> notifications() const {
    std::lock_guard lock(mutex_);
    return notifications_;
  }

  std::vector<NotificationEvent> notifications_for(UserId owner) const {
    std::lock_guard lock(mutex_);
    std::vector<NotificationEvent> out;
    for (const auto& n : notifications_) {
      if (n.owner == owner) out.push_back(n);
    }
    return out;
  }

 private:
  void remember(const NotificationEvent& n) {
    keys_.insert({n.trip_id, n.event_id, n.channel});
    processed_events_.insert(n.event_id);
    next_id_ = std::max(next_id_, n.id + 1);
    notifications_.push_back(n);
  }

  void append_log(const NotificationEvent& n) const {
    if (!log_path_) return;
    if (log_path_->has_parent_path()) std::filesystem::create_directories(log_path_->parent_path());
    std::ofstream out(*log_path_, std::ios::app);
    out << to_json(n).dump() << '\n';
  }

  mutable std::mutex mutex_;
  ChannelRegistry channels_;
  std::optional<std::filesystem::path> log_path_;
  AlertOptions options_;
  std::set<EventId> processed_events_;
  std::set<std::tuple<TripId, EventId, Channel>> keys_;
  std::vector<NotificationEvent> notifications_;
  NotificationId next_id_ = 1;
};

}  // namespace routeplan

#endif  // ROUTEPLAN_ALERTS_HPP_

#ifndef ROUTEPLAN_ACCOUNTS_HPP_
#define ROUTEPLAN_ACCOUNTS_HPP_

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "routeplan/civil_time.hpp"
#include "routeplan/error.hpp"
#include "routeplan/routing.hpp"

namespace routeplan {

using UserId = std::int64_t;
using TripId = std::int64_t;

enum class Role { kRegistered, kAdmin };

inline std::string_view to_string(Role r) { return r == Role::kAdmin ? "ADMIN" : "REGISTERED"; }

enum class Channel { kEmail, kSms, kConsole };

inline std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::kEmail: return "EMAIL";
    case Channel::kSms: return "SMS";
    case Channel::kConsole: return "CONSOLE";
  }
  return "?";
}

inline Channel channel_from_string(std::string_view s) {
  for (auto c : {Channel::kEmail, Channel::kSms, Channel::kConsole}) {
    if (to_string(c) == s) return c;
  }
  throw UnknownChannel("unknown channel '" + std::string(s) + "'");
}

/// Registration data supplied by the user.
struct Profile {
  std::string username;
  std::string full_name;
  std::string email;
  std::string phone;
  std::string address;
  std::string closest_city;
};

struct UserAccount {
  UserId id = 0;
  std::string username;
  std::string credential_digest;
  Role role = Role::kRegistered;
  std::string full_name;
  std::string email;
  std::string phone;
  std::string address;
  std::string closest_city;
  bool operator==(const UserAccount&) const = default;
};

/// Mutable personal fields. Username and role are deliberately absent.
struct ProfileUpdate {
  std::optional<std::string> full_name;
  std::optional<std::string> email;
  std::optional<std::string> phone;
  std::optional<std::string> address;
  std::optional<std::string> closest_city;
};

struct Session {
  std::string token;
  UserId user_id = 0;
  Role role = Role::kRegistered;
  CivilTime expires_at{};
};

struct PlannedTrip {
  TripId id = 0;
  UserId owner = 0;
  Endpoint origin;
  Endpoint destination;
  CivilTime travel_at{};
  std::vector<Channel> channels;  // sorted, unique
  std::optional<RouteResult> last_result;  // nullopt: no route
  CivilTime created_at{};
};

struct TripRequest {
  Endpoint origin;
  Endpoint destination;
  CivilTime travel_at{};
  std::vector<Channel> channels;
};

inline constexpr size_t kMinPasswordLength = 8;
inline constexpr auto kAnonymousClockSkew = std::chrono::seconds{60};

// Credentials ---------------------------------------------------------------

namespace detail {

inline std::string to_hex(const unsigned char* data, size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (size_t i = 0; i < n; ++i) {
    out += kDigits[data[i] >> 4];
    out += kDigits[data[i] & 0xf];
  }
  return out;
}

inline std::vector<unsigned char> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ParseError("odd-length hex string");
  std::vector<unsigned char> out;
  for (size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<unsigned char>(std::stoi(std::string(hex.substr(i, 2)), nullptr, 16)));
  }
  return out;
}

inline std::vector<unsigned char> random_bytes(size_t n) {
  std::vector<unsigned char> buf(n);
  if (RAND_bytes(buf.data(), static_cast<int>(n)) != 1) {
    throw std::runtime_error("system random source unavailable");
  }
  return buf;
}

inline std::vector<unsigned char> pbkdf2(std::string_view password,
                                         const std::vector<unsigned char>& salt, int iterations) {
  std::vector<unsigned char> out(32);
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(),
                        static_cast<int>(salt.size()), iterations, EVP_sha256(),
                        static_cast<int>(out.size()), out.data()) != 1) {
    throw std::runtime_error("PBKDF2 failed");
  }
  return out;
}

}  // namespace detail

inline constexpr int kDigestIterations = 20000;

/// Salted PBKDF2-HMAC-SHA256: `pbkdf2-sha256$<iterations>$<salt>$<hash>`.
inline std::string make_credential_digest(std::string_view password,
                                          int iterations = kDigestIterations) {
  const auto salt = detail::random_bytes(16);
  const auto hash = detail::pbkdf2(password, salt, iterations);
  return "pbkdf2-sha256$" + std::to_string(iterations) + "$" +
         detail::to_hex(salt.data(), salt.size()) + "$" + detail::to_hex(hash.data(), hash.size());
}

inline bool verify_credential(std::string_view digest, std::string_view password) {
  constexpr std::string_view kPrefix = "pbkdf2-sha256$";
  if (!digest.starts_with(kPrefix)) return false;
  digest.remove_prefix(kPrefix.size());
  const auto d1 = digest.find('$');
  const auto d2 = d1 == std::string_view::npos ? d1 : digest.find('$', d1 + 1);
  if (d2 == std::string_view::npos) return false;
  try {
    const int iterations = std::stoi(std::string(digest.substr(0, d1)));
    const auto salt = detail::from_hex(digest.substr(d1 + 1, d2 - d1 - 1));
    const auto expected = detail::from_hex(digest.substr(d2 + 1));
    if (iterations <= 0 || expected.empty()) return false;
    const auto actual = detail::pbkdf2(password, salt, iterations);
    return actual.size() == expected.size() &&
           CRYPTO_memcmp(actual.data(), expected.data(), actual.size()) == 0;
  } catch (const std::exception&) {
    return false;
  }
}

/// 256-bit random token, hex encoded.
inline std::string random_token() {
  const auto bytes = detail::random_bytes(32);
  return detail::to_hex(bytes.data(), bytes.size());
}

// Query policy ----------------------------------------------------------------

/// Decides which instant a route query runs at. Anonymous callers only get
/// the current time; any valid session may ask for any instant.
inline CivilTime authorize_query(const Session* session, std::optional<CivilTime> requested,
                                 CivilTime now) {
  if (session == nullptr) {
    if (requested) {
      const auto skew = *requested > now ? *requested - now : now - *requested;
      if (skew > kAnonymousClockSkew) {
        throw Forbidden("FUTURE_QUERY_REQUIRES_ACCOUNT",
                        "queries at other than the current time require an account");
      }
    }
    return now;
  }
  if (session->expires_at <= now) throw SessionExpired("session expired");
  return requested.value_or(now);
}

// JSON -------------------------------------------------------------------------

inline nlohmann::json to_json(const UserAccount& u, bool include_digest = false) {
  nlohmann::json j{{"id", u.id},
                   {"username", u.username},
                   {"role", to_string(u.role)},
                   {"full_name", u.full_name},
                   {"email", u.email},
                   {"phone", u.phone},
                   {"address", u.address},
                   {"closest_city", u.closest_city}};
  if (include_digest) j["credential_digest"] = u.credential_digest;
  return j;
}

inline UserAccount user_from_json(const nlohmann::json& j) {
  UserAccount u;
  u.id = j.at("id").get<UserId>();
  u.username = j.at("username").get<std::string>();
  u.credential_digest = j.at("credential_digest").get<std::string>();
  u.role = j.at("role").get<std::string>() == "ADMIN" ? Role::kAdmin : Role::kRegistered;
  u.full_name = j.value("full_name", "");
  u.email = j.value("email", "");
  u.phone = j.value("phone", "");
  u.address = j.value("address", "");
  u.closest_city = j.value("closest_city", "");
  return u;
}

/// Profile fields of a PATCH body. `username` and `role` are ignored.
inline ProfileUpdate profile_update_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("profile update must be an object");
  detail::reject_unknown_keys(
      j, {"full_name", "email", "phone", "address", "closest_city", "username", "role"}, "profile");
  ProfileUpdate u;
  auto field = [&j](const char* key, std::optional<std::string>& out) {
    if (auto it = j.find(key); it != j.end()) out = detail::get_as<std::string>(*it, key);
  };
  field("full_name", u.full_name);
  field("email", u.email);
  field("phone", u.phone);
  field("address", u.address);
  field("closest_city", u.closest_city);
  return u;
}

inline nlohmann::json channels_to_json(const std::vector<Channel>& channels) {
  nlohmann::json arr = nlohmann::json::array();
  for (Channel c : channels) arr.push_back(to_string(c));
  return arr;
}

inline std::vector<Channel> channels_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("channels must be an array");
  std::vector<Channel> out;
  for (const auto& c : j) out.push_back(channel_from_string(detail::get_as<std::string>(c, "channel")));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline nlohmann::json to_json(const PlannedTrip& t, bool with_arcs = false) {
  return {{"id", t.id},
          {"owner", t.owner},
          {"origin", endpoint_to_json(t.origin)},
          {"destination", endpoint_to_json(t.destination)},
          {"travel_at", format_iso(t.travel_at)},
          {"channels", channels_to_json(t.channels)},
          {"created_at", format_iso(t.created_at)},
          {"last_result", t.last_result ? to_json(*t.last_result, with_arcs) : nlohmann::json()}};
}

inline PlannedTrip trip_from_json(const nlohmann::json& j) {
  PlannedTrip t;
  t.id = j.at("id").get<TripId>();
  t.owner = j.at("owner").get<UserId>();
  t.origin = endpoint_from_json(j.at("origin"), "origin");
  t.destination = endpoint_from_json(j.at("destination"), "destination");
  t.travel_at = parse_iso(j.at("travel_at").get<std::string>());
  t.channels = channels_from_json(j.at("channels"));
  t.created_at = parse_iso(j.at("created_at").get<std::string>());
  if (const auto& r = j.at("last_result"); !r.is_null()) t.last_result = route_result_from_json(r);
  return t;
}

/// Body of POST /api/trips.
inline TripRequest trip_request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("trip request must be an object");
  detail::reject_unknown_keys(j, {"origin", "destination", "travel_at", "channels"}, "trip");
  TripRequest r;
  r.origin = endpoint_from_json(detail::require(j, "origin", "trip"), "origin");
  r.destination = endpoint_from_json(detail::require(j, "destination", "trip"), "destination");
  r.travel_at = parse_iso(detail::get_as<std::string>(detail::require(j, "travel_at", "trip"), "travel_at"));
  if (auto it = j.find("channels"); it != j.end()) r.channels = channels_from_json(*it);
  return r;
}

// Store ------------------------------------------------------------------------

namespace detail {

/// Append-only JSON-lines file; on load the last record per id wins and
/// `{"id": n, "deleted": true}` removes the record.
class JsonLinesLog {
 public:
  JsonLinesLog() = default;
  explicit JsonLinesLog(std::filesystem::path path) : path_(std::move(path)) {}

  bool enabled() const { return !path_.empty(); }

  std::map<std::int64_t, nlohmann::json> load() const {
    std::map<std::int64_t, nlohmann::json> records;
    if (!enabled() || !std::filesystem::exists(path_)) return records;
    std::ifstream in(path_);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        // A torn final line from an interrupted append is skipped.
        if (in.peek() == EOF) break;
        throw ParseError(path_.string() + ":" + std::to_string(line_no) + ": malformed record");
      }
      const auto id = j.at("id").get<std::int64_t>();
      if (j.value("deleted", false)) {
        records.erase(id);
      } else {
        records[id] = std::move(j);
      }
    }
    return records;
  }

  void append(const nlohmann::json& record) const {
    if (!enabled()) return;
    std::ofstream out(path_, std::ios::app);
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot append to " + path_.string());
  }

 private:
  std::filesystem::path path_;
};

}  // namespace detail

/// Users, sessions and planned trips. Users and trips persist to
/// `users.jsonl` / `trips.jsonl` under `data_dir` when one is given.
class AccountStore {
 public:
  /// Plans a trip at its travel instant; throws NoRoute when disconnected.
  using TripPlanner = std::function<RouteResult(const Endpoint&, const Endpoint&, CivilTime)>;

  explicit AccountStore(std::optional<std::filesystem::path> data_dir = std::nullopt,
                        std::chrono::seconds session_ttl = std::chrono::hours{12})
      : session_ttl_(session_ttl) {
    if (data_dir) {
      std::filesystem::create_directories(*data_dir);
      users_log_ = detail::JsonLinesLog(*data_dir / "users.jsonl");
      trips_log_ = detail::JsonLinesLog(*data_dir / "trips.jsonl");
    }
    for (auto& [id, j] : users_log_.load()) {
      UserAccount u = user_from_json(j);
      usernames_[u.username] = u.id;
      next_user_id_ = std::max(next_user_id_, u.id + 1);
      users_.emplace(id, std::move(u));
    }
    for (auto& [id, j] : trips_log_.load()) {
      PlannedTrip t = trip_from_json(j);
      next_trip_id_ = std::max(next_trip_id_, t.id + 1);
      trips_.emplace(id, std::move(t));
    }
  }

  UserAccount register_user(const Profile& profile, std::string_view password) {
    return add_user(profile, make_checked_digest(password), Role::kRegistered);
  }

  /// Seeds an administrator from a precomputed digest; an existing account
  /// with that username is promoted instead.
  UserAccount ensure_admin(const std::string& username, const std::string& digest) {
    {
      std::unique_lock lock(mutex_);
      if (auto it = usernames_.find(username); it != usernames_.end()) {
        UserAccount& u = users_.at(it->second);
        if (u.role != Role::kAdmin) {
          u.role = Role::kAdmin;
          users_log_.append(to_json(u, true));
        }
        return u;
      }
    }
    Profile p;
    p.username = username;
    return add_user(p, digest, Role::kAdmin);
  }

  Session login(std::string_view username, std::string_view password, CivilTime now) {
    UserAccount user;
    {
      std::shared_lock lock(mutex_);
      auto it = usernames_.find(std::string(username));
      if (it == usernames_.end()) throw Unauthorized("invalid username or password");
      user = users_.at(it->second);
    }
    if (!verify_credential(user.credential_digest, password)) {
      throw Unauthorized("invalid username or password");
    }
    Session s{random_token(), user.id, user.role, now + session_ttl_};
    std::unique_lock lock(mutex_);
    sessions_[s.token] = s;
    return s;
  }

  /// Throws Unauthorized for unknown tokens, SessionExpired for stale ones.
  Session session(std::string_view token, CivilTime now) const {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(std::string(token));
    if (it == sessions_.end()) throw Unauthorized("unknown session");
    if (it->second.expires_at <= now) throw SessionExpired("session expired");
    return it->second;
  }

  void logout(std::string_view token) {
    std::unique_lock lock(mutex_);
    sessions_.erase(std::string(token));
  }

  UserAccount user(UserId id) const {
    std::shared_lock lock(mutex_);
    auto it = users_.find(id);
    if (it == users_.end()) throw NotFound("unknown user " + std::to_string(id));
    return it->second;
  }

  std::optional<UserAccount> find_user(std::string_view username) const {
    std::shared_lock lock(mutex_);
    auto it = usernames_.find(std::string(username));
    if (it == usernames_.end()) return std::nullopt;
    return users_.at(it->second);
  }

  UserAccount update_profile(const Session& session, const ProfileUpdate& update,
                             CivilTime now) {
    if (session.expires_at <= now) throw SessionExpired("session expired");
    std::unique_lock lock(mutex_);
    auto it = users_.find(session.user_id);
    if (it == users_.end()) throw NotFound("unknown user");
    UserAccount& u = it->second;
    if (update.full_name) u.full_name = *update.full_name;
    if (update.email) u.email = *update.email;
    if (update.phone) u.phone = *update.phone;
    if (update.address) u.address = *update.address;
    if (update.closest_city) u.closest_city = *update.closest_city;
    users_log_.append(to_json(u, true));
    return u;
  }

  /// Stores a future trip with its route planned at travel_at (nullopt when
  /// no route exists yet). Anonymous callers (null session) are refused.
  PlannedTrip create_trip(const Session* session, const TripRequest& request, CivilTime now,
                          const TripPlanner& planner) {
    if (session == nullptr) {
      throw Forbidden("ACCOUNT_REQUIRED", "planned trips require an account");
    }
    if (session->expires_at <= now) throw SessionExpired("session expired");
    if (request.travel_at <= now) throw ValidationError("travel_at must be in the future");
    PlannedTrip trip;
    trip.owner = session->user_id;
    trip.origin = request.origin;
    trip.destination = request.destination;
    trip.travel_at = request.travel_at;
    trip.channels = request.channels;
    std::sort(trip.channels.begin(), trip.channels.end());
    trip.channels.erase(std::unique(trip.channels.begin(), trip.channels.end()),
                        trip.channels.end());
    trip.created_at = now;
    try {
      trip.last_result = planner(trip.origin, trip.destination, trip.travel_at);
    } catch (const NoRoute&) {
      trip.last_result = std::nullopt;
    }

    std::unique_lock lock(mutex_);
    trip.id = next_trip_id_++;
    trips_log_.append(to_json(trip, true));
    trips_.emplace(trip.id, trip);
    return trip;
  }

  std::vector<PlannedTrip> trips_of(UserId owner) const {
    std::shared_lock lock(mutex_);
    std::vector<PlannedTrip> out;
    for (const auto& [_, t] : trips_) {
      if (t.owner == owner) out.push_back(t);
    }
    return out;
  }

  std::vector<PlannedTrip> all_trips() const {
    std::shared_lock lock(mutex_);
    std::vector<PlannedTrip> out;
    for (const auto& [_, t] : trips_) out.push_back(t);
    return out;
  }

  /// Owner-scoped lookup; another user's trip is reported as not found.
  PlannedTrip trip(UserId owner, TripId id) const {
    std::shared_lock lock(mutex_);
    auto it = trips_.find(id);
    if (it == trips_.end() || it->second.owner != owner) {
      throw NotFound("unknown trip " + std::to_string(id));
    }
    return it->second;
  }

  void delete_trip(UserId owner, TripId id) {
    std::unique_lock lock(mutex_);
    auto it = trips_.find(id);
    if (it == trips_.end() || it->second.owner != owner) {
      throw NotFound("unknown trip " + std::to_string(id));
    }
    trips_.erase(it);
    trips_log_.append({{"id", id}, {"deleted", true}});
  }

  void update_trip_result(TripId id, std::optional<RouteResult> result) {
    std::unique_lock lock(mutex_);
    auto it = trips_.find(id);
    if (it == trips_.end()) return;
    it->second.last_result = std::move(result);
    trips_log_.append(to_json(it->second, true));
  }

 private:
  static std::string make_checked_digest(std::string_view password) {
    if (password.size() < kMinPasswordLength) {
      throw WeakPassword("password must have at least 8 characters");
    }
    return make_credential_digest(password);
  }

  UserAccount add_user(const Profile& profile, std::string digest, Role role) {
    if (profile.username.empty()) throw ValidationError("username must be nonempty");
    std::unique_lock lock(mutex_);
    if (usernames_.contains(profile.username)) {
      throw DuplicateUsername("username '" + profile.username + "' is taken");
    }
    UserAccount u;
    u.id = next_user_id_++;
    u.username = profile.username;
    u.credential_digest = std::move(digest);
    u.role = role;
    u.full_name = profile.full_name;
    u.email = profile.email;
    u.phone = profile.phone;
    u.address = profile.address;
    u.closest_city = profile.closest_city;
    users_log_.append(to_json(u, true));
    usernames_[u.username] = u.id;
    users_.emplace(u.id, u);
    return u;
  }

  mutable std::shared_mutex mutex_;
  std::chrono::seconds session_ttl_;
  detail::JsonLinesLog users_log_;
  detail::JsonLinesLog trips_log_;
  std::map<UserId, UserAccount> users_;
  std::map<std::string, UserId> usernames_;
  std::map<std::string, Session> sessions_;
  std::map<TripId, PlannedTrip> trips_;
  UserId next_user_id_ = 1;
  TripId next_trip_id_ = 1;
};

}  // namespace routeplan

#endif  // ROUTEPLAN_ACCOUNTS_HPP_

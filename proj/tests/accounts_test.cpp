#include <gtest/gtest.h>

#include <random>

#include "routeplan/accounts.hpp"
#include "routeplan/sample_data.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace routeplan {
namespace {

using namespace std::chrono_literals;

const CivilTime kNow = make_time(2026, 10, 15, 9, 0);

Profile profile(const std::string& username) {
  Profile p;
  p.username = username;
  p.full_name = "Test " + username;
  p.email = username + "@example.org";
  p.phone = "+94 11 000 0000";
  p.closest_city = "Colombo";
  return p;
}

AccountStore::TripPlanner d1_planner(std::vector<ConditionRule> rules = {}) {
  return [rules](const Endpoint& o, const Endpoint& d, CivilTime t) {
    static const RoadNetwork net = sample::square_with_diagonal();
    return plan_route(net, rules, o, d, t);
  };
}

TEST(Credentials, VerifyRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> ch(32, 126);
  for (int i = 0; i < 10; ++i) {
    std::string pw;
    for (int k = 0; k < 8 + i; ++k) pw += static_cast<char>(ch(rng));
    const std::string digest = make_credential_digest(pw, 1000);
    EXPECT_TRUE(verify_credential(digest, pw));
    EXPECT_FALSE(verify_credential(digest, pw + "x"));
    EXPECT_EQ(digest.find(pw), std::string::npos);
  }
  EXPECT_NE(make_credential_digest("same-password", 1000), make_credential_digest("same-password", 1000));
  EXPECT_FALSE(verify_credential("plain", "plain"));
  EXPECT_FALSE(verify_credential("pbkdf2-sha256$x$00$00", "whatever"));
}

TEST(Credentials, TokensAreRandomHex) {
  const std::string a = random_token(), b = random_token();
  EXPECT_EQ(a.size(), 64u);
  EXPECT_NE(a, b);
  EXPECT_EQ(a.find_first_not_of("0123456789abcdef"), std::string::npos);
}

TEST(AuthorizeQuery, AnonymousGetsCurrentTimeOnly) {
  EXPECT_EQ(authorize_query(nullptr, std::nullopt, kNow), kNow);
  EXPECT_EQ(authorize_query(nullptr, kNow + 30s, kNow), kNow);
  EXPECT_EQ(authorize_query(nullptr, kNow - 60s, kNow), kNow);
  try {
    authorize_query(nullptr, kNow + 24h, kNow);
    FAIL();
  } catch (const Forbidden& e) {
    EXPECT_EQ(e.code(), "FUTURE_QUERY_REQUIRES_ACCOUNT");
  }
  EXPECT_THROW(authorize_query(nullptr, kNow - 24h, kNow), Forbidden);
}

TEST(AuthorizeQuery, SessionsMayChooseInstant) {
  const Session s{"t", 1, Role::kRegistered, kNow + 1h};
  EXPECT_EQ(authorize_query(&s, kNow + 24h, kNow), kNow + 24h);
  EXPECT_EQ(authorize_query(&s, std::nullopt, kNow), kNow);
  const Session admin{"t", 1, Role::kAdmin, kNow + 1h};
  EXPECT_EQ(authorize_query(&admin, kNow - 24h, kNow), kNow - 24h);
  const Session stale{"t", 1, Role::kRegistered, kNow};
  EXPECT_THROW(authorize_query(&stale, kNow + 24h, kNow), SessionExpired);
}

TEST(AccountStore, RegisterAndLogin) {
  AccountStore store;
  const UserAccount u = store.register_user(profile("nimal"), "correct horse");
  EXPECT_EQ(u.role, Role::kRegistered);
  EXPECT_TRUE(verify_credential(u.credential_digest, "correct horse"));
  EXPECT_THROW(store.register_user(profile("nimal"), "another password"), DuplicateUsername);
  EXPECT_THROW(store.register_user(profile("kamala"), "1234567"), WeakPassword);
  EXPECT_FALSE(store.find_user("kamala"));

  const Session s = store.login("nimal", "correct horse", kNow);
  EXPECT_EQ(s.user_id, u.id);
  EXPECT_EQ(s.expires_at, kNow + 12h);
  EXPECT_EQ(store.session(s.token, kNow + 1h).user_id, u.id);
  EXPECT_THROW(store.session(s.token, kNow + 12h), SessionExpired);
  EXPECT_THROW(store.login("nimal", "wrong horse", kNow), Unauthorized);
  EXPECT_THROW(store.login("nobody", "correct horse", kNow), Unauthorized);
  store.logout(s.token);
  EXPECT_THROW(store.session(s.token, kNow), Unauthorized);
}

TEST(AccountStore, ProfileUpdateCannotChangeRole) {
  AccountStore store;
  const UserAccount u = store.register_user(profile("nimal"), "correct horse");
  const Session s = store.login("nimal", "correct horse", kNow);
  const auto update = profile_update_from_json(
      nlohmann::json::parse(R"({"role": "ADMIN", "username": "root", "closest_city": "Kandy"})"));
  const UserAccount after = store.update_profile(s, update, kNow);
  EXPECT_EQ(after.role, Role::kRegistered);
  EXPECT_EQ(after.username, "nimal");
  EXPECT_EQ(after.closest_city, "Kandy");
  EXPECT_EQ(after.email, u.email);
  EXPECT_THROW(store.update_profile(s, update, kNow + 13h), SessionExpired);
  EXPECT_THROW(profile_update_from_json(nlohmann::json::parse(R"({"shoe_size": 9})")), ParseError);
}

TEST(AccountStore, EnsureAdminSeedsOrPromotes) {
  AccountStore store;
  const UserAccount admin = store.ensure_admin("admin", make_credential_digest("admin-secret", 1000));
  EXPECT_EQ(admin.role, Role::kAdmin);
  EXPECT_EQ(store.login("admin", "admin-secret", kNow).role, Role::kAdmin);
  store.register_user(profile("ruwan"), "ruwan-pass");
  EXPECT_EQ(store.ensure_admin("ruwan", "ignored").role, Role::kAdmin);
  EXPECT_TRUE(store.login("ruwan", "ruwan-pass", kNow).role == Role::kAdmin);
}

TEST(CreateTrip, RegisteredUserTomorrowMorning) {
  AccountStore store;
  store.register_user(profile("nimal"), "correct horse");
  const Session s = store.login("nimal", "correct horse", kNow);
  TripRequest req{VertexId{1}, VertexId{3}, make_time(2026, 10, 16, 8, 0),
                  {Channel::kSms, Channel::kEmail, Channel::kSms}};
  const PlannedTrip trip = store.create_trip(&s, req, kNow, d1_planner());
  ASSERT_TRUE(trip.last_result);
  EXPECT_NEAR(trip.last_result->cost(), 141.4214, 1e-4);
  EXPECT_EQ(trip.channels, (std::vector<Channel>{Channel::kEmail, Channel::kSms}));
  EXPECT_EQ(trip.owner, s.user_id);
  EXPECT_EQ(store.trips_of(s.user_id).size(), 1u);
}

TEST(CreateTrip, RefusedCases) {
  AccountStore store;
  TripRequest req{VertexId{1}, VertexId{3}, make_time(2026, 10, 16, 8, 0), {Channel::kEmail}};
  try {
    store.create_trip(nullptr, req, kNow, d1_planner());
    FAIL();
  } catch (const Forbidden& e) {
    EXPECT_EQ(e.code(), "ACCOUNT_REQUIRED");
  }
  store.register_user(profile("nimal"), "correct horse");
  const Session s = store.login("nimal", "correct horse", kNow);
  req.travel_at = kNow - 1h;
  EXPECT_THROW(store.create_trip(&s, req, kNow, d1_planner()), ValidationError);
  req.travel_at = kNow;
  EXPECT_THROW(store.create_trip(&s, req, kNow, d1_planner()), ValidationError);
  EXPECT_TRUE(store.all_trips().empty());
}

TEST(CreateTrip, UnreachableTripStoredWithoutRoute) {
  AccountStore store;
  store.register_user(profile("nimal"), "correct horse");
  const Session s = store.login("nimal", "correct horse", kNow);
  const std::vector rules{testing::always_closed(1, 1), testing::always_closed(2, 2),
                          testing::always_closed(3, 3)};
  const PlannedTrip trip =
      store.create_trip(&s, {VertexId{1}, VertexId{2}, kNow + 24h, {}}, kNow, d1_planner(rules));
  EXPECT_FALSE(trip.last_result);
}

TEST(Trips, OwnerIsolation) {
  AccountStore store;
  store.register_user(profile("a"), "password-a");
  store.register_user(profile("b"), "password-b");
  const Session a = store.login("a", "password-a", kNow);
  const Session b = store.login("b", "password-b", kNow);
  const PlannedTrip trip =
      store.create_trip(&a, {VertexId{1}, VertexId{3}, kNow + 24h, {Channel::kEmail}}, kNow, d1_planner());
  EXPECT_THROW(store.trip(b.user_id, trip.id), NotFound);
  EXPECT_THROW(store.delete_trip(b.user_id, trip.id), NotFound);
  EXPECT_TRUE(store.trips_of(b.user_id).empty());
  EXPECT_EQ(store.trip(a.user_id, trip.id).id, trip.id);
  store.delete_trip(a.user_id, trip.id);
  EXPECT_THROW(store.trip(a.user_id, trip.id), NotFound);
}

TEST(Persistence, ReloadRestoresUsersAndTrips) {
  testing::TempDir dir;
  UserId uid = 0;
  TripId kept = 0;
  {
    AccountStore store(dir.path());
    uid = store.register_user(profile("nimal"), "correct horse").id;
    const Session s = store.login("nimal", "correct horse", kNow);
    ProfileUpdate update;
    update.closest_city = "Galle";
    store.update_profile(s, update, kNow);
    kept = store.create_trip(&s, {VertexId{1}, VertexId{3}, kNow + 24h, {Channel::kEmail}}, kNow, d1_planner()).id;
    const TripId gone =
        store.create_trip(&s, {VertexId{2}, VertexId{4}, kNow + 48h, {Channel::kSms}}, kNow, d1_planner()).id;
    store.delete_trip(uid, gone);
  }
  AccountStore reloaded(dir.path());
  const auto user = reloaded.find_user("nimal");
  ASSERT_TRUE(user);
  EXPECT_EQ(user->closest_city, "Galle");
  EXPECT_EQ(reloaded.login("nimal", "correct horse", kNow).user_id, uid);
  const auto trips = reloaded.trips_of(uid);
  ASSERT_EQ(trips.size(), 1u);
  EXPECT_EQ(trips[0].id, kept);
  ASSERT_TRUE(trips[0].last_result);
  EXPECT_EQ(trips[0].last_result->path.segment_ids(), (std::vector<SegmentId>{3}));
  EXPECT_THROW(reloaded.register_user(profile("nimal"), "whatever-pw"), DuplicateUsername);
  const UserAccount next = reloaded.register_user(profile("second"), "second-pw");
  EXPECT_GT(next.id, uid);
}

TEST(TripJson, RoundTrip) {
  PlannedTrip t;
  t.id = 4;
  t.owner = 2;
  t.origin = Point{1.5, -2};
  t.destination = VertexId{3};
  t.travel_at = make_time(2026, 12, 1, 7, 30);
  t.created_at = kNow;
  t.channels = {Channel::kEmail, Channel::kConsole};
  t.last_result = plan_route(sample::square_with_diagonal(), {}, VertexId{1}, VertexId{3}, t.travel_at);
  const PlannedTrip back = trip_from_json(to_json(t, true));
  EXPECT_EQ(back.origin, t.origin);
  EXPECT_EQ(back.destination, t.destination);
  EXPECT_EQ(back.travel_at, t.travel_at);
  EXPECT_EQ(back.last_result, t.last_result);
  EXPECT_THROW(trip_request_from_json(nlohmann::json::parse(
                   R"({"origin": {"vertex": 1}, "destination": {"vertex": 3}, "travel_at": "2026-12-01T07:30", "channels": ["PIGEON"]})")),
               UnknownChannel);
}

}  // namespace
}  // namespace routeplan

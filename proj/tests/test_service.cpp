#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "skiroute/service.hpp"

using namespace skiroute;
namespace fx = fixtures;
using nlohmann::json;

namespace {

Response get(const ResortService& s, const std::string& path, std::map<std::string, std::string> query = {}) {
  return s.handle({"GET", path, std::move(query), ""});
}

Response post(const ResortService& s, const std::string& path, const json& body) {
  return s.handle({"POST", path, {}, body.dump()});
}

json fixture_preferences() { return to_json(fx::five_slope_preferences()); }

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    // go through the wire format like the server binary does
    auto bundle = parse_bundle(serialize_bundle(fx::five_slope_bundle()));
    std::vector<GeoPoint> points;
    std::mt19937 rng(2);
    std::normal_distribution<double> n(0, 40);
    for (int i = 0; i < 300; ++i) points.push_back(fx::at(350 + n(rng), 100 + n(rng)));
    service.load(std::move(bundle), std::move(points));
    service.set_presets(load_presets(std::filesystem::path(SKIROUTE_SOURCE_DIR) / "presets"));
  }
  ResortService service;
};

}  // namespace

TEST(ServiceEmpty, HealthAndUnavailable) {
  ResortService s;
  const auto h = get(s, "/api/health");
  EXPECT_EQ(h.status, 200);
  EXPECT_EQ(h.json()["bundle_loaded"], false);
  EXPECT_EQ(get(s, "/api/resort").status, 503);
  EXPECT_EQ(get(s, "/api/nope").status, 404);
}

TEST_F(ServiceTest, Health) {
  const auto j = get(service, "/api/health").json();
  EXPECT_EQ(j["bundle_loaded"], true);
  EXPECT_EQ(j["edges"], 7);
  EXPECT_EQ(j["nodes"], 3);
  EXPECT_EQ(j["tracks_loaded"], true);
}

TEST_F(ServiceTest, RankMatchesEngine) {
  const auto r = post(service, "/api/rank", {{"preferences", fixture_preferences()}});
  ASSERT_EQ(r.status, 200) << r.body;
  const auto results = r.json()["results"];
  ASSERT_EQ(results.size(), 5u);
  const auto expected = score_and_rank(fx::five_slope_resort(), fx::five_slope_preferences());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(results[i]["edge_id"], expected[i].edge_id);
    EXPECT_NEAR(results[i]["s_pref"].get<double>(), expected[i].s_pref, 1e-12);
    EXPECT_EQ(results[i]["per_segment"].size(), expected[i].per_segment.size());
  }
  EXPECT_EQ(results[0]["name"], "Sonnenpiste");

  const auto limited = post(service, "/api/rank", {{"preset", "intermediate"}, {"limit", 2}});
  ASSERT_EQ(limited.status, 200) << limited.body;
  EXPECT_EQ(limited.json()["results"].size(), 2u);
}

TEST_F(ServiceTest, RouteAutomated) {
  const auto r = post(service, "/api/route",
                      {{"mode", "auto"}, {"start_node", 0}, {"end_node", 0}, {"duration", 7200},
                       {"preferences", fixture_preferences()}});
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = r.json();
  EXPECT_EQ(j["mode"], "auto");
  EXPECT_EQ(j["favorites"], json({"S1", "S2", "S4", "S5"}));
  const double t = j["summary"]["estimated_time"];
  EXPECT_GE(t, 6480);
  EXPECT_LE(t, 7920);
  EXPECT_EQ(j["route"]["steps"].size(), 8u);
  EXPECT_FALSE(j["summary"]["altitude_profile"].empty());
}

TEST_F(ServiceTest, RouteSemiAutomated) {
  const auto r = post(service, "/api/route",
                      {{"mode", "semi"}, {"start_node", 0}, {"end_node", 0}, {"favorites", {"S3", "S1"}},
                       {"preferences", fixture_preferences()}});
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = r.json();
  auto covered = j["route"]["favorites_covered"].get<std::vector<std::string>>();
  std::sort(covered.begin(), covered.end());
  EXPECT_EQ(covered, (std::vector<std::string>{"S1", "S3"}));
  EXPECT_EQ(j["route"]["nodes"].front(), 0);
  EXPECT_EQ(j["route"]["nodes"].back(), 0);
}

TEST_F(ServiceTest, SlopeDetail) {
  const auto r = get(service, "/api/slopes/S2");
  ASSERT_EQ(r.status, 200);
  const auto j = r.json();
  EXPECT_EQ(j["name"], "Waldweg");
  EXPECT_EQ(j["difficulty"], "easy");
  double sum = 0;
  for (const auto& [k, v] : j["compass_histogram"].items()) sum += v.get<double>();
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(j["compass_histogram"]["SE"].get<double>(), 2.0 / 6.0, 1e-12);
  EXPECT_EQ(j["altitude_profile"].size(), 6u);
  EXPECT_NEAR(j["max_steepness"].get<double>(), 20.0, 1e-12);
  EXPECT_EQ(get(service, "/api/slopes/L1").json()["lift_type"], "chair");
  EXPECT_EQ(get(service, "/api/slopes/nothing").status, 404);
}

TEST_F(ServiceTest, ResortGeoJson) {
  const auto r = get(service, "/api/resort");
  ASSERT_EQ(r.status, 200);
  const auto j = r.json();
  EXPECT_EQ(j["type"], "FeatureCollection");
  std::size_t edges = 0, nodes = 0;
  const auto g = fx::five_slope_resort();
  for (const auto& f : j["features"]) {
    const auto& p = f["properties"];
    if (p["feature_type"] == "edge") {
      ++edges;
      EXPECT_EQ(p["steepness"].size(), g.find_edge(p["id"].get<std::string>())->K());
      EXPECT_EQ(f["geometry"]["type"], "LineString");
    } else {
      ++nodes;
    }
  }
  EXPECT_EQ(edges, 7u);
  EXPECT_EQ(nodes, 3u);
}

TEST_F(ServiceTest, BadRequests) {
  auto expect = [](const Response& r, int status, const std::string& field) {
    EXPECT_EQ(r.status, status) << r.body;
    if (!field.empty()) EXPECT_EQ(r.json()["field"], field) << r.body;
  };
  expect(service.handle({"POST", "/api/rank", {}, "{not json"}), 400, "body");
  expect(post(service, "/api/rank", json::object()), 400, "preferences");
  expect(post(service, "/api/rank", {{"preset", "powder"}}), 400, "preset");
  json bad = fixture_preferences();
  bad["preferences"][0]["weight"] = 2;
  expect(post(service, "/api/rank", {{"preferences", bad}}), 400, "preferences[0].weight");
  expect(post(service, "/api/route", {{"mode", "fly"}, {"preset", "easy"}}), 400, "mode");
  expect(post(service, "/api/route", {{"mode", "auto"}, {"start_node", 0}, {"end_node", 0}, {"preset", "easy"}}), 400,
         "duration");
  expect(post(service, "/api/route",
              {{"mode", "semi"}, {"start_node", 0}, {"end_node", 0}, {"favorites", {"L1"}}, {"preset", "easy"}}),
         400, "favorites");
  EXPECT_EQ(get(service, "/api/rank").status, 405);
}

TEST_F(ServiceTest, NotFoundAndUnprocessable) {
  const auto prefs = fixture_preferences();
  EXPECT_EQ(post(service, "/api/route",
                 {{"mode", "semi"}, {"start_node", 0}, {"end_node", 42}, {"favorites", {"S1"}}, {"preferences", prefs}})
                .status,
            404);
  EXPECT_EQ(post(service, "/api/route",
                 {{"mode", "semi"}, {"start_node", 0}, {"end_node", 0}, {"favorites", {"S9"}}, {"preferences", prefs}})
                .status,
            404);
  const auto infeasible = post(service, "/api/route",
                               {{"mode", "auto"}, {"start_node", 1}, {"end_node", 0}, {"duration", 60}, {"preferences", prefs}});
  EXPECT_EQ(infeasible.status, 422);
  EXPECT_EQ(infeasible.json()["error"], "InfeasibleDuration");
  const auto empty = post(service, "/api/route",
                          {{"mode", "semi"}, {"start_node", 0}, {"end_node", 0}, {"favorites", json::array()},
                           {"preferences", prefs}});
  EXPECT_EQ(empty.status, 422);
  EXPECT_EQ(empty.json()["error"], "EmptyPlan");
  // no favorites but distinct endpoints: a plain transfer route
  const auto transfer = post(service, "/api/route",
                             {{"mode", "semi"}, {"start_node", 1}, {"end_node", 2}, {"favorites", json::array()},
                              {"preferences", prefs}});
  EXPECT_EQ(transfer.status, 200) << transfer.body;
}

TEST_F(ServiceTest, UnreachableIs422) {
  auto g = fx::five_slope_resort();
  g.edges.erase(g.edges.begin());  // without L1 nothing reaches T1
  ResortBundle b;
  b.name = "cut";
  b.graph = g;
  ResortService s;
  s.load(b);
  const auto r = post(s, "/api/route",
                      {{"mode", "semi"}, {"start_node", 0}, {"end_node", 0}, {"favorites", {"S1"}},
                       {"preferences", fixture_preferences()}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.json()["error"], "UnreachableFavorite");
}

TEST_F(ServiceTest, Heatmap) {
  const auto sw = fx::at(-50, -50), ne = fx::at(750, 750);
  char bbox[128];
  std::snprintf(bbox, sizeof bbox, "%.8f,%.8f,%.8f,%.8f", sw.lon, sw.lat, ne.lon, ne.lat);
  const auto r = get(service, "/api/heatmap", {{"bbox", bbox}, {"cell", "10"}});
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.content_type, "image/png");
  EXPECT_EQ(r.body.substr(1, 3), "PNG");
  EXPECT_EQ(get(service, "/api/heatmap").status, 200);
  EXPECT_EQ(get(service, "/api/heatmap", {{"bbox", "1,2,3"}}).status, 400);
  EXPECT_EQ(get(service, "/api/heatmap", {{"bbox", bbox}, {"cell", "0.001"}}).status, 400);
  EXPECT_EQ(get(service, "/api/heatmap", {{"bbox", "0,0,0.001,0.001"}}).status, 404);

  ResortService no_tracks;
  no_tracks.load(fx::five_slope_bundle());
  EXPECT_EQ(get(no_tracks, "/api/heatmap").status, 404);
}

TEST_F(ServiceTest, OverRealSocket) {
  httplib::Server server;
  service.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");
  const json body{{"mode", "auto"}, {"start_node", 0}, {"end_node", 0}, {"duration", 7200},
                  {"preferences", fixture_preferences()}};
  auto route = client.Post("/api/route", body.dump(), "application/json");
  ASSERT_TRUE(route);
  EXPECT_EQ(route->status, 200);
  EXPECT_EQ(json::parse(route->body)["favorites"].size(), 4u);
  auto missing = client.Get("/api/slopes/zz");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto options = client.Options("/api/route");
  ASSERT_TRUE(options);
  EXPECT_EQ(options->status, 204);

  server.stop();
  worker.join();
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "skiroute/bundle.hpp"
#include "skiroute/elevation.hpp"
#include "skiroute/network.hpp"
#include "skiroute/segmentation.hpp"

using namespace skiroute;
using fixtures::at;
using fixtures::path;

namespace {

// 2x2 grid with one-degree cells, values listed top row first.
ElevationGrid patch(double a, double b, double c, double d) {
  ElevationGrid g;
  g.origin = {0.0, 0.0, std::nullopt};
  g.cell_size = 1.0;
  g.ncols = 2;
  g.nrows = 2;
  g.values = {a, b, c, d};
  return g;
}

// Grid whose elevation falls by `grade` meters per meter going south; exact
// under bilinear interpolation because it is linear in latitude.
ElevationGrid tilted_grid(double ele_at_origin, double grade) {
  ElevationGrid g;
  g.origin = at(-500, -500);
  g.cell_size = 0.0001;
  g.ncols = 130;
  g.nrows = 100;
  const LocalFrame& f = fixtures::frame();
  for (std::size_t row = 0; row < g.nrows; ++row)
    for (std::size_t col = 0; col < g.ncols; ++col) {
      const double y = f.to_local(g.cell_center(col, row)).y;
      g.values.push_back(ele_at_origin + grade * y);
    }
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// Geometry and elevation

TEST(Geo, HaversineMatchesOracle) {
  const GeoPoint a{10.0, 47.0, std::nullopt}, b{10.01, 47.02, std::nullopt};
  EXPECT_NEAR(distance(a, b), oracle::haversine_length({{10.0, 47.0}, {10.01, 47.02}}), 1e-6);
}

TEST(Geo, BearingCardinals) {
  EXPECT_NEAR(bearing(at(0, 0), at(0, 100)), 0.0, 1e-6);
  EXPECT_NEAR(bearing(at(0, 0), at(100, 0)), 90.0, 1e-3);
  EXPECT_NEAR(bearing(at(0, 100), at(0, 0)), 180.0, 1e-6);
  EXPECT_EQ(compass_from_bearing(-22.5), Compass::N);
  EXPECT_EQ(compass_from_bearing(22.4999), Compass::N);
  EXPECT_EQ(compass_from_bearing(22.5), Compass::NE);
  EXPECT_EQ(compass_from_bearing(180.0), Compass::S);
  EXPECT_EQ(compass_from_bearing(337.5), Compass::N);
}

TEST(Elevation, ReproducesCellCenters) {
  auto g = patch(1000, 1100, 1200, 1300);
  EXPECT_DOUBLE_EQ(sample_elevation(g, g.cell_center(0, 0)), 1000.0);
  EXPECT_DOUBLE_EQ(sample_elevation(g, g.cell_center(1, 1)), 1300.0);
  g.values[1] = 2100;
  EXPECT_DOUBLE_EQ(sample_elevation(g, g.cell_center(1, 0)), 2100.0);
}

TEST(Elevation, MidpointBetweenTwoCells) {
  auto g = patch(2000, 2100, 2000, 2100);
  EXPECT_DOUBLE_EQ(sample_elevation(g, {1.0, 1.0, std::nullopt}), 2050.0);
}

TEST(Elevation, FractionalOffsetMatchesScalarBilinear) {
  auto g = patch(1000, 1100, 1200, 1300);
  // offset (0.25, 0.75) between the four centers, x east from the left column,
  // y south from the top row
  const double tx = 0.25, ty = 0.75;
  const GeoPoint p{0.5 + tx, 1.5 - ty, std::nullopt};
  const double top = 1000 + tx * (1100 - 1000);
  const double bottom = 1200 + tx * (1300 - 1200);
  EXPECT_NEAR(sample_elevation(g, p), top + ty * (bottom - top), 1e-9);
}

TEST(Elevation, NodataRenormalizesAndFails) {
  auto g = patch(1000, -9999, 1200, 1300);
  const GeoPoint p{1.0, 1.0, std::nullopt};  // equal weights
  EXPECT_NEAR(sample_elevation(g, p), (1000 + 1200 + 1300) / 3.0, 1e-9);
  auto dead = patch(-9999, -9999, -9999, -9999);
  try {
    sample_elevation(dead, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllNoData);
  }
  try {
    sample_elevation(g, {5.0, 5.0, std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfBounds);
  }
}

TEST(Elevation, EsriAsciiRoundTrip) {
  const std::string text =
      "ncols 3\nnrows 2\nxllcorner 10.0\nyllcorner 47.0\ncellsize 0.5\nNODATA_value -9999\n"
      "1 2 3\n4 -9999 6\n";
  std::istringstream in(text);
  const auto g = read_esri_ascii(in);
  EXPECT_EQ(g.ncols, 3u);
  EXPECT_EQ(g.nrows, 2u);
  EXPECT_DOUBLE_EQ(g.at(2, 0), 3.0);
  EXPECT_TRUE(g.is_nodata(g.at(1, 1)));
  std::ostringstream out;
  write_esri_ascii(out, g);
  std::istringstream again(out.str());
  const auto g2 = read_esri_ascii(again);
  EXPECT_EQ(g2.values, g.values);
  EXPECT_DOUBLE_EQ(g2.cell_size, g.cell_size);

  std::istringstream bad("ncols 3\nnrows 2\ncellsize 1\n1 2 3\n");
  EXPECT_THROW(read_esri_ascii(bad), Error);
}

// ---------------------------------------------------------------------------
// Segmentation

std::vector<double> lengths_of(const std::vector<SubSegment>& s) {
  std::vector<double> out;
  for (const auto& x : s) out.push_back(x.length);
  return out;
}

TEST(Segmentize, MergesShortRemainder) {
  const Polyline line{at(0, 0), at(0, 95)};
  const double total = polyline_length(line);
  const auto segs = segmentize(line);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_NEAR(segs[0].length, 30.0, 1e-9);
  EXPECT_NEAR(segs[1].length, 30.0, 1e-9);
  EXPECT_NEAR(segs[2].length, total - 60.0, 1e-9);
  EXPECT_NEAR(total, 95.0, 0.01);
}

TEST(Segmentize, ExactDivisionAndLongRemainder) {
  const Polyline line{at(0, 0), at(90.0001, 0)};
  EXPECT_EQ(segmentize(line).size(), 3u);
  const Polyline longer{at(0, 0), at(0, 110)};
  const auto segs = segmentize(longer);
  ASSERT_EQ(segs.size(), 4u);  // 30, 30, 30, 20
  EXPECT_NEAR(segs.back().length, polyline_length(longer) - 90.0, 1e-9);
}

TEST(Segmentize, DegenerateInputs) {
  EXPECT_THROW(segmentize(Polyline{at(0, 0)}), Error);
  try {
    segmentize(Polyline{at(0, 0), at(0, 0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

// Dense resampling oracle: walk the zigzag in 1 cm steps and cut every 30 m.
TEST(Segmentize, ZigzagMatchesArcLengthWalk) {
  const Polyline zz = path({{0, 0}, {50, 30}, {0, 60}, {50, 90}});
  const double total = polyline_length(zz);
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < zz.size(); ++i) cum.push_back(cum.back() + distance(zz[i - 1], zz[i]));
  double walked = 0.0, since = 0.0;
  std::vector<double> expected;
  for (std::size_t i = 1; i < zz.size(); ++i) {
    const double leg = cum[i] - cum[i - 1];
    for (double s = 0.01; s <= leg + 1e-12; s += 0.01) {
      since += 0.01;
      walked += 0.01;
      if (since >= 30.0 - 1e-6) {
        expected.push_back(since);
        since = 0.0;
      }
    }
  }
  const double rest = total - std::accumulate(expected.begin(), expected.end(), 0.0);
  if (rest < 15.0) expected.back() += rest;
  else expected.push_back(rest);

  const auto got = lengths_of(segmentize(zz));
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 0.05);
}

TEST(Segmentize, LengthsSumToPolylineLengthProperty) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> step(-200, 200);
  std::uniform_int_distribution<int> npts(2, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::pair<double, double>> lonlat;
    Polyline line;
    double x = 0, y = 0;
    const int n = npts(rng);
    for (int i = 0; i < n; ++i) {
      const auto p = at(x, y);
      line.push_back(p);
      lonlat.emplace_back(p.lon, p.lat);
      x += step(rng);
      y += step(rng);
    }
    const double expected = oracle::haversine_length(lonlat);
    if (expected < 1.0) continue;
    const auto segs = segmentize(line);
    double sum = 0.0;
    for (const auto& s : segs) {
      EXPECT_GT(s.length, 0.0);
      sum += s.length;
    }
    EXPECT_LE(std::abs(sum - expected) / expected, 0.005) << "trial " << trial;
  }
}

TEST(Attribution, FlatGridGivesZeroSteepness) {
  auto g = tilted_grid(2000, 0.0);
  Edge e;
  e.geometry = path({{0, 300}, {40, 150}, {0, 0}});
  attribute_edge(e, g);
  for (const auto& s : e.subsegments) {
    EXPECT_TRUE(s.attributed);
    EXPECT_NEAR(s.steepness, 0.0, 1e-9);
  }
  EXPECT_EQ(e.difficulty, Difficulty::easy);
}

TEST(Attribution, ThirtyPercentDueSouth) {
  // 0.3 m of drop per meter south: a 30 m piece from 2030 m ends at 2021 m
  auto g = tilted_grid(2000, 0.3);
  SubSegment s;
  s.start = at(0, 100);
  s.end = at(0, 70);
  s.mid = at(0, 85);
  s.length = distance(s.start, s.end);
  const auto a = attribute_segment(s, g);
  ASSERT_TRUE(a.attributed);
  EXPECT_NEAR(sample_elevation(g, s.start), 2030.0, 1e-6);
  EXPECT_NEAR(sample_elevation(g, s.end), 2021.0, 1e-6);
  EXPECT_NEAR(a.steepness, 30.0, 0.01);
  EXPECT_NEAR(a.altitude, 2025.5, 1e-6);
  EXPECT_EQ(a.compass, Compass::S);

  const auto r = a.reversed();
  EXPECT_DOUBLE_EQ(r.steepness, -a.steepness);
  EXPECT_EQ(r.compass, Compass::N);
}

TEST(Attribution, OutOfGridMarksMissingInsteadOfThrowing) {
  auto g = tilted_grid(2000, 0.1);
  SubSegment s;
  s.start = at(5000, 0);
  s.end = at(5000, -30);
  s.mid = at(5000, -15);
  s.length = 30;
  EXPECT_FALSE(attribute_segment(s, g).attributed);
}

TEST(Difficulty, ThresholdsAndMonotonicity) {
  EXPECT_EQ(classify_difficulty(24.9), Difficulty::easy);
  EXPECT_EQ(classify_difficulty(25.0), Difficulty::easy);
  EXPECT_EQ(classify_difficulty(40.0), Difficulty::intermediate);
  EXPECT_EQ(classify_difficulty(40.0001), Difficulty::advanced);
  EXPECT_EQ(classify_difficulty(55.0), Difficulty::advanced);
  int last = 0;
  for (double s = 0; s < 80; s += 0.1) {
    const int c = static_cast<int>(classify_difficulty(s));
    EXPECT_GE(c, last);
    last = c;
  }
}

TEST(Difficulty, Discrepancy) {
  EXPECT_DOUBLE_EQ(discrepancy(30, Difficulty::intermediate), 0.0);
  EXPECT_DOUBLE_EQ(discrepancy(33, Difficulty::easy), 8.0);
  EXPECT_DOUBLE_EQ(discrepancy(10, Difficulty::intermediate), -15.0);
  EXPECT_DOUBLE_EQ(discrepancy(90, Difficulty::advanced), 0.0);
  EXPECT_DOUBLE_EQ(discrepancy(-5, Difficulty::easy), -5.0);
  try {
    discrepancy(30, Difficulty::freeride);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotApplicable);
  }
  for (double s = -20; s < 80; s += 0.5)
    for (auto d : {Difficulty::easy, Difficulty::intermediate, Difficulty::advanced}) {
      const auto band = difficulty_band(d);
      EXPECT_EQ(discrepancy(s, d) == 0.0, s >= band.lo && s <= band.hi);
    }
}

TEST(Difficulty, UndeclaredSlopeDerivedFromSteepestDownhillPiece) {
  auto g = tilted_grid(2000, 0.45);
  Edge e;
  e.kind = EdgeKind::slope;
  e.geometry = path({{0, 200}, {0, 0}});
  attribute_edge(e, g);
  EXPECT_EQ(e.difficulty, Difficulty::advanced);
}

// ---------------------------------------------------------------------------
// Network building

TEST(Ingest, TagMappingAndRejections) {
  std::vector<RawFeature> features{
      fixtures::raw("a", "slope", {at(0, 100), at(0, 0)}, {{"piste:difficulty", "advanced"}, {"piste:grooming", "mogul"}}),
      fixtures::raw("b", "lift", {at(0, 0), at(0, 100)}, {{"aerialway", "gondola"}, {"oneway", "no"}}),
      fixtures::raw("c", "slope", {at(0, 0)}),
      fixtures::raw("d", "bus", {at(0, 0), at(10, 0)}),
      fixtures::raw("e", "slope", {at(0, 0), at(10, 0)}, {{"piste:difficulty", "expert"}}),
      fixtures::raw("", "slope", {at(0, 0), at(10, 0)}, {{"piste:difficulty", "weird"}}),
  };
  const auto r = ingest(features);
  ASSERT_EQ(r.edges.size(), 4u);
  ASSERT_EQ(r.rejected.size(), 2u);
  EXPECT_EQ(r.rejected[0].id, "c");
  EXPECT_EQ(r.rejected[1].id, "d");
  EXPECT_EQ(r.edges[0].difficulty, Difficulty::advanced);
  EXPECT_FALSE(r.edges[0].groomed);
  EXPECT_TRUE(r.edges[1].bidirectional);
  EXPECT_EQ(r.edges[1].lift_type, LiftType::gondola);
  EXPECT_EQ(r.edges[2].difficulty, Difficulty::advanced);
  EXPECT_FALSE(r.edges[3].difficulty_declared);
  EXPECT_EQ(r.edges[3].id, "slope-5");
}

TEST(Ingest, OrientsByEndpointElevation) {
  auto low = at(0, 0), high = at(0, 200);
  low.ele = 1500;
  high.ele = 1700;
  const auto r = ingest({fixtures::raw("s", "slope", {low, high}), fixtures::raw("l", "lift", {high, low})});
  ASSERT_EQ(r.edges.size(), 2u);
  EXPECT_EQ(*r.edges[0].geometry.front().ele, 1700);
  EXPECT_EQ(*r.edges[1].geometry.front().ele, 1500);
}

TEST(Topology, SnapsWithinTolerance) {
  auto make = [](std::vector<RawFeature> f) { return build_topology(ingest(f).edges); };
  auto shared = make({fixtures::raw("a", "slope", {at(0, 100), at(0, 0)}), fixtures::raw("b", "slope", {at(0, 0), at(50, -50)})});
  EXPECT_EQ(shared.nodes.size(), 3u);
  EXPECT_EQ(shared.degrees()[shared.edges[0].to], 2u);

  auto near = make({fixtures::raw("a", "slope", {at(0, 100), at(0, 0)}), fixtures::raw("b", "slope", {at(0.8, 0), at(50, -50)})});
  EXPECT_EQ(near.nodes.size(), 3u);

  auto far = make({fixtures::raw("a", "slope", {at(0, 100), at(0, 0)}), fixtures::raw("b", "slope", {at(5, 0), at(50, -50)})});
  EXPECT_EQ(far.nodes.size(), 4u);
}

TEST(Topology, IndependentOfInputOrder) {
  auto features = fixtures::repair_features();
  const auto reference = build_topology(ingest(features).edges);
  std::mt19937 rng(3);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(features.begin(), features.end(), rng);
    const auto g = build_topology(ingest(features).edges);
    ASSERT_EQ(g.nodes.size(), reference.nodes.size());
    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
      EXPECT_EQ(g.nodes[n].position.lon, reference.nodes[n].position.lon);
      EXPECT_EQ(g.nodes[n].position.lat, reference.nodes[n].position.lat);
    }
    for (const auto& e : reference.edges) {
      const Edge* other = g.find_edge(e.id);
      ASSERT_NE(other, nullptr);
      EXPECT_EQ(other->from, e.from);
      EXPECT_EQ(other->to, e.to);
    }
  }
}

namespace {

std::optional<NodeId> node_near(const ResortGraph& g, double x, double y) {
  for (const auto& n : g.nodes)
    if (distance(n.position, at(x, y)) < 0.5) return n.id;
  return std::nullopt;
}

// Reachability ignoring direction, for the "verify by graph search" check.
bool linked(const ResortGraph& g, NodeId a, NodeId b) {
  std::vector<bool> seen(g.nodes.size(), false);
  std::vector<NodeId> stack{a};
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    if (u == b) return true;
    if (seen[u]) continue;
    seen[u] = true;
    for (const auto& e : g.edges) {
      if (e.from == u) stack.push_back(e.to);
      if (e.to == u) stack.push_back(e.from);
    }
  }
  return false;
}

}  // namespace

TEST(Repair, SingleTwentyMeterGap) {
  auto g = build_topology(ingest({fixtures::raw("lift", "lift", {at(0, 0), at(0, 300)}),
                                  fixtures::raw("main", "slope", {at(0, 300), at(60, 150), at(0, 0)}),
                                  fixtures::raw("side", "slope", {at(0, 300), at(-40, 150), at(20, 0)})})
                             .edges);
  const auto end = *node_near(g, 20, 0);
  const auto base = *node_near(g, 0, 0);
  EXPECT_FALSE(linked(g, end, base) && g.degrees()[end] > 1);
  const auto r = repair_connectivity(g);
  EXPECT_EQ(r.helper_edges_inserted, 1u);
  EXPECT_EQ(r.dead_ends_before, 1u);
  EXPECT_EQ(r.dead_ends_after, 0u);
  ASSERT_EQ(r.helpers.size(), 1u);
  EXPECT_NEAR(r.helpers[0].length, 20.0, 0.01);
  const Edge* h = g.find_edge(r.helpers[0].id);
  ASSERT_NE(h, nullptr);
  EXPECT_TRUE(h->is_helper());
  EXPECT_TRUE(h->traversable_reverse());
  EXPECT_EQ(std::minmax(h->from, h->to), std::minmax(end, base));
}

TEST(Repair, GapBeyondRadiusStays) {
  auto g = build_topology(ingest({fixtures::raw("lift", "lift", {at(0, 0), at(0, 300)}),
                                  fixtures::raw("main", "slope", {at(0, 300), at(60, 150), at(0, 0)}),
                                  fixtures::raw("side", "slope", {at(0, 300), at(-40, 150), at(45, 0)})})
                             .edges);
  const auto r = repair_connectivity(g);
  EXPECT_EQ(r.helper_edges_inserted, 0u);
  EXPECT_EQ(r.dead_ends_after, 1u);
}

TEST(Repair, ThreeGapsIdempotentAndComponentsNeverIncrease) {
  auto g = fixtures::repair_resort();
  const auto comps_before = weak_components(g).size();
  const auto first = repair_connectivity(g);
  EXPECT_EQ(first.dead_ends_before, 3u);
  EXPECT_EQ(first.helper_edges_inserted, 2u);
  EXPECT_EQ(first.dead_ends_after, 1u);
  EXPECT_LE(weak_components(g).size(), comps_before);
  const auto second = repair_connectivity(g);
  EXPECT_EQ(second.helper_edges_inserted, 0u);
  EXPECT_EQ(second.dead_ends_before, second.dead_ends_after);
}

TEST(Validate, LengthsAndComponents) {
  auto g = build_topology(ingest({fixtures::raw("e1", "slope", {at(0, 1000), at(0, 0)}, {{"piste:difficulty", "easy"}}),
                                  fixtures::raw("e2", "slope", {at(0, 0), at(2000, 0)}, {{"piste:difficulty", "easy"}}),
                                  fixtures::raw("lonely", "slope", {at(5000, 5000), at(5000, 4800)},
                                                {{"piste:difficulty", "advanced"}})})
                             .edges);
  const auto q = validate(g);
  EXPECT_NEAR(q.length_by_difficulty.at(Difficulty::easy), 3000.0, 3.0);
  EXPECT_NEAR(q.length_by_difficulty.at(Difficulty::advanced), 200.0, 0.5);
  EXPECT_NEAR(q.total_slope_length, 3200.0, 3.5);
  ASSERT_EQ(q.disconnected_components.size(), 1u);
  EXPECT_EQ(q.disconnected_components[0], std::vector<std::string>{"lonely"});
  EXPECT_EQ(q.missing_attributes.size(), 3u);  // nothing attributed yet
}

TEST(Build, EndToEndWithDem) {
  auto grid = tilted_grid(2000, 0.3);
  auto features = fixtures::repair_features();
  const auto built = build_resort(features, grid);
  EXPECT_EQ(built.repair.helper_edges_inserted, 2u);
  for (const auto& e : built.graph.edges) {
    EXPECT_TRUE(e.fully_attributed()) << e.id;
    if (e.is_slope()) {
      const auto& from = built.graph.nodes[e.from];
      const auto& to = built.graph.nodes[e.to];
      ASSERT_TRUE(from.elevation && to.elevation);
      EXPECT_GE(*from.elevation, *to.elevation - 5.0) << e.id;
    }
    if (e.is_lift()) {
      double s = 0;
      for (const auto& seg : e.subsegments) s += seg.steepness;
      EXPECT_LT(s, 0.0);  // lifts climb
    }
  }
}

TEST(Parsers, GeoJsonAndNativeSchemas) {
  const auto geo = nlohmann::json::parse(R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "id": "way/1",
       "properties": {"piste:type": "downhill", "piste:difficulty": "novice", "name": "Blue"},
       "geometry": {"type": "LineString", "coordinates": [[10.0, 47.0, 1800], [10.001, 47.0, 1700]]}},
      {"type": "Feature", "properties": {"aerialway": "t-bar", "@id": "way/2"},
       "geometry": {"type": "LineString", "coordinates": [[10.0, 47.0], [10.0, 47.001]]}},
      {"type": "Feature", "properties": {"piste:type": "nordic"},
       "geometry": {"type": "LineString", "coordinates": [[10.0, 47.0], [10.0, 47.001]]}}
    ]})");
  const auto f = parse_features(geo);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0].kind, "slope");
  EXPECT_EQ(f[0].id, "way/1");
  EXPECT_EQ(f[1].kind, "lift");
  EXPECT_EQ(f[1].id, "way/2");
  const auto r = ingest(f);
  EXPECT_EQ(r.edges.size(), 2u);
  EXPECT_EQ(r.edges[0].difficulty, Difficulty::easy);
  EXPECT_EQ(r.edges[1].lift_type, LiftType::t_bar);
  EXPECT_EQ(r.rejected.size(), 1u);

  const auto native = nlohmann::json::parse(R"({"features": [
      {"id": "n1", "kind": "slope", "coordinates": [[10.0, 47.0], [10.0, 46.999]],
       "tags": {"difficulty": "intermediate", "grooming": "backcountry"}},
      {"id": "n2", "kind": "lift", "coordinates": [[10.0, 46.999], [10.0, 47.0]],
       "tags": {"lift_type": "chair_lift", "heated_seats": true, "occupancy": 6}}]})");
  const auto n = ingest(parse_features(native));
  ASSERT_EQ(n.edges.size(), 2u);
  EXPECT_FALSE(n.edges[0].groomed);
  EXPECT_TRUE(n.edges[1].amenities.heated_seats);
  EXPECT_EQ(n.edges[1].amenities.occupancy, 6);
}

// ---------------------------------------------------------------------------
// Bundle persistence

TEST(Bundle, RoundTripIsByteIdentical) {
  auto bundle = fixtures::five_slope_bundle();
  bundle.repair.dead_ends_before = 3;
  bundle.repair.helpers.push_back({"helper-1", 0, 1, 12.5});
  const std::string first = serialize_bundle(bundle);
  const auto loaded = parse_bundle(first);
  EXPECT_EQ(serialize_bundle(loaded), first);
  ASSERT_EQ(loaded.graph.edges.size(), bundle.graph.edges.size());
  for (std::size_t i = 0; i < bundle.graph.edges.size(); ++i) {
    const auto& a = bundle.graph.edges[i];
    const auto& b = loaded.graph.edges[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.K(), b.K());
    EXPECT_EQ(a.popularity, b.popularity);
    for (std::size_t k = 0; k < a.K(); ++k) EXPECT_EQ(a.subsegments[k].steepness, b.subsegments[k].steepness);
  }
  EXPECT_EQ(loaded.repair.helpers.size(), 1u);
}

TEST(Bundle, FileRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "skiroute_bundle_test.json").string();
  save_bundle(fixtures::five_slope_bundle(), path);
  const auto b = load_bundle(path);
  EXPECT_EQ(b.name, "Five Slope Fixture");
  std::filesystem::remove(path);
  try {
    load_bundle(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Bundle, RejectsCorruptInput) {
  const std::string text = serialize_bundle(fixtures::five_slope_bundle());
  auto code_of = [](const std::string& t) {
    try {
      parse_bundle(t);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;  // no error
  };
  EXPECT_EQ(code_of(text.substr(0, text.size() / 2)), ErrorCode::ParseError);

  auto doc = nlohmann::json::parse(text);
  doc["format_version"] = 999;
  EXPECT_EQ(code_of(doc.dump()), ErrorCode::VersionMismatch);

  doc = nlohmann::json::parse(text);
  doc["edges"][0]["name"] = "tampered";
  EXPECT_EQ(code_of(doc.dump()), ErrorCode::ChecksumMismatch);

  try {
    parse_bundle("{\"format_version\": 1,");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("at byte"), std::string::npos);
  }
}

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "skiroute/error.hpp"
#include "skiroute/model.hpp"
#include "skiroute/preference.hpp"
#include "skiroute/segmentation.hpp"

namespace skiroute {

inline constexpr double kLiftCostFactor = 2.0;
inline constexpr double kHelperCostFactor = 0.1;
inline constexpr double kWalkingSpeed = 1.0;        // m/s on helper connectors
inline constexpr double kNominalSlopeSpeed = 8.0;   // m/s when no travel time is known
inline constexpr double kNominalLiftSpeed = 4.0;    // m/s
inline constexpr std::size_t kExactSequencingLimit = 8;
inline constexpr double kDurationLowerFactor = 0.90;
inline constexpr double kDurationUpperFactor = 1.10;

/// Directed traversal of an edge.
struct Arc {
  std::size_t edge = 0;
  NodeId from = 0;
  NodeId to = 0;
  bool reversed = false;
  double cost = 0.0;

  bool reverse_lift(const ResortGraph& g) const { return reversed && g.edges[edge].is_lift(); }
};

/// A resort graph with per-request routing costs: slopes carry their
/// preference cost, lifts 2K in each available direction, helpers 0.1K.
struct CostedGraph {
  const ResortGraph* graph = nullptr;
  std::vector<Arc> arcs;
  std::vector<std::vector<std::size_t>> outgoing;  // node -> arc indices
  std::vector<std::size_t> forward_arc;            // edge -> its forward arc
  std::vector<std::string> warnings;

  const ResortGraph& resort() const { return *graph; }
  const Arc& forward(std::size_t edge) const { return arcs[forward_arc[edge]]; }
};

inline double lift_cost(const Edge& e) { return kLiftCostFactor * static_cast<double>(e.K()); }

inline CostedGraph build_costed_graph(const ResortGraph& g, const PreferenceSet& prefs,
                                      bool include_reverse_lifts = true) {
  prefs.require_active();
  g.check();
  CostedGraph cg;
  cg.graph = &g;
  cg.outgoing.resize(g.nodes.size());
  cg.forward_arc.resize(g.edges.size());
  auto add_arc = [&](Arc a) {
    cg.outgoing[a.from].push_back(cg.arcs.size());
    cg.arcs.push_back(a);
  };
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const Edge& e = g.edges[i];
    const double K = static_cast<double>(std::max<std::size_t>(e.K(), 1));
    if (e.K() == 0) cg.warnings.push_back(e.id + ": no subsegments, treated as K=1");
    double cost = 0.0;
    switch (e.kind) {
      case EdgeKind::slope:
        try {
          cost = slope_cost(e, prefs).total;
        } catch (const Error& err) {
          if (err.code() != ErrorCode::MissingAttribute) throw;
          cost = K;
          cg.warnings.push_back(e.id + ": " + err.what() + "; using worst-case cost");
        }
        break;
      case EdgeKind::lift: cost = kLiftCostFactor * K; break;
      case EdgeKind::helper: cost = kHelperCostFactor * K; break;
    }
    cg.forward_arc[i] = cg.arcs.size();
    add_arc({i, e.from, e.to, false, cost});
    if (e.is_helper() || (e.is_lift() && e.bidirectional && include_reverse_lifts))
      add_arc({i, e.to, e.from, true, cost});
  }
  return cg;
}

struct RouteStep {
  std::string edge_id;
  bool reversed = false;

  friend bool operator==(const RouteStep&, const RouteStep&) = default;
};

struct Route {
  std::vector<RouteStep> steps;
  std::vector<NodeId> nodes;
  std::vector<std::string> favorites_covered;  // in visiting order
  double cost = 0.0;
  std::vector<std::size_t> arcs;  // indices into the CostedGraph that produced the route

  bool empty() const { return steps.empty(); }
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool nearly_equal(double a, double b) {
  if (a == b) return true;
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Ordering used by the router: fewer reversed lift rides first, then total
/// cost, then fewer edges, then lexicographic edge ids.
struct Label {
  std::size_t reverse_lifts = 0;
  double cost = kInf;
  std::vector<std::size_t> arcs;

  bool reachable() const { return cost < kInf; }
};

inline bool better(const CostedGraph& cg, const Label& a, const Label& b) {
  if (a.reverse_lifts != b.reverse_lifts) return a.reverse_lifts < b.reverse_lifts;
  if (!nearly_equal(a.cost, b.cost)) return a.cost < b.cost;
  if (a.arcs.size() != b.arcs.size()) return a.arcs.size() < b.arcs.size();
  const auto& g = cg.resort();
  for (std::size_t i = 0; i < a.arcs.size(); ++i) {
    const Arc& x = cg.arcs[a.arcs[i]];
    const Arc& y = cg.arcs[b.arcs[i]];
    const auto& ix = g.edges[x.edge].id;
    const auto& iy = g.edges[y.edge].id;
    if (ix != iy) return ix < iy;
    if (x.reversed != y.reversed) return !x.reversed;
  }
  return false;
}

}  // namespace detail

/// Single-source shortest routes under the router ordering.
class ShortestPathTree {
 public:
  ShortestPathTree(const CostedGraph& cg, NodeId source) : cg_(&cg), labels_(cg.resort().nodes.size()) {
    using detail::Label;
    labels_[source].cost = 0.0;
    auto worse = [&](const std::pair<NodeId, Label>& a, const std::pair<NodeId, Label>& b) {
      return detail::better(cg, b.second, a.second);
    };
    std::priority_queue<std::pair<NodeId, Label>, std::vector<std::pair<NodeId, Label>>, decltype(worse)> queue(worse);
    queue.push({source, labels_[source]});
    std::vector<bool> settled(labels_.size(), false);
    while (!queue.empty()) {
      auto [node, label] = queue.top();
      queue.pop();
      if (settled[node]) continue;
      settled[node] = true;
      for (std::size_t ai : cg.outgoing[node]) {
        const Arc& arc = cg.arcs[ai];
        if (settled[arc.to]) continue;
        Label next;
        next.reverse_lifts = label.reverse_lifts + (arc.reverse_lift(cg.resort()) ? 1 : 0);
        next.cost = label.cost + arc.cost;
        next.arcs = label.arcs;
        next.arcs.push_back(ai);
        if (!labels_[arc.to].reachable() || detail::better(cg, next, labels_[arc.to])) {
          labels_[arc.to] = next;
          queue.push({arc.to, std::move(next)});
        }
      }
    }
  }

  bool reachable(NodeId target) const { return labels_[target].reachable(); }
  double cost(NodeId target) const { return labels_[target].cost; }
  const std::vector<std::size_t>& arcs(NodeId target) const { return labels_[target].arcs; }

 private:
  const CostedGraph* cg_;
  std::vector<detail::Label> labels_;
};

namespace detail {

inline void append_arc(const CostedGraph& cg, Route& route, std::size_t ai) {
  const Arc& arc = cg.arcs[ai];
  if (route.nodes.empty()) route.nodes.push_back(arc.from);
  route.steps.push_back({cg.resort().edges[arc.edge].id, arc.reversed});
  route.nodes.push_back(arc.to);
  route.arcs.push_back(ai);
  route.cost += arc.cost;
}

}  // namespace detail

/// Caches shortest-path trees per source node for repeated queries.
class Router {
 public:
  explicit Router(const CostedGraph& cg) : cg_(&cg) {}

  const CostedGraph& costed() const { return *cg_; }

  const ShortestPathTree& tree(NodeId source) const {
    auto it = cache_.find(source);
    if (it == cache_.end()) it = cache_.emplace(source, std::make_shared<ShortestPathTree>(*cg_, source)).first;
    return *it->second;
  }

  double cost(NodeId from, NodeId to) const { return tree(from).cost(to); }

  Route route(NodeId from, NodeId to) const {
    const auto& g = cg_->resort();
    if (!g.has_node(from) || !g.has_node(to))
      throw Error(ErrorCode::InvalidArgument, "unknown node", std::to_string(g.has_node(from) ? to : from));
    Route r;
    if (from == to) {
      r.nodes.push_back(from);
      return r;
    }
    const auto& t = tree(from);
    if (!t.reachable(to))
      throw Error(ErrorCode::Unreachable,
                  "no directed path from node " + std::to_string(from) + " to node " + std::to_string(to));
    for (std::size_t ai : t.arcs(to)) detail::append_arc(*cg_, r, ai);
    return r;
  }

 private:
  const CostedGraph* cg_;
  mutable std::map<NodeId, std::shared_ptr<ShortestPathTree>> cache_;
};

inline Route shortest_route(const CostedGraph& cg, NodeId from, NodeId to) { return Router(cg).route(from, to); }

// ---------------------------------------------------------------------------
// Favorite sequencing

/// Asymmetric open-path distance matrix over favorites with fixed endpoints.
struct SequencingProblem {
  std::vector<std::string> favorites;     // sorted ids
  std::vector<double> from_start;         // start -> entry_i + cost_i
  std::vector<std::vector<double>> between;  // exit_i -> entry_j + cost_j
  std::vector<double> to_end;             // exit_i -> end

  std::size_t size() const { return favorites.size(); }

  double tour_cost(const std::vector<std::size_t>& order) const {
    if (order.empty()) return detail::kInf;
    double c = from_start[order.front()];
    for (std::size_t i = 1; i < order.size(); ++i) c += between[order[i - 1]][order[i]];
    return c + to_end[order.back()];
  }
};

struct FavoriteSequence {
  std::vector<std::string> order;
  double cost = 0.0;
};

namespace detail {

inline std::vector<std::size_t> canonical_favorites(const ResortGraph& g, std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<std::size_t> edges;
  for (const auto& id : ids) {
    auto idx = g.edge_index(id);
    if (!idx) throw Error(ErrorCode::InvalidArgument, "unknown favorite edge " + id, id);
    edges.push_back(*idx);
  }
  return edges;
}

}  // namespace detail

inline SequencingProblem build_sequencing_problem(const Router& router, NodeId start, NodeId end,
                                                  const std::vector<std::string>& favorites) {
  const auto& cg = router.costed();
  const auto& g = cg.resort();
  const auto edges = detail::canonical_favorites(g, favorites);
  const std::size_t n = edges.size();
  SequencingProblem p;
  p.from_start.resize(n);
  p.to_end.resize(n);
  p.between.assign(n, std::vector<double>(n, detail::kInf));
  for (std::size_t i = 0; i < n; ++i) {
    const Arc& fi = cg.forward(edges[i]);
    p.favorites.push_back(g.edges[edges[i]].id);
    p.from_start[i] = router.cost(start, fi.from) + fi.cost;
    p.to_end[i] = router.cost(fi.to, end);
    if (!std::isfinite(p.from_start[i]) || !std::isfinite(p.to_end[i]))
      throw Error(ErrorCode::UnreachableFavorite,
                  "favorite " + p.favorites[i] + " cannot be visited between start and end", p.favorites[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Arc& fj = cg.forward(edges[j]);
      p.between[i][j] = router.cost(fi.to, fj.from) + fj.cost;
    }
  }
  return p;
}

/// Exhaustive search over all orders (ties keep the lexicographically first).
inline std::vector<std::size_t> sequence_exact(const SequencingProblem& p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> best = order;
  double best_cost = p.tour_cost(order);
  while (std::next_permutation(order.begin(), order.end())) {
    const double c = p.tour_cost(order);
    if (c < best_cost && !detail::nearly_equal(c, best_cost)) {
      best_cost = c;
      best = order;
    }
  }
  return best;
}

/// Nearest-neighbour construction followed by 2-opt segment reversals until no
/// reversal improves the open path.
inline std::vector<std::size_t> sequence_heuristic(const SequencingProblem& p) {
  const std::size_t n = p.size();
  std::vector<std::size_t> order;
  std::vector<bool> used(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t pick = n;
    double pick_cost = detail::kInf;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double c = order.empty() ? p.from_start[j] : p.between[order.back()][j];
      if (pick == n || c < pick_cost) {
        pick = j;
        pick_cost = c;
      }
    }
    used[pick] = true;
    order.push_back(pick);
  }

  double current = p.tour_cost(order);
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t i = 0; i + 1 < n && !improved; ++i)
      for (std::size_t j = i + 1; j < n && !improved; ++j) {
        auto candidate = order;
        std::reverse(candidate.begin() + static_cast<std::ptrdiff_t>(i),
                     candidate.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        const double c = p.tour_cost(candidate);
        if (c < current && !detail::nearly_equal(c, current)) {
          order = std::move(candidate);
          current = c;
          improved = true;
        }
      }
  }
  return order;
}

inline FavoriteSequence solve_sequencing(const SequencingProblem& p) {
  FavoriteSequence out;
  if (p.size() == 0) return out;
  const auto order = p.size() <= kExactSequencingLimit ? sequence_exact(p) : sequence_heuristic(p);
  out.cost = p.tour_cost(order);
  if (!std::isfinite(out.cost)) {
    // Every favorite is reachable on its own but no single chain visits them all.
    std::string culprit = p.favorites[order.back()];
    for (std::size_t i = 0; i < p.size(); ++i) {
      bool has_successor = p.size() == 1;
      for (std::size_t j = 0; j < p.size(); ++j) has_successor |= i != j && std::isfinite(p.between[i][j]);
      bool has_predecessor = p.size() == 1;
      for (std::size_t j = 0; j < p.size(); ++j) has_predecessor |= i != j && std::isfinite(p.between[j][i]);
      if (!has_successor && !has_predecessor) {
        culprit = p.favorites[i];
        break;
      }
    }
    throw Error(ErrorCode::UnreachableFavorite, "no route visits every favorite; blocked at " + culprit, culprit);
  }
  for (auto i : order) out.order.push_back(p.favorites[i]);
  return out;
}

inline FavoriteSequence sequence_favorites(const Router& router, NodeId start, NodeId end,
                                           const std::vector<std::string>& favorites) {
  return solve_sequencing(build_sequencing_problem(router, start, end, favorites));
}

inline FavoriteSequence sequence_favorites(const CostedGraph& cg, NodeId start, NodeId end,
                                           const std::vector<std::string>& favorites) {
  return sequence_favorites(Router(cg), start, end, favorites);
}

// ---------------------------------------------------------------------------
// Summary

struct ProfileSample {
  double distance = 0.0;  // cumulative meters at the end of the subsegment
  double altitude = 0.0;
  double steepness = 0.0;
  std::string edge_id;
};

struct RouteSummary {
  double vertical_descent = 0.0;
  double total_length = 0.0;
  double estimated_time = 0.0;
  std::map<std::string, double> difficulty_distribution;
  std::map<std::string, double> steepness_distribution;
  std::vector<ProfileSample> altitude_profile;
  bool freeride_disclaimer = false;
};

inline double edge_travel_time(const Edge& e) {
  if (e.is_helper()) return e.length() / kWalkingSpeed;
  if (e.median_travel_time) return *e.median_travel_time;
  return e.length() / (e.is_lift() ? kNominalLiftSpeed : kNominalSlopeSpeed);
}

inline std::string steepness_class(double steepness) {
  if (steepness < 0.0) return "uphill";
  return std::string(to_string(classify_difficulty(steepness)));
}

inline std::string difficulty_class(const Edge& e) {
  if (e.is_lift()) return "lift";
  if (e.is_helper()) return "connector";
  return std::string(to_string(e.difficulty));
}

inline RouteSummary summarize(const Route& route, const ResortGraph& g) {
  RouteSummary s;
  std::map<std::string, double> by_difficulty;
  std::map<std::string, double> by_steepness;
  for (const auto& step : route.steps) {
    const Edge* e = g.find_edge(step.edge_id);
    if (!e) throw Error(ErrorCode::InvalidArgument, "route references unknown edge " + step.edge_id, step.edge_id);
    s.estimated_time += edge_travel_time(*e);
    if (e->is_slope() && e->difficulty == Difficulty::freeride) s.freeride_disclaimer = true;
    const std::string dclass = difficulty_class(*e);

    auto visit = [&](const SubSegment& seg) {
      s.total_length += seg.length;
      by_difficulty[dclass] += seg.length;
      const std::string sclass = e->is_lift() ? "lift" : seg.attributed ? steepness_class(seg.steepness) : "unknown";
      by_steepness[sclass] += seg.length;
      if (e->is_slope() && seg.attributed && seg.steepness > 0.0) s.vertical_descent += seg.steepness * seg.length / 100.0;
      s.altitude_profile.push_back({s.total_length, seg.altitude, seg.steepness, e->id});
    };
    if (step.reversed) {
      for (auto it = e->subsegments.rbegin(); it != e->subsegments.rend(); ++it) visit(it->reversed());
    } else {
      for (const auto& seg : e->subsegments) visit(seg);
    }
  }
  for (const auto& [k, v] : by_difficulty)
    if (v > 0.0) s.difficulty_distribution[k] = v / s.total_length;
  for (const auto& [k, v] : by_steepness)
    if (v > 0.0) s.steepness_distribution[k] = v / s.total_length;
  return s;
}

// ---------------------------------------------------------------------------
// Planning workflows

struct Plan {
  Route route;
  RouteSummary summary;
  std::vector<std::string> favorites;  // visiting order
};

namespace detail {

inline Route concatenate(const Router& router, NodeId start, NodeId end, const std::vector<std::string>& order) {
  const auto& cg = router.costed();
  const auto& g = cg.resort();
  Route r;
  r.nodes.push_back(start);
  auto extend = [&](const Route& part) {
    for (auto ai : part.arcs) append_arc(cg, r, ai);
  };
  NodeId at = start;
  for (const auto& id : order) {
    const std::size_t ai = cg.forward_arc[*g.edge_index(id)];
    extend(router.route(at, cg.arcs[ai].from));
    append_arc(cg, r, ai);
    at = cg.arcs[ai].to;
  }
  extend(router.route(at, end));
  r.favorites_covered = order;
  return r;
}

}  // namespace detail

/// Route through user-chosen favorites in the cheapest visiting order.
inline Plan plan_semi_automated(const Router& router, NodeId start, NodeId end,
                                const std::vector<std::string>& favorites) {
  const auto& g = router.costed().resort();
  Plan plan;
  if (favorites.empty()) {
    if (start == end) throw Error(ErrorCode::EmptyPlan, "round trip needs at least one favorite");
    plan.route = router.route(start, end);
  } else {
    if (!g.has_node(start) || !g.has_node(end))
      throw Error(ErrorCode::InvalidArgument, "unknown node", std::to_string(g.has_node(start) ? end : start));
    plan.favorites = sequence_favorites(router, start, end, favorites).order;
    plan.route = detail::concatenate(router, start, end, plan.favorites);
  }
  plan.summary = summarize(plan.route, g);
  return plan;
}

inline Plan plan_semi_automated(const CostedGraph& cg, NodeId start, NodeId end,
                                const std::vector<std::string>& favorites) {
  return plan_semi_automated(Router(cg), start, end, favorites);
}

/// Greedy favorite selection under a duration budget: keep adding the best
/// scoring slope that still fits within 110 % of the target until the plan
/// reaches 90 % of it or nothing else fits.
inline Plan plan_automated(const Router& router, NodeId start, NodeId end, double target_duration,
                           const PreferenceSet& prefs) {
  if (!(target_duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "duration must be positive", "duration");
  const auto& g = router.costed().resort();
  if (!g.has_node(start) || !g.has_node(end))
    throw Error(ErrorCode::InvalidArgument, "unknown node", std::to_string(g.has_node(start) ? end : start));
  const double upper = kDurationUpperFactor * target_duration;
  const double lower = kDurationLowerFactor * target_duration;

  Plan plan;
  plan.route = start == end ? Route{{}, {start}, {}, 0.0, {}} : router.route(start, end);
  plan.summary = summarize(plan.route, g);
  if (plan.summary.estimated_time > upper)
    throw Error(ErrorCode::InfeasibleDuration, "direct route already exceeds the duration budget");

  std::vector<std::string> candidates;
  const bool allow_freeride = prefs.wants_ungroomed();
  for (const auto& score : score_and_rank(g, prefs)) {
    const Edge* e = g.find_edge(score.edge_id);
    if (e->difficulty == Difficulty::freeride && !allow_freeride) continue;
    candidates.push_back(score.edge_id);
  }

  std::vector<std::string> chosen;
  while (plan.summary.estimated_time < lower) {
    bool added = false;
    for (const auto& c : candidates) {
      if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
      auto trial = chosen;
      trial.push_back(c);
      Plan attempt;
      try {
        attempt = plan_semi_automated(router, start, end, trial);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::UnreachableFavorite) throw;
        continue;
      }
      if (attempt.summary.estimated_time <= upper) {
        chosen = std::move(trial);
        plan = std::move(attempt);
        added = true;
        break;
      }
    }
    if (!added) break;
  }
  return plan;
}

inline Plan plan_automated(const CostedGraph& cg, NodeId start, NodeId end, double target_duration,
                           const PreferenceSet& prefs) {
  return plan_automated(Router(cg), start, end, target_duration, prefs);
}

}  // namespace skiroute

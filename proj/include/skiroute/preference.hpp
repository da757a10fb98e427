#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "skiroute/error.hpp"
#include "skiroute/model.hpp"

namespace skiroute {

enum class Attribute { steepness, altitude, compass, grooming, crowdedness };

inline constexpr std::array<Attribute, 5> kAttributes{Attribute::steepness, Attribute::altitude, Attribute::compass,
                                                      Attribute::grooming, Attribute::crowdedness};

constexpr std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::steepness: return "steepness";
    case Attribute::altitude: return "altitude";
    case Attribute::compass: return "compass";
    case Attribute::grooming: return "grooming";
    case Attribute::crowdedness: return "crowdedness";
  }
  return "steepness";
}

constexpr bool is_numeric(Attribute a) {
  return a == Attribute::steepness || a == Attribute::altitude || a == Attribute::crowdedness;
}

// Bell-curve spreads in attribute units: steepness %, altitude m, crowdedness [0,1].
constexpr double default_sigma(Attribute a) {
  switch (a) {
    case Attribute::steepness: return 10.0;
    case Attribute::altitude: return 300.0;
    case Attribute::crowdedness: return 0.25;
    default: return 1.0;
  }
}

inline constexpr double kUndesiredScore = 0.1;

using CompassSet = std::set<Compass>;

/// numeric target | desired compass bins | desired grooming state
using PreferenceTarget = std::variant<double, CompassSet, bool>;

struct Preference {
  Attribute attribute = Attribute::steepness;
  double weight = 0.0;
  PreferenceTarget target = 0.0;
  double sigma = 1.0;

  bool active() const { return weight > 0.0; }
};

struct PreferenceSet {
  std::string name;
  std::vector<Preference> preferences;

  std::size_t active_count() const {
    return static_cast<std::size_t>(std::count_if(preferences.begin(), preferences.end(),
                                                   [](const Preference& p) { return p.active(); }));
  }

  const Preference* find(Attribute a) const {
    for (const auto& p : preferences)
      if (p.attribute == a && p.active()) return &p;
    return nullptr;
  }

  // Freeride terrain is only planned for when the user asks for ungroomed snow.
  bool wants_ungroomed() const {
    const auto* p = find(Attribute::grooming);
    return p && std::holds_alternative<bool>(p->target) && !std::get<bool>(p->target);
  }

  /// Throws InvalidArgument naming the offending field.
  void check() const {
    for (std::size_t i = 0; i < preferences.size(); ++i) {
      const auto& p = preferences[i];
      const std::string field = "preferences[" + std::to_string(i) + "]";
      if (!(p.weight >= 0.0 && p.weight <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "weight must lie in [0,1]", field + ".weight");
      const bool numeric_target = std::holds_alternative<double>(p.target);
      if (is_numeric(p.attribute)) {
        if (!numeric_target) throw Error(ErrorCode::InvalidArgument, "numeric target expected", field + ".target");
        if (!(p.sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive", field + ".sigma");
      } else if (p.attribute == Attribute::compass) {
        if (!std::holds_alternative<CompassSet>(p.target) || std::get<CompassSet>(p.target).empty())
          throw Error(ErrorCode::InvalidArgument, "non-empty compass set expected", field + ".target");
      } else if (!std::holds_alternative<bool>(p.target)) {
        throw Error(ErrorCode::InvalidArgument, "grooming target must be groomed/ungroomed", field + ".target");
      }
    }
  }

  void require_active() const {
    if (active_count() == 0)
      throw Error(ErrorCode::InvalidArgument, "at least one preference needs a weight > 0", "preferences");
  }
};

/// Gaussian attribute scoring: 1 at the target, exp(-1/2) one sigma away.
inline double asf_numeric(double value, double target, double sigma) {
  const double d = value - target;
  return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

/// Score assignment: desired categories 1, everything else 0.1.
template <typename T>
double asf_categorical(const T& value, const std::set<T>& desired) {
  return desired.count(value) ? 1.0 : kUndesiredScore;
}

inline double asf_categorical(bool groomed, bool desired_groomed) {
  return groomed == desired_groomed ? 1.0 : kUndesiredScore;
}

/// Edge-level attributes a subsegment inherits.
struct EdgeContext {
  bool groomed = true;
  std::optional<double> popularity;
};

inline EdgeContext context_of(const Edge& e) { return {e.groomed, e.popularity}; }

/// Mean weighted distance (1 - ASF score) over the active preferences.
inline double segment_cost(const SubSegment& seg, const EdgeContext& ctx, const PreferenceSet& prefs) {
  const std::size_t active = prefs.active_count();
  if (active == 0) throw Error(ErrorCode::InvalidArgument, "no active preference", "preferences");

  double sum = 0.0;
  std::string missing;
  auto mark_missing = [&](Attribute a) {
    if (!missing.empty()) missing += ",";
    missing += to_string(a);
  };
  for (const auto& p : prefs.preferences) {
    if (!p.active()) continue;
    double score = 1.0;
    switch (p.attribute) {
      case Attribute::steepness:
        if (!seg.attributed) {
          mark_missing(p.attribute);
          continue;
        }
        score = asf_numeric(seg.steepness, std::get<double>(p.target), p.sigma);
        break;
      case Attribute::altitude:
        if (!seg.attributed) {
          mark_missing(p.attribute);
          continue;
        }
        score = asf_numeric(seg.altitude, std::get<double>(p.target), p.sigma);
        break;
      case Attribute::compass:
        score = asf_categorical(seg.compass, std::get<CompassSet>(p.target));
        break;
      case Attribute::grooming:
        score = asf_categorical(ctx.groomed, std::get<bool>(p.target));
        break;
      case Attribute::crowdedness:
        if (!ctx.popularity) {
          mark_missing(p.attribute);
          continue;
        }
        score = asf_numeric(*ctx.popularity, std::get<double>(p.target), p.sigma);
        break;
    }
    sum += p.weight * (1.0 - score);
  }
  if (!missing.empty()) throw Error(ErrorCode::MissingAttribute, "unresolvable attributes: " + missing, missing);
  return sum / static_cast<double>(active);
}

struct SlopeCost {
  double total = 0.0;
  std::vector<double> per_segment;
};

inline SlopeCost slope_cost(const Edge& edge, const PreferenceSet& prefs) {
  if (edge.subsegments.empty()) throw Error(ErrorCode::MissingAttribute, "edge has no subsegments", edge.id);
  SlopeCost c;
  c.per_segment.reserve(edge.K());
  const auto ctx = context_of(edge);
  for (const auto& s : edge.subsegments) {
    c.per_segment.push_back(segment_cost(s, ctx, prefs));
    c.total += c.per_segment.back();
  }
  return c;
}

struct SlopeScore {
  std::string edge_id;
  double cost = 0.0;
  double s_pref = 0.0;
  std::vector<double> per_segment;
};

inline double preference_score(double cost, std::size_t K) { return 1.0 - cost / static_cast<double>(K); }

/// Slopes ordered by descending preference score, ties by edge id. Lifts,
/// helper connectors and slopes missing a required attribute are not ranked.
inline std::vector<SlopeScore> score_and_rank(const ResortGraph& g, const PreferenceSet& prefs,
                                              std::optional<std::size_t> limit = std::nullopt) {
  prefs.require_active();
  std::vector<SlopeScore> out;
  for (const auto& e : g.edges) {
    if (!e.is_slope() || e.subsegments.empty()) continue;
    try {
      auto c = slope_cost(e, prefs);
      out.push_back({e.id, c.total, preference_score(c.total, e.K()), std::move(c.per_segment)});
    } catch (const Error& err) {
      if (err.code() != ErrorCode::MissingAttribute) throw;
    }
  }
  std::sort(out.begin(), out.end(), [](const SlopeScore& a, const SlopeScore& b) {
    if (a.s_pref != b.s_pref) return a.s_pref > b.s_pref;
    return a.edge_id < b.edge_id;
  });
  if (limit && out.size() > *limit) out.resize(*limit);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline Preference preference_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "preference must be an object", field);
  Preference p;
  const std::string attr = j.value("attribute", "");
  auto parsed = parse_enum(attr, kAttributes);
  if (!parsed) throw Error(ErrorCode::InvalidArgument, "unknown attribute '" + attr + "'", field + ".attribute");
  p.attribute = *parsed;
  if (!j.contains("weight") || !j["weight"].is_number())
    throw Error(ErrorCode::InvalidArgument, "weight must be a number", field + ".weight");
  p.weight = j["weight"].get<double>();
  p.sigma = j.contains("sigma") && j["sigma"].is_number() ? j["sigma"].get<double>() : default_sigma(p.attribute);

  const auto target = j.value("target", nlohmann::json());
  switch (p.attribute) {
    case Attribute::steepness:
    case Attribute::altitude:
    case Attribute::crowdedness:
      if (!target.is_number()) throw Error(ErrorCode::InvalidArgument, "numeric target expected", field + ".target");
      p.target = target.get<double>();
      break;
    case Attribute::compass: {
      CompassSet bins;
      const auto items = target.is_array() ? target : nlohmann::json::array({target});
      for (const auto& item : items) {
        auto c = item.is_string() ? parse_compass(item.get<std::string>()) : std::nullopt;
        if (!c) throw Error(ErrorCode::InvalidArgument, "unknown compass direction", field + ".target");
        bins.insert(*c);
      }
      p.target = bins;
      break;
    }
    case Attribute::grooming:
      if (target.is_boolean()) {
        p.target = target.get<bool>();
      } else if (target.is_string() && (target == "groomed" || target == "ungroomed")) {
        p.target = target == "groomed";
      } else {
        throw Error(ErrorCode::InvalidArgument, "grooming target must be groomed/ungroomed", field + ".target");
      }
      break;
  }
  return p;
}

inline nlohmann::json to_json(const Preference& p) {
  nlohmann::json j{{"attribute", to_string(p.attribute)}, {"weight", p.weight}};
  if (const auto* v = std::get_if<double>(&p.target)) {
    j["target"] = *v;
    j["sigma"] = p.sigma;
  } else if (const auto* bins = std::get_if<CompassSet>(&p.target)) {
    auto arr = nlohmann::json::array();
    for (auto c : *bins) arr.push_back(to_string(c));
    j["target"] = arr;
  } else {
    j["target"] = std::get<bool>(p.target) ? "groomed" : "ungroomed";
  }
  return j;
}

/// Accepts either a bare array of preferences or {"name", "preferences": [...]}.
inline PreferenceSet preference_set_from_json(const nlohmann::json& j) {
  PreferenceSet set;
  const nlohmann::json* items = &j;
  if (j.is_object()) {
    set.name = j.value("name", "");
    if (!j.contains("preferences")) throw Error(ErrorCode::InvalidArgument, "missing preferences", "preferences");
    items = &j["preferences"];
  }
  if (!items->is_array()) throw Error(ErrorCode::InvalidArgument, "preferences must be an array", "preferences");
  for (std::size_t i = 0; i < items->size(); ++i)
    set.preferences.push_back(preference_from_json((*items)[i], "preferences[" + std::to_string(i) + "]"));
  set.check();
  return set;
}

inline nlohmann::json to_json(const PreferenceSet& set) {
  auto arr = nlohmann::json::array();
  for (const auto& p : set.preferences) arr.push_back(to_json(p));
  return {{"name", set.name}, {"preferences", arr}};
}

inline PreferenceSet read_preference_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return preference_set_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

/// Loads every *.json in `dir` keyed by the set's name (file stem if unnamed).
inline std::map<std::string, PreferenceSet> load_presets(const std::filesystem::path& dir) {
  std::map<std::string, PreferenceSet> out;
  if (!std::filesystem::is_directory(dir)) return out;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto set = read_preference_file(f.string());
    if (set.name.empty()) set.name = f.stem().string();
    out[set.name] = std::move(set);
  }
  return out;
}

}  // namespace skiroute

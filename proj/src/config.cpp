#include "biphoton/config.hpp"

#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "biphoton/zernike.hpp"

namespace biphoton {
namespace {

using nlohmann::json;
using Issues = std::vector<ConfigIssue>;

enum class Type { Number, Integer, Boolean, String, Object };

struct Key {
  std::string name;
  Type type = Type::Number;
  json fallback;          // null: required, unless nullable or a one-of member
  bool nullable = false;  // explicit null is a valid value (and the default)
  bool one_of = false;
  std::optional<double> lo;
  bool lo_open = false;
  std::optional<double> hi;
  bool even = false;
  std::vector<std::string> choices;
  std::vector<Key> children;
  std::map<std::string, std::vector<Key>> variants;  // selected by child "kind"
  bool free_keys = false;                             // object with arbitrary keys
  std::function<void(const json&, const std::string&, Issues&)> check;

  Key gt(double v) const { Key k = *this; k.lo = v; k.lo_open = true; return k; }
  Key ge(double v) const { Key k = *this; k.lo = v; return k; }
  Key le(double v) const { Key k = *this; k.hi = v; return k; }
  Key even_only() const { Key k = *this; k.even = true; return k; }
  Key or_null() const { Key k = *this; k.nullable = true; return k; }
  Key member() const { Key k = *this; k.one_of = true; return k; }
};

Key make(std::string name, Type type, json def) {
  Key k;
  k.name = std::move(name);
  k.type = type;
  k.fallback = std::move(def);
  return k;
}

Key number(std::string name, json def = nullptr) { return make(std::move(name), Type::Number, std::move(def)); }
Key integer(std::string name, json def = nullptr) { return make(std::move(name), Type::Integer, std::move(def)); }
Key boolean(std::string name, json def) { return make(std::move(name), Type::Boolean, std::move(def)); }
Key string(std::string name, json def = nullptr, std::vector<std::string> choices = {}) {
  Key k = make(std::move(name), Type::String, std::move(def));
  k.choices = std::move(choices);
  return k;
}
Key object(std::string name, std::vector<Key> children, json def = json::object()) {
  Key k = make(std::move(name), Type::Object, std::move(def));
  k.children = std::move(children);
  return k;
}

struct OneOf {
  std::vector<std::string> names;
  std::string fallback_name;
  json fallback_value;
};

struct Schema {
  std::vector<Key> keys;
  std::vector<OneOf> groups;
};

std::string join(const std::string& path, const std::string& name) {
  return path.empty() ? name : path + "." + name;
}

void schema_issue(Issues& out, const std::string& path, const std::string& msg) {
  out.push_back({ErrorCategory::Schema, path, msg});
}
void domain_issue(Issues& out, const std::string& path, const std::string& msg) {
  out.push_back({ErrorCategory::Domain, path, msg});
}

std::string type_name(Type t) {
  switch (t) {
    case Type::Number: return "a number";
    case Type::Integer: return "an integer";
    case Type::Boolean: return "a boolean";
    case Type::String: return "a string";
    case Type::Object: return "an object";
  }
  return "?";
}

bool is_integral(const json& v) {
  if (v.is_number_integer() || v.is_number_unsigned()) return true;
  if (!v.is_number_float()) return false;
  const double d = v.get<double>();
  return std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15;
}

json resolve(const json* value, const Key& key, const std::string& path, Issues& issues);

json resolve_object(const json& value, const Key& key, const std::string& path, Issues& issues) {
  if (key.free_keys) {
    if (key.check) key.check(value, path, issues);
    return value;
  }
  std::vector<const Key*> children;
  for (const auto& c : key.children) children.push_back(&c);
  json out = json::object();
  Key kind_key;
  if (!key.variants.empty()) {
    std::vector<std::string> kinds;
    for (const auto& [k, _] : key.variants) kinds.push_back(k);
    kind_key = string("kind", key.fallback.is_object() && key.fallback.contains("kind")
                                  ? key.fallback["kind"] : json(nullptr),
                      kinds);
    const json* kv = value.contains("kind") ? &value["kind"] : nullptr;
    const json kind = resolve(kv, kind_key, join(path, "kind"), issues);
    out["kind"] = kind;
    if (kind.is_string() && key.variants.count(kind.get<std::string>())) {
      for (const auto& c : key.variants.at(kind.get<std::string>())) children.push_back(&c);
    } else {
      return out;  // the kind issue is enough; children depend on it
    }
  }
  for (const auto& [name, _] : value.items()) {
    if (!key.variants.empty() && name == "kind") continue;
    bool known = false;
    for (const Key* c : children) known = known || c->name == name;
    if (!known) schema_issue(issues, join(path, name), "unknown key");
  }
  for (const Key* c : children) {
    const json* cv = value.contains(c->name) ? &value[c->name] : nullptr;
    if (!cv && c->one_of) continue;
    json r = resolve(cv, *c, join(path, c->name), issues);
    if (!r.is_null() || c->nullable) out[c->name] = std::move(r);
  }
  if (key.check) key.check(out, path, issues);
  return out;
}

json resolve(const json* value, const Key& key, const std::string& path, Issues& issues) {
  if (!value || (value->is_null() && !key.nullable)) {
    if (value && value->is_null()) {
      schema_issue(issues, path, "null is not allowed here");
      return nullptr;
    }
    if (key.nullable && key.fallback.is_null()) return nullptr;
    if (key.fallback.is_null()) {
      schema_issue(issues, path, "required key missing");
      return nullptr;
    }
    if (key.type == Type::Object) return resolve_object(key.fallback, key, path, issues);
    return key.fallback;
  }
  if (value->is_null()) return nullptr;
  switch (key.type) {
    case Type::Number:
      if (!value->is_number()) break;
      {
        const double v = value->get<double>();
        if (!std::isfinite(v)) {
          domain_issue(issues, path, "must be finite");
        } else if (key.lo && (key.lo_open ? !(v > *key.lo) : !(v >= *key.lo))) {
          std::ostringstream os;
          os << "must be " << (key.lo_open ? "> " : ">= ") << *key.lo << ", got " << v;
          domain_issue(issues, path, os.str());
        } else if (key.hi && v > *key.hi) {
          std::ostringstream os;
          os << "must be <= " << *key.hi << ", got " << v;
          domain_issue(issues, path, os.str());
        }
      }
      return *value;
    case Type::Integer:
      if (!is_integral(*value)) break;
      {
        const double v = value->get<double>();
        if (key.lo && (key.lo_open ? !(v > *key.lo) : !(v >= *key.lo))) {
          std::ostringstream os;
          os << "must be " << (key.lo_open ? "> " : ">= ") << *key.lo << ", got " << v;
          domain_issue(issues, path, os.str());
        } else if (key.hi && v > *key.hi) {
          domain_issue(issues, path, "is too large");
        } else if (key.even && static_cast<long long>(v) % 2 != 0) {
          domain_issue(issues, path, "must be even");
        }
        return json(static_cast<long long>(v));
      }
    case Type::Boolean:
      if (!value->is_boolean()) break;
      return *value;
    case Type::String:
      if (!value->is_string()) break;
      if (!key.choices.empty()) {
        const auto s = value->get<std::string>();
        if (std::find(key.choices.begin(), key.choices.end(), s) == key.choices.end()) {
          std::string list;
          for (const auto& c : key.choices) list += (list.empty() ? "" : ", ") + c;
          schema_issue(issues, path, "'" + s + "' is not one of: " + list);
        }
      }
      if (key.check) key.check(*value, path, issues);
      return *value;
    case Type::Object:
      if (!value->is_object()) break;
      return resolve_object(*value, key, path, issues);
  }
  schema_issue(issues, path, "expected " + type_name(key.type));
  return nullptr;
}

// ---- shared pieces ----------------------------------------------------------

const double kTwoPi = 2.0 * std::numbers::pi;

Key grid_key(long long n, double spacing) {
  return object("grid", {integer("n", n).ge(4).even_only(), number("spacing", spacing).gt(0)});
}

Key sigmas_key() {
  return object("sigmas", {number("sigma_plus").gt(0), number("sigma_minus").gt(0)}, nullptr).member();
}
Key spdc_key() {
  return object("spdc", {number("w0").gt(0), number("L").gt(0), number("lambda_p").gt(0),
                         number("n_p").gt(0)},
                nullptr)
      .member();
}
Key schmidt_key() {
  return object("schmidt", {number("K").ge(1), number("sigma_minus").gt(0)}, nullptr).member();
}

OneOf source_group(std::string name, json value) {
  return {{"sigmas", "spdc", "schmidt"}, std::move(name), std::move(value)};
}

Key mask_key(json fallback) {
  Key k = object("mask", {}, std::move(fallback));
  const std::vector<std::string> parity = {"all", "even", "odd"};
  Key coefficients = make("coefficients", Type::Object, json::object());
  coefficients.free_keys = true;
  k.variants["none"] = {};
  k.variants["harmonic"] = {number("cos", 1.0), number("sin", 1.0), number("frequency", 3.0)};
  k.variants["zernike"] = {coefficients, number("pupil_radius", 1.0).gt(0)};
  k.variants["random-zernike"] = {string("parity", "all", parity),
                                  number("amplitude", kTwoPi).ge(0),
                                  number("pupil_radius", 1.0).gt(0)};
  k.variants["smoothed"] = {number("correlation_length").gt(0), number("rms").ge(0),
                            number("pupil_radius").gt(0).or_null(), string("parity", "all", parity)};
  k.variants["white"] = {number("pupil_radius").gt(0)};
  k.variants["file"] = {string("path")};
  k.variants["dm-file"] = {string("path")};
  k.check = [](const json& m, const std::string& path, Issues& issues) {
    if (!m.contains("kind") || !m["kind"].is_string()) return;
    if (m["kind"] == "zernike") {
      json dm = {{"coefficients", m.value("coefficients", json::object())},
                 {"pupil_radius", m.value("pupil_radius", 1.0)}};
      try {
        (void)dm_config_from_json(dm);
      } catch (const Error& e) {
        auto& list = issues;
        list.push_back({e.category() == ErrorCategory::Schema ? ErrorCategory::Schema
                                                              : ErrorCategory::Domain,
                        path, e.what()});
      }
    }
  };
  return k;
}

Key detector_key(long long w, long long h, double pairs) {
  return object("detector", {integer("width", w).ge(2).even_only(),
                             integer("height", h).ge(2).even_only(),
                             number("pairs_per_frame_mean", pairs).ge(0),
                             number("dark_electron_mean", 10.0),
                             number("readout_std", 2.0).ge(0),
                             number("gain", 100.0).gt(0),
                             integer("threshold_batch", 100).ge(1)});
}

Key window_key(long long half) {
  return object("window", {integer("half_x", half).ge(0), integer("half_y", half).ge(0)});
}

std::vector<Key> common_keys(ScenarioKind kind, bool needs_seed) {
  std::vector<Key> keys = {
      string("scenario"),
      string("output_dir", "out/" + std::string(scenario_name(kind))),
      boolean("render", false),
      number("max_memory_mb", 2048.0).gt(0),
  };
  keys.push_back(needs_seed ? integer("seed").ge(0) : integer("seed").ge(0).or_null());
  return keys;
}

Schema schema_for(ScenarioKind kind) {
  Schema s;
  auto add = [&](std::vector<Key> extra) {
    for (auto& k : extra) s.keys.push_back(std::move(k));
  };
  const json default_sigmas = {{"sigma_plus", 50.0}, {"sigma_minus", 1.0}};
  switch (kind) {
    case ScenarioKind::Fig1Demo:
      s.keys = common_keys(kind, false);
      add({grid_key(512, 0.015), sigmas_key(), spdc_key(), schmidt_key(),
           mask_key({{"kind", "harmonic"}}), boolean("full_path", true)});
      s.groups = {source_group("sigmas", default_sigmas)};
      break;
    case ScenarioKind::ZernikeGallery:
      s.keys = common_keys(kind, false);
      add({grid_key(64, 0.0625), number("pupil_radius", 1.0).gt(0),
           number("amplitude", std::numbers::pi), number("beam_waist", 1.0).gt(0)});
      break;
    case ScenarioKind::ParityExperiment:
      s.keys = common_keys(kind, true);
      add({grid_key(128, 0.05), sigmas_key(), spdc_key(), schmidt_key(),
           mask_key({{"kind", "random-zernike"}, {"parity", "odd"}, {"amplitude", kTwoPi},
                     {"pupil_radius", 2.5}}),
           number("pump_phase_multiplier", 2.0)});
      s.groups = {source_group("sigmas", default_sigmas)};
      break;
    case ScenarioKind::StrongDisorder2D:
      s.keys = common_keys(kind, true);
      add({grid_key(512, 0.01), sigmas_key(), spdc_key(), schmidt_key(),
           mask_key({{"kind", "smoothed"}, {"correlation_length", 0.085}, {"rms", 10.0},
                     {"pupil_radius", 2.0}}),
           boolean("full_path", true), number("prune_mass", 1e-14).ge(0)});
      s.groups = {source_group("schmidt", {{"K", 1600.0}, {"sigma_minus", 1.0}})};
      break;
    case ScenarioKind::EmccdPipeline:
      s.keys = common_keys(kind, true);
      add({grid_key(128, 0.08), sigmas_key(), spdc_key(), schmidt_key(),
           mask_key({{"kind", "smoothed"}, {"correlation_length", 0.2}, {"rms", 6.0},
                     {"pupil_radius", 4.5}}),
           detector_key(128, 128, 400.0), integer("frames", 50000).ge(2), window_key(32),
           number("centroid_sigma_px").ge(0).or_null(), integer("save_frames", 0).ge(0)});
      s.groups = {source_group("sigmas", default_sigmas)};
      break;
    case ScenarioKind::SchmidtEstimate:
      s.keys = common_keys(kind, true);
      add({sigmas_key(), spdc_key(), schmidt_key(), number("sigma_j_px", 2.0).gt(0),
           detector_key(256, 256, 400.0), integer("frames", 3000).ge(2), window_key(16)});
      s.groups = {source_group("sigmas", default_sigmas)};
      break;
    case ScenarioKind::SpeckleContrast:
      s.keys = common_keys(kind, true);
      add({grid_key(256, 0.05), number("pupil_radius", 4.0).gt(0),
           integer("realizations", 10).ge(1)});
      break;
  }
  return s;
}

const std::vector<std::pair<ScenarioKind, std::pair<const char*, const char*>>>& names() {
  static const std::vector<std::pair<ScenarioKind, std::pair<const char*, const char*>>> n = {
      {ScenarioKind::Fig1Demo,
       {"fig1-demo", "1D pump and two-photon patterns for no/full/even/odd masks"}},
      {ScenarioKind::ZernikeGallery, {"zernike-gallery", "far-field images of Z4..Z15"}},
      {ScenarioKind::ParityExperiment,
       {"parity-experiment", "2D random Zernike disorder of one parity: two-photon map vs pump"}},
      {ScenarioKind::StrongDisorder2D,
       {"strong-disorder-2d", "2D strong disorder at high Schmidt number, full and delta paths"}},
      {ScenarioKind::EmccdPipeline,
       {"emccd-pipeline", "synthetic frames from a known difference map, coincidence recovery"}},
      {ScenarioKind::SchmidtEstimate,
       {"schmidt-estimate", "Schmidt number from marginal and sum-coordinate fits of frames"}},
      {ScenarioKind::SpeckleContrast,
       {"speckle-contrast", "contrast of fully developed speckle from white pupil phase"}},
  };
  return n;
}

void collect_catalog(const std::vector<Key>& keys, const std::string& path, ScenarioInfo& info) {
  for (const auto& k : keys) {
    const std::string p = join(path, k.name);
    if (k.name == "scenario") continue;
    if (k.one_of) continue;
    if (k.type == Type::Object && !k.free_keys && k.variants.empty() && k.fallback.is_object()) {
      collect_catalog(k.children, p, info);
      continue;
    }
    if (k.fallback.is_null() && !k.nullable) {
      info.required_keys.push_back(p);
    } else {
      info.defaults.emplace_back(p, k.fallback.dump());
    }
  }
}

}  // namespace

std::string_view scenario_name(ScenarioKind kind) {
  for (const auto& [k, v] : names()) {
    if (k == kind) return v.first;
  }
  return "?";
}

std::optional<ScenarioKind> scenario_from_name(std::string_view name) {
  for (const auto& [k, v] : names()) {
    if (name == v.first) return k;
  }
  return std::nullopt;
}

const std::vector<ScenarioInfo>& scenario_catalog() {
  static const std::vector<ScenarioInfo> catalog = [] {
    std::vector<ScenarioInfo> out;
    for (const auto& [kind, v] : names()) {
      ScenarioInfo info{kind, v.first, v.second, {"scenario"}, {}};
      const Schema s = schema_for(kind);
      collect_catalog(s.keys, "", info);
      for (const auto& g : s.groups) {
        std::string names;
        for (const auto& n : g.names) names += (names.empty() ? "" : " | ") + n;
        info.defaults.emplace_back("one of " + names, g.fallback_name + " " + g.fallback_value.dump());
      }
      out.push_back(std::move(info));
    }
    return out;
  }();
  return catalog;
}

namespace {
std::string describe(const std::vector<ConfigIssue>& issues) {
  std::ostringstream os;
  os << issues.size() << " config problem" << (issues.size() == 1 ? "" : "s") << ":";
  for (const auto& i : issues) os << "\n  " << (i.path.empty() ? "<root>" : i.path) << ": " << i.message;
  return os.str();
}

ErrorCategory worst(const std::vector<ConfigIssue>& issues) {
  for (const auto& i : issues) {
    if (i.category == ErrorCategory::Schema) return ErrorCategory::Schema;
  }
  return ErrorCategory::Domain;
}
}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(worst(issues), describe(issues)), issues_(std::move(issues)) {}

std::filesystem::path ScenarioConfig::output_dir() const {
  return resolved.at("output_dir").get<std::string>();
}

std::filesystem::path ScenarioConfig::resolve_path(const std::string& relative) const {
  const std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

ScenarioConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  Issues issues;
  if (!doc.is_object()) throw ConfigError({{ErrorCategory::Schema, "", "config must be an object"}});
  if (!doc.contains("scenario") || !doc["scenario"].is_string()) {
    throw ConfigError({{ErrorCategory::Schema, "scenario", "required string key missing"}});
  }
  const auto name = doc["scenario"].get<std::string>();
  const auto kind = scenario_from_name(name);
  if (!kind) {
    std::string list;
    for (const auto& [k, v] : names()) list += (list.empty() ? "" : ", ") + std::string(v.first);
    throw ConfigError({{ErrorCategory::Schema, "scenario", "unknown scenario '" + name + "' (" + list + ")"}});
  }
  Schema schema = schema_for(*kind);
  for (auto& key : schema.keys) {
    if (key.name != "mask") continue;
    key.variants["file"][0].check = key.variants["dm-file"][0].check =
        [&base_dir](const json& v, const std::string& path, Issues& out) {
          const std::filesystem::path p(v.get<std::string>());
          const auto full = p.is_absolute() ? p : base_dir / p;
          if (!std::filesystem::exists(full)) {
            out.push_back({ErrorCategory::Schema, path, "file not found: " + full.string()});
          }
        };
  }
  Key root = object("", schema.keys);
  json resolved = resolve_object(doc, root, "", issues);
  for (const auto& g : schema.groups) {
    std::vector<std::string> present;
    for (const auto& n : g.names) {
      if (resolved.contains(n)) present.push_back(n);
    }
    if (present.size() > 1) {
      std::string list;
      for (const auto& p : present) list += (list.empty() ? "" : " and ") + p;
      schema_issue(issues, present[1], "conflicts with " + present[0] + ": give only one of " + list);
    } else if (present.empty()) {
      for (const auto& k : schema.keys) {
        if (k.name == g.fallback_name) {
          resolved[k.name] = resolve(&g.fallback_value, k, k.name, issues);
        }
      }
    }
  }
  if (resolved.contains("mask") && resolved["mask"].contains("kind") && resolved.contains("seed") &&
      resolved["seed"].is_null()) {
    const auto kind = resolved["mask"]["kind"];
    if (kind == "random-zernike" || kind == "smoothed" || kind == "white") {
      schema_issue(issues, "seed", "required for a random mask");
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  ScenarioConfig cfg;
  cfg.kind = *kind;
  cfg.resolved = std::move(resolved);
  cfg.base_dir = base_dir;
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError({{ErrorCategory::Schema, "", std::string("invalid JSON: ") + e.what()}});
  }
  auto dir = path.parent_path();
  return parse_config(doc, dir.empty() ? std::filesystem::path(".") : dir);
}

}  // namespace biphoton

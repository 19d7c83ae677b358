#include <cmath>

#include "dreg/cli.hpp"

namespace dreg::cli {

extern const char* const kConfigSchemaText;

const nlohmann::json& config_schema() {
  static const nlohmann::json schema = nlohmann::json::parse(kConfigSchemaText);
  return schema;
}

namespace {

using nlohmann::json;

bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  if (t == "number") return v.is_number();
  if (t == "integer") {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
      const double d = v.get<double>();
      return std::isfinite(d) && std::floor(d) == d;
    }
    return false;
  }
  return false;
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& v, const json& s, const std::string& at,
             std::vector<std::string>& out) const {
    if (s.contains("$ref")) {
      check(v, resolve(s["$ref"].get<std::string>()), at, out);
      return;
    }
    if (s.contains("oneOf")) {
      int matches = 0;
      std::vector<std::string> best;
      bool best_is_discriminated = false;
      for (const json& alt : s["oneOf"]) {
        std::vector<std::string> errs;
        check(v, alt, at, errs);
        if (errs.empty()) {
          ++matches;
          continue;
        }
        const bool disc = discriminator_matches(v, alt);
        if (best_is_discriminated) continue;
        if (disc || best.empty() || errs.size() < best.size()) {
          best = std::move(errs);
          best_is_discriminated = disc;
        }
      }
      if (matches != 1) {
        if (matches == 0 && !best_is_discriminated && v.is_object() &&
            (v.contains("type") || v.contains("kind"))) {
          const char* key = v.contains("type") ? "type" : "kind";
          out.push_back(at + "/" + key + ": unknown value " + v[key].dump());
        } else if (matches == 0 && !best.empty()) {
          out.insert(out.end(), best.begin(), best.end());
        } else {
          out.push_back(at + ": must match exactly one alternative");
        }
      }
    }
    if (s.contains("type")) {
      const json& t = s["type"];
      bool ok = false;
      if (t.is_string()) ok = has_type(v, t.get<std::string>());
      for (const json& e : t.is_array() ? t : json::array()) ok = ok || has_type(v, e);
      if (!ok) {
        out.push_back(at + ": expected type " + t.dump());
        return;
      }
    }
    if (s.contains("const") && v != s["const"]) {
      out.push_back(at + ": must equal " + s["const"].dump());
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const json& e : s["enum"]) found = found || v == e;
      if (!found) out.push_back(at + ": must be one of " + s["enum"].dump());
    }
    if (v.is_number()) {
      const double d = v.get<double>();
      if (s.contains("minimum") && d < s["minimum"].get<double>()) {
        out.push_back(at + ": must be >= " + s["minimum"].dump());
      }
      if (s.contains("maximum") && d > s["maximum"].get<double>()) {
        out.push_back(at + ": must be <= " + s["maximum"].dump());
      }
      if (s.contains("exclusiveMinimum") && !(d > s["exclusiveMinimum"].get<double>())) {
        out.push_back(at + ": must be > " + s["exclusiveMinimum"].dump());
      }
      if (s.contains("exclusiveMaximum") && !(d < s["exclusiveMaximum"].get<double>())) {
        out.push_back(at + ": must be < " + s["exclusiveMaximum"].dump());
      }
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) {
        out.push_back(at + ": needs at least " + s["minItems"].dump() + " items");
      }
      if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) {
        out.push_back(at + ": allows at most " + s["maxItems"].dump() + " items");
      }
      if (s.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          check(v[i], s["items"], at + "/" + std::to_string(i), out);
        }
      }
    }
    if (v.is_object()) {
      if (s.contains("required")) {
        for (const json& r : s["required"]) {
          if (!v.contains(r.get<std::string>())) {
            out.push_back(at + ": missing required '" + r.get<std::string>() + "'");
          }
        }
      }
      const json props = s.value("properties", json::object());
      for (const auto& [key, val] : v.items()) {
        if (props.contains(key)) {
          check(val, props[key], at + "/" + key, out);
        } else if (s.contains("additionalProperties") &&
                   s["additionalProperties"] == false) {
          out.push_back(at + ": unknown key '" + key + "'");
        }
      }
    }
  }

 private:
  const json& resolve(const std::string& ref) const {
    const std::string prefix = "#/";
    if (ref.rfind(prefix, 0) != 0) throw ConfigError("unsupported $ref " + ref);
    return root_.at(json::json_pointer(ref.substr(1)));
  }

  // An alternative whose "type"/"kind" const matches is the one to report.
  static bool discriminator_matches(const json& v, const json& alt) {
    if (!v.is_object() || !alt.contains("properties")) return false;
    for (const char* key : {"type", "kind"}) {
      const json& p = alt["properties"];
      if (p.contains(key) && p[key].contains("const") && v.contains(key) &&
          v[key] == p[key]["const"]) {
        return true;
      }
    }
    return false;
  }

  const json& root_;
};

}  // namespace

std::vector<std::string> schema_violations(const nlohmann::json& doc,
                                           const nlohmann::json& schema) {
  std::vector<std::string> out;
  Validator(schema).check(doc, schema, "", out);
  for (std::string& s : out) {
    if (s.empty() || s[0] == ':') s = "(root)" + s;
  }
  return out;
}

}  // namespace dreg::cli

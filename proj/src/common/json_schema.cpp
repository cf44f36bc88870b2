#include "ol/common/json_schema.hpp"

#include <fstream>
#include <regex>
#include <set>

#include "ol/common/error.hpp"

namespace ol {

namespace {

const std::set<std::string> kKnown = {
    "$schema", "$id", "title", "description", "definitions", "$ref", "type", "enum", "const",
    "properties", "required", "additionalProperties", "items", "minItems", "maxItems",
    "minimum", "maximum", "minLength", "maxLength", "pattern", "oneOf", "anyOf", "allOf",
    "default", "examples"};

bool type_matches(const std::string& type, const nlohmann::json& v) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
      const double d = v.get<double>();
      return d == static_cast<double>(static_cast<long long>(d));
    }
    return false;
  }
  return false;
}

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

}  // namespace

std::filesystem::path asset_path(const std::string& relative) {
  if (const char* env = std::getenv("OL_ASSET_DIR"); env && *env) return std::filesystem::path(env) / relative;
  return std::filesystem::path(OL_ASSET_DIR) / relative;
}

JsonSchema::JsonSchema(nlohmann::json schema) : schema_(std::move(schema)) {
  if (!schema_.is_object()) throw ArgumentError("schema must be a JSON object");
  check_keywords(schema_, "#");
}

JsonSchema JsonSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read schema " + path.string());
  try {
    return JsonSchema(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError("schema " + path.string() + ": " + e.what());
  }
}

void JsonSchema::check_keywords(const nlohmann::json& s, const std::string& where) const {
  if (s.is_boolean()) return;
  if (!s.is_object()) throw ArgumentError("schema at " + where + " is not an object");
  for (const auto& [k, v] : s.items()) {
    if (!kKnown.count(k)) throw ArgumentError("unsupported schema keyword '" + k + "' at " + where);
    if (k == "properties" || k == "definitions") {
      for (const auto& [pk, pv] : v.items()) check_keywords(pv, where + "/" + k + "/" + pk);
    } else if (k == "items" || k == "additionalProperties") {
      check_keywords(v, where + "/" + k);
    } else if (k == "oneOf" || k == "anyOf" || k == "allOf") {
      for (std::size_t i = 0; i < v.size(); ++i) check_keywords(v[i], where + "/" + k + "/" + std::to_string(i));
    } else if (k == "$ref") {
      resolve(v.get<std::string>());
    }
  }
}

const nlohmann::json& JsonSchema::resolve(const std::string& ref) const {
  const std::string prefix = "#/definitions/";
  if (ref.rfind(prefix, 0) != 0) throw ArgumentError("unsupported $ref " + ref);
  const auto name = ref.substr(prefix.size());
  const auto defs = schema_.find("definitions");
  if (defs == schema_.end() || !defs->contains(name)) throw ArgumentError("unresolved $ref " + ref);
  return (*defs)[name];
}

std::vector<std::string> JsonSchema::validate(const nlohmann::json& doc) const {
  std::vector<std::string> errors;
  validate_at(schema_, doc, "", errors, 0);
  return errors;
}

void JsonSchema::validate_at(const nlohmann::json& s, const nlohmann::json& doc, const std::string& ptr,
                             std::vector<std::string>& errors, int depth) const {
  const std::string at = ptr.empty() ? "/" : ptr;
  if (depth > 64) {
    errors.push_back(at + ": schema recursion too deep");
    return;
  }
  if (s.is_boolean()) {
    if (!s.get<bool>()) errors.push_back(at + ": not allowed");
    return;
  }
  if (auto it = s.find("$ref"); it != s.end()) {
    validate_at(resolve(it->get<std::string>()), doc, ptr, errors, depth + 1);
  }
  if (auto it = s.find("type"); it != s.end()) {
    bool ok = false;
    if (it->is_string()) {
      ok = type_matches(it->get<std::string>(), doc);
    } else {
      for (const auto& t : *it) ok = ok || type_matches(t.get<std::string>(), doc);
    }
    if (!ok) {
      errors.push_back(at + ": expected type " + it->dump());
      return;
    }
  }
  if (auto it = s.find("enum"); it != s.end()) {
    bool ok = false;
    for (const auto& e : *it) ok = ok || e == doc;
    if (!ok) errors.push_back(at + ": value " + doc.dump() + " not in enum");
  }
  if (auto it = s.find("const"); it != s.end() && *it != doc) {
    errors.push_back(at + ": expected " + it->dump());
  }
  if (doc.is_number()) {
    if (auto it = s.find("minimum"); it != s.end() && doc.get<double>() < it->get<double>()) {
      errors.push_back(at + ": below minimum " + it->dump());
    }
    if (auto it = s.find("maximum"); it != s.end() && doc.get<double>() > it->get<double>()) {
      errors.push_back(at + ": above maximum " + it->dump());
    }
  }
  if (doc.is_string()) {
    const auto& str = doc.get_ref<const std::string&>();
    if (auto it = s.find("minLength"); it != s.end() && str.size() < it->get<std::size_t>()) {
      errors.push_back(at + ": shorter than " + it->dump());
    }
    if (auto it = s.find("maxLength"); it != s.end() && str.size() > it->get<std::size_t>()) {
      errors.push_back(at + ": longer than " + it->dump());
    }
    if (auto it = s.find("pattern"); it != s.end()) {
      if (!std::regex_search(str, std::regex(it->get<std::string>(), std::regex::ECMAScript))) {
        errors.push_back(at + ": does not match pattern " + it->dump());
      }
    }
  }
  if (doc.is_array()) {
    if (auto it = s.find("minItems"); it != s.end() && doc.size() < it->get<std::size_t>()) {
      errors.push_back(at + ": fewer than " + it->dump() + " items");
    }
    if (auto it = s.find("maxItems"); it != s.end() && doc.size() > it->get<std::size_t>()) {
      errors.push_back(at + ": more than " + it->dump() + " items");
    }
    if (auto it = s.find("items"); it != s.end()) {
      for (std::size_t i = 0; i < doc.size(); ++i) {
        validate_at(*it, doc[i], ptr + "/" + std::to_string(i), errors, depth + 1);
      }
    }
  }
  if (doc.is_object()) {
    if (auto it = s.find("required"); it != s.end()) {
      for (const auto& r : *it) {
        if (!doc.contains(r.get<std::string>())) errors.push_back(at + ": missing required '" + r.get<std::string>() + "'");
      }
    }
    const auto props = s.find("properties");
    const auto extra = s.find("additionalProperties");
    for (const auto& [k, v] : doc.items()) {
      const std::string child = ptr + "/" + escape_token(k);
      if (props != s.end() && props->contains(k)) {
        validate_at((*props)[k], v, child, errors, depth + 1);
      } else if (extra != s.end()) {
        validate_at(*extra, v, child, errors, depth + 1);
      }
    }
  }
  auto count_ok = [&](const nlohmann::json& list) {
    std::size_t n = 0;
    for (const auto& sub : list) {
      std::vector<std::string> scratch;
      validate_at(sub, doc, ptr, scratch, depth + 1);
      if (scratch.empty()) ++n;
    }
    return n;
  };
  if (auto it = s.find("oneOf"); it != s.end() && count_ok(*it) != 1) {
    errors.push_back(at + ": must match exactly one alternative");
  }
  if (auto it = s.find("anyOf"); it != s.end() && count_ok(*it) == 0) {
    errors.push_back(at + ": matches no alternative");
  }
  if (auto it = s.find("allOf"); it != s.end()) {
    for (const auto& sub : *it) validate_at(sub, doc, ptr, errors, depth + 1);
  }
}

}  // namespace ol

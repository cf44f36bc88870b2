#pragma once

// Validator for the subset of JSON Schema (draft 7) used by the published
// schema assets: type, enum, const, properties, required,
// additionalProperties (bool or schema), items, minItems, maxItems,
// minimum, maximum, minLength, pattern, oneOf, anyOf, allOf, $ref into
// "#/definitions/...". Unsupported keywords are rejected at load time so a
// schema can never silently validate less than it says.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ol {

class JsonSchema {
 public:
  explicit JsonSchema(nlohmann::json schema);
  static JsonSchema load(const std::filesystem::path& path);

  // Empty when `doc` conforms; otherwise one message per violation, each
  // prefixed with a JSON pointer to the offending value.
  std::vector<std::string> validate(const nlohmann::json& doc) const;
  bool accepts(const nlohmann::json& doc) const { return validate(doc).empty(); }

  const nlohmann::json& raw() const { return schema_; }

 private:
  void check_keywords(const nlohmann::json& s, const std::string& where) const;
  void validate_at(const nlohmann::json& s, const nlohmann::json& doc, const std::string& ptr,
                   std::vector<std::string>& errors, int depth) const;
  const nlohmann::json& resolve(const std::string& ref) const;

  nlohmann::json schema_;
};

std::filesystem::path asset_path(const std::string& relative);

}  // namespace ol

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ol::backends {

// Lower-cased word tokens. A token is a maximal run of ASCII letters, digits,
// apostrophes or non-ASCII bytes; apostrophes at either end are stripped.
std::vector<std::string> tokenize(std::string_view text);

// Number of Unicode code points in UTF-8 text.
std::size_t utf8_length(std::string_view text);

}  // namespace ol::backends

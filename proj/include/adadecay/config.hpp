#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adadecay/harness.hpp"

namespace adadecay {

using KeyValues = std::map<std::string, std::string>;

// key = value lines; blank lines and lines starting with # are skipped;
// whitespace around keys and values is trimmed. Malformed lines throw with
// the line number.
KeyValues parse_config_text(const std::string& text);
KeyValues parse_config_file(const std::string& path);

// Builds a config from the keys, starting from the defaults. Unknown keys,
// unparsable values, and missing required dataset paths all throw
// invalid_argument naming the offending key.
ExperimentConfig config_from_keys(const KeyValues& kv);

// Comma-separated unsigned seeds, e.g. "1,2,3".
std::vector<std::uint64_t> parse_seed_list(const std::string& csv);

// Comma-separated doubles, e.g. "-1,1,2,4,8".
std::vector<double> parse_value_list(const std::string& csv);

}  // namespace adadecay

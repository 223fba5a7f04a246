#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dai/harness.hpp"

namespace dai {

/// Ordered key=value pairs. Later entries win on duplicate keys.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
KeyValues parse_key_values(const std::string& text, const std::string& source_name);
KeyValues read_key_values_file(const std::string& path);
/// Parses "key=value" command-line overrides.
KeyValues parse_overrides(const std::vector<std::string>& overrides);
std::string format_key_values(const KeyValues& kv);

/// Every key a run configuration accepts.
const std::vector<std::string>& run_config_keys();

/// Builds a RunConfig from key=value pairs. Unknown keys and malformed values
/// are collected and reported together in one ConfigError. A missing
/// schedule.t_change defaults to total_steps / 2; a missing random_warmup to
/// on for td3 and off for td3_dai.
RunConfig run_config_from(const KeyValues& kv);

/// Fully resolved, canonical key=value form; run_config_from inverts it.
KeyValues to_key_values(const RunConfig& config);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text, const std::string& key);
long long parse_int(const std::string& text, const std::string& key);
std::uint64_t parse_u64(const std::string& text, const std::string& key);

}  // namespace dai

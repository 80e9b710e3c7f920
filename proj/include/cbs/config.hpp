#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cbs/trainer.hpp"

namespace cbs {

/// Parses a declarative run config: one `key = value` per line, keys named
/// exactly after the RunConfig fields (augmentation fields flattened in).
/// Blank lines and text after `#` are ignored. Unknown keys, duplicate keys,
/// malformed numbers and invariant violations all raise ValidationError.
RunConfig parse_run_config(std::istream& in);

RunConfig load_run_config(const std::string& path);

/// Field name/value pairs in schema order, with selection_ratio already
/// resolved. Feeding the output back through the parser reproduces the
/// config.
std::vector<std::pair<std::string, std::string>> config_key_values(const RunConfig& c);

}  // namespace cbs

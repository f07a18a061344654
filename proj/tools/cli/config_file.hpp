#pragma once

#include "physec/eval.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace physec::cli {

using KeyValues = std::map<std::string, std::string>;

/// `key = value` lines; blank lines and lines starting with # are ignored.
/// Throws ParseError with the line number on anything else.
KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::string& path);

/// Every key accepted in a config file (and as a --key flag).
const std::vector<std::string>& config_keys();

/// Applies `values` on top of the defaults. `seed` sets the base seed from which
/// the link/noise/attack/fit seeds are derived unless given explicitly.
/// Throws ConfigError naming the key on unknown keys, bad values or invalid settings.
ExperimentConfig config_from_key_values(const KeyValues& values);

/// Name of the environment variable overriding the default base seed.
inline constexpr const char* kSeedEnvVar = "PHYSEC_SEED";

}  // namespace physec::cli

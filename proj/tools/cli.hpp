#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tension_lab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInfeasible = 3;

const std::vector<std::string>& commands();

/// Built-in defaults for every configuration key.
nlohmann::json default_config(const std::string& command);

/// defaults <- file <- flags, with derived values (s, format, region, boundary)
/// filled in. Throws ValidationError on malformed values.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& file_layer,
                              const nlohmann::json& flag_layer);

/// Violations as "parameter: constraint"; empty iff `run` would pass its
/// precondition checks.
std::vector<std::string> validate(const nlohmann::json& config);

/// Dispatches one resolved config. Output goes to config["output"] ("-" is `out`);
/// the one-line summary goes to `out` when writing a file, else to `err`.
int run(const nlohmann::json& config, std::ostream& out, std::ostream& err);

/// Full entry point: argv parsing, config merge, validation, dispatch.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tension_lab::cli

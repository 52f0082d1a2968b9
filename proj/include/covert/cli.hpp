#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace covert::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolName = "covert-sense";
std::string_view tool_version();

enum class Command {
  qfi,
  bounds,
  budget,
  simulate_estimation,
  simulate_adversary,
  exact_pe,
  sweep,
};

enum class Format { csv, json };

std::string_view command_name(Command command);
std::optional<Command> parse_command(std::string_view name);
const std::vector<Command>& all_commands();

enum class ParamType { real, integer, integer_list, choice };

struct ParamSpec {
  std::string key;  // snake_case; the flag is --kebab-case
  ParamType type = ParamType::real;
  /// Resolved into the config when the parameter is not given.
  std::optional<std::string> default_value;
  bool required = false;
  std::vector<std::string> choices;
  std::string help;
};

const std::vector<ParamSpec>& command_schema(Command command);

/// A fully resolved run. Parameter values are kept in canonical text form
/// (reals as %.17g, integers in decimal, lists comma-separated), so two
/// configs are equivalent exactly when they compare equal.
struct RunConfig {
  Command command = Command::qfi;
  std::map<std::string, std::string> params;
  std::string output_path = "-";
  Format format = Format::json;
  std::uint64_t seed = 0;

  bool operator==(const RunConfig&) const = default;
};

/// Default output format of a command: csv for sweep, json otherwise.
Format default_format(Command command);

/// Canonical text of a raw value for the given type. Throws InvalidArgument
/// when the value does not parse (scientific notation is accepted for
/// integers as long as the value is integral).
std::string canonicalize(const ParamSpec& spec, std::string_view raw);

/// Build a config from raw flag values, canonicalizing them and filling in
/// defaults. Throws InvalidArgument for unknown keys or unparsable values.
RunConfig make_config(Command command, const std::map<std::string, std::string>& raw,
                      std::optional<Format> format = std::nullopt,
                      std::string output_path = "-", std::uint64_t seed = 0);

/// One diagnostic per violated constraint; empty when the config is valid.
std::vector<std::string> validate(const RunConfig& config);

std::string config_to_json(const RunConfig& config);

/// Inverse of config_to_json. Throws InvalidArgument on unknown keys.
RunConfig config_from_json(std::string_view text);

/// Recover the embedded config from an emitted CSV or JSON artifact (or a
/// bare config JSON document).
RunConfig config_from_artifact(std::string_view text);

using Cell = std::variant<long long, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Evaluate a validated config. Library exceptions propagate.
Table compute(const RunConfig& config);

/// Header block plus data in the config's format.
std::string render(const RunConfig& config, const Table& table);

/// Validate, compute and write the artifact to config.output_path ("-" is
/// `out`). Returns 0, 2 (validation), 3 (numerical failure) or 4 (I/O).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Command-line entry point.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace covert::cli

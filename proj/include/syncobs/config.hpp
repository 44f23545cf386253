#pragma once

#include "syncobs/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace syncobs {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scalar or numeric-array value from the TOML subset we accept.
struct ConfigValue {
    std::variant<bool, std::int64_t, double, std::string, std::vector<double>> data;

    bool is_number() const;
    double as_double(std::string_view key) const;
    std::int64_t as_integer(std::string_view key) const;
    bool as_bool(std::string_view key) const;
    const std::string& as_string(std::string_view key) const;
    const std::vector<double>& as_array(std::string_view key) const;
};

/// Flat dotted-key view of a document: "[hf]\namplitude = 0.5" becomes
/// {"hf.amplitude": 0.5}.
using ConfigTable = std::map<std::string, ConfigValue, std::less<>>;

/// Parses tables, dotted keys, strings, numbers, booleans and number arrays.
/// Inline tables, dates and arrays of tables are rejected.
ConfigTable parse_toml(std::string_view text);
ConfigTable load_toml_file(const std::filesystem::path& path);

/// Parses the right-hand side of `key=value`. Anything that is not a valid
/// TOML value is taken as a bare string, so `hf.mode=always-off` works.
ConfigValue parse_override_value(std::string_view text);

/// Splits "key=value"; throws ConfigError when there is no '='.
std::pair<std::string, ConfigValue> parse_override(std::string_view assignment);

inline constexpr std::int64_t kSchemaVersion = 1;

/// Every key accepted by scenario_from_table, in a stable order.
const std::vector<std::string>& known_config_keys();
bool is_known_config_key(std::string_view key);
bool is_scalar_numeric_key(std::string_view key);

/// Builds a scenario on top of the reference defaults. Unknown keys and
/// type mismatches throw ConfigError naming the key.
Scenario scenario_from_table(const ConfigTable& table);

/// Position tolerance for convergence flags in run reports.
double report_tolerance_from_table(const ConfigTable& table);

} // namespace syncobs

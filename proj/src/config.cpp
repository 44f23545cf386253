#include "syncobs/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace syncobs {

namespace {

std::string quoted(std::string_view key) {
    return "'" + std::string(key) + "'";
}

[[noreturn]] void type_error(std::string_view key, const char* expected) {
    throw ConfigError("config key " + quoted(key) + " must be " + expected);
}

// ---------------------------------------------------------------- parsing

class Cursor {
public:
    Cursor(std::string_view text, int line) : text_(text), line_(line) {}

    bool done() const { return pos_ >= text_.size(); }
    char peek() const { return done() ? '\0' : text_[pos_]; }
    char get() { return text_[pos_++]; }
    std::size_t pos() const { return pos_; }

    void skip_ws() {
        while (!done() && (peek() == ' ' || peek() == '\t' || peek() == '\n' || peek() == '\r')) {
            ++pos_;
        }
    }

    std::string_view rest() const { return text_.substr(pos_); }
    void advance(std::size_t n) { pos_ += n; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("TOML parse error on line " + std::to_string(line_) + ": " + what);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_;
};

bool is_bare_key_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

std::string parse_basic_string(Cursor& cur) {
    cur.get(); // opening quote
    std::string out;
    while (true) {
        if (cur.done()) {
            cur.fail("unterminated string");
        }
        const char c = cur.get();
        if (c == '"') {
            return out;
        }
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        if (cur.done()) {
            cur.fail("unterminated escape");
        }
        switch (const char e = cur.get()) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        default: cur.fail(std::string("unsupported escape \\") + e);
        }
    }
}

std::string parse_literal_string(Cursor& cur) {
    cur.get();
    std::string out;
    while (true) {
        if (cur.done()) {
            cur.fail("unterminated string");
        }
        const char c = cur.get();
        if (c == '\'') {
            return out;
        }
        out.push_back(c);
    }
}

std::string parse_key_part(Cursor& cur) {
    cur.skip_ws();
    if (cur.peek() == '"') {
        return parse_basic_string(cur);
    }
    if (cur.peek() == '\'') {
        return parse_literal_string(cur);
    }
    std::string out;
    while (!cur.done() && is_bare_key_char(cur.peek())) {
        out.push_back(cur.get());
    }
    if (out.empty()) {
        cur.fail("expected a key");
    }
    return out;
}

std::string parse_dotted_key(Cursor& cur) {
    std::string key = parse_key_part(cur);
    cur.skip_ws();
    while (cur.peek() == '.') {
        cur.get();
        key += "." + parse_key_part(cur);
        cur.skip_ws();
    }
    return key;
}

ConfigValue parse_number(Cursor& cur) {
    std::string token;
    while (!cur.done()) {
        const char c = cur.peek();
        if (c == ',' || c == ']' || c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            break;
        }
        cur.get();
        if (c != '_') {
            token.push_back(c);
        }
    }
    if (token.empty()) {
        cur.fail("expected a value");
    }
    std::string_view body = token;
    const bool negative = !body.empty() && body.front() == '-';
    if (!body.empty() && (body.front() == '+' || body.front() == '-')) {
        body.remove_prefix(1);
    }
    if (body == "inf") {
        return {negative ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity()};
    }
    if (body == "nan") {
        return {std::numeric_limits<double>::quiet_NaN()};
    }
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    const char* first = token.data() + (token.front() == '+' ? 1 : 0);
    const char* last = token.data() + token.size();
    if (is_float) {
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr != last) {
            cur.fail("invalid number '" + token + "'");
        }
        return {value};
    }
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        cur.fail("invalid value '" + token + "'");
    }
    return {value};
}

ConfigValue parse_value(Cursor& cur) {
    cur.skip_ws();
    const char c = cur.peek();
    if (c == '"') {
        return {parse_basic_string(cur)};
    }
    if (c == '\'') {
        return {parse_literal_string(cur)};
    }
    if (cur.rest().starts_with("true")) {
        cur.advance(4);
        return {true};
    }
    if (cur.rest().starts_with("false")) {
        cur.advance(5);
        return {false};
    }
    if (c == '[') {
        cur.get();
        std::vector<double> items;
        while (true) {
            cur.skip_ws();
            if (cur.peek() == ']') {
                cur.get();
                return {std::move(items)};
            }
            const ConfigValue item = parse_value(cur);
            if (!item.is_number()) {
                cur.fail("only arrays of numbers are supported");
            }
            items.push_back(item.as_double("array element"));
            cur.skip_ws();
            if (cur.peek() == ',') {
                cur.get();
            } else if (cur.peek() != ']') {
                cur.fail("expected ',' or ']' in array");
            }
        }
    }
    if (c == '{') {
        cur.fail("inline tables are not supported");
    }
    return parse_number(cur);
}

// Removes a trailing comment, honouring quotes.
std::string strip_comment(std::string_view line) {
    bool in_basic = false, in_literal = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_basic) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_basic = false;
            }
        } else if (in_literal) {
            if (c == '\'') {
                in_literal = false;
            }
        } else if (c == '"') {
            in_basic = true;
        } else if (c == '\'') {
            in_literal = true;
        } else if (c == '#') {
            return std::string(line.substr(0, i));
        }
    }
    return std::string(line);
}

int bracket_balance(std::string_view text) {
    int depth = 0;
    bool in_basic = false, in_literal = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_basic) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_basic = false;
            }
        } else if (in_literal) {
            in_literal = c != '\'';
        } else if (c == '"') {
            in_basic = true;
        } else if (c == '\'') {
            in_literal = true;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        }
    }
    return depth;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

// ---------------------------------------------------------------- schema

enum class KeyType { Number, Integer, Bool, String, Array3, Array5 };

struct KeySpec {
    std::string key;
    KeyType type;
    int phase; // 0: scenario fields, 1: gain derivation inputs, 2: explicit gains
    std::function<void(Scenario&, const ConfigValue&)> apply;
};

Vector5 to_vector5(const ConfigValue& v, std::string_view key) {
    const auto& a = v.as_array(key);
    if (a.size() != 5) {
        type_error(key, "an array of 5 numbers");
    }
    return Vector5(a.data());
}

Vector3 to_vector3(const ConfigValue& v, std::string_view key) {
    const auto& a = v.as_array(key);
    if (a.size() != 3) {
        type_error(key, "an array of 3 numbers");
    }
    return Vector3(a.data());
}

#define NUM(name, field)                                                                                            \
    KeySpec { name, KeyType::Number, 0, [](Scenario& s, const ConfigValue& v) { s.field = v.as_double(name); } }

const std::vector<KeySpec>& key_specs() {
    static const std::vector<KeySpec> specs = {
        {"schema_version", KeyType::Integer, 0, [](Scenario&, const ConfigValue&) {}},
        {"machine.kind", KeyType::String, 0,
         [](Scenario& s, const ConfigValue& v) {
             s.params.kind = machine_kind_from_string(v.as_string("machine.kind"));
         }},
        {"machine.pole_pairs", KeyType::Integer, 0,
         [](Scenario& s, const ConfigValue& v) {
             s.params.pole_pairs = static_cast<int>(v.as_integer("machine.pole_pairs"));
         }},
        NUM("machine.Rs", params.Rs),
        NUM("machine.Rf", params.Rf),
        NUM("machine.Ld", params.Ld),
        NUM("machine.Lq", params.Lq),
        NUM("machine.Lf", params.Lf),
        NUM("machine.Mf", params.Mf),
        NUM("machine.psi_r", params.psi_r),
        NUM("machine.mech.inertia", params.mech.inertia),
        NUM("machine.mech.viscous_friction", params.mech.viscous_friction),
        NUM("machine.mech.load_torque", params.mech.load_torque),
        NUM("setpoints.i_d", setpoints.i_d),
        NUM("setpoints.i_q", setpoints.i_q),
        NUM("setpoints.i_f", setpoints.i_f),
        {"profile.mode", KeyType::String, 0,
         [](Scenario& s, const ConfigValue& v) { s.speed_mode = speed_mode_from_string(v.as_string("profile.mode")); }},
        NUM("profile.initial_speed", profile.initial_speed),
        NUM("profile.initial_position", profile.initial_position),
        NUM("profile.hold_time", profile.hold_time),
        NUM("profile.acceleration", profile.acceleration),
        NUM("profile.ramp_time", profile.ramp_time),
        {"hf.mode", KeyType::String, 0,
         [](Scenario& s, const ConfigValue& v) { s.hf.mode = hf_mode_from_string(v.as_string("hf.mode")); }},
        NUM("hf.amplitude", hf.amplitude),
        NUM("hf.frequency", hf.frequency),
        NUM("hf.start", hf.start),
        NUM("hf.end", hf.end),
        NUM("hf.speed_threshold", hf.speed_threshold),
        {"controller.tau", KeyType::Number, 1, nullptr},
        {"controller.integral_time", KeyType::Number, 1, nullptr},
        {"controller.kp_d", KeyType::Number, 2,
         [](Scenario& s, const ConfigValue& v) { s.gains.d.kp = v.as_double("controller.kp_d"); }},
        {"controller.ki_d", KeyType::Number, 2,
         [](Scenario& s, const ConfigValue& v) { s.gains.d.ki = v.as_double("controller.ki_d"); }},
        {"controller.kp_q", KeyType::Number, 2,
         [](Scenario& s, const ConfigValue& v) { s.gains.q.kp = v.as_double("controller.kp_q"); }},
        {"controller.ki_q", KeyType::Number, 2,
         [](Scenario& s, const ConfigValue& v) { s.gains.q.ki = v.as_double("controller.ki_q"); }},
        {"controller.kp_f", KeyType::Number, 2,
         [](Scenario& s, const ConfigValue& v) { s.gains.f.kp = v.as_double("controller.kp_f"); }},
        {"controller.ki_f", KeyType::Number, 2,
         [](Scenario& s, const ConfigValue& v) { s.gains.f.ki = v.as_double("controller.ki_f"); }},
        {"controller.stator_voltage_limit", KeyType::Number, 2,
         [](Scenario& s, const ConfigValue& v) {
             s.gains.stator_voltage_limit = v.as_double("controller.stator_voltage_limit");
         }},
        {"controller.rotor_voltage_limit", KeyType::Number, 2,
         [](Scenario& s, const ConfigValue& v) {
             s.gains.rotor_voltage_limit = v.as_double("controller.rotor_voltage_limit");
         }},
        NUM("simulation.plant_step", plant_step),
        NUM("simulation.control_step", control_step),
        NUM("simulation.duration", duration),
        NUM("simulation.current_limit", current_limit),
        {"noise.seed", KeyType::Integer, 0,
         [](Scenario& s, const ConfigValue& v) {
             const auto seed = v.as_integer("noise.seed");
             if (seed < 0) {
                 type_error("noise.seed", "a non-negative integer");
             }
             s.noise.seed = static_cast<std::uint64_t>(seed);
         }},
        NUM("noise.std_alpha", noise.std_alpha),
        NUM("noise.std_beta", noise.std_beta),
        NUM("noise.std_f", noise.std_f),
        {"ekf.q_diag", KeyType::Array5, 0,
         [](Scenario& s, const ConfigValue& v) { s.estimator.q_diag = to_vector5(v, "ekf.q_diag"); }},
        {"ekf.r_diag", KeyType::Array3, 0,
         [](Scenario& s, const ConfigValue& v) { s.estimator.r_diag = to_vector3(v, "ekf.r_diag"); }},
        {"ekf.p0_diag", KeyType::Array5, 0,
         [](Scenario& s, const ConfigValue& v) { s.estimator.p0_diag = to_vector5(v, "ekf.p0_diag"); }},
        NUM("ekf.theta_offset", estimator.theta_offset),
        NUM("ekf.initial_speed", estimator.initial_speed),
        {"ekf.covariance_form", KeyType::String, 0,
         [](Scenario& s, const ConfigValue& v) {
             s.estimator.covariance_form = covariance_form_from_string(v.as_string("ekf.covariance_form"));
         }},
        NUM("observability.det_epsilon", thresholds.det_epsilon),
        NUM("observability.margin_epsilon", thresholds.margin_epsilon),
        NUM("observability.rank_tolerance", thresholds.rank_tolerance),
        NUM("observability.degenerate_epsilon", thresholds.degenerate_epsilon),
        {"report.position_tolerance", KeyType::Number, 0, [](Scenario&, const ConfigValue&) {}},
    };
    return specs;
}

#undef NUM

const KeySpec* find_spec(std::string_view key) {
    const auto& specs = key_specs();
    const auto it = std::find_if(specs.begin(), specs.end(), [&](const KeySpec& k) { return k.key == key; });
    return it == specs.end() ? nullptr : &*it;
}

void check_type(const KeySpec& spec, const ConfigValue& v) {
    switch (spec.type) {
    case KeyType::Number: v.as_double(spec.key); break;
    case KeyType::Integer: v.as_integer(spec.key); break;
    case KeyType::Bool: v.as_bool(spec.key); break;
    case KeyType::String: v.as_string(spec.key); break;
    case KeyType::Array3: to_vector3(v, spec.key); break;
    case KeyType::Array5: to_vector5(v, spec.key); break;
    }
}

double number_or(const ConfigTable& table, std::string_view key, double fallback) {
    const auto it = table.find(key);
    return it == table.end() ? fallback : it->second.as_double(key);
}

} // namespace

// ---------------------------------------------------------------- ConfigValue

bool ConfigValue::is_number() const {
    return std::holds_alternative<double>(data) || std::holds_alternative<std::int64_t>(data);
}

double ConfigValue::as_double(std::string_view key) const {
    if (const auto* d = std::get_if<double>(&data)) {
        return *d;
    }
    if (const auto* i = std::get_if<std::int64_t>(&data)) {
        return static_cast<double>(*i);
    }
    type_error(key, "a number");
}

std::int64_t ConfigValue::as_integer(std::string_view key) const {
    if (const auto* i = std::get_if<std::int64_t>(&data)) {
        return *i;
    }
    if (const auto* d = std::get_if<double>(&data); d != nullptr && std::trunc(*d) == *d && std::abs(*d) < 9e15) {
        return static_cast<std::int64_t>(*d);
    }
    type_error(key, "an integer");
}

bool ConfigValue::as_bool(std::string_view key) const {
    if (const auto* b = std::get_if<bool>(&data)) {
        return *b;
    }
    type_error(key, "a boolean");
}

const std::string& ConfigValue::as_string(std::string_view key) const {
    if (const auto* s = std::get_if<std::string>(&data)) {
        return *s;
    }
    type_error(key, "a string");
}

const std::vector<double>& ConfigValue::as_array(std::string_view key) const {
    if (const auto* a = std::get_if<std::vector<double>>(&data)) {
        return *a;
    }
    type_error(key, "an array of numbers");
}

// ---------------------------------------------------------------- public

ConfigTable parse_toml(std::string_view text) {
    ConfigTable table;
    std::string prefix;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const int start_line = line_no;
        std::string line = strip_comment(raw);
        // multi-line arrays
        while (bracket_balance(line) > 0 && std::getline(in, raw)) {
            ++line_no;
            line += "\n" + strip_comment(raw);
        }
        const std::string_view body = trim(line);
        if (body.empty()) {
            continue;
        }
        Cursor cur(body, start_line);
        if (body.front() == '[') {
            if (body.starts_with("[[")) {
                cur.fail("arrays of tables are not supported");
            }
            cur.get();
            prefix = parse_dotted_key(cur);
            cur.skip_ws();
            if (cur.peek() != ']') {
                cur.fail("expected ']' after table name");
            }
            cur.get();
            cur.skip_ws();
            if (!cur.done()) {
                cur.fail("unexpected text after table header");
            }
            continue;
        }
        const std::string key = parse_dotted_key(cur);
        cur.skip_ws();
        if (cur.peek() != '=') {
            cur.fail("expected '=' after key '" + key + "'");
        }
        cur.get();
        ConfigValue value = parse_value(cur);
        cur.skip_ws();
        if (!cur.done()) {
            cur.fail("unexpected text after value of '" + key + "'");
        }
        const std::string full = prefix.empty() ? key : prefix + "." + key;
        if (!table.emplace(full, std::move(value)).second) {
            cur.fail("duplicate key '" + full + "'");
        }
    }
    return table;
}

ConfigTable load_toml_file(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse_toml(buffer.str());
}

ConfigValue parse_override_value(std::string_view text) {
    const std::string_view body = trim(text);
    try {
        Cursor cur(body, 1);
        ConfigValue value = parse_value(cur);
        cur.skip_ws();
        if (cur.done()) {
            return value;
        }
    } catch (const ConfigError&) {
    }
    return {std::string(body)};
}

std::pair<std::string, ConfigValue> parse_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(assignment) + "' must have the form key=value");
    }
    const std::string key(trim(assignment.substr(0, eq)));
    if (key.empty()) {
        throw ConfigError("override '" + std::string(assignment) + "' has an empty key");
    }
    return {key, parse_override_value(assignment.substr(eq + 1))};
}

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& spec : key_specs()) {
            out.push_back(spec.key);
        }
        return out;
    }();
    return keys;
}

bool is_known_config_key(std::string_view key) {
    return find_spec(key) != nullptr;
}

bool is_scalar_numeric_key(std::string_view key) {
    const KeySpec* spec = find_spec(key);
    return spec != nullptr && (spec->type == KeyType::Number || spec->type == KeyType::Integer) &&
           key != "schema_version";
}

Scenario scenario_from_table(const ConfigTable& table) {
    for (const auto& [key, value] : table) {
        const KeySpec* spec = find_spec(key);
        if (spec == nullptr) {
            throw ConfigError("unknown config key '" + key + "'");
        }
        check_type(*spec, value);
    }
    if (const auto it = table.find("schema_version"); it != table.end()) {
        if (it->second.as_integer("schema_version") != kSchemaVersion) {
            throw ConfigError("unsupported schema_version " + std::to_string(it->second.as_integer("schema_version")) +
                              " (expected " + std::to_string(kSchemaVersion) + ")");
        }
    }

    Scenario s = reference_scenario();
    try {
        for (int phase : {0, 2}) {
            if (phase == 2) {
                s.gains = default_gains(s.params, number_or(table, "controller.tau", 1e-3),
                                        number_or(table, "controller.integral_time", 4e-3));
            }
            for (const auto& [key, value] : table) {
                const KeySpec* spec = find_spec(key);
                if (spec->phase == phase && spec->apply) {
                    spec->apply(s, value);
                }
            }
        }
        validate(s);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
    return s;
}

double report_tolerance_from_table(const ConfigTable& table) {
    const double tol = number_or(table, "report.position_tolerance", 0.05);
    if (!(tol > 0.0)) {
        throw ConfigError("report.position_tolerance must be > 0");
    }
    return tol;
}

} // namespace syncobs

#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace filtfb::cli {

/// Bad command line or configuration file; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every setting the CLI understands. Config-file keys are the long flag names
/// without the leading dashes.
struct RunConfig {
    std::string subcommand;

    std::optional<std::string> protocol;
    double lambda = 1.0;
    double omega = 1.0;
    std::optional<double> gamma;
    std::optional<double> Omega;

    // filter-response
    std::optional<std::string> filter;
    std::vector<double> gammas;
    std::vector<double> coeffs;
    std::vector<double> derivs;
    double tmax = 10.0;
    std::size_t npoints = 101;

    // phase-diagram
    std::size_t grid = 200;
    double gamma_min = 0.1;
    double gamma_max = 100.0;
    double Omega_min = 0.1;
    double Omega_max = 1000.0;

    // evolve / trajectory
    double dt = 1e-3;
    std::size_t steps = 1000;
    std::size_t ntraj = 100;
    std::optional<std::uint64_t> seed;
    std::size_t fock = 30;
    std::size_t stride = 10;
    unsigned threads = 0;
    double E0 = 0.5;

    std::string output;
    bool require_stable = false;
};

namespace detail {

using Json = nlohmann::json;

template <typename T>
T json_as(const Json& v, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw ConfigError("");
        } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) throw ConfigError("");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError("");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError("");
        }
        return v.get<T>();
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

inline std::vector<double> json_list(const Json& v, const std::string& key) {
    if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(json_as<double>(x, key));
    return out;
}

using Setter = std::function<void(RunConfig&, const Json&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"protocol", [](RunConfig& c, const Json& v, const std::string& k) { c.protocol = json_as<std::string>(v, k); }},
        {"lambda", [](RunConfig& c, const Json& v, const std::string& k) { c.lambda = json_as<double>(v, k); }},
        {"omega", [](RunConfig& c, const Json& v, const std::string& k) { c.omega = json_as<double>(v, k); }},
        {"gamma", [](RunConfig& c, const Json& v, const std::string& k) { c.gamma = json_as<double>(v, k); }},
        {"Omega", [](RunConfig& c, const Json& v, const std::string& k) { c.Omega = json_as<double>(v, k); }},
        {"filter", [](RunConfig& c, const Json& v, const std::string& k) { c.filter = json_as<std::string>(v, k); }},
        {"gammas", [](RunConfig& c, const Json& v, const std::string& k) { c.gammas = json_list(v, k); }},
        {"coeffs", [](RunConfig& c, const Json& v, const std::string& k) { c.coeffs = json_list(v, k); }},
        {"derivs", [](RunConfig& c, const Json& v, const std::string& k) { c.derivs = json_list(v, k); }},
        {"tmax", [](RunConfig& c, const Json& v, const std::string& k) { c.tmax = json_as<double>(v, k); }},
        {"npoints", [](RunConfig& c, const Json& v, const std::string& k) { c.npoints = json_as<std::size_t>(v, k); }},
        {"grid", [](RunConfig& c, const Json& v, const std::string& k) { c.grid = json_as<std::size_t>(v, k); }},
        {"gamma-min", [](RunConfig& c, const Json& v, const std::string& k) { c.gamma_min = json_as<double>(v, k); }},
        {"gamma-max", [](RunConfig& c, const Json& v, const std::string& k) { c.gamma_max = json_as<double>(v, k); }},
        {"Omega-min", [](RunConfig& c, const Json& v, const std::string& k) { c.Omega_min = json_as<double>(v, k); }},
        {"Omega-max", [](RunConfig& c, const Json& v, const std::string& k) { c.Omega_max = json_as<double>(v, k); }},
        {"dt", [](RunConfig& c, const Json& v, const std::string& k) { c.dt = json_as<double>(v, k); }},
        {"steps", [](RunConfig& c, const Json& v, const std::string& k) { c.steps = json_as<std::size_t>(v, k); }},
        {"ntraj", [](RunConfig& c, const Json& v, const std::string& k) { c.ntraj = json_as<std::size_t>(v, k); }},
        {"seed", [](RunConfig& c, const Json& v, const std::string& k) { c.seed = json_as<std::uint64_t>(v, k); }},
        {"fock", [](RunConfig& c, const Json& v, const std::string& k) { c.fock = json_as<std::size_t>(v, k); }},
        {"stride", [](RunConfig& c, const Json& v, const std::string& k) { c.stride = json_as<std::size_t>(v, k); }},
        {"threads", [](RunConfig& c, const Json& v, const std::string& k) { c.threads = json_as<unsigned>(v, k); }},
        {"E0", [](RunConfig& c, const Json& v, const std::string& k) { c.E0 = json_as<double>(v, k); }},
        {"output", [](RunConfig& c, const Json& v, const std::string& k) { c.output = json_as<std::string>(v, k); }},
        {"require-stable",
         [](RunConfig& c, const Json& v, const std::string& k) { c.require_stable = json_as<bool>(v, k); }},
    };
    return table;
}

inline std::size_t line_of_offset(const std::string& text, std::size_t byte) {
    const std::size_t end = std::min(byte, text.size());
    std::size_t line = 1;
    for (std::size_t i = 0; i < end; ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace detail

/// Applies a flat JSON object of settings on top of `base`.
inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
    detail::Json doc;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return base;
    try {
        doc = detail::Json::parse(text);
    } catch (const detail::Json::parse_error& e) {
        // byte is one past the offending character
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        throw ConfigError("config parse error on line " + std::to_string(detail::line_of_offset(text, at)) + ": " +
                          e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object of key/value pairs");
    const auto& table = detail::setters();
    for (const auto& [key, value] : doc.items()) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
        it->second(base, value, key);
    }
    return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), std::move(base));
}

}  // namespace filtfb::cli

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace lfv::cli {

/// Configuration problems, all reported together.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string s;
        for (const auto& x : p) s += (s.empty() ? "" : "; ") + x;
        return s;
    }
    std::vector<std::string> problems_;
};

struct RunConfig {
    std::string command;
    std::optional<std::string> measure;
    std::optional<int> n;
    std::optional<int> d;
    std::optional<double> T;
    std::optional<int> m;
    std::vector<int> m_grid;
    std::optional<int> b;
    std::optional<int> b_min;
    std::optional<int> replicas;
    std::vector<double> snapshot_times;
    std::vector<double> times;
    std::vector<double> scales;
    std::optional<double> alpha;
    std::optional<double> delta;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<double> horizon;
    std::optional<int> n_start;
    std::optional<std::string> mode;
    std::optional<std::string> initial;
    std::vector<double> phi1_center;
    std::optional<double> phi1_width;
    std::vector<double> phi2_center;
    std::optional<double> phi2_width;
    std::vector<double> energy;
    bool quick = false;
};

/// Known keys of a config document, in output order.
inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "measure", "n", "d", "T", "m", "m_grid", "b", "b_min", "replicas", "snapshot_times", "times", "scales",
        "alpha", "delta", "seed", "out", "workers", "horizon", "n_start", "mode", "initial", "phi1_center",
        "phi1_width", "phi2_center", "phi2_width", "energy", "quick"};
    return keys;
}

namespace detail {

template <class T>
void read(const nlohmann::json& j, const char* key, std::optional<T>& dst, std::vector<std::string>& bad) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const std::exception&) {
        bad.push_back(std::string("key '") + key + "' has the wrong type");
    }
}

template <class T>
void read(const nlohmann::json& j, const char* key, std::vector<T>& dst, std::vector<std::string>& bad) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<std::vector<T>>();
    } catch (const std::exception&) {
        bad.push_back(std::string("key '") + key + "' must be an array of numbers");
    }
}

}  // namespace detail

/// Parses a JSON config document. Unknown keys and type errors are collected
/// and thrown together.
inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("malformed JSON: ") + e.what()});
    }
    if (!j.is_object()) throw ConfigError({"config must be a JSON object"});
    std::vector<std::string> bad;
    const auto& keys = config_keys();
    for (const auto& [k, v] : j.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) bad.push_back("unknown key '" + k + "'");
    RunConfig c;
    detail::read(j, "measure", c.measure, bad);
    detail::read(j, "n", c.n, bad);
    detail::read(j, "d", c.d, bad);
    detail::read(j, "T", c.T, bad);
    detail::read(j, "m", c.m, bad);
    detail::read(j, "m_grid", c.m_grid, bad);
    detail::read(j, "b", c.b, bad);
    detail::read(j, "b_min", c.b_min, bad);
    detail::read(j, "replicas", c.replicas, bad);
    detail::read(j, "snapshot_times", c.snapshot_times, bad);
    detail::read(j, "times", c.times, bad);
    detail::read(j, "scales", c.scales, bad);
    detail::read(j, "alpha", c.alpha, bad);
    detail::read(j, "delta", c.delta, bad);
    detail::read(j, "seed", c.seed, bad);
    detail::read(j, "out", c.out, bad);
    detail::read(j, "workers", c.workers, bad);
    detail::read(j, "horizon", c.horizon, bad);
    detail::read(j, "n_start", c.n_start, bad);
    detail::read(j, "mode", c.mode, bad);
    detail::read(j, "initial", c.initial, bad);
    detail::read(j, "phi1_center", c.phi1_center, bad);
    detail::read(j, "phi1_width", c.phi1_width, bad);
    detail::read(j, "phi2_center", c.phi2_center, bad);
    detail::read(j, "phi2_width", c.phi2_width, bad);
    detail::read(j, "energy", c.energy, bad);
    if (j.contains("quick")) {
        if (j["quick"].is_boolean()) c.quick = j["quick"].get<bool>();
        else bad.push_back("key 'quick' must be a boolean");
    }
    if (!bad.empty()) throw ConfigError(bad);
    return c;
}

RunConfig load_config(const std::string& path);

/// Effective configuration as JSON (only the keys that are set).
inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j = nlohmann::json::object();
    auto put = [&](const char* k, const auto& v) {
        if (v) j[k] = *v;
    };
    auto put_vec = [&](const char* k, const auto& v) {
        if (!v.empty()) j[k] = v;
    };
    put("measure", c.measure);
    put("n", c.n);
    put("d", c.d);
    put("T", c.T);
    put("m", c.m);
    put_vec("m_grid", c.m_grid);
    put("b", c.b);
    put("b_min", c.b_min);
    put("replicas", c.replicas);
    put_vec("snapshot_times", c.snapshot_times);
    put_vec("times", c.times);
    put_vec("scales", c.scales);
    put("alpha", c.alpha);
    put("delta", c.delta);
    put("seed", c.seed);
    put("workers", c.workers);
    put("horizon", c.horizon);
    put("n_start", c.n_start);
    put("mode", c.mode);
    put("initial", c.initial);
    put_vec("phi1_center", c.phi1_center);
    put("phi1_width", c.phi1_width);
    put_vec("phi2_center", c.phi2_center);
    put("phi2_width", c.phi2_width);
    put_vec("energy", c.energy);
    if (c.quick) j["quick"] = true;
    return j;
}

}  // namespace lfv::cli

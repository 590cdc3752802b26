#include "output.hpp"

#include <cstdlib>
#include <fstream>
#include <system_error>

#include "config.hpp"

namespace lfv::cli {

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

void OutputDir::ensure_dir() {
    if (created_) return;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
    created_ = true;
}

void OutputDir::write(const std::string& name, const std::string& content, const std::string& schema) {
    ensure_dir();
    write_atomic(dir_ / name, content);
    entries_.push_back({name, content.size(), hex64(fnv1a64(content)), schema});
}

void OutputDir::write_manifest(const std::string& command, const nlohmann::json& config, double wall_seconds) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& e : entries_) {
        nlohmann::json f{{"name", e.name}, {"bytes", e.bytes}, {"fnv1a64", e.fnv1a64}};
        if (!e.schema.empty()) f["schema"] = e.schema;
        files.push_back(std::move(f));
    }
    nlohmann::json m{{"artifact_version", kArtifactVersion},
                     {"command", command},
                     {"config", config},
                     {"files", files},
                     {"replica_seed_rule",
                      "replica r, stream s: mt19937_64 seeded with splitmix64 chained over (seed, r, s); "
                      "stream 0 = events, 1 = motion, 2 = auxiliary"},
                     {"wall_clock_seconds", wall_seconds}};
    write_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
}

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("LFV_OUT_DIR"); env && *env) return env;
    return "lfv_out";
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError({"cannot read config file '" + path + "'"});
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

}  // namespace lfv::cli

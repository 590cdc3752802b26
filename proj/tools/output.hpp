#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lfv::cli {

inline constexpr const char* kArtifactVersion = "1";

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
    return s;
}

/// Writes via a temporary file in the same directory and a rename.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Output directory of one run: files are written atomically as they are
/// produced, and the manifest (config echo, checksums, schema notes) last.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir);

    const std::filesystem::path& path() const { return dir_; }

    void write(const std::string& name, const std::string& content, const std::string& schema = "");

    /// Manifest with per-file checksums. Wall-clock time is recorded but is
    /// not part of any checksum.
    void write_manifest(const std::string& command, const nlohmann::json& config, double wall_seconds);

    struct Entry {
        std::string name;
        std::size_t bytes = 0;
        std::string fnv1a64;
        std::string schema;
    };
    const std::vector<Entry>& entries() const { return entries_; }

private:
    void ensure_dir();

    std::filesystem::path dir_;
    bool created_ = false;
    std::vector<Entry> entries_;
};

/// Output directory from the flag/config value, then LFV_OUT_DIR, then "lfv_out".
std::filesystem::path default_out_dir();

}  // namespace lfv::cli

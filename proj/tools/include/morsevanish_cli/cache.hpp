#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace morsevanish::cli {

std::string sha256_hex(std::string_view data);

/// Content-addressed store of stage outputs: one JSON file per key.
class Cache {
public:
    explicit Cache(std::filesystem::path dir);

    /// $MORSEVANISH_CACHE when set, otherwise <out>/cache.
    static std::filesystem::path location(const std::filesystem::path& out);

    [[nodiscard]] static std::string key(const std::string& config_hash, const std::string& stage,
                                         const nlohmann::json& parameters);

    /// Unreadable or mismatched entries count as corrupt and miss.
    std::optional<nlohmann::json> lookup(const std::string& key, const std::string& stage);
    void store(const std::string& key, const std::string& stage, const nlohmann::json& payload);

    [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }
    [[nodiscard]] int hits() const { return hits_; }
    [[nodiscard]] int misses() const { return misses_; }
    [[nodiscard]] int corrupt() const { return corrupt_; }

private:
    std::filesystem::path dir_;
    int hits_ = 0;
    int misses_ = 0;
    int corrupt_ = 0;
};

}  // namespace morsevanish::cli

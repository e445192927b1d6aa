#include "morsevanish_cli/cache.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <openssl/sha.h>

namespace morsevanish::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char b : digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 15]);
    }
    return out;
}

Cache::Cache(fs::path dir) : dir_(std::move(dir)) {}

fs::path Cache::location(const fs::path& out)
{
    if (const char* env = std::getenv("MORSEVANISH_CACHE"); env && *env) return env;
    return out / "cache";
}

std::string Cache::key(const std::string& config_hash, const std::string& stage,
                       const json& parameters)
{
    return sha256_hex(config_hash + "\n" + stage + "\n" + parameters.dump());
}

std::optional<json> Cache::lookup(const std::string& key, const std::string& stage)
{
    const fs::path file = dir_ / (key + ".json");
    if (!fs::exists(file)) {
        ++misses_;
        return std::nullopt;
    }
    std::ifstream in(file);
    std::stringstream buffer;
    buffer << in.rdbuf();
    json j = json::parse(buffer.str(), nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("key", "") != key ||
        j.value("stage", "") != stage || !j.contains("payload")) {
        ++corrupt_;
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return j["payload"];
}

void Cache::store(const std::string& key, const std::string& stage, const json& payload)
{
    fs::create_directories(dir_);
    const fs::path file = dir_ / (key + ".json");
    const fs::path tmp = dir_ / (key + ".tmp");
    {
        std::ofstream out(tmp);
        out << json{{"schema", 1}, {"key", key}, {"stage", stage}, {"payload", payload}}.dump();
    }
    fs::rename(tmp, file);
}

}  // namespace morsevanish::cli

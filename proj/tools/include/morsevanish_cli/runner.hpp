#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "morsevanish/critical.hpp"
#include "morsevanish/homology.hpp"
#include "morsevanish/oracle.hpp"
#include "morsevanish_cli/cache.hpp"
#include "morsevanish_cli/config.hpp"

namespace morsevanish::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct Flags {
    std::optional<std::string> config;   // path
    std::optional<std::string> problem;  // catalog name
    std::filesystem::path out = "morsevanish-out";
    std::uint64_t seed = 0;
    std::optional<double> eps;
    std::optional<std::string> grid;
    std::optional<double> lambda;
    std::optional<double> Lambda;
    std::optional<int> res;
    int thetas = 16;
    int jobs = 0;
    std::optional<int> source;
    std::optional<double> eps_from;
    std::optional<double> eps_to;
    bool paths = false;  // dump trajectory CSVs
};

/// Stage outputs of one config, memoised through the cache.
class Pipeline {
public:
    Pipeline(RunConfig config, const Flags& flags);

    [[nodiscard]] const RunConfig& config() const { return config_; }
    [[nodiscard]] const std::string& config_hash() const { return hash_; }
    [[nodiscard]] std::filesystem::path run_dir() const;
    [[nodiscard]] double eps() const;
    [[nodiscard]] double lambda() const;
    [[nodiscard]] double Lambda() const;
    Cache& cache() { return cache_; }

    /// The problem after the seeded tilt that makes it Morse at the config eps.
    const ProblemSpec& problem();
    [[nodiscard]] const nlohmann::json& tilt();

    const std::vector<CriticalPoint>& critical_points(double eps);
    const CountTable& boundary_counts(double eps);
    MorseComplex complex(double eps);
    OracleResult oracle(double eps);

    struct Continuation {
        CountTable counts;
        int halvings = 0;
        double delta = 0.0;
        bool confined = false;
        double max_excursion = 0.0;
        double min_excursion = 0.0;
    };
    const Continuation& continuation(double from, double to);

    /// Cached critical point search: points plus search statistics.
    nlohmann::json search_json(double eps);

private:

    RunConfig config_;
    Flags flags_;
    std::string hash_;
    Cache cache_;
    std::optional<ProblemSpec> problem_;
    nlohmann::json tilt_;
    std::map<double, std::vector<CriticalPoint>> points_;
    std::map<double, CountTable> counts_;
    std::map<std::pair<double, double>, Continuation> continuations_;
};

/// "0", "Z", "Z^2+Z/3", ...
std::string group_string(const HomologyResult& h, int degree);

/// Runs one command. Exit code 0 on success, 1 on validation failure,
/// 2 on solver failure.
int run(const std::string& command, const Flags& flags, std::ostream& out, std::ostream& err);

extern const std::vector<std::string> kCommands;

}  // namespace morsevanish::cli

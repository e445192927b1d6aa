#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "morsevanish/compactify.hpp"
#include "morsevanish/problem.hpp"

namespace morsevanish::cli {

/// A problem plus the run parameters that travel with it.
struct RunConfig {
    ProblemSpec problem;
    std::optional<AlgebraicProblem> algebraic;  // set for polynomial configs
    std::optional<std::string> catalog_name;
    double eps = 0.01;
    std::string eps_grid = "2^-3..2^-12";
    int oracle_resolution = 64;
    int starts_per_axis = 17;
    nlohmann::json source;  // the parsed config, keys sorted
};

/// Reads a problem config. Malformed JSON raises ConfigError carrying
/// "line L, column C"; bad fields raise ConfigError naming the field.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// A catalog entry wrapped as a config: {"catalog": name}.
RunConfig config_from_catalog(const std::string& name);

}  // namespace morsevanish::cli

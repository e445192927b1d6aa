#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "morsevanish/errors.hpp"
#include "morsevanish_cli/cache.hpp"
#include "morsevanish_cli/config.hpp"
#include "morsevanish_cli/json_io.hpp"
#include "morsevanish_cli/runner.hpp"

using namespace morsevanish;
using namespace morsevanish::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("morsevanish_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run_command(const std::string& command, const Flags& flags)
{
    std::ostringstream out, err;
    const int code = run(command, flags, out, err);
    return {code, out.str(), err.str()};
}

Flags catalog_flags(const std::string& name, const fs::path& out)
{
    Flags f;
    f.problem = name;
    f.out = out;
    return f;
}

json stage_cache(const fs::path& run_dir, const std::string& stage)
{
    return json::parse(slurp(run_dir / "manifest.json"))["stages"][stage]["cache"];
}

}  // namespace

TEST(Config, MalformedReportsLineAndColumn)
{
    try {
        (void)parse_config("{\n  \"dimension\": 1,\n  \"f\": x\n}", "bad.json");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("column"), std::string::npos) << e.what();
    }
}

TEST(Config, FieldsAndDefaults)
{
    const RunConfig c = parse_config(R"({
        "dimension": 1, "variables": ["y"],
        "domain": [{"min": 0, "max": null, "ends": ["min"]}],
        "f": "y", "tau": "y",
        "window": {"lambda": 1, "Lambda": 10},
        "eps": 0.02, "oracle": {"resolution": 128}
    })");
    EXPECT_EQ(c.problem.dimension(), 1);
    EXPECT_DOUBLE_EQ(c.eps, 0.02);
    EXPECT_EQ(c.oracle_resolution, 128);
    EXPECT_DOUBLE_EQ(c.problem.window.a, -1.0);
    EXPECT_DOUBLE_EQ(c.problem.window.Lambda, 10.0);
    EXPECT_TRUE(c.problem.domain.axes()[0].lo_is_end);
    EXPECT_FALSE(c.problem.domain.axes()[0].hi_is_end);

    const RunConfig poly = parse_config(R"({"polynomial": {"n": 1, "terms": [{"monomial": [2], "re": "1/2", "im": 0.25}]}})");
    ASSERT_TRUE(poly.algebraic);
    EXPECT_EQ(poly.algebraic->F.terms()[0].re, Rational(1, 2));
    EXPECT_EQ(poly.algebraic->F.terms()[0].im, Rational(1, 4));
    EXPECT_EQ(poly.problem.dimension(), 2);

    EXPECT_THROW((void)parse_config(R"({"dimension": 1, "f": "x"})"), ConfigError);
    EXPECT_THROW((void)parse_config(R"({"dimension": 1, "f": "x +", "tau": "1"})"), ParseError);
    EXPECT_THROW((void)parse_config(R"({"catalog": "nope"})"), UnknownEntry);
}

TEST(Json, NonFiniteNumbers)
{
    EXPECT_EQ(number(std::numeric_limits<double>::infinity()), json("inf"));
    EXPECT_EQ(number(-std::numeric_limits<double>::infinity()), json("-inf"));
    EXPECT_TRUE(std::isnan(to_double(number(std::nan("")))));
    EXPECT_EQ(to_double(number(0.1)), 0.1);
}

TEST(Json, CriticalPointRoundTrip)
{
    CriticalPoint p;
    p.id = 3;
    p.coordinates = {0.1, -2.5e-7};
    p.value = 1.0 / 3.0;
    p.residual = 1e-13;
    p.hessian_eigenvalues = {-1.0, 2.0};
    p.index = 1;
    p.certification_radius = std::numeric_limits<double>::infinity();
    p.window = WindowStatus::below;
    const CriticalPoint q = critical_point_from_json(json::parse(to_json(p).dump()));
    EXPECT_EQ(q.coordinates, p.coordinates);
    EXPECT_EQ(q.value, p.value);
    EXPECT_EQ(q.certification_radius, p.certification_radius);
    EXPECT_EQ(q.window, p.window);
}

TEST(Cache, StoreLookupCorrupt)
{
    const fs::path d = fresh_dir("cache");
    Cache c(d);
    const std::string k = Cache::key("abc", "stage", json{{"eps", 0.1}});
    EXPECT_NE(k, Cache::key("abc", "stage", json{{"eps", 0.2}}));
    EXPECT_FALSE(c.lookup(k, "stage"));
    c.store(k, "stage", json{{"x", 1}});
    ASSERT_TRUE(c.lookup(k, "stage"));
    EXPECT_EQ((*c.lookup(k, "stage"))["x"], 1);
    for (const auto& f : fs::directory_iterator(d)) std::ofstream(f.path()) << "{not json";
    EXPECT_FALSE(c.lookup(k, "stage"));
    EXPECT_EQ(c.corrupt(), 1);
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, ExitCodes)
{
    const fs::path d = fresh_dir("exit");
    const fs::path bad = d / "bad.json";
    std::ofstream(bad) << "{\"dimension\": 1,\n \"f\": }";
    Flags f;
    f.config = bad.string();
    f.out = d;
    const Outcome r = run_command("crit", f);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;

    EXPECT_EQ(run_command("crit", catalog_flags("nope", d)).code, 1);
    EXPECT_EQ(run_command("crit", Flags{}).code, 1);

    Flags missing = catalog_flags("double_well_1d", d);
    missing.source = 99;
    EXPECT_EQ(run_command("flow", missing).code, 1);

    Flags high = catalog_flags("x_plus_x2y", d);
    EXPECT_EQ(run_command("complex", high).code, 1);
}

TEST(Cli, CompareDoubleWell)
{
    const fs::path d = fresh_dir("compare_dw");
    const Outcome r = run_command("compare", catalog_flags("double_well_1d", d));
    ASSERT_EQ(r.code, 0) << r.err;
    fs::path run_dir;
    for (const auto& e : fs::directory_iterator(d))
        if (e.path().filename() != "cache") run_dir = e.path();
    const json report = json::parse(slurp(run_dir / "compare.json"));
    EXPECT_EQ(report["schema"], 1);
    EXPECT_TRUE(report["pass"].get<bool>());
    EXPECT_EQ(report["rows"][0]["morse"], "Z");
    EXPECT_EQ(report["rows"][0]["oracle"], "Z");
    EXPECT_EQ(report["rows"][0]["catalog"], "Z");
    EXPECT_GT(stage_cache(run_dir, "compare")["misses"].get<int>(), 0);

    // identical rerun is served from the cache
    ASSERT_EQ(run_command("compare", catalog_flags("double_well_1d", d)).code, 0);
    EXPECT_EQ(stage_cache(run_dir, "compare")["misses"], 0);
    EXPECT_GT(stage_cache(run_dir, "compare")["hits"].get<int>(), 0);

    // changed eps misses
    Flags other = catalog_flags("double_well_1d", d);
    other.eps = 0.02;
    ASSERT_EQ(run_command("compare", other).code, 0);
    EXPECT_GT(stage_cache(run_dir, "compare")["misses"].get<int>(), 0);
}

TEST(Cli, CompareZCubed)
{
    const fs::path d = fresh_dir("compare_z3");
    const Outcome r = run_command("compare", catalog_flags("z^3", d));
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& e : fs::directory_iterator(d)) {
        if (e.path().filename() == "cache") continue;
        const json report = json::parse(slurp(e.path() / "compare.json"));
        EXPECT_TRUE(report["pass"].get<bool>());
        for (const char* col : {"morse", "oracle", "catalog"}) {
            EXPECT_EQ(report["rows"][1][col], "Z^2") << col;
            EXPECT_EQ(report["rows"][0][col], "0") << col;
        }
    }
}

TEST(Cli, ClearedCacheReproduces)
{
    const fs::path d = fresh_dir("determinism");
    ASSERT_EQ(run_command("compare", catalog_flags("z^2", d)).code, 0);
    fs::path run_dir;
    for (const auto& e : fs::directory_iterator(d))
        if (e.path().filename() != "cache") run_dir = e.path();
    const std::string first = slurp(run_dir / "compare.json");
    fs::remove_all(d / "cache");
    ASSERT_EQ(run_command("compare", catalog_flags("z^2", d)).code, 0);
    EXPECT_GT(stage_cache(run_dir, "compare")["misses"].get<int>(), 0);
    EXPECT_EQ(slurp(run_dir / "compare.json"), first);
}

TEST(Cli, Executable)
{
    const fs::path d = fresh_dir("exe");
    const std::string exe = MORSEVANISH_EXE;
    auto status = [&](const std::string& args) {
        const int s = std::system((exe + " " + args + " > " + (d / "log").string() + " 2>&1").c_str());
        return WEXITSTATUS(s);
    };
    EXPECT_EQ(status("crit --problem sqrt_escape_1d --out " + d.string()), 0);
    EXPECT_EQ(status("crit --bogus"), 1);
    EXPECT_EQ(status("crit --problem nope --out " + d.string()), 1);
    EXPECT_NE(slurp(d / "log").find("UnknownEntry"), std::string::npos);
}

#include "morsevanish_cli/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "morsevanish/errors.hpp"
#include "morsevanish/flow.hpp"
#include "morsevanish_cli/json_io.hpp"

namespace morsevanish::cli {

namespace fs = std::filesystem;

const std::vector<std::string> kCommands = {"crit",    "sweep-eps", "sweep-theta", "flow",
                                            "complex", "homology",  "oracle",      "compare",
                                            "continue", "report"};

std::string group_string(const HomologyResult& h, int degree)
{
    std::string s;
    if (long b = h.betti(degree); b > 0) s = b == 1 ? "Z" : "Z^" + std::to_string(b);
    for (const auto& t : h.torsion(degree)) s += (s.empty() ? "" : "+") + ("Z/" + t.str());
    return s.empty() ? "0" : s;
}

// ---------------------------------------------------------------------------

namespace {

json params_with_tilt(Pipeline& p, json params)
{
    params["tilt"] = p.tilt();
    params["starts_per_axis"] = p.config().starts_per_axis;
    return params;
}

json search_payload(const CriticalSearch& s)
{
    return {{"points", to_json(s.points)},
            {"starts", s.starts},
            {"converged_starts", s.converged_starts},
            {"drifting_to_end", s.drifting_to_end},
            {"coverage_min_residual", number(s.coverage_min_residual)}};
}

CriticalOptions critical_options(const RunConfig& c, int jobs)
{
    CriticalOptions o;
    o.starts_per_axis = c.starts_per_axis;
    o.jobs = jobs;
    return o;
}

}  // namespace

Pipeline::Pipeline(RunConfig config, const Flags& flags)
    : config_(std::move(config)), flags_(flags), cache_(Cache::location(flags.out))
{
    json source = config_.source;
    WindowSpec& w = config_.problem.window;
    if (flags.lambda) {
        w.lambda = *flags.lambda;
        w.a = -w.lambda;
        w.b = w.lambda;
        source["override_lambda"] = number(*flags.lambda);
    }
    if (flags.Lambda) {
        w.Lambda = *flags.Lambda;
        source["override_Lambda"] = number(*flags.Lambda);
    }
    if (flags.lambda || flags.Lambda) w.validate();
    if (config_.algebraic) config_.algebraic->window = w;
    hash_ = sha256_hex(source.dump() + "\n" + kToolVersion);
}

fs::path Pipeline::run_dir() const
{
    return flags_.out / hash_.substr(0, 16);
}

double Pipeline::eps() const { return flags_.eps.value_or(config_.eps); }
double Pipeline::lambda() const { return config_.problem.window.lambda; }
double Pipeline::Lambda() const { return config_.problem.window.Lambda; }

const json& Pipeline::tilt()
{
    if (!tilt_.is_null()) return tilt_;
    const json params{{"eps", number(config_.eps)},
                      {"seed", flags_.seed},
                      {"starts_per_axis", config_.starts_per_axis}};
    const std::string key = Cache::key(hash_, "tilt", params);
    if (auto hit = cache_.lookup(key, "tilt")) {
        tilt_ = *hit;
        return tilt_;
    }
    const CriticalOptions options = critical_options(config_, flags_.jobs);
    CriticalSearch plain = find_critical_points(config_.problem, config_.eps, options);
    const bool morse = std::none_of(plain.points.begin(), plain.points.end(),
                                    [](const CriticalPoint& c) { return c.in_window() && c.degenerate; });
    if (morse) {
        const json zero(std::vector<double>(config_.problem.dimension(), 0.0));
        tilt_ = {{"delta", 0.0}, {"functional", zero}, {"halvings", 0}};
        cache_.store(key, "tilt", tilt_);
        // the untilted search is the config-eps search; keep it
        const json params = params_with_tilt(*this, {{"eps", number(config_.eps)}});
        cache_.store(Cache::key(hash_, "critical", params), "critical", search_payload(plain));
        return tilt_;
    }
    MorsifyResult m = morsify(config_.problem, config_.eps, flags_.seed, options);
    json functional = json::array();
    for (double x : m.functional) functional.push_back(number(x));
    tilt_ = {{"delta", number(m.delta)}, {"functional", functional}, {"halvings", m.halvings}};
    cache_.store(key, "tilt", tilt_);
    return tilt_;
}

const ProblemSpec& Pipeline::problem()
{
    if (problem_) return *problem_;
    const json& t = tilt();
    const double delta = to_double(t["delta"]);
    if (delta == 0.0) {
        problem_ = config_.problem;
    } else {
        std::vector<double> c;
        for (const auto& x : t["functional"]) c.push_back(delta * to_double(x));
        problem_ = with_linear_tilt(config_.problem, c);
    }
    return *problem_;
}

json Pipeline::search_json(double eps)
{
    const json params = params_with_tilt(*this, {{"eps", number(eps)}});
    const std::string key = Cache::key(hash_, "critical", params);
    if (auto hit = cache_.lookup(key, "critical")) return *hit;
    CriticalSearch s = find_critical_points(problem(), eps, critical_options(config_, flags_.jobs));
    json payload = search_payload(s);
    cache_.store(key, "critical", payload);
    return payload;
}

const std::vector<CriticalPoint>& Pipeline::critical_points(double eps)
{
    if (auto it = points_.find(eps); it != points_.end()) return it->second;
    return points_[eps] = critical_points_from_json(search_json(eps)["points"]);
}

const CountTable& Pipeline::boundary_counts(double eps)
{
    if (auto it = counts_.find(eps); it != counts_.end()) return it->second;
    const json params = params_with_tilt(*this, {{"eps", number(eps)}});
    const std::string key = Cache::key(hash_, "boundary", params);
    if (auto hit = cache_.lookup(key, "boundary")) return counts_[eps] = counts_from_json(*hit);
    CountOptions o;
    o.jobs = flags_.jobs;
    BoundaryReport r = compute_boundaries(problem(), eps, critical_points(eps), o);
    cache_.store(key, "boundary", to_json(r.counts));
    return counts_[eps] = r.counts;
}

MorseComplex Pipeline::complex(double eps)
{
    const int n = config_.problem.dimension();
    if (n > 3)
        throw Unsupported("trajectory counting needs ambient dimension <= 3, got " + std::to_string(n));
    const auto& points = critical_points(eps);
    return assemble_complex(points, boundary_counts(eps), eps, config_.problem.window);
}

OracleResult Pipeline::oracle(double eps)
{
    OracleOptions o;
    o.resolution = flags_.res.value_or(config_.oracle_resolution);
    o.check_refinement = config_.problem.dimension() <= 3;
    o.jobs = flags_.jobs;
    const json params = params_with_tilt(
        *this, {{"eps", number(eps)},
                {"lambda", number(lambda())},
                {"Lambda", number(Lambda())},
                {"resolution", o.resolution},
                {"refinement", o.check_refinement}});
    const std::string key = Cache::key(hash_, "oracle", params);
    if (auto hit = cache_.lookup(key, "oracle")) return oracle_from_json(*hit);
    OracleResult r = sublevel_pair_homology(problem(), eps, lambda(), Lambda(), o);
    cache_.store(key, "oracle", to_json(r, config_.problem.dimension()));
    return r;
}

const Pipeline::Continuation& Pipeline::continuation(double from, double to)
{
    if (auto it = continuations_.find({from, to}); it != continuations_.end()) return it->second;
    const json params = params_with_tilt(*this, {{"from", number(from)}, {"to", number(to)}});
    const std::string key = Cache::key(hash_, "continuation", params);
    Continuation c;
    if (auto hit = cache_.lookup(key, "continuation")) {
        c.counts = counts_from_json((*hit)["counts"]);
        c.halvings = (*hit)["halvings"].get<int>();
        c.delta = to_double((*hit)["delta"]);
        c.confined = (*hit)["confined"].get<bool>();
        c.max_excursion = to_double((*hit)["max_excursion"]);
        c.min_excursion = to_double((*hit)["min_excursion"]);
    } else {
        ContinuationOptions o;
        o.counting.jobs = flags_.jobs;
        ContinuationReport r = continuation_trajectories(
            problem(), ContinuationSchedule::epsilon_path(from, to), critical_points(from),
            critical_points(to), o);
        c.counts = r.counts;
        c.halvings = r.halvings;
        c.delta = r.schedule.delta;
        c.confined = r.confined;
        c.max_excursion = r.max_excursion;
        c.min_excursion = r.min_excursion;
        cache_.store(key, "continuation",
                     {{"counts", to_json(c.counts)},
                      {"halvings", c.halvings},
                      {"delta", number(c.delta)},
                      {"confined", c.confined},
                      {"max_excursion", number(c.max_excursion)},
                      {"min_excursion", number(c.min_excursion)}});
    }
    return continuations_[{from, to}] = c;
}

// ---------------------------------------------------------------------------
// commands

namespace {

struct Context {
    Pipeline& pipeline;
    const Flags& flags;
    std::ostream& out;
    std::vector<std::string> artifacts;
    std::optional<bool> pass;
};

json header(Context& ctx, const std::string& command)
{
    const RunConfig& c = ctx.pipeline.config();
    json h{{"schema", kSchema},
           {"command", command},
           {"tool_version", kToolVersion},
           {"config_hash", ctx.pipeline.config_hash()},
           {"seed", ctx.flags.seed},
           {"problem", c.problem.name},
           {"dimension", c.problem.dimension()}};
    const WindowSpec& w = c.problem.window;
    h["window"] = {{"a", number(w.a)},
                   {"b", number(w.b)},
                   {"lambda", number(w.lambda)},
                   {"Lambda", number(w.Lambda)},
                   {"sigma", number(w.sigma)}};
    return h;
}

void write_text(Context& ctx, const std::string& name, const std::string& text)
{
    const fs::path dir = ctx.pipeline.run_dir();
    fs::create_directories(dir);
    std::ofstream(dir / name) << text;
    ctx.artifacts.push_back(name);
}

void write_json(Context& ctx, const std::string& name, const json& j)
{
    write_text(ctx, name, dump(j));
    ctx.out << "wrote " << (ctx.pipeline.run_dir() / name).string() << "\n";
}

std::string utc_now()
{
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void update_manifest(Context& ctx, const std::string& command)
{
    const fs::path file = ctx.pipeline.run_dir() / "manifest.json";
    json m;
    if (fs::exists(file)) {
        std::ifstream in(file);
        m = json::parse(in, nullptr, false);
        if (m.is_discarded() || !m.is_object()) m = json::object();
    }
    m["schema"] = kSchema;
    m["config_hash"] = ctx.pipeline.config_hash();
    m["config"] = ctx.pipeline.config().source;
    m["seed"] = ctx.flags.seed;
    m["tool_version"] = kToolVersion;
    Cache& cache = ctx.pipeline.cache();
    json stage{{"timestamp", utc_now()},
               {"artifacts", ctx.artifacts},
               {"cache", {{"hits", cache.hits()}, {"misses", cache.misses()}, {"corrupt", cache.corrupt()}}}};
    if (ctx.pass) stage["pass"] = *ctx.pass;
    m["stages"][command] = stage;
    json summary = json::object();
    for (const auto& [name, s] : m["stages"].items())
        if (s.contains("pass")) summary[name] = s["pass"];
    m["summary"] = summary;
    fs::create_directories(ctx.pipeline.run_dir());
    std::ofstream(file) << dump(m);
}

std::string fmt(double x)
{
    std::ostringstream os;
    os << std::setprecision(10) << x;
    return os.str();
}

// crit ----------------------------------------------------------------------

void cmd_crit(Context& ctx)
{
    Pipeline& p = ctx.pipeline;
    const double eps = p.eps();
    json search = p.search_json(eps);
    json r = header(ctx, "crit");
    r["eps"] = number(eps);
    r["tilt"] = p.tilt();
    for (const char* k : {"points", "starts", "converged_starts", "drifting_to_end", "coverage_min_residual"})
        r[k] = search[k];
    CompactificationReport cr = check_compactification(p.config().problem);
    r["compactification"] = {{"pass", cr.pass},
                             {"max_abs_tau_f", number(cr.max_abs_tau_f)},
                             {"tau_to_zero", cr.tau_to_zero},
                             {"tau_positive_inside", cr.tau_positive_inside}};
    write_json(ctx, "crit.json", r);
    for (const auto& cp : p.critical_points(eps))
        ctx.out << "  #" << cp.id << " index " << cp.index << " value " << fmt(cp.value) << " "
                << to_string(cp.window) << (cp.degenerate ? " degenerate" : "") << "\n";
}

// sweep-eps -------------------------------------------------------------------

void cmd_sweep_eps(Context& ctx)
{
    Pipeline& p = ctx.pipeline;
    const auto grid = parse_eps_grid(ctx.flags.grid.value_or(p.config().eps_grid));
    CriticalOptions o;
    o.starts_per_axis = p.config().starts_per_axis;
    o.jobs = ctx.flags.jobs;
    SweepReport s = sweep_epsilon(p.problem(), grid, o);
    json r = header(ctx, "sweep-eps");
    r["sweep"] = to_json(s);
    write_json(ctx, "sweep_eps.json", r);
    std::ostringstream csv;
    csv << std::setprecision(17) << "eps,id,index,value,window,degenerate\n";
    for (const auto& sample : s.samples)
        for (const auto& cp : sample.points)
            csv << sample.eps << ',' << cp.id << ',' << cp.index << ',' << cp.value << ','
                << to_string(cp.window) << ',' << (cp.degenerate ? 1 : 0) << '\n';
    write_text(ctx, "sweep_eps.csv", csv.str());
    ctx.out << "  trichotomy " << (s.trichotomy_holds ? "holds" : "fails");
    if (s.eps0) ctx.out << " from eps0 = " << fmt(*s.eps0);
    ctx.out << "\n";
    for (const auto& c : s.clusters)
        ctx.out << "  cluster index " << c.index << (c.bounded ? " bounded" : " unbounded")
                << " limit " << fmt(c.limit_estimate) << "\n";
}

// sweep-theta -----------------------------------------------------------------

void cmd_sweep_theta(Context& ctx)
{
    Pipeline& p = ctx.pipeline;
    const auto& alg = p.config().algebraic;
    if (!alg) throw Unsupported("sweep-theta needs a polynomial config");
    const auto thetas = theta_grid(ctx.flags.thetas);
    const auto grid = parse_eps_grid(ctx.flags.grid.value_or(p.config().eps_grid));
    CriticalOptions o;
    o.starts_per_axis = p.config().starts_per_axis;
    o.jobs = ctx.flags.jobs;
    ThetaSweepReport s = sweep_theta(*alg, thetas, grid, o);
    json per = json::array();
    for (std::size_t i = 0; i < s.thetas.size(); ++i)
        per.push_back({{"theta", number(s.thetas[i])}, {"sweep", to_json(s.per_theta[i])}});
    json r = header(ctx, "sweep-theta");
    r["label"] = "experimental";
    r["experimental"] = s.experimental;
    r["uniform_lambda"] = s.uniform_lambda;
    r["lambda_uniform"] = number(s.lambda_uniform);
    r["per_theta"] = per;
    write_json(ctx, "sweep_theta.json", r);
    ctx.out << "  experimental: uniform lambda " << (s.uniform_lambda ? "observed" : "not observed")
            << " (" << fmt(s.lambda_uniform) << ") over " << s.thetas.size() << " angles\n";
}

// flow ----------------------------------------------------------------------

void cmd_flow(Context& ctx)
{
    Pipeline& p = ctx.pipeline;
    if (!ctx.flags.source) throw ConfigError("flow needs --source ID");
    const int id = *ctx.flags.source;
    const double eps = p.eps();
    const auto& points = p.critical_points(eps);
    if (id < 0 || id >= static_cast<int>(points.size()))
        throw ConfigError("no critical point with id " + std::to_string(id));
    CountOptions o;
    o.jobs = ctx.flags.jobs;
    o.flow.record_path = ctx.flags.paths;
    BoundaryReport b = compute_boundaries(p.problem(), eps, points, o);
    json counts = json::array();
    for (const auto& [key, n] : b.counts)
        if (key.first == id) counts.push_back({{"target", key.second}, {"count", n}});
    json trajectories = json::array();
    int k = 0;
    for (const auto& t : b.trajectories) {
        if (t.source != id) continue;
        json s = summary_json(t);
        if (ctx.flags.paths) {
            const std::string name = "flow_" + std::to_string(id) + "_" + std::to_string(k) + ".csv";
            write_text(ctx, name, path_csv(t, p.config().problem.variables));
            s["path_csv"] = name;
        }
        trajectories.push_back(s);
        ++k;
    }
    json r = header(ctx, "flow");
    r["eps"] = number(eps);
    r["source"] = id;
    r["method"] = b.method.count(id) ? json(b.method[id]) : json(nullptr);
    r["counts"] = counts;
    r["trajectories"] = trajectories;
    write_json(ctx, "flow_" + std::to_string(id) + ".json", r);
    for (const auto& c : counts)
        ctx.out << "  <d " << id << ", " << c["target"] << "> = " << c["count"] << "\n";
}

// complex / homology -----------------------------------------------------------

json d_squared_json(const DSquaredReport& d)
{
    json j{{"pass", d.pass}};
    if (d.witness)
        j["witness"] = {{"degree", d.witness->degree},
                        {"source_id", d.source_id},
                        {"target_id", d.target_id},
                        {"value", to_json(d.witness->value)}};
    return j;
}

void cmd_complex(Context& ctx)
{
    Pipeline& p = ctx.pipeline;
    const double eps = p.eps();
    MorseComplex c = p.complex(eps);
    DSquaredReport d = verify_d_squared(c);
    json r = header(ctx, "complex");
    r["eps"] = number(eps);
    r["complex"] = to_json(c);
    r["counts"] = to_json(p.boundary_counts(eps));
    r["d_squared"] = d_squared_json(d);
    ctx.pass = d.pass;
    write_json(ctx, "complex.json", r);
    for (std::size_t k = 0; k < c.generators.size(); ++k)
        ctx.out << "  C" << k << " rank " << c.generators[k].size() << "\n";
    ctx.out << "  d^2 = 0: " << (d.pass ? "yes" : "NO") << "\n";
}

void cmd_homology(Context& ctx)
{
    Pipeline& p = ctx.pipeline;
    const double eps = p.eps();
    MorseComplex c = p.complex(eps);
    DSquaredReport d = verify_d_squared(c);
    if (!d.pass) throw NotChainMap("d^2 != 0 on the Morse complex; see `complex`");
    HomologyResult h = homology(c);
    json r = header(ctx, "homology");
    r["eps"] = number(eps);
    r["homology"] = to_json(h, p.config().problem.dimension());
    write_json(ctx, "homology.json", r);
    for (int k = 0; k <= p.config().problem.dimension(); ++k)
        ctx.out << "  HM" << k << " = " << group_string(h, k) << "\n";
}

// oracle ----------------------------------------------------------------------

void cmd_oracle(Context& ctx)
{
    Pipeline& p = ctx.pipeline;
    const double eps = p.eps();
    OracleResult o = p.oracle(eps);
    json r = header(ctx, "oracle");
    r["eps"] = number(eps);
    json body = to_json(o, p.config().problem.dimension());
    r["homology"] = body["homology"];
    body.erase("homology");
    r["oracle"] = body;
    write_json(ctx, "oracle.json", r);
    if (o.homology)
        for (int k = 0; k <= p.config().problem.dimension(); ++k)
            ctx.out << "  H" << k << " = " << group_string(*o.homology, k) << "\n";
    ctx.out << "  chi = " << o.euler_characteristic << "\n";
}

// compare ---------------------------------------------------------------------

json compare_report(Context& ctx, bool& pass)
{
    Pipeline& p = ctx.pipeline;
    const double eps = p.eps();
    const int n = p.config().problem.dimension();
    pass = true;

    std::optional<HomologyResult> morse;
    json morse_note = nullptr;
    json d_squared = nullptr;
    if (n <= 3) {
        MorseComplex c = p.complex(eps);
        DSquaredReport d = verify_d_squared(c);
        d_squared = d_squared_json(d);
        pass = pass && d.pass;
        if (d.pass) morse = homology(c);
    } else {
        morse_note = "trajectory counting needs ambient dimension <= 3";
    }
    OracleResult oracle = p.oracle(eps);
    std::optional<HomologyResult> expected;
    if (p.config().catalog_name) expected = catalog_lookup(*p.config().catalog_name).expected;

    json rows = json::array();
    for (int k = 0; k <= n; ++k) {
        json row{{"degree", k}};
        std::vector<std::string> seen;
        auto column = [&](const char* name, const std::optional<HomologyResult>& h) {
            if (!h) {
                row[name] = nullptr;
                return;
            }
            row[name] = group_string(*h, k);
            seen.push_back(group_string(*h, k));
        };
        column("morse", morse);
        column("oracle", oracle.homology);
        column("catalog", expected);
        if (seen.size() < 2) {
            row["pass"] = nullptr;  // nothing to compare against
            if (n <= 3) pass = false;
        } else {
            bool agree = true;
            for (const auto& s : seen) agree = agree && s == seen.front();
            row["pass"] = agree;
            pass = pass && agree;
        }
        rows.push_back(row);
    }
    EulerCheck e = euler_check(p.critical_points(eps), oracle);
    pass = pass && e.pass;
    json euler{{"morse", e.morse}, {"oracle", e.oracle}, {"pass", e.pass}};
    if (expected) {
        euler["catalog"] = expected->euler_characteristic();
        const bool cat = expected->euler_characteristic() == e.morse;
        euler["pass"] = e.pass && cat;
        pass = pass && cat;
    }

    json r = header(ctx, "compare");
    r["eps"] = number(eps);
    r["rows"] = rows;
    r["euler"] = euler;
    r["d_squared"] = d_squared;
    if (!morse_note.is_null()) r["morse_note"] = morse_note;
    r["oracle"] = {{"resolution", oracle.resolution},
                   {"box_doublings", oracle.box_doublings},
                   {"refinement_checked", oracle.refinement_checked}};
    r["pass"] = pass;
    return r;
}

void cmd_compare(Context& ctx)
{
    bool pass = false;
    json r = compare_report(ctx, pass);
    ctx.pass = pass;
    write_json(ctx, "compare.json", r);
    ctx.out << "  degree  morse  oracle  catalog  pass\n";
    auto cell = [](const json& j) { return j.is_null() ? std::string("-") : j.get<std::string>(); };
    for (const auto& row : r["rows"])
        ctx.out << "  " << std::setw(6) << row["degree"].get<int>() << "  " << std::setw(5)
                << cell(row["morse"]) << "  " << std::setw(6) << cell(row["oracle"]) << "  "
                << std::setw(7) << cell(row["catalog"]) << "  " << (row["pass"].is_null() ? "-" : row["pass"].get<bool>() ? "PASS" : "FAIL")
                << "\n";
    ctx.out << "  euler  " << r["euler"]["morse"] << " vs " << r["euler"]["oracle"] << "  "
            << (r["euler"]["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
    ctx.out << "  overall " << (pass ? "PASS" : "FAIL") << "\n";
}

// continue --------------------------------------------------------------------

json continuation_json(Pipeline& p, double from, double to, std::optional<ContinuationMap>& map)
{
    MorseComplex source = p.complex(from);
    MorseComplex target = p.complex(to);
    const auto& c = p.continuation(from, to);
    map = continuation_chain_map(source, target, c.counts);
    json maps = json::array();
    for (const auto& m : map->map.maps) maps.push_back(to_json(m));
    json induced = json::array();
    for (const auto& m : map->induced.free_part) induced.push_back(to_json(m));
    return {{"eps_from", number(from)},
            {"eps_to", number(to)},
            {"counts", to_json(c.counts)},
            {"chain_map", maps},
            {"chain_map_check", true},
            {"induced_free_part", induced},
            {"isomorphism", map->induced.isomorphism},
            {"halvings", c.halvings},
            {"delta", number(c.delta)},
            {"confined", c.confined},
            {"max_excursion", number(c.max_excursion)},
            {"min_excursion", number(c.min_excursion)}};
}

void cmd_continue(Context& ctx)
{
    Pipeline& p = ctx.pipeline;
    const double from = ctx.flags.eps_from.value_or(p.eps());
    const double to = ctx.flags.eps_to.value_or(from / 2);
    std::optional<ContinuationMap> map;
    json r = header(ctx, "continue");
    r["continuation"] = continuation_json(p, from, to, map);
    ctx.pass = map->induced.isomorphism;
    write_json(ctx, "continue.json", r);
    ctx.out << "  chain map: yes, isomorphism on homology: "
            << (map->induced.isomorphism ? "yes" : "no") << ", halvings "
            << r["continuation"]["halvings"] << "\n";
}

// report ----------------------------------------------------------------------

void cmd_report(Context& ctx)
{
    Pipeline& p = ctx.pipeline;
    const double eps = p.eps();
    json r = header(ctx, "report");
    r["eps"] = number(eps);
    std::ostringstream md;
    md << "# " << p.config().problem.name << "\n\n";
    md << "eps = " << fmt(eps) << ", config hash `" << p.config_hash().substr(0, 16) << "`\n\n";
    bool pass = true;

    auto section = [&](const std::string& name, auto&& body) {
        try {
            r[name] = body();
        } catch (const ValidationError& e) {
            r[name] = {{"skipped", e.what()}};
            md << "## " << name << "\n\nskipped: " << e.what() << "\n\n";
        } catch (const SolverError& e) {
            pass = false;
            r[name] = {{"failed", e.what()}};
            md << "## " << name << "\n\nfailed: " << e.what() << "\n\n";
        }
    };

    section("critical_points", [&] {
        const auto& pts = p.critical_points(eps);
        md << "## critical points\n\n| id | index | value | window |\n|---|---|---|---|\n";
        for (const auto& cp : pts)
            md << "| " << cp.id << " | " << cp.index << " | " << fmt(cp.value) << " | "
               << to_string(cp.window) << " |\n";
        md << "\n";
        return to_json(pts);
    });
    section("compare", [&] {
        bool ok = false;
        json c = compare_report(ctx, ok);
        pass = pass && ok;
        md << "## homology\n\n| degree | morse | oracle | catalog |\n|---|---|---|---|\n";
        for (const auto& row : c["rows"])
            md << "| " << row["degree"] << " | " << (row["morse"].is_null() ? "-" : row["morse"].get<std::string>())
               << " | " << (row["oracle"].is_null() ? "-" : row["oracle"].get<std::string>()) << " | "
               << (row["catalog"].is_null() ? "-" : row["catalog"].get<std::string>()) << " |\n";
        md << "\nEuler characteristic: morse " << c["euler"]["morse"] << ", oracle "
           << c["euler"]["oracle"] << "; overall " << (ok ? "PASS" : "FAIL") << "\n\n";
        return c;
    });
    section("direct_limit", [&] {
        // stability of HM against the next two grid points below eps
        json steps = json::array();
        std::optional<ContinuationMap> m1, m2, m3;
        steps.push_back(continuation_json(p, eps, eps / 2, m1));
        steps.push_back(continuation_json(p, eps / 2, eps / 4, m2));
        json direct = continuation_json(p, eps, eps / 4, m3);
        const ChainMap composite = compose(m2->map, m1->map);
        const InducedMap ci = induced_map(p.complex(eps).chain, p.complex(eps / 4).chain, composite);
        const bool agree = ci.free_part == m3->induced.free_part;
        const bool isos = m1->induced.isomorphism && m2->induced.isomorphism && m3->induced.isomorphism;
        pass = pass && agree && isos;
        md << "## continuation\n\neps -> eps/2 -> eps/4: isomorphisms " << (isos ? "yes" : "no")
           << ", composite equals direct on homology " << (agree ? "yes" : "no") << "\n\n";
        return json{{"steps", steps}, {"direct", direct}, {"composite_equals_direct", agree},
                    {"all_isomorphisms", isos}};
    });
    r["pass"] = pass;
    ctx.pass = pass;
    write_json(ctx, "report.json", r);
    write_text(ctx, "report.md", md.str());
    ctx.out << "  overall " << (pass ? "PASS" : "FAIL") << "\n";
}

RunConfig resolve_config(const Flags& flags)
{
    if (flags.config && flags.problem) throw ConfigError("give either --config or --problem, not both");
    if (flags.config) return load_config(*flags.config);
    if (flags.problem) return config_from_catalog(*flags.problem);
    throw ConfigError("a problem is required: --config PATH or --problem NAME");
}

}  // namespace

int run(const std::string& command, const Flags& flags, std::ostream& out, std::ostream& err)
{
    try {
        RunConfig config = resolve_config(flags);
        Pipeline pipeline(std::move(config), flags);
        Context ctx{pipeline, flags, out, {}, std::nullopt};
        if (command == "crit") cmd_crit(ctx);
        else if (command == "sweep-eps") cmd_sweep_eps(ctx);
        else if (command == "sweep-theta") cmd_sweep_theta(ctx);
        else if (command == "flow") cmd_flow(ctx);
        else if (command == "complex") cmd_complex(ctx);
        else if (command == "homology") cmd_homology(ctx);
        else if (command == "oracle") cmd_oracle(ctx);
        else if (command == "compare") cmd_compare(ctx);
        else if (command == "continue") cmd_continue(ctx);
        else if (command == "report") cmd_report(ctx);
        else throw ConfigError("unknown command '" + command + "'");
        update_manifest(ctx, command);
        return 0;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace morsevanish::cli

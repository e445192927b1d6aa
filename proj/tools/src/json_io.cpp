#include "morsevanish_cli/json_io.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "morsevanish/errors.hpp"

namespace morsevanish::cli {

json number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double to_double(const json& j)
{
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ConfigError("not a number: '" + s + "'");
}

namespace {

json numbers(const std::vector<double>& xs)
{
    json a = json::array();
    for (double x : xs) a.push_back(number(x));
    return a;
}

std::vector<double> doubles(const json& j)
{
    std::vector<double> out;
    for (const auto& x : j) out.push_back(to_double(x));
    return out;
}

WindowStatus window_from_string(const std::string& s)
{
    if (s == "inside") return WindowStatus::inside;
    if (s == "below") return WindowStatus::below;
    if (s == "above") return WindowStatus::above;
    throw ConfigError("unknown window status '" + s + "'");
}

}  // namespace

json to_json(const CriticalPoint& p)
{
    return {{"id", p.id},
            {"coordinates", numbers(p.coordinates)},
            {"value", number(p.value)},
            {"residual", number(p.residual)},
            {"hessian_eigenvalues", numbers(p.hessian_eigenvalues)},
            {"index", p.index},
            {"degenerate", p.degenerate},
            {"certification_radius", number(p.certification_radius)},
            {"window", to_string(p.window)}};
}

CriticalPoint critical_point_from_json(const json& j)
{
    CriticalPoint p;
    p.id = j.at("id").get<int>();
    p.coordinates = doubles(j.at("coordinates"));
    p.value = to_double(j.at("value"));
    p.residual = to_double(j.at("residual"));
    p.hessian_eigenvalues = doubles(j.at("hessian_eigenvalues"));
    p.index = j.at("index").get<int>();
    p.degenerate = j.at("degenerate").get<bool>();
    p.certification_radius = to_double(j.at("certification_radius"));
    p.window = window_from_string(j.at("window").get<std::string>());
    return p;
}

json to_json(const std::vector<CriticalPoint>& points)
{
    json a = json::array();
    for (const auto& p : points) a.push_back(to_json(p));
    return a;
}

std::vector<CriticalPoint> critical_points_from_json(const json& j)
{
    std::vector<CriticalPoint> out;
    for (const auto& p : j) out.push_back(critical_point_from_json(p));
    return out;
}

json to_json(const CountTable& counts)
{
    json a = json::array();
    for (const auto& [key, n] : counts)
        a.push_back({{"source", key.first}, {"target", key.second}, {"count", n}});
    return a;
}

CountTable counts_from_json(const json& j)
{
    CountTable out;
    for (const auto& e : j)
        out[{e.at("source").get<int>(), e.at("target").get<int>()}] = e.at("count").get<int>();
    return out;
}

json to_json(const Integer& x)
{
    if (x >= std::numeric_limits<std::int64_t>::min() && x <= std::numeric_limits<std::int64_t>::max())
        return static_cast<std::int64_t>(x);
    return x.str();
}

json to_json(const IntMatrix& m)
{
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
        rows.push_back(row);
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", rows}};
}

json to_json(const HomologyResult& h, int top_degree)
{
    json out = json::object();
    for (int k = 0; k <= std::max(top_degree, static_cast<int>(h.groups.size()) - 1); ++k) {
        json torsion = json::array();
        for (const auto& t : h.torsion(k)) torsion.push_back(to_json(t));
        out[std::to_string(k)] = {{"betti", h.betti(k)}, {"torsion", torsion}};
    }
    return out;
}

HomologyResult homology_from_json(const json& j)
{
    HomologyResult h;
    for (const auto& [key, g] : j.items()) {
        const int k = std::stoi(key);
        if (static_cast<int>(h.groups.size()) <= k) h.groups.resize(k + 1);
        h.groups[k].betti = g.at("betti").get<long>();
        for (const auto& t : g.at("torsion"))
            h.groups[k].torsion.push_back(t.is_string() ? Integer(t.get<std::string>())
                                                        : Integer(t.get<std::int64_t>()));
    }
    h.trim();
    return h;
}

json to_json(const OracleResult& r, int top_degree)
{
    json out{{"euler_characteristic", r.euler_characteristic},
             {"box", {{"lo", numbers(r.box.lo)}, {"hi", numbers(r.box.hi)}}},
             {"resolution", r.resolution},
             {"box_doublings", r.box_doublings},
             {"refinement_checked", r.refinement_checked}};
    out["homology"] = r.homology ? to_json(*r.homology, top_degree) : json(nullptr);
    return out;
}

OracleResult oracle_from_json(const json& j)
{
    OracleResult r;
    r.euler_characteristic = j.at("euler_characteristic").get<long>();
    r.box.lo = doubles(j.at("box").at("lo"));
    r.box.hi = doubles(j.at("box").at("hi"));
    r.resolution = j.at("resolution").get<int>();
    r.box_doublings = j.at("box_doublings").get<int>();
    r.refinement_checked = j.at("refinement_checked").get<bool>();
    if (!j.at("homology").is_null()) r.homology = homology_from_json(j.at("homology"));
    return r;
}

json to_json(const MorseComplex& c)
{
    json degrees = json::array();
    for (std::size_t k = 0; k < c.generators.size(); ++k) {
        json d{{"degree", k}, {"generators", c.generators[k]}, {"values", numbers(c.values[k])}};
        if (k >= 1) d["boundary"] = to_json(c.chain.d(static_cast<int>(k)));
        degrees.push_back(d);
    }
    return {{"a", number(c.a)}, {"b", number(c.b)}, {"eps", number(c.eps)}, {"degrees", degrees}};
}

json to_json(const SweepReport& r)
{
    json samples = json::array();
    for (const auto& s : r.samples) {
        json pts = json::array();
        for (const auto& p : s.points)
            pts.push_back({{"id", p.id},
                           {"index", p.index},
                           {"value", number(p.value)},
                           {"window", to_string(p.window)},
                           {"degenerate", p.degenerate}});
        samples.push_back({{"eps", number(s.eps)}, {"points", pts}, {"drifting_to_end", s.drifting_to_end}});
    }
    json clusters = json::array();
    for (const auto& c : r.clusters) {
        json trail = json::array();
        for (const auto& [e, v] : c.trail) trail.push_back({number(e), number(v)});
        clusters.push_back({{"index", c.index},
                            {"trail", trail},
                            {"bounded", c.bounded},
                            {"exponent", number(c.exponent)},
                            {"coefficient", number(c.coefficient)},
                            {"limit_estimate", number(c.limit_estimate)}});
    }
    json out{{"eps_grid", numbers(r.eps_grid)},
             {"samples", samples},
             {"clusters", clusters},
             {"lambda", number(r.lambda)},
             {"Lambda", number(r.Lambda)},
             {"trichotomy_holds", r.trichotomy_holds}};
    out["eps0"] = r.eps0 ? number(*r.eps0) : json(nullptr);
    return out;
}

json summary_json(const TrajectoryRecord& t)
{
    json itinerary = json::array();
    for (const auto& p : t.itinerary) itinerary.push_back({p.point, p.side});
    return {{"source", t.source},
            {"target", t.target},
            {"termination", to_string(t.termination)},
            {"sign", t.sign},
            {"launch", number(t.launch)},
            {"E_an", number(t.E_an)},
            {"E_top", number(t.E_top)},
            {"max_value", number(t.max_value)},
            {"min_value", number(t.min_value)},
            {"steps", t.steps},
            {"s_begin", number(t.s_begin)},
            {"s_end", number(t.s_end)},
            {"start", numbers(t.start)},
            {"end", numbers(t.end)},
            {"itinerary", itinerary}};
}

std::string path_csv(const TrajectoryRecord& t, const std::vector<std::string>& variables)
{
    std::ostringstream os;
    os.precision(17);
    os << "s";
    for (const auto& v : variables) os << ',' << v;
    os << ",value\n";
    for (const auto& p : t.path) {
        os << p.s;
        for (double x : p.x) os << ',' << x;
        os << ',' << p.value << '\n';
    }
    return os.str();
}

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

}  // namespace morsevanish::cli

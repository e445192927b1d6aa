#include "morsevanish_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "morsevanish/errors.hpp"
#include "morsevanish/oracle.hpp"

namespace morsevanish::cli {

using nlohmann::json;

namespace {

std::string line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

double number_field(const json& j, const std::string& field)
{
    if (j.is_number()) return j.get<double>();
    if (j.is_null()) return kInfinity;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return kInfinity;
        if (s == "-inf") return -kInfinity;
    }
    throw ConfigError("field '" + field + "' must be a number");
}

Rational rational_field(const json& j, const std::string& field)
{
    if (j.is_number_integer()) return Rational{j.get<std::int64_t>()};
    std::string s;
    if (j.is_number_float()) {
        std::ostringstream os;
        os.precision(17);
        os << j.get<double>();
        s = os.str();
    } else if (j.is_string()) {
        s = j.get<std::string>();
    } else {
        throw ConfigError("field '" + field + "' must be an integer, \"p/q\" or a decimal");
    }
    try {
        if (auto slash = s.find('/'); slash != std::string::npos)
            return Rational{std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))};
        auto dot = s.find('.');
        if (dot == std::string::npos) return Rational{std::stoll(s)};
        if (s.find_first_of("eE") != std::string::npos) throw ConfigError("exponent");
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        std::int64_t den = 1;
        for (std::size_t k = dot + 1; k < s.size(); ++k) den *= 10;
        return Rational{std::stoll(digits), den};
    } catch (const std::exception&) {
        throw ConfigError("field '" + field + "' is not a rational: '" + s + "'");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("field '") + key + "' has the wrong type");
    }
}

WindowSpec parse_window(const json& j)
{
    WindowSpec w = WindowSpec::symmetric(get_or(j, "lambda", 1.0));
    if (j.contains("Lambda")) w.Lambda = number_field(j["Lambda"], "window.Lambda");
    if (j.contains("sigma")) w.sigma = number_field(j["sigma"], "window.sigma");
    w.a = j.contains("a") ? number_field(j["a"], "window.a") : -w.lambda;
    w.b = j.contains("b") ? number_field(j["b"], "window.b") : w.lambda;
    if (j.contains("a") && j["a"].is_null()) w.a = -kInfinity;
    w.validate();
    return w;
}

DomainModel parse_domain(const json& j, int n, double half_width)
{
    std::vector<Interval> axes(n);
    if (j.is_string()) {
        if (j.get<std::string>() != "real_line") throw ConfigError("domain must be \"real_line\" or an array");
    } else if (j.is_array()) {
        if (static_cast<int>(j.size()) != n)
            throw ConfigError("domain has " + std::to_string(j.size()) + " axes, dimension is " +
                              std::to_string(n));
        for (int i = 0; i < n; ++i) {
            const json& a = j[i];
            if (a.is_string() && a.get<std::string>() == "real_line") continue;
            if (!a.is_object()) throw ConfigError("domain axis " + std::to_string(i) + " malformed");
            Interval& ax = axes[i];
            ax.lo = a.contains("min") ? number_field(a["min"], "domain.min") : -kInfinity;
            if (a.contains("min") && a["min"].is_null()) ax.lo = -kInfinity;
            ax.hi = a.contains("max") ? number_field(a["max"], "domain.max") : kInfinity;
            if (!(ax.lo < ax.hi)) throw ConfigError("domain axis " + std::to_string(i) + " is empty");
            if (a.contains("ends")) {
                ax.lo_is_end = ax.hi_is_end = false;
                for (const auto& e : a["ends"]) {
                    const auto side = e.get<std::string>();
                    if (side == "min") ax.lo_is_end = true;
                    else if (side == "max") ax.hi_is_end = true;
                    else throw ConfigError("domain ends must be \"min\" or \"max\"");
                }
            }
        }
    } else {
        throw ConfigError("domain must be \"real_line\" or an array");
    }
    Box box;
    for (const auto& ax : axes) {
        box.lo.push_back(std::isinf(ax.lo) ? -half_width : ax.lo);
        box.hi.push_back(std::isinf(ax.hi) ? half_width : ax.hi);
    }
    return DomainModel(axes, box);
}

ComplexPolynomial parse_polynomial(const json& j)
{
    const int n = get_or(j, "n", 0);
    if (n < 1) throw ConfigError("polynomial.n must be a positive integer");
    if (!j.contains("terms") || !j["terms"].is_array())
        throw ConfigError("polynomial.terms must be an array");
    std::vector<PolynomialTerm> terms;
    for (const auto& t : j["terms"]) {
        PolynomialTerm term;
        term.monomial = get_or(t, "monomial", std::vector<int>{});
        if (static_cast<int>(term.monomial.size()) != n)
            throw ConfigError("polynomial monomial needs " + std::to_string(n) + " exponents");
        for (int e : term.monomial)
            if (e < 0) throw ConfigError("polynomial exponents must be nonnegative");
        term.re = t.contains("re") ? rational_field(t["re"], "re") : Rational{0};
        term.im = t.contains("im") ? rational_field(t["im"], "im") : Rational{0};
        terms.push_back(term);
    }
    return ComplexPolynomial(n, terms);
}

void apply_run_fields(const json& j, RunConfig& c)
{
    c.eps = get_or(j, "eps", c.eps);
    if (!(c.eps > 0)) throw ConfigError("eps must be positive");
    c.eps_grid = get_or(j, "eps_grid", c.eps_grid);
    c.starts_per_axis = get_or(j, "starts_per_axis", c.starts_per_axis);
    if (j.contains("oracle")) c.oracle_resolution = get_or(j["oracle"], "resolution", c.oracle_resolution);
}

RunConfig from_json(const json& j)
{
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;

    if (j.contains("catalog")) {
        c = config_from_catalog(j["catalog"].get<std::string>());
        if (j.contains("window")) c.problem.window = parse_window(j["window"]);
        apply_run_fields(j, c);
        c.source = j;
        return c;
    }

    const double half_width = get_or(j, "box_half_width", 4.0);
    if (j.contains("polynomial")) {
        AlgebraicProblem a;
        a.name = get_or(j, "name", std::string("polynomial"));
        a.F = parse_polynomial(j["polynomial"]);
        a.alpha = get_or(j["polynomial"], "alpha", 0);
        a.box_half_width = half_width;
        if (j.contains("window")) a.window = parse_window(j["window"]);
        if (j.contains("metric")) a.metric = metric_kind_from_string(j["metric"].get<std::string>());
        build_tau(a.F, a.effective_alpha());
        c.problem = realify(a, get_or(j, "theta", 0.0));
        c.algebraic = a;
    } else {
        ProblemSpec& p = c.problem;
        p.name = get_or(j, "name", std::string("problem"));
        const int n = get_or(j, "dimension", 0);
        if (n < 1) throw ConfigError("dimension must be a positive integer");
        p.variables = j.contains("variables") ? j["variables"].get<std::vector<std::string>>()
                                              : default_variable_names(n);
        if (static_cast<int>(p.variables.size()) != n)
            throw ConfigError("variables must list " + std::to_string(n) + " names");
        p.domain = parse_domain(j.contains("domain") ? j["domain"] : json("real_line"), n, half_width);
        if (!j.contains("f") || !j.contains("tau")) throw ConfigError("f and tau are required");
        p.f = parse_expression(j["f"].get<std::string>(), p.variables);
        p.tau = parse_expression(j["tau"].get<std::string>(), p.variables);
        if (j.contains("window")) p.window = parse_window(j["window"]);
        if (j.contains("metric")) {
            const json& m = j["metric"];
            if (m.is_string()) {
                p.metric.kind = metric_kind_from_string(m.get<std::string>());
            } else {
                p.metric.kind = metric_kind_from_string(get_or(m, "kind", std::string("custom")));
                if (m.contains("matrix"))
                    for (const auto& row : m["matrix"]) {
                        std::vector<Expression> r;
                        for (const auto& e : row) r.push_back(parse_expression(e.get<std::string>(), p.variables));
                        p.metric.custom.push_back(std::move(r));
                    }
            }
        }
        p.validate();
    }
    apply_run_fields(j, c);
    c.source = j;
    return c;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": malformed JSON at " + line_column(text, e.byte) + ": " +
                          e.what());
    }
    try {
        return from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

RunConfig config_from_catalog(const std::string& name)
{
    const CatalogEntry& e = catalog_lookup(name);
    RunConfig c;
    c.problem = e.problem;
    c.algebraic = e.algebraic;
    c.catalog_name = e.name;
    c.eps = e.eps;
    c.oracle_resolution = e.oracle_resolution;
    c.source = json{{"catalog", name}};
    return c;
}

}  // namespace morsevanish::cli

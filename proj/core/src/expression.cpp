#include "morsevanish/expression.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "morsevanish/errors.hpp"

namespace morsevanish {

namespace {

NodePtr make_constant(double v, std::optional<Rational> exact)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::constant;
    n->value = v;
    n->exact = exact;
    return n;
}

double to_double(Rational r)
{
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

NodePtr make_nary(NodeKind kind, const NodePtr& a, const NodePtr& b)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    // flatten nested sums/products so tapes stay shallow
    for (const auto& c : {a, b}) {
        if (c->kind == kind)
            n->children.insert(n->children.end(), c->children.begin(), c->children.end());
        else
            n->children.push_back(c);
    }
    return n;
}

}  // namespace

Expression::Expression() : node_(make_constant(0.0, Rational{0})) {}

Expression Expression::constant(Rational value)
{
    return Expression(make_constant(to_double(value), value));
}

Expression Expression::constant(double value)
{
    std::optional<Rational> exact;
    if (std::isfinite(value) && value == std::trunc(value) && std::abs(value) < 9.0e15)
        exact = Rational{static_cast<std::int64_t>(value)};
    return Expression(make_constant(value, exact));
}

Expression Expression::variable(int index)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::variable;
    n->variable = index;
    return Expression(n);
}

Expression Expression::pow(int k) const
{
    if (k == 1) return *this;
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::int_power;
    n->exponent = Rational{k};
    n->children.push_back(node_);
    return Expression(n);
}

Expression Expression::pow(Rational p) const
{
    if (p.denominator() == 1) return pow(static_cast<int>(p.numerator()));
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::rational_power;
    n->exponent = p;
    n->children.push_back(node_);
    return Expression(n);
}

Expression operator+(const Expression& a, const Expression& b)
{
    return Expression(make_nary(NodeKind::sum, a.node_, b.node_));
}

Expression operator-(const Expression& a)
{
    if (a.kind() == NodeKind::constant) {
        if (a.node().exact) return Expression::constant(-*a.node().exact);
        return Expression::constant(-a.node().value);
    }
    return Expression::constant(Rational{-1}) * a;
}

Expression operator-(const Expression& a, const Expression& b)
{
    return a + (-b);
}

Expression operator*(const Expression& a, const Expression& b)
{
    return Expression(make_nary(NodeKind::product, a.node_, b.node_));
}

Expression operator/(const Expression& a, const Expression& b)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::quotient;
    n->children = {a.node_, b.node_};
    return Expression(n);
}

bool Expression::is_constant(double v) const
{
    return node_->kind == NodeKind::constant && node_->value == v;
}

int Expression::max_variable() const
{
    int best = -1;
    std::vector<const Node*> stack{node_.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (n->kind == NodeKind::variable) best = std::max(best, n->variable);
        for (const auto& c : n->children) stack.push_back(c.get());
    }
    return best;
}

namespace {

std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string render(const Node& n, std::span<const std::string> names);

std::string render_atom(const Node& n, std::span<const std::string> names)
{
    std::string s = render(n, names);
    bool atomic = n.kind == NodeKind::variable ||
                  (n.kind == NodeKind::constant && s.find_first_of("-/") == std::string::npos);
    return atomic ? s : "(" + s + ")";
}

std::string render(const Node& n, std::span<const std::string> names)
{
    switch (n.kind) {
    case NodeKind::constant:
        if (n.exact) {
            if (n.exact->denominator() == 1) return std::to_string(n.exact->numerator());
            return std::to_string(n.exact->numerator()) + "/" +
                   std::to_string(n.exact->denominator());
        }
        return format_double(n.value);
    case NodeKind::variable:
        if (n.variable < static_cast<int>(names.size())) return names[n.variable];
        return "x" + std::to_string(n.variable);
    case NodeKind::sum: {
        std::string s;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (i) s += " + ";
            s += render(*n.children[i], names);
        }
        return s;
    }
    case NodeKind::product: {
        std::string s;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (i) s += " * ";
            s += render_atom(*n.children[i], names);
        }
        return s;
    }
    case NodeKind::int_power:
    case NodeKind::rational_power: {
        std::string e = n.exponent.denominator() == 1
                            ? std::to_string(n.exponent.numerator())
                            : std::to_string(n.exponent.numerator()) + "/" +
                                  std::to_string(n.exponent.denominator());
        if (n.exponent < Rational{0} || n.exponent.denominator() != 1) e = "(" + e + ")";
        return render_atom(*n.children[0], names) + "^" + e;
    }
    case NodeKind::quotient:
        return render_atom(*n.children[0], names) + " / " + render_atom(*n.children[1], names);
    }
    return {};
}

}  // namespace

std::string Expression::to_string(std::span<const std::string> names) const
{
    return render(*node_, names);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    Parser(std::string_view text, std::span<const std::string> names) : text_(text), names_(names)
    {
    }

    Expression parse()
    {
        Expression e = expr();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ParseError("column " + std::to_string(pos_ + 1) + ": " + msg + " in '" +
                         std::string(text_) + "'");
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    Expression expr()
    {
        Expression e = term();
        for (;;) {
            if (accept('+'))
                e = e + term();
            else if (accept('-'))
                e = e - term();
            else
                return e;
        }
    }

    Expression term()
    {
        Expression e = unary();
        for (;;) {
            if (accept('*'))
                e = e * unary();
            else if (accept('/'))
                e = e / unary();
            else
                return e;
        }
    }

    Expression unary()
    {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    Expression power()
    {
        Expression base = atom();
        if (accept('^')) return base.pow(exponent());
        return base;
    }

    // A constant rational: integer, -integer, or parenthesised p/q.
    Rational exponent()
    {
        if (accept('(')) {
            Rational r = signed_rational();
            if (accept('/')) {
                Rational d = signed_rational();
                if (d == Rational{0}) fail("zero denominator in exponent");
                r /= d;
            }
            expect(')');
            return r;
        }
        return signed_rational();
    }

    Rational signed_rational()
    {
        bool neg = false;
        while (true) {
            if (accept('-'))
                neg = !neg;
            else if (!accept('+'))
                break;
        }
        skip_space();
        auto r = number_literal();
        if (!r) fail("exponent must be an exact rational");
        return neg ? -*r : *r;
    }

    // Reads a decimal literal exactly when it fits in 64-bit rationals.
    std::optional<Rational> number_literal(double* approx = nullptr)
    {
        std::size_t start = pos_;
        std::int64_t mantissa = 0;
        int scale = 0;
        bool overflow = false;
        bool digits = false;
        auto take_digit = [&](char c, bool fractional) {
            digits = true;
            if (overflow) return;
            if (mantissa > (std::numeric_limits<std::int64_t>::max() - 9) / 10) {
                overflow = true;
                return;
            }
            mantissa = mantissa * 10 + (c - '0');
            if (fractional) ++scale;
        };
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            take_digit(text_[pos_++], false);
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                take_digit(text_[pos_++], true);
        }
        if (!digits) {
            pos_ = start;
            fail("expected a number");
        }
        int exp10 = 0;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_++;
            bool neg = false;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
                neg = text_[pos_++] == '-';
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                pos_ = save;
            } else {
                int e = 0;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    e = std::min(e * 10 + (text_[pos_++] - '0'), 10000);
                exp10 = neg ? -e : e;
            }
        }
        std::string literal(text_.substr(start, pos_ - start));
        if (approx) *approx = std::strtod(literal.c_str(), nullptr);
        int net = exp10 - scale;
        if (overflow || std::abs(net) > 18) return std::nullopt;
        std::int64_t p10 = 1;
        for (int i = 0; i < std::abs(net); ++i) p10 *= 10;
        if (net >= 0) {
            if (mantissa != 0 && mantissa > std::numeric_limits<std::int64_t>::max() / p10)
                return std::nullopt;
            return Rational{mantissa * p10};
        }
        return Rational{mantissa, p10};
    }

    Expression atom()
    {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expression e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double approx = 0.0;
            auto r = number_literal(&approx);
            return r ? Expression::constant(*r) : Expression::constant(approx);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string name(text_.substr(start, pos_ - start));
            for (std::size_t i = 0; i < names_.size(); ++i)
                if (names_[i] == name) return Expression::variable(static_cast<int>(i));
            if (name == "pow") {
                expect('(');
                Expression base = expr();
                expect(',');
                Rational p = signed_rational();
                if (accept('/')) {
                    Rational d = signed_rational();
                    if (d == Rational{0}) fail("zero denominator in exponent");
                    p /= d;
                }
                expect(')');
                return base.pow(p);
            }
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    std::string_view text_;
    std::span<const std::string> names_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression parse_expression(std::string_view text, std::span<const std::string> variables)
{
    return Parser(text, variables).parse();
}

// ---------------------------------------------------------------------------
// Tape

CompiledExpression::CompiledExpression(const Expression& expr, int dimension)
    : dimension_(dimension)
{
    if (expr.max_variable() >= dimension)
        throw ValidationError("expression references variable x" +
                              std::to_string(expr.max_variable()) + " beyond dimension " +
                              std::to_string(dimension));
    std::unordered_map<const Node*, int> slot;
    // iterative postorder so deep sums do not recurse
    std::vector<std::pair<const Node*, bool>> stack{{&expr.node(), false}};
    while (!stack.empty()) {
        auto [n, expanded] = stack.back();
        stack.pop_back();
        if (slot.count(n)) continue;
        if (!expanded) {
            stack.push_back({n, true});
            for (auto it = n->children.rbegin(); it != n->children.rend(); ++it)
                if (!slot.count(it->get())) stack.push_back({it->get(), false});
            continue;
        }
        Instr ins{n->kind};
        ins.constant = n->value;
        ins.variable = n->variable;
        if (n->kind == NodeKind::int_power) ins.power = static_cast<int>(n->exponent.numerator());
        ins.exponent = to_double(n->exponent);
        ins.arg_begin = static_cast<int>(args_.size());
        ins.arg_count = static_cast<int>(n->children.size());
        for (const auto& c : n->children) args_.push_back(slot.at(c.get()));
        slot[n] = static_cast<int>(tape_.size());
        tape_.push_back(ins);
    }
}

namespace {

double int_pow(double b, int k)
{
    double r = 1.0;
    double base = k < 0 ? 1.0 / b : b;
    unsigned e = static_cast<unsigned>(k < 0 ? -k : k);
    while (e) {
        if (e & 1u) r *= base;
        base *= base;
        e >>= 1u;
    }
    return r;
}

// phi(b), phi'(b), phi''(b) of a power node
struct Scalar3 {
    double f, d1, d2;
};

Scalar3 power_rule(double b, int k)
{
    if (k < 0 && b == 0.0) throw DomainViolation("negative power of zero");
    if (k == 0) return {1.0, 0.0, 0.0};
    double km1 = (k == 1) ? 1.0 : int_pow(b, k - 1);
    double km2 = (k == 1) ? 0.0 : (k == 2 ? 1.0 : int_pow(b, k - 2));
    return {km1 * b, k * km1, static_cast<double>(k) * (k - 1) * km2};
}

Scalar3 rational_power_rule(double b, double p)
{
    if (!(b > 0.0)) throw DomainViolation("rational power of a non-positive base");
    double f = std::pow(b, p);
    return {f, p * f / b, p * (p - 1.0) * f / (b * b)};
}

}  // namespace

double CompiledExpression::value(std::span<const double> x) const
{
    thread_local std::vector<double> v;
    v.resize(tape_.size());
    for (std::size_t i = 0; i < tape_.size(); ++i) {
        const Instr& in = tape_[i];
        const int* a = args_.data() + in.arg_begin;
        switch (in.kind) {
        case NodeKind::constant: v[i] = in.constant; break;
        case NodeKind::variable: v[i] = x[in.variable]; break;
        case NodeKind::sum: {
            double s = 0.0;
            for (int j = 0; j < in.arg_count; ++j) s += v[a[j]];
            v[i] = s;
            break;
        }
        case NodeKind::product: {
            double p = 1.0;
            for (int j = 0; j < in.arg_count; ++j) p *= v[a[j]];
            v[i] = p;
            break;
        }
        case NodeKind::int_power:
            if (in.power < 0 && v[a[0]] == 0.0) throw DomainViolation("negative power of zero");
            v[i] = int_pow(v[a[0]], in.power);
            break;
        case NodeKind::rational_power:
            if (!(v[a[0]] > 0.0)) throw DomainViolation("rational power of a non-positive base");
            v[i] = std::pow(v[a[0]], in.exponent);
            break;
        case NodeKind::quotient:
            if (v[a[1]] == 0.0) throw DomainViolation("division by zero");
            v[i] = v[a[0]] / v[a[1]];
            break;
        }
    }
    return v.back();
}

void CompiledExpression::derivatives(std::span<const double> x, Derivatives& out) const
{
    const int n = dimension_;
    const std::size_t stride = 1 + n + static_cast<std::size_t>(n) * n;
    thread_local std::vector<double> buf;
    thread_local std::vector<double> tmp;
    buf.assign(tape_.size() * stride, 0.0);
    tmp.resize(2 * stride);

    auto val = [&](int s) -> double& { return buf[s * stride]; };
    auto grad = [&](int s) { return buf.data() + s * stride + 1; };
    auto hess = [&](int s) { return buf.data() + s * stride + 1 + n; };

    // c = a * b, with c allowed to alias a
    auto multiply = [&](const double* A, const double* B, double* C) {
        double a = A[0], b = B[0];
        const double* ga = A + 1;
        const double* gb = B + 1;
        const double* ha = A + 1 + n;
        const double* hb = B + 1 + n;
        double* t = tmp.data();
        t[0] = a * b;
        for (int r = 0; r < n; ++r) t[1 + r] = a * gb[r] + b * ga[r];
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                t[1 + n + r * n + c] = a * hb[r * n + c] + b * ha[r * n + c] + ga[r] * gb[c] +
                                       gb[r] * ga[c];
        std::copy(t, t + stride, C);
    };
    // c = phi(b)
    auto compose = [&](const double* B, Scalar3 phi, double* C) {
        const double* gb = B + 1;
        const double* hb = B + 1 + n;
        double* t = tmp.data() + stride;
        t[0] = phi.f;
        for (int r = 0; r < n; ++r) t[1 + r] = phi.d1 * gb[r];
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                t[1 + n + r * n + c] = phi.d1 * hb[r * n + c] + phi.d2 * gb[r] * gb[c];
        std::copy(t, t + stride, C);
    };

    for (std::size_t i = 0; i < tape_.size(); ++i) {
        const Instr& in = tape_[i];
        const int* a = args_.data() + in.arg_begin;
        const int s = static_cast<int>(i);
        double* self = buf.data() + i * stride;
        switch (in.kind) {
        case NodeKind::constant: val(s) = in.constant; break;
        case NodeKind::variable:
            val(s) = x[in.variable];
            grad(s)[in.variable] = 1.0;
            break;
        case NodeKind::sum:
            for (int j = 0; j < in.arg_count; ++j) {
                const double* c = buf.data() + a[j] * stride;
                for (std::size_t k = 0; k < stride; ++k) self[k] += c[k];
            }
            break;
        case NodeKind::product: {
            const double* first = buf.data() + a[0] * stride;
            std::copy(first, first + stride, self);
            for (int j = 1; j < in.arg_count; ++j) multiply(self, buf.data() + a[j] * stride, self);
            break;
        }
        case NodeKind::int_power: {
            const double* b = buf.data() + a[0] * stride;
            compose(b, power_rule(b[0], in.power), self);
            break;
        }
        case NodeKind::rational_power: {
            const double* b = buf.data() + a[0] * stride;
            compose(b, rational_power_rule(b[0], in.exponent), self);
            break;
        }
        case NodeKind::quotient: {
            const double* num = buf.data() + a[0] * stride;
            const double* den = buf.data() + a[1] * stride;
            double d = den[0];
            if (d == 0.0) throw DomainViolation("division by zero");
            compose(den, {1.0 / d, -1.0 / (d * d), 2.0 / (d * d * d)}, self);
            multiply(num, self, self);
            break;
        }
        }
    }
    const int last = static_cast<int>(tape_.size()) - 1;
    out.value = val(last);
    out.gradient.resize(n);
    out.hessian.resize(n, n);
    for (int r = 0; r < n; ++r) out.gradient[r] = grad(last)[r];
    for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c)
            out.hessian(r, c) = out.hessian(c, r) = 0.5 * (hess(last)[r * n + c] + hess(last)[c * n + r]);
}

Derivatives CompiledExpression::derivatives(std::span<const double> x) const
{
    Derivatives d;
    derivatives(x, d);
    return d;
}

double evaluate(const Expression& expr, std::span<const double> point)
{
    return CompiledExpression(expr, static_cast<int>(point.size())).value(point);
}

Derivatives differentiate(const Expression& expr, std::span<const double> point)
{
    return CompiledExpression(expr, static_cast<int>(point.size())).derivatives(point);
}

std::vector<std::string> default_variable_names(int dimension)
{
    switch (dimension) {
    case 1: return {"x"};
    case 2: return {"x", "y"};
    case 3: return {"x", "y", "z"};
    default: break;
    }
    std::vector<std::string> names;
    for (int i = 1; i <= dimension; ++i) names.push_back("x" + std::to_string(i));
    return names;
}

}  // namespace morsevanish

#include "gsde/expr.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <cstring>

namespace gsde::expr {

namespace {

struct FuncInfo {
    const char* name;
    Func fn;
    int arity;
};

constexpr FuncInfo kFuncs[] = {
    {"sin", Func::Sin, 1},   {"cos", Func::Cos, 1},   {"exp", Func::Exp, 1},
    {"log", Func::Log, 1},   {"sqrt", Func::Sqrt, 1}, {"tanh", Func::Tanh, 1},
    {"abs", Func::Abs, 1},   {"pow", Func::Pow, 2},
};

const char* func_name(Func f) {
    for (const auto& info : kFuncs)
        if (info.fn == f) return info.name;
    return "?";
}

NodePtr make(Op op, std::size_t pos, std::vector<NodePtr> args = {}) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->pos = pos;
    n->args = std::move(args);
    return n;
}

class Parser {
public:
    Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

    NodePtr run() {
        skip();
        if (at_end()) throw ParseError("empty expression", pos_);
        auto n = parse_expr();
        skip();
        if (!at_end()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        return n;
    }

private:
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }
    void skip() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    NodePtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            skip();
            char c = peek();
            if (c != '+' && c != '-') return lhs;
            std::size_t at = pos_++;
            auto rhs = parse_term();
            lhs = make(c == '+' ? Op::Add : Op::Sub, at, {lhs, rhs});
        }
    }

    NodePtr parse_term() {
        auto lhs = parse_unary();
        for (;;) {
            skip();
            char c = peek();
            if (c != '*' && c != '/') return lhs;
            std::size_t at = pos_++;
            auto rhs = parse_unary();
            lhs = make(c == '*' ? Op::Mul : Op::Div, at, {lhs, rhs});
        }
    }

    NodePtr parse_unary() {
        skip();
        if (peek() == '-') {
            std::size_t at = pos_++;
            return make(Op::Neg, at, {parse_unary()});
        }
        return parse_power();
    }

    NodePtr parse_power() {
        auto base = parse_atom();
        skip();
        if (peek() == '^') {
            std::size_t at = pos_++;
            auto exponent = parse_unary();
            return make(Op::Pow, at, {base, exponent});
        }
        return base;
    }

    NodePtr parse_atom() {
        skip();
        if (at_end()) throw ParseError("unexpected end of input", pos_);
        char c = peek();
        std::size_t start = pos_;
        if (c == '(') {
            ++pos_;
            auto inner = parse_expr();
            skip();
            if (peek() != ')') throw ParseError("expected ')' to close '(' opened at offset " + std::to_string(start), pos_);
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        std::size_t start = pos_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) ++pos_;
        if (!at_end() && (peek() == 'e' || peek() == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (peek() == '+' || peek() == '-') ++pos_;
            if (!std::isdigit(static_cast<unsigned char>(peek()))) {
                pos_ = save;
            } else {
                while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
            }
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (ec != std::errc() || ptr != text_.data() + pos_)
            throw ParseError("malformed number '" + std::string(text_.substr(start, pos_ - start)) + "'", start);
        auto n = make(Op::Constant, start);
        std::const_pointer_cast<Node>(n)->value = v;
        return n;
    }

    NodePtr parse_identifier() {
        std::size_t start = pos_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);

        if (name.size() > 1 && name[0] == 'x' &&
            name.find_first_not_of("0123456789", 1) == std::string_view::npos) {
            int idx = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
            if (ec != std::errc() || idx < 1)
                throw ParseError("invalid variable '" + std::string(name) + "'", start);
            if (idx > dim_)
                throw ParseError("variable '" + std::string(name) + "' exceeds dimension " + std::to_string(dim_), start);
            auto n = make(Op::Variable, start);
            std::const_pointer_cast<Node>(n)->var = idx;
            return n;
        }

        const FuncInfo* info = nullptr;
        for (const auto& f : kFuncs)
            if (name == f.name) info = &f;
        if (!info) throw ParseError("unknown identifier '" + std::string(name) + "'", start);

        skip();
        if (peek() != '(') throw ParseError("expected '(' after function '" + std::string(name) + "'", pos_);
        std::size_t open = pos_++;
        std::vector<NodePtr> args;
        args.push_back(parse_expr());
        skip();
        while (peek() == ',') {
            ++pos_;
            args.push_back(parse_expr());
            skip();
        }
        if (peek() != ')') throw ParseError("expected ')' to close '(' opened at offset " + std::to_string(open), pos_);
        ++pos_;
        if (static_cast<int>(args.size()) != info->arity)
            throw ParseError("function '" + std::string(name) + "' takes " + std::to_string(info->arity) +
                                 " argument(s), got " + std::to_string(args.size()),
                             start);
        auto n = make(Op::Call, start, std::move(args));
        std::const_pointer_cast<Node>(n)->fn = info->fn;
        return n;
    }

    std::string_view text_;
    int dim_;
    std::size_t pos_ = 0;
};

int precedence(const NodePtr& n) {
    switch (n->op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Constant: return n->value < 0 || std::signbit(n->value) ? 3 : 5;
    default: return 5;
    }
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void print(const NodePtr& n, std::string& out);

void print_child(const NodePtr& n, int min_prec, std::string& out) {
    if (precedence(n) < min_prec) {
        out += '(';
        print(n, out);
        out += ')';
    } else {
        print(n, out);
    }
}

void print(const NodePtr& n, std::string& out) {
    switch (n->op) {
    case Op::Constant: out += format_number(n->value); return;
    case Op::Variable: out += 'x' + std::to_string(n->var); return;
    case Op::Neg:
        out += '-';
        print_child(n->args[0], 3, out);
        return;
    case Op::Add:
    case Op::Sub:
        print_child(n->args[0], 1, out);
        out += n->op == Op::Add ? " + " : " - ";
        print_child(n->args[1], 2, out);
        return;
    case Op::Mul:
    case Op::Div:
        print_child(n->args[0], 2, out);
        out += n->op == Op::Mul ? " * " : " / ";
        print_child(n->args[1], 3, out);
        return;
    case Op::Pow:
        print_child(n->args[0], 5, out);
        out += '^';
        print_child(n->args[1], 3, out);
        return;
    case Op::Call:
        out += func_name(n->fn);
        out += '(';
        for (std::size_t i = 0; i < n->args.size(); ++i) {
            if (i) out += ", ";
            print(n->args[i], out);
        }
        out += ')';
        return;
    }
}

} // namespace

NodePtr parse_tree(std::string_view text, int dim) {
    if (dim < 1) throw ConfigError("expression dimension must be >= 1");
    return Parser(text, dim).run();
}

std::string to_string(const NodePtr& n) {
    std::string out;
    print(n, out);
    return out;
}

bool equal(const NodePtr& a, const NodePtr& b) {
    if (a == b) return true;
    if (!a || !b || a->op != b->op || a->args.size() != b->args.size()) return false;
    switch (a->op) {
    case Op::Constant:
        if (a->value != b->value) return false;
        break;
    case Op::Variable:
        if (a->var != b->var) return false;
        break;
    case Op::Call:
        if (a->fn != b->fn) return false;
        break;
    default: break;
    }
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!equal(a->args[i], b->args[i])) return false;
    return true;
}

int max_variable(const NodePtr& n) {
    int m = n->op == Op::Variable ? n->var : 0;
    for (const auto& a : n->args) m = std::max(m, max_variable(a));
    return m;
}

bool is_constant(const NodePtr& n, double* value) {
    if (n->op != Op::Constant) return false;
    if (value) *value = n->value;
    return true;
}

// ---------------------------------------------------------------------------
// Builders

NodePtr constant(double c) {
    auto n = std::make_shared<Node>();
    n->op = Op::Constant;
    n->value = c;
    return n;
}

NodePtr variable(int index) {
    auto n = std::make_shared<Node>();
    n->op = Op::Variable;
    n->var = index;
    return n;
}

NodePtr neg(NodePtr a) {
    double c;
    if (is_constant(a, &c)) return constant(-c);
    if (a->op == Op::Neg) return a->args[0];
    return make(Op::Neg, 0, {std::move(a)});
}

NodePtr add(NodePtr a, NodePtr b) {
    double ca = 0.0, cb = 0.0;
    bool ka = is_constant(a, &ca), kb = is_constant(b, &cb);
    if (ka && kb) return constant(ca + cb);
    if (ka && ca == 0.0) return b;
    if (kb && cb == 0.0) return a;
    return make(Op::Add, 0, {std::move(a), std::move(b)});
}

NodePtr sub(NodePtr a, NodePtr b) {
    double ca = 0.0, cb = 0.0;
    bool ka = is_constant(a, &ca), kb = is_constant(b, &cb);
    if (ka && kb) return constant(ca - cb);
    if (kb && cb == 0.0) return a;
    if (ka && ca == 0.0) return neg(std::move(b));
    return make(Op::Sub, 0, {std::move(a), std::move(b)});
}

NodePtr mul(NodePtr a, NodePtr b) {
    double ca = 0.0, cb = 0.0;
    bool ka = is_constant(a, &ca), kb = is_constant(b, &cb);
    if (ka && kb) return constant(ca * cb);
    if ((ka && ca == 0.0) || (kb && cb == 0.0)) return constant(0.0);
    if (ka && ca == 1.0) return b;
    if (kb && cb == 1.0) return a;
    if (ka && ca == -1.0) return neg(std::move(b));
    if (kb && cb == -1.0) return neg(std::move(a));
    return make(Op::Mul, 0, {std::move(a), std::move(b)});
}

NodePtr div(NodePtr a, NodePtr b) {
    double ca = 0.0, cb = 0.0;
    bool ka = is_constant(a, &ca), kb = is_constant(b, &cb);
    if (ka && kb && cb != 0.0) return constant(ca / cb);
    if (ka && ca == 0.0) return constant(0.0);
    if (kb && cb == 1.0) return a;
    return make(Op::Div, 0, {std::move(a), std::move(b)});
}

NodePtr pow(NodePtr a, NodePtr b) {
    double ca = 0.0, cb = 0.0;
    bool ka = is_constant(a, &ca), kb = is_constant(b, &cb);
    if (kb && cb == 0.0) return constant(1.0);
    if (kb && cb == 1.0) return a;
    if (ka && kb && ca > 0.0) return constant(std::pow(ca, cb));
    return make(Op::Pow, 0, {std::move(a), std::move(b)});
}

NodePtr call(Func f, NodePtr a) {
    double c;
    if (is_constant(a, &c)) {
        switch (f) {
        case Func::Sin: return constant(std::sin(c));
        case Func::Cos: return constant(std::cos(c));
        case Func::Exp: return constant(std::exp(c));
        case Func::Tanh: return constant(std::tanh(c));
        case Func::Abs: return constant(std::abs(c));
        case Func::Log:
            if (c > 0) return constant(std::log(c));
            break;
        case Func::Sqrt:
            if (c >= 0) return constant(std::sqrt(c));
            break;
        case Func::Pow: break;
        }
    }
    auto n = make(Op::Call, 0, {std::move(a)});
    std::const_pointer_cast<Node>(n)->fn = f;
    return n;
}

NodePtr derivative(const NodePtr& n, int var) {
    const auto& a = n->args;
    switch (n->op) {
    case Op::Constant: return constant(0.0);
    case Op::Variable: return constant(n->var == var ? 1.0 : 0.0);
    case Op::Neg: return neg(derivative(a[0], var));
    case Op::Add: return add(derivative(a[0], var), derivative(a[1], var));
    case Op::Sub: return sub(derivative(a[0], var), derivative(a[1], var));
    case Op::Mul:
        return add(mul(derivative(a[0], var), a[1]), mul(a[0], derivative(a[1], var)));
    case Op::Div:
        return div(sub(mul(derivative(a[0], var), a[1]), mul(a[0], derivative(a[1], var))),
                   pow(a[1], constant(2.0)));
    case Op::Pow:
        break;
    case Op::Call: {
        if (n->fn == Func::Pow) break;
        auto du = derivative(a[0], var);
        if (is_constant(du)) {
            double c;
            is_constant(du, &c);
            if (c == 0.0) return constant(0.0);
        }
        NodePtr outer;
        switch (n->fn) {
        case Func::Sin: outer = call(Func::Cos, a[0]); break;
        case Func::Cos: outer = neg(call(Func::Sin, a[0])); break;
        case Func::Exp: outer = n; break;
        case Func::Log: return div(du, a[0]);
        case Func::Sqrt: return div(du, mul(constant(2.0), n));
        case Func::Tanh: outer = sub(constant(1.0), pow(n, constant(2.0))); break;
        case Func::Abs: outer = div(a[0], n); break;
        case Func::Pow: break;
        }
        return mul(outer, du);
    }
    }
    // power: base^exponent, either as '^' or pow(,)
    const NodePtr& base = a[0];
    const NodePtr& expo = a[1];
    auto db = derivative(base, var);
    auto de = derivative(expo, var);
    double c;
    if (is_constant(expo, &c)) {
        return mul(mul(constant(c), pow(base, constant(c - 1.0))), db);
    }
    // d(b^e) = b^e (e' log b + e b'/b)
    return mul(n, add(mul(de, call(Func::Log, base)), div(mul(expo, db), base)));
}

NodePtr substitute(const NodePtr& n, std::span<const NodePtr> replacements) {
    switch (n->op) {
    case Op::Constant: return n;
    case Op::Variable:
        if (n->var < 1 || n->var > static_cast<int>(replacements.size()))
            throw ConfigError("substitution has no replacement for x" + std::to_string(n->var));
        return replacements[n->var - 1];
    case Op::Neg: return neg(substitute(n->args[0], replacements));
    case Op::Add: return add(substitute(n->args[0], replacements), substitute(n->args[1], replacements));
    case Op::Sub: return sub(substitute(n->args[0], replacements), substitute(n->args[1], replacements));
    case Op::Mul: return mul(substitute(n->args[0], replacements), substitute(n->args[1], replacements));
    case Op::Div: return div(substitute(n->args[0], replacements), substitute(n->args[1], replacements));
    case Op::Pow: return pow(substitute(n->args[0], replacements), substitute(n->args[1], replacements));
    case Op::Call:
        if (n->fn == Func::Pow) {
            auto m = make(Op::Call, n->pos,
                          {substitute(n->args[0], replacements), substitute(n->args[1], replacements)});
            std::const_pointer_cast<Node>(m)->fn = Func::Pow;
            return m;
        }
        return call(n->fn, substitute(n->args[0], replacements));
    }
    return n;
}

// ---------------------------------------------------------------------------
// Program

Program::Program(const NodePtr& root, int dim) : dim_(dim) {
    if (max_variable(root) > dim)
        throw ConfigError("expression uses x" + std::to_string(max_variable(root)) + " but dimension is " +
                          std::to_string(dim));
    emit(root);
    constant_ = true;
    for (const auto& in : code_)
        if (in.code == Code::Var) constant_ = false;
}

int Program::push(Instr in) {
    code_.push_back(in);
    return static_cast<int>(code_.size()) - 1;
}

int Program::emit(const NodePtr& n) {
    const auto& a = n->args;
    auto unary = [&](Code c) {
        int x = emit(a[0]);
        return push({c, x, -1, 0.0, 0, n->pos});
    };
    auto binary = [&](Code c) {
        int x = emit(a[0]);
        int y = emit(a[1]);
        return push({c, x, y, 0.0, 0, n->pos});
    };
    auto power = [&]() {
        int x = emit(a[0]);
        double c;
        if (is_constant(a[1], &c)) {
            Code code = (std::isfinite(c) && c == std::floor(c) && std::abs(c) < 1e9) ? Code::PowInt : Code::PowReal;
            return push({code, x, -1, c, 0, n->pos});
        }
        int lg = push({Code::PowLog, x, -1, 0.0, 0, n->pos});
        int y = emit(a[1]);
        int prod = push({Code::Mul, y, lg, 0.0, 0, n->pos});
        return push({Code::Exp, prod, -1, 0.0, 0, n->pos});
    };
    switch (n->op) {
    case Op::Constant: return push({Code::Const, -1, -1, n->value, 0, n->pos});
    case Op::Variable: return push({Code::Var, -1, -1, 0.0, n->var - 1, n->pos});
    case Op::Neg: return unary(Code::Neg);
    case Op::Add: return binary(Code::Add);
    case Op::Sub: return binary(Code::Sub);
    case Op::Mul: return binary(Code::Mul);
    case Op::Div: return binary(Code::Div);
    case Op::Pow: return power();
    case Op::Call:
        switch (n->fn) {
        case Func::Sin: return unary(Code::Sin);
        case Func::Cos: return unary(Code::Cos);
        case Func::Exp: return unary(Code::Exp);
        case Func::Log: return unary(Code::Log);
        case Func::Sqrt: return unary(Code::Sqrt);
        case Func::Tanh: return unary(Code::Tanh);
        case Func::Abs: return unary(Code::Abs);
        case Func::Pow: return power();
        }
    }
    throw Error("unreachable expression node");
}

namespace {

// Scalar derivative triple (f, f', f'') of a unary map at u.
struct Unary3 {
    double f0, f1, f2;
};

Unary3 pow_int(double u, double c, std::size_t pos) {
    if (u == 0.0 && c < 0.0) throw DomainError("division by zero in negative power", pos);
    double f0 = std::pow(u, c);
    double f1 = c == 0.0 ? 0.0 : c * std::pow(u, c - 1.0);
    double f2 = (c == 0.0 || c == 1.0) ? 0.0 : c * (c - 1.0) * std::pow(u, c - 2.0);
    return {f0, f1, f2};
}

} // namespace

double Program::value(const double* x) const {
    thread_local std::vector<double> slots;
    slots.resize(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& in = code_[i];
        double u = in.a >= 0 ? slots[in.a] : 0.0;
        double v = in.b >= 0 ? slots[in.b] : 0.0;
        double r = 0.0;
        switch (in.code) {
        case Code::Const: r = in.c; break;
        case Code::Var: r = x[in.var]; break;
        case Code::Neg: r = -u; break;
        case Code::Add: r = u + v; break;
        case Code::Sub: r = u - v; break;
        case Code::Mul: r = u * v; break;
        case Code::Div:
            if (v == 0.0) throw DomainError("division by zero", in.pos);
            r = u / v;
            break;
        case Code::PowInt:
            if (u == 0.0 && in.c < 0.0) throw DomainError("division by zero in negative power", in.pos);
            r = std::pow(u, in.c);
            break;
        case Code::PowReal:
            if (u <= 0.0) throw DomainError("non-integer power requires a positive base", in.pos);
            r = std::pow(u, in.c);
            break;
        case Code::PowLog:
            if (u <= 0.0) throw DomainError("non-integer power requires a positive base", in.pos);
            r = std::log(u);
            break;
        case Code::Sin: r = std::sin(u); break;
        case Code::Cos: r = std::cos(u); break;
        case Code::Exp: r = std::exp(u); break;
        case Code::Log:
            if (u <= 0.0) throw DomainError("log of non-positive value", in.pos);
            r = std::log(u);
            break;
        case Code::Sqrt:
            if (u < 0.0) throw DomainError("sqrt of negative value", in.pos);
            r = std::sqrt(u);
            break;
        case Code::Tanh: r = std::tanh(u); break;
        case Code::Abs: r = std::abs(u); break;
        }
        slots[i] = r;
    }
    return slots.back();
}

void Program::jet(const double* x, int order, double* out) const {
    const int d = dim_;
    const bool second = order >= 2;
    const std::size_t stride = 1 + d + (second ? static_cast<std::size_t>(d) * d : 0);
    thread_local std::vector<double> ws;
    ws.assign(code_.size() * stride, 0.0);

    auto slot = [&](int i) { return ws.data() + static_cast<std::size_t>(i) * stride; };

    // dst = phi(src) given (phi, phi', phi'') at src value.
    auto apply_unary = [&](const double* s, double* t, Unary3 f) {
        t[0] = f.f0;
        for (int k = 0; k < d; ++k) t[1 + k] = f.f1 * s[1 + k];
        if (second) {
            const double* sg = s + 1;
            const double* sh = s + 1 + d;
            double* th = t + 1 + d;
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) th[r * d + c] = f.f1 * sh[r * d + c] + f.f2 * sg[r] * sg[c];
        }
    };

    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& in = code_[i];
        double* t = slot(static_cast<int>(i));
        const double* s = in.a >= 0 ? slot(in.a) : nullptr;
        const double* q = in.b >= 0 ? slot(in.b) : nullptr;
        const double u = s ? s[0] : 0.0;
        switch (in.code) {
        case Code::Const: t[0] = in.c; break;
        case Code::Var:
            t[0] = x[in.var];
            t[1 + in.var] = 1.0;
            break;
        case Code::Neg:
            for (std::size_t k = 0; k < stride; ++k) t[k] = -s[k];
            break;
        case Code::Add:
            for (std::size_t k = 0; k < stride; ++k) t[k] = s[k] + q[k];
            break;
        case Code::Sub:
            for (std::size_t k = 0; k < stride; ++k) t[k] = s[k] - q[k];
            break;
        case Code::Mul: {
            const double a = s[0], b = q[0];
            t[0] = a * b;
            for (int k = 0; k < d; ++k) t[1 + k] = a * q[1 + k] + b * s[1 + k];
            if (second) {
                const double* ga = s + 1;
                const double* gb = q + 1;
                const double* ha = s + 1 + d;
                const double* hb = q + 1 + d;
                double* th = t + 1 + d;
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c)
                        th[r * d + c] = a * hb[r * d + c] + b * ha[r * d + c] + ga[r] * gb[c] + gb[r] * ga[c];
            }
            break;
        }
        case Code::Div: {
            const double b = q[0];
            if (b == 0.0) throw DomainError("division by zero", in.pos);
            const double v = u / b;
            t[0] = v;
            for (int k = 0; k < d; ++k) t[1 + k] = (s[1 + k] - v * q[1 + k]) / b;
            if (second) {
                const double* gq = t + 1;
                const double* gb = q + 1;
                const double* ha = s + 1 + d;
                const double* hb = q + 1 + d;
                double* th = t + 1 + d;
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c)
                        th[r * d + c] =
                            (ha[r * d + c] - v * hb[r * d + c] - gq[r] * gb[c] - gb[r] * gq[c]) / b;
            }
            break;
        }
        case Code::PowInt: apply_unary(s, t, pow_int(u, in.c, in.pos)); break;
        case Code::PowReal: {
            if (u <= 0.0) throw DomainError("non-integer power requires a positive base", in.pos);
            const double c = in.c;
            apply_unary(s, t, {std::pow(u, c), c * std::pow(u, c - 1.0), c * (c - 1.0) * std::pow(u, c - 2.0)});
            break;
        }
        case Code::PowLog:
            if (u <= 0.0) throw DomainError("non-integer power requires a positive base", in.pos);
            apply_unary(s, t, {std::log(u), 1.0 / u, -1.0 / (u * u)});
            break;
        case Code::Sin: apply_unary(s, t, {std::sin(u), std::cos(u), -std::sin(u)}); break;
        case Code::Cos: apply_unary(s, t, {std::cos(u), -std::sin(u), -std::cos(u)}); break;
        case Code::Exp: {
            const double e = std::exp(u);
            apply_unary(s, t, {e, e, e});
            break;
        }
        case Code::Log:
            if (u <= 0.0) throw DomainError("log of non-positive value", in.pos);
            apply_unary(s, t, {std::log(u), 1.0 / u, -1.0 / (u * u)});
            break;
        case Code::Sqrt: {
            if (u < 0.0 || (u == 0.0 && order >= 1)) throw DomainError("sqrt of non-positive value", in.pos);
            const double r = std::sqrt(u);
            apply_unary(s, t, {r, 0.5 / r, -0.25 / (r * u)});
            break;
        }
        case Code::Tanh: {
            const double th = std::tanh(u);
            const double sech2 = 1.0 - th * th;
            apply_unary(s, t, {th, sech2, -2.0 * th * sech2});
            break;
        }
        case Code::Abs: {
            const double sg = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
            apply_unary(s, t, {std::abs(u), sg, 0.0});
            break;
        }
        }
    }
    const double* last = slot(static_cast<int>(code_.size()) - 1);
    std::memcpy(out, last, stride * sizeof(double));
}

// ---------------------------------------------------------------------------
// Expression

Expression::Expression(NodePtr root, int dim)
    : root_(std::move(root)), dim_(dim), program_(std::make_shared<Program>(root_, dim)) {}

Expression Expression::parse(std::string_view text, int dim) { return Expression(parse_tree(text, dim), dim); }

Expression Expression::constant(double c, int dim) { return Expression(expr::constant(c), dim); }

double Expression::value(const Vec& x) const {
    if (x.size() != dim_) throw ConfigError("expression evaluated with wrong dimension");
    return program_->value(x.data());
}

Dual Expression::eval_dual(const Vec& x, int order) const {
    if (x.size() != dim_) throw ConfigError("expression evaluated with wrong dimension");
    const int d = dim_;
    std::vector<double> buf(1 + d + (order >= 2 ? d * d : 0));
    program_->jet(x.data(), order, buf.data());
    Dual r;
    r.value = buf[0];
    r.first = Eigen::Map<const Vec>(buf.data() + 1, d);
    if (order >= 2) r.second = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(buf.data() + 1 + d, d, d);
    return r;
}

Expression Expression::derivative(int var) const { return Expression(expr::derivative(root_, var), dim_); }

Expression Expression::compose(std::span<const Expression> inner) const {
    if (static_cast<int>(inner.size()) < max_variable(root_))
        throw ConfigError("composition needs one inner expression per variable");
    std::vector<NodePtr> repl;
    int d = inner.empty() ? dim_ : inner.front().dim();
    for (const auto& e : inner) {
        if (e.dim() != d) throw ConfigError("inner expressions disagree on dimension");
        repl.push_back(e.tree());
    }
    return Expression(substitute(root_, repl), d);
}

} // namespace gsde::expr

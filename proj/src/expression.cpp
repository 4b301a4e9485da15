#include "lmg/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "lmg/errors.hpp"

namespace lmg {

class ExprParser {
public:
    explicit ExprParser(const std::string& s) : s_(s) {}

    Expr parse() {
        Expr e = term();
        skip();
        if (pos_ != s_.size())
            fail("trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ParseError(why + " at offset " + std::to_string(pos_) + " in expression '" + s_ + "'");
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    std::string atom() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
               s_[pos_] != '(' && s_[pos_] != ')')
            ++pos_;
        if (pos_ == start)
            fail("expected a term");
        return s_.substr(start, pos_ - start);
    }

    Expr term() {
        skip();
        if (pos_ >= s_.size())
            fail("unexpected end");
        if (s_[pos_] != '(') {
            std::string a = atom();
            double v = 0.0;
            auto [end, ec] = std::from_chars(a.data(), a.data() + a.size(), v);
            if (ec == std::errc() && end == a.data() + a.size())
                return Expr::constant(v);
            if (!(std::isalpha(static_cast<unsigned char>(a[0])) || a[0] == '_'))
                fail("bad token '" + a + "'");
            return Expr::variable(a);
        }
        ++pos_;
        skip();
        std::string op = atom();
        Expr e;
        if (op == "+")
            e.op_ = Expr::Op::Add;
        else if (op == "*")
            e.op_ = Expr::Op::Mul;
        else if (op == "^")
            e.op_ = Expr::Op::Pow;
        else
            fail("unknown operator '" + op + "'");
        while (true) {
            skip();
            if (pos_ >= s_.size())
                fail("missing ')'");
            if (s_[pos_] == ')') {
                ++pos_;
                break;
            }
            e.args_.push_back(term());
        }
        if (e.op_ == Expr::Op::Pow) {
            if (e.args_.size() != 2 || e.args_[1].op() != Expr::Op::Const)
                fail("'^' takes a base and an integer literal");
            double k = e.args_[1].value();
            if (k < 0 || k != std::floor(k))
                fail("'^' exponent must be a nonnegative integer");
            e.power_ = static_cast<int>(k);
            e.args_.pop_back();
        } else if (e.args_.empty()) {
            fail("operator '" + op + "' needs arguments");
        }
        return e;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

Expr Expr::constant(double v) {
    Expr e;
    e.op_ = Op::Const;
    e.value_ = v;
    return e;
}

Expr Expr::variable(std::string name) {
    Expr e;
    e.op_ = Op::Var;
    e.name_ = std::move(name);
    return e;
}

NodeSet Expr::variables() const {
    NodeSet out;
    if (op_ == Op::Var)
        out.insert(name_);
    for (const auto& a : args_)
        for (const auto& v : a.variables())
            out.insert(v);
    return out;
}

void Expr::bind(const std::map<std::string, int>& slots) {
    if (op_ == Op::Var) {
        auto it = slots.find(name_);
        if (it == slots.end())
            throw SpecError("expression references unknown variable '" + name_ + "'");
        slot_ = it->second;
    }
    for (auto& a : args_)
        a.bind(slots);
}

double Expr::eval(const double* slots) const {
    switch (op_) {
    case Op::Const:
        return value_;
    case Op::Var:
        return slots[slot_];
    case Op::Add: {
        double s = 0.0;
        for (const auto& a : args_)
            s += a.eval(slots);
        return s;
    }
    case Op::Mul: {
        double p = 1.0;
        for (const auto& a : args_)
            p *= a.eval(slots);
        return p;
    }
    case Op::Pow: {
        double b = args_[0].eval(slots), p = 1.0;
        for (int i = 0; i < power_; ++i)
            p *= b;
        return p;
    }
    }
    return 0.0;
}

std::string Expr::to_string() const {
    std::ostringstream os;
    os.precision(15);
    switch (op_) {
    case Op::Const:
        os << value_;
        break;
    case Op::Var:
        os << name_;
        break;
    case Op::Pow:
        os << "(^ " << args_[0].to_string() << " " << power_ << ")";
        break;
    default:
        os << "(" << (op_ == Op::Add ? "+" : "*");
        for (const auto& a : args_)
            os << " " << a.to_string();
        os << ")";
    }
    return os.str();
}

Expr parse_expression(const std::string& text) {
    return ExprParser(text).parse();
}

} // namespace lmg

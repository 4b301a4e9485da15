#ifndef LMG_EXPRESSION_HPP
#define LMG_EXPRESSION_HPP

#include <map>
#include <string>
#include <vector>

#include "lmg/graph.hpp"

namespace lmg {

/// Arithmetic expression in prefix notation:
///   3.5 | W | (+ e1 e2 ...) | (* e1 e2 ...) | (^ e k)
/// where k is a nonnegative integer literal.
class Expr {
public:
    enum class Op { Const, Var, Add, Mul, Pow };

    static Expr constant(double v);
    static Expr variable(std::string name);

    Op op() const { return op_; }
    double value() const { return value_; }
    const std::string& name() const { return name_; }
    int power() const { return power_; }
    const std::vector<Expr>& args() const { return args_; }

    /// Names of all referenced variables.
    NodeSet variables() const;

    /// Resolves variable names to slots; unknown names throw SpecError.
    void bind(const std::map<std::string, int>& slots);
    /// Evaluates a bound expression against a slot array.
    double eval(const double* slots) const;

    std::string to_string() const;

private:
    friend class ExprParser;

    Op op_ = Op::Const;
    double value_ = 0.0;
    std::string name_;
    int power_ = 1;
    int slot_ = -1;
    std::vector<Expr> args_;
};

/// Throws ParseError on malformed input.
Expr parse_expression(const std::string& text);

} // namespace lmg

#endif // LMG_EXPRESSION_HPP

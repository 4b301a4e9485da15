#include "lmg/plugin.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>

#include "lmg/errors.hpp"
#include "lmg/regression.hpp"

namespace lmg {

namespace {

// Value of a sub-estimand at a row; `a` is -1 for the observed exposure or
// the exposure level 0/1 substituted by an enclosing Δ_a.
using RowFn = std::function<double(std::size_t row, int a)>;

bool is_binary(const Dataset& d, const std::string& col) {
    for (double v : d.column(col))
        if (!std::isnan(v) && v != 0.0 && v != 1.0)
            return false;
    return true;
}

std::vector<std::size_t> matching_rows(const Dataset& d, const std::vector<Event>& events) {
    std::vector<std::size_t> out;
    std::vector<std::pair<int, double>> cols;
    for (const auto& e : events)
        cols.emplace_back(d.index(e.var), static_cast<double>(e.value));
    for (std::size_t i = 0; i < d.rows(); ++i) {
        bool ok = true;
        for (const auto& [c, v] : cols)
            ok = ok && d.column(c)[i] == v;
        if (ok)
            out.push_back(i);
    }
    if (out.empty())
        throw InsufficientData("no rows match the conditioning events");
    return out;
}

RowFn build(const Estimand& e, const Dataset& d);

RowFn build_cond_exp(const Estimand& e, const Dataset& d) {
    auto rows = matching_rows(d, e.events);
    DesignFormula f = polynomial_basis(e.covariates, d, e.exposure);
    auto fit = std::make_shared<NuisanceFit>(fit_linear(d, f, e.outcome, rows));
    auto obs = std::make_shared<BoundFormula>(f, d);
    auto one = std::make_shared<BoundFormula>(f, d, Overrides{{e.exposure, 1.0}});
    auto zero = std::make_shared<BoundFormula>(f, d, Overrides{{e.exposure, 0.0}});
    return [fit, obs, one, zero](std::size_t row, int a) {
        const BoundFormula& x = a < 0 ? *obs : (a == 1 ? *one : *zero);
        return fit->predict(x, row);
    };
}

RowFn build_integrate(const Estimand& e, const Dataset& d) {
    RowFn child = build(e.children.front(), d);
    auto rows = matching_rows(d, e.events);
    if (e.given.empty()) {
        double total = 0.0;
        for (std::size_t i : rows)
            total += child(i, -1);
        double value = total / static_cast<double>(rows.size());
        return [value](std::size_t, int) { return value; };
    }
    const std::string target = "__integrand";
    Dataset work = d;
    std::vector<double> values(d.rows(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i : rows)
        values[i] = child(i, -1);
    work.add_column(target, std::move(values));
    DesignFormula f = polynomial_basis(e.given, d);
    auto fit = std::make_shared<NuisanceFit>(fit_linear(work, f, target, rows));
    auto x = std::make_shared<BoundFormula>(f, d);
    return [fit, x](std::size_t row, int) { return fit->predict(*x, row); };
}

RowFn build(const Estimand& e, const Dataset& d) {
    switch (e.kind) {
    case Estimand::Kind::CondExp:
        return build_cond_exp(e, d);
    case Estimand::Kind::Delta: {
        RowFn child = build(e.children.front(), d);
        return [child](std::size_t row, int) { return child(row, 1) - child(row, 0); };
    }
    case Estimand::Kind::Integrate:
        return build_integrate(e, d);
    case Estimand::Kind::Sum: {
        double total = 0.0;
        for (std::size_t k = 0; k < e.children.size(); ++k) {
            double weight = 1.0;
            if (!e.weights[k].empty())
                weight = static_cast<double>(matching_rows(d, e.weights[k]).size()) /
                         static_cast<double>(d.rows());
            RowFn term = build(e.children[k], d);
            total += weight * term(0, -1);
        }
        return [total](std::size_t, int) { return total; };
    }
    }
    throw InvalidQuery("unknown estimand node");
}

} // namespace

DesignFormula polynomial_basis(const NodeSet& vars, const Dataset& d, const std::string& exposure) {
    std::vector<std::string> base{""};
    std::vector<std::string> v(vars.begin(), vars.end());
    for (std::size_t i = 0; i < v.size(); ++i) {
        base.push_back(v[i]);
        if (!is_binary(d, v[i]))
            base.push_back(v[i] + "^2");
        for (std::size_t j = i + 1; j < v.size(); ++j)
            base.push_back(v[i] + ":" + v[j]);
    }
    std::string text;
    auto add = [&](const std::string& t) { text += (text.empty() ? "" : " + ") + (t.empty() ? "1" : t); };
    for (const auto& t : base)
        add(t);
    if (!exposure.empty())
        for (const auto& t : base)
            add(t.empty() ? exposure : exposure + ":" + t);
    return DesignFormula::parse(text);
}

double evaluate_plugin(const Estimand& e, const Dataset& d) {
    if (d.rows() == 0)
        throw InsufficientData("empty dataset");
    RowFn f = build(e, d);
    if (e.kind == Estimand::Kind::Delta || e.kind == Estimand::Kind::CondExp) {
        double total = 0.0;
        for (std::size_t i = 0; i < d.rows(); ++i)
            total += f(i, -1);
        return total / static_cast<double>(d.rows());
    }
    return f(0, -1);
}

} // namespace lmg

#include "lmg/formula.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "lmg/errors.hpp"

namespace lmg {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos)
        return {};
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos)
            return out;
        start = pos + 1;
    }
}

bool valid_name(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

double power_of(double x, int k) {
    double p = 1.0;
    for (int i = 0; i < k; ++i)
        p *= x;
    return p;
}

} // namespace

std::string Term::to_string() const {
    if (factors.empty())
        return "1";
    std::string out;
    for (const auto& f : factors) {
        if (!out.empty())
            out += ":";
        out += f.column;
        if (f.power != 1)
            out += "^" + std::to_string(f.power);
    }
    return out;
}

DesignFormula DesignFormula::parse(const std::string& text) {
    DesignFormula f;
    for (const auto& raw : split(text, '+')) {
        std::string piece = trim(raw);
        if (piece.empty())
            throw ParseError("empty term in formula '" + text + "'");
        Term t;
        if (piece != "1") {
            for (const auto& fraw : split(piece, ':')) {
                std::string fs = trim(fraw);
                Factor factor;
                auto caret = fs.find('^');
                if (caret != std::string::npos) {
                    std::string k = trim(fs.substr(caret + 1));
                    auto [end, ec] = std::from_chars(k.data(), k.data() + k.size(), factor.power);
                    if (ec != std::errc() || end != k.data() + k.size() || factor.power < 1)
                        throw ParseError("bad power in term '" + piece + "'");
                    fs = trim(fs.substr(0, caret));
                }
                if (!valid_name(fs))
                    throw ParseError("bad column name '" + fs + "' in formula '" + text + "'");
                auto same = std::find_if(t.factors.begin(), t.factors.end(),
                                         [&](const Factor& x) { return x.column == fs; });
                if (same != t.factors.end())
                    same->power += factor.power;
                else
                    t.factors.push_back({fs, factor.power});
            }
            std::sort(t.factors.begin(), t.factors.end(),
                      [](const Factor& a, const Factor& b) { return a.column < b.column; });
        }
        if (std::find(f.terms_.begin(), f.terms_.end(), t) != f.terms_.end())
            throw ParseError("duplicate term '" + t.to_string() + "' in formula '" + text + "'");
        f.terms_.push_back(std::move(t));
    }
    return f;
}

bool DesignFormula::has_intercept() const {
    return std::any_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.factors.empty(); });
}

NodeSet DesignFormula::columns() const {
    NodeSet out;
    for (const auto& t : terms_)
        for (const auto& f : t.factors)
            out.insert(f.column);
    return out;
}

std::string DesignFormula::to_string() const {
    std::string out;
    for (const auto& t : terms_)
        out += (out.empty() ? "" : " + ") + t.to_string();
    return out;
}

BoundFormula::BoundFormula(const DesignFormula& f, const Dataset& d, const Overrides& overrides)
    : data_(&d) {
    for (const auto& t : f.terms()) {
        std::vector<BoundFactor> bound;
        for (const auto& factor : t.factors) {
            BoundFactor b;
            b.power = factor.power;
            auto o = std::find_if(overrides.begin(), overrides.end(),
                                  [&](const auto& p) { return p.first == factor.column; });
            if (o != overrides.end()) {
                b.overridden = true;
                b.value = o->second;
            } else {
                b.column = d.index(factor.column);
            }
            bound.push_back(b);
        }
        terms_.push_back(std::move(bound));
    }
}

double BoundFormula::term(std::size_t row, std::size_t t) const {
    double product = 1.0;
    for (const auto& f : terms_[t]) {
        if (!f.overridden && data_->masked(row, f.column))
            continue;
        product *= power_of(f.overridden ? f.value : data_->column(f.column)[row], f.power);
    }
    if (product == 0.0)
        return 0.0;
    for (const auto& f : terms_[t])
        if (!f.overridden && data_->masked(row, f.column))
            product *= power_of(data_->at(row, f.column), f.power);
    return product;
}

void BoundFormula::row(std::size_t row, double* out) const {
    for (std::size_t t = 0; t < terms_.size(); ++t)
        out[t] = term(row, t);
}

Eigen::MatrixXd BoundFormula::matrix(const std::vector<std::size_t>& rows) const {
    Eigen::MatrixXd x(rows.size(), terms_.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t t = 0; t < terms_.size(); ++t)
            x(i, t) = term(rows[i], t);
    return x;
}

std::vector<std::size_t> all_rows(const Dataset& d) {
    std::vector<std::size_t> rows(d.rows());
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i] = i;
    return rows;
}

std::vector<std::size_t> rows_where(const Dataset& d, const std::string& column, double value) {
    const auto& c = d.column(column);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] == value)
            rows.push_back(i);
    return rows;
}

} // namespace lmg

#ifndef LMG_FORMULA_HPP
#define LMG_FORMULA_HPP

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lmg/dataset.hpp"

namespace lmg {

struct Factor {
    std::string column;
    int power = 1;

    friend bool operator==(const Factor&, const Factor&) = default;
};

/// Product of factors; the intercept is the empty product.
struct Term {
    std::vector<Factor> factors;

    std::string to_string() const;
    friend bool operator==(const Term&, const Term&) = default;
};

/// Term list such as "1 + W + W^2 + A:W + R_Y0:Y0". Factors inside a term
/// are kept sorted by column name, so "W:A" and "A:W" are the same term.
class DesignFormula {
public:
    DesignFormula() = default;
    /// Throws ParseError on syntax errors or duplicate terms.
    static DesignFormula parse(const std::string& text);

    const std::vector<Term>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool has_intercept() const;
    NodeSet columns() const;
    std::string to_string() const;

    friend bool operator==(const DesignFormula&, const DesignFormula&) = default;

private:
    std::vector<Term> terms_;
};

/// Column values substituted for the dataset's, e.g. {"A", 1.0}.
using Overrides = std::vector<std::pair<std::string, double>>;

/// A formula resolved against one dataset's columns.
///
/// A term is evaluated factor by factor, unmasked factors first; once the
/// running product is exactly zero the remaining factors are not read. Any
/// other read of a masked cell throws MaskedCellAccess.
class BoundFormula {
public:
    BoundFormula(const DesignFormula& f, const Dataset& d, const Overrides& overrides = {});

    std::size_t size() const { return terms_.size(); }
    double term(std::size_t row, std::size_t t) const;
    void row(std::size_t row, double* out) const;
    Eigen::MatrixXd matrix(const std::vector<std::size_t>& rows) const;

private:
    struct BoundFactor {
        int column = -1;
        int power = 1;
        bool overridden = false;
        double value = 0.0;
    };

    const Dataset* data_;
    std::vector<std::vector<BoundFactor>> terms_;
};

std::vector<std::size_t> all_rows(const Dataset& d);
std::vector<std::size_t> rows_where(const Dataset& d, const std::string& column, double value);

} // namespace lmg

#endif // LMG_FORMULA_HPP

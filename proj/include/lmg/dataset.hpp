#ifndef LMG_DATASET_HPP
#define LMG_DATASET_HPP

#include <cmath>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lmg/graph.hpp"

namespace lmg {

/// Column-major numeric table. Masked cells hold NaN; a missing-affected
/// column may be paired with its 0/1 indicator column, in which case the
/// column must be masked exactly where the indicator is 0.
class Dataset {
public:
    Dataset() = default;

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    /// Throws NodeNotFound.
    int index(const std::string& name) const;

    /// The first column fixes the row count; later ones must match it.
    void add_column(const std::string& name, std::vector<double> values);
    const std::vector<double>& column(const std::string& name) const;
    const std::vector<double>& column(int c) const { return data_[c]; }
    std::vector<double>& mutable_column(const std::string& name);

    bool masked(std::size_t row, int c) const { return std::isnan(data_[c][row]); }
    /// Throws MaskedCellAccess on a masked cell.
    double at(std::size_t row, int c) const;
    double at(std::size_t row, const std::string& name) const { return at(row, index(name)); }

    /// Declares `indicator` as the missingness indicator of `var`.
    void pair(const std::string& var, const std::string& indicator);
    const std::map<std::string, std::string>& pairs() const { return pairs_; }
    /// Sets var to NaN wherever its indicator is 0.
    void apply_masks();
    /// Throws ParseError naming the first row where mask and indicator disagree.
    void check_masks() const;
    std::size_t masked_count(const std::string& name) const;

    Dataset select_rows(const std::vector<std::size_t>& rows) const;

    /// Bitwise comparison (masked cells compare equal).
    friend bool operator==(const Dataset& a, const Dataset& b);

private:
    std::size_t rows_ = 0;
    std::vector<std::string> names_;
    std::map<std::string, int> index_;
    std::vector<std::vector<double>> data_;
    std::map<std::string, std::string> pairs_;
};

/// RFC-4180 CSV. Paired columns are written as "<var>_obs" with empty cells
/// where masked; numbers use the shortest round-trip representation.
void write_csv(const Dataset& d, std::ostream& out);
/// Inverse of write_csv. A "<var>_obs" column is paired with "R_<var>" when
/// that column exists. Throws ParseError with the line number.
Dataset read_csv(std::istream& in);

std::string format_number(double v);

} // namespace lmg

#endif // LMG_DATASET_HPP

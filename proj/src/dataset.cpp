#include "lmg/dataset.hpp"

#include <charconv>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "lmg/errors.hpp"

namespace lmg {

namespace {

constexpr double kMasked = std::numeric_limits<double>::quiet_NaN();
const std::string kObsSuffix = "_obs";

std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

// Reads one record; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof())
        return false;
    ++line;
    std::string field;
    bool quoted = false;
    char c;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n')
                    ++line;
                field += c;
            }
            continue;
        }
        if (c == '"') {
            if (!field.empty())
                throw ParseError("stray quote on line " + std::to_string(line));
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n')
                in.get(c);
            break;
        } else if (c == '\n') {
            break;
        } else {
            field += c;
        }
    }
    if (quoted)
        throw ParseError("unterminated quoted field on line " + std::to_string(line));
    fields.push_back(field);
    return true;
}

} // namespace

int Dataset::index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        throw NodeNotFound("dataset has no column '" + name + "'");
    return it->second;
}

void Dataset::add_column(const std::string& name, std::vector<double> values) {
    if (has(name))
        throw SpecError("duplicate column '" + name + "'");
    if (names_.empty())
        rows_ = values.size();
    else if (values.size() != rows_)
        throw SpecError("column '" + name + "' has " + std::to_string(values.size()) +
                        " rows, expected " + std::to_string(rows_));
    index_[name] = static_cast<int>(names_.size());
    names_.push_back(name);
    data_.push_back(std::move(values));
}

const std::vector<double>& Dataset::column(const std::string& name) const {
    return data_[index(name)];
}

std::vector<double>& Dataset::mutable_column(const std::string& name) {
    return data_[index(name)];
}

double Dataset::at(std::size_t row, int c) const {
    double v = data_[c][row];
    if (std::isnan(v))
        throw MaskedCellAccess("read of masked cell '" + names_[c] + "' in row " +
                               std::to_string(row));
    return v;
}

void Dataset::pair(const std::string& var, const std::string& indicator) {
    index(var);
    index(indicator);
    pairs_[var] = indicator;
}

void Dataset::apply_masks() {
    for (const auto& [var, r] : pairs_) {
        auto& v = data_[index(var)];
        const auto& ind = data_[index(r)];
        for (std::size_t i = 0; i < rows_; ++i)
            if (ind[i] == 0.0)
                v[i] = kMasked;
    }
}

void Dataset::check_masks() const {
    for (const auto& [var, r] : pairs_) {
        const auto& v = data_[index(var)];
        const auto& ind = data_[index(r)];
        for (std::size_t i = 0; i < rows_; ++i) {
            if (ind[i] != 0.0 && ind[i] != 1.0)
                throw ParseError("indicator '" + r + "' is not 0/1 in row " + std::to_string(i));
            if (std::isnan(v[i]) != (ind[i] == 0.0))
                throw ParseError("'" + var + "' is " + (std::isnan(v[i]) ? "empty" : "present") +
                                 " in row " + std::to_string(i) + " but " + r + " = " +
                                 format_number(ind[i]));
        }
    }
}

std::size_t Dataset::masked_count(const std::string& name) const {
    std::size_t n = 0;
    for (double v : column(name))
        n += std::isnan(v);
    return n;
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& rows) const {
    Dataset out;
    for (std::size_t c = 0; c < names_.size(); ++c) {
        std::vector<double> col(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            col[i] = data_[c][rows[i]];
        out.add_column(names_[c], std::move(col));
    }
    if (names_.empty())
        out.rows_ = rows.size();
    out.pairs_ = pairs_;
    return out;
}

bool operator==(const Dataset& a, const Dataset& b) {
    if (a.rows_ != b.rows_ || a.names_ != b.names_ || a.pairs_ != b.pairs_)
        return false;
    for (std::size_t c = 0; c < a.data_.size(); ++c)
        if (std::memcmp(a.data_[c].data(), b.data_[c].data(), a.rows_ * sizeof(double)) != 0)
            return false;
    return true;
}

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void write_csv(const Dataset& d, std::ostream& out) {
    const auto& names = d.names();
    std::vector<bool> paired(names.size());
    for (std::size_t c = 0; c < names.size(); ++c) {
        paired[c] = d.pairs().count(names[c]) != 0;
        out << (c ? "," : "") << quote(paired[c] ? names[c] + kObsSuffix : names[c]);
    }
    out << "\r\n";
    for (std::size_t i = 0; i < d.rows(); ++i) {
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (c)
                out << ',';
            if (!d.masked(i, static_cast<int>(c)))
                out << format_number(d.column(static_cast<int>(c))[i]);
        }
        out << "\r\n";
    }
}

Dataset read_csv(std::istream& in) {
    std::vector<std::string> header, fields;
    std::size_t line = 0;
    if (!read_record(in, header, line))
        throw ParseError("empty CSV input");
    std::vector<std::string> names;
    std::vector<std::string> proxies;
    for (const auto& h : header) {
        if (h.size() > kObsSuffix.size() &&
            h.compare(h.size() - kObsSuffix.size(), kObsSuffix.size(), kObsSuffix) == 0) {
            names.push_back(h.substr(0, h.size() - kObsSuffix.size()));
            proxies.push_back(names.back());
        } else {
            names.push_back(h);
        }
    }
    std::vector<std::vector<double>> cols(names.size());
    while (read_record(in, fields, line)) {
        if (fields.size() == 1 && fields[0].empty())
            continue;
        if (fields.size() != names.size())
            throw ParseError("line " + std::to_string(line) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(names.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto& f = fields[c];
            if (f.empty()) {
                cols[c].push_back(kMasked);
                continue;
            }
            double v = 0.0;
            auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || end != f.data() + f.size())
                throw ParseError("line " + std::to_string(line) + ", column '" + header[c] +
                                 "': '" + f + "' is not a number");
            cols[c].push_back(v);
        }
    }
    Dataset d;
    for (std::size_t c = 0; c < names.size(); ++c)
        d.add_column(names[c], std::move(cols[c]));
    for (const auto& v : proxies)
        if (d.has("R_" + v))
            d.pair(v, "R_" + v);
    d.check_masks();
    return d;
}

} // namespace lmg

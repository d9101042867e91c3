#include "robustcurve/core/panel.hpp"

#include "robustcurve/core/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace robustcurve::core {

// --- csv helpers -----------------------------------------------------------

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        fields.emplace_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::string format_number(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("number formatting failed");
    }
    return std::string(buf.data(), ptr);
}

bool parse_number(std::string_view text, double& out) {
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

// --- shared validation -----------------------------------------------------

namespace {

void check_dates(const std::vector<Month>& dates) {
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (dates[i] <= dates[i - 1]) {
            throw std::invalid_argument("dates not ascending at row " + std::to_string(i + 1));
        }
        if (months_between(dates[i - 1], dates[i]) != 1) {
            throw std::invalid_argument("dates not at monthly spacing at row " + std::to_string(i + 1));
        }
    }
}

std::optional<std::size_t> find_month(const std::vector<Month>& dates, const Month& date) {
    if (dates.empty()) return std::nullopt;
    const int offset = months_between(dates.front(), date);
    if (offset < 0 || static_cast<std::size_t>(offset) >= dates.size()) return std::nullopt;
    return static_cast<std::size_t>(offset);
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<Month> dates;
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> lines;
};

RawTable read_table(std::istream& in) {
    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (table.header.empty()) {
            if (fields.size() < 2 || fields[0] != "date") {
                throw IngestionError("line 1: header must start with 'date' and name at least one column", line_no, "date");
            }
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw IngestionError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                                     " fields, found " + std::to_string(fields.size()),
                                 line_no, "");
        }
        Month date;
        try {
            date = Month::parse(fields[0]);
        } catch (const std::invalid_argument& e) {
            throw IngestionError("line " + std::to_string(line_no) + ", column date: " + e.what(), line_no, "date");
        }
        if (!table.dates.empty()) {
            if (date <= table.dates.back()) {
                throw IngestionError("line " + std::to_string(line_no) + ": dates not ascending", line_no, "date");
            }
            if (months_between(table.dates.back(), date) != 1) {
                throw IngestionError("line " + std::to_string(line_no) + ": dates not at monthly spacing", line_no, "date");
            }
        }
        table.dates.push_back(date);
        fields.erase(fields.begin());
        table.cells.push_back(std::move(fields));
        table.lines.push_back(line_no);
    }
    if (table.header.empty()) {
        throw IngestionError("empty input: missing header", 0, "");
    }
    if (table.dates.empty()) {
        throw IngestionError("no data rows", 0, "");
    }
    return table;
}

double parse_maturity(const std::string& label) {
    std::string_view text = label;
    if (!text.empty() && (text.front() == 'M' || text.front() == 'm')) text.remove_prefix(1);
    double value = 0.0;
    if (!parse_number(text, value) || value <= 0.0) {
        throw IngestionError("header: invalid maturity column '" + label + "'", 1, label);
    }
    return value;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

// --- YieldPanel ------------------------------------------------------------

YieldPanel::YieldPanel(std::vector<Month> dates, std::vector<double> maturities, Eigen::MatrixXd values)
    : dates_(std::move(dates)), maturities_(std::move(maturities)), values_(std::move(values)) {
    if (maturities_.empty()) throw std::invalid_argument("yield panel needs at least one maturity");
    for (std::size_t j = 0; j < maturities_.size(); ++j) {
        if (!(maturities_[j] > 0.0)) throw std::invalid_argument("maturities must be positive");
        if (j > 0 && maturities_[j] <= maturities_[j - 1]) {
            throw std::invalid_argument("maturities must be strictly increasing");
        }
    }
    if (static_cast<std::size_t>(values_.rows()) != dates_.size() ||
        static_cast<std::size_t>(values_.cols()) != maturities_.size()) {
        throw std::invalid_argument("yield values shape does not match dates x maturities");
    }
    if (!values_.allFinite()) throw std::invalid_argument("yield panel contains missing or non-finite values");
    check_dates(dates_);
}

std::optional<std::size_t> YieldPanel::row_of(const Month& date) const { return find_month(dates_, date); }

std::optional<std::size_t> YieldPanel::column_of(double maturity) const {
    auto it = std::find(maturities_.begin(), maturities_.end(), maturity);
    if (it == maturities_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - maturities_.begin());
}

std::string maturity_label(double maturity) { return "M" + format_number(maturity); }

YieldPanel read_yield_panel(std::istream& in) {
    RawTable table = read_table(in);
    std::vector<double> maturities;
    for (std::size_t j = 1; j < table.header.size(); ++j) {
        const double m = parse_maturity(table.header[j]);
        if (std::find(maturities.begin(), maturities.end(), m) != maturities.end()) {
            throw IngestionError("header: duplicate maturity '" + table.header[j] + "'", 1, table.header[j]);
        }
        if (!maturities.empty() && m < maturities.back()) {
            throw IngestionError("header: maturities not increasing at '" + table.header[j] + "'", 1, table.header[j]);
        }
        maturities.push_back(m);
    }
    Eigen::MatrixXd values(table.dates.size(), maturities.size());
    for (std::size_t i = 0; i < table.cells.size(); ++i) {
        for (std::size_t j = 0; j < maturities.size(); ++j) {
            const std::string& cell = table.cells[i][j];
            const std::string& column = table.header[j + 1];
            double v = 0.0;
            if (cell.empty()) {
                throw IngestionError("line " + std::to_string(table.lines[i]) + ", column " + column + ": blank yield cell",
                                     table.lines[i], column);
            }
            if (!parse_number(cell, v)) {
                throw IngestionError("line " + std::to_string(table.lines[i]) + ", column " + column +
                                         ": non-numeric cell '" + cell + "'",
                                     table.lines[i], column);
            }
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return YieldPanel(std::move(table.dates), std::move(maturities), std::move(values));
}

YieldPanel load_yield_panel(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_yield_panel(in);
}

void write_yield_panel(const YieldPanel& panel, std::ostream& out) {
    out << "date";
    for (double m : panel.maturities()) out << ',' << maturity_label(m);
    out << '\n';
    for (std::size_t i = 0; i < panel.periods(); ++i) {
        out << panel.dates()[i].to_string();
        for (std::size_t j = 0; j < panel.maturity_count(); ++j) {
            out << ',' << format_number(panel.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out << '\n';
    }
}

void write_yield_panel(const YieldPanel& panel, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_yield_panel(panel, out);
}

// --- IndicatorPanel --------------------------------------------------------

IndicatorPanel::IndicatorPanel(std::vector<Month> dates, std::vector<std::string> names, Eigen::MatrixXd values)
    : dates_(std::move(dates)), names_(std::move(names)), values_(std::move(values)) {
    if (names_.empty()) throw std::invalid_argument("indicator panel needs at least one series");
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (!seen.insert(n).second) throw std::invalid_argument("duplicate indicator name '" + n + "'");
    }
    if (static_cast<std::size_t>(values_.rows()) != dates_.size() ||
        static_cast<std::size_t>(values_.cols()) != names_.size()) {
        throw std::invalid_argument("indicator values shape does not match dates x names");
    }
    check_dates(dates_);
    first_observed_.assign(names_.size(), dates_.size());
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        bool started = false;
        for (Eigen::Index i = 0; i < values_.rows(); ++i) {
            const double v = values_(i, j);
            if (std::isnan(v)) {
                if (started) {
                    throw std::invalid_argument("indicator '" + names_[static_cast<std::size_t>(j)] +
                                                "' has an interior gap at row " + std::to_string(i + 1));
                }
            } else if (!std::isfinite(v)) {
                throw std::invalid_argument("indicator '" + names_[static_cast<std::size_t>(j)] + "' is not finite");
            } else if (!started) {
                started = true;
                first_observed_[static_cast<std::size_t>(j)] = static_cast<std::size_t>(i);
            }
        }
    }
}

std::optional<std::size_t> IndicatorPanel::row_of(const Month& date) const { return find_month(dates_, date); }

bool IndicatorPanel::has_missing() const {
    return std::any_of(first_observed_.begin(), first_observed_.end(), [](std::size_t f) { return f > 0; });
}

IndicatorPanel read_indicator_panel(std::istream& in) {
    RawTable table = read_table(in);
    std::vector<std::string> names(table.header.begin() + 1, table.header.end());
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (n.empty() || !seen.insert(n).second) {
            throw IngestionError("header: empty or duplicate indicator name '" + n + "'", 1, n);
        }
    }
    constexpr double missing = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd values(table.dates.size(), names.size());
    std::vector<bool> started(names.size(), false);
    for (std::size_t i = 0; i < table.cells.size(); ++i) {
        for (std::size_t j = 0; j < names.size(); ++j) {
            const std::string& cell = table.cells[i][j];
            double v = missing;
            if (cell.empty() || cell == "NA" || cell == "NaN") {
                if (started[j]) {
                    throw IngestionError("line " + std::to_string(table.lines[i]) + ", column " + names[j] +
                                             ": missing value after series start",
                                         table.lines[i], names[j]);
                }
            } else if (!parse_number(cell, v)) {
                throw IngestionError("line " + std::to_string(table.lines[i]) + ", column " + names[j] +
                                         ": non-numeric cell '" + cell + "'",
                                     table.lines[i], names[j]);
            } else {
                started[j] = true;
            }
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return IndicatorPanel(std::move(table.dates), std::move(names), std::move(values));
}

IndicatorPanel load_indicator_panel(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_indicator_panel(in);
}

void write_indicator_panel(const IndicatorPanel& panel, std::ostream& out) {
    out << "date";
    for (const auto& n : panel.names()) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < panel.periods(); ++i) {
        out << panel.dates()[i].to_string();
        for (std::size_t j = 0; j < panel.series_count(); ++j) {
            const double v = panel.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            out << ',';
            if (!std::isnan(v)) out << format_number(v);
        }
        out << '\n';
    }
}

void write_indicator_panel(const IndicatorPanel& panel, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_indicator_panel(panel, out);
}

}  // namespace robustcurve::core

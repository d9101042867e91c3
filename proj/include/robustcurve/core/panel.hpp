#pragma once

#include "robustcurve/core/month.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace robustcurve::core {

/// Raised on malformed CSV input. The message names the offending row
/// (1-based file line) and column.
class IngestionError : public std::runtime_error {
public:
    IngestionError(const std::string& what, std::size_t line, std::string column)
        : std::runtime_error(what), line_(line), column_(std::move(column)) {}

    [[nodiscard]] std::size_t line() const { return line_; }
    [[nodiscard]] const std::string& column() const { return column_; }

private:
    std::size_t line_;
    std::string column_;
};

/// Zero-coupon yields in percent, one row per month-end and one column per
/// maturity (months).
class YieldPanel {
public:
    YieldPanel(std::vector<Month> dates, std::vector<double> maturities, Eigen::MatrixXd values);

    [[nodiscard]] const std::vector<Month>& dates() const { return dates_; }
    [[nodiscard]] const std::vector<double>& maturities() const { return maturities_; }
    [[nodiscard]] const Eigen::MatrixXd& values() const { return values_; }

    [[nodiscard]] std::size_t periods() const { return dates_.size(); }
    [[nodiscard]] std::size_t maturity_count() const { return maturities_.size(); }

    /// Row index of `date`, if present.
    [[nodiscard]] std::optional<std::size_t> row_of(const Month& date) const;
    /// Column index of a maturity (exact match).
    [[nodiscard]] std::optional<std::size_t> column_of(double maturity) const;

private:
    std::vector<Month> dates_;
    std::vector<double> maturities_;
    Eigen::MatrixXd values_;
};

/// Economic indicators; NaN marks a missing value. Only leading gaps (series
/// that start late) are allowed.
class IndicatorPanel {
public:
    IndicatorPanel(std::vector<Month> dates, std::vector<std::string> names, Eigen::MatrixXd values);

    [[nodiscard]] const std::vector<Month>& dates() const { return dates_; }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
    [[nodiscard]] const Eigen::MatrixXd& values() const { return values_; }

    [[nodiscard]] std::size_t periods() const { return dates_.size(); }
    [[nodiscard]] std::size_t series_count() const { return names_.size(); }

    [[nodiscard]] std::optional<std::size_t> row_of(const Month& date) const;

    /// First row holding a value for series `column`; periods() if none.
    [[nodiscard]] std::size_t first_observed(std::size_t column) const { return first_observed_[column]; }
    /// True when any series starts late.
    [[nodiscard]] bool has_missing() const;

private:
    std::vector<Month> dates_;
    std::vector<std::string> names_;
    Eigen::MatrixXd values_;
    std::vector<std::size_t> first_observed_;
};

YieldPanel read_yield_panel(std::istream& in);
YieldPanel load_yield_panel(const std::filesystem::path& path);
void write_yield_panel(const YieldPanel& panel, std::ostream& out);
void write_yield_panel(const YieldPanel& panel, const std::filesystem::path& path);

IndicatorPanel read_indicator_panel(std::istream& in);
IndicatorPanel load_indicator_panel(const std::filesystem::path& path);
void write_indicator_panel(const IndicatorPanel& panel, std::ostream& out);
void write_indicator_panel(const IndicatorPanel& panel, const std::filesystem::path& path);

/// Column header for a maturity, e.g. 3 -> "M3", 1.5 -> "M1.5".
std::string maturity_label(double maturity);

}  // namespace robustcurve::core

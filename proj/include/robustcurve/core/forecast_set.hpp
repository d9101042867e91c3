#pragma once

#include "robustcurve/core/month.hpp"
#include "robustcurve/core/panel.hpp"

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace robustcurve::core {

struct ForecastKey {
    std::string model_id;
    Month origin;
    int horizon = 1;  // months
    double maturity = 0.0;

    [[nodiscard]] Month target() const { return origin.plus(horizon); }

    auto operator<=>(const ForecastKey&) const = default;
    bool operator==(const ForecastKey&) const = default;
};

/// Point forecasts of yields (percent), keyed by model, origin, horizon and
/// maturity. Each key appears at most once.
class ForecastSet {
public:
    using Map = std::map<ForecastKey, double>;

    /// Throws std::invalid_argument on a duplicate key.
    void insert(const ForecastKey& key, double forecast);
    /// Inserts every entry of `other`; duplicate keys throw.
    void merge(const ForecastSet& other);

    [[nodiscard]] std::optional<double> find(const ForecastKey& key) const;
    [[nodiscard]] bool contains(const ForecastKey& key) const { return entries_.count(key) != 0; }
    [[nodiscard]] const Map& entries() const { return entries_; }
    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] bool empty() const { return entries_.empty(); }

    /// Distinct model ids in sorted order.
    [[nodiscard]] std::vector<std::string> models() const;

    /// Copy with every model id replaced by `model_id`.
    [[nodiscard]] ForecastSet relabeled(const std::string& model_id) const;

    bool operator==(const ForecastSet&) const = default;

private:
    Map entries_;
};

/// Realized yield for the forecast target, if the panel covers it.
std::optional<double> realized_yield(const YieldPanel& panel, const ForecastKey& key);

/// Realized minus forecast; nullopt when the target lies beyond the panel.
std::optional<double> forecast_error(const YieldPanel& panel, const ForecastKey& key, double forecast);

/// CSV layout: model_id,origin,target,horizon,maturity,forecast
void write_forecast_set(const ForecastSet& set, std::ostream& out);
void write_forecast_set(const ForecastSet& set, const std::filesystem::path& path);
ForecastSet read_forecast_set(std::istream& in);
ForecastSet load_forecast_set(const std::filesystem::path& path);

}  // namespace robustcurve::core

#include "robustcurve/core/forecast_set.hpp"

#include "robustcurve/core/csv.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace robustcurve::core {

void ForecastSet::insert(const ForecastKey& key, double forecast) {
    auto [it, inserted] = entries_.emplace(key, forecast);
    if (!inserted) {
        throw std::invalid_argument("duplicate forecast for model " + key.model_id + " origin " +
                                    key.origin.to_string() + " h=" + std::to_string(key.horizon) +
                                    " maturity " + format_number(key.maturity));
    }
}

void ForecastSet::merge(const ForecastSet& other) {
    for (const auto& [key, value] : other.entries_) insert(key, value);
}

std::optional<double> ForecastSet::find(const ForecastKey& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> ForecastSet::models() const {
    std::set<std::string> ids;
    for (const auto& [key, value] : entries_) ids.insert(key.model_id);
    return {ids.begin(), ids.end()};
}

ForecastSet ForecastSet::relabeled(const std::string& model_id) const {
    ForecastSet out;
    for (const auto& [key, value] : entries_) {
        ForecastKey renamed = key;
        renamed.model_id = model_id;
        out.insert(renamed, value);
    }
    return out;
}

std::optional<double> realized_yield(const YieldPanel& panel, const ForecastKey& key) {
    const auto row = panel.row_of(key.target());
    const auto col = panel.column_of(key.maturity);
    if (!row || !col) return std::nullopt;
    return panel.values()(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(*col));
}

std::optional<double> forecast_error(const YieldPanel& panel, const ForecastKey& key, double forecast) {
    const auto realized = realized_yield(panel, key);
    if (!realized) return std::nullopt;
    return *realized - forecast;
}

void write_forecast_set(const ForecastSet& set, std::ostream& out) {
    out << "model_id,origin,target,horizon,maturity,forecast\n";
    for (const auto& [key, value] : set.entries()) {
        out << key.model_id << ',' << key.origin.to_string() << ',' << key.target().to_string() << ','
            << key.horizon << ',' << format_number(key.maturity) << ',' << format_number(value) << '\n';
    }
}

void write_forecast_set(const ForecastSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    write_forecast_set(set, out);
}

ForecastSet read_forecast_set(std::istream& in) {
    ForecastSet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (line_no == 1) {
            if (fields.size() != 6 || fields[0] != "model_id") {
                throw IngestionError("forecast file: unexpected header", line_no, "");
            }
            continue;
        }
        if (fields.size() != 6) throw IngestionError("forecast file: expected 6 fields", line_no, "");
        ForecastKey key;
        key.model_id = fields[0];
        double horizon = 0.0, value = 0.0;
        try {
            key.origin = Month::parse(fields[1]);
        } catch (const std::invalid_argument& e) {
            throw IngestionError(std::string("forecast file: ") + e.what(), line_no, "origin");
        }
        if (!parse_number(fields[3], horizon) || !parse_number(fields[4], key.maturity) ||
            !parse_number(fields[5], value)) {
            throw IngestionError("forecast file: non-numeric field on line " + std::to_string(line_no), line_no, "");
        }
        key.horizon = static_cast<int>(horizon);
        set.insert(key, value);
    }
    return set;
}

ForecastSet load_forecast_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return read_forecast_set(in);
}

}  // namespace robustcurve::core

#include "robustcurve/evaluation.hpp"

#include "robustcurve/core/csv.hpp"
#include "robustcurve/core/log.hpp"
#include "robustcurve/core/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

namespace robustcurve::evaluation {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t horizon_index(const std::vector<int>& horizons, int h) {
    const auto it = std::find(horizons.begin(), horizons.end(), h);
    return static_cast<std::size_t>(it - horizons.begin());
}

}  // namespace

double rmsfe_bps(std::span<const double> errors) {
    if (errors.empty()) throw std::invalid_argument("rmsfe: empty error sample");
    double ss = 0.0;
    for (double e : errors) ss += e * e;
    return 100.0 * std::sqrt(ss / static_cast<double>(errors.size()));
}

RmsfeTable model_rmsfe(const core::ForecastSet& forecasts, const core::YieldPanel& yields, const std::string& model_id,
                       const std::vector<int>& horizons) {
    RmsfeTable table;
    table.id = model_id;
    table.maturities = yields.maturities();
    table.horizons = horizons;
    std::vector<std::vector<std::vector<double>>> errors(
        yields.maturity_count(), std::vector<std::vector<double>>(horizons.size()));
    for (const auto& [key, value] : forecasts.entries()) {
        if (key.model_id != model_id) continue;
        const auto col = yields.column_of(key.maturity);
        const std::size_t h = horizon_index(horizons, key.horizon);
        if (!col || h == horizons.size()) continue;
        if (const auto e = core::forecast_error(yields, key, value)) errors[*col][h].push_back(*e);
    }
    table.bps = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(table.maturities.size()),
                                          static_cast<Eigen::Index>(horizons.size()), kNaN);
    for (std::size_t i = 0; i < errors.size(); ++i) {
        for (std::size_t h = 0; h < horizons.size(); ++h) {
            if (!errors[i][h].empty()) {
                table.bps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(h)) = rmsfe_bps(errors[i][h]);
            }
        }
    }
    return table;
}

SeedSummary summarize_seeds(const std::vector<RmsfeTable>& per_seed) {
    if (per_seed.empty()) throw std::invalid_argument("summarize_seeds: no tables");
    const RmsfeTable& first = per_seed.front();
    SeedSummary summary{first, first, first};
    std::vector<std::uint64_t> seeds;
    for (const auto& table : per_seed) {
        if (table.bps.rows() != first.bps.rows() || table.bps.cols() != first.bps.cols() ||
            table.horizons != first.horizons || table.maturities != first.maturities) {
            throw std::invalid_argument("summarize_seeds: table layouts differ");
        }
        seeds.insert(seeds.end(), table.seeds.begin(), table.seeds.end());
    }
    for (Eigen::Index r = 0; r < first.bps.rows(); ++r) {
        for (Eigen::Index c = 0; c < first.bps.cols(); ++c) {
            double sum = 0.0;
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            bool missing = false;
            for (const auto& table : per_seed) {
                const double v = table.bps(r, c);
                if (std::isnan(v)) {
                    missing = true;
                    break;
                }
                sum += v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            summary.mean.bps(r, c) = missing ? kNaN : sum / static_cast<double>(per_seed.size());
            summary.min.bps(r, c) = missing ? kNaN : lo;
            summary.max.bps(r, c) = missing ? kNaN : hi;
        }
    }
    for (auto* table : {&summary.mean, &summary.min, &summary.max}) table->seeds = seeds;
    return summary;
}

void write_rmsfe(const RmsfeTable& table, std::ostream& out) {
    out << "maturity";
    for (int h : table.horizons) out << ",h" << h;
    out << '\n';
    for (std::size_t i = 0; i < table.maturities.size(); ++i) {
        if (table.bps.row(static_cast<Eigen::Index>(i)).array().isNaN().all()) continue;
        out << core::maturity_label(table.maturities[i]);
        for (std::size_t h = 0; h < table.horizons.size(); ++h) {
            out << ',';
            const double v = table.bps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(h));
            if (!std::isnan(v)) out << core::format_number(v);
        }
        out << '\n';
    }
}

namespace {

struct CellData {
    double maturity = 0.0;
    int horizon = 1;
    std::vector<std::string> models;
    std::vector<core::Month> origins;
    Eigen::MatrixXd forecasts;  // origins x models
    std::vector<double> realized;
};

std::vector<CellData> collect_cells(const core::ForecastSet& forecasts, const core::YieldPanel& yields) {
    // (maturity, horizon) -> model -> origin -> forecast
    std::map<std::pair<double, int>, std::map<std::string, std::map<core::Month, double>>> grouped;
    for (const auto& [key, value] : forecasts.entries()) {
        grouped[{key.maturity, key.horizon}][key.model_id][key.origin] = value;
    }
    std::vector<CellData> cells;
    for (const auto& [pair, by_model] : grouped) {
        CellData cell;
        cell.maturity = pair.first;
        cell.horizon = pair.second;
        std::set<core::Month> origin_set;
        for (const auto& [model, by_origin] : by_model) {
            cell.models.push_back(model);
            for (const auto& entry : by_origin) origin_set.insert(entry.first);
        }
        std::vector<std::vector<double>> rows;
        std::size_t dropped = 0;
        for (const auto& origin : origin_set) {
            std::vector<double> row;
            for (const auto& [model, by_origin] : by_model) {
                const auto it = by_origin.find(origin);
                if (it == by_origin.end()) break;
                row.push_back(it->second);
            }
            const core::ForecastKey probe{cell.models.front(), origin, cell.horizon, cell.maturity};
            const auto realized = core::realized_yield(yields, probe);
            if (row.size() != cell.models.size() || !realized) {
                ++dropped;
                continue;
            }
            cell.origins.push_back(origin);
            cell.realized.push_back(*realized);
            rows.push_back(std::move(row));
        }
        if (dropped > 0) {
            core::log().info("maturity {} h={}: dropped {} origins lacking a forecast or realization",
                             core::maturity_label(cell.maturity), cell.horizon, dropped);
        }
        cell.forecasts.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cell.models.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t m = 0; m < rows[r].size(); ++m) {
                cell.forecasts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m)) = rows[r][m];
            }
        }
        if (!cell.origins.empty()) cells.push_back(std::move(cell));
    }
    return cells;
}

combiner::AfterVariant after_variant(combiner::Scheme scheme) {
    switch (scheme) {
        case combiner::Scheme::after_ewma:
            return combiner::AfterVariant::ewma;
        case combiner::Scheme::after_simplified:
            return combiner::AfterVariant::simplified;
        default:
            return combiner::AfterVariant::rolling;
    }
}

SchemeTrajectory run_scheme(const CellData& cell, combiner::Scheme scheme, const core::ExperimentConfig& cfg) {
    const auto n = static_cast<Eigen::Index>(cell.origins.size());
    const Eigen::Index m = static_cast<Eigen::Index>(cell.models.size());
    SchemeTrajectory out;
    out.scheme = scheme;
    out.maturity = cell.maturity;
    out.horizon = cell.horizon;
    out.models = cell.models;
    out.origins = cell.origins;
    out.weights.resize(n, m);

    const Eigen::VectorXd realized = Eigen::Map<const Eigen::VectorXd>(cell.realized.data(), n);
    const Eigen::MatrixXd errors = (-cell.forecasts).colwise() + realized;

    auto state = combiner::AfterState::initial(m, after_variant(scheme), cfg.after_ewma_decay);
    // Rows [0, known) have targets at or before the current origin.
    Eigen::Index known = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const core::Month origin = cell.origins[static_cast<std::size_t>(i)];
        while (known < i && cell.origins[static_cast<std::size_t>(known)].plus(cell.horizon) <= origin) ++known;

        combiner::WeightVector w = combiner::WeightVector::uniform(m);
        if (known >= cfg.min_obs) {
            if (combiner::is_after(scheme)) {
                const Eigen::Index rows = std::min<Eigen::Index>(known, cfg.after_lookback_L);
                auto [weights, next] = combiner::after_weights(state, errors.middleRows(known - rows, rows));
                state = std::move(next);
                w = std::move(weights);
            } else {
                const Eigen::Index rows = std::min<Eigen::Index>(known, cfg.combo_window_W);
                w = combiner::scheme_weights(scheme, errors.middleRows(known - rows, rows), cfg);
            }
        }
        out.weights.row(i) = w.values().transpose();
        const double combined = combiner::combine(w, cell.forecasts.row(i).transpose());
        out.forecast.push_back(combined);
        out.realized.push_back(cell.realized[static_cast<std::size_t>(i)]);
        out.error.push_back(cell.realized[static_cast<std::size_t>(i)] - combined);
    }
    return out;
}

}  // namespace

BacktestResult backtest(const core::ForecastSet& forecasts, const core::YieldPanel& yields,
                        const std::vector<combiner::Scheme>& schemes, const core::ExperimentConfig& cfg, int jobs) {
    cfg.validate();
    const std::vector<CellData> cells = collect_cells(forecasts, yields);
    std::vector<std::vector<SchemeTrajectory>> per_cell(cells.size());
    core::parallel_for(cells.size(), jobs, [&](std::size_t c) {
        for (auto scheme : schemes) per_cell[c].push_back(run_scheme(cells[c], scheme, cfg));
    });

    BacktestResult result;
    for (std::size_t s = 0; s < schemes.size(); ++s) {
        RmsfeTable table;
        table.id = combiner::scheme_id(schemes[s]);
        table.maturities = yields.maturities();
        table.horizons = cfg.horizons;
        table.bps = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(table.maturities.size()),
                                              static_cast<Eigen::Index>(table.horizons.size()), kNaN);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            SchemeTrajectory& traj = per_cell[c][s];
            const auto col = yields.column_of(traj.maturity);
            const std::size_t h = horizon_index(table.horizons, traj.horizon);
            if (col && h < table.horizons.size() && !traj.error.empty()) {
                table.bps(static_cast<Eigen::Index>(*col), static_cast<Eigen::Index>(h)) = rmsfe_bps(traj.error);
            }
            result.trajectories.push_back(std::move(traj));
        }
        result.scheme_tables.push_back(std::move(table));
    }
    return result;
}

void write_weights(const SchemeTrajectory& trajectory, std::ostream& out) {
    out << "date,scheme,model_id,weight\n";
    const std::string id = combiner::scheme_id(trajectory.scheme);
    for (std::size_t i = 0; i < trajectory.origins.size(); ++i) {
        const std::string date = trajectory.origins[i].to_string();
        for (std::size_t m = 0; m < trajectory.models.size(); ++m) {
            out << date << ',' << id << ',' << trajectory.models[m] << ','
                << core::format_number(trajectory.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)))
                << '\n';
        }
    }
}

void write_errors(const SchemeTrajectory& trajectory, std::ostream& out) {
    out << "origin,target,forecast,realized,error\n";
    for (std::size_t i = 0; i < trajectory.origins.size(); ++i) {
        out << trajectory.origins[i].to_string() << ',' << trajectory.origins[i].plus(trajectory.horizon).to_string()
            << ',' << core::format_number(trajectory.forecast[i]) << ',' << core::format_number(trajectory.realized[i])
            << ',' << core::format_number(trajectory.error[i]) << '\n';
    }
}

std::string maturity_tag(double maturity) { return core::format_number(maturity); }

}  // namespace robustcurve::evaluation

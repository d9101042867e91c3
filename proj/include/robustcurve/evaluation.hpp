#pragma once

#include "robustcurve/combiner.hpp"
#include "robustcurve/core/config.hpp"
#include "robustcurve/core/forecast_set.hpp"
#include "robustcurve/core/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace robustcurve::evaluation {

/// 100 * sqrt(mean(e^2)) for errors in percent. Throws on an empty sample.
double rmsfe_bps(std::span<const double> errors);

/// RMSFE in basis points, one row per maturity and one column per horizon.
/// Cells without evaluation points hold NaN.
struct RmsfeTable {
    std::string id;
    std::vector<double> maturities;
    std::vector<int> horizons;
    Eigen::MatrixXd bps;
    std::vector<std::uint64_t> seeds;
};

/// Per-model table from realized forecast errors.
RmsfeTable model_rmsfe(const core::ForecastSet& forecasts, const core::YieldPanel& yields, const std::string& model_id,
                       const std::vector<int>& horizons);

/// Cell-wise mean, min and max across per-seed tables with identical layout.
struct SeedSummary {
    RmsfeTable mean;
    RmsfeTable min;
    RmsfeTable max;
};

SeedSummary summarize_seeds(const std::vector<RmsfeTable>& per_seed);

/// `maturity,h1,h3,...`; empty cells for NaN. Maturities without any value
/// are omitted.
void write_rmsfe(const RmsfeTable& table, std::ostream& out);

/// Combined forecasts of one scheme for one (maturity, horizon) pair.
struct SchemeTrajectory {
    combiner::Scheme scheme = combiner::Scheme::ew;
    double maturity = 0.0;
    int horizon = 1;
    std::vector<std::string> models;
    std::vector<core::Month> origins;
    Eigen::MatrixXd weights;  // origins x models
    std::vector<double> forecast;
    std::vector<double> realized;
    std::vector<double> error;  // realized - forecast
};

struct BacktestResult {
    std::vector<SchemeTrajectory> trajectories;  // by scheme, then maturity, then horizon
    std::vector<RmsfeTable> scheme_tables;       // one per scheme, in input order
};

/// Runs every scheme on every (maturity, horizon) pair present in `forecasts`.
/// At origin t the weights use only errors whose target is at or before t,
/// limited to the latest combo_window_W of them; uniform weights are used
/// until min_obs such errors exist. Origins where any participating model
/// lacks a forecast are skipped. Pairs run concurrently on `jobs` threads.
BacktestResult backtest(const core::ForecastSet& forecasts, const core::YieldPanel& yields,
                        const std::vector<combiner::Scheme>& schemes, const core::ExperimentConfig& cfg, int jobs = 1);

/// `date,scheme,model_id,weight`
void write_weights(const SchemeTrajectory& trajectory, std::ostream& out);
/// `origin,target,forecast,realized,error`
void write_errors(const SchemeTrajectory& trajectory, std::ostream& out);

/// File-name fragment for a maturity: 3 -> "3", 1.5 -> "1.5".
std::string maturity_tag(double maturity);

}  // namespace robustcurve::evaluation

#pragma once

#include "robustcurve/core/config.hpp"
#include "robustcurve/core/forecast_set.hpp"
#include "robustcurve/core/panel.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace robustcurve::fadns {

enum class AdfDecision { retain, difference };

/// Outcome of one augmented Dickey-Fuller test: constant, one lagged
/// difference, no trend.
struct AdfResult {
    AdfDecision decision = AdfDecision::difference;
    double statistic = 0.0;       // t-ratio on the lagged level
    double critical_value = 0.0;  // at `level`
    double level = 0.10;
    bool degenerate = false;      // constant or perfectly collinear series
};

/// Dickey-Fuller critical value for the constant-only case, interpolated in
/// 1/n between the tabulated sample sizes. `level` is 0.01, 0.05 or 0.10.
double adf_critical_value(std::size_t n, double level);

/// Requires at least 15 observations.
AdfResult adf_test(std::span<const double> series, double level = 0.10);

inline AdfDecision adf_decide(std::span<const double> series, double level = 0.10) {
    return adf_test(series, level).decision;
}

/// Per-window decisions, one per indicator column used in that window.
struct StationarityReport {
    std::vector<std::size_t> columns;
    std::vector<AdfResult> results;
};

/// Leading principal axes of a standardized block. Columns of
/// `eigenvectors` are unit norm; eigenvalues are nonincreasing.
struct PcaBasis {
    Eigen::MatrixXd eigenvectors;  // p x k
    Eigen::VectorXd eigenvalues;   // k
};

struct PcaResult {
    PcaBasis basis;
    Eigen::VectorXd components;  // projection of the last block row
    Eigen::MatrixXd scores;      // projection of every block row, w x k
};

/// Standardizes each column in place to mean 0 and sample sd 1 (n-1
/// divisor). Returns false for a column with zero spread, which is left
/// centered but unscaled.
std::vector<bool> standardize_columns(Eigen::MatrixXd& block);

/// Flips column j iff its dot product with reference column j is negative.
/// Without a reference, each column's largest-magnitude entry is made
/// positive. Returns the applied signs (+1/-1).
Eigen::VectorXd align_signs(Eigen::MatrixXd& vectors, const Eigen::MatrixXd* reference);

/// Unaligned eigen-decomposition of the block's sample covariance, sorted by
/// decreasing eigenvalue (stable for ties). Throws if k exceeds the rank.
PcaResult principal_components(const Eigen::MatrixXd& block, int k);

/// principal_components followed by align_signs against `reference`.
PcaResult rolling_pca(const Eigen::MatrixXd& block, int k, const PcaBasis* reference = nullptr);

/// Indicator information for one forecast origin: PCA scores for every state
/// in the estimation window, built from indicator rows strictly before the
/// origin month.
struct WindowFactors {
    Eigen::MatrixXd scores;   // w x k; row i pairs with yield state t-w+1+i
    PcaBasis basis;           // eigenvectors embedded in full indicator space
    StationarityReport report;
    Eigen::MatrixXd standardized;  // w x (used columns), after transform
};

/// Builds the lagged block {Z_{t-w}, ..., Z_{t-1}} for an origin dated
/// `origin`, applies ADF screening, differencing and standardization, and
/// extracts k unaligned components. Series with any missing value in the
/// window are excluded.
WindowFactors build_window_factors(const core::IndicatorPanel& indicators, const core::Month& origin, int window,
                                   int k, double adf_level);

/// Rolling factor-augmented forecasts under model id "FADNS-<k>". k = 0
/// reproduces the DNS forecasts. Origins whose window cannot be built or
/// fitted are skipped and logged.
core::ForecastSet fadns_rolling_forecast(const core::YieldPanel& yields, const core::IndicatorPanel& indicators, int k,
                                         const core::ExperimentConfig& cfg, int jobs = 1);

}  // namespace robustcurve::fadns

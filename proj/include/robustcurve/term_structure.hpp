#pragma once

#include "robustcurve/core/config.hpp"
#include "robustcurve/core/forecast_set.hpp"
#include "robustcurve/core/panel.hpp"

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <vector>

namespace robustcurve::term_structure {

/// Raised when a least-squares design is rank deficient.
class SingularFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nelson-Siegel factor loadings at one maturity. The level loading is 1.
struct NsLoadings {
    double level = 1.0;
    double slope = 1.0;
    double curvature = 0.0;
};

NsLoadings ns_loadings(double tau_months, double lambda);

/// Fitted yield for factors (level, slope, curvature).
double ns_yield(const Eigen::Vector3d& beta, double tau_months, double lambda);

/// N x 3 measurement matrix.
Eigen::MatrixXd ns_design(std::span<const double> maturities, double lambda);

/// Cross-sectional least-squares factors for one curve.
Eigen::Vector3d fit_cross_section(const Eigen::VectorXd& yields, std::span<const double> maturities, double lambda);

/// Level, slope and curvature per date.
struct FactorPath {
    std::vector<core::Month> dates;
    Eigen::MatrixXd betas;  // T x 3
};

FactorPath extract_factor_path(const core::YieldPanel& panel, double lambda);

/// x_{t+1} = c + phi x_t
struct Var1Model {
    Eigen::VectorXd c;
    Eigen::MatrixXd phi;

    [[nodiscard]] Eigen::Index dimension() const { return c.size(); }
};

/// Equation-by-equation OLS of x_{t+1} on (1, x_t); rows of `states` are
/// consecutive observations.
Var1Model fit_var1(const Eigen::MatrixXd& states);

/// h-step forecast sum_{j<h} phi^j c + phi^h x, evaluated by iterating the
/// recursion h times.
Eigen::VectorXd var1_forecast(const Var1Model& model, const Eigen::VectorXd& state, int h);

/// First and last forecast origin (row indices) of a rolling study. Empty
/// when the panel is too short.
struct OriginRange {
    std::size_t first = 0;
    std::size_t last = 0;
    bool empty = true;
};

OriginRange rolling_origins(std::size_t periods, int window, int max_horizon);

/// Rolling Diebold-Li forecasts for every origin, horizon and maturity, under
/// model id "DNS". Origins whose window cannot be fitted are skipped and
/// logged.
core::ForecastSet dns_rolling_forecast(const core::YieldPanel& panel, const core::ExperimentConfig& cfg,
                                       int jobs = 1);

}  // namespace robustcurve::term_structure

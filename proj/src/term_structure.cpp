#include "robustcurve/term_structure.hpp"

#include "robustcurve/core/log.hpp"
#include "robustcurve/core/parallel.hpp"

#include <cmath>
#include <optional>

namespace robustcurve::term_structure {

NsLoadings ns_loadings(double tau_months, double lambda) {
    if (!(tau_months > 0.0) || !(lambda > 0.0)) {
        throw std::invalid_argument("ns_loadings requires tau > 0 and lambda > 0");
    }
    const double x = lambda * tau_months;
    NsLoadings out;
    if (x < 1e-4) {
        // Series expansions; the closed forms cancel catastrophically here.
        out.slope = 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
        out.curvature = x / 2.0 - x * x / 3.0 + x * x * x / 8.0;
    } else {
        out.slope = -std::expm1(-x) / x;
        out.curvature = out.slope - std::exp(-x);
    }
    return out;
}

double ns_yield(const Eigen::Vector3d& beta, double tau_months, double lambda) {
    const auto l = ns_loadings(tau_months, lambda);
    return beta(0) * l.level + beta(1) * l.slope + beta(2) * l.curvature;
}

Eigen::MatrixXd ns_design(std::span<const double> maturities, double lambda) {
    Eigen::MatrixXd design(static_cast<Eigen::Index>(maturities.size()), 3);
    for (std::size_t j = 0; j < maturities.size(); ++j) {
        const auto l = ns_loadings(maturities[j], lambda);
        const auto row = static_cast<Eigen::Index>(j);
        design(row, 0) = l.level;
        design(row, 1) = l.slope;
        design(row, 2) = l.curvature;
    }
    return design;
}

Eigen::Vector3d fit_cross_section(const Eigen::VectorXd& yields, std::span<const double> maturities, double lambda) {
    if (static_cast<std::size_t>(yields.size()) != maturities.size()) {
        throw std::invalid_argument("fit_cross_section: yields and maturities differ in length");
    }
    if (maturities.size() < 3) {
        throw SingularFitError("fit_cross_section: need at least 3 maturities, got " + std::to_string(maturities.size()));
    }
    const Eigen::MatrixXd design = ns_design(maturities, lambda);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 3) {
        throw SingularFitError("fit_cross_section: rank-deficient loading matrix (duplicate maturities?)");
    }
    return qr.solve(yields);
}

FactorPath extract_factor_path(const core::YieldPanel& panel, double lambda) {
    FactorPath path;
    path.dates = panel.dates();
    path.betas.resize(static_cast<Eigen::Index>(panel.periods()), 3);
    const Eigen::MatrixXd design = ns_design(panel.maturities(), lambda);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (panel.maturity_count() < 3 || qr.rank() < 3) {
        throw SingularFitError("extract_factor_path: rank-deficient loading matrix");
    }
    for (Eigen::Index t = 0; t < path.betas.rows(); ++t) {
        const Eigen::VectorXd curve = panel.values().row(t).transpose();
        path.betas.row(t) = qr.solve(curve).transpose();
    }
    return path;
}

Var1Model fit_var1(const Eigen::MatrixXd& states) {
    const Eigen::Index rows = states.rows();
    const Eigen::Index d = states.cols();
    if (d < 1) throw std::invalid_argument("fit_var1: empty state dimension");
    if (rows < d + 2) {
        throw std::invalid_argument("fit_var1: need at least d+2 observations, got " + std::to_string(rows));
    }
    Eigen::MatrixXd regressors(rows - 1, d + 1);
    regressors.col(0).setOnes();
    regressors.rightCols(d) = states.topRows(rows - 1);
    const Eigen::MatrixXd targets = states.bottomRows(rows - 1);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(regressors);
    if (qr.rank() < d + 1) {
        throw SingularFitError("fit_var1: singular regressor moment matrix (rank " + std::to_string(qr.rank()) +
                               " < " + std::to_string(d + 1) + ")");
    }
    const Eigen::MatrixXd coef = qr.solve(targets);  // (d+1) x d
    Var1Model model;
    model.c = coef.row(0).transpose();
    model.phi = coef.bottomRows(d).transpose();
    return model;
}

Eigen::VectorXd var1_forecast(const Var1Model& model, const Eigen::VectorXd& state, int h) {
    if (h < 1) throw std::invalid_argument("var1_forecast: horizon must be >= 1");
    if (model.phi.rows() != model.c.size() || model.phi.cols() != model.c.size() || state.size() != model.c.size()) {
        throw std::invalid_argument("var1_forecast: dimension mismatch");
    }
    Eigen::VectorXd x = state;
    for (int step = 0; step < h; ++step) {
        x = model.c + model.phi * x;
    }
    return x;
}

OriginRange rolling_origins(std::size_t periods, int window, int max_horizon) {
    OriginRange range;
    const auto w = static_cast<std::size_t>(window);
    const auto h = static_cast<std::size_t>(max_horizon);
    if (window < 1 || max_horizon < 0 || periods < w + h) return range;
    range.first = w - 1;
    range.last = periods - 1 - h;
    range.empty = range.last < range.first;
    return range;
}

core::ForecastSet dns_rolling_forecast(const core::YieldPanel& panel, const core::ExperimentConfig& cfg, int jobs) {
    cfg.validate();
    const auto range = rolling_origins(panel.periods(), cfg.window_w, cfg.max_horizon());
    if (range.empty) {
        throw std::invalid_argument("dns_rolling_forecast: panel has " + std::to_string(panel.periods()) +
                                    " periods, need at least window + max horizon = " +
                                    std::to_string(cfg.window_w + cfg.max_horizon()));
    }
    // Cross-sectional factors depend only on their own date, so one pass
    // serves every window.
    const FactorPath path = extract_factor_path(panel, cfg.lambda_decay);
    const auto& maturities = panel.maturities();
    const std::size_t n_origins = range.last - range.first + 1;
    std::vector<std::optional<core::ForecastSet>> per_origin(n_origins);

    core::parallel_for(n_origins, jobs, [&](std::size_t i) {
        const std::size_t t = range.first + i;
        const auto start = static_cast<Eigen::Index>(t + 1 - static_cast<std::size_t>(cfg.window_w));
        const Eigen::MatrixXd window = path.betas.middleRows(start, cfg.window_w);
        Var1Model model;
        try {
            model = fit_var1(window);
        } catch (const std::exception& e) {
            core::log().warn("DNS origin {} skipped: {}", panel.dates()[t].to_string(), e.what());
            return;
        }
        const Eigen::VectorXd state = path.betas.row(static_cast<Eigen::Index>(t)).transpose();
        core::ForecastSet out;
        for (int h : cfg.horizons) {
            const Eigen::Vector3d beta = var1_forecast(model, state, h);
            for (double tau : maturities) {
                out.insert({"DNS", panel.dates()[t], h, tau}, ns_yield(beta, tau, cfg.lambda_decay));
            }
        }
        per_origin[i] = std::move(out);
    });

    core::ForecastSet all;
    for (auto& part : per_origin) {
        if (part) all.merge(*part);
    }
    return all;
}

}  // namespace robustcurve::term_structure

#include "robustcurve/core/synthetic.hpp"

#include "robustcurve/core/rng.hpp"
#include "robustcurve/term_structure.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>
#include <string>

namespace robustcurve::core {

double spectral_radius(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

SyntheticWorld generate_synthetic_world(const SyntheticSpec& spec) {
    if (spec.periods < 2) throw std::invalid_argument("synthetic world needs at least 2 periods");
    if (spec.indicators < 1) throw std::invalid_argument("synthetic world needs at least 1 indicator");
    if (spec.random_walk_indicators < 0 || spec.random_walk_indicators > spec.indicators) {
        throw std::invalid_argument("random_walk_indicators out of range");
    }
    if (spec.noise_bps < 0.0) throw std::invalid_argument("noise_bps must be >= 0");
    const double radius = spectral_radius(spec.var.phi);
    if (!(radius < 1.0)) {
        throw std::invalid_argument("unstable factor VAR: spectral radius " + std::to_string(radius) + " >= 1");
    }

    Rng rng(spec.seed);
    const auto T = static_cast<Eigen::Index>(spec.periods);
    const auto N = static_cast<Eigen::Index>(spec.maturities.size());
    const auto p = static_cast<Eigen::Index>(spec.indicators);

    const Eigen::Vector3d mean = (Eigen::Matrix3d::Identity() - spec.var.phi).lu().solve(spec.var.c);
    Eigen::MatrixXd betas(T, 3);
    betas.row(0) = mean.transpose();
    for (Eigen::Index t = 1; t < T; ++t) {
        Eigen::Vector3d next = spec.var.c + spec.var.phi * betas.row(t - 1).transpose();
        for (int j = 0; j < 3; ++j) next(j) += spec.var.shock_sd(j) * rng.normal();
        betas.row(t) = next.transpose();
    }

    const Eigen::MatrixXd design = term_structure::ns_design(spec.maturities, spec.lambda);
    Eigen::MatrixXd yields = betas * design.transpose();
    if (spec.noise_bps > 0.0) {
        const double sd = spec.noise_bps / 100.0;
        for (Eigen::Index t = 0; t < T; ++t) {
            for (Eigen::Index j = 0; j < N; ++j) yields(t, j) += sd * rng.normal();
        }
    }

    Eigen::MatrixXd loadings(p, 3);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (int j = 0; j < 3; ++j) loadings(i, j) = spec.indicator_loading * rng.normal();
    }
    Eigen::MatrixXd z(T, p);
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::Vector3d centered = betas.row(t).transpose() - mean;
        for (Eigen::Index i = 0; i < p; ++i) z(t, i) = loadings.row(i).dot(centered) + rng.normal();
    }
    for (Eigen::Index i = p - spec.random_walk_indicators; i < p; ++i) {
        for (Eigen::Index t = 1; t < T; ++t) z(t, i) += z(t - 1, i);
    }

    std::vector<Month> dates;
    dates.reserve(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) dates.push_back(spec.start.plus(static_cast<int>(t)));
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < p; ++i) names.push_back("Z" + std::to_string(i + 1));

    return SyntheticWorld{YieldPanel(dates, spec.maturities, std::move(yields)),
                          IndicatorPanel(dates, std::move(names), std::move(z)), std::move(betas)};
}

}  // namespace robustcurve::core

#pragma once

#include "robustcurve/core/month.hpp"
#include "robustcurve/core/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace robustcurve::core {

/// Factor dynamics beta_{t+1} = c + phi beta_t + shock, shock ~ N(0, diag(shock_sd^2)).
struct FactorVarParams {
    Eigen::Vector3d c{0.3, -0.1, 0.05};
    Eigen::Matrix3d phi = (Eigen::Matrix3d() << 0.95, 0.0, 0.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.8).finished();
    Eigen::Vector3d shock_sd{0.1, 0.1, 0.2};
};

struct SyntheticSpec {
    std::uint64_t seed = 1;
    int periods = 200;
    std::vector<double> maturities{3, 6, 12, 24, 36, 48, 60, 72, 84, 96, 108, 120, 180, 240, 360};
    double noise_bps = 5.0;  // measurement-noise sd on each yield
    double lambda = 0.0609;
    FactorVarParams var;
    int indicators = 8;
    /// Scale of the factor loading of each indicator; 0 gives pure noise.
    double indicator_loading = 1.0;
    /// The last `random_walk_indicators` series are cumulated (unit root).
    int random_walk_indicators = 0;
    Month start{2006, 1};
};

struct SyntheticWorld {
    YieldPanel yields;
    IndicatorPanel indicators;
    Eigen::MatrixXd betas;  // periods x 3, the simulated factor path
};

/// Spectral radius of a square matrix.
double spectral_radius(const Eigen::MatrixXd& m);

/// Simulates factors from the VAR, yields from the Nelson-Siegel measurement
/// equation plus Gaussian noise, and indicators loaded on the factors. The
/// path starts at the VAR's unconditional mean. Deterministic per seed.
SyntheticWorld generate_synthetic_world(const SyntheticSpec& spec);

}  // namespace robustcurve::core

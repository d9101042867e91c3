#pragma once

#include "robustcurve/core/config.hpp"

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace robustcurve::combiner {

/// Rolling forecast errors (realized minus forecast, percent): rows are dates
/// in ascending order, columns are models.
using ErrorMatrix = Eigen::MatrixXd;

/// Point of the probability simplex: nonnegative entries summing to one
/// (within 1e-9). Construction validates.
class WeightVector {
public:
    explicit WeightVector(Eigen::VectorXd weights);

    static WeightVector uniform(Eigen::Index m);
    /// Divides by the sum after clipping negatives to zero; a zero or
    /// non-finite sum yields uniform weights.
    static WeightVector normalized(Eigen::VectorXd raw);

    [[nodiscard]] const Eigen::VectorXd& values() const { return w_; }
    [[nodiscard]] Eigen::Index size() const { return w_.size(); }
    double operator[](Eigen::Index i) const { return w_(i); }

private:
    Eigen::VectorXd w_;
};

enum class Scheme {
    ew,
    rank,
    rmse,
    mse,
    ols,
    mv,
    stack,
    jma,
    lad,
    after_rolling,
    after_ewma,
    after_simplified,
    dro_es,
    drmv,
    dro_mix,
};

/// Identifiers used on the command line and in output file names.
std::string scheme_id(Scheme scheme);
/// Throws std::invalid_argument listing the valid ids.
Scheme parse_scheme(const std::string& id);
const std::vector<Scheme>& all_schemes();
std::string valid_scheme_list();
bool is_after(Scheme scheme);

/// Raised by the embedded solvers when they stop before reaching optimality.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mean of all sample points at or below the empirical alpha-quantile
/// q = inf{x : (1/n) #{x_j <= x} >= alpha}.
double expected_shortfall(std::span<const double> sample, double alpha);

/// Euclidean projection onto the probability simplex.
WeightVector project_to_simplex(const Eigen::VectorXd& v);

/// Root mean squared error of each column.
Eigen::VectorXd column_rmse(const ErrorMatrix& errors);

/// Inverse-RMSE weights; models with RMSE at or below 1e-8 share the weight
/// equally when any exist.
WeightVector inverse_rmse_weights(const ErrorMatrix& errors);

/// EW, RANK, RMSE, MSE and OLS.
WeightVector static_weights(Scheme scheme, const ErrorMatrix& errors, const core::ExperimentConfig& cfg);

/// MV, STACK, JMA and LAD. Solver failures fall back to inverse-RMSE weights.
WeightVector variance_weights(Scheme scheme, const ErrorMatrix& errors, const core::ExperimentConfig& cfg);

/// DRO-ES, DRMV and DRO-MIX.
WeightVector dro_weights(Scheme scheme, const ErrorMatrix& errors, const core::ExperimentConfig& cfg);

/// (Sigma + ridge I)^+ 1 / (1' (Sigma + ridge I)^+ 1) on the demeaned sample
/// covariance, clipped at zero and renormalized.
WeightVector ridge_min_variance_weights(const ErrorMatrix& errors, double ridge);

/// argmin over the simplex of w' S w for symmetric positive semidefinite S.
/// Returns uniform weights when S is zero. Throws std::invalid_argument for
/// asymmetric S and SolverError on nonconvergence.
WeightVector solve_simplex_qp(const Eigen::MatrixXd& s);

/// Exact optimum of min (1/W) 1'u + (phi/W) 1'w subject to -Ew <= u, Ew <= u,
/// w >= 0, u >= 0, 1'w = 1. Uniform weights when E is zero. Throws
/// SolverError if the simplex method hits its iteration cap.
WeightVector solve_lad_lp(const ErrorMatrix& errors, double phi);

/// Objective of solve_lad_lp at w: mean |E w| + phi/W * 1'w.
double lad_objective(const ErrorMatrix& errors, const Eigen::VectorXd& w, double phi);

enum class AfterVariant { rolling, ewma, simplified };

/// Carried state of one AFTER weight stream.
struct AfterState {
    Eigen::VectorXd weights;    // previous weights
    Eigen::VectorXd variances;  // last variance estimates, floored at 1e-6
    AfterVariant variant = AfterVariant::rolling;
    double decay = 0.94;        // EWMA decay

    static AfterState initial(Eigen::Index models, AfterVariant variant, double decay = 0.94);
};

inline constexpr double kAfterVarianceFloor = 1e-6;

/// One multiplicative update from the errors in the lookback window:
/// w_k <- w_k v_k^{-1/2} exp(-1/2 sum_j e_jk^2 / v_k), renormalized (the
/// simplified variant drops v). Computed in log space; a weight that reaches
/// zero stays zero.
std::pair<WeightVector, AfterState> after_weights(const AfterState& state, const ErrorMatrix& recent);

/// Weights for any non-AFTER scheme. Requires at least cfg.min_obs rows.
WeightVector scheme_weights(Scheme scheme, const ErrorMatrix& errors, const core::ExperimentConfig& cfg);

/// Weighted forecast sum_m w_m f_m.
double combine(const WeightVector& weights, const Eigen::VectorXd& forecasts);

}  // namespace robustcurve::combiner

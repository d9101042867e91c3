#pragma once

#include "robustcurve/core/config.hpp"
#include "robustcurve/core/forecast_set.hpp"
#include "robustcurve/core/panel.hpp"
#include "robustcurve/core/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace robustcurve::forest {

using core::FeatureSubsample;

/// Per-column affine map onto [0, 1] fitted on a training sample. Constant
/// columns map to 0 and invert to their value.
class MinMaxScaler {
public:
    MinMaxScaler() = default;
    explicit MinMaxScaler(const Eigen::MatrixXd& sample);

    [[nodiscard]] Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
    [[nodiscard]] Eigen::VectorXd transform_row(const Eigen::VectorXd& row) const;
    [[nodiscard]] double transform_value(double v, Eigen::Index column = 0) const;
    [[nodiscard]] double inverse_value(double v, Eigen::Index column = 0) const;

    [[nodiscard]] const Eigen::VectorXd& min() const { return min_; }
    [[nodiscard]] const Eigen::VectorXd& max() const { return max_; }

private:
    Eigen::VectorXd min_;
    Eigen::VectorXd max_;
};

struct RfHyperParams {
    int n_trees = 100;
    int min_leaf = 1;
    std::optional<int> max_depth;  // none = grow until leaves are pure or too small
    FeatureSubsample subsample = FeatureSubsample::all;
    bool bootstrap = true;

    bool operator==(const RfHyperParams&) const = default;
};

/// Number of features drawn at each node out of d.
int candidate_feature_count(FeatureSubsample rule, int d);

/// Node of a regression tree; feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;  // rows with x[feature] <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;      // mean of training targets reaching the node
    int samples = 0;

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

/// CART regression tree stored in preorder.
class Tree {
public:
    [[nodiscard]] double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// Index of the leaf reached by x.
    [[nodiscard]] int leaf_of(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    [[nodiscard]] const std::vector<TreeNode>& nodes() const { return nodes_; }
    [[nodiscard]] std::size_t leaf_count() const;
    [[nodiscard]] int depth() const;

private:
    friend class TreeBuilder;
    std::vector<TreeNode> nodes_;
};

/// Best axis-aligned split of the rows `rows` over `features`.
struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity_decrease = 0.0;  // node MSE minus weighted child MSE
    double sse_decrease = 0.0;       // SSE(T) - SSE(T_L) - SSE(T_R)
    int left_count = 0;
};

/// Scans midpoints between consecutive distinct values of each feature (in
/// ascending feature order) and keeps the largest SSE decrease; ties go to
/// the lower feature index, then the smaller threshold. Both children must
/// hold at least `min_leaf` rows. nullopt when no split decreases the SSE.
std::optional<Split> find_best_split(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const int> rows,
                                     std::span<const int> features, int min_leaf);

/// Grows one tree on the rows `rows` (duplicates allowed, as produced by a
/// bootstrap draw). Candidate features are drawn at each node from `rng`.
Tree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const int> rows, const RfHyperParams& params,
              core::Rng& rng);
/// Grows one tree on all rows.
Tree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y, const RfHyperParams& params, core::Rng& rng);

/// Trees fitted on already-normalized data.
struct TreeEnsemble {
    std::vector<Tree> trees;

    [[nodiscard]] double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Tree i draws its bootstrap sample and feature subsets from a stream
/// derived from (seed, i), so results do not depend on fitting order.
TreeEnsemble fit_ensemble(const Eigen::MatrixXd& x, std::span<const double> y, const RfHyperParams& params,
                          std::uint64_t seed);

/// Random forest with the min-max scalers of its training sample.
struct Forest {
    TreeEnsemble ensemble;
    MinMaxScaler scaler_x;
    MinMaxScaler scaler_y;
    std::uint64_t seed = 0;

    /// Prediction on the original scale for an unscaled feature vector.
    [[nodiscard]] double predict(const Eigen::VectorXd& raw_x) const;
};

/// Fits scalers on (x, y), normalizes, and grows the ensemble.
Forest fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const RfHyperParams& params, std::uint64_t seed);

/// One node per line in preorder: `split <feature> <threshold> <samples>` or
/// `leaf <value> <samples>`, each tree introduced by `tree <index>`.
void write_forest(const Forest& forest, std::ostream& out);

struct SearchSpace {
    std::vector<int> n_trees;
    std::vector<int> min_leaf;
    std::vector<std::optional<int>> max_depth;
    std::vector<FeatureSubsample> subsample;
    std::vector<bool> bootstrap;

    [[nodiscard]] std::size_t size() const;
    /// Configuration at mixed-radix position `index` (< size()).
    [[nodiscard]] RfHyperParams at(std::size_t index) const;

    static SearchSpace from_settings(const core::RfSettings& settings);
};

/// Mean squared error of K contiguous-block folds, pooled over all held-out
/// rows. Every fold fit uses `seed`.
double cv_mse(const Eigen::MatrixXd& x, std::span<const double> y, const RfHyperParams& params, int n_folds,
              std::uint64_t seed);

/// Draws min(n_candidates, |space|) distinct configurations uniformly, scores
/// each by cv_mse, and returns the first minimizer in draw order.
RfHyperParams cv_random_search(const Eigen::MatrixXd& x, std::span<const double> y, const SearchSpace& space,
                               int n_candidates, int n_folds, core::Rng& rng);

/// Predictor vector for origin row t and one maturity column: indicators at
/// lags 1..lags (lag-major, all series per lag) followed by the yield at lags
/// 0..lags-1. Missing indicator values come back as NaN.
Eigen::VectorXd build_features(const core::YieldPanel& yields, std::size_t maturity_column,
                               const core::IndicatorPanel& indicators, std::size_t t, int lags = 60);

/// Direct h-step forecasts for maturity `tau` under model id "RF". The
/// training sample at origin t pairs W_s with y_{s+h} for the train_rows
/// latest s with s + h <= t.
core::ForecastSet rf_rolling_forecast(const core::YieldPanel& yields, const core::IndicatorPanel& indicators, double tau,
                                      const core::ExperimentConfig& cfg, std::uint64_t seed, int jobs = 1);

/// One forecast set per entry of cfg.seeds.
std::vector<core::ForecastSet> rf_rolling_forecast_seeds(const core::YieldPanel& yields,
                                                         const core::IndicatorPanel& indicators, double tau,
                                                         const core::ExperimentConfig& cfg, int jobs = 1);

}  // namespace robustcurve::forest

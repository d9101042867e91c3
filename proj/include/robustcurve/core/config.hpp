#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace robustcurve::core {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class FeatureSubsample { all, sqrt, one_third };

std::string to_string(FeatureSubsample rule);
FeatureSubsample parse_feature_subsample(const std::string& text);

/// Random-forest search space and window geometry. A max_depth of 0 means
/// unlimited.
struct RfSettings {
    int lags = 60;        // indicator lags 1..lags, yield lags 0..lags-1
    int train_rows = 60;  // rows in each rolling training sample
    int n_candidates = 10;
    int n_folds = 3;
    std::vector<int> n_trees{100, 200, 300};
    std::vector<int> min_leaf{1, 2, 5};
    std::vector<int> max_depth{0, 10, 20};
    std::vector<FeatureSubsample> subsample{FeatureSubsample::sqrt, FeatureSubsample::one_third, FeatureSubsample::all};
    std::vector<bool> bootstrap{true, false};
};

struct ExperimentConfig {
    int window_w = 60;
    int combo_window_W = 24;
    int after_lookback_L = 20;
    int min_obs = 5;
    std::vector<int> horizons{1, 3, 6, 9, 12};
    double lambda_decay = 0.0609;
    double es_alpha = 0.10;
    double eta = 5.0;
    double lambda_mix = 0.5;
    double tau_ridge = 0.05;
    double phi_lad = 0.02;
    double mv_ridge = 1e-6;
    double ols_fraction = 0.3;
    double after_ewma_decay = 0.94;
    int pca_k_max = 10;
    double adf_level = 0.10;
    std::vector<std::uint64_t> seeds{1};
    double pelt_penalty = 10.0;
    RfSettings rf;

    [[nodiscard]] int max_horizon() const;

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;

    /// Sets one field from its textual form; throws ConfigError on unknown
    /// keys or malformed values.
    void set(const std::string& key, const std::string& value);

    /// `key = value` lines; '#' starts a comment.
    static ExperimentConfig parse(std::istream& in);
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Canonical key-value rendering; parse(to_text()) reproduces the config.
    [[nodiscard]] std::string to_text() const;
};

std::vector<int> parse_int_list(const std::string& text);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace robustcurve::core

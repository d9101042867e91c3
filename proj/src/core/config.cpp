#include "robustcurve/core/config.hpp"

#include "robustcurve/core/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace robustcurve::core {

std::string to_string(FeatureSubsample rule) {
    switch (rule) {
        case FeatureSubsample::all: return "all";
        case FeatureSubsample::sqrt: return "sqrt";
        case FeatureSubsample::one_third: return "one-third";
    }
    return "all";
}

FeatureSubsample parse_feature_subsample(const std::string& text) {
    if (text == "all") return FeatureSubsample::all;
    if (text == "sqrt") return FeatureSubsample::sqrt;
    if (text == "one-third" || text == "one_third") return FeatureSubsample::one_third;
    throw ConfigError("unknown feature subsample rule '" + text + "' (expected all, sqrt, one-third)");
}

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    for (auto& item : split_csv_line(text)) {
        if (!item.empty()) items.push_back(item);
    }
    if (items.empty()) throw ConfigError("empty list '" + text + "'");
    return items;
}

template <typename Int>
Int parse_integer(const std::string& text) {
    Int value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("invalid integer '" + text + "'");
    }
    return value;
}

double parse_real(const std::string& text) {
    double value = 0.0;
    if (!parse_number(text, value)) throw ConfigError("invalid number '" + text + "'");
    return value;
}

bool parse_bool(const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("invalid boolean '" + text + "'");
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F render) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += render(items[i]);
    }
    return out;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) out.push_back(parse_integer<int>(item));
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(text)) out.push_back(parse_integer<std::uint64_t>(item));
    return out;
}

int ExperimentConfig::max_horizon() const {
    return horizons.empty() ? 0 : *std::max_element(horizons.begin(), horizons.end());
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(what);
    };
    require(window_w >= 2, "window_w must be >= 2");
    require(combo_window_W >= 2, "combo_window_W must be >= 2");
    require(after_lookback_L >= 2, "after_lookback_L must be >= 2");
    require(min_obs >= 1, "min_obs must be >= 1");
    require(!horizons.empty(), "horizons must be non-empty");
    require(std::all_of(horizons.begin(), horizons.end(), [](int h) { return h >= 1; }), "horizons must be >= 1");
    require(lambda_decay > 0.0, "lambda_decay must be > 0");
    require(es_alpha > 0.0 && es_alpha < 1.0, "es_alpha must lie in (0, 1)");
    require(eta > 0.0, "eta must be > 0");
    require(lambda_mix >= 0.0 && lambda_mix <= 1.0, "lambda_mix must lie in [0, 1]");
    require(tau_ridge > 0.0, "tau_ridge must be > 0");
    require(phi_lad >= 0.0, "phi_lad must be >= 0");
    require(mv_ridge >= 0.0, "mv_ridge must be >= 0");
    require(ols_fraction > 0.0 && ols_fraction <= 1.0, "ols_fraction must lie in (0, 1]");
    require(after_ewma_decay > 0.0 && after_ewma_decay < 1.0, "after_ewma_decay must lie in (0, 1)");
    require(pca_k_max >= 0, "pca_k_max must be >= 0");
    require(adf_level == 0.01 || adf_level == 0.05 || adf_level == 0.10, "adf_level must be one of 0.01, 0.05, 0.10");
    require(!seeds.empty(), "seeds must be non-empty");
    require(pelt_penalty > 0.0, "pelt_penalty must be > 0");
    require(rf.lags >= 1, "rf_lags must be >= 1");
    require(rf.train_rows >= 2, "rf_train_rows must be >= 2");
    require(rf.n_candidates >= 1, "rf_n_candidates must be >= 1");
    require(rf.n_folds >= 2, "rf_n_folds must be >= 2");
    require(!rf.n_trees.empty() && !rf.min_leaf.empty() && !rf.max_depth.empty() && !rf.subsample.empty() &&
                !rf.bootstrap.empty(),
            "rf search space lists must be non-empty");
    require(std::all_of(rf.n_trees.begin(), rf.n_trees.end(), [](int v) { return v >= 1; }), "rf_n_trees must be >= 1");
    require(std::all_of(rf.min_leaf.begin(), rf.min_leaf.end(), [](int v) { return v >= 1; }), "rf_min_leaf must be >= 1");
    require(std::all_of(rf.max_depth.begin(), rf.max_depth.end(), [](int v) { return v >= 0; }),
            "rf_max_depth must be >= 1 (or none)");
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "window_w") window_w = parse_integer<int>(value);
    else if (key == "combo_window_W") combo_window_W = parse_integer<int>(value);
    else if (key == "after_lookback_L") after_lookback_L = parse_integer<int>(value);
    else if (key == "min_obs") min_obs = parse_integer<int>(value);
    else if (key == "horizons") horizons = parse_int_list(value);
    else if (key == "lambda_decay") lambda_decay = parse_real(value);
    else if (key == "es_alpha") es_alpha = parse_real(value);
    else if (key == "eta") eta = parse_real(value);
    else if (key == "lambda_mix") lambda_mix = parse_real(value);
    else if (key == "tau_ridge") tau_ridge = parse_real(value);
    else if (key == "phi_lad") phi_lad = parse_real(value);
    else if (key == "mv_ridge") mv_ridge = parse_real(value);
    else if (key == "ols_fraction") ols_fraction = parse_real(value);
    else if (key == "after_ewma_decay") after_ewma_decay = parse_real(value);
    else if (key == "pca_k_max") pca_k_max = parse_integer<int>(value);
    else if (key == "adf_level") adf_level = parse_real(value);
    else if (key == "seeds") seeds = parse_seed_list(value);
    else if (key == "pelt_penalty") pelt_penalty = parse_real(value);
    else if (key == "rf_lags") rf.lags = parse_integer<int>(value);
    else if (key == "rf_train_rows") rf.train_rows = parse_integer<int>(value);
    else if (key == "rf_n_candidates") rf.n_candidates = parse_integer<int>(value);
    else if (key == "rf_n_folds") rf.n_folds = parse_integer<int>(value);
    else if (key == "rf_n_trees") rf.n_trees = parse_int_list(value);
    else if (key == "rf_min_leaf") rf.min_leaf = parse_int_list(value);
    else if (key == "rf_max_depth") {
        rf.max_depth.clear();
        for (const auto& item : split_list(value)) {
            rf.max_depth.push_back(item == "none" ? 0 : parse_integer<int>(item));
        }
    } else if (key == "rf_subsample") {
        rf.subsample.clear();
        for (const auto& item : split_list(value)) rf.subsample.push_back(parse_feature_subsample(item));
    } else if (key == "rf_bootstrap") {
        rf.bootstrap.clear();
        for (const auto& item : split_list(value)) rf.bootstrap.push_back(parse_bool(item));
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        try {
            cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    return parse(in);
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream out;
    auto num = [](double v) { return format_number(v); };
    auto integer = [](auto v) { return std::to_string(v); };
    out << "window_w = " << window_w << '\n'
        << "combo_window_W = " << combo_window_W << '\n'
        << "after_lookback_L = " << after_lookback_L << '\n'
        << "min_obs = " << min_obs << '\n'
        << "horizons = " << join(horizons, integer) << '\n'
        << "lambda_decay = " << num(lambda_decay) << '\n'
        << "es_alpha = " << num(es_alpha) << '\n'
        << "eta = " << num(eta) << '\n'
        << "lambda_mix = " << num(lambda_mix) << '\n'
        << "tau_ridge = " << num(tau_ridge) << '\n'
        << "phi_lad = " << num(phi_lad) << '\n'
        << "mv_ridge = " << num(mv_ridge) << '\n'
        << "ols_fraction = " << num(ols_fraction) << '\n'
        << "after_ewma_decay = " << num(after_ewma_decay) << '\n'
        << "pca_k_max = " << pca_k_max << '\n'
        << "adf_level = " << num(adf_level) << '\n'
        << "seeds = " << join(seeds, integer) << '\n'
        << "pelt_penalty = " << num(pelt_penalty) << '\n'
        << "rf_lags = " << rf.lags << '\n'
        << "rf_train_rows = " << rf.train_rows << '\n'
        << "rf_n_candidates = " << rf.n_candidates << '\n'
        << "rf_n_folds = " << rf.n_folds << '\n'
        << "rf_n_trees = " << join(rf.n_trees, integer) << '\n'
        << "rf_min_leaf = " << join(rf.min_leaf, integer) << '\n'
        << "rf_max_depth = " << join(rf.max_depth, [](int d) { return d == 0 ? std::string("none") : std::to_string(d); })
        << '\n'
        << "rf_subsample = " << join(rf.subsample, [](FeatureSubsample s) { return to_string(s); }) << '\n'
        << "rf_bootstrap = " << join(rf.bootstrap, [](bool b) { return std::string(b ? "true" : "false"); }) << '\n';
    return out.str();
}

}  // namespace robustcurve::core

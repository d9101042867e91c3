#include "robustcurve/core/rng.hpp"
#include "robustcurve/core/synthetic.hpp"
#include "robustcurve/forest.hpp"

#include "support/cart_oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

using namespace robustcurve;
using namespace robustcurve::forest;

namespace {

std::vector<int> iota_rows(int n) {
    std::vector<int> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

void check_leaf_sizes(const Tree& tree, int min_leaf) {
    for (const auto& node : tree.nodes()) {
        if (node.is_leaf()) CHECK(node.samples >= min_leaf);
    }
}

}  // namespace

TEST_CASE("min-max scaling") {
    Eigen::MatrixXd x(3, 2);
    x << 1, 5, 3, 5, 2, 5;
    const MinMaxScaler scaler(x);
    const Eigen::MatrixXd z = scaler.transform(x);
    CHECK(z(0, 0) == 0.0);
    CHECK(z(1, 0) == 1.0);
    CHECK(z(2, 0) == doctest::Approx(0.5));
    CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(scaler.inverse_value(scaler.transform_value(2.5, 0), 0) == doctest::Approx(2.5));
    CHECK(scaler.inverse_value(0.0, 1) == 5.0);
}

TEST_CASE("feature subsample counts") {
    CHECK(candidate_feature_count(FeatureSubsample::all, 120) == 120);
    CHECK(candidate_feature_count(FeatureSubsample::sqrt, 120) == 10);
    CHECK(candidate_feature_count(FeatureSubsample::one_third, 120) == 40);
    CHECK(candidate_feature_count(FeatureSubsample::one_third, 2) == 1);
    CHECK(candidate_feature_count(FeatureSubsample::sqrt, 1) == 1);
}

TEST_CASE("root split matches exhaustive enumeration") {
    core::Rng rng(17);
    int compared = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 2 + static_cast<int>(rng.index(11));
        const int d = 1 + static_cast<int>(rng.index(3));
        const int min_leaf = 1 + static_cast<int>(rng.index(3));
        const int levels = 2 + static_cast<int>(rng.index(5));  // few levels force ties
        Eigen::MatrixXd x(n, d);
        std::vector<double> y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) x(i, j) = static_cast<double>(rng.index(static_cast<std::size_t>(levels)));
            y[static_cast<std::size_t>(i)] = static_cast<double>(rng.index(4));
        }
        const auto rows = iota_rows(n);
        std::vector<int> features(static_cast<std::size_t>(d));
        std::iota(features.begin(), features.end(), 0);
        const auto got = find_best_split(x, y, rows, features, min_leaf);
        const auto want = oracle::exhaustive_root_split(x, y, min_leaf);
        REQUIRE(got.has_value() == want.has_value());
        if (got) {
            CHECK(got->feature == want->feature);
            CHECK(got->threshold == want->threshold);
            ++compared;
        }
    }
    CHECK(compared > 500);
}

TEST_CASE("split reports SSE decrease and tie rule") {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 0, 0, 1, 1, 1, 1;  // both features separate identically
    const std::vector<double> y{0, 0, 1, 1};
    const auto rows = iota_rows(4);
    const std::vector<int> features{0, 1};
    const auto split = find_best_split(x, y, rows, features, 1);
    REQUIRE(split);
    CHECK(split->feature == 0);
    CHECK(split->threshold == 0.5);
    CHECK(split->sse_decrease == doctest::Approx(1.0));
    CHECK(split->impurity_decrease == doctest::Approx(0.25));
    CHECK(split->left_count == 2);

    const std::vector<double> flat{2, 2, 2, 2};
    CHECK_FALSE(find_best_split(x, flat, rows, features, 1).has_value());
    CHECK_FALSE(find_best_split(x, y, rows, features, 3).has_value());
}

TEST_CASE("fully grown tree interpolates distinct training points") {
    core::Rng rng(2);
    const int n = 30;
    Eigen::MatrixXd x(n, 3);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        x.row(i) << rng.uniform(), rng.uniform(), rng.uniform();
        y[static_cast<std::size_t>(i)] = rng.normal();
    }
    RfHyperParams params;
    params.min_leaf = 1;
    core::Rng tree_rng(1);
    const Tree tree = fit_tree(x, y, params, tree_rng);
    for (int i = 0; i < n; ++i) CHECK(tree.predict(x.row(i).transpose()) == y[static_cast<std::size_t>(i)]);
    CHECK(tree.leaf_count() == static_cast<std::size_t>(n));

    params.max_depth = 2;
    core::Rng rng2(1);
    const Tree shallow = fit_tree(x, y, params, rng2);
    CHECK(shallow.depth() <= 2);
    CHECK(shallow.leaf_count() <= 4);

    params.max_depth.reset();
    params.min_leaf = 4;
    core::Rng rng3(1);
    check_leaf_sizes(fit_tree(x, y, params, rng3), 4);
}

TEST_CASE("ensembles are reproducible per seed") {
    core::Rng rng(8);
    const int n = 40;
    Eigen::MatrixXd x(n, 5);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 5; ++j) x(i, j) = rng.normal();
        y(i) = x(i, 0) + 0.1 * rng.normal();
    }
    RfHyperParams params;
    params.n_trees = 25;
    params.subsample = FeatureSubsample::sqrt;
    const Forest a = fit_forest(x, y, params, 99);
    const Forest b = fit_forest(x, y, params, 99);
    const Forest c = fit_forest(x, y, params, 100);
    std::ostringstream sa, sb, sc;
    write_forest(a, sa);
    write_forest(b, sb);
    write_forest(c, sc);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str() != sc.str());
    const Eigen::VectorXd probe = x.row(3).transpose();
    CHECK(a.predict(probe) == b.predict(probe));
    // Predictions stay inside the training target range.
    for (int i = 0; i < n; ++i) {
        const double p = a.predict(x.row(i).transpose());
        CHECK(p >= y.minCoeff() - 1e-12);
        CHECK(p <= y.maxCoeff() + 1e-12);
    }
}

TEST_CASE("search space and random search") {
    const SearchSpace space = SearchSpace::from_settings(core::RfSettings{});
    CHECK(space.size() == 162);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const RfHyperParams p = space.at(i);
        seen.insert(std::to_string(p.n_trees) + "/" + std::to_string(p.min_leaf) + "/" +
                    std::to_string(p.max_depth.value_or(0)) + "/" + core::to_string(p.subsample) + "/" +
                    std::to_string(p.bootstrap));
    }
    CHECK(seen.size() == 162);
    CHECK_THROWS((void)space.at(162));

    core::Rng data(4);
    Eigen::MatrixXd x(30, 3);
    std::vector<double> y(30);
    for (int i = 0; i < 30; ++i) {
        x.row(i) << data.uniform(), data.uniform(), data.uniform();
        y[static_cast<std::size_t>(i)] = x(i, 1);
    }
    SearchSpace small = space;
    small.n_trees = {5, 10};
    core::Rng r1(5), r2(5);
    CHECK(cv_random_search(x, y, small, 4, 3, r1) == cv_random_search(x, y, small, 4, 3, r2));
    CHECK(cv_mse(x, y, small.at(0), 3, 1) >= 0.0);
}

TEST_CASE("feature vector layout") {
    core::SyntheticSpec spec;
    spec.periods = 20;
    spec.indicators = 2;
    const auto world = core::generate_synthetic_world(spec);
    const Eigen::VectorXd w = build_features(world.yields, 4, world.indicators, 10, 3);
    REQUIRE(w.size() == 9);
    // indicators at lags 1..3, lag-major
    CHECK(w(0) == world.indicators.values()(9, 0));
    CHECK(w(1) == world.indicators.values()(9, 1));
    CHECK(w(4) == world.indicators.values()(7, 0));
    // yields at lags 0..2
    CHECK(w(6) == world.yields.values()(10, 4));
    CHECK(w(8) == world.yields.values()(8, 4));
    CHECK_THROWS(build_features(world.yields, 4, world.indicators, 1, 3));
}

TEST_CASE("rolling RF forecasts") {
    core::SyntheticSpec spec;
    spec.seed = 12;
    spec.periods = 60;
    spec.indicators = 3;
    const auto world = core::generate_synthetic_world(spec);
    core::ExperimentConfig cfg;
    cfg.horizons = {1, 2};
    cfg.rf.lags = 3;
    cfg.rf.train_rows = 24;
    cfg.rf.n_candidates = 2;
    cfg.rf.n_trees = {5, 10};
    const auto a = rf_rolling_forecast(world.yields, world.indicators, 12.0, cfg, 7, 1);
    const auto b = rf_rolling_forecast(world.yields, world.indicators, 12.0, cfg, 7, 3);
    CHECK(a == b);
    CHECK(a.size() > 0);
    // Training pairs end at s = t - h, so the first origin is h + rows - 1.
    for (const auto& [key, value] : a.entries()) {
        const auto row = world.yields.row_of(key.origin).value();
        CHECK(row >= static_cast<std::size_t>(key.horizon + cfg.rf.train_rows - 1));
        CHECK(row + static_cast<std::size_t>(key.horizon) < world.yields.periods());
    }

    SUBCASE("forecasts ignore data after the origin") {
        const std::size_t cut = 45;
        Eigen::MatrixXd yv = world.yields.values();
        Eigen::MatrixXd iv = world.indicators.values();
        yv.bottomRows(yv.rows() - static_cast<Eigen::Index>(cut + 1)).array() += 1.0;
        iv.bottomRows(iv.rows() - static_cast<Eigen::Index>(cut + 1)).array() -= 5.0;
        const core::YieldPanel ys(world.yields.dates(), world.yields.maturities(), yv);
        const core::IndicatorPanel is(world.indicators.dates(), world.indicators.names(), iv);
        const auto c = rf_rolling_forecast(ys, is, 12.0, cfg, 7, 1);
        int checked = 0;
        for (const auto& [key, value] : a.entries()) {
            if (world.yields.row_of(key.origin).value() <= cut) {
                CHECK(c.find(key).value() == value);
                ++checked;
            }
        }
        CHECK(checked > 0);
    }
    CHECK_THROWS(rf_rolling_forecast(world.yields, world.indicators, 13.0, cfg, 7, 1));
}

TEST_CASE("CART and forest examples") {
    Eigen::MatrixXd x(4, 1);
    x << 0, 0, 1, 1;
    const std::vector<double> y{0, 0, 10, 10};
    const auto split = find_best_split(x, y, iota_rows(4), std::vector<int>{0}, 1);
    REQUIRE(split);
    CHECK(split->impurity_decrease == doctest::Approx(25.0));
    RfHyperParams params;
    core::Rng rng(1);
    const Tree tree = fit_tree(x, y, params, rng);
    CHECK(tree.leaf_count() == 2);

    const std::vector<double> flat(4, 3.0);
    core::Rng rng2(1);
    const Tree single = fit_tree(x, flat, params, rng2);
    CHECK(single.leaf_count() == 1);
    CHECK(single.predict(Eigen::VectorXd::Constant(1, 9.0)) == 3.0);

    params.min_leaf = 4;
    core::Rng rng3(1);
    const Tree forced = fit_tree(x, y, params, rng3);
    CHECK(forced.leaf_count() == 1);
    CHECK(forced.predict(Eigen::VectorXd::Zero(1)) == 5.0);

    // One unbootstrapped tree on all features is a plain CART tree.
    core::Rng data(6);
    Eigen::MatrixXd xs(25, 3);
    std::vector<double> ys(25);
    for (int i = 0; i < 25; ++i) {
        xs.row(i) << data.uniform(), data.uniform(), data.uniform();
        ys[static_cast<std::size_t>(i)] = data.normal();
    }
    RfHyperParams one;
    one.n_trees = 1;
    one.bootstrap = false;
    const TreeEnsemble ens = fit_ensemble(xs, ys, one, 3);
    core::Rng rng4(0);
    const Tree plain = fit_tree(xs, ys, one, rng4);
    for (int i = 0; i < 25; ++i) CHECK(ens.predict(xs.row(i).transpose()) == plain.predict(xs.row(i).transpose()));

    Eigen::VectorXd constant = Eigen::VectorXd::Constant(25, 1.75);
    RfHyperParams rich;
    rich.n_trees = 7;
    rich.subsample = FeatureSubsample::sqrt;
    const Forest f = fit_forest(xs, constant, rich, 5);
    CHECK(f.predict(xs.row(2).transpose()) == 1.75);
}

TEST_CASE("random search examples") {
    core::Rng data(7);
    Eigen::MatrixXd x(40, 2);
    std::vector<double> y(40);
    for (int i = 0; i < 40; ++i) {
        x.row(i) << data.uniform(), data.uniform();
        y[static_cast<std::size_t>(i)] = 10.0 * x(i, 0);
    }
    SearchSpace single{{3}, {1}, {std::nullopt}, {FeatureSubsample::all}, {false}};
    core::Rng r(1);
    CHECK(cv_random_search(x, y, single, 5, 3, r) == single.at(0));

    SearchSpace pair{{1, 20}, {40, 1}, {std::nullopt}, {FeatureSubsample::all}, {false}};
    // Restrict to the two intended corners by scoring them directly.
    RfHyperParams constant_model{1, 40, std::nullopt, FeatureSubsample::all, false};
    RfHyperParams richer{20, 1, std::nullopt, FeatureSubsample::all, false};
    CHECK(cv_mse(x, y, richer, 3, 1) < cv_mse(x, y, constant_model, 3, 1));
    core::Rng r2(2);
    const auto best = cv_random_search(x, y, pair, 10, 3, r2);
    CHECK(best.min_leaf == 1);

    SearchSpace empty = single;
    empty.n_trees.clear();
    core::Rng r3(3);
    CHECK_THROWS(cv_random_search(x, y, empty, 2, 3, r3));
}

TEST_CASE("feature dimension and duplicate seeds") {
    core::SyntheticSpec spec;
    spec.periods = 70;
    spec.indicators = 1;
    const auto world = core::generate_synthetic_world(spec);
    CHECK(build_features(world.yields, 0, world.indicators, 65, 60).size() == 120);

    core::SyntheticSpec wide = spec;
    wide.indicators = 111;
    const auto big = core::generate_synthetic_world(wide);
    CHECK(build_features(big.yields, 0, big.indicators, 65, 60).size() == 6720);

    core::ExperimentConfig cfg;
    cfg.horizons = {1};
    cfg.rf.lags = 2;
    cfg.rf.train_rows = 20;
    cfg.rf.n_candidates = 1;
    cfg.rf.n_trees = {4};
    cfg.seeds = {5, 5};
    const auto sets = rf_rolling_forecast_seeds(world.yields, world.indicators, 12.0, cfg);
    REQUIRE(sets.size() == 2);
    CHECK(sets[0] == sets[1]);
}

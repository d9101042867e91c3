#include "robustcurve/core/rng.hpp"
#include "robustcurve/core/synthetic.hpp"
#include "robustcurve/fadns.hpp"
#include "robustcurve/term_structure.hpp"

#include <doctest.h>

#include <cmath>

using namespace robustcurve;
using namespace robustcurve::fadns;

namespace {

std::vector<double> ar1(std::uint64_t seed, std::size_t n, double rho) {
    core::Rng rng(seed);
    std::vector<double> x(n);
    double v = 0.0;
    for (auto& xi : x) {
        v = rho * v + rng.normal();
        xi = v;
    }
    return x;
}

core::SyntheticWorld small_world(std::uint64_t seed, int periods = 100) {
    core::SyntheticSpec spec;
    spec.seed = seed;
    spec.periods = periods;
    spec.random_walk_indicators = 2;
    return core::generate_synthetic_world(spec);
}

}  // namespace

TEST_CASE("Dickey-Fuller critical values") {
    CHECK(adf_critical_value(25, 0.05) == doctest::Approx(-3.00));
    CHECK(adf_critical_value(10, 0.01) == doctest::Approx(-3.75));
    CHECK(adf_critical_value(100, 0.10) == doctest::Approx(-2.58));
    CHECK(adf_critical_value(1000000, 0.05) == doctest::Approx(-2.86).epsilon(1e-4));
    const double mid = adf_critical_value(60, 0.05);
    CHECK(mid < -2.89);
    CHECK(mid > -2.93);
    CHECK_THROWS(adf_critical_value(100, 0.2));
}

TEST_CASE("ADF screening decisions") {
    int retained = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto x = ar1(s, 200, 0.3);
        if (adf_decide(x) == AdfDecision::retain) ++retained;
    }
    CHECK(retained >= 48);

    const std::vector<double> constant(30, 2.0);
    const AdfResult flat = adf_test(constant);
    CHECK(flat.degenerate);
    CHECK(flat.decision == AdfDecision::difference);

    std::vector<double> trend(30);
    for (std::size_t i = 0; i < trend.size(); ++i) trend[i] = static_cast<double>(i);
    CHECK(adf_test(trend).decision == AdfDecision::difference);

    CHECK_THROWS(adf_test(std::vector<double>(14, 1.0)));
}

TEST_CASE("column standardization") {
    Eigen::MatrixXd block(5, 2);
    block << 1, 3, 2, 3, 3, 3, 4, 3, 10, 3;
    const auto scaled = standardize_columns(block);
    CHECK(scaled[0]);
    CHECK_FALSE(scaled[1]);
    CHECK(std::abs(block.col(0).mean()) < 1e-14);
    CHECK(std::sqrt(block.col(0).squaredNorm() / 4.0) == doctest::Approx(1.0));
    CHECK(block.col(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("principal components and sign alignment") {
    core::Rng rng(9);
    Eigen::MatrixXd block(80, 4);
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
        const double f = 3.0 * rng.normal();
        block.row(i) << f + 0.1 * rng.normal(), -f + 0.1 * rng.normal(), rng.normal(), 0.5 * rng.normal();
    }
    const PcaResult pca = principal_components(block, 3);
    CHECK(pca.basis.eigenvectors.cols() == 3);
    for (Eigen::Index j = 1; j < 3; ++j) CHECK(pca.basis.eigenvalues(j) <= pca.basis.eigenvalues(j - 1));
    const Eigen::MatrixXd gram = pca.basis.eigenvectors.transpose() * pca.basis.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
    // First axis loads on the two correlated columns with opposite signs.
    CHECK(std::abs(pca.basis.eigenvectors(0, 0)) > 0.6);
    CHECK(pca.basis.eigenvectors(0, 0) * pca.basis.eigenvectors(1, 0) < 0.0);

    // Aligning a negated copy against the original restores it.
    Eigen::MatrixXd flipped = -pca.basis.eigenvectors;
    const Eigen::VectorXd signs = align_signs(flipped, &pca.basis.eigenvectors);
    CHECK(signs == Eigen::VectorXd::Constant(3, -1.0));
    CHECK(flipped == pca.basis.eigenvectors);

    // Without a reference the largest-magnitude entry becomes positive.
    Eigen::MatrixXd v = pca.basis.eigenvectors;
    align_signs(v, nullptr);
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        Eigen::Index arg = 0;
        v.col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(v(arg, j) > 0.0);
    }

    const PcaResult aligned = rolling_pca(block, 3, &pca.basis);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(aligned.basis.eigenvectors.col(j).dot(pca.basis.eigenvectors.col(j)) > 0);

    Eigen::MatrixXd low_rank(20, 3);
    for (Eigen::Index i = 0; i < 20; ++i) low_rank.row(i) << i, 2.0 * i, 1.0;
    CHECK_THROWS(principal_components(low_rank, 2));
}

TEST_CASE("window factors use only rows before the origin") {
    const auto world = small_world(4);
    const core::Month origin = world.yields.dates()[70];
    const WindowFactors a = build_window_factors(world.indicators, origin, 60, 3, 0.10);
    CHECK(a.scores.rows() == 60);
    CHECK(a.scores.cols() == 3);
    CHECK(a.basis.eigenvectors.rows() == static_cast<Eigen::Index>(world.indicators.series_count()));

    Eigen::MatrixXd values = world.indicators.values();
    values.bottomRows(values.rows() - 70).array() += 100.0;
    const core::IndicatorPanel shifted(world.indicators.dates(), world.indicators.names(), values);
    const WindowFactors b = build_window_factors(shifted, origin, 60, 3, 0.10);
    CHECK(a.scores == b.scores);
}

TEST_CASE("FADNS forecasts") {
    const auto world = small_world(6);
    core::ExperimentConfig cfg;
    cfg.horizons = {1, 6};

    SUBCASE("k = 0 reproduces DNS exactly") {
        const auto dns = term_structure::dns_rolling_forecast(world.yields, cfg);
        const auto fadns0 = fadns_rolling_forecast(world.yields, world.indicators, 0, cfg);
        CHECK(fadns0.relabeled("DNS") == dns);
    }
    SUBCASE("k outside [0, k_max] is a configuration error") {
        CHECK_THROWS_AS(fadns_rolling_forecast(world.yields, world.indicators, 11, cfg), core::ConfigError);
        CHECK_THROWS_AS(fadns_rolling_forecast(world.yields, world.indicators, -1, cfg), core::ConfigError);
    }
    SUBCASE("thread count does not change forecasts") {
        const auto a = fadns_rolling_forecast(world.yields, world.indicators, 3, cfg, 1);
        const auto b = fadns_rolling_forecast(world.yields, world.indicators, 3, cfg, 4);
        CHECK(a == b);
        CHECK(a.size() > 0);
        CHECK(a.models() == std::vector<std::string>{"FADNS-3"});
    }
}

TEST_CASE("ADF Monte Carlo size and power") {
    int differenced = 0;
    int retained = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        if (adf_decide(ar1(500 + s, 200, 1.0)) == AdfDecision::difference) ++differenced;
        if (adf_decide(ar1(900 + s, 200, 0.2)) == AdfDecision::retain) ++retained;
    }
    MESSAGE("random walk differenced in " << differenced << "/100, AR(0.2) retained in " << retained << "/100");
    CHECK(differenced >= 85);  // nominal rate at the 10% level is 90
    CHECK(retained >= 90);
}

TEST_CASE("PCA examples") {
    core::Rng rng(1);
    Eigen::MatrixXd same(40, 3);
    for (Eigen::Index i = 0; i < 40; ++i) same.row(i).setConstant(rng.normal());
    const auto one = principal_components(same, 1);
    const Eigen::MatrixXd centered = same.rowwise() - same.colwise().mean();
    const double total = (centered.transpose() * centered / 39.0).trace();
    CHECK(one.basis.eigenvalues(0) == doctest::Approx(total));

    // Block with sample covariance exactly diag(2, 1).
    Eigen::MatrixXd block(4, 2);
    const double a = std::sqrt(2.0 * 3.0 / 4.0);
    const double b = std::sqrt(3.0 / 4.0);
    block << a, b, -a, -b, a, -b, -a, b;
    const auto pca = principal_components(block, 2);
    CHECK(pca.basis.eigenvalues(0) == doctest::Approx(2.0));
    CHECK(pca.basis.eigenvalues(1) == doctest::Approx(1.0));
    CHECK(std::abs(pca.basis.eigenvectors(0, 0)) == doctest::Approx(1.0));

    PcaBasis negated = pca.basis;
    negated.eigenvectors = -pca.basis.eigenvectors;
    const auto aligned = rolling_pca(block, 2, &negated);
    CHECK((aligned.basis.eigenvectors - negated.eigenvectors).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("noise indicators barely move FADNS accuracy") {
    core::SyntheticSpec spec;
    spec.seed = 30;
    spec.periods = 160;
    spec.indicator_loading = 0.0;
    const auto world = core::generate_synthetic_world(spec);
    core::ExperimentConfig cfg;
    cfg.horizons = {1};
    auto rmsfe = [&](const core::ForecastSet& set) {
        double ss = 0.0;
        for (const auto& [key, value] : set.entries()) ss += std::pow(*core::forecast_error(world.yields, key, value), 2);
        return std::sqrt(ss / static_cast<double>(set.size()));
    };
    const double dns = rmsfe(term_structure::dns_rolling_forecast(world.yields, cfg));
    const double fadns = rmsfe(fadns_rolling_forecast(world.yields, world.indicators, 2, cfg));
    CHECK(std::abs(fadns - dns) <= 0.25 * dns);
}

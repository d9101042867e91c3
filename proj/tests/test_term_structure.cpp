#include "robustcurve/core/rng.hpp"
#include "robustcurve/core/synthetic.hpp"
#include "robustcurve/term_structure.hpp"

#include <doctest.h>

#include <cmath>

using namespace robustcurve;
using namespace robustcurve::term_structure;

namespace {

const std::vector<double> kMaturities{3, 6, 12, 24, 36, 48, 60, 72, 84, 96, 108, 120, 180, 240, 360};

}  // namespace

TEST_CASE("Nelson-Siegel loadings") {
    const double lambda = 0.0609;
    const auto at_30 = ns_loadings(30.0, lambda);
    const double x = lambda * 30.0;
    CHECK(at_30.slope == doctest::Approx((1 - std::exp(-x)) / x).epsilon(1e-14));
    CHECK(at_30.curvature == doctest::Approx((1 - std::exp(-x)) / x - std::exp(-x)).epsilon(1e-14));

    // Short end: slope -> 1, curvature -> 0, continuous across the series branch.
    const auto tiny = ns_loadings(1e-6, lambda);
    CHECK(tiny.slope == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(tiny.curvature) < 1e-7);
    const auto below = ns_loadings(0.99e-4 / lambda, lambda);
    const auto above = ns_loadings(1.01e-4 / lambda, lambda);
    CHECK(std::abs(below.slope - above.slope) < 1e-5);
    CHECK(std::abs(below.curvature - above.curvature) < 1e-5);

    // Long end: slope and curvature decay to 0.
    const auto far = ns_loadings(1e6, lambda);
    CHECK(far.slope < 1e-4);
    CHECK(far.curvature < 1e-4);

    CHECK_THROWS(ns_loadings(0.0, lambda));
    CHECK_THROWS(ns_loadings(12.0, 0.0));
}

TEST_CASE("cross-sectional fit is exact on model curves") {
    core::Rng rng(5);
    const Eigen::MatrixXd design = ns_design(kMaturities, 0.0609);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector3d beta(rng.normal(5, 2), rng.normal(-1, 2), rng.normal(0, 3));
        const Eigen::VectorXd curve = design * beta;
        const Eigen::Vector3d fit = fit_cross_section(curve, kMaturities, 0.0609);
        CHECK((fit - beta).cwiseAbs().maxCoeff() < 1e-9);
        for (std::size_t j = 0; j < kMaturities.size(); ++j) {
            CHECK(ns_yield(beta, kMaturities[j], 0.0609) == doctest::Approx(curve(static_cast<Eigen::Index>(j))));
        }
    }
    const std::vector<double> two{3, 6};
    CHECK_THROWS_AS(fit_cross_section(Eigen::Vector2d(1, 2), two, 0.0609), SingularFitError);
    const std::vector<double> repeated{12, 12, 12};
    CHECK_THROWS_AS(fit_cross_section(Eigen::Vector3d(1, 2, 3), repeated, 0.0609), SingularFitError);
}

TEST_CASE("VAR(1) recovers noiseless dynamics") {
    Eigen::Vector3d c(0.3, -0.1, 0.05);
    Eigen::Matrix3d phi;
    phi << 0.9, 0.05, 0.0, -0.02, 0.8, 0.1, 0.0, 0.03, 0.7;
    Eigen::MatrixXd states(40, 3);
    states.row(0) << 4.0, -2.0, 1.5;
    for (int t = 1; t < 40; ++t) states.row(t) = (c + phi * states.row(t - 1).transpose()).transpose();
    const Var1Model model = fit_var1(states);
    CHECK((model.phi - phi).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((model.c - c).cwiseAbs().maxCoeff() < 1e-8);

    // Iterated forecast equals the closed form sum_j phi^j c + phi^h x.
    const Eigen::VectorXd x = states.row(39).transpose();
    Eigen::VectorXd closed = Eigen::VectorXd::Zero(3);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(3, 3);
    for (int j = 0; j < 6; ++j) {
        closed += power * c;
        power = power * phi;
    }
    closed += power * x;
    CHECK((var1_forecast(model, x, 6) - closed).cwiseAbs().maxCoeff() < 1e-9);

    CHECK_THROWS_AS(fit_var1(Eigen::MatrixXd::Ones(10, 3)), SingularFitError);
    CHECK_THROWS(fit_var1(Eigen::MatrixXd::Random(4, 3)));
}

TEST_CASE("rolling origin range") {
    const auto r = rolling_origins(100, 60, 12);
    CHECK_FALSE(r.empty);
    CHECK(r.first == 59);
    CHECK(r.last == 87);
    CHECK(rolling_origins(71, 60, 12).empty);
    CHECK_FALSE(rolling_origins(72, 60, 12).empty);
}

TEST_CASE("DNS rolling forecasts") {
    core::SyntheticSpec spec;
    spec.seed = 3;
    spec.periods = 90;
    const auto world = core::generate_synthetic_world(spec);
    core::ExperimentConfig cfg;
    cfg.horizons = {1, 3};
    const auto set = dns_rolling_forecast(world.yields, cfg);
    const auto range = rolling_origins(90, 60, 3);
    CHECK(set.size() == (range.last - range.first + 1) * 2 * kMaturities.size());
    CHECK(set.models() == std::vector<std::string>{"DNS"});

    SUBCASE("threads do not change results") { CHECK(dns_rolling_forecast(world.yields, cfg, 3) == set); }

    SUBCASE("forecasts ignore data after the origin") {
        const core::Month origin = world.yields.dates()[range.first + 5];
        Eigen::MatrixXd values = world.yields.values();
        values.bottomRows(values.rows() - static_cast<Eigen::Index>(range.first + 6)).array() += 3.0;
        const core::YieldPanel shifted(world.yields.dates(), world.yields.maturities(), values);
        const auto other = dns_rolling_forecast(shifted, cfg);
        for (const auto& [key, value] : set.entries()) {
            if (key.origin <= origin) CHECK(other.find(key).value() == value);
        }
    }

    cfg.window_w = 100;
    CHECK_THROWS(dns_rolling_forecast(world.yields, cfg));
}

TEST_CASE("loading examples and shape") {
    const auto l = ns_loadings(120.0, 0.0609);
    CHECK(l.slope == doctest::Approx(-std::expm1(-7.308) / 7.308).epsilon(1e-14));
    CHECK(l.slope == doctest::Approx(0.136745).epsilon(1e-5));
    CHECK(l.curvature == doctest::Approx(l.slope - std::exp(-7.308)).epsilon(1e-12));
    double prev_slope = 2.0;
    for (double tau = 0.5; tau < 600; tau *= 1.3) {
        const auto cur = ns_loadings(tau, 0.0609);
        CHECK(cur.slope < prev_slope);
        CHECK(cur.curvature >= 0.0);
        prev_slope = cur.slope;
    }
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(15, 4.2);
    const Eigen::Vector3d beta = fit_cross_section(flat, kMaturities, 0.0609);
    CHECK(beta(0) == doctest::Approx(4.2));
    CHECK(std::abs(beta(1)) < 1e-10);
    CHECK(std::abs(beta(2)) < 1e-10);
}

TEST_CASE("VAR forecast examples") {
    Var1Model zero{Eigen::Vector2d(1, -1), Eigen::Matrix2d::Zero()};
    for (int h = 1; h <= 5; ++h) CHECK(var1_forecast(zero, Eigen::Vector2d(7, 7), h) == Eigen::VectorXd(zero.c));
    Var1Model walk{Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()};
    for (int h = 1; h <= 5; ++h) CHECK(var1_forecast(walk, Eigen::Vector2d(3, 4), h) == Eigen::VectorXd(Eigen::Vector2d(3, 4)));
    Var1Model scalar{Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 0.5)};
    CHECK(var1_forecast(scalar, Eigen::VectorXd::Zero(1), 3)(0) == doctest::Approx(1.75));
    CHECK_THROWS(var1_forecast(scalar, Eigen::VectorXd::Zero(2), 1));

    Eigen::MatrixXd ar(20, 1);
    ar(0, 0) = 8.0;
    for (int t = 1; t < 20; ++t) ar(t, 0) = 0.5 * ar(t - 1, 0);
    const auto fit = fit_var1(ar);
    CHECK(fit.phi(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(fit.c(0)) < 1e-12);
}

TEST_CASE("DNS on a noiseless world and minimal panel") {
    core::SyntheticSpec spec;
    spec.seed = 21;
    spec.periods = 120;
    spec.noise_bps = 0.0;
    spec.var.shock_sd = Eigen::Vector3d(0.003, 0.003, 0.005);
    const auto world = core::generate_synthetic_world(spec);
    core::ExperimentConfig cfg;
    cfg.horizons = {1};
    const auto set = dns_rolling_forecast(world.yields, cfg);
    double ss = 0.0;
    for (const auto& [key, value] : set.entries()) ss += std::pow(*core::forecast_error(world.yields, key, value), 2);
    CHECK(100.0 * std::sqrt(ss / static_cast<double>(set.size())) < 1.0);

    core::SyntheticSpec tiny = spec;
    tiny.periods = 61;
    const auto one = dns_rolling_forecast(core::generate_synthetic_world(tiny).yields, cfg);
    CHECK(one.size() == kMaturities.size());
}

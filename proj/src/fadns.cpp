#include "robustcurve/fadns.hpp"

#include "robustcurve/core/log.hpp"
#include "robustcurve/core/parallel.hpp"
#include "robustcurve/term_structure.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace robustcurve::fadns {

namespace {

// Fuller's tau_mu table (constant, no trend).
struct CriticalRow {
    double n;
    double one, five, ten;
};
constexpr std::array<CriticalRow, 6> kDfTable{{
    {25, -3.75, -3.00, -2.63},
    {50, -3.58, -2.93, -2.60},
    {100, -3.51, -2.89, -2.58},
    {250, -3.46, -2.88, -2.57},
    {500, -3.44, -2.87, -2.57},
    {INFINITY, -3.43, -2.86, -2.57},
}};

double pick(const CriticalRow& row, double level) {
    if (level == 0.01) return row.one;
    if (level == 0.05) return row.five;
    if (level == 0.10) return row.ten;
    throw std::invalid_argument("ADF level must be 0.01, 0.05 or 0.10");
}

}  // namespace

double adf_critical_value(std::size_t n, double level) {
    const double size = static_cast<double>(n);
    if (size <= kDfTable.front().n) return pick(kDfTable.front(), level);
    for (std::size_t i = 1; i < kDfTable.size(); ++i) {
        const auto& lo = kDfTable[i - 1];
        const auto& hi = kDfTable[i];
        if (size <= hi.n) {
            const double inv_hi = std::isinf(hi.n) ? 0.0 : 1.0 / hi.n;
            const double frac = (1.0 / lo.n - 1.0 / size) / (1.0 / lo.n - inv_hi);
            return pick(lo, level) + frac * (pick(hi, level) - pick(lo, level));
        }
    }
    return pick(kDfTable.back(), level);
}

AdfResult adf_test(std::span<const double> series, double level) {
    const std::size_t n = series.size();
    if (n < 15) throw std::invalid_argument("adf_test: need at least 15 observations, got " + std::to_string(n));
    AdfResult result;
    result.level = level;
    result.critical_value = adf_critical_value(n, level);

    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    if (*lo == *hi) {
        result.degenerate = true;
        result.decision = AdfDecision::difference;
        core::log().debug("adf_test: constant series treated as nonstationary");
        return result;
    }

    // dy_t = a + gamma y_{t-1} + delta dy_{t-1} + e_t,  t = 2..n-1
    const auto m = static_cast<Eigen::Index>(n - 2);
    Eigen::MatrixXd x(m, 3);
    Eigen::VectorXd y(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t t = static_cast<std::size_t>(r) + 2;
        y(r) = series[t] - series[t - 1];
        x(r, 0) = 1.0;
        x(r, 1) = series[t - 1];
        x(r, 2) = series[t - 1] - series[t - 2];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < 3) {
        result.degenerate = true;
        result.decision = AdfDecision::difference;
        return result;
    }
    const Eigen::VectorXd coef = qr.solve(y);
    const Eigen::VectorXd resid = y - x * coef;
    const double dof = static_cast<double>(m - 3);
    const double s2 = resid.squaredNorm() / dof;
    const Eigen::Matrix3d xtx_inv = (x.transpose() * x).inverse();
    const double se = std::sqrt(s2 * xtx_inv(1, 1));
    if (!(se > 0.0) || !std::isfinite(se)) {
        result.degenerate = true;
        result.decision = AdfDecision::difference;
        return result;
    }
    result.statistic = coef(1) / se;
    result.decision = result.statistic < result.critical_value ? AdfDecision::retain : AdfDecision::difference;
    return result;
}

std::vector<bool> standardize_columns(Eigen::MatrixXd& block) {
    const Eigen::Index n = block.rows();
    std::vector<bool> scaled(static_cast<std::size_t>(block.cols()), false);
    if (n < 2) return scaled;
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
        auto col = block.col(j);
        col.array() -= col.mean();
        const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n - 1));
        if (sd > 0.0 && std::isfinite(sd)) {
            col /= sd;
            // A second pass removes the rounding left by the first.
            col.array() -= col.mean();
            col /= std::sqrt(col.squaredNorm() / static_cast<double>(n - 1));
            scaled[static_cast<std::size_t>(j)] = true;
        }
    }
    return scaled;
}

Eigen::VectorXd align_signs(Eigen::MatrixXd& vectors, const Eigen::MatrixXd* reference) {
    Eigen::VectorXd signs = Eigen::VectorXd::Ones(vectors.cols());
    if (reference && (reference->rows() != vectors.rows() || reference->cols() < vectors.cols())) {
        throw std::invalid_argument("align_signs: reference shape mismatch");
    }
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        bool flip = false;
        if (reference) {
            flip = vectors.col(j).dot(reference->col(j)) < 0.0;
        } else {
            Eigen::Index arg = 0;
            vectors.col(j).cwiseAbs().maxCoeff(&arg);
            flip = vectors(arg, j) < 0.0;
        }
        if (flip) {
            vectors.col(j) *= -1.0;
            signs(j) = -1.0;
        }
    }
    return signs;
}

PcaResult principal_components(const Eigen::MatrixXd& block, int k) {
    const Eigen::Index w = block.rows();
    const Eigen::Index p = block.cols();
    if (k < 0) throw std::invalid_argument("principal_components: k must be >= 0");
    if (w < 2 || p < 1) throw std::invalid_argument("principal_components: block too small");
    if (k > std::min(w, p)) {
        throw std::invalid_argument("principal_components: k=" + std::to_string(k) + " exceeds min(w, p)");
    }
    const Eigen::RowVectorXd mean = block.colwise().mean();
    const Eigen::MatrixXd centered = block.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(w - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("principal_components: eigensolver failed");
    const Eigen::VectorXd& values = solver.eigenvalues();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

    const double top = std::max(values(order.front()), 0.0);
    const double tol = top * static_cast<double>(std::max(w, p)) * std::numeric_limits<double>::epsilon() * 16.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < p; ++i) rank += values(i) > tol ? 1 : 0;
    if (k > rank) {
        throw std::invalid_argument("principal_components: k=" + std::to_string(k) + " exceeds covariance rank " +
                                    std::to_string(rank));
    }

    PcaResult out;
    out.basis.eigenvectors.resize(p, k);
    out.basis.eigenvalues.resize(k);
    for (int j = 0; j < k; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(j)];
        out.basis.eigenvectors.col(j) = solver.eigenvectors().col(src);
        out.basis.eigenvalues(j) = std::max(values(src), 0.0);
    }
    out.scores = block * out.basis.eigenvectors;
    out.components = out.scores.row(w - 1).transpose();
    return out;
}

PcaResult rolling_pca(const Eigen::MatrixXd& block, int k, const PcaBasis* reference) {
    PcaResult out = principal_components(block, k);
    const Eigen::VectorXd signs = align_signs(out.basis.eigenvectors, reference ? &reference->eigenvectors : nullptr);
    out.scores = out.scores * signs.asDiagonal();
    out.components = out.components.cwiseProduct(signs);
    return out;
}

WindowFactors build_window_factors(const core::IndicatorPanel& indicators, const core::Month& origin, int window,
                                   int k, double adf_level) {
    const auto last = indicators.row_of(origin.plus(-1));
    if (!last) {
        throw std::out_of_range("no indicator row for " + origin.plus(-1).to_string());
    }
    const auto w = static_cast<std::size_t>(window);
    // One extra row ahead of the window feeds the first difference.
    if (*last < w) {
        throw std::out_of_range("indicator history too short for origin " + origin.to_string());
    }
    const std::size_t first = *last + 1 - w;
    const std::size_t p = indicators.series_count();
    const auto& values = indicators.values();

    WindowFactors out;
    std::vector<Eigen::VectorXd> columns;
    for (std::size_t j = 0; j < p; ++j) {
        if (indicators.first_observed(j) > first - 1) continue;
        Eigen::VectorXd levels(window);
        for (std::size_t i = 0; i < w; ++i) {
            levels(static_cast<Eigen::Index>(i)) =
                values(static_cast<Eigen::Index>(first + i), static_cast<Eigen::Index>(j));
        }
        const AdfResult adf = adf_test(std::span<const double>(levels.data(), w), adf_level);
        Eigen::VectorXd transformed = levels;
        if (adf.decision == AdfDecision::difference) {
            for (std::size_t i = 0; i < w; ++i) {
                transformed(static_cast<Eigen::Index>(i)) =
                    values(static_cast<Eigen::Index>(first + i), static_cast<Eigen::Index>(j)) -
                    values(static_cast<Eigen::Index>(first + i - 1), static_cast<Eigen::Index>(j));
            }
        }
        out.report.columns.push_back(j);
        out.report.results.push_back(adf);
        columns.push_back(std::move(transformed));
    }

    Eigen::MatrixXd block(window, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) block.col(static_cast<Eigen::Index>(c)) = columns[c];
    const std::vector<bool> scaled = standardize_columns(block);

    std::vector<Eigen::Index> keep;
    for (std::size_t c = 0; c < scaled.size(); ++c) {
        if (scaled[c]) keep.push_back(static_cast<Eigen::Index>(c));
    }
    if (static_cast<int>(keep.size()) < k) {
        throw std::invalid_argument("only " + std::to_string(keep.size()) + " usable indicators for k=" +
                                    std::to_string(k));
    }
    out.standardized.resize(window, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) out.standardized.col(static_cast<Eigen::Index>(c)) = block.col(keep[c]);

    PcaResult pca = principal_components(out.standardized, k);
    out.scores = std::move(pca.scores);
    out.basis.eigenvalues = std::move(pca.basis.eigenvalues);
    out.basis.eigenvectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), k);
    for (std::size_t c = 0; c < keep.size(); ++c) {
        const auto full = static_cast<Eigen::Index>(out.report.columns[static_cast<std::size_t>(keep[c])]);
        out.basis.eigenvectors.row(full) = pca.basis.eigenvectors.row(static_cast<Eigen::Index>(c));
    }
    return out;
}

core::ForecastSet fadns_rolling_forecast(const core::YieldPanel& yields, const core::IndicatorPanel& indicators, int k,
                                         const core::ExperimentConfig& cfg, int jobs) {
    cfg.validate();
    if (k < 0 || k > cfg.pca_k_max) {
        throw core::ConfigError("k must lie in [0, " + std::to_string(cfg.pca_k_max) + "], got " + std::to_string(k));
    }
    const auto range = term_structure::rolling_origins(yields.periods(), cfg.window_w, cfg.max_horizon());
    if (range.empty) {
        throw std::invalid_argument("fadns_rolling_forecast: panel too short for window + max horizon");
    }
    const auto path = term_structure::extract_factor_path(yields, cfg.lambda_decay);
    const std::string model_id = "FADNS-" + std::to_string(k);
    const std::size_t n_origins = range.last - range.first + 1;
    const int w = cfg.window_w;

    // Component extraction is independent per origin; sign alignment chains
    // through the origins in order afterwards.
    std::vector<std::optional<WindowFactors>> factors(n_origins);
    if (k > 0) {
        core::parallel_for(n_origins, jobs, [&](std::size_t i) {
            const std::size_t t = range.first + i;
            try {
                factors[i] = build_window_factors(indicators, yields.dates()[t], w, k, cfg.adf_level);
            } catch (const std::exception& e) {
                core::log().warn("{} origin {} skipped: {}", model_id, yields.dates()[t].to_string(), e.what());
            }
        });
        const Eigen::MatrixXd* reference = nullptr;
        for (auto& f : factors) {
            if (!f) continue;
            const Eigen::VectorXd signs = align_signs(f->basis.eigenvectors, reference);
            f->scores = f->scores * signs.asDiagonal();
            reference = &f->basis.eigenvectors;
        }
    }

    std::vector<std::optional<core::ForecastSet>> per_origin(n_origins);
    core::parallel_for(n_origins, jobs, [&](std::size_t i) {
        const std::size_t t = range.first + i;
        if (k > 0 && !factors[i]) return;
        const auto start = static_cast<Eigen::Index>(t + 1 - static_cast<std::size_t>(w));
        Eigen::MatrixXd states(w, 3 + k);
        states.leftCols(3) = path.betas.middleRows(start, w);
        if (k > 0) states.rightCols(k) = factors[i]->scores;
        term_structure::Var1Model model;
        try {
            model = term_structure::fit_var1(states);
        } catch (const std::exception& e) {
            core::log().warn("{} origin {} skipped: {}", model_id, yields.dates()[t].to_string(), e.what());
            return;
        }
        const Eigen::VectorXd state = states.row(w - 1).transpose();
        core::ForecastSet out;
        for (int h : cfg.horizons) {
            const Eigen::VectorXd x = term_structure::var1_forecast(model, state, h);
            const Eigen::Vector3d beta = x.head<3>();
            for (double tau : yields.maturities()) {
                out.insert({model_id, yields.dates()[t], h, tau}, term_structure::ns_yield(beta, tau, cfg.lambda_decay));
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

}  // namespace robustcurve::fadns

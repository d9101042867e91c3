#include "robustcurve/combiner.hpp"

#include "robustcurve/core/log.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace robustcurve::combiner {

// --- WeightVector ----------------------------------------------------------

WeightVector::WeightVector(Eigen::VectorXd weights) : w_(std::move(weights)) {
    if (w_.size() < 1) throw std::invalid_argument("WeightVector: empty");
    if (!w_.allFinite()) throw std::invalid_argument("WeightVector: non-finite entry");
    if ((w_.array() < 0.0).any()) throw std::invalid_argument("WeightVector: negative entry");
    if (std::abs(w_.sum() - 1.0) > 1e-9) throw std::invalid_argument("WeightVector: entries do not sum to one");
}

WeightVector WeightVector::uniform(Eigen::Index m) {
    return WeightVector(Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)));
}

WeightVector WeightVector::normalized(Eigen::VectorXd raw) {
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        if (!(raw(i) > 0.0)) raw(i) = 0.0;  // also clears NaN
    }
    const double total = raw.sum();
    if (!(total > 0.0) || !std::isfinite(total)) return uniform(raw.size());
    raw /= total;
    return WeightVector(std::move(raw));
}

// --- scheme ids ------------------------------------------------------------

namespace {

struct SchemeName {
    Scheme scheme;
    const char* id;
};

constexpr SchemeName kSchemeNames[] = {
    {Scheme::ew, "FC-EW"},
    {Scheme::rank, "FC-RANK"},
    {Scheme::rmse, "FC-RMSE"},
    {Scheme::mse, "FC-MSE"},
    {Scheme::ols, "FC-OLS"},
    {Scheme::mv, "FC-MV"},
    {Scheme::stack, "FC-STACK"},
    {Scheme::jma, "FC-JMA"},
    {Scheme::lad, "FC-LAD"},
    {Scheme::after_rolling, "AFTER-ROLLING"},
    {Scheme::after_ewma, "AFTER-EWMA"},
    {Scheme::after_simplified, "AFTER-SIMPLIFIED"},
    {Scheme::dro_es, "FC-DRO-ES"},
    {Scheme::drmv, "FC-DRMV"},
    {Scheme::dro_mix, "FC-DRO-MIX"},
};

}  // namespace

std::string scheme_id(Scheme scheme) {
    for (const auto& entry : kSchemeNames) {
        if (entry.scheme == scheme) return entry.id;
    }
    throw std::invalid_argument("unknown scheme");
}

const std::vector<Scheme>& all_schemes() {
    static const std::vector<Scheme> schemes = [] {
        std::vector<Scheme> out;
        for (const auto& entry : kSchemeNames) out.push_back(entry.scheme);
        return out;
    }();
    return schemes;
}

std::string valid_scheme_list() {
    std::string out;
    for (const auto& entry : kSchemeNames) {
        if (!out.empty()) out += ", ";
        out += entry.id;
    }
    return out;
}

Scheme parse_scheme(const std::string& id) {
    for (const auto& entry : kSchemeNames) {
        if (id == entry.id) return entry.scheme;
    }
    throw std::invalid_argument("unknown scheme '" + id + "'; valid schemes: " + valid_scheme_list());
}

bool is_after(Scheme scheme) {
    return scheme == Scheme::after_rolling || scheme == Scheme::after_ewma || scheme == Scheme::after_simplified;
}

// --- building blocks -------------------------------------------------------

double expected_shortfall(std::span<const double> sample, double alpha) {
    if (sample.empty()) throw std::invalid_argument("expected_shortfall: empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("expected_shortfall: alpha must lie in (0, 1)");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::size_t k = 1;
    while (static_cast<double>(k) / n < alpha) ++k;
    const double q = sorted[k - 1];
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : sorted) {
        if (v > q) break;
        sum += v;
        ++count;
    }
    return sum / static_cast<double>(count);
}

WeightVector project_to_simplex(const Eigen::VectorXd& v) {
    const Eigen::Index m = v.size();
    if (m < 1) throw std::invalid_argument("project_to_simplex: empty vector");
    if (!v.allFinite()) throw std::invalid_argument("project_to_simplex: non-finite entry");
    std::vector<double> u(v.data(), v.data() + m);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
        cumulative += u[static_cast<std::size_t>(j)];
        const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
    }
    Eigen::VectorXd w = (v.array() - theta).max(0.0).matrix();
    // Absorb rounding so the result passes the unit-sum check exactly.
    return WeightVector::normalized(std::move(w));
}

Eigen::VectorXd column_rmse(const ErrorMatrix& errors) {
    return (errors.colwise().squaredNorm().array() / static_cast<double>(errors.rows())).sqrt().matrix().transpose();
}

WeightVector inverse_rmse_weights(const ErrorMatrix& errors) {
    const Eigen::VectorXd rmse = column_rmse(errors);
    constexpr double floor = 1e-8;
    Eigen::VectorXd raw(rmse.size());
    const bool any_exact = (rmse.array() <= floor).any();
    for (Eigen::Index m = 0; m < rmse.size(); ++m) {
        raw(m) = any_exact ? (rmse(m) <= floor ? 1.0 : 0.0) : 1.0 / rmse(m);
    }
    return WeightVector::normalized(std::move(raw));
}

namespace {

void require_rows(const ErrorMatrix& errors, const core::ExperimentConfig& cfg) {
    if (errors.cols() < 1) throw std::invalid_argument("error matrix has no models");
    if (errors.rows() < cfg.min_obs || errors.rows() < 1) {
        throw std::invalid_argument("error matrix has " + std::to_string(errors.rows()) + " rows, need min_obs = " +
                                    std::to_string(cfg.min_obs));
    }
}

/// Average ranks (1 = smallest); tied values share the mean of their ranks.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& values) {
    const auto m = static_cast<std::size_t>(values.size());
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values(static_cast<Eigen::Index>(a)) < values(static_cast<Eigen::Index>(b));
    });
    Eigen::VectorXd ranks(values.size());
    for (std::size_t i = 0; i < m;) {
        std::size_t j = i;
        while (j + 1 < m && values(static_cast<Eigen::Index>(order[j + 1])) == values(static_cast<Eigen::Index>(order[i]))) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks(static_cast<Eigen::Index>(order[k])) = rank;
        i = j + 1;
    }
    return ranks;
}

/// Moore-Penrose inverse of a symmetric matrix.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    const Eigen::VectorXd& values = solver.eigenvalues();
    const double largest = values.cwiseAbs().maxCoeff();
    const double tol = largest * static_cast<double>(a.rows()) * std::numeric_limits<double>::epsilon();
    Eigen::VectorXd inv(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) inv(i) = std::abs(values(i)) > tol ? 1.0 / values(i) : 0.0;
    return solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
}

Eigen::MatrixXd sample_covariance(const ErrorMatrix& errors) {
    const Eigen::Index n = errors.rows();
    if (n < 2) return Eigen::MatrixXd::Zero(errors.cols(), errors.cols());
    const Eigen::MatrixXd centered = errors.rowwise() - errors.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(n - 1);
}

WeightVector ols_weights(const ErrorMatrix& errors, const core::ExperimentConfig& cfg) {
    const Eigen::Index m = errors.cols();
    const auto q = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::floor(cfg.ols_fraction * static_cast<double>(m) + 1e-9)));
    const Eigen::VectorXd rmse = column_rmse(errors);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return rmse(a) < rmse(b); });
    order.resize(static_cast<std::size_t>(q));
    std::sort(order.begin(), order.end());

    Eigen::MatrixXd selected(errors.rows(), q);
    for (Eigen::Index c = 0; c < q; ++c) selected.col(c) = errors.col(order[static_cast<std::size_t>(c)]);
    const Eigen::VectorXd mean_error = errors.rowwise().mean();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(selected);
    if (qr.rank() < q) {
        core::log().info("FC-OLS: rank-deficient screened regression, using inverse-RMSE weights");
        return inverse_rmse_weights(errors);
    }
    const Eigen::VectorXd b = qr.solve(mean_error);
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(m);
    for (Eigen::Index c = 0; c < q; ++c) raw(order[static_cast<std::size_t>(c)]) = std::abs(b(c));
    if (!(raw.sum() > 0.0)) {
        for (Eigen::Index c = 0; c < q; ++c) raw(order[static_cast<std::size_t>(c)]) = 1.0;
    }
    return WeightVector::normalized(std::move(raw));
}

/// Softmax of sign * eta * (L - min L), shifted by the largest exponent.
WeightVector exponential_weights(const Eigen::VectorXd& losses, double eta, double sign) {
    const Eigen::VectorXd stabilized = losses.array() - losses.minCoeff();
    const Eigen::VectorXd exponent = sign * eta * stabilized;
    const Eigen::VectorXd raw = (exponent.array() - exponent.maxCoeff()).exp().matrix();
    return WeightVector::normalized(raw);
}

}  // namespace

// --- schemes ---------------------------------------------------------------

WeightVector static_weights(Scheme scheme, const ErrorMatrix& errors, const core::ExperimentConfig& cfg) {
    require_rows(errors, cfg);
    const Eigen::Index m = errors.cols();
    switch (scheme) {
        case Scheme::ew:
            return WeightVector::uniform(m);
        case Scheme::rank: {
            const Eigen::VectorXd ranks = average_ranks(column_rmse(errors));
            return WeightVector::normalized(ranks.cwiseInverse());
        }
        case Scheme::rmse:
            return inverse_rmse_weights(errors);
        case Scheme::mse: {
            const Eigen::VectorXd mse = errors.colwise().squaredNorm().transpose() / static_cast<double>(errors.rows());
            Eigen::Index best = 0;
            for (Eigen::Index k = 1; k < m; ++k) {
                if (mse(k) < mse(best)) best = k;
            }
            Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
            w(best) = 1.0;
            return WeightVector(std::move(w));
        }
        case Scheme::ols:
            return ols_weights(errors, cfg);
        default:
            throw std::invalid_argument("static_weights: unsupported scheme " + scheme_id(scheme));
    }
}

WeightVector ridge_min_variance_weights(const ErrorMatrix& errors, double ridge) {
    const Eigen::Index m = errors.cols();
    const Eigen::MatrixXd sigma = sample_covariance(errors) + ridge * Eigen::MatrixXd::Identity(m, m);
    const Eigen::VectorXd direction = symmetric_pinv(sigma) * Eigen::VectorXd::Ones(m);
    const double denom = direction.sum();
    if (!(std::abs(denom) > 0.0) || !std::isfinite(denom)) return WeightVector::uniform(m);
    return WeightVector::normalized(direction / denom);
}

WeightVector variance_weights(Scheme scheme, const ErrorMatrix& errors, const core::ExperimentConfig& cfg) {
    require_rows(errors, cfg);
    switch (scheme) {
        case Scheme::mv:
            return ridge_min_variance_weights(errors, cfg.mv_ridge);
        case Scheme::stack:
        case Scheme::jma: {
            const Eigen::MatrixXd s = errors.transpose() * errors / static_cast<double>(errors.rows());
            try {
                return solve_simplex_qp(s);
            } catch (const SolverError& e) {
                core::log().info("{}: {}; using inverse-RMSE weights", scheme_id(scheme), e.what());
                return inverse_rmse_weights(errors);
            }
        }
        case Scheme::lad:
            try {
                return solve_lad_lp(errors, cfg.phi_lad);
            } catch (const SolverError& e) {
                core::log().info("FC-LAD: {}; using inverse-RMSE weights", e.what());
                return inverse_rmse_weights(errors);
            }
        default:
            throw std::invalid_argument("variance_weights: unsupported scheme " + scheme_id(scheme));
    }
}

WeightVector dro_weights(Scheme scheme, const ErrorMatrix& errors, const core::ExperimentConfig& cfg) {
    require_rows(errors, cfg);
    const Eigen::Index m = errors.cols();
    const auto n = static_cast<std::size_t>(errors.rows());
    switch (scheme) {
        case Scheme::dro_es: {
            Eigen::VectorXd losses(m);
            for (Eigen::Index k = 0; k < m; ++k) {
                const Eigen::VectorXd col = errors.col(k);
                losses(k) = expected_shortfall(std::span<const double>(col.data(), n), cfg.es_alpha);
            }
            // Exponent sign as in the ES rule: the model whose lower error
            // tail is heaviest has the smallest loss and the least weight.
            return exponential_weights(losses, cfg.eta, +1.0);
        }
        case Scheme::dro_mix: {
            Eigen::VectorXd losses(m);
            for (Eigen::Index k = 0; k < m; ++k) {
                const Eigen::VectorXd sq = errors.col(k).array().square();
                const double mse = sq.mean();
                const double tail = expected_shortfall(std::span<const double>(sq.data(), n), cfg.es_alpha);
                losses(k) = (1.0 - cfg.lambda_mix) * mse + cfg.lambda_mix * tail;
            }
            // Squared-error losses: larger is worse, so the exponent is negated.
            return exponential_weights(losses, cfg.eta, -1.0);
        }
        case Scheme::drmv:
            return ridge_min_variance_weights(errors, cfg.tau_ridge);
        default:
            throw std::invalid_argument("dro_weights: unsupported scheme " + scheme_id(scheme));
    }
}

WeightVector scheme_weights(Scheme scheme, const ErrorMatrix& errors, const core::ExperimentConfig& cfg) {
    switch (scheme) {
        case Scheme::ew:
        case Scheme::rank:
        case Scheme::rmse:
        case Scheme::mse:
        case Scheme::ols:
            return static_weights(scheme, errors, cfg);
        case Scheme::mv:
        case Scheme::stack:
        case Scheme::jma:
        case Scheme::lad:
            return variance_weights(scheme, errors, cfg);
        case Scheme::dro_es:
        case Scheme::drmv:
        case Scheme::dro_mix:
            return dro_weights(scheme, errors, cfg);
        default:
            throw std::invalid_argument("scheme_weights: " + scheme_id(scheme) + " carries state; use after_weights");
    }
}

// --- AFTER -----------------------------------------------------------------

AfterState AfterState::initial(Eigen::Index models, AfterVariant variant, double decay) {
    if (models < 1) throw std::invalid_argument("AfterState: need at least one model");
    AfterState state;
    state.weights = Eigen::VectorXd::Constant(models, 1.0 / static_cast<double>(models));
    state.variances = Eigen::VectorXd::Constant(models, kAfterVarianceFloor);
    state.variant = variant;
    state.decay = decay;
    return state;
}

std::pair<WeightVector, AfterState> after_weights(const AfterState& state, const ErrorMatrix& recent) {
    const Eigen::Index m = state.weights.size();
    const Eigen::Index n = recent.rows();
    if (recent.cols() != m) throw std::invalid_argument("after_weights: model count mismatch");
    if (n < 1) throw std::invalid_argument("after_weights: no recent errors");

    AfterState next = state;
    Eigen::VectorXd log_w(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto col = recent.col(k);
        const double sum_sq = col.squaredNorm();
        double v = 1.0;
        switch (state.variant) {
            case AfterVariant::rolling: {
                v = n > 1 ? (col.array() - col.mean()).square().sum() / static_cast<double>(n - 1) : 0.0;
                break;
            }
            case AfterVariant::ewma: {
                double acc = 0.0;
                double factor = 1.0;
                for (Eigen::Index j = n - 1; j >= 0; --j) {
                    acc += factor * col(j) * col(j);
                    factor *= state.decay;
                }
                v = (1.0 - state.decay) * acc;
                break;
            }
            case AfterVariant::simplified:
                break;
        }
        const double prior = state.weights(k) > 0.0 ? std::log(state.weights(k)) : -INFINITY;
        if (state.variant == AfterVariant::simplified) {
            log_w(k) = prior - 0.5 * sum_sq;
        } else {
            v = std::max(v, kAfterVarianceFloor);
            next.variances(k) = v;
            log_w(k) = prior - 0.5 * sum_sq / v - 0.5 * std::log(v);
        }
    }
    const double top = log_w.maxCoeff();
    Eigen::VectorXd raw(m);
    for (Eigen::Index k = 0; k < m; ++k) raw(k) = std::isfinite(log_w(k)) ? std::exp(log_w(k) - top) : 0.0;
    WeightVector w = WeightVector::normalized(std::move(raw));
    next.weights = w.values();
    return {std::move(w), std::move(next)};
}

double combine(const WeightVector& weights, const Eigen::VectorXd& forecasts) {
    if (weights.size() != forecasts.size()) throw std::invalid_argument("combine: dimension mismatch");
    return weights.values().dot(forecasts);
}

}  // namespace robustcurve::combiner

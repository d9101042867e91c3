#include "robustcurve/combiner.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

namespace robustcurve::combiner {

namespace {

// Gap tolerances relative to max |S|.
constexpr double kGapTolerance = 1e-11;
constexpr double kAcceptGap = 1e-9;
constexpr int kMaxIterations = 200000;

double objective(const Eigen::MatrixXd& s, const Eigen::VectorXd& w) { return w.dot(s * w); }

/// Frank-Wolfe duality gap; an upper bound on objective(w) - optimum.
double fw_gap(const Eigen::MatrixXd& s, const Eigen::VectorXd& w) {
    const Eigen::VectorXd grad = 2.0 * (s * w);
    return grad.dot(w) - grad.minCoeff();
}

Eigen::VectorXd project(const Eigen::VectorXd& v) { return project_to_simplex(v).values(); }

/// Equality-constrained minimizer on the support of w, or nothing if the KKT
/// system is singular or the solution leaves the simplex.
std::optional<Eigen::VectorXd> polish(const Eigen::MatrixXd& s, const Eigen::VectorXd& w) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) > 1e-12) support.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(support.size());
    if (k == 0) return std::nullopt;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) kkt(a, b) = 2.0 * s(support[a], support[b]);
        kkt(a, k) = 1.0;
        kkt(k, a) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    rhs(k) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
    for (Eigen::Index a = 0; a < k; ++a) {
        if (!(sol(a) >= 0.0)) return std::nullopt;
        out(support[a]) = sol(a);
    }
    const double total = out.sum();
    if (!(total > 0.0)) return std::nullopt;
    return Eigen::VectorXd(out / total);
}

}  // namespace

WeightVector solve_simplex_qp(const Eigen::MatrixXd& s_in) {
    const Eigen::Index m = s_in.rows();
    if (m < 1 || s_in.cols() != m) throw std::invalid_argument("solve_simplex_qp: S must be square and nonempty");
    if (!s_in.allFinite()) throw std::invalid_argument("solve_simplex_qp: S has non-finite entries");
    if ((s_in - s_in.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
        throw std::invalid_argument("solve_simplex_qp: S is not symmetric");
    }
    const Eigen::MatrixXd s = 0.5 * (s_in + s_in.transpose());
    const double scale = s.cwiseAbs().maxCoeff();
    if (scale == 0.0) return WeightVector::uniform(m);
    if (m == 1) return WeightVector::uniform(1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
    const double lipschitz = 2.0 * std::max(eig.eigenvalues().maxCoeff(), 1e-300);
    const double step = 1.0 / lipschitz;

    Eigen::VectorXd x = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    Eigen::VectorXd y = x;
    double t = 1.0;
    double f_x = objective(s, x);
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        if (iter % 16 == 0 && fw_gap(s, x) <= kGapTolerance * scale) break;
        const Eigen::VectorXd next = project(y - step * 2.0 * (s * y));
        const double f_next = objective(s, next);
        if (f_next > f_x && t > 1.0) {
            // Momentum overshoot: restart from the current iterate. A plain
            // projected step (t == 1) is taken regardless.
            y = x;
            t = 1.0;
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - x);
        x = next;
        f_x = f_next;
        t = t_next;
    }

    if (auto refined = polish(s, x)) {
        if (objective(s, *refined) <= f_x) {
            x = *refined;
            f_x = objective(s, x);
        }
    }
    const double gap = fw_gap(s, x);
    if (!(gap <= kAcceptGap * scale)) {
        std::ostringstream msg;
        msg << "simplex QP did not converge (duality gap " << gap << ", max |S| " << scale << ")";
        throw SolverError(msg.str());
    }
    return WeightVector::normalized(x);
}

}  // namespace robustcurve::combiner

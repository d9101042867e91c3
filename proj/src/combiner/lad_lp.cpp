#include "robustcurve/combiner.hpp"

#include <cmath>
#include <vector>

namespace robustcurve::combiner {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-12;

/// Dense tableau for equality-form LPs (A x = b, x >= 0, b >= 0) with an
/// explicit basis. Pivoting follows Bland's rule throughout.
class Tableau {
public:
    Tableau(Eigen::MatrixXd a, Eigen::VectorXd b, std::vector<Eigen::Index> basis)
        : a_(std::move(a)), b_(std::move(b)), basis_(std::move(basis)) {}

    /// Minimizes c'x over columns not marked in `blocked`. Returns false if the
    /// iteration cap is reached.
    bool minimize(const Eigen::VectorXd& c, const std::vector<bool>& blocked, int max_iter) {
        const Eigen::Index rows = a_.rows();
        const Eigen::Index cols = a_.cols();
        for (int iter = 0; iter < max_iter; ++iter) {
            Eigen::VectorXd cb(rows);
            for (Eigen::Index i = 0; i < rows; ++i) cb(i) = c(basis_[static_cast<std::size_t>(i)]);
            Eigen::Index entering = -1;
            for (Eigen::Index j = 0; j < cols; ++j) {
                if (blocked[static_cast<std::size_t>(j)] || is_basic(j)) continue;
                const double reduced = c(j) - cb.dot(a_.col(j));
                if (reduced < -kCostTol) {
                    entering = j;
                    break;
                }
            }
            if (entering < 0) return true;
            Eigen::Index leaving = -1;
            double best_ratio = 0.0;
            for (Eigen::Index i = 0; i < rows; ++i) {
                const double coef = a_(i, entering);
                if (coef <= kPivotTol) continue;
                const double ratio = b_(i) / coef;
                if (leaving < 0 || ratio < best_ratio - 1e-15 ||
                    (std::abs(ratio - best_ratio) <= 1e-15 && basis_[static_cast<std::size_t>(i)] <
                                                                  basis_[static_cast<std::size_t>(leaving)])) {
                    leaving = i;
                    best_ratio = ratio;
                }
            }
            if (leaving < 0) throw SolverError("LAD LP is unbounded");
            pivot(leaving, entering);
        }
        return false;
    }

    void pivot(Eigen::Index row, Eigen::Index col) {
        const double p = a_(row, col);
        a_.row(row) /= p;
        b_(row) /= p;
        for (Eigen::Index i = 0; i < a_.rows(); ++i) {
            if (i == row) continue;
            const double factor = a_(i, col);
            if (factor == 0.0) continue;
            a_.row(i) -= factor * a_.row(row);
            b_(i) -= factor * b_(row);
            if (b_(i) < 0.0 && b_(i) > -1e-13) b_(i) = 0.0;
        }
        basis_[static_cast<std::size_t>(row)] = col;
    }

    [[nodiscard]] bool is_basic(Eigen::Index j) const {
        for (auto k : basis_) {
            if (k == j) return true;
        }
        return false;
    }

    [[nodiscard]] Eigen::VectorXd solution() const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(a_.cols());
        for (std::size_t i = 0; i < basis_.size(); ++i) x(basis_[i]) = b_(static_cast<Eigen::Index>(i));
        return x;
    }

    const Eigen::MatrixXd& matrix() const { return a_; }
    const std::vector<Eigen::Index>& basis() const { return basis_; }

private:
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
    std::vector<Eigen::Index> basis_;
};

}  // namespace

double lad_objective(const ErrorMatrix& errors, const Eigen::VectorXd& w, double phi) {
    const auto n = static_cast<double>(errors.rows());
    return (errors * w).cwiseAbs().sum() / n + phi / n * w.sum();
}

WeightVector solve_lad_lp(const ErrorMatrix& errors, double phi) {
    const Eigen::Index n = errors.rows();
    const Eigen::Index m = errors.cols();
    if (n < 1 || m < 1) throw std::invalid_argument("solve_lad_lp: empty error matrix");
    if (!(phi >= 0.0)) throw std::invalid_argument("solve_lad_lp: phi must be nonnegative");
    if (!errors.allFinite()) throw std::invalid_argument("solve_lad_lp: non-finite errors");
    if (m == 1 || errors.cwiseAbs().maxCoeff() == 0.0) return WeightVector::uniform(m);

    // Columns: w (m), u (n), s+ (n), s- (n), artificial (1).
    const Eigen::Index off_u = m;
    const Eigen::Index off_sp = m + n;
    const Eigen::Index off_sm = m + 2 * n;
    const Eigen::Index art = m + 3 * n;
    const Eigen::Index cols = art + 1;
    const Eigen::Index rows = 2 * n + 1;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
    for (Eigen::Index j = 0; j < n; ++j) {
        // E_j w - u_j + s+_j = 0
        a.block(j, 0, 1, m) = errors.row(j);
        a(j, off_u + j) = -1.0;
        a(j, off_sp + j) = 1.0;
        basis[static_cast<std::size_t>(j)] = off_sp + j;
        // -E_j w - u_j + s-_j = 0
        a.block(n + j, 0, 1, m) = -errors.row(j);
        a(n + j, off_u + j) = -1.0;
        a(n + j, off_sm + j) = 1.0;
        basis[static_cast<std::size_t>(n + j)] = off_sm + j;
    }
    a.block(2 * n, 0, 1, m).setOnes();
    a(2 * n, art) = 1.0;
    b(2 * n) = 1.0;
    basis[static_cast<std::size_t>(2 * n)] = art;

    Tableau tableau(std::move(a), std::move(b), std::move(basis));
    const int max_iter = static_cast<int>(50 * (rows + cols));
    std::vector<bool> none_blocked(static_cast<std::size_t>(cols), false);

    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols);
    phase1(art) = 1.0;
    if (!tableau.minimize(phase1, none_blocked, max_iter)) throw SolverError("LAD LP phase 1 hit the iteration cap");
    if (tableau.solution()(art) > 1e-9) throw SolverError("LAD LP phase 1 found no feasible point");

    // Drive a degenerate artificial out of the basis.
    for (std::size_t i = 0; i < tableau.basis().size(); ++i) {
        if (tableau.basis()[i] != art) continue;
        const auto row = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < art; ++j) {
            if (!tableau.is_basic(j) && std::abs(tableau.matrix()(row, j)) > kPivotTol) {
                tableau.pivot(row, j);
                break;
            }
        }
    }

    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(cols);
    phase2.segment(0, m).setConstant(phi / static_cast<double>(n));
    phase2.segment(off_u, n).setConstant(1.0 / static_cast<double>(n));
    std::vector<bool> blocked(static_cast<std::size_t>(cols), false);
    blocked[static_cast<std::size_t>(art)] = true;
    if (!tableau.minimize(phase2, blocked, max_iter)) throw SolverError("LAD LP phase 2 hit the iteration cap");

    const Eigen::VectorXd x = tableau.solution();
    return WeightVector::normalized(x.segment(0, m));
}

}  // namespace robustcurve::combiner

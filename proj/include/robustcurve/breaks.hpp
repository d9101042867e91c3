#pragma once

#include "robustcurve/core/panel.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace robustcurve::breaks {

struct CusumResult {
    double statistic = 0.0;  // max_r |W_r| / (sqrt(n) + 2r/sqrt(n)); compare with a
    bool reject_5 = false;
    bool reject_1 = false;
};

/// Boundary constants of the Brown-Durbin-Evans CUSUM test.
inline constexpr double kCusumA5 = 0.948;
inline constexpr double kCusumA1 = 1.143;

/// CUSUM of recursive residuals from a constant-mean model. Requires at least
/// 10 observations.
CusumResult cusum_test(std::span<const double> series);

/// Squared-distance scale of the Gaussian kernel: exp(-d^2 / median(d^2)).
/// Returns 1 when the median is zero.
double rbf_bandwidth(std::span<const double> series);

/// Segment costs c(s, e) = (e - s) - (1/(e - s)) sum_{i,j in [s,e)} k(x_i, x_j)
/// served in O(1) from 2-D prefix sums of the kernel matrix.
class RbfCost {
public:
    explicit RbfCost(std::span<const double> series);

    [[nodiscard]] double operator()(std::size_t start, std::size_t end) const;
    [[nodiscard]] std::size_t size() const { return n_; }

private:
    std::size_t n_;
    std::vector<double> prefix_;  // (n+1) x (n+1)
};

inline constexpr std::size_t kMinSegment = 2;

/// Exact penalized segmentation with PELT pruning. Returns the start index of
/// every segment after the first, ascending. Requires T >= 4 and penalty > 0.
std::vector<std::size_t> pelt_rbf(std::span<const double> series, double penalty);

struct BreakReport {
    std::string series_id;
    CusumResult cusum;
    std::vector<std::size_t> breakpoints;
    double penalty = 0.0;
};

BreakReport analyze_series(const std::string& series_id, std::span<const double> series, double penalty);

/// One report per maturity column. Columns run concurrently.
std::vector<BreakReport> analyze_panel(const core::YieldPanel& panel, double penalty, int jobs = 1);

/// `maturity,break_index,break_date`
void write_breaks(const core::YieldPanel& panel, const std::vector<BreakReport>& reports, std::ostream& out);

/// `maturity,cusum_statistic,reject_5,reject_1,breaks`
void write_cusum(const std::vector<BreakReport>& reports, std::ostream& out);

}  // namespace robustcurve::breaks

#include "robustcurve/breaks.hpp"

#include "robustcurve/core/csv.hpp"
#include "robustcurve/core/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace robustcurve::breaks {

CusumResult cusum_test(std::span<const double> y) {
    const std::size_t t_len = y.size();
    if (t_len < 10) throw std::invalid_argument("cusum_test: need at least 10 observations");
    for (double v : y) {
        if (!std::isfinite(v)) throw std::invalid_argument("cusum_test: non-finite value");
    }
    // Recursive residuals w_t = (y_t - mean(y_1..y_{t-1})) / sqrt(1 + 1/(t-1)).
    std::vector<double> w;
    w.reserve(t_len - 1);
    double running = y[0];
    for (std::size_t t = 1; t < t_len; ++t) {
        const double mean = running / static_cast<double>(t);
        w.push_back((y[t] - mean) / std::sqrt(1.0 + 1.0 / static_cast<double>(t)));
        running += y[t];
    }
    const auto n = static_cast<double>(w.size());
    double mean_w = 0.0;
    for (double v : w) mean_w += v;
    mean_w /= n;
    double ss = 0.0;
    for (double v : w) ss += (v - mean_w) * (v - mean_w);
    const double sigma = std::sqrt(ss / (n - 1.0));

    double scale = 0.0;
    for (double v : y) scale = std::max(scale, std::abs(v));
    CusumResult result;
    if (!(sigma > 1e-12 * std::max(scale, 1.0))) return result;

    const double root_n = std::sqrt(n);
    double cumulative = 0.0;
    for (std::size_t r = 1; r <= w.size(); ++r) {
        cumulative += w[r - 1] / sigma;
        const double boundary = root_n + 2.0 * static_cast<double>(r) / root_n;
        result.statistic = std::max(result.statistic, std::abs(cumulative) / boundary);
    }
    result.reject_5 = result.statistic > kCusumA5;
    result.reject_1 = result.statistic > kCusumA1;
    return result;
}

double rbf_bandwidth(std::span<const double> x) {
    std::vector<double> d2;
    d2.reserve(x.size() * (x.size() - 1) / 2);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) d2.push_back((x[i] - x[j]) * (x[i] - x[j]));
    }
    if (d2.empty()) return 1.0;
    const std::size_t mid = d2.size() / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
    double median = d2[mid];
    if (d2.size() % 2 == 0) {
        const double lower = *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    return median > 0.0 ? median : 1.0;
}

RbfCost::RbfCost(std::span<const double> x) : n_(x.size()), prefix_((x.size() + 1) * (x.size() + 1), 0.0) {
    const double bandwidth = rbf_bandwidth(x);
    const std::size_t stride = n_ + 1;
    for (std::size_t i = 0; i < n_; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            const double d = x[i] - x[j];
            row += std::exp(-d * d / bandwidth);
            prefix_[(i + 1) * stride + (j + 1)] = prefix_[i * stride + (j + 1)] + row;
        }
    }
}

double RbfCost::operator()(std::size_t s, std::size_t e) const {
    const std::size_t stride = n_ + 1;
    const double block = prefix_[e * stride + e] - prefix_[s * stride + e] - prefix_[e * stride + s] + prefix_[s * stride + s];
    const auto len = static_cast<double>(e - s);
    return len - block / len;
}

std::vector<std::size_t> pelt_rbf(std::span<const double> x, double penalty) {
    const std::size_t n = x.size();
    if (n < 4) throw std::invalid_argument("pelt_rbf: need at least 4 observations");
    if (!(penalty > 0.0)) throw std::invalid_argument("pelt_rbf: penalty must be positive");
    for (double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("pelt_rbf: non-finite value");
    }
    if (std::isinf(penalty)) return {};

    const RbfCost cost(x);
    constexpr double inf = std::numeric_limits<double>::infinity();
    // f[t]: optimal penalized cost of x[0, t), counting a penalty per segment.
    std::vector<double> f(n + 1, inf);
    std::vector<std::size_t> last(n + 1, 0);
    f[0] = 0.0;
    std::vector<std::size_t> candidates{0};
    for (std::size_t t = kMinSegment; t <= n; ++t) {
        double best = inf;
        std::size_t arg = 0;
        for (std::size_t tau : candidates) {
            if (t - tau < kMinSegment) continue;
            const double value = f[tau] + cost(tau, t) + penalty;
            if (value < best) {
                best = value;
                arg = tau;
            }
        }
        f[t] = best;
        last[t] = arg;

        // A candidate tau may be dropped once some s with s - tau >= min and
        // t - s = min beats it on [tau, s): every later segment starting at tau
        // can then be split at s at no extra cost.
        if (t >= 2 * kMinSegment) {
            const std::size_t s = t - kMinSegment;
            if (std::isfinite(f[s])) {
                const double bound = f[s] + 1e-9 * (1.0 + std::abs(f[s]));
                std::erase_if(candidates, [&](std::size_t tau) {
                    return s >= tau + kMinSegment && f[tau] + cost(tau, s) > bound;
                });
            }
        }
        if (t + kMinSegment <= n) candidates.push_back(t);
    }

    std::vector<std::size_t> starts;
    for (std::size_t t = n; t > 0; t = last[t]) {
        if (last[t] > 0) starts.push_back(last[t]);
    }
    std::reverse(starts.begin(), starts.end());
    return starts;
}

BreakReport analyze_series(const std::string& series_id, std::span<const double> series, double penalty) {
    BreakReport report;
    report.series_id = series_id;
    report.cusum = cusum_test(series);
    report.breakpoints = pelt_rbf(series, penalty);
    report.penalty = penalty;
    return report;
}

std::vector<BreakReport> analyze_panel(const core::YieldPanel& panel, double penalty, int jobs) {
    std::vector<BreakReport> reports(panel.maturity_count());
    core::parallel_for(panel.maturity_count(), jobs, [&](std::size_t col) {
        const Eigen::VectorXd column = panel.values().col(static_cast<Eigen::Index>(col));
        reports[col] = analyze_series(core::maturity_label(panel.maturities()[col]),
                                      std::span<const double>(column.data(), static_cast<std::size_t>(column.size())),
                                      penalty);
    });
    return reports;
}

void write_breaks(const core::YieldPanel& panel, const std::vector<BreakReport>& reports, std::ostream& out) {
    out << "maturity,break_index,break_date\n";
    for (const auto& report : reports) {
        for (std::size_t index : report.breakpoints) {
            out << report.series_id << ',' << index << ',' << panel.dates().at(index).to_string() << '\n';
        }
    }
}

void write_cusum(const std::vector<BreakReport>& reports, std::ostream& out) {
    out << "maturity,cusum_statistic,reject_5,reject_1,breaks\n";
    for (const auto& report : reports) {
        out << report.series_id << ',' << core::format_number(report.cusum.statistic) << ','
            << (report.cusum.reject_5 ? 1 : 0) << ',' << (report.cusum.reject_1 ? 1 : 0) << ','
            << report.breakpoints.size() << '\n';
    }
}

}  // namespace robustcurve::breaks

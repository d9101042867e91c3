#include "robustcurve/forest.hpp"

#include "robustcurve/core/csv.hpp"
#include "robustcurve/core/log.hpp"
#include "robustcurve/core/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace robustcurve::forest {

// --- MinMaxScaler ----------------------------------------------------------

MinMaxScaler::MinMaxScaler(const Eigen::MatrixXd& sample) {
    if (sample.rows() == 0) throw std::invalid_argument("MinMaxScaler: empty sample");
    min_ = sample.colwise().minCoeff().transpose();
    max_ = sample.colwise().maxCoeff().transpose();
}

double MinMaxScaler::transform_value(double v, Eigen::Index column) const {
    const double lo = min_(column);
    const double span = max_(column) - lo;
    return span > 0.0 ? (v - lo) / span : 0.0;
}

double MinMaxScaler::inverse_value(double v, Eigen::Index column) const {
    const double lo = min_(column);
    const double span = max_(column) - lo;
    return span > 0.0 ? lo + v * span : lo;
}

Eigen::MatrixXd MinMaxScaler::transform(const Eigen::MatrixXd& x) const {
    if (x.cols() != min_.size()) throw std::invalid_argument("MinMaxScaler: column count mismatch");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) = transform_value(x(i, j), j);
    }
    return out;
}

Eigen::VectorXd MinMaxScaler::transform_row(const Eigen::VectorXd& row) const {
    if (row.size() != min_.size()) throw std::invalid_argument("MinMaxScaler: length mismatch");
    Eigen::VectorXd out(row.size());
    for (Eigen::Index j = 0; j < row.size(); ++j) out(j) = transform_value(row(j), j);
    return out;
}

// --- trees -----------------------------------------------------------------

int candidate_feature_count(FeatureSubsample rule, int d) {
    switch (rule) {
        case FeatureSubsample::all: return d;
        case FeatureSubsample::sqrt: return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
        case FeatureSubsample::one_third: return std::max(1, d / 3);
    }
    return d;
}

double Tree::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return nodes_[static_cast<std::size_t>(leaf_of(x))].value;
}

int Tree::leaf_of(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
        const auto& node = nodes_[static_cast<std::size_t>(i)];
        i = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    return i;
}

std::size_t Tree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<int> depth(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (!nodes_[i].is_leaf()) {
            depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
        }
    }
    return deepest;
}

namespace {

/// Per column, the rows ordered by (value, row) and each row's position in
/// that order.
struct PresortedColumns {
    std::size_t rows = 0;
    std::vector<int> order;  // column-major, rows x cols
    std::vector<int> rank;

    explicit PresortedColumns(const Eigen::MatrixXd& x)
        : rows(static_cast<std::size_t>(x.rows())),
          order(rows * static_cast<std::size_t>(x.cols())),
          rank(order.size()) {
        for (Eigen::Index f = 0; f < x.cols(); ++f) {
            int* o = order.data() + static_cast<std::size_t>(f) * rows;
            std::iota(o, o + rows, 0);
            const double* col = x.col(f).data();
            std::stable_sort(o, o + rows, [col](int a, int b) { return col[a] < col[b]; });
            int* rk = rank.data() + static_cast<std::size_t>(f) * rows;
            for (std::size_t k = 0; k < rows; ++k) rk[o[k]] = static_cast<int>(k);
        }
    }
};

struct SplitScanner {
    std::vector<std::pair<double, double>> pairs;
    std::vector<double> centered;
    struct RowSlot {
        double centered = 0.0;
        int copies = 0;
    };
    std::vector<RowSlot> slots;
    std::vector<int> distinct;
    std::vector<std::uint64_t> bits;

    /// Sorts the node's (x, centered y) pairs by value; ties keep the order of
    /// `rows`.
    void gather_small(const Eigen::MatrixXd& x, std::span<const int> rows, int f) {
        const auto n = rows.size();
        const double* col = x.col(f).data();
        for (std::size_t i = 0; i < n; ++i) pairs[i] = {col[rows[i]], centered[i]};
        for (std::size_t i = 1; i < n; ++i) {
            const auto item = pairs[i];
            std::size_t j = i;
            while (j > 0 && item.first < pairs[j - 1].first) {
                pairs[j] = pairs[j - 1];
                --j;
            }
            pairs[j] = item;
        }
    }

    /// With `presorted`, `rows` must be in ascending order (duplicates allowed).
    std::optional<Split> scan(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const int> rows,
                              std::span<const int> features, int min_leaf, const PresortedColumns* presorted = nullptr) {
        const auto n = static_cast<int>(rows.size());
        if (n < 2 * std::max(min_leaf, 1)) return std::nullopt;
        double mean = 0.0;
        for (int r : rows) mean += y[static_cast<std::size_t>(r)];
        mean /= n;
        centered.resize(static_cast<std::size_t>(n));
        double total = 0.0, sse = 0.0;
        for (int i = 0; i < n; ++i) {
            const double c = y[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] - mean;
            centered[static_cast<std::size_t>(i)] = c;
            total += c;
            sse += c * c;
        }
        if (!(sse > 0.0)) return std::nullopt;
        const double tol = 1e-12 * sse;
        const double base = total * total / n;

        const bool walk = presorted != nullptr;
        if (walk) {
            slots.assign(presorted->rows, RowSlot{});
            distinct.clear();
            for (int i = 0; i < n; ++i) {
                const auto r = static_cast<std::size_t>(rows[static_cast<std::size_t>(i)]);
                if (slots[r].copies++ == 0) distinct.push_back(static_cast<int>(r));
                slots[r].centered = centered[static_cast<std::size_t>(i)];
            }
            bits.resize((presorted->rows + 63) / 64);
        }

        std::optional<Split> best;
        double best_gain = 0.0;
        pairs.resize(static_cast<std::size_t>(n));
        auto consider = [&](int f, int i, double left_sum, double lo, double hi) {
            if (i < min_leaf || n - i < min_leaf) return;
            const double right_sum = total - left_sum;
            const double gain = left_sum * left_sum / i + right_sum * right_sum / (n - i) - base;
            if (gain > best_gain + tol) {
                double threshold = lo + (hi - lo) / 2.0;
                if (!(threshold < hi)) threshold = lo;
                best_gain = gain;
                best = Split{f, threshold, gain / n, gain, i};
            }
        };
        if (walk && distinct.size() == 2) {
            // Every feature separating the two rows gives the same partition,
            // so the first one wins the tie.
            const int a = distinct[0];
            const int b = distinct[1];
            for (int f : features) {
                const double* col = x.col(f).data();
                if (col[a] == col[b]) continue;
                const int low = col[a] < col[b] ? a : b;
                const int high = low == a ? b : a;
                const RowSlot& rs = slots[static_cast<std::size_t>(low)];
                const int i = rs.copies;
                if (i < min_leaf || n - i < min_leaf) return std::nullopt;
                double left_sum = 0.0;
                for (int k = 0; k < rs.copies; ++k) left_sum += rs.centered;
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / i + right_sum * right_sum / (n - i) - base;
                if (!(gain > tol)) return std::nullopt;
                const double lo = col[low];
                const double hi = col[high];
                double threshold = lo + (hi - lo) / 2.0;
                if (!(threshold < hi)) threshold = lo;
                return Split{f, threshold, gain / n, gain, i};
            }
            return std::nullopt;
        }
        for (int f : features) {
            if (walk) {
                // Node rows in (value, row) order: mark their ranks, read the
                // marks back in ascending order.
                const std::size_t offset = static_cast<std::size_t>(f) * presorted->rows;
                const int* rank = presorted->rank.data() + offset;
                const int* order = presorted->order.data() + offset;
                for (auto& word : bits) word = 0;
                for (int r : distinct) {
                    const auto k = static_cast<std::size_t>(rank[r]);
                    bits[k >> 6] |= std::uint64_t{1} << (k & 63);
                }
                const double* col = x.col(f).data();
                const RowSlot* slot = slots.data();
                double left_sum = 0.0;
                double prev = 0.0;
                int i = 0;
                double gain_bar = best_gain + tol;
                for (std::size_t word = 0; word < bits.size(); ++word) {
                    for (std::uint64_t w = bits[word]; w != 0; w &= w - 1) {
                        const int r = order[word * 64 + static_cast<std::size_t>(std::countr_zero(w))];
                        const double v = col[r];
                        if (i >= min_leaf && n - i >= min_leaf && v != prev) {
                            const double right_sum = total - left_sum;
                            // Division-free screen with slack; survivors get the exact test.
                            const double li = i;
                            const double ri = n - i;
                            const double scaled = left_sum * left_sum * ri + right_sum * right_sum * li;
                            const double gain = scaled * (1.0 + 1e-9) > (gain_bar + base) * li * ri
                                                    ? left_sum * left_sum / i + right_sum * right_sum / (n - i) - base
                                                    : -1.0;
                            if (gain > gain_bar) {
                                double threshold = prev + (v - prev) / 2.0;
                                if (!(threshold < v)) threshold = prev;
                                best_gain = gain;
                                gain_bar = best_gain + tol;
                                best = Split{f, threshold, gain / n, gain, i};
                            }
                        }
                        const RowSlot& rs = slot[r];
                        if (rs.copies == 1) {
                            left_sum += rs.centered;
                        } else {
                            for (int k = 0; k < rs.copies; ++k) left_sum += rs.centered;
                        }
                        i += rs.copies;
                        prev = v;
                    }
                }
                continue;
            }
            gather_small(x, rows, f);
            double left_sum = 0.0;
            for (int i = 1; i < n; ++i) {
                left_sum += pairs[static_cast<std::size_t>(i - 1)].second;
                const double lo = pairs[static_cast<std::size_t>(i - 1)].first;
                const double hi = pairs[static_cast<std::size_t>(i)].first;
                if (lo != hi) consider(f, i, left_sum, lo, hi);
            }
        }
        return best;
    }
};

}  // namespace

std::optional<Split> find_best_split(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const int> rows,
                                     std::span<const int> features, int min_leaf) {
    SplitScanner scanner;
    if (std::is_sorted(rows.begin(), rows.end())) {
        const PresortedColumns presorted(x);
        return scanner.scan(x, y, rows, features, min_leaf, &presorted);
    }
    return scanner.scan(x, y, rows, features, min_leaf);
}

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, std::span<const double> y, const RfHyperParams& params, core::Rng& rng,
                const PresortedColumns& presorted)
        : x_(x), y_(y), params_(params), rng_(rng), presorted_(presorted), pool_(static_cast<std::size_t>(x.cols())) {
        if (params.min_leaf < 1) throw std::invalid_argument("min_leaf must be >= 1");
        if (params.max_depth && *params.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
        n_candidates_ = candidate_feature_count(params.subsample, static_cast<int>(x.cols()));
    }

    /// `rows` must be ascending; children inherit the order.
    Tree build(std::vector<int> rows) {
        if (rows.empty()) throw std::invalid_argument("fit_tree: no training rows");
        Tree tree;
        grow(tree, std::move(rows), 0);
        return tree;
    }

private:
    int grow(Tree& tree, std::vector<int> rows, int depth) {
        const int index = static_cast<int>(tree.nodes_.size());
        tree.nodes_.emplace_back();
        double sum = 0.0;
        double lo = INFINITY, hi = -INFINITY;
        for (int r : rows) {
            const double v = y_[static_cast<std::size_t>(r)];
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const int n = static_cast<int>(rows.size());
        tree.nodes_[static_cast<std::size_t>(index)].value = sum / n;
        tree.nodes_[static_cast<std::size_t>(index)].samples = n;

        const bool depth_capped = params_.max_depth && depth >= *params_.max_depth;
        if (depth_capped || lo == hi || n < 2 * params_.min_leaf) return index;

        draw_features();
        const auto split = scanner_.scan(x_, y_, rows, features_, params_.min_leaf, &presorted_);
        if (!split) return index;

        std::vector<int> left, right;
        left.reserve(static_cast<std::size_t>(split->left_count));
        right.reserve(rows.size() - static_cast<std::size_t>(split->left_count));
        for (int r : rows) {
            (x_(r, split->feature) <= split->threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int left_index = grow(tree, std::move(left), depth + 1);
        const int right_index = grow(tree, std::move(right), depth + 1);
        auto& node = tree.nodes_[static_cast<std::size_t>(index)];
        node.feature = split->feature;
        node.threshold = split->threshold;
        node.left = left_index;
        node.right = right_index;
        return index;
    }

    void draw_features() {
        const int d = static_cast<int>(pool_.size());
        std::iota(pool_.begin(), pool_.end(), 0);
        if (n_candidates_ < d) {
            for (int i = 0; i < n_candidates_; ++i) {
                const auto j = static_cast<std::size_t>(i) + rng_.index(static_cast<std::size_t>(d - i));
                std::swap(pool_[static_cast<std::size_t>(i)], pool_[j]);
            }
        }
        features_.assign(pool_.begin(), pool_.begin() + n_candidates_);
        if (n_candidates_ < d) std::sort(features_.begin(), features_.end());
    }

    const Eigen::MatrixXd& x_;
    std::span<const double> y_;
    const RfHyperParams& params_;
    core::Rng& rng_;
    const PresortedColumns& presorted_;
    int n_candidates_ = 0;
    std::vector<int> pool_;
    std::vector<int> features_;
    SplitScanner scanner_;
};

namespace {

Tree grow_tree(const Eigen::MatrixXd& x, std::span<const double> y, std::vector<int> rows, const RfHyperParams& params,
               core::Rng& rng, const PresortedColumns& presorted) {
    std::sort(rows.begin(), rows.end());
    TreeBuilder builder(x, y, params, rng, presorted);
    return builder.build(std::move(rows));
}

}  // namespace

Tree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y, std::span<const int> rows, const RfHyperParams& params,
              core::Rng& rng) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("fit_tree: x and y differ in length");
    const PresortedColumns presorted(x);
    return grow_tree(x, y, std::vector<int>(rows.begin(), rows.end()), params, rng, presorted);
}

Tree fit_tree(const Eigen::MatrixXd& x, std::span<const double> y, const RfHyperParams& params, core::Rng& rng) {
    std::vector<int> rows(static_cast<std::size_t>(x.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    return fit_tree(x, y, rows, params, rng);
}

// --- ensembles -------------------------------------------------------------

double TreeEnsemble::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.predict(x);
    return sum / static_cast<double>(trees.size());
}

TreeEnsemble fit_ensemble(const Eigen::MatrixXd& x, std::span<const double> y, const RfHyperParams& params,
                          std::uint64_t seed) {
    if (params.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
    const auto n = static_cast<std::size_t>(x.rows());
    if (n == 0 || y.size() != n) throw std::invalid_argument("fit_ensemble: empty or mismatched training data");
    TreeEnsemble ensemble;
    ensemble.trees.reserve(static_cast<std::size_t>(params.n_trees));
    const PresortedColumns presorted(x);
    std::vector<int> rows(n);
    for (int t = 0; t < params.n_trees; ++t) {
        core::Rng rng(core::derive_seed(seed, static_cast<std::uint64_t>(t)));
        if (params.bootstrap) {
            for (auto& r : rows) r = static_cast<int>(rng.index(n));
            std::sort(rows.begin(), rows.end());
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        ensemble.trees.push_back(grow_tree(x, y, rows, params, rng, presorted));
    }
    return ensemble;
}

double Forest::predict(const Eigen::VectorXd& raw_x) const {
    const Eigen::VectorXd scaled = scaler_x.transform_row(raw_x);
    return scaler_y.inverse_value(ensemble.predict(scaled));
}

Forest fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const RfHyperParams& params, std::uint64_t seed) {
    if (x.rows() != y.size()) throw std::invalid_argument("fit_forest: x and y differ in length");
    Forest forest;
    forest.seed = seed;
    forest.scaler_x = MinMaxScaler(x);
    forest.scaler_y = MinMaxScaler(Eigen::MatrixXd(y));
    const Eigen::MatrixXd xn = forest.scaler_x.transform(x);
    const Eigen::VectorXd yn = forest.scaler_y.transform(Eigen::MatrixXd(y)).col(0);
    forest.ensemble = fit_ensemble(xn, std::span<const double>(yn.data(), static_cast<std::size_t>(yn.size())), params, seed);
    return forest;
}

void write_forest(const Forest& forest, std::ostream& out) {
    out << "forest " << forest.ensemble.trees.size() << " seed " << forest.seed << '\n';
    for (std::size_t t = 0; t < forest.ensemble.trees.size(); ++t) {
        out << "tree " << t << '\n';
        for (const auto& node : forest.ensemble.trees[t].nodes()) {
            if (node.is_leaf()) {
                out << "leaf " << core::format_number(node.value) << ' ' << node.samples << '\n';
            } else {
                out << "split " << node.feature << ' ' << core::format_number(node.threshold) << ' ' << node.samples << '\n';
            }
        }
    }
}

// --- hyperparameter search -------------------------------------------------

std::size_t SearchSpace::size() const {
    return n_trees.size() * min_leaf.size() * max_depth.size() * subsample.size() * bootstrap.size();
}

RfHyperParams SearchSpace::at(std::size_t index) const {
    if (index >= size()) throw std::out_of_range("SearchSpace::at: index out of range");
    RfHyperParams p;
    auto take = [&index](std::size_t radix) {
        const std::size_t digit = index % radix;
        index /= radix;
        return digit;
    };
    p.n_trees = n_trees[take(n_trees.size())];
    p.min_leaf = min_leaf[take(min_leaf.size())];
    p.max_depth = max_depth[take(max_depth.size())];
    p.subsample = subsample[take(subsample.size())];
    p.bootstrap = bootstrap[take(bootstrap.size())];
    return p;
}

SearchSpace SearchSpace::from_settings(const core::RfSettings& settings) {
    SearchSpace space;
    space.n_trees = settings.n_trees;
    space.min_leaf = settings.min_leaf;
    for (int d : settings.max_depth) space.max_depth.push_back(d == 0 ? std::nullopt : std::optional<int>(d));
    space.subsample = settings.subsample;
    space.bootstrap = settings.bootstrap;
    return space;
}

double cv_mse(const Eigen::MatrixXd& x, std::span<const double> y, const RfHyperParams& params, int n_folds,
              std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(x.rows());
    if (n_folds < 2 || n < 2 * n_folds) {
        throw std::invalid_argument("cv_mse: need at least 2 rows per fold");
    }
    double sse = 0.0;
    for (int f = 0; f < n_folds; ++f) {
        const Eigen::Index lo = f * n / n_folds;
        const Eigen::Index hi = (f + 1) * n / n_folds;
        const Eigen::Index n_train = n - (hi - lo);
        Eigen::MatrixXd xt(n_train, x.cols());
        std::vector<double> yt(static_cast<std::size_t>(n_train));
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i >= lo && i < hi) continue;
            xt.row(r) = x.row(i);
            yt[static_cast<std::size_t>(r)] = y[static_cast<std::size_t>(i)];
            ++r;
        }
        const TreeEnsemble model = fit_ensemble(xt, yt, params, seed);
        for (Eigen::Index i = lo; i < hi; ++i) {
            const double e = y[static_cast<std::size_t>(i)] - model.predict(x.row(i).transpose());
            sse += e * e;
        }
    }
    return sse / static_cast<double>(n);
}

RfHyperParams cv_random_search(const Eigen::MatrixXd& x, std::span<const double> y, const SearchSpace& space,
                               int n_candidates, int n_folds, core::Rng& rng) {
    const std::size_t cardinality = space.size();
    if (cardinality == 0) throw std::invalid_argument("cv_random_search: empty search space");
    if (n_candidates < 1) throw std::invalid_argument("cv_random_search: n_candidates must be >= 1");
    const std::size_t draws = std::min(cardinality, static_cast<std::size_t>(n_candidates));
    std::vector<std::size_t> order(cardinality);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < draws; ++i) {
        std::swap(order[i], order[i + rng.index(cardinality - i)]);
    }
    const std::uint64_t fold_seed = rng.next_u64();

    RfHyperParams best = space.at(order[0]);
    if (draws == 1) return best;
    double best_score = INFINITY;
    for (std::size_t i = 0; i < draws; ++i) {
        const RfHyperParams candidate = space.at(order[i]);
        const double score = cv_mse(x, y, candidate, n_folds, fold_seed);
        if (score < best_score) {
            best_score = score;
            best = candidate;
        }
    }
    return best;
}

// --- rolling forecasts -----------------------------------------------------

Eigen::VectorXd build_features(const core::YieldPanel& yields, std::size_t maturity_column,
                               const core::IndicatorPanel& indicators, std::size_t t, int lags) {
    if (lags < 1) throw std::invalid_argument("build_features: lags must be >= 1");
    if (t >= yields.periods() || maturity_column >= yields.maturity_count()) {
        throw std::out_of_range("build_features: row or maturity out of range");
    }
    if (t + 1 < static_cast<std::size_t>(lags)) {
        throw std::out_of_range("build_features: insufficient yield history at row " + std::to_string(t));
    }
    const core::Month origin = yields.dates()[t];
    const auto p = static_cast<Eigen::Index>(indicators.series_count());
    Eigen::VectorXd w(lags * (p + 1));
    Eigen::Index pos = 0;
    for (int lag = 1; lag <= lags; ++lag) {
        const auto row = indicators.row_of(origin.plus(-lag));
        if (!row) {
            throw std::out_of_range("build_features: no indicator row for " + origin.plus(-lag).to_string());
        }
        w.segment(pos, p) = indicators.values().row(static_cast<Eigen::Index>(*row)).transpose();
        pos += p;
    }
    for (int lag = 0; lag < lags; ++lag) {
        w(pos++) = yields.values()(static_cast<Eigen::Index>(t) - lag, static_cast<Eigen::Index>(maturity_column));
    }
    return w;
}

core::ForecastSet rf_rolling_forecast(const core::YieldPanel& yields, const core::IndicatorPanel& indicators, double tau,
                                      const core::ExperimentConfig& cfg, std::uint64_t seed, int jobs) {
    cfg.validate();
    const auto column = yields.column_of(tau);
    if (!column) throw std::invalid_argument("rf_rolling_forecast: maturity " + core::format_number(tau) + " not in panel");
    const std::size_t T = yields.periods();
    const int lags = cfg.rf.lags;
    const auto rows = static_cast<std::size_t>(cfg.rf.train_rows);
    const SearchSpace space = SearchSpace::from_settings(cfg.rf);

    std::vector<std::optional<Eigen::VectorXd>> features(T);
    for (std::size_t s = 0; s < T; ++s) {
        try {
            features[s] = build_features(yields, *column, indicators, s, lags);
        } catch (const std::out_of_range&) {
        }
    }

    struct Task {
        int h;
        std::size_t t;
    };
    std::vector<Task> tasks;
    for (int h : cfg.horizons) {
        const auto hz = static_cast<std::size_t>(h);
        for (std::size_t t = hz + rows - 1; t + hz < T; ++t) {
            const std::size_t first = t - hz + 1 - rows;
            bool ready = features[t].has_value();
            for (std::size_t s = first; ready && s <= t - hz; ++s) ready = features[s].has_value();
            if (ready) tasks.push_back({h, t});
        }
    }
    if (tasks.empty()) {
        core::log().warn("RF maturity {}: no origin has {} training rows of history", core::format_number(tau), rows);
    }

    std::vector<std::optional<double>> results(tasks.size());
    core::parallel_for(tasks.size(), jobs, [&](std::size_t k) {
        const auto [h, t] = tasks[k];
        const auto hz = static_cast<std::size_t>(h);
        const std::size_t first = t - hz + 1 - rows;
        const Eigen::VectorXd& target_features = *features[t];

        // Drop predictors with a missing value anywhere in this window.
        std::vector<Eigen::Index> keep;
        for (Eigen::Index j = 0; j < target_features.size(); ++j) {
            bool complete = !std::isnan(target_features(j));
            for (std::size_t s = first; complete && s <= t - hz; ++s) complete = !std::isnan((*features[s])(j));
            if (complete) keep.push_back(j);
        }
        Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(keep.size()));
        Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
        Eigen::VectorXd x_new(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t c = 0; c < keep.size(); ++c) x_new(static_cast<Eigen::Index>(c)) = target_features(keep[c]);
        for (std::size_t i = 0; i < rows; ++i) {
            const std::size_t s = first + i;
            for (std::size_t c = 0; c < keep.size(); ++c) {
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = (*features[s])(keep[c]);
            }
            y(static_cast<Eigen::Index>(i)) =
                yields.values()(static_cast<Eigen::Index>(s + hz), static_cast<Eigen::Index>(*column));
        }
        if (keep.empty()) {
            core::log().warn("RF origin {} h={} skipped: no complete predictors", yields.dates()[t].to_string(), h);
            return;
        }

        core::Rng rng(core::derive_seed(core::derive_seed(seed, static_cast<std::uint64_t>(h)), t));
        const MinMaxScaler sx(x);
        const MinMaxScaler sy{Eigen::MatrixXd(y)};
        const Eigen::MatrixXd xn = sx.transform(x);
        const Eigen::VectorXd yn = sy.transform(Eigen::MatrixXd(y)).col(0);
        RfHyperParams params;
        try {
            params = cv_random_search(xn, std::span<const double>(yn.data(), rows), space, cfg.rf.n_candidates,
                                      cfg.rf.n_folds, rng);
        } catch (const std::exception& e) {
            core::log().warn("RF origin {} h={} skipped: {}", yields.dates()[t].to_string(), h, e.what());
            return;
        }
        const Forest forest = fit_forest(x, y, params, rng.next_u64());
        results[k] = forest.predict(x_new);
    });

    core::ForecastSet out;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (results[k]) out.insert({"RF", yields.dates()[tasks[k].t], tasks[k].h, tau}, *results[k]);
    }
    return out;
}

std::vector<core::ForecastSet> rf_rolling_forecast_seeds(const core::YieldPanel& yields,
                                                         const core::IndicatorPanel& indicators, double tau,
                                                         const core::ExperimentConfig& cfg, int jobs) {
    std::vector<core::ForecastSet> out;
    out.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds) out.push_back(rf_rolling_forecast(yields, indicators, tau, cfg, seed, jobs));
    return out;
}

}  // namespace robustcurve::forest

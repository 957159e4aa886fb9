#include "shiftem/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace shiftem {

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X, i);
    return out;
}

double RegressionTree::predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
        const Node& nd = nodes_[static_cast<std::size_t>(node)];
        node = X(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(node)].value;
}

int RegressionTree::leaf_index(const Eigen::MatrixXd& X, Eigen::Index row) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
        const Node& nd = nodes_[static_cast<std::size_t>(node)];
        node = X(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(node)].leaf_slot;
}

void RegressionTree::set_leaf_values(const std::vector<double>& values) {
    for (auto& nd : nodes_)
        if (nd.feature < 0) nd.value = values[static_cast<std::size_t>(nd.leaf_slot)];
}

TreeBuilder::TreeBuilder(const Eigen::MatrixXd& X) : X_(X) {
    const int p = static_cast<int>(X.cols());
    const int n = static_cast<int>(X.rows());
    sorted_.resize(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        auto& order = sorted_[static_cast<std::size_t>(j)];
        order.resize(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double va = X(a, j), vb = X(b, j);
            return va < vb || (va == vb && a < b);
        });
    }
}

namespace {

struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    int n_left = 0;
};

// Single left-to-right pass over a presorted ordering. Maximizes
// S_L^2/n_L + S_R^2/n_R (equivalent to SSE reduction).
BestSplit scan_feature(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::vector<int>& order, int feature, double total_sum,
                       double base_score, int min_leaf) {
    BestSplit best;
    const int n = static_cast<int>(order.size());
    double left_sum = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        const int row = order[static_cast<std::size_t>(i)];
        left_sum += y(row);
        const double v = X(row, feature);
        const double v_next = X(order[static_cast<std::size_t>(i + 1)], feature);
        if (v == v_next) continue;
        const int n_left = i + 1;
        const int n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double right_sum = total_sum - left_sum;
        const double score = left_sum * left_sum / n_left + right_sum * right_sum / n_right;
        const double gain = score - base_score;
        if (gain > best.gain) {
            best.feature = feature;
            best.threshold = v + 0.5 * (v_next - v);
            best.gain = gain;
            best.n_left = n_left;
        }
    }
    return best;
}

}  // namespace

int TreeBuilder::grow(RegressionTree& tree, const std::vector<std::vector<int>>& order,
                      const Eigen::VectorXd& y, int depth, const TreeParams& params) const {
    const int n = static_cast<int>(order[0].size());
    double sum = 0.0, sq = 0.0;
    for (int row : order[0]) {
        sum += y(row);
        sq += y(row) * y(row);
    }
    const double node_mean = sum / n;
    const double node_sse = std::max(0.0, sq - sum * sum / n);

    auto make_leaf = [&]() {
        const int id = static_cast<int>(tree.nodes_.size());
        RegressionTree::Node leaf;
        leaf.value = node_mean;
        leaf.leaf_slot = tree.n_leaves_++;
        tree.nodes_.push_back(leaf);
        tree.leaf_rows_.push_back(order[0]);
        return id;
    };

    if (depth >= params.max_depth || n < 2 * params.min_leaf || node_sse <= 0.0) return make_leaf();

    BestSplit best;
    const double base_score = sum * sum / n;
    for (int j = 0; j < static_cast<int>(order.size()); ++j) {
        const BestSplit cand = scan_feature(X_, y, order[static_cast<std::size_t>(j)], j, sum,
                                            base_score, params.min_leaf);
        if (cand.gain > best.gain) best = cand;
    }
    // Guard against float-noise splits on (near-)constant targets.
    if (best.feature < 0 || best.gain <= 1e-12 * (1.0 + node_sse)) return make_leaf();

    std::vector<char> goes_left(static_cast<std::size_t>(X_.rows()), 0);
    for (int row : order[0])
        goes_left[static_cast<std::size_t>(row)] = X_(row, best.feature) <= best.threshold;

    const std::size_t p = order.size();
    std::vector<std::vector<int>> left(p), right(p);
    for (std::size_t j = 0; j < p; ++j) {
        left[j].reserve(static_cast<std::size_t>(best.n_left));
        right[j].reserve(static_cast<std::size_t>(n - best.n_left));
        for (int row : order[j])
            (goes_left[static_cast<std::size_t>(row)] ? left[j] : right[j]).push_back(row);
    }

    const int id = static_cast<int>(tree.nodes_.size());
    RegressionTree::Node split;
    split.feature = best.feature;
    split.threshold = best.threshold;
    split.value = node_mean;
    tree.nodes_.push_back(split);
    const int left_id = grow(tree, left, y, depth + 1, params);
    const int right_id = grow(tree, right, y, depth + 1, params);
    tree.nodes_[static_cast<std::size_t>(id)].left = left_id;
    tree.nodes_[static_cast<std::size_t>(id)].right = right_id;
    return id;
}

RegressionTree TreeBuilder::build(const Eigen::VectorXd& y, const TreeParams& params) const {
    RegressionTree tree;
    grow(tree, sorted_, y, 0, params);
    return tree;
}

RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const TreeParams& params) {
    return TreeBuilder(X).build(y, params);
}

}  // namespace shiftem

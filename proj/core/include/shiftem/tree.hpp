#pragma once

#include <Eigen/Dense>
#include <vector>

namespace shiftem {

struct TreeParams {
    int max_depth = 6;
    int min_leaf = 5;
};

/// CART-style regression tree with variance-reduction splits at midpoints
/// between consecutive distinct values. Shared by the tree learner, the
/// boosted-stump learner, and the covariate stratifier of the direct density
/// estimator.
class RegressionTree {
   public:
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
    double predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const;

    /// Leaf slot for a row; leaves are numbered contiguously from 0.
    int leaf_index(const Eigen::MatrixXd& X, Eigen::Index row) const;
    int leaf_count() const { return n_leaves_; }

    /// Overwrite leaf predictions (Newton steps in boosting).
    void set_leaf_values(const std::vector<double>& values);
    /// Training rows per leaf slot, recorded at build time.
    const std::vector<std::vector<int>>& leaf_rows() const { return leaf_rows_; }

    bool empty() const { return nodes_.empty(); }

   private:
    friend class TreeBuilder;
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        double value = 0.0;
        int left = -1, right = -1;
        int leaf_slot = -1;
    };
    std::vector<Node> nodes_;
    std::vector<std::vector<int>> leaf_rows_;
    int n_leaves_ = 0;
};

/// Presorts feature orderings once so repeated builds (boosting rounds) pay
/// only the O(p * n) partition scans.
class TreeBuilder {
   public:
    explicit TreeBuilder(const Eigen::MatrixXd& X);

    RegressionTree build(const Eigen::VectorXd& y, const TreeParams& params) const;

   private:
    const Eigen::MatrixXd& X_;
    std::vector<std::vector<int>> sorted_;  // per feature, row ids ascending by value

    int grow(RegressionTree& tree, const std::vector<std::vector<int>>& order,
             const Eigen::VectorXd& y, int depth, const TreeParams& params) const;
};

RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const TreeParams& params);

}  // namespace shiftem

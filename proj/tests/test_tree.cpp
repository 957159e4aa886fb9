#include <doctest.h>

#include "shiftem/tree.hpp"
#include "testutil.hpp"

using namespace shiftem;

TEST_CASE("tree recovers a step function exactly") {
    Eigen::MatrixXd X(8, 1);
    X << 1, 2, 3, 4, 5, 6, 7, 8;
    Eigen::VectorXd y(8);
    y << 0, 0, 0, 0, 3, 3, 3, 3;
    TreeParams params;
    params.max_depth = 2;
    params.min_leaf = 1;
    const RegressionTree tree = fit_tree(X, y, params);
    CHECK(tree.predict(X).isApprox(y));
    CHECK(tree.leaf_count() == 2);
}

TEST_CASE("constant target yields a single leaf") {
    Eigen::MatrixXd X(6, 2);
    X.setRandom();
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(6, 1.5);
    const RegressionTree tree = fit_tree(X, y, TreeParams{});
    CHECK(tree.leaf_count() == 1);
    CHECK(tree.predict(X)(0) == doctest::Approx(1.5));
}

TEST_CASE("min_leaf blocks undersized splits") {
    Eigen::MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    Eigen::VectorXd y(4);
    y << 0, 0, 10, 10;
    TreeParams params;
    params.max_depth = 3;
    params.min_leaf = 3;
    const RegressionTree tree = fit_tree(X, y, params);
    CHECK(tree.leaf_count() == 1);  // any split leaves a side below 3 rows
}

TEST_CASE("leaf bookkeeping covers every training row exactly once") {
    auto rng = make_rng(7);
    const Eigen::MatrixXd X = testutil::random_matrix(120, 3, rng);
    const Eigen::VectorXd y = testutil::random_vector(120, rng);
    TreeParams params;
    params.max_depth = 3;
    params.min_leaf = 5;
    const RegressionTree tree = fit_tree(X, y, params);
    std::vector<int> seen(120, 0);
    for (const auto& rows : tree.leaf_rows())
        for (int r : rows) ++seen[static_cast<std::size_t>(r)];
    for (int s : seen) CHECK(s == 1);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const int leaf = tree.leaf_index(X, i);
        CHECK(leaf >= 0);
        CHECK(leaf < tree.leaf_count());
    }
}

TEST_CASE("set_leaf_values rewrites predictions") {
    Eigen::MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    Eigen::VectorXd y(4);
    y << 0, 0, 1, 1;
    TreeParams params;
    params.max_depth = 1;
    params.min_leaf = 1;
    RegressionTree tree = fit_tree(X, y, params);
    REQUIRE(tree.leaf_count() == 2);
    std::vector<double> values(2);
    values[static_cast<std::size_t>(tree.leaf_index(X, 0))] = -7.0;
    values[static_cast<std::size_t>(tree.leaf_index(X, 3))] = 9.0;
    tree.set_leaf_values(values);
    CHECK(tree.predict_row(X, 0) == -7.0);
    CHECK(tree.predict_row(X, 3) == 9.0);
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace floodml {

struct Hyperparams {
    double learning_rate = 0.01;
    int n_trees = 1000;
    int max_depth = 5;
    double l1_alpha = 1.0;
    double l2_lambda = 1.0;
    double colsample_bytree = 0.3;
    double min_split_gain = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Row-major numeric matrix used for training and prediction inputs.
struct DataMatrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<double> values;

    DataMatrix() = default;
    DataMatrix(int rows, int cols)
        : n_rows(rows), n_cols(cols), values(static_cast<std::size_t>(rows) * cols, 0.0) {}

    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * n_cols + c]; }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * n_cols + c]; }
    std::span<const double> row(int r) const {
        return {values.data() + static_cast<std::size_t>(r) * n_cols, static_cast<std::size_t>(n_cols)};
    }
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf_weight = 0.0;
    double gain = 0.0;  // split gain, internal nodes only

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;       // nodes[0] is the root
    std::vector<int> feature_subset;   // columns sampled for this tree, ascending

    double predict(std::span<const double> row) const;
};

struct GbdtModel {
    double base_score = 0.0;
    std::vector<RegressionTree> trees;
    int best_iteration = 0;  // prediction uses trees[0..best_iteration)
    Hyperparams hyperparams;
    std::vector<std::string> feature_names;

    double predict(std::span<const double> row) const;
};

/// w*(G, H) = -soft_threshold(G, alpha) / (H + lambda)
double soft_threshold(double g_sum, double alpha);
double leaf_weight(double g_sum, double h_sum, double alpha, double lambda);
/// Score(S) = soft_threshold(G_S, alpha)^2 / (H_S + lambda)
double node_score(double g_sum, double h_sum, double alpha, double lambda);

/// Called after every boosting iteration (1-based) with the RMSE of the
/// current ensemble on the training and validation sets.
using TrainObserver = std::function<void(int iteration, double train_rmse, double valid_rmse)>;

/// Squared-error boosting: gradient = prediction - target, unit hessian,
/// exact greedy splits over midpoints of consecutive distinct feature values,
/// ceil(colsample * n_features) columns per tree (at least 1) drawn from the
/// seeded generator. best_iteration minimizes validation RMSE (ties to the
/// smaller iteration, iteration 0 = base score only); with an empty
/// validation set all trees are kept.
GbdtModel train(const DataMatrix& x_train, std::span<const double> y_train,
                const DataMatrix& x_valid, std::span<const double> y_valid, const Hyperparams& hp,
                std::vector<std::string> feature_names = {},
                const TrainObserver& observer = nullptr);

struct ImportanceResult {
    std::vector<double> fractions;  // sums to 1, or uniform when degenerate
    bool degenerate = false;        // no split gain anywhere in trees[0..best_iteration)
};

/// Gain-based importance over trees[0..best_iteration), normalized to sum to 1.
ImportanceResult feature_importance(const GbdtModel& model);

void save_model(const GbdtModel& model, const std::filesystem::path& path);
GbdtModel load_model(const std::filesystem::path& path);

}  // namespace floodml

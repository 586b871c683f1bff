#include "floodml/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "floodml/common.hpp"

namespace floodml {

void Hyperparams::validate() const {
    if (learning_rate <= 0.0) throw Error("hyperparams: learning_rate must be > 0");
    if (n_trees < 1) throw Error("hyperparams: n_trees must be >= 1");
    if (max_depth < 0) throw Error("hyperparams: max_depth must be >= 0");
    if (l1_alpha < 0.0 || l2_lambda < 0.0) throw Error("hyperparams: negative regularization");
    if (colsample_bytree <= 0.0 || colsample_bytree > 1.0)
        throw Error("hyperparams: colsample_bytree must be in (0, 1]");
    if (min_split_gain < 0.0) throw Error("hyperparams: negative min_split_gain");
}

double soft_threshold(double g_sum, double alpha) {
    const double shrunk = std::abs(g_sum) - alpha;
    return shrunk <= 0.0 ? 0.0 : (g_sum > 0.0 ? shrunk : -shrunk);
}

double leaf_weight(double g_sum, double h_sum, double alpha, double lambda) {
    return -soft_threshold(g_sum, alpha) / (h_sum + lambda);
}

double node_score(double g_sum, double h_sum, double alpha, double lambda) {
    const double s = soft_threshold(g_sum, alpha);
    return s * s / (h_sum + lambda);
}

double RegressionTree::predict(std::span<const double> row) const {
    int node = 0;
    while (!nodes[node].is_leaf())
        node = row[nodes[node].feature] < nodes[node].threshold ? nodes[node].left : nodes[node].right;
    return nodes[node].leaf_weight;
}

double GbdtModel::predict(std::span<const double> row) const {
    if (static_cast<int>(row.size()) != static_cast<int>(feature_names.size()))
        throw Error("predict: row has " + std::to_string(row.size()) + " features, model expects " +
                    std::to_string(feature_names.size()));
    for (double v : row) require_finite(v, "feature value");
    double sum = 0.0;
    for (int t = 0; t < best_iteration; ++t) sum += trees[t].predict(row);
    return base_score + hyperparams.learning_rate * sum;
}

namespace {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const DataMatrix& x, const std::vector<double>& gradients, const Hyperparams& hp)
        : x_(x), g_(gradients), hp_(hp) {}

    RegressionTree build(const std::vector<int>& feature_subset) {
        RegressionTree tree;
        tree.feature_subset = feature_subset;
        std::vector<int> rows(x_.n_rows);
        std::iota(rows.begin(), rows.end(), 0);
        build_node(tree, rows, 0);
        return tree;
    }

private:
    int build_node(RegressionTree& tree, const std::vector<int>& rows, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        double g_sum = 0.0;
        for (int r : rows) g_sum += g_[r];
        const double h_sum = static_cast<double>(rows.size());

        SplitCandidate best;
        if (depth < hp_.max_depth && rows.size() >= 2) best = find_split(tree.feature_subset, rows, g_sum, h_sum);

        if (best.feature < 0 || best.gain <= hp_.min_split_gain) {
            tree.nodes[id].leaf_weight = leaf_weight(g_sum, h_sum, hp_.l1_alpha, hp_.l2_lambda);
            return id;
        }

        std::vector<int> left_rows, right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        for (int r : rows)
            (x_.at(r, best.feature) < best.threshold ? left_rows : right_rows).push_back(r);

        tree.nodes[id].feature = best.feature;
        tree.nodes[id].threshold = best.threshold;
        tree.nodes[id].gain = best.gain;
        const int left = build_node(tree, left_rows, depth + 1);
        const int right = build_node(tree, right_rows, depth + 1);
        tree.nodes[id].left = left;
        tree.nodes[id].right = right;
        return id;
    }

    /// Exact greedy scan. Features ascending, thresholds ascending, ties kept
    /// at the first candidate found, so the choice is reproducible.
    SplitCandidate find_split(const std::vector<int>& subset, const std::vector<int>& rows,
                              double g_sum, double h_sum) {
        const double parent = node_score(g_sum, h_sum, hp_.l1_alpha, hp_.l2_lambda);
        SplitCandidate best;
        std::vector<std::pair<double, int>> sorted;
        sorted.reserve(rows.size());
        for (int f : subset) {
            sorted.clear();
            for (int r : rows) sorted.emplace_back(x_.at(r, f), r);
            std::sort(sorted.begin(), sorted.end());

            double g_left = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                g_left += g_[sorted[i].second];
                if (sorted[i].first == sorted[i + 1].first) continue;
                const double h_left = static_cast<double>(i + 1);
                const double gain = 0.5 * (node_score(g_left, h_left, hp_.l1_alpha, hp_.l2_lambda) +
                                           node_score(g_sum - g_left, h_sum - h_left, hp_.l1_alpha,
                                                      hp_.l2_lambda) -
                                           parent);
                if (gain > best.gain) {
                    double threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
                    if (!(sorted[i].first < threshold && threshold <= sorted[i + 1].first))
                        threshold = sorted[i + 1].first;
                    best = {gain, f, threshold};
                }
            }
        }
        return best;
    }

    const DataMatrix& x_;
    const std::vector<double>& g_;
    const Hyperparams& hp_;
};

std::vector<int> sample_columns(Rng& rng, int n_features, double colsample) {
    const int k = std::max(1, static_cast<int>(std::ceil(colsample * n_features)));
    std::vector<int> pool(n_features);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(0, n_features - 1 - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

double rmse_of(std::span<const double> pred, std::span<const double> truth) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - truth[i];
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(pred.size()));
}

void check_finite(const DataMatrix& x, std::span<const double> y, const char* which) {
    for (double v : x.values)
        if (!std::isfinite(v)) throw Error(std::string("train: non-finite feature value in ") + which);
    for (double v : y)
        if (!std::isfinite(v)) throw Error(std::string("train: non-finite target value in ") + which);
}

}  // namespace

GbdtModel train(const DataMatrix& x_train, std::span<const double> y_train,
                const DataMatrix& x_valid, std::span<const double> y_valid, const Hyperparams& hp,
                std::vector<std::string> feature_names, const TrainObserver& observer) {
    hp.validate();
    if (x_train.n_rows < 1) throw Error("train: empty training set");
    if (static_cast<int>(y_train.size()) != x_train.n_rows)
        throw Error("train: y_train length does not match x_train rows");
    if (static_cast<int>(y_valid.size()) != x_valid.n_rows)
        throw Error("train: y_valid length does not match x_valid rows");
    if (x_valid.n_rows > 0 && x_valid.n_cols != x_train.n_cols)
        throw Error("train: column count mismatch between train and valid");
    check_finite(x_train, y_train, "training data");
    check_finite(x_valid, y_valid, "validation data");

    if (feature_names.empty())
        for (int f = 0; f < x_train.n_cols; ++f) feature_names.push_back("f" + std::to_string(f));
    if (static_cast<int>(feature_names.size()) != x_train.n_cols)
        throw Error("train: feature_names length does not match columns");

    GbdtModel model;
    model.hyperparams = hp;
    model.feature_names = std::move(feature_names);
    model.base_score = std::accumulate(y_train.begin(), y_train.end(), 0.0) /
                       static_cast<double>(y_train.size());

    const int n_train = x_train.n_rows;
    const int n_valid = x_valid.n_rows;
    std::vector<double> train_pred(n_train, model.base_score);
    std::vector<double> valid_pred(n_valid, model.base_score);
    std::vector<double> gradients(n_train, 0.0);

    const bool has_valid = n_valid > 0;
    double best_rmse = has_valid ? rmse_of(valid_pred, y_valid) : 0.0;
    model.best_iteration = 0;

    Rng rng(hp.seed);
    model.trees.reserve(hp.n_trees);
    for (int t = 0; t < hp.n_trees; ++t) {
        for (int i = 0; i < n_train; ++i) gradients[i] = train_pred[i] - y_train[i];
        const auto subset = sample_columns(rng, x_train.n_cols, hp.colsample_bytree);
        TreeBuilder builder(x_train, gradients, hp);
        model.trees.push_back(builder.build(subset));
        const RegressionTree& tree = model.trees.back();

        for (int i = 0; i < n_train; ++i)
            train_pred[i] += hp.learning_rate * tree.predict(x_train.row(i));
        for (int i = 0; i < n_valid; ++i)
            valid_pred[i] += hp.learning_rate * tree.predict(x_valid.row(i));

        double valid_rmse = 0.0;
        if (has_valid) {
            valid_rmse = rmse_of(valid_pred, y_valid);
            if (valid_rmse < best_rmse) {
                best_rmse = valid_rmse;
                model.best_iteration = t + 1;
            }
        }
        if (observer) observer(t + 1, rmse_of(train_pred, y_train), valid_rmse);
    }
    if (!has_valid) model.best_iteration = hp.n_trees;
    return model;
}

ImportanceResult feature_importance(const GbdtModel& model) {
    ImportanceResult result;
    const std::size_t p = model.feature_names.size();
    result.fractions.assign(p, 0.0);
    double total = 0.0;
    for (int t = 0; t < model.best_iteration; ++t)
        for (const TreeNode& node : model.trees[t].nodes)
            if (!node.is_leaf()) {
                result.fractions[node.feature] += node.gain;
                total += node.gain;
            }
    if (total <= 0.0) {
        result.degenerate = true;
        std::fill(result.fractions.begin(), result.fractions.end(), 1.0 / static_cast<double>(p));
        return result;
    }
    for (double& f : result.fractions) f /= total;
    return result;
}

namespace {
constexpr int kModelFormatVersion = 1;
constexpr const char* kModelFormatName = "floodml.gbdt";
}  // namespace

void save_model(const GbdtModel& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format"] = kModelFormatName;
    j["version"] = kModelFormatVersion;
    j["hyperparams"] = {{"learning_rate", model.hyperparams.learning_rate},
                        {"n_trees", model.hyperparams.n_trees},
                        {"max_depth", model.hyperparams.max_depth},
                        {"l1_alpha", model.hyperparams.l1_alpha},
                        {"l2_lambda", model.hyperparams.l2_lambda},
                        {"colsample_bytree", model.hyperparams.colsample_bytree},
                        {"min_split_gain", model.hyperparams.min_split_gain},
                        {"seed", model.hyperparams.seed}};
    j["feature_names"] = model.feature_names;
    j["base_score"] = model.base_score;
    j["best_iteration"] = model.best_iteration;

    nlohmann::json trees = nlohmann::json::array();
    for (const RegressionTree& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const TreeNode& n : tree.nodes)
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.leaf_weight, n.gain});
        trees.push_back({{"subset", tree.feature_subset}, {"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees);

    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump() << '\n';
}

GbdtModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("corrupt model file " + path.string() + ": " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kModelFormatName)
            throw Error("not a model file: " + path.string());
        const int version = j.at("version").get<int>();
        if (version > kModelFormatVersion)
            throw Error("model file " + path.string() + " has format version " +
                        std::to_string(version) + ", this build reads up to " +
                        std::to_string(kModelFormatVersion));

        GbdtModel model;
        const auto& hp = j.at("hyperparams");
        model.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
        model.hyperparams.n_trees = hp.at("n_trees").get<int>();
        model.hyperparams.max_depth = hp.at("max_depth").get<int>();
        model.hyperparams.l1_alpha = hp.at("l1_alpha").get<double>();
        model.hyperparams.l2_lambda = hp.at("l2_lambda").get<double>();
        model.hyperparams.colsample_bytree = hp.at("colsample_bytree").get<double>();
        model.hyperparams.min_split_gain = hp.at("min_split_gain").get<double>();
        model.hyperparams.seed = hp.at("seed").get<std::uint64_t>();
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        model.base_score = j.at("base_score").get<double>();
        model.best_iteration = j.at("best_iteration").get<int>();

        for (const auto& jt : j.at("trees")) {
            RegressionTree tree;
            tree.feature_subset = jt.at("subset").get<std::vector<int>>();
            for (const auto& jn : jt.at("nodes")) {
                TreeNode n;
                n.feature = jn.at(0).get<int>();
                n.threshold = jn.at(1).get<double>();
                n.left = jn.at(2).get<int>();
                n.right = jn.at(3).get<int>();
                n.leaf_weight = jn.at(4).get<double>();
                n.gain = jn.at(5).get<double>();
                tree.nodes.push_back(n);
            }
            model.trees.push_back(std::move(tree));
        }
        if (model.best_iteration > static_cast<int>(model.trees.size()))
            throw Error("model file " + path.string() + ": best_iteration exceeds tree count");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error("corrupt model file " + path.string() + ": " + e.what());
    }
}

}  // namespace floodml

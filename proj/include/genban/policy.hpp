#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "genban/core.hpp"

namespace genban {

enum class PolicyClass { Logistic, Tree, Tabular };
enum class FitCriterion { PerArmRewardRegression, LeastSquaresVsMax };

PolicyClass parse_policy_class(const std::string& s);
std::string to_string(PolicyClass c);
FitCriterion parse_fit_criterion(const std::string& s);
std::string to_string(FitCriterion c);

struct LogisticParams {
    double c = 1.0;                   // inverse L2 strength on the slopes
    double intercept_penalty = 1e-6;  // tiny ridge on the intercept keeps separable data finite
    std::size_t max_iter = 100;
    double tol = 1e-10;
};

struct BoostedTreeParams {
    std::size_t max_depth = 2;
    std::size_t rounds = 50;
    double learning_rate = 0.1;

    void validate() const;
};

struct PolicyFitParams {
    LogisticParams logistic;
    BoostedTreeParams tree;
};

// Node of a regression tree; a leaf when feature < 0.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;
    double predict(std::span<const double> x) const;
    std::size_t depth() const;
};

struct BoostedModel {
    double base = 0.0;
    double learning_rate = 0.1;
    std::vector<RegressionTree> trees;
    double predict(std::span<const double> x) const;
};

// Deterministic, time-invariant map from a context to an action.
class Policy {
public:
    static Policy constant(PolicyClass cls, std::size_t n_actions, Action a = 0);
    static Policy logistic(std::vector<Vec> coefficients);
    static Policy boosted(std::vector<BoostedModel> models);
    static Policy tabular(std::size_t n_actions, std::vector<std::pair<Vec, Action>> table);

    PolicyClass policy_class() const { return cls_; }
    std::size_t n_actions() const { return n_actions_; }
    // Per-arm fitted scores (logits for logistic, predicted rewards for trees).
    Vec scores(std::span<const double> x) const;
    // Highest score, ties to the lowest index. Unseen tabular contexts map to 0.
    Action act(std::span<const double> x) const;

    nlohmann::json to_json() const;

private:
    PolicyClass cls_ = PolicyClass::Tabular;
    std::size_t n_actions_ = 0;
    std::optional<Action> constant_;
    std::vector<Vec> coef_;                          // logistic: [intercept, slopes...] per arm
    std::vector<BoostedModel> boosted_;              // tree: one model per arm
    std::vector<std::pair<Vec, Action>> table_;      // tabular: sorted by context
};

// Lowest index among the maxima.
Action argmax_lowest(std::span<const double> v);

// Logistic regression of targets in [0, 1] on x with an intercept. Returns [b, w...].
Vec fit_logistic(const std::vector<Vec>& xs, std::span<const double> targets, const LogisticParams& p);
BoostedModel fit_boosted(const std::vector<Vec>& xs, std::span<const double> targets, const BoostedTreeParams& p);

// Fit pi*(.; tau) on the complete table. All-equal rewards give the constant
// policy 0. The least-squares-vs-max criterion is defined for tabular only.
Policy fit_policy(const TaskInstance& tau, PolicyClass cls, FitCriterion crit = FitCriterion::PerArmRewardRegression,
                  const RewardFn& r = {}, const PolicyFitParams& params = {});

// (1/T) sum_t R(Y_t^{(p(X_t))})
double evaluate_policy(const Policy& p, const TaskInstance& tau, const RewardFn& r = {});

} // namespace genban

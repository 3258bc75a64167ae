#include "genban/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "genban/env.hpp"
#include "genban/errors.hpp"
#include "genban/linalg.hpp"

namespace genban {

PolicyClass parse_policy_class(const std::string& s) {
    if (s == "logistic") return PolicyClass::Logistic;
    if (s == "tree") return PolicyClass::Tree;
    if (s == "tabular") return PolicyClass::Tabular;
    throw ConfigError("unknown policy class '" + s + "'");
}

std::string to_string(PolicyClass c) {
    switch (c) {
    case PolicyClass::Logistic: return "logistic";
    case PolicyClass::Tree: return "tree";
    case PolicyClass::Tabular: return "tabular";
    }
    return "?";
}

FitCriterion parse_fit_criterion(const std::string& s) {
    if (s == "per_arm_reward_regression") return FitCriterion::PerArmRewardRegression;
    if (s == "least_squares_vs_max") return FitCriterion::LeastSquaresVsMax;
    throw ConfigError("unknown fit criterion '" + s + "'");
}

std::string to_string(FitCriterion c) {
    return c == FitCriterion::PerArmRewardRegression ? "per_arm_reward_regression" : "least_squares_vs_max";
}

void BoostedTreeParams::validate() const {
    if (max_depth > 2) throw ConfigError("boosted trees: depth is limited to 2");
    if (rounds == 0) throw ConfigError("boosted trees: need at least one round");
    if (!(learning_rate > 0.0)) throw ConfigError("boosted trees: learning rate must be positive");
}

Action argmax_lowest(std::span<const double> v) {
    Action best = 0;
    for (Action a = 1; a < v.size(); ++a)
        if (v[a] > v[best]) best = a;
    return best;
}

// ---- trees ----

double RegressionTree::predict(std::span<const double> x) const {
    int i = 0;
    while (nodes[i].feature >= 0) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (nodes[i].feature >= 0) {
            d[nodes[i].left] = d[i] + 1;
            d[nodes[i].right] = d[i] + 1;
        }
    }
    return deepest;
}

double BoostedModel::predict(std::span<const double> x) const {
    double f = base;
    for (const auto& t : trees) f += learning_rate * t.predict(x);
    return f;
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exact greedy search over midpoints; strict improvement keeps the lowest
// feature and then the lowest threshold on ties.
Split best_split(const std::vector<Vec>& xs, std::span<const double> resid, const std::vector<char>& in_node,
                 const std::vector<std::vector<std::size_t>>& sorted_by_feature) {
    Split best;
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < resid.size(); ++i)
        if (in_node[i]) {
            total += resid[i];
            ++n;
        }
    if (n < 2) return best;
    const double parent = total * total / static_cast<double>(n);
    for (std::size_t f = 0; f < sorted_by_feature.size(); ++f) {
        double left_sum = 0.0;
        std::size_t left_n = 0;
        const auto& order = sorted_by_feature[f];
        std::size_t prev = order.size();
        for (std::size_t k = 0; k < order.size(); ++k) {
            const std::size_t i = order[k];
            if (!in_node[i]) continue;
            if (prev != order.size() && xs[i][f] > xs[prev][f] && left_n > 0 && left_n < n) {
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                                    right_sum * right_sum / static_cast<double>(n - left_n) - parent;
                if (gain > best.gain + 1e-12) {
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (xs[prev][f] + xs[i][f]);
                    best.gain = gain;
                }
            }
            left_sum += resid[i];
            ++left_n;
            prev = i;
        }
    }
    return best;
}

int grow(RegressionTree& tree, const std::vector<Vec>& xs, std::span<const double> resid, const std::vector<char>& in_node,
         const std::vector<std::vector<std::size_t>>& sorted, std::size_t depth_left) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < resid.size(); ++i)
        if (in_node[i]) {
            sum += resid[i];
            ++n;
        }
    tree.nodes[id].value = n ? sum / static_cast<double>(n) : 0.0;
    if (depth_left == 0) return id;
    const Split s = best_split(xs, resid, in_node, sorted);
    if (s.feature < 0) return id;
    std::vector<char> left(in_node.size(), 0), right(in_node.size(), 0);
    for (std::size_t i = 0; i < in_node.size(); ++i) {
        if (!in_node[i]) continue;
        (xs[i][s.feature] <= s.threshold ? left : right)[i] = 1;
    }
    tree.nodes[id].feature = s.feature;
    tree.nodes[id].threshold = s.threshold;
    const int l = grow(tree, xs, resid, left, sorted, depth_left - 1);
    const int r = grow(tree, xs, resid, right, sorted, depth_left - 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
}

double log1pexp(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

} // namespace

BoostedModel fit_boosted(const std::vector<Vec>& xs, std::span<const double> targets, const BoostedTreeParams& p) {
    p.validate();
    if (xs.size() != targets.size()) throw ContractError("fit_boosted: row count mismatch");
    BoostedModel model;
    model.learning_rate = p.learning_rate;
    const std::size_t n = xs.size();
    if (n == 0) return model;
    const std::size_t d = xs.front().size();
    model.base = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);

    std::vector<std::vector<std::size_t>> sorted(d);
    for (std::size_t f = 0; f < d; ++f) {
        sorted[f].resize(n);
        std::iota(sorted[f].begin(), sorted[f].end(), 0);
        std::stable_sort(sorted[f].begin(), sorted[f].end(),
                         [&](std::size_t i, std::size_t j) { return xs[i][f] < xs[j][f]; });
    }
    std::vector<double> fitted(n, model.base), resid(n);
    const std::vector<char> all(n, 1);
    for (std::size_t round = 0; round < p.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) resid[i] = targets[i] - fitted[i];
        RegressionTree tree;
        grow(tree, xs, resid, all, sorted, p.max_depth);
        for (std::size_t i = 0; i < n; ++i) fitted[i] += p.learning_rate * tree.predict(xs[i]);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

Vec fit_logistic(const std::vector<Vec>& xs, std::span<const double> targets, const LogisticParams& p) {
    if (xs.size() != targets.size()) throw ContractError("fit_logistic: row count mismatch");
    if (!(p.c > 0.0) || !(p.intercept_penalty > 0.0)) throw ConfigError("fit_logistic: penalties must be positive");
    const std::size_t n = xs.size();
    const std::size_t d = n ? xs.front().size() : 0;
    const std::size_t k = d + 1;
    Vec w(k, 0.0);
    auto eta_of = [&](const Vec& coef, std::size_t i) {
        double e = coef[0];
        for (std::size_t j = 0; j < d; ++j) e += coef[j + 1] * xs[i][j];
        return e;
    };
    auto objective = [&](const Vec& coef) {
        double f = 0.5 * p.intercept_penalty * coef[0] * coef[0];
        for (std::size_t j = 1; j < k; ++j) f += 0.5 * coef[j] * coef[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double e = eta_of(coef, i);
            f += p.c * (log1pexp(e) - targets[i] * e);
        }
        return f;
    };
    double f = objective(w);
    for (std::size_t iter = 0; iter < p.max_iter; ++iter) {
        Vec g(k, 0.0);
        Matrix h(k, k);
        g[0] = p.intercept_penalty * w[0];
        h(0, 0) = p.intercept_penalty;
        for (std::size_t j = 1; j < k; ++j) {
            g[j] = w[j];
            h(j, j) = 1.0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double s = logistic(eta_of(w, i));
            const double r = p.c * (s - targets[i]);
            const double v = p.c * s * (1.0 - s);
            g[0] += r;
            h(0, 0) += v;
            for (std::size_t a = 0; a < d; ++a) {
                const double xa = xs[i][a];
                g[a + 1] += r * xa;
                h(a + 1, 0) += v * xa;
                for (std::size_t b = 0; b <= a; ++b) h(a + 1, b + 1) += v * xa * xs[i][b];
            }
        }
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) h(a, b) = h(b, a);
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax < p.tol) break;
        Matrix lower;
        if (!cholesky(h, lower)) throw ContractError("fit_logistic: Hessian is not positive definite");
        const Vec step = cholesky_solve(lower, g);
        double decrease = 0.0;
        for (std::size_t j = 0; j < k; ++j) decrease += g[j] * step[j];
        // Half the Newton decrement estimates f - f*; below rounding level the
        // gradient test can never fire, so stop here instead.
        if (0.5 * decrease <= 1e-15 * (1.0 + std::abs(f))) break;
        double alpha = 1.0;
        Vec trial(k);
        bool moved = false;
        for (int ls = 0; ls < 50; ++ls) {
            for (std::size_t j = 0; j < k; ++j) trial[j] = w[j] - alpha * step[j];
            const double ft = objective(trial);
            if (ft <= f - 1e-4 * alpha * decrease) {
                w = trial;
                f = ft;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved || decrease < 1e-20) break;
    }
    return w;
}

// ---- policy ----

Policy Policy::constant(PolicyClass cls, std::size_t n_actions, Action a) {
    Policy p;
    p.cls_ = cls;
    p.n_actions_ = n_actions;
    p.constant_ = a;
    return p;
}

Policy Policy::logistic(std::vector<Vec> coefficients) {
    Policy p;
    p.cls_ = PolicyClass::Logistic;
    p.n_actions_ = coefficients.size();
    p.coef_ = std::move(coefficients);
    return p;
}

Policy Policy::boosted(std::vector<BoostedModel> models) {
    Policy p;
    p.cls_ = PolicyClass::Tree;
    p.n_actions_ = models.size();
    p.boosted_ = std::move(models);
    return p;
}

Policy Policy::tabular(std::size_t n_actions, std::vector<std::pair<Vec, Action>> table) {
    Policy p;
    p.cls_ = PolicyClass::Tabular;
    p.n_actions_ = n_actions;
    std::sort(table.begin(), table.end());
    p.table_ = std::move(table);
    return p;
}

Vec Policy::scores(std::span<const double> x) const {
    Vec s(n_actions_, 0.0);
    if (constant_) {
        s[*constant_] = 1.0;
        return s;
    }
    switch (cls_) {
    case PolicyClass::Logistic:
        for (Action a = 0; a < n_actions_; ++a) {
            const auto& c = coef_[a];
            if (x.size() + 1 != c.size()) throw ContractError("policy: context dimension mismatch");
            double e = c[0];
            for (std::size_t j = 0; j < x.size(); ++j) e += c[j + 1] * x[j];
            s[a] = e;
        }
        break;
    case PolicyClass::Tree:
        for (Action a = 0; a < n_actions_; ++a) s[a] = boosted_[a].predict(x);
        break;
    case PolicyClass::Tabular: {
        const Vec key(x.begin(), x.end());
        auto it = std::lower_bound(table_.begin(), table_.end(), key,
                                   [](const auto& entry, const Vec& k) { return entry.first < k; });
        const Action a = (it != table_.end() && it->first == key) ? it->second : 0;
        s[a] = 1.0;
        break;
    }
    }
    return s;
}

Action Policy::act(std::span<const double> x) const {
    if (constant_) return *constant_;
    return argmax_lowest(scores(x));
}

nlohmann::json Policy::to_json() const {
    nlohmann::json j;
    j["class"] = to_string(cls_);
    j["n_actions"] = n_actions_;
    if (constant_) {
        j["constant"] = *constant_;
        return j;
    }
    switch (cls_) {
    case PolicyClass::Logistic: j["coefficients"] = coef_; break;
    case PolicyClass::Tree: {
        auto arms = nlohmann::json::array();
        for (const auto& m : boosted_) {
            auto trees = nlohmann::json::array();
            for (const auto& t : m.trees) {
                auto nodes = nlohmann::json::array();
                for (const auto& nd : t.nodes)
                    nodes.push_back({{"feature", nd.feature},
                                     {"threshold", nd.threshold},
                                     {"left", nd.left},
                                     {"right", nd.right},
                                     {"value", nd.value}});
                trees.push_back(nodes);
            }
            arms.push_back({{"base", m.base}, {"learning_rate", m.learning_rate}, {"trees", trees}});
        }
        j["arms"] = arms;
        break;
    }
    case PolicyClass::Tabular: {
        auto rows = nlohmann::json::array();
        for (const auto& [k, a] : table_) rows.push_back({{"context", k}, {"action", a}});
        j["table"] = rows;
        break;
    }
    }
    return j;
}

Policy fit_policy(const TaskInstance& tau, PolicyClass cls, FitCriterion crit, const RewardFn& r,
                  const PolicyFitParams& params) {
    tau.validate();
    const std::size_t T = tau.horizon();
    const std::size_t A = tau.n_actions();
    if (crit == FitCriterion::LeastSquaresVsMax && cls != PolicyClass::Tabular)
        throw ContractError("fit_policy: least-squares-vs-max is only implemented for the tabular class");

    OutcomeTable rew(T, A);
    bool all_equal = true;
    for (std::size_t t = 0; t < T; ++t)
        for (Action a = 0; a < A; ++a) {
            rew.at(t, a) = r(tau.outcomes.at(t, a));
            if (rew.at(t, a) != rew.at(0, 0)) all_equal = false;
        }
    if (all_equal) return Policy::constant(cls, A, 0);

    switch (cls) {
    case PolicyClass::Logistic: {
        std::vector<Vec> coefs;
        Vec targets(T);
        for (Action a = 0; a < A; ++a) {
            for (std::size_t t = 0; t < T; ++t) targets[t] = rew.at(t, a);
            coefs.push_back(fit_logistic(tau.contexts, targets, params.logistic));
        }
        return Policy::logistic(std::move(coefs));
    }
    case PolicyClass::Tree: {
        std::vector<BoostedModel> models;
        Vec targets(T);
        for (Action a = 0; a < A; ++a) {
            for (std::size_t t = 0; t < T; ++t) targets[t] = rew.at(t, a);
            models.push_back(fit_boosted(tau.contexts, targets, params.tree));
        }
        return Policy::boosted(std::move(models));
    }
    case PolicyClass::Tabular: {
        std::map<Vec, std::vector<std::size_t>> groups;
        for (std::size_t t = 0; t < T; ++t) groups[tau.contexts[t]].push_back(t);
        std::vector<std::pair<Vec, Action>> table;
        for (const auto& [x, ts] : groups) {
            Vec score(A, 0.0);
            for (Action a = 0; a < A; ++a) {
                for (auto t : ts) {
                    if (crit == FitCriterion::PerArmRewardRegression) {
                        score[a] += rew.at(t, a);
                    } else {
                        double best = rew.at(t, 0);
                        for (Action b = 1; b < A; ++b) best = std::max(best, rew.at(t, b));
                        const double gap = rew.at(t, a) - best;
                        score[a] -= gap * gap;
                    }
                }
                score[a] /= static_cast<double>(ts.size());
            }
            table.emplace_back(x, argmax_lowest(score));
        }
        return Policy::tabular(A, std::move(table));
    }
    }
    throw ContractError("fit_policy: unknown policy class");
}

double evaluate_policy(const Policy& p, const TaskInstance& tau, const RewardFn& r) {
    double total = 0.0;
    for (std::size_t t = 0; t < tau.horizon(); ++t) total += r(tau.outcomes.at(t, p.act(tau.contexts[t])));
    return total / static_cast<double>(tau.horizon());
}

} // namespace genban

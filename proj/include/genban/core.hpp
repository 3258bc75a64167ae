#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace genban {

using Vec = std::vector<double>;
using Action = std::size_t;

// Z_tau: one feature vector per action, constant dimension within a task.
struct PriorInfo {
    std::vector<Vec> per_action_features;

    std::size_t n_actions() const { return per_action_features.size(); }
    std::size_t dim() const { return per_action_features.empty() ? 0 : per_action_features.front().size(); }
    std::span<const double> feature(Action a) const { return per_action_features.at(a); }
    void validate() const;
};

// Complete T x |A| potential-outcome table, row-major by timestep.
class OutcomeTable {
public:
    OutcomeTable() = default;
    OutcomeTable(std::size_t horizon, std::size_t n_actions, double fill = 0.0)
        : horizon_(horizon), n_actions_(n_actions), values_(horizon * n_actions, fill) {}

    double& at(std::size_t t, Action a) { return values_[t * n_actions_ + a]; }
    double at(std::size_t t, Action a) const { return values_[t * n_actions_ + a]; }
    std::size_t horizon() const { return horizon_; }
    std::size_t n_actions() const { return n_actions_; }
    const std::vector<double>& values() const { return values_; }

    friend bool operator==(const OutcomeTable&, const OutcomeTable&) = default;

private:
    std::size_t horizon_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<double> values_;
};

// One bandit task tau: Z, X_{1:T} and every Y_t^{(a)}.
struct TaskInstance {
    PriorInfo prior_info;
    std::vector<Vec> contexts;
    OutcomeTable outcomes;

    std::size_t horizon() const { return contexts.size(); }
    std::size_t n_actions() const { return outcomes.n_actions(); }
    // Throws ContractError when the table is incomplete or shapes disagree.
    void validate() const;
};

nlohmann::json task_to_json(const TaskInstance& task);
TaskInstance task_from_json(const nlohmann::json& j);

// Maps an outcome to a reward in [0, 1]. The default is the identity, clamped.
class RewardFn {
public:
    RewardFn() = default;
    explicit RewardFn(std::function<double(double)> map) : map_(std::move(map)) {}

    double operator()(double y) const;
    bool is_identity() const { return !map_; }

private:
    std::function<double(double)> map_;
};

inline double reward(const RewardFn& r, double y) { return r(y); }

struct Step {
    Vec context;
    Action action = 0;
    double outcome = 0.0;
};

// H_t: prior info, past (X, A, Y) triples and the current context. Only the
// taken action's outcome is ever recorded. Append-only.
class History {
public:
    History() = default;
    explicit History(PriorInfo prior_info) : prior_info_(std::move(prior_info)) {}

    void observe_context(Vec x);
    // Requires current_context() == x; clears the current context afterwards.
    void append_step(const Vec& x, Action a, double y);

    const PriorInfo& prior_info() const { return prior_info_; }
    const std::vector<Step>& steps() const { return steps_; }
    const std::optional<Vec>& current_context() const { return current_; }
    std::size_t size() const { return steps_.size(); }

    // Byte layout, every field a little-endian IEEE-754 f64, in order:
    //   n_actions, prior_dim, Z^{(0)}..Z^{(A-1)},
    //   n_steps, then per step: context_dim, context..., action, outcome,
    //   has_current (0/1), then (if present) context_dim, context...
    std::vector<std::uint8_t> serialize() const;
    std::uint64_t hash() const;

private:
    PriorInfo prior_info_;
    std::vector<Step> steps_;
    std::optional<Vec> current_;
};

History append_step(History h, const Vec& x, Action a, double y);

} // namespace genban

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "genban/agents.hpp"
#include "genban/env.hpp"
#include "genban/policy.hpp"

namespace genban {

struct ExperimentOptions {
    std::size_t n_tasks = 1;
    std::size_t horizon = 1;
    std::size_t n_actions = 2;
    std::uint64_t seed = 0;
    ContextMode context_mode = ContextMode::Fixed;
    // Oracle fitter; use the same class as the agent's imputation-time fitter.
    PolicyClass oracle_class = PolicyClass::Logistic;
    FitCriterion oracle_criterion = FitCriterion::PerArmRewardRegression;
    PolicyFitParams fit;
    RewardFn reward;

    void validate() const;
};

struct TaskTrace {
    std::vector<double> oracle_reward;
    std::vector<double> realized_reward;
    std::vector<Action> actions;

    double final_cum_regret() const;
};

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v);

struct RegretTrace {
    std::string agent;
    std::vector<TaskTrace> tasks;

    std::size_t horizon() const { return tasks.empty() ? 0 : tasks.front().oracle_reward.size(); }
    // Mean and s.e. across tasks of the cumulative regret after each step.
    std::vector<MeanSe> cumulative_regret() const;
    // Mean and s.e. of the per-task final cumulative regret.
    MeanSe final_regret() const;
    // Per-period regret (final cumulative regret / T).
    MeanSe per_period_regret() const;
    std::vector<double> final_per_task() const;
};

// Common random numbers: task i is drawn from stream (seed, i, "task") for
// every agent, and the agent's draws at step t come from
// (seed, i, "agent/" + name) child ("step", t).
RegretTrace run_experiment(const TaskGenerator& gen, const Agent& agent, const ExperimentOptions& opts);
// Reference single-threaded version; results are bit-identical.
RegretTrace run_experiment_serial(const TaskGenerator& gen, const Agent& agent, const ExperimentOptions& opts);

// Regret of a on each task minus regret of b, with its standard error.
MeanSe paired_final_difference(const RegretTrace& a, const RegretTrace& b);

void write_trace_csv(const std::string& path, const std::vector<RegretTrace>& traces, const std::string& provenance);
nlohmann::json summary_json(const std::vector<RegretTrace>& traces);

} // namespace genban

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "genban/core.hpp"
#include "genban/generation.hpp"
#include "genban/linalg.hpp"
#include "genban/policy.hpp"
#include "genban/rng.hpp"
#include "genban/seqmodel.hpp"

namespace genban {

enum class AgentVariant { TsGen, Greedy, EpsilonGreedy, Softmax, LinearTs, LinUcb, Uniform, Oracle };

AgentVariant parse_agent_variant(const std::string& s);
std::string to_string(AgentVariant v);

struct AgentConfig {
    AgentVariant variant = AgentVariant::TsGen;
    double epsilon = 0.1;
    double temperature = 0.05;
    double ucb_alpha = 0.1;
    double lin_ts_noise_var = 0.25;
    double lin_prior_var = 1.0;
    PolicyClass policy_class = PolicyClass::Logistic;
    FitCriterion criterion = FitCriterion::PerArmRewardRegression;
    PolicyFitParams fit;
    std::string label;  // display name; defaults to the variant name

    void validate() const;
    std::string name() const { return label.empty() ? to_string(variant) : label; }
};

// What an agent may look at when deciding. `task` is privileged and only the
// oracle agent reads it.
struct DecisionContext {
    const History& history;
    std::size_t horizon;
    ContextSource contexts;
    RewardFn reward;
    const TaskInstance* task = nullptr;
    // Oracle policy already fitted on `task`; saves the oracle agent a refit per step.
    const Policy* oracle_policy = nullptr;
};

class Agent {
public:
    virtual ~Agent() = default;
    virtual std::string name() const = 0;
    // Pure function of (context, rng); agents keep no state between calls.
    virtual Action select(const DecisionContext& ctx, RngStream& rng) const = 0;
};

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg, std::shared_ptr<const SequenceModel> model);

// ---- step functions ----

// Model state of every arm after folding its observed (x, y) pairs.
std::vector<SeqState> arm_states(const SequenceModel& m, const History& h);
// Expected reward of each arm at the current context under the model.
Vec arm_predictives(const SequenceModel& m, const History& h, const RewardFn& r = {});

// Impute a full table, fit pi* on it, act on the current context.
Action ts_gen_step(const SequenceModel& m, const History& h, const ContextSource& contexts, std::size_t horizon,
                   const AgentConfig& cfg, RngStream& rng, const RewardFn& r = {});
Action greedy_step(const SequenceModel& m, const History& h, const RewardFn& r = {});
Action epsilon_greedy_step(const SequenceModel& m, const History& h, double epsilon, RngStream& rng,
                           const RewardFn& r = {});
// exp(r_a / temperature) normalized, computed stably.
Vec softmax_probs(std::span<const double> scores, double temperature);
Action softmax_step(const SequenceModel& m, const History& h, double temperature, RngStream& rng,
                    const RewardFn& r = {});

// Gaussian posterior over one arm's coefficients: prior N(0, prior_var I),
// likelihood y ~ N(x . beta, noise_var), using only the arm's (x, R(y)) pairs.
struct LinearPosterior {
    Vec mean;
    Matrix covariance;
    Matrix precision;
};
LinearPosterior linear_posterior(const History& h, Action a, std::size_t d, double noise_var, double prior_var,
                                 const RewardFn& r = {});
Action linear_ts_step(const History& h, const AgentConfig& cfg, RngStream& rng, const RewardFn& r = {});

// x . A^{-1} b + alpha sqrt(x . A^{-1} x) with A = I + sum x x^T, b = sum x R(y).
Vec linucb_scores(const History& h, double alpha, const RewardFn& r = {});
Action linucb_step(const History& h, double alpha, const RewardFn& r = {});

} // namespace genban

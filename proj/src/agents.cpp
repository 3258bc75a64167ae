#include "genban/agents.hpp"

#include <cmath>

#include "genban/errors.hpp"

namespace genban {

AgentVariant parse_agent_variant(const std::string& s) {
    if (s == "ts_gen") return AgentVariant::TsGen;
    if (s == "greedy") return AgentVariant::Greedy;
    if (s == "epsilon_greedy") return AgentVariant::EpsilonGreedy;
    if (s == "softmax") return AgentVariant::Softmax;
    if (s == "linear_ts") return AgentVariant::LinearTs;
    if (s == "linucb") return AgentVariant::LinUcb;
    if (s == "uniform") return AgentVariant::Uniform;
    if (s == "oracle") return AgentVariant::Oracle;
    throw ConfigError("unknown agent variant '" + s + "'");
}

std::string to_string(AgentVariant v) {
    switch (v) {
    case AgentVariant::TsGen: return "ts_gen";
    case AgentVariant::Greedy: return "greedy";
    case AgentVariant::EpsilonGreedy: return "epsilon_greedy";
    case AgentVariant::Softmax: return "softmax";
    case AgentVariant::LinearTs: return "linear_ts";
    case AgentVariant::LinUcb: return "linucb";
    case AgentVariant::Uniform: return "uniform";
    case AgentVariant::Oracle: return "oracle";
    }
    return "?";
}

void AgentConfig::validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("agent: epsilon must lie in [0, 1]");
    if (!(temperature > 0.0)) throw ConfigError("agent: softmax temperature must be positive");
    if (!(ucb_alpha >= 0.0)) throw ConfigError("agent: LinUCB alpha must be >= 0");
    if (!(lin_ts_noise_var > 0.0) || !(lin_prior_var > 0.0))
        throw ConfigError("agent: linear TS variances must be positive");
    fit.tree.validate();
}

// ---- helpers ----

namespace {

const Vec& current(const History& h) {
    if (!h.current_context()) throw ContractError("agent: no current context observed");
    return *h.current_context();
}

double expected_reward(const RewardFn& r, double p) {
    if (r.is_identity()) return p;
    return p * r(1.0) + (1.0 - p) * r(0.0);
}

} // namespace

std::vector<SeqState> arm_states(const SequenceModel& m, const History& h) {
    const auto& prior = h.prior_info();
    std::vector<SeqState> states;
    states.reserve(prior.n_actions());
    for (Action a = 0; a < prior.n_actions(); ++a) states.push_back(m.initial_state(prior.feature(a)));
    for (const auto& s : h.steps()) m.update(states[s.action], prior.feature(s.action), s.context, s.outcome);
    return states;
}

Vec arm_predictives(const SequenceModel& m, const History& h, const RewardFn& r) {
    const auto& x = current(h);
    const auto states = arm_states(m, h);
    Vec out(states.size());
    for (Action a = 0; a < states.size(); ++a)
        out[a] = expected_reward(r, m.predict(h.prior_info().feature(a), states[a], x));
    return out;
}

Action ts_gen_step(const SequenceModel& m, const History& h, const ContextSource& contexts, std::size_t horizon,
                   const AgentConfig& cfg, RngStream& rng, const RewardFn& r) {
    auto impute_rng = rng.child("impute");
    const TaskInstance imputed = impute_task(m, h, contexts, horizon, impute_rng);
    const Policy pi = fit_policy(imputed, cfg.policy_class, cfg.criterion, r, cfg.fit);
    return pi.act(current(h));
}

Action greedy_step(const SequenceModel& m, const History& h, const RewardFn& r) {
    return argmax_lowest(arm_predictives(m, h, r));
}

Action epsilon_greedy_step(const SequenceModel& m, const History& h, double epsilon, RngStream& rng,
                           const RewardFn& r) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon-greedy: epsilon must lie in [0, 1]");
    const std::size_t A = h.prior_info().n_actions();
    // Both draws are always taken so the stream position never depends on the branch.
    const bool explore = rng.uniform() < epsilon;
    const Action random_arm = static_cast<Action>(rng.uniform_index(A));
    return explore ? random_arm : greedy_step(m, h, r);
}

Vec softmax_probs(std::span<const double> scores, double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("softmax: temperature must be positive");
    Vec p(scores.size());
    if (scores.empty()) return p;
    double top = scores[0];
    for (double s : scores) top = std::max(top, s);
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp((scores[i] - top) / temperature);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

Action softmax_step(const SequenceModel& m, const History& h, double temperature, RngStream& rng,
                    const RewardFn& r) {
    const Vec p = softmax_probs(arm_predictives(m, h, r), temperature);
    const double u = rng.uniform();
    double acc = 0.0;
    for (Action a = 0; a < p.size(); ++a) {
        acc += p[a];
        if (u < acc) return a;
    }
    return p.size() - 1;
}

LinearPosterior linear_posterior(const History& h, Action a, std::size_t d, double noise_var, double prior_var,
                                 const RewardFn& r) {
    Matrix precision(d, d);
    for (std::size_t i = 0; i < d; ++i) precision(i, i) = 1.0 / prior_var;
    Vec b(d, 0.0);
    for (const auto& s : h.steps()) {
        if (s.action != a) continue;
        if (s.context.size() != d) throw ContractError("linear posterior: context dimension mismatch");
        const double y = r(s.outcome);
        for (std::size_t i = 0; i < d; ++i) {
            b[i] += s.context[i] * y / noise_var;
            for (std::size_t j = 0; j < d; ++j) precision(i, j) += s.context[i] * s.context[j] / noise_var;
        }
    }
    LinearPosterior post;
    post.covariance = spd_inverse(precision);
    post.mean = matvec(post.covariance, b);
    post.precision = std::move(precision);
    return post;
}

Action linear_ts_step(const History& h, const AgentConfig& cfg, RngStream& rng, const RewardFn& r) {
    const auto& x = current(h);
    const std::size_t d = x.size();
    const std::size_t A = h.prior_info().n_actions();
    Vec score(A);
    for (Action a = 0; a < A; ++a) {
        const auto post = linear_posterior(h, a, d, cfg.lin_ts_noise_var, cfg.lin_prior_var, r);
        // beta = mean + L xi with covariance = L L^T.
        Matrix lower;
        if (!cholesky(post.covariance, lower)) throw ContractError("linear TS: covariance is not positive definite");
        auto arm_rng = rng.child("arm", a);
        Vec xi(d);
        for (auto& v : xi) v = arm_rng.normal();
        Vec beta = post.mean;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j <= i; ++j) beta[i] += lower(i, j) * xi[j];
        score[a] = dot(beta, x);
    }
    return argmax_lowest(score);
}

Vec linucb_scores(const History& h, double alpha, const RewardFn& r) {
    if (!(alpha >= 0.0)) throw ConfigError("LinUCB: alpha must be >= 0");
    const auto& x = current(h);
    const std::size_t d = x.size();
    const std::size_t A = h.prior_info().n_actions();
    Vec score(A);
    for (Action a = 0; a < A; ++a) {
        Matrix design = Matrix::identity(d);
        Vec b(d, 0.0);
        for (const auto& s : h.steps()) {
            if (s.action != a) continue;
            if (s.context.size() != d) throw ContractError("LinUCB: context dimension mismatch");
            const double y = r(s.outcome);
            for (std::size_t i = 0; i < d; ++i) {
                b[i] += s.context[i] * y;
                for (std::size_t j = 0; j < d; ++j) design(i, j) += s.context[i] * s.context[j];
            }
        }
        Matrix lower;
        if (!cholesky(design, lower)) throw ContractError("LinUCB: design matrix is not positive definite");
        const Vec theta = cholesky_solve(lower, b);
        const Vec ainv_x = cholesky_solve(lower, x);
        score[a] = dot(x, theta) + alpha * std::sqrt(std::max(0.0, dot(x, ainv_x)));
    }
    return score;
}

Action linucb_step(const History& h, double alpha, const RewardFn& r) { return argmax_lowest(linucb_scores(h, alpha, r)); }

// ---- agent objects ----

namespace {

class ModelAgent : public Agent {
public:
    ModelAgent(AgentConfig cfg, std::shared_ptr<const SequenceModel> model) : cfg_(std::move(cfg)), model_(std::move(model)) {
        if (!model_) throw ConfigError("agent '" + cfg_.name() + "' needs a sequence model");
    }
    std::string name() const override { return cfg_.name(); }

    Action select(const DecisionContext& ctx, RngStream& rng) const override {
        switch (cfg_.variant) {
        case AgentVariant::TsGen:
            return ts_gen_step(*model_, ctx.history, ctx.contexts, ctx.horizon, cfg_, rng, ctx.reward);
        case AgentVariant::Greedy: return greedy_step(*model_, ctx.history, ctx.reward);
        case AgentVariant::EpsilonGreedy:
            return epsilon_greedy_step(*model_, ctx.history, cfg_.epsilon, rng, ctx.reward);
        case AgentVariant::Softmax: return softmax_step(*model_, ctx.history, cfg_.temperature, rng, ctx.reward);
        default: break;
        }
        throw ContractError("model agent: unsupported variant");
    }

private:
    AgentConfig cfg_;
    std::shared_ptr<const SequenceModel> model_;
};

class ModelFreeAgent : public Agent {
public:
    explicit ModelFreeAgent(AgentConfig cfg) : cfg_(std::move(cfg)) {}
    std::string name() const override { return cfg_.name(); }

    Action select(const DecisionContext& ctx, RngStream& rng) const override {
        const std::size_t A = ctx.history.prior_info().n_actions();
        switch (cfg_.variant) {
        case AgentVariant::LinearTs: return linear_ts_step(ctx.history, cfg_, rng, ctx.reward);
        case AgentVariant::LinUcb: return linucb_step(ctx.history, cfg_.ucb_alpha, ctx.reward);
        case AgentVariant::Uniform: return static_cast<Action>(rng.uniform_index(A));
        case AgentVariant::Oracle: {
            if (ctx.oracle_policy) return ctx.oracle_policy->act(current(ctx.history));
            if (!ctx.task) throw ContractError("oracle agent: no privileged task available");
            const Policy pi = fit_policy(*ctx.task, cfg_.policy_class, cfg_.criterion, ctx.reward, cfg_.fit);
            return pi.act(current(ctx.history));
        }
        default: break;
        }
        throw ContractError("model-free agent: unsupported variant");
    }

private:
    AgentConfig cfg_;
};

} // namespace

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg, std::shared_ptr<const SequenceModel> model) {
    cfg.validate();
    switch (cfg.variant) {
    case AgentVariant::TsGen:
    case AgentVariant::Greedy:
    case AgentVariant::EpsilonGreedy:
    case AgentVariant::Softmax: return std::make_unique<ModelAgent>(cfg, std::move(model));
    default: return std::make_unique<ModelFreeAgent>(cfg);
    }
}

} // namespace genban

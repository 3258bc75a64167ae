#include "genban/generation.hpp"

#include <fstream>

#include "genban/errors.hpp"

namespace genban {

ContextMode parse_context_mode(const std::string& s) {
    if (s == "fixed") return ContextMode::Fixed;
    if (s == "resampled") return ContextMode::Resampled;
    throw ConfigError("unknown context mode '" + s + "' (expected fixed or resampled)");
}

std::string to_string(ContextMode m) { return m == ContextMode::Fixed ? "fixed" : "resampled"; }

ContextSource ContextSource::fixed(std::span<const Vec> contexts) {
    ContextSource s;
    s.mode_ = ContextMode::Fixed;
    s.fixed_ = contexts;
    return s;
}

ContextSource ContextSource::resampled(const TaskGenerator& gen) {
    ContextSource s;
    s.mode_ = ContextMode::Resampled;
    s.gen_ = &gen;
    return s;
}

Vec ContextSource::future(std::size_t t, const RngStream& rng) const {
    if (mode_ == ContextMode::Fixed) {
        if (t >= fixed_.size()) throw ContractError("context source: timestep beyond the fixed contexts");
        return fixed_[t];
    }
    auto r = rng.child("context", t);
    return gen_->sample_context(r);
}

MissingnessMask build_mask(const History& h, std::size_t n_actions, std::size_t horizon) {
    if (h.size() > horizon) throw ContractError("mask: history longer than the horizon");
    MissingnessMask mask;
    mask.observed.assign(n_actions, std::vector<char>(horizon, 0));
    for (std::size_t i = 0; i < h.size(); ++i) {
        const Action a = h.steps()[i].action;
        if (a >= n_actions) throw ContractError("mask: action index out of range");
        mask.observed[a][i] = 1;
    }
    return mask;
}

std::vector<std::size_t> arm_ordering(const MissingnessMask& mask, Action a) {
    const auto& obs = mask.observed.at(a);
    std::vector<std::size_t> order;
    order.reserve(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i)
        if (obs[i]) order.push_back(i);
    for (std::size_t i = 0; i < obs.size(); ++i)
        if (!obs[i]) order.push_back(i);
    return order;
}

TaskInstance impute_task(const SequenceModel& m, const History& h, const ContextSource& contexts,
                         std::size_t horizon, RngStream& rng, const ImputeOptions& opts) {
    if (!h.current_context()) throw ContractError("impute_task: no current context in the history");
    const std::size_t t_now = h.size();
    if (t_now >= horizon) throw ContractError("impute_task: decision time is past the horizon");
    const std::size_t n_actions = h.prior_info().n_actions();
    if (n_actions == 0) throw ContractError("impute_task: history has no actions");

    TaskInstance out;
    out.prior_info = h.prior_info();
    out.contexts.reserve(horizon);
    for (const auto& s : h.steps()) out.contexts.push_back(s.context);
    out.contexts.push_back(*h.current_context());
    // The current context is revealed, so only later ones are generated.
    auto ctx_rng = rng.child("contexts");
    for (std::size_t i = t_now + 1; i < horizon; ++i) out.contexts.push_back(contexts.future(i, ctx_rng));

    const auto mask = build_mask(h, n_actions, horizon);
    out.outcomes = OutcomeTable(horizon, n_actions);
    for (Action a = 0; a < n_actions; ++a) {
        const auto z = out.prior_info.feature(a);
        auto arm_rng = rng.child("impute_arm", a);
        SeqState state = m.initial_state(z);
        for (std::size_t i : arm_ordering(mask, a)) {
            const auto& x = out.contexts[i];
            double y;
            if (!mask.missing(a, i)) {
                y = h.steps()[i].outcome;
            } else {
                y = arm_rng.bernoulli(m.predict(z, state, x)) ? 1.0 : 0.0;
            }
            out.outcomes.at(i, a) = y;
            m.update(state, z, x, y);
        }
    }

    if (!opts.dump_path.empty()) {
        std::ofstream f(opts.dump_path, std::ios::app);
        if (!f) throw IoError("cannot open " + opts.dump_path);
        f << task_to_json(out).dump() << '\n';
    }
    return out;
}

} // namespace genban

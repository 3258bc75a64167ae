#include "genban/eval.hpp"

#include <cmath>
#include <fstream>

#include "genban/errors.hpp"

namespace genban {

void ExperimentOptions::validate() const {
    if (n_tasks == 0) throw ConfigError("experiment: n_tasks must be >= 1");
    if (horizon == 0) throw ConfigError("experiment: horizon must be >= 1");
    if (n_actions == 0) throw ConfigError("experiment: n_actions must be >= 1");
    fit.tree.validate();
}

double TaskTrace::final_cum_regret() const {
    double c = 0.0;
    for (std::size_t t = 0; t < oracle_reward.size(); ++t) c += oracle_reward[t] - realized_reward[t];
    return c;
}

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe out;
    if (v.empty()) return out;
    for (double x : v) out.mean += x;
    out.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - out.mean) * (x - out.mean);
        out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return out;
}

std::vector<MeanSe> RegretTrace::cumulative_regret() const {
    const std::size_t T = horizon();
    std::vector<MeanSe> out(T);
    std::vector<double> cum(tasks.size(), 0.0);
    std::vector<double> col(tasks.size());
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            cum[i] += tasks[i].oracle_reward[t] - tasks[i].realized_reward[t];
            col[i] = cum[i];
        }
        out[t] = mean_se(col);
    }
    return out;
}

std::vector<double> RegretTrace::final_per_task() const {
    std::vector<double> v;
    v.reserve(tasks.size());
    for (const auto& t : tasks) v.push_back(t.final_cum_regret());
    return v;
}

MeanSe RegretTrace::final_regret() const { return mean_se(final_per_task()); }

MeanSe RegretTrace::per_period_regret() const {
    auto m = final_regret();
    const double T = static_cast<double>(std::max<std::size_t>(horizon(), 1));
    return {m.mean / T, m.se / T};
}

namespace {

TaskTrace run_task(const TaskGenerator& gen, const Agent& agent, const ExperimentOptions& opts, std::size_t i) {
    RngStream task_rng(opts.seed, i, "task");
    const TaskInstance task = gen.sample_task({opts.horizon, opts.n_actions}, task_rng);
    const Policy oracle = fit_policy(task, opts.oracle_class, opts.oracle_criterion, opts.reward, opts.fit);
    RngStream agent_rng(opts.seed, i, "agent/" + agent.name());

    const ContextSource source = opts.context_mode == ContextMode::Fixed ? ContextSource::fixed(task.contexts)
                                                                         : ContextSource::resampled(gen);
    History h(task.prior_info);
    TaskTrace trace;
    trace.oracle_reward.reserve(opts.horizon);
    trace.realized_reward.reserve(opts.horizon);
    trace.actions.reserve(opts.horizon);
    for (std::size_t t = 0; t < opts.horizon; ++t) {
        const Vec& x = task.contexts[t];
        h.observe_context(x);
        DecisionContext ctx{h, opts.horizon, source, opts.reward, &task, &oracle};
        auto step_rng = agent_rng.child("step", t);
        const Action a = agent.select(ctx, step_rng);
        if (a >= opts.n_actions) throw ContractError("agent returned an out-of-range action");
        const double y = task.outcomes.at(t, a);
        trace.oracle_reward.push_back(opts.reward(task.outcomes.at(t, oracle.act(x))));
        trace.realized_reward.push_back(opts.reward(y));
        trace.actions.push_back(a);
        h.append_step(x, a, y);
    }
    return trace;
}

} // namespace

RegretTrace run_experiment(const TaskGenerator& gen, const Agent& agent, const ExperimentOptions& opts) {
    opts.validate();
    RegretTrace out;
    out.agent = agent.name();
    out.tasks.resize(opts.n_tasks);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < opts.n_tasks; ++i) {
        try {
            out.tasks[i] = run_task(gen, agent, opts, i);
        } catch (...) {
#pragma omp critical(genban_experiment_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

RegretTrace run_experiment_serial(const TaskGenerator& gen, const Agent& agent, const ExperimentOptions& opts) {
    opts.validate();
    RegretTrace out;
    out.agent = agent.name();
    out.tasks.reserve(opts.n_tasks);
    for (std::size_t i = 0; i < opts.n_tasks; ++i) out.tasks.push_back(run_task(gen, agent, opts, i));
    return out;
}

MeanSe paired_final_difference(const RegretTrace& a, const RegretTrace& b) {
    if (a.tasks.size() != b.tasks.size()) throw ContractError("paired difference: task counts differ");
    std::vector<double> d(a.tasks.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.tasks[i].final_cum_regret() - b.tasks[i].final_cum_regret();
    return mean_se(d);
}

void write_trace_csv(const std::string& path, const std::vector<RegretTrace>& traces, const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << "task_id,timestep,agent,oracle_reward,realized_reward,cum_regret\n";
    out.precision(17);
    for (const auto& tr : traces) {
        for (std::size_t i = 0; i < tr.tasks.size(); ++i) {
            const auto& task = tr.tasks[i];
            double cum = 0.0;
            for (std::size_t t = 0; t < task.oracle_reward.size(); ++t) {
                cum += task.oracle_reward[t] - task.realized_reward[t];
                out << i << ',' << t + 1 << ',' << tr.agent << ',' << task.oracle_reward[t] << ','
                    << task.realized_reward[t] << ',' << cum << '\n';
            }
        }
    }
    if (!out) throw IoError("failed writing " + path);
}

nlohmann::json summary_json(const std::vector<RegretTrace>& traces) {
    auto agents = nlohmann::json::array();
    for (const auto& tr : traces) {
        const auto fin = tr.final_regret();
        const auto per = tr.per_period_regret();
        agents.push_back({{"agent", tr.agent},
                          {"n_tasks", tr.tasks.size()},
                          {"horizon", tr.horizon()},
                          {"final_cum_regret_mean", fin.mean},
                          {"final_cum_regret_se", fin.se},
                          {"per_period_regret_mean", per.mean},
                          {"per_period_regret_se", per.se}});
    }
    return {{"agents", agents}};
}

} // namespace genban

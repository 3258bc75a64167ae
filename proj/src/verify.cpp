#include "genban/verify.hpp"

#include <cmath>
#include <memory>

#include "genban/agents.hpp"
#include "genban/errors.hpp"
#include "genban/eval.hpp"
#include "genban/generation.hpp"
#include "genban/seqmodel.hpp"

namespace genban {

bool SuiteReport::passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return !checks.empty();
}

nlohmann::json SuiteReport::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name},
                       {"passed", c.passed},
                       {"value", c.value},
                       {"threshold", c.threshold},
                       {"detail", c.detail}});
    return {{"suite", suite}, {"passed", passed()}, {"checks", arr}, {"extra", extra}};
}

DiscreteMixtureConfig posterior_check_env() {
    DiscreteMixtureConfig c;
    c.n_contexts = 2;
    c.theta = {{{0.8, 0.3}, {0.2, 0.6}}, {{0.3, 0.7}, {0.6, 0.2}}};
    c.prior_weights = {{0.5, 0.5}};
    return c;
}

DiscreteMixtureConfig lossdecomp_check_env() {
    DiscreteMixtureConfig c;
    c.n_contexts = 2;
    c.theta = {{{0.9, 0.2}, {0.4, 0.7}}, {{0.25, 0.6}, {0.75, 0.1}}};
    c.prior_weights = {{0.7, 0.3}, {0.2, 0.8}};
    c.class_probs = {0.4, 0.6};
    return c;
}

DiscreteMixtureConfig bound_check_env() {
    DiscreteMixtureConfig c;
    c.n_contexts = 2;
    c.theta = {{{0.7, 0.7}, {0.3, 0.3}}, {{0.3, 0.3}, {0.7, 0.7}}};
    c.prior_weights = {{0.5, 0.5}};
    return c;
}

std::vector<History> posterior_check_histories(const DiscreteMixtureEnv& env, std::uint64_t seed,
                                               std::vector<Vec>& contexts) {
    constexpr std::size_t T = 3;
    RngStream rng(seed, 0, "posterior_task");
    const TaskInstance task = env.sample_task({T, 2}, rng);
    contexts = task.contexts;
    const std::vector<std::vector<Action>> plans{{}, {0}, {1}, {0, 1}, {1, 1}};
    std::vector<History> out;
    for (const auto& plan : plans) {
        History h(task.prior_info);
        for (std::size_t t = 0; t < plan.size(); ++t) {
            h.observe_context(task.contexts[t]);
            h.append_step(task.contexts[t], plan[t], task.outcomes.at(t, plan[t]));
        }
        h.observe_context(task.contexts[plan.size()]);
        out.push_back(std::move(h));
    }
    return out;
}

SuiteReport verify_lossdecomp(std::uint64_t) {
    SuiteReport r;
    r.suite = "lossdecomp";
    constexpr std::size_t T = 4, A = 2;
    auto env = std::make_shared<const DiscreteMixtureEnv>(lossdecomp_check_env());

    auto wrong_weights = lossdecomp_check_env();
    wrong_weights.prior_weights = {{0.3, 0.7}, {0.5, 0.5}};
    auto wrong_theta = lossdecomp_check_env();
    wrong_theta.theta[0][0][0] = 0.6;
    wrong_theta.theta[1][1][1] = 0.35;

    std::vector<std::pair<std::string, std::shared_ptr<const SequenceModel>>> models{
        {"constant_0.5", std::make_shared<ConstantModel>(0.5)},
        {"beta_bernoulli", std::make_shared<BetaBernoulliModel>()},
        {"mixture_wrong_weights",
         std::make_shared<ExactMixtureModel>(std::make_shared<const DiscreteMixtureEnv>(wrong_weights))},
        {"mixture_wrong_theta",
         std::make_shared<ExactMixtureModel>(std::make_shared<const DiscreteMixtureEnv>(wrong_theta))},
    };
    for (const auto& [name, m] : models) {
        const auto d = loss_decomposition(*env, *m, T, A);
        const double err = std::abs(d.gap - d.kl_total);
        r.checks.push_back({"gap_equals_sum_kl/" + name, err < 1e-6 && d.gap > 0.0, err, 1e-6,
                            "gap=" + std::to_string(d.gap) + " sum_kl=" + std::to_string(d.kl_total)});
    }
    const auto exact = loss_decomposition(*env, ExactMixtureModel(env), T, A);
    r.checks.push_back({"exact_model_gap_zero", std::abs(exact.gap) < 1e-9, std::abs(exact.gap), 1e-9, ""});

    // One component: the constant-0.5 gap has a per-step closed form.
    DiscreteMixtureConfig single;
    single.n_contexts = 2;
    single.theta = {{{0.9, 0.3}, {0.2, 0.65}}};
    single.prior_weights = {{1.0}};
    const DiscreteMixtureEnv env1(single);
    const auto d1 = loss_decomposition(env1, ConstantModel(0.5), T, A);
    double closed = 0.0;
    for (Action a = 0; a < A; ++a)
        for (std::size_t x = 0; x < 2; ++x) {
            const double th = env1.theta(0, x, a);
            closed += 0.5 * T * (th * std::log(2.0 * th) + (1.0 - th) * std::log(2.0 * (1.0 - th)));
        }
    r.checks.push_back({"constant_model_closed_form", std::abs(d1.gap - closed) < 1e-6, std::abs(d1.gap - closed),
                        1e-6, "gap=" + std::to_string(d1.gap) + " closed=" + std::to_string(closed)});
    return r;
}

SuiteReport verify_posterior(std::uint64_t seed, std::size_t samples) {
    SuiteReport r;
    r.suite = "posterior";
    auto env = std::make_shared<const DiscreteMixtureEnv>(posterior_check_env());
    const ExactMixtureModel model(env);
    std::vector<Vec> contexts;
    const auto histories = posterior_check_histories(*env, seed, contexts);
    const auto source = ContextSource::fixed(contexts);
    for (std::size_t k = 0; k < histories.size(); ++k) {
        const auto& h = histories[k];
        const auto exact = enumerate_table_posterior(*env, h, contexts);
        std::vector<double> counts(exact.size(), 0.0);
        RngStream base(seed, k, "posterior_samples");
#pragma omp parallel
        {
            std::vector<double> local(exact.size(), 0.0);
#pragma omp for schedule(static)
            for (std::size_t i = 0; i < samples; ++i) {
                auto rng = base.child("sample", i);
                const auto tau = impute_task(model, h, source, contexts.size(), rng);
                local[table_index(tau.outcomes)] += 1.0;
            }
#pragma omp critical(genban_posterior_merge)
            for (std::size_t c = 0; c < local.size(); ++c) counts[c] += local[c];
        }
        for (auto& c : counts) c /= static_cast<double>(samples);
        const double tv = total_variation(counts, exact);
        r.checks.push_back({"tv/history_" + std::to_string(k) + "_len_" + std::to_string(h.size()), tv < 0.02, tv,
                            0.02, ""});
    }
    return r;
}

SuiteReport verify_vc(std::uint64_t seed, std::size_t n_sets) {
    SuiteReport r;
    r.suite = "vc";
    constexpr std::size_t T = 10;
    const double cap = std::exp(sauer_shelah_bound(3, T));
    std::size_t worst = 0;
    bool ok = true;
    for (std::size_t s = 0; s < n_sets; ++s) {
        RngStream rng(seed, s, "vc_points");
        std::vector<Point2> pts(T);
        for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
        const std::size_t n = affine_labelings(pts).size();
        worst = std::max(worst, n);
        ok = ok && static_cast<double>(n) <= cap + 1e-9;
    }
    r.checks.push_back({"labelings_within_sauer_shelah", ok, static_cast<double>(worst), cap,
                        std::to_string(n_sets) + " random 10-point sets"});
    const std::size_t three = affine_labelings({{0, 0}, {1, 0}, {0, 1}}).size();
    r.checks.push_back({"three_points_shattered", three == 8, static_cast<double>(three), 8.0, ""});
    const std::size_t general = affine_labelings({{0, 0}, {1, 0}, {0, 1}, {1, 1}}).size();
    const std::size_t degenerate = affine_labelings({{0, 0}, {1, 0}, {2, 0}, {2, 0}}).size();
    r.checks.push_back({"collinear_duplicates_fewer", degenerate < general, static_cast<double>(degenerate),
                        static_cast<double>(general), ""});
    return r;
}

SuiteReport verify_bound(std::uint64_t seed, std::size_t n_tasks, std::size_t horizon) {
    SuiteReport r;
    r.suite = "bound";
    constexpr std::size_t A = 2;
    auto env = std::make_shared<const DiscreteMixtureEnv>(bound_check_env());
    auto model = std::make_shared<const ExactMixtureModel>(env);

    AgentConfig ac;
    ac.variant = AgentVariant::TsGen;
    ac.policy_class = PolicyClass::Tabular;
    const auto agent = make_agent(ac, model);

    ExperimentOptions opts;
    opts.n_tasks = n_tasks;
    opts.horizon = horizon;
    opts.n_actions = A;
    opts.seed = seed;
    opts.oracle_class = PolicyClass::Tabular;
    const auto trace = run_experiment(*env, *agent, opts);
    const auto per = trace.per_period_regret();

    const double h = tabular_policy_entropy(*env, horizon, A, true);
    const auto report = make_bound_report(h, A, horizon, 0.0, per.mean, per.se);
    r.extra = report.to_json();
    r.checks.push_back({"regret_within_bound_3se", report.holds(3.0), per.mean, report.bound + 3.0 * per.se,
                        "entropy=" + std::to_string(h) + " bound=" + std::to_string(report.bound) +
                            " se=" + std::to_string(per.se)});
    return r;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed) {
    if (name == "lossdecomp") return verify_lossdecomp(seed);
    if (name == "posterior") return verify_posterior(seed);
    if (name == "vc") return verify_vc(seed);
    if (name == "bound") return verify_bound(seed);
    throw ConfigError("unknown verify suite '" + name + "' (expected lossdecomp, posterior, vc or bound)");
}

} // namespace genban

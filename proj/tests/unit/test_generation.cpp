#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "genban/errors.hpp"
#include "genban/generation.hpp"
#include "genban/mlp.hpp"
#include "genban/theory.hpp"
#include "genban/verify.hpp"
#include "oracles.hpp"

using namespace genban;

namespace {

// History over the first `steps` timesteps of a task with the given actions.
History play(const TaskInstance& task, const std::vector<Action>& actions) {
    History h(task.prior_info);
    for (std::size_t t = 0; t < actions.size(); ++t) {
        h.observe_context(task.contexts[t]);
        h.append_step(task.contexts[t], actions[t], task.outcomes.at(t, actions[t]));
    }
    h.observe_context(task.contexts[actions.size()]);
    return h;
}

} // namespace

TEST_SUITE("generation") {

TEST_CASE("beta-bernoulli imputation reproduces the Polya urn law") {
    BetaBernoulliModel m;
    TaskInstance task;
    task.prior_info = PriorInfo{{{0.0}}};
    task.contexts = {{0.0}, {0.0}};
    const History h = play(task, {});
    const auto src = ContextSource::fixed(task.contexts);
    std::vector<double> freq(4, 0.0);
    const int n = 100000;
    RngStream base(1, 0, "polya");
    for (int i = 0; i < n; ++i) {
        auto rng = base.child("draw", i);
        const auto tau = impute_task(m, h, src, 2, rng);
        freq[static_cast<std::size_t>(2 * tau.outcomes.at(0, 0) + tau.outcomes.at(1, 0))] += 1.0 / n;
    }
    const double expected[4] = {1.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3};
    for (int k = 0; k < 4; ++k) CHECK(std::abs(freq[k] - expected[k]) < 0.01);
}

TEST_CASE("observed entries and revealed contexts are copied verbatim") {
    SyntheticDgp gen({});
    RngStream rng(2, 0, "task");
    const auto task = gen.sample_task({30, 3}, rng);
    std::vector<Action> acts;
    RngStream pick(2, 0, "pick");
    for (int t = 0; t < 17; ++t) acts.push_back(pick.uniform_index(3));
    const History h = play(task, acts);
    BetaBernoulliModel m;
    RngStream r(2, 0, "impute");
    const auto tau = impute_task(m, h, ContextSource::fixed(task.contexts), 30, r);
    CHECK_NOTHROW(tau.validate());
    for (std::size_t t = 0; t < acts.size(); ++t) CHECK(tau.outcomes.at(t, acts[t]) == task.outcomes.at(t, acts[t]));
    CHECK(tau.contexts == task.contexts);

    RngStream r2(2, 0, "impute");
    const auto resampled = impute_task(m, h, ContextSource::resampled(gen), 30, r2);
    for (std::size_t t = 0; t <= acts.size(); ++t) CHECK(resampled.contexts[t] == task.contexts[t]);
    CHECK(resampled.contexts[20] != task.contexts[20]);
    for (std::size_t t = 0; t < acts.size(); ++t)
        CHECK(resampled.outcomes.at(t, acts[t]) == task.outcomes.at(t, acts[t]));
}

TEST_CASE("imputation with an unobserved single arm and a near-complete history") {
    // With one action every past entry is observed and only the current row is drawn.
    DiscreteMixtureConfig c;
    c.n_contexts = 1;
    c.theta = {{{0.3}}};
    c.prior_weights = {{1.0}};
    auto env = std::make_shared<DiscreteMixtureEnv>(c);
    RngStream rng(3, 0, "task");
    const auto task = env->sample_task({6, 1}, rng);
    const History h = play(task, {0, 0, 0, 0, 0});
    ExactMixtureModel m(env);
    RngStream r(3, 0, "impute");
    const auto tau = impute_task(m, h, ContextSource::fixed(task.contexts), 6, r);
    for (std::size_t t = 0; t < 5; ++t) CHECK(tau.outcomes.at(t, 0) == task.outcomes.at(t, 0));
}

TEST_CASE("mask and ordering put observed steps first") {
    History h(PriorInfo{{{0.0}, {1.0}}});
    const std::vector<Action> acts{1, 0, 1};
    for (std::size_t t = 0; t < 3; ++t) {
        h.observe_context({double(t)});
        h.append_step({double(t)}, acts[t], 1.0);
    }
    const auto mask = build_mask(h, 2, 5);
    CHECK(mask.missing(0, 0));
    CHECK_FALSE(mask.missing(0, 1));
    CHECK_FALSE(mask.missing(1, 0));
    CHECK_FALSE(mask.missing(1, 2));
    CHECK(mask.missing(1, 4));
    CHECK(arm_ordering(mask, 0) == std::vector<std::size_t>{1, 0, 2, 3, 4});
    CHECK(arm_ordering(mask, 1) == std::vector<std::size_t>{0, 2, 1, 3, 4});
    // Each step is observed for exactly one action.
    for (std::size_t t = 0; t < 3; ++t) CHECK(mask.observed[0][t] + mask.observed[1][t] == 1);
    CHECK_THROWS_AS(build_mask(h, 2, 2), ContractError);
}

TEST_CASE("exact-model imputation matches the enumerated posterior") {
    DiscreteMixtureEnv env(posterior_check_env());
    auto envp = std::make_shared<DiscreteMixtureEnv>(posterior_check_env());
    ExactMixtureModel m(envp);
    RngStream rng(4, 0, "task");
    const auto task = env.sample_task({3, 2}, rng);
    const History h = play(task, {0, 1});
    const auto post = oracle::brute_table_posterior(env, h, task.contexts);
    std::vector<double> freq(post.size(), 0.0);
    const int n = 100000;
    RngStream base(4, 0, "impute");
    const auto src = ContextSource::fixed(task.contexts);
    for (int i = 0; i < n; ++i) {
        auto r = base.child("draw", i);
        freq[table_index(impute_task(m, h, src, 3, r).outcomes)] += 1.0 / n;
    }
    double tv = 0.0;
    for (std::size_t k = 0; k < post.size(); ++k) tv += 0.5 * std::abs(freq[k] - post[k]);
    CHECK(tv < 0.02);
}

TEST_CASE("imputed values at unobserved steps are exchangeable") {
    BetaBernoulliModel m;
    TaskInstance task;
    task.prior_info = PriorInfo{{{0.0}}};
    task.contexts = {{0.0}, {0.0}, {0.0}, {0.0}};
    task.outcomes = OutcomeTable(4, 1, 1.0);
    const History h = play(task, {0});
    const auto src = ContextSource::fixed(task.contexts);
    std::vector<double> plain(8, 0.0), rotated(8, 0.0);
    for (int i = 0; i < 10000; ++i) {
        RngStream ra(5, i, "a"), rb(6, i, "b");
        const auto ta = impute_task(m, h, src, 4, ra).outcomes;
        const auto tb = impute_task(m, h, src, 4, rb).outcomes;
        plain[static_cast<std::size_t>(4 * ta.at(1, 0) + 2 * ta.at(2, 0) + ta.at(3, 0))] += 1;
        rotated[static_cast<std::size_t>(4 * tb.at(3, 0) + 2 * tb.at(1, 0) + tb.at(2, 0))] += 1;
    }
    CHECK(oracle::chi_square_two_sample_p(plain, rotated) > 0.01);
}

TEST_CASE("one more observation lowers the expected posterior entropy") {
    DiscreteMixtureEnv env(posterior_check_env());
    RngStream rng(7, 0, "task");
    const auto task = env.sample_task({3, 2}, rng);
    auto envp = std::make_shared<DiscreteMixtureEnv>(posterior_check_env());
    ExactMixtureModel m(envp);
    const History h = play(task, {0});
    const double h0 = oracle::entropy(oracle::brute_table_posterior(env, h, task.contexts));
    for (Action a : {0, 1}) {
        // Average over the predictive of the next outcome.
        const auto z = h.prior_info().feature(a);
        std::vector<ArmObservation> arm_hist;
        for (const auto& s : h.steps())
            if (s.action == a) arm_hist.push_back({s.context, s.outcome});
        const double p1 = exact_predictive(env, a, arm_hist, task.contexts[1], env.feature_class(z));
        double expected = 0.0;
        for (double y : {0.0, 1.0}) {
            History next = h;
            next.append_step(task.contexts[1], a, y);
            next.observe_context(task.contexts[2]);
            expected += (y > 0.5 ? p1 : 1 - p1) * oracle::entropy(oracle::brute_table_posterior(env, next, task.contexts));
        }
        CHECK(expected <= h0 + 1e-12);
    }
}

TEST_CASE("imputation contracts and debug dump") {
    BetaBernoulliModel m;
    History h(PriorInfo{{{0.0}}});
    const std::vector<Vec> ctx{{0.0}, {0.0}};
    RngStream rng(8, 0, "impute");
    CHECK_THROWS_AS(impute_task(m, h, ContextSource::fixed(ctx), 2, rng), ContractError);
    h.observe_context({0.0});
    CHECK_THROWS_AS(impute_task(m, h, ContextSource::fixed(ctx), 0, rng), ContractError);

    MlpSeqModel mlp(MlpFeatureConfig{}, {4});
    CHECK_THROWS_AS(impute_task(mlp, h, ContextSource::fixed(ctx), 2, rng), ContractError);

    const auto path = (std::filesystem::temp_directory_path() / "genban_dump.jsonl").string();
    std::filesystem::remove(path);
    ImputeOptions opts;
    opts.dump_path = path;
    impute_task(m, h, ContextSource::fixed(ctx), 2, rng, opts);
    impute_task(m, h, ContextSource::fixed(ctx), 2, rng, opts);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        CHECK_NOTHROW(task_from_json(nlohmann::json::parse(line)).validate());
        ++lines;
    }
    CHECK(lines == 2);
    std::filesystem::remove(path);
}

TEST_CASE("context mode names") {
    CHECK(parse_context_mode("fixed") == ContextMode::Fixed);
    CHECK(parse_context_mode("resampled") == ContextMode::Resampled);
    CHECK(to_string(ContextMode::Resampled) == "resampled");
    CHECK_THROWS_AS(parse_context_mode("sometimes"), ConfigError);
}

}

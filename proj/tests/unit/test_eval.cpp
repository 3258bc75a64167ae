#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <omp.h>

#include "genban/errors.hpp"
#include "genban/eval.hpp"
#include "genban/verify.hpp"
#include "oracles.hpp"

using namespace genban;

namespace {

std::shared_ptr<const DiscreteMixtureEnv> known_env(const std::vector<double>& theta) {
    DiscreteMixtureConfig c;
    c.n_contexts = 1;
    c.theta = {{theta}};
    c.prior_weights = {{1.0}};
    return std::make_shared<const DiscreteMixtureEnv>(c);
}

AgentConfig cfg_of(AgentVariant v, PolicyClass cls = PolicyClass::Tabular) {
    AgentConfig c;
    c.variant = v;
    c.policy_class = cls;
    return c;
}

ExperimentOptions opts_of(std::size_t tasks, std::size_t T, std::size_t A, PolicyClass cls = PolicyClass::Tabular) {
    ExperimentOptions o;
    o.n_tasks = tasks;
    o.horizon = T;
    o.n_actions = A;
    o.seed = 17;
    o.oracle_class = cls;
    return o;
}

} // namespace

TEST_SUITE("eval") {

TEST_CASE("the oracle agent has zero regret at every step") {
    DiscreteMixtureEnv env(posterior_check_env());
    const auto oracle = make_agent(cfg_of(AgentVariant::Oracle), nullptr);
    const auto tr = run_experiment(env, *oracle, opts_of(20, 30, 2));
    for (const auto& t : tr.tasks) CHECK(t.final_cum_regret() == 0.0);

    SyntheticDgp gen({});
    const auto lg = make_agent(cfg_of(AgentVariant::Oracle, PolicyClass::Logistic), nullptr);
    const auto tl = run_experiment(gen, *lg, opts_of(3, 40, 3, PolicyClass::Logistic));
    for (const auto& m : tl.cumulative_regret()) CHECK(m.mean == 0.0);
}

TEST_CASE("uniform play against a known best arm") {
    // Oracle takes arm 0 (0.9); uniform averages 0.5, so regret per step is 0.4.
    const auto env = known_env({0.9, 0.1});
    const auto uni = make_agent(cfg_of(AgentVariant::Uniform), nullptr);
    const auto tr = run_experiment(*env, *uni, opts_of(200, 100, 2));
    const auto per = tr.per_period_regret();
    CHECK(std::abs(per.mean - 0.4) < 3.0 * per.se);
    CHECK(per.se > 0.0);
    const auto fin = tr.final_regret();
    CHECK(fin.mean == doctest::Approx(100.0 * per.mean));
    const auto curve = tr.cumulative_regret();
    REQUIRE(curve.size() == 100);
    CHECK(curve.back().mean == doctest::Approx(fin.mean));
}

TEST_CASE("parallel and serial experiments are bit-identical") {
    SyntheticDgp gen({});
    auto model = std::make_shared<const BetaBernoulliModel>();
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    for (auto v : {AgentVariant::TsGen, AgentVariant::Softmax, AgentVariant::LinearTs}) {
        const auto agent = make_agent(cfg_of(v, PolicyClass::Logistic), model);
        const auto o = opts_of(6, 25, 3, PolicyClass::Logistic);
        const auto par = run_experiment(gen, *agent, o);
        const auto ser = run_experiment_serial(gen, *agent, o);
        REQUIRE(par.tasks.size() == ser.tasks.size());
        for (std::size_t i = 0; i < par.tasks.size(); ++i) {
            CHECK(par.tasks[i].actions == ser.tasks[i].actions);
            CHECK(par.tasks[i].realized_reward == ser.tasks[i].realized_reward);
            CHECK(par.tasks[i].oracle_reward == ser.tasks[i].oracle_reward);
        }
    }
    omp_set_num_threads(saved);
}

TEST_CASE("agents face the same tasks under common random numbers") {
    DiscreteMixtureEnv env(posterior_check_env());
    auto model = std::make_shared<const ExactMixtureModel>(std::make_shared<const DiscreteMixtureEnv>(posterior_check_env()));
    const auto o = opts_of(10, 20, 2);
    const auto a = run_experiment(env, *make_agent(cfg_of(AgentVariant::Greedy), model), o);
    const auto b = run_experiment(env, *make_agent(cfg_of(AgentVariant::Uniform), model), o);
    for (std::size_t i = 0; i < a.tasks.size(); ++i) CHECK(a.tasks[i].oracle_reward == b.tasks[i].oracle_reward);

    const auto d = paired_final_difference(a, b);
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.tasks.size(); ++i)
        diff.push_back(a.tasks[i].final_cum_regret() - b.tasks[i].final_cum_regret());
    const auto want = oracle::mean_se(diff);
    CHECK(d.mean == doctest::Approx(want.mean).epsilon(1e-14));
    CHECK(d.se == doctest::Approx(want.se).epsilon(1e-12));

    auto shorter = b;
    shorter.tasks.pop_back();
    CHECK_THROWS_AS(paired_final_difference(a, shorter), ContractError);
}

TEST_CASE("mean and standard error") {
    const auto m = mean_se({1.0, 2.0, 3.0, 4.0});
    CHECK(m.mean == 2.5);
    CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(mean_se({7.0}).se == 0.0);
    CHECK(mean_se({}).mean == 0.0);
}

TEST_CASE("trace csv and summary json") {
    const auto env = known_env({0.9, 0.1});
    const auto uni = make_agent(cfg_of(AgentVariant::Uniform), nullptr);
    const auto ora = make_agent(cfg_of(AgentVariant::Oracle), nullptr);
    const auto o = opts_of(3, 5, 2);
    const std::vector<RegretTrace> traces{run_experiment(*env, *uni, o), run_experiment(*env, *ora, o)};

    const auto path = (std::filesystem::temp_directory_path() / "genban_trace.csv").string();
    write_trace_csv(path, traces, "seed=17");
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "# seed=17");
    std::getline(in, line);
    CHECK(line == "task_id,timestep,agent,oracle_reward,realized_reward,cum_regret");
    int rows = 0;
    double last_cum = 0.0;
    while (std::getline(in, line)) {
        ++rows;
        last_cum = std::stod(line.substr(line.rfind(',') + 1));
    }
    CHECK(rows == 2 * 3 * 5);
    CHECK(last_cum == 0.0);  // oracle rows come last
    std::filesystem::remove(path);
    CHECK_THROWS_AS(write_trace_csv("/nonexistent/dir/x.csv", traces, ""), IoError);

    const auto js = summary_json(traces);
    REQUIRE(js.at("agents").size() == 2);
    const auto& u = js["agents"][0];
    CHECK(u.at("agent") == "uniform");
    CHECK(u.at("n_tasks") == 3);
    CHECK(u.at("horizon") == 5);
    CHECK(u.at("final_cum_regret_mean").get<double>() == doctest::Approx(traces[0].final_regret().mean));
    CHECK(u.at("per_period_regret_mean").get<double>() == doctest::Approx(traces[0].final_regret().mean / 5));
    CHECK(js["agents"][1].at("final_cum_regret_mean") == 0.0);
}

TEST_CASE("experiment option errors") {
    DiscreteMixtureEnv env(posterior_check_env());
    const auto uni = make_agent(cfg_of(AgentVariant::Uniform), nullptr);
    auto o = opts_of(0, 5, 2);
    CHECK_THROWS_AS(run_experiment(env, *uni, o), ConfigError);
    o = opts_of(1, 0, 2);
    CHECK_THROWS_AS(run_experiment_serial(env, *uni, o), ConfigError);
    o = opts_of(1, 5, 0);
    CHECK_THROWS_AS(run_experiment(env, *uni, o), ConfigError);
}

}

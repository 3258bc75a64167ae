// Acceptance runs. Usage: genban_acceptance <criterion 1-8>. Prints one
// PASS/FAIL line and exits nonzero on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "genban/agents.hpp"
#include "genban/config.hpp"
#include "genban/eval.hpp"
#include "genban/generation.hpp"
#include "genban/linalg.hpp"
#include "genban/mlp.hpp"
#include "genban/training.hpp"
#include "genban/verify.hpp"
#include "oracles.hpp"

using namespace genban;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

Outcome from_suite(const SuiteReport& r) {
    Outcome o{r.passed(), ""};
    for (const auto& c : r.checks) {
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += (c.passed ? "" : "[failed] ") + c.name + "=" + num(c.value) + " (limit " + num(c.threshold) + ")";
    }
    return o;
}

// ---- scaled synthetic experiments (criteria 5 and 6) ----

constexpr std::uint64_t kTrainSeed = 7;
constexpr std::uint64_t kTaskSeed = 11;
constexpr std::size_t kHorizon = 200;
constexpr std::size_t kActions = 5;

TrainingSpec scaled_spec(std::size_t arms) {
    TrainingSpec s;
    s.train_arms = arms;
    s.val_arms = 200;
    s.hist_len = 1000;
    s.hidden = {100, 100, 100};
    s.train.optimizer = Optimizer::AdamW;
    s.train.lr_grid = {0.003, 0.001};
    s.train.epochs = 12;
    s.train.batch_size = 100;
    s.train.positions_per_sequence = 50;
    s.train.val_positions_per_sequence = 100;
    return s;
}

TrainResult train_on(const TaskGenerator& gen, std::size_t arms) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run_training(gen, scaled_spec(arms), kActions, kTrainSeed);
    spdlog::info("{} arms: lr {} epoch {} val nll {:.5f} ({:.1f}s)", arms, r.best_lr, r.best_epoch, r.best_val_nll,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return r;
}

RegretTrace simulate(const TaskGenerator& gen, AgentVariant v, std::shared_ptr<const SequenceModel> model,
                     std::size_t n_tasks, const std::string& label = "") {
    AgentConfig ac;
    ac.variant = v;
    ac.label = label;
    ExperimentOptions o;
    o.n_tasks = n_tasks;
    o.horizon = kHorizon;
    o.n_actions = kActions;
    o.seed = kTaskSeed;
    const auto t0 = std::chrono::steady_clock::now();
    auto tr = run_experiment(gen, *make_agent(ac, std::move(model)), o);
    const auto f = tr.final_regret();
    spdlog::info("{}: regret {:.3f} +- {:.3f} ({:.1f}s)", tr.agent, f.mean, f.se,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return tr;
}

Outcome criterion5() {
    SyntheticDgp gen({});
    const auto model = std::make_shared<const MlpSeqModel>(train_on(gen, 1000).model);
    const std::size_t n = 200;
    const auto ts = simulate(gen, AgentVariant::TsGen, model, n);
    const auto greedy = simulate(gen, AgentVariant::Greedy, model, n);
    const auto soft = simulate(gen, AgentVariant::Softmax, model, n);
    const auto dg = paired_final_difference(greedy, ts);
    const auto ds = paired_final_difference(soft, ts);
    const bool pass = dg.mean >= 2.0 * dg.se && ds.mean >= 2.0 * ds.se;
    return {pass, "regret ts_gen=" + num(ts.final_regret().mean) + " greedy=" + num(greedy.final_regret().mean) +
                      " softmax=" + num(soft.final_regret().mean) + "; greedy-ts=" + num(dg.mean) + "+-" +
                      num(dg.se) + " softmax-ts=" + num(ds.mean) + "+-" + num(ds.se)};
}

Outcome criterion6() {
    SyntheticDgp gen({});
    const std::vector<std::size_t> pools{100, 1000, 10000};
    std::vector<TrainResult> fits;
    for (auto p : pools) fits.push_back(train_on(gen, p));
    const std::size_t n = 300;
    std::vector<RegretTrace> traces;
    for (std::size_t i = 0; i < pools.size(); ++i)
        traces.push_back(simulate(gen, AgentVariant::TsGen, std::make_shared<const MlpSeqModel>(fits[i].model), n,
                                  "ts_gen_" + std::to_string(pools[i])));
    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i + 1 < pools.size(); ++i) {
        // Same validation sequences for every model, so differences are paired.
        std::vector<double> diff;
        for (std::size_t k = 0; k < fits[i].best_val_per_sequence.size(); ++k)
            diff.push_back(fits[i].best_val_per_sequence[k] - fits[i + 1].best_val_per_sequence[k]);
        const auto dn = oracle::mean_se(diff);
        const auto dr = paired_final_difference(traces[i], traces[i + 1]);
        pass = pass && dn.mean >= 2.0 * dn.se && dr.mean >= 2.0 * dr.se;
        detail += std::to_string(pools[i]) + "->" + std::to_string(pools[i + 1]) + ": dNLL=" + num(dn.mean) + "+-" +
                  num(dn.se) + " dRegret=" + num(dr.mean) + "+-" + num(dr.se) + "; ";
    }
    for (std::size_t i = 0; i < pools.size(); ++i)
        detail += "nll(" + std::to_string(pools[i]) + ")=" + num(fits[i].best_val_nll, 5) + " regret=" +
                  num(traces[i].final_regret().mean) + " ";
    return {pass, detail};
}

// ---- numerical suite (criterion 7) ----

double gradient_error() {
    RngStream rng(70, 0, "grad");
    MlpSeqModel m(MlpFeatureConfig{}, {16, 16});
    m.net().init_glorot(rng);
    for (auto& p : m.net().params()) p += 0.05 * rng.normal();
    SyntheticDgp gen({});
    auto pool_rng = rng.child("pool");
    const auto pool = build_pool(gen, 2, 12, pool_rng);
    double worst = 0.0;
    for (std::size_t a = 0; a < pool.size(); ++a) {
        const auto& arm = pool.arm(a);
        std::vector<double> grad;
        sequence_nll_gradient(m, arm.z, arm.obs, grad);
        auto& w = m.net().params();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double h = 1e-6, orig = w[i];
            w[i] = orig + h;
            const double up = sequence_nll(m, arm.z, arm.obs).total;
            w[i] = orig - h;
            const double dn = sequence_nll(m, arm.z, arm.obs).total;
            w[i] = orig;
            const double fd = (up - dn) / (2 * h);
            worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-3}));
        }
    }
    return worst;
}

double ridge_residual() {
    RngStream rng(71, 0, "ridge");
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        Matrix g(5, 5);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) g(i, j) = rng.normal();
        Matrix a = matmul(transpose(g), g);
        const Matrix inv = ridge_inverse(a, 1.0);
        for (std::size_t i = 0; i < 5; ++i) a(i, i) += 1.0;
        Matrix r = matmul(a, inv);
        for (std::size_t i = 0; i < 5; ++i) r(i, i) -= 1.0;
        worst = std::max(worst, frobenius_norm(r));
    }
    return worst;
}

double linear_ts_error() {
    RngStream rng(72, 0, "lin");
    const std::size_t d = 3;
    const double noise = 0.25, prior = 1.0;
    History h(PriorInfo{{{0.0}}});
    std::vector<Vec> p(d, Vec(d, 0.0));
    Vec rhs(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) p[i][i] = 1.0 / prior;
    for (int t = 0; t < 40; ++t) {
        const Vec x{rng.normal(), rng.normal(), rng.normal()};
        const double y = rng.bernoulli(0.5) ? 1.0 : 0.0;
        h.observe_context(x);
        h.append_step(x, 0, y);
        for (std::size_t i = 0; i < d; ++i) {
            rhs[i] += x[i] * y / noise;
            for (std::size_t j = 0; j < d; ++j) p[i][j] += x[i] * x[j] / noise;
        }
    }
    const Vec want = oracle::dense_solve(p, rhs);
    const auto post = linear_posterior(h, 0, d, noise, prior);
    double worst = 0.0;
    for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, std::abs(post.mean[i] - want[i]));
    return worst;
}

bool summaries_equal() {
    RngStream rng(73, 0, "obs");
    std::vector<ArmObservation> obs(500);
    for (auto& o : obs) {
        o.x = {rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        o.y = rng.bernoulli(0.3) ? 1.0 : 0.0;
    }
    auto inc = empty_summary(5);
    for (const auto& o : obs) add_observation(inc, o.x, o.y);
    MlpSeqModel m(MlpFeatureConfig{}, {8});
    return inc == summary_batch(obs, 5) && fold_history(m, Vec{0.3, -0.2}, obs) == inc;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Two identical runs (train + simulate) must write byte-identical files.
bool replay_identical() {
    const auto dir = std::filesystem::temp_directory_path() / "genban_acceptance_replay";
    std::filesystem::create_directories(dir);
    SyntheticDgp gen({});
    std::string first[3];
    for (int run = 0; run < 2; ++run) {
        TrainingSpec s;
        s.train_arms = 30;
        s.val_arms = 10;
        s.hist_len = 40;
        s.hidden = {8};
        s.train.epochs = 2;
        s.train.seq_len = 40;
        s.train.batch_size = 10;
        const auto fit = run_training(gen, s, 3, 5);
        const auto tag = std::to_string(run);
        fit.model.save((dir / ("model" + tag + ".json")).string(), nlohmann::json::object());
        write_loss_csv((dir / ("loss" + tag + ".csv")).string(), fit.curve, "replay");
        auto model = std::make_shared<const MlpSeqModel>(fit.model);
        AgentConfig ac;
        ExperimentOptions o;
        o.n_tasks = 4;
        o.horizon = 20;
        o.n_actions = 3;
        o.seed = 9;
        const auto tr = run_experiment(gen, *make_agent(ac, model), o);
        write_trace_csv((dir / ("trace" + tag + ".csv")).string(), {tr}, "replay");
    }
    const bool same = slurp((dir / "model0.json").string()) == slurp((dir / "model1.json").string()) &&
                      slurp((dir / "loss0.csv").string()) == slurp((dir / "loss1.csv").string()) &&
                      slurp((dir / "trace0.csv").string()) == slurp((dir / "trace1.csv").string());
    std::filesystem::remove_all(dir);
    return same;
}

Outcome criterion7() {
    const double g = gradient_error(), r = ridge_residual(), l = linear_ts_error();
    const bool s = summaries_equal(), rep = replay_identical();
    return {g < 1e-4 && r < 1e-10 && l < 1e-10 && s && rep,
            "grad_rel_err=" + num(g) + " ridge_residual=" + num(r) + " linear_ts_err=" + num(l) +
                " summaries_equal=" + (s ? "yes" : "no") + " replay_identical=" + (rep ? "yes" : "no")};
}

// ---- Polya urn (criterion 8) ----

Outcome criterion8() {
    BetaBernoulliModel m;
    TaskInstance task;
    task.prior_info = PriorInfo{{{0.0}}};
    task.contexts = {{0.0}, {0.0}};
    History h(task.prior_info);
    h.observe_context(task.contexts[0]);
    const auto src = ContextSource::fixed(task.contexts);
    std::vector<double> freq(4, 0.0);
    const int n = 100000;
    RngStream base(80, 0, "polya");
    for (int i = 0; i < n; ++i) {
        auto rng = base.child("draw", i);
        const auto tau = impute_task(m, h, src, 2, rng);
        freq[static_cast<std::size_t>(2 * tau.outcomes.at(0, 0) + tau.outcomes.at(1, 0))] += 1.0 / n;
    }
    const double expected[4] = {1.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3};
    double worst = 0.0;
    for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(freq[k] - expected[k]));
    return {worst < 0.01, "freq(00,01,10,11)=" + num(freq[0]) + "," + num(freq[1]) + "," + num(freq[2]) + "," +
                              num(freq[3]) + " max_dev=" + num(worst)};
}

Outcome run(int c) {
    constexpr std::uint64_t seed = 20240101;
    switch (c) {
    case 1: return from_suite(verify_posterior(seed));
    case 2: return from_suite(verify_lossdecomp(seed));
    case 3: return from_suite(verify_bound(seed));
    case 4: return from_suite(verify_vc(seed));
    case 5: return criterion5();
    case 6: return criterion6();
    case 7: return criterion7();
    case 8: return criterion8();
    default: throw std::invalid_argument("criterion must be 1-8");
    }
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::info);
    if (const char* lvl = std::getenv("GENBAN_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
    if (argc != 2) {
        std::cerr << "usage: genban_acceptance <criterion 1-8>\n";
        return 2;
    }
    const int c = std::atoi(argv[1]);
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const Outcome o = run(c);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c << " (" << num(secs, 3) << "s): " << o.detail
                  << std::endl;
        return o.pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cout << "FAIL criterion " << c << ": " << e.what() << std::endl;
        return 1;
    }
}

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "genban/config.hpp"
#include "genban/errors.hpp"
#include "genban/eval.hpp"
#include "genban/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitVerify = 2;
constexpr int kExitIo = 3;

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string suite;
    std::vector<std::string> inputs;
};

// Logs go to stderr so stdout stays machine-readable.
void set_up_logging() {
    spdlog::set_default_logger(spdlog::stderr_color_mt("genban"));
    const char* env = std::getenv("GENBAN_LOG");
    if (!env) return;
    spdlog::set_level(spdlog::level::from_str(env));
}

genban::ExperimentConfig load(const Options& o) {
    if (o.config.empty()) throw genban::ConfigError("--config is required");
    auto cfg = genban::load_config(o.config);
    if (o.seed_set) cfg.seed = o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    return cfg;
}

fs::path ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw genban::IoError("cannot create output directory " + dir + ": " + ec.message());
    return fs::path(dir);
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw genban::IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw genban::IoError("failed writing " + path.string());
}

int cmd_train(const Options& o) {
    const auto cfg = load(o);
    if (!cfg.training) throw genban::ConfigError("train: config has no 'training' block");
    const auto gen = genban::make_generator(cfg.env);
    const auto& spec = *cfg.training;
    spdlog::info("training on {} arms ({} validation), hist_len {}", spec.train_arms, spec.val_arms, spec.hist_len);
    const auto result = genban::run_training(*gen, spec, cfg.n_actions, cfg.seed);
    const auto dir = ensure_dir(cfg.output_dir);

    auto prov = genban::provenance(cfg);
    prov["best_lr"] = result.best_lr;
    prov["best_epoch"] = result.best_epoch;
    prov["best_val_nll"] = result.best_val_nll;
    result.model.save((dir / spec.model_out).string(), prov);
    genban::write_loss_csv((dir / spec.loss_csv).string(), result.curve, genban::provenance_line(cfg));
    spdlog::info("selected lr {} epoch {} val nll {:.5f} (se {:.5f})", result.best_lr, result.best_epoch,
                 result.best_val_nll, result.best_val_se);
    std::cout << (dir / spec.model_out).string() << '\n';
    return kExitOk;
}

int cmd_simulate(const Options& o) {
    const auto cfg = load(o);
    if (cfg.agents.empty()) throw genban::ConfigError("simulate: config lists no agents");
    const auto gen = genban::make_generator(cfg.env);
    const auto opts = cfg.options();

    std::vector<std::unique_ptr<genban::Agent>> agents;
    for (const auto& spec : cfg.agents)
        agents.push_back(genban::make_agent(spec.cfg, genban::make_model(spec.model, gen, cfg.base_dir)));

    std::vector<genban::RegretTrace> traces;
    for (const auto& agent : agents) {
        spdlog::info("simulating {} on {} tasks, T = {}", agent->name(), opts.n_tasks, opts.horizon);
        traces.push_back(genban::run_experiment(*gen, *agent, opts));
    }
    const auto dir = ensure_dir(cfg.output_dir);
    genban::write_trace_csv((dir / "traces.csv").string(), traces, genban::provenance_line(cfg));
    auto summary = genban::summary_json(traces);
    summary["provenance"] = genban::provenance(cfg);
    write_json(dir / "summary.json", summary);
    std::cout << summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_verify(const Options& o) {
    const std::uint64_t seed = o.seed_set ? o.seed : 20240101;
    const auto report = genban::run_suite(o.suite, seed);
    for (const auto& c : report.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << report.suite << '/' << c.name << "  value=" << c.value
                  << " threshold=" << c.threshold << (c.detail.empty() ? "" : "  " + c.detail) << '\n';
    if (!o.out.empty()) {
        auto j = report.to_json();
        j["provenance"] = {{"seed", seed}, {"version", GENBAN_VERSION}};
        write_json(ensure_dir(o.out) / ("verify_" + report.suite + ".json"), j);
    }
    return report.passed() ? kExitOk : kExitVerify;
}

// Aggregates trace CSVs into per-agent final cumulative regret.
int cmd_report(const Options& o) {
    if (o.inputs.empty()) throw genban::ConfigError("report: no trace files given");
    // agent -> (file, task) -> final cumulative regret
    std::map<std::string, std::map<std::pair<std::size_t, std::size_t>, double>> finals;
    std::map<std::string, std::size_t> horizons;
    for (std::size_t f = 0; f < o.inputs.size(); ++f) {
        std::ifstream in(o.inputs[f]);
        if (!in) throw genban::IoError("cannot open " + o.inputs[f]);
        std::string line;
        bool header = false;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (!header) {
                if (line != "task_id,timestep,agent,oracle_reward,realized_reward,cum_regret")
                    throw genban::IoError(o.inputs[f] + ": unexpected header");
                header = true;
                continue;
            }
            std::stringstream ss(line);
            std::string task, step, agent, orc, real, cum;
            std::getline(ss, task, ',');
            std::getline(ss, step, ',');
            std::getline(ss, agent, ',');
            std::getline(ss, orc, ',');
            std::getline(ss, real, ',');
            std::getline(ss, cum, ',');
            try {
                const std::size_t t = std::stoul(step);
                finals[agent][{f, std::stoul(task)}] = std::stod(cum);
                horizons[agent] = std::max(horizons[agent], t);
            } catch (const std::exception&) {
                throw genban::IoError(o.inputs[f] + ": malformed row '" + line + "'");
            }
        }
    }
    auto agents = json::array();
    for (const auto& [agent, m] : finals) {
        std::vector<double> v;
        for (const auto& [k, c] : m) v.push_back(c);
        const auto ms = genban::mean_se(v);
        agents.push_back({{"agent", agent},
                          {"n_tasks", v.size()},
                          {"horizon", horizons[agent]},
                          {"final_cum_regret_mean", ms.mean},
                          {"final_cum_regret_se", ms.se}});
    }
    json out{{"agents", agents}, {"inputs", o.inputs}, {"version", GENBAN_VERSION}};
    if (!o.out.empty()) write_json(ensure_dir(o.out) / "report.json", out);
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    set_up_logging();
    CLI::App app{"Generative Thompson sampling for meta contextual bandits"};
    app.set_version_flag("--version", GENBAN_VERSION);
    app.require_subcommand(1);
    Options o;
    auto seed_opt = app.add_option("--seed", o.seed, "Override the experiment seed");
    app.add_option("--threads", o.threads, "Worker threads (default: available parallelism)");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--config", o.config, "Experiment config (JSON)");

    auto* train = app.add_subcommand("train", "Train a sequence model offline");
    auto* simulate = app.add_subcommand("simulate", "Run agents on sampled tasks");
    auto* verify = app.add_subcommand("verify", "Run a numerical verification suite");
    verify->add_option("suite", o.suite, "lossdecomp | posterior | vc | bound")->required();
    auto* report = app.add_subcommand("report", "Aggregate trace CSVs");
    report->add_option("traces", o.inputs, "Trace CSV files")->required();
    for (auto* sub : {train, simulate, verify, report}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    o.seed_set = seed_opt->count() > 0;
    if (o.threads > 0) omp_set_num_threads(o.threads);

    try {
        if (*train) return cmd_train(o);
        if (*simulate) return cmd_simulate(o);
        if (*verify) return cmd_verify(o);
        if (*report) return cmd_report(o);
    } catch (const genban::IoError& e) {
        spdlog::error("{}", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}

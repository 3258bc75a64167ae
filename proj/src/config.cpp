#include "genban/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "genban/errors.hpp"
#include "genban/rng.hpp"

namespace genban {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
T get_or(const json& j, const std::string& key, T def, const std::string& where) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

std::size_t get_count(const json& j, const std::string& key, std::size_t def, const std::string& where) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(where + "." + key + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

PolicyFitParams fit_from_json(const json& j, const std::string& where) {
    check_keys(j, {"logistic_c", "tree_depth", "tree_rounds", "tree_learning_rate"}, where);
    PolicyFitParams p;
    p.logistic.c = get_or(j, "logistic_c", p.logistic.c, where);
    p.tree.max_depth = get_count(j, "tree_depth", p.tree.max_depth, where);
    p.tree.rounds = get_count(j, "tree_rounds", p.tree.rounds, where);
    p.tree.learning_rate = get_or(j, "tree_learning_rate", p.tree.learning_rate, where);
    if (!(p.logistic.c > 0.0)) throw ConfigError(where + ".logistic_c must be positive");
    p.tree.validate();
    return p;
}

AgentSpec agent_from_json(const json& j, std::size_t idx, const PolicyFitParams& fit) {
    const std::string where = "agents[" + std::to_string(idx) + "]";
    check_keys(j,
               {"variant", "label", "model", "epsilon", "temperature", "ucb_alpha", "lin_ts_noise_var",
                "lin_prior_var", "policy_class", "criterion"},
               where);
    if (!j.contains("variant")) throw ConfigError(where + ": missing 'variant'");
    AgentSpec s;
    auto& c = s.cfg;
    c.variant = parse_agent_variant(get_or<std::string>(j, "variant", "", where));
    c.label = get_or<std::string>(j, "label", "", where);
    c.epsilon = get_or(j, "epsilon", c.epsilon, where);
    c.temperature = get_or(j, "temperature", c.temperature, where);
    c.ucb_alpha = get_or(j, "ucb_alpha", c.ucb_alpha, where);
    c.lin_ts_noise_var = get_or(j, "lin_ts_noise_var", c.lin_ts_noise_var, where);
    c.lin_prior_var = get_or(j, "lin_prior_var", c.lin_prior_var, where);
    if (j.contains("policy_class")) c.policy_class = parse_policy_class(get_or<std::string>(j, "policy_class", "", where));
    if (j.contains("criterion")) c.criterion = parse_fit_criterion(get_or<std::string>(j, "criterion", "", where));
    c.fit = fit;
    s.model = get_or<std::string>(j, "model", "", where);
    c.validate();
    return s;
}

TrainingSpec training_from_json(const json& j) {
    const std::string where = "training";
    check_keys(j,
               {"train_arms", "val_arms", "hist_len", "hidden", "features", "epochs", "batch_size", "lr_grid",
                "weight_decay", "seq_len", "permute_tuples", "positions_per_sequence", "val_positions_per_sequence",
                "optimizer", "parallel", "model_out", "loss_csv"},
               where);
    TrainingSpec t;
    t.train_arms = get_count(j, "train_arms", t.train_arms, where);
    t.val_arms = get_count(j, "val_arms", t.val_arms, where);
    t.hist_len = get_count(j, "hist_len", t.hist_len, where);
    t.hidden = get_or(j, "hidden", t.hidden, where);
    if (j.contains("features")) {
        const auto& f = j.at("features");
        check_keys(f, {"d_z", "d_x", "ridge_eps", "stat_scale", "ridge_estimate"}, "training.features");
        t.features.d_z = get_count(f, "d_z", t.features.d_z, "training.features");
        t.features.d_x = get_count(f, "d_x", t.features.d_x, "training.features");
        t.features.ridge_eps = get_or(f, "ridge_eps", t.features.ridge_eps, "training.features");
        t.features.stat_scale = get_or(f, "stat_scale", t.features.stat_scale, "training.features");
        t.features.ridge_estimate = get_or(f, "ridge_estimate", t.features.ridge_estimate, "training.features");
    }
    t.features.validate();
    auto& c = t.train;
    c.epochs = get_count(j, "epochs", c.epochs, where);
    c.batch_size = get_count(j, "batch_size", c.batch_size, where);
    c.lr_grid = get_or(j, "lr_grid", c.lr_grid, where);
    c.weight_decay = get_or(j, "weight_decay", c.weight_decay, where);
    c.seq_len = get_count(j, "seq_len", c.seq_len, where);
    c.permute_tuples = get_or(j, "permute_tuples", c.permute_tuples, where);
    c.positions_per_sequence = get_count(j, "positions_per_sequence", c.positions_per_sequence, where);
    c.val_positions_per_sequence = get_count(j, "val_positions_per_sequence", c.val_positions_per_sequence, where);
    const auto opt = get_or<std::string>(j, "optimizer", "sgd", where);
    if (opt == "sgd")
        c.optimizer = Optimizer::Sgd;
    else if (opt == "adamw")
        c.optimizer = Optimizer::AdamW;
    else
        throw ConfigError("training.optimizer: expected 'sgd' or 'adamw'");
    c.parallel = get_or(j, "parallel", c.parallel, where);
    c.validate();
    t.model_out = get_or(j, "model_out", t.model_out, where);
    t.loss_csv = get_or(j, "loss_csv", t.loss_csv, where);
    if (t.train_arms == 0 || t.val_arms < 2) throw ConfigError("training: need train_arms >= 1 and val_arms >= 2");
    if (t.hist_len < c.seq_len) throw ConfigError("training: hist_len must be >= seq_len");
    return t;
}

} // namespace

ExperimentOptions ExperimentConfig::options() const {
    ExperimentOptions o;
    o.n_tasks = n_tasks;
    o.horizon = horizon;
    o.n_actions = n_actions;
    o.seed = seed;
    o.context_mode = context_mode;
    o.oracle_class = oracle_class;
    o.oracle_criterion = oracle_criterion;
    o.fit = fit;
    return o;
}

std::string ExperimentConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(raw.dump())));
    return buf;
}

ExperimentConfig parse_config(const json& j) {
    check_keys(j,
               {"environment", "agents", "horizon", "n_actions", "n_tasks", "seed", "context_mode", "oracle", "fit",
                "output_dir", "training"},
               "config");
    ExperimentConfig c;
    c.raw = j;
    if (!j.contains("environment")) throw ConfigError("config: missing 'environment'");
    const auto& e = j.at("environment");
    check_keys(e, {"type", "params"}, "environment");
    c.env.type = get_or<std::string>(e, "type", c.env.type, "environment");
    if (e.contains("params")) c.env.params = e.at("params");

    c.horizon = get_count(j, "horizon", c.horizon, "config");
    c.n_actions = get_count(j, "n_actions", c.n_actions, "config");
    c.n_tasks = get_count(j, "n_tasks", c.n_tasks, "config");
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed, "config");
    c.context_mode = parse_context_mode(get_or<std::string>(j, "context_mode", "fixed", "config"));
    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        check_keys(o, {"policy_class", "criterion"}, "oracle");
        c.oracle_class = parse_policy_class(get_or<std::string>(o, "policy_class", "logistic", "oracle"));
        c.oracle_criterion = parse_fit_criterion(get_or<std::string>(o, "criterion", "per_arm_reward_regression", "oracle"));
    }
    if (j.contains("fit")) c.fit = fit_from_json(j.at("fit"), "fit");
    c.output_dir = get_or(j, "output_dir", c.output_dir, "config");
    if (j.contains("agents")) {
        const auto& a = j.at("agents");
        if (!a.is_array()) throw ConfigError("config.agents: expected an array");
        for (std::size_t i = 0; i < a.size(); ++i) c.agents.push_back(agent_from_json(a[i], i, c.fit));
    }
    if (j.contains("training")) c.training = training_from_json(j.at("training"));
    c.options().validate();
    // Build once so environment errors surface at parse time.
    make_generator(c.env);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    ExperimentConfig c = parse_config(j);
    const auto parent = std::filesystem::path(path).parent_path();
    c.base_dir = parent.empty() ? "." : parent.string();
    return c;
}

SyntheticDgpConfig synthetic_config_from_json(const json& j) {
    const std::string where = "environment.params";
    check_keys(j,
               {"d_z", "d_x", "const_mean", "const_sd", "z_coef_mean", "z_coef_sd", "x_coef_mean", "x_coef_sd",
                "cross_mean", "cross_sd", "d_z_raw"},
               where);
    SyntheticDgpConfig c;
    c.d_z = get_count(j, "d_z", c.d_z, where);
    c.d_x = get_count(j, "d_x", c.d_x, where);
    c.const_mean = get_or(j, "const_mean", c.const_mean, where);
    c.const_sd = get_or(j, "const_sd", c.const_sd, where);
    c.z_coef_mean = get_or(j, "z_coef_mean", c.z_coef_mean, where);
    c.z_coef_sd = get_or(j, "z_coef_sd", c.z_coef_sd, where);
    c.x_coef_mean = get_or(j, "x_coef_mean", c.x_coef_mean, where);
    c.x_coef_sd = get_or(j, "x_coef_sd", c.x_coef_sd, where);
    c.cross_mean = get_or(j, "cross_mean", c.cross_mean, where);
    c.cross_sd = get_or(j, "cross_sd", c.cross_sd, where);
    c.validate();
    return c;
}

DiscreteMixtureConfig discrete_config_from_json(const json& j) {
    const std::string where = "environment.params";
    check_keys(j, {"n_contexts", "theta", "prior_weights", "class_probs"}, where);
    DiscreteMixtureConfig c;
    c.n_contexts = get_count(j, "n_contexts", c.n_contexts, where);
    if (!j.contains("theta") || !j.contains("prior_weights"))
        throw ConfigError(where + ": discrete env needs 'theta' and 'prior_weights'");
    c.theta = get_or(j, "theta", c.theta, where);
    c.prior_weights = get_or(j, "prior_weights", c.prior_weights, where);
    c.class_probs = get_or(j, "class_probs", c.class_probs, where);
    return c;
}

std::shared_ptr<const TaskGenerator> make_generator(const EnvSpec& spec) {
    if (spec.type == "synthetic") return std::make_shared<SyntheticDgp>(synthetic_config_from_json(spec.params));
    if (spec.type == "surrogate") {
        SurrogateDgpConfig c;
        auto base = spec.params;
        if (base.contains("d_z_raw")) {
            c.d_z_raw = get_count(base, "d_z_raw", c.d_z_raw, "environment.params");
            base.erase("d_z_raw");
        }
        c.base = synthetic_config_from_json(base);
        return std::make_shared<SurrogateDgp>(c);
    }
    if (spec.type == "discrete") return std::make_shared<DiscreteMixtureEnv>(discrete_config_from_json(spec.params));
    throw ConfigError("environment.type: unknown '" + spec.type + "'");
}

std::shared_ptr<const SequenceModel> make_model(const std::string& spec, const std::shared_ptr<const TaskGenerator>& gen,
                                                const std::string& base_dir) {
    if (spec.empty()) return nullptr;
    if (spec == "exact") {
        auto env = std::dynamic_pointer_cast<const DiscreteMixtureEnv>(gen);
        if (!env) throw ConfigError("model 'exact' is only available for the discrete environment");
        return std::make_shared<ExactMixtureModel>(env);
    }
    if (spec == "beta_bernoulli") return std::make_shared<BetaBernoulliModel>();
    if (spec == "constant") return std::make_shared<ConstantModel>(0.5);
    std::filesystem::path p(spec);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    if (!std::filesystem::exists(p)) throw IoError("model file not found: " + p.string());
    return std::make_shared<MlpSeqModel>(MlpSeqModel::load(p.string()));
}

TrainResult run_training(const TaskGenerator& gen, const TrainingSpec& spec, std::size_t action_slots,
                         std::uint64_t seed) {
    if (spec.features.d_z != gen.prior_dim() || spec.features.d_x != gen.context_dim())
        throw ConfigError("training.features: d_z/d_x do not match the environment (" +
                          std::to_string(gen.prior_dim()) + ", " + std::to_string(gen.context_dim()) + ")");
    RngStream root(seed, 0, "training");
    auto pool_rng = root.child("train_pool");
    auto val_rng = root.child("val_pool");
    auto init_rng = root.child("init");
    auto fit_rng = root.child("fit");
    const auto train_pool = build_pool(gen, spec.train_arms, spec.hist_len, pool_rng, action_slots);
    const auto val_pool = build_pool(gen, spec.val_arms, spec.hist_len, val_rng, action_slots);
    MlpSeqModel init(spec.features, spec.hidden);
    init.net().init_glorot(init_rng);
    return train(init, train_pool, val_pool, spec.train, fit_rng);
}

json provenance(const ExperimentConfig& cfg) {
    return {{"config_hash", cfg.hash()}, {"seed", cfg.seed}, {"version", GENBAN_VERSION}};
}

std::string provenance_line(const ExperimentConfig& cfg) {
    return "config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) + " version=" + GENBAN_VERSION;
}

} // namespace genban

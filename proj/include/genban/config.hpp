#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "genban/agents.hpp"
#include "genban/env.hpp"
#include "genban/eval.hpp"
#include "genban/mlp.hpp"
#include "genban/training.hpp"

namespace genban {

struct EnvSpec {
    std::string type = "synthetic";  // synthetic | surrogate | discrete
    nlohmann::json params = nlohmann::json::object();
};

struct AgentSpec {
    AgentConfig cfg;
    // Sequence model: "exact", "beta_bernoulli", "constant", or a model file
    // path (relative paths resolve against the config file's directory).
    std::string model;
};

struct TrainingSpec {
    std::size_t train_arms = 1000;
    std::size_t val_arms = 200;
    std::size_t hist_len = 1000;
    std::vector<std::size_t> hidden{100, 100, 100};
    MlpFeatureConfig features;
    TrainConfig train;
    std::string model_out = "model.json";
    std::string loss_csv = "loss.csv";
};

struct ExperimentConfig {
    EnvSpec env;
    std::vector<AgentSpec> agents;
    std::size_t horizon = 200;
    std::size_t n_actions = 5;
    std::size_t n_tasks = 100;
    std::uint64_t seed = 0;
    ContextMode context_mode = ContextMode::Fixed;
    PolicyClass oracle_class = PolicyClass::Logistic;
    FitCriterion oracle_criterion = FitCriterion::PerArmRewardRegression;
    PolicyFitParams fit;
    std::string output_dir = "out";
    std::optional<TrainingSpec> training;
    std::string base_dir = ".";      // directory of the config file
    nlohmann::json raw;              // the document as parsed

    ExperimentOptions options() const;
    // FNV-1a of the canonical JSON dump, as 16 hex digits.
    std::string hash() const;
};

// Validates the document; unknown keys anywhere raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
// IoError when the file is unreadable, ConfigError on bad JSON or schema.
ExperimentConfig load_config(const std::string& path);

DiscreteMixtureConfig discrete_config_from_json(const nlohmann::json& j);
SyntheticDgpConfig synthetic_config_from_json(const nlohmann::json& j);
std::shared_ptr<const TaskGenerator> make_generator(const EnvSpec& spec);

// Model named by an agent spec; `gen` supplies the environment for "exact".
std::shared_ptr<const SequenceModel> make_model(const std::string& spec,
                                                const std::shared_ptr<const TaskGenerator>& gen,
                                                const std::string& base_dir = ".");

// Draws the training and validation pools, initializes the network and runs
// train(). Streams: (seed, 0, "training") children "train_pool", "val_pool",
// "init" and "fit".
TrainResult run_training(const TaskGenerator& gen, const TrainingSpec& spec, std::size_t action_slots,
                         std::uint64_t seed);

// {config_hash, seed, version}
nlohmann::json provenance(const ExperimentConfig& cfg);
std::string provenance_line(const ExperimentConfig& cfg);

} // namespace genban

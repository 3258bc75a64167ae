#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "genban/env.hpp"
#include "genban/mlp.hpp"
#include "genban/rng.hpp"
#include "genban/seqmodel.hpp"

namespace genban {

inline constexpr double kProbClamp = 1e-12;

// Historical (x, y) pairs of one action, in the order they were logged.
struct ArmRecord {
    Vec z;
    std::vector<ArmObservation> obs;
};

// Per-action logged data. Each arm also keeps a canonical ordering of its
// pairs (lexicographic on (x, y)) so that resampling does not depend on how
// the log happened to be ordered.
class HistoricalPool {
public:
    HistoricalPool() = default;
    explicit HistoricalPool(std::vector<ArmRecord> arms);

    std::size_t size() const { return arms_.size(); }
    const ArmRecord& arm(std::size_t i) const { return arms_.at(i); }
    const std::vector<std::size_t>& canonical(std::size_t i) const { return canonical_.at(i); }
    // Smallest per-arm history length.
    std::size_t min_length() const;

private:
    std::vector<ArmRecord> arms_;
    std::vector<std::vector<std::size_t>> canonical_;
};

// n_arms independent arms with hist_len pairs each; arm i is drawn as action
// (i mod action_slots) of the generator, from stream child ("pool_arm", i).
HistoricalPool build_pool(const TaskGenerator& gen, std::size_t n_arms, std::size_t hist_len, RngStream& rng,
                          std::size_t action_slots = 1);

// L distinct entries of arm a. With permute on they come in a fresh random
// order; with permute off the historical order is kept.
std::vector<ArmObservation> resample_sequence(const HistoricalPool& pool, std::size_t a, std::size_t L,
                                              RngStream& rng, bool permute = true);

struct NllResult {
    double total = 0.0;
    std::vector<double> terms;  // -log p for each step, in order
    std::size_t n_clamped = 0;  // steps whose probability hit the clamp
    SeqState final_state;
};

// -sum_t log p(y_t | z, x_{1:t}, y_{1:t-1}) starting from the model's initial state.
NllResult sequence_nll(const SequenceModel& m, std::span<const double> z, std::span<const ArmObservation> seq);
// Same, continuing from a given state (the conditional NLL of a suffix).
NllResult sequence_nll_from(const SequenceModel& m, std::span<const double> z, const SeqState& start,
                            std::span<const ArmObservation> seq);

// Gradient of sequence_nll with respect to the MLP parameters; returns the NLL.
double sequence_nll_gradient(const MlpSeqModel& m, std::span<const double> z, std::span<const ArmObservation> seq,
                             std::vector<double>& grad);

enum class Optimizer { Sgd, AdamW };

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 500;
    std::vector<double> lr_grid{0.1, 0.01, 0.001};
    double weight_decay = 0.01;
    std::size_t seq_len = 500;
    bool permute_tuples = true;
    // Positions per sequence entering the loss; 0 means all of them. A
    // uniform subset keeps the gradient unbiased for the per-step mean.
    std::size_t positions_per_sequence = 0;
    std::size_t val_positions_per_sequence = 0;
    Optimizer optimizer = Optimizer::Sgd;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    bool parallel = true;

    void validate() const;
};

struct LossRecord {
    std::size_t epoch = 0;
    std::string split;  // "train" or "val"
    double nll = 0.0;   // mean per-step NLL
    double se = 0.0;    // standard error across sequences
    double lr = 0.0;
};

struct TrainResult {
    MlpSeqModel model;
    std::vector<LossRecord> curve;
    double best_lr = 0.0;
    std::size_t best_epoch = 0;
    double best_val_nll = 0.0;
    double best_val_se = 0.0;
    // Per-sequence validation NLL of the selected checkpoint (for paired comparisons).
    std::vector<double> best_val_per_sequence;
};

// Fixed evaluation rows: sequences drawn once, positions drawn once.
struct EvalSet {
    std::vector<double> inputs;          // rows x input_dim
    std::vector<double> targets;         // rows
    std::vector<std::size_t> seq_of_row; // owning sequence
    std::size_t n_sequences = 0;
};

EvalSet make_eval_set(const MlpSeqModel& m, const HistoricalPool& pool, std::size_t L, std::size_t positions,
                      RngStream& rng, bool permute = true);

// Mean per-step NLL over the set, per-sequence means, and its standard error.
struct EvalResult {
    double nll = 0.0;
    double se = 0.0;
    std::vector<double> per_sequence;
};
EvalResult evaluate(const MlpSeqModel& m, const EvalSet& set, bool parallel = true);

// Offline training with learning-rate and epoch selection by validation NLL.
// Throws TrainingDiverged when every learning rate produces a non-finite loss.
TrainResult train(const MlpSeqModel& init, const HistoricalPool& train_pool, const HistoricalPool& val_pool,
                  const TrainConfig& cfg, RngStream& rng);

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& curve, const std::string& provenance);

struct LossEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::vector<double> per_task;
};

// Monte Carlo estimate of E[sum_a sum_t -log p(Y_t^{(a)} | ...)] over tasks
// drawn from the generator. Task i uses stream (rng child "loss_task", i).
LossEstimate population_loss(const SequenceModel& m, const TaskGenerator& gen, const TaskShape& shape,
                             std::size_t n_tasks, RngStream& rng);

} // namespace genban

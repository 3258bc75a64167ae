#include "genban/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "genban/errors.hpp"

namespace genban {

// ---- pool ----

HistoricalPool::HistoricalPool(std::vector<ArmRecord> arms) : arms_(std::move(arms)) {
    canonical_.reserve(arms_.size());
    for (const auto& arm : arms_) {
        std::vector<std::size_t> idx(arm.obs.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
            const auto& a = arm.obs[i];
            const auto& b = arm.obs[j];
            if (a.x != b.x) return a.x < b.x;
            return a.y < b.y;
        });
        canonical_.push_back(std::move(idx));
    }
}

std::size_t HistoricalPool::min_length() const {
    std::size_t n = arms_.empty() ? 0 : arms_.front().obs.size();
    for (const auto& a : arms_) n = std::min(n, a.obs.size());
    return n;
}

HistoricalPool build_pool(const TaskGenerator& gen, std::size_t n_arms, std::size_t hist_len, RngStream& rng,
                          std::size_t action_slots) {
    if (action_slots == 0) throw ConfigError("build_pool: action_slots must be positive");
    std::vector<ArmRecord> arms(n_arms);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n_arms; ++i) {
        auto arm_rng = rng.child("pool_arm", i);
        auto draw_rng = arm_rng.child("draw");
        const Action a = i % action_slots;
        const ArmDraw draw = gen.sample_arm(a, draw_rng);
        auto x_rng = arm_rng.child("contexts");
        auto y_rng = arm_rng.child("outcomes");
        ArmRecord rec;
        rec.z = draw.z;
        rec.obs.reserve(hist_len);
        for (std::size_t t = 0; t < hist_len; ++t) {
            Vec x = gen.sample_context(x_rng);
            const double y = y_rng.bernoulli(gen.success_prob(a, draw, x)) ? 1.0 : 0.0;
            rec.obs.push_back({std::move(x), y});
        }
        arms[i] = std::move(rec);
    }
    return HistoricalPool(std::move(arms));
}

namespace {

// First k entries of a uniform random permutation of 0..n-1.
std::vector<std::size_t> partial_permutation(std::size_t n, std::size_t k, RngStream& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

} // namespace

std::vector<ArmObservation> resample_sequence(const HistoricalPool& pool, std::size_t a, std::size_t L,
                                              RngStream& rng, bool permute) {
    const auto& arm = pool.arm(a);
    const std::size_t n = arm.obs.size();
    if (L > n) throw ConfigError("resample_sequence: sequence length exceeds the arm's history");
    auto pick = partial_permutation(n, L, rng);
    std::vector<ArmObservation> seq;
    seq.reserve(L);
    if (permute) {
        const auto& canon = pool.canonical(a);
        for (auto i : pick) seq.push_back(arm.obs[canon[i]]);
    } else {
        std::sort(pick.begin(), pick.end());
        for (auto i : pick) seq.push_back(arm.obs[i]);
    }
    return seq;
}

// ---- sequence loss ----

namespace {

double clamped_nll(double p, double y, bool& clamped) {
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    clamped = pc != p;
    return -(y * std::log(pc) + (1.0 - y) * std::log1p(-pc));
}

} // namespace

NllResult sequence_nll_from(const SequenceModel& m, std::span<const double> z, const SeqState& start,
                            std::span<const ArmObservation> seq) {
    NllResult r;
    r.final_state = start;
    r.terms.reserve(seq.size());
    for (const auto& o : seq) {
        bool clamped = false;
        const double term = clamped_nll(m.predict(z, r.final_state, o.x), o.y, clamped);
        if (clamped) ++r.n_clamped;
        r.terms.push_back(term);
        r.total += term;
        m.update(r.final_state, z, o.x, o.y);
    }
    if (r.n_clamped > 0) spdlog::debug("sequence_nll: {} probabilities hit the clamp", r.n_clamped);
    return r;
}

NllResult sequence_nll(const SequenceModel& m, std::span<const double> z, std::span<const ArmObservation> seq) {
    return sequence_nll_from(m, z, m.initial_state(z), seq);
}

double sequence_nll_gradient(const MlpSeqModel& m, std::span<const double> z, std::span<const ArmObservation> seq,
                             std::vector<double>& grad) {
    const std::size_t dim = m.feature_config().input_dim();
    std::vector<double> inputs(seq.size() * dim);
    SeqState s = m.initial_state(z);
    for (std::size_t t = 0; t < seq.size(); ++t) {
        m.features(z, s, seq[t].x, inputs.data() + t * dim);
        m.update(s, z, seq[t].x, seq[t].y);
    }
    Mlp::Cache cache;
    m.net().forward(inputs.data(), seq.size(), cache);
    std::vector<double> dlogit(seq.size());
    double total = 0.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const double p = logistic(cache.acts.back()[t]);
        bool clamped = false;
        total += clamped_nll(p, seq[t].y, clamped);
        dlogit[t] = clamped ? 0.0 : p - seq[t].y;
    }
    m.net().backward(cache, dlogit.data(), grad);
    return total;
}

// ---- training ----

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("train: batch size must be >= 1");
    if (seq_len == 0) throw ConfigError("train: sequence length must be >= 1");
    if (lr_grid.empty()) throw ConfigError("train: learning-rate grid is empty");
    for (double lr : lr_grid)
        if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train: learning rates must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("train: weight decay must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0))
        throw ConfigError("train: invalid AdamW constants");
}

namespace {

struct Batch {
    std::vector<double> inputs;
    std::vector<double> targets;
    std::vector<std::size_t> seq_of_row;
};

// Rows for one sequence at the chosen positions (all when positions is 0 or >= L).
void sequence_rows(const MlpSeqModel& m, std::span<const double> z, const std::vector<ArmObservation>& seq,
                   std::size_t positions, RngStream& rng, std::vector<double>& inputs, std::vector<double>& targets) {
    const std::size_t L = seq.size();
    const std::size_t dim = m.feature_config().input_dim();
    std::vector<char> take(L, 1);
    if (positions != 0 && positions < L) {
        std::fill(take.begin(), take.end(), 0);
        for (auto i : partial_permutation(L, positions, rng)) take[i] = 1;
    }
    const std::size_t n_rows = static_cast<std::size_t>(std::count(take.begin(), take.end(), 1));
    inputs.resize(n_rows * dim);
    targets.resize(n_rows);
    SeqState s = m.initial_state(z);
    std::size_t r = 0;
    for (std::size_t t = 0; t < L; ++t) {
        if (take[t]) {
            m.features(z, s, seq[t].x, inputs.data() + r * dim);
            targets[r] = seq[t].y;
            ++r;
        }
        m.update(s, z, seq[t].x, seq[t].y);
    }
}

// Assemble rows for the given arms; arm k of the batch uses stream child ("seq", arm id).
Batch build_batch(const MlpSeqModel& m, const HistoricalPool& pool, std::span<const std::size_t> arm_ids,
                  std::size_t L, std::size_t positions, bool permute, const RngStream& rng, bool parallel) {
    const std::size_t n = arm_ids.size();
    std::vector<std::vector<double>> ins(n), tgs(n);
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
    for (std::size_t k = 0; k < n; ++k) {
        auto seq_rng = rng.child("seq", arm_ids[k]);
        auto order_rng = seq_rng.child("order");
        auto pos_rng = seq_rng.child("positions");
        const auto seq = resample_sequence(pool, arm_ids[k], L, order_rng, permute);
        sequence_rows(m, pool.arm(arm_ids[k]).z, seq, positions, pos_rng, ins[k], tgs[k]);
    }
    Batch b;
    for (std::size_t k = 0; k < n; ++k) {
        b.inputs.insert(b.inputs.end(), ins[k].begin(), ins[k].end());
        b.targets.insert(b.targets.end(), tgs[k].begin(), tgs[k].end());
        b.seq_of_row.insert(b.seq_of_row.end(), tgs[k].size(), k);
    }
    return b;
}

struct LossStats {
    double nll = 0.0;
    double se = 0.0;
    std::vector<double> per_sequence;
};

LossStats summarize(const std::vector<double>& row_loss, const std::vector<std::size_t>& seq_of_row,
                    std::size_t n_seq) {
    std::vector<double> sum(n_seq, 0.0);
    std::vector<std::size_t> cnt(n_seq, 0);
    for (std::size_t r = 0; r < row_loss.size(); ++r) {
        sum[seq_of_row[r]] += row_loss[r];
        cnt[seq_of_row[r]] += 1;
    }
    LossStats out;
    out.per_sequence.resize(n_seq);
    double total = 0.0;
    for (std::size_t k = 0; k < n_seq; ++k) {
        out.per_sequence[k] = cnt[k] ? sum[k] / static_cast<double>(cnt[k]) : 0.0;
        total += sum[k];
    }
    out.nll = row_loss.empty() ? 0.0 : total / static_cast<double>(row_loss.size());
    if (n_seq > 1) {
        double mean = 0.0;
        for (double v : out.per_sequence) mean += v;
        mean /= static_cast<double>(n_seq);
        double ss = 0.0;
        for (double v : out.per_sequence) ss += (v - mean) * (v - mean);
        out.se = std::sqrt(ss / static_cast<double>(n_seq - 1) / static_cast<double>(n_seq));
    }
    return out;
}

// Forward pass over rows; fills per-row NLL and (optionally) dNLL/dlogit.
void row_losses(const Mlp& net, const std::vector<double>& inputs, const std::vector<double>& targets,
                Mlp::Cache& cache, std::vector<double>& loss, std::vector<double>* dlogit, bool parallel) {
    const std::size_t rows = targets.size();
    net.forward(inputs.data(), rows, cache, parallel);
    loss.resize(rows);
    if (dlogit) dlogit->resize(rows);
    const auto& logits = cache.acts.back();
    for (std::size_t r = 0; r < rows; ++r) {
        const double p = logistic(logits[r]);
        bool clamped = false;
        loss[r] = clamped_nll(p, targets[r], clamped);
        if (dlogit) (*dlogit)[r] = clamped ? 0.0 : p - targets[r];
    }
}

class OptimizerState {
public:
    OptimizerState(const TrainConfig& cfg, std::size_t n, double lr) : cfg_(cfg), lr_(lr) {
        if (cfg.optimizer == Optimizer::AdamW) {
            m_.assign(n, 0.0);
            v_.assign(n, 0.0);
        }
    }

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        const double decay = 1.0 - lr_ * cfg_.weight_decay;
        if (cfg_.optimizer == Optimizer::Sgd) {
            for (std::size_t i = 0; i < params.size(); ++i) params[i] = params[i] * decay - lr_ * grad[i];
            return;
        }
        ++t_;
        const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
            v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
            const double mh = m_[i] / c1;
            const double vh = v_[i] / c2;
            params[i] = params[i] * decay - lr_ * mh / (std::sqrt(vh) + cfg_.adam_eps);
        }
    }

private:
    const TrainConfig& cfg_;
    double lr_;
    std::size_t t_ = 0;
    std::vector<double> m_, v_;
};

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

EvalSet make_eval_set(const MlpSeqModel& m, const HistoricalPool& pool, std::size_t L, std::size_t positions,
                      RngStream& rng, bool permute) {
    std::vector<std::size_t> ids(pool.size());
    std::iota(ids.begin(), ids.end(), 0);
    Batch b = build_batch(m, pool, ids, L, positions, permute, rng, true);
    EvalSet set;
    set.inputs = std::move(b.inputs);
    set.targets = std::move(b.targets);
    set.seq_of_row = std::move(b.seq_of_row);
    set.n_sequences = pool.size();
    return set;
}

EvalResult evaluate(const MlpSeqModel& m, const EvalSet& set, bool parallel) {
    Mlp::Cache cache;
    std::vector<double> loss;
    row_losses(m.net(), set.inputs, set.targets, cache, loss, nullptr, parallel);
    auto stats = summarize(loss, set.seq_of_row, set.n_sequences);
    return {stats.nll, stats.se, std::move(stats.per_sequence)};
}

TrainResult train(const MlpSeqModel& init, const HistoricalPool& train_pool, const HistoricalPool& val_pool,
                  const TrainConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (train_pool.size() == 0) throw ConfigError("train: empty training pool");
    if (cfg.seq_len > train_pool.min_length())
        throw ConfigError("train: sequence length exceeds the historical length");
    if (val_pool.size() > 0 && cfg.seq_len > val_pool.min_length())
        throw ConfigError("train: sequence length exceeds the validation historical length");

    TrainResult result{init, {}, 0.0, 0, 0.0, 0.0, {}};
    auto val_rng = rng.child("validation");
    const EvalSet val_set = val_pool.size() > 0
                                ? make_eval_set(init, val_pool, cfg.seq_len, cfg.val_positions_per_sequence, val_rng,
                                                cfg.permute_tuples)
                                : EvalSet{};
    const bool have_val = val_set.n_sequences > 0;

    const auto init_eval = have_val ? evaluate(init, val_set, cfg.parallel) : EvalResult{};
    result.best_val_nll = init_eval.nll;
    result.best_val_se = init_eval.se;
    result.best_val_per_sequence = init_eval.per_sequence;
    if (cfg.epochs == 0) {
        for (double lr : cfg.lr_grid) result.curve.push_back({0, "val", init_eval.nll, init_eval.se, lr});
        return result;
    }

    bool have_best = false;
    std::size_t diverged = 0;
    for (std::size_t li = 0; li < cfg.lr_grid.size(); ++li) {
        const double lr = cfg.lr_grid[li];
        MlpSeqModel model = init;
        OptimizerState opt(cfg, model.net().n_params(), lr);
        auto lr_rng = rng.child("lr", li);
        if (have_val) result.curve.push_back({0, "val", init_eval.nll, init_eval.se, lr});

        bool bad = false;
        Mlp::Cache cache;
        std::vector<double> loss, dlogit, grad;
        for (std::size_t epoch = 1; epoch <= cfg.epochs && !bad; ++epoch) {
            auto epoch_rng = lr_rng.child("epoch", epoch);
            auto shuffle_rng = epoch_rng.child("shuffle");
            auto order = partial_permutation(train_pool.size(), train_pool.size(), shuffle_rng);

            std::vector<double> epoch_seq_loss;
            double epoch_sum = 0.0;
            std::size_t epoch_rows = 0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
                std::span<const std::size_t> ids(order.data() + start, stop - start);
                Batch b = build_batch(model, train_pool, ids, cfg.seq_len, cfg.positions_per_sequence,
                                      cfg.permute_tuples, epoch_rng, cfg.parallel);
                row_losses(model.net(), b.inputs, b.targets, cache, loss, &dlogit, cfg.parallel);
                const double inv_rows = 1.0 / static_cast<double>(b.targets.size());
                for (auto& d : dlogit) d *= inv_rows;
                model.net().backward(cache, dlogit.data(), grad, cfg.parallel);
                const auto stats = summarize(loss, b.seq_of_row, ids.size());
                epoch_seq_loss.insert(epoch_seq_loss.end(), stats.per_sequence.begin(), stats.per_sequence.end());
                for (double v : loss) epoch_sum += v;
                epoch_rows += loss.size();
                if (!std::isfinite(epoch_sum) || !all_finite(grad)) {
                    bad = true;
                    break;
                }
                opt.step(model.net().params(), grad);
            }
            if (!bad && !all_finite(model.net().params())) bad = true;
            if (bad) {
                spdlog::warn("train: lr={} diverged at epoch {}; candidate dropped", lr, epoch);
                break;
            }
            double se = 0.0;
            if (epoch_seq_loss.size() > 1) {
                double mean = 0.0;
                for (double v : epoch_seq_loss) mean += v;
                mean /= static_cast<double>(epoch_seq_loss.size());
                double ss = 0.0;
                for (double v : epoch_seq_loss) ss += (v - mean) * (v - mean);
                se = std::sqrt(ss / static_cast<double>(epoch_seq_loss.size() - 1) /
                               static_cast<double>(epoch_seq_loss.size()));
            }
            const double train_nll = epoch_sum / static_cast<double>(std::max<std::size_t>(epoch_rows, 1));
            result.curve.push_back({epoch, "train", train_nll, se, lr});

            EvalResult ev;
            if (have_val) {
                ev = evaluate(model, val_set, cfg.parallel);
                if (!std::isfinite(ev.nll)) {
                    spdlog::warn("train: lr={} produced a non-finite validation loss at epoch {}", lr, epoch);
                    bad = true;
                    break;
                }
                result.curve.push_back({epoch, "val", ev.nll, ev.se, lr});
            }
            spdlog::info("train: lr={} epoch={} train_nll={:.5f} val_nll={:.5f}", lr, epoch, train_nll, ev.nll);
            // Without validation data the last epoch of the first run is kept.
            const bool take = have_val ? (!have_best || ev.nll < result.best_val_nll) : li == 0;
            if (take) {
                have_best = true;
                result.model = model;
                result.best_lr = lr;
                result.best_epoch = epoch;
                result.best_val_nll = ev.nll;
                result.best_val_se = ev.se;
                result.best_val_per_sequence = ev.per_sequence;
            }
        }
        if (bad) ++diverged;
    }
    if (diverged == cfg.lr_grid.size())
        throw TrainingDiverged("train: every learning rate produced a non-finite loss");
    return result;
}

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& curve, const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << "epoch,split,nll,se,lr\n";
    out.precision(17);
    for (const auto& r : curve) out << r.epoch << ',' << r.split << ',' << r.nll << ',' << r.se << ',' << r.lr << '\n';
    if (!out) throw IoError("failed writing " + path);
}

// ---- population loss ----

LossEstimate population_loss(const SequenceModel& m, const TaskGenerator& gen, const TaskShape& shape,
                             std::size_t n_tasks, RngStream& rng) {
    if (n_tasks < 2) throw ConfigError("population_loss: need at least 2 tasks");
    LossEstimate est;
    est.per_task.assign(n_tasks, 0.0);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t i = 0; i < n_tasks; ++i) {
        auto task_rng = rng.child("loss_task", i);
        const TaskInstance task = gen.sample_task(shape, task_rng);
        double total = 0.0;
        for (Action a = 0; a < task.n_actions(); ++a) {
            const auto z = task.prior_info.feature(a);
            SeqState s = m.initial_state(z);
            for (std::size_t t = 0; t < task.horizon(); ++t) {
                bool clamped = false;
                const double y = task.outcomes.at(t, a);
                total += clamped_nll(m.predict(z, s, task.contexts[t]), y, clamped);
                m.update(s, z, task.contexts[t], y);
            }
        }
        est.per_task[i] = total;
    }
    double mean = 0.0;
    for (double v : est.per_task) mean += v;
    mean /= static_cast<double>(n_tasks);
    double ss = 0.0;
    for (double v : est.per_task) ss += (v - mean) * (v - mean);
    est.mean = mean;
    est.se = std::sqrt(ss / static_cast<double>(n_tasks - 1) / static_cast<double>(n_tasks));
    return est;
}

} // namespace genban

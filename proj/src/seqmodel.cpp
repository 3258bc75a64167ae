#include "genban/seqmodel.hpp"

#include <algorithm>
#include <cmath>

#include "genban/errors.hpp"

namespace genban {

double predict(const SequenceModel& m, std::span<const double> z, const SeqState& state, std::span<const double> x) {
    return m.predict(z, state, x);
}

SeqState update_state(const SequenceModel& m, SeqState state, std::span<const double> z, std::span<const double> x,
                      double y) {
    m.update(state, z, x, y);
    return state;
}

SeqState fold_history(const SequenceModel& m, std::span<const double> z, std::span<const ArmObservation> obs) {
    SeqState s = m.initial_state(z);
    for (const auto& o : obs) m.update(s, z, o.x, o.y);
    return s;
}

SeqState empty_summary(std::size_t d) {
    SeqState s;
    s.xtx.assign(d * d, 0.0);
    s.xty.assign(d, 0.0);
    return s;
}

void add_observation(SeqState& s, std::span<const double> x, double y) {
    const std::size_t d = s.xty.size();
    if (x.size() != d) throw ContractError("summary statistics: context dimension mismatch");
    for (std::size_t i = 0; i < d; ++i) {
        const double xi = x[i];
        double* row = s.xtx.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += xi * x[j];
        s.xty[i] += xi * y;
    }
    s.count += 1;
    s.sum_y += y;
}

SeqState summary_batch(std::span<const ArmObservation> obs, std::size_t d) {
    const std::size_t n = obs.size();
    Matrix x(n, d);
    Matrix y(n, 1);
    for (std::size_t t = 0; t < n; ++t) {
        if (obs[t].x.size() != d) throw ContractError("summary statistics: context dimension mismatch");
        std::copy(obs[t].x.begin(), obs[t].x.end(), x.row(t).begin());
        y(t, 0) = obs[t].y;
    }
    const Matrix xt = transpose(x);
    SeqState s;
    s.xtx = matmul(xt, x).values();
    s.xty = matmul(xt, y).values();
    s.count = n;
    for (std::size_t t = 0; t < n; ++t) s.sum_y += obs[t].y;
    return s;
}

Matrix xtx_matrix(const SeqState& s) {
    const std::size_t d = s.xty.size();
    return Matrix(d, d, s.xtx);
}

// ---- constant ----

ConstantModel::ConstantModel(double p) : p_(p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("constant model: probability must lie in (0, 1)");
}

void ConstantModel::update(SeqState& s, std::span<const double>, std::span<const double>, double y) const {
    s.count += 1;
    s.sum_y += y;
}

// ---- beta-bernoulli ----

BetaBernoulliModel::BetaBernoulliModel(double alpha0, double beta0) : alpha0_(alpha0), beta0_(beta0) {
    if (!(alpha0 > 0.0) || !(beta0 > 0.0)) throw ConfigError("beta-bernoulli: pseudo-counts must be positive");
}

double BetaBernoulliModel::predict(std::span<const double>, const SeqState& s, std::span<const double>) const {
    const double a = alpha(s);
    return a / (a + beta(s));
}

void BetaBernoulliModel::update(SeqState& s, std::span<const double>, std::span<const double>, double y) const {
    if (!(y >= 0.0 && y <= 1.0)) throw ContractError("beta-bernoulli: outcome must lie in [0, 1]");
    s.count += 1;
    s.sum_y += y;
}

// ---- exact mixture ----

ExactMixtureModel::ExactMixtureModel(std::shared_ptr<const DiscreteMixtureEnv> env) : env_(std::move(env)) {
    if (!env_) throw ContractError("exact model: null environment");
}

namespace {

Action arm_of(const DiscreteMixtureEnv& env, std::span<const double> z) {
    if (z.size() != 2) throw ContractError("exact model: prior feature must be [action, class]");
    const double v = z[0];
    if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(env.n_actions()))
        throw DomainError("exact model: action feature outside the environment");
    return static_cast<Action>(v);
}

} // namespace

SeqState ExactMixtureModel::initial_state(std::span<const double> z) const {
    arm_of(*env_, z);
    const auto& w = env_->weights(env_->feature_class(z));
    SeqState s;
    s.log_weights.resize(w.size());
    for (std::size_t m = 0; m < w.size(); ++m) s.log_weights[m] = w[m] > 0.0 ? std::log(w[m]) : -INFINITY;
    return s;
}

double ExactMixtureModel::predict(std::span<const double> z, const SeqState& s, std::span<const double> x) const {
    const Action a = arm_of(*env_, z);
    const std::size_t xi = env_->context_index(x);
    if (s.log_weights.size() != env_->n_components()) throw ContractError("exact model: state not initialized");
    const double top = *std::max_element(s.log_weights.begin(), s.log_weights.end());
    double num = 0.0, den = 0.0;
    for (std::size_t m = 0; m < s.log_weights.size(); ++m) {
        const double w = std::exp(s.log_weights[m] - top);
        den += w;
        num += w * env_->theta(m, xi, a);
    }
    return num / den;
}

void ExactMixtureModel::update(SeqState& s, std::span<const double> z, std::span<const double> x, double y) const {
    const Action a = arm_of(*env_, z);
    const std::size_t xi = env_->context_index(x);
    if (s.log_weights.size() != env_->n_components()) throw ContractError("exact model: state not initialized");
    for (std::size_t m = 0; m < s.log_weights.size(); ++m) {
        const double th = env_->theta(m, xi, a);
        s.log_weights[m] += y > 0.5 ? std::log(th) : std::log1p(-th);
    }
    s.count += 1;
    s.sum_y += y;
}

} // namespace genban

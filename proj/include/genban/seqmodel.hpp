#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "genban/core.hpp"
#include "genban/env.hpp"
#include "genban/linalg.hpp"

namespace genban {

// In-context state for one arm. Each model uses the fields it needs:
// counts for Beta-Bernoulli, sufficient statistics for the MLP, posterior
// log-weights for the exact mixture.
struct SeqState {
    std::size_t count = 0;
    double sum_y = 0.0;
    Vec xtx;          // d x d, row-major; empty when untracked
    Vec xty;          // d
    Vec log_weights;  // unnormalized log posterior over mixture components

    friend bool operator==(const SeqState&, const SeqState&) = default;
};

// One-step predictive p(Y = 1 | Z^{(a)}, context, arm history) for binary outcomes.
// Implementations are immutable; state is threaded through by the caller.
class SequenceModel {
public:
    virtual ~SequenceModel() = default;

    virtual std::string name() const = 0;
    virtual SeqState initial_state(std::span<const double> z) const = 0;
    virtual double predict(std::span<const double> z, const SeqState& state, std::span<const double> x) const = 0;
    virtual void update(SeqState& state, std::span<const double> z, std::span<const double> x, double y) const = 0;
};

double predict(const SequenceModel& m, std::span<const double> z, const SeqState& state, std::span<const double> x);
SeqState update_state(const SequenceModel& m, SeqState state, std::span<const double> z, std::span<const double> x,
                      double y);
// Fold a whole arm history into a state.
SeqState fold_history(const SequenceModel& m, std::span<const double> z, std::span<const ArmObservation> obs);

// ---- summary statistics (X^T X, X^T Y, count, sum of y) ----

SeqState empty_summary(std::size_t d);
void add_observation(SeqState& s, std::span<const double> x, double y);
// Same statistics from the stacked design matrix; bitwise equal to folding.
SeqState summary_batch(std::span<const ArmObservation> obs, std::size_t d);
Matrix xtx_matrix(const SeqState& s);

// ---- implementations ----

class ConstantModel : public SequenceModel {
public:
    explicit ConstantModel(double p = 0.5);
    std::string name() const override { return "constant"; }
    SeqState initial_state(std::span<const double>) const override { return {}; }
    double predict(std::span<const double>, const SeqState&, std::span<const double>) const override { return p_; }
    void update(SeqState& s, std::span<const double>, std::span<const double>, double y) const override;

private:
    double p_;
};

// Context-blind exchangeable model; predictive (alpha0 + sum y) / (alpha0 + beta0 + n).
class BetaBernoulliModel : public SequenceModel {
public:
    explicit BetaBernoulliModel(double alpha0 = 1.0, double beta0 = 1.0);
    std::string name() const override { return "beta_bernoulli"; }
    SeqState initial_state(std::span<const double>) const override { return {}; }
    double predict(std::span<const double> z, const SeqState& s, std::span<const double> x) const override;
    void update(SeqState& s, std::span<const double> z, std::span<const double> x, double y) const override;

    double alpha(const SeqState& s) const { return alpha0_ + s.sum_y; }
    double beta(const SeqState& s) const { return beta0_ + static_cast<double>(s.count) - s.sum_y; }

private:
    double alpha0_;
    double beta0_;
};

// The true predictive of a DiscreteMixtureEnv (optionally with substituted
// prior weights or theta, which gives a misspecified model of the same form).
class ExactMixtureModel : public SequenceModel {
public:
    explicit ExactMixtureModel(std::shared_ptr<const DiscreteMixtureEnv> env);
    std::string name() const override { return "exact"; }
    SeqState initial_state(std::span<const double> z) const override;
    double predict(std::span<const double> z, const SeqState& s, std::span<const double> x) const override;
    void update(SeqState& s, std::span<const double> z, std::span<const double> x, double y) const override;

    const DiscreteMixtureEnv& env() const { return *env_; }

private:
    std::shared_ptr<const DiscreteMixtureEnv> env_;
};

} // namespace genban

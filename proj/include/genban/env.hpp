#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "genban/core.hpp"
#include "genban/rng.hpp"

namespace genban {

double logistic(double w);

struct TaskShape {
    std::size_t horizon = 0;
    std::size_t n_actions = 0;
};

// Everything drawn once per action: the public feature Z^{(a)} and the hidden
// parameters that fix the outcome law (coefficients, or a mixture index).
struct ArmDraw {
    Vec z;
    Vec latent;
};

// A task distribution p*. Subclasses describe one arm; sample_task assembles
// a task from independent arms and a shared context sequence.
class TaskGenerator {
public:
    virtual ~TaskGenerator() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t context_dim() const = 0;
    virtual std::size_t prior_dim() const = 0;

    // Draw from the (known) context law.
    virtual Vec sample_context(RngStream& rng) const = 0;
    virtual ArmDraw sample_arm(Action a, RngStream& rng) const = 0;
    // Fresh hidden parameters for an arm whose public feature is held fixed.
    virtual ArmDraw resample_latent(const ArmDraw& arm, Action a, RngStream& rng) const = 0;
    virtual double success_prob(Action a, const ArmDraw& arm, std::span<const double> x) const = 0;

    // Contexts come from stream child "contexts"; arm a uses children
    // ("arm", a) and ("outcomes", a). Contexts never depend on outcomes.
    TaskInstance sample_task(const TaskShape& shape, RngStream& rng) const;

    // Same as sample_task but also returns the per-arm draws.
    TaskInstance sample_task(const TaskShape& shape, RngStream& rng, std::vector<ArmDraw>& arms) const;
};

struct SyntheticDgpConfig {
    std::size_t d_z = 2;
    std::size_t d_x = 5;
    double const_mean = 0.0;
    double const_sd = 1.0;
    double z_coef_mean = 1.0;
    double z_coef_sd = 0.25;
    double x_coef_mean = 1.0;
    double x_coef_sd = 0.25;
    double cross_mean = 1.0;
    double cross_sd = 0.25;

    // Standard deviations may be zero (a point mass); negative is rejected.
    void validate() const;
};

// W = U_const + U_Z . Z + U_X . X + X^T diag(U_cross) Z, Y ~ Bernoulli(sigma(W)).
// The cross matrix is diagonal over the first min(d_x, d_z) coordinates.
class SyntheticDgp : public TaskGenerator {
public:
    explicit SyntheticDgp(SyntheticDgpConfig cfg);

    std::string kind() const override { return "synthetic"; }
    std::size_t context_dim() const override { return cfg_.d_x; }
    std::size_t prior_dim() const override { return cfg_.d_z; }
    Vec sample_context(RngStream& rng) const override;
    ArmDraw sample_arm(Action a, RngStream& rng) const override;
    ArmDraw resample_latent(const ArmDraw& arm, Action a, RngStream& rng) const override;
    double success_prob(Action a, const ArmDraw& arm, std::span<const double> x) const override;

    const SyntheticDgpConfig& config() const { return cfg_; }
    // Latent layout: [const, U_Z (d_z), U_X (d_x), U_cross diag (min(d_x, d_z))].
    double linear_predictor(std::span<const double> latent, std::span<const double> z,
                            std::span<const double> x) const;

protected:
    Vec draw_coefficients(RngStream& rng) const;

    SyntheticDgpConfig cfg_;
};

struct SurrogateDgpConfig {
    SyntheticDgpConfig base;   // base.d_z is the surrogate dimension and must be 2
    std::size_t d_z_raw = 8;
};

// Stand-in for the text-feature environment. The public feature is a raw
// Gaussian vector; outcomes depend on it only through phi_z, and on contexts
// through phi_x.
class SurrogateDgp : public SyntheticDgp {
public:
    explicit SurrogateDgp(SurrogateDgpConfig cfg);

    std::string kind() const override { return "surrogate"; }
    std::size_t prior_dim() const override { return raw_dim_; }
    ArmDraw sample_arm(Action a, RngStream& rng) const override;
    double success_prob(Action a, const ArmDraw& arm, std::span<const double> x) const override;

    // Two standardized functionals of the raw feature: a bounded quadratic
    // form over its first half and a scaled cubic of the mean of its second half.
    Vec phi_z(std::span<const double> raw) const;
    // First four coordinates times sign(x_5), with sign(0) = +1.
    static Vec phi_x(std::span<const double> x);

private:
    std::size_t raw_dim_;
    double quad_mean_ = 0.0;
    double quad_sd_ = 1.0;
};

struct DiscreteMixtureConfig {
    std::size_t n_contexts = 2;
    // theta[m][x][a], clamped into [0.01, 0.99] at construction.
    std::vector<std::vector<std::vector<double>>> theta;
    // prior_weights[c][m]: mixture weights for an arm of feature class c.
    // A single row means every arm shares one prior.
    std::vector<std::vector<double>> prior_weights;
    // Probability of each feature class; defaults to uniform.
    std::vector<double> class_probs;
};

// Finite oracle environment. Context uniform on {0..n_x-1} (encoded as a
// one-element vector), each arm has an independent latent index m_a, and
// outcomes are i.i.d. Bernoulli(theta[m_a][x][a]) given m_a.
// Z^{(a)} = [a, c_a] so that the arm's identity and class are public.
class DiscreteMixtureEnv : public TaskGenerator {
public:
    explicit DiscreteMixtureEnv(DiscreteMixtureConfig cfg);

    std::string kind() const override { return "discrete"; }
    std::size_t context_dim() const override { return 1; }
    std::size_t prior_dim() const override { return 2; }
    Vec sample_context(RngStream& rng) const override;
    ArmDraw sample_arm(Action a, RngStream& rng) const override;
    ArmDraw resample_latent(const ArmDraw& arm, Action a, RngStream& rng) const override;
    double success_prob(Action a, const ArmDraw& arm, std::span<const double> x) const override;

    std::size_t n_contexts() const { return cfg_.n_contexts; }
    std::size_t n_components() const { return cfg_.theta.size(); }
    std::size_t n_actions() const { return cfg_.theta.front().front().size(); }
    std::size_t n_classes() const { return cfg_.prior_weights.size(); }
    double theta(std::size_t m, std::size_t x, Action a) const { return cfg_.theta[m][x][a]; }
    const std::vector<double>& weights(std::size_t cls) const { return cfg_.prior_weights.at(cls); }
    double class_prob(std::size_t cls) const { return cfg_.class_probs.at(cls); }
    const DiscreteMixtureConfig& config() const { return cfg_; }

    // Context index of x; DomainError outside {0..n_x-1}.
    std::size_t context_index(std::span<const double> x) const;
    // Feature class of Z^{(a)}; DomainError when malformed.
    std::size_t feature_class(std::span<const double> z) const;

private:
    DiscreteMixtureConfig cfg_;
};

struct ArmObservation {
    Vec x;
    double y = 0.0;
};

// Exact p*(Y^{(a)} = 1 | arm history, x_now) for an arm of class `cls`.
double exact_predictive(const DiscreteMixtureEnv& env, Action a, std::span<const ArmObservation> arm_history,
                        std::span<const double> x_now, std::size_t cls = 0);

} // namespace genban

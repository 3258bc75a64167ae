#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "genban/core.hpp"
#include "genban/env.hpp"
#include "genban/policy.hpp"
#include "genban/seqmodel.hpp"

namespace genban {

inline constexpr std::size_t kEnumerationCap = 1'000'000;

// ---- posterior over outcome tables (discrete env, contexts fixed) ----

// Bit (t * A + a) of the index holds Y_t^{(a)}. Requires T * A <= 20.
std::uint64_t table_index(const OutcomeTable& table);

// P(table | H_t, X_{1:T}) for every binary table, by enumeration. Arm
// classes come from the history's prior features.
std::vector<double> enumerate_table_posterior(const DiscreteMixtureEnv& env, const History& h,
                                              const std::vector<Vec>& contexts);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

// P(pi*(X_t) = a | H_t) where pi* is fitted on a table drawn from the posterior.
std::vector<double> enumerate_optimal_action_probs(const DiscreteMixtureEnv& env, const History& h,
                                                   const std::vector<Vec>& contexts, PolicyClass cls,
                                                   FitCriterion crit = FitCriterion::PerArmRewardRegression);

// ---- loss decomposition ----

struct LossDecomposition {
    double loss_model = 0.0;          // l(p_theta), summed over arms and steps
    double loss_true = 0.0;           // l(p*)
    double gap = 0.0;                 // loss_model - loss_true
    std::vector<double> kl_per_arm;   // E[KL(p*(Y^{(a)}_{1:T} | Z, X) || p_theta(...))]
    double kl_total = 0.0;            // sum over arms = |A| * (mean over arms)
    std::size_t terms = 0;
};

// Exact enumeration over contexts, arm classes and full joint outcome tables
// (for the loss side) and per-arm sequences (for the KL side).
LossDecomposition loss_decomposition(const DiscreteMixtureEnv& env, const SequenceModel& model, std::size_t horizon,
                                     std::size_t n_actions, std::size_t cap = kEnumerationCap);

// ---- entropy of the oracle policy's labels ----

// H(pi*(X_{1:T}) | Z, X_{1:T}) (or with Z marginalized) by brute force over
// contexts, classes and tables, for any fitter. EnumerationLimit above the cap.
double policy_entropy_bruteforce(const DiscreteMixtureEnv& env, std::size_t horizon, std::size_t n_actions,
                                 PolicyClass cls, FitCriterion crit, bool condition_on_z,
                                 std::size_t cap = kEnumerationCap, const PolicyFitParams& params = {});

// Same quantity for the tabular per-arm-mean fitter via binomial sufficient
// statistics; scales to long horizons.
double tabular_policy_entropy(const DiscreteMixtureEnv& env, std::size_t horizon, std::size_t n_actions,
                              bool condition_on_z);

struct EntropyEstimate {
    double value = 0.0;
    double se = 0.0;
    std::string note;
};

// Plug-in Monte Carlo estimate for generators that cannot be enumerated:
// for each outer draw of (Z, X_{1:T}), refit on n_inner posterior-free
// redraws of the hidden parameters and outcomes. Biased low.
EntropyEstimate plugin_policy_entropy(const TaskGenerator& gen, const TaskShape& shape, std::size_t n_outer,
                                      std::size_t n_inner, PolicyClass cls, FitCriterion crit, RngStream& rng,
                                      const PolicyFitParams& params = {});

// ---- VC / Sauer-Shelah ----

// log sum_{i=0}^{min(k, T)} C(T, i)
double sauer_shelah_bound(std::size_t vc_dim, std::size_t T);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// Distinct labelings of the points produced by affine thresholds
// 1[w . p + b > 0] in the plane, found by enumerating separators through
// pairs of distinct points. Bit i of each entry is the label of point i.
std::vector<std::uint64_t> affine_labelings(const std::vector<Point2>& pts);

// ---- bound report ----

struct BoundReport {
    double entropy = 0.0;
    std::size_t n_actions = 0;
    std::size_t horizon = 0;
    double loss_gap = 0.0;       // as estimated
    bool gap_clamped = false;    // estimate was negative and set to 0
    double entropy_term = 0.0;   // sqrt(|A| H / (2T))
    double gap_term = 0.0;       // sqrt(2 gap)
    double bound = 0.0;
    double regret = 0.0;         // empirical per-period regret
    double regret_se = 0.0;
    std::string entropy_method;
    std::vector<std::string> notes;

    bool holds(double k_se = 3.0) const { return regret <= bound + k_se * regret_se; }
    nlohmann::json to_json() const;
};

BoundReport make_bound_report(double entropy, std::size_t n_actions, std::size_t horizon, double loss_gap,
                              double regret, double regret_se, std::string entropy_method = "enumeration");

} // namespace genban

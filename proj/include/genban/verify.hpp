#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "genban/env.hpp"
#include "genban/theory.hpp"

namespace genban {

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct SuiteReport {
    std::string suite;
    std::vector<CheckResult> checks;
    nlohmann::json extra = nlohmann::json::object();

    bool passed() const;
    nlohmann::json to_json() const;
};

// Small oracle environments used by the suites.
// n_x = 2, |A| = 2, M = 2, one feature class.
DiscreteMixtureConfig posterior_check_env();
// n_x = 2, |A| = 2, M = 2, two feature classes with different priors.
DiscreteMixtureConfig lossdecomp_check_env();
// Two contexts, two symmetric components that swap which arm wins per context.
DiscreteMixtureConfig bound_check_env();

// The five histories (T = 3) of the posterior suite, built on contexts and
// outcomes of one task drawn from env with the given seed.
std::vector<History> posterior_check_histories(const DiscreteMixtureEnv& env, std::uint64_t seed,
                                               std::vector<Vec>& contexts);

SuiteReport verify_lossdecomp(std::uint64_t seed);
SuiteReport verify_posterior(std::uint64_t seed, std::size_t samples = 100000);
SuiteReport verify_vc(std::uint64_t seed, std::size_t n_sets = 20);
SuiteReport verify_bound(std::uint64_t seed, std::size_t n_tasks = 500, std::size_t horizon = 200);

// Dispatch by name: lossdecomp | posterior | vc | bound. ConfigError otherwise.
SuiteReport run_suite(const std::string& name, std::uint64_t seed);

} // namespace genban

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "genban/errors.hpp"
#include "genban/theory.hpp"
#include "genban/verify.hpp"
#include "oracles.hpp"

using namespace genban;

namespace {

std::shared_ptr<const DiscreteMixtureEnv> coin_env() {
    DiscreteMixtureConfig c;
    c.n_contexts = 1;
    c.theta = {{{0.99, 0.99}}, {{0.01, 0.01}}};
    c.prior_weights = {{0.5, 0.5}};
    return std::make_shared<const DiscreteMixtureEnv>(c);
}

double bin_entropy(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }

double kl_bern(double p, double q) { return p * std::log(p / q) + (1 - p) * std::log((1 - p) / (1 - q)); }

} // namespace

TEST_SUITE("theory") {

TEST_CASE("Sauer-Shelah bound") {
    CHECK(sauer_shelah_bound(2, 3) == doctest::Approx(std::log(7.0)));
    CHECK(sauer_shelah_bound(0, 10) == 0.0);
    CHECK(sauer_shelah_bound(5, 5) == doctest::Approx(5 * std::log(2.0)));
    CHECK(sauer_shelah_bound(9, 5) == doctest::Approx(5 * std::log(2.0)));
    for (std::size_t T : {1u, 4u, 17u, 40u, 60u})
        for (std::size_t k : {1u, 2u, 3u, 7u})
            CHECK(sauer_shelah_bound(k, T) ==
                  doctest::Approx(std::log(static_cast<double>(oracle::binomial_prefix(k, T)))).epsilon(1e-12));
}

TEST_CASE("affine labelings in the plane") {
    const std::vector<Point2> tri{{0, 0}, {1, 0}, {0, 1}};
    CHECK(affine_labelings(tri).size() == 8);
    const std::vector<Point2> square{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    CHECK(affine_labelings(square).size() == 14);  // both XOR labelings are missing
    const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}};
    const auto on_line = affine_labelings(line);
    CHECK(on_line.size() == 6);
    CHECK(std::find(on_line.begin(), on_line.end(), 0b101u) == on_line.end());
    const std::vector<Point2> dup{{0.5, 0.5}, {0.5, 0.5}, {2, 1}};
    CHECK(affine_labelings(dup).size() == 4);

    RngStream rng(1, 0, "pts");
    for (int rep = 0; rep < 8; ++rep) {
        const std::size_t n = 4 + rep % 4;
        std::vector<Point2> pts;
        std::vector<std::pair<double, double>> raw;
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back({rng.normal(), rng.normal()});
            raw.push_back({pts.back().x, pts.back().y});
        }
        auto got = affine_labelings(pts);
        std::sort(got.begin(), got.end());
        std::vector<std::uint64_t> want;
        for (std::uint64_t l = 0; l < (std::uint64_t{1} << n); ++l)
            if (oracle::affinely_separable(raw, l)) want.push_back(l);
        CHECK(got == want);
        CHECK(std::log(double(got.size())) <= sauer_shelah_bound(3, n) + 1e-12);
    }
}

TEST_CASE("enumerated table posterior matches brute force") {
    for (const auto& cfg : {posterior_check_env(), lossdecomp_check_env()}) {
        DiscreteMixtureEnv env(cfg);
        std::vector<Vec> contexts;
        const auto hs = posterior_check_histories(env, 3, contexts);
        for (const auto& h : hs) {
            const auto got = enumerate_table_posterior(env, h, contexts);
            const auto want = oracle::brute_table_posterior(env, h, contexts);
            REQUIRE(got.size() == want.size());
            double mass = 0.0;
            for (std::size_t k = 0; k < got.size(); ++k) {
                CHECK(std::abs(got[k] - want[k]) < 1e-12);
                mass += got[k];
            }
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    CHECK(total_variation({0.5, 0.5}, {1.0, 0.0}) == 0.5);
    CHECK_THROWS(total_variation({1.0}, {0.5, 0.5}));
}

TEST_CASE("table index bit layout") {
    OutcomeTable t(2, 3);
    t.at(1, 2) = 1.0;
    CHECK(table_index(t) == (std::uint64_t{1} << 5));
    t.at(0, 0) = 1.0;
    CHECK(table_index(t) == 33);
}

TEST_CASE("loss gap equals the summed per-arm KL") {
    auto env = std::make_shared<const DiscreteMixtureEnv>(lossdecomp_check_env());
    const ConstantModel half(0.5);
    const BetaBernoulliModel beta;
    for (const SequenceModel* m : {static_cast<const SequenceModel*>(&half), static_cast<const SequenceModel*>(&beta)}) {
        const auto d = loss_decomposition(*env, *m, 3, 2);
        CHECK(d.gap > 0.0);
        CHECK(std::abs(d.gap - d.kl_total) < 1e-6);
        CHECK(d.kl_per_arm.size() == 2);
        CHECK(d.kl_total == doctest::Approx(d.kl_per_arm[0] + d.kl_per_arm[1]));
    }
    const auto exact = loss_decomposition(*env, ExactMixtureModel(env), 3, 2);
    CHECK(std::abs(exact.gap) < 1e-9);

    // One component and one context: both sides have a closed form.
    DiscreteMixtureConfig c;
    c.n_contexts = 1;
    c.theta = {{{0.3, 0.8}}};
    c.prior_weights = {{1.0}};
    DiscreteMixtureEnv single(c);
    const std::size_t T = 4;
    const auto d = loss_decomposition(single, half, T, 2);
    CHECK(d.loss_model == doctest::Approx(2 * T * std::log(2.0)).epsilon(1e-12));
    CHECK(d.loss_true == doctest::Approx(T * (bin_entropy(0.3) + bin_entropy(0.8))).epsilon(1e-12));
    CHECK(d.gap == doctest::Approx(T * (kl_bern(0.3, 0.5) + kl_bern(0.8, 0.5))).epsilon(1e-12));

    CHECK_THROWS_AS(loss_decomposition(*env, half, 0, 2), ConfigError);
    CHECK_THROWS_AS(loss_decomposition(*env, half, 3, 5), ConfigError);
    CHECK_THROWS_AS(loss_decomposition(*env, half, 12, 2, 1000), EnumerationLimit);
}

TEST_CASE("oracle label entropy") {
    // Known, well separated arms: the label is almost never in doubt.
    DiscreteMixtureConfig det;
    det.n_contexts = 2;
    det.theta = {{{0.99, 0.01}, {0.01, 0.99}}};
    det.prior_weights = {{1.0}};
    DiscreteMixtureEnv d(det);
    CHECK(tabular_policy_entropy(d, 20, 2, true) < 0.1);

    // One step under a symmetric prior: ties go to arm 0, so the label is arm 1 w.p. 1/4.
    auto coin = coin_env();
    const double h1 = bin_entropy(0.25);
    CHECK(policy_entropy_bruteforce(*coin, 1, 2, PolicyClass::Tabular, FitCriterion::PerArmRewardRegression, true) ==
          doctest::Approx(h1).epsilon(1e-9));
    CHECK(tabular_policy_entropy(*coin, 1, 2, true) == doctest::Approx(h1).epsilon(1e-9));

    for (const auto& cfg : {posterior_check_env(), lossdecomp_check_env(), bound_check_env()}) {
        DiscreteMixtureEnv env(cfg);
        for (std::size_t T : {1u, 2u, 3u}) {
            const double with_z =
                policy_entropy_bruteforce(env, T, 2, PolicyClass::Tabular, FitCriterion::PerArmRewardRegression, true);
            const double without_z =
                policy_entropy_bruteforce(env, T, 2, PolicyClass::Tabular, FitCriterion::PerArmRewardRegression, false);
            CHECK(with_z <= without_z + 1e-12);
            CHECK(tabular_policy_entropy(env, T, 2, true) == doctest::Approx(with_z).epsilon(1e-9));
            CHECK(tabular_policy_entropy(env, T, 2, false) == doctest::Approx(without_z).epsilon(1e-9));
            CHECK(with_z <= T * std::log(2.0) + 1e-12);
        }
    }
    CHECK_THROWS_AS(policy_entropy_bruteforce(*coin, 30, 2, PolicyClass::Tabular,
                                              FitCriterion::PerArmRewardRegression, true, 1000),
                    EnumerationLimit);
}

TEST_CASE("plug-in entropy estimate on an enumerable case") {
    auto coin = coin_env();
    RngStream rng(2, 0, "plugin");
    const auto est = plugin_policy_entropy(*coin, {1, 2}, 20, 4000, PolicyClass::Tabular,
                                           FitCriterion::PerArmRewardRegression, rng);
    CHECK(std::abs(est.value - bin_entropy(0.25)) < 0.02);
    CHECK(est.se >= 0.0);
    CHECK_FALSE(est.note.empty());
}

TEST_CASE("bound report arithmetic") {
    const auto r = make_bound_report(std::log(4.0), 2, 50, 0.02, 0.1, 0.01);
    CHECK(r.entropy_term == doctest::Approx(std::sqrt(2 * std::log(4.0) / 100)));
    CHECK(r.gap_term == doctest::Approx(std::sqrt(0.04)));
    CHECK(r.bound == doctest::Approx(r.entropy_term + r.gap_term));
    CHECK_FALSE(r.gap_clamped);
    CHECK(r.holds());
    CHECK(r.to_json().at("bound").get<double>() == doctest::Approx(r.bound));

    const auto neg = make_bound_report(1.0, 3, 10, -0.004, 0.9, 0.01, "plugin");
    CHECK(neg.gap_clamped);
    CHECK(neg.gap_term == 0.0);
    CHECK(neg.loss_gap == -0.004);
    CHECK_FALSE(neg.notes.empty());
    CHECK(neg.entropy_method == "plugin");
    CHECK_FALSE(neg.holds());
}

}

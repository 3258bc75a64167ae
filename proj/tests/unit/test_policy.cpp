#include <doctest.h>

#include <cmath>

#include "genban/errors.hpp"
#include "genban/policy.hpp"
#include "genban/rng.hpp"

using namespace genban;

namespace {

TaskInstance make_task(std::vector<Vec> contexts, std::vector<std::vector<double>> rows) {
    TaskInstance t;
    const std::size_t A = rows.front().size();
    for (std::size_t a = 0; a < A; ++a) t.prior_info.per_action_features.push_back({double(a)});
    t.contexts = std::move(contexts);
    t.outcomes = OutcomeTable(rows.size(), A);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t a = 0; a < A; ++a) t.outcomes.at(i, a) = rows[i][a];
    return t;
}

TaskInstance random_binary_task(std::size_t T, std::size_t A, std::size_t n_x, RngStream& rng) {
    std::vector<Vec> ctx;
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < T; ++t) {
        ctx.push_back({double(rng.uniform_index(n_x))});
        std::vector<double> r(A);
        for (auto& v : r) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
        rows.push_back(r);
    }
    return make_task(ctx, rows);
}

} // namespace

TEST_SUITE("policy") {

TEST_CASE("argmax breaks ties to the lowest index") {
    CHECK(argmax_lowest(Vec{0.7, 0.3}) == 0);
    CHECK(argmax_lowest(Vec{0.2, 0.9, 0.9}) == 1);
    CHECK(argmax_lowest(Vec{0.5, 0.5, 0.5}) == 0);
}

TEST_CASE("tabular fit on a hand-built table") {
    const auto tau = make_task({{0}, {1}, {0}, {1}}, {{1, 0, 1}, {0, 1, 1}, {0, 0, 1}, {0, 1, 0}});
    const auto p = fit_policy(tau, PolicyClass::Tabular);
    CHECK(p.act(Vec{0}) == 2);
    CHECK(p.act(Vec{1}) == 1);
    CHECK(p.act(Vec{5}) == 0);  // unseen context
    CHECK(evaluate_policy(p, tau) == 1.0);
}

TEST_CASE("degenerate and tied tables fall back to the lowest action") {
    const auto flat = make_task({{0.1}, {0.9}, {0.4}}, {{1, 1}, {1, 1}, {1, 1}});
    for (auto cls : {PolicyClass::Logistic, PolicyClass::Tree, PolicyClass::Tabular}) {
        const auto p = fit_policy(flat, cls);
        CHECK(p.act(Vec{0.5}) == 0);
        CHECK(evaluate_policy(p, flat) == 1.0);
    }
    const auto twins = make_task({{-1.0}, {0.0}, {1.0}, {2.0}}, {{1, 1, 0}, {0, 0, 0}, {1, 1, 1}, {0, 0, 1}});
    for (auto cls : {PolicyClass::Logistic, PolicyClass::Tree, PolicyClass::Tabular}) {
        const auto p = fit_policy(twins, cls);
        for (const auto& x : twins.contexts) CHECK(p.act(x) != 1);
    }
}

TEST_CASE("logistic agrees with the tabular argmax on separable rewards") {
    RngStream rng(1, 0, "ctx");
    const double w0 = 1.0, w1 = -2.0;
    std::vector<Vec> ctx;
    std::vector<std::vector<double>> rows;
    while (ctx.size() < 50) {
        const Vec x{rng.normal(), rng.normal()};
        const double m = w0 * x[0] + w1 * x[1];
        if (std::abs(m) < 0.3) continue;
        ctx.push_back(x);
        rows.push_back({m > 0 ? 1.0 : 0.0, m > 0 ? 0.0 : 1.0});
    }
    const auto tau = make_task(ctx, rows);
    const auto lg = fit_policy(tau, PolicyClass::Logistic);
    const auto tb = fit_policy(tau, PolicyClass::Tabular);
    for (const auto& x : ctx) CHECK(lg.act(x) == tb.act(x));
}

TEST_CASE("logistic fit satisfies its optimality conditions") {
    RngStream rng(2, 0, "fit");
    std::vector<Vec> xs;
    Vec y;
    for (int i = 0; i < 200; ++i) {
        xs.push_back({rng.normal(), rng.normal(), rng.normal()});
        y.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-(0.5 + xs.back()[0])))) ? 1.0 : 0.0);
    }
    LogisticParams lp;
    const Vec w = fit_logistic(xs, y, lp);
    Vec g(4, 0.0);
    g[0] = lp.intercept_penalty * w[0];
    for (int j = 1; j < 4; ++j) g[j] = w[j];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = w[0] + w[1] * xs[i][0] + w[2] * xs[i][1] + w[3] * xs[i][2];
        const double r = lp.c * (1.0 / (1.0 + std::exp(-e)) - y[i]);
        g[0] += r;
        for (int j = 0; j < 3; ++j) g[j + 1] += r * xs[i][j];
    }
    for (double v : g) CHECK(std::abs(v) < 1e-6);
    CHECK(w[1] > 0.3);
}

TEST_CASE("boosted trees find the exact midpoint split and respect the depth cap") {
    std::vector<Vec> xs;
    Vec y;
    for (int i = 0; i < 10; ++i) {
        xs.push_back({0.1 * i, 0.0});
        y.push_back(i >= 5 ? 1.0 : 0.0);
    }
    BoostedTreeParams bp;
    const auto model = fit_boosted(xs, y, bp);
    REQUIRE(!model.trees.empty());
    const auto& root = model.trees.front().nodes.front();
    CHECK(root.feature == 0);
    CHECK(root.threshold == doctest::Approx(0.45));
    for (const auto& t : model.trees) CHECK(t.depth() <= 2);
    CHECK(model.predict(Vec{0.9, 0.0}) > model.predict(Vec{0.1, 0.0}));
    bp.max_depth = 3;
    CHECK_THROWS_AS(fit_boosted(xs, y, bp), ConfigError);
}

TEST_CASE("increasing transforms of the scores keep the chosen action") {
    RngStream rng(3, 0, "task");
    std::vector<Vec> ctx;
    std::vector<std::vector<double>> rows;
    for (int t = 0; t < 60; ++t) {
        ctx.push_back({rng.normal(), rng.normal()});
        rows.push_back({rng.bernoulli(0.5) ? 1.0 : 0.0, rng.bernoulli(0.5) ? 1.0 : 0.0, rng.bernoulli(0.3) ? 1.0 : 0.0});
    }
    const auto tau = make_task(ctx, rows);
    for (auto cls : {PolicyClass::Logistic, PolicyClass::Tree}) {
        const auto p = fit_policy(tau, cls);
        for (const auto& x : ctx) {
            Vec s = p.scores(x);
            for (auto& v : s) v = std::exp(3.0 * v) + v * v * v;
            CHECK(argmax_lowest(s) == p.act(x));
        }
    }
}

TEST_CASE("fits are deterministic down to the serialized form") {
    RngStream rng(4, 0, "task");
    std::vector<Vec> ctx;
    std::vector<std::vector<double>> rows;
    for (int t = 0; t < 40; ++t) {
        ctx.push_back({rng.normal(), rng.normal()});
        rows.push_back({rng.bernoulli(0.5) ? 1.0 : 0.0, rng.bernoulli(0.5) ? 1.0 : 0.0});
    }
    const auto tau = make_task(ctx, rows);
    for (auto cls : {PolicyClass::Logistic, PolicyClass::Tree, PolicyClass::Tabular}) {
        const auto a = fit_policy(tau, cls).to_json().dump();
        const auto b = fit_policy(tau, cls).to_json().dump();
        CHECK(a == b);
        CHECK(nlohmann::json::parse(a).at("class") == to_string(cls));
    }
}

TEST_CASE("fitted tabular policy is best in class by exhaustive enumeration") {
    RngStream rng(5, 0, "task");
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t A = rep % 2 ? 3 : 2;
        const auto tau = random_binary_task(8, A, 2, rng);
        const auto fitted = fit_policy(tau, PolicyClass::Tabular);
        const double got = evaluate_policy(fitted, tau);
        double best = -1.0;
        for (std::size_t a0 = 0; a0 < A; ++a0)
            for (std::size_t a1 = 0; a1 < A; ++a1) {
                const auto p = Policy::tabular(A, {{{0.0}, a0}, {{1.0}, a1}});
                best = std::max(best, evaluate_policy(p, tau));
            }
        CHECK(got == doctest::Approx(best).epsilon(1e-15));
        // For binary rewards the squared gap to the row max equals max - R, so both criteria agree.
        const auto ls = fit_policy(tau, PolicyClass::Tabular, FitCriterion::LeastSquaresVsMax);
        for (double x : {0.0, 1.0}) CHECK(ls.act(Vec{x}) == fitted.act(Vec{x}));
    }
}

TEST_CASE("evaluate_policy examples") {
    const auto dominant = make_task({{0}, {0}, {0}, {0}}, {{0, 1}, {1, 1}, {0, 1}, {0, 0}});
    CHECK(evaluate_policy(Policy::constant(PolicyClass::Tabular, 2, 1), dominant) == doctest::Approx(0.75));
    const auto ones = make_task({{0}, {1}}, {{1, 1}, {1, 1}});
    CHECK(evaluate_policy(Policy::constant(PolicyClass::Tabular, 2, 0), ones) == 1.0);
    CHECK(evaluate_policy(Policy::tabular(2, {{{1.0}, 1}}), ones) == 1.0);
    RewardFn half([](double y) { return 0.5 * y; });
    CHECK(evaluate_policy(Policy::constant(PolicyClass::Tabular, 2, 0), ones, half) == 0.5);
}

TEST_CASE("policy configuration errors") {
    const auto tau = make_task({{0}, {1}}, {{1, 0}, {0, 1}});
    CHECK_THROWS_AS(fit_policy(tau, PolicyClass::Logistic, FitCriterion::LeastSquaresVsMax), ContractError);
    CHECK_THROWS_AS(parse_policy_class("forest"), ConfigError);
    CHECK(parse_policy_class("tree") == PolicyClass::Tree);
    CHECK(parse_fit_criterion("least_squares_vs_max") == FitCriterion::LeastSquaresVsMax);
    CHECK_THROWS_AS(parse_fit_criterion("hinge"), ConfigError);
    TaskInstance incomplete = tau;
    incomplete.contexts.pop_back();
    CHECK_THROWS_AS(fit_policy(incomplete, PolicyClass::Tabular), ContractError);
}

}

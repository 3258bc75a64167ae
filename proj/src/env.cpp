#include "genban/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genban/errors.hpp"

namespace genban {

double logistic(double w) {
    // Branch on sign so exp never overflows.
    if (w >= 0.0) return 1.0 / (1.0 + std::exp(-w));
    const double e = std::exp(w);
    return e / (1.0 + e);
}

TaskInstance TaskGenerator::sample_task(const TaskShape& shape, RngStream& rng) const {
    std::vector<ArmDraw> arms;
    return sample_task(shape, rng, arms);
}

TaskInstance TaskGenerator::sample_task(const TaskShape& shape, RngStream& rng, std::vector<ArmDraw>& arms) const {
    if (shape.horizon == 0) throw ConfigError("sample_task: horizon must be positive");
    if (shape.n_actions == 0) throw ConfigError("sample_task: action count must be positive");

    TaskInstance task;
    auto ctx_rng = rng.child("contexts");
    task.contexts.reserve(shape.horizon);
    for (std::size_t t = 0; t < shape.horizon; ++t) task.contexts.push_back(sample_context(ctx_rng));

    arms.clear();
    task.outcomes = OutcomeTable(shape.horizon, shape.n_actions);
    for (Action a = 0; a < shape.n_actions; ++a) {
        auto arm_rng = rng.child("arm", a);
        arms.push_back(sample_arm(a, arm_rng));
        task.prior_info.per_action_features.push_back(arms.back().z);
        auto y_rng = rng.child("outcomes", a);
        for (std::size_t t = 0; t < shape.horizon; ++t) {
            const double p = success_prob(a, arms.back(), task.contexts[t]);
            task.outcomes.at(t, a) = y_rng.bernoulli(p) ? 1.0 : 0.0;
        }
    }
    return task;
}

// ---- synthetic ----

void SyntheticDgpConfig::validate() const {
    if (d_z == 0 || d_x == 0) throw ConfigError("synthetic dgp: dimensions must be positive");
    for (double sd : {const_sd, z_coef_sd, x_coef_sd, cross_sd}) {
        if (!(sd >= 0.0) || !std::isfinite(sd)) throw ConfigError("synthetic dgp: standard deviations must be >= 0");
    }
    for (double mu : {const_mean, z_coef_mean, x_coef_mean, cross_mean}) {
        if (!std::isfinite(mu)) throw ConfigError("synthetic dgp: coefficient means must be finite");
    }
}

SyntheticDgp::SyntheticDgp(SyntheticDgpConfig cfg) : cfg_(cfg) { cfg_.validate(); }

Vec SyntheticDgp::sample_context(RngStream& rng) const {
    Vec x(cfg_.d_x);
    for (auto& v : x) v = rng.normal();
    return x;
}

Vec SyntheticDgp::draw_coefficients(RngStream& rng) const {
    const std::size_t n_cross = std::min(cfg_.d_x, cfg_.d_z);
    Vec u;
    u.reserve(1 + cfg_.d_z + cfg_.d_x + n_cross);
    u.push_back(rng.normal(cfg_.const_mean, cfg_.const_sd));
    for (std::size_t i = 0; i < cfg_.d_z; ++i) u.push_back(rng.normal(cfg_.z_coef_mean, cfg_.z_coef_sd));
    for (std::size_t i = 0; i < cfg_.d_x; ++i) u.push_back(rng.normal(cfg_.x_coef_mean, cfg_.x_coef_sd));
    for (std::size_t i = 0; i < n_cross; ++i) u.push_back(rng.normal(cfg_.cross_mean, cfg_.cross_sd));
    return u;
}

ArmDraw SyntheticDgp::sample_arm(Action, RngStream& rng) const {
    ArmDraw arm;
    auto z_rng = rng.child("z");
    arm.z.resize(cfg_.d_z);
    for (auto& v : arm.z) v = z_rng.normal();
    auto u_rng = rng.child("latent");
    arm.latent = draw_coefficients(u_rng);
    return arm;
}

ArmDraw SyntheticDgp::resample_latent(const ArmDraw& arm, Action, RngStream& rng) const {
    ArmDraw out;
    out.z = arm.z;
    auto u_rng = rng.child("latent");
    out.latent = draw_coefficients(u_rng);
    return out;
}

double SyntheticDgp::linear_predictor(std::span<const double> u, std::span<const double> z,
                                      std::span<const double> x) const {
    if (z.size() != cfg_.d_z || x.size() != cfg_.d_x)
        throw ContractError("synthetic dgp: feature or context dimension mismatch");
    const std::size_t n_cross = std::min(cfg_.d_x, cfg_.d_z);
    if (u.size() != 1 + cfg_.d_z + cfg_.d_x + n_cross) throw ContractError("synthetic dgp: bad coefficient vector");
    double w = u[0];
    std::size_t k = 1;
    for (std::size_t i = 0; i < cfg_.d_z; ++i) w += u[k++] * z[i];
    for (std::size_t i = 0; i < cfg_.d_x; ++i) w += u[k++] * x[i];
    for (std::size_t i = 0; i < n_cross; ++i) w += x[i] * u[k++] * z[i];
    return w;
}

double SyntheticDgp::success_prob(Action, const ArmDraw& arm, std::span<const double> x) const {
    return logistic(linear_predictor(arm.latent, arm.z, x));
}

// ---- surrogate ----

namespace {

// Mean and standard deviation of tanh(S/h - 1) for S ~ chi-square(h), by
// composite Simpson quadrature on [0, upper].
std::pair<double, double> quad_moments(std::size_t h) {
    const double k = static_cast<double>(h);
    const double upper = k + 60.0 * std::sqrt(2.0 * k) + 60.0;
    const std::size_t n = 200000;
    const double step = upper / static_cast<double>(n);
    const double log_norm = (k / 2.0) * std::log(2.0) + std::lgamma(k / 2.0);
    auto density = [&](double s) {
        if (s <= 0.0) return h == 2 ? 0.5 : 0.0;
        return std::exp((k / 2.0 - 1.0) * std::log(s) - s / 2.0 - log_norm);
    };
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double s = step * static_cast<double>(i);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double f = density(s);
        const double g = std::tanh(s / k - 1.0);
        m1 += w * f * g;
        m2 += w * f * g * g;
    }
    m1 *= step / 3.0;
    m2 *= step / 3.0;
    return {m1, std::sqrt(m2 - m1 * m1)};
}

} // namespace

SurrogateDgp::SurrogateDgp(SurrogateDgpConfig cfg) : SyntheticDgp(cfg.base), raw_dim_(cfg.d_z_raw) {
    if (cfg.base.d_z != 2) throw ConfigError("surrogate dgp: surrogate feature dimension must be 2");
    if (cfg.base.d_x < 5) throw ConfigError("surrogate dgp: context dimension must be at least 5");
    if (raw_dim_ < 2 || raw_dim_ % 2 != 0) throw ConfigError("surrogate dgp: raw dimension must be even and >= 2");
    std::tie(quad_mean_, quad_sd_) = quad_moments(raw_dim_ / 2);
}

Vec SurrogateDgp::phi_z(std::span<const double> raw) const {
    if (raw.size() != raw_dim_) throw ContractError("surrogate dgp: raw feature dimension mismatch");
    const std::size_t h = raw_dim_ / 2;
    double sq = 0.0;
    for (std::size_t i = 0; i < h; ++i) sq += raw[i] * raw[i];
    double s = 0.0;
    for (std::size_t i = h; i < raw_dim_; ++i) s += raw[i];
    const double u = s / std::sqrt(static_cast<double>(h)); // standard normal
    const double f1 = (std::tanh(sq / static_cast<double>(h) - 1.0) - quad_mean_) / quad_sd_;
    const double f2 = u * u * u / std::sqrt(15.0);           // E[u^6] = 15
    return {f1, f2};
}

Vec SurrogateDgp::phi_x(std::span<const double> x) {
    if (x.size() < 5) throw ContractError("surrogate dgp: context needs at least 5 coordinates");
    Vec out(x.begin(), x.end());
    const double sign = x[4] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < 4; ++i) out[i] *= sign;
    return out;
}

ArmDraw SurrogateDgp::sample_arm(Action, RngStream& rng) const {
    ArmDraw arm;
    auto z_rng = rng.child("z");
    arm.z.resize(raw_dim_);
    for (auto& v : arm.z) v = z_rng.normal();
    auto u_rng = rng.child("latent");
    arm.latent = draw_coefficients(u_rng);
    return arm;
}

double SurrogateDgp::success_prob(Action, const ArmDraw& arm, std::span<const double> x) const {
    const Vec fz = phi_z(arm.z);
    const Vec fx = phi_x(x);
    return logistic(linear_predictor(arm.latent, fz, fx));
}

// ---- discrete mixture ----

DiscreteMixtureEnv::DiscreteMixtureEnv(DiscreteMixtureConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.n_contexts == 0) throw ConfigError("discrete env: need at least one context");
    if (cfg_.theta.empty()) throw ConfigError("discrete env: need at least one mixture component");
    const std::size_t n_act = cfg_.theta.front().empty() ? 0 : cfg_.theta.front().front().size();
    if (n_act == 0) throw ConfigError("discrete env: need at least one action");
    for (auto& per_m : cfg_.theta) {
        if (per_m.size() != cfg_.n_contexts) throw ConfigError("discrete env: theta needs one row per context");
        for (auto& row : per_m) {
            if (row.size() != n_act) throw ConfigError("discrete env: theta rows must cover every action");
            for (auto& v : row) {
                if (!std::isfinite(v)) throw ConfigError("discrete env: theta must be finite");
                v = std::clamp(v, 0.01, 0.99);
            }
        }
    }
    if (cfg_.prior_weights.empty())
        cfg_.prior_weights.assign(1, std::vector<double>(cfg_.theta.size(), 1.0 / static_cast<double>(cfg_.theta.size())));
    for (auto& w : cfg_.prior_weights) {
        if (w.size() != cfg_.theta.size()) throw ConfigError("discrete env: prior weights must match component count");
        double total = 0.0;
        for (double v : w) {
            if (!(v >= 0.0)) throw ConfigError("discrete env: prior weights must be non-negative");
            total += v;
        }
        if (!(total > 0.0)) throw ConfigError("discrete env: prior weights must not all be zero");
        for (auto& v : w) v /= total;
    }
    if (cfg_.class_probs.empty())
        cfg_.class_probs.assign(cfg_.prior_weights.size(), 1.0 / static_cast<double>(cfg_.prior_weights.size()));
    if (cfg_.class_probs.size() != cfg_.prior_weights.size())
        throw ConfigError("discrete env: class probabilities must match prior weight rows");
    const double total = std::accumulate(cfg_.class_probs.begin(), cfg_.class_probs.end(), 0.0);
    if (!(total > 0.0)) throw ConfigError("discrete env: class probabilities must not all be zero");
    for (auto& v : cfg_.class_probs) {
        if (!(v >= 0.0)) throw ConfigError("discrete env: class probabilities must be non-negative");
        v /= total;
    }
}

namespace {

std::size_t draw_categorical(const std::vector<double>& probs, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    // Rounding left u above the last partial sum; return the last supported entry.
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0) return i;
    return 0;
}

} // namespace

Vec DiscreteMixtureEnv::sample_context(RngStream& rng) const {
    return {static_cast<double>(rng.uniform_index(cfg_.n_contexts))};
}

ArmDraw DiscreteMixtureEnv::sample_arm(Action a, RngStream& rng) const {
    if (a >= n_actions()) throw DomainError("discrete env: action outside the environment");
    auto c_rng = rng.child("z");
    const std::size_t cls = draw_categorical(cfg_.class_probs, c_rng);
    ArmDraw arm;
    arm.z = {static_cast<double>(a), static_cast<double>(cls)};
    auto m_rng = rng.child("latent");
    arm.latent = {static_cast<double>(draw_categorical(cfg_.prior_weights[cls], m_rng))};
    return arm;
}

ArmDraw DiscreteMixtureEnv::resample_latent(const ArmDraw& arm, Action, RngStream& rng) const {
    ArmDraw out;
    out.z = arm.z;
    auto m_rng = rng.child("latent");
    out.latent = {static_cast<double>(draw_categorical(cfg_.prior_weights[feature_class(arm.z)], m_rng))};
    return out;
}

std::size_t DiscreteMixtureEnv::context_index(std::span<const double> x) const {
    if (x.size() != 1) throw DomainError("discrete env: context must be a single index");
    const double v = x[0];
    if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(cfg_.n_contexts))
        throw DomainError("discrete env: context outside the support");
    return static_cast<std::size_t>(v);
}

std::size_t DiscreteMixtureEnv::feature_class(std::span<const double> z) const {
    if (z.size() != 2) throw DomainError("discrete env: feature must be [action, class]");
    const double v = z[1];
    if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(n_classes()))
        throw DomainError("discrete env: feature class outside the support");
    return static_cast<std::size_t>(v);
}

double DiscreteMixtureEnv::success_prob(Action a, const ArmDraw& arm, std::span<const double> x) const {
    const auto m = static_cast<std::size_t>(arm.latent.at(0));
    return cfg_.theta.at(m).at(context_index(x)).at(a);
}

double exact_predictive(const DiscreteMixtureEnv& env, Action a, std::span<const ArmObservation> arm_history,
                        std::span<const double> x_now, std::size_t cls) {
    if (a >= env.n_actions()) throw DomainError("exact_predictive: action outside the environment");
    const std::size_t xi = env.context_index(x_now);
    const auto& w = env.weights(cls);
    const std::size_t n_m = env.n_components();
    std::vector<double> logw(n_m);
    for (std::size_t m = 0; m < n_m; ++m) {
        logw[m] = w[m] > 0.0 ? std::log(w[m]) : -INFINITY;
        for (const auto& obs : arm_history) {
            const double th = env.theta(m, env.context_index(obs.x), a);
            logw[m] += obs.y > 0.5 ? std::log(th) : std::log1p(-th);
        }
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    double num = 0.0, den = 0.0;
    for (std::size_t m = 0; m < n_m; ++m) {
        const double pw = std::exp(logw[m] - top);
        den += pw;
        num += pw * env.theta(m, xi, a);
    }
    return num / den;
}

} // namespace genban

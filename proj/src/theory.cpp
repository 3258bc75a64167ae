#include "genban/theory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "genban/errors.hpp"
#include "genban/training.hpp"

namespace genban {

namespace {

std::size_t checked_pow(std::size_t base, std::size_t exp, std::size_t cap) {
    std::size_t v = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (base != 0 && v > cap / base) throw EnumerationLimit("enumeration exceeds the term cap");
        v *= base;
    }
    return v;
}

// Digits of `code` in base `base`, least significant first.
void decode(std::size_t code, std::size_t base, std::vector<std::size_t>& out) {
    for (auto& d : out) {
        d = code % base;
        code /= base;
    }
}

// Probability of a binary outcome column for arm a of class cls given the
// contexts, summed over the mixture directly (not via the one-step chain).
double column_prob(const DiscreteMixtureEnv& env, Action a, std::size_t cls, const std::vector<std::size_t>& xs,
                   std::uint64_t bits) {
    const auto& w = env.weights(cls);
    double total = 0.0;
    for (std::size_t m = 0; m < env.n_components(); ++m) {
        double p = w[m];
        for (std::size_t t = 0; t < xs.size() && p > 0.0; ++t) {
            const double th = env.theta(m, xs[t], a);
            p *= ((bits >> t) & 1u) ? th : 1.0 - th;
        }
        total += p;
    }
    return total;
}

double entropy_of(const std::map<std::uint64_t, double>& dist) {
    double h = 0.0;
    for (const auto& [k, p] : dist)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double entropy_of(const std::vector<double>& dist) {
    double h = 0.0;
    for (double p : dist)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

std::vector<Vec> contexts_from(const std::vector<std::size_t>& xs) {
    std::vector<Vec> out;
    out.reserve(xs.size());
    for (auto x : xs) out.push_back({static_cast<double>(x)});
    return out;
}

} // namespace

// ---- posterior enumeration ----

std::uint64_t table_index(const OutcomeTable& table) {
    const std::size_t A = table.n_actions();
    if (table.horizon() * A > 20) throw EnumerationLimit("table_index: table too large to index");
    std::uint64_t idx = 0;
    for (std::size_t t = 0; t < table.horizon(); ++t)
        for (Action a = 0; a < A; ++a)
            if (table.at(t, a) > 0.5) idx |= std::uint64_t{1} << (t * A + a);
    return idx;
}

namespace {

// Per-arm posterior over columns (bit t = Y_t) consistent with the history.
std::vector<std::vector<double>> column_posteriors(const DiscreteMixtureEnv& env, const History& h,
                                                   const std::vector<std::size_t>& xs) {
    const std::size_t T = xs.size();
    const std::size_t A = h.prior_info().n_actions();
    std::vector<std::vector<double>> cols(A, std::vector<double>(std::size_t{1} << T, 0.0));
    for (Action a = 0; a < A; ++a) {
        const std::size_t cls = env.feature_class(h.prior_info().feature(a));
        std::uint64_t obs_mask = 0, obs_bits = 0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            const auto& s = h.steps()[i];
            if (s.action != a) continue;
            obs_mask |= std::uint64_t{1} << i;
            if (s.outcome > 0.5) obs_bits |= std::uint64_t{1} << i;
        }
        double total = 0.0;
        for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << T); ++bits) {
            if ((bits & obs_mask) != obs_bits) continue;
            cols[a][bits] = column_prob(env, a, cls, xs, bits);
            total += cols[a][bits];
        }
        for (auto& v : cols[a]) v /= total;
    }
    return cols;
}

std::vector<std::size_t> context_indices(const DiscreteMixtureEnv& env, const History& h,
                                         const std::vector<Vec>& contexts) {
    if (h.size() >= contexts.size() && h.current_context())
        throw ContractError("posterior enumeration: history reaches past the contexts");
    std::vector<std::size_t> xs;
    for (std::size_t t = 0; t < contexts.size(); ++t) {
        xs.push_back(env.context_index(contexts[t]));
        if (t < h.size() && h.steps()[t].context != contexts[t])
            throw ContractError("posterior enumeration: history contexts differ from the fixed contexts");
    }
    if (h.current_context() && *h.current_context() != contexts[h.size()])
        throw ContractError("posterior enumeration: current context differs from the fixed contexts");
    return xs;
}

} // namespace

std::vector<double> enumerate_table_posterior(const DiscreteMixtureEnv& env, const History& h,
                                              const std::vector<Vec>& contexts) {
    const std::size_t T = contexts.size();
    const std::size_t A = h.prior_info().n_actions();
    if (T * A > 20) throw EnumerationLimit("table posterior: more than 2^20 tables");
    const auto xs = context_indices(env, h, contexts);
    const auto cols = column_posteriors(env, h, xs);
    const std::size_t n_tables = std::size_t{1} << (T * A);
    std::vector<double> post(n_tables, 0.0);
    for (std::size_t idx = 0; idx < n_tables; ++idx) {
        double p = 1.0;
        for (Action a = 0; a < A && p > 0.0; ++a) {
            std::uint64_t bits = 0;
            for (std::size_t t = 0; t < T; ++t)
                if ((idx >> (t * A + a)) & 1u) bits |= std::uint64_t{1} << t;
            p *= cols[a][bits];
        }
        post[idx] = p;
    }
    return post;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ContractError("total_variation: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

std::vector<double> enumerate_optimal_action_probs(const DiscreteMixtureEnv& env, const History& h,
                                                   const std::vector<Vec>& contexts, PolicyClass cls,
                                                   FitCriterion crit) {
    if (!h.current_context()) throw ContractError("optimal-action enumeration: no current context");
    const std::size_t T = contexts.size();
    const std::size_t A = h.prior_info().n_actions();
    const auto post = enumerate_table_posterior(env, h, contexts);
    std::vector<double> probs(A, 0.0);
    TaskInstance tau;
    tau.prior_info = h.prior_info();
    tau.contexts = contexts;
    tau.outcomes = OutcomeTable(T, A);
    for (std::size_t idx = 0; idx < post.size(); ++idx) {
        if (post[idx] == 0.0) continue;
        for (std::size_t t = 0; t < T; ++t)
            for (Action a = 0; a < A; ++a) tau.outcomes.at(t, a) = ((idx >> (t * A + a)) & 1u) ? 1.0 : 0.0;
        probs[fit_policy(tau, cls, crit).act(*h.current_context())] += post[idx];
    }
    return probs;
}

// ---- loss decomposition ----

LossDecomposition loss_decomposition(const DiscreteMixtureEnv& env, const SequenceModel& model, std::size_t horizon,
                                     std::size_t n_actions, std::size_t cap) {
    const std::size_t T = horizon, A = n_actions;
    if (T == 0 || A == 0) throw ConfigError("loss decomposition: horizon and action count must be positive");
    if (A > env.n_actions()) throw ConfigError("loss decomposition: more actions than the environment has");
    const std::size_t nx = env.n_contexts(), nz = env.n_classes();
    const std::size_t n_ctx = checked_pow(nx, T, cap);
    const std::size_t n_cls = checked_pow(nz, A, cap);
    const std::size_t n_tab = checked_pow(2, T * A, cap);
    if (n_ctx > cap / n_cls || n_ctx * n_cls > cap / n_tab)
        throw EnumerationLimit("loss decomposition: enumeration exceeds the term cap");

    LossDecomposition out;
    out.kl_per_arm.assign(A, 0.0);
    const double p_ctx = std::pow(static_cast<double>(nx), -static_cast<double>(T));
    const std::size_t n_col = std::size_t{1} << T;
    std::vector<std::size_t> xs(T), cls(A);
    // Per arm: column probability under p*, and NLL of the column under each model.
    std::vector<std::vector<double>> col_p(A, std::vector<double>(n_col)), nll_model(A, std::vector<double>(n_col)),
        nll_true(A, std::vector<double>(n_col));
    std::vector<ArmObservation> hist;

    for (std::size_t ci = 0; ci < n_ctx; ++ci) {
        decode(ci, nx, xs);
        const auto ctx = contexts_from(xs);
        for (std::size_t zi = 0; zi < n_cls; ++zi) {
            decode(zi, nz, cls);
            double p_cls = 1.0;
            for (Action a = 0; a < A; ++a) p_cls *= env.class_prob(cls[a]);
            if (p_cls == 0.0) continue;
            const double weight = p_ctx * p_cls;

            for (Action a = 0; a < A; ++a) {
                const Vec z{static_cast<double>(a), static_cast<double>(cls[a])};
                for (std::uint64_t bits = 0; bits < n_col; ++bits) {
                    col_p[a][bits] = column_prob(env, a, cls[a], xs, bits);
                    SeqState s = model.initial_state(z);
                    double lm = 0.0, lt = 0.0;
                    hist.clear();
                    for (std::size_t t = 0; t < T; ++t) {
                        const double y = ((bits >> t) & 1u) ? 1.0 : 0.0;
                        const double pm = std::clamp(model.predict(z, s, ctx[t]), kProbClamp, 1.0 - kProbClamp);
                        const double pt = exact_predictive(env, a, hist, ctx[t], cls[a]);
                        lm -= y > 0.5 ? std::log(pm) : std::log1p(-pm);
                        lt -= y > 0.5 ? std::log(pt) : std::log1p(-pt);
                        model.update(s, z, ctx[t], y);
                        hist.push_back({ctx[t], y});
                    }
                    nll_model[a][bits] = lm;
                    nll_true[a][bits] = lt;
                    // KL side: log p*(column) from the mixture sum, log p_theta from the chain.
                    if (col_p[a][bits] > 0.0)
                        out.kl_per_arm[a] += weight * col_p[a][bits] * (std::log(col_p[a][bits]) + lm);
                }
            }

            // Loss side: walk every joint table.
            for (std::size_t idx = 0; idx < n_tab; ++idx) {
                double p = 1.0, lm = 0.0, lt = 0.0;
                for (Action a = 0; a < A; ++a) {
                    std::uint64_t bits = 0;
                    for (std::size_t t = 0; t < T; ++t)
                        if ((idx >> (t * A + a)) & 1u) bits |= std::uint64_t{1} << t;
                    p *= col_p[a][bits];
                    lm += nll_model[a][bits];
                    lt += nll_true[a][bits];
                }
                out.loss_model += weight * p * lm;
                out.loss_true += weight * p * lt;
                ++out.terms;
            }
        }
    }
    out.gap = out.loss_model - out.loss_true;
    for (double k : out.kl_per_arm) out.kl_total += k;
    return out;
}

// ---- policy entropy ----

double policy_entropy_bruteforce(const DiscreteMixtureEnv& env, std::size_t horizon, std::size_t n_actions,
                                 PolicyClass cls, FitCriterion crit, bool condition_on_z, std::size_t cap,
                                 const PolicyFitParams& params) {
    const std::size_t T = horizon, A = n_actions;
    if (T == 0 || A == 0) throw ConfigError("policy entropy: horizon and action count must be positive");
    const std::size_t nx = env.n_contexts(), nz = env.n_classes();
    const std::size_t n_ctx = checked_pow(nx, T, cap);
    const std::size_t n_cls = checked_pow(nz, A, cap);
    const std::size_t n_tab = checked_pow(2, T * A, cap);
    if (n_ctx > cap / n_cls || n_ctx * n_cls > cap / n_tab)
        throw EnumerationLimit("policy entropy: enumeration exceeds the term cap");
    if (T > 20) throw EnumerationLimit("policy entropy: horizon too long for label encoding");

    const double p_ctx = std::pow(static_cast<double>(nx), -static_cast<double>(T));
    std::vector<std::size_t> xs(T), cl(A);
    std::vector<std::vector<double>> col_p(A, std::vector<double>(std::size_t{1} << T));
    double h_total = 0.0;
    TaskInstance tau;
    tau.outcomes = OutcomeTable(T, A);
    for (std::size_t ci = 0; ci < n_ctx; ++ci) {
        decode(ci, nx, xs);
        tau.contexts = contexts_from(xs);
        std::map<std::uint64_t, double> marginal;
        double h_cond = 0.0;
        for (std::size_t zi = 0; zi < n_cls; ++zi) {
            decode(zi, nz, cl);
            double p_cls = 1.0;
            tau.prior_info.per_action_features.clear();
            for (Action a = 0; a < A; ++a) {
                p_cls *= env.class_prob(cl[a]);
                tau.prior_info.per_action_features.push_back({static_cast<double>(a), static_cast<double>(cl[a])});
            }
            if (p_cls == 0.0) continue;
            for (Action a = 0; a < A; ++a)
                for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << T); ++bits)
                    col_p[a][bits] = column_prob(env, a, cl[a], xs, bits);
            std::map<std::uint64_t, double> labels;
            for (std::size_t idx = 0; idx < n_tab; ++idx) {
                double p = 1.0;
                for (Action a = 0; a < A; ++a) {
                    std::uint64_t bits = 0;
                    for (std::size_t t = 0; t < T; ++t)
                        if ((idx >> (t * A + a)) & 1u) bits |= std::uint64_t{1} << t;
                    p *= col_p[a][bits];
                }
                if (p == 0.0) continue;
                for (std::size_t t = 0; t < T; ++t)
                    for (Action a = 0; a < A; ++a) tau.outcomes.at(t, a) = ((idx >> (t * A + a)) & 1u) ? 1.0 : 0.0;
                const Policy pi = fit_policy(tau, cls, crit, {}, params);
                std::uint64_t key = 0;
                for (std::size_t t = T; t-- > 0;) key = key * A + pi.act(tau.contexts[t]);
                labels[key] += p;
            }
            if (condition_on_z) h_cond += p_cls * entropy_of(labels);
            for (const auto& [k, p] : labels) marginal[k] += p_cls * p;
        }
        h_total += p_ctx * (condition_on_z ? h_cond : entropy_of(marginal));
    }
    return h_total;
}

namespace {

std::vector<double> binomial_pmf(std::size_t n, double p) {
    std::vector<double> pmf(n + 1);
    const double lp = std::log(p), lq = std::log1p(-p);
    const double ln = std::lgamma(static_cast<double>(n) + 1.0);
    for (std::size_t s = 0; s <= n; ++s) {
        const double ds = static_cast<double>(s);
        pmf[s] = std::exp(ln - std::lgamma(ds + 1.0) - std::lgamma(static_cast<double>(n - s) + 1.0) + ds * lp +
                          static_cast<double>(n - s) * lq);
    }
    return pmf;
}

// P(arm a has the largest count, ties to the lowest index) for independent binomials.
std::vector<double> argmax_probs(const std::vector<std::vector<double>>& pmfs) {
    const std::size_t A = pmfs.size();
    const std::size_t n = pmfs.front().size() - 1;
    std::vector<std::vector<double>> cdf(A, std::vector<double>(n + 1));
    for (std::size_t a = 0; a < A; ++a) {
        double c = 0.0;
        for (std::size_t s = 0; s <= n; ++s) cdf[a][s] = (c += pmfs[a][s]);
    }
    std::vector<double> out(A, 0.0);
    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t s = 0; s <= n; ++s) {
            double p = pmfs[a][s];
            for (std::size_t b = 0; b < A && p > 0.0; ++b) {
                if (b == a) continue;
                if (b < a)
                    p *= s == 0 ? 0.0 : cdf[b][s - 1];
                else
                    p *= cdf[b][s];
            }
            out[a] += p;
        }
    return out;
}

void compositions(std::size_t total, std::size_t parts, std::vector<std::size_t>& cur,
                  std::vector<std::vector<std::size_t>>& out) {
    if (cur.size() + 1 == parts) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (std::size_t k = 0; k <= total; ++k) {
        cur.push_back(k);
        compositions(total - k, parts, cur, out);
        cur.pop_back();
    }
}

} // namespace

double tabular_policy_entropy(const DiscreteMixtureEnv& env, std::size_t horizon, std::size_t n_actions,
                              bool condition_on_z) {
    const std::size_t T = horizon, A = n_actions;
    if (T == 0 || A == 0) throw ConfigError("policy entropy: horizon and action count must be positive");
    if (A > env.n_actions()) throw ConfigError("policy entropy: more actions than the environment has");
    const std::size_t nx = env.n_contexts(), nz = env.n_classes(), M = env.n_components();
    const std::size_t n_cls = checked_pow(nz, A, kEnumerationCap);
    const std::size_t n_m = checked_pow(M, A, kEnumerationCap);

    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::size_t> cur;
    compositions(T, nx, cur, comps);

    double h_total = 0.0;
    std::vector<std::size_t> cl(A), ms(A), digits;
    for (const auto& counts : comps) {
        double log_p = std::lgamma(static_cast<double>(T) + 1.0) - static_cast<double>(T) * std::log(double(nx));
        for (auto c : counts) log_p -= std::lgamma(static_cast<double>(c) + 1.0);
        const double p_counts = std::exp(log_p);
        std::vector<std::size_t> present;
        for (std::size_t x = 0; x < nx; ++x)
            if (counts[x] > 0) present.push_back(x);
        const std::size_t n_labels = checked_pow(A, present.size(), kEnumerationCap);
        digits.assign(present.size(), 0);

        // q[m-combo][k][a]: P(pi*(present[k]) = a | latent indices).
        std::vector<std::vector<std::vector<double>>> q(n_m);
        for (std::size_t mi = 0; mi < n_m; ++mi) {
            decode(mi, M, ms);
            for (auto x : present) {
                std::vector<std::vector<double>> pmfs;
                for (Action a = 0; a < A; ++a) pmfs.push_back(binomial_pmf(counts[x], env.theta(ms[a], x, a)));
                q[mi].push_back(argmax_probs(pmfs));
            }
        }
        std::vector<double> marginal(n_labels, 0.0);
        double h_cond = 0.0;
        for (std::size_t zi = 0; zi < n_cls; ++zi) {
            decode(zi, nz, cl);
            double p_cls = 1.0;
            for (Action a = 0; a < A; ++a) p_cls *= env.class_prob(cl[a]);
            if (p_cls == 0.0) continue;
            std::vector<double> dist(n_labels, 0.0);
            for (std::size_t mi = 0; mi < n_m; ++mi) {
                decode(mi, M, ms);
                double pw = 1.0;
                for (Action a = 0; a < A; ++a) pw *= env.weights(cl[a])[ms[a]];
                if (pw == 0.0) continue;
                for (std::size_t li = 0; li < n_labels; ++li) {
                    decode(li, A, digits);
                    double p = pw;
                    for (std::size_t k = 0; k < present.size(); ++k) p *= q[mi][k][digits[k]];
                    dist[li] += p;
                }
            }
            if (condition_on_z) h_cond += p_cls * entropy_of(dist);
            for (std::size_t li = 0; li < n_labels; ++li) marginal[li] += p_cls * dist[li];
        }
        h_total += p_counts * (condition_on_z ? h_cond : entropy_of(marginal));
    }
    return h_total;
}

EntropyEstimate plugin_policy_entropy(const TaskGenerator& gen, const TaskShape& shape, std::size_t n_outer,
                                      std::size_t n_inner, PolicyClass cls, FitCriterion crit, RngStream& rng,
                                      const PolicyFitParams& params) {
    if (n_outer < 2 || n_inner < 1) throw ConfigError("plug-in entropy: need n_outer >= 2 and n_inner >= 1");
    std::vector<double> per_outer(n_outer, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < n_outer; ++i) {
        auto outer_rng = rng.child("outer", i);
        std::vector<ArmDraw> arms;
        TaskInstance tau = gen.sample_task(shape, outer_rng, arms);
        std::map<std::vector<Action>, std::size_t> counts;
        for (std::size_t j = 0; j < n_inner; ++j) {
            auto inner_rng = outer_rng.child("inner", j);
            for (Action a = 0; a < shape.n_actions; ++a) {
                auto lat_rng = inner_rng.child("latent", a);
                const ArmDraw arm = gen.resample_latent(arms[a], a, lat_rng);
                auto y_rng = inner_rng.child("outcomes", a);
                for (std::size_t t = 0; t < shape.horizon; ++t)
                    tau.outcomes.at(t, a) = y_rng.bernoulli(gen.success_prob(a, arm, tau.contexts[t])) ? 1.0 : 0.0;
            }
            const Policy pi = fit_policy(tau, cls, crit, {}, params);
            std::vector<Action> key(shape.horizon);
            for (std::size_t t = 0; t < shape.horizon; ++t) key[t] = pi.act(tau.contexts[t]);
            counts[key] += 1;
        }
        double h = 0.0;
        for (const auto& [k, c] : counts) {
            const double p = static_cast<double>(c) / static_cast<double>(n_inner);
            h -= p * std::log(p);
        }
        per_outer[i] = h;
    }
    EntropyEstimate est;
    for (double v : per_outer) est.value += v;
    est.value /= static_cast<double>(n_outer);
    double ss = 0.0;
    for (double v : per_outer) ss += (v - est.value) * (v - est.value);
    est.se = std::sqrt(ss / static_cast<double>(n_outer - 1) / static_cast<double>(n_outer));
    est.note = "plug-in estimate from " + std::to_string(n_inner) +
               " redraws per (Z, X); biased low, treat the bound check as indicative";
    spdlog::warn("policy entropy: {}", est.note);
    return est;
}

// ---- VC ----

double sauer_shelah_bound(std::size_t vc_dim, std::size_t T) {
    if (T == 0) throw ConfigError("sauer_shelah_bound: T must be >= 1");
    const std::size_t k = std::min(vc_dim, T);
    const double lt = std::lgamma(static_cast<double>(T) + 1.0);
    std::vector<double> logs;
    for (std::size_t i = 0; i <= k; ++i)
        logs.push_back(lt - std::lgamma(static_cast<double>(i) + 1.0) - std::lgamma(static_cast<double>(T - i) + 1.0));
    const double top = *std::max_element(logs.begin(), logs.end());
    double s = 0.0;
    for (double l : logs) s += std::exp(l - top);
    return top + std::log(s);
}

std::vector<std::uint64_t> affine_labelings(const std::vector<Point2>& pts) {
    const std::size_t n = pts.size();
    if (n > 63) throw EnumerationLimit("affine_labelings: at most 63 points");
    std::set<std::uint64_t> out;
    const std::uint64_t all = n == 0 ? 0 : (n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
    out.insert(0);
    out.insert(all);

    // Group identical points; they always share a label.
    std::vector<Point2> uniq;
    std::vector<std::uint64_t> members;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = 0;
        while (k < uniq.size() && !(uniq[k].x == pts[i].x && uniq[k].y == pts[i].y)) ++k;
        if (k == uniq.size()) {
            uniq.push_back(pts[i]);
            members.push_back(0);
        }
        members[k] |= std::uint64_t{1} << i;
    }

    double scale = 0.0;
    for (const auto& p : uniq) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
    const double tol = 1e-12 * std::max(scale * scale, 1.0);

    const std::size_t u = uniq.size();
    std::vector<std::pair<double, std::size_t>> on;
    for (std::size_t i = 0; i < u; ++i)
        for (std::size_t j = i + 1; j < u; ++j) {
            const double dx = uniq[j].x - uniq[i].x, dy = uniq[j].y - uniq[i].y;
            std::uint64_t left = 0, right = 0;
            on.clear();
            for (std::size_t k = 0; k < u; ++k) {
                const double rx = uniq[k].x - uniq[i].x, ry = uniq[k].y - uniq[i].y;
                const double cross = dx * ry - dy * rx;
                if (cross > tol)
                    left |= members[k];
                else if (cross < -tol)
                    right |= members[k];
                else
                    on.emplace_back(dx * rx + dy * ry, k);
            }
            std::sort(on.begin(), on.end());
            // A small rotation about a point between on[k-1] and on[k] sends a
            // prefix of the collinear points to one side and the rest to the other.
            for (std::size_t k = 0; k <= on.size(); ++k) {
                std::uint64_t prefix = 0, suffix = 0;
                for (std::size_t q = 0; q < on.size(); ++q) (q < k ? prefix : suffix) |= members[on[q].second];
                for (std::uint64_t side : {left, right}) {
                    out.insert(side | prefix);
                    out.insert(side | suffix);
                }
            }
        }
    return {out.begin(), out.end()};
}

// ---- bound report ----

BoundReport make_bound_report(double entropy, std::size_t n_actions, std::size_t horizon, double loss_gap,
                              double regret, double regret_se, std::string entropy_method) {
    if (horizon == 0) throw ConfigError("bound report: horizon must be >= 1");
    BoundReport r;
    r.entropy = entropy;
    r.n_actions = n_actions;
    r.horizon = horizon;
    r.loss_gap = loss_gap;
    double gap = loss_gap;
    if (gap < 0.0) {
        r.gap_clamped = true;
        r.notes.push_back("estimated loss gap was negative (" + std::to_string(loss_gap) + "); clamped to 0");
        gap = 0.0;
    }
    r.entropy_term = std::sqrt(static_cast<double>(n_actions) * std::max(entropy, 0.0) / (2.0 * double(horizon)));
    r.gap_term = std::sqrt(2.0 * gap);
    r.bound = r.entropy_term + r.gap_term;
    r.regret = regret;
    r.regret_se = regret_se;
    r.entropy_method = std::move(entropy_method);
    return r;
}

nlohmann::json BoundReport::to_json() const {
    return {{"entropy", entropy},
            {"entropy_method", entropy_method},
            {"n_actions", n_actions},
            {"horizon", horizon},
            {"loss_gap", loss_gap},
            {"gap_clamped", gap_clamped},
            {"entropy_term", entropy_term},
            {"gap_term", gap_term},
            {"bound", bound},
            {"regret", regret},
            {"regret_se", regret_se},
            {"holds_at_3se", holds(3.0)},
            {"notes", notes}};
}

} // namespace genban

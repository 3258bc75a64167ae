#include "genban/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "genban/errors.hpp"
#include "genban/kernels.hpp"

namespace genban {

namespace {

constexpr const char* kFormat = "genban-mlp";
constexpr int kFormatVersion = 1;

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool acc,
          bool parallel) {
    if (parallel)
        kernels::gemm_parallel(a, b, c, m, k, n, acc);
    else
        kernels::gemm_serial(a, b, c, m, k, n, acc);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool acc,
             bool parallel) {
    if (parallel)
        kernels::gemm_tn_parallel(a, b, c, m, k, n, acc);
    else
        kernels::gemm_tn_serial(a, b, c, m, k, n, acc);
}

} // namespace

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw ConfigError("mlp: need at least an input and an output layer");
    if (sizes_.back() != 1) throw ConfigError("mlp: output layer must have width 1");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw ConfigError("mlp: layer widths must be positive");
        offsets_.push_back(total);
        total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    }
    params_.assign(total, 0.0);
}

void Mlp::init_glorot(RngStream& rng) {
    for (std::size_t l = 0; l < n_layers(); ++l) {
        const double fan_in = static_cast<double>(sizes_[l]);
        const double fan_out = static_cast<double>(sizes_[l + 1]);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        auto layer_rng = rng.child("glorot", l);
        double* w = params_.data() + weight_offset(l);
        for (std::size_t i = 0; i < sizes_[l] * sizes_[l + 1]; ++i) w[i] = limit * (2.0 * layer_rng.uniform() - 1.0);
        std::fill_n(params_.data() + bias_offset(l), sizes_[l + 1], 0.0);
    }
}

double Mlp::logit(const double* in, std::vector<double>& scratch) const {
    std::size_t widest = 0;
    for (auto s : sizes_) widest = std::max(widest, s);
    scratch.resize(2 * widest);
    double* cur = scratch.data();
    double* nxt = scratch.data() + widest;
    std::copy_n(in, sizes_[0], cur);
    for (std::size_t l = 0; l < n_layers(); ++l) {
        const std::size_t n_in = sizes_[l], n_out = sizes_[l + 1];
        std::copy_n(params_.data() + bias_offset(l), n_out, nxt);
        kernels::gemm_serial(cur, params_.data() + weight_offset(l), nxt, 1, n_in, n_out, true);
        if (l + 1 < n_layers())
            for (std::size_t j = 0; j < n_out; ++j) nxt[j] = std::max(nxt[j], 0.0);
        std::swap(cur, nxt);
    }
    return cur[0];
}

void Mlp::forward(const double* in, std::size_t rows, Cache& cache, bool parallel) const {
    cache.rows = rows;
    cache.acts.resize(sizes_.size());
    cache.acts[0].assign(in, in + rows * sizes_[0]);
    for (std::size_t l = 0; l < n_layers(); ++l) {
        const std::size_t n_in = sizes_[l], n_out = sizes_[l + 1];
        auto& out = cache.acts[l + 1];
        out.resize(rows * n_out);
        const double* b = params_.data() + bias_offset(l);
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(b, n_out, out.data() + r * n_out);
        gemm(cache.acts[l].data(), params_.data() + weight_offset(l), out.data(), rows, n_in, n_out, true, parallel);
        if (l + 1 < n_layers())
            for (auto& v : out) v = std::max(v, 0.0);
    }
}

void Mlp::backward(const Cache& cache, const double* dlogit, std::vector<double>& grad, bool parallel) const {
    const std::size_t rows = cache.rows;
    grad.assign(params_.size(), 0.0);
    std::vector<double> delta(dlogit, dlogit + rows);
    std::vector<double> prev, wt;
    for (std::size_t l = n_layers(); l-- > 0;) {
        const std::size_t n_in = sizes_[l], n_out = sizes_[l + 1];
        gemm_tn(cache.acts[l].data(), delta.data(), grad.data() + weight_offset(l), rows, n_in, n_out, false,
                parallel);
        double* gb = grad.data() + bias_offset(l);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < n_out; ++j) gb[j] += delta[r * n_out + j];
        if (l == 0) break;
        wt.resize(n_out * n_in);
        kernels::transpose(params_.data() + weight_offset(l), wt.data(), n_in, n_out);
        prev.resize(rows * n_in);
        gemm(delta.data(), wt.data(), prev.data(), rows, n_out, n_in, false, parallel);
        // ReLU subgradient: zero where the activation is zero (including exactly 0).
        const auto& act = cache.acts[l];
        for (std::size_t i = 0; i < prev.size(); ++i)
            if (!(act[i] > 0.0)) prev[i] = 0.0;
        delta.swap(prev);
    }
}

// ---- features ----

std::size_t MlpFeatureConfig::input_dim() const {
    std::size_t n = d_z + d_x + d_x * d_x + d_x + 2;
    if (ridge_estimate) n += d_x + 1;
    return n;
}

void MlpFeatureConfig::validate() const {
    if (d_x == 0) throw ConfigError("mlp features: context dimension must be positive");
    if (!(ridge_eps > 0.0)) throw ConfigError("mlp features: ridge eps must be positive");
    if (!(stat_scale > 0.0)) throw ConfigError("mlp features: stat scale must be positive");
}

namespace {

std::vector<std::size_t> full_sizes(const MlpFeatureConfig& f, const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> sizes{f.input_dim()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    return sizes;
}

} // namespace

MlpSeqModel::MlpSeqModel(MlpFeatureConfig features, std::vector<std::size_t> hidden)
    : feat_(features), net_(full_sizes(features, hidden)) {
    feat_.validate();
}

MlpSeqModel::MlpSeqModel(MlpFeatureConfig features, Mlp net) : feat_(features), net_(std::move(net)) {
    feat_.validate();
    if (net_.input_dim() != feat_.input_dim()) throw ConfigError("mlp model: network input does not match features");
}

void MlpSeqModel::check_dims(std::span<const double> z, std::span<const double> x) const {
    if (z.size() != feat_.d_z) throw ContractError("mlp model: prior feature dimension mismatch");
    if (x.size() != feat_.d_x) throw ContractError("mlp model: context dimension mismatch");
}

SeqState MlpSeqModel::initial_state(std::span<const double> z) const {
    if (z.size() != feat_.d_z) throw ContractError("mlp model: prior feature dimension mismatch");
    return empty_summary(feat_.d_x);
}

void MlpSeqModel::update(SeqState& s, std::span<const double> z, std::span<const double> x, double y) const {
    check_dims(z, x);
    add_observation(s, x, y);
}

void MlpSeqModel::features(std::span<const double> z, const SeqState& s, std::span<const double> x,
                           double* out) const {
    check_dims(z, x);
    const std::size_t d = feat_.d_x;
    if (s.xty.size() != d || s.xtx.size() != d * d) throw ContractError("mlp model: state has wrong dimension");
    const double inv_scale = 1.0 / feat_.stat_scale;
    out = std::copy(z.begin(), z.end(), out);
    out = std::copy(x.begin(), x.end(), out);
    const Matrix inv = ridge_inverse(xtx_matrix(s), feat_.ridge_eps);
    out = std::copy(inv.values().begin(), inv.values().end(), out);
    for (std::size_t i = 0; i < d; ++i) *out++ = s.xty[i] * inv_scale;
    *out++ = static_cast<double>(s.count) * inv_scale;
    *out++ = s.sum_y * inv_scale;
    if (feat_.ridge_estimate) {
        const auto beta = matvec(inv, s.xty);
        out = std::copy(beta.begin(), beta.end(), out);
        *out++ = dot(beta, x);
    }
}

double MlpSeqModel::predict(std::span<const double> z, const SeqState& s, std::span<const double> x) const {
    thread_local std::vector<double> input, scratch;
    input.resize(feat_.input_dim());
    features(z, s, x, input.data());
    const double p = logistic(net_.logit(input.data(), scratch));
    return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

// ---- serialization ----

std::string to_hex_f64(const std::vector<double>& values) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(values.size() * 16);
    for (double v : values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            const auto byte = static_cast<unsigned>(bits & 0xFFu);
            out.push_back(kDigits[byte >> 4]);
            out.push_back(kDigits[byte & 0xFu]);
            bits >>= 8;
        }
    }
    return out;
}

std::vector<double> from_hex_f64(const std::string& hex) {
    if (hex.size() % 16 != 0) throw IoError("weight blob length is not a multiple of 16");
    auto nibble = [](char c) -> std::uint64_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint64_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint64_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint64_t>(c - 'A' + 10);
        throw IoError("weight blob has a non-hex character");
    };
    std::vector<double> out(hex.size() / 16);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            const std::uint64_t byte = (nibble(hex[i * 16 + 2 * b]) << 4) | nibble(hex[i * 16 + 2 * b + 1]);
            bits |= byte << (8 * b);
        }
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

nlohmann::json MlpSeqModel::to_json(const nlohmann::json& provenance) const {
    nlohmann::json j;
    j["format"] = kFormat;
    j["version"] = kFormatVersion;
    j["layers"] = net_.sizes();
    j["features"] = {{"d_z", feat_.d_z},
                     {"d_x", feat_.d_x},
                     {"ridge_eps", feat_.ridge_eps},
                     {"stat_scale", feat_.stat_scale},
                     {"ridge_estimate", feat_.ridge_estimate}};
    if (!provenance.is_null()) j["provenance"] = provenance;
    j["weights"] = to_hex_f64(net_.params());
    return j;
}

MlpSeqModel MlpSeqModel::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kFormat) throw IoError("model file: unexpected format tag");
        if (j.at("version").get<int>() != kFormatVersion) throw IoError("model file: unsupported version");
        MlpFeatureConfig f;
        const auto& fj = j.at("features");
        f.d_z = fj.at("d_z").get<std::size_t>();
        f.d_x = fj.at("d_x").get<std::size_t>();
        f.ridge_eps = fj.at("ridge_eps").get<double>();
        f.stat_scale = fj.at("stat_scale").get<double>();
        f.ridge_estimate = fj.at("ridge_estimate").get<bool>();
        Mlp net(j.at("layers").get<std::vector<std::size_t>>());
        auto params = from_hex_f64(j.at("weights").get<std::string>());
        if (params.size() != net.n_params()) throw IoError("model file: weight count does not match layers");
        net.params() = std::move(params);
        return MlpSeqModel(f, std::move(net));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("model file: ") + e.what());
    }
}

void MlpSeqModel::save(const std::string& path, const nlohmann::json& provenance) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << to_json(provenance).dump(1) << '\n';
    if (!out) throw IoError("failed writing " + path);
}

MlpSeqModel MlpSeqModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("model file " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

} // namespace genban

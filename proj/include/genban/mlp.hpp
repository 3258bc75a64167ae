#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "genban/rng.hpp"
#include "genban/seqmodel.hpp"

namespace genban {

// Fully connected ReLU network with a single linear output (a logit).
// Parameters live in one flat vector: for each layer, W (in x out, row-major)
// followed by b (out). Storing W as in x out turns every product into
// row-times-matrix form, which the gemm kernels handle directly.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<std::size_t> sizes);

    // Glorot-uniform weights, zero biases.
    void init_glorot(RngStream& rng);

    const std::vector<std::size_t>& sizes() const { return sizes_; }
    std::size_t input_dim() const { return sizes_.front(); }
    std::size_t n_layers() const { return sizes_.size() - 1; }
    std::size_t n_params() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const { return offsets_[layer] + sizes_[layer] * sizes_[layer + 1]; }

    // Single-row logit. `scratch` avoids reallocation across calls.
    double logit(const double* in, std::vector<double>& scratch) const;

    // Activations for a batch, kept for the backward pass.
    struct Cache {
        std::size_t rows = 0;
        std::vector<std::vector<double>> acts; // acts[0] = input, acts[L] = logits
    };
    void forward(const double* in, std::size_t rows, Cache& cache, bool parallel = false) const;
    // grad (same layout as params) = sum over rows of dlogit[r] * d logit_r / d params.
    void backward(const Cache& cache, const double* dlogit, std::vector<double>& grad, bool parallel = false) const;

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

// Which summary features feed the network after (Z, x).
struct MlpFeatureConfig {
    std::size_t d_z = 2;
    std::size_t d_x = 5;
    double ridge_eps = 1.0;
    // Divides X^T Y, the count and the outcome sum so inputs stay O(1).
    double stat_scale = 200.0;
    // Also feed the ridge estimate (X^T X + eps I)^{-1} X^T Y and x . estimate.
    bool ridge_estimate = false;

    std::size_t input_dim() const;
    void validate() const;
};

class MlpSeqModel : public SequenceModel {
public:
    MlpSeqModel(MlpFeatureConfig features, std::vector<std::size_t> hidden);
    MlpSeqModel(MlpFeatureConfig features, Mlp net);

    std::string name() const override { return "mlp"; }
    SeqState initial_state(std::span<const double> z) const override;
    double predict(std::span<const double> z, const SeqState& s, std::span<const double> x) const override;
    void update(SeqState& s, std::span<const double> z, std::span<const double> x, double y) const override;

    // Writes input_dim() values: z, x, vec((X^T X + eps I)^{-1}), X^T Y / s, n / s, sum y / s [, extras].
    void features(std::span<const double> z, const SeqState& s, std::span<const double> x, double* out) const;

    const MlpFeatureConfig& feature_config() const { return feat_; }
    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

    // Versioned JSON header plus a hex blob of little-endian f64 parameters.
    nlohmann::json to_json(const nlohmann::json& provenance = {}) const;
    static MlpSeqModel from_json(const nlohmann::json& j);
    void save(const std::string& path, const nlohmann::json& provenance = {}) const;
    static MlpSeqModel load(const std::string& path);

private:
    void check_dims(std::span<const double> z, std::span<const double> x) const;

    MlpFeatureConfig feat_;
    Mlp net_;
};

std::string to_hex_f64(const std::vector<double>& values);
std::vector<double> from_hex_f64(const std::string& hex);

} // namespace genban

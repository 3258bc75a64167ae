#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace genban {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Counter-based random stream (Philox4x32-10). The key is derived from
// (experiment_seed, task_index, stream_label); draws are a pure function of
// (key, counter), so results never depend on thread scheduling.
//
// All distribution transforms are implemented here rather than through
// <random> distributions, whose outputs are implementation-defined.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t experiment_seed, std::uint64_t task_index, std::string_view stream_label);

    // Independent sub-stream; children of distinct (label, index) never share a key.
    RngStream child(std::string_view label, std::uint64_t index = 0) const;

    std::uint64_t next_u64();
    result_type operator()() { return next_u64(); }
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    bool bernoulli(double p) { return uniform() < p; }
    // Unbiased integer in [0, n); n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    explicit RngStream(std::uint64_t key) : key_(key) {}
    void refill();

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

} // namespace genban

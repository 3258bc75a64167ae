#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "genban/core.hpp"
#include "genban/env.hpp"
#include "genban/rng.hpp"
#include "genban/seqmodel.hpp"

namespace genban {

enum class ContextMode { Fixed, Resampled };

ContextMode parse_context_mode(const std::string& s);
std::string to_string(ContextMode m);

// Where the contexts of not-yet-revealed timesteps come from: copied from a
// fixed X_{1:T}, or drawn from the generator's (known) context law.
class ContextSource {
public:
    // Keeps a view; the contexts must outlive the source.
    static ContextSource fixed(std::span<const Vec> contexts);
    static ContextSource resampled(const TaskGenerator& gen);

    ContextMode mode() const { return mode_; }
    // Context for a timestep the agent has not seen yet. Resampled draws use
    // stream child ("context", t) of rng.
    Vec future(std::size_t t, const RngStream& rng) const;

private:
    ContextMode mode_ = ContextMode::Fixed;
    std::span<const Vec> fixed_;
    const TaskGenerator* gen_ = nullptr;
};

// observed[a][i] is set iff the history holds (X_i, a, Y_i).
struct MissingnessMask {
    std::vector<std::vector<char>> observed;

    bool missing(Action a, std::size_t i) const { return !observed[a][i]; }
};

MissingnessMask build_mask(const History& h, std::size_t n_actions, std::size_t horizon);

// Observed timesteps ascending, then missing timesteps ascending.
std::vector<std::size_t> arm_ordering(const MissingnessMask& mask, Action a);

struct ImputeOptions {
    // When non-empty, every imputed table is written here as JSON (debugging only).
    std::string dump_path;
};

// Completes the potential-outcome table given the history: observed entries
// are copied, missing ones are drawn arm by arm in arm_ordering order, each
// draw feeding the model state before the next. Arm a uses stream child
// ("impute_arm", a); resampled contexts use child "contexts".
// Requires a current context in h (decision time t = h.size()).
TaskInstance impute_task(const SequenceModel& m, const History& h, const ContextSource& contexts,
                         std::size_t horizon, RngStream& rng, const ImputeOptions& opts = {});

} // namespace genban

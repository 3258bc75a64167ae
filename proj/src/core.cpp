#include "genban/core.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string_view>

#include "genban/errors.hpp"
#include "genban/rng.hpp"

namespace genban {

void PriorInfo::validate() const {
    for (const auto& z : per_action_features) {
        if (z.size() != dim()) throw ContractError("prior info: feature dimension differs across actions");
    }
}

void TaskInstance::validate() const {
    prior_info.validate();
    if (outcomes.horizon() != contexts.size())
        throw ContractError("task: outcome table horizon does not match number of contexts");
    if (outcomes.values().size() != outcomes.horizon() * outcomes.n_actions())
        throw ContractError("task: outcome table is incomplete");
    if (prior_info.n_actions() != outcomes.n_actions())
        throw ContractError("task: prior info and outcome table disagree on action count");
    for (const auto& x : contexts) {
        if (x.size() != contexts.front().size()) throw ContractError("task: context dimension varies");
    }
}

nlohmann::json task_to_json(const TaskInstance& task) {
    nlohmann::json j;
    j["horizon"] = task.horizon();
    j["n_actions"] = task.n_actions();
    j["prior_info"] = task.prior_info.per_action_features;
    j["contexts"] = task.contexts;
    auto rows = nlohmann::json::array();
    for (std::size_t t = 0; t < task.horizon(); ++t) {
        Vec row(task.n_actions());
        for (Action a = 0; a < task.n_actions(); ++a) row[a] = task.outcomes.at(t, a);
        rows.push_back(row);
    }
    j["outcomes"] = rows;
    return j;
}

TaskInstance task_from_json(const nlohmann::json& j) {
    TaskInstance task;
    task.prior_info.per_action_features = j.at("prior_info").get<std::vector<Vec>>();
    task.contexts = j.at("contexts").get<std::vector<Vec>>();
    const auto horizon = j.at("horizon").get<std::size_t>();
    const auto n_actions = j.at("n_actions").get<std::size_t>();
    task.outcomes = OutcomeTable(horizon, n_actions);
    const auto& rows = j.at("outcomes");
    if (rows.size() != horizon) throw ContractError("task json: outcome rows do not match horizon");
    for (std::size_t t = 0; t < horizon; ++t) {
        const auto row = rows[t].get<Vec>();
        if (row.size() != n_actions) throw ContractError("task json: outcome row has wrong width");
        for (Action a = 0; a < n_actions; ++a) task.outcomes.at(t, a) = row[a];
    }
    task.validate();
    return task;
}

double RewardFn::operator()(double y) const {
    const double r = map_ ? map_(y) : y;
    return std::clamp(r, 0.0, 1.0);
}

void History::observe_context(Vec x) {
    if (current_) throw ContractError("history: context already observed for this step");
    current_ = std::move(x);
}

void History::append_step(const Vec& x, Action a, double y) {
    if (!current_ || *current_ != x)
        throw ContractError("history: appended context does not match the current context");
    if (a >= prior_info_.n_actions() && prior_info_.n_actions() != 0)
        throw ContractError("history: action index out of range");
    steps_.push_back(Step{x, a, y});
    current_.reset();
}

namespace {

void put_f64(std::vector<std::uint8_t>& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(bits & 0xFFu));
        bits >>= 8;
    }
}

} // namespace

std::vector<std::uint8_t> History::serialize() const {
    std::vector<std::uint8_t> out;
    put_f64(out, static_cast<double>(prior_info_.n_actions()));
    put_f64(out, static_cast<double>(prior_info_.dim()));
    for (const auto& z : prior_info_.per_action_features)
        for (double v : z) put_f64(out, v);
    put_f64(out, static_cast<double>(steps_.size()));
    for (const auto& s : steps_) {
        put_f64(out, static_cast<double>(s.context.size()));
        for (double v : s.context) put_f64(out, v);
        put_f64(out, static_cast<double>(s.action));
        put_f64(out, s.outcome);
    }
    put_f64(out, current_ ? 1.0 : 0.0);
    if (current_) {
        put_f64(out, static_cast<double>(current_->size()));
        for (double v : *current_) put_f64(out, v);
    }
    return out;
}

std::uint64_t History::hash() const {
    const auto bytes = serialize();
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

History append_step(History h, const Vec& x, Action a, double y) {
    h.append_step(x, a, y);
    return h;
}

} // namespace genban

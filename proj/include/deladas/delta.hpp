#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "deladas/cdd.hpp"
#include "deladas/validate.hpp"

namespace deladas::config {

// ---------------------------------------------------------------------------
// Deployment deltas
// ---------------------------------------------------------------------------

struct PickerWeights {
    long long deploy = 1;
    long long undeploy = 1;
    long long rebind = 1;
};

struct RebindAction {
    InstanceRef client;
    std::string port;
    InstanceRef server;

    auto operator<=>(const RebindAction&) const = default;
};

/// Ordered actions transforming one configuration into another: undeploys
/// first, then deploys, then rebinds. Connections of freshly deployed
/// instances are initial binds and ride along with the deploy; only
/// surviving clients whose server endpoint changed appear as rebinds.
struct DeploymentDelta {
    std::string dsd_ref;
    std::vector<InstanceRef> undeploy;
    std::vector<InstanceRef> deploy;
    std::vector<RebindAction> rebinds;
    ConfigurationDescription target;  // carried for enactment (initial binds)
    long long cost = 0;

    bool empty() const { return undeploy.empty() && deploy.empty() && rebinds.empty(); }
};

inline DeploymentDelta delta(const ConfigurationDescription& current,
                             const ConfigurationDescription& target,
                             const PickerWeights& weights = {}) {
    if (current.dsd_ref != target.dsd_ref)
        throw std::invalid_argument("delta between configurations of different descriptions: '" +
                                    current.dsd_ref + "' vs '" + target.dsd_ref + "'");
    DeploymentDelta d;
    d.dsd_ref = current.dsd_ref;
    d.target = target;
    std::set_difference(current.instances.begin(), current.instances.end(),
                        target.instances.begin(), target.instances.end(),
                        std::back_inserter(d.undeploy));
    std::set_difference(target.instances.begin(), target.instances.end(),
                        current.instances.begin(), current.instances.end(),
                        std::back_inserter(d.deploy));

    std::map<std::pair<InstanceRef, std::string>, InstanceRef> current_binding;
    for (const auto& conn : current.connections)
        current_binding.insert({{conn.client, conn.port}, conn.server});

    for (const auto& conn : target.connections) {
        if (!current.has_instance(conn.client)) continue;  // initial bind of a new instance
        auto it = current_binding.find({conn.client, conn.port});
        if (it == current_binding.end() || !(it->second == conn.server))
            d.rebinds.push_back({conn.client, conn.port, conn.server});
    }
    std::sort(d.rebinds.begin(), d.rebinds.end());

    d.cost = weights.undeploy * static_cast<long long>(d.undeploy.size()) +
             weights.deploy * static_cast<long long>(d.deploy.size()) +
             weights.rebind * static_cast<long long>(d.rebinds.size());
    return d;
}

/// Replays a delta on a configuration. Used by tests to pin the delta
/// contract and by the simulator to advance its current-configuration model.
inline ConfigurationDescription apply_delta(const ConfigurationDescription& current,
                                            const DeploymentDelta& d) {
    ConfigurationDescription next;
    next.dsd_ref = current.dsd_ref;

    std::set_difference(current.instances.begin(), current.instances.end(), d.undeploy.begin(),
                        d.undeploy.end(), std::back_inserter(next.instances));
    next.instances.insert(next.instances.end(), d.deploy.begin(), d.deploy.end());
    std::sort(next.instances.begin(), next.instances.end());

    std::map<std::pair<InstanceRef, std::string>, InstanceRef> bindings;
    // surviving connections: both endpoints still present
    for (const auto& conn : current.connections)
        if (next.has_instance(conn.client) && next.has_instance(conn.server))
            bindings.insert({{conn.client, conn.port}, conn.server});
    // initial binds of deployed instances come from the target
    for (const auto& conn : d.target.connections)
        if (std::binary_search(d.deploy.begin(), d.deploy.end(), conn.client))
            bindings[{conn.client, conn.port}] = conn.server;
    // rebinds replace the server endpoint
    for (const auto& rebind : d.rebinds) bindings[{rebind.client, rebind.port}] = rebind.server;

    for (const auto& [key, server] : bindings)
        next.connections.push_back({key.first, key.second, server});
    next.normalize();
    return next;
}

// ---------------------------------------------------------------------------
// Picking a configuration
// ---------------------------------------------------------------------------

struct PickerPolicy {
    enum class Kind { First, MinDelta };
    Kind kind = Kind::First;
    PickerWeights weights;
    std::optional<std::uint64_t> candidate_cap;
    std::optional<std::chrono::milliseconds> time_budget;
};

/// Single-consumer choice over a stream of candidate configurations.
/// kind=First takes the first candidate; kind=MinDelta keeps the candidate
/// with the cheapest delta against the current deployment, ties broken by
/// stream order. When the description carries an optimisation directive the
/// candidates seen are pre-ranked by the objective before the policy
/// applies.
class Picker {
public:
    Picker(PickerPolicy policy, std::optional<ConfigurationDescription> current,
           const dsl::DesiredStateDescription* dsd)
        : policy_(policy),
          current_(std::move(current)),
          dsd_(dsd),
          ranked_(dsd && dsd->optimise),
          start_(std::chrono::steady_clock::now()) {}

    /// Feeds one candidate; returns false once the picker needs no more.
    bool offer(const ConfigurationDescription& candidate) {
        if (done_) return false;
        if (policy_.candidate_cap && seen_ >= *policy_.candidate_cap) {
            truncated_ = true;
            done_ = true;
            return false;
        }
        if (policy_.time_budget &&
            std::chrono::steady_clock::now() - start_ >= *policy_.time_budget) {
            truncated_ = true;
            done_ = true;
            return false;
        }
        ++seen_;
        if (ranked_) {
            pool_.push_back(candidate);
        } else if (policy_.kind == PickerPolicy::Kind::First) {
            chosen_ = candidate;
            chosen_cost_ = cost_of(candidate);
            done_ = true;
            return false;
        } else {
            long long cost = cost_of(candidate);
            if (!chosen_ || cost < chosen_cost_) {
                chosen_ = candidate;
                chosen_cost_ = cost;
            }
        }
        if (policy_.candidate_cap && seen_ >= *policy_.candidate_cap) {
            done_ = true;
            return false;
        }
        return true;
    }

    struct Outcome {
        std::optional<ConfigurationDescription> chosen;
        std::uint64_t candidates_seen = 0;
        long long cost = 0;       // delta cost against the current deployment
        bool truncated = false;   // cap or budget fired before the stream ended
    };

    Outcome finish() {
        if (ranked_ && !pool_.empty()) {
            std::vector<std::size_t> order(pool_.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::vector<long long> objective(pool_.size(), 0);
            for (std::size_t i = 0; i < pool_.size(); ++i) {
                auto value = evaluate_closed_term(dsd_->optimise->term, pool_[i], *dsd_);
                objective[i] = value.value_or(0);
            }
            const bool maximize = dsd_->optimise->maximize;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return maximize ? objective[a] > objective[b] : objective[a] < objective[b];
            });
            if (policy_.kind == PickerPolicy::Kind::First) {
                chosen_ = pool_[order.front()];
                chosen_cost_ = cost_of(*chosen_);
            } else {
                for (std::size_t i : order) {
                    long long cost = cost_of(pool_[i]);
                    if (!chosen_ || cost < chosen_cost_) {
                        chosen_ = pool_[i];
                        chosen_cost_ = cost;
                    }
                }
            }
        }
        Outcome outcome;
        outcome.chosen = chosen_;
        outcome.candidates_seen = seen_;
        outcome.cost = chosen_ ? chosen_cost_ : 0;
        outcome.truncated = truncated_;
        return outcome;
    }

private:
    long long cost_of(const ConfigurationDescription& candidate) const {
        if (current_) return delta(*current_, candidate, policy_.weights).cost;
        ConfigurationDescription empty;
        empty.dsd_ref = candidate.dsd_ref;
        return delta(empty, candidate, policy_.weights).cost;
    }

    PickerPolicy policy_;
    std::optional<ConfigurationDescription> current_;
    const dsl::DesiredStateDescription* dsd_;
    bool ranked_ = false;
    std::chrono::steady_clock::time_point start_;
    std::vector<ConfigurationDescription> pool_;  // used only when ranking
    std::optional<ConfigurationDescription> chosen_;
    long long chosen_cost_ = 0;
    std::uint64_t seen_ = 0;
    bool truncated_ = false;
    bool done_ = false;
};

} // namespace deladas::config

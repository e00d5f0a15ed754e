#pragma once

#include <set>
#include <sstream>

#include "deladas/compiler.hpp"
#include "deladas/sim/runtime.hpp"

namespace deladas::sim {

// ---------------------------------------------------------------------------
// Faults and fault scripts
// ---------------------------------------------------------------------------

struct Fault {
    Tick at = 0;
    enum class Kind { HostCrash, ComponentCrash, PropertySet } kind = Kind::HostCrash;
    std::string host;                // HostCrash
    config::InstanceRef instance;    // ComponentCrash / PropertySet
    std::string property;            // PropertySet
    long long value = 0;             // PropertySet
};

struct FaultScriptResult {
    std::vector<Fault> faults;
    std::string error;

    bool ok() const { return error.empty(); }
};

/// Parses the line-oriented fault script format:
///   at <t> host-crash <host>
///   at <t> component-crash <host>/<type>/<index>
///   at <t> set <host>/<type>/<index> <property> <value>
/// Blank lines and lines starting with '#' are ignored.
inline FaultScriptResult parse_fault_script(const std::string& text) {
    FaultScriptResult result;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto parse_instance = [](const std::string& spec, config::InstanceRef& out) {
        auto first = spec.find('/');
        auto second = spec.find('/', first + 1);
        if (first == std::string::npos || second == std::string::npos) return false;
        out.host = spec.substr(0, first);
        out.type = spec.substr(first + 1, second - first - 1);
        try {
            out.index = std::stoi(spec.substr(second + 1));
        } catch (...) {
            return false;
        }
        return !out.host.empty() && !out.type.empty() && out.index >= 1;
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string word;
        if (!(fields >> word) || word[0] == '#') continue;
        auto fail = [&](const std::string& why) {
            result.error = "line " + std::to_string(line_no) + ": " + why;
        };
        if (word != "at") {
            fail("expected 'at'");
            return result;
        }
        Fault fault;
        std::string kind;
        if (!(fields >> fault.at >> kind)) {
            fail("expected '<time> <kind>'");
            return result;
        }
        if (kind == "host-crash") {
            fault.kind = Fault::Kind::HostCrash;
            if (!(fields >> fault.host)) {
                fail("host-crash needs a host name");
                return result;
            }
        } else if (kind == "component-crash") {
            fault.kind = Fault::Kind::ComponentCrash;
            std::string spec;
            if (!(fields >> spec) || !parse_instance(spec, fault.instance)) {
                fail("component-crash needs <host>/<type>/<index>");
                return result;
            }
        } else if (kind == "set") {
            fault.kind = Fault::Kind::PropertySet;
            std::string spec;
            if (!(fields >> spec >> fault.property >> fault.value) ||
                !parse_instance(spec, fault.instance)) {
                fail("set needs <host>/<type>/<index> <property> <value>");
                return result;
            }
        } else {
            fail("unknown fault kind '" + kind + "'");
            return result;
        }
        result.faults.push_back(std::move(fault));
    }
    std::stable_sort(result.faults.begin(), result.faults.end(),
                     [](const Fault& a, const Fault& b) { return a.at < b.at; });
    return result;
}

// ---------------------------------------------------------------------------
// DSD evolution
// ---------------------------------------------------------------------------

/// Removes hosts observed down; every other declaration is untouched.
/// Administrator-supplied replacements enter through Realm::replace_dsd.
inline dsl::DesiredStateDescription evolve_dsd(const dsl::DesiredStateDescription& dsd,
                                               const std::set<std::string>& down_hosts) {
    dsl::DesiredStateDescription evolved = dsd;
    std::erase_if(evolved.hosts,
                  [&](const dsl::Host& host) { return down_hosts.count(host.name) > 0; });
    return evolved;
}

// ---------------------------------------------------------------------------
// Realm manager
// ---------------------------------------------------------------------------

struct RealmOptions {
    Tick tick_period = 10;
    std::uint64_t candidate_cap = 1000000;
    std::optional<std::chrono::milliseconds> solve_budget;  // off by default: keeps runs reproducible
    config::PickerWeights weights;
    std::uint64_t seed = 0;
};

struct TickReport {
    Tick time = 0;
    bool compliant = true;
    bool repaired = false;
    bool unresolvable = false;
    long long delta_cost = 0;
    std::uint64_t candidates_seen = 0;
    config::DeploymentDelta enacted;
};

/// The supervisory loop: monitors the live model against the active
/// description, evaluates assertion probes, and drives re-solve/re-enact
/// cycles when the desired state is violated.
class Realm {
public:
    Realm(dsl::DesiredStateDescription dsd, RealmOptions options = {},
          const BehaviorRegistry* registry = default_registry())
        : options_(options), active_(std::move(dsd)), runtime_(active_, registry) {
        adopt_active();
    }

    static const BehaviorRegistry* default_registry() {
        static const BehaviorRegistry registry;
        return &registry;
    }

    Runtime& runtime() { return runtime_; }
    const dsl::DesiredStateDescription& active_dsd() const { return active_; }
    const std::string& active_ref() const { return active_ref_; }
    const config::ConfigurationDescription& current() const { return current_; }
    Tick now() const { return runtime_.now(); }

    /// Explicitly enacts a target configuration (used for scripted scenarios
    /// and by the initial deployment).
    void deploy_configuration(const config::ConfigurationDescription& target) {
        config::ConfigurationDescription from = runtime_.live_configuration(target.dsd_ref);
        config::DeploymentDelta d = config::delta(from, target, options_.weights);
        runtime_.enact(d);
        current_ = target;
    }

    /// Solves the active description and enacts a first configuration.
    /// Returns false (with an unresolvable-violation event) when no solution
    /// exists within the configured limits.
    bool deploy_initial() {
        auto outcome = solve_and_pick();
        if (!outcome.chosen) {
            runtime_.log().append(runtime_.now(), "unresolvable-violation", "-",
                                  "no initial configuration within limits");
            return false;
        }
        runtime_.log().append(runtime_.now(), "resolve", "-",
                              "candidates=" + std::to_string(outcome.candidates_seen) +
                                  " cost=" + std::to_string(outcome.cost));
        deploy_configuration(*outcome.chosen);
        return true;
    }

    /// Administrator-supplied replacement description; picked up by the next
    /// tick's validation sweep.
    void replace_dsd(dsl::DesiredStateDescription dsd) {
        active_ = std::move(dsd);
        adopt_active();
        runtime_.log().append(runtime_.now(), "evolve", "-", "administrator replaced the DSD");
    }

    void schedule_faults(std::vector<Fault> faults) {
        for (auto& f : faults) pending_faults_.push_back(std::move(f));
        std::stable_sort(pending_faults_.begin(), pending_faults_.end(),
                         [](const Fault& a, const Fault& b) { return a.at < b.at; });
    }

    void inject_fault(const Fault& fault) {
        switch (fault.kind) {
            case Fault::Kind::HostCrash:
                runtime_.crash_host(fault.host);
                return;
            case Fault::Kind::ComponentCrash:
                runtime_.crash_component(fault.instance);
                return;
            case Fault::Kind::PropertySet: {
                if (!runtime_.find_manager(fault.instance))
                    throw std::invalid_argument("unknown instance " + fault.instance.str());
                runtime_.log().append(runtime_.now(), "fault", fault.instance.str(),
                                      "set " + fault.property + " = " +
                                          std::to_string(fault.value));
                overrides_[{fault.instance.str(), fault.property}] = fault.value;
                return;
            }
        }
    }

    /// One monitoring period: drain due events and faults, run probes and the
    /// structural validator, and re-solve/re-enact when the desired state is
    /// violated.
    TickReport tick() {
        Tick deadline = runtime_.now() + options_.tick_period;
        drain_faults(deadline);
        runtime_.run_until(deadline);

        TickReport report;
        report.time = deadline;
        runtime_.log().append(deadline, "tick", "-", "");

        undeploy_drifted_instances();
        run_probes();
        sample_dynamic_properties();
        run_assertion_probes();

        config::ConfigurationDescription live = runtime_.live_configuration(active_ref_);
        auto compliance = config::validate(live, active_);
        if (compliance.compliant()) {
            runtime_.log().append(deadline, "compliant", "-", "");
            return report;
        }
        report.compliant = false;
        std::string reason = first_failure(compliance);
        runtime_.log().append(deadline, "violation", "-", reason);
        reconcile(live, report);
        return report;
    }

    void run_ticks(int count) {
        for (int i = 0; i < count; ++i) tick();
    }

    /// Sampled dynamic property values, newest sweep last.
    const std::map<std::pair<std::string, std::string>, long long>& sampled() const {
        return sampled_;
    }

private:
    class Sampler final : public config::PropertySource {
    public:
        explicit Sampler(const Realm& realm) : realm_(realm) {}
        std::optional<long long> dynamic_value(const config::InstanceRef& instance,
                                               const std::string& prop) const override {
            auto it = realm_.sampled_.find({instance.str(), prop});
            if (it == realm_.sampled_.end()) return std::nullopt;
            return it->second;
        }

    private:
        const Realm& realm_;
    };

    RealmOptions options_;
    dsl::DesiredStateDescription active_;
    std::string active_ref_;
    compile::SpecializedCsp compiled_;  // assertions partition for the active DSD
    Runtime runtime_;
    config::ConfigurationDescription current_;
    std::vector<Fault> pending_faults_;
    std::map<std::pair<std::string, std::string>, long long> overrides_;
    std::map<std::pair<std::string, std::string>, long long> sampled_;

    void adopt_active() {
        active_ref_ = config::dsd_reference(active_);
        compiled_ = compile::compile_dsd(active_);
        current_.dsd_ref = active_ref_;
    }

    void drain_faults(Tick deadline) {
        std::size_t taken = 0;
        for (const Fault& fault : pending_faults_) {
            if (fault.at > deadline) break;
            runtime_.run_until(fault.at);
            inject_fault(fault);
            ++taken;
        }
        pending_faults_.erase(pending_faults_.begin(),
                              pending_faults_.begin() + static_cast<long>(taken));
    }

    /// Running instances whose deployed bundle no longer matches the active
    /// description (typically after an administrator swapped an
    /// implementation) are torn down so the validation sweep redeploys them
    /// from fresh bundles.
    void undeploy_drifted_instances() {
        std::vector<config::InstanceRef> drifted;
        for (const auto& [ref, manager] : runtime_.managers()) {
            if (manager->state != ManagerState::Running) continue;
            const dsl::ComponentType* type = active_.find_component_type(ref.type);
            if (!type) {
                drifted.push_back(ref);
                continue;
            }
            Bundle expected = package_bundle(*type, ref, Runtime::kRealmPrincipal);
            if (expected.digest != manager->bundle.digest) drifted.push_back(ref);
        }
        for (const auto& ref : drifted) {
            runtime_.log().append(runtime_.now(), "drift", ref.str(),
                                  "deployed bundle no longer matches the description");
            if (ComponentManager* manager = runtime_.find_manager(ref)) runtime_.undeploy(*manager);
        }
    }

    void run_probes() {
        for (const auto& host : active_.hosts) {
            SimHost* sim_host = runtime_.find_host(host.name);
            if (sim_host && !sim_host->up)
                runtime_.log().append(runtime_.now(), "probe", host.name, "HostDown");
        }
        for (const auto& [ref, manager] : runtime_.managers())
            if (manager->state == ManagerState::Failed && current_.has_instance(ref))
                runtime_.log().append(runtime_.now(), "probe", ref.str(), "ComponentFailed");
    }

    void sample_dynamic_properties() {
        config::ConfigurationDescription live = runtime_.live_configuration(active_ref_);
        for (const auto& inst : live.instances) {
            const dsl::ComponentType* type = active_.find_component_type(inst.type);
            if (!type) continue;
            for (const auto& prop : type->properties) {
                if (!prop.dynamic) continue;
                auto key = std::make_pair(inst.str(), prop.name);
                auto override_it = overrides_.find(key);
                long long value;
                if (override_it != overrides_.end()) {
                    value = override_it->second;
                } else {
                    // stable pseudo-sample in 0..99, derived from the seed
                    value = static_cast<long long>(
                        fnv1a64(std::to_string(options_.seed) + "|" + inst.str() + "|" +
                                prop.name) %
                        100);
                }
                sampled_[key] = value;
            }
        }
    }

    void run_assertion_probes() {
        if (compiled_.runtime_assertions.empty()) return;
        config::ConfigurationDescription live = runtime_.live_configuration(active_ref_);
        Sampler sampler(*this);
        for (const auto& assertion : compiled_.runtime_assertions) {
            auto outcome = config::evaluate_predicate(*assertion.expr, live, active_, &sampler);
            std::string subject =
                assertion.constraint_set + "[" + std::to_string(assertion.conjunct) + "]";
            if (!outcome.passed)
                runtime_.log().append(runtime_.now(), "assertion-violation", subject,
                                      "witness=" + outcome.witness);
        }
    }

    static std::string first_failure(const config::ComplianceReport& report) {
        if (!report.errors.empty()) return report.errors.front().message;
        if (!report.binding_failures.empty()) return report.binding_failures.front();
        for (const auto& c : report.conjuncts)
            if (!c.runtime_only && !c.passed)
                return c.constraint_set + "[" + std::to_string(c.conjunct) +
                       "] witness=" + c.witness;
        return "non-compliant";
    }

    struct PickOutcome {
        std::optional<config::ConfigurationDescription> chosen;
        std::uint64_t candidates_seen = 0;
        long long cost = 0;
        bool exhausted = false;
    };

    PickOutcome solve_and_pick(
        const std::optional<config::ConfigurationDescription>& current = std::nullopt) {
        config::PickerPolicy policy;
        policy.kind = config::PickerPolicy::Kind::MinDelta;
        policy.weights = options_.weights;
        policy.candidate_cap = options_.candidate_cap;
        policy.time_budget = options_.solve_budget;
        config::Picker picker(policy, current, &active_);

        csp::SolveLimits limits;
        limits.max_solutions = options_.candidate_cap;
        limits.time_budget = options_.solve_budget;
        auto outcome = compile::enumerate_configurations(
            active_, limits,
            [&](const config::ConfigurationDescription& cdd) { picker.offer(cdd); });

        auto picked = picker.finish();
        PickOutcome result;
        result.chosen = picked.chosen;
        result.candidates_seen = picked.candidates_seen;
        result.cost = picked.cost;
        result.exhausted = outcome.result.exhausted;
        return result;
    }

    void reconcile(const config::ConfigurationDescription& live, TickReport& report) {
        // evolve: drop hosts observed down, then re-solve over what remains
        std::set<std::string> down;
        for (const auto& host : active_.hosts) {
            SimHost* sim_host = runtime_.find_host(host.name);
            if (sim_host && !sim_host->up) down.insert(host.name);
        }
        if (!down.empty()) {
            std::string list;
            for (const auto& name : down) {
                if (!list.empty()) list += ",";
                list += name;
            }
            active_ = evolve_dsd(active_, down);
            adopt_active();
            runtime_.log().append(runtime_.now(), "evolve", "-", "removed hosts: " + list);
        }

        config::ConfigurationDescription surviving = live;
        surviving.dsd_ref = active_ref_;

        auto outcome = solve_and_pick(surviving);
        report.candidates_seen = outcome.candidates_seen;
        if (!outcome.chosen) {
            report.unresolvable = true;
            runtime_.log().append(runtime_.now(), "unresolvable-violation", "-",
                                  outcome.exhausted
                                      ? "search space exhausted without a compliant configuration"
                                      : "no compliant configuration within limits");
            return;
        }
        config::DeploymentDelta d = config::delta(surviving, *outcome.chosen, options_.weights);
        runtime_.log().append(runtime_.now(), "resolve", "-",
                              "candidates=" + std::to_string(outcome.candidates_seen) +
                                  " cost=" + std::to_string(d.cost));
        runtime_.enact(d);
        current_ = *outcome.chosen;
        report.repaired = true;
        report.delta_cost = d.cost;
        report.enacted = d;
    }
};

} // namespace deladas::sim

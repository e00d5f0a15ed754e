#pragma once

#include <map>
#include <memory>
#include <queue>
#include <set>
#include <stdexcept>

#include "deladas/delta.hpp"
#include "deladas/sim/behavior.hpp"
#include "deladas/sim/bundle.hpp"
#include "deladas/sim/events.hpp"

namespace deladas::sim {

enum class ManagerState {
    Delivered,
    Verified,
    Instantiated,
    Bound,
    Running,
    Destroying,
    Terminated,
    Failed,
};

inline const char* manager_state_name(ManagerState s) {
    switch (s) {
        case ManagerState::Delivered: return "Delivered";
        case ManagerState::Verified: return "Verified";
        case ManagerState::Instantiated: return "Instantiated";
        case ManagerState::Bound: return "Bound";
        case ManagerState::Running: return "Running";
        case ManagerState::Destroying: return "Destroying";
        case ManagerState::Terminated: return "Terminated";
        case ManagerState::Failed: return "Failed";
    }
    return "?";
}

struct SimHost {
    std::string name;
    bool up = true;
    std::set<std::string> accepted_principals;
};

struct SmartProxy {
    std::string port;
    std::string iface;
    std::string setter;
    enum class Binding { Unbound, Bound, Disabled };
    Binding binding = Binding::Unbound;
    config::InstanceRef target;
    std::vector<std::uint64_t> queued;  // call ids issued while unbound, FIFO
};

struct ComponentManager {
    Bundle bundle;
    config::InstanceRef identity;
    ManagerState state = ManagerState::Delivered;
    std::map<std::string, SmartProxy> proxies;     // by port name
    std::map<std::string, bool> endpoints;         // provided interface -> enabled
    std::unique_ptr<Behavior> behavior;
    std::set<std::uint64_t> inflight;              // requests being served
    bool undeploy_pending = false;
};

struct CallRecord {
    std::uint64_t id = 0;
    bool external = true;
    config::InstanceRef caller;          // valid when !external
    std::uint64_t parent_request = 0;    // caller-side request this call serves
    config::InstanceRef target;          // resolved at dispatch time
    std::string iface;
    std::string payload;
    enum class Status { Pending, Queued, Dispatched, Responded, Rejected, Dropped } status =
        Status::Pending;
    std::string response;
};

/// Deterministic single-threaded deployment fabric: thin servers accepting
/// fired bundles, component managers with smart proxies, and a logical-time
/// message queue. All external control happens between run_until() calls.
class Runtime {
public:
    Runtime(const dsl::DesiredStateDescription& dsd, const BehaviorRegistry* registry)
        : dsd_(&dsd), registry_(registry) {
        for (const auto& host : dsd.hosts)
            hosts_[host.name] = SimHost{host.name, true, {kRealmPrincipal}};
    }

    static constexpr const char* kRealmPrincipal = "realm-manager";

    Tick now() const { return now_; }
    EventLog& log() { return log_; }
    const EventLog& log() const { return log_; }
    const dsl::DesiredStateDescription& dsd() const { return *dsd_; }

    SimHost* find_host(const std::string& name) {
        auto it = hosts_.find(name);
        return it == hosts_.end() ? nullptr : &it->second;
    }

    ComponentManager* find_manager(const config::InstanceRef& ref) {
        auto it = managers_.find(ref);
        return it == managers_.end() ? nullptr : it->second.get();
    }

    const std::map<config::InstanceRef, std::unique_ptr<ComponentManager>>& managers() const {
        return managers_;
    }

    const CallRecord* call(std::uint64_t id) const {
        auto it = calls_.find(id);
        return it == calls_.end() ? nullptr : &it->second;
    }

    // --- thin server -------------------------------------------------------

    /// Delivers a bundle to a host. The host verifies the digest and the
    /// signing principal before a component manager is created.
    ComponentManager* fire(const std::string& host_name, const Bundle& bundle) {
        SimHost* host = find_host(host_name);
        if (!host) throw std::invalid_argument("unknown host '" + host_name + "'");
        const std::string subject = bundle.identity.str();
        if (!host->up) {
            log_.append(now_, "deliver-failure", subject, "host " + host_name + " is down");
            return nullptr;
        }
        log_.append(now_, "delivered", subject, "bundle digest=" + bundle.digest);
        if (bundle.identity.host != host_name) {
            log_.append(now_, "verify-rejected", subject,
                        "identity names host " + bundle.identity.host);
            return nullptr;
        }
        if (bundle_digest(bundle) != bundle.digest) {
            log_.append(now_, "verify-rejected", subject, "digest mismatch");
            return nullptr;
        }
        if (!host->accepted_principals.count(bundle.credential)) {
            log_.append(now_, "verify-rejected", subject,
                        "unknown principal '" + bundle.credential + "'");
            return nullptr;
        }
        auto manager = std::make_unique<ComponentManager>();
        manager->bundle = bundle;
        manager->identity = bundle.identity;
        set_state(*manager, ManagerState::Verified);
        ComponentManager* raw = manager.get();
        managers_[bundle.identity] = std::move(manager);
        return raw;
    }

    // --- enactment ---------------------------------------------------------

    /// Executes a delta: undeploys, then deploys (package, fire, instantiate,
    /// bind, initialise), then rebinds via proxy re-injection. A failing step
    /// aborts the remaining actions for that instance only.
    void enact(const config::DeploymentDelta& delta) {
        if (delta.empty()) {
            log_.append(now_, "enact-noop", "-", "");
            return;
        }
        log_.append(now_, "enact-begin", "-",
                    "undeploy=" + std::to_string(delta.undeploy.size()) +
                        " deploy=" + std::to_string(delta.deploy.size()) +
                        " rebind=" + std::to_string(delta.rebinds.size()) +
                        " cost=" + std::to_string(delta.cost));
        for (const auto& instance : delta.undeploy) {
            ComponentManager* manager = find_manager(instance);
            if (manager) undeploy(*manager);
        }
        for (const auto& instance : delta.deploy) deploy_instance(instance, delta.target);
        for (const auto& rebind : delta.rebinds) {
            ComponentManager* manager = find_manager(rebind.client);
            if (!manager || manager->state != ManagerState::Running) {
                log_.append(now_, "rebind-failure", rebind.client.str(),
                            "client not running");
                continue;
            }
            auto it = manager->proxies.find(rebind.port);
            if (it == manager->proxies.end()) continue;
            bind_proxy(*manager, it->second, rebind.server, /*rebind=*/true);
        }
        log_.append(now_, "enact-done", "-", "");
    }

    /// Full life-cycle teardown in the contract order: provided endpoints are
    /// disabled first (in-flight requests complete), required-port proxies
    /// next (queued calls reject), then destroy methods, then termination.
    void undeploy(ComponentManager& manager) {
        if (manager.state == ManagerState::Terminated || manager.state == ManagerState::Failed) {
            log_.append(now_, "undeploy-noop", manager.identity.str(),
                        manager_state_name(manager.state));
            return;
        }
        set_state(manager, ManagerState::Destroying);
        for (auto& [iface, enabled] : manager.endpoints) {
            if (!enabled) continue;
            enabled = false;
            log_.append(now_, "endpoint-disabled", manager.identity.str(), iface);
        }
        for (auto& [port, proxy] : manager.proxies) {
            if (proxy.binding == SmartProxy::Binding::Disabled) continue;
            proxy.binding = SmartProxy::Binding::Disabled;
            log_.append(now_, "proxy-disabled", manager.identity.str(), port);
            for (std::uint64_t id : proxy.queued) reject_call(id, "proxy disabled");
            proxy.queued.clear();
        }
        if (manager.inflight.empty()) {
            finish_undeploy(manager);
        } else {
            manager.undeploy_pending = true;
            log_.append(now_, "undeploy-draining", manager.identity.str(),
                        std::to_string(manager.inflight.size()) + " in-flight");
        }
    }

    // --- calls -------------------------------------------------------------

    /// Issues a request from the outside world: `port` may name a required
    /// port (routed through its smart proxy) or a provided interface
    /// (delivered to the instance itself).
    std::uint64_t invoke(const config::InstanceRef& instance, const std::string& port,
                         const std::string& payload) {
        ComponentManager* manager = find_manager(instance);
        if (!manager) throw std::invalid_argument("unknown instance " + instance.str());
        std::uint64_t id = new_call(/*external=*/true, {}, 0, payload);
        log_.append(now_, "invoke", instance.str(), port + " call=" + std::to_string(id) +
                                                        " payload=" + payload);
        route_call(id, *manager, port);
        return id;
    }

    /// Management-interface binding manipulation: injects (or replaces) a
    /// port's service reference. Queued calls flush in FIFO order.
    void bind_port(const config::InstanceRef& client, const std::string& port,
                   const config::InstanceRef& server) {
        ComponentManager* manager = find_manager(client);
        if (!manager) throw std::invalid_argument("unknown instance " + client.str());
        auto it = manager->proxies.find(port);
        if (it == manager->proxies.end())
            throw std::invalid_argument("instance " + client.str() + " has no port '" + port + "'");
        bool rebinding = it->second.binding == SmartProxy::Binding::Bound;
        bind_proxy(*manager, it->second, server, rebinding);
    }

    // --- faults ------------------------------------------------------------

    void crash_host(const std::string& name) {
        SimHost* host = find_host(name);
        if (!host) throw std::invalid_argument("unknown host '" + name + "'");
        log_.append(now_, "fault", name, "host-crash");
        if (!host->up) return;
        host->up = false;
        for (auto& [ref, manager] : managers_) {
            if (ref.host != name) continue;
            if (manager->state == ManagerState::Terminated ||
                manager->state == ManagerState::Failed)
                continue;
            fail_manager(*manager, "host " + name + " crashed");
        }
    }

    void crash_component(const config::InstanceRef& instance) {
        ComponentManager* manager = find_manager(instance);
        if (!manager || manager->state == ManagerState::Terminated)
            throw std::invalid_argument("unknown instance " + instance.str());
        log_.append(now_, "fault", instance.str(), "component-crash");
        if (manager->state != ManagerState::Failed)
            fail_manager(*manager, "component crashed");
    }

    // --- time --------------------------------------------------------------

    /// Drains every queued message with time <= until; the clock ends at
    /// `until`.
    void run_until(Tick until) {
        while (!queue_.empty() && queue_.top().time <= until) {
            QueuedEvent event = queue_.top();
            queue_.pop();
            now_ = event.time;
            dispatch(event);
        }
        now_ = until;
    }

    /// Instances whose managers are fully operational plus their proxy
    /// bindings; this is the live model the realm manager validates.
    config::ConfigurationDescription live_configuration(const std::string& dsd_ref) const {
        config::ConfigurationDescription live;
        live.dsd_ref = dsd_ref;
        for (const auto& [ref, manager] : managers_) {
            if (manager->state != ManagerState::Running) continue;
            live.instances.push_back(ref);
            for (const auto& [port, proxy] : manager->proxies)
                if (proxy.binding == SmartProxy::Binding::Bound)
                    live.connections.push_back({ref, port, proxy.target});
        }
        live.normalize();
        return live;
    }

private:
    struct QueuedEvent {
        Tick time = 0;
        std::uint64_t seq = 0;
        enum class Kind { Request, Response, Failure, FinishUndeploy } kind = Kind::Request;
        std::uint64_t call_id = 0;
        config::InstanceRef manager_ref;  // FinishUndeploy
        std::string payload;              // Response / Failure reason

        bool operator>(const QueuedEvent& other) const {
            if (time != other.time) return time > other.time;
            return seq > other.seq;
        }
    };

    class Context final : public BehaviorContext {
    public:
        Context(Runtime& runtime, ComponentManager& manager)
            : runtime_(runtime), manager_(manager) {}

        std::uint64_t call_out(const std::string& port, const std::string& payload) override {
            std::uint64_t id =
                runtime_.new_call(/*external=*/false, manager_.identity, current_request_, payload);
            runtime_.log_.append(runtime_.now_, "call-out", manager_.identity.str(),
                                 port + " call=" + std::to_string(id) + " payload=" + payload);
            runtime_.route_call(id, manager_, port);
            return id;
        }

        void respond(std::uint64_t request_id, const std::string& payload) override {
            runtime_.respond(manager_, request_id, payload);
        }

        void set_current_request(std::uint64_t id) { current_request_ = id; }

    private:
        Runtime& runtime_;
        ComponentManager& manager_;
        std::uint64_t current_request_ = 0;
    };

    const dsl::DesiredStateDescription* dsd_;
    const BehaviorRegistry* registry_;
    std::map<std::string, SimHost> hosts_;
    std::map<config::InstanceRef, std::unique_ptr<ComponentManager>> managers_;
    std::map<std::uint64_t, CallRecord> calls_;
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
    EventLog log_;
    Tick now_ = 0;
    std::uint64_t next_call_ = 1;
    std::uint64_t next_seq_ = 0;

    void schedule(QueuedEvent event, Tick at) {
        event.time = at;
        event.seq = next_seq_++;
        queue_.push(std::move(event));
    }

    void schedule_call_event(QueuedEvent::Kind kind, std::uint64_t call_id, Tick at,
                             std::string payload = {}) {
        QueuedEvent event;
        event.kind = kind;
        event.call_id = call_id;
        event.payload = std::move(payload);
        schedule(std::move(event), at);
    }

    void set_state(ComponentManager& manager, ManagerState state) {
        manager.state = state;
        log_.append(now_, "manager-state", manager.identity.str(), manager_state_name(state));
    }

    std::uint64_t new_call(bool external, config::InstanceRef caller, std::uint64_t parent,
                           const std::string& payload) {
        CallRecord record;
        record.id = next_call_++;
        record.external = external;
        record.caller = std::move(caller);
        record.parent_request = parent;
        record.payload = payload;
        std::uint64_t id = record.id;
        calls_[id] = std::move(record);
        return id;
    }

    /// Resolves a call through the instance's smart proxy (required port) or
    /// its own provided endpoint, queueing or rejecting as the binding state
    /// dictates.
    void route_call(std::uint64_t id, ComponentManager& manager, const std::string& port) {
        CallRecord& record = calls_[id];
        auto proxy_it = manager.proxies.find(port);
        if (proxy_it != manager.proxies.end()) {
            SmartProxy& proxy = proxy_it->second;
            record.iface = proxy.iface;
            switch (proxy.binding) {
                case SmartProxy::Binding::Bound:
                    record.target = proxy.target;
                    record.status = CallRecord::Status::Dispatched;
                    schedule_call_event(QueuedEvent::Kind::Request, id, now_ + 1);
                    return;
                case SmartProxy::Binding::Unbound:
                    record.status = CallRecord::Status::Queued;
                    proxy.queued.push_back(id);
                    log_.append(now_, "queued-call", manager.identity.str(),
                                port + " call=" + std::to_string(id));
                    return;
                case SmartProxy::Binding::Disabled:
                    reject_call(id, "proxy disabled");
                    return;
            }
        }
        auto endpoint_it = manager.endpoints.find(port);
        if (endpoint_it != manager.endpoints.end()) {
            record.iface = port;
            record.target = manager.identity;
            record.status = CallRecord::Status::Dispatched;
            schedule_call_event(QueuedEvent::Kind::Request, id, now_ + 1);
            return;
        }
        throw std::invalid_argument("instance " + manager.identity.str() + " has no port or " +
                                    "interface named '" + port + "'");
    }

    void bind_proxy(ComponentManager& manager, SmartProxy& proxy,
                    const config::InstanceRef& target, bool rebind) {
        proxy.binding = SmartProxy::Binding::Bound;
        proxy.target = target;
        log_.append(now_, rebind ? "rebind" : "bind", manager.identity.str(),
                    proxy.port + " -> " + target.str() + " via " + proxy.setter + "()");
        // queued calls flush in FIFO order
        for (std::uint64_t id : proxy.queued) {
            CallRecord& record = calls_[id];
            record.target = target;
            record.status = CallRecord::Status::Dispatched;
            log_.append(now_, "flush-call", manager.identity.str(),
                        proxy.port + " call=" + std::to_string(id));
            schedule_call_event(QueuedEvent::Kind::Request, id, now_ + 1);
        }
        proxy.queued.clear();
    }

    void deploy_instance(const config::InstanceRef& instance,
                         const config::ConfigurationDescription& target) {
        const dsl::ComponentType* type = dsd_->find_component_type(instance.type);
        if (!type) {
            log_.append(now_, "deploy-failure", instance.str(),
                        "unknown component type '" + instance.type + "'");
            return;
        }
        log_.append(now_, "package", instance.str(), "bundle for " + type->name);
        Bundle bundle = package_bundle(*type, instance, kRealmPrincipal);
        ComponentManager* manager = fire(instance.host, bundle);
        if (!manager) return;  // delivery/verification failure already logged

        // instantiate: create the implementation object, smart proxies and
        // provided endpoints
        std::string args;
        for (const auto& arg : type->instantiate.arguments) {
            if (!args.empty()) args += ", ";
            if (const auto* i = std::get_if<long long>(&arg)) args += std::to_string(*i);
            else args += "\"" + std::get<std::string>(arg) + "\"";
        }
        log_.append(now_, "instantiate", instance.str(),
                    type->instantiate.object_ref + " = new " + type->instantiate.class_name + "(" +
                        args + ")");
        manager->behavior = registry_->instantiate(type->instantiate.class_name);
        for (const auto& port : type->requires_) {
            SmartProxy proxy;
            proxy.port = port.port;
            proxy.iface = port.iface;
            for (const auto& bind : type->binds)
                if (bind.port == port.port) proxy.setter = bind.setter.method;
            manager->proxies[port.port] = std::move(proxy);
            log_.append(now_, "proxy-created", instance.str(), port.port);
        }
        for (const auto& satisfy : type->satisfies) {
            manager->endpoints[satisfy.iface] = true;
            log_.append(now_, "endpoint-exposed", instance.str(), satisfy.iface);
        }
        set_state(*manager, ManagerState::Instantiated);

        // bind every required port as the target configuration dictates
        bool all_bound = true;
        for (const auto& port : type->requires_) {
            const config::ConnectionRef* connection = nullptr;
            for (const auto& conn : target.connections)
                if (conn.client == instance && conn.port == port.port) connection = &conn;
            if (!connection) {
                all_bound = false;
                log_.append(now_, "bind-missing", instance.str(), port.port);
                continue;
            }
            bind_proxy(*manager, manager->proxies[port.port], connection->server,
                       /*rebind=*/false);
        }
        if (!all_bound) {
            log_.append(now_, "deploy-failure", instance.str(), "unbound required ports remain");
            return;
        }
        set_state(*manager, ManagerState::Bound);

        for (const auto& call : type->initialise)
            log_.append(now_, "initialise", instance.str(),
                        call.object_ref + "." + call.method + "()");
        set_state(*manager, ManagerState::Running);
    }

    void respond(ComponentManager& manager, std::uint64_t request_id, const std::string& payload) {
        auto it = manager.inflight.find(request_id);
        if (it == manager.inflight.end()) return;
        manager.inflight.erase(it);
        log_.append(now_, "respond", manager.identity.str(),
                    "call=" + std::to_string(request_id) + " payload=" + payload);
        schedule_call_event(QueuedEvent::Kind::Response, request_id, now_ + 1, payload);
        if (manager.undeploy_pending && manager.inflight.empty()) {
            manager.undeploy_pending = false;
            // destruction resumes strictly after the response delivery
            QueuedEvent resume;
            resume.kind = QueuedEvent::Kind::FinishUndeploy;
            resume.manager_ref = manager.identity;
            schedule(std::move(resume), now_ + 1);
        }
    }

    void reject_call(std::uint64_t id, const std::string& reason) {
        CallRecord& record = calls_[id];
        record.status = CallRecord::Status::Rejected;
        log_.append(now_, "rejected-call", record.target.host.empty() ? "-" : record.target.str(),
                    "call=" + std::to_string(id) + " " + reason);
        if (!record.external)
            schedule_call_event(QueuedEvent::Kind::Failure, id, now_ + 1, reason);
    }

    void drop_call(std::uint64_t id, const std::string& reason) {
        CallRecord& record = calls_[id];
        record.status = CallRecord::Status::Dropped;
        log_.append(now_, "dropped-call", "-", "call=" + std::to_string(id) + " " + reason);
    }

    void fail_manager(ComponentManager& manager, const std::string& reason) {
        set_state(manager, ManagerState::Failed);
        for (std::uint64_t id : manager.inflight) drop_call(id, reason);
        manager.inflight.clear();
        for (auto& [port, proxy] : manager.proxies) {
            for (std::uint64_t id : proxy.queued) drop_call(id, reason);
            proxy.queued.clear();
            proxy.binding = SmartProxy::Binding::Disabled;
        }
        for (auto& [iface, enabled] : manager.endpoints) enabled = false;
    }

    void dispatch(const QueuedEvent& event) {
        switch (event.kind) {
            case QueuedEvent::Kind::Request: deliver_request(event.call_id); return;
            case QueuedEvent::Kind::Response: deliver_response(event.call_id, event.payload); return;
            case QueuedEvent::Kind::Failure: deliver_failure(event.call_id, event.payload); return;
            case QueuedEvent::Kind::FinishUndeploy: {
                ComponentManager* manager = find_manager(event.manager_ref);
                if (manager && manager->state == ManagerState::Destroying)
                    finish_undeploy(*manager);
                return;
            }
        }
    }

    void deliver_request(std::uint64_t id) {
        CallRecord& record = calls_[id];
        ComponentManager* manager = find_manager(record.target);
        if (!manager || manager->state == ManagerState::Terminated ||
            manager->state == ManagerState::Failed) {
            reject_call(id, "target gone");
            return;
        }
        auto endpoint = manager->endpoints.find(record.iface);
        if (endpoint == manager->endpoints.end() || !endpoint->second ||
            manager->state == ManagerState::Destroying) {
            reject_call(id, "endpoint disabled");
            return;
        }
        manager->inflight.insert(id);
        log_.append(now_, "request", record.target.str(),
                    record.iface + " call=" + std::to_string(id) + " payload=" + record.payload);
        Context ctx(*this, *manager);
        ctx.set_current_request(id);
        manager->behavior->on_request(ctx, id, record.iface, record.payload);
    }

    void deliver_response(std::uint64_t id, const std::string& payload) {
        CallRecord& record = calls_[id];
        record.status = CallRecord::Status::Responded;
        record.response = payload;
        if (record.external) {
            log_.append(now_, "response", "-", "call=" + std::to_string(id) + " payload=" + payload);
            return;
        }
        ComponentManager* caller = find_manager(record.caller);
        if (!caller || caller->state == ManagerState::Terminated ||
            caller->state == ManagerState::Failed || !caller->inflight.count(record.parent_request)) {
            drop_call(id, "caller gone");
            return;
        }
        log_.append(now_, "response", record.caller.str(),
                    "call=" + std::to_string(id) + " payload=" + payload);
        Context ctx(*this, *caller);
        ctx.set_current_request(record.parent_request);
        caller->behavior->on_response(ctx, record.parent_request, id, payload);
    }

    void deliver_failure(std::uint64_t id, const std::string& reason) {
        CallRecord& record = calls_[id];
        ComponentManager* caller = find_manager(record.caller);
        if (!caller || caller->state == ManagerState::Terminated ||
            caller->state == ManagerState::Failed || !caller->inflight.count(record.parent_request))
            return;
        Context ctx(*this, *caller);
        ctx.set_current_request(record.parent_request);
        caller->behavior->on_subcall_failed(ctx, record.parent_request, id, reason);
    }

    void finish_undeploy(ComponentManager& manager) {
        for (const auto& call : manager.bundle.descriptor.destroy)
            log_.append(now_, "destroy", manager.identity.str(),
                        call.object_ref + "." + call.method + "()");
        log_.append(now_, "terminate-signal", manager.identity.str(),
                    "thin server may reclaim the process");
        set_state(manager, ManagerState::Terminated);
    }
};

} // namespace deladas::sim

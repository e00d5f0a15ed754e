#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace deladas::sim {

/// Surface a behavior uses to talk back to the runtime: reply to a request
/// it is serving, or call out through one of its component's required ports.
class BehaviorContext {
public:
    virtual ~BehaviorContext() = default;

    /// Issues a call through a required port. Returns the sub-call id; the
    /// response arrives via on_response.
    virtual std::uint64_t call_out(const std::string& port, const std::string& payload) = 0;

    /// Completes an in-flight request with a response payload.
    virtual void respond(std::uint64_t request_id, const std::string& payload) = 0;
};

/// Scripted stand-in for a component implementation. Real code is never
/// shipped or executed; behaviors reproduce only the observable semantics
/// (responses, outgoing calls).
class Behavior {
public:
    virtual ~Behavior() = default;

    virtual void on_request(BehaviorContext& ctx, std::uint64_t request_id,
                            const std::string& iface, const std::string& payload) = 0;

    virtual void on_response(BehaviorContext& ctx, std::uint64_t request_id,
                             std::uint64_t subcall_id, const std::string& payload) {
        (void)ctx;
        (void)request_id;
        (void)subcall_id;
        (void)payload;
    }

    virtual void on_subcall_failed(BehaviorContext& ctx, std::uint64_t request_id,
                                   std::uint64_t subcall_id, const std::string& reason) {
        (void)subcall_id;
        ctx.respond(request_id, "error:" + reason);
    }
};

namespace behaviors {

/// Default behavior for classes without a scripted handler.
class Echo : public Behavior {
public:
    void on_request(BehaviorContext& ctx, std::uint64_t request_id, const std::string&,
                    const std::string& payload) override {
        ctx.respond(request_id, "ok:" + payload);
    }
};

inline std::optional<std::pair<long long, long long>> parse_two_ints(const std::string& text) {
    std::istringstream in(text);
    long long a = 0, b = 0;
    if (!(in >> a >> b)) return std::nullopt;
    return std::make_pair(a, b);
}

class Addition : public Behavior {
public:
    void on_request(BehaviorContext& ctx, std::uint64_t request_id, const std::string&,
                    const std::string& payload) override {
        auto args = parse_two_ints(payload);
        if (!args) {
            ctx.respond(request_id, "error:bad-arguments");
            return;
        }
        ctx.respond(request_id, std::to_string(args->first + args->second));
    }
};

class Multiplication : public Behavior {
public:
    void on_request(BehaviorContext& ctx, std::uint64_t request_id, const std::string&,
                    const std::string& payload) override {
        auto args = parse_two_ints(payload);
        if (!args) {
            ctx.respond(request_id, "error:bad-arguments");
            return;
        }
        ctx.respond(request_id, std::to_string(args->first * args->second));
    }
};

/// Serves "a b c" as (a + b) * c by first consulting the addition port and
/// then the multiplication port.
class Maths : public Behavior {
public:
    void on_request(BehaviorContext& ctx, std::uint64_t request_id, const std::string&,
                    const std::string& payload) override {
        std::istringstream in(payload);
        long long a = 0, b = 0, c = 0;
        if (!(in >> a >> b >> c)) {
            ctx.respond(request_id, "error:bad-arguments");
            return;
        }
        PendingRequest pending;
        pending.factor = c;
        pending.stage = PendingRequest::Stage::AwaitSum;
        std::uint64_t subcall =
            ctx.call_out("addition", std::to_string(a) + " " + std::to_string(b));
        pending.subcall = subcall;
        pending_[request_id] = pending;
    }

    void on_response(BehaviorContext& ctx, std::uint64_t request_id, std::uint64_t subcall_id,
                     const std::string& payload) override {
        auto it = pending_.find(request_id);
        if (it == pending_.end() || it->second.subcall != subcall_id) return;
        PendingRequest& pending = it->second;
        if (pending.stage == PendingRequest::Stage::AwaitSum) {
            pending.stage = PendingRequest::Stage::AwaitProduct;
            pending.subcall = ctx.call_out(
                "multiplication", payload + " " + std::to_string(pending.factor));
            return;
        }
        pending_.erase(it);
        ctx.respond(request_id, payload);
    }

    void on_subcall_failed(BehaviorContext& ctx, std::uint64_t request_id, std::uint64_t,
                           const std::string& reason) override {
        pending_.erase(request_id);
        ctx.respond(request_id, "error:" + reason);
    }

private:
    struct PendingRequest {
        enum class Stage { AwaitSum, AwaitProduct } stage = Stage::AwaitSum;
        std::uint64_t subcall = 0;
        long long factor = 0;
    };
    std::map<std::uint64_t, PendingRequest> pending_;
};

} // namespace behaviors

/// Maps implementation class names to behavior factories. The maths example
/// handlers are registered by default; unknown classes fall back to Echo.
class BehaviorRegistry {
public:
    using Factory = std::function<std::unique_ptr<Behavior>()>;

    BehaviorRegistry() {
        register_class("com.math.AdditionService",
                       [] { return std::make_unique<behaviors::Addition>(); });
        register_class("com.math.MultiplicationService",
                       [] { return std::make_unique<behaviors::Multiplication>(); });
        register_class("com.math.MathsService", [] { return std::make_unique<behaviors::Maths>(); });
    }

    void register_class(std::string class_name, Factory factory) {
        factories_[std::move(class_name)] = std::move(factory);
    }

    std::unique_ptr<Behavior> instantiate(const std::string& class_name) const {
        auto it = factories_.find(class_name);
        if (it != factories_.end()) return it->second();
        return std::make_unique<behaviors::Echo>();
    }

private:
    std::map<std::string, Factory> factories_;
};

} // namespace deladas::sim

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deladas/ast.hpp"

namespace deladas::dsl {

// ---------------------------------------------------------------------------
// Resolved desired-state description
// ---------------------------------------------------------------------------

struct Interface {
    std::string name;
    std::string impl_type;
    std::string specification;
    std::string implementation;
};

struct RequiredPort {
    std::string iface;
    std::string port;
    friend bool operator==(const RequiredPort&, const RequiredPort&) = default;
};

/// Fully resolved property: declaration plus binding. Bindings are unbound
/// only inside templates.
struct PropertySpec {
    enum class Binding { Unbound, Literal, Provider };
    std::string name;
    bool dynamic = false;
    ValueType type = ValueType::Int;
    Binding binding = Binding::Unbound;
    dsl::Literal value;       // Binding::Literal
    MethodRef provider;       // Binding::Provider
};

struct Template {
    std::string name;
    std::vector<std::string> provides;
    std::vector<RequiredPort> requires_;
    std::vector<PropertySpec> properties;
};

struct Instantiate {
    std::string object_ref;
    std::string class_name;
    std::vector<Literal> arguments;
};

struct SatisfySpec {
    std::string iface;
    std::string object_ref;
};

struct BindSpec {
    std::string port;
    MethodRef setter;
};

struct ComponentType {
    std::string name;
    std::optional<std::string> extends;
    std::vector<std::string> provides;       // merged with template
    std::vector<RequiredPort> requires_;     // merged with template
    std::string implementation;
    Instantiate instantiate;
    std::vector<SatisfySpec> satisfies;
    std::vector<BindSpec> binds;
    std::vector<MethodRef> initialise;
    std::vector<MethodRef> destroy;
    std::vector<PropertySpec> properties;    // merged, all bound

    const PropertySpec* find_property(const std::string& prop) const {
        for (const auto& p : properties)
            if (p.name == prop) return &p;
        return nullptr;
    }
    const RequiredPort* find_port(const std::string& port) const {
        for (const auto& r : requires_)
            if (r.port == port) return &r;
        return nullptr;
    }
    bool provides_interface(const std::string& iface) const {
        return std::find(provides.begin(), provides.end(), iface) != provides.end();
    }
};

struct HostTemplate {
    std::string name;
    std::vector<std::pair<std::string, Literal>> properties;
};

struct Host {
    std::string name;
    std::optional<std::string> extends;
    std::vector<std::pair<std::string, Literal>> properties;  // merged, host overrides template

    const Literal* find_property(const std::string& prop) const {
        for (const auto& [name, value] : properties)
            if (name == prop) return &value;
        return nullptr;
    }
};

struct ConstraintSet {
    std::string name;
    ExprPtr expr;
};

struct OptimiseDirective {
    bool maximize = false;
    Term term;
};

struct DesiredStateDescription {
    std::string name = "dsd";   // caller-supplied label, typically the file stem
    std::vector<Interface> interfaces;
    std::vector<Template> templates;
    std::vector<ComponentType> component_types;
    std::vector<HostTemplate> host_templates;
    std::vector<Host> hosts;
    std::vector<ConstraintSet> constraint_sets;
    std::optional<OptimiseDirective> optimise;
    int max_instances_per_host = 1;

    const Interface* find_interface(const std::string& name_) const {
        for (const auto& i : interfaces)
            if (i.name == name_) return &i;
        return nullptr;
    }
    const Template* find_template(const std::string& name_) const {
        for (const auto& t : templates)
            if (t.name == name_) return &t;
        return nullptr;
    }
    const ComponentType* find_component_type(const std::string& name_) const {
        for (const auto& t : component_types)
            if (t.name == name_) return &t;
        return nullptr;
    }
    const Host* find_host(const std::string& name_) const {
        for (const auto& h : hosts)
            if (h.name == name_) return &h;
        return nullptr;
    }

    /// Concrete component types matched by a quantifier naming either a
    /// component type or a template.
    std::vector<const ComponentType*> types_matching(const std::string& name_) const {
        std::vector<const ComponentType*> out;
        if (const ComponentType* ct = find_component_type(name_)) {
            out.push_back(ct);
            return out;
        }
        if (find_template(name_)) {
            for (const auto& ct : component_types)
                if (ct.extends && *ct.extends == name_) out.push_back(&ct);
        }
        return out;
    }
};

namespace detail {

inline bool mentions_dynamic_property_impl(const ConstraintExpr& expr,
                                           const DesiredStateDescription& dsd,
                                           std::map<std::string, std::string>& scope) {
    auto term_dynamic = [&](const Term& term) {
        if (term.kind != Term::Kind::ComponentProperty) return false;
        auto it = scope.find(term.var);
        if (it == scope.end()) return false;
        for (const ComponentType* ct : dsd.types_matching(it->second)) {
            const PropertySpec* prop = ct->find_property(term.prop);
            if (prop && prop->dynamic) return true;
        }
        return false;
    };
    switch (expr.kind) {
        case ConstraintExpr::Kind::And:
        case ConstraintExpr::Kind::Or:
        case ConstraintExpr::Kind::Not:
            for (const auto& child : expr.children)
                if (mentions_dynamic_property_impl(*child, dsd, scope)) return true;
            return false;
        case ConstraintExpr::Kind::Forall: {
            auto saved = scope;
            if (!expr.over_hosts) scope[expr.quant_var] = expr.quant_type;
            bool result = mentions_dynamic_property_impl(*expr.body, dsd, scope);
            scope = std::move(saved);
            return result;
        }
        case ConstraintExpr::Kind::Compare:
            return term_dynamic(expr.lhs) || term_dynamic(expr.rhs);
    }
    return false;
}

} // namespace detail

/// True when any component-property access in the expression names a
/// property that is dynamic for a type its quantifier can bind. Such
/// predicates cannot be compiled; they become runtime assertions.
inline bool mentions_dynamic_property(const ConstraintExpr& expr,
                                      const DesiredStateDescription& dsd) {
    std::map<std::string, std::string> scope;
    return detail::mentions_dynamic_property_impl(expr, dsd, scope);
}

} // namespace deladas::dsl

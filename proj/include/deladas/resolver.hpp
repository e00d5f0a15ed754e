#pragma once

#include <set>
#include <unordered_map>
#include <unordered_set>

#include "deladas/dsd.hpp"
#include "deladas/parser.hpp"

namespace deladas::dsl {

struct ResolveResult {
    std::optional<DesiredStateDescription> dsd;  // present iff no errors
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return dsd.has_value(); }
};

namespace detail {

class Resolver {
public:
    Resolver(const AstDsd& ast, std::string name) : ast_(ast) { dsd_.name = std::move(name); }

    ResolveResult run() {
        resolve_interfaces();
        resolve_templates();
        resolve_component_types();
        resolve_host_templates();
        resolve_hosts();
        resolve_settings();
        resolve_constraint_sets();
        resolve_optimise();

        ResolveResult result;
        result.diagnostics = std::move(diags_);
        if (!has_errors(result.diagnostics)) result.dsd = std::move(dsd_);
        return result;
    }

private:
    const AstDsd& ast_;
    DesiredStateDescription dsd_;
    std::vector<Diagnostic> diags_;

    void error(SourcePos pos, std::string message) {
        diags_.push_back({Severity::Error, pos, std::move(message)});
    }
    void warning(SourcePos pos, std::string message) {
        diags_.push_back({Severity::Warning, pos, std::move(message)});
    }

    template <class Decl>
    bool check_unique(std::set<std::string>& seen, const Decl& decl, const char* kind) {
        if (!seen.insert(decl.name).second) {
            error(decl.pos, std::string("duplicate ") + kind + " '" + decl.name + "'");
            return false;
        }
        return true;
    }

    void resolve_interfaces() {
        std::set<std::string> seen;
        for (const auto& decl : ast_.interfaces) {
            if (!check_unique(seen, decl, "interface")) continue;
            if (decl.impl_type.empty() || decl.specification.empty() || decl.implementation.empty())
                error(decl.pos, "interface '" + decl.name +
                                    "' must define type, specification and implementation");
            dsd_.interfaces.push_back({decl.name, decl.impl_type, decl.specification, decl.implementation});
        }
    }

    void check_interface_exists(const std::string& name, SourcePos pos) {
        if (!dsd_.find_interface(name)) error(pos, "unresolved interface '" + name + "'");
    }

    std::vector<PropertySpec> resolve_property_clauses(const std::vector<PropertyClause>& clauses,
                                                       bool allow_unbound, SourcePos decl_pos) {
        std::vector<PropertySpec> props;
        auto find = [&](const std::string& name) -> PropertySpec* {
            for (auto& p : props)
                if (p.name == name) return &p;
            return nullptr;
        };
        for (const auto& clause : clauses) {
            switch (clause.kind) {
                case PropertyClause::Kind::Declare: {
                    if (find(clause.name)) {
                        error(clause.pos, "duplicate property '" + clause.name + "'");
                        break;
                    }
                    PropertySpec p;
                    p.name = clause.name;
                    p.dynamic = clause.dynamic;
                    p.type = clause.type;
                    props.push_back(std::move(p));
                    break;
                }
                case PropertyClause::Kind::LiteralBinding: {
                    PropertySpec* existing = find(clause.name);
                    if (existing) {
                        if (existing->dynamic) {
                            error(clause.pos, "dynamic property '" + clause.name +
                                                  "' cannot be bound to a literal");
                            break;
                        }
                        if (existing->type != literal_type(clause.value)) {
                            error(clause.pos, "property '" + clause.name + "' bound to a literal of the wrong type");
                            break;
                        }
                        existing->binding = PropertySpec::Binding::Literal;
                        existing->value = clause.value;
                    } else {
                        // component-local property introduction
                        PropertySpec p;
                        p.name = clause.name;
                        p.dynamic = false;
                        p.type = literal_type(clause.value);
                        p.binding = PropertySpec::Binding::Literal;
                        p.value = clause.value;
                        props.push_back(std::move(p));
                    }
                    break;
                }
                case PropertyClause::Kind::ProviderBinding: {
                    PropertySpec* existing = find(clause.name);
                    if (existing) {
                        if (!existing->dynamic) {
                            error(clause.pos, "constant property '" + clause.name +
                                                  "' cannot be provided dynamically");
                            break;
                        }
                        existing->binding = PropertySpec::Binding::Provider;
                        existing->provider = clause.provider;
                    } else {
                        PropertySpec p;
                        p.name = clause.name;
                        p.dynamic = true;
                        p.type = ValueType::Int;
                        p.binding = PropertySpec::Binding::Provider;
                        p.provider = clause.provider;
                        props.push_back(std::move(p));
                    }
                    break;
                }
            }
        }
        if (!allow_unbound) {
            for (const auto& p : props)
                if (p.binding == PropertySpec::Binding::Unbound)
                    error(decl_pos, "property '" + p.name + "' is declared but never bound");
        }
        return props;
    }

    void resolve_templates() {
        std::set<std::string> seen;
        for (const auto& decl : ast_.templates) {
            if (!check_unique(seen, decl, "template")) continue;
            Template tmpl;
            tmpl.name = decl.name;
            for (const auto& iface : decl.provides) {
                check_interface_exists(iface, decl.pos);
                tmpl.provides.push_back(iface);
            }
            std::set<std::string> ports;
            for (const auto& req : decl.requires_) {
                check_interface_exists(req.iface, req.pos);
                if (!ports.insert(req.port).second)
                    error(req.pos, "duplicate port '" + req.port + "' in template '" + decl.name + "'");
                tmpl.requires_.push_back({req.iface, req.port});
            }
            tmpl.properties = resolve_property_clauses(decl.properties, /*allow_unbound=*/true, decl.pos);
            dsd_.templates.push_back(std::move(tmpl));
        }
    }

    void resolve_component_types() {
        std::set<std::string> seen;
        for (const auto& t : dsd_.templates) seen.insert(t.name);  // shared namespace with templates
        for (const auto& decl : ast_.component_types) {
            if (!seen.insert(decl.name).second) {
                error(decl.pos, "duplicate component type '" + decl.name + "'");
                continue;
            }
            ComponentType ct;
            ct.name = decl.name;
            ct.extends = decl.extends;
            ct.implementation = decl.implementation;

            const Template* base = nullptr;
            if (decl.extends) {
                base = dsd_.find_template(*decl.extends);
                if (!base) error(decl.pos, "unresolved template '" + *decl.extends + "'");
            }

            // provides/requires: template first, then own declarations (union).
            std::set<std::string> provide_set;
            std::set<std::string> port_set;
            if (base) {
                for (const auto& p : base->provides)
                    if (provide_set.insert(p).second) ct.provides.push_back(p);
                for (const auto& r : base->requires_)
                    if (port_set.insert(r.port).second) ct.requires_.push_back(r);
            }
            for (const auto& p : decl.provides) {
                check_interface_exists(p, decl.pos);
                if (provide_set.insert(p).second) ct.provides.push_back(p);
            }
            for (const auto& r : decl.requires_) {
                check_interface_exists(r.iface, r.pos);
                if (port_set.insert(r.port).second) {
                    ct.requires_.push_back({r.iface, r.port});
                } else if (ct.find_port(r.port)->iface != r.iface) {
                    error(r.pos, "port '" + r.port + "' redeclared with a different interface");
                }
            }

            if (!decl.instantiate) {
                error(decl.pos, "component type '" + decl.name + "' has no instantiate clause");
                continue;
            }
            ct.instantiate = {decl.instantiate->object_ref, decl.instantiate->class_name,
                              decl.instantiate->arguments};
            const std::string& ref = ct.instantiate.object_ref;

            // satisfy: every provided interface covered exactly once.
            std::set<std::string> satisfied;
            for (const auto& sat : decl.satisfies) {
                if (sat.object_ref != ref)
                    error(sat.pos, "satisfy references unknown object '" + sat.object_ref + "'");
                if (!provide_set.count(sat.iface))
                    error(sat.pos, "satisfy names interface '" + sat.iface +
                                       "' which '" + decl.name + "' does not provide");
                else if (!satisfied.insert(sat.iface).second)
                    error(sat.pos, "interface '" + sat.iface + "' satisfied more than once");
                ct.satisfies.push_back({sat.iface, sat.object_ref});
            }
            for (const auto& p : ct.provides)
                if (!satisfied.count(p))
                    error(decl.pos, "missing satisfy for provided interface '" + p +
                                        "' in component type '" + decl.name + "'");

            // bind: every required port covered exactly once.
            std::set<std::string> bound;
            for (const auto& b : decl.binds) {
                if (b.setter.object_ref != ref)
                    error(b.pos, "bind references unknown object '" + b.setter.object_ref + "'");
                if (!port_set.count(b.port))
                    error(b.pos, "bind names unknown port '" + b.port + "'");
                else if (!bound.insert(b.port).second)
                    error(b.pos, "port '" + b.port + "' bound more than once");
                ct.binds.push_back({b.port, b.setter});
            }
            for (const auto& r : ct.requires_)
                if (!bound.count(r.port))
                    error(decl.pos, "missing bind for required port '" + r.port +
                                        "' in component type '" + decl.name + "'");

            for (const auto& call : decl.initialise) {
                if (call.object_ref != ref)
                    error(decl.pos, "initialise references unknown object '" + call.object_ref + "'");
                ct.initialise.push_back(call);
            }
            for (const auto& call : decl.destroy) {
                if (call.object_ref != ref)
                    error(decl.pos, "destroy references unknown object '" + call.object_ref + "'");
                ct.destroy.push_back(call);
            }

            // properties: template declarations first, then the component's clauses.
            std::vector<PropertyClause> merged;
            if (base) {
                for (const auto& p : base->properties) {
                    PropertyClause c;
                    c.kind = PropertyClause::Kind::Declare;
                    c.name = p.name;
                    c.dynamic = p.dynamic;
                    c.type = p.type;
                    c.pos = decl.pos;
                    merged.push_back(std::move(c));
                }
            }
            for (const auto& c : decl.properties) merged.push_back(c);
            ct.properties = resolve_property_clauses(merged, /*allow_unbound=*/false, decl.pos);
            for (const auto& p : ct.properties) {
                if (p.binding == PropertySpec::Binding::Provider && p.provider.object_ref != ref)
                    error(decl.pos, "property provider references unknown object '" +
                                        p.provider.object_ref + "'");
            }

            dsd_.component_types.push_back(std::move(ct));
        }
    }

    void resolve_host_templates() {
        std::set<std::string> seen;
        for (const auto& decl : ast_.host_templates) {
            if (!check_unique(seen, decl, "host template")) continue;
            dsd_.host_templates.push_back({decl.name, decl.properties});
        }
    }

    static void merge_host_property(std::vector<std::pair<std::string, Literal>>& props,
                                    const std::string& name, const Literal& value) {
        for (auto& [n, v] : props) {
            if (n == name) {
                v = value;  // override-by-name
                return;
            }
        }
        props.emplace_back(name, value);
    }

    void resolve_hosts() {
        std::set<std::string> seen;
        for (const auto& decl : ast_.hosts) {
            if (!check_unique(seen, decl, "host")) continue;
            Host host;
            host.name = decl.name;
            host.extends = decl.extends;
            if (decl.extends) {
                const HostTemplate* tmpl = nullptr;
                for (const auto& t : dsd_.host_templates)
                    if (t.name == *decl.extends) tmpl = &t;
                if (!tmpl) {
                    error(decl.pos, "unresolved host template '" + *decl.extends + "'");
                } else {
                    for (const auto& [name, value] : tmpl->properties)
                        merge_host_property(host.properties, name, value);
                }
            }
            for (const auto& [name, value] : decl.properties)
                merge_host_property(host.properties, name, value);
            dsd_.hosts.push_back(std::move(host));
        }
    }

    void resolve_settings() {
        if (ast_.deployment) {
            if (ast_.deployment->max_instances_per_host < 1)
                error(ast_.deployment->pos, "maxInstancesPerHost must be positive");
            else
                dsd_.max_instances_per_host = static_cast<int>(ast_.deployment->max_instances_per_host);
        }
    }

    // --- constraint expression checking -------------------------------------

    struct QuantifiedVar {
        bool is_host = false;
        std::string type_name;  // component quantifiers: type or template name
    };
    using Scope = std::unordered_map<std::string, QuantifiedVar>;

    void check_component_property(const std::string& var, const std::string& prop,
                                  const Scope& scope, SourcePos pos) {
        auto it = scope.find(var);
        if (it == scope.end()) {
            error(pos, "unresolved variable '" + var + "'");
            return;
        }
        if (it->second.is_host) {
            error(pos, "variable '" + var + "' names a host; use getHost(...) for host properties");
            return;
        }
        auto types = dsd_.types_matching(it->second.type_name);
        for (const ComponentType* ct : types) {
            const PropertySpec* p = ct->find_property(prop);
            if (!p) {
                error(pos, "component type '" + ct->name + "' has no property '" + prop + "'");
            } else if (p->type != ValueType::Int) {
                error(pos, "property '" + prop + "' of '" + ct->name +
                               "' is not integer-valued; type mismatch in comparison");
            }
        }
    }

    void check_term(const Term& term, const Scope& scope) {
        switch (term.kind) {
            case Term::Kind::IntLiteral:
                return;
            case Term::Kind::Card:
                check_set_term(term.set, scope);
                return;
            case Term::Kind::HostProperty: {
                auto it = scope.find(term.var);
                if (it == scope.end()) {
                    error(term.pos, "unresolved variable '" + term.var + "'");
                    return;
                }
                if (it->second.is_host) {
                    error(term.pos, "getHost expects a component variable");
                    return;
                }
                // The property must be integer-valued wherever it appears.
                bool found = false;
                for (const auto& host : dsd_.hosts) {
                    if (const Literal* v = host.find_property(term.prop)) {
                        found = true;
                        if (literal_type(*v) != ValueType::Int)
                            error(term.pos, "host property '" + term.prop +
                                                "' is not integer-valued; type mismatch in comparison");
                    }
                }
                if (!found && !dsd_.hosts.empty())
                    error(term.pos, "no host declares property '" + term.prop + "'");
                return;
            }
            case Term::Kind::ComponentProperty:
                check_component_property(term.var, term.prop, scope, term.pos);
                return;
        }
    }

    void check_set_term(const SetTerm& set, const Scope& scope) {
        switch (set.kind) {
            case SetTerm::Kind::Connections: {
                auto it = scope.find(set.subject);
                if (it == scope.end()) {
                    error(set.pos, "unresolved variable '" + set.subject + "'");
                    return;
                }
                if (it->second.is_host) {
                    error(set.pos, "connections(...) expects a component variable");
                    return;
                }
                check_interface_exists(set.iface, set.pos);
                return;
            }
            case SetTerm::Kind::Components: {
                auto it = scope.find(set.subject);
                if (it != scope.end()) {
                    if (!it->second.is_host)
                        error(set.pos, "components(...) expects a host, got component variable '" +
                                           set.subject + "'");
                    return;
                }
                if (!dsd_.find_host(set.subject))
                    error(set.pos, "unresolved host '" + set.subject + "'");
                return;
            }
            case SetTerm::Kind::InstancesOf: {
                if (dsd_.types_matching(set.type_name).empty())
                    error(set.pos, "unresolved component type or template '" + set.type_name + "'");
                return;
            }
        }
    }

    void check_expr(const ConstraintExpr& expr, Scope scope) {
        switch (expr.kind) {
            case ConstraintExpr::Kind::And:
            case ConstraintExpr::Kind::Or:
            case ConstraintExpr::Kind::Not:
                for (const auto& child : expr.children) check_expr(*child, scope);
                return;
            case ConstraintExpr::Kind::Forall: {
                QuantifiedVar var;
                var.is_host = expr.over_hosts;
                if (!expr.over_hosts) {
                    var.type_name = expr.quant_type;
                    if (dsd_.types_matching(expr.quant_type).empty())
                        error(expr.pos,
                              "unresolved component type or template '" + expr.quant_type + "'");
                }
                scope[expr.quant_var] = var;
                check_expr(*expr.body, std::move(scope));
                return;
            }
            case ConstraintExpr::Kind::Compare:
                check_term(expr.lhs, scope);
                check_term(expr.rhs, scope);
                return;
        }
    }

    void resolve_constraint_sets() {
        std::set<std::string> seen;
        for (const auto& decl : ast_.constraint_sets) {
            if (!check_unique(seen, decl, "constraint set")) continue;
            check_expr(*decl.expr, {});
            dsd_.constraint_sets.push_back({decl.name, decl.expr});
        }
    }

    void resolve_optimise() {
        if (!ast_.optimise) return;
        const Term& term = ast_.optimise->term;
        // The objective must be closed: no quantified variables in scope.
        if (term.kind == Term::Kind::HostProperty || term.kind == Term::Kind::ComponentProperty) {
            error(term.pos, "optimisation term must not reference quantified variables");
            return;
        }
        check_term(term, {});
        dsd_.optimise = OptimiseDirective{ast_.optimise->maximize, term};
    }
};

} // namespace detail

/// Resolves a parsed AST into a DesiredStateDescription: expands template
/// inheritance, merges host-template properties, resolves every name, and
/// checks the component-type completeness rules. `name` labels the DSD
/// (typically the source file stem) and feeds into configuration references.
inline ResolveResult resolve(const AstDsd& ast, std::string name = "dsd") {
    return detail::Resolver(ast, std::move(name)).run();
}

/// Convenience: tokenize + parse + resolve.
inline ResolveResult load_dsd(std::string_view source, std::string name = "dsd") {
    ParseResult parsed = parse_dsd(source);
    if (!parsed.ok()) {
        ResolveResult result;
        result.diagnostics = std::move(parsed.diagnostics);
        return result;
    }
    return resolve(*parsed.ast, std::move(name));
}

} // namespace deladas::dsl

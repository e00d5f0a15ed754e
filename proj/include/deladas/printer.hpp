#pragma once

#include <sstream>
#include <string>

#include "deladas/dsd.hpp"

namespace deladas::dsl {

namespace detail {

inline void print_string_literal(std::ostream& os, const std::string& s) {
    os << '"';
    for (char c : s) {
        if (c == '"' || c == '\\') os << '\\';
        os << c;
    }
    os << '"';
}

inline void print_literal(std::ostream& os, const Literal& lit) {
    if (const auto* i = std::get_if<long long>(&lit)) os << *i;
    else print_string_literal(os, std::get<std::string>(lit));
}

inline void print_term(std::ostream& os, const Term& term);

inline void print_set_term(std::ostream& os, const SetTerm& set) {
    switch (set.kind) {
        case SetTerm::Kind::Connections:
            os << "connections(" << set.subject << "." << set.iface << ")";
            return;
        case SetTerm::Kind::Components:
            os << "getComponents(" << set.subject << ")";
            return;
        case SetTerm::Kind::InstancesOf:
            os << "instancesOf(" << set.type_name << " in deployment)";
            return;
    }
}

inline void print_term(std::ostream& os, const Term& term) {
    switch (term.kind) {
        case Term::Kind::IntLiteral:
            os << term.value;
            return;
        case Term::Kind::Card:
            os << "card(";
            print_set_term(os, term.set);
            os << ")";
            return;
        case Term::Kind::HostProperty:
            os << "getHost(" << term.var << ")." << term.prop;
            return;
        case Term::Kind::ComponentProperty:
            os << term.var << "." << term.prop;
            return;
    }
}

inline void print_expr(std::ostream& os, const ConstraintExpr& expr, const std::string& indent) {
    switch (expr.kind) {
        case ConstraintExpr::Kind::And:
        case ConstraintExpr::Kind::Or: {
            const char* sep = expr.kind == ConstraintExpr::Kind::And ? "and" : "or";
            bool first = true;
            for (const auto& child : expr.children) {
                if (!first) os << "\n" << indent << sep << "\n";
                first = false;
                bool paren = child->kind == ConstraintExpr::Kind::And ||
                             child->kind == ConstraintExpr::Kind::Or;
                os << indent;
                if (paren) os << "(";
                print_expr(os, *child, indent);
                if (paren) os << ")";
            }
            return;
        }
        case ConstraintExpr::Kind::Not:
            os << "not (";
            print_expr(os, *expr.children.front(), indent);
            os << ")";
            return;
        case ConstraintExpr::Kind::Forall:
            os << "forall ";
            if (expr.over_hosts) os << "host";
            else os << expr.quant_type;
            os << " " << expr.quant_var << " in deployment (";
            print_expr(os, *expr.body, indent);
            os << ")";
            return;
        case ConstraintExpr::Kind::Compare:
            print_term(os, expr.lhs);
            os << " " << compare_op_text(expr.op) << " ";
            print_term(os, expr.rhs);
            return;
    }
}

inline void print_properties(std::ostream& os, const std::vector<PropertySpec>& props,
                             const std::string& indent) {
    if (props.empty()) return;
    os << indent << "properties (\n";
    for (const auto& p : props) {
        os << indent << "  ";
        switch (p.binding) {
            case PropertySpec::Binding::Unbound:
                os << (p.dynamic ? "dynamic " : "constant ")
                   << (p.type == ValueType::Int ? "int " : "string ") << p.name;
                break;
            case PropertySpec::Binding::Literal:
                os << p.name << " = ";
                print_literal(os, p.value);
                break;
            case PropertySpec::Binding::Provider:
                os << p.name << " providedBy " << p.provider.object_ref << "."
                   << p.provider.method << "()";
                break;
        }
        os << "\n";
    }
    os << indent << ")\n";
}

inline void print_host_properties(std::ostream& os,
                                  const std::vector<std::pair<std::string, Literal>>& props) {
    os << " (";
    bool first = true;
    for (const auto& [name, value] : props) {
        if (!first) os << ", ";
        first = false;
        os << name << " = ";
        print_literal(os, value);
    }
    os << ")";
}

} // namespace detail

/// Canonical pretty-print of a resolved DSD. The output reparses and
/// re-resolves to a structurally equal description; inheritance merges are
/// shown fully expanded (re-resolving them is idempotent).
inline std::string pretty_print(const DesiredStateDescription& dsd) {
    std::ostringstream os;
    using namespace detail;

    for (const auto& i : dsd.interfaces) {
        os << "interface " << i.name << " (\n";
        os << "  type = ";
        print_string_literal(os, i.impl_type);
        os << "\n  specification = ";
        print_string_literal(os, i.specification);
        os << "\n  implementation = ";
        print_string_literal(os, i.implementation);
        os << "\n)\n\n";
    }

    for (const auto& t : dsd.templates) {
        os << "template " << t.name << " (\n";
        for (const auto& p : t.provides) os << "  provides interface " << p << "\n";
        if (!t.requires_.empty()) {
            os << "  requires ";
            bool first = true;
            for (const auto& r : t.requires_) {
                if (!first) os << ", ";
                first = false;
                os << r.iface << " " << r.port;
            }
            os << "\n";
        }
        print_properties(os, t.properties, "  ");
        os << ")\n\n";
    }

    for (const auto& ct : dsd.component_types) {
        os << "component type " << ct.name;
        if (ct.extends) os << " extends " << *ct.extends;
        os << " (\n";
        for (const auto& p : ct.provides) os << "  provides interface " << p << "\n";
        if (!ct.requires_.empty()) {
            os << "  requires ";
            bool first = true;
            for (const auto& r : ct.requires_) {
                if (!first) os << ", ";
                first = false;
                os << r.iface << " " << r.port;
            }
            os << "\n";
        }
        if (!ct.implementation.empty()) {
            os << "  implementation ";
            print_string_literal(os, ct.implementation);
            os << "\n";
        }
        os << "  instantiate " << ct.instantiate.object_ref << " with " << ct.instantiate.class_name
           << "(";
        bool first = true;
        for (const auto& arg : ct.instantiate.arguments) {
            if (!first) os << ", ";
            first = false;
            print_literal(os, arg);
        }
        os << ")\n";
        for (const auto& s : ct.satisfies)
            os << "  satisfy " << s.iface << " using " << s.object_ref << "\n";
        for (const auto& b : ct.binds)
            os << "  bind " << b.port << " with " << b.setter.object_ref << "." << b.setter.method
               << "()\n";
        for (const auto& c : ct.initialise)
            os << "  initialise " << c.object_ref << "." << c.method << "()\n";
        for (const auto& c : ct.destroy)
            os << "  destroy " << c.object_ref << "." << c.method << "()\n";
        print_properties(os, ct.properties, "  ");
        os << ")\n\n";
    }

    for (const auto& t : dsd.host_templates) {
        os << "host template " << t.name;
        print_host_properties(os, t.properties);
        os << "\n";
    }
    if (!dsd.host_templates.empty()) os << "\n";

    for (const auto& h : dsd.hosts) {
        os << "host " << h.name;
        if (h.extends) os << " extends " << *h.extends;
        if (!h.properties.empty()) print_host_properties(os, h.properties);
        os << "\n";
    }
    if (!dsd.hosts.empty()) os << "\n";

    os << "deployment (maxInstancesPerHost = " << dsd.max_instances_per_host << ")\n\n";

    for (const auto& cs : dsd.constraint_sets) {
        os << "constraintSet " << cs.name << " (\n";
        detail::print_expr(os, *cs.expr, "  ");
        os << "\n)\n\n";
    }

    if (dsd.optimise) {
        os << "optimise " << (dsd.optimise->maximize ? "maximize" : "minimize") << " ";
        print_term(os, dsd.optimise->term);
        os << "\n";
    }

    return os.str();
}

} // namespace deladas::dsl

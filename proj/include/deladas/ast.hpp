#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "deladas/diagnostics.hpp"

namespace deladas::dsl {

// ---------------------------------------------------------------------------
// Literals and property clauses
// ---------------------------------------------------------------------------

using Literal = std::variant<long long, std::string>;

enum class ValueType { Int, String };

inline ValueType literal_type(const Literal& lit) {
    return std::holds_alternative<long long>(lit) ? ValueType::Int : ValueType::String;
}

/// Reference to a method on the instantiated implementation object,
/// e.g. "mathsServiceImpl.qps()".
struct MethodRef {
    std::string object_ref;
    std::string method;
    friend bool operator==(const MethodRef&, const MethodRef&) = default;
};

/// One entry of a properties ( ... ) block. Three surface forms:
///   constant string vendor            -- declaration (templates)
///   vendor = "CalculusSoftware"       -- literal binding
///   queriesPerSecond providedBy r.m() -- dynamic provider binding
struct PropertyClause {
    enum class Kind { Declare, LiteralBinding, ProviderBinding };
    Kind kind = Kind::Declare;
    std::string name;
    bool dynamic = false;              // Declare
    ValueType type = ValueType::Int;   // Declare
    Literal value;                     // LiteralBinding
    MethodRef provider;                // ProviderBinding
    SourcePos pos;
};

// ---------------------------------------------------------------------------
// Constraint expressions (shared between the raw AST and the resolved DSD)
// ---------------------------------------------------------------------------

enum class CompareOp { Le, Ge, Eq, Lt, Gt };

inline const char* compare_op_text(CompareOp op) {
    switch (op) {
        case CompareOp::Le: return "<=";
        case CompareOp::Ge: return ">=";
        case CompareOp::Eq: return "=";
        case CompareOp::Lt: return "<";
        case CompareOp::Gt: return ">";
    }
    return "?";
}

/// A set-valued term: the argument of card(...).
struct SetTerm {
    enum class Kind {
        Connections,   // connections(var.Interface) -- incoming connections of a provided interface
        Components,    // components(h) / getComponents(h); h is a host var or host name
        InstancesOf,   // instancesOf(Type in deployment)
    };
    Kind kind = Kind::InstancesOf;
    std::string subject;    // Connections: instance var; Components: host var or host name
    std::string iface;      // Connections only
    std::string type_name;  // InstancesOf only
    SourcePos pos;
};

/// An integer-valued term of a comparison.
struct Term {
    enum class Kind {
        IntLiteral,
        Card,              // card(set)
        HostProperty,      // getHost(var).prop
        ComponentProperty, // var.prop
    };
    Kind kind = Kind::IntLiteral;
    long long value = 0;
    SetTerm set;
    std::string var;
    std::string prop;
    SourcePos pos;
};

struct ConstraintExpr;
using ExprPtr = std::shared_ptr<const ConstraintExpr>;

/// Immutable constraint expression tree.
struct ConstraintExpr {
    enum class Kind { And, Or, Not, Forall, Compare };
    Kind kind = Kind::Compare;

    std::vector<ExprPtr> children;  // And/Or: 2+; Not: 1

    // Forall
    bool over_hosts = false;        // forall host h in deployment (...)
    std::string quant_type;         // component type or template name
    std::string quant_var;
    ExprPtr body;

    // Compare
    Term lhs;
    CompareOp op = CompareOp::Le;
    Term rhs;

    SourcePos pos;
};

// ---------------------------------------------------------------------------
// Top-level declarations (unresolved)
// ---------------------------------------------------------------------------

struct AstInterface {
    std::string name;
    std::string impl_type;        // the "type" entry, e.g. "java"
    std::string specification;
    std::string implementation;
    SourcePos pos;
};

struct AstRequire {
    std::string iface;
    std::string port;
    SourcePos pos;
};

struct AstSatisfy {
    std::string iface;
    std::string object_ref;
    SourcePos pos;
};

struct AstBind {
    std::string port;
    MethodRef setter;
    SourcePos pos;
};

struct AstInstantiate {
    std::string object_ref;
    std::string class_name;            // dotted
    std::vector<Literal> arguments;
    SourcePos pos;
};

struct AstTemplate {
    std::string name;
    std::vector<std::string> provides;
    std::vector<AstRequire> requires_;
    std::vector<PropertyClause> properties;
    SourcePos pos;
};

struct AstComponentType {
    std::string name;
    std::optional<std::string> extends;
    std::vector<std::string> provides;
    std::vector<AstRequire> requires_;
    std::string implementation;
    std::optional<AstInstantiate> instantiate;
    std::vector<AstSatisfy> satisfies;
    std::vector<AstBind> binds;
    std::vector<MethodRef> initialise;
    std::vector<MethodRef> destroy;
    std::vector<PropertyClause> properties;
    SourcePos pos;
};

struct AstHostTemplate {
    std::string name;
    std::vector<std::pair<std::string, Literal>> properties;
    SourcePos pos;
};

struct AstHost {
    std::string name;
    std::optional<std::string> extends;
    std::vector<std::pair<std::string, Literal>> properties;
    SourcePos pos;
};

struct AstConstraintSet {
    std::string name;
    ExprPtr expr;
    SourcePos pos;
};

struct AstOptimise {
    bool maximize = false;
    Term term;
    SourcePos pos;
};

struct AstDeployment {
    long long max_instances_per_host = 1;
    SourcePos pos;
};

/// Parse product: every top-level declaration in source order, unresolved.
struct AstDsd {
    std::vector<AstInterface> interfaces;
    std::vector<AstTemplate> templates;
    std::vector<AstComponentType> component_types;
    std::vector<AstHostTemplate> host_templates;
    std::vector<AstHost> hosts;
    std::vector<AstConstraintSet> constraint_sets;
    std::optional<AstOptimise> optimise;
    std::optional<AstDeployment> deployment;
};

} // namespace deladas::dsl

#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "deladas/cdd.hpp"
#include "deladas/csp.hpp"
#include "deladas/dsd.hpp"
#include "deladas/printer.hpp"

namespace deladas::compile {

// ---------------------------------------------------------------------------
// Specialized CSP
// ---------------------------------------------------------------------------

/// A component instance that may be placed: (host, type, index) with index
/// counted 1..maxInstancesPerHost.
struct PotentialInstance {
    int host = 0;   // index into dsd.hosts
    int ctype = 0;  // index into dsd.component_types
    int index = 1;
};

/// A connection that may exist between a client's required port and a
/// compatible provider instance. Only interface-compatible pairs are
/// materialized (pruning).
struct PotentialConnection {
    PotentialInstance client;
    int port = 0;  // index into the client type's requires_
    PotentialInstance server;
};

struct RuntimeAssertion {
    std::string constraint_set;
    int conjunct = 0;  // position within the flattened conjunction
    dsl::ExprPtr expr;
};

struct CompileError {
    SourcePos pos;
    std::string message;
};

/// The compiled problem. Placement variables come first: one binary per
/// (host, type, count) meaning "exactly count instances of type on host".
/// Connection variables follow, one per pruned potential connection.
/// Constraint-set conjuncts are partitioned into the model (static) and
/// runtime assertions (anything touching a dynamic property).
struct SpecializedCsp {
    csp::Model model;

    int host_count = 0;
    int type_count = 0;
    int max_count = 0;
    int placement_total = 0;
    std::vector<PotentialConnection> connections;

    std::vector<RuntimeAssertion> runtime_assertions;
    std::vector<Diagnostic> warnings;
    std::vector<std::string> explain;  // one entry per lowered conjunct

    int placement_var(int host, int ctype, int count) const {
        return (host * type_count + ctype) * max_count + (count - 1);
    }
    int connection_var(int connection_index) const { return placement_total + connection_index; }

    /// existence(host, type, index) = sum of placement indicators with
    /// count >= index; 0/1 under the at-most-one placement constraint.
    std::vector<csp::LinearTerm> existence_terms(const PotentialInstance& inst,
                                                 long long coefficient = 1) const {
        std::vector<csp::LinearTerm> terms;
        for (int c = inst.index; c <= max_count; ++c)
            terms.push_back({coefficient, placement_var(inst.host, inst.ctype, c)});
        return terms;
    }
};

namespace detail {

inline std::string instance_label(const dsl::DesiredStateDescription& dsd,
                                  const PotentialInstance& inst) {
    return dsd.hosts[static_cast<std::size_t>(inst.host)].name + "/" +
           dsd.component_types[static_cast<std::size_t>(inst.ctype)].name + "/" +
           std::to_string(inst.index);
}

inline std::string expr_text(const dsl::ConstraintExpr& expr) {
    std::ostringstream os;
    dsl::detail::print_expr(os, expr, "");
    std::string text = os.str();
    for (char& c : text)
        if (c == '\n') c = ' ';
    return text;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Model generation (Models I & II plus default constraints)
// ---------------------------------------------------------------------------

/// Builds the placement and connection variables for a resolved DSD and adds
/// the default constraints: at most one count indicator per (host, type); a
/// connection may exist only if its server instance exists; and each existing
/// client instance's required port connects to exactly one provider.
inline SpecializedCsp generate_model(const dsl::DesiredStateDescription& dsd) {
    SpecializedCsp out;
    out.host_count = static_cast<int>(dsd.hosts.size());
    out.type_count = static_cast<int>(dsd.component_types.size());
    out.max_count = dsd.max_instances_per_host;

    // Model I: placement indicators
    for (int h = 0; h < out.host_count; ++h)
        for (int t = 0; t < out.type_count; ++t)
            for (int c = 1; c <= out.max_count; ++c)
                out.model.add_binary("place:" +
                                     detail::instance_label(dsd, PotentialInstance{h, t, c}));
    out.placement_total = static_cast<int>(out.model.variable_count());

    for (int h = 0; h < out.host_count; ++h) {
        for (int t = 0; t < out.type_count; ++t) {
            std::vector<csp::LinearTerm> terms;
            for (int c = 1; c <= out.max_count; ++c)
                terms.push_back({1, out.placement_var(h, t, c)});
            out.model.add_linear(std::move(terms), csp::Relation::Le, 1);
        }
    }

    // Model II: potential connections, pruned to interface-compatible pairs
    for (int t = 0; t < out.type_count; ++t) {
        const dsl::ComponentType& client_type = dsd.component_types[static_cast<std::size_t>(t)];
        if (client_type.requires_.empty()) continue;
        for (int h = 0; h < out.host_count; ++h) {
            for (int i = 1; i <= out.max_count; ++i) {
                for (int port = 0; port < static_cast<int>(client_type.requires_.size()); ++port) {
                    const std::string& iface =
                        client_type.requires_[static_cast<std::size_t>(port)].iface;
                    for (int st = 0; st < out.type_count; ++st) {
                        const dsl::ComponentType& server_type =
                            dsd.component_types[static_cast<std::size_t>(st)];
                        if (!server_type.provides_interface(iface)) continue;
                        for (int sh = 0; sh < out.host_count; ++sh) {
                            for (int si = 1; si <= out.max_count; ++si) {
                                PotentialConnection pc{{h, t, i}, port, {sh, st, si}};
                                out.model.add_binary(
                                    "conn:" + detail::instance_label(dsd, pc.client) + "." +
                                    client_type.requires_[static_cast<std::size_t>(port)].port +
                                    "->" + detail::instance_label(dsd, pc.server));
                                out.connections.push_back(pc);
                            }
                        }
                    }
                }
            }
        }
    }

    // Default constraints over Model II
    // (1) y <= existence(server): a connection needs its server instance.
    for (std::size_t k = 0; k < out.connections.size(); ++k) {
        const PotentialConnection& pc = out.connections[k];
        std::vector<csp::LinearTerm> terms;
        terms.push_back({1, out.connection_var(static_cast<int>(k))});
        for (const auto& t : out.existence_terms(pc.server, -1)) terms.push_back(t);
        out.model.add_linear(std::move(terms), csp::Relation::Le, 0);
    }

    // (2) per (client instance, port): sum of outgoing connections equals the
    // client's existence, which realizes both "endpoints must exist" and
    // "exactly one provider per required port".
    std::size_t cursor = 0;
    for (int t = 0; t < out.type_count; ++t) {
        const dsl::ComponentType& client_type = dsd.component_types[static_cast<std::size_t>(t)];
        if (client_type.requires_.empty()) continue;
        for (int h = 0; h < out.host_count; ++h) {
            for (int i = 1; i <= out.max_count; ++i) {
                for (int port = 0; port < static_cast<int>(client_type.requires_.size()); ++port) {
                    std::vector<csp::LinearTerm> terms;
                    while (cursor < out.connections.size() &&
                           out.connections[cursor].client.host == h &&
                           out.connections[cursor].client.ctype == t &&
                           out.connections[cursor].client.index == i &&
                           out.connections[cursor].port == port) {
                        terms.push_back({1, out.connection_var(static_cast<int>(cursor))});
                        ++cursor;
                    }
                    if (terms.empty()) {
                        const std::string& iface =
                            client_type.requires_[static_cast<std::size_t>(port)].iface;
                        if (h == 0 && i == 1)
                            out.warnings.push_back(
                                {Severity::Warning, SourcePos{},
                                 "required interface '" + iface + "' of component type '" +
                                     client_type.name +
                                     "' has no compatible provider; its instances cannot exist"});
                    }
                    for (const auto& term : out.existence_terms(PotentialInstance{h, t, i}, -1))
                        terms.push_back(term);
                    out.model.add_linear(std::move(terms), csp::Relation::Eq, 0);
                }
            }
        }
    }

    return out;
}

// ---------------------------------------------------------------------------
// Constraint lowering
// ---------------------------------------------------------------------------

namespace detail {

struct Comparison {
    const dsl::Term* term;
    dsl::CompareOp op;
    long long bound;
};

/// Normalizes a comparison so the structured term is on the left and maps
/// strict operators onto the solver's <=, >=, = over integers.
inline std::optional<Comparison> normalize_comparison(const dsl::ConstraintExpr& expr) {
    if (expr.kind != dsl::ConstraintExpr::Kind::Compare) return std::nullopt;
    const dsl::Term* term = nullptr;
    dsl::CompareOp op = expr.op;
    long long bound = 0;
    if (expr.rhs.kind == dsl::Term::Kind::IntLiteral &&
        expr.lhs.kind != dsl::Term::Kind::IntLiteral) {
        term = &expr.lhs;
        bound = expr.rhs.value;
    } else if (expr.lhs.kind == dsl::Term::Kind::IntLiteral &&
               expr.rhs.kind != dsl::Term::Kind::IntLiteral) {
        term = &expr.rhs;
        switch (op) {
            case dsl::CompareOp::Le: op = dsl::CompareOp::Ge; break;
            case dsl::CompareOp::Ge: op = dsl::CompareOp::Le; break;
            case dsl::CompareOp::Lt: op = dsl::CompareOp::Gt; break;
            case dsl::CompareOp::Gt: op = dsl::CompareOp::Lt; break;
            case dsl::CompareOp::Eq: break;
        }
        bound = expr.lhs.value;
    } else {
        return std::nullopt;
    }
    switch (op) {
        case dsl::CompareOp::Lt: return Comparison{term, dsl::CompareOp::Le, bound - 1};
        case dsl::CompareOp::Gt: return Comparison{term, dsl::CompareOp::Ge, bound + 1};
        default: return Comparison{term, op, bound};
    }
}

inline csp::Relation to_relation(dsl::CompareOp op) {
    switch (op) {
        case dsl::CompareOp::Le: return csp::Relation::Le;
        case dsl::CompareOp::Ge: return csp::Relation::Ge;
        default: return csp::Relation::Eq;
    }
}

inline bool compare_ints(long long lhs, dsl::CompareOp op, long long rhs) {
    switch (op) {
        case dsl::CompareOp::Le: return lhs <= rhs;
        case dsl::CompareOp::Ge: return lhs >= rhs;
        case dsl::CompareOp::Eq: return lhs == rhs;
        case dsl::CompareOp::Lt: return lhs < rhs;
        case dsl::CompareOp::Gt: return lhs > rhs;
    }
    return false;
}

class Lowerer {
public:
    Lowerer(const dsl::DesiredStateDescription& dsd, SpecializedCsp& csp) : dsd_(dsd), csp_(csp) {}

    void lower_conjunct(const std::string& set_name, int conjunct_index,
                        const dsl::ConstraintExpr& expr) {
        label_ = set_name + "[" + std::to_string(conjunct_index) + "]";
        if (expr.kind == dsl::ConstraintExpr::Kind::Forall && !expr.over_hosts) {
            lower_component_forall(expr);
            return;
        }
        if (expr.kind == dsl::ConstraintExpr::Kind::Forall && expr.over_hosts) {
            lower_host_forall(expr);
            return;
        }
        if (auto cmp = normalize_comparison(expr)) {
            if (cmp->term->kind == dsl::Term::Kind::Card) {
                const dsl::SetTerm& set = cmp->term->set;
                if (set.kind == dsl::SetTerm::Kind::InstancesOf) {
                    lower_instances_of(set.type_name, cmp->op, cmp->bound);
                    return;
                }
                if (set.kind == dsl::SetTerm::Kind::Components) {
                    const dsl::Host* host = dsd_.find_host(set.subject);
                    if (host) {
                        lower_components_of_host(static_cast<int>(host - dsd_.hosts.data()),
                                                 cmp->op, cmp->bound);
                        return;
                    }
                }
            }
        }
        unsupported(expr);
    }

private:
    const dsl::DesiredStateDescription& dsd_;
    SpecializedCsp& csp_;
    std::string label_;

    [[noreturn]] void unsupported(const dsl::ConstraintExpr& expr) {
        throw CompileError{expr.pos, "constraint " + label_ +
                                         " is outside the compile-time fragment: " +
                                         expr_text(expr)};
    }

    std::vector<int> matching_type_indices(const std::string& name, SourcePos pos) {
        std::vector<int> out;
        auto matches = dsd_.types_matching(name);
        if (matches.empty())
            throw CompileError{pos, "unresolved component type or template '" + name + "'"};
        for (const dsl::ComponentType* ct : matches)
            out.push_back(static_cast<int>(ct - dsd_.component_types.data()));
        return out;
    }

    void explain(std::string what) { csp_.explain.push_back(label_ + " -> " + std::move(what)); }

    // (a) forall T v (getHost(v).p <op> k): placement indicators of instances
    // on failing hosts are fixed to zero.
    void lower_host_property(const dsl::ConstraintExpr& forall, const Comparison& cmp) {
        int fixed = 0;
        for (int t : matching_type_indices(forall.quant_type, forall.pos)) {
            for (int h = 0; h < csp_.host_count; ++h) {
                const dsl::Host& host = dsd_.hosts[static_cast<std::size_t>(h)];
                const dsl::Literal* value = host.find_property(cmp.term->prop);
                bool holds = false;
                if (value && std::holds_alternative<long long>(*value))
                    holds = compare_ints(std::get<long long>(*value), cmp.op, cmp.bound);
                if (holds) continue;
                std::vector<csp::LinearTerm> terms;
                for (int c = 1; c <= csp_.max_count; ++c)
                    terms.push_back({1, csp_.placement_var(h, t, c)});
                csp_.model.add_linear(std::move(terms), csp::Relation::Le, 0);
                ++fixed;
            }
        }
        explain("host-property filter on '" + cmp.term->prop + "': forced existence to 0 for " +
                std::to_string(fixed) + " (host,type) pairs");
    }

    // (b) forall T v (card(connections(v.I)) <op> k): per potential provider
    // instance, the incoming connection sum is bounded; the bound is scaled
    // by the instance's existence so absent instances are unconstrained.
    void lower_connection_cardinality(const dsl::ConstraintExpr& forall, const Comparison& cmp) {
        const std::string& iface = cmp.term->set.iface;
        if (!dsd_.find_interface(iface))
            throw CompileError{cmp.term->set.pos, "unresolved interface '" + iface + "'"};
        int added = 0;
        for (int t : matching_type_indices(forall.quant_type, forall.pos)) {
            for (int h = 0; h < csp_.host_count; ++h) {
                for (int i = 1; i <= csp_.max_count; ++i) {
                    std::vector<csp::LinearTerm> terms;
                    for (std::size_t k = 0; k < csp_.connections.size(); ++k) {
                        const PotentialConnection& pc = csp_.connections[k];
                        const dsl::ComponentType& client_type =
                            dsd_.component_types[static_cast<std::size_t>(pc.client.ctype)];
                        if (pc.server.host == h && pc.server.ctype == t && pc.server.index == i &&
                            client_type.requires_[static_cast<std::size_t>(pc.port)].iface == iface)
                            terms.push_back({1, csp_.connection_var(static_cast<int>(k))});
                    }
                    PotentialInstance inst{h, t, i};
                    if (cmp.bound != 0) {
                        for (const auto& term : csp_.existence_terms(inst, -cmp.bound))
                            terms.push_back(term);
                        csp_.model.add_linear(std::move(terms), to_relation(cmp.op), 0);
                        ++added;
                    } else if (!terms.empty() &&
                               (cmp.op == dsl::CompareOp::Le || cmp.op == dsl::CompareOp::Eq)) {
                        csp_.model.add_linear(std::move(terms), to_relation(cmp.op), 0);
                        ++added;
                    }
                }
            }
        }
        explain("incoming-connection cardinality on '" + iface + "': " + std::to_string(added) +
                " per-instance constraints");
    }

    void lower_component_forall(const dsl::ConstraintExpr& forall) {
        auto cmp = normalize_comparison(*forall.body);
        if (!cmp) unsupported(*forall.body);
        if (cmp->term->kind == dsl::Term::Kind::HostProperty &&
            cmp->term->var == forall.quant_var) {
            lower_host_property(forall, *cmp);
            return;
        }
        if (cmp->term->kind == dsl::Term::Kind::Card &&
            cmp->term->set.kind == dsl::SetTerm::Kind::Connections &&
            cmp->term->set.subject == forall.quant_var) {
            lower_connection_cardinality(forall, *cmp);
            return;
        }
        unsupported(*forall.body);
    }

    // (c) forall host h (card(getComponents(h)) <op> k): per host, the
    // count-weighted placement sum is bounded.
    void lower_host_forall(const dsl::ConstraintExpr& forall) {
        auto cmp = normalize_comparison(*forall.body);
        if (!cmp || cmp->term->kind != dsl::Term::Kind::Card ||
            cmp->term->set.kind != dsl::SetTerm::Kind::Components ||
            cmp->term->set.subject != forall.quant_var)
            unsupported(*forall.body);
        for (int h = 0; h < csp_.host_count; ++h) add_components_constraint(h, cmp->op, cmp->bound);
        explain("per-host component cardinality: " + std::to_string(csp_.host_count) +
                " host constraints");
    }

    // (d) card(instancesOf(T)) <op> k over the whole deployment.
    void lower_instances_of(const std::string& type_name, dsl::CompareOp op, long long bound) {
        std::vector<csp::LinearTerm> terms;
        for (int t : matching_type_indices(type_name, SourcePos{})) {
            for (int h = 0; h < csp_.host_count; ++h)
                for (int c = 1; c <= csp_.max_count; ++c)
                    terms.push_back({c, csp_.placement_var(h, t, c)});
        }
        csp_.model.add_linear(std::move(terms), to_relation(op), bound);
        explain("deployment-wide instance cardinality of '" + type_name + "': 1 constraint");
    }

    // (e) card(components(h1)) <op> k for a named host.
    void lower_components_of_host(int host, dsl::CompareOp op, long long bound) {
        add_components_constraint(host, op, bound);
        explain("component cardinality on host '" +
                dsd_.hosts[static_cast<std::size_t>(host)].name + "': 1 constraint");
    }

    void add_components_constraint(int host, dsl::CompareOp op, long long bound) {
        std::vector<csp::LinearTerm> terms;
        for (int t = 0; t < csp_.type_count; ++t)
            for (int c = 1; c <= csp_.max_count; ++c)
                terms.push_back({c, csp_.placement_var(host, t, c)});
        csp_.model.add_linear(std::move(terms), to_relation(op), bound);
    }
};

} // namespace detail

/// Lowers every constraint-set conjunct onto the generated model, diverting
/// conjuncts that mention dynamic properties to the runtime-assertion
/// partition. Throws CompileError for static predicates outside the
/// supported fragment.
inline void lower_constraints(const dsl::DesiredStateDescription& dsd, SpecializedCsp& csp) {
    detail::Lowerer lowerer(dsd, csp);
    for (const auto& set : dsd.constraint_sets) {
        std::vector<dsl::ExprPtr> conjuncts;
        auto flatten = [&](auto&& self, const dsl::ExprPtr& expr) -> void {
            if (expr->kind == dsl::ConstraintExpr::Kind::And)
                for (const auto& child : expr->children) self(self, child);
            else
                conjuncts.push_back(expr);
        };
        flatten(flatten, set.expr);
        for (std::size_t i = 0; i < conjuncts.size(); ++i) {
            if (dsl::mentions_dynamic_property(*conjuncts[i], dsd)) {
                csp.runtime_assertions.push_back(
                    {set.name, static_cast<int>(i), conjuncts[i]});
                csp.explain.push_back(set.name + "[" + std::to_string(i) +
                                      "] -> runtime assertion (mentions a dynamic property)");
                continue;
            }
            lowerer.lower_conjunct(set.name, static_cast<int>(i), *conjuncts[i]);
        }
    }
}

/// generate_model + lower_constraints in one step.
inline SpecializedCsp compile_dsd(const dsl::DesiredStateDescription& dsd) {
    SpecializedCsp csp = generate_model(dsd);
    lower_constraints(dsd, csp);
    return csp;
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

/// Maps a solver solution back to a configuration: (host, type) pairs whose
/// count indicator is set contribute instances 1..count, and every set
/// connection variable contributes a connection. The result is closed by
/// construction; closure is re-checked and a violation reports a defect in
/// the encoding.
inline config::ConfigurationDescription decode(const dsl::DesiredStateDescription& dsd,
                                               const SpecializedCsp& csp,
                                               const csp::Assignment& assignment,
                                               const std::string& dsd_ref) {
    config::ConfigurationDescription cdd;
    cdd.dsd_ref = dsd_ref;
    for (int h = 0; h < csp.host_count; ++h) {
        for (int t = 0; t < csp.type_count; ++t) {
            for (int c = 1; c <= csp.max_count; ++c) {
                if (assignment[static_cast<std::size_t>(csp.placement_var(h, t, c))] == 0)
                    continue;
                for (int i = 1; i <= c; ++i)
                    cdd.instances.push_back({dsd.hosts[static_cast<std::size_t>(h)].name,
                                             dsd.component_types[static_cast<std::size_t>(t)].name,
                                             i});
            }
        }
    }
    for (std::size_t k = 0; k < csp.connections.size(); ++k) {
        if (assignment[static_cast<std::size_t>(csp.connection_var(static_cast<int>(k)))] == 0)
            continue;
        const PotentialConnection& pc = csp.connections[k];
        const dsl::ComponentType& client_type =
            dsd.component_types[static_cast<std::size_t>(pc.client.ctype)];
        cdd.connections.push_back(
            {{dsd.hosts[static_cast<std::size_t>(pc.client.host)].name, client_type.name,
              pc.client.index},
             client_type.requires_[static_cast<std::size_t>(pc.port)].port,
             {dsd.hosts[static_cast<std::size_t>(pc.server.host)].name,
              dsd.component_types[static_cast<std::size_t>(pc.server.ctype)].name,
              pc.server.index}});
    }
    cdd.normalize();
    if (auto defect = config::structural_defect(cdd))
        throw std::logic_error("decoded solution is not closed: " + *defect);
    return cdd;
}

// ---------------------------------------------------------------------------
// End-to-end counting / streaming
// ---------------------------------------------------------------------------

struct CountOutcome {
    SpecializedCsp csp;
    csp::EnumerationResult result;
};

/// Compile and enumerate. When a visitor is supplied it receives one decoded
/// configuration per solution.
inline CountOutcome count_configurations(const dsl::DesiredStateDescription& dsd,
                                         const csp::SolveLimits& limits) {
    CountOutcome outcome{compile_dsd(dsd), {}};
    outcome.result = csp::enumerate(outcome.csp.model, limits);
    return outcome;
}

inline CountOutcome enumerate_configurations(
    const dsl::DesiredStateDescription& dsd, const csp::SolveLimits& limits,
    const std::function<void(const config::ConfigurationDescription&)>& visitor) {
    CountOutcome outcome{compile_dsd(dsd), {}};
    const std::string ref = config::dsd_reference(dsd);
    outcome.result =
        csp::enumerate(outcome.csp.model, limits, [&](const csp::Assignment& assignment) {
            visitor(decode(dsd, outcome.csp, assignment, ref));
        });
    return outcome;
}

/// Textual report mapping each constraint-set conjunct to the constraint
/// families it generated.
inline std::string explain_report(const SpecializedCsp& csp) {
    std::string out;
    out += "variables: " + std::to_string(csp.model.variable_count()) + " (" +
           std::to_string(csp.placement_total) + " placement, " +
           std::to_string(csp.connections.size()) + " connection)\n";
    out += "constraints: " + std::to_string(csp.model.constraint_count()) + "\n";
    for (const auto& line : csp.explain) out += line + "\n";
    for (const auto& assertion : csp.runtime_assertions)
        out += "runtime assertion " + assertion.constraint_set + "[" +
               std::to_string(assertion.conjunct) + "]: " + detail::expr_text(*assertion.expr) +
               "\n";
    return out;
}

} // namespace deladas::compile

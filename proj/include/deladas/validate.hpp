#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "deladas/cdd.hpp"
#include "deladas/dsd.hpp"
#include "deladas/printer.hpp"

namespace deladas::config {

/// Supplies sampled values for dynamic properties. The static validator runs
/// without one and skips dynamic predicates; assertion probes pass the live
/// model's samples.
class PropertySource {
public:
    virtual ~PropertySource() = default;
    virtual std::optional<long long> dynamic_value(const InstanceRef& instance,
                                                   const std::string& prop) const = 0;
};

struct PredicateOutcome {
    bool passed = true;
    std::string witness;  // first failure, human readable
};

struct ConjunctReport {
    std::string constraint_set;
    int conjunct = 0;
    std::string text;
    bool runtime_only = false;  // mentions dynamic properties; not evaluated statically
    bool passed = true;
    std::string witness;
};

struct ComplianceReport {
    std::vector<Diagnostic> errors;             // unknown types/hosts, malformed structure
    std::vector<std::string> binding_failures;  // witnesses for incomplete/incompatible bindings
    std::vector<ConjunctReport> conjuncts;

    bool wellformed() const { return errors.empty() && binding_failures.empty(); }
    bool compliant() const {
        if (!wellformed()) return false;
        for (const auto& c : conjuncts)
            if (!c.runtime_only && !c.passed) return false;
        return true;
    }
};

namespace detail {

/// Direct evaluation of constraint expressions over a concrete
/// configuration. This is the solver-independent route: it never touches
/// the compiled model.
class Evaluator {
public:
    Evaluator(const ConfigurationDescription& cdd, const dsl::DesiredStateDescription& dsd,
              const PropertySource* dynamics)
        : cdd_(cdd), dsd_(dsd), dynamics_(dynamics) {}

    PredicateOutcome eval(const dsl::ConstraintExpr& expr) {
        env_.clear();
        return eval_expr(expr);
    }

    std::optional<long long> term_value(const dsl::Term& term) {
        std::string problem;
        return eval_term(term, problem);
    }

private:
    const ConfigurationDescription& cdd_;
    const dsl::DesiredStateDescription& dsd_;
    const PropertySource* dynamics_;
    std::map<std::string, InstanceRef> env_;        // component quantifier bindings
    std::map<std::string, std::string> host_env_;   // host quantifier bindings

    static PredicateOutcome fail(std::string witness) { return {false, std::move(witness)}; }

    PredicateOutcome eval_expr(const dsl::ConstraintExpr& expr) {
        using Kind = dsl::ConstraintExpr::Kind;
        switch (expr.kind) {
            case Kind::And:
                for (const auto& child : expr.children) {
                    PredicateOutcome outcome = eval_expr(*child);
                    if (!outcome.passed) return outcome;
                }
                return {};
            case Kind::Or: {
                PredicateOutcome last;
                for (const auto& child : expr.children) {
                    last = eval_expr(*child);
                    if (last.passed) return last;
                }
                return fail("no disjunct holds (last: " + last.witness + ")");
            }
            case Kind::Not: {
                PredicateOutcome inner = eval_expr(*expr.children.front());
                if (inner.passed) return fail("negated predicate holds");
                return {};
            }
            case Kind::Forall:
                return eval_forall(expr);
            case Kind::Compare:
                return eval_compare(expr);
        }
        return {};
    }

    PredicateOutcome eval_forall(const dsl::ConstraintExpr& expr) {
        if (expr.over_hosts) {
            for (const auto& host : dsd_.hosts) {
                host_env_[expr.quant_var] = host.name;
                PredicateOutcome outcome = eval_expr(*expr.body);
                host_env_.erase(expr.quant_var);
                if (!outcome.passed)
                    return fail(expr.quant_var + "=" + host.name + ": " + outcome.witness);
            }
            return {};
        }
        auto types = dsd_.types_matching(expr.quant_type);
        for (const auto& inst : cdd_.instances) {
            bool matches = false;
            for (const dsl::ComponentType* ct : types) matches = matches || ct->name == inst.type;
            if (!matches) continue;
            env_[expr.quant_var] = inst;
            PredicateOutcome outcome = eval_expr(*expr.body);
            env_.erase(expr.quant_var);
            if (!outcome.passed)
                return fail(expr.quant_var + "=" + inst.str() + ": " + outcome.witness);
        }
        return {};
    }

    PredicateOutcome eval_compare(const dsl::ConstraintExpr& expr) {
        std::string problem;
        std::optional<long long> lhs = eval_term(expr.lhs, problem);
        if (!lhs) return fail(problem);
        std::optional<long long> rhs = eval_term(expr.rhs, problem);
        if (!rhs) return fail(problem);
        bool holds = false;
        switch (expr.op) {
            case dsl::CompareOp::Le: holds = *lhs <= *rhs; break;
            case dsl::CompareOp::Ge: holds = *lhs >= *rhs; break;
            case dsl::CompareOp::Eq: holds = *lhs == *rhs; break;
            case dsl::CompareOp::Lt: holds = *lhs < *rhs; break;
            case dsl::CompareOp::Gt: holds = *lhs > *rhs; break;
        }
        if (holds) return {};
        std::ostringstream os;
        dsl::detail::print_term(os, expr.lhs);
        os << " " << dsl::compare_op_text(expr.op) << " ";
        dsl::detail::print_term(os, expr.rhs);
        os << " is " << *lhs << " " << dsl::compare_op_text(expr.op) << " " << *rhs;
        return fail(os.str());
    }

    std::optional<long long> eval_term(const dsl::Term& term, std::string& problem) {
        switch (term.kind) {
            case dsl::Term::Kind::IntLiteral:
                return term.value;
            case dsl::Term::Kind::Card:
                return eval_card(term.set, problem);
            case dsl::Term::Kind::HostProperty: {
                auto it = env_.find(term.var);
                if (it == env_.end()) {
                    problem = "unbound variable '" + term.var + "'";
                    return std::nullopt;
                }
                const dsl::Host* host = dsd_.find_host(it->second.host);
                if (!host) {
                    problem = "unknown host '" + it->second.host + "'";
                    return std::nullopt;
                }
                const dsl::Literal* value = host->find_property(term.prop);
                if (!value || !std::holds_alternative<long long>(*value)) {
                    problem = "host '" + host->name + "' has no integer property '" + term.prop + "'";
                    return std::nullopt;
                }
                return std::get<long long>(*value);
            }
            case dsl::Term::Kind::ComponentProperty: {
                auto it = env_.find(term.var);
                if (it == env_.end()) {
                    problem = "unbound variable '" + term.var + "'";
                    return std::nullopt;
                }
                const dsl::ComponentType* ct = dsd_.find_component_type(it->second.type);
                if (!ct) {
                    problem = "unknown component type '" + it->second.type + "'";
                    return std::nullopt;
                }
                const dsl::PropertySpec* prop = ct->find_property(term.prop);
                if (!prop) {
                    problem = "type '" + ct->name + "' has no property '" + term.prop + "'";
                    return std::nullopt;
                }
                if (prop->dynamic) {
                    if (!dynamics_) {
                        problem = "dynamic property '" + term.prop + "' has no sampled value";
                        return std::nullopt;
                    }
                    auto sampled = dynamics_->dynamic_value(it->second, term.prop);
                    if (!sampled)
                        problem = "no sample for " + it->second.str() + "." + term.prop;
                    return sampled;
                }
                if (prop->binding != dsl::PropertySpec::Binding::Literal ||
                    !std::holds_alternative<long long>(prop->value)) {
                    problem = "property '" + term.prop + "' is not integer-valued";
                    return std::nullopt;
                }
                return std::get<long long>(prop->value);
            }
        }
        return std::nullopt;
    }

    std::optional<long long> eval_card(const dsl::SetTerm& set, std::string& problem) {
        switch (set.kind) {
            case dsl::SetTerm::Kind::Connections: {
                auto it = env_.find(set.subject);
                if (it == env_.end()) {
                    problem = "unbound variable '" + set.subject + "'";
                    return std::nullopt;
                }
                long long count = 0;
                for (const auto& conn : cdd_.connections) {
                    if (!(conn.server == it->second)) continue;
                    const dsl::ComponentType* client_type = dsd_.find_component_type(conn.client.type);
                    if (!client_type) continue;
                    const dsl::RequiredPort* port = client_type->find_port(conn.port);
                    if (port && port->iface == set.iface) ++count;
                }
                return count;
            }
            case dsl::SetTerm::Kind::Components: {
                std::string host_name;
                auto it = host_env_.find(set.subject);
                if (it != host_env_.end()) {
                    host_name = it->second;
                } else if (dsd_.find_host(set.subject)) {
                    host_name = set.subject;
                } else {
                    problem = "unknown host '" + set.subject + "'";
                    return std::nullopt;
                }
                long long count = 0;
                for (const auto& inst : cdd_.instances)
                    if (inst.host == host_name) ++count;
                return count;
            }
            case dsl::SetTerm::Kind::InstancesOf: {
                auto types = dsd_.types_matching(set.type_name);
                if (types.empty()) {
                    problem = "unknown component type or template '" + set.type_name + "'";
                    return std::nullopt;
                }
                long long count = 0;
                for (const auto& inst : cdd_.instances)
                    for (const dsl::ComponentType* ct : types)
                        if (ct->name == inst.type) ++count;
                return count;
            }
        }
        return std::nullopt;
    }
};

} // namespace detail

/// Evaluates one predicate directly against a configuration (no solver
/// involved). When `dynamics` is null, dynamic properties make the
/// evaluation fail with an explanatory witness.
inline PredicateOutcome evaluate_predicate(const dsl::ConstraintExpr& expr,
                                           const ConfigurationDescription& cdd,
                                           const dsl::DesiredStateDescription& dsd,
                                           const PropertySource* dynamics = nullptr) {
    return detail::Evaluator(cdd, dsd, dynamics).eval(expr);
}

/// Evaluates a closed integer term (no quantified variables) against a
/// configuration; used to rank candidates under an optimisation directive.
inline std::optional<long long> evaluate_closed_term(const dsl::Term& term,
                                                     const ConfigurationDescription& cdd,
                                                     const dsl::DesiredStateDescription& dsd) {
    return detail::Evaluator(cdd, dsd, nullptr).term_value(term);
}

/// Structural well-formedness + direct evaluation of every static
/// constraint-set conjunct against the configuration. Binding completeness
/// requires every required port of every instance to be connected exactly
/// once to a compatible provider. Conjuncts that mention dynamic properties
/// are evaluated only when `dynamics` is supplied; otherwise they are
/// reported as runtime-only.
inline ComplianceReport validate(const ConfigurationDescription& cdd,
                                 const dsl::DesiredStateDescription& dsd,
                                 const PropertySource* dynamics = nullptr) {
    ComplianceReport report;

    if (auto defect = structural_defect(cdd))
        report.errors.push_back({Severity::Error, SourcePos{}, *defect});

    // references must resolve against this DSD
    for (const auto& inst : cdd.instances) {
        if (!dsd.find_component_type(inst.type))
            report.errors.push_back({Severity::Error, SourcePos{},
                                     "configuration references unknown type '" + inst.type + "'"});
        if (!dsd.find_host(inst.host))
            report.errors.push_back({Severity::Error, SourcePos{},
                                     "configuration references unknown host '" + inst.host + "'"});
        if (dsd.find_component_type(inst.type) && inst.index > dsd.max_instances_per_host)
            report.errors.push_back(
                {Severity::Error, SourcePos{},
                 "instance " + inst.str() + " exceeds maxInstancesPerHost"});
    }
    if (!report.errors.empty()) return report;

    // binding completeness
    for (const auto& inst : cdd.instances) {
        const dsl::ComponentType* ct = dsd.find_component_type(inst.type);
        for (const auto& port : ct->requires_) {
            int bound = 0;
            const ConnectionRef* connection = nullptr;
            for (const auto& conn : cdd.connections) {
                if (conn.client == inst && conn.port == port.port) {
                    ++bound;
                    connection = &conn;
                }
            }
            if (bound != 1) {
                report.binding_failures.push_back("(" + inst.str() + ", " + port.port + ") bound " +
                                                  std::to_string(bound) + " times");
                continue;
            }
            const dsl::ComponentType* server_type = dsd.find_component_type(connection->server.type);
            if (!server_type || !server_type->provides_interface(port.iface))
                report.binding_failures.push_back("(" + inst.str() + ", " + port.port +
                                                  ") bound to incompatible provider " +
                                                  connection->server.str());
        }
    }
    for (const auto& conn : cdd.connections) {
        const dsl::ComponentType* ct = dsd.find_component_type(conn.client.type);
        if (ct && !ct->find_port(conn.port))
            report.binding_failures.push_back("connection names unknown port '" + conn.port +
                                              "' on " + conn.client.str());
    }

    // constraint-set conjuncts, evaluated directly on the configuration
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
            ConjunctReport cr;
            cr.constraint_set = set.name;
            cr.conjunct = static_cast<int>(i);
            {
                std::ostringstream os;
                dsl::detail::print_expr(os, *conjuncts[i], "");
                cr.text = os.str();
                for (char& c : cr.text)
                    if (c == '\n') c = ' ';
            }
            bool dynamic = dsl::mentions_dynamic_property(*conjuncts[i], dsd);
            if (dynamic && !dynamics) {
                cr.runtime_only = true;
            } else {
                PredicateOutcome outcome = evaluate_predicate(*conjuncts[i], cdd, dsd, dynamics);
                cr.passed = outcome.passed;
                cr.witness = outcome.witness;
            }
            report.conjuncts.push_back(std::move(cr));
        }
    }
    return report;
}

/// Renders a compliance report as one record per check.
inline std::string format_report(const ComplianceReport& report) {
    std::string out;
    for (const auto& e : report.errors) out += "error: " + e.message + "\n";
    for (const auto& b : report.binding_failures)
        out += "binding: fail witness=" + b + "\n";
    if (report.errors.empty() && report.binding_failures.empty())
        out += "binding: pass\n";
    for (const auto& c : report.conjuncts) {
        out += "conjunct " + c.constraint_set + "[" + std::to_string(c.conjunct) + "]: ";
        if (c.runtime_only) {
            out += "runtime-only";
        } else if (c.passed) {
            out += "pass";
        } else {
            out += "fail witness=" + c.witness;
        }
        out += " text=" + c.text + "\n";
    }
    out += report.compliant() ? "compliant: true\n" : "compliant: false\n";
    return out;
}

} // namespace deladas::config

#pragma once

#include <utility>

#include "deladas/ast.hpp"
#include "deladas/lexer.hpp"

namespace deladas::dsl {

struct ParseResult {
    std::optional<AstDsd> ast;       // present iff no error
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return ast.has_value(); }
};

namespace detail {

/// Recursive-descent parser. Keywords are contextual: "type" names an
/// interface entry in one place and introduces a component type in another,
/// so the lexer only ever produces plain identifiers. Commas between clauses
/// and entries are optional separators.
class Parser {
public:
    explicit Parser(const std::vector<Token>& tokens) : tokens_(tokens) {}

    ParseResult run() {
        ParseResult result;
        AstDsd dsd;
        try {
            while (!at(TokenKind::End)) parse_top_level(dsd);
            result.ast = std::move(dsd);
        } catch (const SyntaxError& e) {
            result.diagnostics.push_back({Severity::Error, e.pos, e.message});
        }
        return result;
    }

private:
    struct SyntaxError {
        SourcePos pos;
        std::string message;
    };

    const std::vector<Token>& tokens_;
    size_t index_ = 0;

    const Token& peek(size_t ahead = 0) const {
        size_t i = index_ + ahead;
        return i < tokens_.size() ? tokens_[i] : tokens_.back();
    }
    bool at(TokenKind k) const { return peek().kind == k; }
    bool at_ident(std::string_view s) const { return peek().is_ident(s); }
    Token next() {
        Token t = peek();
        if (index_ + 1 < tokens_.size()) ++index_;
        return t;
    }
    bool accept(TokenKind k) {
        if (!at(k)) return false;
        next();
        return true;
    }
    bool accept_ident(std::string_view s) {
        if (!at_ident(s)) return false;
        next();
        return true;
    }
    void skip_commas() {
        while (accept(TokenKind::Comma)) {}
    }

    [[noreturn]] void fail(const std::string& expected) const {
        const Token& t = peek();
        std::string got = token_kind_name(t.kind);
        if (t.kind == TokenKind::Identifier) got += " '" + t.text + "'";
        throw SyntaxError{t.pos, "expected " + expected + ", got " + got};
    }

    Token expect(TokenKind k, const char* what) {
        if (!at(k)) fail(what);
        return next();
    }
    Token expect_identifier(const char* what) { return expect(TokenKind::Identifier, what); }
    void expect_keyword(std::string_view kw) {
        if (!accept_ident(kw)) fail("'" + std::string(kw) + "'");
    }

    Literal parse_literal() {
        if (at(TokenKind::String)) return Literal{next().text};
        if (at(TokenKind::Integer)) return Literal{next().int_value};
        fail("string or integer literal");
    }

    std::string parse_qualified_name() {
        std::string name = expect_identifier("class name").text;
        while (accept(TokenKind::Dot)) name += "." + expect_identifier("name after '.'").text;
        return name;
    }

    /// ref.method()
    MethodRef parse_method_ref() {
        MethodRef ref;
        ref.object_ref = expect_identifier("object reference").text;
        expect(TokenKind::Dot, "'.'");
        ref.method = expect_identifier("method name").text;
        expect(TokenKind::LParen, "'('");
        expect(TokenKind::RParen, "')'");
        return ref;
    }

    void parse_top_level(AstDsd& dsd) {
        skip_commas();
        if (at_ident("interface")) {
            parse_interface(dsd);
        } else if (at_ident("template")) {
            parse_template(dsd);
        } else if (at_ident("component") && peek(1).is_ident("type")) {
            parse_component_type(dsd);
        } else if (at_ident("host") && peek(1).is_ident("template")) {
            parse_host_template(dsd);
        } else if (at_ident("host")) {
            parse_host(dsd);
        } else if (at_ident("constraintSet")) {
            parse_constraint_set(dsd);
        } else if (at_ident("deployment")) {
            parse_deployment(dsd);
        } else if (at_ident("optimise")) {
            parse_optimise(dsd);
        } else {
            fail("a declaration (interface, template, component type, host, "
                 "constraintSet, deployment, or optimise)");
        }
    }

    void parse_interface(AstDsd& dsd) {
        AstInterface decl;
        decl.pos = next().pos;  // interface
        decl.name = expect_identifier("interface name").text;
        expect(TokenKind::LParen, "'('");
        while (!accept(TokenKind::RParen)) {
            skip_commas();
            if (accept(TokenKind::RParen)) break;
            Token key = expect_identifier("interface entry (type, specification, implementation)");
            expect(TokenKind::Equal, "'='");
            Token value = expect(TokenKind::String, "string value");
            if (key.text == "type") decl.impl_type = value.text;
            else if (key.text == "specification") decl.specification = value.text;
            else if (key.text == "implementation") decl.implementation = value.text;
            else throw SyntaxError{key.pos, "unknown interface entry '" + key.text + "'"};
        }
        dsd.interfaces.push_back(std::move(decl));
    }

    void parse_provides(std::vector<std::string>& provides) {
        next();  // provides
        accept_ident("interface");
        provides.push_back(expect_identifier("interface name").text);
        while (accept(TokenKind::Comma)) {
            accept_ident("interface");
            provides.push_back(expect_identifier("interface name").text);
        }
    }

    void parse_requires(std::vector<AstRequire>& requires_) {
        next();  // requires
        do {
            AstRequire req;
            req.pos = peek().pos;
            req.iface = expect_identifier("interface name").text;
            req.port = expect_identifier("port name").text;
            requires_.push_back(std::move(req));
        } while (accept(TokenKind::Comma));
    }

    void parse_properties(std::vector<PropertyClause>& props) {
        next();  // properties
        expect(TokenKind::LParen, "'('");
        while (!accept(TokenKind::RParen)) {
            skip_commas();
            if (accept(TokenKind::RParen)) break;
            PropertyClause clause;
            clause.pos = peek().pos;
            if (at_ident("constant") || at_ident("dynamic")) {
                clause.kind = PropertyClause::Kind::Declare;
                clause.dynamic = next().text == "dynamic";
                Token type = expect_identifier("property type (int or string)");
                if (type.text == "int") clause.type = ValueType::Int;
                else if (type.text == "string") clause.type = ValueType::String;
                else throw SyntaxError{type.pos, "unknown property type '" + type.text + "'"};
                clause.name = expect_identifier("property name").text;
            } else {
                clause.name = expect_identifier("property name").text;
                if (accept(TokenKind::Equal)) {
                    clause.kind = PropertyClause::Kind::LiteralBinding;
                    clause.value = parse_literal();
                } else if (accept_ident("providedBy")) {
                    clause.kind = PropertyClause::Kind::ProviderBinding;
                    clause.provider = parse_method_ref();
                } else {
                    fail("'=' or 'providedBy'");
                }
            }
            props.push_back(std::move(clause));
        }
    }

    void parse_template(AstDsd& dsd) {
        AstTemplate decl;
        decl.pos = next().pos;  // template
        decl.name = expect_identifier("template name").text;
        expect(TokenKind::LParen, "'('");
        while (!accept(TokenKind::RParen)) {
            skip_commas();
            if (accept(TokenKind::RParen)) break;
            if (at_ident("provides")) parse_provides(decl.provides);
            else if (at_ident("requires")) parse_requires(decl.requires_);
            else if (at_ident("properties")) parse_properties(decl.properties);
            else fail("template clause (provides, requires, properties)");
        }
        dsd.templates.push_back(std::move(decl));
    }

    void parse_component_type(AstDsd& dsd) {
        AstComponentType decl;
        decl.pos = next().pos;  // component
        next();                 // type
        decl.name = expect_identifier("component type name").text;
        if (accept_ident("extends")) decl.extends = expect_identifier("template name").text;
        expect(TokenKind::LParen, "'('");
        while (!accept(TokenKind::RParen)) {
            skip_commas();
            if (accept(TokenKind::RParen)) break;
            if (at_ident("provides")) {
                parse_provides(decl.provides);
            } else if (at_ident("requires")) {
                parse_requires(decl.requires_);
            } else if (at_ident("properties")) {
                parse_properties(decl.properties);
            } else if (at_ident("implementation")) {
                next();
                decl.implementation = expect(TokenKind::String, "implementation URL").text;
            } else if (at_ident("instantiate")) {
                AstInstantiate inst;
                inst.pos = next().pos;
                inst.object_ref = expect_identifier("object reference").text;
                expect_keyword("with");
                inst.class_name = parse_qualified_name();
                expect(TokenKind::LParen, "'('");
                if (!at(TokenKind::RParen)) {
                    inst.arguments.push_back(parse_literal());
                    while (accept(TokenKind::Comma)) inst.arguments.push_back(parse_literal());
                }
                expect(TokenKind::RParen, "')'");
                decl.instantiate = std::move(inst);
            } else if (at_ident("satisfy")) {
                AstSatisfy sat;
                sat.pos = next().pos;
                sat.iface = expect_identifier("interface name").text;
                expect_keyword("using");
                sat.object_ref = expect_identifier("object reference").text;
                decl.satisfies.push_back(std::move(sat));
            } else if (at_ident("bind")) {
                AstBind bind;
                bind.pos = next().pos;
                bind.port = expect_identifier("port name").text;
                expect_keyword("with");
                bind.setter = parse_method_ref();
                decl.binds.push_back(std::move(bind));
            } else if (at_ident("initialise")) {
                next();
                decl.initialise.push_back(parse_method_ref());
            } else if (at_ident("destroy")) {
                next();
                decl.destroy.push_back(parse_method_ref());
            } else {
                fail("component type clause");
            }
        }
        dsd.component_types.push_back(std::move(decl));
    }

    void parse_property_assignments(std::vector<std::pair<std::string, Literal>>& props) {
        expect(TokenKind::LParen, "'('");
        while (!accept(TokenKind::RParen)) {
            skip_commas();
            if (accept(TokenKind::RParen)) break;
            std::string name = expect_identifier("property name").text;
            expect(TokenKind::Equal, "'='");
            props.emplace_back(std::move(name), parse_literal());
        }
    }

    void parse_host_template(AstDsd& dsd) {
        AstHostTemplate decl;
        decl.pos = next().pos;  // host
        next();                 // template
        decl.name = expect_identifier("host template name").text;
        parse_property_assignments(decl.properties);
        dsd.host_templates.push_back(std::move(decl));
    }

    void parse_host(AstDsd& dsd) {
        AstHost decl;
        decl.pos = next().pos;  // host
        decl.name = expect_identifier("host name").text;
        if (accept_ident("extends")) decl.extends = expect_identifier("host template name").text;
        if (at(TokenKind::LParen)) parse_property_assignments(decl.properties);
        dsd.hosts.push_back(std::move(decl));
    }

    void parse_deployment(AstDsd& dsd) {
        AstDeployment decl;
        decl.pos = next().pos;  // deployment
        expect(TokenKind::LParen, "'('");
        while (!accept(TokenKind::RParen)) {
            skip_commas();
            if (accept(TokenKind::RParen)) break;
            Token key = expect_identifier("deployment setting");
            if (key.text != "maxInstancesPerHost")
                throw SyntaxError{key.pos, "unknown deployment setting '" + key.text + "'"};
            expect(TokenKind::Equal, "'='");
            decl.max_instances_per_host = expect(TokenKind::Integer, "integer").int_value;
        }
        dsd.deployment = decl;
    }

    void parse_optimise(AstDsd& dsd) {
        AstOptimise decl;
        decl.pos = next().pos;  // optimise
        if (accept_ident("minimize")) decl.maximize = false;
        else if (accept_ident("maximize")) decl.maximize = true;
        else fail("'minimize' or 'maximize'");
        decl.term = parse_term();
        dsd.optimise = decl;
    }

    void parse_constraint_set(AstDsd& dsd) {
        AstConstraintSet decl;
        decl.pos = next().pos;  // constraintSet
        decl.name = expect_identifier("constraint set name").text;
        expect(TokenKind::LParen, "'('");
        decl.expr = parse_or_expr();
        expect(TokenKind::RParen, "')'");
        dsd.constraint_sets.push_back(std::move(decl));
    }

    // --- constraint expressions -------------------------------------------

    ExprPtr make_nary(ConstraintExpr::Kind kind, std::vector<ExprPtr> children, SourcePos pos) {
        if (children.size() == 1) return children.front();
        auto node = std::make_shared<ConstraintExpr>();
        node->kind = kind;
        node->children = std::move(children);
        node->pos = pos;
        return node;
    }

    ExprPtr parse_or_expr() {
        SourcePos pos = peek().pos;
        std::vector<ExprPtr> children;
        children.push_back(parse_and_expr());
        while (accept_ident("or")) children.push_back(parse_and_expr());
        return make_nary(ConstraintExpr::Kind::Or, std::move(children), pos);
    }

    ExprPtr parse_and_expr() {
        SourcePos pos = peek().pos;
        std::vector<ExprPtr> children;
        children.push_back(parse_not_expr());
        while (accept_ident("and")) children.push_back(parse_not_expr());
        return make_nary(ConstraintExpr::Kind::And, std::move(children), pos);
    }

    ExprPtr parse_not_expr() {
        if (at_ident("not")) {
            auto node = std::make_shared<ConstraintExpr>();
            node->pos = next().pos;
            node->kind = ConstraintExpr::Kind::Not;
            node->children.push_back(parse_not_expr());
            return node;
        }
        return parse_primary_expr();
    }

    ExprPtr parse_primary_expr() {
        if (at_ident("forall")) return parse_forall();
        if (at(TokenKind::LParen)) {
            next();
            ExprPtr inner = parse_or_expr();
            expect(TokenKind::RParen, "')'");
            return inner;
        }
        return parse_comparison();
    }

    ExprPtr parse_forall() {
        auto node = std::make_shared<ConstraintExpr>();
        node->pos = next().pos;  // forall
        node->kind = ConstraintExpr::Kind::Forall;
        if (accept_ident("host")) {
            node->over_hosts = true;
        } else {
            node->quant_type = expect_identifier("component type or template name").text;
        }
        node->quant_var = expect_identifier("quantified variable").text;
        expect_keyword("in");
        expect_keyword("deployment");
        expect(TokenKind::LParen, "'('");
        node->body = parse_or_expr();
        expect(TokenKind::RParen, "')'");
        return node;
    }

    ExprPtr parse_comparison() {
        auto node = std::make_shared<ConstraintExpr>();
        node->pos = peek().pos;
        node->kind = ConstraintExpr::Kind::Compare;
        node->lhs = parse_term();
        switch (peek().kind) {
            case TokenKind::LessEqual: node->op = CompareOp::Le; break;
            case TokenKind::GreaterEqual: node->op = CompareOp::Ge; break;
            case TokenKind::Equal: node->op = CompareOp::Eq; break;
            case TokenKind::Less: node->op = CompareOp::Lt; break;
            case TokenKind::Greater: node->op = CompareOp::Gt; break;
            default: fail("comparison operator");
        }
        next();
        node->rhs = parse_term();
        return node;
    }

    Term parse_term() {
        Term term;
        term.pos = peek().pos;
        if (at(TokenKind::Integer)) {
            term.kind = Term::Kind::IntLiteral;
            term.value = next().int_value;
            return term;
        }
        if (at_ident("card")) {
            next();
            expect(TokenKind::LParen, "'('");
            term.kind = Term::Kind::Card;
            term.set = parse_set_term();
            expect(TokenKind::RParen, "')'");
            return term;
        }
        if (at_ident("getHost")) {
            next();
            expect(TokenKind::LParen, "'('");
            term.kind = Term::Kind::HostProperty;
            term.var = expect_identifier("quantified variable").text;
            expect(TokenKind::RParen, "')'");
            expect(TokenKind::Dot, "'.'");
            term.prop = expect_identifier("property name").text;
            return term;
        }
        if (at(TokenKind::Identifier)) {
            term.kind = Term::Kind::ComponentProperty;
            term.var = next().text;
            expect(TokenKind::Dot, "'.'");
            term.prop = expect_identifier("property name").text;
            return term;
        }
        fail("term (integer, card(...), getHost(...).p, or var.p)");
    }

    SetTerm parse_set_term() {
        SetTerm set;
        set.pos = peek().pos;
        if (accept_ident("connections")) {
            set.kind = SetTerm::Kind::Connections;
            expect(TokenKind::LParen, "'('");
            set.subject = expect_identifier("quantified variable").text;
            expect(TokenKind::Dot, "'.'");
            set.iface = expect_identifier("interface name").text;
            expect(TokenKind::RParen, "')'");
            return set;
        }
        if (accept_ident("getComponents") || accept_ident("components")) {
            set.kind = SetTerm::Kind::Components;
            expect(TokenKind::LParen, "'('");
            set.subject = expect_identifier("host name or quantified variable").text;
            expect(TokenKind::RParen, "')'");
            return set;
        }
        if (accept_ident("instancesOf")) {
            set.kind = SetTerm::Kind::InstancesOf;
            expect(TokenKind::LParen, "'('");
            set.type_name = expect_identifier("component type or template name").text;
            expect_keyword("in");
            expect_keyword("deployment");
            expect(TokenKind::RParen, "')'");
            return set;
        }
        fail("set term (connections, components, getComponents, instancesOf)");
    }
};

} // namespace detail

/// Parses a token stream into an unresolved AST. Stops at the first syntax
/// error; the diagnostic carries the expected-token message and position.
inline ParseResult parse_dsd(const std::vector<Token>& tokens) {
    return detail::Parser(tokens).run();
}

/// Convenience: tokenize + parse.
inline ParseResult parse_dsd(std::string_view source) {
    TokenizeResult lexed = tokenize(source);
    if (!lexed.ok()) {
        ParseResult result;
        result.diagnostics = std::move(lexed.diagnostics);
        return result;
    }
    return parse_dsd(lexed.tokens);
}

} // namespace deladas::dsl

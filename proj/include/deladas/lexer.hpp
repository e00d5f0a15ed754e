#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deladas/diagnostics.hpp"

namespace deladas::dsl {

enum class TokenKind {
    Identifier,
    Integer,
    String,
    LParen,
    RParen,
    Comma,
    Dot,
    Equal,
    LessEqual,
    GreaterEqual,
    Less,
    Greater,
    End,
};

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;          // identifier/string content, or punctuation spelling
    long long int_value = 0;   // valid for Integer
    SourcePos pos;

    bool is_ident(std::string_view s) const {
        return kind == TokenKind::Identifier && text == s;
    }
};

inline const char* token_kind_name(TokenKind k) {
    switch (k) {
        case TokenKind::Identifier: return "identifier";
        case TokenKind::Integer: return "integer";
        case TokenKind::String: return "string";
        case TokenKind::LParen: return "'('";
        case TokenKind::RParen: return "')'";
        case TokenKind::Comma: return "','";
        case TokenKind::Dot: return "'.'";
        case TokenKind::Equal: return "'='";
        case TokenKind::LessEqual: return "'<='";
        case TokenKind::GreaterEqual: return "'>='";
        case TokenKind::Less: return "'<'";
        case TokenKind::Greater: return "'>'";
        case TokenKind::End: return "end of input";
    }
    return "?";
}

struct TokenizeResult {
    std::vector<Token> tokens;   // always ends with an End token on success
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return !has_errors(diagnostics); }
};

/// Splits source text into tokens. Comments run from "//" to end of line.
/// Strings are double-quoted with \" and \\ escapes. Every token carries
/// its 1-based line/column.
inline TokenizeResult tokenize(std::string_view source) {
    TokenizeResult result;
    int line = 1;
    int col = 1;
    size_t i = 0;
    const size_t n = source.size();

    auto push = [&](TokenKind kind, std::string text, SourcePos pos, long long value = 0) {
        result.tokens.push_back(Token{kind, std::move(text), value, pos});
    };
    auto advance = [&](size_t count) {
        for (size_t k = 0; k < count && i < n; ++k, ++i) {
            if (source[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };

    while (i < n) {
        char c = source[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < n && source[i + 1] == '/') {
            while (i < n && source[i] != '\n') advance(1);
            continue;
        }
        SourcePos pos{line, col};
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = i;
            while (i < n && (std::isalnum(static_cast<unsigned char>(source[i])) || source[i] == '_'))
                advance(1);
            push(TokenKind::Identifier, std::string(source.substr(start, i - start)), pos);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && i + 1 < n && std::isdigit(static_cast<unsigned char>(source[i + 1])))) {
            size_t start = i;
            advance(1);
            while (i < n && std::isdigit(static_cast<unsigned char>(source[i]))) advance(1);
            std::string text(source.substr(start, i - start));
            push(TokenKind::Integer, text, pos, std::stoll(text));
            continue;
        }
        if (c == '"') {
            advance(1);
            std::string value;
            bool closed = false;
            while (i < n) {
                char d = source[i];
                if (d == '"') {
                    advance(1);
                    closed = true;
                    break;
                }
                if (d == '\n') break;
                if (d == '\\' && i + 1 < n && (source[i + 1] == '"' || source[i + 1] == '\\')) {
                    value += source[i + 1];
                    advance(2);
                    continue;
                }
                value += d;
                advance(1);
            }
            if (!closed) {
                result.diagnostics.push_back({Severity::Error, pos, "unterminated string"});
                return result;
            }
            push(TokenKind::String, std::move(value), pos);
            continue;
        }
        switch (c) {
            case '(': push(TokenKind::LParen, "(", pos); advance(1); continue;
            case ')': push(TokenKind::RParen, ")", pos); advance(1); continue;
            case ',': push(TokenKind::Comma, ",", pos); advance(1); continue;
            case '.': push(TokenKind::Dot, ".", pos); advance(1); continue;
            case '=': push(TokenKind::Equal, "=", pos); advance(1); continue;
            case '<':
                if (i + 1 < n && source[i + 1] == '=') {
                    push(TokenKind::LessEqual, "<=", pos);
                    advance(2);
                } else {
                    push(TokenKind::Less, "<", pos);
                    advance(1);
                }
                continue;
            case '>':
                if (i + 1 < n && source[i + 1] == '=') {
                    push(TokenKind::GreaterEqual, ">=", pos);
                    advance(2);
                } else {
                    push(TokenKind::Greater, ">", pos);
                    advance(1);
                }
                continue;
            default:
                result.diagnostics.push_back(
                    {Severity::Error, pos, std::string("illegal character '") + c + "'"});
                return result;
        }
    }
    result.tokens.push_back(Token{TokenKind::End, "", 0, SourcePos{line, col}});
    return result;
}

} // namespace deladas::dsl

#pragma once

#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace deladas::xml {

/// The subset of XML this project reads and writes: nested elements with
/// attributes, self-closing tags, comments, and an optional prolog. Element
/// text content is not supported (documents are attribute-driven).
struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;

    const std::string* attribute(std::string_view key) const {
        for (const auto& [k, v] : attributes)
            if (k == key) return &v;
        return nullptr;
    }
};

inline void escape_into(std::string& out, std::string_view text) {
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
}

namespace detail {

inline void write_element(std::string& out, const Element& element, int depth) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += '<';
    out += element.name;
    for (const auto& [key, value] : element.attributes) {
        out += ' ';
        out += key;
        out += "=\"";
        escape_into(out, value);
        out += '"';
    }
    if (element.children.empty()) {
        out += "/>\n";
        return;
    }
    out += ">\n";
    for (const auto& child : element.children) write_element(out, child, depth + 1);
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += "</";
    out += element.name;
    out += ">\n";
}

} // namespace detail

inline std::string write(const Element& root) {
    std::string out;
    detail::write_element(out, root, 0);
    return out;
}

struct ParseOutcome {
    std::optional<Element> root;
    std::string error;

    bool ok() const { return root.has_value(); }
};

namespace detail {

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    ParseOutcome run() {
        ParseOutcome outcome;
        try {
            skip_misc();
            outcome.root = parse_element();
            skip_misc();
            if (pos_ != text_.size()) throw Error{"trailing content after root element"};
        } catch (const Error& e) {
            outcome.root.reset();
            outcome.error = e.message;
        }
        return outcome;
    }

private:
    struct Error {
        std::string message;
    };

    std::string_view text_;
    std::size_t pos_ = 0;

    bool starts_with(std::string_view prefix) const {
        return text_.substr(pos_, prefix.size()) == prefix;
    }
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_whitespace() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    void skip_misc() {
        while (true) {
            skip_whitespace();
            if (starts_with("<?")) {
                auto end = text_.find("?>", pos_);
                if (end == std::string_view::npos) throw Error{"unterminated prolog"};
                pos_ = end + 2;
            } else if (starts_with("<!--")) {
                auto end = text_.find("-->", pos_);
                if (end == std::string_view::npos) throw Error{"unterminated comment"};
                pos_ = end + 3;
            } else {
                return;
            }
        }
    }

    std::string parse_name() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-' ||
                text_[pos_] == '_' || text_[pos_] == ':'))
            ++pos_;
        if (pos_ == start) throw Error{"expected a name"};
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string parse_attribute_value() {
        if (peek() != '"') throw Error{"expected '\"' to open an attribute value"};
        ++pos_;
        std::string value;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '&') {
                if (starts_with("&amp;")) value += '&', pos_ += 5;
                else if (starts_with("&lt;")) value += '<', pos_ += 4;
                else if (starts_with("&gt;")) value += '>', pos_ += 4;
                else if (starts_with("&quot;")) value += '"', pos_ += 6;
                else if (starts_with("&apos;")) value += '\'', pos_ += 6;
                else throw Error{"unknown entity reference"};
            } else {
                value += text_[pos_++];
            }
        }
        if (pos_ == text_.size()) throw Error{"unterminated attribute value"};
        ++pos_;  // closing quote
        return value;
    }

    Element parse_element() {
        if (peek() != '<') throw Error{"expected '<'"};
        ++pos_;
        Element element;
        element.name = parse_name();
        while (true) {
            skip_whitespace();
            if (starts_with("/>")) {
                pos_ += 2;
                return element;
            }
            if (peek() == '>') {
                ++pos_;
                break;
            }
            std::string key = parse_name();
            skip_whitespace();
            if (peek() != '=') throw Error{"expected '=' after attribute name"};
            ++pos_;
            skip_whitespace();
            element.attributes.emplace_back(std::move(key), parse_attribute_value());
        }
        while (true) {
            skip_misc();
            if (starts_with("</")) {
                pos_ += 2;
                std::string closing = parse_name();
                if (closing != element.name)
                    throw Error{"mismatched closing tag '" + closing + "'"};
                skip_whitespace();
                if (peek() != '>') throw Error{"expected '>'"};
                ++pos_;
                return element;
            }
            if (peek() == '<') {
                element.children.push_back(parse_element());
                continue;
            }
            if (pos_ >= text_.size()) throw Error{"unexpected end of document"};
            throw Error{"text content is not supported"};
        }
    }
};

} // namespace detail

inline ParseOutcome parse(std::string_view text) { return detail::Reader(text).run(); }

} // namespace deladas::xml

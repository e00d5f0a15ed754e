#pragma once

#include <string>
#include <vector>

namespace deladas {

struct SourcePos {
    int line = 0;
    int col = 0;

    bool valid() const { return line > 0; }
    friend bool operator==(const SourcePos&, const SourcePos&) = default;
};

enum class Severity { Error, Warning, Note };

struct Diagnostic {
    Severity severity = Severity::Error;
    SourcePos pos;
    std::string message;
};

inline const char* severity_name(Severity s) {
    switch (s) {
        case Severity::Error: return "error";
        case Severity::Warning: return "warning";
        case Severity::Note: return "note";
    }
    return "?";
}

/// Renders "line:col: severity: message"; pos-less diagnostics drop the prefix.
inline std::string format_diagnostic(const Diagnostic& d) {
    std::string out;
    if (d.pos.valid()) {
        out += std::to_string(d.pos.line);
        out += ':';
        out += std::to_string(d.pos.col);
        out += ": ";
    }
    out += severity_name(d.severity);
    out += ": ";
    out += d.message;
    return out;
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags)
        if (d.severity == Severity::Error) return true;
    return false;
}

} // namespace deladas

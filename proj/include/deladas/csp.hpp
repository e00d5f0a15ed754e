#pragma once

#include <bit>
#include <chrono>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace deladas::csp {

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

enum class Relation { Le, Ge, Eq };

inline const char* relation_text(Relation rel) {
    switch (rel) {
        case Relation::Le: return "<=";
        case Relation::Ge: return ">=";
        case Relation::Eq: return "=";
    }
    return "?";
}

struct LinearTerm {
    long long coefficient;
    int var;
};

/// Domains are kept as bitmasks, which caps values at 0..63. Every model
/// this artifact generates is binary.
constexpr int kMaxDomainValue = 63;

struct CspVariable {
    std::uint64_t domain = 0;  // bit i set <=> value i in domain
    std::string label;
};

struct LinearConstraint {
    std::vector<LinearTerm> terms;
    Relation relation = Relation::Le;
    long long bound = 0;
};

class Model {
public:
    int add_variable(std::span<const int> domain, std::string label = {}) {
        if (domain.empty()) throw std::invalid_argument("variable domain must be non-empty");
        std::uint64_t mask = 0;
        for (int value : domain) {
            if (value < 0 || value > kMaxDomainValue)
                throw std::invalid_argument("domain values must be in 0.." +
                                            std::to_string(kMaxDomainValue));
            mask |= std::uint64_t{1} << value;
        }
        variables_.push_back({mask, std::move(label)});
        return static_cast<int>(variables_.size()) - 1;
    }

    int add_variable(std::initializer_list<int> domain, std::string label = {}) {
        return add_variable(std::span<const int>(domain.begin(), domain.size()), std::move(label));
    }

    int add_binary(std::string label = {}) { return add_variable({0, 1}, std::move(label)); }

    void add_linear(std::vector<LinearTerm> terms, Relation relation, long long bound) {
        if (terms.empty()) throw std::invalid_argument("linear constraint needs at least one term");
        for (const auto& t : terms) {
            if (t.var < 0 || t.var >= static_cast<int>(variables_.size()))
                throw std::out_of_range("unknown variable id " + std::to_string(t.var));
            if (t.coefficient == 0)
                throw std::invalid_argument("linear constraint coefficients must be non-zero");
        }
        constraints_.push_back({std::move(terms), relation, bound});
    }

    void add_linear(std::initializer_list<LinearTerm> terms, Relation relation, long long bound) {
        add_linear(std::vector<LinearTerm>(terms), relation, bound);
    }

    std::size_t variable_count() const { return variables_.size(); }
    std::size_t constraint_count() const { return constraints_.size(); }
    const std::vector<CspVariable>& variables() const { return variables_; }
    const std::vector<LinearConstraint>& constraints() const { return constraints_; }

private:
    std::vector<CspVariable> variables_;
    std::vector<LinearConstraint> constraints_;
};

/// Debug text dump: one line per variable, one line per constraint.
inline std::string dump(const Model& model) {
    std::ostringstream os;
    for (std::size_t v = 0; v < model.variable_count(); ++v) {
        const auto& var = model.variables()[v];
        os << "var " << v << " {";
        bool first = true;
        for (int value = 0; value <= kMaxDomainValue; ++value) {
            if (var.domain & (std::uint64_t{1} << value)) {
                if (!first) os << ",";
                first = false;
                os << value;
            }
        }
        os << "}";
        if (!var.label.empty()) os << " " << var.label;
        os << "\n";
    }
    for (std::size_t c = 0; c < model.constraint_count(); ++c) {
        const auto& con = model.constraints()[c];
        os << "con " << c << ":";
        for (const auto& t : con.terms) {
            os << " " << (t.coefficient >= 0 ? "+" : "") << t.coefficient << "*x" << t.var;
        }
        os << " " << relation_text(con.relation) << " " << con.bound << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Solving
// ---------------------------------------------------------------------------

enum class CaptureMode { None, FirstK, All };

struct SolveLimits {
    std::optional<std::uint64_t> max_solutions;
    std::optional<std::chrono::milliseconds> time_budget;
    CaptureMode capture = CaptureMode::None;
    std::uint64_t capture_count = 0;  // used with CaptureMode::FirstK
};

using Assignment = std::vector<std::uint8_t>;

struct EnumerationResult {
    std::uint64_t solution_count = 0;
    std::vector<Assignment> captured;
    bool exhausted = false;
    std::chrono::microseconds elapsed{0};
    std::optional<std::chrono::microseconds> first_solution_latency;
};

struct PropagationResult {
    bool conflict = false;
    int violated_constraint = -1;           // valid when conflict
    std::vector<std::uint64_t> domains;     // fixpoint domains when no conflict
};

namespace detail {

/// Bounds-consistency propagation over linear sums with chronological
/// backtracking. Constraint activity is tracked incrementally: each
/// constraint keeps the minimum and maximum value its sum can still take,
/// updated as domains shrink, and value pruning is only attempted when the
/// remaining slack is smaller than the constraint's largest contribution
/// spread.
class Searcher {
public:
    explicit Searcher(const Model& model)
        : model_(model), n_(static_cast<int>(model.variable_count())) {
        domains_.reserve(n_);
        for (const auto& v : model.variables()) {
            domains_.push_back(v.domain);
            if (!is_singleton(v.domain)) ++unfixed_;
        }

        const auto& cons = model.constraints();
        m_ = static_cast<int>(cons.size());
        lo_.resize(m_);
        hi_.resize(m_);
        min_sum_.resize(m_);
        max_sum_.resize(m_);
        max_gap_.resize(m_);
        in_queue_.assign(m_, false);

        // CSR of variable -> (constraint, coefficient) references
        std::vector<int> counts(n_ + 1, 0);
        for (const auto& c : cons)
            for (const auto& t : c.terms) ++counts[t.var + 1];
        var_refs_offset_.resize(n_ + 1);
        var_refs_offset_[0] = 0;
        for (int v = 0; v < n_; ++v) var_refs_offset_[v + 1] = var_refs_offset_[v] + counts[v + 1];
        var_refs_.resize(var_refs_offset_[n_]);
        {
            std::vector<int> cursor(var_refs_offset_.begin(), var_refs_offset_.end() - 1);
            for (int c = 0; c < m_; ++c)
                for (const auto& t : cons[c].terms)
                    var_refs_[cursor[t.var]++] = {c, t.coefficient};
        }

        constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
        for (int c = 0; c < m_; ++c) {
            const auto& con = cons[c];
            switch (con.relation) {
                case Relation::Le: lo_[c] = -kInf; hi_[c] = con.bound; break;
                case Relation::Ge: lo_[c] = con.bound; hi_[c] = kInf; break;
                case Relation::Eq: lo_[c] = con.bound; hi_[c] = con.bound; break;
            }
            long long mins = 0, maxs = 0, gap = 0;
            for (const auto& t : con.terms) {
                auto [cmin, cmax] = contribution(t.coefficient, domains_[t.var]);
                mins += cmin;
                maxs += cmax;
                gap = std::max(gap, cmax - cmin);
            }
            min_sum_[c] = mins;
            max_sum_[c] = maxs;
            max_gap_[c] = gap;
        }
    }

    /// Root propagation; seeds every constraint. Returns false on conflict.
    bool propagate_root() {
        for (int c = 0; c < m_; ++c) enqueue(c);
        return flush_queue();
    }

    /// Narrows a variable to a single value and propagates to fixpoint.
    bool assign(int var, int value) {
        std::uint64_t mask = std::uint64_t{1} << value;
        if (!(domains_[var] & mask)) return false;
        if (domains_[var] != mask && !shrink(var, mask)) return false;
        return flush_queue();
    }

    const std::vector<std::uint64_t>& domains() const { return domains_; }
    int conflict_constraint() const { return conflict_constraint_; }

    /// Number of variables whose domain is not yet a singleton.
    int unfixed_count() const { return unfixed_; }

    static bool is_singleton(std::uint64_t mask) { return (mask & (mask - 1)) == 0; }

    std::size_t trail_mark() const { return trail_.size(); }

    void restore(std::size_t mark) {
        while (trail_.size() > mark) {
            auto [var, old_mask] = trail_.back();
            trail_.pop_back();
            apply_domain(var, old_mask);
        }
        // drop any pending work left over from a failed propagation
        for (int c : queue_) in_queue_[c] = false;
        queue_.clear();
        conflict_constraint_ = -1;
    }

    int variable_total() const { return n_; }

private:
    static std::pair<long long, long long> contribution(long long coef, std::uint64_t mask) {
        int lo = std::countr_zero(mask);
        int hi = 63 - std::countl_zero(mask);
        if (coef >= 0) return {coef * lo, coef * hi};
        return {coef * hi, coef * lo};
    }

    void enqueue(int c) {
        if (!in_queue_[c]) {
            in_queue_[c] = true;
            queue_.push_back(c);
        }
    }

    /// Writes a new (strictly smaller or restored) domain mask and updates
    /// every affected constraint's sum bounds.
    void apply_domain(int var, std::uint64_t new_mask) {
        std::uint64_t old_mask = domains_[var];
        domains_[var] = new_mask;
        unfixed_ += static_cast<int>(is_singleton(old_mask)) -
                    static_cast<int>(is_singleton(new_mask));
        for (int i = var_refs_offset_[var]; i < var_refs_offset_[var + 1]; ++i) {
            auto [c, coef] = var_refs_[i];
            auto [old_min, old_max] = contribution(coef, old_mask);
            auto [new_min, new_max] = contribution(coef, new_mask);
            min_sum_[c] += new_min - old_min;
            max_sum_[c] += new_max - old_max;
        }
    }

    bool shrink(int var, std::uint64_t new_mask) {
        if (new_mask == 0) return false;
        trail_.emplace_back(var, domains_[var]);
        apply_domain(var, new_mask);
        for (int i = var_refs_offset_[var]; i < var_refs_offset_[var + 1]; ++i)
            enqueue(var_refs_[i].first);
        return true;
    }

    bool flush_queue() {
        while (!queue_.empty()) {
            int c = queue_.back();
            queue_.pop_back();
            in_queue_[c] = false;
            if (!revise(c)) {
                conflict_constraint_ = c;
                for (int pending : queue_) in_queue_[pending] = false;
                queue_.clear();
                return false;
            }
        }
        return true;
    }

    bool revise(int c) {
        if (min_sum_[c] > hi_[c] || max_sum_[c] < lo_[c]) return false;
        bool scan_upper = hi_[c] - min_sum_[c] < max_gap_[c];
        bool scan_lower = max_sum_[c] - lo_[c] < max_gap_[c];
        if (!scan_upper && !scan_lower) return true;

        const auto& terms = model_.constraints()[c].terms;
        for (const auto& t : terms) {
            std::uint64_t mask = domains_[t.var];
            if ((mask & (mask - 1)) == 0) continue;  // fixed
            auto [cmin, cmax] = contribution(t.coefficient, mask);
            long long base_min = min_sum_[c] - cmin;
            long long base_max = max_sum_[c] - cmax;
            std::uint64_t keep = mask;
            std::uint64_t scan = mask;
            while (scan) {
                int value = std::countr_zero(scan);
                scan &= scan - 1;
                long long contrib = t.coefficient * value;
                if ((scan_upper && base_min + contrib > hi_[c]) ||
                    (scan_lower && base_max + contrib < lo_[c]))
                    keep &= ~(std::uint64_t{1} << value);
            }
            if (keep != mask) {
                if (!shrink(t.var, keep)) return false;
                if (min_sum_[c] > hi_[c] || max_sum_[c] < lo_[c]) return false;
            }
        }
        return true;
    }

    const Model& model_;
    int n_ = 0;
    int m_ = 0;
    std::vector<std::uint64_t> domains_;
    std::vector<long long> lo_, hi_, min_sum_, max_sum_, max_gap_;
    std::vector<std::pair<int, long long>> var_refs_;  // (constraint, coefficient)
    std::vector<int> var_refs_offset_;
    std::vector<std::pair<int, std::uint64_t>> trail_;
    std::vector<int> queue_;
    std::vector<bool> in_queue_;
    int conflict_constraint_ = -1;
    int unfixed_ = 0;
};

} // namespace detail

/// Applies a partial assignment on top of root propagation and runs bounds
/// reasoning to fixpoint. Conflicts are results, not errors.
inline PropagationResult propagate(const Model& model,
                                   std::span<const std::pair<int, int>> assignments) {
    detail::Searcher searcher(model);
    PropagationResult result;
    if (!searcher.propagate_root()) {
        result.conflict = true;
        result.violated_constraint = searcher.conflict_constraint();
        return result;
    }
    for (auto [var, value] : assignments) {
        if (var < 0 || var >= static_cast<int>(model.variable_count()))
            throw std::out_of_range("unknown variable id " + std::to_string(var));
        if (!searcher.assign(var, value)) {
            result.conflict = true;
            result.violated_constraint = searcher.conflict_constraint();
            return result;
        }
    }
    result.domains = searcher.domains();
    return result;
}

inline PropagationResult propagate(const Model& model,
                                   std::initializer_list<std::pair<int, int>> assignments) {
    return propagate(model, std::span<const std::pair<int, int>>(assignments.begin(),
                                                                 assignments.size()));
}

struct NullVisitor {
    void operator()(const Assignment&) const {}
};

/// Complete depth-first enumeration with chronological backtracking.
/// Variable order is id-ascending and values are tried in ascending order,
/// so solutions stream in lexicographic order. The visitor is invoked once
/// per solution with the full assignment.
template <class Visitor>
EnumerationResult enumerate(const Model& model, const SolveLimits& limits, Visitor&& visitor) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    EnumerationResult result;
    const int n = static_cast<int>(model.variable_count());

    std::uint64_t capture_limit = 0;
    if (limits.capture == CaptureMode::FirstK) capture_limit = limits.capture_count;
    if (limits.capture == CaptureMode::All)
        capture_limit = std::numeric_limits<std::uint64_t>::max();

    if (limits.time_budget && *limits.time_budget <= std::chrono::milliseconds(0)) {
        result.elapsed =
            std::chrono::duration_cast<std::chrono::microseconds>(clock::now() - start);
        return result;
    }

    detail::Searcher searcher(model);
    if (!searcher.propagate_root()) {
        result.exhausted = true;
        result.elapsed =
            std::chrono::duration_cast<std::chrono::microseconds>(clock::now() - start);
        return result;
    }

    // Only branching points become levels; variables fixed by propagation
    // never enter the stack.
    struct Level {
        int var;
        std::uint64_t candidates;
        std::size_t trail_mark;
    };
    std::vector<Level> levels;
    levels.reserve(n);

    Assignment solution(static_cast<std::size_t>(n));
    std::uint64_t steps = 0;
    bool out_of_time = false;

    auto check_time = [&]() {
        if (!limits.time_budget) return false;
        if ((++steps & 0xFFF) != 0) return false;
        if (clock::now() - start >= *limits.time_budget) {
            out_of_time = true;
            return true;
        }
        return false;
    };

    bool conflict = false;
    while (true) {
        if (!conflict && searcher.unfixed_count() == 0) {
            constexpr bool kMaterialize = !std::is_same_v<std::decay_t<Visitor>, NullVisitor>;
            ++result.solution_count;
            if (!result.first_solution_latency)
                result.first_solution_latency =
                    std::chrono::duration_cast<std::chrono::microseconds>(clock::now() - start);
            if (kMaterialize || result.captured.size() < capture_limit) {
                const auto& domains = searcher.domains();
                for (int v = 0; v < n; ++v)
                    solution[static_cast<std::size_t>(v)] =
                        static_cast<std::uint8_t>(std::countr_zero(domains[v]));
                if (result.captured.size() < capture_limit) result.captured.push_back(solution);
                visitor(std::as_const(solution));
            }
            if (limits.max_solutions && result.solution_count >= *limits.max_solutions) break;
            if (check_time()) break;
            conflict = true;  // force backtracking to the next branch
            continue;
        }
        if (conflict) {
            while (!levels.empty() && levels.back().candidates == 0) {
                searcher.restore(levels.back().trail_mark);
                levels.pop_back();
            }
            if (levels.empty()) {
                result.exhausted = true;
                break;
            }
            Level& level = levels.back();
            searcher.restore(level.trail_mark);
            int value = std::countr_zero(level.candidates);
            level.candidates &= level.candidates - 1;
            conflict = !searcher.assign(level.var, value);
            if (check_time()) break;
            continue;
        }
        // descend: branch on the first variable propagation left open
        int var = levels.empty() ? 0 : levels.back().var + 1;
        while (detail::Searcher::is_singleton(searcher.domains()[var])) ++var;
        std::uint64_t candidates = searcher.domains()[var];
        int value = std::countr_zero(candidates);
        candidates &= candidates - 1;
        levels.push_back({var, candidates, searcher.trail_mark()});
        conflict = !searcher.assign(var, value);
        if (check_time()) break;
    }

    if (out_of_time) result.exhausted = false;
    result.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(clock::now() - start);
    return result;
}

inline EnumerationResult enumerate(const Model& model, const SolveLimits& limits) {
    return enumerate(model, limits, NullVisitor{});
}

/// Exact model count: complete enumeration with no limits and no capture.
inline std::uint64_t count_exact(const Model& model) {
    return enumerate(model, SolveLimits{}).solution_count;
}

} // namespace deladas::csp

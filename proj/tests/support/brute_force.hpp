#pragma once

#include <cstdint>
#include <vector>

#include "deladas/csp.hpp"

namespace testsupport {

/// Independent model-count oracle: walks every full assignment of the
/// model's variables (cartesian product of the declared domains) and
/// evaluates each constraint directly. Exponential; test-only.
inline std::uint64_t brute_force_count(
    const deladas::csp::Model& model,
    std::vector<deladas::csp::Assignment>* solutions = nullptr) {
    const auto& vars = model.variables();
    const std::size_t n = vars.size();

    std::vector<std::vector<int>> domains(n);
    for (std::size_t v = 0; v < n; ++v)
        for (int value = 0; value <= deladas::csp::kMaxDomainValue; ++value)
            if (vars[v].domain & (std::uint64_t{1} << value)) domains[v].push_back(value);

    std::vector<std::size_t> cursor(n, 0);
    std::uint64_t count = 0;
    while (true) {
        bool satisfied = true;
        for (const auto& con : model.constraints()) {
            long long sum = 0;
            for (const auto& t : con.terms)
                sum += t.coefficient * domains[t.var][cursor[t.var]];
            bool holds = false;
            switch (con.relation) {
                case deladas::csp::Relation::Le: holds = sum <= con.bound; break;
                case deladas::csp::Relation::Ge: holds = sum >= con.bound; break;
                case deladas::csp::Relation::Eq: holds = sum == con.bound; break;
            }
            if (!holds) {
                satisfied = false;
                break;
            }
        }
        if (satisfied) {
            ++count;
            if (solutions) {
                deladas::csp::Assignment a(n);
                for (std::size_t v = 0; v < n; ++v)
                    a[v] = static_cast<std::uint8_t>(domains[v][cursor[v]]);
                solutions->push_back(std::move(a));
            }
        }
        // odometer step, most significant variable first so the order is
        // lexicographic in (variable id, ascending value)
        std::size_t v = n;
        while (v > 0) {
            --v;
            if (++cursor[v] < domains[v].size()) break;
            cursor[v] = 0;
            if (v == 0) return count;
        }
        if (n == 0) return count;
    }
}

} // namespace testsupport

// deladas — desired-state management for distributed applications.
//
// Subcommands cover the whole pipeline: check a description, count or emit
// compliant configurations, pick one against a current deployment, validate
// a configuration, replay failure scenarios in the simulator, and reproduce
// the bundled experiment table.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "deladas/compiler.hpp"
#include "deladas/delta.hpp"
#include "deladas/printer.hpp"
#include "deladas/resolver.hpp"
#include "deladas/sim/realm.hpp"
#include "deladas/validate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiagnostics = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitLimitWithoutSolution = 3;

std::string read_file_or_exit(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open " << path << "\n";
        std::exit(kExitDiagnostics);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string stem_of(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

void print_diagnostics(const std::string& path, const std::vector<deladas::Diagnostic>& diags) {
    for (const auto& d : diags) std::cerr << path << ":" << deladas::format_diagnostic(d) << "\n";
}

deladas::dsl::DesiredStateDescription load_dsd_or_exit(const std::string& path,
                                                       int max_count_override) {
    auto result = deladas::dsl::load_dsd(read_file_or_exit(path), stem_of(path));
    print_diagnostics(path, result.diagnostics);
    if (!result.ok()) std::exit(kExitDiagnostics);
    if (max_count_override > 0) result.dsd->max_instances_per_host = max_count_override;
    return *result.dsd;
}

deladas::csp::SolveLimits make_limits(std::uint64_t limit, double budget_seconds) {
    deladas::csp::SolveLimits limits;
    if (limit > 0) limits.max_solutions = limit;
    if (budget_seconds > 0)
        limits.time_budget =
            std::chrono::milliseconds(static_cast<long long>(budget_seconds * 1000.0));
    return limits;
}

int count_exit_code(const deladas::csp::EnumerationResult& result) {
    if (result.solution_count > 0) return kExitOk;
    return result.exhausted ? kExitInfeasible : kExitLimitWithoutSolution;
}

std::string format_seconds(std::optional<std::chrono::microseconds> duration) {
    if (!duration) return "-";
    std::ostringstream os;
    os << std::fixed << std::setprecision(3)
       << static_cast<double>(duration->count()) / 1'000'000.0 << "s";
    return os.str();
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        std::exit(kExitDiagnostics);
    }
    out << content;
}

deladas::config::PickerWeights parse_weights(const std::string& spec) {
    deladas::config::PickerWeights weights;
    if (spec.empty()) return weights;
    std::istringstream in(spec);
    char comma = 0;
    if (!(in >> weights.deploy >> comma >> weights.undeploy >> comma >> weights.rebind)) {
        std::cerr << "error: --weights expects three comma-separated integers\n";
        std::exit(kExitDiagnostics);
    }
    if (weights.deploy < 1 || weights.undeploy < 1 || weights.rebind < 1) {
        std::cerr << "error: picker weights must be positive\n";
        std::exit(kExitDiagnostics);
    }
    return weights;
}

int run_check(const std::string& path, bool print_canonical) {
    auto result = deladas::dsl::load_dsd(read_file_or_exit(path), stem_of(path));
    print_diagnostics(path, result.diagnostics);
    if (!result.ok()) return kExitDiagnostics;
    if (print_canonical) std::cout << deladas::dsl::pretty_print(*result.dsd);
    std::cerr << path << ": ok\n";
    return kExitOk;
}

int run_count(const std::string& path, int max_count, std::uint64_t limit, double budget,
              bool explain) {
    auto dsd = load_dsd_or_exit(path, max_count);
    try {
        auto outcome =
            deladas::compile::count_configurations(dsd, make_limits(limit, budget));
        for (const auto& w : outcome.csp.warnings)
            std::cerr << path << ": " << deladas::format_diagnostic(w) << "\n";
        if (explain) std::cerr << deladas::compile::explain_report(outcome.csp);
        std::cout << "variables=" << outcome.csp.model.variable_count()
                  << " solutions=" << outcome.result.solution_count << " exhausted="
                  << (outcome.result.exhausted ? "true" : "false")
                  << " first-solution=" << format_seconds(outcome.result.first_solution_latency)
                  << "\n";
        return count_exit_code(outcome.result);
    } catch (const deladas::compile::CompileError& e) {
        std::cerr << path << ":" << e.pos.line << ":" << e.pos.col << ": error: " << e.message
                  << "\n";
        return kExitDiagnostics;
    }
}

int run_solve(const std::string& path, int max_count, std::uint64_t limit, double budget,
              const std::string& output_dir) {
    auto dsd = load_dsd_or_exit(path, max_count);
    std::filesystem::create_directories(output_dir);
    std::uint64_t written = 0;
    try {
        auto outcome = deladas::compile::enumerate_configurations(
            dsd, make_limits(limit, budget),
            [&](const deladas::config::ConfigurationDescription& cdd) {
                std::ostringstream name;
                name << "solution-" << std::setw(6) << std::setfill('0') << ++written << ".cdd";
                write_output((std::filesystem::path(output_dir) / name.str()).string(),
                             deladas::config::serialize_cdd(cdd));
            });
        std::cout << "solutions=" << outcome.result.solution_count
                  << " written=" << written << " exhausted="
                  << (outcome.result.exhausted ? "true" : "false") << "\n";
        return count_exit_code(outcome.result);
    } catch (const deladas::compile::CompileError& e) {
        std::cerr << path << ":" << e.pos.line << ":" << e.pos.col << ": error: " << e.message
                  << "\n";
        return kExitDiagnostics;
    }
}

int run_pick(const std::string& path, int max_count, const std::string& current_path,
             const std::string& policy_name, const std::string& weights_spec, std::uint64_t cap,
             double budget, const std::string& output) {
    auto dsd = load_dsd_or_exit(path, max_count);

    deladas::config::PickerPolicy policy;
    policy.kind = policy_name == "min-delta" ? deladas::config::PickerPolicy::Kind::MinDelta
                                             : deladas::config::PickerPolicy::Kind::First;
    policy.weights = parse_weights(weights_spec);
    if (cap > 0) policy.candidate_cap = cap;
    if (budget > 0)
        policy.time_budget =
            std::chrono::milliseconds(static_cast<long long>(budget * 1000.0));

    std::optional<deladas::config::ConfigurationDescription> current;
    if (!current_path.empty()) {
        auto parsed = deladas::config::parse_cdd(read_file_or_exit(current_path));
        if (!parsed.ok()) {
            std::cerr << current_path << ": error: " << parsed.error << "\n";
            return kExitDiagnostics;
        }
        current = std::move(*parsed.cdd);
    }

    deladas::config::Picker picker(policy, current, &dsd);
    deladas::csp::SolveLimits limits = make_limits(cap, budget);
    if (policy.kind == deladas::config::PickerPolicy::Kind::First && !dsd.optimise)
        limits.max_solutions = 1;
    try {
        auto outcome = deladas::compile::enumerate_configurations(
            dsd, limits,
            [&](const deladas::config::ConfigurationDescription& cdd) { picker.offer(cdd); });
        auto picked = picker.finish();
        if (!picked.chosen) {
            std::cerr << "no configuration\n";
            return outcome.result.exhausted ? kExitInfeasible : kExitLimitWithoutSolution;
        }
        std::cerr << "candidates=" << picked.candidates_seen << " cost=" << picked.cost << "\n";
        write_output(output, deladas::config::serialize_cdd(*picked.chosen));
        return kExitOk;
    } catch (const deladas::compile::CompileError& e) {
        std::cerr << path << ":" << e.pos.line << ":" << e.pos.col << ": error: " << e.message
                  << "\n";
        return kExitDiagnostics;
    }
}

int run_validate(const std::string& cdd_path, const std::string& dsd_path, int max_count) {
    auto dsd = load_dsd_or_exit(dsd_path, max_count);
    auto parsed = deladas::config::parse_cdd(read_file_or_exit(cdd_path));
    if (!parsed.ok()) {
        std::cerr << cdd_path << ": error: " << parsed.error << "\n";
        return kExitDiagnostics;
    }
    if (parsed.cdd->dsd_ref != deladas::config::dsd_reference(dsd))
        std::cerr << "warning: configuration references '" << parsed.cdd->dsd_ref
                  << "' but the description resolves to '"
                  << deladas::config::dsd_reference(dsd) << "'\n";
    auto report = deladas::config::validate(*parsed.cdd, dsd);
    std::cout << deladas::config::format_report(report);
    return report.compliant() ? kExitOk : kExitDiagnostics;
}

int run_simulate(const std::string& path, const std::string& script_path, std::uint64_t seed,
                 int ticks, deladas::sim::Tick tick_period, std::uint64_t cap,
                 const std::string& weights_spec, const std::string& output) {
    auto dsd = load_dsd_or_exit(path, 0);

    std::vector<deladas::sim::Fault> faults;
    if (!script_path.empty()) {
        auto parsed = deladas::sim::parse_fault_script(read_file_or_exit(script_path));
        if (!parsed.ok()) {
            std::cerr << script_path << ": error: " << parsed.error << "\n";
            return kExitDiagnostics;
        }
        faults = std::move(parsed.faults);
    }

    deladas::sim::RealmOptions options;
    options.seed = seed;
    options.tick_period = tick_period;
    if (cap > 0) options.candidate_cap = cap;
    options.weights = parse_weights(weights_spec);

    deladas::sim::Realm realm(dsd, options);
    bool deployed = realm.deploy_initial();
    realm.schedule_faults(faults);

    if (ticks <= 0) {
        deladas::sim::Tick horizon = 0;
        for (const auto& f : faults) horizon = std::max(horizon, f.at);
        ticks = static_cast<int>(horizon / options.tick_period) + 2;
    }
    realm.run_ticks(ticks);
    write_output(output, realm.runtime().log().to_text());
    return deployed ? kExitOk : kExitInfeasible;
}

int run_bench(const std::string& dir, std::uint64_t limit, double budget) {
    int worst = kExitOk;
    for (int i = 1; i <= 11; ++i) {
        std::string name = "exp" + std::to_string(i);
        std::string path = (std::filesystem::path(dir) / (name + ".deladas")).string();
        if (!std::filesystem::exists(path)) {
            std::cerr << "error: missing " << path << "\n";
            return kExitDiagnostics;
        }
        auto dsd = load_dsd_or_exit(path, 0);
        auto outcome = deladas::compile::count_configurations(dsd, make_limits(limit, budget));
        std::cout << name << " variables=" << outcome.csp.model.variable_count() << " solutions="
                  << (outcome.result.exhausted ? "" : ">=") << outcome.result.solution_count
                  << " exhausted=" << (outcome.result.exhausted ? "true" : "false")
                  << " first-solution=" << format_seconds(outcome.result.first_solution_latency)
                  << "\n";
        worst = std::max(worst, count_exit_code(outcome.result) == kExitOk ? kExitOk : worst);
    }
    return worst;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deladas — desired-state management for distributed applications"};
    app.require_subcommand(1);

    std::string input, cdd_path, dsd_path, script_path, current_path;
    std::string output, output_dir = "solutions", policy = "first", weights, bench_dir = "experiments";
    std::uint64_t limit = 0, cap = 0, seed = 0;
    double budget = 0;
    int max_count = 0, ticks = 0;
    deladas::sim::Tick tick_period = 10;
    bool print_canonical = false, explain = false;

    CLI::App* check = app.add_subcommand("check", "parse and resolve a description");
    check->add_option("input", input, "description (.deladas)")->required();
    check->add_flag("--print", print_canonical, "emit the canonical pretty-printed form");

    CLI::App* count = app.add_subcommand("count", "count compliant configurations");
    count->add_option("input", input)->required();
    count->add_option("--limit", limit, "stop after this many solutions");
    count->add_option("--time-budget", budget, "wall-clock budget in seconds");
    count->add_option("--max-count", max_count, "override maxInstancesPerHost");
    count->add_flag("--explain", explain, "report how each constraint was lowered");

    CLI::App* solve = app.add_subcommand("solve", "emit configurations as CDD XML files");
    solve->add_option("input", input)->required();
    solve->add_option("--limit", limit)->default_val(1);
    solve->add_option("--time-budget", budget);
    solve->add_option("--max-count", max_count);
    solve->add_option("--output", output_dir, "directory for solution-NNNNNN.cdd files");

    CLI::App* pick = app.add_subcommand("pick", "choose one configuration");
    pick->add_option("input", input)->required();
    pick->add_option("--current", current_path, "current deployment (.cdd)");
    pick->add_option("--policy", policy)->check(CLI::IsMember({"first", "min-delta"}));
    pick->add_option("--weights", weights, "deploy,undeploy,rebind (positive integers)");
    pick->add_option("--limit", cap, "candidate cap")->default_val(100000);
    pick->add_option("--time-budget", budget);
    pick->add_option("--max-count", max_count);
    pick->add_option("--output", output, "file for the chosen CDD (default stdout)");

    CLI::App* validate = app.add_subcommand("validate", "check a configuration against a description");
    validate->add_option("cdd", cdd_path, "configuration (.cdd)")->required();
    validate->add_option("--dsd", dsd_path, "description (.deladas)")->required();
    validate->add_option("--max-count", max_count);

    CLI::App* simulate = app.add_subcommand("simulate", "deploy and run under a fault script");
    simulate->add_option("input", input)->required();
    simulate->add_option("--script", script_path, "fault script");
    simulate->add_option("--seed", seed);
    simulate->add_option("--ticks", ticks, "number of monitoring periods (default: script end + 2)");
    simulate->add_option("--tick-period", tick_period);
    simulate->add_option("--limit", cap, "candidate cap for re-solving");
    simulate->add_option("--weights", weights);
    simulate->add_option("--output", output, "event log file (default stdout)");

    CLI::App* bench = app.add_subcommand("bench", "reproduce the bundled experiment table");
    bench->add_option("--dir", bench_dir, "directory holding exp1..exp11.deladas");
    bench->add_option("--limit", limit)->default_val(1000000);
    bench->add_option("--time-budget", budget)->default_val(10.0);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*check) return run_check(input, print_canonical);
        if (*count) return run_count(input, max_count, limit, budget, explain);
        if (*solve) return run_solve(input, max_count, limit, budget, output_dir);
        if (*pick)
            return run_pick(input, max_count, current_path, policy, weights, cap, budget, output);
        if (*validate) return run_validate(cdd_path, dsd_path, max_count);
        if (*simulate)
            return run_simulate(input, script_path, seed, ticks, tick_period, cap, weights, output);
        if (*bench) return run_bench(bench_dir, limit, budget);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiagnostics;
    }
    return kExitDiagnostics;
}

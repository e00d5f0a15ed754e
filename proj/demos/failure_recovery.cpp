// Desired-state reconciliation in action: deploy the bundled maths service,
// crash a host it depends on, and watch the realm manager re-solve and
// repair. Run from the repository root so experiments/exp11.deladas resolves.

#include <fstream>
#include <iostream>
#include <sstream>

#include "deladas/resolver.hpp"
#include "deladas/sim/realm.hpp"

int main(int argc, char** argv) {
    std::string path = argc > 1 ? argv[1] : "experiments/exp11.deladas";
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "cannot open " << path << " (run from the repository root)\n";
        return 1;
    }
    std::ostringstream source;
    source << in.rdbuf();

    auto loaded = deladas::dsl::load_dsd(source.str(), "maths");
    if (!loaded.ok()) {
        for (const auto& d : loaded.diagnostics)
            std::cerr << path << ":" << deladas::format_diagnostic(d) << "\n";
        return 1;
    }

    deladas::sim::RealmOptions options;
    options.candidate_cap = 300000;
    deladas::sim::Realm realm(*loaded.dsd, options);
    if (!realm.deploy_initial()) {
        std::cerr << "no compliant configuration\n";
        return 2;
    }

    auto faults = deladas::sim::parse_fault_script("at 15 host-crash h3\n");
    realm.schedule_faults(faults.faults);
    realm.run_ticks(4);

    std::cout << realm.runtime().log().to_text();
    return 0;
}

// Smallest end-to-end use of the library: describe a client/server
// application inline, compile it, and count the compliant configurations.

#include <iostream>

#include "deladas/compiler.hpp"
#include "deladas/resolver.hpp"

int main() {
    const char* source = R"(
interface IGreeter (
  type = "java"
  specification = "com.example.IGreeter"
  implementation = "http://example.org/greeter.jar"
)

component type GreeterService (
  provides interface IGreeter
  implementation "http://example.org/greeter.jar"
  instantiate impl with com.example.Greeter()
  satisfy IGreeter using impl
)

component type Frontend (
  requires IGreeter greeter
  implementation "http://example.org/frontend.jar"
  instantiate impl with com.example.Frontend()
  bind greeter with impl.setGreeter()
)

host h1 (speed = 2000)
host h2 (speed = 2000)
host h3 (speed = 1000)

constraintSet layout (
  forall host h in deployment (card(getComponents(h)) <= 1)
  and
  card(instancesOf(Frontend in deployment)) >= 1
)
)";

    auto loaded = deladas::dsl::load_dsd(source, "greeter");
    if (!loaded.ok()) {
        for (const auto& d : loaded.diagnostics)
            std::cerr << deladas::format_diagnostic(d) << "\n";
        return 1;
    }

    auto outcome = deladas::compile::count_configurations(*loaded.dsd, {});
    std::cout << "variables: " << outcome.csp.model.variable_count() << "\n"
              << "configurations: " << outcome.result.solution_count << "\n";

    // stream the first few concrete configurations
    deladas::csp::SolveLimits limits;
    limits.max_solutions = 3;
    deladas::compile::enumerate_configurations(
        *loaded.dsd, limits, [](const deladas::config::ConfigurationDescription& cdd) {
            std::cout << "---\n" << deladas::config::serialize_cdd(cdd);
        });
    return 0;
}

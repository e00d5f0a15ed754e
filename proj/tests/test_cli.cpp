#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "support/files.hpp"

// End-to-end checks of the command-line tool: real process invocations,
// captured output, exact exit codes.

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
    std::string command = std::string(DELADAS_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buffer{};
    RunResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::size_t n = fread(buffer.data(), 1, buffer.size(), pipe))
        result.output.append(buffer.data(), n);
    int status = pclose(pipe);
    result.exit_code = WEXITSTATUS(status);
    return result;
}

std::string exp(const std::string& name) { return testsupport::experiment_path(name); }

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "deladas-cli-tests";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("count reports the documented line for exp7 and exp5") {
    auto exp7 = run_cli("count " + exp("exp7.deladas"));
    CHECK(exp7.exit_code == 0);
    CHECK(exp7.output.find("variables=80 solutions=104 exhausted=true") != std::string::npos);

    auto exp5 = run_cli("count " + exp("exp5.deladas"));
    CHECK(exp5.exit_code == 0);
    CHECK(exp5.output.find("variables=16 solutions=65536 exhausted=true") != std::string::npos);
}

TEST_CASE("check is quiet on clean input and exits 1 with positioned diagnostics") {
    auto ok = run_cli("check " + exp("exp11.deladas"));
    CHECK(ok.exit_code == 0);

    auto bad_path = temp_dir() / "bad.deladas";
    testsupport::write_file(bad_path.string(), "host h1 extends (speed = 1)\n");
    auto bad = run_cli("check " + bad_path.string());
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("1:17: error: expected") != std::string::npos);
}

TEST_CASE("solve + validate round-trip through files") {
    auto dir = temp_dir() / "exp7-solutions";
    std::filesystem::remove_all(dir);
    auto solved = run_cli("solve " + exp("exp7.deladas") + " --limit 2 --output " + dir.string());
    CHECK(solved.exit_code == 0);
    REQUIRE(std::filesystem::exists(dir / "solution-000001.cdd"));

    auto valid = run_cli("validate " + (dir / "solution-000001.cdd").string() + " --dsd " +
                         exp("exp7.deladas"));
    CHECK(valid.exit_code == 0);
    CHECK(valid.output.find("compliant: true") != std::string::npos);
}

TEST_CASE("validate exits 1 naming the violated conjunct on a mutated configuration") {
    auto path = temp_dir() / "mutated.cdd";
    // two instances on one host violate the per-host cardinality constraint
    testsupport::write_file(path.string(),
                            "<cdd dsd=\"exp7@0\">\n"
                            "  <instance host=\"h1\" type=\"Server\" index=\"1\"/>\n"
                            "  <instance host=\"h1\" type=\"Client\" index=\"1\"/>\n"
                            "  <connection client-host=\"h1\" client-type=\"Client\""
                            " client-index=\"1\" port=\"service\" server-host=\"h1\""
                            " server-type=\"Server\" server-index=\"1\"/>\n"
                            "</cdd>\n");
    auto result = run_cli("validate " + path.string() + " --dsd " + exp("exp7.deladas") +
                          " --max-count 2");
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("conjunct placementCons[0]: fail") != std::string::npos);
    CHECK(result.output.find("witness=") != std::string::npos);
}

TEST_CASE("infeasible models exit 2, limit-without-solution exits 3") {
    auto infeasible_path = temp_dir() / "infeasible.deladas";
    testsupport::write_file(infeasible_path.string(),
                            "component type Node (\n"
                            "  implementation \"http://e/n.jar\"\n"
                            "  instantiate impl with com.example.Node()\n"
                            ")\n"
                            "host h1 (speed = 1)\n"
                            "constraintSet c (card(instancesOf(Node in deployment)) >= 5)\n");
    CHECK(run_cli("count " + infeasible_path.string()).exit_code == 2);
    CHECK(run_cli("count " + exp("exp8.deladas") + " --time-budget 0.000001").exit_code == 3);
}

TEST_CASE("pick against a current deployment reports zero cost for itself") {
    auto dir = temp_dir() / "exp7-pick";
    std::filesystem::remove_all(dir);
    run_cli("solve " + exp("exp7.deladas") + " --limit 5 --output " + dir.string());
    auto picked = run_cli("pick " + exp("exp7.deladas") + " --current " +
                          (dir / "solution-000004.cdd").string() +
                          " --policy min-delta --limit 200 --output " +
                          (dir / "picked.cdd").string());
    CHECK(picked.exit_code == 0);
    CHECK(picked.output.find("cost=0") != std::string::npos);
    CHECK(testsupport::read_file((dir / "picked.cdd").string()) ==
          testsupport::read_file((dir / "solution-000004.cdd").string()));
}

TEST_CASE("simulate produces identical logs for identical inputs and seeds") {
    auto script = temp_dir() / "faults.txt";
    testsupport::write_file(script.string(), "at 15 host-crash h1\nat 25 host-crash h2\n");
    std::string base = "simulate " + exp("exp11.deladas") + " --script " + script.string() +
                       " --seed 11 --limit 300000";
    auto first = run_cli(base);
    auto second = run_cli(base);
    CHECK(first.exit_code == 0);
    CHECK(first.output == second.output);
    CHECK(first.output.find("tick") != std::string::npos);
}

TEST_CASE("bench emits one machine-parseable row per experiment") {
    auto result = run_cli("bench --dir " + std::string(DELADAS_EXPERIMENTS_DIR) +
                          " --limit 500 --time-budget 1");
    CHECK(result.output.find("exp1 variables=1 solutions=2 exhausted=true") != std::string::npos);
    CHECK(result.output.find("exp7 variables=80 solutions=104 exhausted=true") !=
          std::string::npos);
    CHECK(result.output.find("exp9 variables=16640 solutions=>=") != std::string::npos);
    CHECK(result.output.find("exp10 variables=263168 solutions=>=") != std::string::npos);
    int rows = 0;
    for (std::size_t at = 0; (at = result.output.find("first-solution=", at)) != std::string::npos;
         ++at)
        ++rows;
    CHECK(rows == 11);
}

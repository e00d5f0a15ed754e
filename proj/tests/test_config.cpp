#include <doctest.h>

#include <random>

#include "deladas/compiler.hpp"
#include "deladas/delta.hpp"
#include "deladas/resolver.hpp"
#include "deladas/validate.hpp"
#include "support/files.hpp"

using namespace deladas;
using namespace deladas::config;
using testsupport::experiment_path;
using testsupport::read_file;

static dsl::DesiredStateDescription load_experiment(const std::string& file) {
    auto result = dsl::load_dsd(read_file(experiment_path(file)), file);
    REQUIRE(result.ok());
    return *result.dsd;
}

static ConfigurationDescription make_cdd(
    std::string ref, std::vector<InstanceRef> instances,
    std::vector<ConnectionRef> connections = {}) {
    ConfigurationDescription cdd;
    cdd.dsd_ref = std::move(ref);
    cdd.instances = std::move(instances);
    cdd.connections = std::move(connections);
    cdd.normalize();
    return cdd;
}

TEST_CASE("empty configuration serializes to a bare root element") {
    ConfigurationDescription cdd;
    cdd.dsd_ref = "maths@1234";
    CHECK(serialize_cdd(cdd) == "<cdd dsd=\"maths@1234\"/>\n");
    auto parsed = parse_cdd(serialize_cdd(cdd));
    REQUIRE(parsed.ok());
    CHECK(*parsed.cdd == cdd);
}

TEST_CASE("instances and connections appear in canonical order") {
    auto cdd = make_cdd("d@1",
                        {{"h2", "Server", 1}, {"h1", "Client", 1}},
                        {{{"h1", "Client", 1}, "service", {"h2", "Server", 1}}});
    std::string xml = serialize_cdd(cdd);
    CHECK(xml ==
          "<cdd dsd=\"d@1\">\n"
          "  <instance host=\"h1\" type=\"Client\" index=\"1\"/>\n"
          "  <instance host=\"h2\" type=\"Server\" index=\"1\"/>\n"
          "  <connection client-host=\"h1\" client-type=\"Client\" client-index=\"1\""
          " port=\"service\" server-host=\"h2\" server-type=\"Server\" server-index=\"1\"/>\n"
          "</cdd>\n");
    auto parsed = parse_cdd(xml);
    REQUIRE(parsed.ok());
    CHECK(*parsed.cdd == cdd);
}

TEST_CASE("cdd parse errors") {
    CHECK(parse_cdd("<cdd dsd=\"x\"").error.find("malformed XML") != std::string::npos);
    CHECK(parse_cdd("<cdd dsd=\"x\"><widget/></cdd>").error.find("unknown element") !=
          std::string::npos);
    CHECK(parse_cdd("<cdd dsd=\"x\"><instance host=\"h\" type=\"T\" index=\"1\" extra=\"y\"/></cdd>")
              .error.find("unknown attribute") != std::string::npos);
    CHECK(parse_cdd("<cdd dsd=\"x\">"
                    "<connection client-host=\"h1\" client-type=\"C\" client-index=\"1\""
                    " port=\"p\" server-host=\"h2\" server-type=\"S\" server-index=\"1\"/>"
                    "</cdd>")
              .error.find("dangling endpoint") != std::string::npos);
    CHECK(parse_cdd("<cdd dsd=\"x\"><instance host=\"h\" type=\"T\" index=\"2\"/></cdd>")
              .error.find("contiguous") != std::string::npos);
}

TEST_CASE("serialize/parse round-trips every exp7 solution") {
    auto dsd = load_experiment("exp7.deladas");
    std::size_t checked = 0;
    compile::enumerate_configurations(dsd, {}, [&](const ConfigurationDescription& cdd) {
        auto parsed = parse_cdd(serialize_cdd(cdd));
        REQUIRE(parsed.ok());
        REQUIRE(*parsed.cdd == cdd);
        ++checked;
    });
    CHECK(checked == 104);
}

TEST_CASE("serialization is injective over the exp7 space") {
    auto dsd = load_experiment("exp7.deladas");
    std::set<std::string> texts;
    std::size_t total = 0;
    compile::enumerate_configurations(dsd, {}, [&](const ConfigurationDescription& cdd) {
        texts.insert(serialize_cdd(cdd));
        ++total;
    });
    CHECK(texts.size() == total);
}

TEST_CASE("every exp7 solution validates against its description") {
    auto dsd = load_experiment("exp7.deladas");
    std::size_t compliant = 0;
    compile::enumerate_configurations(dsd, {}, [&](const ConfigurationDescription& cdd) {
        if (validate(cdd, dsd).compliant()) ++compliant;
    });
    CHECK(compliant == 104);
}

TEST_CASE("deleting a connection fails binding completeness with a witness") {
    auto dsd = load_experiment("exp7.deladas");
    std::string ref = dsd_reference(dsd);
    auto cdd = make_cdd(ref, {{"h1", "Client", 1}, {"h2", "Server", 1}},
                        {{{"h1", "Client", 1}, "service", {"h2", "Server", 1}}});
    REQUIRE(validate(cdd, dsd).compliant());

    auto broken = make_cdd(ref, {{"h1", "Client", 1}, {"h2", "Server", 1}});
    auto report = validate(broken, dsd);
    CHECK(!report.compliant());
    REQUIRE(report.binding_failures.size() == 1);
    CHECK(report.binding_failures[0] == "(h1/Client/1, service) bound 0 times");
}

TEST_CASE("constraint conjuncts are evaluated directly with witnesses") {
    auto dsd = load_experiment("exp11.deladas");
    std::string ref = dsd_reference(dsd);
    // two maths services only: violates card(instancesOf(MathsService)) >= 3
    auto cdd = make_cdd(
        ref,
        {{"h1", "MathsService", 1},
         {"h2", "MathsService", 1},
         {"h6", "MultiplicationService", 1},
         {"h7", "AdditionService", 1}},
        {{{"h1", "MathsService", 1}, "multiplication", {"h6", "MultiplicationService", 1}},
         {{"h1", "MathsService", 1}, "addition", {"h7", "AdditionService", 1}},
         {{"h2", "MathsService", 1}, "multiplication", {"h6", "MultiplicationService", 1}},
         {{"h2", "MathsService", 1}, "addition", {"h7", "AdditionService", 1}}});
    auto report = validate(cdd, dsd);
    CHECK(!report.compliant());
    REQUIRE(report.conjuncts.size() == 4);
    CHECK(report.conjuncts[0].passed);
    CHECK(report.conjuncts[1].passed);
    CHECK(report.conjuncts[2].passed);
    CHECK(!report.conjuncts[3].passed);
    CHECK(report.conjuncts[3].witness.find("is 2 >= 3") != std::string::npos);

    // a maths service on a slow host violates the speed predicate
    auto slow = make_cdd(
        ref,
        {{"h6", "MathsService", 1},
         {"h7", "MultiplicationService", 1},
         {"h8", "AdditionService", 1}},
        {{{"h6", "MathsService", 1}, "multiplication", {"h7", "MultiplicationService", 1}},
         {{"h6", "MathsService", 1}, "addition", {"h8", "AdditionService", 1}}});
    auto slow_report = validate(slow, dsd);
    CHECK(!slow_report.conjuncts[0].passed);
    CHECK(slow_report.conjuncts[0].witness.find("mathsComponent=h6/MathsService/1") !=
          std::string::npos);
}

TEST_CASE("unknown types and hosts are validation errors") {
    auto dsd = load_experiment("exp7.deladas");
    auto report = validate(make_cdd("x", {{"h1", "Widget", 1}}), dsd);
    REQUIRE(!report.errors.empty());
    CHECK(report.errors[0].message.find("unknown type 'Widget'") != std::string::npos);
    auto report2 = validate(make_cdd("x", {{"h99", "Client", 1}}), dsd);
    REQUIRE(!report2.errors.empty());
    CHECK(report2.errors[0].message.find("unknown host 'h99'") != std::string::npos);
}

TEST_CASE("dynamic conjuncts are runtime-only for the static validator") {
    std::string source = read_file(experiment_path("exp11.deladas"));
    source +=
        "\nconstraintSet loadCons (\n"
        "  forall MathsService m in deployment (m.queriesPerSecond <= 100)\n"
        ")\n";
    auto result = dsl::load_dsd(source, "maths");
    REQUIRE(result.ok());
    ConfigurationDescription empty;
    empty.dsd_ref = dsd_reference(*result.dsd);
    auto report = validate(empty, *result.dsd);
    bool found = false;
    for (const auto& c : report.conjuncts)
        if (c.constraint_set == "loadCons") {
            found = true;
            CHECK(c.runtime_only);
        }
    CHECK(found);
}

// ---------------------------------------------------------------------------
// deltas
// ---------------------------------------------------------------------------

TEST_CASE("delta identities") {
    auto x = make_cdd("d@1", {{"h1", "A", 1}, {"h2", "B", 1}},
                      {{{"h1", "A", 1}, "p", {"h2", "B", 1}}});
    SUBCASE("identical configurations need no actions") {
        auto d = delta(x, x);
        CHECK(d.empty());
        CHECK(d.cost == 0);
        CHECK(apply_delta(x, d) == x);
    }
    SUBCASE("from empty everything is a deploy with free initial binds") {
        ConfigurationDescription empty;
        empty.dsd_ref = "d@1";
        auto d = delta(empty, x);
        CHECK(d.undeploy.empty());
        CHECK(d.deploy.size() == 2);
        CHECK(d.rebinds.empty());
        CHECK(d.cost == 2);
        CHECK(apply_delta(empty, d) == x);
    }
    SUBCASE("mismatched references are rejected") {
        auto y = make_cdd("other@2", {{"h1", "A", 1}});
        CHECK_THROWS_AS(delta(x, y), std::invalid_argument);
    }
}

TEST_CASE("server move produces undeploy + deploy + rebind at cost 3") {
    auto current = make_cdd("d@1", {{"h1", "Client", 1}, {"h2", "Server", 1}},
                            {{{"h1", "Client", 1}, "service", {"h2", "Server", 1}}});
    auto target = make_cdd("d@1", {{"h1", "Client", 1}, {"h3", "Server", 1}},
                           {{{"h1", "Client", 1}, "service", {"h3", "Server", 1}}});
    auto d = delta(current, target);
    REQUIRE(d.undeploy.size() == 1);
    CHECK(d.undeploy[0] == InstanceRef{"h2", "Server", 1});
    REQUIRE(d.deploy.size() == 1);
    CHECK(d.deploy[0] == InstanceRef{"h3", "Server", 1});
    REQUIRE(d.rebinds.size() == 1);
    CHECK(d.rebinds[0] == RebindAction{{"h1", "Client", 1}, "service", {"h3", "Server", 1}});
    CHECK(d.cost == 3);
    CHECK(apply_delta(current, d) == target);
}

TEST_CASE("weights scale the delta cost") {
    auto current = make_cdd("d@1", {{"h1", "Client", 1}, {"h2", "Server", 1}},
                            {{{"h1", "Client", 1}, "service", {"h2", "Server", 1}}});
    auto target = make_cdd("d@1", {{"h1", "Client", 1}, {"h3", "Server", 1}},
                           {{{"h1", "Client", 1}, "service", {"h3", "Server", 1}}});
    CHECK(delta(current, target, PickerWeights{5, 7, 11}).cost == 5 + 7 + 11);
}

namespace {

/// Random fully-bound configurations over a tiny synthetic universe of
/// hosts, one client type (one port) and one server type.
ConfigurationDescription random_cdd(std::mt19937& rng) {
    std::uniform_int_distribution<int> coin(0, 2);
    ConfigurationDescription cdd;
    cdd.dsd_ref = "rand@0";
    std::vector<InstanceRef> clients, servers;
    for (int h = 0; h < 5; ++h) {
        std::string host = "h" + std::to_string(h + 1);
        int what = coin(rng);
        if (what == 1) clients.push_back({host, "Client", 1});
        if (what == 2) servers.push_back({host, "Server", 1});
    }
    if (servers.empty()) clients.clear();  // keep every client bindable
    for (const auto& c : clients) cdd.instances.push_back(c);
    for (const auto& s : servers) cdd.instances.push_back(s);
    if (!servers.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, servers.size() - 1);
        for (const auto& c : clients) cdd.connections.push_back({c, "service", servers[pick(rng)]});
    }
    cdd.normalize();
    return cdd;
}

} // namespace

TEST_CASE("apply(current, delta(current, target)) reproduces the target") {
    std::mt19937 rng(31337);
    for (int round = 0; round < 200; ++round) {
        CAPTURE(round);
        auto current = random_cdd(rng);
        auto target = random_cdd(rng);
        auto d = delta(current, target);
        CHECK(apply_delta(current, d) == target);
    }
}

// ---------------------------------------------------------------------------
// picking
// ---------------------------------------------------------------------------

TEST_CASE("picker policies") {
    auto a = make_cdd("d@1", {{"h1", "A", 1}});
    auto b = make_cdd("d@1", {{"h2", "A", 1}});

    SUBCASE("min-delta prefers the current deployment") {
        PickerPolicy policy;
        policy.kind = PickerPolicy::Kind::MinDelta;
        Picker picker(policy, b, nullptr);
        CHECK(picker.offer(a));
        CHECK(picker.offer(b));
        auto outcome = picker.finish();
        REQUIRE(outcome.chosen.has_value());
        CHECK(*outcome.chosen == b);
        CHECK(outcome.cost == 0);
        CHECK(outcome.candidates_seen == 2);
    }
    SUBCASE("first takes the first candidate and stops the stream") {
        Picker picker(PickerPolicy{}, std::nullopt, nullptr);
        CHECK(!picker.offer(a));
        auto outcome = picker.finish();
        REQUIRE(outcome.chosen.has_value());
        CHECK(*outcome.chosen == a);
    }
    SUBCASE("min-delta with cap 1 degenerates to first") {
        PickerPolicy policy;
        policy.kind = PickerPolicy::Kind::MinDelta;
        policy.candidate_cap = 1;
        Picker picker(policy, b, nullptr);
        CHECK(!picker.offer(a));
        auto outcome = picker.finish();
        REQUIRE(outcome.chosen.has_value());
        CHECK(*outcome.chosen == a);
    }
    SUBCASE("an empty stream yields the no-configuration signal") {
        Picker picker(PickerPolicy{}, std::nullopt, nullptr);
        auto outcome = picker.finish();
        CHECK(!outcome.chosen.has_value());
        CHECK(outcome.candidates_seen == 0);
    }
}

TEST_CASE("policy first over the exp7 enumeration picks the lexicographically least solution") {
    auto dsd = load_experiment("exp7.deladas");
    std::vector<ConfigurationDescription> cdds;
    compile::enumerate_configurations(
        dsd, {}, [&](const ConfigurationDescription& cdd) { cdds.push_back(cdd); });
    REQUIRE(cdds.size() == 104);

    Picker picker(PickerPolicy{}, std::nullopt, nullptr);
    for (const auto& cdd : cdds)
        if (!picker.offer(cdd)) break;
    auto outcome = picker.finish();
    REQUIRE(outcome.chosen.has_value());
    CHECK(*outcome.chosen == cdds.front());
    CHECK(outcome.candidates_seen == 1);
}

TEST_CASE("min-delta attains the exhaustive minimum over a large candidate set") {
    std::mt19937 rng(2025);
    auto current = random_cdd(rng);
    std::vector<ConfigurationDescription> candidates;
    for (int i = 0; i < 1000; ++i) candidates.push_back(random_cdd(rng));

    PickerPolicy policy;
    policy.kind = PickerPolicy::Kind::MinDelta;
    Picker picker(policy, current, nullptr);
    for (const auto& c : candidates)
        if (!picker.offer(c)) break;
    auto outcome = picker.finish();
    REQUIRE(outcome.chosen.has_value());

    long long best = std::numeric_limits<long long>::max();
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        long long cost = delta(current, candidates[i]).cost;
        if (cost < best) {
            best = cost;
            best_index = i;
        }
    }
    CHECK(outcome.cost == best);
    CHECK(*outcome.chosen == candidates[best_index]);  // ties broken by stream order
}

TEST_CASE("optimisation directives pre-rank the candidates") {
    auto result = dsl::load_dsd(
        "component type Node (\n"
        "  implementation \"http://e/n.jar\"\n"
        "  instantiate impl with com.example.Node()\n"
        ")\n"
        "host h1 (speed = 1)\nhost h2 (speed = 1)\n"
        "optimise maximize card(instancesOf(Node in deployment))\n",
        "opt");
    REQUIRE(result.ok());
    const auto& dsd = *result.dsd;
    std::string ref = dsd_reference(dsd);

    auto empty = make_cdd(ref, {});
    auto one = make_cdd(ref, {{"h1", "Node", 1}});
    auto two = make_cdd(ref, {{"h1", "Node", 1}, {"h2", "Node", 1}});

    Picker picker(PickerPolicy{}, std::nullopt, &dsd);
    picker.offer(empty);
    picker.offer(one);
    picker.offer(two);
    auto outcome = picker.finish();
    REQUIRE(outcome.chosen.has_value());
    CHECK(*outcome.chosen == two);  // maximize instances
}

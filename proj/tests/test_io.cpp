#include "doctest.h"
#include "kstep/io.hpp"

using namespace kstep;
using namespace kstep::io;

TEST_CASE("rationals are strings and stay exact")
{
    CHECK(to_json(make_rational(1, 3)) == "1/3");
    CHECK(to_json(make_rational(-1, 4)) == "-0.25");
    CHECK(rational_from_json("0.1") == make_rational(1, 10));
    CHECK(rational_from_json("2/6") == make_rational(1, 3));
    CHECK(rational_from_json(json(3)) == 3);
    CHECK_THROWS_AS(rational_from_json(json(0.5)), IoError);
    CHECK_THROWS_AS(rational_from_json("x"), ParseError);
}

TEST_CASE("networks round trip and evaluate identically")
{
    auto net = envs::toy3();
    auto back = network_from_json(json::parse(to_json(*net).dump()));
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            for (int c = 0; c < 2; ++c) {
                RationalVector x = {a, b, c};
                CHECK(forward(*net, x) == forward(*back, x));
            }
        }
    }
    CHECK_THROWS_AS(network_from_json(json::parse(R"({"layer": []})")), IoError);
    json j = json::parse(R"({"layers":[{"weights":[["1/2","0.25"]],"bias":["-1"],"relu":false}]})");
    auto n = network_from_json(j);
    RationalVector x = {2, 4};
    CHECK(forward(*n, x) == RationalVector{1});
}

TEST_CASE("systems round trip with their transitions and environment")
{
    for (auto kind : {envs::AgentKind::GridWorld, envs::AgentKind::TurtleBot}) {
        EnvSpec env;
        env.kind = kind;
        env.grid = envs::gridworld_desk_spec();
        env.turtle = envs::turtlebot_default_spec();
        ReactiveSystem sys = env_system(env);
        SystemFile back = system_from_json(json::parse(to_json(sys, env).dump()));
        REQUIRE(back.env);
        CHECK(back.sys.m == sys.m);
        CHECK(back.sys.actions == sys.actions);
        REQUIRE(back.sys.transitions.size() == sys.transitions.size());
        for (std::size_t a = 0; a < sys.transitions.size(); ++a) {
            REQUIRE(back.sys.transitions[a].atoms.size() == sys.transitions[a].atoms.size());
            for (std::size_t i = 0; i < sys.transitions[a].atoms.size(); ++i) {
                CHECK(to_string(back.sys.transitions[a].atoms[i]) ==
                      to_string(sys.transitions[a].atoms[i]));
            }
        }
        for (std::size_t f = 0; f < sys.m; ++f) {
            CHECK(back.sys.domains[f].is_finite() == sys.domains[f].is_finite());
            CHECK(back.sys.domains[f].values() == sys.domains[f].values());
            CHECK(back.sys.domains[f].lower() == sys.domains[f].lower());
        }
        json env_only = {{"env", to_json(env)}};
        SystemFile built = system_from_json(env_only);
        CHECK(built.sys.transitions.size() == sys.transitions.size());
    }
    auto inst = envs::copy_transition_instance();
    SystemFile back = system_from_json(to_json(inst.sys));
    CHECK_FALSE(back.env);
    CHECK(validate_execution(back.sys, *inst.net, inst.exec));
    json broken = to_json(inst.sys);
    broken["m"] = 5;
    CHECK_THROWS(system_from_json(broken));
    broken = to_json(inst.sys);
    broken["transitions"][0][0]["cmp"] = "~";
    CHECK_THROWS_AS(system_from_json(broken), IoError);
}

TEST_CASE("executions, masks and catalogs round trip")
{
    auto inst = envs::copy_transition_instance();
    Execution e = execution_from_json(to_json(inst.exec));
    CHECK(e.states == inst.exec.states);
    CHECK(e.actions == inst.exec.actions);
    CHECK_THROWS_AS(execution_from_json(json::parse(R"({"states":[["1"]],"actions":[]})")),
                    IoError);

    StepMask m;
    m.steps = {{0, 2}, {}};
    CHECK(mask_from_json(to_json(m)) == m);
    json wrapped = {{"mask", to_json(m)}, {"size", 2}};
    CHECK(mask_from_json(wrapped) == m);
    CHECK(mask_from_json(json::parse(R"({"steps":[[2,0,2],[]]})")) == m);

    CxpCatalog c;
    StepMask a;
    a.role = MaskRole::Contrastive;
    a.steps = {{0, 2}, {}};
    StepMask b = a;
    b.steps = {{2}, {2}};
    c.add(a);
    c.add(b);
    CxpCatalog back = catalog_from_json(to_json(c));
    REQUIRE(back.members.size() == 2);
    CHECK(back.members[0] == a);
    CHECK(back.members[1] == b);
}

TEST_CASE("explain results serialize with mask, guarantee and stats")
{
    auto inst = envs::copy_transition_instance();
    auto r = method4(inst.sys, inst.net, inst.exec);
    json j = json::parse(to_json(r).dump());
    CHECK(j["method"] == "method4");
    CHECK(j["guarantee"] == "minimum");
    CHECK(j["size"] == r.size());
    CHECK(mask_from_json(j) == r.mask);
    CHECK(catalog_from_json(j).members.size() == r.catalog->members.size());
    CHECK(j["stats"].contains("nodes"));
    CHECK(j["max_copies"].get<std::size_t>() <= inst.exec.k());
}

TEST_CASE("shipped fixture files match the generated agents")
{
    const std::filesystem::path data = KSTEP_DATA_DIR;
    struct Shipped {
        const char* dir;
        envs::AgentKind kind;
        std::uint64_t seed;
    };
    for (const auto& s : {Shipped{"gridworld4", envs::AgentKind::GridWorld, 1},
                          Shipped{"turtlebot", envs::AgentKind::TurtleBot, 1}}) {
        auto file = system_from_json(read_json(data / s.dir / "system.json"));
        auto net = network_from_json(read_json(data / s.dir / "agent.json"));
        auto agent = envs::make_fixture_agent(s.kind, s.seed);
        CHECK(to_json(*net) == to_json(*agent.net));
        auto exec = execution_from_json(read_json(data / s.dir / "exec.p3.json"));
        CHECK(validate_execution(file.sys, *net, exec));
        CHECK(to_json(file.sys) == to_json(envs::fixture_system(s.kind)));
    }
}

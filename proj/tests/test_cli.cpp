#include "doctest.h"
#include "kstep/cli.hpp"

#include <fstream>
#include <sstream>

using namespace kstep;
using namespace kstep::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("kstep_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int call(std::vector<std::string> args, std::string* out = nullptr)
{
    std::ostringstream o;
    std::ostringstream e;
    int code = run(args, o, e);
    if (out) {
        *out = o.str() + e.str();
    }
    return code;
}

std::size_t lines(const fs::path& p)
{
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) {
        ++n;
    }
    return n;
}

// Writes the desk GridWorld system and fixture agent.
void grid_files(const fs::path& dir)
{
    REQUIRE(call({"env", "--kind", "gridworld", "--out", dir.string()}) == Ok);
}

io::json strip_timing(io::json j)
{
    j.erase("seconds");
    j.erase("stats");
    return j;
}

}  // namespace

TEST_CASE("gen-exec writes one validated prefix per step")
{
    TempDir t;
    grid_files(t.path);
    GenConfig g;
    g.system = t.path / "system.json";
    g.network = t.path / "agent.json";
    g.k = 1;
    CHECK(cmd_gen_exec(g, t.path / "k1").size() == 1);
    g.k = 4;
    auto files = cmd_gen_exec(g, t.path / "k4");
    REQUIRE(files.size() == 4);
    auto sys = io::system_from_json(io::read_json(g.system));
    auto net = io::network_from_json(io::read_json(g.network));
    std::vector<Execution> prefixes;
    for (const auto& f : files) {
        prefixes.push_back(io::execution_from_json(io::read_json(f)));
        CHECK(validate_execution(sys.sys, *net, prefixes.back()));
    }
    for (std::size_t i = 0; i + 1 < prefixes.size(); ++i) {
        CHECK(prefixes[i + 1].prefix(i + 1).states == prefixes[i].states);
    }
    // Same seed, same execution.
    auto again = cmd_gen_exec(g, t.path / "again");
    CHECK(io::read_json(again.back()) == io::read_json(files.back()));
    g.k = 60;
    CHECK_THROWS_AS(cmd_gen_exec(g, t.path / "long"), InfeasibleGeneration);
}

TEST_CASE("gen-exec over a finite system without an environment")
{
    TempDir t;
    auto inst = envs::copy_transition_instance();
    io::write_json(t.path / "system.json", io::to_json(inst.sys));
    io::write_json(t.path / "net.json", io::to_json(*inst.net));
    std::string out;
    CHECK(call({"gen-exec", "--system", (t.path / "system.json").string(), "--network",
                (t.path / "net.json").string(), "--k", "2", "--start", "1,1,1", "--out",
                t.path.string()},
               &out) == Ok);
    auto e = io::execution_from_json(io::read_json(t.path / "exec.p2.json"));
    CHECK(validate_execution(inst.sys, *inst.net, e));
    CHECK(e.states[0] == RationalVector{1, 1, 1});
}

TEST_CASE("explain on a desk GridWorld execution")
{
    TempDir t;
    grid_files(t.path);
    GenConfig g;
    g.system = t.path / "system.json";
    g.network = t.path / "agent.json";
    g.k = 3;
    g.seed = 4;
    auto files = cmd_gen_exec(g, t.path / "ex");
    RunConfig rc;
    rc.system = g.system;
    rc.network = g.network;
    rc.execution = files.back();
    rc.methods = parse_methods("1,2,3,4", Target::Minimal);
    rc.out = t.path / "res";
    std::ostringstream table;
    auto recs = cmd_explain(rc, table);
    REQUIRE(recs.size() == 4);
    for (const auto& r : recs) {
        CHECK(r["solved"].get<bool>());
    }
    auto size = [&](std::size_t i) { return recs[i]["size"].get<std::size_t>(); };
    CHECK(size(3) <= size(2));
    CHECK(size(2) <= size(1));
    CHECK(size(0) == size(2));
    CHECK(recs[1]["guarantee"] == "none");
    CHECK(recs[3]["guarantee"] == "minimum");
    CHECK(recs[2]["max_copies"] == 1);
    CHECK(recs[0]["max_copies"] == 3);
    std::size_t rows = 0;
    std::istringstream in(table.str());
    for (std::string line; std::getline(in, line);) {
        ++rows;
    }
    CHECK(rows == 4);

    // Identical configuration, identical output apart from timing.
    rc.out = t.path / "res2";
    std::ostringstream again_table;
    auto again = cmd_explain(rc, again_table);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(strip_timing(recs[i]) == strip_timing(again[i]));
    }

    // validate: method 4 output, full mask, empty mask.
    ValidateConfig vc;
    vc.system = g.system;
    vc.network = g.network;
    vc.execution = files.back();
    vc.mask = t.path / "res" / "exec.p3.m4.json";
    std::ostringstream report;
    CHECK(cmd_validate(vc, report).valid);
    vc.catalog = vc.mask;
    CHECK(cmd_validate(vc, report).valid);
    vc.catalog.reset();

    io::write_json(t.path / "full.json", io::to_json(StepMask::full(3, 8)));
    vc.mask = t.path / "full.json";
    CHECK(cmd_validate(vc, report).valid);
    io::write_json(t.path / "empty.json", io::to_json(StepMask::empty(3)));
    vc.mask = t.path / "empty.json";
    auto bad = cmd_validate(vc, report);
    CHECK_FALSE(bad.valid);
    REQUIRE(bad.witness);
    REQUIRE(bad.deviation);
    CHECK(bad.witness->size() == *bad.deviation + 1);
    vc.catalog = t.path / "res" / "exec.p3.m4.json";
    auto missed = cmd_validate(vc, report);
    CHECK_FALSE(missed.valid);
    CHECK(missed.unhit);

    // plot over the four results.
    auto summary = cmd_plot(t.path / "res", t.path / "plots");
    CHECK(summary.results == 4);
    CHECK(lines(t.path / "plots" / "solved.csv") == 5);
    CHECK(fs::exists(t.path / "plots" / "solved.svg"));
    CHECK(fs::exists(t.path / "plots" / "sizes.svg"));
}

TEST_CASE("plot curves are cumulative and nondecreasing")
{
    TempDir t;
    std::vector<double> secs = {0.5, 0.1, 0.3};
    for (std::size_t i = 0; i < secs.size(); ++i) {
        io::json r = {{"method", "method4"},
                      {"series", "m4"},
                      {"instance", "i" + std::to_string(i)},
                      {"solved", i != 1},
                      {"seconds", secs[i]},
                      {"size", i + 1}};
        io::write_json(t.path / "res" / ("r" + std::to_string(i) + ".json"), r);
    }
    io::write_json(t.path / "res" / "other.json", io::json{{"states", io::json::array()}});
    auto s = cmd_plot(t.path / "res", t.path / "out");
    CHECK(s.results == 3);
    std::ifstream in(t.path / "out" / "solved.csv");
    std::string header;
    std::getline(in, header);
    double last_time = 0;
    int last_count = 0;
    int rows = 0;
    for (std::string line; std::getline(in, line);) {
        ++rows;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) {
            cells.push_back(c);
        }
        REQUIRE(cells.size() == 6);
        double t_cum = std::stod(cells[4]);
        int n = std::stoi(cells[5]);
        CHECK(t_cum >= last_time);
        CHECK(n >= last_count);
        last_time = t_cum;
        last_count = n;
    }
    CHECK(rows == 3);
    CHECK(last_count == 2);
    CHECK(last_time == doctest::Approx(0.8));

    TempDir single;
    io::write_json(single.path / "r.json",
                   io::json{{"method", "method2"}, {"solved", true}, {"seconds", 1.0}, {"size", 3}});
    CHECK(cmd_plot(single.path, single.path / "out").results == 1);
    CHECK(lines(single.path / "out" / "solved.csv") == 2);

    TempDir empty;
    CHECK_THROWS_AS(cmd_plot(empty.path, empty.path / "out"), io::IoError);
}

TEST_CASE("exit codes")
{
    TempDir t;
    grid_files(t.path);
    std::string sys = (t.path / "system.json").string();
    std::string net = (t.path / "agent.json").string();
    CHECK(call({}) == InvalidInput);
    CHECK(call({"explain"}) == InvalidInput);
    CHECK(call({"explain", "--system", "missing.json", "--network", net}) == InvalidInput);
    CHECK(call({"explain", "--system", sys, "--network", net, "--methods", "7"}) == InvalidInput);
    CHECK(call({"explain", "--system", sys, "--network", net, "--timeout-per-step", "0"}) ==
          InvalidInput);
    CHECK(call({"gen-exec", "--system", sys, "--network", net, "--k", "60", "--out",
                t.path.string()}) == Infeasible);
    CHECK(call({"explain", "--system", sys, "--network", net, "--k", "3", "--methods", "1",
                "--timeout-per-step", "0.00001"}) == TimedOut);
    std::string out;
    CHECK(call({"explain", "--system", sys, "--network", net, "--k", "2", "--methods", "3,4"},
               &out) == Ok);
    CHECK(out.find("m4") != std::string::npos);
    io::write_json(t.path / "mismatch.json", io::to_json(*envs::toy3()));
    CHECK(call({"explain", "--system", sys, "--network", (t.path / "mismatch.json").string()}) ==
          InvalidInput);
}

TEST_CASE("method lists")
{
    auto m = parse_methods("1,3min,4,2minimal", Target::Minimal);
    REQUIRE(m.size() == 4);
    CHECK(m[0].series() == "m1-minimal");
    CHECK(m[1].series() == "m3-minimum");
    CHECK(m[2].series() == "m4");
    CHECK(m[3].series() == "m2-minimal");
    CHECK_THROWS_AS(parse_methods("", Target::Minimal), io::IoError);
    CHECK_THROWS_AS(parse_methods("5", Target::Minimal), io::IoError);
    CHECK_THROWS_AS(parse_methods("3x", Target::Minimal), io::IoError);
}

#pragma once

#include "kstep/io.hpp"

#include <iosfwd>

namespace kstep::cli {

enum ExitCode : int { Ok = 0, Failure = 1, InvalidInput = 2, TimedOut = 3, Infeasible = 4 };

class InfeasibleGeneration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GenConfig {
    std::filesystem::path system;
    std::filesystem::path network;
    std::uint64_t seed = 1;
    std::size_t k = 1;
    std::optional<RationalVector> start;
    std::size_t retries = 1000;
    RivalMode rival = RivalMode::Weak;
};

/// Deterministic in (system, network, seed, k): candidate start states are
/// shuffled by the seed and the first that rolls out k steps without a tied
/// decision wins.
Execution generate_execution(const io::SystemFile& sys, const Network& net, const GenConfig& cfg);

/// Writes <out>/<stem>.p<i>.json for i = 1..k; the last is the full execution.
std::vector<std::filesystem::path> cmd_gen_exec(const GenConfig& cfg,
                                                const std::filesystem::path& out,
                                                const std::string& stem = "exec");

struct MethodSpec {
    int number = 4;
    Target target = Target::Minimum;
    std::string series() const;
};

/// "1,2,3,4" resolved against a default target; method 4 always computes a
/// minimum. Tokens such as "3min" or "2minimal" override the target.
std::vector<MethodSpec> parse_methods(const std::string& text, Target target);

struct RunConfig {
    std::filesystem::path system;
    std::filesystem::path network;
    std::optional<std::filesystem::path> execution;
    std::uint64_t seed = 1;  // used when no execution file is given
    std::size_t k = 1;
    std::vector<MethodSpec> methods;
    double timeout_per_step = 60;  // seconds, multiplied by k per query
    std::optional<std::filesystem::path> out;
    RivalMode rival = RivalMode::Weak;
    kernels::Exec exec = kernels::Exec::Parallel;
    std::string instance;  // defaults to the execution file stem
};

void check(const RunConfig& cfg);

ExplainResult run_method(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                         const Execution& exec, const MethodSpec& method,
                         const ExplainOptions& opts);

/// One JSON record per method, also written to <out>/<instance>.<series>.json.
/// A method that runs out of time is recorded with "solved": false.
std::vector<io::json> cmd_explain(const RunConfig& cfg, std::ostream& table);

struct ValidateConfig {
    std::filesystem::path system;
    std::filesystem::path network;
    std::filesystem::path execution;
    std::filesystem::path mask;
    std::optional<std::filesystem::path> catalog;
    RivalMode rival = RivalMode::Weak;
};

struct Validation {
    bool valid = false;
    std::optional<StepMask> unhit;                       // catalog mode
    std::optional<std::vector<RationalVector>> witness;  // direct mode
    std::optional<std::size_t> deviation;
};

Validation cmd_validate(const ValidateConfig& cfg, std::ostream& report);

struct PlotSummary {
    std::size_t results = 0;
    std::vector<std::filesystem::path> files;
};

/// Reads every result JSON in `results` and writes solved.svg, solved.csv,
/// sizes.svg and sizes.csv to `out`.
PlotSummary cmd_plot(const std::filesystem::path& results, const std::filesystem::path& out);

struct BenchConfig {
    envs::AgentKind kind = envs::AgentKind::GridWorld;
    std::uint64_t agent_seed = 1;
    std::size_t agents = 3;
    std::size_t count = 30;
    std::size_t k_min = 2;
    std::size_t k_max = 5;
    std::vector<MethodSpec> methods;
    double timeout_per_step = 60;
    std::filesystem::path out;
    kernels::Exec exec = kernels::Exec::Parallel;
};

/// Generates fixture executions, explains each with every method and prints
/// averages per method. Results land in <out>/results.
std::vector<io::json> cmd_bench(const BenchConfig& cfg, std::ostream& table);

/// Full command line. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kstep::cli

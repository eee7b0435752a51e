#pragma once

// JSON files. Rationals are strings ("3", "-0.25", "1/3"); JSON numbers are
// accepted on input only when they are integers.

#include "kstep/envs.hpp"
#include "kstep/explain.hpp"

#include <json.hpp>

#include <filesystem>

namespace kstep::io {

using nlohmann::json;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json to_json(const Rational& r);
Rational rational_from_json(const json& j);

json to_json(const Network& net);
std::shared_ptr<const Network> network_from_json(const json& j);

json to_json(const StateAtom& atom);
StateAtom atom_from_json(const json& j);

json to_json(const FeatureDomain& d);
FeatureDomain domain_from_json(const json& j);

/// Environment that produced a system; drives execution generation.
struct EnvSpec {
    envs::AgentKind kind = envs::AgentKind::GridWorld;
    envs::GridWorldSpec grid;
    envs::TurtleBotSpec turtle;
};

json to_json(const EnvSpec& env);
EnvSpec env_from_json(const json& j);
ReactiveSystem env_system(const EnvSpec& env);
StepFunction env_step(const EnvSpec& env);

struct SystemFile {
    ReactiveSystem sys;
    std::optional<EnvSpec> env;
};

json to_json(const ReactiveSystem& sys, const std::optional<EnvSpec>& env = std::nullopt);
/// When "env" is present and "transitions" is absent the system is built from
/// the environment.
SystemFile system_from_json(const json& j);

json to_json(const Execution& exec);
Execution execution_from_json(const json& j);

json to_json(const StepMask& mask);
/// Accepts a bare mask or any object with a "mask" member.
StepMask mask_from_json(const json& j);

json to_json(const CxpCatalog& catalog);
CxpCatalog catalog_from_json(const json& j);

json to_json(const ExplainResult& r);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace kstep::io

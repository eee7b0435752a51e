#pragma once

#include "kstep/model.hpp"

#include <cstdint>
#include <random>
#include <utility>

namespace kstep::envs {

class EnvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// GridWorld ----------------------------------------------------------------
//
// Features: agent (x0, x1), target (x2, x3), obstacle sensors UP, DOWN, LEFT,
// RIGHT (x4..x7). Locations take values cell/size for cell in 1..size;
// RIGHT increases x0 and UP increases x1 by one cell.

enum GridAction : Action { Up = 0, Down = 1, Left = 2, Right = 3 };

struct Cell {
    int col = 1;  // 1..size
    int row = 1;
    friend bool operator==(const Cell&, const Cell&) = default;
};

struct GridWorldSpec {
    int size = 10;
    std::vector<Cell> obstacles;  // used by the step function only
};

/// 4x4 layout used by the desk-scale tests and benchmarks.
GridWorldSpec gridworld_desk_spec();

ReactiveSystem gridworld_system(const GridWorldSpec& spec);

/// Sensor readings (UP, DOWN, LEFT, RIGHT) at a cell from the obstacle
/// layout: 1 when the neighbour is an obstacle, 1/2 two cells away, else 0.
RationalVector gridworld_sensors(const GridWorldSpec& spec, Cell at);

RationalVector gridworld_state(const GridWorldSpec& spec, Cell agent, Cell target);

/// Canonical successor. Sensors along the move are clamped to the value the
/// transition constraints allow that is nearest to the layout reading.
/// Throws EnvError for off-grid or constraint-infeasible moves.
RationalVector gridworld_step(const GridWorldSpec& spec, std::span<const Rational> state,
                              Action action);

// TurtleBot ----------------------------------------------------------------
//
// Features: lidar x0..x6, angle x7, distance x8, all in [0, 1]. Actions
// FORWARD, LEFT, RIGHT. Only turns have transitions.

enum TurtleAction : Action { Forward = 0, TurnLeft = 1, TurnRight = 2 };

struct TurtleBotSpec {
    /// Lidar readings of the 12 directions 30 degrees apart; the visible
    /// window at angle x7 starts at slot (-floor(12 * x7)) mod 12.
    std::vector<Rational> ring;
};

TurtleBotSpec turtlebot_default_spec();

ReactiveSystem turtlebot_system(const TurtleBotSpec& spec);

RationalVector turtlebot_state(const TurtleBotSpec& spec, const Rational& angle,
                               const Rational& distance);

RationalVector turtlebot_step(const TurtleBotSpec& spec, std::span<const Rational> state,
                              Action action);

// Fixture agents -----------------------------------------------------------

enum class AgentKind { GridWorld, TurtleBot };

/// Start states whose greedy rollouts define fixture executions.
std::vector<RationalVector> fixture_starts(AgentKind kind);

struct FixtureAgent {
    std::shared_ptr<const Network> net;
    std::uint64_t seed = 0;  // seed actually used
};

/// Deterministic ReLU network (GridWorld 8-8-8-4 on the desk grid, TurtleBot
/// 9-8-8-3) with three-decimal weights drawn from mt19937_64. Seeds are
/// incremented until some fixture start rolls out for at least three steps.
FixtureAgent make_fixture_agent(AgentKind kind, std::uint64_t seed);

StepFunction step_function(AgentKind kind);
ReactiveSystem fixture_system(AgentKind kind);

// Small discrete fixtures --------------------------------------------------

std::shared_ptr<const Network> toy3();

struct Instance {
    std::string name;
    ReactiveSystem sys;
    std::shared_ptr<const Network> net;
    Execution exec;
};

/// Three binary features, toy3 policy, every action copies x2; execution
/// (1,1,1) -> (1,0,1) with actions (0, 0).
Instance copy_transition_instance();

/// Same execution, but T demands x2 + x2' = 2, so step 1 can never free x2
/// at step 2.
Instance spurious_instance();

/// Same execution with no transition constraints at all.
Instance independent_instance();

/// The lexicographically first successor allowed by T over finite domains.
RationalVector first_successor(const ReactiveSystem& sys, std::span<const Rational> state,
                               Action action);

struct RandomLimits {
    std::size_t max_features = 4;
    std::size_t max_steps = 3;
    std::size_t max_hidden_layers = 2;
    std::size_t max_width = 6;
};

/// Random binary reactive system with per-action feature rules (copy, flip,
/// free, constant, sometimes a pairwise membership atom), a random network
/// with half-integer weights and an execution without tied decisions.
Instance random_binary_instance(std::uint64_t seed, const RandomLimits& limits = {});

std::shared_ptr<const Network> random_network(std::mt19937_64& rng,
                                              const std::vector<std::size_t>& widths);

}  // namespace kstep::envs

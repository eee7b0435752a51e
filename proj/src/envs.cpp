#include "kstep/envs.hpp"

#include <array>

namespace kstep::envs {

namespace {

StateAtom lin(std::vector<Term<StateVar>> terms, Cmp cmp, Rational rhs, std::string label)
{
    return LinearAtom<StateVar>{std::move(terms), cmp, std::move(rhs), std::move(label)};
}

StateAtom member(std::vector<Term<StateVar>> terms, std::vector<Rational> values,
                 std::string label)
{
    return MembershipAtom<StateVar>{std::move(terms), std::move(values), std::move(label)};
}

std::string x(std::size_t f) { return "x" + std::to_string(f); }

const Rational kHalf = make_rational(1, 2);

std::size_t sensor_of(Action d) { return 4 + d; }
Action opposite(Action d) { return d ^ 1U; }  // UP<->DOWN, LEFT<->RIGHT

bool is_obstacle(const GridWorldSpec& spec, Cell c)
{
    return std::find(spec.obstacles.begin(), spec.obstacles.end(), c) != spec.obstacles.end();
}

Cell offset(Cell c, Action d, int n)
{
    switch (d) {
    case Up: c.row += n; break;
    case Down: c.row -= n; break;
    case Left: c.col -= n; break;
    default: c.col += n; break;
    }
    return c;
}

int to_index(const Rational& v, int size, const char* what)
{
    Rational scaled = v * size;
    if (scaled.get_den() != 1 || scaled < 1 || scaled > size) {
        throw EnvError(std::string("gridworld: ") + what + " " + to_string(v) +
                       " is not a grid location");
    }
    return static_cast<int>(scaled.get_num().get_si());
}

const std::array<Rational, 3> kSensorValues = {Rational(0), kHalf, Rational(1)};

// Value allowed for sensor s' given s that is nearest to `truth`.
Rational clamp_sensor(const Rational& s, const Rational& truth, bool same_direction)
{
    std::optional<Rational> best;
    for (const Rational& v : kSensorValues) {
        Rational diff = v - s;
        bool ok = same_direction ? (diff >= 0 && diff <= kHalf) : (diff <= 0 && diff >= -kHalf);
        Rational sum = s + v;
        ok = ok && (sum == 0 || sum == kHalf || sum == 1);
        if (!ok) {
            continue;
        }
        if (!best || abs(v - truth) < abs(*best - truth)) {
            best = v;
        }
    }
    if (!best) {
        throw EnvError("gridworld: sensor value " + to_string(s) + " admits no successor");
    }
    return *best;
}

Rational draw_weight(std::mt19937_64& rng)
{
    auto v = static_cast<long>(rng() % 2001) - 1000;
    return make_rational(v, 1000);
}

std::shared_ptr<const Network> decimal_network(std::mt19937_64& rng,
                                               const std::vector<std::size_t>& widths)
{
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.relu = l + 2 < widths.size();
        for (std::size_t r = 0; r < widths[l + 1]; ++r) {
            RationalVector row;
            for (std::size_t c = 0; c < widths[l]; ++c) {
                row.push_back(draw_weight(rng));
            }
            layer.weights.push_back(std::move(row));
            layer.bias.push_back(draw_weight(rng));
        }
        layers.push_back(std::move(layer));
    }
    return std::make_shared<const Network>(std::move(layers));
}

bool has_tie(const Network& net, const Execution& exec)
{
    for (std::size_t i = 0; i < exec.k(); ++i) {
        if (deviates(forward(net, exec.states[i]), exec.actions[i], RivalMode::Weak)) {
            return true;
        }
    }
    return false;
}

ReactiveSystem binary_system(std::size_t m, std::size_t actions)
{
    ReactiveSystem sys;
    sys.m = m;
    sys.domains.assign(m, FeatureDomain::finite({0, 1}));
    for (std::size_t a = 0; a < actions; ++a) {
        sys.actions.push_back("a" + std::to_string(a));
    }
    sys.transitions.resize(actions);
    return sys;
}

Instance three_feature_instance(std::string name, const std::vector<StateAtom>& t)
{
    Instance inst;
    inst.name = std::move(name);
    inst.sys = binary_system(3, 2);
    for (auto& set : inst.sys.transitions) {
        set.atoms = t;
    }
    inst.net = toy3();
    inst.exec.states = {{1, 1, 1}, {1, 0, 1}};
    inst.exec.actions = {0, 0};
    return inst;
}

}  // namespace

// GridWorld ------------------------------------------------------------------

GridWorldSpec gridworld_desk_spec()
{
    return {4, {{3, 3}}};
}

ReactiveSystem gridworld_system(const GridWorldSpec& spec)
{
    if (spec.size < 2) {
        throw EnvError("gridworld: size must be at least 2");
    }
    ReactiveSystem sys;
    sys.m = 8;
    std::vector<Rational> locations;
    for (int i = 1; i <= spec.size; ++i) {
        locations.push_back(make_rational(i, spec.size));
    }
    for (int f = 0; f < 4; ++f) {
        sys.domains.push_back(FeatureDomain::finite(locations));
    }
    for (int f = 0; f < 4; ++f) {
        sys.domains.push_back(
            FeatureDomain::finite({kSensorValues.begin(), kSensorValues.end()}));
    }
    sys.actions = {"UP", "DOWN", "LEFT", "RIGHT"};
    const Rational step = make_rational(1, spec.size);
    for (Action d = 0; d < 4; ++d) {
        ConstraintSet set;
        bool vertical = d == Up || d == Down;
        std::size_t axis = vertical ? 1 : 0;
        std::size_t ortho = vertical ? 0 : 1;
        Rational delta = (d == Up || d == Right) ? step : Rational(-step);
        set.atoms.push_back(lin({{nxt(axis), 1}, {cur(axis), -1}}, Cmp::Eq, delta, "move " + x(axis)));
        set.atoms.push_back(lin({{nxt(ortho), 1}, {cur(ortho), -1}}, Cmp::Eq, 0, "keep " + x(ortho)));
        for (std::size_t f : {2U, 3U}) {
            set.atoms.push_back(lin({{nxt(f), 1}, {cur(f), -1}}, Cmp::Eq, 0, "target " + x(f)));
        }
        std::size_t s = sensor_of(d);
        set.atoms.push_back(lin({{nxt(s), 1}, {cur(s), -1}}, Cmp::Ge, 0, "sensor ahead " + x(s)));
        set.atoms.push_back(lin({{nxt(s), 1}, {cur(s), -1}}, Cmp::Le, kHalf, "sensor ahead " + x(s)));
        set.atoms.push_back(member({{cur(s), 1}, {nxt(s), 1}}, {0, kHalf, 1}, "sensor ahead sum " + x(s)));
        std::size_t o = sensor_of(opposite(d));
        set.atoms.push_back(lin({{nxt(o), 1}, {cur(o), -1}}, Cmp::Le, 0, "sensor behind " + x(o)));
        set.atoms.push_back(lin({{nxt(o), 1}, {cur(o), -1}}, Cmp::Ge, -kHalf, "sensor behind " + x(o)));
        set.atoms.push_back(member({{cur(o), 1}, {nxt(o), 1}}, {0, kHalf, 1}, "sensor behind sum " + x(o)));
        sys.transitions.push_back(std::move(set));
    }
    sys.validate();
    return sys;
}

RationalVector gridworld_sensors(const GridWorldSpec& spec, Cell at)
{
    RationalVector out;
    for (Action d = 0; d < 4; ++d) {
        if (is_obstacle(spec, offset(at, d, 1))) {
            out.emplace_back(1);
        } else if (is_obstacle(spec, offset(at, d, 2))) {
            out.push_back(kHalf);
        } else {
            out.emplace_back(0);
        }
    }
    return out;
}

RationalVector gridworld_state(const GridWorldSpec& spec, Cell agent, Cell target)
{
    auto loc = [&](int i) { return make_rational(i, spec.size); };
    RationalVector s = {loc(agent.col), loc(agent.row), loc(target.col), loc(target.row)};
    for (auto& v : gridworld_sensors(spec, agent)) {
        s.push_back(std::move(v));
    }
    return s;
}

RationalVector gridworld_step(const GridWorldSpec& spec, std::span<const Rational> state,
                              Action action)
{
    if (state.size() != 8 || action >= 4) {
        throw EnvError("gridworld: expected 8 features and an action in 0..3");
    }
    Cell agent{to_index(state[0], spec.size, "agent x0"), to_index(state[1], spec.size, "agent x1")};
    Cell next = offset(agent, action, 1);
    if (next.col < 1 || next.col > spec.size || next.row < 1 || next.row > spec.size) {
        throw EnvError("gridworld: move leaves the grid");
    }
    if (is_obstacle(spec, next)) {
        throw EnvError("gridworld: move runs into an obstacle");
    }
    RationalVector out(state.begin(), state.end());
    out[0] = make_rational(next.col, spec.size);
    out[1] = make_rational(next.row, spec.size);
    RationalVector truth = gridworld_sensors(spec, next);
    for (Action d = 0; d < 4; ++d) {
        std::size_t s = sensor_of(d);
        if (d == action) {
            out[s] = clamp_sensor(state[s], truth[d], true);
        } else if (d == opposite(action)) {
            out[s] = clamp_sensor(state[s], truth[d], false);
        } else {
            out[s] = truth[d];
        }
    }
    return out;
}

// TurtleBot ------------------------------------------------------------------

namespace {

const Rational kTurn = make_rational(1, 12);
const Rational kMinRange = make_rational(1, 5);

long angle_slot(const Rational& angle)
{
    mpz_class scaled;
    Rational a = angle * 12;
    mpz_fdiv_q(scaled.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
    return scaled.get_si();
}

const Rational& ring_at(const TurtleBotSpec& spec, long index)
{
    long n = 12;
    return spec.ring[static_cast<std::size_t>(((index % n) + n) % n)];
}

}  // namespace

TurtleBotSpec turtlebot_default_spec()
{
    TurtleBotSpec spec;
    for (const char* v : {"1", "0.8", "0.5", "0.3", "0.6", "1", "0.9", "0.4", "0.2", "0.7", "1", "0.5"}) {
        spec.ring.push_back(parse_rational(v));
    }
    return spec;
}

ReactiveSystem turtlebot_system(const TurtleBotSpec& spec)
{
    if (spec.ring.size() != 12) {
        throw EnvError("turtlebot: the lidar ring needs 12 readings");
    }
    ReactiveSystem sys;
    sys.m = 9;
    sys.domains.assign(9, FeatureDomain::interval(0, 1));
    sys.actions = {"FORWARD", "LEFT", "RIGHT"};
    sys.transitions.resize(3);
    sys.transitions[Forward].atoms.push_back(
        lin({{cur(8), 0}}, Cmp::Ge, 1, "forward has no successor"));
    for (Action a : {TurnLeft, TurnRight}) {
        auto& atoms = sys.transitions[a].atoms;
        for (std::size_t f = 0; f <= 6; ++f) {
            atoms.push_back(lin({{cur(f), 1}}, Cmp::Ge, kMinRange, "lidar bound " + x(f)));
            atoms.push_back(lin({{cur(f), 1}}, Cmp::Le, 1, "lidar bound " + x(f)));
        }
        atoms.push_back(lin({{cur(8), 1}}, Cmp::Ge, kMinRange, "distance bound x8"));
        atoms.push_back(lin({{cur(8), 1}}, Cmp::Le, 1, "distance bound x8"));
        atoms.push_back(lin({{cur(7), 1}}, Cmp::Ge, 0, "angle bound x7"));
        atoms.push_back(lin({{cur(7), 1}}, Cmp::Le, 1, "angle bound x7"));
        for (std::size_t i = 1; i <= 6; ++i) {
            // RIGHT shifts the window down by one slot, LEFT up by one.
            auto terms = a == TurnRight ? std::vector<Term<StateVar>>{{nxt(i - 1), 1}, {cur(i), -1}}
                                        : std::vector<Term<StateVar>>{{nxt(i), 1}, {cur(i - 1), -1}};
            atoms.push_back(lin(std::move(terms), Cmp::Eq, 0, "sliding window"));
        }
        atoms.push_back(lin({{nxt(7), 1}, {cur(7), -1}}, Cmp::Eq,
                            a == TurnRight ? Rational(-kTurn) : kTurn, "turn x7"));
        atoms.push_back(lin({{nxt(8), 1}, {cur(8), -1}}, Cmp::Eq, 0, "distance invariant x8"));
    }
    sys.validate();
    return sys;
}

RationalVector turtlebot_state(const TurtleBotSpec& spec, const Rational& angle,
                               const Rational& distance)
{
    RationalVector s;
    long base = -angle_slot(angle);
    for (long i = 0; i < 7; ++i) {
        s.push_back(ring_at(spec, base + i));
    }
    s.push_back(angle);
    s.push_back(distance);
    return s;
}

RationalVector turtlebot_step(const TurtleBotSpec& spec, std::span<const Rational> state,
                              Action action)
{
    if (state.size() != 9 || action >= 3) {
        throw EnvError("turtlebot: expected 9 features and an action in 0..2");
    }
    if (action == Forward) {
        throw EnvError("turtlebot: FORWARD has no successor");
    }
    RationalVector out(state.begin(), state.end());
    out[7] = action == TurnRight ? Rational(state[7] - kTurn) : Rational(state[7] + kTurn);
    if (out[7] < 0 || out[7] > 1) {
        throw EnvError("turtlebot: turn leaves the angle range");
    }
    long base = -angle_slot(out[7]);
    if (action == TurnRight) {
        for (std::size_t i = 1; i <= 6; ++i) {
            out[i - 1] = state[i];
        }
        out[6] = ring_at(spec, base + 6);
    } else {
        for (std::size_t i = 1; i <= 6; ++i) {
            out[i] = state[i - 1];
        }
        out[0] = ring_at(spec, base);
    }
    return out;
}

// Fixture agents -------------------------------------------------------------

std::vector<RationalVector> fixture_starts(AgentKind kind)
{
    std::vector<RationalVector> out;
    if (kind == AgentKind::GridWorld) {
        GridWorldSpec spec = gridworld_desk_spec();
        for (Cell target : {Cell{4, 4}, Cell{1, 4}}) {
            for (int row = 1; row <= spec.size; ++row) {
                for (int col = 1; col <= spec.size; ++col) {
                    Cell agent{col, row};
                    if (agent == target || is_obstacle(spec, agent)) {
                        continue;
                    }
                    out.push_back(gridworld_state(spec, agent, target));
                }
            }
        }
        return out;
    }
    TurtleBotSpec spec = turtlebot_default_spec();
    for (const char* d : {"0.5", "0.8"}) {
        for (long slot = 0; slot <= 12; ++slot) {
            out.push_back(turtlebot_state(spec, make_rational(slot, 12), parse_rational(d)));
        }
    }
    return out;
}

StepFunction step_function(AgentKind kind)
{
    if (kind == AgentKind::GridWorld) {
        return [spec = gridworld_desk_spec()](std::span<const Rational> s, Action a) {
            return gridworld_step(spec, s, a);
        };
    }
    return [spec = turtlebot_default_spec()](std::span<const Rational> s, Action a) {
        return turtlebot_step(spec, s, a);
    };
}

ReactiveSystem fixture_system(AgentKind kind)
{
    return kind == AgentKind::GridWorld ? gridworld_system(gridworld_desk_spec())
                                        : turtlebot_system(turtlebot_default_spec());
}

FixtureAgent make_fixture_agent(AgentKind kind, std::uint64_t seed)
{
    const ReactiveSystem sys = fixture_system(kind);
    const StepFunction step = step_function(kind);
    const std::vector<std::size_t> widths =
        kind == AgentKind::GridWorld ? std::vector<std::size_t>{8, 8, 8, 4}
                                     : std::vector<std::size_t>{9, 8, 8, 3};
    const auto starts = fixture_starts(kind);
    for (std::uint64_t s = seed;; ++s) {
        std::mt19937_64 rng(s);
        auto net = decimal_network(rng, widths);
        for (const auto& start : starts) {
            try {
                Execution exec = simulate(sys, *net, step, start, 3);
                if (!has_tie(*net, exec)) {
                    return {net, s};
                }
            } catch (const std::runtime_error&) {
            }
        }
    }
}

// Small discrete fixtures ----------------------------------------------------

std::shared_ptr<const Network> toy3()
{
    Layer hidden{{{1, 1, 0}, {0, 0, 1}, {1, -1, 0}}, {-1, 0, 0}, true};
    Layer out{{{2, 2, 0}, {0, 0, kHalf}}, {0, 1}, false};
    return std::make_shared<const Network>(std::vector<Layer>{hidden, out});
}

Instance copy_transition_instance()
{
    return three_feature_instance("copy-transition",
                                  {lin({{nxt(2), 1}, {cur(2), -1}}, Cmp::Eq, 0, "keep x2")});
}

Instance spurious_instance()
{
    return three_feature_instance("spurious",
                                  {lin({{cur(2), 1}, {nxt(2), 1}}, Cmp::Eq, 2, "x2 stays 1")});
}

Instance independent_instance()
{
    return three_feature_instance("independent", {});
}

RationalVector first_successor(const ReactiveSystem& sys, std::span<const Rational> state,
                               Action action)
{
    std::vector<const std::vector<Rational>*> values;
    for (const auto& d : sys.domains) {
        if (!d.is_finite()) {
            throw EnvError("first_successor needs finite domains");
        }
        values.push_back(&d.values());
    }
    std::vector<std::size_t> idx(sys.m, 0);
    RationalVector next(sys.m);
    while (true) {
        for (std::size_t f = 0; f < sys.m; ++f) {
            next[f] = (*values[f])[idx[f]];
        }
        if (sys.transitions.at(action).holds(state, next)) {
            return next;
        }
        std::size_t f = sys.m;
        while (f > 0) {
            --f;
            if (++idx[f] < values[f]->size()) {
                break;
            }
            idx[f] = 0;
            if (f == 0) {
                throw EnvError("no successor satisfies the transition constraints of " +
                               sys.actions.at(action));
            }
        }
        if (sys.m == 0) {
            throw EnvError("no successor satisfies the transition constraints");
        }
    }
}

std::shared_ptr<const Network> random_network(std::mt19937_64& rng,
                                              const std::vector<std::size_t>& widths)
{
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.relu = l + 2 < widths.size();
        for (std::size_t r = 0; r < widths[l + 1]; ++r) {
            RationalVector row;
            for (std::size_t c = 0; c < widths[l]; ++c) {
                row.push_back(make_rational(static_cast<long>(rng() % 9) - 4, 2));
            }
            layer.weights.push_back(std::move(row));
            layer.bias.push_back(make_rational(static_cast<long>(rng() % 9) - 4, 2));
        }
        layers.push_back(std::move(layer));
    }
    return std::make_shared<const Network>(std::move(layers));
}

Instance random_binary_instance(std::uint64_t seed, const RandomLimits& limits)
{
    enum Rule { Copy, Flip, Free, Const0, Const1 };
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    for (int attempt = 0;; ++attempt) {
        if (attempt > 10000) {
            throw EnvError("random_binary_instance: no usable instance");
        }
        std::size_t m = 1 + pick(limits.max_features);
        std::size_t k = 1 + pick(limits.max_steps);
        std::size_t actions = 2 + pick(2);
        std::vector<std::size_t> widths = {m};
        for (std::size_t l = 0, n = 1 + pick(limits.max_hidden_layers); l < n; ++l) {
            widths.push_back(1 + pick(limits.max_width));
        }
        widths.push_back(actions);
        auto net = random_network(rng, widths);

        ReactiveSystem sys = binary_system(m, actions);
        std::vector<std::vector<Rule>> rules(actions, std::vector<Rule>(m));
        for (std::size_t a = 0; a < actions; ++a) {
            auto& atoms = sys.transitions[a].atoms;
            for (std::size_t f = 0; f < m; ++f) {
                std::size_t r = pick(20);
                Rule rule = r < 8 ? Copy : r < 12 ? Flip : r < 17 ? Free : r < 19 ? Const0 : Const1;
                rules[a][f] = rule;
                switch (rule) {
                case Copy:
                    atoms.push_back(lin({{nxt(f), 1}, {cur(f), -1}}, Cmp::Eq, 0, "copy " + x(f)));
                    break;
                case Flip:
                    atoms.push_back(lin({{nxt(f), 1}, {cur(f), 1}}, Cmp::Eq, 1, "flip " + x(f)));
                    break;
                case Const0:
                case Const1:
                    atoms.push_back(lin({{nxt(f), 1}}, Cmp::Eq, rule == Const1 ? 1 : 0, "set " + x(f)));
                    break;
                case Free:
                    break;
                }
            }
            if (m >= 2 && pick(10) < 3) {
                std::size_t f = pick(m);
                std::size_t g = (f + 1 + pick(m - 1)) % m;
                bool high = pick(2) == 1;
                atoms.push_back(member({{cur(f), 1}, {nxt(g), 1}},
                                       high ? std::vector<Rational>{1, 2} : std::vector<Rational>{0, 1},
                                       "pair " + x(f) + " " + x(g)));
            }
        }

        StepFunction step = [&sys, &rules](std::span<const Rational> s, Action a) {
            RationalVector next(s.begin(), s.end());
            for (std::size_t f = 0; f < sys.m; ++f) {
                switch (rules[a][f]) {
                case Flip: next[f] = 1 - s[f]; break;
                case Const0: next[f] = 0; break;
                case Const1: next[f] = 1; break;
                default: break;
                }
            }
            if (sys.transitions[a].holds(s, next)) {
                return next;
            }
            return first_successor(sys, s, a);
        };

        RationalVector s1;
        for (std::size_t f = 0; f < m; ++f) {
            s1.emplace_back(static_cast<long>(pick(2)));
        }
        Execution exec;
        try {
            exec = simulate(sys, *net, step, s1, k);
        } catch (const std::runtime_error&) {
            continue;
        }
        if (has_tie(*net, exec)) {
            continue;
        }
        return {"random-" + std::to_string(seed), std::move(sys), std::move(net), std::move(exec)};
    }
}

}  // namespace kstep::envs

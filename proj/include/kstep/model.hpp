#pragma once

#include "kstep/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace kstep {

using Action = std::size_t;
using FeatureSet = std::vector<std::size_t>;  // sorted, unique

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Atoms

enum class Cmp { Le, Eq, Ge, Lt, Gt };

std::string_view to_string(Cmp cmp);
bool compare(const Rational& lhs, Cmp cmp, const Rational& rhs);

template <class Var>
struct Term {
    Var var;
    Rational coeff;
};

/// sum(coeff * var) <cmp> rhs
template <class Var>
struct LinearAtom {
    std::vector<Term<Var>> terms;
    Cmp cmp = Cmp::Le;
    Rational rhs;
    std::string label;
};

/// sum(coeff * var) in {values}
template <class Var>
struct MembershipAtom {
    std::vector<Term<Var>> terms;
    std::vector<Rational> values;  // sorted, unique, nonempty
    std::string label;
};

template <class Var>
using Atom = std::variant<LinearAtom<Var>, MembershipAtom<Var>>;

template <class Var, class ValueOf>
Rational evaluate_terms(const std::vector<Term<Var>>& terms, ValueOf&& value_of)
{
    Rational sum = 0;
    for (const auto& t : terms) {
        sum += t.coeff * value_of(t.var);
    }
    return sum;
}

template <class Var, class ValueOf>
bool holds(const Atom<Var>& atom, ValueOf&& value_of)
{
    if (const auto* lin = std::get_if<LinearAtom<Var>>(&atom)) {
        return compare(evaluate_terms(lin->terms, value_of), lin->cmp, lin->rhs);
    }
    const auto& mem = std::get<MembershipAtom<Var>>(atom);
    Rational v = evaluate_terms(mem.terms, value_of);
    return std::binary_search(mem.values.begin(), mem.values.end(), v);
}

template <class Var>
const std::string& atom_label(const Atom<Var>& atom)
{
    return std::visit([](const auto& a) -> const std::string& { return a.label; }, atom);
}

// ---------------------------------------------------------------------------
// State variables and constraint sets over (s, s')

enum class Block { Current, Next };

struct StateVar {
    Block block = Block::Current;
    std::size_t feature = 0;
    friend bool operator==(const StateVar&, const StateVar&) = default;
};

inline StateVar cur(std::size_t f) { return {Block::Current, f}; }
inline StateVar nxt(std::size_t f) { return {Block::Next, f}; }

using StateAtom = Atom<StateVar>;

std::string to_string(const StateVar& v);
std::string to_string(const StateAtom& atom);

struct ConstraintSet {
    std::vector<StateAtom> atoms;

    /// Index of the first atom violated by (current, next), if any. `next` may
    /// be empty for single-state predicates.
    std::optional<std::size_t> first_violation(std::span<const Rational> current,
                                               std::span<const Rational> next) const;
    bool holds(std::span<const Rational> current, std::span<const Rational> next) const
    {
        return !first_violation(current, next).has_value();
    }
};

// ---------------------------------------------------------------------------
// Feature domains

class FeatureDomain {
public:
    static FeatureDomain finite(std::vector<Rational> values);
    static FeatureDomain interval(Rational lower, Rational upper);

    bool is_finite() const { return finite_; }
    const std::vector<Rational>& values() const { return values_; }
    const Rational& lower() const { return lower_; }
    const Rational& upper() const { return upper_; }
    bool contains(const Rational& v) const;

private:
    bool finite_ = false;
    std::vector<Rational> values_;
    Rational lower_;
    Rational upper_;
};

// ---------------------------------------------------------------------------
// Network

struct Layer {
    std::vector<RationalVector> weights;  // rows = outputs, cols = inputs
    RationalVector bias;
    bool relu = false;
};

class Network {
public:
    explicit Network(std::vector<Layer> layers);

    std::size_t input_width() const { return layers_.front().weights.front().size(); }
    std::size_t output_width() const { return layers_.back().bias.size(); }
    const std::vector<Layer>& layers() const { return layers_; }
    std::size_t hidden_units() const;

private:
    std::vector<Layer> layers_;
};

RationalVector forward(const Network& net, std::span<const Rational> input);

/// Lowest index wins ties.
Action argmax(std::span<const Rational> outputs);
Action classify(const Network& net, std::span<const Rational> input);

/// How a rival output is compared against the chosen action's output.
enum class RivalMode { Weak, Strict };

/// True when some rival c' != a has y[c'] >= y[a] (Weak) or > y[a] (Strict).
bool deviates(std::span<const Rational> outputs, Action a, RivalMode mode);

// ---------------------------------------------------------------------------
// Reactive system, executions, masks

struct ReactiveSystem {
    std::size_t m = 0;
    std::vector<FeatureDomain> domains;
    std::vector<std::string> actions;
    ConstraintSet initial;                 // over Block::Current only
    std::vector<ConstraintSet> transitions;  // indexed by action

    std::size_t action_count() const { return actions.size(); }
    void validate() const;
    void validate_against(const Network& net) const;
    bool in_domain(std::span<const Rational> state) const;
};

struct Execution {
    std::vector<RationalVector> states;
    std::vector<Action> actions;

    std::size_t k() const { return states.size(); }
    Execution prefix(std::size_t length) const;
};

enum class MaskRole { Explanation, Contrastive };

struct StepMask {
    std::vector<FeatureSet> steps;
    MaskRole role = MaskRole::Explanation;

    static StepMask full(std::size_t k, std::size_t m, MaskRole role = MaskRole::Explanation);
    static StepMask empty(std::size_t k, MaskRole role = MaskRole::Explanation);

    std::size_t k() const { return steps.size(); }
    std::size_t size() const;
    bool contains(std::size_t step, std::size_t feature) const;
    /// Per-step complement with respect to {0..m-1}; flips the role.
    StepMask complement(std::size_t m) const;
    /// Stepwise subset test.
    bool subset_of(const StepMask& other) const;
    void validate(std::size_t k, std::size_t m) const;
    friend bool operator==(const StepMask& a, const StepMask& b) { return a.steps == b.steps; }
};

FeatureSet complement(const FeatureSet& set, std::size_t m);
std::string to_string(const StepMask& mask);

using StepFunction = std::function<RationalVector(std::span<const Rational>, Action)>;

class TransitionViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rolls the network forward from s1 for k steps, checking every produced
/// transition atom-by-atom.
Execution simulate(const ReactiveSystem& sys, const Network& net, const StepFunction& step,
                   RationalVector s1, std::size_t k);

struct ExecutionCheck {
    bool valid = true;
    std::string problem;
    explicit operator bool() const { return valid; }
};

ExecutionCheck validate_execution(const ReactiveSystem& sys, const Network& net,
                                  const Execution& exec);

}  // namespace kstep

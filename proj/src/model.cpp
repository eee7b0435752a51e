#include "kstep/model.hpp"

#include <sstream>

namespace kstep {

std::string_view to_string(Cmp cmp)
{
    switch (cmp) {
    case Cmp::Le: return "<=";
    case Cmp::Eq: return "=";
    case Cmp::Ge: return ">=";
    case Cmp::Lt: return "<";
    case Cmp::Gt: return ">";
    }
    return "?";
}

bool compare(const Rational& lhs, Cmp cmp, const Rational& rhs)
{
    switch (cmp) {
    case Cmp::Le: return lhs <= rhs;
    case Cmp::Eq: return lhs == rhs;
    case Cmp::Ge: return lhs >= rhs;
    case Cmp::Lt: return lhs < rhs;
    case Cmp::Gt: return lhs > rhs;
    }
    return false;
}

std::string to_string(const StateVar& v)
{
    return "x" + std::to_string(v.feature) + (v.block == Block::Next ? "'" : "");
}

namespace {

std::string terms_to_string(const std::vector<Term<StateVar>>& terms)
{
    std::ostringstream out;
    bool first = true;
    for (const auto& t : terms) {
        if (t.coeff == 0) {
            continue;
        }
        if (t.coeff < 0) {
            out << (first ? "-" : " - ");
        } else if (!first) {
            out << " + ";
        }
        Rational mag = abs(t.coeff);
        if (mag != 1) {
            out << to_string(mag) << "*";
        }
        out << to_string(t.var);
        first = false;
    }
    if (first) {
        out << "0";
    }
    return out.str();
}

}  // namespace

std::string to_string(const StateAtom& atom)
{
    std::ostringstream out;
    if (const auto* lin = std::get_if<LinearAtom<StateVar>>(&atom)) {
        out << terms_to_string(lin->terms) << " " << to_string(lin->cmp) << " "
            << to_string(lin->rhs);
    } else {
        const auto& mem = std::get<MembershipAtom<StateVar>>(atom);
        out << terms_to_string(mem.terms) << " in {";
        for (std::size_t i = 0; i < mem.values.size(); ++i) {
            out << (i ? ", " : "") << to_string(mem.values[i]);
        }
        out << "}";
    }
    const auto& label = atom_label(atom);
    if (!label.empty()) {
        out << "  [" << label << "]";
    }
    return out.str();
}

std::optional<std::size_t> ConstraintSet::first_violation(std::span<const Rational> current,
                                                          std::span<const Rational> next) const
{
    auto value_of = [&](const StateVar& v) -> const Rational& {
        std::span<const Rational> block = v.block == Block::Current ? current : next;
        if (v.feature >= block.size()) {
            throw ModelError("constraint references " + to_string(v) + " outside the state block");
        }
        return block[v.feature];
    };
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!kstep::holds(atoms[i], value_of)) {
            return i;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

FeatureDomain FeatureDomain::finite(std::vector<Rational> values)
{
    if (values.empty()) {
        throw ModelError("finite domain must be nonempty");
    }
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (!(values[i - 1] < values[i])) {
            throw ModelError("finite domain values must be strictly increasing");
        }
    }
    FeatureDomain d;
    d.finite_ = true;
    d.lower_ = values.front();
    d.upper_ = values.back();
    d.values_ = std::move(values);
    return d;
}

FeatureDomain FeatureDomain::interval(Rational lower, Rational upper)
{
    if (lower > upper) {
        throw ModelError("interval domain has lower > upper");
    }
    FeatureDomain d;
    d.lower_ = std::move(lower);
    d.upper_ = std::move(upper);
    return d;
}

bool FeatureDomain::contains(const Rational& v) const
{
    if (finite_) {
        return std::binary_search(values_.begin(), values_.end(), v);
    }
    return lower_ <= v && v <= upper_;
}

// ---------------------------------------------------------------------------

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers))
{
    if (layers_.empty()) {
        throw ModelError("network needs at least one layer");
    }
    std::size_t width = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        if (layer.weights.empty() || layer.weights.size() != layer.bias.size()) {
            throw ModelError("layer " + std::to_string(l) + ": weight rows and bias length differ");
        }
        std::size_t in = layer.weights.front().size();
        for (const auto& row : layer.weights) {
            if (row.size() != in) {
                throw ModelError("layer " + std::to_string(l) + ": ragged weight matrix");
            }
        }
        if (in == 0) {
            throw ModelError("layer " + std::to_string(l) + ": zero input width");
        }
        if (l > 0 && in != width) {
            throw ModelError("layer " + std::to_string(l) + ": expects " + std::to_string(in) +
                             " inputs but previous layer has " + std::to_string(width) + " units");
        }
        width = layer.bias.size();
    }
    if (layers_.back().relu) {
        throw ModelError("last layer must use the identity activation");
    }
}

std::size_t Network::hidden_units() const
{
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        n += layers_[l].bias.size();
    }
    return n;
}

RationalVector forward(const Network& net, std::span<const Rational> input)
{
    if (input.size() != net.input_width()) {
        throw ModelError("forward: input has " + std::to_string(input.size()) +
                         " values, network expects " + std::to_string(net.input_width()));
    }
    RationalVector current(input.begin(), input.end());
    RationalVector next;
    for (const Layer& layer : net.layers()) {
        next.assign(layer.bias.begin(), layer.bias.end());
        for (std::size_t r = 0; r < next.size(); ++r) {
            const RationalVector& row = layer.weights[r];
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (row[c] != 0 && current[c] != 0) {
                    next[r] += row[c] * current[c];
                }
            }
            if (layer.relu && next[r] < 0) {
                next[r] = 0;
            }
        }
        current.swap(next);
    }
    return current;
}

Action argmax(std::span<const Rational> outputs)
{
    if (outputs.empty()) {
        throw ModelError("argmax of an empty vector");
    }
    Action best = 0;
    for (std::size_t i = 1; i < outputs.size(); ++i) {
        if (outputs[i] > outputs[best]) {
            best = i;
        }
    }
    return best;
}

Action classify(const Network& net, std::span<const Rational> input)
{
    auto y = forward(net, input);
    return argmax(y);
}

bool deviates(std::span<const Rational> outputs, Action a, RivalMode mode)
{
    for (std::size_t c = 0; c < outputs.size(); ++c) {
        if (c == a) {
            continue;
        }
        if (mode == RivalMode::Weak ? outputs[c] >= outputs[a] : outputs[c] > outputs[a]) {
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------

void ReactiveSystem::validate() const
{
    if (domains.size() != m) {
        throw ModelError("system declares m=" + std::to_string(m) + " but has " +
                         std::to_string(domains.size()) + " domains");
    }
    if (actions.empty()) {
        throw ModelError("system has no actions");
    }
    if (transitions.size() != actions.size()) {
        throw ModelError("transitions must be defined for every action");
    }
    auto check = [&](const ConstraintSet& set, bool allow_next, const std::string& where) {
        for (const auto& atom : set.atoms) {
            const auto& terms = std::visit(
                [](const auto& a) -> const std::vector<Term<StateVar>>& { return a.terms; }, atom);
            for (const auto& t : terms) {
                if (t.var.feature >= m || (!allow_next && t.var.block == Block::Next)) {
                    throw ModelError(where + ": atom references undeclared variable " +
                                     to_string(t.var));
                }
            }
            if (const auto* mem = std::get_if<MembershipAtom<StateVar>>(&atom)) {
                if (mem->values.empty()) {
                    throw ModelError(where + ": empty membership set");
                }
            }
        }
    };
    check(initial, false, "initial");
    for (std::size_t a = 0; a < transitions.size(); ++a) {
        check(transitions[a], true, "transition " + actions[a]);
    }
}

void ReactiveSystem::validate_against(const Network& net) const
{
    validate();
    if (net.input_width() != m) {
        throw ModelError("network input width " + std::to_string(net.input_width()) +
                         " differs from feature count " + std::to_string(m));
    }
    if (net.output_width() != actions.size()) {
        throw ModelError("network output width " + std::to_string(net.output_width()) +
                         " differs from action count " + std::to_string(actions.size()));
    }
}

bool ReactiveSystem::in_domain(std::span<const Rational> state) const
{
    if (state.size() != m) {
        return false;
    }
    for (std::size_t f = 0; f < m; ++f) {
        if (!domains[f].contains(state[f])) {
            return false;
        }
    }
    return true;
}

Execution Execution::prefix(std::size_t length) const
{
    if (length == 0 || length > k()) {
        throw ModelError("prefix length out of range");
    }
    Execution e;
    e.states.assign(states.begin(), states.begin() + static_cast<std::ptrdiff_t>(length));
    e.actions.assign(actions.begin(), actions.begin() + static_cast<std::ptrdiff_t>(length));
    return e;
}

// ---------------------------------------------------------------------------

StepMask StepMask::full(std::size_t k, std::size_t m, MaskRole role)
{
    FeatureSet all(m);
    for (std::size_t f = 0; f < m; ++f) {
        all[f] = f;
    }
    return StepMask{std::vector<FeatureSet>(k, all), role};
}

StepMask StepMask::empty(std::size_t k, MaskRole role)
{
    return StepMask{std::vector<FeatureSet>(k), role};
}

std::size_t StepMask::size() const
{
    std::size_t n = 0;
    for (const auto& s : steps) {
        n += s.size();
    }
    return n;
}

bool StepMask::contains(std::size_t step, std::size_t feature) const
{
    const auto& s = steps.at(step);
    return std::binary_search(s.begin(), s.end(), feature);
}

FeatureSet complement(const FeatureSet& set, std::size_t m)
{
    FeatureSet out;
    std::size_t j = 0;
    for (std::size_t f = 0; f < m; ++f) {
        if (j < set.size() && set[j] == f) {
            ++j;
        } else {
            out.push_back(f);
        }
    }
    return out;
}

StepMask StepMask::complement(std::size_t m) const
{
    StepMask out;
    out.role = role == MaskRole::Explanation ? MaskRole::Contrastive : MaskRole::Explanation;
    for (const auto& s : steps) {
        out.steps.push_back(kstep::complement(s, m));
    }
    return out;
}

bool StepMask::subset_of(const StepMask& other) const
{
    if (steps.size() != other.steps.size()) {
        return false;
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!std::includes(other.steps[i].begin(), other.steps[i].end(), steps[i].begin(),
                           steps[i].end())) {
            return false;
        }
    }
    return true;
}

void StepMask::validate(std::size_t k, std::size_t m) const
{
    if (steps.size() != k) {
        throw ModelError("mask has " + std::to_string(steps.size()) + " steps, execution has " +
                         std::to_string(k));
    }
    for (const auto& s : steps) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] >= m) {
                throw ModelError("mask feature index " + std::to_string(s[i]) + " out of range");
            }
            if (i > 0 && s[i - 1] >= s[i]) {
                throw ModelError("mask feature sets must be sorted and unique");
            }
        }
    }
}

std::string to_string(const StepMask& mask)
{
    std::ostringstream out;
    out << "(";
    for (std::size_t i = 0; i < mask.steps.size(); ++i) {
        out << (i ? ", " : "") << "{";
        for (std::size_t j = 0; j < mask.steps[i].size(); ++j) {
            out << (j ? "," : "") << mask.steps[i][j];
        }
        out << "}";
    }
    out << ")";
    return out.str();
}

// ---------------------------------------------------------------------------

Execution simulate(const ReactiveSystem& sys, const Network& net, const StepFunction& step,
                   RationalVector s1, std::size_t k)
{
    sys.validate_against(net);
    if (k == 0) {
        throw ModelError("simulate: k must be positive");
    }
    if (!sys.in_domain(s1)) {
        throw ModelError("simulate: initial state outside the feature domains");
    }
    if (auto bad = sys.initial.first_violation(s1, {})) {
        throw TransitionViolation("simulate: initial state violates " +
                                  to_string(sys.initial.atoms[*bad]));
    }
    Execution exec;
    exec.states.push_back(std::move(s1));
    for (std::size_t i = 0;; ++i) {
        const RationalVector& s = exec.states.back();
        Action a = classify(net, s);
        exec.actions.push_back(a);
        if (i + 1 == k) {
            break;
        }
        RationalVector next = step(s, a);
        if (!sys.in_domain(next)) {
            throw TransitionViolation("simulate: step " + std::to_string(i + 1) +
                                      " leaves the feature domains");
        }
        if (auto bad = sys.transitions[a].first_violation(s, next)) {
            throw TransitionViolation("simulate: step " + std::to_string(i + 1) + " (" +
                                      sys.actions[a] + ") violates " +
                                      to_string(sys.transitions[a].atoms[*bad]));
        }
        exec.states.push_back(std::move(next));
    }
    return exec;
}

ExecutionCheck validate_execution(const ReactiveSystem& sys, const Network& net,
                                  const Execution& exec)
{
    auto fail = [](std::string why) { return ExecutionCheck{false, std::move(why)}; };
    try {
        sys.validate_against(net);
    } catch (const ModelError& e) {
        return fail(e.what());
    }
    if (exec.states.empty() || exec.states.size() != exec.actions.size()) {
        return fail("execution needs k >= 1 states and one action per state");
    }
    for (std::size_t i = 0; i < exec.k(); ++i) {
        if (!sys.in_domain(exec.states[i])) {
            return fail("step " + std::to_string(i + 1) + ": state outside the feature domains");
        }
        Action a = classify(net, exec.states[i]);
        if (a != exec.actions[i]) {
            return fail("step " + std::to_string(i + 1) + ": action " +
                        std::to_string(exec.actions[i]) + " is not the network's choice " +
                        std::to_string(a));
        }
    }
    if (auto bad = sys.initial.first_violation(exec.states[0], {})) {
        return fail("step 1: initial predicate violated by " + to_string(sys.initial.atoms[*bad]));
    }
    for (std::size_t i = 0; i + 1 < exec.k(); ++i) {
        const auto& t = sys.transitions[exec.actions[i]];
        if (auto bad = t.first_violation(exec.states[i], exec.states[i + 1])) {
            return fail("transition " + std::to_string(i + 1) + "->" + std::to_string(i + 2) +
                        ": violates " + to_string(t.atoms[*bad]));
        }
    }
    return {};
}

}  // namespace kstep

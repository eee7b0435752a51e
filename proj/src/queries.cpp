#include "kstep/queries.hpp"

namespace kstep {

namespace {

void check_step_mask(const ReactiveSystem& sys, const Execution& exec, const StepMask& mask)
{
    if (mask.k() != exec.k()) {
        throw QueryError("mask has " + std::to_string(mask.k()) + " steps, execution has " +
                         std::to_string(exec.k()));
    }
    try {
        mask.validate(exec.k(), sys.m);
    } catch (const ModelError& e) {
        throw QueryError(e.what());
    }
}

void check_feature_set(const FeatureSet& set, std::size_t m)
{
    for (std::size_t f : set) {
        if (f >= m) {
            throw QueryError("feature index " + std::to_string(f) + " out of range (m=" +
                             std::to_string(m) + ")");
        }
    }
}

std::vector<VarId> add_block(Query& q, const std::vector<FeatureDomain>& domains, std::size_t step)
{
    std::vector<VarId> block;
    for (std::size_t f = 0; f < domains.size(); ++f) {
        block.push_back(
            q.add_state_var("s" + std::to_string(step) + ".x" + std::to_string(f), domains[f]));
    }
    return block;
}

void pin_features(Query& q, const std::vector<VarId>& block, std::span<const Rational> values,
                  const FeatureSet& features, std::size_t step)
{
    for (std::size_t f : features) {
        q.add_atom(pin(block[f], values[f],
                       "pin s" + std::to_string(step) + ".x" + std::to_string(f)));
    }
}

Conjunction transition_atoms(const ReactiveSystem& sys, Action a, const std::vector<VarId>& cur_block,
                             const std::vector<VarId>& next_block)
{
    Conjunction out;
    for (const auto& atom : sys.transitions.at(a).atoms) {
        out.push_back(instantiate(atom, cur_block, next_block));
    }
    return out;
}

// Blocks for steps j..i with per-step pinned features, transitions between
// consecutive blocks, and a single network copy at step i whose deviation is
// the only disjunction group.
BuiltQuery window_query(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                        const Execution& exec, const std::vector<FeatureSet>& pinned,
                        std::size_t j, std::size_t i, const QueryOptions& opts)
{
    if (j > i || i >= exec.k()) {
        throw QueryError("bad window [" + std::to_string(j) + ", " + std::to_string(i) +
                         "] for an execution of length " + std::to_string(exec.k()));
    }
    BuiltQuery bq;
    bq.first_step = j;
    for (std::size_t s = j; s <= i; ++s) {
        bq.blocks.push_back(add_block(bq.query, sys.domains, s));
        bq.copy_of_block.push_back(no_copy);
        pin_features(bq.query, bq.blocks.back(), exec.states[s], pinned[s], s);
    }
    for (std::size_t s = j; s < i; ++s) {
        for (auto& atom :
             transition_atoms(sys, exec.actions[s], bq.blocks[s - j], bq.blocks[s + 1 - j])) {
            bq.query.add_atom(std::move(atom));
        }
    }
    const auto& copy = bq.query.add_network_copy(std::move(net), bq.blocks.back(), i);
    bq.copy_of_block.back() = 0;
    bq.query.add_group(rival_group(copy.outputs(), exec.actions[i], opts.rival,
                                   "deviate at s" + std::to_string(i)));
    return bq;
}

}  // namespace

DisjunctionGroup rival_group(const std::vector<VarId>& outputs, Action a, RivalMode mode,
                             std::string label)
{
    DisjunctionGroup g;
    g.label = std::move(label);
    for (std::size_t c = 0; c < outputs.size(); ++c) {
        if (c == a) {
            continue;
        }
        g.alternatives.push_back({linear({{outputs[c], Rational(1)}, {outputs[a], Rational(-1)}},
                                         mode == RivalMode::Weak ? Cmp::Ge : Cmp::Gt, Rational(0),
                                         "y" + std::to_string(c) + " vs y" + std::to_string(a))});
    }
    if (g.alternatives.empty()) {
        throw QueryError("network with a single output has no rival actions");
    }
    return g;
}

QueryAtom instantiate(const StateAtom& atom, const std::vector<VarId>& current,
                      const std::vector<VarId>& next)
{
    auto map_terms = [&](const std::vector<Term<StateVar>>& terms) {
        std::vector<Term<VarId>> out;
        for (const auto& t : terms) {
            const auto& block = t.var.block == Block::Current ? current : next;
            if (t.var.feature >= block.size()) {
                throw QueryError("constraint references " + to_string(t.var) + " outside the state");
            }
            out.push_back({block[t.var.feature], t.coeff});
        }
        return out;
    };
    if (const auto* lin = std::get_if<LinearAtom<StateVar>>(&atom)) {
        return LinearAtom<VarId>{map_terms(lin->terms), lin->cmp, lin->rhs, lin->label};
    }
    const auto& mem = std::get<MembershipAtom<StateVar>>(atom);
    return MembershipAtom<VarId>{map_terms(mem.terms), mem.values, mem.label};
}

BuiltQuery explanation_query_single(std::shared_ptr<const Network> net,
                                    const std::vector<FeatureDomain>& domains,
                                    std::span<const Rational> v, Action c, const FeatureSet& E,
                                    const QueryOptions& opts)
{
    if (v.size() != domains.size()) {
        throw QueryError("input width differs from the number of domains");
    }
    check_feature_set(E, domains.size());
    BuiltQuery bq;
    bq.blocks.push_back(add_block(bq.query, domains, 0));
    pin_features(bq.query, bq.blocks[0], v, E, 0);
    const auto& copy = bq.query.add_network_copy(std::move(net), bq.blocks[0], 0);
    bq.copy_of_block.push_back(0);
    bq.query.add_group(rival_group(copy.outputs(), c, opts.rival, "deviate"));
    return bq;
}

BuiltQuery contrastive_query_single(std::shared_ptr<const Network> net,
                                    const std::vector<FeatureDomain>& domains,
                                    std::span<const Rational> v, Action c, const FeatureSet& C,
                                    const QueryOptions& opts)
{
    check_feature_set(C, domains.size());
    return explanation_query_single(std::move(net), domains, v, c, complement(C, domains.size()),
                                    opts);
}

BuiltQuery encode_unrolled(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                           std::span<const Action> actions)
{
    if (actions.empty()) {
        throw QueryError("encode_unrolled needs k >= 1");
    }
    BuiltQuery bq;
    for (std::size_t s = 0; s < actions.size(); ++s) {
        bq.blocks.push_back(add_block(bq.query, sys.domains, s));
        bq.query.add_network_copy(net, bq.blocks.back(), s);
        bq.copy_of_block.push_back(s);
    }
    for (std::size_t s = 0; s + 1 < actions.size(); ++s) {
        for (auto& atom : transition_atoms(sys, actions[s], bq.blocks[s], bq.blocks[s + 1])) {
            bq.query.add_atom(std::move(atom));
        }
    }
    return bq;
}

BuiltQuery explanation_query_multi(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                                   const Execution& exec, const StepMask& E,
                                   const QueryOptions& opts)
{
    check_step_mask(sys, exec, E);
    const std::size_t k = exec.k();
    BuiltQuery bq;
    std::vector<std::vector<VarId>> outputs;
    for (std::size_t s = 0; s < k; ++s) {
        bq.blocks.push_back(add_block(bq.query, sys.domains, s));
        pin_features(bq.query, bq.blocks.back(), exec.states[s], E.steps[s], s);
        outputs.push_back(bq.query.add_network_copy(net, bq.blocks.back(), s).outputs());
        bq.copy_of_block.push_back(s);
    }
    // One alternative per (step i, rival c); each carries the transitions of
    // the prefix it deviates at.
    DisjunctionGroup deviation;
    deviation.label = "some action deviates";
    Conjunction prefix;
    for (std::size_t s = 0; s < k; ++s) {
        if (s > 0) {
            for (auto& atom :
                 transition_atoms(sys, exec.actions[s - 1], bq.blocks[s - 1], bq.blocks[s])) {
                prefix.push_back(std::move(atom));
            }
        }
        auto rivals = rival_group(outputs[s], exec.actions[s], opts.rival, "");
        for (auto& alt : rivals.alternatives) {
            Conjunction full = prefix;
            full.insert(full.end(), alt.begin(), alt.end());
            deviation.alternatives.push_back(std::move(full));
        }
    }
    bq.query.add_group(std::move(deviation));
    return bq;
}

BuiltQuery explanation_query_prefix(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                                    const Execution& exec, const StepMask& E, std::size_t i,
                                    const QueryOptions& opts)
{
    check_step_mask(sys, exec, E);
    if (i >= exec.k()) {
        throw QueryError("prefix index " + std::to_string(i) + " out of range");
    }
    return window_query(sys, std::move(net), exec, E.steps, 0, i, opts);
}

BuiltQuery contrastive_query_multi(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                                   const Execution& exec, const StepMask& C,
                                   const QueryOptions& opts)
{
    check_step_mask(sys, exec, C);
    return explanation_query_multi(sys, std::move(net), exec, C.complement(sys.m), opts);
}

BuiltQuery contrastive_query_window(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                                    const Execution& exec, const StepMask& C, std::size_t j,
                                    std::size_t i, const QueryOptions& opts)
{
    check_step_mask(sys, exec, C);
    return window_query(sys, std::move(net), exec, C.complement(sys.m).steps, j, i, opts);
}

std::optional<std::size_t> deviation_step(const ReactiveSystem& sys, const Network& net,
                                          const Execution& exec, const BuiltQuery& q,
                                          std::span<const Rational> witness, RivalMode mode)
{
    std::vector<RationalVector> states;
    for (const auto& block : q.blocks) {
        RationalVector s;
        for (VarId v : block) {
            s.push_back(witness[v]);
        }
        states.push_back(std::move(s));
    }
    for (std::size_t b = 0; b < states.size(); ++b) {
        std::size_t step = q.first_step + b;
        if (b > 0 && !sys.transitions[exec.actions[step - 1]].holds(states[b - 1], states[b])) {
            return std::nullopt;
        }
        if (q.copy_of_block[b] == no_copy) {
            continue;
        }
        if (deviates(forward(net, states[b]), exec.actions[step], mode)) {
            return step;
        }
    }
    return std::nullopt;
}

}  // namespace kstep

#include "finite_search.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace kstep::detail {

namespace {

const std::vector<Term<VarId>>& terms_of(const QueryAtom& a)
{
    return std::visit([](const auto& x) -> const std::vector<Term<VarId>>& { return x.terms; }, a);
}

constexpr double kMargin = 1e-7;

}  // namespace

Budget::Budget(const SolverOptions& opts) : max_splits_(opts.max_splits)
{
    if (opts.time_limit) {
        deadline_ = std::chrono::steady_clock::now() + *opts.time_limit;
    }
}

void Budget::tick(std::uint64_t branches)
{
    std::uint64_t n = ++nodes_;
    std::uint64_t b = branches_ += branches;
    if (max_splits_ && b > *max_splits_) {
        throw TimeoutSignal{};
    }
    if (deadline_ && (n & 255) == 0 && std::chrono::steady_clock::now() > *deadline_) {
        throw TimeoutSignal{};
    }
}

FloatShadow::FloatShadow(const Query& q) : q_(q)
{
    for (const auto& a : q.atoms()) {
        add(a, q);
    }
    top_level_ = atoms_.size();
    for (const auto& g : q.groups()) {
        std::vector<std::vector<std::size_t>> alts;
        for (const auto& alt : g.alternatives) {
            std::vector<std::size_t> idx;
            for (const auto& a : alt) {
                idx.push_back(atoms_.size());
                add(a, q);
            }
            alts.push_back(std::move(idx));
        }
        groups_.push_back(std::move(alts));
    }
    for (const auto& copy : q.copies()) {
        std::vector<FLayer> layers;
        for (const auto& layer : copy.net->layers()) {
            FLayer fl;
            fl.relu = layer.relu;
            for (const auto& row : layer.weights) {
                std::vector<double> r;
                for (const auto& w : row) {
                    r.push_back(w.get_d());
                }
                fl.weights.push_back(std::move(r));
            }
            for (const auto& b : layer.bias) {
                fl.bias.push_back(b.get_d());
            }
            layers.push_back(std::move(fl));
        }
        nets_.push_back(std::move(layers));
    }
}

void FloatShadow::add(const QueryAtom& a, const Query& q)
{
    FAtom f;
    f.source = &a;
    for (const auto& t : terms_of(a)) {
        f.terms.emplace_back(t.var, t.coeff.get_d());
        f.vars.push_back(t.var);
        f.state_only = f.state_only && q.variables()[t.var].role == VarRole::State;
    }
    std::sort(f.vars.begin(), f.vars.end());
    f.vars.erase(std::unique(f.vars.begin(), f.vars.end()), f.vars.end());
    if (const auto* lin = std::get_if<LinearAtom<VarId>>(&a)) {
        f.cmp = lin->cmp;
        f.rhs = lin->rhs.get_d();
    } else {
        f.membership = true;
        for (const auto& v : std::get<MembershipAtom<VarId>>(a).values) {
            f.values.push_back(v.get_d());
        }
    }
    atoms_.push_back(std::move(f));
}

void FloatShadow::evaluate_copy(std::size_t c, std::vector<double>& fv) const
{
    const auto& copy = q_.copies()[c];
    const auto& layers = nets_[c];
    const std::vector<VarId>* prev = &copy.inputs;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const FLayer& layer = layers[l];
        const auto& out = copy.units[l];
        for (std::size_t u = 0; u < out.size(); ++u) {
            double sum = layer.bias[u];
            const auto& row = layer.weights[u];
            for (std::size_t j = 0; j < row.size(); ++j) {
                sum += row[j] * fv[(*prev)[j]];
            }
            fv[out[u]] = layer.relu && sum < 0 ? 0.0 : sum;
        }
        prev = &out;
    }
}

bool FloatShadow::clearly_violated(std::size_t i, const std::vector<double>& fv) const
{
    const FAtom& a = atoms_[i];
    double value = 0;
    double scale = 1;
    for (const auto& [v, c] : a.terms) {
        double x = c * fv[v];
        value += x;
        scale += std::fabs(x);
    }
    if (a.membership) {
        double margin = kMargin * (scale + std::fabs(value));
        return std::all_of(a.values.begin(), a.values.end(),
                           [&](double t) { return std::fabs(value - t) > margin; });
    }
    double margin = kMargin * (scale + std::fabs(a.rhs));
    switch (a.cmp) {
    case Cmp::Le:
    case Cmp::Lt: return value > a.rhs + margin;
    case Cmp::Ge:
    case Cmp::Gt: return value < a.rhs - margin;
    case Cmp::Eq: return std::fabs(value - a.rhs) > margin;
    }
    return false;
}

std::optional<std::vector<std::vector<Rational>>> finite_candidates(const Query& q)
{
    const auto& vars = q.variables();
    std::vector<std::vector<Rational>> out(vars.size());
    for (VarId v = 0; v < vars.size(); ++v) {
        if (vars[v].role != VarRole::State) {
            continue;
        }
        const FeatureDomain& d = *vars[v].domain;
        if (!d.is_finite()) {
            return std::nullopt;
        }
        for (const auto& value : d.values()) {
            bool ok = true;
            auto value_of = [&](VarId) -> const Rational& { return value; };
            for (const auto& atom : q.atoms()) {
                const auto& terms = terms_of(atom);
                bool single = !terms.empty() &&
                              std::all_of(terms.begin(), terms.end(),
                                          [&](const Term<VarId>& t) { return t.var == v; });
                if (single && !holds(atom, value_of)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                out[v].push_back(value);
            }
        }
    }
    return out;
}

bool accept_point(const Query& q, const FloatShadow& shadow, RationalVector& values,
                  std::vector<double>& fv)
{
    const auto& vars = q.variables();
    fv.assign(values.size(), 0.0);
    for (VarId v = 0; v < vars.size(); ++v) {
        if (vars[v].role == VarRole::State) {
            fv[v] = values[v].get_d();
        }
    }
    auto value_of = [&](VarId v) -> const Rational& { return values[v]; };
    auto state_ok = [&](std::size_t i) {
        return !shadow.state_only(i) || holds(shadow.atom(i), value_of);
    };
    for (std::size_t i = 0; i < shadow.top_level_count(); ++i) {
        if (!state_ok(i)) {
            return false;
        }
    }
    for (std::size_t c = 0; c < q.copies().size(); ++c) {
        shadow.evaluate_copy(c, fv);
    }
    for (std::size_t i = 0; i < shadow.top_level_count(); ++i) {
        if (!shadow.state_only(i) && shadow.clearly_violated(i, fv)) {
            return false;
        }
    }
    for (std::size_t g = 0; g < q.groups().size(); ++g) {
        bool possible = false;
        for (std::size_t a = 0; a < q.groups()[g].alternatives.size() && !possible; ++a) {
            const auto& idx = shadow.alternative(g, a);
            possible = std::all_of(idx.begin(), idx.end(), [&](std::size_t i) {
                return shadow.state_only(i) ? holds(shadow.atom(i), value_of)
                                            : !shadow.clearly_violated(i, fv);
            });
        }
        if (!possible) {
            return false;
        }
    }
    q.complete_assignment(values);
    return q.satisfied_by(values);
}

namespace {

struct Plan {
    std::vector<VarId> order;                            // relevant state variables
    std::vector<std::vector<std::size_t>> copies_at;     // evaluated after order[p]
    std::vector<std::vector<std::size_t>> state_atoms_at;
    std::vector<std::vector<std::size_t>> unit_atoms_at;
    std::vector<std::size_t> unconditional;              // atoms over no state variable
};

class Backtracker {
public:
    Backtracker(const Query& q, const FloatShadow& shadow,
                const std::vector<std::vector<Rational>>& candidates, const SolverOptions& opts,
                Budget& budget)
        : q_(q), shadow_(shadow), cand_(candidates), opts_(opts), budget_(budget)
    {
        const auto& vars = q.variables();
        owner_.assign(vars.size(), -1);
        for (std::size_t c = 0; c < q.copies().size(); ++c) {
            for (const auto& layer : q.copies()[c].units) {
                for (VarId u : layer) {
                    owner_[u] = static_cast<int>(c);
                }
            }
        }
    }

    std::optional<RationalVector> run()
    {
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < shadow_.top_level_count(); ++i) {
            active.push_back(i);
        }
        return choose(0, active);
    }

    std::uint64_t leaves() const { return leaves_.load(); }

private:
    std::optional<RationalVector> choose(std::size_t g, std::vector<std::size_t>& active)
    {
        if (g == q_.groups().size()) {
            return search(make_plan(active));
        }
        for (std::size_t a = 0; a < q_.groups()[g].alternatives.size(); ++a) {
            const auto& idx = shadow_.alternative(g, a);
            active.insert(active.end(), idx.begin(), idx.end());
            auto w = choose(g + 1, active);
            active.resize(active.size() - idx.size());
            if (w) {
                return w;
            }
        }
        return std::nullopt;
    }

    Plan make_plan(const std::vector<std::size_t>& active) const
    {
        const auto& vars = q_.variables();
        std::vector<char> rel(vars.size(), 0);
        std::vector<char> copy_rel(q_.copies().size(), 0);
        for (std::size_t i : active) {
            for (VarId v : shadow_.vars_of(i)) {
                if (vars[v].role == VarRole::State) {
                    rel[v] = 1;
                } else {
                    copy_rel[owner_[v]] = 1;
                }
            }
        }
        for (std::size_t c = 0; c < copy_rel.size(); ++c) {
            if (copy_rel[c]) {
                for (VarId v : q_.copies()[c].inputs) {
                    rel[v] = 1;
                }
            }
        }
        Plan p;
        std::vector<int> pos(vars.size(), -1);
        for (VarId v = 0; v < vars.size(); ++v) {
            if (rel[v]) {
                pos[v] = static_cast<int>(p.order.size());
                p.order.push_back(v);
            }
        }
        const std::size_t n = p.order.size();
        p.copies_at.resize(n);
        p.state_atoms_at.resize(n);
        p.unit_atoms_at.resize(n);
        std::vector<int> copy_pos(q_.copies().size(), -1);
        for (std::size_t c = 0; c < copy_rel.size(); ++c) {
            if (!copy_rel[c]) {
                continue;
            }
            int last = -1;
            for (VarId v : q_.copies()[c].inputs) {
                last = std::max(last, pos[v]);
            }
            copy_pos[c] = last;
            if (last >= 0) {
                p.copies_at[last].push_back(c);
            }
        }
        for (std::size_t i : active) {
            int last = -1;
            for (VarId v : shadow_.vars_of(i)) {
                last = std::max(last, vars[v].role == VarRole::State ? pos[v] : copy_pos[owner_[v]]);
            }
            if (last < 0) {
                p.unconditional.push_back(i);
            } else if (shadow_.state_only(i)) {
                p.state_atoms_at[last].push_back(i);
            } else {
                p.unit_atoms_at[last].push_back(i);
            }
        }
        return p;
    }

    struct Worker {
        std::vector<const Rational*> assign;
        std::vector<double> fv;
    };

    bool extend(const Plan& p, Worker& w, std::size_t pos, const Rational& value) const
    {
        VarId v = p.order[pos];
        w.assign[v] = &value;
        w.fv[v] = value.get_d();
        for (std::size_t c : p.copies_at[pos]) {
            shadow_.evaluate_copy(c, w.fv);
        }
        auto value_of = [&](VarId x) -> const Rational& { return *w.assign[x]; };
        for (std::size_t i : p.state_atoms_at[pos]) {
            if (!holds(shadow_.atom(i), value_of)) {
                return false;
            }
        }
        for (std::size_t i : p.unit_atoms_at[pos]) {
            if (shadow_.clearly_violated(i, w.fv)) {
                return false;
            }
        }
        return true;
    }

    std::optional<RationalVector> leaf(Worker& w) const
    {
        ++leaves_;
        const auto& vars = q_.variables();
        RationalVector values(vars.size());
        for (VarId v = 0; v < vars.size(); ++v) {
            if (vars[v].role == VarRole::State) {
                values[v] = w.assign[v] ? *w.assign[v] : cand_[v].front();
            }
        }
        q_.complete_assignment(values);
        if (q_.satisfied_by(values)) {
            return values;
        }
        return std::nullopt;
    }

    std::optional<RationalVector> dfs(const Plan& p, Worker& w, std::size_t pos) const
    {
        if (pos == p.order.size()) {
            return leaf(w);
        }
        VarId v = p.order[pos];
        for (const Rational& value : cand_[v]) {
            budget_.tick(1);
            if (extend(p, w, pos, value)) {
                if (auto r = dfs(p, w, pos + 1)) {
                    return r;
                }
            }
        }
        w.assign[v] = nullptr;
        return std::nullopt;
    }

    Worker fresh_worker() const
    {
        Worker w;
        w.assign.assign(q_.num_vars(), nullptr);
        w.fv.assign(q_.num_vars(), 0.0);
        return w;
    }

    std::optional<RationalVector> search(const Plan& p) const
    {
        Worker base = fresh_worker();
        auto value_of = [&](VarId) -> const Rational& { return cand_.front().front(); };
        for (std::size_t i : p.unconditional) {
            if (shadow_.vars_of(i).empty() && !holds(shadow_.atom(i), value_of)) {
                return std::nullopt;
            }
        }
        if (p.order.empty()) {
            return leaf(base);
        }
        // The first variable's values are independent subtrees; the lowest
        // value with a witness wins, so the result does not depend on
        // scheduling.
        const auto& first = cand_[p.order.front()];
        std::vector<std::optional<RationalVector>> found(first.size());
        std::size_t hit = kernels::find_first(opts_.exec, first.size(), [&](std::size_t i) {
            budget_.tick(1);
            Worker w = fresh_worker();
            if (!extend(p, w, 0, first[i])) {
                return false;
            }
            found[i] = dfs(p, w, 1);
            return found[i].has_value();
        });
        if (hit == first.size()) {
            return std::nullopt;
        }
        return std::move(found[hit]);
    }

    const Query& q_;
    const FloatShadow& shadow_;
    const std::vector<std::vector<Rational>>& cand_;
    const SolverOptions& opts_;
    Budget& budget_;
    std::vector<int> owner_;
    mutable std::atomic<std::uint64_t> leaves_{0};
};

}  // namespace

std::optional<RationalVector> backtrack(const Query& q,
                                        const std::vector<std::vector<Rational>>& candidates,
                                        const SolverOptions& opts, Budget& budget,
                                        SolveStats& stats)
{
    FloatShadow shadow(q);
    Backtracker bt(q, shadow, candidates, opts, budget);
    stats.enumerated = true;
    auto record = [&] {
        stats.nodes += budget.nodes();
        stats.membership_branches += budget.branches();
        stats.enumerated_points += bt.leaves();
    };
    for (VarId v = 0; v < q.num_vars(); ++v) {
        if (q.variables()[v].role == VarRole::State && candidates[v].empty()) {
            record();
            return std::nullopt;
        }
    }
    try {
        auto w = bt.run();
        record();
        return w;
    } catch (const TimeoutSignal&) {
        record();
        throw;
    }
}

}  // namespace kstep::detail

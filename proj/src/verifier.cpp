#include "kstep/verifier.hpp"

#include "kstep/simplex.hpp"

#include "finite_search.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace kstep {

std::string_view to_string(Status status)
{
    switch (status) {
    case Status::Sat: return "SAT";
    case Status::Unsat: return "UNSAT";
    case Status::Timeout: return "TIMEOUT";
    }
    return "?";
}

SolveStats& SolveStats::operator+=(const SolveStats& o)
{
    relu_splits += o.relu_splits;
    membership_branches += o.membership_branches;
    disjunction_branches += o.disjunction_branches;
    lp_calls += o.lp_calls;
    nodes += o.nodes;
    enumerated_points += o.enumerated_points;
    enumerated = enumerated || o.enumerated;
    wall_seconds += o.wall_seconds;
    return *this;
}

std::string to_json(const SolveStats& s)
{
    std::ostringstream out;
    out << "{\"relu_splits\":" << s.relu_splits << ",\"membership_branches\":"
        << s.membership_branches << ",\"disjunction_branches\":" << s.disjunction_branches
        << ",\"lp_calls\":" << s.lp_calls << ",\"nodes\":" << s.nodes
        << ",\"enumerated_points\":" << s.enumerated_points
        << ",\"enumerated\":" << (s.enumerated ? "true" : "false")
        << ",\"wall_seconds\":" << s.wall_seconds << "}";
    return out.str();
}

namespace {

using Terms = std::vector<std::pair<VarId, Rational>>;

struct LinC {
    Terms terms;
    Cmp cmp = Cmp::Le;
    Rational rhs;
    int group = -1;
    int alt = -1;
};

struct MemC {
    Terms terms;
    std::vector<Rational> values;
    int group = -1;
    int alt = -1;
    bool domain = false;  // the finite domain of a single state variable
};

// out = relu(expr + bias)
struct ReluC {
    VarId out = 0;
    Terms expr;
    Terms relax;  // out - expr
    Rational bias;
};

struct AltC {
    std::vector<std::size_t> lins;
    std::vector<std::size_t> mems;
};

using detail::TimeoutSignal;
Terms merge_terms(const std::vector<Term<VarId>>& terms)
{
    Terms out;
    for (const auto& t : terms) {
        out.emplace_back(t.var, t.coeff);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Terms merged;
    for (auto& [v, c] : out) {
        if (!merged.empty() && merged.back().first == v) {
            merged.back().second += c;
        } else {
            merged.emplace_back(v, c);
        }
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const auto& p) { return p.second == 0; }),
                 merged.end());
    return merged;
}

struct Range {
    Rational lo;
    Rational hi;
    int lo_inf = 0;
    int hi_inf = 0;
};

struct Node {
    std::vector<Rational> lo;
    std::vector<Rational> hi;
    std::vector<char> has_lo;
    std::vector<char> has_hi;
    std::vector<signed char> phase;
    std::vector<int> mem_value;
    std::vector<int> group_choice;  // -1 open, -2 entailed, else alternative
};

enum class AltState { Dead, Open, Entailed };

class Search {
public:
    Search(const Query& q, const SolverOptions& opts, SolveStats& stats)
        : q_(q), opts_(opts), stats_(stats)
    {
        build();
    }

    bool finite_fast_path_applies(std::vector<std::vector<Rational>>& candidates) const;
    std::optional<RationalVector> enumerate(const std::vector<std::vector<Rational>>& candidates);
    std::optional<RationalVector> run();

private:
    void build();
    void add_atom(const QueryAtom& atom, int group, int alt, AltC* target);

    bool lin_active(const Node& n, std::size_t i) const
    {
        return lins_[i].group < 0 || n.group_choice[lins_[i].group] == lins_[i].alt;
    }
    bool mem_active(const Node& n, std::size_t i) const
    {
        return mems_[i].group < 0 || n.group_choice[mems_[i].group] == mems_[i].alt;
    }

    Range range(const Terms& terms, const Node& n) const;
    bool set_lo(Node& n, VarId v, const Rational& b);
    bool set_hi(Node& n, VarId v, const Rational& b);
    bool tighten_le(Node& n, const Terms& terms, const Rational& rhs, bool strict);
    bool tighten_ge(Node& n, const Terms& terms, const Rational& rhs, bool strict);
    bool tighten(Node& n, const Terms& terms, Cmp cmp, const Rational& rhs);
    void candidates(const MemC& m, const Node& n, std::vector<std::size_t>& out) const;
    AltState alt_state(const AltC& alt, const Node& n) const;
    bool propagate(Node& n);

    // Variables that can still influence satisfaction: those of top-level
    // atoms and of live group alternatives, plus the inputs of every network
    // copy whose units appear there. Others may take any domain value.
    std::vector<char> relevant(const Node& n, std::vector<char>& copy_relevant) const;
    Rational free_value(const Node& n, VarId v) const;

    std::optional<RationalVector> try_point(const Node& n) const;
    std::optional<RationalVector> check_candidate(RationalVector values) const;
    enum class LpOutcome { Infeasible, Feasible, Witness };
    LpOutcome solve_lp(const Node& n, const std::vector<char>& rel,
                       std::optional<RationalVector>& witness);
    std::optional<RationalVector> dfs(Node& n);
    void tick();

    const Query& q_;
    const SolverOptions& opts_;
    SolveStats& stats_;
    std::chrono::steady_clock::time_point deadline_;
    bool has_deadline_ = false;

    std::size_t nvars_ = 0;
    std::vector<LinC> lins_;
    std::vector<MemC> mems_;
    std::vector<ReluC> relus_;
    std::vector<LinC> net_eqs_;
    std::vector<std::vector<AltC>> groups_;
    std::vector<VarId> state_vars_;
    std::vector<std::size_t> relu_copy_;
    std::vector<int> var_copy_;  // copy owning a hidden/output variable, else -1
    Node root_;
    bool changed_ = false;
};

void Search::add_atom(const QueryAtom& atom, int group, int alt, AltC* target)
{
    if (const auto* lin = std::get_if<LinearAtom<VarId>>(&atom)) {
        lins_.push_back({merge_terms(lin->terms), lin->cmp, lin->rhs, group, alt});
        if (target) {
            target->lins.push_back(lins_.size() - 1);
        }
    } else {
        const auto& mem = std::get<MembershipAtom<VarId>>(atom);
        std::vector<Rational> values = mem.values;
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        mems_.push_back({merge_terms(mem.terms), std::move(values), group, alt});
        if (target) {
            target->mems.push_back(mems_.size() - 1);
        }
    }
}

void Search::build()
{
    nvars_ = q_.num_vars();
    root_.lo.assign(nvars_, Rational(0));
    root_.hi.assign(nvars_, Rational(0));
    root_.has_lo.assign(nvars_, 0);
    root_.has_hi.assign(nvars_, 0);
    const auto& vars = q_.variables();
    for (VarId v = 0; v < nvars_; ++v) {
        if (vars[v].role != VarRole::State) {
            continue;
        }
        state_vars_.push_back(v);
        const FeatureDomain& d = *vars[v].domain;
        root_.lo[v] = d.lower();
        root_.hi[v] = d.upper();
        root_.has_lo[v] = root_.has_hi[v] = 1;
        if (d.is_finite() && d.values().size() > 1) {
            mems_.push_back({{{v, Rational(1)}}, d.values(), -1, -1, true});
        }
    }
    for (const auto& atom : q_.atoms()) {
        add_atom(atom, -1, -1, nullptr);
    }
    for (std::size_t g = 0; g < q_.groups().size(); ++g) {
        std::vector<AltC> alts;
        const auto& group = q_.groups()[g];
        for (std::size_t a = 0; a < group.alternatives.size(); ++a) {
            AltC alt;
            for (const auto& atom : group.alternatives[a]) {
                add_atom(atom, static_cast<int>(g), static_cast<int>(a), &alt);
            }
            alts.push_back(std::move(alt));
        }
        groups_.push_back(std::move(alts));
    }
    var_copy_.assign(nvars_, -1);
    for (std::size_t ci = 0; ci < q_.copies().size(); ++ci) {
        const auto& copy = q_.copies()[ci];
        for (const auto& layer_units : copy.units) {
            for (VarId u : layer_units) {
                var_copy_[u] = static_cast<int>(ci);
            }
        }
        std::vector<VarId> prev = copy.inputs;
        const auto& layers = copy.net->layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const Layer& layer = layers[l];
            for (std::size_t u = 0; u < layer.bias.size(); ++u) {
                VarId out = copy.units[l][u];
                Terms expr;
                for (std::size_t j = 0; j < prev.size(); ++j) {
                    if (layer.weights[u][j] != 0) {
                        expr.emplace_back(prev[j], layer.weights[u][j]);
                    }
                }
                Terms relax;
                relax.emplace_back(out, Rational(1));
                for (const auto& [v, w] : expr) {
                    relax.emplace_back(v, Rational(-w));
                }
                if (layer.relu) {
                    relus_.push_back({out, std::move(expr), std::move(relax), layer.bias[u]});
                    relu_copy_.push_back(ci);
                } else {
                    net_eqs_.push_back({std::move(relax), Cmp::Eq, layer.bias[u], -1, -1});
                }
            }
            prev = copy.units[l];
        }
    }
    root_.phase.assign(relus_.size(), 0);
    root_.mem_value.assign(mems_.size(), -1);
    root_.group_choice.assign(groups_.size(), -1);
}

Range Search::range(const Terms& terms, const Node& n) const
{
    Range r;
    for (const auto& [v, a] : terms) {
        if (a > 0) {
            if (n.has_lo[v]) {
                r.lo += a * n.lo[v];
            } else {
                ++r.lo_inf;
            }
            if (n.has_hi[v]) {
                r.hi += a * n.hi[v];
            } else {
                ++r.hi_inf;
            }
        } else {
            if (n.has_hi[v]) {
                r.lo += a * n.hi[v];
            } else {
                ++r.lo_inf;
            }
            if (n.has_lo[v]) {
                r.hi += a * n.lo[v];
            } else {
                ++r.hi_inf;
            }
        }
    }
    return r;
}

bool Search::set_lo(Node& n, VarId v, const Rational& b)
{
    if (!n.has_lo[v] || n.lo[v] < b) {
        n.lo[v] = b;
        n.has_lo[v] = 1;
        changed_ = true;
    }
    return !(n.has_hi[v] && n.hi[v] < n.lo[v]);
}

bool Search::set_hi(Node& n, VarId v, const Rational& b)
{
    if (!n.has_hi[v] || b < n.hi[v]) {
        n.hi[v] = b;
        n.has_hi[v] = 1;
        changed_ = true;
    }
    return !(n.has_lo[v] && n.hi[v] < n.lo[v]);
}

// sum a_j x_j <= rhs (or < rhs)
bool Search::tighten_le(Node& n, const Terms& terms, const Rational& rhs, bool strict)
{
    Range r = range(terms, n);
    if (r.lo_inf == 0 && (strict ? r.lo >= rhs : r.lo > rhs)) {
        return false;
    }
    if (r.lo_inf > 1) {
        return true;
    }
    for (const auto& [v, a] : terms) {
        bool inf_j = a > 0 ? !n.has_lo[v] : !n.has_hi[v];
        if (r.lo_inf == 1 && !inf_j) {
            continue;
        }
        Rational others = inf_j ? r.lo : Rational(r.lo - a * (a > 0 ? n.lo[v] : n.hi[v]));
        Rational bound = (rhs - others) / a;
        if (!(a > 0 ? set_hi(n, v, bound) : set_lo(n, v, bound))) {
            return false;
        }
    }
    return true;
}

bool Search::tighten_ge(Node& n, const Terms& terms, const Rational& rhs, bool strict)
{
    Terms neg;
    neg.reserve(terms.size());
    for (const auto& [v, a] : terms) {
        neg.emplace_back(v, Rational(-a));
    }
    return tighten_le(n, neg, Rational(-rhs), strict);
}

bool Search::tighten(Node& n, const Terms& terms, Cmp cmp, const Rational& rhs)
{
    switch (cmp) {
    case Cmp::Le: return tighten_le(n, terms, rhs, false);
    case Cmp::Lt: return tighten_le(n, terms, rhs, true);
    case Cmp::Ge: return tighten_ge(n, terms, rhs, false);
    case Cmp::Gt: return tighten_ge(n, terms, rhs, true);
    case Cmp::Eq: return tighten_le(n, terms, rhs, false) && tighten_ge(n, terms, rhs, false);
    }
    return true;
}

void Search::candidates(const MemC& m, const Node& n, std::vector<std::size_t>& out) const
{
    out.clear();
    Range r = range(m.terms, n);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        if (r.lo_inf == 0 && m.values[i] < r.lo) {
            continue;
        }
        if (r.hi_inf == 0 && m.values[i] > r.hi) {
            continue;
        }
        out.push_back(i);
    }
}

AltState Search::alt_state(const AltC& alt, const Node& n) const
{
    bool entailed = true;
    for (std::size_t i : alt.lins) {
        const LinC& c = lins_[i];
        Range r = range(c.terms, n);
        bool lo_ok = r.lo_inf == 0;
        bool hi_ok = r.hi_inf == 0;
        switch (c.cmp) {
        case Cmp::Le:
            if (lo_ok && r.lo > c.rhs) return AltState::Dead;
            entailed = entailed && hi_ok && r.hi <= c.rhs;
            break;
        case Cmp::Lt:
            if (lo_ok && r.lo >= c.rhs) return AltState::Dead;
            entailed = entailed && hi_ok && r.hi < c.rhs;
            break;
        case Cmp::Ge:
            if (hi_ok && r.hi < c.rhs) return AltState::Dead;
            entailed = entailed && lo_ok && r.lo >= c.rhs;
            break;
        case Cmp::Gt:
            if (hi_ok && r.hi <= c.rhs) return AltState::Dead;
            entailed = entailed && lo_ok && r.lo > c.rhs;
            break;
        case Cmp::Eq:
            if ((lo_ok && r.lo > c.rhs) || (hi_ok && r.hi < c.rhs)) return AltState::Dead;
            entailed = entailed && lo_ok && hi_ok && r.lo == c.rhs && r.hi == c.rhs;
            break;
        }
    }
    std::vector<std::size_t> cands;
    for (std::size_t i : alt.mems) {
        candidates(mems_[i], n, cands);
        if (cands.empty()) {
            return AltState::Dead;
        }
        Range r = range(mems_[i].terms, n);
        entailed = entailed && cands.size() == 1 && r.lo_inf == 0 && r.hi_inf == 0 && r.lo == r.hi;
    }
    return entailed ? AltState::Entailed : AltState::Open;
}

bool Search::propagate(Node& n)
{
    std::vector<std::size_t> cands;
    for (int round = 0; round < 16; ++round) {
        changed_ = false;
        for (std::size_t i = 0; i < lins_.size(); ++i) {
            if (lin_active(n, i) && !tighten(n, lins_[i].terms, lins_[i].cmp, lins_[i].rhs)) {
                return false;
            }
        }
        for (const auto& c : net_eqs_) {
            if (!tighten(n, c.terms, c.cmp, c.rhs)) {
                return false;
            }
        }
        for (std::size_t i = 0; i < relus_.size(); ++i) {
            const ReluC& r = relus_[i];
            if (!set_lo(n, r.out, Rational(0)) || !tighten_ge(n, r.relax, r.bias, false)) {
                return false;
            }
            Range z = range(r.expr, n);
            if (n.phase[i] == 0) {
                if (z.lo_inf == 0 && z.lo + r.bias >= 0) {
                    n.phase[i] = 1;
                    changed_ = true;
                } else if (z.hi_inf == 0 && z.hi + r.bias <= 0) {
                    n.phase[i] = -1;
                    changed_ = true;
                } else if (n.has_lo[r.out] && n.lo[r.out] > 0) {
                    n.phase[i] = 1;
                    changed_ = true;
                }
            }
            if (n.phase[i] == 0) {
                if (z.hi_inf == 0) {
                    Rational top = z.hi + r.bias;
                    if (!set_hi(n, r.out, top > 0 ? top : Rational(0))) {
                        return false;
                    }
                }
            } else if (n.phase[i] > 0) {
                if (!tighten(n, r.relax, Cmp::Eq, r.bias) ||
                    !tighten_ge(n, r.expr, Rational(-r.bias), false)) {
                    return false;
                }
            } else {
                if (!set_hi(n, r.out, Rational(0)) ||
                    !tighten_le(n, r.expr, Rational(-r.bias), false)) {
                    return false;
                }
            }
        }
        for (std::size_t i = 0; i < mems_.size(); ++i) {
            if (!mem_active(n, i)) {
                continue;
            }
            const MemC& m = mems_[i];
            if (n.mem_value[i] < 0) {
                candidates(m, n, cands);
                if (cands.empty()) {
                    return false;
                }
                if (cands.size() == 1) {
                    n.mem_value[i] = static_cast<int>(cands.front());
                    changed_ = true;
                } else {
                    if (!tighten_ge(n, m.terms, m.values[cands.front()], false) ||
                        !tighten_le(n, m.terms, m.values[cands.back()], false)) {
                        return false;
                    }
                    continue;
                }
            }
            if (!tighten(n, m.terms, Cmp::Eq, m.values[n.mem_value[i]])) {
                return false;
            }
        }
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            if (n.group_choice[g] != -1) {
                continue;
            }
            int open = 0;
            int last = -1;
            bool entailed = false;
            for (std::size_t a = 0; a < groups_[g].size(); ++a) {
                AltState s = alt_state(groups_[g][a], n);
                if (s == AltState::Entailed) {
                    entailed = true;
                    break;
                }
                if (s == AltState::Open) {
                    ++open;
                    last = static_cast<int>(a);
                }
            }
            if (entailed) {
                n.group_choice[g] = -2;
                changed_ = true;
            } else if (open == 0) {
                return false;
            } else if (open == 1) {
                n.group_choice[g] = last;
                changed_ = true;
            }
        }
        if (!changed_) {
            break;
        }
    }
    return true;
}

std::optional<RationalVector> Search::check_candidate(RationalVector values) const
{
    q_.complete_assignment(values);
    if (q_.satisfied_by(values)) {
        return values;
    }
    return std::nullopt;
}

std::vector<char> Search::relevant(const Node& n, std::vector<char>& copy_relevant) const
{
    std::vector<char> rel(nvars_, 0);
    std::vector<std::vector<char>> live(groups_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        live[g].assign(groups_[g].size(), 0);
        for (std::size_t a = 0; a < groups_[g].size(); ++a) {
            int choice = n.group_choice[g];
            live[g][a] = choice == static_cast<int>(a) ||
                         (choice == -1 && alt_state(groups_[g][a], n) != AltState::Dead);
        }
    }
    auto counts = [&](int group, int alt) { return group < 0 || live[group][alt]; };
    for (const auto& c : lins_) {
        if (counts(c.group, c.alt)) {
            for (const auto& [v, a] : c.terms) {
                rel[v] = 1;
            }
        }
    }
    for (const auto& c : mems_) {
        if (!c.domain && counts(c.group, c.alt)) {
            for (const auto& [v, a] : c.terms) {
                rel[v] = 1;
            }
        }
    }
    copy_relevant.assign(q_.copies().size(), 0);
    for (VarId v = 0; v < nvars_; ++v) {
        if (rel[v] && var_copy_[v] >= 0) {
            copy_relevant[var_copy_[v]] = 1;
        }
    }
    for (std::size_t c = 0; c < copy_relevant.size(); ++c) {
        if (copy_relevant[c]) {
            for (VarId v : q_.copies()[c].inputs) {
                rel[v] = 1;
            }
        }
    }
    return rel;
}

Rational Search::free_value(const Node& n, VarId v) const
{
    const FeatureDomain& d = *q_.variables()[v].domain;
    if (d.is_finite()) {
        for (const auto& value : d.values()) {
            if ((!n.has_lo[v] || value >= n.lo[v]) && (!n.has_hi[v] || value <= n.hi[v])) {
                return value;
            }
        }
    }
    return n.lo[v];
}

std::optional<RationalVector> Search::try_point(const Node& n) const
{
    RationalVector values(nvars_);
    for (VarId v : state_vars_) {
        values[v] = n.lo[v] == n.hi[v] ? n.lo[v] : free_value(n, v);
    }
    return check_candidate(std::move(values));
}

Search::LpOutcome Search::solve_lp(const Node& n, const std::vector<char>& rel,
                                  std::optional<RationalVector>& witness)
{
    ++stats_.lp_calls;
    ExactLp lp(nvars_);
    for (VarId v = 0; v < nvars_; ++v) {
        if (n.has_lo[v]) {
            lp.tighten_lower(v, n.lo[v]);
        }
        if (n.has_hi[v]) {
            lp.tighten_upper(v, n.hi[v]);
        }
    }
    auto add = [&](const Terms& terms, Cmp cmp, const Rational& rhs) {
        std::optional<DeltaRational> lo;
        std::optional<DeltaRational> hi;
        switch (cmp) {
        case Cmp::Le: hi = DeltaRational(rhs); break;
        case Cmp::Lt: hi = DeltaRational(rhs, -1); break;
        case Cmp::Ge: lo = DeltaRational(rhs); break;
        case Cmp::Gt: lo = DeltaRational(rhs, 1); break;
        case Cmp::Eq: lo = hi = DeltaRational(rhs); break;
        }
        std::vector<std::pair<std::size_t, Rational>> coeffs;
        for (const auto& [v, a] : terms) {
            coeffs.emplace_back(v, a);
        }
        lp.add_row(std::move(coeffs), std::move(lo), std::move(hi));
    };
    for (std::size_t i = 0; i < lins_.size(); ++i) {
        if (lin_active(n, i)) {
            add(lins_[i].terms, lins_[i].cmp, lins_[i].rhs);
        }
    }
    for (std::size_t i = 0; i < mems_.size(); ++i) {
        if (mem_active(n, i) && n.mem_value[i] >= 0) {
            add(mems_[i].terms, Cmp::Eq, mems_[i].values[n.mem_value[i]]);
        }
    }
    for (const auto& c : net_eqs_) {
        add(c.terms, c.cmp, c.rhs);
    }
    for (std::size_t i = 0; i < relus_.size(); ++i) {
        const ReluC& r = relus_[i];
        if (n.phase[i] > 0) {
            add(r.relax, Cmp::Eq, r.bias);
            add(r.expr, Cmp::Ge, -r.bias);
        } else if (n.phase[i] < 0) {
            lp.tighten_upper(r.out, Rational(0));
            add(r.expr, Cmp::Le, -r.bias);
        } else {
            lp.tighten_lower(r.out, Rational(0));
            add(r.relax, Cmp::Ge, r.bias);
            Range z = range(r.expr, n);
            if (z.lo_inf == 0 && z.hi_inf == 0) {
                Rational l = z.lo + r.bias;
                Rational u = z.hi + r.bias;
                if (l < 0 && u > 0) {
                    // (u - l) * out - u * expr <= u * bias - u * l
                    Terms t;
                    t.emplace_back(r.out, Rational(u - l));
                    for (const auto& [v, w] : r.expr) {
                        t.emplace_back(v, Rational(-u * w));
                    }
                    add(t, Cmp::Le, Rational(u * r.bias - u * l));
                }
            }
        }
    }
    if (!lp.check()) {
        return LpOutcome::Infeasible;
    }
    RationalVector model = lp.model();
    RationalVector values(nvars_);
    for (VarId v : state_vars_) {
        values[v] = rel[v] ? model[v] : free_value(n, v);
    }
    witness = check_candidate(std::move(values));
    return witness ? LpOutcome::Witness : LpOutcome::Feasible;
}

void Search::tick()
{
    ++stats_.nodes;
    if (opts_.max_splits && stats_.splits() > *opts_.max_splits) {
        throw TimeoutSignal{};
    }
    if (has_deadline_ && (stats_.nodes & 15) == 0 && std::chrono::steady_clock::now() > deadline_) {
        throw TimeoutSignal{};
    }
}

std::optional<RationalVector> Search::dfs(Node& n)
{
    tick();
    if (!propagate(n)) {
        return std::nullopt;
    }
    std::vector<char> copy_rel;
    const std::vector<char> rel = relevant(n, copy_rel);
    bool all_fixed = std::all_of(state_vars_.begin(), state_vars_.end(), [&](VarId v) {
        return !rel[v] || (n.has_lo[v] && n.has_hi[v] && n.lo[v] == n.hi[v]);
    });
    if (all_fixed) {
        return try_point(n);
    }

    // Disjunctions first: a chosen alternative usually leaves most state
    // variables irrelevant.
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (n.group_choice[g] != -1) {
            continue;
        }
        for (std::size_t a = 0; a < groups_[g].size(); ++a) {
            if (alt_state(groups_[g][a], n) == AltState::Dead) {
                continue;
            }
            ++stats_.disjunction_branches;
            Node child = n;
            child.group_choice[g] = static_cast<int>(a);
            if (auto w = dfs(child)) {
                return w;
            }
        }
        return std::nullopt;
    }

    // Membership atoms, fewest remaining values first.
    std::vector<std::size_t> cands;
    std::size_t best = mems_.size();
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < mems_.size(); ++i) {
        if (!mem_active(n, i) || n.mem_value[i] >= 0 ||
            (mems_[i].domain && !rel[mems_[i].terms.front().first])) {
            continue;
        }
        candidates(mems_[i], n, cands);
        if (best == mems_.size() || cands.size() < best_count) {
            best = i;
            best_count = cands.size();
        }
    }
    if (best < mems_.size()) {
        candidates(mems_[best], n, cands);
        for (std::size_t c : cands) {
            ++stats_.membership_branches;
            Node child = n;
            child.mem_value[best] = static_cast<int>(c);
            if (auto w = dfs(child)) {
                return w;
            }
        }
        return std::nullopt;
    }

    std::optional<RationalVector> witness;
    LpOutcome lp = solve_lp(n, rel, witness);
    if (lp == LpOutcome::Infeasible) {
        return std::nullopt;
    }
    if (lp == LpOutcome::Witness) {
        return witness;
    }
    std::size_t idx = relus_.size();
    for (std::size_t i = 0; i < relus_.size(); ++i) {
        if (n.phase[i] == 0 && copy_rel[relu_copy_[i]]) {
            idx = i;
            break;
        }
    }
    if (idx == relus_.size()) {
        throw std::logic_error("verifier: feasible leaf LP produced a witness that fails the exact re-check");
    }
    for (signed char phase : {1, -1}) {
        ++stats_.relu_splits;
        Node child = n;
        child.phase[idx] = phase;
        if (auto w = dfs(child)) {
            return w;
        }
    }
    return std::nullopt;
}

bool Search::finite_fast_path_applies(std::vector<std::vector<Rational>>& candidates) const
{
    candidates.clear();
    if (opts_.enumeration_threshold == 0) {
        return false;
    }
    const auto& vars = q_.variables();
    Rational product = 1;
    for (VarId v : state_vars_) {
        const FeatureDomain& d = *vars[v].domain;
        if (!d.is_finite()) {
            return false;
        }
        std::vector<Rational> keep;
        for (const auto& value : d.values()) {
            bool ok = true;
            auto value_of = [&](VarId) -> const Rational& { return value; };
            for (const auto& atom : q_.atoms()) {
                const auto& terms = std::visit(
                    [](const auto& a) -> const std::vector<Term<VarId>>& { return a.terms; }, atom);
                if (terms.size() == 1 && terms.front().var == v && !holds(atom, value_of)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                keep.push_back(value);
            }
        }
        product *= static_cast<unsigned long>(keep.size());
        candidates.push_back(std::move(keep));
        if (product > Rational(static_cast<unsigned long>(opts_.enumeration_threshold))) {
            return false;
        }
    }
    return true;
}

std::optional<RationalVector> Search::enumerate(const std::vector<std::vector<Rational>>& candidates)
{
    std::size_t total = 1;
    for (const auto& c : candidates) {
        total *= c.size();
    }
    stats_.enumerated = true;
    if (total == 0) {
        return std::nullopt;
    }
    auto point = [&](std::size_t index) {
        RationalVector values(nvars_);
        for (std::size_t s = state_vars_.size(); s-- > 0;) {
            const auto& c = candidates[s];
            values[state_vars_[s]] = c[index % c.size()];
            index /= c.size();
        }
        return values;
    };
    detail::FloatShadow shadow(q_);
    auto accept = [&](std::size_t index) {
        RationalVector values = point(index);
        std::vector<double> scratch;
        return detail::accept_point(q_, shadow, values, scratch);
    };
    std::size_t found = kernels::find_first(opts_.exec, total, accept);
    stats_.enumerated_points = found == total ? total : found + 1;
    if (found == total) {
        return std::nullopt;
    }
    RationalVector values = point(found);
    q_.complete_assignment(values);
    return values;
}

std::optional<RationalVector> Search::run()
{
    if (opts_.time_limit) {
        has_deadline_ = true;
        deadline_ = std::chrono::steady_clock::now() + *opts_.time_limit;
    }
    Node root = root_;
    return dfs(root);
}

}  // namespace

SolveResult solve(const Query& query, const SolverOptions& options)
{
    query.validate();
    auto start = std::chrono::steady_clock::now();
    SolveResult result;
    Search search(query, options, result.stats);
    std::optional<RationalVector> witness;
    try {
        std::vector<std::vector<Rational>> candidates;
        std::optional<std::vector<std::vector<Rational>>> finite;
        if (search.finite_fast_path_applies(candidates)) {
            witness = search.enumerate(candidates);
        } else if (options.enumeration_threshold > 0 &&
                   (finite = detail::finite_candidates(query))) {
            detail::Budget budget(options);
            witness = detail::backtrack(query, *finite, options, budget, result.stats);
        } else {
            witness = search.run();
        }
        result.verdict.status = witness ? Status::Sat : Status::Unsat;
    } catch (const TimeoutSignal&) {
        result.verdict.status = Status::Timeout;
    }
    if (witness) {
        std::string why;
        if (!query.satisfied_by(*witness, &why)) {
            throw std::logic_error("verifier: SAT witness failed exact re-check: " + why);
        }
        result.verdict.witness = std::move(witness);
    }
    result.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace kstep

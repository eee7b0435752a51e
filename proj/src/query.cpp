#include "kstep/query.hpp"

#include <sstream>

namespace kstep {

VarId Query::add_state_var(std::string name, FeatureDomain domain)
{
    vars_.push_back({std::move(name), VarRole::State, std::move(domain)});
    return static_cast<VarId>(vars_.size() - 1);
}

const NetworkCopy& Query::add_network_copy(std::shared_ptr<const Network> net,
                                           std::span<const VarId> inputs, std::size_t step)
{
    if (!net) {
        throw QueryError("network copy without a network");
    }
    if (inputs.size() != net->input_width()) {
        throw QueryError("network copy wired to " + std::to_string(inputs.size()) +
                         " inputs, network expects " + std::to_string(net->input_width()));
    }
    NetworkCopy copy;
    copy.inputs.assign(inputs.begin(), inputs.end());
    copy.step = step;
    const auto& layers = net->layers();
    const std::string prefix = "n" + std::to_string(copies_.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        bool last = l + 1 == layers.size();
        std::vector<VarId> unit_vars;
        for (std::size_t u = 0; u < layers[l].bias.size(); ++u) {
            std::string name = prefix + (last ? ".y" + std::to_string(u)
                                              : ".h" + std::to_string(l) + "_" + std::to_string(u));
            vars_.push_back({std::move(name), last ? VarRole::Output : VarRole::Hidden, {}});
            unit_vars.push_back(static_cast<VarId>(vars_.size() - 1));
        }
        copy.units.push_back(std::move(unit_vars));
    }
    copy.net = std::move(net);
    copies_.push_back(std::move(copy));
    return copies_.back();
}

void Query::validate() const
{
    auto check_var = [&](VarId v, const std::string& where) {
        if (v >= vars_.size()) {
            throw QueryError(where + ": undeclared variable " + std::to_string(v));
        }
    };
    auto check_atom = [&](const QueryAtom& atom, const std::string& where) {
        std::visit(
            [&](const auto& a) {
                for (const auto& t : a.terms) {
                    check_var(t.var, where);
                }
            },
            atom);
        if (const auto* mem = std::get_if<MembershipAtom<VarId>>(&atom)) {
            if (mem->values.empty()) {
                throw QueryError(where + ": empty membership set");
            }
        }
    };
    for (const auto& a : atoms_) {
        check_atom(a, "atom");
    }
    for (const auto& g : groups_) {
        if (g.alternatives.empty()) {
            throw QueryError("disjunction group '" + g.label + "' has no alternatives");
        }
        for (const auto& alt : g.alternatives) {
            for (const auto& a : alt) {
                check_atom(a, "group " + g.label);
            }
        }
    }
    for (const auto& c : copies_) {
        if (c.inputs.size() != c.net->input_width()) {
            throw QueryError("network copy input block width differs from m");
        }
        for (VarId v : c.inputs) {
            check_var(v, "network input");
            if (vars_[v].role != VarRole::State) {
                throw QueryError("network copy input must be a state variable");
            }
        }
    }
    for (const auto& v : vars_) {
        if (v.role == VarRole::State && !v.domain) {
            throw QueryError("state variable " + v.name + " has no domain");
        }
    }
}

void Query::complete_assignment(std::span<Rational> values) const
{
    RationalVector prev;
    for (const auto& copy : copies_) {
        prev.clear();
        for (VarId v : copy.inputs) {
            prev.push_back(values[v]);
        }
        const auto& layers = copy.net->layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const Layer& layer = layers[l];
            RationalVector cur(layer.bias.begin(), layer.bias.end());
            for (std::size_t u = 0; u < cur.size(); ++u) {
                const auto& row = layer.weights[u];
                for (std::size_t j = 0; j < row.size(); ++j) {
                    if (row[j] != 0 && prev[j] != 0) {
                        cur[u] += row[j] * prev[j];
                    }
                }
                if (layer.relu && cur[u] < 0) {
                    cur[u] = 0;
                }
                values[copy.units[l][u]] = cur[u];
            }
            prev.swap(cur);
        }
    }
}

bool Query::satisfied_by(std::span<const Rational> values, std::string* why) const
{
    auto fail = [&](std::string msg) {
        if (why) {
            *why = std::move(msg);
        }
        return false;
    };
    if (values.size() != vars_.size()) {
        return fail("assignment has the wrong length");
    }
    for (std::size_t v = 0; v < vars_.size(); ++v) {
        if (vars_[v].domain && !vars_[v].domain->contains(values[v])) {
            return fail("variable " + vars_[v].name + " outside its domain");
        }
    }
    RationalVector expected(values.begin(), values.end());
    complete_assignment(expected);
    for (const auto& copy : copies_) {
        for (const auto& layer_vars : copy.units) {
            for (VarId v : layer_vars) {
                if (expected[v] != values[v]) {
                    return fail("network variable " + vars_[v].name + " is " +
                                to_string(values[v]) + ", exact semantics give " +
                                to_string(expected[v]));
                }
            }
        }
    }
    auto value_of = [&](VarId v) -> const Rational& { return values[v]; };
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (!holds(atoms_[i], value_of)) {
            return fail("atom " + std::to_string(i) + " violated");
        }
    }
    for (const auto& g : groups_) {
        bool any = false;
        for (const auto& alt : g.alternatives) {
            bool all = true;
            for (const auto& a : alt) {
                if (!holds(a, value_of)) {
                    all = false;
                    break;
                }
            }
            if (all) {
                any = true;
                break;
            }
        }
        if (!any) {
            return fail("disjunction group '" + g.label + "' unsatisfied");
        }
    }
    return true;
}

namespace {

void write_terms(std::ostream& out, const std::vector<Term<VarId>>& terms,
                 const std::vector<QueryVariable>& vars)
{
    bool first = true;
    for (const auto& t : terms) {
        out << (first ? "" : " + ") << to_string(t.coeff) << "*" << vars[t.var].name;
        first = false;
    }
    if (first) {
        out << "0";
    }
}

void write_atom(std::ostream& out, const QueryAtom& atom, const std::vector<QueryVariable>& vars)
{
    if (const auto* lin = std::get_if<LinearAtom<VarId>>(&atom)) {
        write_terms(out, lin->terms, vars);
        out << " " << to_string(lin->cmp) << " " << to_string(lin->rhs);
    } else {
        const auto& mem = std::get<MembershipAtom<VarId>>(atom);
        write_terms(out, mem.terms, vars);
        out << " in {";
        for (std::size_t i = 0; i < mem.values.size(); ++i) {
            out << (i ? ", " : "") << to_string(mem.values[i]);
        }
        out << "}";
    }
    if (!atom_label(atom).empty()) {
        out << "  # " << atom_label(atom);
    }
}

}  // namespace

std::string Query::dump() const
{
    std::ostringstream out;
    for (const auto& v : vars_) {
        if (v.role != VarRole::State) {
            continue;
        }
        out << "var " << v.name << " in ";
        if (v.domain->is_finite()) {
            out << "{";
            for (std::size_t i = 0; i < v.domain->values().size(); ++i) {
                out << (i ? ", " : "") << to_string(v.domain->values()[i]);
            }
            out << "}\n";
        } else {
            out << "[" << to_string(v.domain->lower()) << ", " << to_string(v.domain->upper())
                << "]\n";
        }
    }
    for (std::size_t c = 0; c < copies_.size(); ++c) {
        out << "network n" << c << " step " << copies_[c].step << " inputs";
        for (VarId v : copies_[c].inputs) {
            out << " " << vars_[v].name;
        }
        out << "\n";
    }
    for (const auto& a : atoms_) {
        write_atom(out, a, vars_);
        out << "\n";
    }
    for (const auto& g : groups_) {
        out << "any-of " << g.label << "\n";
        for (const auto& alt : g.alternatives) {
            out << "  |";
            for (std::size_t i = 0; i < alt.size(); ++i) {
                out << (i ? " and " : " ");
                write_atom(out, alt[i], vars_);
            }
            out << "\n";
        }
    }
    return out.str();
}

QueryAtom pin(VarId var, Rational value, std::string label)
{
    return LinearAtom<VarId>{{{var, Rational(1)}}, Cmp::Eq, std::move(value), std::move(label)};
}

QueryAtom linear(std::vector<Term<VarId>> terms, Cmp cmp, Rational rhs, std::string label)
{
    return LinearAtom<VarId>{std::move(terms), cmp, std::move(rhs), std::move(label)};
}

}  // namespace kstep

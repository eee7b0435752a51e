#pragma once

#include "kstep/model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kstep {

using VarId = std::uint32_t;
using QueryAtom = Atom<VarId>;
using Conjunction = std::vector<QueryAtom>;

enum class VarRole { State, Hidden, Output };

struct QueryVariable {
    std::string name;
    VarRole role = VarRole::State;
    std::optional<FeatureDomain> domain;  // state variables only
};

/// One copy of a network wired to a block of state variables. `units[l]` holds
/// the variables of layer l; the last entry are the outputs.
struct NetworkCopy {
    std::shared_ptr<const Network> net;
    std::vector<VarId> inputs;
    std::vector<std::vector<VarId>> units;
    std::size_t step = 0;

    const std::vector<VarId>& outputs() const { return units.back(); }
};

/// At least one alternative (a conjunction of atoms) must hold.
struct DisjunctionGroup {
    std::vector<Conjunction> alternatives;
    std::string label;
};

class QueryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Feasibility question: is there an assignment to every variable that puts
/// state variables inside their domains, reproduces every network copy
/// exactly, and satisfies all atoms and disjunction groups?
class Query {
public:
    VarId add_state_var(std::string name, FeatureDomain domain);
    const NetworkCopy& add_network_copy(std::shared_ptr<const Network> net,
                                        std::span<const VarId> inputs, std::size_t step);
    void add_atom(QueryAtom atom) { atoms_.push_back(std::move(atom)); }
    void add_group(DisjunctionGroup group) { groups_.push_back(std::move(group)); }

    std::size_t num_vars() const { return vars_.size(); }
    const std::vector<QueryVariable>& variables() const { return vars_; }
    const std::vector<NetworkCopy>& copies() const { return copies_; }
    const std::vector<QueryAtom>& atoms() const { return atoms_; }
    const std::vector<DisjunctionGroup>& groups() const { return groups_; }
    std::size_t network_copy_count() const { return copies_.size(); }

    /// Throws QueryError on references to undeclared variables or bad wiring.
    void validate() const;

    /// Fills hidden and output variables from the state variables in `values`.
    void complete_assignment(std::span<Rational> values) const;

    /// Exact check of a full assignment; on failure `why` names the culprit.
    bool satisfied_by(std::span<const Rational> values, std::string* why = nullptr) const;

    /// Textual dump, one atom per line.
    std::string dump() const;

private:
    std::vector<QueryVariable> vars_;
    std::vector<NetworkCopy> copies_;
    std::vector<QueryAtom> atoms_;
    std::vector<DisjunctionGroup> groups_;
};

QueryAtom pin(VarId var, Rational value, std::string label = {});
QueryAtom linear(std::vector<Term<VarId>> terms, Cmp cmp, Rational rhs, std::string label = {});

}  // namespace kstep

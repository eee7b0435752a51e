#pragma once

#include "kstep/mhs.hpp"
#include "kstep/queries.hpp"
#include "kstep/verifier.hpp"

#include <mutex>

namespace kstep {

enum class Target { Minimal, Minimum };
enum class Guarantee { Minimal, Minimum, None };

std::string_view to_string(Target t);
std::string_view to_string(Guarantee g);

struct ExplainOptions {
    QueryOptions query;
    SolverOptions solver;  // time_limit applies to every dispatched query
    kernels::Exec exec = kernels::Exec::Parallel;
};

/// Raised when a dispatched query exhausts its budget.
class ExplainTimeout : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when the execution cannot be explained at all, e.g. a step whose
/// decision is tied under the weak rival convention.
class ExplainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct QueryRecord {
    std::string kind;  // single | multi | prefix | window | contrastive_multi
    std::size_t step = 0;
    std::size_t copies = 0;
    Status status = Status::Unsat;
    SolveStats stats;
};

/// Thread-safe log of every query a method dispatches.
class QueryLog {
public:
    QueryLog() = default;
    QueryLog(const QueryLog& other) : records_(other.records()) {}
    QueryLog& operator=(const QueryLog& other)
    {
        if (this != &other) {
            auto copy = other.records();
            std::lock_guard lock(mutex_);
            records_ = std::move(copy);
        }
        return *this;
    }

    void add(QueryRecord r)
    {
        std::lock_guard lock(mutex_);
        records_.push_back(std::move(r));
    }
    std::vector<QueryRecord> records() const
    {
        std::lock_guard lock(mutex_);
        return records_;
    }
    std::size_t size() const
    {
        std::lock_guard lock(mutex_);
        return records_.size();
    }

private:
    mutable std::mutex mutex_;
    std::vector<QueryRecord> records_;
};

/// Minimal contrastive masks; no member is a stepwise superset of another.
struct CxpCatalog {
    std::vector<StepMask> members;

    /// Adds c unless a member is a subset of it; drops members that are
    /// supersets of c. Returns whether c was added.
    bool add(const StepMask& c);
    bool has_subset_of(const StepMask& c) const;
    std::vector<ElementSet> family(std::size_t m) const;
};

struct ExplainResult {
    std::string method;
    Target target = Target::Minimal;
    StepMask mask;
    Guarantee guarantee = Guarantee::None;
    QueryLog log;
    double seconds = 0;
    std::size_t repair_rounds = 0;       // method4 only
    std::optional<CxpCatalog> catalog;   // method4 only

    std::size_t size() const { return mask.size(); }
    std::size_t query_count() const { return log.size(); }
    SolveStats totals() const;
};

/// (step, feature) <-> step * m + feature
ElementSet to_elements(const StepMask& mask, std::size_t m);
StepMask to_mask(const ElementSet& elements, std::size_t k, std::size_t m, MaskRole role);

/// Throws ExplainError unless exec is a valid execution whose full mask is an
/// explanation under the configured rival convention.
void require_explainable(const ReactiveSystem& sys, const Network& net, const Execution& exec,
                         RivalMode mode);

// Single-step explanations -------------------------------------------------

FeatureSet greedy_minimal_single(std::shared_ptr<const Network> net,
                                 const std::vector<FeatureDomain>& domains,
                                 std::span<const Rational> v, Action c,
                                 const ExplainOptions& opts = {}, QueryLog* log = nullptr);

FeatureSet minimum_single(std::shared_ptr<const Network> net,
                          const std::vector<FeatureDomain>& domains, std::span<const Rational> v,
                          Action c, const ExplainOptions& opts = {}, QueryLog* log = nullptr);

/// All minimal contrastive sets of step i in isolation, ascending by size.
std::vector<FeatureSet> enumerate_cxps_single(const ReactiveSystem& sys,
                                              std::shared_ptr<const Network> net,
                                              const Execution& exec, std::size_t i,
                                              const ExplainOptions& opts = {},
                                              QueryLog* log = nullptr);

// Multi-step methods -------------------------------------------------------

ExplainResult method1(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                      const Execution& exec, Target target, const ExplainOptions& opts = {});

ExplainResult method2(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                      const Execution& exec, Target target, const ExplainOptions& opts = {});

ExplainResult method3_minimal(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                              const Execution& exec, const ExplainOptions& opts = {});

ExplainResult method3_minimum(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                              const Execution& exec, const ExplainOptions& opts = {});

/// Reverse incremental enumeration. `window` frees features on steps j..i
/// only and is contrastive over that window. Returns full-length contrastive
/// masks extending it backwards; empty when the window is spurious.
std::vector<StepMask> rie(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                          const Execution& exec, const StepMask& window, std::size_t i,
                          std::size_t j, const CxpCatalog& known, const ExplainOptions& opts = {},
                          QueryLog* log = nullptr);

ExplainResult method4(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                      const Execution& exec, const ExplainOptions& opts = {});

/// Hitting-set test against a catalog when one is given, otherwise a direct
/// multi-step explanation query.
bool validate_candidate(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                        const Execution& exec, const StepMask& mask,
                        const CxpCatalog* catalog = nullptr, const ExplainOptions& opts = {});

/// Direct multi-step checks used by tests and the CLI.
bool is_explanation(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                    const Execution& exec, const StepMask& E, const ExplainOptions& opts = {});
bool is_contrastive(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                    const Execution& exec, const StepMask& C, const ExplainOptions& opts = {});

/// Every single (step, feature) removal turns E into a non-explanation.
bool is_minimal_explanation(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                            const Execution& exec, const StepMask& E,
                            const ExplainOptions& opts = {});

}  // namespace kstep

#ifndef BAGPLAN_ABSTRACTION_HPP
#define BAGPLAN_ABSTRACTION_HPP

#include "bagplan/bags.hpp"
#include "bagplan/ground.hpp"
#include "bagplan/mutex.hpp"

#include <string>
#include <vector>

namespace bagplan {

class NotProperError : public Error {
public:
    using Error::Error;
};
class NoBaggableTypesError : public Error {
public:
    using Error::Error;
};
class InitViolationError : public Error {
public:
    using Error::Error;
};
class GoalImpossibleError : public Error {
public:
    using Error::Error;
};

// Counter over one bag: tuples of subtype members satisfying the extended
// AVS conjunction. One per numeric variable.
struct CounterFormula {
    std::vector<int> types;                 // sorted
    std::vector<std::string> subtype_names; // per type
    std::vector<std::vector<int>> members;  // per type, object ids
    std::vector<TVAtom> atoms;
};

// Concretization of one abstract action: choose a tuple satisfying the tuple
// variables' subtype memberships and conjunctions plus the instantiated
// precondition, then run the schema on it.
struct ConcretizationRule {
    int schema = -1;
    std::vector<int> args;      // per schema param: object id, or -1 (baggable)
    std::vector<int> vars;      // numeric variable ids of the tuple
    std::vector<TVAtom> pre_atoms;
};

struct RefinementMapping {
    std::vector<CounterFormula> counters;   // per numeric variable
    std::vector<GroundAtom> boolean_atoms;  // per boolean variable
    std::vector<ConcretizationRule> rules;  // per abstract action
};

struct NumericVariable {
    int id = -1;
    int eavs = -1;                           // index into BagStructure::eavs
    std::vector<std::pair<int, int>> sts;    // (type, subtype index), sorted
    std::string name;
    std::vector<std::string> subtype_names;  // descriptive, mirrored in dumps
    std::vector<std::string> eavs_atoms;
};

struct BooleanVariable {
    int id = -1;
    GroundAtom atom;
    std::string name;
};

struct QLiteral {
    bool numeric = false;
    int var = -1;
    bool positive = false; // numeric: >0 vs =0; boolean: true vs false

    bool operator==(const QLiteral &) const = default;
    auto operator<=>(const QLiteral &) const = default;
};

struct AbstractAction {
    int id = -1;
    int schema = -1;
    std::vector<int> args;  // per schema param: object id or -1 for baggable
    std::vector<int> vars;  // suitable tuple, sorted variable ids
    std::vector<QLiteral> pre;
    std::vector<std::pair<int, bool>> bool_eff;
    std::vector<int> decs;
    std::vector<int> incs;
    std::string name;
};

struct BqnpProblem {
    std::vector<NumericVariable> numerics;
    std::vector<BooleanVariable> booleans;
    std::vector<QLiteral> init; // total assignment
    std::vector<QLiteral> goal;
    std::vector<AbstractAction> ops;
};

struct AbstractionStats {
    int baggable_types = 0;
    int objects_baggable = 0;
    int objects_nonbaggable = 0;
    int ground_atoms = 0;
    int facts = 0;
    int ground_actions = 0;
    int subtypes = 0;
    int numeric_vars = 0;
    int boolean_vars = 0;
    int ops = 0;
    double abs_seconds = 0.0;
};

struct AbstractionResult {
    GroundTask ground;
    MutexInvariant invariant;
    BagStructure bags;
    BqnpProblem problem;
    RefinementMapping mapping;
    AbstractionStats stats;
};

struct AbstractOptions {
    bool force = false;       // continue on a non-proper domain
    bool prune_facts = true;  // static-atom optimization
};

std::vector<NumericVariable> build_numeric_variables(const TypedTask &task,
                                                     const BagStructure &bags);

std::vector<BooleanVariable> build_boolean_variables(const TypedTask &task,
                                                     const GroundTask &ground,
                                                     const BagStructure &bags);

RefinementMapping build_mapping(const TypedTask &task, const BagStructure &bags,
                                const BqnpProblem &problem);

std::vector<QLiteral> abstract_init(const GroundTask &ground, const BqnpProblem &problem,
                                    const RefinementMapping &mapping);

std::vector<QLiteral> abstract_goal(const TypedTask &task, const BagStructure &bags,
                                    const BqnpProblem &problem);

std::vector<AbstractAction> build_abstract_actions(const TypedTask &task,
                                                   const MutexInvariant &invariant,
                                                   const BagStructure &bags,
                                                   const BqnpProblem &problem);

// Static-atom optimization: freezes static booleans, removes numeric
// variables whose conjunction can never hold given the static truths, and
// drops or simplifies the affected abstract actions.
void prune_facts(BqnpProblem &problem, RefinementMapping &mapping, const GroundTask &ground);

int eval_counter(const CounterFormula &formula, const Bitset &state, const GroundTask &ground);

// True if some tuple satisfies the static atoms of the formula in the
// initial state (non-static atoms are ignored).
bool counter_statically_possible(const CounterFormula &formula, const Bitset &init,
                                 const GroundTask &ground);

// Full pipeline: mutex inference and verification, init check, bag analysis,
// proper check, variable/init/goal/action construction, fact pruning.
AbstractionResult abstract_task(const TypedTask &task, const AbstractOptions &options = {});

std::string qliteral_to_string(const BqnpProblem &problem, const QLiteral &lit);

} // namespace bagplan

#endif

#ifndef BAGPLAN_MUTEX_HPP
#define BAGPLAN_MUTEX_HPP

#include "bagplan/ground.hpp"
#include "bagplan/task.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bagplan {

// A predicate group for a single type t: every member predicate has exactly
// one argument position of type t. If the group is a mutex group, every
// object of t satisfies exactly one member atom in every reachable state.
struct PredicateGroup {
    int type = -1;
    std::vector<int> predicates;  // sorted by declaration order
    std::vector<int> t_position;  // position of the t argument, per member
    bool from_init = false;       // synthesized from the initial state

    int member_slot(int predicate) const {
        for (std::size_t i = 0; i < predicates.size(); i++)
            if (predicates[i] == predicate)
                return static_cast<int>(i);
        return -1;
    }
};

struct MutexCounterexample {
    int schema = -1;
    int type = -1;
    int group_index = -1;
    std::string variable;
    std::string reason;
};

struct InitViolation {
    int object = -1;
    int type = -1;
    int group_index = -1;
    int count = 0;
};

struct MutexInvariant {
    // groups_per_type[t]: the set Π^t; empty for types without groups.
    std::vector<std::vector<PredicateGroup>> groups_per_type;
    // Predicates of a single type not covered by any group; the type cannot
    // be baggable but the run continues.
    std::vector<std::pair<int, int>> ungrouped; // (type, predicate)
    bool verified = false;

    const PredicateGroup *group_of(int type, int predicate) const {
        for (const auto &g : groups_per_type[type])
            if (g.member_slot(predicate) >= 0)
                return &g;
        return nullptr;
    }
};

// Types with no double occurrence in any predicate or action signature.
std::set<int> single_types(const TypedTask &task);

// Candidate groups per single type: an effect-balance analysis over action
// schemas, then initial-state grouping for predicates no effect touches.
MutexInvariant infer_mutex_groups(const TypedTask &task);

// Schematic per-schema check that every group's count-1 property is
// preserved by every action. Sound but syntactic: deletes must be
// precondition-guaranteed and balance adds one-for-one per t-variable.
std::optional<MutexCounterexample> verify_mutex_invariant(const TypedTask &task,
                                                          MutexInvariant &invariant);

// Drops candidate groups that fail verification and marks the invariant
// verified; dropped groups' predicates are reported as ungrouped.
void verify_and_filter(const TypedTask &task, MutexInvariant &invariant);

std::vector<InitViolation> check_init(const TypedTask &task, const MutexInvariant &invariant);

std::string describe(const TypedTask &task, const PredicateGroup &group);

} // namespace bagplan

#endif

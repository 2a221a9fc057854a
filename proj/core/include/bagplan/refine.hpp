#ifndef BAGPLAN_REFINE_HPP
#define BAGPLAN_REFINE_HPP

#include "bagplan/abstraction.hpp"
#include "bagplan/bqnp.hpp"

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bagplan {

class RefinementError : public Error {
public:
    using Error::Error;
};
class FamilyConstraintError : public Error {
public:
    using Error::Error;
};

// One rule of the refined program: when the low-level state's qualitative
// image matches the guard, choose any tuple satisfying the rule's selection
// formula and execute the schema on it.
struct GuardedRule {
    QState guard;
    int op = -1; // abstract action / rule index in the mapping
};

struct GuardedProgram {
    std::vector<GuardedRule> rules;

    const GuardedRule *match(const QState &q) const {
        for (const auto &r : rules)
            if (r.guard == q)
                return &r;
        return nullptr;
    }
};

GuardedProgram refine(const Policy &policy, const BqnpProblem &problem);

// Qualitative image of a ground state through the refinement mapping.
QState qstate_of(const Bitset &state, const RefinementMapping &mapping, const GroundTask &ground);

// All concrete counter values of a ground state.
std::vector<int> counter_values(const Bitset &state, const RefinementMapping &mapping,
                                const GroundTask &ground);

// Tuples satisfying a rule's selection formula (subtype memberships, the
// tuple variables' conjunctions, and the instantiated precondition). Each
// tuple lists the chosen object per type, sorted by type id.
std::vector<std::vector<std::pair<int, int>>> rule_tuples(const ConcretizationRule &rule,
                                                          const RefinementMapping &mapping,
                                                          const Bitset &state,
                                                          const GroundTask &ground);

// Resolves a chosen tuple to the ground action of the rule's schema.
int rule_ground_action(const ConcretizationRule &rule,
                       const std::vector<std::pair<int, int>> &tuple, const GroundTask &ground);

enum class ExecVerdict { Goal, Stuck, Limit, NoTuple };

struct ExecResult {
    ExecVerdict verdict = ExecVerdict::Stuck;
    std::vector<int> plan; // ground action indices
    Bitset final_state;
};

struct TupleChooser {
    // first | random(seed); exhaustive exploration has its own entry point.
    static TupleChooser first() { return TupleChooser{}; }
    static TupleChooser random(uint64_t seed) {
        TupleChooser c;
        c.rng.emplace(seed);
        return c;
    }
    std::optional<std::mt19937_64> rng;

    std::size_t pick(std::size_t n) {
        if (!rng || n <= 1)
            return 0;
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(*rng);
    }
};

// Runs the guarded program on a ground instance. Counters are evaluated by
// direct enumeration below the tuple-space threshold and maintained
// incrementally above it; the two paths agree by construction and by test.
ExecResult execute(const GuardedProgram &program, const RefinementMapping &mapping,
                   const GroundTask &ground, TupleChooser chooser = TupleChooser::first(),
                   long step_limit = 1000000, long direct_threshold = 10000);

// Exhaustively explores every tuple choice at every step; returns true when
// every branch reaches the goal within the state budget.
bool execute_all_branches(const GuardedProgram &program, const RefinementMapping &mapping,
                          const GroundTask &ground, long state_budget = 100000,
                          std::string *why = nullptr);

// Replays a ground plan under STRIPS semantics; reports the first
// inapplicable step index, or -1 with `true` when the goal holds at the end.
struct ValidationResult {
    bool valid = false;
    int failed_step = -1;
    std::string detail;
};
ValidationResult validate_plan(const GroundTask &ground, const std::vector<int> &plan);

// Family generation: clone the base task resizing each subtype to a target
// cardinality, replicating each subtype's initial attribute pattern and goal
// signature onto fresh objects.
struct FamilySpec {
    std::map<std::string, int> cardinalities; // subtype name -> size
};

TypedTask generate_family(const TypedTask &base, const BagStructure &bags,
                          const FamilySpec &spec);

// Re-targets the base instance's refinement mapping at a family member:
// subtype member lists are recomputed by goal-signature identity (possibly
// empty), frozen objects are resolved by name. Variable and rule structure
// is unchanged, so one guarded program drives every member.
RefinementMapping retarget_mapping(const RefinementMapping &mapping, const TypedTask &base,
                                   const TypedTask &member);

} // namespace bagplan

#endif

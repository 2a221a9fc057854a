#ifndef BAGPLAN_BAGS_HPP
#define BAGPLAN_BAGS_HPP

#include "bagplan/mutex.hpp"
#include "bagplan/task.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace bagplan {

// Atom over type variables and frozen objects. Baggable types are single and
// appear at most once per conjunction, so the type itself names the variable.
// args: >= 0 is an object id, < 0 encodes type variable -(type+1).
struct TVAtom {
    int predicate = -1;
    std::vector<int> args;

    static int type_var(int type) { return -(type + 1); }
    static bool is_var(int arg) { return arg < 0; }
    static int var_type(int arg) { return -arg - 1; }

    std::set<int> var_types() const {
        std::set<int> ts;
        for (int a : args)
            if (is_var(a))
                ts.insert(var_type(a));
        return ts;
    }

    bool operator==(const TVAtom &) const = default;
    auto operator<=>(const TVAtom &) const = default;
};

std::string to_string(const TypedTask &task, const TVAtom &atom);

// Equivalence class of goal-equivalent objects of one baggable type.
struct Subtype {
    int type = -1;
    std::vector<int> members;                 // object ids, name order
    std::vector<GroundAtom> signature_atoms;  // goal atoms of a representative
    std::string name;
};

// One attribute value: a member predicate with its non-baggable parameters
// frozen to instance objects; baggable parameters stay type variables.
struct AttributeValue {
    TVAtom atom;
    std::set<int> open_types;
};

// Attribute value vector for a type: one attribute value per mutex group.
struct Avs {
    int type = -1;
    std::vector<TVAtom> atoms; // indexed by group
    std::set<int> open_types;  // union of component open type sets
};

// Maximal connected conjunction of AVSes across baggable types.
struct ExtendedAvs {
    std::vector<int> types;   // participating baggable types, sorted
    std::vector<TVAtom> atoms; // canonical: sorted, deduplicated
    std::string name;

    bool involves(int type) const {
        for (int t : types)
            if (t == type)
                return true;
        return false;
    }
};

struct AtomicityViolation {
    int schema = -1;
    int eavs_index = -1;
    TVAtom first;
    TVAtom second;
};

struct BagStructure {
    std::vector<int> baggable; // types, declaration order
    std::map<int, std::vector<Subtype>> subtypes;
    std::map<int, std::vector<Avs>> avs_per_type;
    std::vector<ExtendedAvs> eavs; // canonical order
    std::vector<AtomicityViolation> violations;
    bool proper = false;

    bool is_baggable(int type) const {
        for (int t : baggable)
            if (t == type)
                return true;
        return false;
    }
    int subtype_count() const {
        int n = 0;
        for (const auto &[t, sts] : subtypes)
            n += static_cast<int>(sts.size());
        return n;
    }
};

std::set<int> baggable_types(const TypedTask &task, const MutexInvariant &invariant);

std::vector<Subtype> compute_subtypes(const TypedTask &task, int type);

std::vector<AttributeValue> attribute_values(const TypedTask &task,
                                             const std::set<int> &baggable,
                                             const PredicateGroup &group);

std::vector<Avs> enumerate_avs(const TypedTask &task, const std::set<int> &baggable,
                               const MutexInvariant &invariant, int type);

std::vector<ExtendedAvs> enumerate_eavs(const TypedTask &task,
                                        const std::map<int, std::vector<Avs>> &avs_per_type);

std::vector<AtomicityViolation> check_atomic(const TypedTask &task, int schema,
                                             const std::vector<ExtendedAvs> &eavs,
                                             const std::set<int> &baggable);

// Full analysis: baggable types, subtypes, AVSes, extended AVSes and the
// per-schema atomicity verdicts.
BagStructure analyze_bags(const TypedTask &task, const MutexInvariant &invariant);

} // namespace bagplan

#endif

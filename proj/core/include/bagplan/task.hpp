#ifndef BAGPLAN_TASK_HPP
#define BAGPLAN_TASK_HPP

#include "bagplan/util.hpp"

#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace bagplan {

// Parsed STRIPS task with :typing. Types are flattened at parse time: every
// object carries its most specific declared type, and type extents are
// computed over the leaf types below a declared parameter type.

struct PredicateSchema {
    std::string name;
    std::vector<int> param_types;

    bool operator==(const PredicateSchema &) const = default;
};

// Atom inside an action schema; arguments are parameter indices.
struct SchemaAtom {
    int predicate = -1;
    std::vector<int> args;

    bool operator==(const SchemaAtom &) const = default;
    auto operator<=>(const SchemaAtom &) const = default;
};

struct ActionSchema {
    std::string name;
    std::vector<std::string> param_names;
    std::vector<int> param_types;
    std::vector<SchemaAtom> pre;
    std::vector<SchemaAtom> add;
    std::vector<SchemaAtom> del;

    bool operator==(const ActionSchema &) const = default;
};

struct GroundAtom {
    int predicate = -1;
    std::vector<int> args; // object ids

    bool operator==(const GroundAtom &) const = default;
    auto operator<=>(const GroundAtom &) const = default;
};

struct Object {
    std::string name;
    int type = -1;

    bool operator==(const Object &) const = default;
};

class TypedTask {
public:
    std::string domain_name;
    std::string problem_name;

    std::vector<std::string> types;      // declaration order
    std::vector<int> type_parent;        // -1 for roots
    std::vector<PredicateSchema> predicates;
    std::vector<ActionSchema> actions;
    std::vector<Object> objects;         // sorted by (type, name)
    std::set<GroundAtom> init;
    std::set<GroundAtom> goal;

    int type_index(const std::string &name) const;
    int predicate_index(const std::string &name) const;
    int object_index(const std::string &name) const;

    // True if an object of leaf type `t` can fill a parameter declared as
    // `declared` (t equals declared or is a descendant).
    bool type_admits(int declared, int t) const;

    // Objects admitted by a declared type, in lexicographic name order.
    // Valid after finalize().
    const std::vector<int> &extent(int declared) const;

    const std::string &object_name(int id) const { return objects[id].name; }

    std::string atom_to_string(const GroundAtom &atom) const;
    std::string schema_atom_to_string(const ActionSchema &schema, const SchemaAtom &atom) const;

    // Canonical PDDL dump; reparsing it yields a structurally identical task.
    std::string print_domain() const;
    std::string print_problem() const;

    // Call after objects/predicates change to rebuild extent caches.
    void finalize();

    bool operator==(const TypedTask &other) const;

private:
    mutable std::map<int, std::vector<int>> extents_;
};

} // namespace bagplan

#endif

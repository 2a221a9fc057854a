#ifndef BAGPLAN_GROUND_HPP
#define BAGPLAN_GROUND_HPP

#include "bagplan/task.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bagplan {

struct GroundAction {
    int schema = -1;
    std::vector<int> args; // object id per schema parameter
    std::vector<int> pre;  // atom indices, sorted
    std::vector<int> add;
    std::vector<int> del;
    std::string name;
};

// Fully instantiated task. The atom index enumerates every type-consistent
// instantiation of every predicate: predicates in declaration order,
// arguments in lexicographic object order (mixed radix), so dumps are
// reproducible bit-exactly.
class GroundTask {
public:
    // Owning snapshot of the task, so a GroundTask stays valid however the
    // surrounding structs are moved or copied.
    std::shared_ptr<const TypedTask> task;

    std::vector<GroundAtom> atoms;
    std::vector<GroundAction> actions;
    Bitset init;
    std::vector<int> goal;             // atom indices, sorted
    std::vector<bool> static_predicate; // per predicate: in no add/del list
    std::vector<bool> static_atom;      // per atom

    int atom_index(const GroundAtom &atom) const;
    int action_index(int schema, const std::vector<int> &args) const;

    bool applicable(const Bitset &state, int action) const;
    // Requires applicable(); returns (state \ del) ∪ add.
    Bitset apply(const Bitset &state, int action) const;

    bool goal_satisfied(const Bitset &state) const;

    std::string action_name(int action) const { return actions[action].name; }

private:
    friend GroundTask ground(const TypedTask &task);
    std::vector<int> pred_offset_;
    std::vector<std::vector<int>> pred_radix_; // extent sizes per argument
    std::map<std::pair<int, std::vector<int>>, int> action_lookup_;
};

GroundTask ground(const TypedTask &task);

} // namespace bagplan

#endif

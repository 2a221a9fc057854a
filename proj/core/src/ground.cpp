#include "bagplan/ground.hpp"

#include <algorithm>
#include <map>

namespace bagplan {

namespace {

// Enumerates the mixed-radix product of the given extents, calling f with a
// vector of positions. Extents with zero objects yield no tuples.
template <typename F>
void for_each_tuple(const std::vector<const std::vector<int> *> &extents, F f) {
    for (const auto *e : extents)
        if (e->empty())
            return;
    std::vector<std::size_t> idx(extents.size(), 0);
    std::vector<int> tuple(extents.size());
    while (true) {
        for (std::size_t i = 0; i < extents.size(); i++)
            tuple[i] = (*extents[i])[idx[i]];
        f(tuple);
        std::size_t k = extents.size();
        while (k > 0) {
            k--;
            if (++idx[k] < extents[k]->size())
                break;
            idx[k] = 0;
            if (k == 0)
                return;
        }
        if (extents.empty())
            return;
    }
}

} // namespace

int GroundTask::atom_index(const GroundAtom &atom) const {
    const auto &radix = pred_radix_[atom.predicate];
    int offset = pred_offset_[atom.predicate];
    int index = 0;
    for (std::size_t i = 0; i < atom.args.size(); i++) {
        const auto &ext = task->extent(task->predicates[atom.predicate].param_types[i]);
        auto it = std::lower_bound(ext.begin(), ext.end(), atom.args[i], [&](int a, int b) {
            return task->objects[a].name < task->objects[b].name;
        });
        if (it == ext.end() || *it != atom.args[i])
            return -1;
        index = index * static_cast<int>(radix[i]) + static_cast<int>(it - ext.begin());
    }
    return offset + index;
}

int GroundTask::action_index(int schema, const std::vector<int> &args) const {
    auto it = action_lookup_.find({schema, args});
    return it == action_lookup_.end() ? -1 : it->second;
}

bool GroundTask::applicable(const Bitset &state, int action) const {
    return state.contains_all(actions[action].pre);
}

Bitset GroundTask::apply(const Bitset &state, int action) const {
    Bitset next = state;
    for (int a : actions[action].del)
        next.reset(a);
    for (int a : actions[action].add)
        next.set(a);
    return next;
}

bool GroundTask::goal_satisfied(const Bitset &state) const {
    return state.contains_all(goal);
}

GroundTask ground(const TypedTask &task) {
    GroundTask g;
    g.task = std::make_shared<TypedTask>(task);

    g.static_predicate.assign(task.predicates.size(), true);
    for (const auto &schema : task.actions) {
        for (const auto &atom : schema.add)
            g.static_predicate[atom.predicate] = false;
        for (const auto &atom : schema.del)
            g.static_predicate[atom.predicate] = false;
    }

    for (std::size_t p = 0; p < task.predicates.size(); p++) {
        g.pred_offset_.push_back(static_cast<int>(g.atoms.size()));
        const auto &pred = task.predicates[p];
        std::vector<int> radix;
        std::vector<const std::vector<int> *> extents;
        for (int t : pred.param_types) {
            extents.push_back(&task.extent(t));
            radix.push_back(static_cast<int>(task.extent(t).size()));
        }
        g.pred_radix_.push_back(radix);
        // a 0-ary predicate contributes exactly one atom via the empty tuple
        for_each_tuple(extents, [&](const std::vector<int> &tuple) {
            g.atoms.push_back({static_cast<int>(p), tuple});
        });
    }
    g.static_atom.resize(g.atoms.size());
    for (std::size_t i = 0; i < g.atoms.size(); i++)
        g.static_atom[i] = g.static_predicate[g.atoms[i].predicate];

    for (std::size_t s = 0; s < task.actions.size(); s++) {
        const auto &schema = task.actions[s];
        std::vector<const std::vector<int> *> extents;
        for (int t : schema.param_types)
            extents.push_back(&task.extent(t));
        for_each_tuple(extents, [&](const std::vector<int> &args) {
            GroundAction act;
            act.schema = static_cast<int>(s);
            act.args = args;
            auto instantiate = [&](const SchemaAtom &atom) {
                GroundAtom ga;
                ga.predicate = atom.predicate;
                for (int p : atom.args)
                    ga.args.push_back(args[p]);
                int idx = g.atom_index(ga);
                if (idx < 0)
                    throw Error("internal: ground atom not in index");
                return idx;
            };
            for (const auto &atom : schema.pre)
                act.pre.push_back(instantiate(atom));
            for (const auto &atom : schema.add)
                act.add.push_back(instantiate(atom));
            for (const auto &atom : schema.del)
                act.del.push_back(instantiate(atom));
            auto normalize = [](std::vector<int> &v) {
                std::sort(v.begin(), v.end());
                v.erase(std::unique(v.begin(), v.end()), v.end());
            };
            normalize(act.pre);
            normalize(act.add);
            normalize(act.del);
            act.name = "(" + schema.name;
            for (int o : args)
                act.name += " " + task.objects[o].name;
            act.name += ")";
            g.action_lookup_[{act.schema, act.args}] = static_cast<int>(g.actions.size());
            g.actions.push_back(std::move(act));
        });
    }

    g.init = Bitset(g.atoms.size());
    for (const auto &atom : task.init) {
        int idx = g.atom_index(atom);
        if (idx < 0)
            throw Error("internal: init atom not in index");
        g.init.set(idx);
    }
    for (const auto &atom : task.goal) {
        int idx = g.atom_index(atom);
        if (idx < 0)
            throw Error("internal: goal atom not in index");
        g.goal.push_back(idx);
    }
    std::sort(g.goal.begin(), g.goal.end());
    g.goal.erase(std::unique(g.goal.begin(), g.goal.end()), g.goal.end());
    return g;
}

} // namespace bagplan

#include "bagplan/mutex.hpp"

#include <algorithm>
#include <numeric>

namespace bagplan {

namespace {

bool is_leaf_type(const TypedTask &task, int t) {
    for (int parent : task.type_parent)
        if (parent == t)
            return false;
    return true;
}

// Positions of predicate parameters an object of leaf type t can fill.
std::vector<int> t_positions(const TypedTask &task, const PredicateSchema &pred, int t) {
    std::vector<int> pos;
    for (std::size_t i = 0; i < pred.param_types.size(); i++)
        if (task.type_admits(pred.param_types[i], t))
            pos.push_back(static_cast<int>(i));
    return pos;
}

std::vector<int> schema_t_params(const TypedTask &task, const ActionSchema &schema, int t) {
    std::vector<int> pos;
    for (std::size_t i = 0; i < schema.param_types.size(); i++)
        if (task.type_admits(schema.param_types[i], t))
            pos.push_back(static_cast<int>(i));
    return pos;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    }
    void merge(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

std::set<int> single_types(const TypedTask &task) {
    std::set<int> singles;
    for (std::size_t t = 0; t < task.types.size(); t++) {
        if (!is_leaf_type(task, static_cast<int>(t)))
            continue;
        bool single = true;
        for (const auto &pred : task.predicates)
            if (t_positions(task, pred, static_cast<int>(t)).size() > 1)
                single = false;
        for (const auto &schema : task.actions)
            if (schema_t_params(task, schema, static_cast<int>(t)).size() > 1)
                single = false;
        if (single)
            singles.insert(static_cast<int>(t));
    }
    return singles;
}

MutexInvariant infer_mutex_groups(const TypedTask &task) {
    MutexInvariant inv;
    inv.groups_per_type.resize(task.types.size());

    std::vector<bool> in_effects(task.predicates.size(), false);
    for (const auto &schema : task.actions) {
        for (const auto &atom : schema.add)
            in_effects[atom.predicate] = true;
        for (const auto &atom : schema.del)
            in_effects[atom.predicate] = true;
    }

    for (int t : single_types(task)) {
        std::vector<int> involving; // predicate -> unique t position, or absent
        std::vector<int> tpos(task.predicates.size(), -1);
        for (std::size_t p = 0; p < task.predicates.size(); p++) {
            auto pos = t_positions(task, task.predicates[p], t);
            if (pos.size() == 1) {
                involving.push_back(static_cast<int>(p));
                tpos[p] = pos[0];
            }
        }
        if (involving.empty())
            continue;

        // Effect-balance analysis. Per schema and t variable, the deleted
        // and added member atoms must pair up one per group. A 1-1 event
        // forces its two predicates into one group; events with several
        // pairs are resolved afterwards against the classes the 1-1 events
        // already formed, leftovers paired in declaration order (the
        // verification pass rejects a wrong guess). Unequal delete/add
        // counts can never keep the per-object count at one.
        UnionFind uf(task.predicates.size());
        std::vector<bool> ungroupable(task.predicates.size(), false);
        std::vector<std::pair<std::vector<int>, std::vector<int>>> deferred;
        for (const auto &schema : task.actions) {
            for (int x : schema_t_params(task, schema, t)) {
                std::vector<int> dels, adds;
                for (const auto &atom : schema.del)
                    if (tpos[atom.predicate] >= 0 && atom.args[tpos[atom.predicate]] == x)
                        dels.push_back(atom.predicate);
                for (const auto &atom : schema.add)
                    if (tpos[atom.predicate] >= 0 && atom.args[tpos[atom.predicate]] == x)
                        adds.push_back(atom.predicate);
                if (dels.empty() && adds.empty())
                    continue;
                if (dels.size() != adds.size()) {
                    for (int p : dels)
                        ungroupable[p] = true;
                    for (int p : adds)
                        ungroupable[p] = true;
                } else if (dels.size() == 1) {
                    uf.merge(dels[0], adds[0]);
                } else {
                    std::sort(dels.begin(), dels.end());
                    std::sort(adds.begin(), adds.end());
                    deferred.emplace_back(dels, adds);
                }
            }
        }
        for (auto &[dels, adds] : deferred) {
            std::vector<int> free_d, free_a;
            for (int d : dels) {
                bool matched = false;
                for (int a : adds)
                    if (uf.find(a) == uf.find(d))
                        matched = true;
                if (!matched)
                    free_d.push_back(d);
            }
            for (int a : adds) {
                bool matched = false;
                for (int d : dels)
                    if (uf.find(a) == uf.find(d))
                        matched = true;
                if (!matched)
                    free_a.push_back(a);
            }
            for (std::size_t i = 0; i < free_d.size() && i < free_a.size(); i++)
                uf.merge(free_d[i], free_a[i]);
        }

        std::vector<std::vector<int>> classes(task.predicates.size());
        for (int p : involving)
            if (in_effects[p])
                classes[uf.find(p)].push_back(p);
        for (auto &cls : classes) {
            if (cls.empty())
                continue;
            bool bad = std::any_of(cls.begin(), cls.end(), [&](int p) { return ungroupable[p]; });
            if (bad) {
                for (int p : cls)
                    inv.ungrouped.emplace_back(t, p);
                continue;
            }
            PredicateGroup group;
            group.type = t;
            group.predicates = cls;
            for (int p : cls)
                group.t_position.push_back(tpos[p]);
            inv.groups_per_type[t].push_back(std::move(group));
        }

        // Initial-state grouping for predicates no effect touches: greedily
        // accumulate predicates while each object keeps at most one true
        // member atom, and accept when every object has exactly one.
        std::vector<int> remaining;
        for (int p : involving)
            if (!in_effects[p])
                remaining.push_back(p);
        const auto &objs = task.extent(t);
        while (!remaining.empty()) {
            std::vector<int> group_preds;
            std::map<int, int> count; // object -> true member atoms
            for (int e : objs)
                count[e] = 0;
            for (int p : remaining) {
                std::map<int, int> delta;
                for (const auto &atom : task.init)
                    if (atom.predicate == p)
                        delta[atom.args[tpos[p]]]++;
                bool fits = true;
                for (auto &[e, c] : delta)
                    if (count[e] + c > 1)
                        fits = false;
                if (fits) {
                    group_preds.push_back(p);
                    for (auto &[e, c] : delta)
                        count[e] += c;
                }
            }
            bool exact = !group_preds.empty();
            for (int e : objs)
                if (count[e] != 1)
                    exact = false;
            if (!exact) {
                for (int p : remaining)
                    inv.ungrouped.emplace_back(t, p);
                break;
            }
            PredicateGroup group;
            group.type = t;
            group.predicates = group_preds;
            for (int p : group_preds)
                group.t_position.push_back(tpos[p]);
            group.from_init = true;
            inv.groups_per_type[t].push_back(std::move(group));
            std::vector<int> rest;
            for (int p : remaining)
                if (std::find(group_preds.begin(), group_preds.end(), p) == group_preds.end())
                    rest.push_back(p);
            remaining = rest;
        }

        auto &groups = inv.groups_per_type[t];
        std::sort(groups.begin(), groups.end(), [](const PredicateGroup &a, const PredicateGroup &b) {
            return a.predicates.front() < b.predicates.front();
        });
    }
    return inv;
}

std::optional<MutexCounterexample> verify_mutex_invariant(const TypedTask &task,
                                                          MutexInvariant &invariant) {
    for (std::size_t t = 0; t < invariant.groups_per_type.size(); t++) {
        const auto &groups = invariant.groups_per_type[t];
        for (std::size_t gi = 0; gi < groups.size(); gi++) {
            const auto &group = groups[gi];
            for (std::size_t s = 0; s < task.actions.size(); s++) {
                const auto &schema = task.actions[s];
                for (int x : schema_t_params(task, schema, static_cast<int>(t))) {
                    std::vector<SchemaAtom> dels, adds;
                    for (const auto &atom : schema.del) {
                        int slot = group.member_slot(atom.predicate);
                        if (slot >= 0 && atom.args[group.t_position[slot]] == x)
                            dels.push_back(atom);
                    }
                    for (const auto &atom : schema.add) {
                        int slot = group.member_slot(atom.predicate);
                        if (slot >= 0 && atom.args[group.t_position[slot]] == x)
                            adds.push_back(atom);
                    }
                    if (dels.empty() && adds.empty())
                        continue;
                    MutexCounterexample ce;
                    ce.schema = static_cast<int>(s);
                    ce.type = static_cast<int>(t);
                    ce.group_index = static_cast<int>(gi);
                    ce.variable = schema.param_names[x];
                    if (dels.size() != 1 || adds.size() != 1) {
                        ce.reason = "member adds and deletes do not balance one-for-one on ?" +
                                    ce.variable;
                        return ce;
                    }
                    // The swapped-out atom must be known true, so the count
                    // moves 1 -> 0 -> 1; without that guarantee the add could
                    // push the count to two.
                    bool guarded = std::find(schema.pre.begin(), schema.pre.end(), dels[0]) !=
                                   schema.pre.end();
                    if (!guarded) {
                        ce.reason = "deleted member " + task.schema_atom_to_string(schema, dels[0]) +
                                    " is not guaranteed by the precondition";
                        return ce;
                    }
                }
            }
        }
    }
    return std::nullopt;
}

void verify_and_filter(const TypedTask &task, MutexInvariant &invariant) {
    while (auto ce = verify_mutex_invariant(task, invariant)) {
        auto &groups = invariant.groups_per_type[ce->type];
        const auto &bad = groups[ce->group_index];
        log_warn("dropping candidate group " + describe(task, bad) + ": " + ce->reason);
        for (int p : bad.predicates)
            invariant.ungrouped.emplace_back(ce->type, p);
        groups.erase(groups.begin() + ce->group_index);
    }
    invariant.verified = true;
}

std::vector<InitViolation> check_init(const TypedTask &task, const MutexInvariant &invariant) {
    std::vector<InitViolation> violations;
    for (std::size_t t = 0; t < invariant.groups_per_type.size(); t++) {
        const auto &groups = invariant.groups_per_type[t];
        if (groups.empty())
            continue;
        for (std::size_t gi = 0; gi < groups.size(); gi++) {
            const auto &group = groups[gi];
            std::map<int, int> count;
            for (int e : task.extent(static_cast<int>(t)))
                count[e] = 0;
            for (const auto &atom : task.init) {
                int slot = group.member_slot(atom.predicate);
                if (slot >= 0)
                    count[atom.args[group.t_position[slot]]]++;
            }
            for (auto &[e, c] : count)
                if (c != 1)
                    violations.push_back({e, static_cast<int>(t), static_cast<int>(gi), c});
        }
    }
    return violations;
}

std::string describe(const TypedTask &task, const PredicateGroup &group) {
    std::string s = "{";
    for (std::size_t i = 0; i < group.predicates.size(); i++) {
        if (i)
            s += ", ";
        s += task.predicates[group.predicates[i]].name;
    }
    return s + "}@" + task.types[group.type];
}

} // namespace bagplan

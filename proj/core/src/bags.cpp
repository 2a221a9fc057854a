#include "bagplan/bags.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace bagplan {

std::string to_string(const TypedTask &task, const TVAtom &atom) {
    std::string s = task.predicates[atom.predicate].name + "(";
    for (std::size_t i = 0; i < atom.args.size(); i++) {
        if (i)
            s += ",";
        if (TVAtom::is_var(atom.args[i]))
            s += task.types[TVAtom::var_type(atom.args[i])];
        else
            s += task.objects[atom.args[i]].name;
    }
    return s + ")";
}

std::set<int> baggable_types(const TypedTask &task, const MutexInvariant &invariant) {
    std::set<int> result;
    for (int t : single_types(task)) {
        const auto &groups = invariant.groups_per_type[t];
        if (groups.empty())
            continue;
        std::set<int> covered;
        for (const auto &g : groups)
            covered.insert(g.predicates.begin(), g.predicates.end());
        bool partitioned = true;
        for (std::size_t p = 0; p < task.predicates.size(); p++) {
            bool involving = false;
            for (std::size_t i = 0; i < task.predicates[p].param_types.size(); i++)
                if (task.type_admits(task.predicates[p].param_types[i], t))
                    involving = true;
            if (involving && !covered.count(static_cast<int>(p)))
                partitioned = false;
        }
        if (partitioned)
            result.insert(t);
    }
    return result;
}

namespace {

std::string signature_string(const TypedTask &task,
                             const std::set<std::tuple<int, int, std::vector<int>>> &sig) {
    std::string s;
    for (const auto &[pred, pos, others] : sig) {
        s += task.predicates[pred].name + "[" + std::to_string(pos) + "](";
        for (std::size_t i = 0; i < others.size(); i++) {
            if (i)
                s += ",";
            s += others[i] < 0 ? "_" : task.objects[others[i]].name;
        }
        s += ") ";
    }
    return s;
}

} // namespace

std::vector<Subtype> compute_subtypes(const TypedTask &task, int type) {
    using Signature = std::set<std::tuple<int, int, std::vector<int>>>;
    std::map<int, Signature> sig_of;
    for (int e : task.extent(type))
        sig_of[e] = {};
    for (const auto &atom : task.goal) {
        for (std::size_t pos = 0; pos < atom.args.size(); pos++) {
            int e = atom.args[pos];
            if (task.objects[e].type != type)
                continue;
            std::vector<int> others = atom.args;
            others[pos] = -1;
            sig_of[e].insert({atom.predicate, static_cast<int>(pos), others});
        }
    }
    std::map<std::string, std::pair<Signature, std::vector<int>>> by_sig;
    for (auto &[e, sig] : sig_of) {
        auto &entry = by_sig[signature_string(task, sig)];
        entry.first = sig;
        entry.second.push_back(e);
    }

    std::vector<Subtype> subtypes;
    for (auto &[key, entry] : by_sig) {
        Subtype st;
        st.type = type;
        st.members = entry.second;
        std::sort(st.members.begin(), st.members.end(), [&](int a, int b) {
            return task.objects[a].name < task.objects[b].name;
        });
        // Signature atoms of a representative member, for reports and for
        // goal replication when generating family instances.
        int rep = st.members.front();
        for (const auto &[pred, pos, others] : entry.first) {
            GroundAtom atom;
            atom.predicate = pred;
            atom.args = others;
            atom.args[pos] = rep;
            st.signature_atoms.push_back(atom);
        }
        st.name = task.types[type] + "_st" + std::to_string(subtypes.size());
        subtypes.push_back(std::move(st));
    }
    return subtypes;
}

std::vector<AttributeValue> attribute_values(const TypedTask &task,
                                             const std::set<int> &baggable,
                                             const PredicateGroup &group) {
    std::vector<AttributeValue> values;
    for (int p : group.predicates) {
        const auto &pred = task.predicates[p];
        std::vector<int> frozen_positions;
        std::vector<const std::vector<int> *> extents;
        for (std::size_t i = 0; i < pred.param_types.size(); i++) {
            bool open = false;
            for (int b : baggable)
                if (task.type_admits(pred.param_types[i], b))
                    open = true;
            if (!open) {
                frozen_positions.push_back(static_cast<int>(i));
                extents.push_back(&task.extent(pred.param_types[i]));
            }
        }
        bool possible = true;
        for (const auto *e : extents)
            if (e->empty())
                possible = false;
        if (!possible)
            continue;
        std::vector<std::size_t> idx(extents.size(), 0);
        while (true) {
            AttributeValue av;
            av.atom.predicate = p;
            av.atom.args.resize(pred.param_types.size());
            std::size_t fi = 0;
            for (std::size_t i = 0; i < pred.param_types.size(); i++) {
                bool frozen = fi < frozen_positions.size() &&
                              frozen_positions[fi] == static_cast<int>(i);
                if (frozen) {
                    av.atom.args[i] = (*extents[fi])[idx[fi]];
                    fi++;
                } else {
                    for (int b : baggable)
                        if (task.type_admits(pred.param_types[i], b))
                            av.atom.args[i] = TVAtom::type_var(b);
                }
            }
            av.open_types = av.atom.var_types();
            values.push_back(std::move(av));
            std::size_t k = extents.size();
            bool done = extents.empty();
            while (k > 0) {
                k--;
                if (++idx[k] < extents[k]->size())
                    break;
                idx[k] = 0;
                if (k == 0)
                    done = true;
            }
            if (done)
                break;
        }
    }
    return values;
}

std::vector<Avs> enumerate_avs(const TypedTask &task, const std::set<int> &baggable,
                               const MutexInvariant &invariant, int type) {
    const auto &groups = invariant.groups_per_type[type];
    std::vector<std::vector<AttributeValue>> domains;
    for (const auto &g : groups)
        domains.push_back(attribute_values(task, baggable, g));
    std::vector<Avs> result;
    for (const auto &d : domains)
        if (d.empty())
            return result;
    if (domains.empty())
        return result;
    std::vector<std::size_t> idx(domains.size(), 0);
    while (true) {
        Avs avs;
        avs.type = type;
        for (std::size_t i = 0; i < domains.size(); i++) {
            const auto &av = domains[i][idx[i]];
            avs.atoms.push_back(av.atom);
            avs.open_types.insert(av.open_types.begin(), av.open_types.end());
        }
        result.push_back(std::move(avs));
        std::size_t k = domains.size();
        while (true) {
            if (k == 0)
                return result;
            k--;
            if (++idx[k] < domains[k].size())
                break;
            idx[k] = 0;
        }
    }
}

namespace {

std::string eavs_name(const TypedTask &task, const std::vector<TVAtom> &atoms) {
    std::vector<std::string> parts;
    for (const auto &a : atoms)
        parts.push_back(to_string(task, a));
    std::sort(parts.begin(), parts.end());
    std::string s;
    for (std::size_t i = 0; i < parts.size(); i++) {
        if (i)
            s += "&";
        s += parts[i];
    }
    return s;
}

bool shares_atom(const std::vector<TVAtom> &a, const std::vector<TVAtom> &b) {
    for (const auto &x : a)
        for (const auto &y : b)
            if (x == y)
                return true;
    return false;
}

} // namespace

std::vector<ExtendedAvs> enumerate_eavs(const TypedTask &task,
                                        const std::map<int, std::vector<Avs>> &avs_per_type) {
    // Grow connected conjunctions: from each AVS seed, branch over every
    // joinable AVS of a not-yet-participating type (join = literally shared
    // atom), and keep the states no further AVS can extend.
    using State = std::vector<std::pair<int, int>>; // (type, avs index), sorted
    std::set<State> visited;
    std::map<std::string, ExtendedAvs> maximal;

    std::vector<State> stack;
    for (const auto &[t, list] : avs_per_type)
        for (std::size_t i = 0; i < list.size(); i++)
            stack.push_back({{t, static_cast<int>(i)}});

    while (!stack.empty()) {
        State state = stack.back();
        stack.pop_back();
        if (visited.count(state))
            continue;
        visited.insert(state);

        std::vector<TVAtom> atoms;
        for (const auto &[t, i] : state)
            for (const auto &a : avs_per_type.at(t)[i].atoms)
                atoms.push_back(a);
        std::sort(atoms.begin(), atoms.end());
        atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());

        bool extended = false;
        for (const auto &[t, list] : avs_per_type) {
            bool present = false;
            for (const auto &[pt, pi] : state)
                if (pt == t)
                    present = true;
            if (present)
                continue;
            for (std::size_t i = 0; i < list.size(); i++) {
                if (!shares_atom(atoms, list[i].atoms))
                    continue;
                State next = state;
                next.emplace_back(t, static_cast<int>(i));
                std::sort(next.begin(), next.end());
                stack.push_back(std::move(next));
                extended = true;
            }
        }
        if (!extended) {
            ExtendedAvs e;
            for (const auto &[t, i] : state)
                e.types.push_back(t);
            std::sort(e.types.begin(), e.types.end());
            e.atoms = atoms;
            e.name = eavs_name(task, atoms);
            maximal.emplace(e.name, std::move(e));
        }
    }

    std::vector<ExtendedAvs> result;
    for (auto &[name, e] : maximal)
        result.push_back(std::move(e));
    return result;
}

std::vector<AtomicityViolation> check_atomic(const TypedTask &task, int schema,
                                             const std::vector<ExtendedAvs> &eavs,
                                             const std::set<int> &baggable) {
    std::vector<AtomicityViolation> violations;
    const auto &a = task.actions[schema];

    std::set<int> schema_baggable;
    for (int pt : a.param_types)
        for (int b : baggable)
            if (task.type_admits(pt, b))
                schema_baggable.insert(b);
    // An action over at most one baggable type cannot split a bag tuple.
    if (schema_baggable.size() <= 1)
        return violations;

    std::set<int> touched;
    for (const auto &atom : a.add)
        touched.insert(atom.predicate);
    for (const auto &atom : a.del)
        touched.insert(atom.predicate);

    for (std::size_t ei = 0; ei < eavs.size(); ei++) {
        const auto &e = eavs[ei];
        std::vector<const TVAtom *> changed;
        for (const auto &atom : e.atoms)
            if (touched.count(atom.predicate))
                changed.push_back(&atom);
        for (std::size_t i = 0; i < changed.size(); i++) {
            for (std::size_t j = i + 1; j < changed.size(); j++) {
                auto t1 = changed[i]->var_types();
                auto t2 = changed[j]->var_types();
                std::vector<int> inter;
                std::set_intersection(t1.begin(), t1.end(), t2.begin(), t2.end(),
                                      std::back_inserter(inter));
                if (!inter.empty())
                    continue;
                bool bridged = false;
                for (const auto *b : changed) {
                    if (b == changed[i] || b == changed[j])
                        continue;
                    auto t3 = b->var_types();
                    bool hits1 = false, hits2 = false;
                    for (int t : t3) {
                        if (t1.count(t))
                            hits1 = true;
                        if (t2.count(t))
                            hits2 = true;
                    }
                    if (hits1 && hits2)
                        bridged = true;
                }
                if (!bridged)
                    violations.push_back(
                        {schema, static_cast<int>(ei), *changed[i], *changed[j]});
            }
        }
    }
    return violations;
}

BagStructure analyze_bags(const TypedTask &task, const MutexInvariant &invariant) {
    BagStructure bags;
    std::set<int> baggable = baggable_types(task, invariant);
    for (std::size_t t = 0; t < task.types.size(); t++)
        if (baggable.count(static_cast<int>(t)))
            bags.baggable.push_back(static_cast<int>(t));
    for (int t : bags.baggable) {
        bags.subtypes[t] = compute_subtypes(task, t);
        bags.avs_per_type[t] = enumerate_avs(task, baggable, invariant, t);
    }
    bags.eavs = enumerate_eavs(task, bags.avs_per_type);
    for (std::size_t s = 0; s < task.actions.size(); s++) {
        auto v = check_atomic(task, static_cast<int>(s), bags.eavs, baggable);
        bags.violations.insert(bags.violations.end(), v.begin(), v.end());
    }
    bags.proper = bags.violations.empty();
    return bags;
}

} // namespace bagplan

#include "bagplan/refine.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace bagplan {

GuardedProgram refine(const Policy &policy, const BqnpProblem &problem) {
    GuardedProgram program;
    for (const auto &[q, op] : policy.map) {
        if (op < 0 || op >= static_cast<int>(problem.ops.size()))
            throw RefinementError("policy references undeclared abstract action " +
                                  std::to_string(op));
        program.rules.push_back({q, op});
    }
    return program;
}

std::vector<int> counter_values(const Bitset &state, const RefinementMapping &mapping,
                                const GroundTask &ground) {
    std::vector<int> values;
    values.reserve(mapping.counters.size());
    for (const auto &f : mapping.counters)
        values.push_back(eval_counter(f, state, ground));
    return values;
}

QState qstate_of(const Bitset &state, const RefinementMapping &mapping, const GroundTask &ground) {
    QState q;
    for (const auto &f : mapping.counters)
        q.numeric_positive.push_back(eval_counter(f, state, ground) > 0);
    for (const auto &atom : mapping.boolean_atoms) {
        int idx = ground.atom_index(atom);
        q.booleans.push_back(idx >= 0 && state.test(static_cast<std::size_t>(idx)));
    }
    return q;
}

namespace {

GroundAtom bind_atom(const TVAtom &atom, const std::map<int, int> &binding) {
    GroundAtom g;
    g.predicate = atom.predicate;
    for (int a : atom.args)
        g.args.push_back(TVAtom::is_var(a) ? binding.at(TVAtom::var_type(a)) : a);
    return g;
}

bool holds(const TVAtom &atom, const std::map<int, int> &binding, const Bitset &state,
           const GroundTask &ground) {
    int idx = ground.atom_index(bind_atom(atom, binding));
    return idx >= 0 && state.test(static_cast<std::size_t>(idx));
}

} // namespace

std::vector<std::vector<std::pair<int, int>>> rule_tuples(const ConcretizationRule &rule,
                                                          const RefinementMapping &mapping,
                                                          const Bitset &state,
                                                          const GroundTask &ground) {
    // Selection space: per participating type, the subtype members required
    // by the owning tuple variable. Types across variables are disjoint.
    std::vector<int> types;
    std::vector<const std::vector<int> *> members;
    std::vector<TVAtom> atoms;
    for (int v : rule.vars) {
        const auto &f = mapping.counters[v];
        for (std::size_t i = 0; i < f.types.size(); i++) {
            types.push_back(f.types[i]);
            members.push_back(&f.members[i]);
        }
        atoms.insert(atoms.end(), f.atoms.begin(), f.atoms.end());
    }
    for (const auto &a : rule.pre_atoms)
        atoms.push_back(a);

    std::vector<std::vector<std::pair<int, int>>> tuples;
    std::map<int, int> binding;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == types.size()) {
            for (const auto &a : atoms)
                if (!holds(a, binding, state, ground))
                    return;
            std::vector<std::pair<int, int>> tuple(binding.begin(), binding.end());
            tuples.push_back(std::move(tuple));
            return;
        }
        for (int obj : *members[i]) {
            binding[types[i]] = obj;
            rec(i + 1);
        }
        binding.erase(types[i]);
    };
    rec(0);
    return tuples;
}

int rule_ground_action(const ConcretizationRule &rule,
                       const std::vector<std::pair<int, int>> &tuple, const GroundTask &ground) {
    std::map<int, int> by_type(tuple.begin(), tuple.end());
    const auto &schema = ground.task->actions[rule.schema];
    std::vector<int> args(rule.args);
    for (std::size_t p = 0; p < args.size(); p++) {
        if (args[p] >= 0)
            continue;
        auto it = by_type.find(schema.param_types[p]);
        if (it == by_type.end())
            throw RefinementError("tuple does not bind parameter of schema '" + schema.name + "'");
        args[p] = it->second;
    }
    int idx = ground.action_index(rule.schema, args);
    if (idx < 0)
        throw RefinementError("no ground action for concretization of '" + schema.name + "'");
    return idx;
}

namespace {

long tuple_space_size(const RefinementMapping &mapping) {
    long total = 0;
    for (const auto &f : mapping.counters) {
        long prod = 1;
        for (const auto &m : f.members)
            prod *= static_cast<long>(m.size());
        total += prod;
        if (total > (1L << 40))
            return total;
    }
    return total;
}

// Incremental counter maintenance: only tuples touching an object changed by
// the action can change valuation, so recount just those.
int recount_delta(const CounterFormula &f, const Bitset &before, const Bitset &after,
                  const std::set<int> &touched_objects, const GroundTask &ground) {
    int delta = 0;
    std::map<int, int> binding;
    std::function<void(std::size_t, bool)> rec = [&](std::size_t i, bool touches) {
        if (i == f.types.size()) {
            if (!touches)
                return;
            bool sat_before = true, sat_after = true;
            for (const auto &a : f.atoms) {
                int idx = ground.atom_index(bind_atom(a, binding));
                if (idx < 0) {
                    sat_before = sat_after = false;
                    break;
                }
                if (!before.test(static_cast<std::size_t>(idx)))
                    sat_before = false;
                if (!after.test(static_cast<std::size_t>(idx)))
                    sat_after = false;
            }
            delta += static_cast<int>(sat_after) - static_cast<int>(sat_before);
            return;
        }
        for (int obj : f.members[i]) {
            binding[f.types[i]] = obj;
            rec(i + 1, touches || touched_objects.count(obj));
        }
        binding.erase(f.types[i]);
    };
    rec(0, false);
    return delta;
}

} // namespace

ExecResult execute(const GuardedProgram &program, const RefinementMapping &mapping,
                   const GroundTask &ground, TupleChooser chooser, long step_limit,
                   long direct_threshold) {
    ExecResult r;
    r.final_state = ground.init;

    bool incremental = tuple_space_size(mapping) > direct_threshold;
    std::vector<int> counters = counter_values(r.final_state, mapping, ground);

    for (long step = 0; step < step_limit; step++) {
        if (ground.goal_satisfied(r.final_state)) {
            r.verdict = ExecVerdict::Goal;
            return r;
        }
        QState q;
        if (incremental) {
            for (int c : counters)
                q.numeric_positive.push_back(c > 0);
            for (const auto &atom : mapping.boolean_atoms) {
                int idx = ground.atom_index(atom);
                q.booleans.push_back(idx >= 0 &&
                                     r.final_state.test(static_cast<std::size_t>(idx)));
            }
        } else {
            q = qstate_of(r.final_state, mapping, ground);
        }
        const GuardedRule *rule = program.match(q);
        if (!rule) {
            r.verdict = ExecVerdict::Stuck;
            return r;
        }
        const auto &conc = mapping.rules[rule->op];
        auto tuples = rule_tuples(conc, mapping, r.final_state, ground);
        if (tuples.empty()) {
            // The guard held but no tuple satisfies the selection formula;
            // on proper domains this cannot happen.
            r.verdict = ExecVerdict::NoTuple;
            return r;
        }
        int action = rule_ground_action(conc, tuples[chooser.pick(tuples.size())], ground);
        if (!ground.applicable(r.final_state, action))
            throw RefinementError("concretized action inapplicable: " + ground.action_name(action));
        Bitset next = ground.apply(r.final_state, action);
        if (incremental) {
            std::set<int> touched;
            for (int o : ground.actions[action].args)
                touched.insert(o);
            for (std::size_t v = 0; v < mapping.counters.size(); v++)
                counters[v] += recount_delta(mapping.counters[v], r.final_state, next, touched,
                                             ground);
        }
        r.final_state = next;
        r.plan.push_back(action);
    }
    r.verdict = ExecVerdict::Limit;
    return r;
}

bool execute_all_branches(const GuardedProgram &program, const RefinementMapping &mapping,
                          const GroundTask &ground, long state_budget, std::string *why) {
    std::map<Bitset, int> verdict; // 1 = all branches reach goal, 0 = failure
    std::set<Bitset> on_path;
    long visited = 0;
    auto explain = [&](const std::string &msg) {
        if (why && why->empty())
            *why = msg;
        return false;
    };

    std::function<bool(const Bitset &)> rec = [&](const Bitset &state) -> bool {
        auto it = verdict.find(state);
        if (it != verdict.end())
            return it->second == 1;
        if (++visited > state_budget)
            return explain("state budget exhausted");
        if (ground.goal_satisfied(state)) {
            verdict[state] = 1;
            return true;
        }
        if (on_path.count(state))
            return explain("cycle under the program (nontermination)");
        QState q = qstate_of(state, mapping, ground);
        const GuardedRule *rule = program.match(q);
        if (!rule)
            return explain("unmapped qualitative state reached");
        const auto &conc = mapping.rules[rule->op];
        auto tuples = rule_tuples(conc, mapping, state, ground);
        if (tuples.empty())
            return explain("guard held but no tuple exists");
        on_path.insert(state);
        bool ok = true;
        for (const auto &tuple : tuples) {
            int action = rule_ground_action(conc, tuple, ground);
            if (!rec(ground.apply(state, action))) {
                ok = false;
                break;
            }
        }
        on_path.erase(state);
        verdict[state] = ok ? 1 : 0;
        return ok;
    };
    return rec(ground.init);
}

ValidationResult validate_plan(const GroundTask &ground, const std::vector<int> &plan) {
    ValidationResult r;
    Bitset state = ground.init;
    for (std::size_t i = 0; i < plan.size(); i++) {
        if (!ground.applicable(state, plan[i])) {
            r.failed_step = static_cast<int>(i);
            r.detail = "precondition of " + ground.action_name(plan[i]) + " unmet at step " +
                       std::to_string(i);
            return r;
        }
        state = ground.apply(state, plan[i]);
    }
    if (!ground.goal_satisfied(state)) {
        r.detail = "plan leaves goal atoms unsatisfied";
        return r;
    }
    r.valid = true;
    return r;
}

namespace {

struct Witness {
    int eavs = -1;
    std::map<int, int> tuple; // type -> object
};

// Every baggable object sits in exactly one bag tuple of the initial state.
std::map<int, Witness> init_witnesses(const TypedTask &base, const BagStructure &bags) {
    std::map<int, Witness> witness;
    for (std::size_t ei = 0; ei < bags.eavs.size(); ei++) {
        const auto &e = bags.eavs[ei];
        std::map<int, int> binding;
        std::function<void(std::size_t)> rec = [&](std::size_t i) {
            if (i == e.types.size()) {
                for (const auto &a : e.atoms) {
                    GroundAtom g = bind_atom(a, binding);
                    if (!base.init.count(g))
                        return;
                }
                for (const auto &[t, obj] : binding) {
                    if (witness.count(obj))
                        throw FamilyConstraintError(
                            "object '" + base.objects[obj].name +
                            "' participates in two initial bag tuples (mutex violation)");
                    witness[obj] = {static_cast<int>(ei), binding};
                }
                return;
            }
            for (int obj : base.extent(e.types[i])) {
                binding[e.types[i]] = obj;
                rec(i + 1);
            }
            binding.erase(e.types[i]);
        };
        rec(0);
    }
    return witness;
}

} // namespace

namespace {

// Canonical goal-signature key of one object: the goal atoms it occurs in,
// with its own occurrence masked and partner objects by name. Names survive
// family resizing because non-baggable objects are fixed.
std::set<std::string> signature_key(const TypedTask &task, int object) {
    std::set<std::string> key;
    for (const auto &atom : task.goal) {
        for (std::size_t pos = 0; pos < atom.args.size(); pos++) {
            if (atom.args[pos] != object)
                continue;
            std::string s = task.predicates[atom.predicate].name + "[" + std::to_string(pos) +
                            "](";
            for (std::size_t k = 0; k < atom.args.size(); k++) {
                if (k)
                    s += ",";
                s += k == pos ? "_" : task.objects[atom.args[k]].name;
            }
            key.insert(s + ")");
        }
    }
    return key;
}

} // namespace

RefinementMapping retarget_mapping(const RefinementMapping &mapping, const TypedTask &base,
                                   const TypedTask &member) {
    auto object_by_name = [&](int base_id) {
        int id = member.object_index(base.objects[base_id].name);
        if (id < 0)
            throw RefinementError("family member lacks object '" + base.objects[base_id].name +
                                  "'");
        return id;
    };
    auto retarget_atom = [&](const TVAtom &atom) {
        TVAtom out = atom;
        for (int &a : out.args)
            if (!TVAtom::is_var(a))
                a = object_by_name(a);
        return out;
    };

    RefinementMapping out;
    for (const auto &f : mapping.counters) {
        CounterFormula nf;
        nf.types = f.types;
        nf.subtype_names = f.subtype_names;
        for (std::size_t k = 0; k < f.types.size(); k++) {
            // Members of this subtype in the family member: objects of the
            // type with the same goal signature as the base representative.
            if (f.members[k].empty()) {
                nf.members.push_back({});
                continue;
            }
            std::set<std::string> key = signature_key(base, f.members[k].front());
            std::vector<int> members;
            int member_type = member.type_index(base.types[f.types[k]]);
            for (int obj : member.extent(member_type))
                if (signature_key(member, obj) == key)
                    members.push_back(obj);
            nf.members.push_back(std::move(members));
        }
        for (const auto &a : f.atoms)
            nf.atoms.push_back(retarget_atom(a));
        out.counters.push_back(std::move(nf));
    }
    for (const auto &atom : mapping.boolean_atoms) {
        GroundAtom g = atom;
        for (int &a : g.args)
            a = object_by_name(a);
        out.boolean_atoms.push_back(g);
    }
    for (const auto &rule : mapping.rules) {
        ConcretizationRule r = rule;
        for (int &a : r.args)
            if (a >= 0)
                a = object_by_name(a);
        for (auto &atom : r.pre_atoms)
            atom = retarget_atom(atom);
        out.rules.push_back(std::move(r));
    }
    return out;
}

TypedTask generate_family(const TypedTask &base, const BagStructure &bags,
                          const FamilySpec &spec) {
    for (const auto &[name, card] : spec.cardinalities) {
        if (card < 0)
            throw FamilyConstraintError("negative cardinality for subtype '" + name + "'");
        bool known = false;
        for (const auto &[t, sts] : bags.subtypes)
            for (const auto &st : sts)
                if (st.name == name)
                    known = true;
        if (!known)
            throw FamilyConstraintError("unknown subtype '" + name + "'");
    }

    auto witness = init_witnesses(base, bags);
    for (int t : bags.baggable)
        for (int obj : base.extent(t))
            if (!witness.count(obj))
                throw FamilyConstraintError("object '" + base.objects[obj].name +
                                            "' has no initial bag tuple");

    // Bag key of an object: its witness conjunction plus the subtypes of its
    // partners; members of one subtype split into these bags, and resizing
    // keeps every nonempty bag nonempty so the qualitative initial state is
    // preserved across the family.
    auto subtype_of = [&](int obj) -> const Subtype * {
        int t = base.objects[obj].type;
        auto it = bags.subtypes.find(t);
        if (it == bags.subtypes.end())
            return nullptr;
        for (const auto &st : it->second)
            if (std::find(st.members.begin(), st.members.end(), obj) != st.members.end())
                return &st;
        return nullptr;
    };
    auto bag_key = [&](int obj) {
        const Witness &w = witness.at(obj);
        std::string key = std::to_string(w.eavs);
        for (const auto &[t, partner] : w.tuple)
            key += "|" + subtype_of(partner)->name;
        return key;
    };

    // Per subtype: members grouped by bag, in canonical order.
    struct Allocation {
        const Subtype *st = nullptr;
        int target = 0;
        std::map<std::string, std::vector<int>> by_bag;
        std::map<std::string, int> allotted; // bag -> member count after resize
    };
    std::vector<Allocation> allocations;
    for (const auto &[t, sts] : bags.subtypes) {
        for (const auto &st : sts) {
            Allocation a;
            a.st = &st;
            auto it = spec.cardinalities.find(st.name);
            a.target = it == spec.cardinalities.end() ? static_cast<int>(st.members.size())
                                                      : it->second;
            for (int m : st.members)
                a.by_bag[bag_key(m)].push_back(m);
            if (a.target > 0 && a.target < static_cast<int>(a.by_bag.size()))
                throw FamilyConstraintError(
                    "subtype '" + st.name + "' spans " + std::to_string(a.by_bag.size()) +
                    " initial bags; cardinality " + std::to_string(a.target) +
                    " cannot keep each nonempty");
            // Round-robin across bags so every bag keeps at least one member.
            int remaining = a.target;
            for (auto &[key, members] : a.by_bag)
                a.allotted[key] = 0;
            while (remaining > 0) {
                bool progressed = false;
                for (auto &[key, members] : a.by_bag) {
                    if (remaining == 0)
                        break;
                    a.allotted[key]++;
                    remaining--;
                    progressed = true;
                }
                if (!progressed)
                    break;
            }
            allocations.push_back(std::move(a));
        }
    }

    // Multi-type bags must resize consistently across their subtypes.
    std::map<std::string, std::map<std::string, int>> joint; // joint key -> subtype -> size
    for (const auto &a : allocations) {
        for (const auto &[key, members] : a.by_bag) {
            const Witness &w = witness.at(members.front());
            if (w.tuple.size() <= 1)
                continue;
            std::string joint_key = std::to_string(w.eavs);
            for (const auto &[t, partner] : w.tuple)
                joint_key += "|" + subtype_of(partner)->name;
            joint[joint_key][a.st->name] = a.allotted.at(key);
        }
    }
    for (const auto &[key, sizes] : joint) {
        int first = sizes.begin()->second;
        for (const auto &[st_name, n] : sizes)
            if (n != first)
                throw FamilyConstraintError(
                    "initial bag links subtypes that must resize together (bag " + key +
                    "); give them equal cardinalities");
    }

    // Build the new object list: non-baggable objects unchanged, baggable
    // objects kept per allocation plus fresh ones named deterministically.
    TypedTask out = base;
    out.problem_name = base.problem_name + "-fam";
    out.objects.clear();
    out.init.clear();
    out.goal.clear();

    std::set<std::string> taken;
    for (const auto &o : base.objects)
        taken.insert(o.name);

    std::map<std::string, std::vector<std::string>> kept_names;  // subtype|bag -> names
    std::map<std::string, std::vector<std::string>> fresh_names; // subtype|bag -> names
    for (const auto &o : base.objects)
        if (!bags.is_baggable(o.type))
            out.objects.push_back(o);

    for (auto &a : allocations) {
        int fresh_counter = 0;
        for (auto &[key, members] : a.by_bag) {
            int want = a.allotted.at(key);
            auto &kept = kept_names[a.st->name + "#" + key];
            auto &fresh = fresh_names[a.st->name + "#" + key];
            for (int i = 0; i < want && i < static_cast<int>(members.size()); i++) {
                kept.push_back(base.objects[members[i]].name);
                out.objects.push_back(base.objects[members[i]]);
            }
            for (int i = static_cast<int>(members.size()); i < want; i++) {
                std::string name;
                do {
                    name = a.st->name + "-x" + std::to_string(fresh_counter++);
                } while (taken.count(name));
                taken.insert(name);
                fresh.push_back(name);
                out.objects.push_back({name, a.st->type});
            }
        }
    }
    out.finalize();

    // Initial state: boolean atoms over non-baggable objects copy over;
    // baggable tuples are re-instantiated per bag. Multi-type bags pair the
    // participating subtypes' members by position (creation order).
    for (const auto &atom : base.init) {
        bool baggable_arg = false;
        for (int o : atom.args)
            if (bags.is_baggable(base.objects[o].type))
                baggable_arg = true;
        if (!baggable_arg) {
            GroundAtom g = atom;
            for (int &o : g.args)
                o = out.object_index(base.objects[o].name);
            out.init.insert(g);
        }
    }

    std::set<std::string> emitted_bags;
    for (const auto &a : allocations) {
        for (const auto &[key, members] : a.by_bag) {
            const Witness &w = witness.at(members.front());
            std::string joint_key = std::to_string(w.eavs);
            for (const auto &[t, partner] : w.tuple)
                joint_key += "|" + subtype_of(partner)->name;
            if (emitted_bags.count(joint_key))
                continue;
            emitted_bags.insert(joint_key);

            // Sequence of tuples: position i pairs the i-th member of each
            // participating subtype's bag.
            int n = a.allotted.at(key);
            for (int i = 0; i < n; i++) {
                std::map<int, int> binding; // type -> new object id
                for (const auto &[t, partner] : w.tuple) {
                    const Subtype *pst = subtype_of(partner);
                    std::string pkey = pst->name + "#" + bag_key(partner);
                    const auto &kept = kept_names[pkey];
                    const auto &fresh = fresh_names[pkey];
                    std::string name = i < static_cast<int>(kept.size())
                                           ? kept[i]
                                           : fresh[i - static_cast<int>(kept.size())];
                    binding[t] = out.object_index(name);
                }
                for (const auto &tv : bags.eavs[w.eavs].atoms) {
                    GroundAtom g;
                    g.predicate = tv.predicate;
                    for (int arg : tv.args) {
                        if (TVAtom::is_var(arg))
                            g.args.push_back(binding.at(TVAtom::var_type(arg)));
                        else
                            g.args.push_back(out.object_index(base.objects[arg].name));
                    }
                    out.init.insert(g);
                }
            }
        }
    }

    // Goal: atoms with no baggable argument copy over; each subtype's goal
    // signature is replicated onto its final members.
    for (const auto &atom : base.goal) {
        bool baggable_arg = false;
        for (int o : atom.args)
            if (bags.is_baggable(base.objects[o].type))
                baggable_arg = true;
        if (!baggable_arg) {
            GroundAtom g = atom;
            for (int &o : g.args)
                o = out.object_index(base.objects[o].name);
            out.goal.insert(g);
        }
    }
    for (const auto &a : allocations) {
        int rep = a.st->members.front();
        // Signature patterns of the representative: (predicate, position,
        // other argument names).
        std::vector<std::tuple<int, int, std::vector<std::string>>> patterns;
        for (const auto &atom : base.goal) {
            for (std::size_t pos = 0; pos < atom.args.size(); pos++) {
                if (atom.args[pos] != rep)
                    continue;
                std::vector<std::string> others;
                for (std::size_t k = 0; k < atom.args.size(); k++)
                    others.push_back(k == pos ? "" : base.objects[atom.args[k]].name);
                patterns.emplace_back(atom.predicate, static_cast<int>(pos), others);
            }
        }
        std::vector<std::string> final_members;
        for (const auto &[key, members] : a.by_bag) {
            const auto &kept = kept_names[a.st->name + "#" + key];
            const auto &fresh = fresh_names[a.st->name + "#" + key];
            final_members.insert(final_members.end(), kept.begin(), kept.end());
            final_members.insert(final_members.end(), fresh.begin(), fresh.end());
        }
        for (const auto &member : final_members) {
            for (const auto &[pred, pos, others] : patterns) {
                GroundAtom g;
                g.predicate = pred;
                for (std::size_t k = 0; k < others.size(); k++) {
                    const std::string &name = static_cast<int>(k) == pos ? member : others[k];
                    int id = out.object_index(name);
                    if (id < 0)
                        throw FamilyConstraintError("goal references object '" + name +
                                                    "' dropped by the resize");
                    g.args.push_back(id);
                }
                out.goal.insert(g);
            }
        }
    }
    return out;
}

} // namespace bagplan

#include "bagplan/abstraction.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <set>

namespace bagplan {

namespace {

int subtype_index_of(const BagStructure &bags, int type, int object) {
    const auto &sts = bags.subtypes.at(type);
    for (std::size_t i = 0; i < sts.size(); i++)
        if (std::find(sts[i].members.begin(), sts[i].members.end(), object) != sts[i].members.end())
            return static_cast<int>(i);
    return -1;
}

// Every subtype assignment over the eavs' type set, lexicographic.
void for_each_assignment(const BagStructure &bags, const std::vector<int> &types,
                         const std::function<void(const std::vector<std::pair<int, int>> &)> &f) {
    std::vector<std::pair<int, int>> sts;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == types.size()) {
            f(sts);
            return;
        }
        int t = types[i];
        for (std::size_t k = 0; k < bags.subtypes.at(t).size(); k++) {
            sts.emplace_back(t, static_cast<int>(k));
            rec(i + 1);
            sts.pop_back();
        }
    };
    rec(0);
}

GroundAtom instantiate(const TVAtom &atom, const std::map<int, int> &binding) {
    GroundAtom g;
    g.predicate = atom.predicate;
    for (int a : atom.args)
        g.args.push_back(TVAtom::is_var(a) ? binding.at(TVAtom::var_type(a)) : a);
    return g;
}

} // namespace

std::vector<NumericVariable> build_numeric_variables(const TypedTask &task,
                                                     const BagStructure &bags) {
    std::vector<NumericVariable> vars;
    for (std::size_t ei = 0; ei < bags.eavs.size(); ei++) {
        const auto &e = bags.eavs[ei];
        for_each_assignment(bags, e.types, [&](const std::vector<std::pair<int, int>> &sts) {
            NumericVariable v;
            v.id = static_cast<int>(vars.size());
            v.eavs = static_cast<int>(ei);
            v.sts = sts;
            std::string stnames;
            for (const auto &[t, k] : sts) {
                if (!stnames.empty())
                    stnames += "+";
                stnames += bags.subtypes.at(t)[k].name;
                v.subtype_names.push_back(bags.subtypes.at(t)[k].name);
            }
            for (const auto &atom : e.atoms)
                v.eavs_atoms.push_back(to_string(task, atom));
            v.name = "N" + std::to_string(v.id) + "__" + stnames + "__" + e.name;
            vars.push_back(std::move(v));
        });
    }
    return vars;
}

std::vector<BooleanVariable> build_boolean_variables(const TypedTask &task,
                                                     const GroundTask &ground,
                                                     const BagStructure &bags) {
    std::vector<BooleanVariable> vars;
    for (std::size_t p = 0; p < task.predicates.size(); p++) {
        bool nonbaggable = true;
        for (int pt : task.predicates[p].param_types)
            for (int b : bags.baggable)
                if (task.type_admits(pt, b))
                    nonbaggable = false;
        if (!nonbaggable)
            continue;
        for (const auto &atom : ground.atoms) {
            if (atom.predicate != static_cast<int>(p))
                continue;
            BooleanVariable v;
            v.id = static_cast<int>(vars.size());
            v.atom = atom;
            v.name = task.atom_to_string(atom);
            vars.push_back(std::move(v));
        }
    }
    return vars;
}

RefinementMapping build_mapping(const TypedTask &task, const BagStructure &bags,
                                const BqnpProblem &problem) {
    RefinementMapping m;
    for (const auto &v : problem.numerics) {
        CounterFormula f;
        const auto &e = bags.eavs[v.eavs];
        f.types = e.types;
        f.atoms = e.atoms;
        for (const auto &[t, k] : v.sts) {
            f.subtype_names.push_back(bags.subtypes.at(t)[k].name);
            f.members.push_back(bags.subtypes.at(t)[k].members);
        }
        m.counters.push_back(std::move(f));
    }
    for (const auto &b : problem.booleans)
        m.boolean_atoms.push_back(b.atom);
    for (const auto &op : problem.ops) {
        ConcretizationRule r;
        r.schema = op.schema;
        r.args = op.args;
        r.vars = op.vars;
        const auto &schema = task.actions[op.schema];
        for (const auto &atom : schema.pre) {
            TVAtom tv;
            tv.predicate = atom.predicate;
            for (int p : atom.args) {
                if (op.args[p] >= 0)
                    tv.args.push_back(op.args[p]);
                else
                    tv.args.push_back(TVAtom::type_var(schema.param_types[p]));
            }
            r.pre_atoms.push_back(std::move(tv));
        }
        m.rules.push_back(std::move(r));
    }
    return m;
}

int eval_counter(const CounterFormula &formula, const Bitset &state, const GroundTask &ground) {
    int count = 0;
    std::map<int, int> binding;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == formula.types.size()) {
            for (const auto &atom : formula.atoms) {
                int idx = ground.atom_index(instantiate(atom, binding));
                if (idx < 0 || !state.test(static_cast<std::size_t>(idx)))
                    return;
            }
            count++;
            return;
        }
        for (int obj : formula.members[i]) {
            binding[formula.types[i]] = obj;
            rec(i + 1);
        }
    };
    rec(0);
    return count;
}

bool counter_statically_possible(const CounterFormula &formula, const Bitset &init,
                                 const GroundTask &ground) {
    std::vector<TVAtom> static_atoms;
    for (const auto &atom : formula.atoms)
        if (ground.static_predicate[atom.predicate])
            static_atoms.push_back(atom);
    if (static_atoms.empty())
        return true;
    std::map<int, int> binding;
    bool found = false;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (found)
            return;
        if (i == formula.types.size()) {
            for (const auto &atom : static_atoms) {
                int idx = ground.atom_index(instantiate(atom, binding));
                if (idx < 0 || !init.test(static_cast<std::size_t>(idx)))
                    return;
            }
            found = true;
            return;
        }
        for (int obj : formula.members[i]) {
            binding[formula.types[i]] = obj;
            rec(i + 1);
            if (found)
                return;
        }
    };
    rec(0);
    return found;
}

std::vector<QLiteral> abstract_init(const GroundTask &ground, const BqnpProblem &problem,
                                    const RefinementMapping &mapping) {
    std::vector<QLiteral> init;
    for (const auto &v : problem.numerics) {
        int c = eval_counter(mapping.counters[v.id], ground.init, ground);
        init.push_back({true, v.id, c > 0});
    }
    for (const auto &b : problem.booleans) {
        int idx = ground.atom_index(b.atom);
        init.push_back({false, b.id, idx >= 0 && ground.init.test(static_cast<std::size_t>(idx))});
    }
    return init;
}

std::vector<QLiteral> abstract_goal(const TypedTask &task, const BagStructure &bags,
                                    const BqnpProblem &problem) {
    std::set<QLiteral> goal;
    std::map<GroundAtom, int> boolean_by_atom;
    for (const auto &b : problem.booleans)
        boolean_by_atom[b.atom] = b.id;

    for (const auto &g : task.goal) {
        std::vector<std::pair<int, int>> baggable_args; // (position, type)
        for (std::size_t pos = 0; pos < g.args.size(); pos++) {
            int t = task.objects[g.args[pos]].type;
            if (bags.is_baggable(t))
                baggable_args.emplace_back(static_cast<int>(pos), t);
        }
        if (baggable_args.empty()) {
            auto it = boolean_by_atom.find(g);
            if (it == boolean_by_atom.end())
                throw Error("internal: goal atom missing from boolean variables");
            goal.insert({false, it->second, true});
            continue;
        }
        // The goal atom with baggable arguments as type variables; numeric
        // variables whose conjunction contains it may stay positive, all
        // other variables of the object's subtype must reach zero.
        TVAtom target;
        target.predicate = g.predicate;
        for (std::size_t pos = 0; pos < g.args.size(); pos++) {
            int t = task.objects[g.args[pos]].type;
            if (bags.is_baggable(t))
                target.args.push_back(TVAtom::type_var(t));
            else
                target.args.push_back(g.args[pos]);
        }
        for (const auto &[pos, t] : baggable_args) {
            int st = subtype_index_of(bags, t, g.args[pos]);
            for (const auto &v : problem.numerics) {
                const auto &e = bags.eavs[v.eavs];
                if (!e.involves(t))
                    continue;
                bool st_matches = false;
                for (const auto &[vt, vk] : v.sts)
                    if (vt == t && vk == st)
                        st_matches = true;
                if (!st_matches)
                    continue;
                bool survives =
                    std::find(e.atoms.begin(), e.atoms.end(), target) != e.atoms.end();
                if (!survives)
                    goal.insert({true, v.id, false});
            }
        }
    }
    for (const auto &lit : goal)
        if (goal.count({lit.numeric, lit.var, !lit.positive}))
            throw Error("internal: inconsistent abstract goal on variable " +
                        std::to_string(lit.var));
    return {goal.begin(), goal.end()};
}

namespace {

struct SchemaView {
    std::vector<TVAtom> pre, add, del;
    std::vector<int> args; // object per param, -1 baggable
};

// Instantiates a schema's non-baggable parameters with o and leaves baggable
// parameters as type variables.
SchemaView make_view(const ActionSchema &schema, const std::vector<int> &args) {
    SchemaView view;
    view.args = args;
    auto conv = [&](const SchemaAtom &atom) {
        TVAtom tv;
        tv.predicate = atom.predicate;
        for (int p : atom.args) {
            if (args[p] >= 0)
                tv.args.push_back(args[p]);
            else
                tv.args.push_back(TVAtom::type_var(schema.param_types[p]));
        }
        return tv;
    };
    for (const auto &a : schema.pre)
        view.pre.push_back(conv(a));
    for (const auto &a : schema.add)
        view.add.push_back(conv(a));
    for (const auto &a : schema.del)
        view.del.push_back(conv(a));
    return view;
}

bool is_ground(const TVAtom &atom) {
    for (int a : atom.args)
        if (TVAtom::is_var(a))
            return false;
    return true;
}

// Two atoms of one mutex group clash when they share the group-type argument
// but are not the same atom; both true would break the count-1 property.
bool mutex_conflict(const MutexInvariant &invariant, const TVAtom &added, const TVAtom &held) {
    if (added == held)
        return false;
    for (std::size_t t = 0; t < invariant.groups_per_type.size(); t++) {
        for (const auto &group : invariant.groups_per_type[t]) {
            int sa = group.member_slot(added.predicate);
            int sh = group.member_slot(held.predicate);
            if (sa < 0 || sh < 0)
                continue;
            if (added.args[group.t_position[sa]] == held.args[group.t_position[sh]])
                return true;
        }
    }
    return false;
}

} // namespace

std::vector<AbstractAction> build_abstract_actions(const TypedTask &task,
                                                   const MutexInvariant &invariant,
                                                   const BagStructure &bags,
                                                   const BqnpProblem &problem) {
    std::vector<AbstractAction> ops;
    std::map<GroundAtom, int> boolean_by_atom;
    for (const auto &b : problem.booleans)
        boolean_by_atom[b.atom] = b.id;

    for (std::size_t s = 0; s < task.actions.size(); s++) {
        const auto &schema = task.actions[s];
        std::vector<int> baggable_params, other_params;
        std::set<int> schema_types; // baggable types of the schema
        for (std::size_t p = 0; p < schema.param_types.size(); p++) {
            if (bags.is_baggable(schema.param_types[p])) {
                baggable_params.push_back(static_cast<int>(p));
                schema_types.insert(schema.param_types[p]);
            } else {
                other_params.push_back(static_cast<int>(p));
            }
        }

        // All instantiations of the non-baggable parameters.
        std::vector<std::vector<int>> arg_choices;
        {
            std::vector<int> args(schema.param_types.size(), -1);
            std::function<void(std::size_t)> rec = [&](std::size_t i) {
                if (i == other_params.size()) {
                    arg_choices.push_back(args);
                    return;
                }
                for (int o : task.extent(schema.param_types[other_params[i]])) {
                    args[other_params[i]] = o;
                    rec(i + 1);
                }
            };
            rec(0);
        }

        for (const auto &args : arg_choices) {
            SchemaView view = make_view(schema, args);

            bool noop_pair = false;
            for (const auto &a : view.add)
                for (const auto &d : view.del)
                    if (a == d)
                        noop_pair = true;
            if (noop_pair)
                continue; // ground-level add/delete collision (e.g. self-move)

            std::vector<TVAtom> pre_open;
            std::vector<int> pre_bool;
            bool bool_pre_missing = false;
            for (const auto &a : view.pre) {
                if (is_ground(a)) {
                    GroundAtom g{a.predicate, a.args};
                    auto it = boolean_by_atom.find(g);
                    if (it == boolean_by_atom.end())
                        bool_pre_missing = true;
                    else
                        pre_bool.push_back(it->second);
                } else {
                    pre_open.push_back(a);
                }
            }
            if (bool_pre_missing)
                throw Error("internal: ground precondition atom missing from booleans");

            std::vector<std::pair<int, bool>> bool_eff;
            for (const auto &a : view.add)
                if (is_ground(a))
                    bool_eff.emplace_back(boolean_by_atom.at({a.predicate, a.args}), true);
            for (const auto &a : view.del)
                if (is_ground(a))
                    bool_eff.emplace_back(boolean_by_atom.at({a.predicate, a.args}), false);

            std::vector<TVAtom> add_open, del_open;
            for (const auto &a : view.add)
                if (!is_ground(a))
                    add_open.push_back(a);
            for (const auto &a : view.del)
                if (!is_ground(a))
                    del_open.push_back(a);

            // Suitable tuples: variables with pairwise disjoint type sets
            // jointly covering the schema's baggable types, each contributing
            // at least one of them. A variable may carry extra types beyond
            // the schema (its bag pairs objects across types); the chosen
            // tuple member then fixes those partners too.
            std::vector<std::vector<int>> tuples;
            {
                std::vector<int> tuple;
                std::set<int> used;
                std::function<void()> rec = [&]() {
                    int next = -1;
                    for (int t : schema_types)
                        if (!used.count(t)) {
                            next = t;
                            break;
                        }
                    if (next == -1) {
                        tuples.push_back(tuple);
                        return;
                    }
                    for (const auto &v : problem.numerics) {
                        const auto &e = bags.eavs[v.eavs];
                        if (!e.involves(next))
                            continue;
                        bool overlap = false;
                        for (int t : e.types)
                            if (used.count(t))
                                overlap = true;
                        if (overlap)
                            continue;
                        tuple.push_back(v.id);
                        for (int t : e.types)
                            used.insert(t);
                        rec();
                        for (int t : e.types)
                            used.erase(t);
                        tuple.pop_back();
                    }
                };
                rec();
            }

            for (const auto &tuple : tuples) {
                std::map<int, int> combined_sts; // type -> subtype index
                std::set<TVAtom> combined_atoms;
                for (int vid : tuple) {
                    const auto &v = problem.numerics[vid];
                    for (const auto &[t, k] : v.sts)
                        combined_sts[t] = k;
                    const auto &e = bags.eavs[v.eavs];
                    combined_atoms.insert(e.atoms.begin(), e.atoms.end());
                }

                bool entailed = true;
                for (const auto &a : pre_open)
                    if (!combined_atoms.count(a))
                        entailed = false;
                if (!entailed)
                    continue;

                AbstractAction op;
                op.schema = static_cast<int>(s);
                op.args = args;
                op.vars = tuple;
                std::sort(op.vars.begin(), op.vars.end());
                op.bool_eff = bool_eff;
                std::sort(op.bool_eff.begin(), op.bool_eff.end());
                op.bool_eff.erase(std::unique(op.bool_eff.begin(), op.bool_eff.end()),
                                  op.bool_eff.end());

                for (int b : pre_bool)
                    op.pre.push_back({false, b, true});
                for (int vid : op.vars)
                    op.pre.push_back({true, vid, true});
                std::sort(op.pre.begin(), op.pre.end());
                op.pre.erase(std::unique(op.pre.begin(), op.pre.end()), op.pre.end());

                // dec(N_i) when the action falsifies the variable's
                // conjunction: it deletes one of its atoms, or adds an atom
                // that clashes with one under a mutex group.
                for (int vid : op.vars) {
                    const auto &e = bags.eavs[problem.numerics[vid].eavs];
                    bool dec = false;
                    for (const auto &a : e.atoms) {
                        if (std::find(del_open.begin(), del_open.end(), a) != del_open.end())
                            dec = true;
                        for (const auto &q : add_open)
                            if (mutex_conflict(invariant, q, a))
                                dec = true;
                    }
                    if (dec)
                        op.decs.push_back(vid);
                }

                // inc(N') for variables whose conjunction becomes true: the
                // leftover atoms of the tuple plus the adds entail it, under
                // the subtype assignment the tuple already fixes.
                std::set<TVAtom> pool;
                for (const auto &a : combined_atoms)
                    if (std::find(del_open.begin(), del_open.end(), a) == del_open.end())
                        pool.insert(a);
                for (const auto &a : add_open)
                    pool.insert(a);
                for (const auto &v2 : problem.numerics) {
                    if (std::find(op.vars.begin(), op.vars.end(), v2.id) != op.vars.end())
                        continue;
                    bool sts_ok = true;
                    for (const auto &[t, k] : v2.sts) {
                        auto it = combined_sts.find(t);
                        if (it == combined_sts.end() || it->second != k)
                            sts_ok = false;
                    }
                    if (!sts_ok)
                        continue;
                    const auto &e2 = bags.eavs[v2.eavs];
                    bool all_in = true;
                    for (const auto &a : e2.atoms)
                        if (!pool.count(a))
                            all_in = false;
                    if (!all_in)
                        continue;
                    // An entailed conjunction must be genuinely made true by
                    // an added atom: a maximal conjunction cannot hide inside
                    // the tuple's own atoms.
                    bool via_add = false;
                    for (const auto &a : e2.atoms)
                        if (std::find(add_open.begin(), add_open.end(), a) != add_open.end())
                            via_add = true;
                    if (!via_add)
                        throw Error("internal: entailed conjunction not established by an add");
                    op.incs.push_back(v2.id);
                }

                std::set<int> touched;
                for (int v : op.decs)
                    if (!touched.insert(v).second)
                        throw Error("internal: variable decremented twice by one action");
                for (int v : op.incs)
                    if (!touched.insert(v).second)
                        throw Error("internal: variable both inc'd and dec'd by one action");

                op.name = schema.name + "(";
                bool first = true;
                for (int vid : op.vars) {
                    if (!first)
                        op.name += ",";
                    op.name += problem.numerics[vid].name;
                    first = false;
                }
                for (std::size_t p = 0; p < args.size(); p++) {
                    if (args[p] < 0)
                        continue;
                    if (!first)
                        op.name += ",";
                    op.name += task.objects[args[p]].name;
                    first = false;
                }
                op.name += ")";
                op.id = static_cast<int>(ops.size());
                ops.push_back(std::move(op));
            }
        }
    }
    return ops;
}

void prune_facts(BqnpProblem &problem, RefinementMapping &mapping, const GroundTask &ground) {
    // Frozen booleans: variables over static atoms keep their initial truth.
    std::map<int, bool> frozen; // old boolean id -> truth
    std::vector<int> bool_remap(problem.booleans.size(), -1);
    std::vector<BooleanVariable> kept_bools;
    std::vector<GroundAtom> kept_bool_atoms;
    for (const auto &b : problem.booleans) {
        int idx = ground.atom_index(b.atom);
        if (ground.static_atom[idx]) {
            frozen[b.id] = ground.init.test(static_cast<std::size_t>(idx));
        } else {
            bool_remap[b.id] = static_cast<int>(kept_bools.size());
            kept_bools.push_back(b);
            kept_bools.back().id = bool_remap[b.id];
            kept_bool_atoms.push_back(mapping.boolean_atoms[b.id]);
        }
    }

    // Numeric variables whose conjunction conflicts with the static truths
    // count nothing, ever.
    std::vector<int> num_remap(problem.numerics.size(), -1);
    std::vector<NumericVariable> kept_nums;
    std::vector<CounterFormula> kept_counters;
    for (const auto &v : problem.numerics) {
        if (counter_statically_possible(mapping.counters[v.id], ground.init, ground)) {
            num_remap[v.id] = static_cast<int>(kept_nums.size());
            kept_nums.push_back(v);
            kept_nums.back().id = num_remap[v.id];
            kept_counters.push_back(mapping.counters[v.id]);
        }
    }

    std::vector<AbstractAction> kept_ops;
    std::vector<ConcretizationRule> kept_rules;
    for (std::size_t i = 0; i < problem.ops.size(); i++) {
        AbstractAction op = problem.ops[i];
        bool drop = false;
        std::vector<QLiteral> pre;
        for (const auto &lit : op.pre) {
            if (lit.numeric) {
                if (num_remap[lit.var] < 0)
                    drop = true;
                else
                    pre.push_back({true, num_remap[lit.var], lit.positive});
            } else if (auto it = frozen.find(lit.var); it != frozen.end()) {
                if (it->second != lit.positive)
                    drop = true; // contradicts a frozen truth
            } else {
                pre.push_back({false, bool_remap[lit.var], lit.positive});
            }
        }
        if (drop)
            continue;
        op.pre = std::move(pre);
        for (auto &[b, val] : op.bool_eff)
            b = bool_remap[b]; // static predicates never occur in effects
        for (int &v : op.vars)
            v = num_remap[v];
        for (int &v : op.decs)
            v = num_remap[v];
        for (int &v : op.incs) {
            v = num_remap[v];
            if (v < 0)
                throw Error("internal: pruned variable incremented by surviving action");
        }
        op.id = static_cast<int>(kept_ops.size());
        kept_rules.push_back(mapping.rules[i]);
        kept_rules.back().vars = op.vars;
        kept_ops.push_back(std::move(op));
    }

    std::vector<QLiteral> init;
    for (const auto &lit : problem.init) {
        if (lit.numeric) {
            if (num_remap[lit.var] >= 0)
                init.push_back({true, num_remap[lit.var], lit.positive});
        } else if (!frozen.count(lit.var)) {
            init.push_back({false, bool_remap[lit.var], lit.positive});
        }
    }
    std::vector<QLiteral> goal;
    for (const auto &lit : problem.goal) {
        if (lit.numeric) {
            if (num_remap[lit.var] >= 0)
                goal.push_back({true, num_remap[lit.var], lit.positive});
            // a variable that is identically zero already satisfies N=0
        } else if (auto it = frozen.find(lit.var); it != frozen.end()) {
            if (it->second != lit.positive)
                throw GoalImpossibleError("goal requires a static atom with the opposite "
                                          "truth value in the initial state");
        } else {
            goal.push_back({false, bool_remap[lit.var], lit.positive});
        }
    }

    problem.booleans = std::move(kept_bools);
    problem.numerics = std::move(kept_nums);
    problem.ops = std::move(kept_ops);
    problem.init = std::move(init);
    problem.goal = std::move(goal);
    mapping.boolean_atoms = std::move(kept_bool_atoms);
    mapping.counters = std::move(kept_counters);
    mapping.rules = std::move(kept_rules);
}

AbstractionResult abstract_task(const TypedTask &task, const AbstractOptions &options) {
    auto start = std::chrono::steady_clock::now();
    AbstractionResult r;
    r.ground = ground(task);

    r.invariant = infer_mutex_groups(task);
    verify_and_filter(task, r.invariant);
    for (const auto &[t, p] : r.invariant.ungrouped)
        log_warn("predicate '" + task.predicates[p].name + "' of single type '" + task.types[t] +
                 "' is covered by no mutex group");

    auto violations = check_init(task, r.invariant);
    if (!violations.empty()) {
        const auto &v = violations.front();
        throw InitViolationError(
            "initial state violates mutex group " +
            describe(task, r.invariant.groups_per_type[v.type][v.group_index]) + " on object '" +
            task.objects[v.object].name + "' (count " + std::to_string(v.count) + ")");
    }

    r.bags = analyze_bags(task, r.invariant);
    if (r.bags.baggable.empty())
        throw NoBaggableTypesError("domain has no baggable types");
    if (!r.bags.proper) {
        const auto &v = r.bags.violations.front();
        std::string msg = "domain is not proper: action '" + task.actions[v.schema].name +
                          "' changes " + to_string(task, v.first) + " and " +
                          to_string(task, v.second) + " of " + r.bags.eavs[v.eavs_index].name +
                          " without a bridging change";
        if (!options.force)
            throw NotProperError(msg);
        log_warn(msg + " (--force given, soundness guarantees void)");
    }

    r.problem.numerics = build_numeric_variables(task, r.bags);
    r.problem.booleans = build_boolean_variables(task, r.ground, r.bags);
    r.mapping = build_mapping(task, r.bags, r.problem);
    r.problem.init = abstract_init(r.ground, r.problem, r.mapping);
    r.problem.goal = abstract_goal(task, r.bags, r.problem);
    r.problem.ops = build_abstract_actions(task, r.invariant, r.bags, r.problem);
    r.mapping = build_mapping(task, r.bags, r.problem); // now includes per-op rules
    if (options.prune_facts)
        prune_facts(r.problem, r.mapping, r.ground);

    r.stats.baggable_types = static_cast<int>(r.bags.baggable.size());
    int ob = 0;
    for (int t : r.bags.baggable)
        ob += static_cast<int>(task.extent(t).size());
    r.stats.objects_baggable = ob;
    r.stats.objects_nonbaggable = static_cast<int>(task.objects.size()) - ob;
    r.stats.ground_atoms = static_cast<int>(r.ground.atoms.size());
    int facts = 0;
    for (std::size_t i = 0; i < r.ground.atoms.size(); i++)
        if (r.ground.static_atom[i] && r.ground.init.test(i))
            facts++;
    r.stats.facts = facts;
    r.stats.ground_actions = static_cast<int>(r.ground.actions.size());
    r.stats.subtypes = r.bags.subtype_count();
    r.stats.numeric_vars = static_cast<int>(r.problem.numerics.size());
    r.stats.boolean_vars = static_cast<int>(r.problem.booleans.size());
    r.stats.ops = static_cast<int>(r.problem.ops.size());
    r.stats.abs_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::string qliteral_to_string(const BqnpProblem &problem, const QLiteral &lit) {
    if (lit.numeric)
        return problem.numerics[lit.var].name + (lit.positive ? ">0" : "=0");
    return (lit.positive ? "" : "!") + problem.booleans[lit.var].name;
}

} // namespace bagplan

#include "bagplan/abstraction.hpp"
#include "bagplan/json_io.hpp"
#include "bagplan/parser.hpp"
#include "bagplan/refine.hpp"
#include "bagplan/solver.hpp"
#include "corpus.hpp"

#include <doctest.h>

#include <functional>
#include <map>
#include <random>
#include <set>

using namespace bagplan;

namespace {

std::vector<int> applicable_actions(const GroundTask &g, const Bitset &state) {
    std::vector<int> result;
    for (std::size_t i = 0; i < g.actions.size(); i++)
        if (g.applicable(state, static_cast<int>(i)))
            result.push_back(static_cast<int>(i));
    return result;
}

// Random applicable-action walk from the initial state.
template <typename Visit>
void random_walks(const GroundTask &g, int walks, int depth, uint64_t seed, Visit visit) {
    std::mt19937_64 rng(seed);
    for (int w = 0; w < walks; w++) {
        Bitset state = g.init;
        visit(state);
        for (int d = 0; d < depth; d++) {
            auto apps = applicable_actions(g, state);
            if (apps.empty())
                break;
            state = g.apply(state, apps[rng() % apps.size()]);
            visit(state);
        }
    }
}

int group_count(const TypedTask &t, const PredicateGroup &group, const Bitset &state,
                const GroundTask &g, int object) {
    (void)t;
    int count = 0;
    for (std::size_t i = 0; i < g.atoms.size(); i++) {
        if (!state.test(i))
            continue;
        const auto &atom = g.atoms[i];
        int slot = group.member_slot(atom.predicate);
        if (slot >= 0 && atom.args[group.t_position[slot]] == object)
            count++;
    }
    return count;
}

} // namespace

TEST_CASE("mutex invariants hold along random executions") {
    for (const auto &entry : kCorpus) {
        TypedTask t = load_task(entry.dir, entry.problem);
        MutexInvariant inv = infer_mutex_groups(t);
        verify_and_filter(t, inv);
        REQUIRE(check_init(t, inv).empty());
        GroundTask g = ground(t);
        INFO(entry.dir);
        random_walks(g, 20, 50, 0xabcd, [&](const Bitset &state) {
            for (std::size_t ty = 0; ty < inv.groups_per_type.size(); ty++) {
                for (const auto &group : inv.groups_per_type[ty]) {
                    for (int e : t.extent(static_cast<int>(ty)))
                        CHECK(group_count(t, group, state, g, e) == 1);
                }
            }
        });
    }
}

TEST_CASE("each baggable object sits in exactly one bag tuple (general mutex)") {
    for (const auto &entry : kCorpus) {
        TypedTask t = load_task(entry.dir, entry.problem);
        auto r = abstract_task(t);
        INFO(entry.dir);
        // count, per object, the witness tuples over all extended AVSes
        auto witnesses = [&](const Bitset &state, int object, int type) {
            int total = 0;
            for (const auto &e : r.bags.eavs) {
                if (!e.involves(type))
                    continue;
                std::map<int, int> binding;
                std::function<void(std::size_t)> rec = [&](std::size_t i) {
                    if (i == e.types.size()) {
                        if (binding.at(type) != object)
                            return;
                        for (const auto &a : e.atoms) {
                            GroundAtom ga;
                            ga.predicate = a.predicate;
                            for (int arg : a.args)
                                ga.args.push_back(TVAtom::is_var(arg)
                                                      ? binding.at(TVAtom::var_type(arg))
                                                      : arg);
                            int idx = r.ground.atom_index(ga);
                            if (idx < 0 || !state.test(static_cast<std::size_t>(idx)))
                                return;
                        }
                        total++;
                        return;
                    }
                    for (int obj : t.extent(e.types[i])) {
                        binding[e.types[i]] = obj;
                        rec(i + 1);
                    }
                    binding.erase(e.types[i]);
                };
                rec(0);
            }
            return total;
        };
        random_walks(r.ground, 10, 50, 0x5eed, [&](const Bitset &state) {
            for (int ty : r.bags.baggable)
                for (int e : t.extent(ty))
                    CHECK(witnesses(state, e, ty) == 1);
        });
    }
}

TEST_CASE("subtype sizes equal the sum of their counters (sum identity)") {
    for (const auto &entry : kCorpus) {
        TypedTask t = load_task(entry.dir, entry.problem);
        AbstractOptions keep;
        keep.prune_facts = false; // the identity ranges over every variable
        auto r = abstract_task(t, keep);
        INFO(entry.dir);
        random_walks(r.ground, 10, 50, 0x50f, [&](const Bitset &state) {
            for (const auto &[ty, sts] : r.bags.subtypes) {
                for (std::size_t k = 0; k < sts.size(); k++) {
                    long sum = 0;
                    for (const auto &v : r.problem.numerics) {
                        bool in_vst = false;
                        for (const auto &[vt, vk] : v.sts)
                            if (vt == ty && vk == static_cast<int>(k) &&
                                r.bags.eavs[v.eavs].involves(ty))
                                in_vst = true;
                        if (in_vst)
                            sum += eval_counter(r.mapping.counters[v.id], state, r.ground);
                    }
                    CHECK(sum == static_cast<long>(sts[k].members.size()));
                }
            }
        });
    }
}

TEST_CASE("the example's black subtype sums to four over its eight counters") {
    TypedTask t = load_task("gripper_hlwb", "prob2-1.pddl");
    AbstractOptions keep;
    keep.prune_facts = false;
    auto r = abstract_task(t, keep);
    int black_subtype = -1;
    int ball = t.type_index("ball");
    const auto &sts = r.bags.subtypes.at(ball);
    for (std::size_t k = 0; k < sts.size(); k++)
        if (std::find(sts[k].members.begin(), sts[k].members.end(),
                      t.object_index("b5")) != sts[k].members.end())
            black_subtype = static_cast<int>(k);
    REQUIRE(black_subtype >= 0);
    long sum = 0;
    int vars = 0;
    for (const auto &v : r.problem.numerics) {
        bool in_vst = false;
        for (const auto &[vt, vk] : v.sts)
            if (vt == ball && vk == black_subtype)
                in_vst = true;
        if (in_vst) {
            vars++;
            sum += eval_counter(r.mapping.counters[v.id], r.ground.init, r.ground);
        }
    }
    CHECK(vars == 8);
    CHECK(sum == 4);
}

TEST_CASE("every ground action changes every counter by at most one") {
    for (const auto &entry : kCorpus) {
        TypedTask t = load_task(entry.dir, entry.problem);
        auto r = abstract_task(t);
        INFO(entry.dir);
        random_walks(r.ground, 8, 30, 0xc0de, [&](const Bitset &state) {
            auto before = counter_values(state, r.mapping, r.ground);
            for (int a : applicable_actions(r.ground, state)) {
                Bitset next = r.ground.apply(state, a);
                auto after = counter_values(next, r.mapping, r.ground);
                for (std::size_t v = 0; v < before.size(); v++) {
                    int delta = after[v] - before[v];
                    CHECK(delta >= -1);
                    CHECK(delta <= 1);
                }
            }
        });
    }
}

namespace {

struct SolvedPipeline {
    TypedTask task;
    AbstractionResult abstraction;
    Policy policy;
    GuardedProgram program;
};

SolvedPipeline solved_pipeline(const char *dir, const char *problem) {
    SolvedPipeline p;
    p.task = load_task(dir, problem);
    p.abstraction = abstract_task(p.task);
    SolveResult s = solve(p.abstraction.problem);
    REQUIRE(s.status == SolveStatus::Solved);
    p.policy = s.policy;
    p.program = refine(s.policy, p.abstraction.problem);
    return p;
}

const char *kSolvable[][2] = {{"gripper_sim", "prob1-1.pddl"},
                              {"gripper_hl", "prob1-1.pddl"},
                              {"tyreworld", "prob1-1.pddl"},
                              {"ferry", "prob1-1.pddl"},
                              {"ballpush", "prob2-3.pddl"}};

} // namespace

TEST_CASE("coupled abstract/ground steps keep every counter in lockstep") {
    long paired_steps = 0;
    std::mt19937_64 rng(0xfeed);
    for (const auto &e : kSolvable) {
        SolvedPipeline p = solved_pipeline(e[0], e[1]);
        const auto &mapping = p.abstraction.mapping;
        const auto &g = p.abstraction.ground;
        Bitset low = g.init;
        ConcreteState high;
        high.counters = counter_values(low, mapping, g);
        for (const auto &atom : mapping.boolean_atoms) {
            int idx = g.atom_index(atom);
            high.booleans.push_back(idx >= 0 && low.test(static_cast<std::size_t>(idx)));
        }
        for (int step = 0; step < 400; step++) {
            QState q = high.qstate();
            auto a = p.policy.action(q);
            if (!a)
                break;
            const auto &op = p.abstraction.problem.ops[*a];
            const auto &rule = mapping.rules[*a];
            auto tuples = rule_tuples(rule, mapping, low, g);
            REQUIRE(!tuples.empty()); // pre(m(a)) holds whenever pre(a) does
            int ground_action = rule_ground_action(rule, tuples[rng() % tuples.size()], g);
            low = g.apply(low, ground_action);
            for (const auto &[b, val] : op.bool_eff)
                high.booleans[b] = val;
            for (int v : op.incs)
                high.counters[v]++;
            for (int v : op.decs)
                high.counters[v]--;
            CHECK(counter_values(low, mapping, g) == high.counters);
            paired_steps++;
        }
        CHECK(g.goal_satisfied(low)); // the coupled run ends at the goal
    }
    CHECK(paired_steps >= 50);
}

TEST_CASE("a thousand random paired steps agree on every counter") {
    // Sweep scaled gripper families to accumulate the step budget.
    SolvedPipeline p = solved_pipeline("gripper_sim", "prob1-1.pddl");
    std::mt19937_64 rng(0xf00d);
    long paired_steps = 0;
    for (int balls : {30, 60, 90, 120}) {
        FamilySpec spec;
        spec.cardinalities["ball_st0"] = balls;
        TypedTask member = generate_family(p.task, p.abstraction.bags, spec);
        auto am = abstract_task(member);
        Bitset low = am.ground.init;
        ConcreteState high;
        high.counters = counter_values(low, am.mapping, am.ground);
        for (const auto &atom : am.mapping.boolean_atoms) {
            int idx = am.ground.atom_index(atom);
            high.booleans.push_back(idx >= 0 && low.test(static_cast<std::size_t>(idx)));
        }
        while (true) {
            QState q = high.qstate();
            auto a = p.policy.action(q);
            if (!a)
                break;
            const auto &op = am.problem.ops[*a];
            const auto &rule = am.mapping.rules[*a];
            auto tuples = rule_tuples(rule, am.mapping, low, am.ground);
            REQUIRE(!tuples.empty());
            low = am.ground.apply(low,
                                  rule_ground_action(rule, tuples[rng() % tuples.size()],
                                                     am.ground));
            for (const auto &[b, val] : op.bool_eff)
                high.booleans[b] = val;
            for (int v : op.incs)
                high.counters[v]++;
            for (int v : op.decs)
                high.counters[v]--;
            REQUIRE(counter_values(low, am.mapping, am.ground) == high.counters);
            paired_steps++;
        }
        CHECK(am.ground.goal_satisfied(low));
    }
    CHECK(paired_steps >= 1000);
}

TEST_CASE("exhaustive concretization keeps counters in lockstep on a tiny instance") {
    SolvedPipeline p = solved_pipeline("gripper_sim", "prob1-1.pddl");
    FamilySpec spec;
    spec.cardinalities["ball_st0"] = 2;
    spec.cardinalities["gripper_st0"] = 1;
    TypedTask member = generate_family(p.task, p.abstraction.bags, spec);
    auto am = abstract_task(member);
    // paired search over (ground state, counters) with every tuple choice
    std::set<std::pair<Bitset, std::vector<int>>> seen;
    std::vector<std::pair<Bitset, std::vector<int>>> frontier;
    frontier.push_back({am.ground.init, counter_values(am.ground.init, am.mapping, am.ground)});
    while (!frontier.empty()) {
        auto [low, high] = frontier.back();
        frontier.pop_back();
        if (!seen.insert({low, high}).second)
            continue;
        CHECK(counter_values(low, am.mapping, am.ground) == high);
        QState q = qstate_of(low, am.mapping, am.ground);
        auto a = p.policy.action(q);
        if (!a)
            continue;
        const auto &op = am.problem.ops[*a];
        const auto &rule = am.mapping.rules[*a];
        for (const auto &tuple : rule_tuples(rule, am.mapping, low, am.ground)) {
            Bitset next = am.ground.apply(low, rule_ground_action(rule, tuple, am.ground));
            std::vector<int> high_next = high;
            for (int v : op.incs)
                high_next[v]++;
            for (int v : op.decs)
                high_next[v]--;
            frontier.push_back({next, high_next});
        }
    }
    CHECK(seen.size() > 1);
}

TEST_CASE("guard satisfaction coincides with tuple existence (pre-equivalence)") {
    for (const auto &e : kSolvable) {
        SolvedPipeline p = solved_pipeline(e[0], e[1]);
        const auto &mapping = p.abstraction.mapping;
        INFO(e[0]);
        random_walks(p.abstraction.ground, 10, 30, 0x9e, [&](const Bitset &state) {
            QState q = qstate_of(state, mapping, p.abstraction.ground);
            for (std::size_t i = 0; i < mapping.rules.size(); i++) {
                bool pre_holds = q.satisfies(p.abstraction.problem.ops[i].pre);
                bool tuple_exists =
                    !rule_tuples(mapping.rules[i], mapping, state, p.abstraction.ground)
                         .empty();
                CHECK(pre_holds == tuple_exists);
            }
        });
    }
}

TEST_CASE("the abstract goal holds exactly when the ground goal does") {
    for (const auto &entry : kCorpus) {
        TypedTask t = load_task(entry.dir, entry.problem);
        auto r = abstract_task(t);
        INFO(entry.dir);
        random_walks(r.ground, 15, 60, 0x60a1, [&](const Bitset &state) {
            QState q = qstate_of(state, r.mapping, r.ground);
            CHECK(q.satisfies(r.problem.goal) == r.ground.goal_satisfied(state));
        });
    }
}

TEST_CASE("certified policies halt from every sampled concrete start") {
    for (const auto &e : kSolvable) {
        SolvedPipeline p = solved_pipeline(e[0], e[1]);
        VerifyResult v = verify_policy(p.abstraction.problem, p.policy);
        REQUIRE(v.verdict == PolicyVerdict::Solution);
        std::mt19937_64 rng(0x7e57);
        INFO(e[0]);
        for (int trial = 0; trial < 200; trial++) {
            ConcreteState s0;
            s0.counters.assign(p.abstraction.problem.numerics.size(), 0);
            s0.booleans.assign(p.abstraction.problem.booleans.size(), false);
            for (const auto &lit : p.abstraction.problem.init) {
                if (lit.numeric)
                    s0.counters[lit.var] = lit.positive ? 1 + static_cast<int>(rng() % 20) : 0;
                else
                    s0.booleans[lit.var] = lit.positive;
            }
            SimResult res = simulate(p.abstraction.problem, p.policy, s0, 100000);
            CHECK(res.verdict == SimVerdict::Goal);
            for (int c : res.final_state.counters)
                CHECK(c >= 0);
        }
    }
}

#include "bagplan/refine.hpp"

#include "bagplan/json_io.hpp"
#include "bagplan/parser.hpp"
#include "bagplan/solver.hpp"
#include "corpus.hpp"

#include <doctest.h>

#include <set>

using namespace bagplan;

namespace {

struct Pipeline {
    TypedTask task;
    AbstractionResult abstraction;
    SolveResult solved;
    GuardedProgram program;
};

Pipeline run_pipeline(const std::string &dir, const std::string &problem) {
    Pipeline p;
    p.task = load_task(dir, problem);
    p.abstraction = abstract_task(p.task);
    p.solved = solve(p.abstraction.problem);
    REQUIRE(p.solved.status == SolveStatus::Solved);
    p.program = refine(p.solved.policy, p.abstraction.problem);
    return p;
}

} // namespace

TEST_CASE("refine materializes one rule per policy entry") {
    Pipeline p = run_pipeline("gripper_sim", "prob1-1.pddl");
    CHECK(p.program.rules.size() == p.solved.policy.map.size());
    for (const auto &rule : p.program.rules) {
        auto a = p.solved.policy.action(rule.guard);
        REQUIRE(a.has_value());
        CHECK(*a == rule.op);
    }
}

TEST_CASE("an empty policy refines to an empty program") {
    Policy empty;
    BqnpProblem p;
    CHECK(refine(empty, p).rules.empty());
}

TEST_CASE("executing the refined gripper policy reaches the goal") {
    Pipeline p = run_pipeline("gripper_sim", "prob1-1.pddl");
    ExecResult r = execute(p.program, p.abstraction.mapping, p.abstraction.ground);
    CHECK(r.verdict == ExecVerdict::Goal);
    CHECK(!r.plan.empty());
    ValidationResult v = validate_plan(p.abstraction.ground, r.plan);
    CHECK(v.valid);
}

TEST_CASE("the energy-managing gripper moves all eight balls") {
    Pipeline p = run_pipeline("gripper_hl", "prob1-1.pddl");
    ExecResult r = execute(p.program, p.abstraction.mapping, p.abstraction.ground);
    CHECK(r.verdict == ExecVerdict::Goal);
    CHECK(validate_plan(p.abstraction.ground, r.plan).valid);
    // moving a ball takes pick+drop plus charging; 8 balls need 16 at least
    CHECK(r.plan.size() >= 24);
}

TEST_CASE("an instance already at the goal executes an empty plan") {
    TypedTask d = parse_domain(read_file(data_path("ballpush/domain.pddl")));
    TypedTask done = parse_problem("(define (problem done) (:domain ballpush)"
                                   " (:objects o1 - ball rs ra - room)"
                                   " (:init (at o1 ra)) (:goal (and (at o1 ra))))",
                                   d);
    auto ar = abstract_task(done);
    auto sr = solve(ar.problem);
    REQUIRE(sr.status == SolveStatus::Solved);
    GuardedProgram prog = refine(sr.policy, ar.problem);
    ExecResult r = execute(prog, ar.mapping, ar.ground);
    CHECK(r.verdict == ExecVerdict::Goal);
    CHECK(r.plan.empty());
}

TEST_CASE("direct and incremental counter maintenance agree") {
    Pipeline p = run_pipeline("gripper_sim", "prob1-1.pddl");
    ExecResult direct =
        execute(p.program, p.abstraction.mapping, p.abstraction.ground, TupleChooser::first(),
                1000000, 1000000000L);
    ExecResult incremental =
        execute(p.program, p.abstraction.mapping, p.abstraction.ground, TupleChooser::first(),
                1000000, 0);
    CHECK(direct.verdict == ExecVerdict::Goal);
    CHECK(incremental.verdict == ExecVerdict::Goal);
    CHECK(direct.plan == incremental.plan);
}

TEST_CASE("random tuple choosers still reach the goal") {
    Pipeline p = run_pipeline("ferry", "prob1-1.pddl");
    for (uint64_t seed = 1; seed <= 5; seed++) {
        ExecResult r = execute(p.program, p.abstraction.mapping, p.abstraction.ground,
                               TupleChooser::random(seed));
        CHECK(r.verdict == ExecVerdict::Goal);
        CHECK(validate_plan(p.abstraction.ground, r.plan).valid);
    }
}

TEST_CASE("validate rejects an empty plan on a non-goal instance") {
    TypedTask t = load_task("gripper_sim", "prob1-1.pddl");
    GroundTask g = ground(t);
    ValidationResult v = validate_plan(g, {});
    CHECK(!v.valid);
}

TEST_CASE("validate reports the first inapplicable step") {
    TypedTask t = load_task("gripper_sim", "prob1-1.pddl");
    GroundTask g = ground(t);
    int pick_b1 = g.action_index(1, {t.object_index("b1"), t.object_index("g1"),
                                     t.object_index("r1")});
    int pick_again = g.action_index(1, {t.object_index("b1"), t.object_index("g2"),
                                        t.object_index("r1")});
    REQUIRE(pick_b1 >= 0);
    REQUIRE(pick_again >= 0);
    ValidationResult v = validate_plan(g, {pick_b1, pick_again});
    CHECK(!v.valid);
    CHECK(v.failed_step == 1);
}

TEST_CASE("plan text round-trips through the parser") {
    Pipeline p = run_pipeline("gripper_sim", "prob1-1.pddl");
    ExecResult r = execute(p.program, p.abstraction.mapping, p.abstraction.ground);
    std::string text = plan_to_text(p.abstraction.ground, r.plan);
    std::vector<int> parsed = plan_from_text(text, p.abstraction.ground);
    CHECK(parsed == r.plan);
}

TEST_CASE("family generation resizes subtypes and replicates goals") {
    TypedTask base = load_task("gripper_sim", "prob1-1.pddl");
    auto ar = abstract_task(base);
    FamilySpec spec;
    spec.cardinalities["ball_st0"] = 12;
    spec.cardinalities["gripper_st0"] = 1;
    TypedTask fam = generate_family(base, ar.bags, spec);
    CHECK(fam.extent(fam.type_index("ball")).size() == 12);
    CHECK(fam.extent(fam.type_index("gripper")).size() == 1);
    CHECK(fam.goal.size() == 12);
    // every ball starts in r1 like the template member
    int at = fam.predicate_index("at");
    int r1 = fam.object_index("r1");
    int starts = 0;
    for (const auto &atom : fam.init)
        if (atom.predicate == at && atom.args[1] == r1)
            starts++;
    CHECK(starts == 12);
    // the generated instance is well-formed
    MutexInvariant inv = infer_mutex_groups(fam);
    verify_and_filter(fam, inv);
    CHECK(check_init(fam, inv).empty());
}

TEST_CASE("unchanged cardinalities reproduce the base task") {
    TypedTask base = load_task("gripper_sim", "prob1-1.pddl");
    auto ar = abstract_task(base);
    FamilySpec spec;
    TypedTask fam = generate_family(base, ar.bags, spec);
    CHECK(fam.objects == base.objects);
    CHECK(fam.init == base.init);
    CHECK(fam.goal == base.goal);
}

TEST_CASE("a subtype resized to zero loses its goal atoms") {
    TypedTask base = load_task("ballpush", "prob2-3.pddl");
    auto ar = abstract_task(base);
    // the subtype with goal at ra
    std::string name;
    for (const auto &[t, sts] : ar.bags.subtypes)
        for (const auto &st : sts)
            for (const auto &atom : st.signature_atoms)
                if (base.objects[atom.args[1]].name == "ra")
                    name = st.name;
    REQUIRE(!name.empty());
    FamilySpec spec;
    spec.cardinalities[name] = 0;
    TypedTask fam = generate_family(base, ar.bags, spec);
    int ra = fam.object_index("ra");
    for (const auto &atom : fam.goal)
        CHECK(atom.args[1] != ra);
    CHECK(fam.extent(fam.type_index("ball")).size() == 3);
}

TEST_CASE("an unknown subtype name is rejected") {
    TypedTask base = load_task("gripper_sim", "prob1-1.pddl");
    auto ar = abstract_task(base);
    FamilySpec spec;
    spec.cardinalities["nonsense"] = 3;
    CHECK_THROWS_AS(generate_family(base, ar.bags, spec), FamilyConstraintError);
}

TEST_CASE("multi-type initial bags require linked subtypes to resize together") {
    // A carried pair in the initial state links the ball and gripper bags.
    TypedTask d = parse_domain(read_file(data_path("gripper_sim/domain.pddl")));
    TypedTask base = parse_problem(
        "(define (problem carried) (:domain gripper-sim)"
        " (:objects b1 b2 - ball g1 g2 - gripper r1 r2 - room)"
        " (:init (carry b1 g1) (at b2 r1) (free g2) (at-robby r1))"
        " (:goal (and (at b1 r2) (at b2 r2))))",
        d);
    auto ar = abstract_task(base);
    FamilySpec bad;
    bad.cardinalities["ball_st0"] = 4; // grippers stay at 2: pairing impossible
    CHECK_THROWS_AS(generate_family(base, ar.bags, bad), FamilyConstraintError);

    FamilySpec good;
    good.cardinalities["ball_st0"] = 4;
    good.cardinalities["gripper_st0"] = 4;
    TypedTask fam = generate_family(base, ar.bags, good);
    // each type splits evenly over its two bags: one fresh carried pair
    // joins b1/g1, and init stays mutex-consistent
    MutexInvariant inv = infer_mutex_groups(fam);
    verify_and_filter(fam, inv);
    CHECK(check_init(fam, inv).empty());
    CHECK(fam.extent(fam.type_index("ball")).size() == 4);
    CHECK(fam.extent(fam.type_index("gripper")).size() == 4);
    int carries = 0;
    for (const auto &atom : fam.init)
        if (atom.predicate == fam.predicate_index("carry"))
            carries++;
    CHECK(carries == 2);
}

TEST_CASE("one program solves the whole gripper family") {
    Pipeline p = run_pipeline("gripper_sim", "prob1-1.pddl");
    for (int balls : {2, 4, 8, 20}) {
        for (int grippers : {1, 2}) {
            FamilySpec spec;
            spec.cardinalities["ball_st0"] = balls;
            spec.cardinalities["gripper_st0"] = grippers;
            TypedTask member = generate_family(p.task, p.abstraction.bags, spec);
            GroundTask g = ground(member);
            RefinementMapping mapping = retarget_mapping(p.abstraction.mapping, p.task, member);
            ExecResult r = execute(p.program, mapping, g);
            INFO(balls, " balls, ", grippers, " grippers");
            CHECK(r.verdict == ExecVerdict::Goal);
            CHECK(validate_plan(g, r.plan).valid);
        }
    }
}

TEST_CASE("the retargeted mapping matches the member's own abstraction") {
    Pipeline p = run_pipeline("gripper_sim", "prob1-1.pddl");
    FamilySpec spec;
    spec.cardinalities["ball_st0"] = 7;
    TypedTask member = generate_family(p.task, p.abstraction.bags, spec);
    RefinementMapping retargeted = retarget_mapping(p.abstraction.mapping, p.task, member);
    auto own = abstract_task(member);
    REQUIRE(retargeted.counters.size() == own.mapping.counters.size());
    for (std::size_t i = 0; i < retargeted.counters.size(); i++)
        CHECK(eval_counter(retargeted.counters[i], own.ground.init, own.ground) ==
              eval_counter(own.mapping.counters[i], own.ground.init, own.ground));
}

TEST_CASE("a member with an emptied bag executes once the policy covers its start") {
    TypedTask base = load_task("ballpush", "prob2-3.pddl");
    auto ar = abstract_task(base);
    // the subtype with goal at ra, to be emptied
    std::string ra_subtype;
    for (const auto &[t, sts] : ar.bags.subtypes)
        for (const auto &st : sts)
            for (const auto &atom : st.signature_atoms)
                if (base.objects[atom.args[1]].name == "ra")
                    ra_subtype = st.name;
    REQUIRE(!ra_subtype.empty());
    FamilySpec spec;
    spec.cardinalities[ra_subtype] = 0;
    TypedTask member = generate_family(base, ar.bags, spec);
    GroundTask g = ground(member);
    RefinementMapping mapping = retarget_mapping(ar.mapping, base, member);
    QState member_init = qstate_of(g.init, mapping, g);

    SolveResult sr = solve(ar.problem, {}, {member_init});
    REQUIRE(sr.status == SolveStatus::Solved);
    CHECK(verify_policy(ar.problem, sr.policy, {member_init}).verdict ==
          PolicyVerdict::Solution);
    GuardedProgram program = refine(sr.policy, ar.problem);
    ExecResult r = execute(program, mapping, g);
    CHECK(r.verdict == ExecVerdict::Goal);
    CHECK(validate_plan(g, r.plan).valid);
}

TEST_CASE("choice independence on a tiny instance") {
    Pipeline p = run_pipeline("gripper_sim", "prob1-1.pddl");
    FamilySpec spec;
    spec.cardinalities["ball_st0"] = 2;
    spec.cardinalities["gripper_st0"] = 2;
    TypedTask member = generate_family(p.task, p.abstraction.bags, spec);
    GroundTask g = ground(member);
    RefinementMapping mapping = retarget_mapping(p.abstraction.mapping, p.task, member);
    std::string why;
    CHECK(execute_all_branches(p.program, mapping, g, 100000, &why));
    INFO(why);
}

TEST_CASE("guard evaluation matches the direct counter evaluation") {
    Pipeline p = run_pipeline("ferry", "prob1-1.pddl");
    Bitset state = p.abstraction.ground.init;
    QState q = qstate_of(state, p.abstraction.mapping, p.abstraction.ground);
    auto counters = counter_values(state, p.abstraction.mapping, p.abstraction.ground);
    for (std::size_t i = 0; i < counters.size(); i++)
        CHECK(q.numeric_positive[i] == (counters[i] > 0));
}

TEST_CASE("the full cardinality sweep validates under every chooser mode") {
    Pipeline p = run_pipeline("gripper_sim", "prob1-1.pddl");
    for (int balls : {0, 1, 2, 5, 10}) {
        FamilySpec spec;
        spec.cardinalities["ball_st0"] = balls;
        TypedTask member = generate_family(p.task, p.abstraction.bags, spec);
        GroundTask g = ground(member);
        RefinementMapping mapping = retarget_mapping(p.abstraction.mapping, p.task, member);
        INFO(balls, " balls");
        for (int mode = 0; mode < 2; mode++) {
            TupleChooser chooser = mode ? TupleChooser::random(99) : TupleChooser::first();
            ExecResult r = execute(p.program, mapping, g, chooser);
            CHECK(r.verdict == ExecVerdict::Goal);
            CHECK(validate_plan(g, r.plan).valid);
        }
        if (balls <= 2) {
            std::string why;
            CHECK(execute_all_branches(p.program, mapping, g, 100000, &why));
            INFO(why);
        }
    }
}

TEST_CASE("mapping json round-trips with identical counter semantics") {
    TypedTask t = load_task("gripper_hlwb", "prob2-1.pddl");
    auto r = abstract_task(t);
    std::string text = mapping_to_json(r.mapping, t);
    RefinementMapping loaded = mapping_from_json(text, t);
    CHECK(mapping_to_json(loaded, t) == text);
    REQUIRE(loaded.counters.size() == r.mapping.counters.size());
    for (std::size_t i = 0; i < loaded.counters.size(); i++)
        CHECK(eval_counter(loaded.counters[i], r.ground.init, r.ground) ==
              eval_counter(r.mapping.counters[i], r.ground.init, r.ground));
    CHECK(loaded.rules.size() == r.mapping.rules.size());
}

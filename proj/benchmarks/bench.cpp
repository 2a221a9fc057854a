#include "bagplan/abstraction.hpp"
#include "bagplan/parser.hpp"
#include "bagplan/refine.hpp"
#include "bagplan/solver.hpp"

#include <benchmark/benchmark.h>

#include <string>

using namespace bagplan;

namespace {

std::string data_path(const std::string &rel) {
    return std::string(BAGPLAN_TEST_DATA) + "/" + rel;
}

const TypedTask &hlwb_task() {
    static TypedTask task = parse_files(data_path("gripper_hlwb/domain.pddl"),
                                        data_path("gripper_hlwb/prob2-1.pddl"));
    return task;
}

TypedTask scaled_gripper(int balls) {
    TypedTask base = parse_files(data_path("gripper_sim/domain.pddl"),
                                 data_path("gripper_sim/prob1-1.pddl"));
    AbstractionResult r = abstract_task(base);
    FamilySpec spec;
    spec.cardinalities["ball_st0"] = balls;
    return generate_family(base, r.bags, spec);
}

void BM_ParseDomain(benchmark::State &state) {
    std::string text = read_file(data_path("gripper_hlwb/domain.pddl"));
    for (auto _ : state)
        benchmark::DoNotOptimize(parse_domain(text));
}
BENCHMARK(BM_ParseDomain);

void BM_Ground(benchmark::State &state) {
    TypedTask task = scaled_gripper(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(ground(task));
}
BENCHMARK(BM_Ground)->Arg(8)->Arg(64)->Arg(256);

void BM_MutexInference(benchmark::State &state) {
    const TypedTask &task = hlwb_task();
    for (auto _ : state) {
        MutexInvariant inv = infer_mutex_groups(task);
        verify_and_filter(task, inv);
        benchmark::DoNotOptimize(inv);
    }
}
BENCHMARK(BM_MutexInference);

void BM_BagAnalysis(benchmark::State &state) {
    const TypedTask &task = hlwb_task();
    MutexInvariant inv = infer_mutex_groups(task);
    verify_and_filter(task, inv);
    for (auto _ : state)
        benchmark::DoNotOptimize(analyze_bags(task, inv));
}
BENCHMARK(BM_BagAnalysis);

void BM_Abstract(benchmark::State &state) {
    const TypedTask &task = hlwb_task();
    for (auto _ : state)
        benchmark::DoNotOptimize(abstract_task(task));
}
BENCHMARK(BM_Abstract);

void BM_AbstractScaled(benchmark::State &state) {
    TypedTask task = scaled_gripper(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(abstract_task(task));
}
BENCHMARK(BM_AbstractScaled)->Arg(8)->Arg(64)->Arg(256);

void BM_Solve(benchmark::State &state) {
    TypedTask task = parse_files(data_path("gripper_hl/domain.pddl"),
                                 data_path("gripper_hl/prob1-1.pddl"));
    AbstractionResult r = abstract_task(task);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve(r.problem));
}
BENCHMARK(BM_Solve);

void BM_TerminationTest(benchmark::State &state) {
    TypedTask task = parse_files(data_path("gripper_hl/domain.pddl"),
                                 data_path("gripper_hl/prob1-1.pddl"));
    AbstractionResult r = abstract_task(task);
    SolveResult s = solve(r.problem);
    QTransitionGraph g = build_graph(r.problem, &s.policy);
    for (auto _ : state)
        benchmark::DoNotOptimize(termination_test(g, r.problem));
}
BENCHMARK(BM_TerminationTest);

void BM_ExecuteFamily(benchmark::State &state) {
    TypedTask base = parse_files(data_path("gripper_sim/domain.pddl"),
                                 data_path("gripper_sim/prob1-1.pddl"));
    AbstractionResult r = abstract_task(base);
    SolveResult s = solve(r.problem);
    GuardedProgram program = refine(s.policy, r.problem);
    TypedTask member = scaled_gripper(static_cast<int>(state.range(0)));
    GroundTask g = ground(member);
    RefinementMapping mapping = retarget_mapping(r.mapping, base, member);
    for (auto _ : state)
        benchmark::DoNotOptimize(execute(program, mapping, g));
}
BENCHMARK(BM_ExecuteFamily)->Arg(8)->Arg(64)->Arg(256);

} // namespace

BENCHMARK_MAIN();

#include "bagplan/abstraction.hpp"
#include "bagplan/json_io.hpp"
#include "bagplan/parser.hpp"
#include "bagplan/refine.hpp"
#include "bagplan/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

using namespace bagplan;
namespace fs = std::filesystem;

namespace {

// Exit codes shared by all subcommands.
constexpr int kOk = 0;
constexpr int kGeneric = 1;
constexpr int kParseError = 2;
constexpr int kNotProper = 3;
constexpr int kInvariant = 4;
constexpr int kUnsolvable = 5;
constexpr int kUnknown = 6;
constexpr int kBudget = 7;

class Manifest {
public:
    Manifest(std::string command) {
        doc_["tool"] = "bagplan 0.1.0";
        doc_["command"] = std::move(command);
        doc_["inputs"] = nlohmann::json::object();
        doc_["stages"] = nlohmann::json::array();
    }

    void input(const std::string &path) {
        std::string data = read_file(path);
        char buf[32];
        std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                      static_cast<unsigned long long>(fnv1a64(data.data(), data.size())));
        doc_["inputs"][path] = buf;
    }

    void stage(const std::string &name, double seconds, const std::vector<std::string> &outputs,
               const std::string &verdict) {
        nlohmann::json s;
        s["name"] = name;
        s["millis"] = static_cast<long>(seconds * 1000.0 + 0.5);
        s["outputs"] = outputs;
        s["verdict"] = verdict;
        doc_["stages"].push_back(s);
    }

    void write(const fs::path &dir) const {
        write_file((dir / "manifest.json").string(), doc_.dump(2) + "\n");
    }

private:
    nlohmann::json doc_;
};

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void print_stat_row(const TypedTask &task, const AbstractionStats &s) {
    std::printf("%-14s %-16s |T^B|=%d |O_B|/|O_NB|=%d/%d |P|=%d/#facts=%d |A|=%d "
                "abs=%.4fs #sts=%d |V_N|=%d |V_B|=%d |Ops|=%d\n",
                task.domain_name.c_str(), task.problem_name.c_str(), s.baggable_types,
                s.objects_baggable, s.objects_nonbaggable, s.ground_atoms, s.facts,
                s.ground_actions, s.abs_seconds, s.subtypes, s.numeric_vars, s.boolean_vars,
                s.ops);
}

FamilySpec parse_family_spec(const std::string &text) {
    FamilySpec spec;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw Error("family spec entries look like subtype=count, got '" + item + "'");
        spec.cardinalities[item.substr(0, eq)] = std::stoi(item.substr(eq + 1));
    }
    return spec;
}

// JSON spec file: {"subtype": count, ...}
FamilySpec load_family_spec(const std::string &path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    FamilySpec spec;
    for (auto it = j.begin(); it != j.end(); ++it)
        spec.cardinalities[it.key()] = it.value().get<int>();
    return spec;
}

int classify(const std::exception &e) {
    if (dynamic_cast<const ParseError *>(&e))
        return kParseError;
    if (dynamic_cast<const NotProperError *>(&e) || dynamic_cast<const NoBaggableTypesError *>(&e))
        return kNotProper;
    if (dynamic_cast<const InitViolationError *>(&e) ||
        dynamic_cast<const GoalImpossibleError *>(&e) ||
        dynamic_cast<const MalformedOpError *>(&e))
        return kInvariant;
    return kGeneric;
}

struct AbstractArgs {
    std::string domain, problem, out = ".";
    bool force = false;
    bool no_prune = false;
    std::string emit_mutex, emit_bags, emit_qnp, emit_graph;
};

int cmd_abstract(const AbstractArgs &args) {
    Manifest manifest("abstract");
    manifest.input(args.domain);
    manifest.input(args.problem);
    fs::create_directories(args.out);

    TypedTask task = parse_files(args.domain, args.problem);
    AbstractOptions options;
    options.force = args.force;
    options.prune_facts = !args.no_prune;
    Timer timer;
    AbstractionResult r = abstract_task(task, options);

    fs::path out(args.out);
    std::vector<std::string> outputs;
    write_file((out / "problem.bqnp.json").string(), problem_to_json(r.problem));
    outputs.push_back("problem.bqnp.json");
    write_file((out / "mapping.json").string(), mapping_to_json(r.mapping, task));
    outputs.push_back("mapping.json");
    if (!args.emit_mutex.empty()) {
        write_file(args.emit_mutex,
                   mutex_report_json(task, r.invariant, check_init(task, r.invariant)));
        outputs.push_back(args.emit_mutex);
    }
    if (!args.emit_bags.empty()) {
        write_file(args.emit_bags, bags_report_json(task, r.bags));
        outputs.push_back(args.emit_bags);
    }
    if (!args.emit_qnp.empty()) {
        write_file(args.emit_qnp,
                   problem_to_qnp_text(r.problem, task.domain_name + "-" + task.problem_name));
        outputs.push_back(args.emit_qnp);
    }
    if (!args.emit_graph.empty()) {
        QTransitionGraph g = build_graph(r.problem);
        write_file(args.emit_graph, graph_to_dot(g, r.problem));
        outputs.push_back(args.emit_graph);
    }
    manifest.stage("abstract", timer.seconds(), outputs, "ok");
    manifest.write(out);
    print_stat_row(task, r.stats);
    return kOk;
}

struct SolveArgs {
    std::string problem, out = ".";
    long max_nodes = 20000000;
    double max_seconds = 300.0;
    uint64_t seed = 0; // reserved; the search itself is deterministic
};

int cmd_solve(const SolveArgs &args) {
    Manifest manifest("solve");
    manifest.input(args.problem);
    fs::create_directories(args.out);

    BqnpProblem problem = problem_from_json(read_file(args.problem));
    validate_problem(problem);
    SolveBudget budget;
    budget.max_decisions = args.max_nodes;
    budget.max_seconds = args.max_seconds;
    Timer timer;
    SolveResult r = solve(problem, budget);
    fs::path out(args.out);
    std::vector<std::string> outputs;
    std::string verdict;
    int code = kOk;
    switch (r.status) {
    case SolveStatus::Solved: {
        verdict = "solved";
        write_file((out / "policy.json").string(), policy_to_json(r.policy, problem));
        write_file((out / "certificate.json").string(),
                   certificate_to_json(r.certificate, problem));
        outputs = {"policy.json", "certificate.json"};
        break;
    }
    case SolveStatus::Unsolvable:
        verdict = "unsolvable";
        code = kUnsolvable;
        break;
    case SolveStatus::Unknown:
        verdict = "unknown";
        code = kUnknown;
        break;
    case SolveStatus::Timeout:
        verdict = "budget-exceeded";
        code = kBudget;
        break;
    }
    manifest.stage("solve", timer.seconds(), outputs, verdict);
    manifest.write(out);
    std::printf("solve: %s (decisions=%ld, termination checks=%ld, %.4fs)\n", verdict.c_str(),
                r.decisions, r.termination_checks, timer.seconds());
    return code;
}

struct RefineArgs {
    std::string domain, problem, bqnp, mapping, policy, out = ".";
};

int cmd_refine(const RefineArgs &args) {
    Manifest manifest("refine");
    for (const auto &p : {args.domain, args.problem, args.bqnp, args.mapping, args.policy})
        manifest.input(p);
    fs::create_directories(args.out);

    TypedTask task = parse_files(args.domain, args.problem);
    BqnpProblem problem = problem_from_json(read_file(args.bqnp));
    RefinementMapping mapping = mapping_from_json(read_file(args.mapping), task);
    Policy policy = policy_from_json(read_file(args.policy), problem);
    Timer timer;
    GuardedProgram program = refine(policy, problem);

    // Human-readable guarded program: one rule per line.
    std::ostringstream text;
    for (const auto &rule : program.rules) {
        text << "if {" << rule.guard.to_string(problem) << "}\n  choose "
             << problem.ops[rule.op].name << "\n";
    }
    fs::path out(args.out);
    write_file((out / "program.txt").string(), text.str());
    write_file((out / "program.json").string(), policy_to_json(policy, problem));
    manifest.stage("refine", timer.seconds(), {"program.txt", "program.json"}, "ok");
    manifest.write(out);
    std::printf("refine: %zu guarded rules\n", program.rules.size());
    return kOk;
}

struct ValidateArgs {
    std::string domain, problem, plan;
};

int cmd_validate(const ValidateArgs &args) {
    TypedTask task = parse_files(args.domain, args.problem);
    GroundTask g = ground(task);
    std::vector<int> plan = plan_from_text(read_file(args.plan), g);
    ValidationResult r = validate_plan(g, plan);
    if (r.valid) {
        std::printf("valid plan (%zu steps)\n", plan.size());
        return kOk;
    }
    std::printf("invalid plan: %s\n", r.detail.c_str());
    return kGeneric;
}

struct FamilyArgs {
    std::string domain, problem, family, family_file, out = ".";
};

int cmd_family(const FamilyArgs &args) {
    Manifest manifest("family");
    manifest.input(args.domain);
    manifest.input(args.problem);
    fs::create_directories(args.out);
    TypedTask task = parse_files(args.domain, args.problem);
    AbstractionResult r = abstract_task(task);
    Timer timer;
    if (args.family.empty() == args.family_file.empty())
        throw Error("give exactly one of --family and --family-file");
    FamilySpec spec = args.family.empty() ? load_family_spec(args.family_file)
                                          : parse_family_spec(args.family);
    TypedTask member = generate_family(task, r.bags, spec);
    fs::path out(args.out);
    write_file((out / (member.problem_name + ".pddl")).string(), member.print_problem());
    manifest.stage("family", timer.seconds(), {member.problem_name + ".pddl"}, "ok");
    manifest.write(out);
    std::printf("family: wrote %s.pddl (%zu objects)\n", member.problem_name.c_str(),
                member.objects.size());
    return kOk;
}

struct PipelineArgs {
    std::string domain, problem, out = ".";
    std::vector<std::string> members;
    bool force = false;
    int jobs = 1;
    long max_nodes = 20000000;
    double max_seconds = 300.0;
    uint64_t seed = 0;
    bool have_seed = false;
};

int cmd_pipeline(const PipelineArgs &args) {
    Manifest manifest("pipeline");
    manifest.input(args.domain);
    manifest.input(args.problem);
    fs::create_directories(args.out);
    fs::path out(args.out);

    TypedTask task = parse_files(args.domain, args.problem);
    AbstractOptions options;
    options.force = args.force;
    Timer abs_timer;
    AbstractionResult r = abstract_task(task, options);
    write_file((out / "problem.bqnp.json").string(), problem_to_json(r.problem));
    write_file((out / "mapping.json").string(), mapping_to_json(r.mapping, task));
    manifest.stage("abstract", abs_timer.seconds(), {"problem.bqnp.json", "mapping.json"}, "ok");
    print_stat_row(task, r.stats);

    // Family members are produced up front so the policy search can close
    // over each member's initial qstate.
    struct Member {
        std::string spec;
        TypedTask task;
        GroundTask ground;
        RefinementMapping mapping;
    };
    std::vector<Member> members;
    std::vector<QState> member_inits;
    for (const auto &spec : args.members.empty() ? std::vector<std::string>{""}
                                                 : args.members) {
        Member m;
        m.spec = spec.empty() ? "(base)" : spec;
        m.task = spec.empty() ? task : generate_family(task, r.bags, parse_family_spec(spec));
        m.ground = ground(m.task);
        m.mapping = retarget_mapping(r.mapping, task, m.task);
        member_inits.push_back(qstate_of(m.ground.init, m.mapping, m.ground));
        members.push_back(std::move(m));
    }

    SolveBudget budget;
    budget.max_decisions = args.max_nodes;
    budget.max_seconds = args.max_seconds;
    Timer solve_timer;
    SolveResult solved = solve(r.problem, budget, member_inits);
    if (solved.status != SolveStatus::Solved) {
        const char *verdict = solved.status == SolveStatus::Unsolvable ? "unsolvable"
                              : solved.status == SolveStatus::Unknown  ? "unknown"
                                                                       : "budget-exceeded";
        manifest.stage("solve", solve_timer.seconds(), {}, verdict);
        manifest.write(out);
        std::printf("solve: %s\n", verdict);
        return solved.status == SolveStatus::Unsolvable ? kUnsolvable
               : solved.status == SolveStatus::Unknown  ? kUnknown
                                                        : kBudget;
    }
    write_file((out / "policy.json").string(), policy_to_json(solved.policy, r.problem));
    write_file((out / "certificate.json").string(),
               certificate_to_json(solved.certificate, r.problem));
    manifest.stage("solve", solve_timer.seconds(), {"policy.json", "certificate.json"},
                   "solved");
    std::printf("solve: solved (policy size %zu, %.4fs)\n", solved.policy.map.size(),
                solve_timer.seconds());

    GuardedProgram program = refine(solved.policy, r.problem);

    struct MemberRun {
        std::string spec;
        std::string bags;
        long plan_length = 0;
        std::string verdict;
        bool ok = false;
    };
    std::vector<MemberRun> runs(members.size());

    Timer family_timer;
    std::mutex io_mutex;
    auto run_member = [&](std::size_t i) {
        MemberRun &run = runs[i];
        const Member &m = members[i];
        run.spec = m.spec;
        try {
            std::string sizes;
            for (std::size_t c = 0; c < m.mapping.counters.size(); c++) {
                const auto &f = m.mapping.counters[c];
                for (std::size_t k = 0; k < f.subtype_names.size(); k++) {
                    std::string entry =
                        f.subtype_names[k] + "=" + std::to_string(f.members[k].size()) + " ";
                    if (sizes.find(entry) == std::string::npos)
                        sizes += entry;
                }
            }
            run.bags = sizes;
            TupleChooser chooser =
                args.have_seed ? TupleChooser::random(args.seed + i) : TupleChooser::first();
            ExecResult er = execute(program, m.mapping, m.ground, chooser);
            if (er.verdict != ExecVerdict::Goal) {
                run.verdict = er.verdict == ExecVerdict::Stuck     ? "stuck"
                              : er.verdict == ExecVerdict::NoTuple ? "no-tuple"
                                                                   : "step-limit";
                return;
            }
            ValidationResult vr = validate_plan(m.ground, er.plan);
            run.plan_length = static_cast<long>(er.plan.size());
            if (!vr.valid) {
                run.verdict = "invalid: " + vr.detail;
                return;
            }
            run.verdict = "valid";
            run.ok = true;
            std::lock_guard<std::mutex> lock(io_mutex);
            write_file((out / ("plan_" + std::to_string(i) + ".txt")).string(),
                       plan_to_text(m.ground, er.plan));
        } catch (const std::exception &ex) {
            run.verdict = std::string("error: ") + ex.what();
        }
    };

    if (args.jobs > 1) {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int j = 0; j < args.jobs; j++)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < runs.size(); i = next++)
                    run_member(i);
            });
        for (auto &th : pool)
            th.join();
    } else {
        for (std::size_t i = 0; i < runs.size(); i++)
            run_member(i);
    }

    bool all_ok = true;
    std::printf("%-28s %-44s %10s %s\n", "member", "bag sizes", "plan", "verdict");
    for (const auto &run : runs) {
        std::printf("%-28s %-44s %10ld %s\n", run.spec.c_str(), run.bags.c_str(),
                    run.plan_length, run.verdict.c_str());
        all_ok = all_ok && run.ok;
    }
    manifest.stage("validate-family", family_timer.seconds(), {},
                   all_ok ? "all-valid" : "failures");
    manifest.write(out);
    return all_ok ? kOk : kGeneric;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"STRIPS-to-BQNP abstraction, policy search and refinement"};
    app.require_subcommand(1);

    AbstractArgs abstract_args;
    auto *abstract_cmd =
        app.add_subcommand("abstract", "abstract a PDDL instance into a BQNP problem");
    abstract_cmd->add_option("domain", abstract_args.domain)->required();
    abstract_cmd->add_option("problem", abstract_args.problem)->required();
    abstract_cmd->add_option("-o,--out", abstract_args.out, "output directory");
    abstract_cmd->add_flag("--force", abstract_args.force, "continue on a non-proper domain");
    abstract_cmd->add_flag("--no-prune", abstract_args.no_prune,
                           "keep static atoms as variables");
    abstract_cmd->add_option("--emit-mutex", abstract_args.emit_mutex,
                             "write the mutex group report");
    abstract_cmd->add_option("--emit-bags", abstract_args.emit_bags, "write the bag report");
    abstract_cmd->add_option("--emit-qnp", abstract_args.emit_qnp,
                             "write the flat QNP text format");
    abstract_cmd->add_option("--emit-graph", abstract_args.emit_graph,
                             "write the full qualitative transition graph (dot)");

    SolveArgs solve_args;
    auto *solve_cmd = app.add_subcommand("solve", "search for a BQNP policy");
    solve_cmd->add_option("problem", solve_args.problem)->required();
    solve_cmd->add_option("-o,--out", solve_args.out, "output directory");
    solve_cmd->add_option("--max-nodes", solve_args.max_nodes, "search decision budget");
    solve_cmd->add_option("--max-seconds", solve_args.max_seconds, "wall clock budget");
    solve_cmd->add_option("--seed", solve_args.seed, "reserved");

    RefineArgs refine_args;
    auto *refine_cmd = app.add_subcommand("refine", "refine a policy into a guarded program");
    refine_cmd->add_option("domain", refine_args.domain)->required();
    refine_cmd->add_option("problem", refine_args.problem)->required();
    refine_cmd->add_option("bqnp", refine_args.bqnp)->required();
    refine_cmd->add_option("mapping", refine_args.mapping)->required();
    refine_cmd->add_option("policy", refine_args.policy)->required();
    refine_cmd->add_option("-o,--out", refine_args.out, "output directory");

    ValidateArgs validate_args;
    auto *validate_cmd = app.add_subcommand("validate", "replay a plan under STRIPS semantics");
    validate_cmd->add_option("domain", validate_args.domain)->required();
    validate_cmd->add_option("problem", validate_args.problem)->required();
    validate_cmd->add_option("plan", validate_args.plan)->required();

    FamilyArgs family_args;
    auto *family_cmd = app.add_subcommand("family", "generate a resized family instance");
    family_cmd->add_option("domain", family_args.domain)->required();
    family_cmd->add_option("problem", family_args.problem)->required();
    family_cmd->add_option("--family", family_args.family, "subtype=count,...");
    family_cmd->add_option("--family-file", family_args.family_file,
                           "JSON spec file {\"subtype\": count, ...}");
    family_cmd->add_option("-o,--out", family_args.out, "output directory");

    PipelineArgs pipeline_args;
    auto *pipeline_cmd =
        app.add_subcommand("pipeline", "abstract, solve, refine and validate family members");
    pipeline_cmd->add_option("domain", pipeline_args.domain)->required();
    pipeline_cmd->add_option("problem", pipeline_args.problem)->required();
    pipeline_cmd->add_option("-o,--out", pipeline_args.out, "output directory");
    pipeline_cmd->add_option("--member", pipeline_args.members,
                             "family member spec subtype=count,... (repeatable)");
    pipeline_cmd->add_flag("--force", pipeline_args.force, "continue on a non-proper domain");
    pipeline_cmd->add_option("--jobs", pipeline_args.jobs, "parallel member validation");
    pipeline_cmd->add_option("--max-nodes", pipeline_args.max_nodes, "search decision budget");
    pipeline_cmd->add_option("--max-seconds", pipeline_args.max_seconds, "wall clock budget");
    auto *seed_opt = pipeline_cmd->add_option("--seed", pipeline_args.seed,
                                              "random tuple choice seed (default: first)");

    CLI11_PARSE(app, argc, argv);
    pipeline_args.have_seed = seed_opt->count() > 0;

    try {
        if (abstract_cmd->parsed())
            return cmd_abstract(abstract_args);
        if (solve_cmd->parsed())
            return cmd_solve(solve_args);
        if (refine_cmd->parsed())
            return cmd_refine(refine_args);
        if (validate_cmd->parsed())
            return cmd_validate(validate_args);
        if (family_cmd->parsed())
            return cmd_family(family_args);
        if (pipeline_cmd->parsed())
            return cmd_pipeline(pipeline_args);
    } catch (const std::exception &e) {
        std::fprintf(stderr, "bagplan: %s\n", e.what());
        return classify(e);
    }
    return kGeneric;
}

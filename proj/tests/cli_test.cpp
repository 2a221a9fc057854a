#include "bagplan/json_io.hpp"
#include "bagplan/parser.hpp"

#include "corpus.hpp"
#include "example2.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace bagplan;
namespace fs = std::filesystem;

namespace {

std::string bin() {
    return BAGPLAN_BIN;
}

int run(const std::string &cmdline) {
    int status = std::system((cmdline + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string &name) {
    fs::path dir = fs::temp_directory_path() / ("bagplan_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("abstract writes artifacts and exits zero") {
    fs::path dir = fresh_dir("abstract");
    int code = run(bin() + " abstract " + data_path("gripper_sim/domain.pddl") + " " +
                   data_path("gripper_sim/prob1-1.pddl") + " -o " + dir.string());
    CHECK(code == 0);
    CHECK(fs::exists(dir / "problem.bqnp.json"));
    CHECK(fs::exists(dir / "mapping.json"));
    CHECK(fs::exists(dir / "manifest.json"));
    // the problem file parses and matches the in-process abstraction
    BqnpProblem p = problem_from_json(read_file((dir / "problem.bqnp.json").string()));
    CHECK(p.numerics.size() == 4);
    CHECK(p.ops.size() == 6);
}

TEST_CASE("malformed PDDL exits with the parse code") {
    fs::path dir = fresh_dir("badpddl");
    fs::path bad = dir / "bad.pddl";
    write_file(bad.string(), "(define (domain broken");
    int code = run(bin() + " abstract " + bad.string() + " " + bad.string() + " -o " +
                   dir.string());
    CHECK(code == 2);
}

TEST_CASE("a non-proper domain exits with the not-proper code unless forced") {
    fs::path dir = fresh_dir("nonatomic");
    std::string inputs =
        data_path("nonatomic/domain.pddl") + " " + data_path("nonatomic/prob1.pddl");
    CHECK(run(bin() + " abstract " + inputs + " -o " + dir.string()) == 3);
    CHECK(run(bin() + " abstract " + inputs + " -o " + dir.string() + " --force") == 0);
}

TEST_CASE("solve writes a policy and certificate for the loop problem") {
    fs::path dir = fresh_dir("solve");
    BqnpProblem p = make_loop_problem();
    write_file((dir / "problem.bqnp.json").string(), problem_to_json(p));
    int code = run(bin() + " solve " + (dir / "problem.bqnp.json").string() + " -o " +
                   dir.string());
    CHECK(code == 0);
    CHECK(fs::exists(dir / "policy.json"));
    CHECK(fs::exists(dir / "certificate.json"));
}

TEST_CASE("a trivially inconsistent goal exits with the unsolvable code") {
    fs::path dir = fresh_dir("unsolvable");
    BqnpProblem p = make_loop_problem();
    p.goal.push_back({true, 0, true}); // X=0 and X>0
    write_file((dir / "problem.bqnp.json").string(), problem_to_json(p));
    int code = run(bin() + " solve " + (dir / "problem.bqnp.json").string() + " -o " +
                   dir.string());
    CHECK(code == 5);
}

TEST_CASE("identical inputs produce byte-identical artifacts") {
    fs::path a = fresh_dir("det_a");
    fs::path b = fresh_dir("det_b");
    std::string inputs =
        data_path("gripper_hlwb/domain.pddl") + " " + data_path("gripper_hlwb/prob2-1.pddl");
    REQUIRE(run(bin() + " abstract " + inputs + " -o " + a.string()) == 0);
    REQUIRE(run(bin() + " abstract " + inputs + " -o " + b.string()) == 0);
    CHECK(read_file((a / "problem.bqnp.json").string()) ==
          read_file((b / "problem.bqnp.json").string()));
    CHECK(read_file((a / "mapping.json").string()) ==
          read_file((b / "mapping.json").string()));
    // manifests agree up to the timing fields
    auto strip_millis = [](const std::string &path) {
        auto j = nlohmann::json::parse(read_file(path));
        for (auto &stage : j.at("stages"))
            stage["millis"] = 0;
        return j.dump();
    };
    CHECK(strip_millis((a / "manifest.json").string()) ==
          strip_millis((b / "manifest.json").string()));
}

TEST_CASE("the pipeline validates family members end to end") {
    fs::path dir = fresh_dir("pipeline");
    int code = run(bin() + " pipeline " + data_path("ferry/domain.pddl") + " " +
                   data_path("ferry/prob1-1.pddl") + " -o " + dir.string() +
                   " --member car_st0=2 --member car_st0=9 --jobs 2");
    CHECK(code == 0);
    CHECK(fs::exists(dir / "policy.json"));
    CHECK(fs::exists(dir / "plan_0.txt"));
    CHECK(fs::exists(dir / "plan_1.txt"));
}

TEST_CASE("an impossible family constraint fails the pipeline") {
    fs::path dir = fresh_dir("badfamily");
    int code = run(bin() + " pipeline " + data_path("gripper_sim/domain.pddl") + " " +
                   data_path("gripper_sim/prob1-1.pddl") + " -o " + dir.string() +
                   " --member ball_st0=-1");
    CHECK(code != 0);
}

TEST_CASE("validate accepts pipeline plans and rejects truncated ones") {
    fs::path dir = fresh_dir("validate");
    std::string inputs =
        data_path("tyreworld/domain.pddl") + " " + data_path("tyreworld/prob1-1.pddl");
    REQUIRE(run(bin() + " pipeline " + inputs + " -o " + dir.string()) == 0);
    CHECK(run(bin() + " validate " + inputs + " " + (dir / "plan_0.txt").string()) == 0);
    std::string plan = read_file((dir / "plan_0.txt").string());
    write_file((dir / "half.txt").string(), plan.substr(0, plan.find('\n') + 1));
    CHECK(run(bin() + " validate " + inputs + " " + (dir / "half.txt").string()) == 1);
}

TEST_CASE("family accepts a JSON spec file") {
    fs::path dir = fresh_dir("familyjson");
    write_file((dir / "spec.json").string(), "{\"ball_st0\": 3, \"gripper_st0\": 1}\n");
    int code = run(bin() + " family " + data_path("gripper_sim/domain.pddl") + " " +
                   data_path("gripper_sim/prob1-1.pddl") + " --family-file " +
                   (dir / "spec.json").string() + " -o " + dir.string());
    CHECK(code == 0);
    bool found = false;
    for (const auto &entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".pddl")
            found = true;
    CHECK(found);
}

TEST_CASE("refine materializes the guarded program from artifacts") {
    fs::path dir = fresh_dir("refine");
    std::string inputs =
        data_path("gripper_sim/domain.pddl") + " " + data_path("gripper_sim/prob1-1.pddl");
    REQUIRE(run(bin() + " abstract " + inputs + " -o " + dir.string()) == 0);
    REQUIRE(run(bin() + " solve " + (dir / "problem.bqnp.json").string() + " -o " +
                dir.string()) == 0);
    int code = run(bin() + " refine " + inputs + " " + (dir / "problem.bqnp.json").string() +
                   " " + (dir / "mapping.json").string() + " " +
                   (dir / "policy.json").string() + " -o " + dir.string());
    CHECK(code == 0);
    CHECK(fs::exists(dir / "program.txt"));
    std::string text = read_file((dir / "program.txt").string());
    CHECK(text.find("choose") != std::string::npos);
}

TEST_CASE("the graph dump is a dot digraph") {
    fs::path dir = fresh_dir("dot");
    int code = run(bin() + " abstract " + data_path("tyreworld/domain.pddl") + " " +
                   data_path("tyreworld/prob1-1.pddl") + " -o " + dir.string() +
                   " --emit-graph " + (dir / "graph.dot").string());
    CHECK(code == 0);
    std::string dot = read_file((dir / "graph.dot").string());
    CHECK(dot.rfind("digraph", 0) == 0);
    CHECK(dot.find("->") != std::string::npos);
}

TEST_CASE("manifest lists every produced artifact") {
    fs::path dir = fresh_dir("manifest");
    REQUIRE(run(bin() + " abstract " + data_path("ferry/domain.pddl") + " " +
                data_path("ferry/prob1-1.pddl") + " -o " + dir.string() + " --emit-qnp " +
                (dir / "flat.qnp").string()) == 0);
    std::string manifest = read_file((dir / "manifest.json").string());
    CHECK(manifest.find("problem.bqnp.json") != std::string::npos);
    CHECK(manifest.find("mapping.json") != std::string::npos);
    CHECK(manifest.find("flat.qnp") != std::string::npos);
    CHECK(fs::exists(dir / "flat.qnp"));
}

#include "bagplan/solver.hpp"

#include "bagplan/scc.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <set>

namespace bagplan {

namespace {

bool op_decs(const BqnpProblem &problem, int op, int var) {
    const auto &d = problem.ops[op].decs;
    return std::find(d.begin(), d.end(), var) != d.end();
}

bool op_incs(const BqnpProblem &problem, int op, int var) {
    const auto &d = problem.ops[op].incs;
    return std::find(d.begin(), d.end(), var) != d.end();
}

std::vector<std::vector<int>> adjacency(std::size_t n, const std::vector<QEdge> &edges) {
    std::vector<std::vector<int>> adj(n);
    for (const auto &e : edges)
        adj[e.from].push_back(e.to);
    return adj;
}

} // namespace

SieveResult sieve(const QTransitionGraph &graph, const BqnpProblem &problem) {
    SieveResult result;
    std::vector<QEdge> alive = graph.edges;

    while (true) {
        auto sccs = compute_sccs(adjacency(graph.nodes.size(), alive));
        bool any_cycle = false;
        bool removed_any = false;
        for (const auto &scc : sccs) {
            std::set<int> members(scc.begin(), scc.end());
            std::vector<QEdge> inside;
            for (const auto &e : alive)
                if (members.count(e.from) && members.count(e.to))
                    inside.push_back(e);
            if (inside.empty())
                continue; // trivial component
            any_cycle = true;
            for (std::size_t v = 0; v < problem.numerics.size(); v++) {
                bool dec = false, inc = false;
                for (const auto &e : inside) {
                    if (op_decs(problem, e.op, static_cast<int>(v)))
                        dec = true;
                    if (op_incs(problem, e.op, static_cast<int>(v)))
                        inc = true;
                }
                if (!dec || inc)
                    continue;
                SieveStep step;
                step.scc_nodes = scc;
                std::sort(step.scc_nodes.begin(), step.scc_nodes.end());
                step.variable = static_cast<int>(v);
                std::vector<QEdge> next_alive;
                for (const auto &e : alive) {
                    bool gone = members.count(e.from) && members.count(e.to) &&
                                op_decs(problem, e.op, static_cast<int>(v));
                    if (gone)
                        step.removed.push_back(e);
                    else
                        next_alive.push_back(e);
                }
                alive = std::move(next_alive);
                result.steps.push_back(std::move(step));
                removed_any = true;
                break;
            }
        }
        if (!any_cycle) {
            result.terminating = true;
            break;
        }
        if (!removed_any)
            break;
    }
    result.remaining_edges = alive;
    return result;
}

namespace {

// A nontrivial component is a simple loop when each of its nodes has exactly
// one successor inside the component and the edge count equals the node
// count: one cycle visiting every node once.
bool is_simple_loop(const std::set<int> &members, const std::vector<QEdge> &inside) {
    if (inside.size() != members.size())
        return false;
    std::map<int, int> out_degree;
    for (int n : members)
        out_degree[n] = 0;
    for (const auto &e : inside)
        out_degree[e.from]++;
    for (const auto &[n, d] : out_degree)
        if (d != 1)
            return false;
    return true;
}

} // namespace

TerminationVerdict termination_test(const QTransitionGraph &graph, const BqnpProblem &problem) {
    TerminationVerdict verdict;
    SieveResult sv = sieve(graph, problem);
    verdict.steps = sv.steps;
    verdict.sieve_terminating = sv.terminating;
    if (sv.terminating) {
        verdict.terminating = true;
        return verdict;
    }

    auto sccs = compute_sccs(adjacency(graph.nodes.size(), sv.remaining_edges));
    for (const auto &scc : sccs) {
        std::set<int> members(scc.begin(), scc.end());
        std::vector<QEdge> inside;
        for (const auto &e : sv.remaining_edges)
            if (members.count(e.from) && members.count(e.to))
                inside.push_back(e);
        if (inside.empty())
            continue;
        if (!is_simple_loop(members, inside)) {
            verdict.failing_scc = scc;
            return verdict; // Unknown
        }
        bool certified = false;
        for (std::size_t v = 0; v < problem.numerics.size() && !certified; v++) {
            int dec = 0, inc = 0;
            for (const auto &e : inside) {
                if (op_decs(problem, e.op, static_cast<int>(v)))
                    dec++;
                if (op_incs(problem, e.op, static_cast<int>(v)))
                    inc++;
            }
            if (dec > inc) {
                LoopCertificate cert;
                cert.scc_nodes = scc;
                std::sort(cert.scc_nodes.begin(), cert.scc_nodes.end());
                cert.variable = static_cast<int>(v);
                cert.dec_edges = dec;
                cert.inc_edges = inc;
                verdict.loops.push_back(std::move(cert));
                certified = true;
            }
        }
        if (!certified) {
            verdict.failing_scc = scc;
            return verdict; // Unknown
        }
    }
    verdict.terminating = true;
    return verdict;
}

bool replay_certificate(const QTransitionGraph &graph, const BqnpProblem &problem,
                        const TerminationVerdict &certificate, std::string *why) {
    auto explain = [&](const std::string &msg) {
        if (why)
            *why = msg;
        return false;
    };
    if (!certificate.terminating)
        return explain("certificate does not claim termination");

    std::vector<QEdge> alive = graph.edges;
    for (const auto &step : certificate.steps) {
        auto sccs = compute_sccs(adjacency(graph.nodes.size(), alive));
        std::vector<int> sorted_nodes = step.scc_nodes;
        std::sort(sorted_nodes.begin(), sorted_nodes.end());
        bool found = false;
        for (auto scc : sccs) {
            std::sort(scc.begin(), scc.end());
            if (scc == sorted_nodes)
                found = true;
        }
        if (!found)
            return explain("step component is not a strongly connected component");
        std::set<int> members(sorted_nodes.begin(), sorted_nodes.end());
        std::set<QEdge> removed(step.removed.begin(), step.removed.end());
        std::vector<QEdge> next_alive;
        for (const auto &e : alive) {
            bool inside = members.count(e.from) && members.count(e.to);
            bool decs = op_decs(problem, e.op, step.variable);
            bool incs = op_incs(problem, e.op, step.variable);
            if (inside && incs)
                return explain("removal variable is incremented inside the component");
            if (inside && decs) {
                if (!removed.count(e))
                    return explain("a qualifying dec edge was not removed");
                continue;
            }
            if (removed.count(e))
                return explain("removed edge does not qualify");
            next_alive.push_back(e);
        }
        if (step.removed.empty())
            return explain("step removed no edges");
        alive = std::move(next_alive);
    }

    auto sccs = compute_sccs(adjacency(graph.nodes.size(), alive));
    for (const auto &scc : sccs) {
        std::set<int> members(scc.begin(), scc.end());
        std::vector<QEdge> inside;
        for (const auto &e : alive)
            if (members.count(e.from) && members.count(e.to))
                inside.push_back(e);
        if (inside.empty())
            continue;
        if (certificate.sieve_terminating)
            return explain("graph is cyclic although the certificate claims SIEVE acyclicity");
        std::vector<int> sorted_nodes(scc.begin(), scc.end());
        std::sort(sorted_nodes.begin(), sorted_nodes.end());
        const LoopCertificate *cert = nullptr;
        for (const auto &c : certificate.loops)
            if (c.scc_nodes == sorted_nodes)
                cert = &c;
        if (!cert)
            return explain("surviving component has no loop certificate");
        if (!is_simple_loop(members, inside))
            return explain("certified component is not a simple loop");
        int dec = 0, inc = 0;
        for (const auto &e : inside) {
            if (op_decs(problem, e.op, cert->variable))
                dec++;
            if (op_incs(problem, e.op, cert->variable))
                inc++;
        }
        if (dec != cert->dec_edges || inc != cert->inc_edges)
            return explain("loop certificate edge counts do not match");
        if (!(dec > inc))
            return explain("loop witness does not strictly decrease");
    }
    return true;
}

namespace {

struct BudgetExceeded {};

class Search {
public:
    Search(const BqnpProblem &problem, const SolveBudget &budget,
           const std::vector<QState> &extra_inits)
        : problem_(problem), budget_(budget), extra_inits_(extra_inits),
          deadline_(std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(budget.max_seconds))) {}

    SolveResult run() {
        SolveResult result;
        goal_zero_.assign(problem_.numerics.size(), false);
        for (const auto &lit : problem_.goal)
            if (lit.numeric && !lit.positive)
                goal_zero_[lit.var] = true;
        // A closed terminating policy ends every trajectory in a goal
        // qstate, so any qstate that cannot reach a goal in the full
        // transition graph can never appear in a solution.
        QTransitionGraph full = build_graph(problem_, nullptr, extra_inits_);
        {
            std::vector<std::vector<int>> reverse(full.nodes.size());
            for (const auto &e : full.edges)
                reverse[e.to].push_back(e.from);
            std::vector<bool> reach(full.nodes.size(), false);
            std::vector<int> stack;
            for (std::size_t i = 0; i < full.nodes.size(); i++)
                if (full.is_goal[i]) {
                    reach[i] = true;
                    stack.push_back(static_cast<int>(i));
                }
            while (!stack.empty()) {
                int n = stack.back();
                stack.pop_back();
                for (int p : reverse[n])
                    if (!reach[p]) {
                        reach[p] = true;
                        stack.push_back(p);
                    }
            }
            for (std::size_t i = 0; i < full.nodes.size(); i++)
                if (reach[i])
                    goal_reachable_.insert(full.nodes[i]);
        }

        int init = intern(initial_qstate(problem_));
        queue_.push_back(init);
        queued_[init] = true;
        for (const auto &q : extra_inits_) {
            int id = intern(q);
            if (!queued_[id] && !goal_[id]) {
                queued_[id] = true;
                queue_.push_back(id);
            }
            if (!goal_reachable_.count(q)) {
                result.status = SolveStatus::Unsolvable;
                return result;
            }
        }
        try {
            if (expand(0).kind == Outcome::Solved) {
                result.status = SolveStatus::Solved;
                result.policy = best_policy_;
                result.certificate = best_certificate_;
            } else {
                result.status = saw_termination_failure_ ? SolveStatus::Unknown
                                                         : SolveStatus::Unsolvable;
            }
        } catch (BudgetExceeded &) {
            result.status = SolveStatus::Timeout;
        }
        result.decisions = decisions_;
        result.termination_checks = termination_checks_;
        return result;
    }

private:
    struct Outcome {
        enum Kind { Solved, Fail, Jump } kind = Fail;
        std::size_t jump = 0; // queue position of the decision to retry
    };

    int intern(const QState &q) {
        auto it = index_.find(q);
        if (it != index_.end())
            return it->second;
        int id = static_cast<int>(states_.size());
        index_.emplace(q, id);
        states_.push_back(q);
        goal_.push_back(q.satisfies(problem_.goal));
        assignment_.push_back(-1);
        dead_.push_back(false);
        queued_.push_back(false);
        return id;
    }

    Outcome expand(std::size_t cursor) {
        while (cursor < queue_.size() &&
               (goal_[queue_[cursor]] || assignment_[queue_[cursor]] != -1))
            cursor++;
        if (cursor == queue_.size())
            return complete_candidate();

        int node = queue_[cursor];
        if (dead_[node])
            return {Outcome::Fail, 0};
        const QState q = states_[node]; // by value: intern() grows states_

        // Goal-directed ordering: prefer ops that decrement variables the
        // goal forces to zero and avoid ops that re-increment them; ties
        // keep ascending id.
        std::vector<std::pair<int, int>> ordered; // (-score, id)
        for (const auto &op : problem_.ops) {
            if (!applicable(q, op))
                continue;
            int score = 0;
            for (int v : op.decs)
                if (goal_zero_[v])
                    score++;
            for (int v : op.incs)
                if (goal_zero_[v])
                    score--;
            ordered.emplace_back(-score, op.id);
        }
        std::sort(ordered.begin(), ordered.end());
        bool any_applicable = false;
        for (const auto &[neg_score, op_id] : ordered) {
            const auto &op = problem_.ops[op_id];
            any_applicable = true;
            decisions_++;
            if (decisions_ > budget_.max_decisions)
                throw BudgetExceeded{};
            if ((decisions_ & 0x3ff) == 0 && std::chrono::steady_clock::now() > deadline_)
                throw BudgetExceeded{};

            auto successors = qsuccessors(q, op, problem_);
            bool reachable = true;
            for (const auto &succ : successors)
                if (!goal_reachable_.count(succ))
                    reachable = false;
            if (!reachable)
                continue;

            assignment_[node] = op.id;
            std::size_t saved = queue_.size();
            std::size_t saved_edges = committed_.size();
            for (const auto &succ : successors) {
                int to = intern(succ);
                committed_.push_back({node, op.id, to});
                if (!queued_[to] && !goal_[to] && assignment_[to] == -1) {
                    queued_[to] = true;
                    queue_.push_back(to);
                }
            }
            Outcome child{Outcome::Fail, 0};
            if (doomed_cycle())
                saw_termination_failure_ = true; // pruned, not structurally dead
            else
                child = expand(cursor + 1);
            assignment_[node] = -1;
            committed_.resize(saved_edges);
            while (queue_.size() > saved) {
                queued_[queue_.back()] = false;
                queue_.pop_back();
            }
            if (child.kind == Outcome::Solved)
                return child;
            // A termination failure names the deepest decision inside the
            // failing component; siblings of frames below it cannot break
            // that cycle, so unwind straight to the named frame.
            if (child.kind == Outcome::Jump && child.jump < cursor)
                return child;
        }
        if (!any_applicable)
            dead_[node] = true; // non-goal qstate with no action can never close
        return {Outcome::Fail, 0};
    }

    // A strongly connected set of committed edges whose decremented
    // variables are all also incremented inside it survives SIEVE intact in
    // every completion; it can pass the final test only as a simple loop
    // with a strictly decreasing witness. Anything else is a dead branch.
    bool doomed_cycle() {
        std::vector<std::vector<int>> adj(states_.size());
        for (const auto &e : committed_)
            adj[e.from].push_back(e.to);
        for (const auto &scc : compute_sccs(adj)) {
            std::set<int> members(scc.begin(), scc.end());
            std::vector<QEdge> inside;
            for (const auto &e : committed_)
                if (members.count(e.from) && members.count(e.to))
                    inside.push_back(e);
            if (inside.empty())
                continue;
            bool removable = false;
            for (std::size_t v = 0; v < problem_.numerics.size() && !removable; v++) {
                bool dec = false, inc = false;
                for (const auto &e : inside) {
                    if (op_decs(problem_, e.op, static_cast<int>(v)))
                        dec = true;
                    if (op_incs(problem_, e.op, static_cast<int>(v)))
                        inc = true;
                }
                if (dec && !inc)
                    removable = true;
            }
            if (removable)
                continue;
            if (is_simple_loop(members, inside)) {
                bool witness = false;
                for (std::size_t v = 0; v < problem_.numerics.size() && !witness; v++) {
                    int dec = 0, inc = 0;
                    for (const auto &e : inside) {
                        if (op_decs(problem_, e.op, static_cast<int>(v)))
                            dec++;
                        if (op_incs(problem_, e.op, static_cast<int>(v)))
                            inc++;
                    }
                    if (dec > inc)
                        witness = true;
                }
                if (witness)
                    continue;
            }
            return true;
        }
        return false;
    }

    Outcome complete_candidate() {
        Policy policy;
        for (std::size_t i = 0; i < states_.size(); i++)
            if (assignment_[i] != -1)
                policy.map[states_[i]] = assignment_[i];
        QTransitionGraph graph = build_graph(problem_, &policy, extra_inits_);
        bool has_goal = false;
        for (bool g : graph.is_goal)
            if (g)
                has_goal = true;
        if (!has_goal || !graph.open_nodes.empty())
            return {Outcome::Fail, 0}; // structural failure
        termination_checks_++;
        TerminationVerdict verdict = termination_test(graph, problem_);
        if (!verdict.terminating) {
            saw_termination_failure_ = true;
            std::size_t jump = 0;
            for (int gn : verdict.failing_scc) {
                auto it = index_.find(graph.nodes[gn]);
                if (it == index_.end())
                    continue;
                for (std::size_t pos = 0; pos < queue_.size(); pos++)
                    if (queue_[pos] == it->second)
                        jump = std::max(jump, pos);
            }
            return {Outcome::Jump, jump};
        }
        best_policy_ = policy;
        best_certificate_ = verdict;
        return {Outcome::Solved, 0};
    }

    const BqnpProblem &problem_;
    SolveBudget budget_;
    std::vector<QState> extra_inits_;
    std::chrono::steady_clock::time_point deadline_;
    std::map<QState, int> index_;
    std::vector<QState> states_;
    std::vector<bool> goal_;
    std::vector<int> assignment_;
    std::vector<bool> dead_;
    std::vector<bool> queued_;
    std::vector<int> queue_;
    std::vector<QEdge> committed_;
    std::set<QState> goal_reachable_;
    std::vector<bool> goal_zero_;
    Policy best_policy_;
    TerminationVerdict best_certificate_;
    bool saw_termination_failure_ = false;
    long decisions_ = 0;
    long termination_checks_ = 0;
};

} // namespace

SolveResult solve(const BqnpProblem &problem, const SolveBudget &budget,
                  const std::vector<QState> &extra_inits) {
    validate_problem(problem);
    for (const auto &lit : problem.goal)
        for (const auto &other : problem.goal)
            if (lit.numeric == other.numeric && lit.var == other.var &&
                lit.positive != other.positive) {
                SolveResult r;
                r.status = SolveStatus::Unsolvable;
                return r;
            }
    Search search(problem, budget, extra_inits);
    return search.run();
}

VerifyResult verify_policy(const BqnpProblem &problem, const Policy &policy,
                           const std::vector<QState> &extra_inits) {
    VerifyResult r;
    QTransitionGraph graph;
    try {
        graph = build_graph(problem, &policy, extra_inits);
    } catch (const MalformedOpError &e) {
        r.verdict = PolicyVerdict::NotClosed;
        r.detail = e.what();
        return r;
    }
    if (!graph.open_nodes.empty()) {
        r.verdict = PolicyVerdict::NotClosed;
        r.detail = "unmapped reachable qstate: " +
                   graph.nodes[graph.open_nodes.front()].to_string(problem);
        return r;
    }
    bool has_goal = false;
    for (bool g : graph.is_goal)
        if (g)
            has_goal = true;
    if (!has_goal) {
        r.verdict = PolicyVerdict::NoGoal;
        r.detail = "no goal qstate is reachable under the policy";
        return r;
    }
    r.certificate = termination_test(graph, problem);
    if (!r.certificate.terminating) {
        r.verdict = PolicyVerdict::TerminationUnknown;
        r.detail = "termination test returned Unknown";
        return r;
    }
    std::string why;
    if (!replay_certificate(graph, problem, r.certificate, &why)) {
        r.verdict = PolicyVerdict::TerminationUnknown;
        r.detail = "certificate replay failed: " + why;
        return r;
    }
    r.verdict = PolicyVerdict::Solution;
    return r;
}

} // namespace bagplan

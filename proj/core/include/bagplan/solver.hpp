#ifndef BAGPLAN_SOLVER_HPP
#define BAGPLAN_SOLVER_HPP

#include "bagplan/bqnp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bagplan {

// One SIEVE removal: inside the listed component, variable `variable` was
// decremented somewhere and incremented nowhere, so its dec edges went away.
struct SieveStep {
    std::vector<int> scc_nodes;
    int variable = -1;
    std::vector<QEdge> removed;
};

// Net-decrease witness for a surviving simple loop.
struct LoopCertificate {
    std::vector<int> scc_nodes;
    int variable = -1;
    int dec_edges = 0;
    int inc_edges = 0;
};

struct TerminationVerdict {
    bool terminating = false;
    bool sieve_terminating = false; // acyclic after SIEVE alone
    std::vector<SieveStep> steps;
    std::vector<LoopCertificate> loops;
    std::vector<int> failing_scc; // first uncertifiable component, when Unknown
};

struct SieveResult {
    bool terminating = false; // graph acyclic after removals
    std::vector<SieveStep> steps;
    std::vector<QEdge> remaining_edges;
};

// Iteratively removes, per strongly connected component, the dec edges of a
// variable that is decremented inside the component and incremented on none
// of its edges, until the graph is acyclic or no variable qualifies.
SieveResult sieve(const QTransitionGraph &graph, const BqnpProblem &problem);

// SIEVE plus net-decrease certificates on surviving simple loops; sound for
// unit-change semantics, returns Unknown otherwise.
TerminationVerdict termination_test(const QTransitionGraph &graph, const BqnpProblem &problem);

// Independent replay of a termination certificate against a fresh graph.
bool replay_certificate(const QTransitionGraph &graph, const BqnpProblem &problem,
                        const TerminationVerdict &certificate, std::string *why = nullptr);

enum class SolveStatus { Solved, Unsolvable, Unknown, Timeout };

struct SolveResult {
    SolveStatus status = SolveStatus::Unknown;
    Policy policy;
    TerminationVerdict certificate;
    long decisions = 0;
    long termination_checks = 0;
};

struct SolveBudget {
    long max_decisions = 20000000;
    double max_seconds = 300.0;
};

// Depth-first AND/OR search over the induced qstate space: an OR choice of
// action per non-goal qstate, an AND over the qualitative successors, with
// chronological backtracking. Complete candidates must pass the termination
// test; candidates failing only termination make the final outcome Unknown
// rather than Unsolvable. A policy must close over the problem's initial
// qstate and every extra start (family members' initial qstates).
SolveResult solve(const BqnpProblem &problem, const SolveBudget &budget = {},
                  const std::vector<QState> &extra_inits = {});

enum class PolicyVerdict { Solution, NotClosed, NoGoal, TerminationUnknown };

struct VerifyResult {
    PolicyVerdict verdict = PolicyVerdict::NotClosed;
    std::string detail;
    TerminationVerdict certificate;
};

// Independent audit of a policy: closedness, goal reachability of absorbing
// states, and a fresh termination certificate, over the problem's initial
// qstate plus any extra starts.
VerifyResult verify_policy(const BqnpProblem &problem, const Policy &policy,
                           const std::vector<QState> &extra_inits = {});

} // namespace bagplan

#endif

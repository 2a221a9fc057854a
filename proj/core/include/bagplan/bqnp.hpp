#ifndef BAGPLAN_BQNP_HPP
#define BAGPLAN_BQNP_HPP

#include "bagplan/abstraction.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bagplan {

class MalformedOpError : public Error {
public:
    using Error::Error;
};

// Total qualitative assignment: a truth value per boolean variable and
// {=0, >0} per numeric variable.
struct QState {
    std::vector<bool> numeric_positive;
    std::vector<bool> booleans;

    bool operator==(const QState &) const = default;
    auto operator<=>(const QState &) const = default;

    bool satisfies(const std::vector<QLiteral> &literals) const {
        for (const auto &lit : literals) {
            bool v = lit.numeric ? numeric_positive[lit.var] : booleans[lit.var];
            if (v != lit.positive)
                return false;
        }
        return true;
    }

    std::string to_string(const BqnpProblem &problem) const;
};

// Concrete instance state: non-negative integers and truth values.
struct ConcreteState {
    std::vector<int> counters;
    std::vector<bool> booleans;

    QState qstate() const {
        QState q;
        q.booleans = booleans;
        q.numeric_positive.reserve(counters.size());
        for (int c : counters)
            q.numeric_positive.push_back(c > 0);
        return q;
    }
};

struct Policy {
    std::map<QState, int> map; // qstate -> op id

    std::optional<int> action(const QState &q) const {
        auto it = map.find(q);
        if (it == map.end())
            return std::nullopt;
        return it->second;
    }
};

struct QEdge {
    int from = -1;
    int op = -1;
    int to = -1;

    auto operator<=>(const QEdge &) const = default;
};

struct QTransitionGraph {
    std::vector<QState> nodes;   // index = node id, BFS discovery order
    std::vector<QEdge> edges;    // sorted (from, op, to)
    std::vector<bool> is_goal;
    std::vector<int> open_nodes; // reachable non-goal qstates with no action
    int init_node = 0;

    std::vector<std::vector<int>> successors() const {
        std::vector<std::vector<int>> adj(nodes.size());
        for (const auto &e : edges)
            adj[e.from].push_back(e.to);
        return adj;
    }
};

// Checks structural sanity: every dec'd variable must carry an N>0
// precondition (the construction always emits one).
void validate_problem(const BqnpProblem &problem);

bool applicable(const QState &q, const AbstractAction &op);

// Qualitative successor set: booleans update deterministically, inc forces
// >0, dec branches between staying >0 and hitting =0.
std::vector<QState> qsuccessors(const QState &q, const AbstractAction &op,
                                const BqnpProblem &problem);

QState initial_qstate(const BqnpProblem &problem);

// BFS closure from the initial qstate (plus any extra start qstates, e.g.
// the initial qstates of designated family members). With a policy,
// expansion follows the mapped action only; reachable unmapped non-goal
// qstates are recorded as open. Without a policy, every applicable action
// is expanded.
QTransitionGraph build_graph(const BqnpProblem &problem, const Policy *policy = nullptr,
                             const std::vector<QState> &extra_inits = {});

enum class SimVerdict { Goal, Stuck, Limit };

struct SimResult {
    SimVerdict verdict = SimVerdict::Stuck;
    std::vector<int> trace; // op ids
    ConcreteState final_state;
};

SimResult simulate(const BqnpProblem &problem, const Policy &policy, const ConcreteState &s0,
                   long step_limit = 1000000);

std::string graph_to_dot(const QTransitionGraph &graph, const BqnpProblem &problem);

} // namespace bagplan

#endif

#include "bagplan/bqnp.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace bagplan {

std::string QState::to_string(const BqnpProblem &problem) const {
    std::ostringstream out;
    for (std::size_t i = 0; i < numeric_positive.size(); i++) {
        if (i)
            out << ",";
        out << problem.numerics[i].name << (numeric_positive[i] ? ">0" : "=0");
    }
    for (std::size_t i = 0; i < booleans.size(); i++) {
        if (i || !numeric_positive.empty())
            out << ",";
        out << (booleans[i] ? "" : "!") << problem.booleans[i].name;
    }
    return out.str();
}

void validate_problem(const BqnpProblem &problem) {
    for (const auto &op : problem.ops) {
        std::set<int> touched;
        for (int v : op.decs) {
            bool guarded = false;
            for (const auto &lit : op.pre)
                if (lit.numeric && lit.var == v && lit.positive)
                    guarded = true;
            if (!guarded)
                throw MalformedOpError("op '" + op.name + "' decrements " +
                                       problem.numerics[v].name +
                                       " without requiring it positive");
            if (!touched.insert(v).second)
                throw MalformedOpError("op '" + op.name + "' has duplicate numeric effects");
        }
        for (int v : op.incs)
            if (!touched.insert(v).second)
                throw MalformedOpError("op '" + op.name + "' has duplicate numeric effects");
        for (const auto &lit : op.pre)
            if (lit.var < 0 ||
                (lit.numeric ? lit.var >= static_cast<int>(problem.numerics.size())
                             : lit.var >= static_cast<int>(problem.booleans.size())))
                throw MalformedOpError("op '" + op.name + "' references an undeclared variable");
        for (int v : op.decs)
            if (v < 0 || v >= static_cast<int>(problem.numerics.size()))
                throw MalformedOpError("op '" + op.name + "' references an undeclared variable");
        for (int v : op.incs)
            if (v < 0 || v >= static_cast<int>(problem.numerics.size()))
                throw MalformedOpError("op '" + op.name + "' references an undeclared variable");
    }
}

bool applicable(const QState &q, const AbstractAction &op) {
    return q.satisfies(op.pre);
}

std::vector<QState> qsuccessors(const QState &q, const AbstractAction &op,
                                const BqnpProblem &problem) {
    (void)problem;
    QState base = q;
    for (const auto &[b, val] : op.bool_eff)
        base.booleans[b] = val;
    for (int v : op.incs)
        base.numeric_positive[v] = true;

    // dec from >0 branches between the qualitative images of n-1.
    std::vector<QState> result{base};
    for (int v : op.decs) {
        if (!q.numeric_positive[v])
            throw MalformedOpError("op '" + op.name + "' decrements a zero variable");
        std::vector<QState> next;
        for (const auto &s : result) {
            QState stay = s;
            stay.numeric_positive[v] = true;
            next.push_back(stay);
            QState zero = s;
            zero.numeric_positive[v] = false;
            next.push_back(zero);
        }
        result = std::move(next);
    }
    std::sort(result.begin(), result.end());
    result.erase(std::unique(result.begin(), result.end()), result.end());
    return result;
}

QState initial_qstate(const BqnpProblem &problem) {
    QState q;
    q.numeric_positive.assign(problem.numerics.size(), false);
    q.booleans.assign(problem.booleans.size(), false);
    for (const auto &lit : problem.init) {
        if (lit.numeric)
            q.numeric_positive[lit.var] = lit.positive;
        else
            q.booleans[lit.var] = lit.positive;
    }
    return q;
}

QTransitionGraph build_graph(const BqnpProblem &problem, const Policy *policy,
                             const std::vector<QState> &extra_inits) {
    QTransitionGraph g;
    std::map<QState, int> index;
    std::vector<bool> expanded;
    auto intern = [&](const QState &q) {
        auto it = index.find(q);
        if (it != index.end())
            return it->second;
        int id = static_cast<int>(g.nodes.size());
        index.emplace(q, id);
        g.nodes.push_back(q);
        g.is_goal.push_back(q.satisfies(problem.goal));
        expanded.push_back(false);
        return id;
    };

    std::deque<int> frontier{intern(initial_qstate(problem))};
    for (const auto &q : extra_inits)
        frontier.push_back(intern(q));
    while (!frontier.empty()) {
        int node = frontier.front();
        frontier.pop_front();
        if (expanded[node])
            continue;
        expanded[node] = true;
        if (g.is_goal[node])
            continue; // goal qstates are absorbing
        const QState q = g.nodes[node]; // by value: intern() grows g.nodes
        std::vector<int> choices;
        if (policy) {
            auto a = policy->action(q);
            if (!a) {
                g.open_nodes.push_back(node);
                continue;
            }
            if (!applicable(q, problem.ops[*a]))
                throw MalformedOpError("policy maps an inapplicable action at " +
                                       q.to_string(problem));
            choices.push_back(*a);
        } else {
            for (const auto &op : problem.ops)
                if (applicable(q, op))
                    choices.push_back(op.id);
        }
        for (int a : choices) {
            for (const auto &succ : qsuccessors(q, problem.ops[a], problem)) {
                int to = intern(succ);
                g.edges.push_back({node, a, to});
                if (!expanded[to])
                    frontier.push_back(to);
            }
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    std::sort(g.open_nodes.begin(), g.open_nodes.end());
    return g;
}

SimResult simulate(const BqnpProblem &problem, const Policy &policy, const ConcreteState &s0,
                   long step_limit) {
    SimResult r;
    r.final_state = s0;
    for (long step = 0; step < step_limit; step++) {
        QState q = r.final_state.qstate();
        if (q.satisfies(problem.goal)) {
            r.verdict = SimVerdict::Goal;
            return r;
        }
        auto a = policy.action(q);
        if (!a || !applicable(q, problem.ops[*a])) {
            r.verdict = SimVerdict::Stuck;
            return r;
        }
        const auto &op = problem.ops[*a];
        for (const auto &[b, val] : op.bool_eff)
            r.final_state.booleans[b] = val;
        for (int v : op.incs)
            r.final_state.counters[v]++;
        for (int v : op.decs) {
            if (r.final_state.counters[v] <= 0)
                throw MalformedOpError("decrement below zero at op '" + op.name + "'");
            r.final_state.counters[v]--;
        }
        r.trace.push_back(*a);
    }
    r.verdict = SimVerdict::Limit;
    return r;
}

std::string graph_to_dot(const QTransitionGraph &graph, const BqnpProblem &problem) {
    std::ostringstream out;
    out << "digraph qstates {\n";
    for (std::size_t i = 0; i < graph.nodes.size(); i++) {
        out << "  n" << i << " [label=\"" << graph.nodes[i].to_string(problem) << "\"";
        if (graph.is_goal[i])
            out << ", shape=doublecircle";
        out << "];\n";
    }
    for (const auto &e : graph.edges)
        out << "  n" << e.from << " -> n" << e.to << " [label=\"" << problem.ops[e.op].name
            << "\"];\n";
    out << "}\n";
    return out.str();
}

} // namespace bagplan

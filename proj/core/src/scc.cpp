#include "bagplan/scc.hpp"

#include <algorithm>

namespace bagplan {

namespace {

struct TarjanState {
    const std::vector<std::vector<int>> &graph;
    std::vector<int> dfs_number;
    std::vector<int> dfs_minimum;
    std::vector<int> stack_index;
    std::vector<int> stack;
    int counter = 0;
    std::vector<std::vector<int>> sccs;
};

void dfs(TarjanState &st, int vertex) {
    int number = st.counter++;
    st.dfs_number[vertex] = st.dfs_minimum[vertex] = number;
    st.stack_index[vertex] = static_cast<int>(st.stack.size());
    st.stack.push_back(vertex);

    for (int succ : st.graph[vertex]) {
        int succ_number = st.dfs_number[succ];
        if (succ_number == -1) {
            dfs(st, succ);
            st.dfs_minimum[vertex] = std::min(st.dfs_minimum[vertex], st.dfs_minimum[succ]);
        } else if (succ_number < number && st.stack_index[succ] != -1) {
            st.dfs_minimum[vertex] = std::min(st.dfs_minimum[vertex], succ_number);
        }
    }

    if (st.dfs_minimum[vertex] == number) {
        int from = st.stack_index[vertex];
        std::vector<int> scc(st.stack.begin() + from, st.stack.end());
        for (int v : scc)
            st.stack_index[v] = -1;
        st.stack.erase(st.stack.begin() + from, st.stack.end());
        st.sccs.push_back(std::move(scc));
    }
}

} // namespace

std::vector<std::vector<int>> compute_sccs(const std::vector<std::vector<int>> &graph) {
    int n = static_cast<int>(graph.size());
    TarjanState st{graph, std::vector<int>(n, -1), std::vector<int>(n, -1),
                   std::vector<int>(n, -1), {}, 0, {}};
    st.stack.reserve(n);
    for (int i = 0; i < n; i++)
        if (st.dfs_number[i] == -1)
            dfs(st, i);
    std::reverse(st.sccs.begin(), st.sccs.end());
    return st.sccs;
}

} // namespace bagplan

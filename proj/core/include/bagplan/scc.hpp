#ifndef BAGPLAN_SCC_HPP
#define BAGPLAN_SCC_HPP

#include <vector>

namespace bagplan {

// Maximal strongly connected components of a directed graph given as
// adjacency lists. Components are returned in reverse topological order
// reversed, i.e. sources first.
std::vector<std::vector<int>> compute_sccs(const std::vector<std::vector<int>> &graph);

} // namespace bagplan

#endif

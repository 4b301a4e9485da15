#ifndef LMG_SEPARATION_HPP
#define LMG_SEPARATION_HPP

#include <optional>
#include <string>
#include <vector>

#include "lmg/graph.hpp"

namespace lmg {

/// One hop on a mixed-graph path.
enum class Step { Forward, Backward, Bidirected }; // ->, <-, <->

/// A path x = nodes[0] ... nodes[k] = y with steps[i] joining nodes[i] and nodes[i+1].
struct Path {
    std::vector<NodeId> nodes;
    std::vector<Step> steps;

    std::string to_string() const;
    nlohmann::json to_json() const;
};

/// Query for x ⊥ y | z. The three sets must be pairwise disjoint.
struct SeparationQuery {
    NodeSet x;
    NodeSet y;
    NodeSet z;
};

/// m-separation in an ADMG. Bidirected edges are expanded into fresh latent
/// parents and the expanded DAG is searched with a reachability (Bayes-ball)
/// pass. Empty x or y is trivially separated.
bool m_separated(const Admg& g, const SeparationQuery& q);

/// Exhaustive simple-path enumeration with the blocking rules applied
/// directly on the mixed graph. Limited to graphs with at most 14 nodes.
bool m_separated_bruteforce(const Admg& g, const SeparationQuery& q);

/// First open path (in DFS order from lexicographically smallest x) between
/// x and y given z, if any. No size limit; intended for small graphs.
std::optional<Path> find_open_path(const Admg& g, const SeparationQuery& q);

/// True iff every interior node of `p` lets the path through given z.
bool path_is_open(const Admg& g, const Path& p, const NodeSet& z);

inline constexpr std::size_t kBruteforceNodeLimit = 14;

} // namespace lmg

#endif // LMG_SEPARATION_HPP

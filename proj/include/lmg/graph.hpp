#ifndef LMG_GRAPH_HPP
#define LMG_GRAPH_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace lmg {

using NodeId = std::string;
using NodeSet = std::set<NodeId>;
using Edge = std::pair<NodeId, NodeId>;

/// Role of a node in a missingness graph.
///  - Observed: fully observed substantive variable.
///  - MissingAffected: substantive variable that may be missing.
///  - Indicator: the missingness indicator R_V of a MissingAffected V.
///  - Proxy: the observed proxy of a MissingAffected V.
struct NodeKind {
    enum class Role { Observed, MissingAffected, Indicator, Proxy };

    Role role = Role::Observed;
    NodeId of; // only for Indicator and Proxy

    static NodeKind observed() { return {Role::Observed, {}}; }
    static NodeKind missing() { return {Role::MissingAffected, {}}; }
    static NodeKind indicator(NodeId v) { return {Role::Indicator, std::move(v)}; }
    static NodeKind proxy(NodeId v) { return {Role::Proxy, std::move(v)}; }

    bool substantive() const { return role == Role::Observed || role == Role::MissingAffected; }

    friend bool operator==(const NodeKind&, const NodeKind&) = default;
};

/// Acyclic directed mixed graph with typed nodes.
///
/// Edges are validated on insertion: endpoints must exist, self-loops are
/// rejected and a directed edge that would close a cycle throws
/// CycleDetected. Bidirected edges are stored with endpoints in sorted order.
/// Equality is structural.
class Admg {
public:
    Admg() = default;

    void add_node(const NodeId& name, NodeKind kind);
    void add_directed(const NodeId& from, const NodeId& to);
    void add_bidirected(const NodeId& a, const NodeId& b);
    void remove_directed(const NodeId& from, const NodeId& to);

    bool has_node(const NodeId& name) const { return nodes_.count(name) != 0; }
    const NodeKind& kind(const NodeId& name) const;
    const std::map<NodeId, NodeKind>& nodes() const { return nodes_; }
    const std::set<Edge>& directed() const { return directed_; }
    const std::set<Edge>& bidirected() const { return bidirected_; }

    bool has_directed(const NodeId& from, const NodeId& to) const {
        return directed_.count({from, to}) != 0;
    }
    bool has_bidirected(const NodeId& a, const NodeId& b) const;

    NodeSet node_set() const;
    /// Indicator node of a MissingAffected variable, if one exists.
    std::optional<NodeId> indicator_of(const NodeId& v) const;
    std::optional<NodeId> proxy_of(const NodeId& v) const;
    NodeSet nodes_with(NodeKind::Role role) const;

    /// Checks every structural invariant; throws InvalidGraph / CycleDetected.
    void validate() const;

    friend bool operator==(const Admg&, const Admg&) = default;

private:
    void require(const NodeId& name) const;

    std::map<NodeId, NodeKind> nodes_;
    std::set<Edge> directed_;
    std::set<Edge> bidirected_;
};

// Closures over directed edges. Ancestors and descendants are reflexive:
// the query set is always part of the result.
NodeSet parents(const Admg& g, const NodeSet& s);
NodeSet children(const Admg& g, const NodeSet& s);
NodeSet ancestors(const Admg& g, const NodeSet& s);
NodeSet descendants(const Admg& g, const NodeSet& s);
NodeSet nondescendants(const Admg& g, const NodeSet& s);
/// Nodes joined to some member of `s` by a bidirected edge.
NodeSet siblings(const Admg& g, const NodeSet& s);

/// G[overline{s}]: drop directed edges pointing into s.
Admg mutilate_over(const Admg& g, const NodeSet& s);
/// G[underline{s}]: drop directed edges leaving s.
Admg mutilate_under(const Admg& g, const NodeSet& s);

/// Kahn's algorithm with lexicographic tie-breaking.
std::vector<NodeId> topological_order(const Admg& g);

/// Directed path from `from` to `to` (inclusive), if any.
std::optional<std::vector<NodeId>> directed_path(const Admg& g, const NodeId& from, const NodeId& to);

nlohmann::json to_json(const Admg& g);
Admg admg_from_json(const nlohmann::json& j);

std::string role_name(NodeKind::Role role);

} // namespace lmg

#endif // LMG_GRAPH_HPP

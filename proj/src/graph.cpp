#include "lmg/graph.hpp"

#include <algorithm>
#include <deque>
#include <queue>

#include "lmg/errors.hpp"

namespace lmg {

namespace {

Edge sorted_pair(const NodeId& a, const NodeId& b) {
    return a < b ? Edge{a, b} : Edge{b, a};
}

std::map<NodeId, NodeSet> child_map(const Admg& g) {
    std::map<NodeId, NodeSet> out;
    for (const auto& [from, to] : g.directed())
        out[from].insert(to);
    return out;
}

std::map<NodeId, NodeSet> parent_map(const Admg& g) {
    std::map<NodeId, NodeSet> out;
    for (const auto& [from, to] : g.directed())
        out[to].insert(from);
    return out;
}

void require_all(const Admg& g, const NodeSet& s) {
    for (const auto& v : s)
        if (!g.has_node(v))
            throw NodeNotFound("node '" + v + "' is not in the graph");
}

NodeSet closure(const std::map<NodeId, NodeSet>& next, const NodeSet& start) {
    NodeSet seen = start;
    std::deque<NodeId> queue(start.begin(), start.end());
    while (!queue.empty()) {
        NodeId v = queue.front();
        queue.pop_front();
        auto it = next.find(v);
        if (it == next.end())
            continue;
        for (const auto& w : it->second)
            if (seen.insert(w).second)
                queue.push_back(w);
    }
    return seen;
}

NodeKind::Role parse_role(const std::string& s) {
    if (s == "observed")
        return NodeKind::Role::Observed;
    if (s == "missing")
        return NodeKind::Role::MissingAffected;
    if (s == "indicator")
        return NodeKind::Role::Indicator;
    if (s == "proxy")
        return NodeKind::Role::Proxy;
    throw InvalidGraph("unknown node kind '" + s + "'");
}

} // namespace

std::string role_name(NodeKind::Role role) {
    switch (role) {
    case NodeKind::Role::Observed:
        return "observed";
    case NodeKind::Role::MissingAffected:
        return "missing";
    case NodeKind::Role::Indicator:
        return "indicator";
    case NodeKind::Role::Proxy:
        return "proxy";
    }
    return "observed";
}

void Admg::require(const NodeId& name) const {
    if (!has_node(name))
        throw NodeNotFound("node '" + name + "' is not in the graph");
}

void Admg::add_node(const NodeId& name, NodeKind kind) {
    if (name.empty())
        throw InvalidGraph("node names must be nonempty");
    if (has_node(name))
        throw InvalidGraph("duplicate node '" + name + "'");
    nodes_.emplace(name, std::move(kind));
}

void Admg::add_directed(const NodeId& from, const NodeId& to) {
    require(from);
    require(to);
    if (from == to)
        throw InvalidGraph("self-loop on '" + from + "'");
    if (has_directed(from, to))
        return;
    if (auto back = directed_path(*this, to, from)) {
        std::string cycle;
        for (const auto& v : *back)
            cycle += v + " -> ";
        cycle += to;
        throw CycleDetected("edge " + from + " -> " + to + " closes the cycle " + cycle);
    }
    directed_.insert({from, to});
}

void Admg::add_bidirected(const NodeId& a, const NodeId& b) {
    require(a);
    require(b);
    if (a == b)
        throw InvalidGraph("bidirected self-loop on '" + a + "'");
    bidirected_.insert(sorted_pair(a, b));
}

void Admg::remove_directed(const NodeId& from, const NodeId& to) {
    directed_.erase({from, to});
}

bool Admg::has_bidirected(const NodeId& a, const NodeId& b) const {
    return bidirected_.count(sorted_pair(a, b)) != 0;
}

const NodeKind& Admg::kind(const NodeId& name) const {
    auto it = nodes_.find(name);
    if (it == nodes_.end())
        throw NodeNotFound("node '" + name + "' is not in the graph");
    return it->second;
}

NodeSet Admg::node_set() const {
    NodeSet out;
    for (const auto& [name, _] : nodes_)
        out.insert(name);
    return out;
}

std::optional<NodeId> Admg::indicator_of(const NodeId& v) const {
    for (const auto& [name, k] : nodes_)
        if (k.role == NodeKind::Role::Indicator && k.of == v)
            return name;
    return std::nullopt;
}

std::optional<NodeId> Admg::proxy_of(const NodeId& v) const {
    for (const auto& [name, k] : nodes_)
        if (k.role == NodeKind::Role::Proxy && k.of == v)
            return name;
    return std::nullopt;
}

NodeSet Admg::nodes_with(NodeKind::Role role) const {
    NodeSet out;
    for (const auto& [name, k] : nodes_)
        if (k.role == role)
            out.insert(name);
    return out;
}

void Admg::validate() const {
    std::map<NodeId, int> indicator_count, proxy_count;
    for (const auto& [name, k] : nodes_) {
        if (k.role != NodeKind::Role::Indicator && k.role != NodeKind::Role::Proxy)
            continue;
        auto it = nodes_.find(k.of);
        if (it == nodes_.end() || it->second.role != NodeKind::Role::MissingAffected)
            throw InvalidGraph("'" + name + "' must reference a missing-affected node, got '" +
                               k.of + "'");
        auto& count = k.role == NodeKind::Role::Indicator ? indicator_count : proxy_count;
        if (++count[k.of] > 1)
            throw InvalidGraph("more than one " + role_name(k.role) + " for '" + k.of + "'");
    }
    for (const auto& [a, b] : directed_) {
        require(a);
        require(b);
        if (a == b)
            throw InvalidGraph("self-loop on '" + a + "'");
    }
    for (const auto& [a, b] : bidirected_) {
        require(a);
        require(b);
        if (a == b)
            throw InvalidGraph("bidirected self-loop on '" + a + "'");
    }
    topological_order(*this);
}

NodeSet parents(const Admg& g, const NodeSet& s) {
    require_all(g, s);
    NodeSet out;
    for (const auto& [from, to] : g.directed())
        if (s.count(to))
            out.insert(from);
    return out;
}

NodeSet children(const Admg& g, const NodeSet& s) {
    require_all(g, s);
    NodeSet out;
    for (const auto& [from, to] : g.directed())
        if (s.count(from))
            out.insert(to);
    return out;
}

NodeSet ancestors(const Admg& g, const NodeSet& s) {
    require_all(g, s);
    return closure(parent_map(g), s);
}

NodeSet descendants(const Admg& g, const NodeSet& s) {
    require_all(g, s);
    return closure(child_map(g), s);
}

NodeSet nondescendants(const Admg& g, const NodeSet& s) {
    NodeSet de = descendants(g, s);
    NodeSet out;
    for (const auto& [name, _] : g.nodes())
        if (!de.count(name))
            out.insert(name);
    return out;
}

NodeSet siblings(const Admg& g, const NodeSet& s) {
    require_all(g, s);
    NodeSet out;
    for (const auto& [a, b] : g.bidirected()) {
        if (s.count(a))
            out.insert(b);
        if (s.count(b))
            out.insert(a);
    }
    return out;
}

Admg mutilate_over(const Admg& g, const NodeSet& s) {
    require_all(g, s);
    Admg out = g;
    for (const auto& [from, to] : g.directed())
        if (s.count(to))
            out.remove_directed(from, to);
    return out;
}

Admg mutilate_under(const Admg& g, const NodeSet& s) {
    require_all(g, s);
    Admg out = g;
    for (const auto& [from, to] : g.directed())
        if (s.count(from))
            out.remove_directed(from, to);
    return out;
}

std::vector<NodeId> topological_order(const Admg& g) {
    std::map<NodeId, int> indegree;
    for (const auto& [name, _] : g.nodes())
        indegree[name] = 0;
    for (const auto& [from, to] : g.directed())
        ++indegree[to];
    auto next = child_map(g);

    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (const auto& [name, d] : indegree)
        if (d == 0)
            ready.push(name);

    std::vector<NodeId> order;
    order.reserve(indegree.size());
    while (!ready.empty()) {
        NodeId v = ready.top();
        ready.pop();
        order.push_back(v);
        for (const auto& w : next[v])
            if (--indegree[w] == 0)
                ready.push(w);
    }
    if (order.size() == indegree.size())
        return order;

    // add_directed already rejects cycles (with a witness), so this only
    // fires if the edge set was assembled some other way.
    throw CycleDetected("graph has a directed cycle");
}

std::optional<std::vector<NodeId>> directed_path(const Admg& g, const NodeId& from,
                                                 const NodeId& to) {
    auto next = child_map(g);
    std::map<NodeId, NodeId> via;
    std::deque<NodeId> queue{from};
    via[from] = from;
    while (!queue.empty()) {
        NodeId v = queue.front();
        queue.pop_front();
        if (v == to) {
            std::vector<NodeId> path{v};
            while (path.back() != from)
                path.push_back(via[path.back()]);
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (const auto& w : next[v])
            if (!via.count(w)) {
                via[w] = v;
                queue.push_back(w);
            }
    }
    return std::nullopt;
}

nlohmann::json to_json(const Admg& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [name, k] : g.nodes()) {
        nlohmann::json n{{"name", name}, {"kind", role_name(k.role)}};
        if (!k.of.empty())
            n["of"] = k.of;
        nodes.push_back(std::move(n));
    }
    nlohmann::json directed = nlohmann::json::array();
    for (const auto& [a, b] : g.directed())
        directed.push_back({a, b});
    nlohmann::json bidirected = nlohmann::json::array();
    for (const auto& [a, b] : g.bidirected())
        bidirected.push_back({a, b});
    return {{"nodes", nodes}, {"directed", directed}, {"bidirected", bidirected}};
}

Admg admg_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("nodes"))
        throw InvalidGraph("graph JSON needs a 'nodes' array");
    Admg g;
    for (const auto& n : j.at("nodes")) {
        auto role = parse_role(n.value("kind", std::string("observed")));
        NodeKind k{role, n.value("of", std::string())};
        if ((role == NodeKind::Role::Indicator || role == NodeKind::Role::Proxy) && k.of.empty())
            throw InvalidGraph("node '" + n.at("name").get<std::string>() + "' needs an 'of' field");
        g.add_node(n.at("name").get<std::string>(), std::move(k));
    }
    auto edge_list = [&](const char* key, auto&& add) {
        if (!j.contains(key))
            return;
        for (const auto& e : j.at(key)) {
            if (!e.is_array() || e.size() != 2)
                throw InvalidGraph(std::string("malformed entry in '") + key + "'");
            add(e[0].get<std::string>(), e[1].get<std::string>());
        }
    };
    edge_list("directed", [&](const NodeId& a, const NodeId& b) { g.add_directed(a, b); });
    edge_list("bidirected", [&](const NodeId& a, const NodeId& b) { g.add_bidirected(a, b); });
    g.validate();
    return g;
}

} // namespace lmg

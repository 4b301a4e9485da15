#include "lmg/separation.hpp"

#include <array>
#include <deque>
#include <map>

#include "lmg/errors.hpp"

namespace lmg {

namespace {

void check_query(const Admg& g, const SeparationQuery& q) {
    for (const auto* s : {&q.x, &q.y, &q.z})
        for (const auto& v : *s)
            if (!g.has_node(v))
                throw NodeNotFound("node '" + v + "' is not in the graph");
    auto overlap = [](const NodeSet& a, const NodeSet& b) {
        for (const auto& v : a)
            if (b.count(v))
                return std::optional<NodeId>(v);
        return std::optional<NodeId>();
    };
    if (auto v = overlap(q.x, q.y); v)
        throw InvalidQuery("'" + *v + "' appears in both x and y");
    if (auto v = overlap(q.x, q.z); v)
        throw InvalidQuery("'" + *v + "' appears in both x and z");
    if (auto v = overlap(q.y, q.z); v)
        throw InvalidQuery("'" + *v + "' appears in both y and z");
}

/// DAG over integer ids with the bidirected edges replaced by latent parents.
struct ExpandedDag {
    std::vector<std::vector<int>> parents;
    std::vector<std::vector<int>> children;
    std::map<NodeId, int> index;

    explicit ExpandedDag(const Admg& g) {
        for (const auto& [name, _] : g.nodes())
            index.emplace(name, static_cast<int>(index.size()));
        std::size_t n = index.size() + g.bidirected().size();
        parents.resize(n);
        children.resize(n);
        for (const auto& [a, b] : g.directed())
            link(index.at(a), index.at(b));
        int latent = static_cast<int>(index.size());
        for (const auto& [a, b] : g.bidirected()) {
            link(latent, index.at(a));
            link(latent, index.at(b));
            ++latent;
        }
    }

    void link(int from, int to) {
        children[from].push_back(to);
        parents[to].push_back(from);
    }
};

bool arrowhead_at_end(Step s) { return s == Step::Forward || s == Step::Bidirected; }
bool arrowhead_at_start(Step s) { return s == Step::Backward || s == Step::Bidirected; }

/// Interior node between `in` (arriving) and `out` (leaving) steps.
bool passes(Step in, Step out, bool in_z, bool in_an_z) {
    bool collider = arrowhead_at_end(in) && arrowhead_at_start(out);
    return collider ? in_an_z : !in_z;
}

struct Neighbor {
    NodeId node;
    Step step;
};

std::map<NodeId, std::vector<Neighbor>> adjacency(const Admg& g) {
    std::map<NodeId, std::vector<Neighbor>> adj;
    for (const auto& [a, b] : g.directed()) {
        adj[a].push_back({b, Step::Forward});
        adj[b].push_back({a, Step::Backward});
    }
    for (const auto& [a, b] : g.bidirected()) {
        adj[a].push_back({b, Step::Bidirected});
        adj[b].push_back({a, Step::Bidirected});
    }
    return adj;
}

class PathSearch {
public:
    PathSearch(const Admg& g, const SeparationQuery& q)
        : q_(q), adj_(adjacency(g)), an_z_(ancestors(g, q.z)) {}

    std::optional<Path> run() {
        for (const auto& x : q_.x) {
            path_.nodes = {x};
            path_.steps.clear();
            if (extend())
                return path_;
        }
        return std::nullopt;
    }

private:
    bool on_path(const NodeId& v) const {
        for (const auto& u : path_.nodes)
            if (u == v)
                return true;
        return false;
    }

    bool extend() {
        const NodeId& tail = path_.nodes.back();
        auto it = adj_.find(tail);
        if (it == adj_.end())
            return false;
        for (const auto& nb : it->second) {
            if (on_path(nb.node))
                continue;
            if (!path_.steps.empty() &&
                !passes(path_.steps.back(), nb.step, q_.z.count(tail) != 0, an_z_.count(tail) != 0))
                continue;
            path_.nodes.push_back(nb.node);
            path_.steps.push_back(nb.step);
            if (q_.y.count(nb.node) || extend())
                return true;
            path_.nodes.pop_back();
            path_.steps.pop_back();
        }
        return false;
    }

    const SeparationQuery& q_;
    std::map<NodeId, std::vector<Neighbor>> adj_;
    NodeSet an_z_;
    Path path_;
};

} // namespace

std::string Path::to_string() const {
    if (nodes.empty())
        return "";
    std::string out = nodes.front();
    for (std::size_t i = 0; i < steps.size(); ++i) {
        switch (steps[i]) {
        case Step::Forward:
            out += " -> ";
            break;
        case Step::Backward:
            out += " <- ";
            break;
        case Step::Bidirected:
            out += " <-> ";
            break;
        }
        out += nodes[i + 1];
    }
    return out;
}

nlohmann::json Path::to_json() const {
    return {{"nodes", nodes}, {"text", to_string()}};
}

bool m_separated(const Admg& g, const SeparationQuery& q) {
    check_query(g, q);
    if (q.x.empty() || q.y.empty())
        return true;

    ExpandedDag dag(g);
    std::size_t n = dag.parents.size();
    std::vector<char> in_z(n, 0), an_z(n, 0), is_y(n, 0);
    for (const auto& v : q.z)
        in_z[dag.index.at(v)] = 1;
    for (const auto& v : q.y)
        is_y[dag.index.at(v)] = 1;

    std::deque<int> stack;
    for (const auto& v : q.z)
        stack.push_back(dag.index.at(v));
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (an_z[v])
            continue;
        an_z[v] = 1;
        for (int p : dag.parents[v])
            stack.push_back(p);
    }

    // Ball states: (node, arrived travelling up from a child / down from a parent).
    enum Dir { Up = 0, Down = 1 };
    std::vector<std::array<char, 2>> visited(n, {0, 0});
    std::deque<std::pair<int, Dir>> queue;
    for (const auto& v : q.x)
        queue.emplace_back(dag.index.at(v), Up);

    while (!queue.empty()) {
        auto [v, dir] = queue.front();
        queue.pop_front();
        if (visited[v][dir])
            continue;
        visited[v][dir] = 1;
        if (!in_z[v] && is_y[v])
            return false;
        if (dir == Up && !in_z[v]) {
            for (int p : dag.parents[v])
                queue.emplace_back(p, Up);
            for (int c : dag.children[v])
                queue.emplace_back(c, Down);
        } else if (dir == Down) {
            if (!in_z[v])
                for (int c : dag.children[v])
                    queue.emplace_back(c, Down);
            if (an_z[v])
                for (int p : dag.parents[v])
                    queue.emplace_back(p, Up);
        }
    }
    return true;
}

bool m_separated_bruteforce(const Admg& g, const SeparationQuery& q) {
    if (g.nodes().size() > kBruteforceNodeLimit)
        throw OracleLimitExceeded("path enumeration is limited to " +
                                  std::to_string(kBruteforceNodeLimit) + " nodes, graph has " +
                                  std::to_string(g.nodes().size()));
    return !find_open_path(g, q).has_value();
}

std::optional<Path> find_open_path(const Admg& g, const SeparationQuery& q) {
    check_query(g, q);
    if (q.x.empty() || q.y.empty())
        return std::nullopt;
    return PathSearch(g, q).run();
}

bool path_is_open(const Admg& g, const Path& p, const NodeSet& z) {
    if (p.nodes.size() != p.steps.size() + 1)
        return false;
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        const auto& a = p.nodes[i];
        const auto& b = p.nodes[i + 1];
        bool present = false;
        switch (p.steps[i]) {
        case Step::Forward:
            present = g.has_directed(a, b);
            break;
        case Step::Backward:
            present = g.has_directed(b, a);
            break;
        case Step::Bidirected:
            present = g.has_bidirected(a, b);
            break;
        }
        if (!present)
            return false;
    }
    NodeSet an_z = ancestors(g, z);
    for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) {
        const auto& v = p.nodes[i];
        if (!passes(p.steps[i - 1], p.steps[i], z.count(v) != 0, an_z.count(v) != 0))
            return false;
    }
    return true;
}

} // namespace lmg

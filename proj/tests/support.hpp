#ifndef LMG_TESTS_SUPPORT_HPP
#define LMG_TESTS_SUPPORT_HPP

#include <fstream>
#include <random>
#include <string>

#include "lmg/errors.hpp"
#include "lmg/lm_model.hpp"

namespace lmg::testing {

inline nlohmann::json load_json(const std::string& relative) {
    std::ifstream in(std::string(LMG_DATA_DIR) + "/" + relative);
    return nlohmann::json::parse(in);
}

inline LmGraph load_lm(const std::string& name) {
    return lm_graph_from_json(load_json("graphs/" + name + ".json"));
}

inline std::string node_name(std::size_t i) {
    return "V" + std::to_string(i);
}

/// Random ADMG over V0..V{n-1}; directed edges follow the index order, so
/// the result is acyclic.
inline Admg random_admg(std::mt19937_64& rng, std::size_t n, double density,
                        double bidirected_density) {
    Admg g;
    for (std::size_t i = 0; i < n; ++i)
        g.add_node(node_name(i), NodeKind::observed());
    std::bernoulli_distribution dir(density), bi(bidirected_density);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dir(rng))
                g.add_directed(node_name(i), node_name(j));
            if (bi(rng))
                g.add_bidirected(node_name(i), node_name(j));
        }
    return g;
}

/// Same as random_admg but with node names shuffled against the edge order.
inline Admg random_shuffled_dag(std::mt19937_64& rng, std::size_t n, double density) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i)
        perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Admg g;
    for (std::size_t i = 0; i < n; ++i)
        g.add_node(node_name(i), NodeKind::observed());
    std::bernoulli_distribution dir(density);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (dir(rng))
                g.add_directed(node_name(perm[i]), node_name(perm[j]));
    return g;
}

// Random m-graph: substantive DAG over S0..S{n-1}, a random subset missing
// with indicators whose parents are substantive or earlier indicators.
inline Admg random_m_graph(std::mt19937_64& rng, std::size_t n) {
    Admg g;
    std::bernoulli_distribution coin(0.35), miss(0.4);
    std::vector<NodeId> subs, inds;
    for (std::size_t i = 0; i < n; ++i) {
        NodeId v = "S" + std::to_string(i);
        bool m = miss(rng);
        g.add_node(v, m ? NodeKind::missing() : NodeKind::observed());
        subs.push_back(v);
        if (m) {
            g.add_node("R_" + v, NodeKind::indicator(v));
            inds.push_back("R_" + v);
        }
    }
    for (std::size_t i = 0; i < subs.size(); ++i)
        for (std::size_t j = i + 1; j < subs.size(); ++j)
            if (coin(rng))
                g.add_directed(subs[i], subs[j]);
    for (std::size_t r = 0; r < inds.size(); ++r) {
        for (const auto& s : subs)
            if (coin(rng))
                g.add_directed(s, inds[r]);
        for (std::size_t q = 0; q < r; ++q)
            if (coin(rng))
                g.add_directed(inds[q], inds[r]);
    }
    if (subs.size() > 1 && coin(rng))
        g.add_bidirected(subs[0], subs[1]);
    return g;
}

/// Random lm-graph with a random nonempty-where-possible shift spec.
inline LmGraph random_lm_graph(std::mt19937_64& rng, std::size_t n) {
    while (true) {
        Admg base = random_m_graph(rng, n);
        ShiftSpec spec;
        for (const auto& x : base.nodes_with(NodeKind::Role::MissingAffected))
            for (const auto& z : children(base, {x}))
                if (base.kind(z).substantive() && rng() % 2)
                    spec.shifted_children[x].insert(z);
        try {
            return build_lm_graph(base, spec);
        } catch (const Error&) {
        }
    }
}

inline bool forward_edges(const Admg& g, const std::vector<NodeId>& order) {
    std::map<NodeId, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i)
        pos[order[i]] = i;
    if (pos.size() != g.nodes().size())
        return false;
    for (const auto& [a, b] : g.directed())
        if (pos.at(a) >= pos.at(b))
            return false;
    return true;
}

} // namespace lmg::testing

#endif // LMG_TESTS_SUPPORT_HPP

#include "lmg/lm_model.hpp"

#include <algorithm>

#include "lmg/errors.hpp"
#include "lmg/separation.hpp"

namespace lmg {

namespace {

void require_m_graph(const Admg& base) {
    base.validate();
    for (const auto& r : base.nodes_with(NodeKind::Role::Indicator)) {
        for (const auto& c : children(base, {r})) {
            auto role = base.kind(c).role;
            if (role != NodeKind::Role::Indicator && role != NodeKind::Role::Proxy)
                throw InvalidGraph("indicator '" + r + "' has substantive child '" + c +
                                   "'; the base must be an m-graph");
        }
    }
}

} // namespace

NodeSet ShiftSpec::contextual_parents(const NodeId& z) const {
    NodeSet out;
    for (const auto& [x, s] : shifted_children)
        if (s.count(z))
            out.insert(x);
    return out;
}

LmGraph LmGraph::assemble(Admg graph, Admg base, ShiftSpec spec, std::vector<LabeledEdge> labels) {
    LmGraph lm;
    lm.graph_ = std::move(graph);
    lm.base_ = std::move(base);
    lm.spec_ = std::move(spec);
    lm.labels_ = std::move(labels);
    return lm;
}

NodeId LmGraph::indicator(const NodeId& v) const {
    auto r = graph_.indicator_of(v);
    if (!r)
        throw NodeNotFound("'" + v + "' has no missingness indicator");
    return *r;
}

NodeSet LmGraph::shifted_variables() const {
    NodeSet out;
    for (const auto& [x, _] : spec_.shifted_children)
        out.insert(x);
    return out;
}

NodeSet LmGraph::shifted_indicators() const {
    NodeSet out;
    for (const auto& x : shifted_variables())
        out.insert(indicator(x));
    return out;
}

std::vector<LabeledEdge> LmGraph::labels_of(const NodeId& indicator) const {
    const auto& k = graph_.kind(indicator);
    std::vector<LabeledEdge> out;
    if (k.role != NodeKind::Role::Indicator)
        return out;
    for (const auto& e : labels_)
        if (e.from == k.of)
            out.push_back(e);
    return out;
}

bool LmGraph::is_labeled(const NodeId& from, const NodeId& to) const {
    return std::find(labels_.begin(), labels_.end(), LabeledEdge{from, to}) != labels_.end();
}

LmGraph build_lm_graph(const Admg& base, const ShiftSpec& spec) {
    require_m_graph(base);
    Admg graph = base;
    std::vector<LabeledEdge> labels;
    for (const auto& [x, shifted] : spec.shifted_children) {
        if (base.kind(x).role != NodeKind::Role::MissingAffected)
            throw InvalidShiftSet("'" + x + "' is not missing-affected");
        auto r = base.indicator_of(x);
        if (!r)
            throw InvalidShiftSet("'" + x + "' has no missingness indicator");
        if (shifted.empty())
            throw InvalidShiftSet("shifted children of '" + x + "' must be nonempty");
        NodeSet ch = children(base, {x});
        NodeSet an_r = ancestors(base, {*r});
        for (const auto& z : shifted) {
            if (!base.has_node(z))
                throw NodeNotFound("node '" + z + "' is not in the graph");
            if (!ch.count(z))
                throw InvalidShiftSet("'" + z + "' is not a child of '" + x + "'");
            if (an_r.count(z))
                throw FeedbackRisk("'" + z + "' is an ancestor of '" + *r +
                                   "' and cannot be shifted by it");
        }
    }
    for (const auto& [x, shifted] : spec.shifted_children) {
        NodeId r = *base.indicator_of(x);
        for (const auto& z : shifted) {
            graph.add_directed(r, z); // throws CycleDetected
            if (!base.has_bidirected(x, z))
                labels.push_back({x, z});
        }
    }
    std::sort(labels.begin(), labels.end());
    return LmGraph::assemble(std::move(graph), base, spec, std::move(labels));
}

bool check_regular_maximal(const LmGraph& lm) {
    const Admg& g = lm.graph();
    for (const auto& e : lm.labels()) {
        auto r = g.indicator_of(e.from);
        if (!r || !g.has_directed(e.from, e.to) || !g.has_directed(*r, e.to))
            return false;
    }
    auto sorted = lm.labels();
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

Admg remove_labels(const Admg& g, const LmGraph& lm, const NodeSet& indicators) {
    Admg out = g;
    for (const auto& r : indicators)
        for (const auto& e : lm.labels_of(r))
            out.remove_directed(e.from, e.to);
    return out;
}

Admg context_graph(const LmGraph& lm, const ContextPattern& r) {
    NodeSet shifted = lm.shifted_indicators();
    NodeSet zeros;
    for (const auto& [indicator, value] : r) {
        if (!shifted.count(indicator))
            throw NodeNotFound("'" + indicator + "' is not a shifted missingness indicator");
        if (value != 0 && value != 1)
            throw InvalidQuery("context values must be 0 or 1");
        if (value == 0)
            zeros.insert(indicator);
    }
    return remove_labels(lm.graph(), lm, zeros);
}

bool csi_holds_graphically(const LmGraph& lm, const LabeledEdge& edge, const NodeSet& w) {
    if (!lm.is_labeled(edge.from, edge.to))
        throw InvalidQuery("edge " + edge.from + " -> " + edge.to + " carries no label");
    Admg g = lm.graph();
    g.remove_directed(edge.from, edge.to);
    NodeSet z = w;
    z.insert(lm.indicator(edge.from));
    return m_separated(g, {{edge.to}, {edge.from}, z});
}

LmGraph lm_graph_from_json(const nlohmann::json& j) {
    Admg base = admg_from_json(j);
    ShiftSpec spec;
    if (j.contains("shifts"))
        for (const auto& [x, list] : j.at("shifts").items())
            for (const auto& z : list)
                spec.shifted_children[x].insert(z.get<std::string>());
    return build_lm_graph(base, spec);
}

nlohmann::json to_json(const LmGraph& lm) {
    nlohmann::json j = to_json(lm.base());
    nlohmann::json shifts = nlohmann::json::object();
    for (const auto& [x, s] : lm.shifts().shifted_children)
        shifts[x] = s;
    j["shifts"] = shifts;
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& e : lm.labels())
        labels.push_back({{"edge", {e.from, e.to}}, {"context", lm.indicator(e.from) + "=0"}});
    j["labels"] = labels;
    return j;
}

} // namespace lmg

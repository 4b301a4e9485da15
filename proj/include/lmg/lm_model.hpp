#ifndef LMG_LM_MODEL_HPP
#define LMG_LM_MODEL_HPP

#include <map>
#include <vector>

#include "lmg/graph.hpp"

namespace lmg {

/// Shifted children S_X for each shifted missing-affected variable X.
struct ShiftSpec {
    std::map<NodeId, NodeSet> shifted_children;

    bool empty() const { return shifted_children.empty(); }
    /// Contextual parents of z: every X with z in S_X.
    NodeSet contextual_parents(const NodeId& z) const;
};

/// A labeled directed edge X -> Z, active only when R_X = 1 (the label reads "R_X = 0").
struct LabeledEdge {
    NodeId from;
    NodeId to;

    friend auto operator<=>(const LabeledEdge&, const LabeledEdge&) = default;
};

/// Missingness pattern over shifted indicators.
using ContextPattern = std::map<NodeId, int>;

/// Labeled missingness graph: the augmented ADMG, its labels and the m-graph it came from.
class LmGraph {
public:
    /// Assembles an lm-graph without running the construction checks. Meant
    /// for hand-built graphs that are then audited with check_regular_maximal.
    static LmGraph assemble(Admg graph, Admg base, ShiftSpec spec, std::vector<LabeledEdge> labels);

    const Admg& graph() const { return graph_; }
    const Admg& base() const { return base_; }
    const ShiftSpec& shifts() const { return spec_; }
    const std::vector<LabeledEdge>& labels() const { return labels_; }

    /// Indicators of the shifted variables (R_sh), derived from the shift spec.
    NodeSet shifted_indicators() const;
    /// Variables whose missingness induces shifts (V_sh).
    NodeSet shifted_variables() const;
    /// Labels carried by indicator R_X.
    std::vector<LabeledEdge> labels_of(const NodeId& indicator) const;
    bool is_labeled(const NodeId& from, const NodeId& to) const;

    /// Indicator R_V for a missing-affected V; throws NodeNotFound when absent.
    NodeId indicator(const NodeId& v) const;

private:
    Admg graph_;
    Admg base_;
    ShiftSpec spec_;
    std::vector<LabeledEdge> labels_;
};

/// Adds R_X -> Z for every Z in S_X and labels X -> Z unless X <-> Z.
LmGraph build_lm_graph(const Admg& base, const ShiftSpec& spec);

/// Regularity: every labeled X -> Z has X -> Z and R_X -> Z. Maximality: no label twice.
bool check_regular_maximal(const LmGraph& lm);

/// Removes the labeled edges of every indicator set to 0 in r.
Admg context_graph(const LmGraph& lm, const ContextPattern& r);

/// Graph with the labels of the given indicators removed (used for H-sets).
Admg remove_labels(const Admg& g, const LmGraph& lm, const NodeSet& indicators);

/// Sufficient graphical condition for the CSI Z ⊥ X | W, R_X = 0:
/// Z and X m-separated given W ∪ {R_X} once X -> Z is deleted.
bool csi_holds_graphically(const LmGraph& lm, const LabeledEdge& edge, const NodeSet& w);

/// Graph JSON plus a "shifts" object, e.g. {"Y0": ["A", "Y1"]}.
LmGraph lm_graph_from_json(const nlohmann::json& j);
/// Base graph, shifts and the derived label list.
nlohmann::json to_json(const LmGraph& lm);

} // namespace lmg

#endif // LMG_LM_MODEL_HPP

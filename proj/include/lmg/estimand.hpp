#ifndef LMG_ESTIMAND_HPP
#define LMG_ESTIMAND_HPP

#include <string>
#include <vector>

#include "lmg/graph.hpp"

namespace lmg {

/// Conditioning event "var = value" on a missingness indicator.
struct Event {
    NodeId var;
    int value = 1;

    friend auto operator<=>(const Event&, const Event&) = default;
};

/// Symbolic recovered functional. The node kinds are exactly the pieces the
/// recovery criteria emit:
///   Sum        Σ_k P(events_k) · child_k       (weight omitted when events_k is empty)
///   Integrate  E_{vars | given, events} child
///   Delta      Δ_a child                       (difference in the exposure level a)
///   CondExp    E[outcome | covariates, exposure = a, events]
struct Estimand {
    enum class Kind { Sum, Integrate, Delta, CondExp };

    Kind kind = Kind::CondExp;
    NodeSet vars;              // Integrate
    NodeSet given;             // Integrate
    std::vector<Event> events; // Integrate, CondExp
    NodeId outcome;            // CondExp
    NodeSet covariates;        // CondExp
    NodeId exposure;           // Delta, CondExp
    std::vector<std::vector<Event>> weights; // Sum, one per child
    std::vector<Estimand> children;

    static Estimand cond_exp(NodeId outcome, NodeSet covariates, NodeId exposure,
                             std::vector<Event> events);
    static Estimand delta(NodeId exposure, Estimand child);
    /// Returns `child` untouched when `vars` is empty.
    static Estimand integrate(NodeSet vars, NodeSet given, std::vector<Event> events,
                              Estimand child);
    static Estimand sum(std::vector<std::vector<Event>> weights, std::vector<Estimand> children);

    friend bool operator==(const Estimand&, const Estimand&) = default;
};

enum class RenderFormat { Text, Latex };

std::string render_estimand(const Estimand& e, RenderFormat format);
/// Inverse of the Text rendering.
Estimand parse_estimand(const std::string& text);

nlohmann::json to_json(const Estimand& e);

/// LaTeX form of a node name: trailing digits and "_" suffixes become subscripts.
std::string latex_name(const std::string& name);

} // namespace lmg

#endif // LMG_ESTIMAND_HPP

#ifndef LMG_RECOVERY_HPP
#define LMG_RECOVERY_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lmg/estimand.hpp"
#include "lmg/lm_model.hpp"
#include "lmg/separation.hpp"

namespace lmg {

enum class Target { Fate, Nate };

/// Effect of a binary exposure on an outcome without substantive descendants.
struct QuerySpec {
    NodeId exposure;
    NodeId outcome;
    Target target = Target::Nate;
};

/// Throws InvalidQuery when the query does not fit the graph.
void validate_query(const LmGraph& lm, const QuerySpec& q);

/// Shifted indicators with a directed route to the outcome once edges into
/// R_sh ∪ {A} are cut.
NodeSet compute_r_phi(const LmGraph& lm, const QuerySpec& q);

struct FateCaps {
    std::size_t max_adjustment = 8;
};

struct FateVerdict {
    bool recoverable = false;
    NodeSet r_phi;
    NodeSet adjustment;   // Z = Z_o ∪ Z_m
    NodeSet indicators;   // R_adj, all fixed to 1 in the estimand
    std::optional<Estimand> estimand;
    std::string reason;   // why nothing was found, when not recoverable
};

/// Sequential-factorization criterion: the first adjustment set (by size,
/// then lexicographically) meeting the three graphical conditions.
/// Sufficient only; NotDecided is an ordinary outcome.
FateVerdict check_fate_recovery(const LmGraph& lm, const QuerySpec& q, const FateCaps& caps = {});

/// Missingness pattern over the indexed set K, in K's order.
using Pattern = std::vector<int>;

struct NateWitness {
    std::vector<NodeId> k; // indexed; patterns follow this order
    NodeSet h;
    std::map<Pattern, NodeSet> l;

    /// Total size |K| + |H| + Σ_r |L_r|.
    std::size_t size() const;
    friend bool operator==(const NateWitness&, const NateWitness&) = default;
};

struct ConditionFailure {
    Pattern pattern;
    int index = 0; // 2..5, numbered as printed in the criterion
    std::string description;
    std::optional<Path> open_path;          // separation conditions
    std::vector<NodeId> descendant_path;    // condition (ii): A -> ... -> offending node
    Admg graph;                             // graph the condition was checked in
    NodeSet conditioning;                   // conditioning set of the failed separation
};

struct NateVerdict {
    bool recoverable = false;
    NateWitness witness;
    std::optional<Estimand> estimand;
    std::optional<ConditionFailure> failure;
};

/// All 2^|K| patterns in lexicographic order.
std::vector<Pattern> all_patterns(std::size_t k);

/// Checks conditions (ii)-(v) for every pattern in supp R_K (all patterns
/// unless `support` is given). Throws InvalidWitness when condition (i) or
/// the set constraints on K, H, L_r are violated.
NateVerdict check_nate_recovery(const LmGraph& lm, const QuerySpec& q, const NateWitness& w,
                                const std::optional<std::vector<Pattern>>& support = std::nullopt);

struct SearchCaps {
    std::size_t k_max = 2;
    std::size_t h_max = 2;
    std::size_t l_max = 6;
};

/// Smallest passing witness (total size, then K, H lexicographically).
std::optional<NateWitness> search_nate_witness(const LmGraph& lm, const QuerySpec& q,
                                               const SearchCaps& caps = {});

nlohmann::json to_json(const NateWitness& w);
NateWitness nate_witness_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FateVerdict& v);
nlohmann::json to_json(const NateVerdict& v);

/// Verdict report for one query: FATE check, NATE check of the given
/// witness, or NATE witness search when none is given. "verdict" is one of
/// recoverable, not_decided, condition_failed.
nlohmann::json recovery_report(const LmGraph& lm, const QuerySpec& q,
                               const std::optional<NateWitness>& witness = std::nullopt,
                               const SearchCaps& caps = {});

std::string pattern_text(const std::vector<NodeId>& k_indicators, const Pattern& r);

} // namespace lmg

#endif // LMG_RECOVERY_HPP

#ifndef LMG_PLUGIN_HPP
#define LMG_PLUGIN_HPP

#include "lmg/dataset.hpp"
#include "lmg/estimand.hpp"
#include "lmg/formula.hpp"

namespace lmg {

/// Plug-in value of a recovered estimand on observed data.
///
/// Conditional expectations are least-squares fits on the rows matching
/// their events, with a degree-2 polynomial basis in the conditioning
/// variables (squares skipped for 0/1 columns) fully interacted with the
/// exposure. E_{V|G,e} integrates its child by regressing it on the same
/// basis in G over rows matching e, or by averaging when G is empty. Sum
/// weights are empirical pattern frequencies.
double evaluate_plugin(const Estimand& e, const Dataset& d);

/// Degree-2 basis in `vars`; when `exposure` is set every term is also
/// interacted with it.
DesignFormula polynomial_basis(const NodeSet& vars, const Dataset& d, const std::string& exposure = {});

} // namespace lmg

#endif // LMG_PLUGIN_HPP

#ifndef LMG_ESTIMATORS_HPP
#define LMG_ESTIMATORS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lmg/dataset.hpp"
#include "lmg/formula.hpp"

namespace lmg {

/// Column roles, nuisance formulas and tuning shared by the estimators.
///
/// Formula keys:
///   drn_outcome, drn_propensity        pooled Q_r and pi_r for DR.N
///   drf_outcome, drf_propensity        Q_1 and pi_1 on R = 1 rows (DR.F)
///   drf_tau, drf_missingness           tau(W) meta-regression and P(R = 1 | W)
///   aipw_outcome, aipw_propensity      complete-data AIPW (CC and MI)
///   mim_outcome                        missing-indicator outcome model
///   mi_imputation                      linear-Gaussian imputation model for the missing column
struct EstimatorConfig {
    std::string exposure = "A";
    std::string outcome = "Y1";
    std::string missing = "Y0";
    std::string indicator = "R_Y0";
    std::map<std::string, std::string> formulas;
    double trim_epsilon = 0.01;
    double max_trim_fraction = 0.10;
    std::size_t bootstrap = 200;
    std::uint64_t seed = 1;
    std::size_t imputations = 20;
    bool conventional_sign = false; // DR.F correction orientation
    bool cross_fit = false;         // 2-fold cross-fitting for DR.N

    /// Throws SpecError for an unknown key.
    DesignFormula formula(const std::string& key) const;
};

/// Term sets matching the benchmark SCM (correctly specified nuisances).
EstimatorConfig appendix_a_config();
/// Fields present in `j` override appendix_a_config().
EstimatorConfig estimator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EstimatorConfig& c);

struct EstimateReport {
    std::string estimator;
    double point = 0.0;
    double se = 0.0;
    std::pair<double, double> ci95{0.0, 0.0};
    std::size_t n_used = 0;
    nlohmann::json diagnostics = nlohmann::json::object();
};

nlohmann::json to_json(const EstimateReport& r);

/// One-step AIPW with context-pooled nuisances; se from per-row contributions.
EstimateReport dr_nate(const Dataset& d, const EstimatorConfig& c);
/// Pseudo-outcome estimator of the FATE with the asymptotic-variance se.
EstimateReport dr_fate(const Dataset& d, const EstimatorConfig& c);
/// Missing-indicator regression, g-computation, bootstrap se.
EstimateReport mim_estimate(const Dataset& d, const EstimatorConfig& c);
/// Point estimate of mim_estimate without the bootstrap.
double mim_point_estimate(const Dataset& d, const EstimatorConfig& c);
/// Multiple imputation of the missing column, AIPW per completed dataset, Rubin pooling.
EstimateReport mi_estimate(const Dataset& d, const EstimatorConfig& c);
/// AIPW on complete rows.
EstimateReport cc_estimate(const Dataset& d, const EstimatorConfig& c);

/// Dispatch on "drn", "drf", "mim", "mi", "cc"; other names throw InvalidQuery.
EstimateReport run_estimator(const std::string& name, const Dataset& d, const EstimatorConfig& c);
const std::vector<std::string>& estimator_names();

/// Sample sd of `estimator` over b resamples drawn with replacement.
/// Throws BootstrapUnstable when more than 5% of resamples fail.
double bootstrap_se(const std::function<double(const Dataset&)>& estimator, const Dataset& d,
                    std::size_t b, std::uint64_t seed);

/// Per-row AIPW contributions Δ_a Q + (A - π)/(π(1 - π)) (Y - Q) on `rows`,
/// with nuisances fitted on the same rows.
struct AipwResult {
    std::vector<double> contributions;
    std::vector<double> outcome_contrast; // Δ_a Q per row
    std::size_t trimmed = 0;
    double propensity_min = 0.0;
    double propensity_max = 0.0;
    bool propensity_converged = true;
};

AipwResult aipw_contributions(const Dataset& d, const std::vector<std::size_t>& rows,
                              const DesignFormula& outcome_formula,
                              const DesignFormula& propensity_formula, const EstimatorConfig& c);

} // namespace lmg

#endif // LMG_ESTIMATORS_HPP

#ifndef LMG_REGRESSION_HPP
#define LMG_REGRESSION_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmg/formula.hpp"

namespace lmg {

struct NuisanceFit {
    enum class Kind { LinearMean, LogisticProb };

    Kind kind = Kind::LinearMean;
    DesignFormula formula;
    std::string outcome;
    Eigen::VectorXd coefficients; // one per term; pruned terms are 0
    std::vector<bool> pruned;     // all-zero or duplicate design columns
    int iterations = 0;
    double gradient_norm = 0.0;   // logistic: |X'(y - p)| / n at the final iterate
    bool converged = true;
    double residual_variance = 0.0;       // linear only
    Eigen::MatrixXd unscaled_covariance;  // linear only: (X'WX)^-1 over all terms, 0 on pruned

    double predict(const BoundFormula& x, std::size_t row) const;
    /// Predictions on `rows` of the dataset `x` was bound to.
    Eigen::VectorXd predict(const BoundFormula& x, const std::vector<std::size_t>& rows) const;
    double predict(const Dataset& d, std::size_t row, const Overrides& overrides = {}) const;
};

constexpr double kLogisticTolerance = 1e-8;
constexpr double kLogisticLoglikTolerance = 1e-14; // relative change per Newton step
constexpr int kLogisticMaxIterations = 100;

/// Weighted least squares on `rows`. Throws SingularDesign when the kept
/// columns are rank deficient.
NuisanceFit fit_linear(const Dataset& d, const DesignFormula& f, const std::string& outcome,
                       const std::vector<std::size_t>& rows,
                       const std::vector<double>* weights = nullptr);
NuisanceFit fit_linear(const Dataset& d, const DesignFormula& f, const std::string& outcome);

/// Logistic regression by IRLS; outcome must be 0/1. Stops when the gradient
/// or the log-likelihood change falls under tolerance; `converged` is false
/// when neither happened within the iteration cap.
NuisanceFit fit_logistic(const Dataset& d, const DesignFormula& f, const std::string& outcome,
                         const std::vector<std::size_t>& rows);
NuisanceFit fit_logistic(const Dataset& d, const DesignFormula& f, const std::string& outcome);

double logistic(double x);

} // namespace lmg

#endif // LMG_REGRESSION_HPP

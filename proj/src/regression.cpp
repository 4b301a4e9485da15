#include "lmg/regression.hpp"

#include <cmath>
#include <limits>

#include "lmg/errors.hpp"

namespace lmg {

namespace {

struct Design {
    Eigen::MatrixXd x;         // kept columns only
    std::vector<int> kept;     // term index of each kept column
    std::vector<bool> pruned;  // per term
};

Design build_design(const Dataset& d, const DesignFormula& f, const std::vector<std::size_t>& rows) {
    if (rows.empty())
        throw InsufficientData("no rows to fit '" + f.to_string() + "'");
    BoundFormula bound(f, d);
    Eigen::MatrixXd full = bound.matrix(rows);
    Design out;
    out.pruned.assign(f.size(), false);
    for (Eigen::Index c = 0; c < full.cols(); ++c) {
        bool zero = (full.col(c).array() == 0.0).all();
        bool duplicate = false;
        for (int k : out.kept)
            if ((full.col(c).array() == full.col(k).array()).all()) {
                duplicate = true;
                break;
            }
        if (zero || duplicate)
            out.pruned[c] = true;
        else
            out.kept.push_back(static_cast<int>(c));
    }
    out.x.resize(full.rows(), static_cast<Eigen::Index>(out.kept.size()));
    for (std::size_t k = 0; k < out.kept.size(); ++k)
        out.x.col(static_cast<Eigen::Index>(k)) = full.col(out.kept[k]);
    return out;
}

Eigen::VectorXd response(const Dataset& d, const std::string& outcome,
                         const std::vector<std::size_t>& rows) {
    int c = d.index(outcome);
    Eigen::VectorXd y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = d.at(rows[i], c);
    return y;
}

void require_full_rank(const Eigen::MatrixXd& x, const DesignFormula& f) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < x.cols())
        throw SingularDesign("design for '" + f.to_string() + "' has rank " +
                             std::to_string(qr.rank()) + " < " + std::to_string(x.cols()) +
                             " after pruning");
}

Eigen::VectorXd expand(const Eigen::VectorXd& kept_coef, const std::vector<int>& kept, std::size_t p) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (std::size_t k = 0; k < kept.size(); ++k)
        out(kept[k]) = kept_coef(static_cast<Eigen::Index>(k));
    return out;
}

} // namespace

double logistic(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

double NuisanceFit::predict(const BoundFormula& x, std::size_t row) const {
    double eta = 0.0;
    for (std::size_t t = 0; t < pruned.size(); ++t)
        if (!pruned[t])
            eta += coefficients(static_cast<Eigen::Index>(t)) * x.term(row, t);
    return kind == Kind::LogisticProb ? logistic(eta) : eta;
}

Eigen::VectorXd NuisanceFit::predict(const BoundFormula& x, const std::vector<std::size_t>& rows) const {
    Eigen::VectorXd out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = predict(x, rows[i]);
    return out;
}

double NuisanceFit::predict(const Dataset& d, std::size_t row, const Overrides& overrides) const {
    return predict(BoundFormula(formula, d, overrides), row);
}

NuisanceFit fit_linear(const Dataset& d, const DesignFormula& f, const std::string& outcome,
                       const std::vector<std::size_t>& rows, const std::vector<double>* weights) {
    Design design = build_design(d, f, rows);
    Eigen::VectorXd y = response(d, outcome, rows);
    Eigen::MatrixXd x = design.x;
    if (weights) {
        if (weights->size() != rows.size())
            throw InvalidQuery("weight vector length does not match the row count");
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            double s = std::sqrt((*weights)[static_cast<std::size_t>(i)]);
            x.row(i) *= s;
            y(i) *= s;
        }
    }
    require_full_rank(x, f);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    Eigen::VectorXd beta = qr.solve(y);

    NuisanceFit fit;
    fit.kind = NuisanceFit::Kind::LinearMean;
    fit.formula = f;
    fit.outcome = outcome;
    fit.pruned = design.pruned;
    fit.coefficients = expand(beta, design.kept, f.size());
    Eigen::VectorXd resid = y - x * beta;
    double dof = static_cast<double>(x.rows() - x.cols());
    fit.residual_variance = dof > 0 ? resid.squaredNorm() / dof : 0.0;

    Eigen::Index k = x.cols();
    Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd cov = r_inv * r_inv.transpose();
    fit.unscaled_covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f.size()),
                                                    static_cast<Eigen::Index>(f.size()));
    for (std::size_t a = 0; a < design.kept.size(); ++a)
        for (std::size_t b = 0; b < design.kept.size(); ++b)
            fit.unscaled_covariance(design.kept[a], design.kept[b]) =
                cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    return fit;
}

NuisanceFit fit_linear(const Dataset& d, const DesignFormula& f, const std::string& outcome) {
    return fit_linear(d, f, outcome, all_rows(d));
}

NuisanceFit fit_logistic(const Dataset& d, const DesignFormula& f, const std::string& outcome,
                         const std::vector<std::size_t>& rows) {
    Design design = build_design(d, f, rows);
    Eigen::VectorXd y = response(d, outcome, rows);
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y(i) != 0.0 && y(i) != 1.0)
            throw InvalidQuery("logistic outcome '" + outcome + "' must be 0/1");
    const Eigen::MatrixXd& x = design.x;
    require_full_rank(x, f);
    const double n = static_cast<double>(x.rows());

    auto loglik = [&](const Eigen::VectorXd& eta) {
        double ll = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            double e = eta(i);
            // log(1 + exp(e)) computed stably
            double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
            ll += y(i) * e - softplus;
        }
        return ll;
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
    Eigen::VectorXd eta = x * beta;
    double ll = loglik(eta);
    NuisanceFit fit;
    fit.converged = false;
    double ll_change = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter <= kLogisticMaxIterations; ++iter) {
        Eigen::VectorXd p = eta.unaryExpr([](double e) { return logistic(e); });
        Eigen::VectorXd grad = x.transpose() * (y - p);
        fit.gradient_norm = grad.norm() / n;
        fit.iterations = iter;
        if (fit.gradient_norm <= kLogisticTolerance || ll_change <= kLogisticLoglikTolerance * (std::abs(ll) + 0.1)) {
            fit.converged = true;
            break;
        }
        if (iter == kLogisticMaxIterations)
            break;
        Eigen::VectorXd w = (p.array() * (1.0 - p.array())).matrix();
        Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() != Eigen::Success)
            throw SingularDesign("logistic information matrix is singular for '" + f.to_string() + "'");
        Eigen::VectorXd step = ldlt.solve(grad);
        double scale = 1.0;
        for (int halving = 0; halving < 30; ++halving) {
            Eigen::VectorXd candidate = beta + scale * step;
            Eigen::VectorXd cand_eta = x * candidate;
            double cand_ll = loglik(cand_eta);
            if (cand_ll >= ll || halving == 29) {
                ll_change = std::abs(cand_ll - ll);
                beta = candidate;
                eta = cand_eta;
                ll = cand_ll;
                break;
            }
            scale *= 0.5;
        }
    }
    fit.kind = NuisanceFit::Kind::LogisticProb;
    fit.formula = f;
    fit.outcome = outcome;
    fit.pruned = design.pruned;
    fit.coefficients = expand(beta, design.kept, f.size());
    return fit;
}

NuisanceFit fit_logistic(const Dataset& d, const DesignFormula& f, const std::string& outcome) {
    return fit_logistic(d, f, outcome, all_rows(d));
}

} // namespace lmg

#include "lmg/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>

#include "lmg/errors.hpp"
#include "lmg/parallel.hpp"
#include "lmg/regression.hpp"
#include "lmg/scm.hpp"

namespace lmg {

namespace {

constexpr double kZ95 = 1.959963984540054;

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2)
        return 0.0;
    double m = mean(v), ss = 0.0;
    for (double x : v)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

EstimateReport make_report(std::string name, double point, double se, std::size_t n) {
    EstimateReport r;
    r.estimator = std::move(name);
    r.point = point;
    r.se = se;
    r.ci95 = {point - kZ95 * se, point + kZ95 * se};
    r.n_used = n;
    return r;
}

void check_trimming(std::size_t trimmed, std::size_t n, const EstimatorConfig& c,
                    const std::string& what) {
    if (n > 0 && static_cast<double>(trimmed) > c.max_trim_fraction * static_cast<double>(n))
        throw PositivityViolation(std::to_string(trimmed) + " of " + std::to_string(n) + " " + what +
                                  " fall outside (" + format_number(c.trim_epsilon) + ", " +
                                  format_number(1.0 - c.trim_epsilon) + ")");
}

AipwResult aipw_core(const Dataset& d, const std::vector<std::size_t>& fit_rows,
                     const std::vector<std::size_t>& eval_rows, const DesignFormula& qf,
                     const DesignFormula& pf, const EstimatorConfig& c) {
    NuisanceFit q = fit_linear(d, qf, c.outcome, fit_rows);
    NuisanceFit pi = fit_logistic(d, pf, c.exposure, fit_rows);

    BoundFormula q_obs(qf, d), q_1(qf, d, {{c.exposure, 1.0}}), q_0(qf, d, {{c.exposure, 0.0}});
    BoundFormula p_obs(pf, d);
    int a_col = d.index(c.exposure), y_col = d.index(c.outcome);

    AipwResult out;
    out.propensity_converged = pi.converged;
    out.propensity_min = 1.0;
    out.propensity_max = 0.0;
    const double eps = c.trim_epsilon;
    for (std::size_t i : eval_rows) {
        double p = pi.predict(p_obs, i);
        out.propensity_min = std::min(out.propensity_min, p);
        out.propensity_max = std::max(out.propensity_max, p);
        if (p < eps || p > 1.0 - eps) {
            ++out.trimmed;
            p = std::clamp(p, eps, 1.0 - eps);
        }
        double a = d.at(i, a_col), y = d.at(i, y_col);
        double contrast = q.predict(q_1, i) - q.predict(q_0, i);
        double weight = (a - p) / (p * (1.0 - p));
        out.outcome_contrast.push_back(contrast);
        out.contributions.push_back(contrast + weight * (y - q.predict(q_obs, i)));
    }
    check_trimming(out.trimmed, eval_rows.size(), c, "exposure propensities");
    return out;
}

nlohmann::json aipw_diagnostics(const AipwResult& a) {
    return {{"propensity_range", {a.propensity_min, a.propensity_max}},
            {"trimmed", a.trimmed},
            {"propensity_converged", a.propensity_converged}};
}

nlohmann::json context_counts(const Dataset& d, const EstimatorConfig& c) {
    if (!d.has(c.indicator))
        return nlohmann::json::object();
    std::size_t ones = rows_where(d, c.indicator, 1.0).size();
    return {{c.indicator + "=0", d.rows() - ones}, {c.indicator + "=1", ones}};
}

} // namespace

DesignFormula EstimatorConfig::formula(const std::string& key) const {
    auto it = formulas.find(key);
    if (it == formulas.end())
        throw SpecError("estimator config has no formula '" + key + "'");
    return DesignFormula::parse(it->second);
}

EstimatorConfig appendix_a_config() {
    EstimatorConfig c;
    c.formulas = {
        {"drn_outcome", "1 + W + W^2 + A + A:W + R_Y0 + R_Y0:W + R_Y0:A + R_Y0:A:W + R_Y0:Y0 + R_Y0:A:Y0"},
        {"drn_propensity", "1 + W + R_Y0 + R_Y0:W + R_Y0:Y0"},
        {"drf_outcome", "1 + W + W^2 + Y0 + A + A:W + A:Y0"},
        {"drf_propensity", "1 + W + Y0"},
        {"drf_tau", "1 + W + W^2"},
        {"drf_missingness", "1 + W"},
        {"aipw_outcome", "1 + W + W^2 + Y0 + A + A:W + A:Y0"},
        {"aipw_propensity", "1 + W + Y0"},
        {"mim_outcome", "1 + W + A + R_Y0 + R_Y0:Y0 + R_Y0:W + R_Y0:A + A:W + A:R_Y0:Y0 + W^2"},
        {"mi_imputation", "1 + W + A + Y1"},
    };
    return c;
}

EstimatorConfig estimator_config_from_json(const nlohmann::json& j) {
    EstimatorConfig c = appendix_a_config();
    if (!j.is_object())
        throw SpecError("estimator config must be a JSON object");
    static const std::set<std::string> known{
        "exposure", "outcome", "missing", "indicator", "formulas", "trim_epsilon", "max_trim_fraction",
        "bootstrap", "seed", "imputations", "conventional_sign", "cross_fit"};
    for (const auto& [k, _] : j.items())
        if (!known.count(k))
            throw SpecError("unknown estimator config field '" + k + "'");
    c.exposure = j.value("exposure", c.exposure);
    c.outcome = j.value("outcome", c.outcome);
    c.missing = j.value("missing", c.missing);
    c.indicator = j.value("indicator", c.indicator);
    if (j.contains("formulas"))
        for (const auto& [k, v] : j.at("formulas").items()) {
            if (!c.formulas.count(k))
                throw SpecError("unknown formula key '" + k + "'");
            c.formulas[k] = v.get<std::string>();
            DesignFormula::parse(c.formulas[k]);
        }
    c.trim_epsilon = j.value("trim_epsilon", c.trim_epsilon);
    c.max_trim_fraction = j.value("max_trim_fraction", c.max_trim_fraction);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    c.seed = j.value("seed", c.seed);
    c.imputations = j.value("imputations", c.imputations);
    c.conventional_sign = j.value("conventional_sign", c.conventional_sign);
    c.cross_fit = j.value("cross_fit", c.cross_fit);
    if (!(c.trim_epsilon > 0.0 && c.trim_epsilon < 0.5))
        throw SpecError("trim_epsilon must lie in (0, 0.5)");
    return c;
}

nlohmann::json to_json(const EstimatorConfig& c) {
    return {{"exposure", c.exposure},
            {"outcome", c.outcome},
            {"missing", c.missing},
            {"indicator", c.indicator},
            {"formulas", c.formulas},
            {"trim_epsilon", c.trim_epsilon},
            {"max_trim_fraction", c.max_trim_fraction},
            {"bootstrap", c.bootstrap},
            {"seed", c.seed},
            {"imputations", c.imputations},
            {"conventional_sign", c.conventional_sign},
            {"cross_fit", c.cross_fit}};
}

nlohmann::json to_json(const EstimateReport& r) {
    return {{"estimator", r.estimator},
            {"point", r.point},
            {"se", r.se},
            {"ci95", {r.ci95.first, r.ci95.second}},
            {"n_used", r.n_used},
            {"diagnostics", r.diagnostics}};
}

AipwResult aipw_contributions(const Dataset& d, const std::vector<std::size_t>& rows,
                              const DesignFormula& outcome_formula,
                              const DesignFormula& propensity_formula, const EstimatorConfig& c) {
    return aipw_core(d, rows, rows, outcome_formula, propensity_formula, c);
}

EstimateReport dr_nate(const Dataset& d, const EstimatorConfig& c) {
    DesignFormula qf = c.formula("drn_outcome"), pf = c.formula("drn_propensity");
    std::vector<std::size_t> rows = all_rows(d);
    AipwResult a;
    if (!c.cross_fit) {
        a = aipw_core(d, rows, rows, qf, pf, c);
    } else {
        std::mt19937_64 rng(mix64(c.seed));
        std::shuffle(rows.begin(), rows.end(), rng);
        std::size_t half = rows.size() / 2;
        std::vector<std::size_t> fold[2] = {{rows.begin(), rows.begin() + half},
                                            {rows.begin() + half, rows.end()}};
        for (auto& f : fold)
            std::sort(f.begin(), f.end());
        a.propensity_min = 1.0;
        for (int k = 0; k < 2; ++k) {
            AipwResult part = aipw_core(d, fold[1 - k], fold[k], qf, pf, c);
            a.contributions.insert(a.contributions.end(), part.contributions.begin(),
                                   part.contributions.end());
            a.trimmed += part.trimmed;
            a.propensity_min = std::min(a.propensity_min, part.propensity_min);
            a.propensity_max = std::max(a.propensity_max, part.propensity_max);
            a.propensity_converged = a.propensity_converged && part.propensity_converged;
        }
    }
    double n = static_cast<double>(a.contributions.size());
    EstimateReport r = make_report("drn", mean(a.contributions), sample_sd(a.contributions) / std::sqrt(n),
                                   a.contributions.size());
    r.diagnostics = aipw_diagnostics(a);
    r.diagnostics["contexts"] = context_counts(d, c);
    r.diagnostics["cross_fit"] = c.cross_fit;
    return r;
}

EstimateReport dr_fate(const Dataset& d, const EstimatorConfig& c) {
    std::vector<std::size_t> complete = rows_where(d, c.indicator, 1.0);
    if (complete.empty())
        throw InsufficientData("no rows with " + c.indicator + " = 1");
    AipwResult a = aipw_core(d, complete, complete, c.formula("drf_outcome"),
                             c.formula("drf_propensity"), c);

    const std::string pseudo = "__pseudo_outcome";
    Dataset work = d;
    std::vector<double> delta(d.rows(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> contrast(d.rows(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < complete.size(); ++k) {
        delta[complete[k]] = a.contributions[k];
        contrast[complete[k]] = a.outcome_contrast[k];
    }
    work.add_column(pseudo, delta);
    DesignFormula tf = c.formula("drf_tau");
    NuisanceFit tau_fit = fit_linear(work, tf, pseudo, complete);
    BoundFormula tau_x(tf, work);

    std::vector<double> p_obs(d.rows(), 1.0);
    bool all_complete = complete.size() == d.rows();
    bool missingness_converged = true;
    if (!all_complete) {
        DesignFormula mf = c.formula("drf_missingness");
        NuisanceFit m = fit_logistic(d, mf, c.indicator);
        missingness_converged = m.converged;
        BoundFormula mx(mf, d);
        for (std::size_t i = 0; i < d.rows(); ++i)
            p_obs[i] = m.predict(mx, i);
    }
    std::size_t trimmed = 0;
    double p_min = 1.0;
    for (double& p : p_obs) {
        p_min = std::min(p_min, p);
        if (p < c.trim_epsilon) {
            ++trimmed;
            p = c.trim_epsilon;
        }
    }
    check_trimming(trimmed, d.rows(), c, "missingness propensities");

    int r_col = d.index(c.indicator);
    std::vector<double> psi(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) {
        double tau = tau_fit.predict(tau_x, i);
        double r = d.at(i, r_col);
        double correction = 0.0;
        if (r == 1.0)
            correction = c.conventional_sign ? delta[i] - tau : tau - contrast[i];
        psi[i] = tau + r / p_obs[i] * correction;
    }
    double phi = mean(psi);
    double ss = 0.0;
    for (double v : psi)
        ss += (v - phi) * (v - phi);
    double n = static_cast<double>(d.rows());
    EstimateReport rep = make_report("drf", phi, std::sqrt(ss) / n, d.rows());
    rep.diagnostics = aipw_diagnostics(a);
    rep.diagnostics["missingness_propensity_min"] = p_min;
    rep.diagnostics["missingness_trimmed"] = trimmed;
    rep.diagnostics["missingness_converged"] = missingness_converged;
    rep.diagnostics["sign"] = c.conventional_sign ? "conventional" : "printed";
    rep.diagnostics["contexts"] = context_counts(d, c);
    return rep;
}

double mim_point_estimate(const Dataset& d, const EstimatorConfig& c) {
    DesignFormula f = c.formula("mim_outcome");
    NuisanceFit m = fit_linear(d, f, c.outcome);
    BoundFormula x1(f, d, {{c.exposure, 1.0}}), x0(f, d, {{c.exposure, 0.0}});
    double total = 0.0;
    for (std::size_t i = 0; i < d.rows(); ++i)
        total += m.predict(x1, i) - m.predict(x0, i);
    return total / static_cast<double>(d.rows());
}

EstimateReport mim_estimate(const Dataset& d, const EstimatorConfig& c) {
    double point = mim_point_estimate(d, c);
    double se = bootstrap_se([&](const Dataset& b) { return mim_point_estimate(b, c); }, d, c.bootstrap, c.seed);
    EstimateReport r = make_report("mim", point, se, d.rows());
    r.diagnostics["bootstrap"] = c.bootstrap;
    r.diagnostics["contexts"] = context_counts(d, c);
    return r;
}

EstimateReport mi_estimate(const Dataset& d, const EstimatorConfig& c) {
    if (c.imputations < 2)
        throw InvalidQuery("multiple imputation needs at least 2 imputations");
    std::vector<std::size_t> complete = rows_where(d, c.indicator, 1.0);
    if (complete.empty())
        throw InsufficientData("no rows with " + c.indicator + " = 1");
    std::vector<std::size_t> incomplete = rows_where(d, c.indicator, 0.0);

    DesignFormula imp_f = c.formula("mi_imputation");
    NuisanceFit imp = fit_linear(d, imp_f, c.missing, complete);
    BoundFormula imp_x(imp_f, d);
    std::vector<int> kept;
    for (std::size_t t = 0; t < imp.pruned.size(); ++t)
        if (!imp.pruned[t])
            kept.push_back(static_cast<int>(t));
    const auto k = static_cast<Eigen::Index>(kept.size());
    Eigen::MatrixXd v(k, k);
    Eigen::VectorXd beta_hat(k);
    for (Eigen::Index a = 0; a < k; ++a) {
        beta_hat(a) = imp.coefficients(kept[a]);
        for (Eigen::Index b = 0; b < k; ++b)
            v(a, b) = imp.unscaled_covariance(kept[a], kept[b]);
    }
    Eigen::MatrixXd chol = v.llt().matrixL();
    double dof = static_cast<double>(complete.size()) - static_cast<double>(k);
    if (dof < 1)
        throw InsufficientData("too few complete rows for the imputation model");

    DesignFormula qf = c.formula("aipw_outcome"), pf = c.formula("aipw_propensity");
    std::vector<double> estimates(c.imputations), variances(c.imputations);
    std::size_t trimmed = 0;
    for (std::size_t m = 0; m < c.imputations; ++m) {
        std::mt19937_64 rng(mix64(mix64(c.seed) ^ (m + 1)));
        std::normal_distribution<double> z(0.0, 1.0);
        double sigma2 = imp.residual_variance * dof / std::chi_squared_distribution<double>(dof)(rng);
        Eigen::VectorXd draw(k);
        for (Eigen::Index a = 0; a < k; ++a)
            draw(a) = z(rng);
        Eigen::VectorXd beta = beta_hat + std::sqrt(sigma2) * chol * draw;

        Dataset filled = d.select_rows(all_rows(d));
        auto& col = filled.mutable_column(c.missing);
        std::vector<double> row(imp_f.size());
        for (std::size_t i : incomplete) {
            imp_x.row(i, row.data());
            double mu = 0.0;
            for (Eigen::Index a = 0; a < k; ++a)
                mu += beta(a) * row[static_cast<std::size_t>(kept[a])];
            col[i] = mu + std::sqrt(sigma2) * z(rng);
        }
        AipwResult a = aipw_core(filled, all_rows(filled), all_rows(filled), qf, pf, c);
        estimates[m] = mean(a.contributions);
        double s = sample_sd(a.contributions);
        variances[m] = s * s / static_cast<double>(a.contributions.size());
        trimmed += a.trimmed;
    }
    double q_bar = mean(estimates);
    double within = mean(variances);
    double between = sample_sd(estimates);
    between *= between;
    double m = static_cast<double>(c.imputations);
    double total = within + (1.0 + 1.0 / m) * between;
    EstimateReport r = make_report("mi", q_bar, std::sqrt(total), d.rows());
    r.diagnostics["imputations"] = c.imputations;
    r.diagnostics["within_variance"] = within;
    r.diagnostics["between_variance"] = between;
    r.diagnostics["trimmed"] = trimmed;
    r.diagnostics["contexts"] = context_counts(d, c);
    return r;
}

EstimateReport cc_estimate(const Dataset& d, const EstimatorConfig& c) {
    std::vector<std::size_t> complete = rows_where(d, c.indicator, 1.0);
    if (complete.empty())
        throw InsufficientData("no rows with " + c.indicator + " = 1");
    AipwResult a = aipw_core(d, complete, complete, c.formula("aipw_outcome"),
                             c.formula("aipw_propensity"), c);
    double n = static_cast<double>(complete.size());
    EstimateReport r = make_report("cc", mean(a.contributions), sample_sd(a.contributions) / std::sqrt(n),
                                   complete.size());
    r.diagnostics = aipw_diagnostics(a);
    r.diagnostics["contexts"] = context_counts(d, c);
    return r;
}

const std::vector<std::string>& estimator_names() {
    static const std::vector<std::string> names{"drn", "drf", "mim", "mi", "cc"};
    return names;
}

EstimateReport run_estimator(const std::string& name, const Dataset& d, const EstimatorConfig& c) {
    if (name == "drn")
        return dr_nate(d, c);
    if (name == "drf")
        return dr_fate(d, c);
    if (name == "mim")
        return mim_estimate(d, c);
    if (name == "mi")
        return mi_estimate(d, c);
    if (name == "cc")
        return cc_estimate(d, c);
    throw InvalidQuery("unknown estimator '" + name + "' (expected drn, drf, mim, mi or cc)");
}

double bootstrap_se(const std::function<double(const Dataset&)>& estimator, const Dataset& d,
                    std::size_t b, std::uint64_t seed) {
    if (b < 100)
        throw InvalidQuery("bootstrap needs at least 100 resamples");
    std::vector<double> estimates(b);
    std::vector<char> ok(b, 0);
    parallel_for(b, [&](std::size_t k) {
        StreamRng rng(seed, 0xB0075742ULL, k);
        std::uniform_int_distribution<std::size_t> pick(0, d.rows() - 1);
        std::vector<std::size_t> rows(d.rows());
        for (auto& r : rows)
            r = pick(rng);
        try {
            estimates[k] = estimator(d.select_rows(rows));
            ok[k] = std::isfinite(estimates[k]);
        } catch (const Error&) {
        }
    });
    std::vector<double> good;
    for (std::size_t k = 0; k < b; ++k)
        if (ok[k])
            good.push_back(estimates[k]);
    std::size_t failed = b - good.size();
    if (static_cast<double>(failed) > 0.05 * static_cast<double>(b))
        throw BootstrapUnstable(std::to_string(failed) + " of " + std::to_string(b) +
                                " resamples failed");
    return sample_sd(good);
}

} // namespace lmg

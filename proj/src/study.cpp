#include "lmg/study.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "lmg/errors.hpp"
#include "lmg/parallel.hpp"

namespace lmg {

namespace {

double quantile(const std::vector<double>& sorted, double p) {
    double pos = p * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

const std::vector<std::string>& study_estimators() {
    static const std::vector<std::string> names{"drf", "drn", "mi", "mim"};
    return names;
}

double estimate_point(const std::string& name, const Dataset& d, const EstimatorConfig& c) {
    if (name == "mim")
        return mim_point_estimate(d, c);
    return run_estimator(name, d, c).point;
}

void stats_row(std::ostream& out, const std::string& scenario, const std::string& label,
               const std::string& kind, const BoxStats& s, std::size_t count, const std::string& extra) {
    out << scenario << ',' << label << ',' << kind << ',' << count << ',' << format_number(s.mean) << ','
        << format_number(s.sd) << ',' << format_number(s.lower_whisker) << ',' << format_number(s.q1)
        << ',' << format_number(s.median) << ',' << format_number(s.q3) << ','
        << format_number(s.upper_whisker) << ',' << extra << "\r\n";
}

} // namespace

BoxStats box_stats(std::vector<double> values) {
    if (values.empty())
        throw InsufficientData("no values to summarize");
    std::sort(values.begin(), values.end());
    BoxStats s;
    double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values)
        ss += (v - s.mean) * (v - s.mean);
    s.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    double iqr = s.q3 - s.q1;
    s.lower_whisker = *std::find_if(values.begin(), values.end(),
                                    [&](double v) { return v >= s.q1 - 1.5 * iqr; });
    s.upper_whisker = *std::find_if(values.rbegin(), values.rend(),
                                    [&](double v) { return v <= s.q3 + 1.5 * iqr; });
    return s;
}

const Fig4Scenario& fig4_scenario(const std::string& name) {
    static const Fig4Scenario fifty{
        "50",
        -4.010287,
        1.261823,
        {{"drf", "DR.F", {-4.017672, 0, -5.178008, -4.382609, -4.018687, -3.690454, -2.694362}, 0.10},
         {"drn", "DR.N", {1.262105, 0, 0.4144086, 1.0272653, 1.2753270, 1.5011448, 2.0350559}, 0.10},
         {"mi", "Imp.", {3.079754, 0, 2.274969, 2.867985, 3.083811, 3.292128, 3.923265}, 0.25},
         {"mim", "MIM", {1.741383, 0, 1.170960, 1.567742, 1.743504, 1.924765, 2.447416}, 0.15}}};
    static const Fig4Scenario thirty{
        "30",
        -4.007316,
        -0.8844339,
        {{"drf", "DR.F", {-4.024713, 0, -5.307663, -4.378740, -4.023757, -3.723088, -2.803664}, 0.10},
         {"drn", "DR.N", {-0.8773132, 0, -1.69007134, -1.11406314, -0.88523144, -0.64939930, -0.04761483}, 0.10},
         {"mi", "Imp.", {0.3968317, 0, -0.1964109, 0.2131180, 0.3598920, 0.5939617, 1.1088804}, 0.25},
         {"mim", "MIM", {-0.5541139, 0, -1.2114910, -0.7458321, -0.5647480, -0.3808295, 0.1384041}, 0.15}}};
    if (name == "50")
        return fifty;
    if (name == "30")
        return thirty;
    throw SpecError("unknown scenario '" + name + "' (expected 50 or 30)");
}

StudyResult run_fig4_study(const StudyConfig& config) {
    if (config.m < 1 || config.n < 1)
        throw InvalidQuery("replication study needs m >= 1 and n >= 1");
    const Fig4Scenario& scenario = fig4_scenario(config.scenario);
    ScmSpec spec = appendix_a_scenario(config.scenario);

    StudyResult r;
    r.config = config;
    const auto& names = study_estimators();
    std::vector<std::vector<double>> values(config.m, std::vector<double>(names.size()));
    std::vector<std::vector<char>> ok(config.m, std::vector<char>(names.size(), 0));
    parallel_for(config.m, [&](std::size_t rep) {
        Dataset d = sample_observational(spec, config.n, mix64(config.seed) + rep);
        for (std::size_t k = 0; k < names.size(); ++k) {
            try {
                values[rep][k] = estimate_point(names[k], d, config.estimators);
                ok[rep][k] = std::isfinite(values[rep][k]);
            } catch (const Error&) {
            }
        }
    });
    for (std::size_t k = 0; k < names.size(); ++k) {
        auto& column = r.estimates[names[k]];
        std::size_t failed = 0;
        for (std::size_t rep = 0; rep < config.m; ++rep) {
            if (ok[rep][k])
                column.push_back(values[rep][k]);
            else
                ++failed;
        }
        r.failures[names[k]] = failed;
        if (!column.empty())
            r.stats[names[k]] = box_stats(column);
    }

    r.oracle = oracle_effects(spec, {"A", "Y1", Target::Nate}, config.oracle_n, mix64(config.seed ^ 0x0AC1E));
    for (const auto& t : scenario.targets) {
        TargetCheck c;
        c.estimator = t.estimator;
        c.target = t.published.mean;
        c.tolerance = t.tolerance;
        auto it = r.stats.find(t.estimator);
        c.mean = it == r.stats.end() ? std::nan("") : it->second.mean;
        c.pass = std::abs(c.mean - c.target) <= c.tolerance;
        r.checks.push_back(c);
    }
    return r;
}

void write_summary_csv(const StudyResult& r, std::ostream& out) {
    const Fig4Scenario& scenario = fig4_scenario(r.config.scenario);
    out << "scenario,estimator,kind,count,mean,sd,lower_whisker,lower_quartile,median,upper_quartile,"
           "upper_whisker,published_mean,tolerance,pass\r\n";
    for (const auto& t : scenario.targets) {
        auto it = r.stats.find(t.estimator);
        auto check = std::find_if(r.checks.begin(), r.checks.end(),
                                  [&](const TargetCheck& c) { return c.estimator == t.estimator; });
        std::string extra = format_number(t.published.mean) + "," + format_number(t.tolerance) + "," +
                            (check != r.checks.end() && check->pass ? "true" : "false");
        if (it != r.stats.end())
            stats_row(out, scenario.name, t.label, "replicates", it->second,
                      r.estimates.at(t.estimator).size(), extra);
        stats_row(out, scenario.name, t.label, "published", t.published, 0, ",,");
    }
    auto oracle_row = [&](const std::string& label, double value, double se, double published) {
        out << scenario.name << ',' << label << ",oracle," << r.oracle.n_mc << ',' << format_number(value)
            << ',' << format_number(se) << ",,,,,," << format_number(published) << ",,\r\n";
    };
    oracle_row("oracle FATE", r.oracle.fate, r.oracle.mc_se_fate, scenario.oracle_fate);
    oracle_row("oracle NATE", r.oracle.nate, r.oracle.mc_se_nate, scenario.oracle_nate);
}

void write_replicates_csv(const StudyResult& r, std::ostream& out) {
    out << "scenario,estimator,replicate,estimate\r\n";
    for (const auto& [name, values] : r.estimates)
        for (std::size_t i = 0; i < values.size(); ++i)
            out << r.config.scenario << ',' << name << ',' << i << ',' << format_number(values[i]) << "\r\n";
}

} // namespace lmg

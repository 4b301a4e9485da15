#ifndef LMG_STUDY_HPP
#define LMG_STUDY_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lmg/estimators.hpp"
#include "lmg/scm.hpp"

namespace lmg {

/// Boxplot statistics with Tukey whiskers (most extreme points within
/// 1.5 IQR of the quartiles). Quartiles use linear interpolation.
struct BoxStats {
    double mean = 0.0;
    double sd = 0.0;
    double lower_whisker = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double upper_whisker = 0.0;
};

BoxStats box_stats(std::vector<double> values);

/// Published replication summary for one estimator.
struct Fig4Target {
    std::string estimator; // drf, drn, mi, mim
    std::string label;     // DR.F, DR.N, Imp., MIM
    BoxStats published;
    double tolerance = 0.0; // allowed |mean - published.mean|
};

struct Fig4Scenario {
    std::string name; // "50" or "30"
    double oracle_fate = 0.0;
    double oracle_nate = 0.0;
    std::vector<Fig4Target> targets;
};

const Fig4Scenario& fig4_scenario(const std::string& name);

struct StudyConfig {
    std::string scenario = "50";
    std::size_t n = 5000;
    std::size_t m = 200;
    std::uint64_t seed = 20250101;
    std::size_t oracle_n = 2000000;
    EstimatorConfig estimators = appendix_a_config();
};

struct TargetCheck {
    std::string estimator;
    double mean = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct StudyResult {
    StudyConfig config;
    std::map<std::string, std::vector<double>> estimates; // by estimator, replication order
    std::map<std::string, std::size_t> failures;
    std::map<std::string, BoxStats> stats;
    OracleResult oracle;
    std::vector<TargetCheck> checks;
};

/// m replications of n rows from the benchmark scenario, each estimated with
/// DR.F, DR.N, Imp. and MIM (point estimates), plus the MC oracle lines.
StudyResult run_fig4_study(const StudyConfig& config);

/// Tidy summary: one row per estimator and one per oracle line.
void write_summary_csv(const StudyResult& r, std::ostream& out);
/// One row per (replication, estimator).
void write_replicates_csv(const StudyResult& r, std::ostream& out);

} // namespace lmg

#endif // LMG_STUDY_HPP

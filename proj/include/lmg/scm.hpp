#ifndef LMG_SCM_HPP
#define LMG_SCM_HPP

#include <cstdint>
#include <map>
#include <string>

#include "lmg/dataset.hpp"
#include "lmg/expression.hpp"
#include "lmg/lm_model.hpp"
#include "lmg/recovery.hpp"

namespace lmg {

struct Noise {
    enum class Law { Gaussian, BernoulliLogit };
    Law law = Law::Gaussian;
    double mean = 0.0;
    double sd = 1.0;
};

/// Structural assignment of one node.
///  - Gaussian: value = f(parents, U), U ~ N(mean, sd).
///  - BernoulliLogit: value = 1 with probability logistic(f(parents)).
/// `shifts` holds g_{Z,T} keyed by the nonempty set T of contextual parents
/// that are missing; f is used when none are.
struct Mechanism {
    Expr f;
    Noise noise;
    std::map<NodeSet, Expr> shifts;
};

/// Structural equations over an lm-graph. Every substantive and indicator
/// node has a mechanism; proxies are derived. Each bidirected edge a <-> b
/// (a < b) contributes a standard normal latent "L_a_b" visible to both ends.
struct ScmSpec {
    LmGraph graph;
    std::map<NodeId, Mechanism> mechanisms;
    std::map<std::string, double> parameters;
};

/// Checks variable scopes, shift coverage and laws; throws SpecError.
void validate_spec(const ScmSpec& spec);

ScmSpec scm_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScmSpec& spec);

/// Built-in benchmark: W, Y0 (missing, indicator R_Y0, proxy Y0_obs), A, Y1
/// with the exposure and outcome mechanisms shifted by R_Y0.
ScmSpec appendix_a_spec(double beta1, double beta2);
/// Named configurations "50" and "30".
ScmSpec appendix_a_scenario(const std::string& scenario);

using Intervention = std::map<NodeId, double>;

/// Every substantive and indicator column, unmasked. Columns follow the
/// topological order; row i depends only on (spec, seed, i).
Dataset sample_full(const ScmSpec& spec, std::size_t n, std::uint64_t seed,
                    const Intervention& intervention = {});
/// sample_full with missing-affected columns masked where their indicator is 0.
Dataset sample_observational(const ScmSpec& spec, std::size_t n, std::uint64_t seed);
Dataset sample_interventional(const ScmSpec& spec, const Intervention& intervention,
                              std::size_t n, std::uint64_t seed);

struct OracleResult {
    double fate = 0.0;
    double nate = 0.0;
    double mc_se_fate = 0.0;
    double mc_se_nate = 0.0;
    std::size_t n_mc = 0;
    std::uint64_t seed = 0;
};

/// Monte-Carlo FATE (do(A=a) with every indicator set to 1) and NATE (do(A=a)).
/// Both arms share noise draws row by row.
OracleResult oracle_effects(const ScmSpec& spec, const QuerySpec& q, std::size_t n_mc,
                            std::uint64_t seed);

nlohmann::json to_json(const OracleResult& r);

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based generator: a fresh stream per (seed, stream, counter).
class StreamRng {
public:
    using result_type = std::uint64_t;

    StreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

private:
    std::uint64_t state_;
};

} // namespace lmg

#endif // LMG_SCM_HPP

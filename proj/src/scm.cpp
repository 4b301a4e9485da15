#include "lmg/scm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lmg/errors.hpp"
#include "lmg/parallel.hpp"

namespace lmg {

namespace {

const std::string kNoise = "U";
constexpr std::uint64_t kLatentStreamBase = 1u << 20;
constexpr std::size_t kChunk = 4096;

std::string latent_name(const Edge& e) {
    return "L_" + e.first + "_" + e.second;
}

std::string subset_key(const NodeSet& t) {
    std::string out;
    for (const auto& v : t)
        out += (out.empty() ? "" : ",") + v;
    return out;
}

NodeSet parse_subset_key(const std::string& key) {
    NodeSet out;
    std::size_t start = 0;
    while (start <= key.size()) {
        auto comma = key.find(',', start);
        std::string v = key.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (v.empty())
            throw SpecError("malformed shift key '" + key + "'");
        out.insert(v);
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

std::vector<NodeId> sampled_nodes(const ScmSpec& spec) {
    std::vector<NodeId> out;
    for (const auto& v : topological_order(spec.graph.graph())) {
        auto role = spec.graph.graph().kind(v).role;
        if (role != NodeKind::Role::Proxy)
            out.push_back(v);
    }
    return out;
}

NodeSet allowed_scope(const ScmSpec& spec, const NodeId& v) {
    const Admg& g = spec.graph.graph();
    NodeSet scope = parents(g, {v});
    for (const auto& e : g.bidirected())
        if (e.first == v || e.second == v)
            scope.insert(latent_name(e));
    for (const auto& [name, _] : spec.parameters)
        scope.insert(name);
    if (spec.mechanisms.at(v).noise.law == Noise::Law::Gaussian)
        scope.insert(kNoise);
    return scope;
}

void check_scope(const Expr& e, const NodeSet& scope, const NodeId& v, const std::string& which) {
    for (const auto& x : e.variables())
        if (!scope.count(x))
            throw SpecError(which + " of '" + v + "' references '" + x +
                            "', which is not a parent, latent, parameter or its noise term");
}

struct CompiledNode {
    NodeId name;
    int slot = 0;
    std::uint64_t stream = 0;
    Noise noise;
    Expr f;
    std::vector<int> context_slots;  // indicator slots of the contextual parents, sorted by parent
    std::vector<Expr> by_mask;       // index = bitmask of missing contextual parents
    bool fixed = false;
    double fixed_value = 0.0;
};

struct CompiledScm {
    std::vector<CompiledNode> nodes;
    std::vector<std::pair<int, std::uint64_t>> latents; // slot, stream
    std::vector<double> initial;                          // parameter values, zeros elsewhere
    int noise_slot = 0;
};

CompiledScm compile(const ScmSpec& spec, const Intervention& intervention) {
    validate_spec(spec);
    const Admg& g = spec.graph.graph();
    std::map<std::string, int> slots;
    auto order = sampled_nodes(spec);
    for (const auto& v : order)
        slots[v] = static_cast<int>(slots.size());
    for (const auto& e : g.bidirected())
        slots[latent_name(e)] = static_cast<int>(slots.size());
    for (const auto& [name, _] : spec.parameters)
        slots[name] = static_cast<int>(slots.size());
    slots[kNoise] = static_cast<int>(slots.size());

    CompiledScm c;
    c.initial.assign(slots.size(), 0.0);
    for (const auto& [name, value] : spec.parameters)
        c.initial[slots.at(name)] = value;
    c.noise_slot = slots.at(kNoise);

    for (const auto& [target, value] : intervention) {
        if (!g.has_node(target))
            throw SpecError("intervention target '" + target + "' is not in the graph");
        auto role = g.kind(target).role;
        if (role == NodeKind::Role::Proxy)
            throw SpecError("cannot intervene on proxy '" + target + "'");
        bool binary = role == NodeKind::Role::Indicator ||
                      spec.mechanisms.at(target).noise.law == Noise::Law::BernoulliLogit;
        if (!std::isfinite(value) || (binary && value != 0.0 && value != 1.0))
            throw SpecError("value " + format_number(value) + " is outside the support of '" +
                            target + "'");
    }

    std::map<NodeId, std::uint64_t> stream_of;
    for (const auto& [name, _] : g.nodes())
        stream_of[name] = stream_of.size() + 1;

    for (const auto& v : order) {
        const Mechanism& m = spec.mechanisms.at(v);
        CompiledNode n;
        n.name = v;
        n.slot = slots.at(v);
        n.stream = stream_of.at(v);
        n.noise = m.noise;
        n.f = m.f;
        n.f.bind(slots);
        NodeSet context = spec.graph.shifts().contextual_parents(v);
        std::vector<NodeId> ctx(context.begin(), context.end());
        for (const auto& x : ctx)
            n.context_slots.push_back(slots.at(spec.graph.indicator(x)));
        n.by_mask.assign(std::size_t{1} << ctx.size(), n.f);
        for (std::size_t mask = 1; mask < n.by_mask.size(); ++mask) {
            NodeSet t;
            for (std::size_t j = 0; j < ctx.size(); ++j)
                if (mask & (std::size_t{1} << j))
                    t.insert(ctx[j]);
            n.by_mask[mask] = m.shifts.at(t);
            n.by_mask[mask].bind(slots);
        }
        if (auto it = intervention.find(v); it != intervention.end()) {
            n.fixed = true;
            n.fixed_value = it->second;
        }
        c.nodes.push_back(std::move(n));
    }
    for (const auto& e : g.bidirected())
        c.latents.emplace_back(slots.at(latent_name(e)), kLatentStreamBase + c.latents.size());
    return c;
}

void simulate_row(const CompiledScm& c, std::uint64_t seed, std::uint64_t row, double* slots) {
    std::copy(c.initial.begin(), c.initial.end(), slots);
    for (const auto& [slot, stream] : c.latents) {
        StreamRng rng(seed, stream, row);
        slots[slot] = std::normal_distribution<double>(0.0, 1.0)(rng);
    }
    for (const auto& n : c.nodes) {
        if (n.fixed) {
            slots[n.slot] = n.fixed_value;
            continue;
        }
        std::size_t mask = 0;
        for (std::size_t j = 0; j < n.context_slots.size(); ++j)
            if (slots[n.context_slots[j]] == 0.0)
                mask |= std::size_t{1} << j;
        const Expr& e = n.by_mask[mask];
        StreamRng rng(seed, n.stream, row);
        if (n.noise.law == Noise::Law::Gaussian) {
            slots[c.noise_slot] =
                n.noise.sd > 0.0 ? std::normal_distribution<double>(n.noise.mean, n.noise.sd)(rng)
                                 : n.noise.mean;
            slots[n.slot] = e.eval(slots);
        } else {
            double p = 1.0 / (1.0 + std::exp(-e.eval(slots)));
            double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            slots[n.slot] = u < p ? 1.0 : 0.0;
        }
    }
}

Dataset masked(Dataset d, const ScmSpec& spec) {
    const Admg& g = spec.graph.graph();
    for (const auto& v : g.nodes_with(NodeKind::Role::MissingAffected))
        if (auto r = g.indicator_of(v))
            d.pair(v, *r);
    d.apply_masks();
    return d;
}

} // namespace

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
    : state_(mix64(mix64(mix64(seed) ^ stream) ^ counter)) {}

StreamRng::result_type StreamRng::operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void validate_spec(const ScmSpec& spec) {
    const Admg& g = spec.graph.graph();
    for (const auto& [name, _] : spec.parameters)
        if (g.has_node(name) || name == kNoise)
            throw SpecError("parameter '" + name + "' shadows a node or the noise term");
    for (const auto& [v, _] : spec.mechanisms)
        if (!g.has_node(v))
            throw SpecError("mechanism for unknown node '" + v + "'");
    for (const auto& [v, kind] : g.nodes()) {
        auto it = spec.mechanisms.find(v);
        if (kind.role == NodeKind::Role::Proxy) {
            if (it != spec.mechanisms.end())
                throw SpecError("proxy '" + v + "' is derived and takes no mechanism");
            continue;
        }
        if (it == spec.mechanisms.end())
            throw SpecError("node '" + v + "' has no mechanism");
        const Mechanism& m = it->second;
        if (m.noise.law == Noise::Law::Gaussian && !(m.noise.sd >= 0.0))
            throw SpecError("noise sd of '" + v + "' must be nonnegative");
        NodeSet scope = allowed_scope(spec, v);
        check_scope(m.f, scope, v, "mechanism");

        NodeSet context = spec.graph.shifts().contextual_parents(v);
        for (const auto& [t, g_expr] : m.shifts) {
            if (t.empty() || !std::includes(context.begin(), context.end(), t.begin(), t.end()))
                throw SpecError("shift mechanism of '" + v + "' for {" + subset_key(t) +
                                "} does not match its contextual parents");
            check_scope(g_expr, scope, v, "shift mechanism");
            for (const auto& x : g_expr.variables())
                if (t.count(x))
                    throw SpecError("shift mechanism of '" + v + "' for {" + subset_key(t) +
                                    "} references missing variable '" + x + "'");
        }
        std::size_t expected = context.empty() ? 0 : (std::size_t{1} << context.size()) - 1;
        if (m.shifts.size() != expected)
            throw SpecError("'" + v + "' needs a shift mechanism for each of the " +
                            std::to_string(expected) + " nonempty subsets of its contextual parents");
    }
}

ScmSpec scm_from_json(const nlohmann::json& j) {
    if (!j.contains("graph") || !j.contains("mechanisms"))
        throw SpecError("SCM JSON needs 'graph' and 'mechanisms'");
    ScmSpec spec;
    spec.graph = lm_graph_from_json(j.at("graph"));
    if (j.contains("parameters"))
        for (const auto& [k, v] : j.at("parameters").items())
            spec.parameters[k] = v.get<double>();
    for (const auto& [v, mj] : j.at("mechanisms").items()) {
        Mechanism m;
        m.f = parse_expression(mj.at("f").get<std::string>());
        if (mj.contains("noise")) {
            const auto& nj = mj.at("noise");
            std::string law = nj.value("law", std::string("gaussian"));
            if (law == "gaussian") {
                m.noise.law = Noise::Law::Gaussian;
                m.noise.mean = nj.value("mean", 0.0);
                m.noise.sd = nj.value("sd", 1.0);
            } else if (law == "bernoulli_logit") {
                m.noise.law = Noise::Law::BernoulliLogit;
            } else {
                throw SpecError("unknown noise law '" + law + "'");
            }
        }
        if (mj.contains("shifts"))
            for (const auto& [key, expr] : mj.at("shifts").items())
                m.shifts[parse_subset_key(key)] = parse_expression(expr.get<std::string>());
        spec.mechanisms[v] = std::move(m);
    }
    validate_spec(spec);
    return spec;
}

nlohmann::json to_json(const ScmSpec& spec) {
    nlohmann::json mechanisms = nlohmann::json::object();
    for (const auto& [v, m] : spec.mechanisms) {
        nlohmann::json mj{{"f", m.f.to_string()}};
        if (m.noise.law == Noise::Law::Gaussian)
            mj["noise"] = {{"law", "gaussian"}, {"mean", m.noise.mean}, {"sd", m.noise.sd}};
        else
            mj["noise"] = {{"law", "bernoulli_logit"}};
        if (!m.shifts.empty()) {
            nlohmann::json shifts = nlohmann::json::object();
            for (const auto& [t, e] : m.shifts)
                shifts[subset_key(t)] = e.to_string();
            mj["shifts"] = shifts;
        }
        mechanisms[v] = mj;
    }
    nlohmann::json graph = to_json(spec.graph);
    graph.erase("labels");
    return {{"graph", graph}, {"parameters", spec.parameters}, {"mechanisms", mechanisms}};
}

ScmSpec appendix_a_spec(double beta1, double beta2) {
    nlohmann::json j = R"spec({
      "graph": {
        "nodes": [
          {"name": "W", "kind": "observed"},
          {"name": "Y0", "kind": "missing"},
          {"name": "R_Y0", "kind": "indicator", "of": "Y0"},
          {"name": "Y0_obs", "kind": "proxy", "of": "Y0"},
          {"name": "A", "kind": "observed"},
          {"name": "Y1", "kind": "observed"}
        ],
        "directed": [["W", "Y0"], ["W", "R_Y0"], ["W", "A"], ["W", "Y1"], ["Y0", "A"],
                     ["Y0", "Y1"], ["A", "Y1"], ["Y0", "Y0_obs"], ["R_Y0", "Y0_obs"]],
        "shifts": {"Y0": ["A", "Y1"]}
      },
      "mechanisms": {
        "W": {"f": "U", "noise": {"law": "gaussian", "mean": 0, "sd": 1}},
        "Y0": {"f": "(+ -3 (* -2 W) (^ W 2) U)", "noise": {"law": "gaussian", "mean": 0, "sd": 7}},
        "R_Y0": {"f": "(+ beta1 (* beta2 W))", "noise": {"law": "bernoulli_logit"}},
        "A": {"f": "(+ W (* 0.3 Y0))", "noise": {"law": "bernoulli_logit"},
              "shifts": {"Y0": "(+ -0.5 (* 1.5 W))"}},
        "Y1": {"f": "(+ 3 (* 1.8 W) (* -2 A) (* -1.5 Y0) (* -0.8 A W) (* 4 A Y0) U)",
               "noise": {"law": "gaussian", "mean": 0, "sd": 7},
               "shifts": {"Y0": "(+ 4 (* 6 W) (* 8 A) (* -8 W A) U)"}}
      }
    })spec"_json;
    j["parameters"] = {{"beta1", beta1}, {"beta2", beta2}};
    return scm_from_json(j);
}

ScmSpec appendix_a_scenario(const std::string& scenario) {
    if (scenario == "50")
        return appendix_a_spec(-0.2, -1.2);
    if (scenario == "30")
        return appendix_a_spec(1.1, -1.0);
    throw SpecError("unknown scenario '" + scenario + "' (expected 50 or 30)");
}

Dataset sample_full(const ScmSpec& spec, std::size_t n, std::uint64_t seed,
                    const Intervention& intervention) {
    if (n < 1)
        throw SpecError("sample size must be at least 1");
    CompiledScm c = compile(spec, intervention);
    std::vector<std::vector<double>> cols(c.nodes.size(), std::vector<double>(n));
    std::size_t chunks = (n + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t chunk) {
        std::vector<double> slots(c.initial.size());
        std::size_t end = std::min(n, (chunk + 1) * kChunk);
        for (std::size_t i = chunk * kChunk; i < end; ++i) {
            simulate_row(c, seed, i, slots.data());
            for (std::size_t k = 0; k < c.nodes.size(); ++k)
                cols[k][i] = slots[c.nodes[k].slot];
        }
    });
    Dataset d;
    for (std::size_t k = 0; k < c.nodes.size(); ++k)
        d.add_column(c.nodes[k].name, std::move(cols[k]));
    return d;
}

Dataset sample_observational(const ScmSpec& spec, std::size_t n, std::uint64_t seed) {
    return masked(sample_full(spec, n, seed), spec);
}

Dataset sample_interventional(const ScmSpec& spec, const Intervention& intervention,
                              std::size_t n, std::uint64_t seed) {
    return masked(sample_full(spec, n, seed, intervention), spec);
}

OracleResult oracle_effects(const ScmSpec& spec, const QuerySpec& q, std::size_t n_mc,
                            std::uint64_t seed) {
    if (n_mc < 10000)
        throw InvalidQuery("oracle needs n_mc >= 10000");
    validate_query(spec.graph, q);
    Intervention all_observed;
    for (const auto& r : spec.graph.graph().nodes_with(NodeKind::Role::Indicator))
        all_observed[r] = 1.0;

    auto contrast = [&](Intervention base, double& effect, double& se) {
        base[q.exposure] = 1.0;
        CompiledScm treated = compile(spec, base);
        base[q.exposure] = 0.0;
        CompiledScm control = compile(spec, base);
        int y1 = -1, y0 = -1;
        for (const auto& n : treated.nodes)
            if (n.name == q.outcome)
                y1 = n.slot;
        for (const auto& n : control.nodes)
            if (n.name == q.outcome)
                y0 = n.slot;

        // Per-chunk mean and sum of squares, merged afterwards.
        std::size_t chunks = (n_mc + kChunk - 1) / kChunk;
        std::vector<double> means(chunks), m2s(chunks), counts(chunks);
        parallel_for(chunks, [&](std::size_t chunk) {
            std::vector<double> a(treated.initial.size()), b(control.initial.size());
            std::size_t end = std::min(n_mc, (chunk + 1) * kChunk);
            double mean = 0.0, m2 = 0.0, k = 0.0;
            for (std::size_t i = chunk * kChunk; i < end; ++i) {
                simulate_row(treated, seed, i, a.data());
                simulate_row(control, seed, i, b.data());
                double d = a[y1] - b[y0];
                k += 1.0;
                double delta = d - mean;
                mean += delta / k;
                m2 += delta * (d - mean);
            }
            means[chunk] = mean;
            m2s[chunk] = m2;
            counts[chunk] = k;
        });
        double mean = 0.0, m2 = 0.0, k = 0.0;
        for (std::size_t c = 0; c < chunks; ++c) {
            double total = k + counts[c];
            double delta = means[c] - mean;
            m2 += m2s[c] + delta * delta * k * counts[c] / total;
            mean += delta * counts[c] / total;
            k = total;
        }
        effect = mean;
        se = std::sqrt(m2 / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc));
    };

    OracleResult r;
    r.n_mc = n_mc;
    r.seed = seed;
    contrast(all_observed, r.fate, r.mc_se_fate);
    contrast({}, r.nate, r.mc_se_nate);
    return r;
}

nlohmann::json to_json(const OracleResult& r) {
    return {{"fate", r.fate},         {"nate", r.nate}, {"mc_se_fate", r.mc_se_fate},
            {"mc_se_nate", r.mc_se_nate}, {"n_mc", r.n_mc}, {"seed", r.seed}};
}

} // namespace lmg

#include "lmg/recovery.hpp"

#include <algorithm>
#include <functional>
#include <mutex>

#include "lmg/errors.hpp"
#include "lmg/parallel.hpp"

namespace lmg {

namespace {

NodeSet substantive_nodes(const Admg& g) {
    NodeSet out = g.nodes_with(NodeKind::Role::Observed);
    for (const auto& v : g.nodes_with(NodeKind::Role::MissingAffected))
        out.insert(v);
    return out;
}

NodeSet set_union(NodeSet a, const NodeSet& b) {
    a.insert(b.begin(), b.end());
    return a;
}

NodeSet set_minus(NodeSet a, const NodeSet& b) {
    for (const auto& v : b)
        a.erase(v);
    return a;
}

std::optional<NodeId> first_common(const NodeSet& a, const NodeSet& b) {
    for (const auto& v : a)
        if (b.count(v))
            return v;
    return std::nullopt;
}

/// Calls f on every size-k subset of `items` in lexicographic order; stops when f returns true.
bool for_each_subset(const std::vector<NodeId>& items, std::size_t k,
                     const std::function<bool(const NodeSet&)>& f) {
    if (k > items.size())
        return false;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i)
        idx[i] = i;
    while (true) {
        NodeSet s;
        for (auto i : idx)
            s.insert(items[i]);
        if (f(s))
            return true;
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == items.size() - k + i - 1)
            --i;
        if (i == 0)
            return false;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j)
            idx[j] = idx[j - 1] + 1;
    }
}

NodeSet indicators_of(const LmGraph& lm, const NodeSet& vars) {
    NodeSet out;
    for (const auto& v : vars)
        out.insert(lm.indicator(v));
    return out;
}

std::vector<Event> events_at(const NodeSet& indicators, int value) {
    std::vector<Event> out;
    for (const auto& r : indicators)
        out.push_back({r, value});
    return out;
}

/// Graphs and index sets shared by every L_r candidate for one (K, H, r).
struct PatternContext {
    Pattern r;
    NodeSet k_vars;
    NodeSet r_k;
    NodeSet r_h;
    Admg g_r;
    Admg g_r_over_a; // G_r[overline{A}]
    Admg h_r_under_a; // H_r[underline{A}]
    NodeSet de_a;
    std::vector<Event> k_events;
};

PatternContext make_context(const LmGraph& lm, const QuerySpec& q, const std::vector<NodeId>& k,
                            const NodeSet& h, const Pattern& r) {
    PatternContext ctx;
    ctx.r = r;
    ContextPattern pattern;
    for (std::size_t j = 0; j < k.size(); ++j) {
        NodeId rk = lm.indicator(k[j]);
        pattern[rk] = r[j];
        ctx.r_k.insert(rk);
        ctx.k_vars.insert(k[j]);
        ctx.k_events.push_back({rk, r[j]});
    }
    ctx.r_h = indicators_of(lm, h);
    ctx.g_r = context_graph(lm, pattern);
    ctx.g_r_over_a = mutilate_over(ctx.g_r, {q.exposure});
    ctx.h_r_under_a = mutilate_under(remove_labels(ctx.g_r, lm, ctx.r_h), {q.exposure});
    ctx.de_a = descendants(ctx.g_r, {q.exposure});
    return ctx;
}

NodeSet missing_in(const LmGraph& lm, const QuerySpec& q, const NodeSet& l, const NodeSet& k) {
    NodeSet m;
    NodeSet candidates = set_minus(l, k);
    candidates.insert(q.exposure);
    candidates.insert(q.outcome);
    for (const auto& v : candidates)
        if (lm.graph().kind(v).role == NodeKind::Role::MissingAffected)
            m.insert(v);
    return m;
}

std::optional<ConditionFailure> separation_failure(int index, const std::string& description,
                                                   const PatternContext& ctx, const Admg& g,
                                                   const NodeSet& x, const NodeSet& y,
                                                   const NodeSet& z) {
    if (m_separated(g, {x, y, z}))
        return std::nullopt;
    ConditionFailure f;
    f.pattern = ctx.r;
    f.index = index;
    f.description = description;
    f.open_path = find_open_path(g, {x, y, z});
    f.graph = g;
    f.conditioning = z;
    return f;
}

std::optional<ConditionFailure> check_pattern(const LmGraph& lm, const QuerySpec& q,
                                              const PatternContext& ctx, const NodeSet& l) {
    NodeSet m = missing_in(lm, q, l, ctx.k_vars);
    NodeSet r_m = indicators_of(lm, m);

    NodeSet must_not_descend = set_union(set_union(set_union(ctx.r_k, l), r_m), ctx.r_h);
    if (auto v = first_common(must_not_descend, ctx.de_a)) {
        ConditionFailure f;
        f.pattern = ctx.r;
        f.index = 2;
        f.description = "'" + *v + "' is a descendant of the exposure in the context graph";
        f.descendant_path = *directed_path(ctx.g_r, q.exposure, *v);
        f.graph = ctx.g_r;
        return f;
    }

    NodeSet a{q.exposure};
    NodeSet y{q.outcome};
    if (!r_m.empty())
        if (auto f = separation_failure(3, "outcome not separated from R_M given A, R_K", ctx,
                                        ctx.g_r_over_a, y, r_m, set_union(a, ctx.r_k)))
            return f;
    if (!ctx.r_h.empty())
        if (auto f = separation_failure(4, "outcome not separated from R_H given A, L_r, R_K, R_M",
                                        ctx, ctx.g_r_over_a, y, ctx.r_h,
                                        set_union(set_union(set_union(a, l), ctx.r_k), r_m)))
            return f;
    return separation_failure(5, "outcome not separated from the exposure given L_r, R_K, R_M, R_H",
                              ctx, ctx.h_r_under_a, y, a,
                              set_union(set_union(set_union(l, ctx.r_k), r_m), ctx.r_h));
}

Estimand pattern_term(const LmGraph& lm, const QuerySpec& q, const PatternContext& ctx,
                      const NodeSet& l) {
    NodeSet r_m = indicators_of(lm, missing_in(lm, q, l, ctx.k_vars));
    std::vector<Event> integrate_events = ctx.k_events;
    for (const auto& e : events_at(r_m, 1))
        integrate_events.push_back(e);
    std::vector<Event> outcome_events = integrate_events;
    for (const auto& e : events_at(ctx.r_h, 0))
        outcome_events.push_back(e);
    return Estimand::integrate(
        l, {}, integrate_events,
        Estimand::delta(q.exposure, Estimand::cond_exp(q.outcome, l, q.exposure, outcome_events)));
}

void validate_witness(const LmGraph& lm, const QuerySpec& q, const NateWitness& w,
                      const std::vector<Pattern>& support) {
    NodeSet shifted = lm.shifted_variables();
    NodeSet seen;
    for (const auto& v : w.k) {
        if (!shifted.count(v) || v == q.exposure || v == q.outcome)
            throw InvalidWitness("K member '" + v + "' is not a shifted variable other than A, Y");
        if (!seen.insert(v).second)
            throw InvalidWitness("K lists '" + v + "' twice");
    }
    for (const auto& v : w.h) {
        if (!shifted.count(v) || v == q.exposure || v == q.outcome)
            throw InvalidWitness("H member '" + v + "' is not a shifted variable other than A, Y");
        if (seen.count(v))
            throw InvalidWitness("'" + v + "' is in both K and H");
    }
    for (const auto& r : support) {
        if (r.size() != w.k.size())
            throw InvalidWitness("pattern length does not match |K|");
        auto it = w.l.find(r);
        NodeSet l = it == w.l.end() ? NodeSet{} : it->second;
        for (const auto& v : l) {
            if (!lm.graph().has_node(v))
                throw NodeNotFound("node '" + v + "' is not in the graph");
            if (v == q.exposure || v == q.outcome || w.h.count(v))
                throw InvalidWitness("L" + pattern_text({}, r) + " contains '" + v +
                                     "', which must be excluded (A, Y or H)");
        }
        std::vector<NodeId> offending;
        for (std::size_t j = 0; j < w.k.size(); ++j)
            if ((r[j] == 0) == (l.count(w.k[j]) != 0))
                offending.push_back(w.k[j]);
        if (!offending.empty()) {
            std::string list;
            for (const auto& v : offending)
                list += (list.empty() ? "" : ", ") + v;
            throw InvalidWitness("condition (i) fails for pattern " + pattern_text({}, r) +
                                 " on K_j: " + list);
        }
    }
}

nlohmann::json failure_json(const ConditionFailure& f) {
    static const char* numerals[] = {"", "i", "ii", "iii", "iv", "v"};
    nlohmann::json j{{"pattern", f.pattern},
                     {"condition", numerals[f.index]},
                     {"index", f.index},
                     {"description", f.description}};
    if (f.open_path)
        j["open_path"] = f.open_path->to_json();
    if (!f.descendant_path.empty())
        j["descendant_path"] = f.descendant_path;
    return j;
}

} // namespace

void validate_query(const LmGraph& lm, const QuerySpec& q) {
    const Admg& g = lm.graph();
    for (const auto& v : {q.exposure, q.outcome}) {
        if (!g.has_node(v))
            throw InvalidQuery("node '" + v + "' is not in the graph");
        if (!g.kind(v).substantive())
            throw InvalidQuery("'" + v + "' is not a substantive variable");
    }
    if (q.exposure == q.outcome)
        throw InvalidQuery("exposure and outcome must differ");
    for (const auto& d : descendants(g, {q.outcome}))
        if (d != q.outcome && g.kind(d).substantive())
            throw InvalidQuery("outcome '" + q.outcome + "' has substantive descendant '" + d + "'");
}

NodeSet compute_r_phi(const LmGraph& lm, const QuerySpec& q) {
    validate_query(lm, q);
    NodeSet r_sh = lm.shifted_indicators();
    NodeSet cut = r_sh;
    cut.insert(q.exposure);
    NodeSet an_y = ancestors(mutilate_over(lm.graph(), cut), {q.outcome});
    NodeSet out;
    for (const auto& r : r_sh)
        if (an_y.count(r))
            out.insert(r);
    return out;
}

FateVerdict check_fate_recovery(const LmGraph& lm, const QuerySpec& q, const FateCaps& caps) {
    FateVerdict v;
    v.r_phi = compute_r_phi(lm, q);
    const Admg& g = lm.graph();

    NodeSet base_indicators = v.r_phi;
    for (const auto& node : {q.exposure, q.outcome})
        if (g.kind(node).role == NodeKind::Role::MissingAffected)
            base_indicators.insert(lm.indicator(node));

    NodeSet pool = substantive_nodes(g);
    pool.erase(q.exposure);
    pool.erase(q.outcome);
    std::vector<NodeId> candidates(pool.begin(), pool.end());

    auto try_set = [&](const NodeSet& z) {
        NodeSet z_o, z_m;
        for (const auto& n : z)
            (g.kind(n).role == NodeKind::Role::MissingAffected ? z_m : z_o).insert(n);
        NodeSet r_adj = base_indicators;
        for (const auto& n : z_m) {
            auto r = g.indicator_of(n);
            if (!r)
                return false;
            r_adj.insert(*r);
        }
        NodeSet a_r = r_adj;
        a_r.insert(q.exposure);
        if (first_common(z, descendants(g, a_r)))
            return false;
        if (!m_separated(mutilate_under(g, a_r), {{q.outcome}, a_r, z}))
            return false;
        if (!z_m.empty() && !m_separated(g, {z_m, r_adj, z_o}))
            return false;

        auto fixed = events_at(r_adj, 1);
        v.recoverable = true;
        v.adjustment = z;
        v.indicators = r_adj;
        v.estimand = Estimand::integrate(
            z_o, {}, {},
            Estimand::integrate(z_m, z_o, fixed,
                                Estimand::delta(q.exposure,
                                                Estimand::cond_exp(q.outcome, z, q.exposure, fixed))));
        return true;
    };

    std::size_t limit = std::min(caps.max_adjustment, candidates.size());
    for (std::size_t size = 0; size <= limit; ++size)
        if (for_each_subset(candidates, size, try_set))
            return v;
    v.reason = "no adjustment set of size <= " + std::to_string(limit) +
               " satisfies the sequential-factorization conditions";
    if (!v.r_phi.empty()) {
        std::string list;
        for (const auto& r : v.r_phi)
            list += (list.empty() ? "" : ", ") + r;
        v.reason += " with R_phi = {" + list + "} held at 1";
    }
    return v;
}

std::size_t NateWitness::size() const {
    std::size_t total = k.size() + h.size();
    for (const auto& [_, s] : l)
        total += s.size();
    return total;
}

std::vector<Pattern> all_patterns(std::size_t k) {
    std::vector<Pattern> out;
    for (std::size_t bits = 0; bits < (std::size_t{1} << k); ++bits) {
        Pattern r(k);
        for (std::size_t j = 0; j < k; ++j)
            r[j] = static_cast<int>((bits >> (k - 1 - j)) & 1u);
        out.push_back(r);
    }
    return out;
}

std::string pattern_text(const std::vector<NodeId>& k_indicators, const Pattern& r) {
    std::string out;
    for (std::size_t j = 0; j < r.size(); ++j) {
        if (!k_indicators.empty())
            out += (j ? "," : "") + k_indicators[j] + "=";
        out += std::to_string(r[j]);
    }
    return out.empty() ? "()" : out;
}

NateVerdict check_nate_recovery(const LmGraph& lm, const QuerySpec& q, const NateWitness& w,
                                const std::optional<std::vector<Pattern>>& support) {
    validate_query(lm, q);
    std::vector<Pattern> patterns = support ? *support : all_patterns(w.k.size());
    validate_witness(lm, q, w, patterns);

    NateVerdict verdict;
    verdict.witness = w;
    std::vector<std::vector<Event>> weights;
    std::vector<Estimand> terms;
    for (const auto& r : patterns) {
        auto it = w.l.find(r);
        NodeSet l = it == w.l.end() ? NodeSet{} : it->second;
        verdict.witness.l[r] = l;
        PatternContext ctx = make_context(lm, q, w.k, w.h, r);
        if (auto f = check_pattern(lm, q, ctx, l)) {
            verdict.failure = std::move(f);
            return verdict;
        }
        weights.push_back(ctx.k_events);
        terms.push_back(pattern_term(lm, q, ctx, l));
    }
    verdict.recoverable = true;
    verdict.estimand = w.k.empty() && terms.size() == 1 ? terms.front()
                                                        : Estimand::sum(weights, terms);
    return verdict;
}

std::optional<NateWitness> search_nate_witness(const LmGraph& lm, const QuerySpec& q,
                                               const SearchCaps& caps) {
    validate_query(lm, q);
    NodeSet shifted = lm.shifted_variables();
    shifted.erase(q.exposure);
    shifted.erase(q.outcome);
    std::vector<NodeId> shift_list(shifted.begin(), shifted.end());

    std::vector<std::pair<std::vector<NodeId>, NodeSet>> pairs;
    for (std::size_t nk = 0; nk <= caps.k_max; ++nk)
        for_each_subset(shift_list, nk, [&](const NodeSet& k) {
            std::vector<NodeId> rest;
            for (const auto& v : shift_list)
                if (!k.count(v))
                    rest.push_back(v);
            for (std::size_t nh = 0; nh <= caps.h_max; ++nh)
                for_each_subset(rest, nh, [&](const NodeSet& h) {
                    pairs.emplace_back(std::vector<NodeId>(k.begin(), k.end()), h);
                    return false;
                });
            return false;
        });

    NodeSet substantive = substantive_nodes(lm.graph());
    std::vector<std::optional<NateWitness>> found(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        const auto& [k, h] = pairs[i];
        NodeSet free = set_minus(substantive, h);
        free.erase(q.exposure);
        free.erase(q.outcome);
        for (const auto& v : k)
            free.erase(v);
        std::vector<NodeId> free_list(free.begin(), free.end());

        NateWitness w{k, h, {}};
        for (const auto& r : all_patterns(k.size())) {
            PatternContext ctx = make_context(lm, q, k, h, r);
            NodeSet forced;
            for (std::size_t j = 0; j < k.size(); ++j)
                if (r[j] == 1)
                    forced.insert(k[j]);
            if (forced.size() > caps.l_max)
                return;
            bool ok = false;
            for (std::size_t extra = 0; !ok && forced.size() + extra <= caps.l_max; ++extra)
                ok = for_each_subset(free_list, extra, [&](const NodeSet& c) {
                    NodeSet l = set_union(forced, c);
                    if (check_pattern(lm, q, ctx, l))
                        return false;
                    w.l[r] = l;
                    return true;
                });
            if (!ok)
                return;
        }
        found[i] = std::move(w);
    });

    std::optional<NateWitness> best;
    for (auto& f : found) {
        if (!f)
            continue;
        if (!best || f->size() < best->size())
            best = std::move(f);
    }
    return best;
}

nlohmann::json to_json(const NateWitness& w) {
    nlohmann::json l = nlohmann::json::object();
    for (const auto& [r, s] : w.l) {
        std::string key;
        for (int b : r)
            key += std::to_string(b);
        l[key] = s;
    }
    return {{"K", w.k}, {"H", w.h}, {"L", l}};
}

NateWitness nate_witness_from_json(const nlohmann::json& j) {
    NateWitness w;
    if (j.contains("K"))
        w.k = j.at("K").get<std::vector<NodeId>>();
    if (j.contains("H"))
        w.h = j.at("H").get<NodeSet>();
    if (j.contains("L"))
        for (const auto& [key, list] : j.at("L").items()) {
            Pattern r;
            for (char c : key) {
                if (c != '0' && c != '1')
                    throw InvalidWitness("pattern key '" + key + "' must be a 0/1 string");
                r.push_back(c - '0');
            }
            w.l[r] = list.get<NodeSet>();
        }
    return w;
}

nlohmann::json to_json(const FateVerdict& v) {
    nlohmann::json j{{"target", "FATE"},
                     {"verdict", v.recoverable ? "recoverable" : "not_decided"},
                     {"r_phi", v.r_phi}};
    if (v.recoverable) {
        j["witness"] = {{"adjustment_set", v.adjustment}, {"indicators", v.indicators}};
        j["estimand_text"] = render_estimand(*v.estimand, RenderFormat::Text);
        j["estimand_latex"] = render_estimand(*v.estimand, RenderFormat::Latex);
    } else {
        j["reason"] = v.reason;
    }
    return j;
}

nlohmann::json to_json(const NateVerdict& v) {
    nlohmann::json j{{"target", "NATE"},
                     {"verdict", v.recoverable ? "recoverable" : "condition_failed"},
                     {"witness", to_json(v.witness)}};
    if (v.recoverable) {
        j["estimand_text"] = render_estimand(*v.estimand, RenderFormat::Text);
        j["estimand_latex"] = render_estimand(*v.estimand, RenderFormat::Latex);
    } else if (v.failure) {
        j["failure"] = failure_json(*v.failure);
    }
    return j;
}

nlohmann::json recovery_report(const LmGraph& lm, const QuerySpec& q,
                               const std::optional<NateWitness>& witness, const SearchCaps& caps) {
    nlohmann::json report;
    if (q.target == Target::Fate) {
        report = to_json(check_fate_recovery(lm, q));
    } else if (witness) {
        report = to_json(check_nate_recovery(lm, q, *witness));
    } else if (auto w = search_nate_witness(lm, q, caps)) {
        report = to_json(check_nate_recovery(lm, q, *w));
    } else {
        report = {{"target", "NATE"},
                  {"verdict", "not_decided"},
                  {"reason", "no witness within the search caps"}};
    }
    report["exposure"] = q.exposure;
    report["outcome"] = q.outcome;
    return report;
}

} // namespace lmg

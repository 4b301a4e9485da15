#include "lmg/estimand.hpp"

#include <algorithm>
#include <cctype>

#include "lmg/errors.hpp"

namespace lmg {

namespace {

const std::string kDelta = "\xCE\x94_a "; // "Δ_a "

std::vector<Event> normalized(std::vector<Event> events) {
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());
    return events;
}

std::string event_text(const Event& e, RenderFormat f) {
    std::string name = f == RenderFormat::Latex ? latex_name(e.var) : e.var;
    return name + "=" + std::to_string(e.value);
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> names(const NodeSet& s, RenderFormat f) {
    std::vector<std::string> out;
    for (const auto& v : s)
        out.push_back(f == RenderFormat::Latex ? latex_name(v) : v);
    return out;
}

std::vector<std::string> event_list(const std::vector<Event>& events, RenderFormat f) {
    std::vector<std::string> out;
    for (const auto& e : events)
        out.push_back(event_text(e, f));
    return out;
}

std::string render(const Estimand& e, RenderFormat f) {
    const bool tex = f == RenderFormat::Latex;
    const std::string bar = tex ? "\\mid " : "|";
    switch (e.kind) {
    case Estimand::Kind::Sum: {
        std::vector<std::string> parts;
        for (std::size_t i = 0; i < e.children.size(); ++i) {
            std::string term;
            if (!e.weights[i].empty())
                term = std::string(tex ? "\\mathbb{P}(" : "P(") + join(event_list(e.weights[i], f), ",") +
                       ") ";
            parts.push_back(term + render(e.children[i], f));
        }
        return join(parts, " + ");
    }
    case Estimand::Kind::Integrate: {
        auto cond = names(e.given, f);
        for (auto& s : event_list(e.events, f))
            cond.push_back(s);
        std::string sub = join(names(e.vars, f), ",");
        if (!cond.empty())
            sub += bar + join(cond, ",");
        if (tex)
            return "\\mathbb{E}_{" + sub + "} " + render(e.children.front(), f);
        if (cond.empty() && e.vars.size() == 1)
            return "E_" + sub + " " + render(e.children.front(), f);
        return "E_{" + sub + "} " + render(e.children.front(), f);
    }
    case Estimand::Kind::Delta:
        return (tex ? "\\Delta_a " : kDelta) + render(e.children.front(), f);
    case Estimand::Kind::CondExp: {
        auto cond = names(e.covariates, f);
        cond.push_back((tex ? latex_name(e.exposure) : e.exposure) + "=a");
        for (auto& s : event_list(e.events, f))
            cond.push_back(s);
        std::string y = tex ? latex_name(e.outcome) : e.outcome;
        if (tex)
            return "\\mathbb{E}[" + y + bar + join(cond, ",") + "]";
        return "E[" + y + "|" + join(cond, ",") + "]";
    }
    }
    return {};
}

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    Estimand parse() {
        Estimand out = sum();
        if (pos_ != s_.size())
            fail("trailing input");
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ParseError(why + " at offset " + std::to_string(pos_) + " in '" + s_ + "'");
    }

    bool starts(const std::string& tok) const { return s_.compare(pos_, tok.size(), tok) == 0; }

    void expect(const std::string& tok) {
        if (!starts(tok))
            fail("expected '" + tok + "'");
        pos_ += tok.size();
    }

    std::string until(const std::string& stops) {
        std::size_t start = pos_;
        while (pos_ < s_.size() && stops.find(s_[pos_]) == std::string::npos)
            ++pos_;
        if (pos_ == start)
            fail("expected a name");
        return s_.substr(start, pos_ - start);
    }

    // Items separated by ',' up to one of `end`; "name=value" entries are events.
    struct Items {
        NodeSet vars;
        std::vector<Event> events;
        NodeId exposure;
    };

    Items items(const std::string& end) {
        Items out;
        while (true) {
            std::string item = until("," + end);
            auto eq = item.find('=');
            if (eq == std::string::npos) {
                out.vars.insert(item);
            } else {
                std::string name = item.substr(0, eq), value = item.substr(eq + 1);
                if (value == "a")
                    out.exposure = name;
                else if (value == "0" || value == "1")
                    out.events.push_back({name, value == "1"});
                else
                    fail("bad event value '" + value + "'");
            }
            if (!starts(","))
                return out;
            ++pos_;
        }
    }

    Estimand sum() {
        std::vector<std::vector<Event>> weights;
        std::vector<Estimand> children;
        while (true) {
            std::vector<Event> w;
            if (starts("P(")) {
                pos_ += 2;
                w = items(")").events;
                expect(") ");
            }
            weights.push_back(std::move(w));
            children.push_back(chain());
            if (!starts(" + "))
                break;
            pos_ += 3;
        }
        if (children.size() == 1 && weights.front().empty())
            return children.front();
        return Estimand::sum(std::move(weights), std::move(children));
    }

    Estimand chain() {
        if (starts(kDelta)) {
            pos_ += kDelta.size();
            Estimand inner = chain();
            NodeId a = find_exposure(inner);
            return Estimand::delta(a, std::move(inner));
        }
        if (starts("E[")) {
            pos_ += 2;
            std::string y = until("|]");
            Items it;
            if (starts("|")) {
                ++pos_;
                it = items("]");
            }
            expect("]");
            if (it.exposure.empty())
                fail("conditional expectation without an exposure level");
            return Estimand::cond_exp(y, it.vars, it.exposure, it.events);
        }
        if (starts("E_{")) {
            pos_ += 3;
            Items vars = items("|}");
            Items cond;
            if (starts("|")) {
                ++pos_;
                cond = items("}");
            }
            expect("} ");
            return Estimand::integrate(vars.vars, cond.vars, cond.events, chain());
        }
        if (starts("E_")) {
            pos_ += 2;
            std::string v = until(" ");
            expect(" ");
            return Estimand::integrate({v}, {}, {}, chain());
        }
        fail("unexpected token");
    }

    static NodeId find_exposure(const Estimand& e) {
        if (!e.exposure.empty())
            return e.exposure;
        for (const auto& c : e.children)
            if (auto a = find_exposure(c); !a.empty())
                return a;
        return {};
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

} // namespace

Estimand Estimand::cond_exp(NodeId outcome, NodeSet covariates, NodeId exposure,
                            std::vector<Event> events) {
    Estimand e;
    e.kind = Kind::CondExp;
    e.outcome = std::move(outcome);
    e.covariates = std::move(covariates);
    e.exposure = std::move(exposure);
    e.events = normalized(std::move(events));
    return e;
}

Estimand Estimand::delta(NodeId exposure, Estimand child) {
    Estimand e;
    e.kind = Kind::Delta;
    e.exposure = std::move(exposure);
    e.children.push_back(std::move(child));
    return e;
}

Estimand Estimand::integrate(NodeSet vars, NodeSet given, std::vector<Event> events,
                             Estimand child) {
    if (vars.empty())
        return child;
    Estimand e;
    e.kind = Kind::Integrate;
    e.vars = std::move(vars);
    e.given = std::move(given);
    e.events = normalized(std::move(events));
    e.children.push_back(std::move(child));
    return e;
}

Estimand Estimand::sum(std::vector<std::vector<Event>> weights, std::vector<Estimand> children) {
    Estimand e;
    e.kind = Kind::Sum;
    for (auto& w : weights)
        w = normalized(std::move(w));
    e.weights = std::move(weights);
    e.children = std::move(children);
    return e;
}

std::string render_estimand(const Estimand& e, RenderFormat format) {
    return render(e, format);
}

Estimand parse_estimand(const std::string& text) {
    return Parser(text).parse();
}

std::string latex_name(const std::string& name) {
    auto us = name.find('_');
    if (us != std::string::npos && us > 0 && us + 1 < name.size())
        return latex_name(name.substr(0, us)) + "_{" + latex_name(name.substr(us + 1)) + "}";
    std::size_t digits = name.size();
    while (digits > 0 && std::isdigit(static_cast<unsigned char>(name[digits - 1])))
        --digits;
    if (digits > 0 && digits < name.size())
        return name.substr(0, digits) + "_{" + name.substr(digits) + "}";
    return name;
}

nlohmann::json to_json(const Estimand& e) {
    auto events = [](const std::vector<Event>& ev) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& x : ev)
            out[x.var] = x.value;
        return out;
    };
    switch (e.kind) {
    case Estimand::Kind::Sum: {
        nlohmann::json terms = nlohmann::json::array();
        for (std::size_t i = 0; i < e.children.size(); ++i)
            terms.push_back({{"weight", events(e.weights[i])}, {"term", to_json(e.children[i])}});
        return {{"sum", terms}};
    }
    case Estimand::Kind::Integrate:
        return {{"integrate",
                 {{"vars", e.vars},
                  {"given", e.given},
                  {"events", events(e.events)},
                  {"of", to_json(e.children.front())}}}};
    case Estimand::Kind::Delta:
        return {{"delta", {{"exposure", e.exposure}, {"of", to_json(e.children.front())}}}};
    case Estimand::Kind::CondExp:
        return {{"expectation",
                 {{"outcome", e.outcome},
                  {"covariates", e.covariates},
                  {"exposure", e.exposure},
                  {"events", events(e.events)}}}};
    }
    return {};
}

} // namespace lmg

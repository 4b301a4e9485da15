#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmg/errors.hpp"
#include "lmg/estimators.hpp"
#include "lmg/recovery.hpp"
#include "lmg/scm.hpp"
#include "lmg/study.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotDecided = 2;

void log(const std::string& msg) {
    std::cerr << "[lmg] " << msg << '\n';
}

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

struct RunManifest {
    std::string command;
    std::vector<std::string> inputs;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::string started = utc_now();

    nlohmann::json to_json() const {
        return {{"command", command},
                {"inputs", inputs},
                {"config_hash", fnv1a(config.dump())},
                {"seed", seed},
                {"tool_version", kVersion},
                {"started", started},
                {"finished", utc_now()}};
    }
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("LMG_SEED"))
        return std::stoull(env);
    return 1;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw lmg::InvalidQuery("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

nlohmann::json read_json(const std::string& path) {
    std::string text = read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw lmg::ParseError(path + ":" + std::to_string(line) + ":" + std::to_string(column) +
                              ": malformed JSON");
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw lmg::InvalidQuery("cannot write '" + path + "'");
    out << text;
}

void emit(const nlohmann::json& j, const std::string& out_path) {
    if (out_path.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_text(out_path, j.dump(2) + "\n");
}

lmg::Intervention parse_do(const std::string& text) {
    lmg::Intervention out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw lmg::InvalidQuery("--do expects NODE=value[,NODE=value...], got '" + item + "'");
        out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
    return out;
}

struct CheckArgs {
    std::string graph;
    std::string target = "nate";
    std::string exposure = "A";
    std::string outcome = "Y";
    std::string witness;
    std::size_t k_max = 2, h_max = 2, l_max = 6;
    std::string out;
};

int cmd_check(const CheckArgs& a) {
    RunManifest manifest{"check", {a.graph}, {}, 0};
    lmg::LmGraph lm = lmg::lm_graph_from_json(read_json(a.graph));
    lmg::QuerySpec q{a.exposure, a.outcome, a.target == "fate" ? lmg::Target::Fate : lmg::Target::Nate};
    manifest.config = {{"target", a.target}, {"exposure", a.exposure}, {"outcome", a.outcome},
                       {"caps", {a.k_max, a.h_max, a.l_max}}};

    std::optional<lmg::NateWitness> witness;
    if (q.target == lmg::Target::Nate && !a.witness.empty()) {
        manifest.inputs.push_back(a.witness);
        witness = lmg::nate_witness_from_json(read_json(a.witness));
    }
    nlohmann::json report = lmg::recovery_report(lm, q, witness, {a.k_max, a.h_max, a.l_max});
    bool recoverable = report.at("verdict") == "recoverable";
    report["manifest"] = manifest.to_json();
    emit(report, a.out);
    log(std::string("verdict: ") + report.at("verdict").get<std::string>());
    return recoverable ? kExitOk : kExitNotDecided;
}

struct SimulateArgs {
    std::string preset;
    std::string scenario;
    std::string spec;
    double beta1 = -0.2, beta2 = -1.2;
    std::size_t n = 5000;
    std::uint64_t seed = 0;
    std::string out;
    std::string intervention;
};

int cmd_simulate(const SimulateArgs& a) {
    RunManifest manifest{"simulate", {}, {}, a.seed};
    lmg::ScmSpec spec;
    if (!a.spec.empty()) {
        manifest.inputs.push_back(a.spec);
        spec = lmg::scm_from_json(read_json(a.spec));
    } else if (!a.scenario.empty()) {
        spec = lmg::appendix_a_scenario(a.scenario);
    } else if (a.preset == "appendixA") {
        spec = lmg::appendix_a_spec(a.beta1, a.beta2);
    } else {
        throw lmg::InvalidQuery("unknown preset '" + a.preset + "'");
    }
    lmg::Intervention intervention = a.intervention.empty() ? lmg::Intervention{} : parse_do(a.intervention);
    manifest.config = {{"spec", lmg::to_json(spec)}, {"n", a.n}, {"do", intervention}};
    lmg::Dataset d = lmg::sample_interventional(spec, intervention, a.n, a.seed);

    std::ostringstream csv;
    lmg::write_csv(d, csv);
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        write_text(a.out, csv.str());
        write_text(a.out + ".manifest.json", manifest.to_json().dump(2) + "\n");
        log("wrote " + std::to_string(d.rows()) + " rows to " + a.out);
    }
    return kExitOk;
}

struct EstimateArgs {
    std::string data;
    std::string estimator;
    std::string config;
    std::string out;
};

int cmd_estimate(const EstimateArgs& a) {
    RunManifest manifest{"estimate", {a.data}, {}, 0};
    lmg::EstimatorConfig config = lmg::appendix_a_config();
    if (!a.config.empty()) {
        manifest.inputs.push_back(a.config);
        config = lmg::estimator_config_from_json(read_json(a.config));
    }
    manifest.seed = config.seed;
    manifest.config = {{"estimator", a.estimator}, {"config", lmg::to_json(config)}};
    std::ifstream in(a.data, std::ios::binary);
    if (!in)
        throw lmg::InvalidQuery("cannot open '" + a.data + "'");
    lmg::Dataset d = lmg::read_csv(in);
    lmg::EstimateReport r = lmg::run_estimator(a.estimator, d, config);
    nlohmann::json j = lmg::to_json(r);
    j["manifest"] = manifest.to_json();
    emit(j, a.out);
    return kExitOk;
}

struct Fig4Args {
    std::string scenario = "50";
    std::size_t n = 5000;
    std::size_t m = 200;
    std::uint64_t seed = 0;
    std::size_t oracle_n = 2000000;
    std::string out_dir = ".";
    std::string config;
};

int cmd_reproduce_fig4(const Fig4Args& a) {
    lmg::StudyConfig sc;
    sc.scenario = a.scenario;
    sc.n = a.n;
    sc.m = a.m;
    sc.seed = a.seed;
    sc.oracle_n = a.oracle_n;
    RunManifest manifest{"reproduce-fig4", {}, {}, a.seed};
    if (!a.config.empty()) {
        manifest.inputs.push_back(a.config);
        sc.estimators = lmg::estimator_config_from_json(read_json(a.config));
    }
    manifest.config = {{"scenario", a.scenario}, {"n", a.n}, {"m", a.m}, {"oracle_n", a.oracle_n},
                       {"estimators", lmg::to_json(sc.estimators)}};
    log("running " + std::to_string(a.m) + " replications of n = " + std::to_string(a.n));
    lmg::StudyResult r = lmg::run_fig4_study(sc);

    std::filesystem::create_directories(a.out_dir);
    std::string stem = a.out_dir + "/fig4_" + a.scenario;
    std::ostringstream summary, reps;
    lmg::write_summary_csv(r, summary);
    lmg::write_replicates_csv(r, reps);
    write_text(stem + "_summary.csv", summary.str());
    write_text(stem + "_replicates.csv", reps.str());
    nlohmann::json m = manifest.to_json();
    m["outputs"] = {stem + "_summary.csv", stem + "_replicates.csv"};
    write_text(stem + ".manifest.json", m.dump(2) + "\n");

    const auto& scenario = lmg::fig4_scenario(a.scenario);
    std::cout << std::fixed << std::setprecision(4);
    for (const auto& c : r.checks)
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.estimator << " mean " << c.mean << " target "
                  << c.target << " tol " << c.tolerance << '\n';
    std::cout << "oracle FATE " << r.oracle.fate << " (published " << scenario.oracle_fate << ")  NATE "
              << r.oracle.nate << " (published " << scenario.oracle_nate << ")\n";
    for (const auto& [name, failed] : r.failures)
        if (failed)
            log(name + ": " + std::to_string(failed) + " replications failed");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recovery checks, simulation and estimation for labeled missingness graphs"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CheckArgs check;
    auto* c = app.add_subcommand("check", "Decide FATE/NATE recoverability on a graph file");
    c->add_option("graph", check.graph, "lm-graph JSON")->required();
    c->add_option("--target", check.target)->check(CLI::IsMember({"fate", "nate"}));
    c->add_option("--exposure", check.exposure);
    c->add_option("--outcome", check.outcome);
    c->add_option("--witness", check.witness, "NATE witness JSON; searched when absent");
    c->add_option("--k-max", check.k_max);
    c->add_option("--h-max", check.h_max);
    c->add_option("--l-max", check.l_max);
    c->add_option("--out", check.out, "write the report here instead of stdout");

    SimulateArgs sim;
    sim.seed = default_seed();
    auto* s = app.add_subcommand("simulate", "Sample a dataset from an SCM");
    s->add_option("--preset", sim.preset)->check(CLI::IsMember({"appendixA"}));
    s->add_option("--scenario", sim.scenario)->check(CLI::IsMember({"50", "30"}));
    s->add_option("--spec", sim.spec, "SCM JSON");
    s->add_option("--beta1", sim.beta1);
    s->add_option("--beta2", sim.beta2);
    s->add_option("--n", sim.n)->check(CLI::PositiveNumber);
    s->add_option("--seed", sim.seed, "default: $LMG_SEED or 1");
    s->add_option("--out", sim.out);
    s->add_option("--do", sim.intervention, "interventions, e.g. A=1,R_Y0=1");

    EstimateArgs est;
    auto* e = app.add_subcommand("estimate", "Estimate an effect from a CSV dataset");
    e->add_option("data", est.data, "CSV with <var>_obs and R_<var> columns")->required();
    e->add_option("--estimator", est.estimator)->required()->check(CLI::IsMember(lmg::estimator_names()));
    e->add_option("--config", est.config, "estimator config JSON");
    e->add_option("--out", est.out);

    Fig4Args fig;
    fig.seed = default_seed();
    auto* f = app.add_subcommand("reproduce-fig4", "Replication study of the benchmark estimators");
    f->add_option("--scenario", fig.scenario)->check(CLI::IsMember({"50", "30"}));
    f->add_option("--n", fig.n)->check(CLI::PositiveNumber);
    f->add_option("--m", fig.m)->check(CLI::PositiveNumber);
    f->add_option("--seed", fig.seed, "default: $LMG_SEED or 1");
    f->add_option("--oracle-n", fig.oracle_n);
    f->add_option("--out-dir", fig.out_dir);
    f->add_option("--config", fig.config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& err) {
        return app.exit(err);
    } catch (const CLI::CallForVersion& err) {
        return app.exit(err);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return kExitError;
    }

    try {
        if (*c)
            return cmd_check(check);
        if (*s) {
            if (sim.preset.empty() && sim.scenario.empty() && sim.spec.empty())
                sim.preset = "appendixA";
            return cmd_simulate(sim);
        }
        if (*e)
            return cmd_estimate(est);
        if (*f)
            return cmd_reproduce_fig4(fig);
    } catch (const std::exception& err) {
        log(std::string("error: ") + err.what());
        return kExitError;
    }
    return kExitError;
}

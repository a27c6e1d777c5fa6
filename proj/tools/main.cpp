// Command-line entry point: wires the parsers, solvers, gadget builders, and
// the brute-force oracle into reproducible batch runs with exact JSON reports.
//
// Every run prints a single JSON report on standard output:
//   {"command": [...], "inputs": {path: digest}, "payload": {...}, "wallMs": n}
// The payload is deterministic (exact rational strings, sorted keys); the wall
// time lives outside it so reports stay diffable. Exit codes: 0 success, 2 on
// validation errors (with a machine-readable diagnostic on stderr), 1 on
// internal invariant violations.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdpsat/cvar.hpp"
#include "mdpsat/gadget.hpp"
#include "mdpsat/graph.hpp"
#include "mdpsat/longrun.hpp"
#include "mdpsat/mdp.hpp"
#include "mdpsat/nfa.hpp"
#include "mdpsat/oracle.hpp"
#include "mdpsat/rat.hpp"
#include "mdpsat/sspp.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace mdpsat;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("MalformedDocument", "cannot open input file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("MalformedDocument", "cannot open output file: " + path);
    out << content;
}

// FNV-1a 64-bit content digest, rendered as hex.
std::string digest(const std::string& content) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : content) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

// Accumulates the report pieces while a subcommand runs.
struct Run {
    json inputs = json::object();
    json payload = json::object();
    std::vector<std::string> outputs;  // paths written, echoed in the report

    std::string load(const std::string& path) {
        std::string content = read_file(path);
        inputs[path] = digest(content);
        return content;
    }
    void store(const std::string& path, const std::string& content) {
        write_file(path, content);
        outputs.push_back(path);
    }
};

std::set<int> state_set(const Mdp& m, const std::string& csv) {
    std::set<int> out;
    std::stringstream ss(csv);
    std::string id;
    while (std::getline(ss, id, ',')) {
        if (!id.empty()) out.insert(m.state_index(id));
    }
    return out;
}

json rats(const std::vector<Rat>& v) {
    json a = json::array();
    for (const Rat& q : v) a.push_back(rat_str(q));
    return a;
}

void print_human(const json& payload, std::ostream& os, int indent = 0) {
    std::string pad(indent, ' ');
    for (auto it = payload.begin(); it != payload.end(); ++it) {
        if (it->is_object() && !it->empty()) {
            os << pad << it.key() << ":\n";
            print_human(*it, os, indent + 2);
        } else {
            os << pad << it.key() << ": " << it->dump() << "\n";
        }
    }
}

// ---- solve ----

void cmd_solve_sspp(Run& run, const std::string& file, const std::string& objective,
                    bool minimize) {
    Mdp m = parse_mdp(run.load(file));
    if (objective == "classical") {
        Mdp normal = sspp_preprocess(m);
        SsppResult r = classical_sspp(normal, !minimize);
        run.payload["objective"] = "classical";
        run.payload["value"] = rat_str(r.value);
    } else if (objective == "pe") {
        PartialResult r = acyclic_partial_expectation(m, !minimize);
        run.payload["objective"] = "pe";
        run.payload["value"] = rat_str(r.value);
    } else if (objective == "ce") {
        PartialResult r = acyclic_conditional_expectation(m, !minimize);
        run.payload["objective"] = "ce";
        run.payload["value"] = rat_str(r.value);
    } else {
        throw Error("MalformedDocument", "unknown objective: " + objective);
    }
    run.payload["direction"] = minimize ? "min" : "max";
}

void cmd_solve_cvar(Run& run, const std::string& file, const std::string& pText,
                    bool highBad) {
    Mdp m = parse_mdp(run.load(file));
    CvarQuery q{rat_parse(pText), highBad};
    CvarResult r = highBad ? cvar_max_high_bad(m, q) : cvar_max(m, q);
    run.payload["value"] = rat_str(r.value);
    run.payload["var"] = rat_str(r.var);
    run.payload["p"] = rat_str(q.p);
    run.payload["highBad"] = highBad;
    run.payload["saturation"] = {{"K", int_str(r.saturation.K)},
                                 {"ell", int_str(r.saturation.ell)},
                                 {"W", int_str(r.saturation.W)},
                                 {"deltaMin", rat_str(r.saturation.deltaMin)}};
}

void cmd_solve_wlf(Run& run, const std::string& file, const std::string& goalCsv,
                   const std::string& failCsv) {
    Mdp m = parse_mdp(run.load(file));
    LongRunSpec spec{state_set(m, goalCsv), state_set(m, failCsv)};
    WlfResult r = wlf_max(m, spec);
    run.payload["value"] = rat_str(r.value);
    run.payload["saturation"] = {{"K", int_str(r.saturation.K)},
                                 {"W", int_str(r.saturation.W)},
                                 {"delta", rat_str(r.saturation.delta)},
                                 {"e", rat_str(r.saturation.e)},
                                 {"sPrime", r.saturation.sPrime}};
    json gains = json::object();
    for (const auto& [mec, gain] : r.gainPerMec) gains[std::to_string(mec)] = rat_str(gain);
    run.payload["gainPerMec"] = gains;
}

// ---- check ----

void cmd_check_fltl(Run& run, const std::string& file, const std::string& thetaText,
                    const std::string& a, const std::string& b) {
    Mdp m = parse_mdp(run.load(file));
    FreqQuery q{rat_parse(thetaText), a, b};
    FltlReport r = fltl_qualitative(m, q);
    run.payload["holds"] = r.holds;
    run.payload["theta"] = rat_str(q.theta);
    json gains = json::object();
    for (const auto& [mec, gain] : r.perMecGain) gains[std::to_string(mec)] = rat_str(gain);
    run.payload["perMecGain"] = gains;
}

// ---- gadget ----

json threshold_payload(const ThresholdReport& r) {
    json p;
    p["theta"] = rat_str(r.theta);
    p["seriesValue"] = rat_str(r.seriesValue);
    p["divisor"] = rat_str(r.divisor);
    p["lambda"] = rat_str(r.lambda);
    p["mu"] = rat_str(r.mu);
    p["betaScale"] = rat_str(r.betaScale);
    p["rescaled"] = {{"k", r.rescaled.k},
                     {"alphas", rats(r.rescaled.alphas)},
                     {"betas", rats(r.rescaled.betas)}};
    p["matrixDim"] = (int)r.a.size();
    p["states"] = r.gadget.num_states();
    json canon = json::object();
    for (const auto& [k, v] : r.canonical) canon[k] = v;
    p["canonical"] = canon;
    return p;
}

void cmd_gadget(Run& run, const std::string& kind, const std::string& lrsFile,
                const std::string& outFile, const std::string& reportFile,
                const std::string& nfaFile) {
    Lrs l = parse_lrs(run.load(lrsFile));
    if (kind == "lrp") {
        LrpInstance inst = build_lrp_instance(l);
        run.payload["kind"] = "lrp";
        run.payload["states"] = inst.mdp.num_states();
        run.payload["chainStates"] = inst.chainStates;
        json gs = json::array(), fs = json::array();
        for (int s : inst.spec.goalSet) gs.push_back(inst.mdp.states[s].id);
        for (int s : inst.spec.failSet) fs.push_back(inst.mdp.states[s].id);
        run.payload["goalSet"] = gs;
        run.payload["failSet"] = fs;
        if (!outFile.empty()) run.store(outFile, serialize_mdp(inst.mdp));
        if (!nfaFile.empty()) run.store(nfaFile, serialize_nfa(inst.nfa));
        return;
    }
    ThresholdReport r = kind == "pe"     ? threshold_pe(l)
                        : kind == "cvar" ? threshold_cvar(l)
                                         : threshold_wlf(l);
    run.payload = threshold_payload(r);
    run.payload["kind"] = kind;
    if (!outFile.empty()) {
        const Mdp& out = (kind == "cvar" && r.prefixed) ? *r.prefixed : r.gadget;
        run.store(outFile, serialize_mdp(out));
    }
    if (!reportFile.empty()) run.store(reportFile, run.payload.dump(2) + "\n");
}

// ---- reduce ----

void cmd_reduce(Run& run, const std::string& kind, const std::string& file,
                const std::string& thetaText, const std::string& outFile) {
    Mdp m = parse_mdp(run.load(file));
    Rat theta = rat_parse(thetaText);
    run.payload["kind"] = kind;
    run.payload["theta"] = rat_str(theta);
    if (kind == "pe-ce") {
        PeCeReduction r = reduce_pe_to_ce(m, theta);
        run.payload["scale"] = int_str(r.scale);
        run.payload["thresholdScaled"] = rat_str(r.thresholdScaled);
        if (!outFile.empty()) run.store(outFile, serialize_mdp(r.mdp));
    } else if (kind == "ce-pe") {
        auto [out, params] = reduce_ce_to_pe_acyclic(m, theta);
        run.payload["m"] = int_str(params.m);
        run.payload["delta"] = rat_str(params.delta);
        run.payload["w"] = int_str(params.w);
        run.payload["p"] = rat_str(params.p);
        run.payload["R"] = rat_str(params.R);
        run.payload["thrGeq"] = rat_str(params.thrGeq);
        run.payload["thrGt"] = rat_str(params.thrGt);
        run.payload["thrMin"] = rat_str(params.thrMin);
        run.payload["preGadget"] = params.preGadget;
        run.payload["scale"] = int_str(params.scale);
        if (!outFile.empty()) run.store(outFile, serialize_mdp(out));
    } else if (kind == "pe-wlf") {
        auto [out, thetaPrime] = reduce_pe_to_wlf_acyclic(m, theta);
        run.payload["thetaPrime"] = rat_str(thetaPrime);
        if (!outFile.empty()) run.store(outFile, serialize_mdp(out));
    } else {
        throw Error("MalformedDocument", "unknown reduction: " + kind);
    }
}

// ---- oracle ----

SchedulerSpace make_space(const std::string& name, long cap, bool reset, bool segment) {
    SchedulerSpace sp;
    if (name == "memoryless") {
        sp.kind = SchedulerSpace::Kind::Memoryless;
    } else if (name == "acyclic-history") {
        sp.kind = SchedulerSpace::Kind::AcyclicHistory;
    } else if (name == "weight-memory") {
        sp.kind = SchedulerSpace::Kind::WeightMemory;
        sp.cap = cap;
        sp.resetOnGoalFail = reset;
        sp.segmentMode = segment;
    } else {
        throw Error("MalformedDocument", "unknown scheduler space: " + name);
    }
    return sp;
}

void brute_payload(Run& run, const BruteResult& r) {
    run.payload["value"] = rat_str(r.value);
    run.payload["spaceSize"] = int_str(r.spaceSize);
    json choices = json::object();
    for (const auto& [k, v] : r.choices) choices[k] = v;
    run.payload["witness"] = choices;
}

void cmd_oracle(Run& run, const std::string& kind, const std::string& file,
                const std::string& spaceName, long cap, bool reset, bool segment,
                bool minimize, const std::string& pText, const std::string& goalCsv,
                const std::string& failCsv) {
    Mdp m = parse_mdp(run.load(file));
    SchedulerSpace sp = make_space(spaceName, cap, reset, segment);
    run.payload["kind"] = kind;
    run.payload["space"] = spaceName;
    if (kind == "pe") {
        brute_payload(run, brute_pe(m, sp, !minimize));
    } else if (kind == "ce") {
        brute_payload(run, brute_ce(m, sp, !minimize));
    } else if (kind == "cvar") {
        brute_payload(run, brute_cvar(m, sp, rat_parse(pText)));
    } else if (kind == "wlf") {
        LongRunSpec spec{state_set(m, goalCsv), state_set(m, failCsv)};
        brute_payload(run, brute_wlf(m, spec, sp));
    } else {
        throw Error("MalformedDocument", "unknown oracle objective: " + kind);
    }
}

// ---- positivity ----

void cmd_positivity(Run& run, const std::string& lrsFile, int horizon) {
    Lrs l = parse_lrs(run.load(lrsFile));
    int h = horizon > 0 ? horizon : default_horizon(l);
    std::optional<int> first = positivity_bruteforce(l, h);
    run.payload["horizon"] = h;
    if (first)
        run.payload["firstNegative"] = *first;
    else
        run.payload["firstNegative"] = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact rational analysis of weighted MDP objectives"};
    app.require_subcommand(1);
    bool human = false;
    int threads = 1;
    app.add_flag("--human", human, "Append a rendered table after the JSON report");
    app.add_option("--threads", threads,
                   "Worker threads (results are identical regardless of the value)");

    std::string file, lrsFile, outFile, reportFile, nfaFile;
    std::string objective = "classical", pText = "1/2", thetaText = "0";
    std::string goalCsv, failCsv, spaceName = "memoryless", apA = "a", apB = "b";
    bool minimize = false, highBad = false, reset = false, segment = false;
    long cap = 0;
    int horizon = 0;

    CLI::App* solve = app.add_subcommand("solve", "Exact optimal values");
    CLI::App* sSspp = solve->add_subcommand("sspp", "Expected accumulated weight");
    sSspp->add_option("-f,--file", file)->required();
    sSspp->add_option("--objective", objective, "classical | pe | ce");
    sSspp->add_flag("--min", minimize);
    CLI::App* sCvar = solve->add_subcommand("cvar", "Conditional value-at-risk");
    sCvar->add_option("-f,--file", file)->required();
    sCvar->add_option("--p", pText)->required();
    sCvar->add_flag("--high-bad", highBad);
    CLI::App* sWlf = solve->add_subcommand("wlf", "Weighted long-run frequency");
    sWlf->add_option("-f,--file", file)->required();
    sWlf->add_option("--goal", goalCsv, "comma-separated state ids")->required();
    sWlf->add_option("--fail", failCsv, "comma-separated state ids")->required();

    CLI::App* check = app.add_subcommand("check", "Qualitative checks");
    CLI::App* cFltl = check->add_subcommand("fltl", "Frequency until-formula check");
    cFltl->add_option("-f,--file", file)->required();
    cFltl->add_option("--theta", thetaText)->required();
    cFltl->add_option("--a", apA);
    cFltl->add_option("--b", apB);

    CLI::App* gadget = app.add_subcommand("gadget", "Recurrence-sequence instances");
    for (const char* kind : {"pe", "cvar", "wlf", "lrp"}) {
        CLI::App* g = gadget->add_subcommand(kind);
        g->add_option("--lrs", lrsFile)->required();
        g->add_option("-o,--out", outFile, "write the instance model here");
        g->add_option("--report", reportFile, "write the threshold report here");
        if (std::string(kind) == "lrp")
            g->add_option("--nfa-out", nfaFile, "write the automaton here");
    }

    CLI::App* reduce = app.add_subcommand("reduce", "Threshold-problem reductions");
    for (const char* kind : {"pe-ce", "ce-pe", "pe-wlf"}) {
        CLI::App* r = reduce->add_subcommand(kind);
        r->add_option("-f,--file", file)->required();
        r->add_option("--theta", thetaText)->required();
        r->add_option("-o,--out", outFile);
    }

    CLI::App* oracle = app.add_subcommand("oracle", "Brute-force ground truth");
    for (const char* kind : {"pe", "ce", "cvar", "wlf"}) {
        CLI::App* o = oracle->add_subcommand(kind);
        o->add_option("-f,--file", file)->required();
        o->add_option("--space", spaceName, "memoryless | acyclic-history | weight-memory");
        o->add_option("--cap", cap, "weight-memory mode cap");
        o->add_flag("--reset", reset, "reset the mode on entering goal or fail");
        o->add_flag("--segment", segment, "reset the mode on leaving goal or fail");
        o->add_flag("--min", minimize);
        if (std::string(kind) == "cvar") o->add_option("--p", pText);
        if (std::string(kind) == "wlf") {
            o->add_option("--goal", goalCsv)->required();
            o->add_option("--fail", failCsv)->required();
        }
    }

    CLI::App* positivity = app.add_subcommand("positivity", "Scan a recurrence for a sign change");
    positivity->add_option("--lrs", lrsFile)->required();
    positivity->add_option("--horizon", horizon);

    CLI11_PARSE(app, argc, argv);
    (void)threads;  // accepted for interface stability; solvers are sequential

    Run run;
    auto started = std::chrono::steady_clock::now();
    try {
        if (sSspp->parsed()) cmd_solve_sspp(run, file, objective, minimize);
        if (sCvar->parsed()) cmd_solve_cvar(run, file, pText, highBad);
        if (sWlf->parsed()) cmd_solve_wlf(run, file, goalCsv, failCsv);
        if (cFltl->parsed()) cmd_check_fltl(run, file, thetaText, apA, apB);
        for (CLI::App* g : gadget->get_subcommands())
            cmd_gadget(run, g->get_name(), lrsFile, outFile, reportFile, nfaFile);
        for (CLI::App* r : reduce->get_subcommands())
            cmd_reduce(run, r->get_name(), file, thetaText, outFile);
        for (CLI::App* o : oracle->get_subcommands())
            cmd_oracle(run, o->get_name(), file, spaceName, cap, reset, segment, minimize,
                       pText, goalCsv, failCsv);
        if (positivity->parsed()) cmd_positivity(run, lrsFile, horizon);
    } catch (const Error& e) {
        json err{{"error", e.code()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return e.code() == "InternalInvariant" ? 1 : 2;
    } catch (const std::exception& e) {
        json err{{"error", "InternalInvariant"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    auto wallMs = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - started)
                      .count();

    json report;
    json cmd = json::array();
    for (int i = 1; i < argc; ++i) cmd.push_back(argv[i]);
    report["command"] = cmd;
    report["inputs"] = run.inputs;
    if (!run.outputs.empty()) report["outputs"] = run.outputs;
    report["payload"] = run.payload;
    report["wallMs"] = wallMs;
    std::cout << report.dump(2) << "\n";
    if (human) {
        std::cout << "---\n";
        print_human(run.payload, std::cout);
    }
    return 0;
}

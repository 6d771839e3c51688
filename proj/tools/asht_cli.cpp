#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "asht/blackwell.hpp"
#include "asht/bounds.hpp"
#include "asht/core.hpp"
#include "asht/errors.hpp"
#include "asht/goap.hpp"
#include "asht/parallel.hpp"
#include "asht/pde.hpp"
#include "asht/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace asht;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kExitOk = 0, kExitValidation = 2, kExitBudget = 3, kExitUsage = 64;

const std::vector<std::string> kSubcommands = {"bounds", "pde", "goap", "approach", "simulate", "report"};

json num(double v) { return round_sig(v); }

json num_array(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

// RFC 4180: CRLF records, fields quoted when they contain a comma, quote or line break.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw ValidationError("cannot open " + path + " for writing");
    }
    void row(const std::vector<std::string>& fields) {
        for (std::size_t k = 0; k < fields.size(); ++k) {
            if (k) out_ << ',';
            const auto& f = fields[k];
            if (f.find_first_of(",\"\r\n") == std::string::npos) {
                out_ << f;
            } else {
                out_ << '"';
                for (char c : f) out_ << (c == '"' ? "\"\"" : std::string(1, c));
                out_ << '"';
            }
        }
        out_ << "\r\n";
    }

private:
    std::ofstream out_;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create directory " + dir + ": " + ec.message());
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            int v = std::stoi(tok, &used);
            if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError(std::string(what) + ": '" + tok + "' is not a positive integer");
        }
    }
    if (out.empty()) throw ValidationError(std::string(what) + " is empty");
    return out;
}

std::vector<int> parse_truths(const std::string& s, int m) {
    std::vector<int> out;
    if (s == "all") {
        for (int i = 0; i < m; ++i) out.push_back(i);
        return out;
    }
    int v = -1;
    try {
        std::size_t used = 0;
        v = std::stoi(s, &used);
        if (used != s.size()) v = -1;
    } catch (const std::exception&) {
    }
    if (v < 0 || v >= m) throw ValidationError("--truth must be 'all' or an index in [0, " + std::to_string(m) + ")");
    return {v};
}

struct Common {
    std::string out_dir = ".";
    int threads = 0;
};

struct Context {
    std::string subcommand;
    json manifest;
    Common common;

    Context(std::string sub, int argc, char** argv, const Common& c) : subcommand(std::move(sub)), common(c) {
        manifest["tool"] = "asht";
        manifest["version"] = kVersion;
        manifest["subcommand"] = subcommand;
        json args = json::array();
        for (int k = 1; k < argc; ++k) args.push_back(argv[k]);
        manifest["argv"] = args;
        manifest["threads"] = thread_count();
    }
    std::string path(const std::string& name) const { return (fs::path(common.out_dir) / name).string(); }
    void finish(const std::string& status) {
        manifest["status"] = status;
        write_json(path("asht_" + subcommand + "_manifest.json"), manifest);
    }
};

void record_instance(Context& ctx, const std::string& path, const BanditClass& inst) {
    ctx.manifest["inputs"]["instance_path"] = path;
    ctx.manifest["inputs"]["instance"] = instance_to_json(inst);
}

json de_json(const DEOptions& de) {
    return {{"seed", de.seed},          {"tol", de.tol},
            {"max_generations", de.max_generations}, {"pop_per_dim", de.pop_per_dim}};
}

// ---------------------------------------------------------------- bounds

struct BoundsArgs {
    std::string instance;
    std::uint64_t seed = DEOptions{}.seed;
    int pde_nx = 0;
    bool approach = false;
};

BoundsReport full_bounds(const BanditClass& inst, const BoundsArgs& a, json& extra) {
    DEOptions de;
    de.seed = a.seed;
    BoundsReport rep = compute_bounds(inst, de);
    if (a.pde_nx > 0) {
        auto spec = UpwindGridSpec::make(inst, a.pde_nx);
        auto res = solve_r_go_inf(inst, spec);
        rep.r_go_inf = res.value;
        extra["pde"] = {{"N_x", spec.N_x},
                        {"N_t", spec.N_t},
                        {"refinement_estimate", num(res.refinement_estimate)}};
    }
    if (a.approach) {
        auto ar = r_approach(inst, de);
        rep.r_approach = ar.value;
        extra["approach"] = {{"g_at_value", num(ar.g_at_value)}, {"bset", ar.spec.to_json()}};
    }
    return rep;
}

void print_bounds(const BoundsReport& rep) {
    std::printf("%-12s %s\n", "bound", "value");
    std::printf("%-12s %s\n", "r_static", fmt(rep.r_static).c_str());
    std::printf("%-12s %s\n", "r_go_1", fmt(rep.r_go_1).c_str());
    std::printf("%-12s %s\n", "r_hopf", fmt(rep.r_hopf).c_str());
    std::printf("%-12s %s\n", "r_ub", fmt(rep.r_ub).c_str());
    if (rep.r_go_inf) std::printf("%-12s %s\n", "r_go_inf", fmt(*rep.r_go_inf).c_str());
    if (rep.r_approach) std::printf("%-12s %s\n", "r_approach", fmt(*rep.r_approach).c_str());
    for (const auto& v : rep.check_ladder()) std::printf("warning: ladder violated: %s\n", v.c_str());
}

int run_bounds(Context& ctx, const BoundsArgs& a, const std::string& json_out) {
    auto inst = load_instance(a.instance);
    record_instance(ctx, a.instance, inst);
    DEOptions de;
    de.seed = a.seed;
    ctx.manifest["de"] = de_json(de);
    json extra;
    auto rep = full_bounds(inst, a, extra);
    json res = rep.to_json();
    if (!extra.is_null()) res.update(extra);
    ctx.manifest["results"] = res;
    print_bounds(rep);
    if (!json_out.empty()) write_json(json_out, res);
    return kExitOk;
}

// ---------------------------------------------------------------- pde

struct PdeArgs {
    std::string instance;
    int nx = 96;
    int nt = 0;
    double cfl = 0.9;
    bool no_refine = false;
    bool full_grid = false;
    std::string emit_slices;
    int slice_every = 10;
};

void write_slice(const std::string& file, const UpwindGridSpec& spec, const ValueSlice& s) {
    CsvWriter csv(file);
    std::vector<std::string> head;
    for (int k = 0; k < spec.m; ++k) head.push_back("x_" + std::to_string(k + 1));
    head.push_back("value");
    csv.row(head);
    std::vector<int> idx(spec.m);
    for (std::size_t k = 0; k < s.v.size(); ++k) {
        s.unflat(k, idx.data());
        std::vector<std::string> row;
        for (int d = 0; d < spec.m; ++d) row.push_back(fmt(spec.coord(idx[d])));
        row.push_back(fmt(s.v[k]));
        csv.row(row);
    }
}

int run_pde(Context& ctx, const PdeArgs& a) {
    auto inst = load_instance(a.instance);
    record_instance(ctx, a.instance, inst);
    auto spec = a.nt > 0 ? UpwindGridSpec::make_fixed(inst, a.nx, a.nt) : UpwindGridSpec::make(inst, a.nx, a.cfl);
    PdeOptions opt;
    opt.refine = !a.no_refine;
    opt.orthant_only = !a.full_grid;
    if (!a.emit_slices.empty()) {
        if (a.slice_every < 1) throw ValidationError("--slice-every must be positive");
        ensure_dir(a.emit_slices);
        opt.on_step = [&](int step, const ValueSlice& s) {
            if (step % a.slice_every != 0 && step != spec.N_t) return;
            char name[32];
            std::snprintf(name, sizeof name, "slice_%06d.csv", step);
            write_slice((fs::path(a.emit_slices) / name).string(), spec, s);
        };
    }
    auto res = solve_r_go_inf(inst, spec, opt);
    json r = {{"r_go_inf", num(res.value)},
              {"N_x", spec.N_x},
              {"N_t", spec.N_t},
              {"dh", num(spec.dh)},
              {"dt", num(spec.dt)},
              {"stability_margin", num(spec.stability_margin())},
              {"max_value", num(res.max_value)},
              {"min_value", num(res.min_value)}};
    if (opt.refine) {
        r["fine_value"] = num(res.fine_value);
        r["refinement_estimate"] = num(res.refinement_estimate);
    }
    ctx.manifest["results"] = r;
    std::printf("r_go_inf %s (N_x = %d, N_t = %d)\n", fmt(res.value).c_str(), spec.N_x, spec.N_t);
    if (opt.refine) std::printf("refinement_estimate %s\n", fmt(res.refinement_estimate).c_str());
    return kExitOk;
}

// ---------------------------------------------------------------- goap

struct GoapArgs {
    std::string instance;
    int batches = 10;
    double kappa = 40.0;
    double memory_cap_gb = 2.0;
    std::string table_out;
    std::string replay;
    int paths = 0;
    int samples = 1000;
    std::uint64_t seed = 1;
};

int run_goap(Context& ctx, const GoapArgs& a) {
    auto inst = load_instance(a.instance);
    record_instance(ctx, a.instance, inst);
    ctx.manifest["inputs"]["batches"] = a.batches;
    ctx.manifest["inputs"]["kappa"] = a.kappa;
    ctx.manifest["seed"] = a.seed;
    if (a.memory_cap_gb <= 0) throw ValidationError("--memory-cap-gb must be positive");
    ValueTable table;
    if (a.replay.empty()) {
        auto built = build_grids(inst, a.batches, a.kappa, std::size_t(a.memory_cap_gb * double(1ull << 30)));
        table = backward_induction(inst, built);
    } else {
        std::ifstream in(a.replay);
        if (!in) throw ValidationError("cannot open value table " + a.replay);
        try {
            table = ValueTable::from_json(json::parse(in));
        } catch (const json::exception& e) {
            throw ValidationError("value table " + a.replay + " is malformed: " + e.what());
        }
        if (table.spec().m != inst.m()) throw ValidationError("value table dimension does not match the instance");
        ctx.manifest["inputs"]["replay"] = a.replay;
    }
    const auto& spec = table.spec();
    const int B = spec.B;
    const double v0 = table.value(0, std::vector<int>(inst.m(), 0));
    json r = {{"V0", num(v0)},
              {"dt", num(spec.dt)},
              {"dh", num(spec.dh)},
              {"stored_bytes", spec.stored_bytes()}};
    std::printf("V0(0) %s (dt = %s, dh = %s)\n", fmt(v0).c_str(), fmt(spec.dt).c_str(), fmt(spec.dh).c_str());
    if (a.paths > 0) {
        std::vector<double> g(a.paths);
        int errors = 0;
        for (int k = 0; k < a.paths; ++k) {
            auto rec = run_trial(GoapPolicy{&table}, inst, k % inst.m(), a.samples, B, trial_seed(a.seed, k));
            g[k] = rec.terminal_g;
            errors += rec.decision != rec.truth;
        }
        r["paths"] = {{"count", a.paths},
                      {"samples", a.samples},
                      {"errors", errors},
                      {"min_terminal_g", num(*std::min_element(g.begin(), g.end()))}};
        std::printf("paths %d, errors %d, min terminal g %s\n", a.paths, errors,
                    fmt(*std::min_element(g.begin(), g.end())).c_str());
    }
    if (!a.table_out.empty()) write_json(a.table_out, table.to_json());
    ctx.manifest["results"] = r;
    return kExitOk;
}

// ---------------------------------------------------------------- approach

struct ApproachArgs {
    std::string instance;
    int batches = 200;
    int samples = 20000;
    int trials = 10;
    std::string truth = "all";
    std::uint64_t seed = 1;
    std::string emit_paths;
};

void emit_path(const std::string& file, const BanditClass& inst, const ApproachRun& run) {
    CsvWriter csv(file);
    std::vector<std::string> head = {"batch"};
    for (int i = 0; i < inst.m(); ++i) head.push_back("x_" + std::to_string(i + 1));
    head.push_back("l");
    for (int a = 0; a < inst.K(); ++a) head.push_back("w_" + std::to_string(a + 1));
    csv.row(head);
    for (std::size_t b = 0; b < run.steps.size(); ++b) {
        const auto& s = run.steps[b];
        std::vector<std::string> row = {std::to_string(b + 1)};
        for (double v : s.x) row.push_back(fmt(v));
        row.push_back(fmt(s.l));
        for (double v : s.w) row.push_back(fmt(v));
        csv.row(row);
    }
}

int run_approach(Context& ctx, const ApproachArgs& a) {
    auto inst = load_instance(a.instance);
    record_instance(ctx, a.instance, inst);
    if (a.trials < 1) throw ValidationError("--trials must be positive");
    if (a.batches < 1 || a.samples < a.batches) throw ValidationError("need 1 <= --batches <= --samples");
    auto truths = parse_truths(a.truth, inst.m());
    ctx.manifest["seed"] = a.seed;
    ctx.manifest["inputs"]["batches"] = a.batches;
    ctx.manifest["inputs"]["samples"] = a.samples;
    ctx.manifest["inputs"]["trials"] = a.trials;
    if (!a.emit_paths.empty()) ensure_dir(a.emit_paths);
    auto ar = r_approach(inst);
    std::printf("r_approach %s\n", fmt(ar.value).c_str());
    json runs = json::array();
    std::uint64_t idx = 0;
    for (int truth : truths) {
        for (int k = 0; k < a.trials; ++k, ++idx) {
            const auto seed = trial_seed(a.seed, idx);
            Rng rng(seed);
            BatchSampler sampler = [&](const std::vector<int>& counts) {
                return sample_counts(truth, inst, counts, rng);
            };
            auto run = approachability_run(ar.spec, sampler, a.samples, a.batches);
            runs.push_back({{"truth", truth},
                            {"trial", k},
                            {"seed", seed},
                            {"decision", run.decision},
                            {"terminal_g", num(run.terminal_g)},
                            {"M", num(run.M)},
                            {"recursion_violation", num(run.recursion_violation)}});
            std::printf("truth %d trial %d decision %d terminal_g %s recursion_violation %s\n", truth, k,
                        run.decision, fmt(run.terminal_g).c_str(), fmt(run.recursion_violation).c_str());
            if (!a.emit_paths.empty())
                emit_path((fs::path(a.emit_paths) / ("path_truth" + std::to_string(truth) + "_trial" +
                                                     std::to_string(k) + ".csv"))
                              .string(),
                          inst, run);
        }
    }
    ctx.manifest["results"] = {{"r_approach", num(ar.value)}, {"bset", ar.spec.to_json()}, {"runs", runs}};
    return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string instance;
    std::string policy = "static";
    std::string t_grid = "40,60,80,100";
    int trials = 10000;
    std::uint64_t seed = 1;
    int batches = 0;
    double kappa = 40.0;
    std::string weights;
    std::string out = "results.csv";
    std::string summary = "summary.json";
};

void write_rows(const std::string& path, const std::string& policy, const ExponentEstimate& est) {
    CsvWriter csv(path);
    csv.row({"policy", "truth", "T", "trials", "errors", "p_hat", "ci_lo", "ci_hi"});
    for (const auto& r : est.rows)
        csv.row({policy, std::to_string(r.truth), std::to_string(r.T), std::to_string(r.trials),
                 std::to_string(r.errors), fmt(r.p_hat), fmt(r.ci.lo), fmt(r.ci.hi)});
}

int run_simulate(Context& ctx, const SimulateArgs& a) {
    auto inst = load_instance(a.instance);
    record_instance(ctx, a.instance, inst);
    auto grid = parse_int_list(a.t_grid, "--t-grid");
    if (a.trials < 1) throw ValidationError("--trials must be positive");
    ctx.manifest["seed"] = a.seed;
    ctx.manifest["inputs"]["policy"] = a.policy;
    ctx.manifest["inputs"]["t_grid"] = grid;
    ctx.manifest["inputs"]["trials"] = a.trials;

    Policy policy;
    int B = a.batches;
    BSetSpec spec;
    ValueTable table;
    if (a.policy == "static") {
        Allocation w;
        if (a.weights.empty()) {
            w = r_static(inst).w_star;
        } else {
            std::stringstream ss(a.weights);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                try {
                    w.push_back(std::stod(tok));
                } catch (const std::exception&) {
                    throw ValidationError("--weights: '" + tok + "' is not a number");
                }
            }
            w = checked_simplex(w, "--weights");
        }
        if (static_cast<int>(w.size()) != inst.K()) throw ValidationError("--weights needs one entry per arm");
        ctx.manifest["inputs"]["weights"] = num_array(w);
        policy = StaticPolicy{w};
        if (B == 0) B = 1;
    } else if (a.policy == "approach") {
        spec = r_approach(inst).spec;
        policy = ApproachPolicy{&spec};
        if (B == 0) B = 200;
    } else if (a.policy == "goap") {
        if (B == 0) B = 10;
        table = backward_induction(inst, build_grids(inst, B, a.kappa));
        policy = GoapPolicy{&table};
        ctx.manifest["inputs"]["kappa"] = a.kappa;
    } else {
        throw ValidationError("--policy must be static, approach or goap");
    }
    for (int T : grid)
        if (T < B) throw ValidationError("every T in --t-grid must be at least the batch count " + std::to_string(B));
    ctx.manifest["inputs"]["batches"] = B;

    json summary = {{"policy", a.policy}, {"trials", a.trials}, {"seed", a.seed}};
    ExponentEstimate est;
    try {
        est = estimate_error_exponent(policy, inst, grid, a.trials, a.seed, B);
    } catch (const InsufficientDataError& e) {
        write_rows(a.out, a.policy, e.partial());
        summary["error"] = e.what();
        summary["warnings"] = e.partial().warnings;
        write_json(a.summary, summary);
        ctx.manifest["results"] = summary;
        throw;
    }
    write_rows(a.out, a.policy, est);
    summary["slope"] = num(est.slope);
    summary["stderr"] = num(est.stderr_);
    summary["intercept"] = num(est.intercept);
    summary["used_T"] = est.used_T;
    summary["warnings"] = est.warnings;
    write_json(a.summary, summary);
    ctx.manifest["results"] = summary;
    for (const auto& w : est.warnings) std::printf("warning: %s\n", w.c_str());
    std::printf("slope %s stderr %s\n", fmt(est.slope).c_str(), fmt(est.stderr_).c_str());
    return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::vector<std::string> instances;
    std::string out = "report.csv";
    std::uint64_t seed = DEOptions{}.seed;
    int pde_nx = 0;
    bool approach = false;
};

int run_report(Context& ctx, const ReportArgs& a) {
    CsvWriter csv(a.out);
    csv.row({"instance", "m", "K", "r_static", "r_ub", "r_go_1", "r_hopf", "r_go_inf", "r_approach"});
    json rows = json::array();
    for (const auto& path : a.instances) {
        auto inst = load_instance(path);
        BoundsArgs b{path, a.seed, a.pde_nx, a.approach};
        json extra;
        auto rep = full_bounds(inst, b, extra);
        csv.row({path, std::to_string(inst.m()), std::to_string(inst.K()), fmt(rep.r_static), fmt(rep.r_ub),
                 fmt(rep.r_go_1), fmt(rep.r_hopf), rep.r_go_inf ? fmt(*rep.r_go_inf) : "",
                 rep.r_approach ? fmt(*rep.r_approach) : ""});
        json r = rep.to_json();
        r["instance_path"] = path;
        rows.push_back(r);
        std::printf("%s\n", path.c_str());
        print_bounds(rep);
    }
    ctx.manifest["inputs"]["instances"] = a.instances;
    ctx.manifest["de"] = de_json(DEOptions{.seed = a.seed});
    ctx.manifest["results"] = rows;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimax error exponents and adaptive policies for active simple hypothesis testing", "asht"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Common common;
    app.add_option("--out-dir", common.out_dir, "Directory for run manifests");
    app.add_option("--threads", common.threads, "Worker threads (default: ASHT_THREADS, then all cores)")
        ->check(CLI::PositiveNumber);

    BoundsArgs bounds;
    std::string bounds_json;
    auto* sb = app.add_subcommand("bounds", "Exponent ladder of one instance");
    sb->add_option("--instance", bounds.instance, "Instance JSON")->required();
    sb->add_option("--seed", bounds.seed, "Differential evolution seed");
    sb->add_option("--pde-nx", bounds.pde_nx, "Also solve the PDE at this resolution (0 skips)");
    sb->add_flag("--approach", bounds.approach, "Also compute r_approach");
    sb->add_option("--json", bounds_json, "Write the report JSON here");

    PdeArgs pde;
    auto* sp = app.add_subcommand("pde", "Upwind solver for the game value");
    sp->add_option("--instance", pde.instance, "Instance JSON")->required();
    sp->add_option("--nx", pde.nx, "Cells per axis (even)");
    sp->add_option("--nt", pde.nt, "Time steps (default: CFL-tight)");
    sp->add_option("--cfl-fraction,--cfl", pde.cfl, "Fraction of the CFL limit for dt");
    sp->add_flag("--no-refine", pde.no_refine, "Skip the halved-grid refinement run");
    sp->add_flag("--full-grid", pde.full_grid, "Step the whole grid instead of the origin's orthant");
    sp->add_option("--emit-slices", pde.emit_slices, "Directory for slice CSVs");
    sp->add_option("--slice-every", pde.slice_every, "Write every k-th step");

    GoapArgs goap;
    auto* sg = app.add_subcommand("goap", "Backward induction on the cone grids");
    sg->add_option("--instance", goap.instance, "Instance JSON")->required();
    sg->add_option("--batches", goap.batches, "Batch count B");
    sg->add_option("--kappa", goap.kappa, "Grid coarseness: dh ~ kappa dt^2 / sqrt(m)");
    sg->add_option("--memory-cap-gb", goap.memory_cap_gb, "Refuse tables larger than this");
    sg->add_option("--table-out", goap.table_out, "Write the value table JSON here");
    sg->add_option("--replay", goap.replay, "Load a dumped value table instead of building one");
    sg->add_option("--paths", goap.paths, "Simulated GOAP paths");
    sg->add_option("--samples", goap.samples, "Samples per simulated path");
    sg->add_option("--seed", goap.seed, "Master seed for paths");

    ApproachArgs appr;
    auto* sa = app.add_subcommand("approach", "Approachability runs with pathwise certificates");
    sa->add_option("--instance", appr.instance, "Instance JSON")->required();
    sa->add_option("--batches", appr.batches, "Batch count B");
    sa->add_option("--samples", appr.samples, "Total samples T per run");
    sa->add_option("--trials", appr.trials, "Runs per truth");
    sa->add_option("--truth", appr.truth, "Hypothesis index or 'all'");
    sa->add_option("--seed", appr.seed, "Master seed");
    sa->add_option("--emit-paths", appr.emit_paths, "Directory for one CSV per path");

    SimulateArgs sim;
    auto* ss = app.add_subcommand("simulate", "Monte-Carlo error rates and exponent fit");
    ss->add_option("--instance", sim.instance, "Instance JSON")->required();
    ss->add_option("--policy", sim.policy, "static, approach or goap");
    ss->add_option("--t-grid", sim.t_grid, "Comma-separated budgets T");
    ss->add_option("--trials", sim.trials, "Trials per (truth, T)");
    ss->add_option("--seed", sim.seed, "Master seed");
    ss->add_option("--batches", sim.batches, "Batch count (default 1, 200 or 10 by policy)");
    ss->add_option("--kappa", sim.kappa, "GOAP grid coarseness");
    ss->add_option("--weights", sim.weights, "Static allocation (default: the optimal static one)");
    ss->add_option("--out", sim.out, "Per-cell CSV");
    ss->add_option("--summary", sim.summary, "JSON summary with the slope");

    ReportArgs rep;
    auto* sr = app.add_subcommand("report", "Exponent ladders of several instances as one CSV");
    sr->add_option("--instances", rep.instances, "Instance JSON files")->required();
    sr->add_option("--out", rep.out, "CSV output");
    sr->add_option("--seed", rep.seed, "Differential evolution seed");
    sr->add_option("--pde-nx", rep.pde_nx, "Also solve the PDE at this resolution (0 skips)");
    sr->add_flag("--approach", rep.approach, "Also compute r_approach");

    // An unknown first positional is an unknown subcommand, not a parse error.
    for (int k = 1; k < argc; ++k) {
        std::string arg = argv[k];
        if (arg.rfind("-", 0) == 0) {
            if ((arg == "--out-dir" || arg == "--threads") && k + 1 < argc) ++k;
            continue;
        }
        if (std::find(kSubcommands.begin(), kSubcommands.end(), arg) == kSubcommands.end()) {
            std::cerr << "unknown subcommand '" << arg << "'\n\n" << app.help();
            return kExitUsage;
        }
        break;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::RequiredError& e) {
        if (app.get_subcommands().empty()) {
            std::cerr << app.help();
            return kExitUsage;
        }
        app.exit(e);
        return kExitValidation;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    if (common.threads > 0) set_thread_count(common.threads);
    CLI::App* sub = app.get_subcommands().front();
    Context ctx(sub->get_name(), argc, argv, common);
    try {
        ensure_dir(common.out_dir);
        int code = kExitOk;
        if (sub == sb) code = run_bounds(ctx, bounds, bounds_json);
        else if (sub == sp) code = run_pde(ctx, pde);
        else if (sub == sg) code = run_goap(ctx, goap);
        else if (sub == sa) code = run_approach(ctx, appr);
        else if (sub == ss) code = run_simulate(ctx, sim);
        else code = run_report(ctx, rep);
        ctx.finish("ok");
        return code;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        ctx.manifest["error"] = e.what();
        ctx.finish("validation_error");
        return kExitValidation;
    } catch (const DomainError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        ctx.manifest["error"] = e.what();
        ctx.finish("validation_error");
        return kExitValidation;
    } catch (const SolverError& e) {
        std::cerr << "solver budget exhausted: " << e.what() << "\n";
        ctx.manifest["error"] = e.what();
        ctx.manifest["bracket"] = {num(e.lower()), num(e.upper())};
        ctx.finish("budget_exhausted");
        return kExitBudget;
    } catch (const ResourceError& e) {
        std::cerr << "resource cap exceeded: " << e.what() << "\n";
        ctx.manifest["error"] = e.what();
        ctx.finish("budget_exhausted");
        return kExitBudget;
    }
}

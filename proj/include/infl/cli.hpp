#pragma once

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "functionals.hpp"
#include "inequality_lab.hpp"
#include "quantum_state.hpp"
#include "scenario.hpp"

namespace infl {

/** Exit codes of the front end. */
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitCounterexample = 2 };

/** Shortest round-trip formatting: 17 significant digits. */
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* yes_no(bool b) { return b ? "yes" : "no"; }

/** @brief Everything one scenario run produces. */
struct RunResult {
    std::string id;
    FieldType field = FieldType::EM;
    double distance = 0, t_a = 0, t_b = 0;
    bool spacelike = false;
    FunctionalsReport report;
    StateDiagnostics diag;
    double lambda_min_small = 0;
    bool causal = false;
    double gravitational_constant = 1, kappa_squared = 0;

    /** Invariants asserted for this run: SR and complementarity always, the chain and causality when spacelike. */
    bool counterexample() const {
        if (!diag.sr_holds || !diag.complementarity_holds) return true;
        if (spacelike && (!causal || (diag.sr_holds && diag.entangled))) return true;
        return false;
    }
};

inline RunResult run_scenario(const Scenario& sc, int workers) {
    RunResult r;
    r.id = sc.id;
    r.field = sc.field;
    const auto a = sc.source(Label::A), b = sc.source(Label::B);
    r.distance = norm(a.center() - b.center());
    r.t_a = a.t_end() - a.t_begin();
    r.t_b = b.t_end() - b.t_begin();
    r.spacelike = r.distance > r.t_a && r.distance > r.t_b;
    auto opt = sc.quadrature;
    opt.workers = workers;
    r.report = compute_all_report(a, b, sc.kernel, opt);
    const auto& f = r.report.values;
    r.diag = diagnose(f);
    try {
        r.lambda_min_small = lambda_min_small_coupling(f);
    } catch (const Error&) {
        r.lambda_min_small = std::nan("");
    }
    const double scale = std::max({std::abs(f.phi_ba), f.gamma_a, f.gamma_b});
    r.causal = std::abs(f.phi_ab) <= sc.causal_tolerance * scale;
    r.gravitational_constant = sc.kernel.gravitational_constant;
    r.kappa_squared = sc.kernel.kappa_squared();
    return r;
}

inline void write_run_csv(std::ostream& os, const RunResult& r) {
    const auto& f = r.report.values;
    const auto& p = r.report;
    const auto& d = r.diag;
    os << "scenario_id,field_type,distance,t_a,t_b,spacelike,gamma_a,gamma_b,gamma_c,phi_ab,phi_ba,theta,"
          "err_gamma_a,err_gamma_b,err_gamma_c,err_phi_ab,err_phi_ba,commutator,k_cut,lambda_min,"
          "lambda_min_small_coupling,negativity,visibility,distinguishability,complementarity_sum,sr_lhs,sr_rhs,"
          "causal,sr_holds,entangled,complementarity_holds,converged\n";
    os << r.id << ',' << to_string(r.field);
    for (double v : {r.distance, r.t_a, r.t_b}) os << ',' << fmt17(v);
    os << ',' << int(r.spacelike);
    for (double v : {f.gamma_a, f.gamma_b, f.gamma_c, f.phi_ab, f.phi_ba, f.theta, p.err_gamma_a, p.err_gamma_b,
                     p.err_gamma_c, p.err_phi_ab, p.err_phi_ba, p.commutator, p.k_cut, d.lambda_min,
                     r.lambda_min_small, d.negativity, d.visibility, d.distinguishability, d.complementarity_sum,
                     d.sr_lhs, d.sr_rhs})
        os << ',' << fmt17(v);
    os << ',' << int(r.causal) << ',' << int(d.sr_holds) << ',' << int(d.entangled) << ','
       << int(d.complementarity_holds) << ',' << int(p.converged) << '\n';
}

inline nlohmann::ordered_json run_metadata(const Scenario& sc, const RunResult& r) {
    nlohmann::ordered_json j;
    j["schema_version"] = sc.schema_version;
    j["scenario_id"] = r.id;
    j["field_type"] = std::string(to_string(r.field));
    j["gravitational_constant"] = r.gravitational_constant;
    j["kappa_squared"] = r.kappa_squared;
    j["stress_projection"] = sc.kernel.projection == StressProjection::Newtonian ? "newtonian" : "full";
    j["smearing_width"] = sc.kernel.smearing_width;
    j["uv_cutoff"] = sc.kernel.uv_cutoff;
    j["rel_tol"] = sc.quadrature.rel_tol;
    j["time_refine"] = sc.quadrature.time_refine;
    j["seed"] = sc.seed;
    j["distance"] = r.distance;
    j["t_a"] = r.t_a;
    j["t_b"] = r.t_b;
    j["spacelike"] = r.spacelike;
    j["k_cut"] = r.report.k_cut;
    j["converged"] = r.report.converged;
    return j;
}

/** Verdict block; every boolean is read from the same RunResult fields the CSV writes. */
inline void print_verdict(std::ostream& os, const RunResult& r) {
    const auto& f = r.report.values;
    os << "scenario " << r.id << " (" << to_string(r.field) << ", D = " << fmt17(r.distance)
       << ", spacelike = " << yes_no(r.spacelike) << ")\n";
    os << "  gamma_a = " << fmt17(f.gamma_a) << "\n  gamma_b = " << fmt17(f.gamma_b)
       << "\n  gamma_c = " << fmt17(f.gamma_c) << "\n  phi_ab  = " << fmt17(f.phi_ab)
       << "\n  phi_ba  = " << fmt17(f.phi_ba) << "\n  lambda_min = " << fmt17(r.diag.lambda_min) << "\n";
    os << "verdict:\n";
    os << "  causal: " << yes_no(r.causal) << "\n";
    os << "  sr_holds: " << yes_no(r.diag.sr_holds) << "\n";
    os << "  entangled: " << yes_no(r.diag.entangled) << "\n";
    os << "  complementarity_holds: " << yes_no(r.diag.complementarity_holds) << "\n";
    if (!r.report.converged) os << "  warning: quadrature did not reach the requested tolerance\n";
}

inline std::ofstream open_output(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    return os;
}

/** Runs a scenario file, writes `<out>/<id>_run.csv` and `<id>_run.json`, prints the verdict. */
inline int run_command(const std::string& config, const std::filesystem::path& out, int workers, std::ostream& log) {
    const Scenario sc = load_scenario(config);
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult r = run_scenario(sc, workers);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    {
        auto os = open_output(out / (r.id + "_run.csv"));
        write_run_csv(os, r);
    }
    {
        auto os = open_output(out / (r.id + "_run.json"));
        os << run_metadata(sc, r).dump(2) << '\n';
    }
    print_verdict(log, r);
    log << "  runtime_s: " << secs << "\n";
    return r.counterexample() ? kExitCounterexample : kExitOk;
}

/** The three fixed-half slices: free coordinates (u, v) placed into (x, y, z). */
inline std::array<double, 3> slice_point(int slice, double u, double v) {
    switch (slice) {
        case 0: return {u, v, 0.5};
        case 1: return {u, 0.5, v};
        default: return {0.5, u, v};
    }
}

inline const char* slice_name(int slice) {
    static const char* names[] = {"xy_z=0.5", "xz_y=0.5", "yz_x=0.5"};
    return names[slice];
}

/** @brief Options of `scan F|G|chain`. */
struct ScanOptions {
    std::string which = "F";
    int grid = 100;
    double margin = 1e-3;
    std::size_t samples = 1000000;
    std::uint64_t seed = 42;
    int workers = default_workers();
};

inline ScanFunction parse_scan_function(const std::string& s) {
    if (s == "F") return ScanFunction::F;
    if (s == "G") return ScanFunction::G;
    throw Error("unknown scan function '" + s + "' (expected F, G or chain)");
}

inline int scan_command(const ScanOptions& o, const std::filesystem::path& out, std::ostream& log) {
    if (o.which == "chain") {
        ChainSampler smp;
        smp.seed = o.seed;
        const auto r = verify_inclusion_chain(o.samples, smp, o.workers);
        auto os = open_output(out / "scan_chain.csv");
        os << "quantity,count\n";
        os << "samples," << r.samples << "\nsr_holds," << r.sr << "\nnonentangled," << r.nonentangled
           << "\ncomplementarity_holds," << r.comp << "\ncounterexamples_sr_to_nonentangled," << r.counterexamples_c1
           << "\ncounterexamples_nonentangled_to_complementarity," << r.counterexamples_c2
           << "\nwitnesses_nonentangled_not_sr," << r.witnesses_c1 << "\nwitnesses_complementarity_entangled,"
           << r.witnesses_c2 << "\ncleared_by_extended_precision," << r.cleared << "\n";
        nlohmann::ordered_json js;
        js["scan"] = "chain";
        js["seed"] = o.seed;
        js["samples"] = r.samples;
        js["region_counts"] = {{"sr_holds", r.sr}, {"nonentangled", r.nonentangled}, {"complementarity_holds", r.comp}};
        js["counterexamples"] = {{"sr_to_nonentangled", r.counterexamples_c1},
                                 {"nonentangled_to_complementarity", r.counterexamples_c2}};
        js["witnesses"] = {{"nonentangled_not_sr", r.witnesses_c1}, {"complementarity_entangled", r.witnesses_c2}};
        js["cleared_by_extended_precision"] = r.cleared;
        open_output(out / "scan_chain.json") << js.dump(2) << "\n";
        log << "chain scan: samples = " << r.samples << ", counterexamples = "
            << r.counterexamples_c1 + r.counterexamples_c2 << ", region counts sr/nonentangled/comp = " << r.sr
            << "/" << r.nonentangled << "/" << r.comp << ", strict witnesses = " << r.witnesses_c1 << "/"
            << r.witnesses_c2 << "\n";
        return r.counterexamples_c1 + r.counterexamples_c2 ? kExitCounterexample : kExitOk;
    }
    const ScanFunction fn = parse_scan_function(o.which);
    const auto rep = scan_nonnegativity(fn, o.grid, o.margin, o.workers);
    auto os = open_output(out / ("scan_" + o.which + ".csv"));
    os << "slice,min_value,argmin_x,argmin_y,argmin_z\n";
    nlohmann::ordered_json js;
    js["scan"] = o.which;
    js["grid"] = o.grid;
    js["margin"] = o.margin;
    js["evaluations"] = rep.evaluations;
    js["negatives"] = rep.negatives;
    js["raw_negatives"] = rep.raw_negatives;
    js["min_value"] = rep.min_value;
    js["argmin"] = rep.argmin;
    for (int s = 0; s < 3; ++s) {
        double best = std::numeric_limits<double>::infinity();
        std::array<double, 3> arg{};
        for (int i = 0; i < o.grid; ++i)
            for (int j = 0; j < o.grid; ++j) {
                const auto p = slice_point(s, grid_coordinate(i, o.grid, o.margin), grid_coordinate(j, o.grid, o.margin));
                const double v = evaluate(fn, p[0], p[1], p[2]);
                if (v < best) {
                    best = v;
                    arg = p;
                }
            }
        os << slice_name(s) << ',' << fmt17(best) << ',' << fmt17(arg[0]) << ',' << fmt17(arg[1]) << ','
           << fmt17(arg[2]) << '\n';
        js["slices"][slice_name(s)] = {{"min_value", best}, {"argmin", arg}};
    }
    open_output(out / ("scan_" + o.which + ".json")) << js.dump(2) << "\n";
    os << "cube," << fmt17(rep.min_value) << ',' << fmt17(rep.argmin[0]) << ',' << fmt17(rep.argmin[1]) << ','
       << fmt17(rep.argmin[2]) << '\n';
    log << "scan " << o.which << ": " << rep.evaluations << " points, min = " << fmt17(rep.min_value) << " at ("
        << rep.argmin[0] << ", " << rep.argmin[1] << ", " << rep.argmin[2] << "), negatives = " << rep.negatives
        << " (raw " << rep.raw_negatives << ")\n";
    return rep.negatives ? kExitCounterexample : kExitOk;
}

/** @brief Options of `figure fig3|fig4|fig5`. */
struct FigureOptions {
    std::string which = "fig4";
    int grid = 50;
    double margin = 1e-3;
    std::size_t samples = 10000;
    std::uint64_t seed = 42;
    std::string x_coord = "gamma_c";
    std::string y_coord = "phi_ba";
};

/** Projection coordinates available for fig3. */
inline double region_coordinate(const std::string& name, const RegionSample& s) {
    if (name == "gamma_a") return s.gamma_a;
    if (name == "gamma_b") return s.gamma_b;
    if (name == "gamma_c") return s.gamma_c;
    if (name == "phi_ba") return s.phi_ba;
    if (name == "product") return s.gamma_a * s.gamma_b;
    if (name == "sr_ratio") return (s.gamma_c * s.gamma_c / 4 + s.phi_ba * s.phi_ba / 16) / (s.gamma_a * s.gamma_b);
    throw Error("unknown fig3 coordinate '" + name + "' (gamma_a, gamma_b, gamma_c, phi_ba, product, sr_ratio)");
}

/** Region name: the innermost set the sample belongs to. */
inline const char* region_name(const RegionSample& s) {
    if (s.sr_holds) return "sr";
    if (s.nonentangled) return "nonentangled";
    if (s.comp_holds) return "complementarity";
    return "outside";
}

inline int figure_command(const FigureOptions& o, const std::filesystem::path& out, std::ostream& log) {
    auto os = open_output(out / (o.which + ".csv"));
    if (o.which == "fig3") {
        ChainSampler smp;
        smp.seed = o.seed;
        std::size_t bad = 0;
        os << "index,gamma_a,gamma_b,gamma_c,phi_ba," << o.x_coord << ',' << o.y_coord
           << ",sr_holds,nonentangled,complementarity_holds,region\n";
        for (std::size_t i = 0; i < o.samples; ++i) {
            const auto t = chain_tuple(smp, i);
            const auto s = classify_region(t[0], t[1], t[2], t[3]);
            bad += (s.sr_holds && !s.nonentangled) || (s.nonentangled && !s.comp_holds);
            os << i << ',' << fmt17(s.gamma_a) << ',' << fmt17(s.gamma_b) << ',' << fmt17(s.gamma_c) << ','
               << fmt17(s.phi_ba) << ',' << fmt17(region_coordinate(o.x_coord, s)) << ','
               << fmt17(region_coordinate(o.y_coord, s)) << ',' << int(s.sr_holds) << ',' << int(s.nonentangled)
               << ',' << int(s.comp_holds) << ',' << region_name(s) << '\n';
        }
        log << "fig3: " << o.samples << " samples, nesting violations = " << bad << "\n";
        return bad ? kExitCounterexample : kExitOk;
    }
    if (o.which != "fig4" && o.which != "fig5") throw Error("unknown figure '" + o.which + "' (fig3, fig4, fig5)");
    const bool f4 = o.which == "fig4";
    const ScanFunction fn = f4 ? ScanFunction::F : ScanFunction::G;
    os << "slice,x,y,z," << (f4 ? "F,log_F" : "G") << '\n';
    std::size_t bad = 0;
    for (int s = 0; s < 3; ++s)
        for (int i = 0; i < o.grid; ++i)
            for (int j = 0; j < o.grid; ++j) {
                const auto p = slice_point(s, grid_coordinate(i, o.grid, o.margin), grid_coordinate(j, o.grid, o.margin));
                const double v = evaluate(fn, p[0], p[1], p[2]);
                os << slice_name(s) << ',' << fmt17(p[0]) << ',' << fmt17(p[1]) << ',' << fmt17(p[2]) << ','
                   << fmt17(v);
                if (f4) {
                    os << ',' << fmt17(v > 0 ? std::log(v) : std::nan(""));
                    bad += !(v > 0);
                } else {
                    bad += !(v >= 0);
                }
                os << '\n';
            }
    log << o.which << ": " << 3 * o.grid * o.grid << " points, " << (f4 ? "non-positive F" : "negative G") << " = "
        << bad << "\n";
    return bad ? kExitCounterexample : kExitOk;
}

}  // namespace infl

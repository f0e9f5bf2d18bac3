#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "functionals.hpp"
#include "kernels.hpp"
#include "sources.hpp"

namespace infl {

/** @brief Configuration error carrying a file:line:column prefix. */
class ConfigError : public Error {
public:
    using Error::Error;
};

/** Explicitly sampled branch pair, replacing the split-path generator. */
struct SampledBranches {
    std::vector<double> t;
    std::vector<Vec3> xr, vr, xl, vl;
};

/** @brief One particle block of a scenario. */
struct ParticleConfig {
    SplitPathParams path;
    std::optional<SampledBranches> sampled;
};

/** @brief Parsed scenario file. */
struct Scenario {
    int schema_version = 1;
    std::string id = "scenario";
    FieldType field = FieldType::EM;
    ParticleConfig a, b;
    KernelSpec kernel;
    QuadratureOptions quadrature;
    std::uint64_t seed = 42;
    /** Causality threshold on |phi_ab| relative to max(|phi_ba|, gamma_a, gamma_b). */
    double causal_tolerance = 1e-6;

    BranchedSource source(Label l) const {
        const ParticleConfig& p = l == Label::A ? a : b;
        if (p.sampled) {
            const auto& s = *p.sampled;
            const double sig = p.path.sigma.value_or(p.path.separation / 20.0);
            return BranchedSource(Worldline(s.t, s.xr, s.vr, p.path.coupling, sig),
                                  Worldline(s.t, s.xl, s.vl, p.path.coupling, sig), field, l);
        }
        SplitPathParams q = p.path;
        q.field = field;
        q.label = l;
        return make_split_path(q);
    }

    /** Distance between the two split points. */
    double separation_distance() const { return norm(source(Label::A).center() - source(Label::B).center()); }

    /** D > T_A and D > T_B. */
    bool spacelike_windows() const {
        const auto sa = source(Label::A), sb = source(Label::B);
        const double d = norm(sa.center() - sb.center());
        return d > sa.t_end() - sa.t_begin() && d > sb.t_end() - sb.t_begin();
    }
};

namespace detail {

inline std::string where(const std::string& file, const YAML::Node& n) {
    std::ostringstream os;
    const auto m = n.Mark();
    os << file << ":" << (m.line + 1) << ":" << (m.column + 1) << ": ";
    return os.str();
}

class Reader {
public:
    explicit Reader(std::string file) : file_(std::move(file)) {}

    [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const { throw ConfigError(where(file_, n) + msg); }

    void check_keys(const YAML::Node& n, const std::set<std::string>& allowed) const {
        if (!n.IsMap()) fail(n, "expected a mapping");
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "'");
        }
    }

    double number(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a number");
        try {
            return n.as<double>();
        } catch (const YAML::Exception&) {
            fail(n, what + " must be a number");
        }
    }

    std::int64_t integer(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be an integer");
        try {
            return n.as<std::int64_t>();
        } catch (const YAML::Exception&) {
            fail(n, what + " must be an integer");
        }
    }

    std::string text(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a string");
        return n.as<std::string>();
    }

    Vec3 vec3(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence() || n.size() != 3) fail(n, what + " must be a list of three numbers");
        return {number(n[0], what), number(n[1], what), number(n[2], what)};
    }

    std::vector<double> numbers(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence()) fail(n, what + " must be a list of numbers");
        std::vector<double> v;
        for (const auto& e : n) v.push_back(number(e, what));
        return v;
    }

    std::vector<Vec3> vectors(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence()) fail(n, what + " must be a list of 3-vectors");
        std::vector<Vec3> v;
        for (const auto& e : n) v.push_back(vec3(e, what));
        return v;
    }

    ParticleConfig particle(const YAML::Node& n, const std::string& name) const {
        check_keys(n, {"t_start", "t_total", "separation", "hold_fraction", "center", "axis", "coupling", "sigma",
                       "intervals", "sampled"});
        ParticleConfig p;
        auto& q = p.path;
        if (n["t_start"]) q.t_start = number(n["t_start"], name + ".t_start");
        if (n["t_total"]) q.t_total = number(n["t_total"], name + ".t_total");
        if (n["separation"]) q.separation = number(n["separation"], name + ".separation");
        if (n["hold_fraction"]) q.hold_fraction = number(n["hold_fraction"], name + ".hold_fraction");
        if (n["center"]) q.center = vec3(n["center"], name + ".center");
        if (n["axis"]) q.axis = vec3(n["axis"], name + ".axis");
        if (n["coupling"]) q.coupling = number(n["coupling"], name + ".coupling");
        if (n["sigma"]) q.sigma = number(n["sigma"], name + ".sigma");
        if (n["intervals"]) q.intervals = static_cast<int>(integer(n["intervals"], name + ".intervals"));
        if (!(q.t_total > 0) && n["t_total"]) fail(n["t_total"], name + ".t_total must be positive");
        if (!(q.hold_fraction > 0 && q.hold_fraction < 1) && n["hold_fraction"])
            fail(n["hold_fraction"], name + ".hold_fraction must lie in (0, 1)");
        if (q.separation < 0 && n["separation"]) fail(n["separation"], name + ".separation must be >= 0");
        if (q.sigma && !(*q.sigma > 0)) fail(n["sigma"], name + ".sigma must be positive");
        if (q.intervals < 4 && n["intervals"]) fail(n["intervals"], name + ".intervals must be at least 4");
        if (const auto s = n["sampled"]) {
            check_keys(s, {"t", "right_x", "right_v", "left_x", "left_v"});
            for (const char* k : {"t", "right_x", "right_v", "left_x", "left_v"})
                if (!s[k]) fail(s, name + ".sampled needs key '" + k + "'");
            SampledBranches b;
            b.t = numbers(s["t"], name + ".sampled.t");
            b.xr = vectors(s["right_x"], name + ".sampled.right_x");
            b.vr = vectors(s["right_v"], name + ".sampled.right_v");
            b.xl = vectors(s["left_x"], name + ".sampled.left_x");
            b.vl = vectors(s["left_v"], name + ".sampled.left_v");
            p.sampled = std::move(b);
        }
        return p;
    }

private:
    std::string file_;
};

}  // namespace detail

/** Parses scenario text; `file` only labels error messages. */
inline Scenario parse_scenario(const std::string& text, const std::string& file = "<config>") {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << file << ":" << (e.mark.line + 1) << ":" << (e.mark.column + 1) << ": " << e.msg;
        throw ConfigError(os.str());
    }
    detail::Reader r(file);
    if (!root.IsMap()) throw ConfigError(file + ":1:1: scenario must be a mapping");
    r.check_keys(root, {"schema_version", "scenario_id", "field_type", "seed", "causal_tolerance", "kernel",
                        "quadrature", "particle_a", "particle_b"});
    Scenario s;
    if (!root["schema_version"]) r.fail(root, "missing key 'schema_version'");
    s.schema_version = static_cast<int>(r.integer(root["schema_version"], "schema_version"));
    if (s.schema_version != 1) r.fail(root["schema_version"], "unsupported schema_version (expected 1)");
    if (root["scenario_id"]) s.id = r.text(root["scenario_id"], "scenario_id");
    if (!root["field_type"]) r.fail(root, "missing key 'field_type'");
    const std::string ft = r.text(root["field_type"], "field_type");
    if (ft == "EM")
        s.field = FieldType::EM;
    else if (ft == "GR")
        s.field = FieldType::GR;
    else
        r.fail(root["field_type"], "field_type must be EM or GR");
    if (root["seed"]) s.seed = static_cast<std::uint64_t>(r.integer(root["seed"], "seed"));
    if (root["causal_tolerance"]) s.causal_tolerance = r.number(root["causal_tolerance"], "causal_tolerance");
    s.kernel.field = s.field;
    if (const auto k = root["kernel"]) {
        r.check_keys(k, {"gravitational_constant", "smearing_width", "uv_cutoff", "stress_projection"});
        if (k["gravitational_constant"])
            s.kernel.gravitational_constant = r.number(k["gravitational_constant"], "kernel.gravitational_constant");
        if (k["smearing_width"]) s.kernel.smearing_width = r.number(k["smearing_width"], "kernel.smearing_width");
        if (k["uv_cutoff"]) s.kernel.uv_cutoff = r.number(k["uv_cutoff"], "kernel.uv_cutoff");
        if (k["stress_projection"]) {
            const auto p = r.text(k["stress_projection"], "kernel.stress_projection");
            if (p == "newtonian")
                s.kernel.projection = StressProjection::Newtonian;
            else if (p == "full")
                s.kernel.projection = StressProjection::Full;
            else
                r.fail(k["stress_projection"], "stress_projection must be newtonian or full");
        }
        if (!(s.kernel.gravitational_constant > 0) && k["gravitational_constant"])
            r.fail(k["gravitational_constant"], "gravitational_constant must be positive");
        if (!(s.kernel.uv_cutoff > 0) && k["uv_cutoff"]) r.fail(k["uv_cutoff"], "uv_cutoff must be positive");
        if (!(s.kernel.smearing_width >= 0) && k["smearing_width"])
            r.fail(k["smearing_width"], "smearing_width must be >= 0");
    }
    if (const auto q = root["quadrature"]) {
        r.check_keys(q, {"rel_tol", "time_refine", "max_panels", "cone_nodes", "cone_width", "direct_angular"});
        auto& o = s.quadrature;
        if (q["rel_tol"]) o.rel_tol = r.number(q["rel_tol"], "quadrature.rel_tol");
        if (q["time_refine"]) o.time_refine = r.number(q["time_refine"], "quadrature.time_refine");
        if (q["max_panels"]) o.max_panels = static_cast<int>(r.integer(q["max_panels"], "quadrature.max_panels"));
        if (q["cone_nodes"]) o.cone_nodes = static_cast<int>(r.integer(q["cone_nodes"], "quadrature.cone_nodes"));
        if (q["cone_width"]) o.cone_width = r.number(q["cone_width"], "quadrature.cone_width");
        if (q["direct_angular"]) {
            try {
                o.direct_angular = q["direct_angular"].as<bool>();
            } catch (const YAML::Exception&) {
                r.fail(q["direct_angular"], "quadrature.direct_angular must be true or false");
            }
        }
        if (!(o.rel_tol > 0 && o.rel_tol < 1) && q["rel_tol"]) r.fail(q["rel_tol"], "rel_tol must lie in (0, 1)");
        if (!(o.time_refine > 0) && q["time_refine"]) r.fail(q["time_refine"], "time_refine must be positive");
    }
    if (!root["particle_a"]) r.fail(root, "missing key 'particle_a'");
    if (!root["particle_b"]) r.fail(root, "missing key 'particle_b'");
    s.a = r.particle(root["particle_a"], "particle_a");
    s.b = r.particle(root["particle_b"], "particle_b");
    for (const char* key : {"particle_a", "particle_b"}) {
        try {
            (void)s.source(std::string(key) == "particle_a" ? Label::A : Label::B);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            r.fail(root[key], std::string(key) + ": " + e.what());
        }
    }
    try {
        s.kernel.validate();
    } catch (const Error& e) {
        r.fail(root["kernel"] ? root["kernel"] : root, e.what());
    }
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open scenario file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

}  // namespace infl

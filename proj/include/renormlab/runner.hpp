#pragma once

#include "renormlab/experiments.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>

namespace renormlab {

namespace detail {

inline std::vector<ParamSpec> map_params() { return {family_param(), b_param(), cf_param()}; }

inline std::vector<ParamSpec> pair_params() {
    auto p = map_params();
    p.push_back({"g_family", ParamKind::String, "PerturbedArnold", "family of the second map"});
    p.push_back({"g_b", ParamKind::Number, 0.03, "b of the second map"});
    return p;
}

inline std::vector<ParamSpec> holo_params(int level) {
    auto p = map_params();
    p.push_back({"level", ParamKind::Int, level, "renormalization level of the pair"});
    p.push_back({"lambda", ParamKind::Number, kDefaultLambda, "radius of V in units of |J|"});
    return p;
}

inline std::vector<ParamSpec> cloud_params(int level) {
    auto p = holo_params(level);
    p.push_back({"depth", ParamKind::Int, 10, "inverse-branch generations"});
    p.push_back({"per_arc", ParamKind::Int, 20, "points per half of J at depth 0"});
    p.push_back({"cap", ParamKind::Int, 4000, "points kept per generation (upper half plane)"});
    return p;
}

template <typename... Extra>
std::vector<ParamSpec> with(std::vector<ParamSpec> base, Extra&&... extra) {
    (base.push_back(std::forward<Extra>(extra)), ...);
    return base;
}

inline const json kEpsGrid = json::array({1e-4, 1e-3, 1e-2});

} // namespace detail

/// The fourteen experiments, each with the statement it probes.
inline const std::vector<ExperimentInfo>& registry() {
    using detail::with;
    using K = ParamKind;
    static const std::vector<ExperimentInfo> reg = {
        {"tune",
         "A critical map with a prescribed irrational rotation number exists in each monotone family; its critical "
         "orbit is ordered on the circle exactly like an orbit of the rigid rotation.",
         with(detail::map_params(), ParamSpec{"depth", K::Int, 12, "number of partial quotients to match"},
              ParamSpec{"tol", K::Number, 1e-14, "bisection tolerance"}),
         experiments::tune},
        {"partition",
         "Closest returns of the critical orbit nest combinatorially: each return interval sits inside the previous "
         "one the expected number of times, and the pullbacks of the fundamental interval are pairwise disjoint.",
         with(detail::map_params(), ParamSpec{"levels", K::IntList, json::array({4, 12}), "[lo, hi]"}),
         experiments::partition},
        {"realbounds",
         "Neighbouring atoms of the dynamical partition have comparable lengths, with a bound that does not grow "
         "with the level.",
         with(detail::map_params(), ParamSpec{"levels", K::IntList, json::array({4, 14}), "[lo, hi]"},
              ParamSpec{"split", K::Int, 8, "level separating early from late"},
              ParamSpec{"ratio_bound", K::Number, 50.0, "largest admissible adjacent ratio"},
              ParamSpec{"growth_bound", K::Number, 1.25, "late max / early max"}),
         experiments::realbounds},
        {"converge",
         "Renormalizations of two critical maps with equal irrational rotation number approach each other at a "
         "geometric rate.",
         with(detail::pair_params(), ParamSpec{"levels", K::IntList, json::array({3, 12}), "[lo, hi]"},
              ParamSpec{"grid", K::Int, 256, "sup-norm grid points"},
              ParamSpec{"min_r2", K::Number, 0.9, "required fit quality"}),
         experiments::converge},
        {"yoccoz",
         "During a long passage through a near-parabolic gate, lengths of consecutive fundamental intervals fall "
         "off like the inverse square of the distance to the nearer end of the passage.",
         {{"eps", K::NumberList, detail::kEpsGrid, "gate openings"},
          {"c_max", K::Number, 50.0, "largest admissible constant"},
          {"spread", K::Number, 3.0, "largest admissible ratio of constants"}},
         experiments::yoccoz},
        {"parabolic-fixed",
         "A near-parabolic map has two complex conjugate fixed points at height comparable to the reciprocal of the "
         "passage length.",
         {{"eps", K::NumberList, detail::kEpsGrid, "gate openings"}},
         experiments::parabolic_fixed},
        {"cubic-growth",
         "Away from the origin, high renormalizations grow at least like a fixed multiple of the cube of the "
         "distance.",
         with(detail::map_params(), ParamSpec{"levels", K::IntList, json::array({6, 8, 10}), "levels"},
              ParamSpec{"B", K::Number, 2.0, "inner radius"}, ParamSpec{"R", K::Number, 10.0, "image bound"},
              ParamSpec{"samples", K::Int, 400, "samples per level"}),
         experiments::cubic_growth},
        {"prop33",
         "Pulling a point back along the orbit by univalent inverse branches increases its normalized distance to "
         "the real interval at most affinely.",
         with(detail::map_params(), ParamSpec{"levels", K::IntList, json::array({10, 12}), "levels to compare"},
              ParamSpec{"N", K::Int, 3, "depth of the sampling disk below the level"},
              ParamSpec{"samples", K::Int, 400, "samples per level"}),
         experiments::prop33},
        {"poincare",
         "A map close to the identity on a short real interval nearly preserves the regions of constant visual "
         "angle over it; the angle lost shrinks faster than the interval.",
         with(detail::map_params(), ParamSpec{"level", K::Int, 8, "J is the first image of I at this level"},
              ParamSpec{"theta", K::Number, kPi / 3, "visual angle"},
              ParamSpec{"samples", K::Int, 200, "boundary samples"}),
         experiments::poincare},
        {"holopair-control",
         "Deep renormalizations extend to holomorphic pairs whose shape is controlled by one constant for all "
         "levels.",
         with(detail::map_params(), ParamSpec{"levels", K::IntList, json::array({8, 10}), "levels"},
              ParamSpec{"lambda", K::Number, kDefaultLambda, "radius of V in units of |J|"},
              ParamSpec{"k_spread", K::Number, 2.0, "largest admissible ratio of K estimates"}),
         experiments::holopair_control},
        {"limitset",
         "The limit set of the holomorphic pair is the closure of the backward orbits of the real interval.",
         detail::cloud_params(8), experiments::limitset},
        {"deep-point",
         "The critical point is a deep point of the limit set: the largest hole within distance r of it is small "
         "compared with r, shrinking like a power of r above one.",
         with(detail::cloud_params(8), ParamSpec{"r_lo", K::Number, 0.02, "smallest probe radius"},
              ParamSpec{"r_hi", K::Number, 0.6, "largest probe radius"},
              ParamSpec{"grid", K::Int, 64, "probe lattice size"}),
         experiments::deep_point},
        {"expansion",
         "Off the real line, the holomorphic pair expands the metric |dz| / |Im z|.",
         with(detail::holo_params(8), ParamSpec{"min_im", K::Number, 0.1, "smallest |Im z| in units of |J|"},
              ParamSpec{"samples", K::Int, 1000, "single-step samples"},
              ParamSpec{"starts", K::Int, 20, "matched starts"}, ParamSpec{"steps", K::Int, 20, "forward steps"}),
         experiments::expansion},
        {"rigidity",
         "Two maps with the same bounded-type rotation number are conjugate by a map with Holder derivative; "
         "ratios of corresponding return intervals converge geometrically.",
         with(detail::pair_params(), ParamSpec{"levels", K::IntList, json::array({4, 12}), "[lo, hi]"},
              ParamSpec{"qs_level", K::Int, 12, "orbit level for the conjugacy"},
              ParamSpec{"scales", K::Int, 6, "dyadic scales"},
              ParamSpec{"min_r2", K::Number, 0.8, "required fit quality"}),
         experiments::rigidity},
    };
    return reg;
}

inline const ExperimentInfo* find_experiment(const std::string& name) {
    for (const auto& e : registry()) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

/// A config after validation: every parameter present, defaults filled in.
struct ValidConfig {
    const ExperimentInfo* info = nullptr;
    json params = json::object();
    std::uint64_t seed = 0;
    std::string output;

    [[nodiscard]] json echo() const {
        return {{"experiment", info->name}, {"params", params}, {"seed", seed}, {"output", output}};
    }
};

inline ValidConfig validate_config(const json& cfg) {
    std::vector<std::string> bad;
    if (!cfg.is_object()) throw ConfigError({"config must be a JSON object"});
    static const std::set<std::string> top = {"experiment", "params", "seed", "output"};
    for (const auto& [k, v] : cfg.items()) {
        if (!top.count(k)) bad.push_back("unknown key '" + k + "'");
    }
    ValidConfig vc;
    if (!cfg.contains("experiment")) {
        bad.push_back("missing key 'experiment'");
    } else if (!cfg["experiment"].is_string()) {
        bad.push_back("'experiment' must be a string");
    } else if (!(vc.info = find_experiment(cfg["experiment"].get<std::string>()))) {
        bad.push_back("unknown experiment '" + cfg["experiment"].get<std::string>() + "'");
    }
    if (cfg.contains("seed")) {
        if (cfg["seed"].is_number_unsigned() || (cfg["seed"].is_number_integer() && cfg["seed"].get<long long>() >= 0)) {
            vc.seed = cfg["seed"].get<std::uint64_t>();
        } else {
            bad.push_back("'seed' must be a non-negative integer");
        }
    }
    if (cfg.contains("output")) {
        if (cfg["output"].is_string() && !cfg["output"].get<std::string>().empty()) {
            vc.output = cfg["output"].get<std::string>();
        } else {
            bad.push_back("'output' must be a non-empty string");
        }
    } else if (vc.info) {
        vc.output = vc.info->name;
    }
    const json given = cfg.contains("params") ? cfg["params"] : json::object();
    if (!given.is_object()) bad.push_back("'params' must be an object");
    if (vc.info && given.is_object()) {
        for (const auto& [k, v] : given.items()) {
            const bool known = std::any_of(vc.info->params.begin(), vc.info->params.end(),
                                           [&](const ParamSpec& p) { return p.name == k; });
            if (!known) bad.push_back("unknown parameter '" + k + "' for " + vc.info->name);
        }
        for (const auto& p : vc.info->params) {
            if (given.contains(p.name)) {
                if (!matches(given[p.name], p.kind)) {
                    bad.push_back("parameter '" + p.name + "' must be a " + to_string(p.kind));
                } else {
                    vc.params[p.name] = given[p.name];
                }
            } else if (p.fallback.is_null()) {
                bad.push_back("missing parameter '" + p.name + "'");
            } else {
                vc.params[p.name] = p.fallback;
            }
        }
    }
    if (!bad.empty()) throw ConfigError(std::move(bad));
    return vc;
}

struct RunOptions {
    std::filesystem::path output_dir = ".";
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

struct RunResult {
    json record;
    std::vector<std::filesystem::path> files;
    /// 0 all verdicts pass, 1 some verdict fails, 3 runtime error.
    int exit_code = 0;
};

namespace detail {

inline std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const InsufficientDataError*>(&e)) return "insufficient_data";
    if (dynamic_cast<const CertificationError*>(&e)) return "certification";
    if (dynamic_cast<const PrecisionError*>(&e)) return "precision";
    if (dynamic_cast<const DomainError*>(&e)) return "domain";
    if (dynamic_cast<const Error*>(&e)) return "error";
    return "internal";
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

} // namespace detail

/// Validates (ConfigError escapes), runs, writes <output>_<suffix>.csv for
/// each table and <output>.json for the record. Data files depend only on the
/// config; wall time and job count go to the record alone.
inline RunResult run(const json& cfg, const RunOptions& opt = {}) {
    ValidConfig vc = validate_config(cfg);
    if (opt.seed) vc.seed = *opt.seed;
    std::filesystem::create_directories(opt.output_dir);

    std::string stage = "start";
    RunContext ctx{vc.params, vc.seed, std::max(1, opt.jobs), &stage};
    RunResult rr;
    json& rec = rr.record;
    rec["schema_version"] = kSchemaVersion;
    rec["artifact_version"] = kArtifactVersion;
    rec["experiment"] = vc.info->name;
    rec["anchor"] = vc.info->anchor;
    rec["config"] = vc.echo();

    const auto t0 = std::chrono::steady_clock::now();
    try {
        ExperimentOutput out = vc.info->run(ctx);
        stage = "write_outputs";
        json files = json::array();
        for (const auto& [suffix, table] : out.tables) {
            const auto path = opt.output_dir / (vc.output + "_" + suffix + ".csv");
            detail::write_file(path, table.str());
            rr.files.push_back(path);
            files.push_back(path.filename().string());
        }
        json verdicts = json::array();
        for (const auto& v : out.verdicts) {
            verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"value", v.value}, {"threshold", v.threshold}});
        }
        rec["status"] = out.all_pass() ? "pass" : "fail";
        rec["results"] = out.results;
        rec["verdicts"] = verdicts;
        rec["files"] = files;
        rr.exit_code = out.all_pass() ? 0 : 1;
    } catch (const std::exception& e) {
        rec["status"] = "error";
        rec["error"] = {{"stage", stage}, {"kind", detail::error_kind(e)}, {"message", e.what()}};
        rr.exit_code = 3;
    }
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - t0;
    rec["runtime"] = {{"wall_time_s", wall.count()}, {"jobs", ctx.jobs}};
    const auto path = opt.output_dir / (vc.output + ".json");
    detail::write_file(path, rec.dump(2) + "\n");
    rr.files.push_back(path);
    return rr;
}

} // namespace renormlab

#pragma once

#include "renormlab/holopair.hpp"
#include "renormlab/parabolic.hpp"
#include "renormlab/rigidity.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <locale>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace renormlab {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "1.0.0";

/// Every problem found while validating a config, one per entry.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}
    [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string s = "invalid config:";
        for (const auto& x : p) s += "\n  " + x;
        return s;
    }
    std::vector<std::string> problems_;
};

// ---- CSV ----------------------------------------------------------------

/// RFC 4180 table: CRLF line ends, fields quoted when they contain a comma,
/// quote or line break. Doubles are written with 17 significant digits so
/// that values round-trip.
class CsvTable {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<Cell> row) {
        if (row.size() != header_.size()) throw DomainError("CsvTable: row width does not match header");
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] std::size_t rows() const { return rows_.size(); }

    [[nodiscard]] std::string str() const {
        std::ostringstream out;
        write_row(out, std::vector<Cell>(header_.begin(), header_.end()));
        for (const auto& r : rows_) write_row(out, r);
        return out.str();
    }

private:
    static std::string field(const Cell& c) {
        if (const auto* d = std::get_if<double>(&c)) {
            if (std::isnan(*d)) return "nan";
            if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
            std::ostringstream s;
            s.imbue(std::locale::classic());
            s << std::setprecision(17) << *d;
            return s.str();
        }
        if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
        const std::string& s = std::get<std::string>(c);
        if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
        std::string q = "\"";
        for (const char ch : s) {
            if (ch == '"') q += '"';
            q += ch;
        }
        return q + "\"";
    }

    static void write_row(std::ostream& out, const std::vector<Cell>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << field(row[i]);
        }
        out << "\r\n";
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

// ---- parameters -----------------------------------------------------------

enum class ParamKind { Int, Number, String, IntList, NumberList };

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::Number;
    /// Null means required.
    json fallback;
    std::string help;
};

inline std::string to_string(ParamKind k) {
    switch (k) {
    case ParamKind::Int: return "integer";
    case ParamKind::Number: return "number";
    case ParamKind::String: return "string";
    case ParamKind::IntList: return "list of integers";
    case ParamKind::NumberList: return "list of numbers";
    }
    return "?";
}

inline bool matches(const json& v, ParamKind k) {
    auto all = [&](auto pred) {
        if (!v.is_array() || v.empty()) return false;
        for (const auto& e : v) {
            if (!pred(e)) return false;
        }
        return true;
    };
    switch (k) {
    case ParamKind::Int: return v.is_number_integer();
    case ParamKind::Number: return v.is_number();
    case ParamKind::String: return v.is_string();
    case ParamKind::IntList: return all([](const json& e) { return e.is_number_integer(); });
    case ParamKind::NumberList: return all([](const json& e) { return e.is_number(); });
    }
    return false;
}

struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string threshold;
};

struct ExperimentOutput {
    json results = json::object();
    std::vector<Verdict> verdicts;
    /// File suffix (e.g. "levels") and table; written as <prefix>_<suffix>.csv.
    std::vector<std::pair<std::string, CsvTable>> tables;

    [[nodiscard]] bool all_pass() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
    }
    void verdict(std::string name, bool pass, double value, std::string threshold) {
        verdicts.push_back({std::move(name), pass, value, std::move(threshold)});
    }
};

/// Validated parameters (defaults filled in) plus run-wide settings.
struct RunContext {
    json params;
    std::uint64_t seed = 0;
    int jobs = 1;
    /// Where the runner keeps the name of the step in progress.
    std::string* stage_name = nullptr;

    void stage(std::string name) const {
        if (stage_name) *stage_name = std::move(name);
    }

    [[nodiscard]] int i(const std::string& k) const { return params.at(k).get<int>(); }
    [[nodiscard]] double d(const std::string& k) const { return params.at(k).get<double>(); }
    [[nodiscard]] std::string s(const std::string& k) const { return params.at(k).get<std::string>(); }
    [[nodiscard]] std::vector<int> ints(const std::string& k) const { return params.at(k).get<std::vector<int>>(); }
    [[nodiscard]] std::vector<double> numbers(const std::string& k) const {
        return params.at(k).get<std::vector<double>>();
    }
    /// A [lo, hi] pair given as a two-element list.
    [[nodiscard]] std::pair<int, int> range(const std::string& k) const {
        const auto v = ints(k);
        if (v.size() != 2 || v[0] > v[1]) throw DomainError(k + ": expected [lo, hi] with lo <= hi");
        return {v[0], v[1]};
    }
    /// The `cf` prefix extended by repeating its last quotient to `depth`.
    [[nodiscard]] ContinuedFraction cf(int depth, const std::string& k = "cf") const {
        return ContinuedFraction(ints(k)).extended(depth);
    }
};

using ExperimentFn = std::function<ExperimentOutput(const RunContext&)>;

struct ExperimentInfo {
    std::string name;
    /// The statement the experiment probes, in plain words.
    std::string anchor;
    std::vector<ParamSpec> params;
    ExperimentFn run;
};

// ---- shared helpers ---------------------------------------------------------

/// Shortest round-trip form of a threshold, e.g. "<= " + num(50.0) gives "<= 50".
inline std::string num(double x) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << std::setprecision(15) << x;
    return s.str();
}

/// Map of the given family with rotation number cf.periodic_value(): the
/// rigid rotation directly, the critical families by tuning.
inline MapSpec make_map(Family family, double b, const ContinuedFraction& cf) {
    if (family == Family::RigidRotation) return MapSpec::rigid_rotation(cf.periodic_value());
    return tuned_map(family, b, cf);
}

inline MapSpec map_param(const RunContext& ctx, const ContinuedFraction& cf, const std::string& prefix = "") {
    ctx.stage("tune_parameter");
    return make_map(family_from_string(ctx.s(prefix + "family")), ctx.d(prefix + "b"), cf);
}

inline ParamSpec family_param(const std::string& prefix = "") {
    return {prefix + "family", ParamKind::String, "Arnold", "RigidRotation, Arnold or PerturbedArnold"};
}
inline ParamSpec b_param(const std::string& prefix = "") {
    return {prefix + "b", ParamKind::Number, 0.0, "perturbation size for PerturbedArnold"};
}
inline ParamSpec cf_param(json fallback = json::array({1})) {
    return {"cf", ParamKind::IntList, std::move(fallback), "continued fraction prefix, last quotient repeated"};
}

namespace experiments {

inline ExperimentOutput tune(const RunContext& ctx) {
    const Family fam = family_from_string(ctx.s("family"));
    const int depth = ctx.i("depth");
    const ContinuedFraction cf = ctx.cf(depth);
    ctx.stage("tune_parameter");
    const TuneResult t = tune_parameter(fam, ctx.d("b"), cf, ctx.d("tol"));
    const MapSpec f = MapSpec::make(fam, t.theta, ctx.d("b"));
    const Convergents conv = convergents(cf);
    const long long count = conv.q.back();
    const bool order = orbit_order_matches(f, cf.periodic_value(), count);

    ExperimentOutput out;
    CsvTable tab({"theta", "lo", "hi", "steps", "resolution_limited", "certified_level"});
    tab.add({t.theta, t.lo, t.hi, static_cast<long long>(t.steps), static_cast<long long>(t.resolution_limited),
             static_cast<long long>(t.certified_level)});
    out.tables.emplace_back("tune", std::move(tab));
    out.results = {{"theta", t.theta}, {"bracket", {t.lo, t.hi}}, {"steps", t.steps},
                   {"resolution_limited", t.resolution_limited}, {"certified_level", t.certified_level},
                   {"orbit_points_checked", count}};
    out.verdict("orbit order matches the rotation", order, static_cast<double>(count), "all points");
    return out;
}

inline ExperimentOutput partition(const RunContext& ctx) {
    const auto [lo, hi] = ctx.range("levels");
    const ContinuedFraction cf = ctx.cf(hi + 4);
    const MapSpec f = map_param(ctx, cf);
    ExperimentOutput out;
    CsvTable moments({"level", "m", "moments", "expected", "ok", "note"});
    CsvTable atoms({"level", "generation", "iterate", "left", "length"});
    bool all_moments = true, all_disjoint = true;
    int checked = 0;
    for (int n = lo; n <= hi; ++n) {
        ctx.stage("backward_moments");
        const ReturnStructure rs = return_structure(f, cf, n);
        for (int m = 0; m <= n - 2; ++m) {
            ++checked;
            try {
                const MomentsReport r = backward_moments(rs, m);
                moments.add({static_cast<long long>(n), static_cast<long long>(m),
                             static_cast<long long>(r.moments.size()), static_cast<long long>(cf[m + 1]), 1LL,
                             std::string()});
            } catch (const CertificationError& e) {
                all_moments = false;
                moments.add({static_cast<long long>(n), static_cast<long long>(m), -1LL,
                             static_cast<long long>(cf[m + 1]), 0LL, std::string(e.what())});
            }
        }
        all_disjoint = all_disjoint && disjoint_preimages_check(rs);
        if (n == hi) {
            for (const Atom& a : circular_order(dynamical_partition(rs))) {
                atoms.add({static_cast<long long>(n), static_cast<long long>(a.generation), a.iterate, a.arc.left,
                           a.arc.length});
            }
        }
    }
    out.tables.emplace_back("moments", std::move(moments));
    out.tables.emplace_back("atoms", std::move(atoms));
    out.results = {{"levels", {lo, hi}}, {"moment_checks", checked}};
    out.verdict("moment counts and host intervals", all_moments, checked, "all (n, m) with m <= n - 2");
    out.verdict("pulled-back intervals disjoint", all_disjoint, hi, "every level");
    return out;
}

inline ExperimentOutput realbounds(const RunContext& ctx) {
    const auto [lo, hi] = ctx.range("levels");
    const int split = ctx.params.at("split").is_null() ? (lo + hi) / 2 : ctx.i("split");
    if (split < lo || split > hi) throw DomainError("split must lie inside levels");
    const ContinuedFraction cf = ctx.cf(hi + 2);
    ctx.stage("real_bounds_stats");
    const auto stats = real_bounds_stats(map_param(ctx, cf), cf, lo, hi);
    ExperimentOutput out;
    CsvTable tab({"level", "max_ratio", "first_left", "first_length", "second_left", "second_length"});
    double early = 0.0, late = 0.0, worst = 0.0;
    for (const auto& r : stats) {
        tab.add({static_cast<long long>(r.level), r.ratio, r.first.arc.left, r.first.arc.length, r.second.arc.left,
                 r.second.arc.length});
        if (r.level <= split) early = std::max(early, r.ratio);
        if (r.level >= split) late = std::max(late, r.ratio);
        worst = std::max(worst, r.ratio);
    }
    out.tables.emplace_back("levels", std::move(tab));
    const double bound = ctx.d("ratio_bound");
    const double growth = ctx.d("growth_bound");
    out.results = {{"max_early", early}, {"max_late", late}, {"split", split}};
    out.verdict("late max within growth bound of early max", late <= growth * early, late / early,
                "<= " + num(growth));
    out.verdict("all ratios bounded", worst <= bound, worst, "<= " + num(bound));
    return out;
}

inline ExperimentOutput converge(const RunContext& ctx) {
    const auto [lo, hi] = ctx.range("levels");
    const ContinuedFraction cf = ctx.cf(hi + 4);
    const MapSpec f = map_param(ctx, cf);
    const MapSpec g = map_param(ctx, cf, "g_");
    const int grid = ctx.i("grid");
    ctx.stage("convergence_rate");
    const ConvergenceResult res = convergence_rate(f, g, cf, lo, hi, grid);
    const ConvergenceResult fine = convergence_rate(f, g, cf, lo, hi, 2 * grid);
    ExperimentOutput out;
    CsvTable tab({"level", "distance", "distance_fine_grid"});
    int rises = 0;
    double grid_change = 0.0;
    for (std::size_t i = 0; i < res.levels.size(); ++i) {
        const double d = res.levels[i].distance;
        tab.add({static_cast<long long>(res.levels[i].level), d, fine.levels[i].distance});
        if (i > 0 && !(d < res.levels[i - 1].distance)) ++rises;
        if (d > 0.0) grid_change = std::max(grid_change, std::abs(fine.levels[i].distance - d) / d);
    }
    out.tables.emplace_back("levels", std::move(tab));
    out.results = {{"slope", res.fit.slope}, {"intercept", res.fit.intercept}, {"r2", res.fit.r2},
                   {"excluded", res.excluded}};
    out.verdict("distance decreases at every level", rises == 0, rises, "0 non-decreasing steps");
    out.verdict("log-linear slope negative", res.fit.slope < 0.0, res.fit.slope, "< 0");
    out.verdict("fit quality", res.fit.r2 >= ctx.d("min_r2"), res.fit.r2, ">= " + num(ctx.d("min_r2")));
    out.verdict("grid doubling changes each distance by < 5%", grid_change < 0.05, grid_change, "< 0.05");
    return out;
}

inline ExperimentOutput yoccoz(const RunContext& ctx) {
    ExperimentOutput out;
    CsvTable tab({"eps", "j", "length", "m", "product"});
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    json fits = json::array();
    for (const double eps : ctx.numbers("eps")) {
        ctx.stage("yoccoz_profile");
        const YoccozProfile p = yoccoz_profile(make_almost_parabolic(eps));
        for (const auto& r : p.rows) {
            tab.add({eps, static_cast<long long>(r.j), r.length, static_cast<long long>(r.m), r.product});
        }
        lo = std::min(lo, p.c_fit);
        hi = std::max(hi, p.c_fit);
        fits.push_back({{"eps", eps}, {"c_fit", p.c_fit}, {"length", static_cast<long long>(p.rows.size())}});
    }
    out.tables.emplace_back("profile", std::move(tab));
    out.results = {{"fits", fits}};
    out.verdict("one constant bounds every profile", hi <= ctx.d("c_max"), hi, "<= " + num(ctx.d("c_max")));
    out.verdict("constant stable across eps", hi / lo <= ctx.d("spread"), hi / lo,
                "<= " + num(ctx.d("spread")));
    return out;
}

inline ExperimentOutput parabolic_fixed(const RunContext& ctx) {
    ExperimentOutput out;
    CsvTable tab({"eps", "a", "re_z_plus", "im_z_plus", "check", "residual"});
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, worst = 0.0;
    for (const double eps : ctx.numbers("eps")) {
        const AlmostParabolic ap = make_almost_parabolic(eps);
        ctx.stage("complex_fixed_points");
        const FixedPointReport r = complex_fixed_points(ap);
        tab.add({eps, static_cast<long long>(ap.length()), r.z_plus.real(), r.z_plus.imag(), r.check, r.residual});
        lo = std::min(lo, r.check);
        hi = std::max(hi, r.check);
        worst = std::max(worst, r.residual);
    }
    out.tables.emplace_back("fixed_points", std::move(tab));
    out.results = {{"check_min", lo}, {"check_max", hi}};
    out.verdict("a Im z_+ in [2, 5]", lo >= 2.0 && hi <= 5.0, lo < 2.0 ? lo : hi, "[2, 5]");
    out.verdict("fixed point residual", worst <= 1e-12, worst, "<= 1e-12");
    return out;
}

inline ExperimentOutput cubic_growth(const RunContext& ctx) {
    const auto levels = ctx.ints("levels");
    const ContinuedFraction cf = ctx.cf(*std::max_element(levels.begin(), levels.end()) + 4);
    const MapSpec f = map_param(ctx, cf);
    const double B = ctx.d("B"), R = ctx.d("R");
    const int samples = ctx.i("samples");
    ExperimentOutput out;
    CsvTable tab({"level", "C", "retained", "discarded"});
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    int fewest = samples;
    for (const int n : levels) {
        ctx.stage("cubic_growth_check");
        const CubicGrowth g = cubic_growth_check(f, cf, n, B, R, samples, ctx.seed + static_cast<std::uint64_t>(n));
        tab.add({static_cast<long long>(n), g.c, static_cast<long long>(g.count), static_cast<long long>(g.discarded)});
        lo = std::min(lo, g.c);
        hi = std::max(hi, g.c);
        fewest = std::min(fewest, g.count);
    }
    const CubicGrowth self =
        cubic_growth_check([](cplx z) { return std::optional<cplx>(z * z * z); }, 1.0, 1e9, 3.0, samples, ctx.seed);
    out.tables.emplace_back("levels", std::move(tab));
    out.results = {{"c_min", lo}, {"c_max", hi}, {"self_test_c", self.c}};
    out.verdict("C_n positive", lo > 0.0, lo, "> 0");
    out.verdict("at least 50 retained samples per level", fewest >= 50, fewest, ">= 50");
    out.verdict("max C_n / min C_n", hi / lo <= 4.0, hi / lo, "<= 4");
    out.verdict("harness on z^3", std::abs(self.c - 1.0) <= 1e-12, self.c, "1 +- 1e-12");
    return out;
}

inline ExperimentOutput prop33(const RunContext& ctx) {
    const auto levels = ctx.ints("levels");
    const ContinuedFraction cf = ctx.cf(*std::max_element(levels.begin(), levels.end()) + 4);
    const MapSpec f = map_param(ctx, cf);
    const int N = ctx.i("N");
    ExperimentOutput out;
    CsvTable fits({"level", "slope", "intercept", "r2", "samples", "discarded", "roundtrip_error"});
    CsvTable pts({"level", "re_z", "im_z", "x", "lhs"});
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, real_worst = 0.0;
    for (const int n : levels) {
        ctx.stage("prop33_inequality_fit");
        const Prop33Result r =
            prop33_inequality_fit(f, cf, n, N, ctx.i("samples"), ctx.seed + static_cast<std::uint64_t>(n));
        fits.add({static_cast<long long>(n), r.fit.slope, r.fit.intercept, r.fit.r2,
                  static_cast<long long>(r.samples.size()), static_cast<long long>(r.discarded),
                  r.max_roundtrip_error});
        for (const auto& s : r.samples) {
            pts.add({static_cast<long long>(n), s.z.real(), s.z.imag(), s.x, s.lhs});
            if (s.z.imag() == 0.0) real_worst = std::max(real_worst, s.lhs);
        }
        lo = std::min(lo, std::abs(r.fit.slope));
        hi = std::max(hi, std::abs(r.fit.slope));
    }
    out.tables.emplace_back("fits", std::move(fits));
    out.tables.emplace_back("samples", std::move(pts));
    out.results = {{"N", N}};
    out.verdict("real samples pull back into f(I_n)", real_worst <= 1.0, real_worst, "<= 1");
    out.verdict("slopes agree across levels", std::isfinite(hi) && hi <= 2.0 * lo, hi / lo, "<= 2");
    return out;
}

inline ExperimentOutput poincare(const RunContext& ctx) {
    const int n = ctx.i("level");
    const ContinuedFraction cf = ctx.cf(n + 4);
    const MapSpec f = map_param(ctx, cf);
    const double theta = ctx.d("theta");
    const int samples = ctx.i("samples");
    const Arc J = return_structure(f, cf, n).image_of_I(n, 1);
    ctx.stage("quasi_invariance_measure");
    const auto full = quasi_invariance_measure(f, J.left, J.right(), theta, samples);
    const auto half = quasi_invariance_measure(f, J.left, J.left + 0.5 * J.length, theta, samples);
    const auto ident = quasi_invariance_measure([](cplx z) { return z; }, J.left, J.right(), theta, samples);
    ExperimentOutput out;
    CsvTable tab({"case", "left", "length", "theta", "theta_min_out", "loss", "used", "excluded"});
    auto row = [&](const char* name, double len, const QuasiInvariance& q) {
        tab.add({std::string(name), J.left, len, theta, q.theta_min_out, q.loss, static_cast<long long>(q.used),
                 static_cast<long long>(q.excluded)});
    };
    row("identity", J.length, ident);
    row("full", J.length, full);
    row("half", 0.5 * J.length, half);
    out.tables.emplace_back("loss", std::move(tab));
    out.results = {{"J", {J.left, J.right()}}, {"loss_full", full.loss}, {"loss_half", half.loss}};
    out.verdict("identity loses no angle", ident.loss == 0.0, ident.loss, "== 0");
    out.verdict("loss at |J|/2 at most half the loss at |J|", half.loss <= 0.5 * full.loss, half.loss / full.loss,
                "<= 0.5");
    return out;
}

inline ExperimentOutput holopair_control(const RunContext& ctx) {
    const auto levels = ctx.ints("levels");
    const ContinuedFraction cf = ctx.cf(*std::max_element(levels.begin(), levels.end()) + 6);
    const MapSpec f = map_param(ctx, cf);
    ExperimentOutput out;
    CsvTable ctl({"level", "condition", "K", "measured", "pass"});
    CsvTable dom({"level", "domain", "vertex", "re", "im"});
    double k_lo = std::numeric_limits<double>::infinity(), k_hi = 0.0;
    bool all = true;
    for (const int n : levels) {
        ctx.stage("build_holo_pair");
        const HoloPair hp = build_holo_pair(f, cf, n, ctx.d("lambda"));
        ctx.stage("control_report");
        const ControlReport rep = control_report(hp);
        for (const auto& c : rep.conditions) {
            ctl.add({static_cast<long long>(n), c.name, c.K, c.measured, static_cast<long long>(c.pass)});
        }
        const std::pair<const char*, const Polygon*> polys[] = {
            {"xi", &hp.O_xi()}, {"eta", &hp.O_eta()}, {"nu", &hp.O_nu()}};
        for (const auto& [name, P] : polys) {
            for (std::size_t k = 0; k < P->v.size(); ++k) {
                dom.add({static_cast<long long>(n), std::string(name), static_cast<long long>(k), P->v[k].real(),
                         P->v[k].imag()});
            }
        }
        all = all && rep.all_pass();
        k_lo = std::min(k_lo, rep.K_est);
        k_hi = std::max(k_hi, rep.K_est);
        out.results["levels"].push_back({{"level", n}, {"K_est", rep.K_est}, {"modulus_lower", rep.modulus_lower},
                                         {"height", hp.height()}, {"s", hp.s()}});
    }
    out.tables.emplace_back("control", std::move(ctl));
    out.tables.emplace_back("domains", std::move(dom));
    out.verdict("all control conditions hold", all, k_hi, "finite K");
    out.verdict("K_est stable across levels", k_hi <= ctx.d("k_spread") * k_lo, k_hi / k_lo,
                "<= " + num(ctx.d("k_spread")));
    return out;
}

namespace detail {

/// True when every non-real point has its mirror image in the cloud.
inline bool conjugation_closed(const std::vector<cplx>& pts, double tol) {
    std::vector<cplx> sorted = pts;
    auto less = [](cplx a, cplx b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); };
    std::sort(sorted.begin(), sorted.end(), less);
    for (const cplx z : pts) {
        if (z.imag() == 0.0) continue;
        const cplx w = std::conj(z);
        auto it = std::lower_bound(sorted.begin(), sorted.end(), cplx(w.real() - tol, -1e300), less);
        bool found = false;
        for (; it != sorted.end() && it->real() <= w.real() + tol; ++it) {
            if (std::abs(*it - w) <= tol) {
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

inline HoloPair holo_pair_param(const RunContext& ctx) {
    ctx.stage("build_holo_pair");
    const int n = ctx.i("level");
    const ContinuedFraction cf = ctx.cf(n + 6);
    return build_holo_pair(map_param(ctx, cf), cf, n, ctx.d("lambda"));
}

inline LimitSetCloud cloud_param(const RunContext& ctx, const HoloPair& hp) {
    ctx.stage("limit_set_sample");
    return limit_set_sample(hp, ctx.i("depth"), ctx.i("per_arc"), static_cast<std::size_t>(ctx.i("cap")), ctx.jobs);
}

} // namespace detail

inline ExperimentOutput limitset(const RunContext& ctx) {
    const HoloPair hp = detail::holo_pair_param(ctx);
    const LimitSetCloud cloud = detail::cloud_param(ctx, hp);
    ctx.stage("forward_consistency");
    const double consistency = forward_consistency(hp, cloud);
    const bool closed = detail::conjugation_closed(cloud.points, 1e-12);
    ExperimentOutput out;
    CsvTable gen({"depth", "count"});
    for (std::size_t k = 0; k < cloud.counts.size(); ++k) {
        gen.add({static_cast<long long>(k), static_cast<long long>(cloud.counts[k])});
    }
    CsvTable pts({"re", "im", "depth"});
    for (std::size_t k = 0; k < cloud.points.size(); ++k) {
        pts.add({cloud.points[k].real(), cloud.points[k].imag(), static_cast<long long>(cloud.depth_of[k])});
    }
    out.tables.emplace_back("counts", std::move(gen));
    out.tables.emplace_back("points", std::move(pts));
    out.results = {{"points", cloud.points.size()}, {"skipped", cloud.skipped}, {"forward_consistency", consistency}};
    out.verdict("closed under conjugation", closed, static_cast<double>(cloud.points.size()), "every point mirrored");
    out.verdict("forward consistent", consistency <= 1e-6, consistency, "<= 1e-6");
    return out;
}

/// Evenly spaced points on [-1, 1], the control cloud for the deep-point fit.
inline std::vector<cplx> flat_segment(int n) {
    std::vector<cplx> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(-1.0 + 2.0 * i / (n - 1), 0.0);
    return pts;
}

inline ExperimentOutput deep_point(const RunContext& ctx) {
    const HoloPair hp = detail::holo_pair_param(ctx);
    const LimitSetCloud cloud = detail::cloud_param(ctx, hp);
    const double r_lo = ctx.d("r_lo"), r_hi = ctx.d("r_hi");
    const int grid = ctx.i("grid");
    ExperimentOutput out;
    CsvTable tab({"cloud", "grid", "r", "hole", "spacing", "used"});
    auto probe = [&](const std::string& name, const std::vector<cplx>& pts, int g, double lo, double hi) {
        const DeepPointResult r = deep_point_exponent_detail(pts, lo, hi, g);
        for (const auto& p : r.probes) {
            tab.add({name, static_cast<long long>(g), p.r, p.hole, p.spacing, static_cast<long long>(p.used)});
        }
        out.results[name + "_grid_" + std::to_string(g)] = {{"slope", r.fit.slope}, {"r2", r.fit.r2}};
        return r.fit.slope;
    };
    ctx.stage("deep_point_exponent");
    const double s1 = probe("limit_set", cloud.points, grid, r_lo, r_hi);
    const double s2 = probe("limit_set", cloud.points, 2 * grid, r_lo, r_hi);
    const double flat = probe("flat_segment", flat_segment(40001), grid, 0.01, 0.5);
    out.tables.emplace_back("probes", std::move(tab));
    out.verdict("deep-point slope", s1 > 1.05, s1, "> 1.05");
    out.verdict("stable under grid doubling", std::abs(s2 - s1) <= 0.1, std::abs(s2 - s1), "<= 0.1");
    out.verdict("flat segment control", flat >= 0.9 && flat <= 1.1, flat, "[0.9, 1.1]");
    return out;
}

inline ExperimentOutput expansion(const RunContext& ctx) {
    const HoloPair hp = detail::holo_pair_param(ctx);
    std::mt19937_64 rng(ctx.seed);
    const Disk V = hp.V();
    std::uniform_real_distribution<double> ux(V.center.real() - V.radius, V.center.real() + V.radius);
    std::uniform_real_distribution<double> uy(-V.radius, V.radius);
    const double min_im = ctx.d("min_im") * hp.J_length();
    const int samples = ctx.i("samples"), starts = ctx.i("starts"), steps = ctx.i("steps");
    ExperimentOutput out;
    CsvTable single({"re", "im", "ratio"});
    int up = 0, n = 0, truncated = 0;
    ctx.stage("expansion_proxy");
    while (n < samples) {
        const cplx z(ux(rng), uy(rng));
        if (std::abs(z.imag()) < min_im || !hp.in_U(z)) continue;
        const auto e = expansion_proxy(hp, z, 1);
        if (e.values.size() < 2) {
            ++truncated;
            continue;
        }
        ++n;
        if (e.values[1] >= 1.0) ++up;
        single.add({z.real(), z.imag(), e.values[1]});
    }
    CsvTable seq({"start", "step", "value"});
    int grown = 0, runs = 0, dead_ends = 0;
    while (runs < starts) {
        const cplx w0(ux(rng), uy(rng));
        if (!V.contains(w0) || hp.in_U(w0)) continue;
        const auto z = backward_start(hp, w0, steps + 1, rng);
        if (!z) {
            ++dead_ends;
            continue;
        }
        const auto e = expansion_proxy(hp, *z, steps);
        for (std::size_t j = 0; j < e.values.size(); ++j) {
            seq.add({static_cast<long long>(runs), static_cast<long long>(j), e.values[j]});
        }
        if (!e.truncated && e.values.back() >= 5.0) ++grown;
        ++runs;
    }
    out.tables.emplace_back("single_step", std::move(single));
    out.tables.emplace_back("sequences", std::move(seq));
    out.results = {{"single_step_truncated", truncated}, {"backward_dead_ends", dead_ends}};
    const double frac = static_cast<double>(up) / n;
    out.verdict("single-step ratio >= 1", frac >= 0.95, frac, ">= 0.95 of samples");
    out.verdict("matched starts grow 5x", grown == runs, static_cast<double>(grown) / runs, "all starts");
    return out;
}

inline ExperimentOutput rigidity(const RunContext& ctx) {
    const auto [lo, hi] = ctx.range("levels");
    const int qs_level = ctx.i("qs_level");
    const ContinuedFraction cf = ctx.cf(std::max(hi, qs_level) + 6);
    const MapSpec f = map_param(ctx, cf);
    const MapSpec g = map_param(ctx, cf, "g_");
    ctx.stage("rigidity_fit");
    const RigidityFit fit = rigidity_fit_detail(f, g, cf, lo, hi);
    const int scales = ctx.i("scales");
    ctx.stage("qs_distortion");
    const auto qs = qs_distortion_by_scale(orbit_conjugacy(f, g, cf, qs_level), scales);
    const double qs_self = qs_distortion(orbit_conjugacy(f, f, cf, qs_level), scales);
    const auto sf = scaling_ratios(f, cf, hi);
    const auto sg = scaling_ratios(g, cf, hi);

    ExperimentOutput out;
    CsvTable lv({"level", "rho", "s_f", "s_g"});
    for (int n = lo; n <= hi; ++n) {
        const auto k = static_cast<std::size_t>(n);
        lv.add({static_cast<long long>(n), fit.rho[k - static_cast<std::size_t>(lo)], sf[k], sg[k]});
    }
    CsvTable qt({"t", "triples", "distortion"});
    double qs_max = 1.0;
    for (const auto& s : qs) {
        qt.add({s.t, static_cast<long long>(s.triples), s.distortion});
        qs_max = std::max(qs_max, s.distortion);
    }
    // Round annuli 1 < |z| < R have modulus log(R) / 2pi, separation R - 1
    // and diameter 2R.
    CsvTable ann({"R", "bound", "modulus"});
    std::mt19937_64 rng(ctx.seed);
    std::uniform_real_distribution<double> logR(0.01, 8.0);
    bool below = true;
    for (int i = 0; i < 20; ++i) {
        const double R = std::exp(logR(rng));
        const double bound = modulus_lower_bound(R - 1.0, 2.0 * R).lower;
        const double mod = std::log(R) / kTwoPi;
        ann.add({R, bound, mod});
        below = below && bound <= mod;
    }
    out.tables.emplace_back("levels", std::move(lv));
    out.tables.emplace_back("qs", std::move(qt));
    out.tables.emplace_back("annuli", std::move(ann));
    out.results = {{"slope", fit.fit.slope}, {"intercept", fit.fit.intercept}, {"r2", fit.fit.r2},
                   {"excluded", fit.excluded}, {"qs_distortion", qs_max}};
    out.verdict("ratio differences decay", fit.fit.slope < 0.0, fit.fit.slope, "< 0");
    out.verdict("fit quality", fit.fit.r2 >= ctx.d("min_r2"), fit.fit.r2, ">= " + num(ctx.d("min_r2")));
    out.verdict("identity has qs distortion 1", qs_self == 1.0, qs_self, "== 1");
    out.verdict("modulus bound below true modulus", below, 20.0, "20 round annuli");
    return out;
}

} // namespace experiments

} // namespace renormlab

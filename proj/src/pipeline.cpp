#include "morseflow/pipeline.hpp"

#include "morseflow/morse_complex.hpp"
#include "morseflow/obstruction.hpp"

#include <fstream>
#include <map>
#include <memory>
#include <set>

namespace morseflow {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- config

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("missing or malformed '" + std::string(key) + "' in " + where);
    }
}

template <class T>
void get_optional(const json& j, const char* key, const std::string& where, T& out)
{
    if (j.contains(key)) out = get<T>(j, key, where);
}

std::vector<std::int64_t> residues(const json& j, const char* key)
{
    if (!j.contains(key)) throw ConfigError("obstruction query needs '" + std::string(key) + "'");
    const auto& v = j.at(key);
    if (v.is_number_integer()) return {v.get<std::int64_t>()};
    try {
        return v.get<std::vector<std::int64_t>>();
    } catch (const json::exception&) {
        throw ConfigError("'" + std::string(key) + "' must be an integer or a list of integers");
    }
}

CatalogTag parse_tag(const std::string& text, const std::string& where)
{
    try {
        return CatalogTag::parse(text);
    } catch (const Error& e) {
        throw ConfigError("bad catalog tag '" + text + "' in " + where + ": " + e.what());
    }
}

std::vector<LoopClassSpec> parse_classes(const json& j, const std::string& where)
{
    std::vector<LoopClassSpec> out;
    if (!j.is_array()) throw ConfigError(where + " must be a list");
    for (const auto& c : j) {
        check_keys(c, where + " entry", {"upper", "lower", "class"});
        out.push_back({get<int>(c, "upper", where), get<int>(c, "lower", where), get<std::string>(c, "class", where)});
    }
    return out;
}

// ---------------------------------------------------------------- report helpers

json vector_json(const VectorXd& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

std::string side_name(ShootSide s)
{
    return s == ShootSide::UnstableOfUpper ? "unstable_sphere_of_upper" : "stable_sphere_of_lower";
}

json complex_json(const GradedComplex& c)
{
    json out;
    out["coefficients"] = to_string(c.coefficients);
    json grades = json::array();
    for (std::size_t k = 0; k < c.basis.size(); ++k) grades.push_back({{"grade", k}, {"basis", c.basis[k]}});
    out["grades"] = grades;
    json ds = json::array();
    for (std::size_t k = 1; k < c.differentials.size(); ++k) {
        const auto& D = c.differentials[k];
        json entries = json::array();
        for (Eigen::Index i = 0; i < D.rows(); ++i)
            for (Eigen::Index jx = 0; jx < D.cols(); ++jx) entries.push_back(D(i, jx));
        ds.push_back({{"grade", k}, {"rows", D.rows()}, {"cols", D.cols()}, {"entries", entries}});
    }
    out["differentials"] = ds;
    json h = json::array();
    const auto groups = homology_ranks(c);
    for (std::size_t k = 0; k < groups.size(); ++k)
        h.push_back({{"grade", k}, {"free_rank", groups[k].free_rank}, {"torsion", groups[k].torsion}});
    out["homology"] = h;
    return out;
}

json element_json(const PontryaginRing& ring, const RingElement& e)
{
    json out = json::array();
    for (int t : e.terms) out.push_back(ring.monomial_name(t));
    return out;
}

json ring_json(const PontryaginRing& ring)
{
    json basis = json::array();
    for (int i = 0; i < static_cast<int>(ring.basis().size()); ++i)
        basis.push_back({{"name", ring.monomial_name(i)}, {"degree", ring.degree(i)}});
    json gens = json::array();
    for (const auto& g : ring.generators())
        gens.push_back({{"name", g.name}, {"degree", g.degree}, {"exterior", g.exterior}});
    json table = json::array();
    for (const auto& [i, j, k] : ring.multiplication_table()) table.push_back({i, j, k ? json(*k) : json(nullptr)});
    return {{"name", ring.name()},        {"degree_cap", ring.degree_cap()}, {"generators", gens},
            {"basis", basis},             {"table", table},                  {"poincare_series", ring.poincare_series()}};
}

json extended_json(const ExtendedComplex& c, const PontryaginRing& ring)
{
    json entries = json::array();
    for (const auto& e : c.entries)
        entries.push_back({{"upper", e.upper}, {"lower", e.lower}, {"class", element_json(ring, e.cls)}});
    json composites = json::array();
    for (const auto& e : c.composites)
        composites.push_back({{"upper", e.upper}, {"lower", e.lower}, {"value", element_json(ring, e.value)}});
    json levels = json::array();
    for (std::size_t i = 0; i < c.levels.size(); ++i) levels.push_back({{"value", c.levels[i]}, {"basis", c.basis[i]}});
    return {{"ring", ring.name()}, {"levels", levels}, {"entries", entries}, {"composites", composites}};
}

// ---------------------------------------------------------------- stages

template <class F>
auto stage(const char* name, F&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

struct Checks {
    json list = json::array();
    bool passed = true;

    void add(const std::string& name, bool ok, const std::string& detail = "")
    {
        json c{{"name", name}, {"passed", ok}};
        if (!detail.empty()) c["detail"] = detail;
        list.push_back(c);
        passed = passed && ok;
    }
};

struct Analysis {
    std::vector<CriticalPoint> points;
    std::vector<CriticalPair> pairs;
    std::map<std::pair<int, int>, OrbitEnumeration> enumerations;
    std::vector<ConnectingOrbit> orbits;
    std::optional<GradedComplex> integral;
    std::optional<GradedComplex> mod2;
    std::string complex_failure;
};

Analysis analyze(const RestrictedFunction& rf, const RunConfig& cfg)
{
    Analysis a;
    SearchOptions search = cfg.search;
    search.seed = cfg.seed;
    a.points = stage("critical-points", [&] { return find_critical_points(rf, search); });
    a.pairs = stage("flowlines", [&] {
        return consecutive_pairs(a.points, [&](const CriticalPoint& p, const CriticalPoint& q) {
            return reachable(rf, a.points, p, q, cfg.flow);
        });
    });
    stage("flowlines", [&] {
        for (const auto& pr : a.pairs) {
            if (pr.index_gap != 1) continue;
            const auto& P = a.points[static_cast<std::size_t>(pr.upper)];
            const auto& Q = a.points[static_cast<std::size_t>(pr.lower)];
            auto e = enumerate_orbits_zero_dim(rf, a.points, P, Q, cfg.resolution, cfg.flow);
            a.orbits.insert(a.orbits.end(), e.orbits.begin(), e.orbits.end());
            a.enumerations.emplace(std::make_pair(pr.upper, pr.lower), std::move(e));
        }
        return 0;
    });
    if (cfg.check_complex || cfg.check_duality) {
        stage("morse-complex", [&] {
            const auto n = rf.manifold().intrinsic_dim();
            try {
                a.integral = build_morse_complex(a.points, a.orbits, n, Coefficients::Integers);
                a.mod2 = build_morse_complex(a.points, a.orbits, n, Coefficients::Mod2);
            } catch (const ComplexInconsistencyError& e) {
                a.complex_failure = e.what();
            }
            return 0;
        });
    }
    return a;
}

std::string manifold_key(const ImplicitManifold& m, const ManifoldSpec& spec)
{
    if (m.catalog_tag()) return m.catalog_tag()->to_string();
    std::string key = "custom(" + std::to_string(spec.ambient_dim);
    for (const auto& c : spec.constraints) key += ";" + c;
    return key + ")";
}

std::optional<RingElement> config_class(const std::vector<LoopClassSpec>& classes, const PontryaginRing& ring, int p,
                                        int q)
{
    for (const auto& c : classes)
        if (c.upper == p && c.lower == q) return ring.parse(c.cls);
    return std::nullopt;
}

}  // namespace

RunConfig parse_config(const json& j)
{
    check_keys(j, "config",
               {"morseflow_schema", "run_id", "seed", "manifold", "function", "solver", "flow", "resolution",
                "moduli_samples", "degree_cap", "checks", "ring", "loop_classes", "synthetic_complex", "obstruction"});
    if (!j.contains("morseflow_schema") || j.at("morseflow_schema") != kSchemaVersion)
        throw ConfigError("config must declare \"morseflow_schema\": " + std::to_string(kSchemaVersion));
    RunConfig c;
    get_optional(j, "run_id", "config", c.run_id);
    get_optional(j, "seed", "config", c.seed);
    get_optional(j, "resolution", "config", c.resolution);
    get_optional(j, "moduli_samples", "config", c.moduli_samples);
    get_optional(j, "degree_cap", "config", c.degree_cap);

    if (j.contains("manifold")) {
        const auto& m = j.at("manifold");
        check_keys(m, "manifold", {"catalog", "ambient_dim", "constraints", "reference_betti", "bounding_box"});
        ManifoldSpec spec;
        if (m.contains("catalog")) {
            if (m.contains("ambient_dim") || m.contains("constraints") || m.contains("reference_betti"))
                throw ConfigError("manifold: give either 'catalog' or 'ambient_dim' + 'constraints', not both");
            spec.catalog = parse_tag(get<std::string>(m, "catalog", "manifold"), "manifold");
        } else {
            spec.ambient_dim = get<std::size_t>(m, "ambient_dim", "manifold");
            spec.constraints = get<std::vector<std::string>>(m, "constraints", "manifold");
            if (m.contains("reference_betti")) spec.reference_betti = get<std::vector<int>>(m, "reference_betti", "manifold");
        }
        if (m.contains("bounding_box")) {
            auto box = get<std::vector<std::vector<double>>>(m, "bounding_box", "manifold");
            std::vector<std::pair<double, double>> b;
            for (const auto& r : box) {
                if (r.size() != 2 || !(r[0] < r[1])) throw ConfigError("bounding_box rows must be [low, high]");
                b.emplace_back(r[0], r[1]);
            }
            spec.bounding_box = b;
        }
        c.manifold = spec;
        c.function = get<std::string>(j, "function", "config");
    } else if (j.contains("function")) {
        throw ConfigError("'function' needs a 'manifold'");
    }

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        check_keys(s, "solver", {"budget", "newton_iterations"});
        get_optional(s, "budget", "solver", c.search.budget);
        get_optional(s, "newton_iterations", "solver", c.search.newton_iterations);
    }
    if (j.contains("flow")) {
        const auto& f = j.at("flow");
        check_keys(f, "flow",
                   {"r_shoot", "arrival_radius", "error_tolerance", "gradient_tolerance", "classify_radius", "max_time",
                    "max_steps", "bisection_tolerance", "probe_count", "probe_radius_factor"});
        get_optional(f, "r_shoot", "flow", c.flow.r_shoot);
        get_optional(f, "arrival_radius", "flow", c.flow.arrival_radius);
        get_optional(f, "error_tolerance", "flow", c.flow.error_tolerance);
        get_optional(f, "gradient_tolerance", "flow", c.flow.gradient_tolerance);
        get_optional(f, "classify_radius", "flow", c.flow.classify_radius);
        get_optional(f, "max_time", "flow", c.flow.max_time);
        get_optional(f, "max_steps", "flow", c.flow.max_steps);
        get_optional(f, "bisection_tolerance", "flow", c.flow.bisection_tolerance);
        get_optional(f, "probe_count", "flow", c.flow.probe_count);
        get_optional(f, "probe_radius_factor", "flow", c.flow.probe_radius_factor);
    }
    if (j.contains("checks")) {
        const auto& k = j.at("checks");
        check_keys(k, "checks", {"classical_complex", "duality", "extended_complex"});
        get_optional(k, "classical_complex", "checks", c.check_complex);
        get_optional(k, "duality", "checks", c.check_duality);
        get_optional(k, "extended_complex", "checks", c.check_extended);
    }
    if (j.contains("ring")) c.ring = parse_tag(get<std::string>(j, "ring", "config"), "ring");
    if (j.contains("loop_classes")) c.loop_classes = parse_classes(j.at("loop_classes"), "loop_classes");
    if (j.contains("synthetic_complex")) {
        const auto& s = j.at("synthetic_complex");
        check_keys(s, "synthetic_complex", {"ring", "points", "classes"});
        SyntheticComplex sc{parse_tag(get<std::string>(s, "ring", "synthetic_complex"), "synthetic_complex"), {}, {}};
        if (!s.contains("points") || !s.at("points").is_array()) throw ConfigError("synthetic_complex needs 'points'");
        std::set<int> ids;
        for (const auto& p : s.at("points")) {
            check_keys(p, "synthetic_complex point", {"id", "value", "index"});
            SyntheticPoint sp{get<int>(p, "id", "point"), get<double>(p, "value", "point"), get<int>(p, "index", "point")};
            if (!ids.insert(sp.id).second) throw ConfigError("duplicate synthetic point id " + std::to_string(sp.id));
            sc.points.push_back(sp);
        }
        if (s.contains("classes")) sc.classes = parse_classes(s.at("classes"), "synthetic_complex classes");
        c.synthetic = sc;
    }
    if (j.contains("obstruction")) {
        if (!j.at("obstruction").is_array()) throw ConfigError("obstruction must be a list");
        for (const auto& q : j.at("obstruction")) {
            check_keys(q, "obstruction query", {"k", "delta", "delta_prime"});
            c.obstruction.push_back({get<int>(q, "k", "obstruction query"), residues(q, "delta"), residues(q, "delta_prime")});
        }
    }
    if (c.check_extended && c.manifold && !c.manifold->catalog && !c.ring && c.loop_classes.empty())
        throw ConfigError("checks.extended_complex on a custom manifold needs 'ring' or 'loop_classes'");
    if (c.search.budget < 100) throw ConfigError("solver.budget must be at least 100");
    if (c.resolution < 2) throw ConfigError("resolution must be at least 2");
    if (c.moduli_samples < 2) throw ConfigError("moduli_samples must be at least 2");
    if (c.degree_cap < 0) throw ConfigError("degree_cap must be non-negative");
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

json stem_tables_json()
{
    json out = json::array();
    for (const auto& g : stem_tables())
        out.push_back({{"k", g.k},
                       {"group", g.describe()},
                       {"im_j", g.describe_im_j()},
                       {"factors", g.factors},
                       {"im_j_orders", g.im_j_orders},
                       {"generators", g.generators}});
    return out;
}

PipelineResult run_pipeline(const RunConfig& cfg)
{
    PipelineResult result;
    json& report = result.report;
    Checks checks;
    report["morseflow_schema"] = kSchemaVersion;
    report["run_id"] = cfg.run_id;
    report["seed"] = cfg.seed;
    report["tolerances"] = {{"constraint", kConstraintTolerance},
                            {"rank_relative_threshold", kRankRelativeThreshold},
                            {"retraction_basin", kRetractionBasin},
                            {"dedup_distance", kDedupDistance},
                            {"nondegeneracy_threshold", kNondegeneracyThreshold},
                            {"critical_gradient", kCriticalGradientTolerance},
                            {"value_tie", kValueTieTolerance},
                            {"r_shoot", cfg.flow.r_shoot},
                            {"arrival_radius", cfg.flow.arrival_radius},
                            {"error_tolerance", cfg.flow.error_tolerance},
                            {"gradient_tolerance", cfg.flow.gradient_tolerance},
                            {"classify_radius", cfg.flow.classify_radius},
                            {"max_time", cfg.flow.max_time},
                            {"max_steps", cfg.flow.max_steps},
                            {"bisection_tolerance", cfg.flow.bisection_tolerance},
                            {"probe_count", cfg.flow.probe_count},
                            {"probe_radius_factor", cfg.flow.probe_radius_factor},
                            {"resolution", cfg.resolution},
                            {"moduli_samples", cfg.moduli_samples},
                            {"search_budget", cfg.search.budget},
                            {"degree_cap", cfg.degree_cap}};

    if (cfg.manifold) {
        const auto& spec = *cfg.manifold;
        auto manifold = stage("geometry", [&] {
            std::shared_ptr<ImplicitManifold> m;
            if (spec.catalog) {
                m = std::make_shared<ImplicitManifold>(ImplicitManifold::from_catalog(*spec.catalog));
            } else {
                std::vector<expr::Expr> constraints;
                for (const auto& c : spec.constraints) constraints.push_back(expr::Expr::parse(c, spec.ambient_dim));
                m = std::make_shared<ImplicitManifold>(spec.ambient_dim, std::move(constraints), spec.reference_betti);
            }
            if (spec.bounding_box) m->set_bounding_box(*spec.bounding_box);
            return std::shared_ptr<const ImplicitManifold>(m);
        });
        const auto n = manifold->intrinsic_dim();
        result.ambient_dim = manifold->ambient_dim();
        const RestrictedFunction rf(stage("expression", [&] { return expr::Expr::parse(cfg.function, manifold->ambient_dim()); }),
                                    manifold);
        report["manifold"] = {{"key", manifold_key(*manifold, spec)},
                              {"ambient_dim", manifold->ambient_dim()},
                              {"intrinsic_dim", n}};
        if (manifold->reference_betti()) report["manifold"]["reference_betti"] = *manifold->reference_betti();
        report["function"] = rf.function().to_string();

        Analysis a = analyze(rf, cfg);

        json pts = json::array();
        for (const auto& p : a.points)
            pts.push_back({{"id", p.id},
                           {"location", vector_json(p.location)},
                           {"value", p.value},
                           {"index", p.index},
                           {"hessian_spectrum", p.hessian_spectrum}});
        report["critical_points"] = pts;
        const auto counts = index_counts(a.points, n);
        report["index_counts"] = counts;
        if (const auto& betti = manifold->reference_betti()) {
            bool weak = betti->size() == counts.size();
            int euler_points = 0, euler_betti = 0;
            for (std::size_t k = 0; weak && k < counts.size(); ++k) {
                weak = weak && counts[k] >= (*betti)[k];
                euler_points += (k % 2 ? -1 : 1) * counts[k];
                euler_betti += (k % 2 ? -1 : 1) * (*betti)[k];
            }
            checks.add("morse_inequalities", weak);
            checks.add("euler_characteristic", weak && euler_points == euler_betti,
                       "points " + std::to_string(euler_points) + ", reference " + std::to_string(euler_betti));
        }

        json pairs = json::array();
        for (const auto& pr : a.pairs)
            pairs.push_back({{"upper", pr.upper}, {"lower", pr.lower}, {"index_gap", pr.index_gap}});
        report["consecutive_pairs"] = pairs;
        report["consecutiveness"] = "value order plus broken-line reachability probe";

        json orbit_report = json::array();
        for (const auto& [key, e] : a.enumerations) {
            json signs = json::array(), params = json::array();
            int signed_count = 0;
            for (const auto& o : e.orbits) {
                signs.push_back(o.sign);
                params.push_back(vector_json(o.shoot_parameter));
                signed_count += o.sign;
            }
            orbit_report.push_back({{"upper", key.first},
                                    {"lower", key.second},
                                    {"shoot_side", side_name(e.plan.side)},
                                    {"shoot_sphere_dim", e.plan.sphere_dim},
                                    {"scanned", e.scanned},
                                    {"brackets", e.brackets},
                                    {"count", e.orbits.size()},
                                    {"signs", signs},
                                    {"signed_count", signed_count},
                                    {"shoot_parameters", params},
                                    {"transversality_warnings", e.warnings}});
        }
        report["orbits"] = orbit_report;
        result.orbits = a.orbits;

        if (cfg.check_complex || cfg.check_duality) {
            checks.add("d_squared_zero", a.complex_failure.empty(), a.complex_failure);
            if (a.integral) {
                report["complex"] = {{"Z", complex_json(*a.integral)}, {"Z/2", complex_json(*a.mod2)}};
                if (const auto& betti = manifold->reference_betti()) {
                    std::vector<int> ranks;
                    for (const auto& h : homology_ranks(*a.mod2)) ranks.push_back(h.free_rank);
                    checks.add("homology_matches_reference_betti", ranks == *betti);
                }
            }
        }

        if (cfg.check_duality && a.integral) {
            const RestrictedFunction neg(-rf.function(), manifold);
            Analysis b = analyze(neg, cfg);
            if (!b.complex_failure.empty()) {
                checks.add("duality_transpose", false, "the -f complex failed: " + b.complex_failure);
            } else {
                const std::string key = manifold_key(*manifold, spec);
                MorseRun fr{key, n, a.points, *a.integral};
                MorseRun nr{key, n, b.points, *b.integral};
                try {
                    auto d = stage("morse-complex", [&] { return duality_transpose_check(fr, nr); });
                    report["duality"] = {{"holds", d.holds},
                                         {"point_map", d.point_map},
                                         {"mismatches", d.mismatches},
                                         {"negative_complex", complex_json(*b.integral)}};
                    checks.add("duality_transpose", d.holds);
                } catch (const StageError& e) {
                    if (e.kind() != "duality-violation") throw;
                    report["duality"] = {{"holds", false}, {"error", e.what()}};
                    checks.add("duality_transpose", false, e.what());
                }
            }
        }

        if (cfg.check_extended) {
            stage("loop-homology", [&] {
                std::optional<PontryaginRing> ring;
                std::string ring_note;
                if (cfg.ring) {
                    ring = make_ring(*cfg.ring, cfg.degree_cap);
                } else if (manifold->catalog_tag()) {
                    try {
                        ring = make_ring(*manifold->catalog_tag(), cfg.degree_cap);
                    } catch (const UnsupportedManifoldError&) {
                        ring_note = "no Pontryagin table for this manifold; ground ring Z/2 in degree 0";
                    }
                } else {
                    ring_note = "custom manifold without 'ring'; ground ring Z/2 in degree 0";
                }
                if (!ring) ring = PontryaginRing::ground(cfg.degree_cap);

                const bool single_sphere =
                    manifold->catalog_tag() && manifold->catalog_tag()->kind == CatalogTag::Kind::Sphere;
                std::map<std::pair<int, int>, ModuliSample> samples;
                std::map<std::pair<int, int>, std::string> sample_errors;
                auto lookup = [&](const CriticalPoint& P, const CriticalPoint& Q) -> std::optional<RingElement> {
                    if (auto c = config_class(cfg.loop_classes, *ring, P.id, Q.id)) return c;
                    const auto key = std::make_pair(P.id, Q.id);
                    if (P.index - Q.index == 1) {
                        auto it = a.enumerations.find(key);
                        if (it == a.enumerations.end())
                            it = a.enumerations
                                     .emplace(key, enumerate_orbits_zero_dim(rf, a.points, P, Q, cfg.resolution, cfg.flow))
                                     .first;
                        return gap_one_class(*ring, it->second.orbits.size());
                    }
                    auto it = samples.find(key);
                    if (it == samples.end()) {
                        try {
                            it = samples.emplace(key, sample_moduli(rf, a.points, P, Q, cfg.moduli_samples, cfg.seed, cfg.flow))
                                     .first;
                        } catch (const ShootingError& e) {
                            sample_errors[key] = e.what();
                            return std::nullopt;
                        }
                    }
                    const auto& s = it->second;
                    if (!s.swept_factor && single_sphere) return ring->zero();
                    return assign_loop_class(s, *ring);
                };

                json ext;
                ext["ring_tables"] = ring_json(*ring);
                if (!ring_note.empty()) ext["ring_note"] = ring_note;
                const auto axioms = check_ring_axioms(*ring);
                checks.add("ring_axioms", axioms.failures.empty(),
                           axioms.failures.empty() ? "" : axioms.failures.front());
                try {
                    auto c = build_extended_complex(a.points, *ring, lookup);
                    ext["complex"] = extended_json(c, *ring);
                    checks.add("extended_d_squared_zero", true);
                    if (is_self_indexed(c, a.points) && a.mod2) {
                        auto mismatches = augmentation_mismatches(c, *ring, a.points, *a.mod2);
                        checks.add("augmentation_matches_classical", mismatches.empty(),
                                   mismatches.empty() ? "" : mismatches.front());
                    } else {
                        ext["augmentation"] = "not applicable: level structure is not self-indexed";
                    }
                } catch (const ExtendedInconsistencyError& e) {
                    ext["error"] = e.what();
                    checks.add("extended_d_squared_zero", false, e.what());
                }
                json moduli = json::array();
                for (const auto& [key, s] : samples) {
                    json m{{"upper", key.first},
                           {"lower", key.second},
                           {"dimension", s.dimension},
                           {"shoot_side", side_name(s.side)},
                           {"samples", s.sample_count},
                           {"hits", s.hit_parameters.size()},
                           {"component_count", s.component_count},
                           {"cluster_radius", s.cluster_radius}};
                    m["swept_factor"] = s.swept_factor ? json(*s.swept_factor) : json(nullptr);
                    m["swept_label"] = s.swept_label ? json(*s.swept_label) : json(nullptr);
                    moduli.push_back(m);
                }
                for (const auto& [key, msg] : sample_errors)
                    moduli.push_back({{"upper", key.first}, {"lower", key.second}, {"error", msg}});
                ext["moduli"] = moduli;
                report["extended_complex"] = ext;
                return 0;
            });
        }
    }

    if (cfg.synthetic) {
        stage("loop-homology", [&] {
            const auto ring = make_ring(cfg.synthetic->ring, cfg.degree_cap);
            std::vector<CriticalPoint> pts;
            for (const auto& sp : cfg.synthetic->points) {
                CriticalPoint p;
                p.id = sp.id;
                p.value = sp.value;
                p.index = sp.index;
                p.location = VectorXd::Constant(1, sp.id);
                pts.push_back(p);
            }
            json ext;
            ext["ring_tables"] = ring_json(ring);
            const auto axioms = check_ring_axioms(ring);
            checks.add("synthetic_ring_axioms", axioms.failures.empty());
            try {
                auto c = build_extended_complex(pts, ring, [&](const CriticalPoint& P, const CriticalPoint& Q) {
                    return config_class(cfg.synthetic->classes, ring, P.id, Q.id);
                });
                ext["complex"] = extended_json(c, ring);
                checks.add("synthetic_extended_d_squared_zero", true);
            } catch (const ExtendedInconsistencyError& e) {
                ext["error"] = e.what();
                checks.add("synthetic_extended_d_squared_zero", false, e.what());
            }
            report["synthetic_extended_complex"] = ext;
            return 0;
        });
    }

    if (!cfg.obstruction.empty()) {
        stage("obstruction-tables", [&] {
            json verdicts = json::array();
            for (const auto& q : cfg.obstruction) {
                const auto d = make_stem_element(q.k, q.delta);
                const auto dp = make_stem_element(q.k, q.delta_prime);
                const auto v = smoothing_verdict(q.k, d, dp);
                verdicts.push_back({{"k", q.k},
                                    {"group", stem_group(q.k).describe()},
                                    {"im_j", stem_group(q.k).describe_im_j()},
                                    {"delta", d.residues},
                                    {"delta_prime", dp.residues},
                                    {"verdict", to_string(v)},
                                    {"note", "conservative necessary condition via Im(J^0)"}});
            }
            report["obstruction"] = verdicts;
            return 0;
        });
    }

    report["checks"] = checks.list;
    report["passed"] = checks.passed;
    result.passed = checks.passed;
    return result;
}

}  // namespace morseflow

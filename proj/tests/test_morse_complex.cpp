#include <doctest.h>

#include "morseflow/errors.hpp"
#include "morseflow/morse_complex.hpp"

#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

using namespace morseflow;

namespace {

MorseRun full_run(const std::string& tag, const std::string& function, std::size_t vars)
{
    auto m = std::make_shared<const ImplicitManifold>(ImplicitManifold::from_catalog(CatalogTag::parse(tag)));
    RestrictedFunction f(expr::Expr::parse(function, vars), m);
    MorseRun run;
    run.manifold = tag;
    run.n = m->intrinsic_dim();
    run.points = find_critical_points(f, {});
    FlowOptions opts;
    auto pairs = consecutive_pairs(run.points, [&](const CriticalPoint& a, const CriticalPoint& b) {
        return reachable(f, run.points, a, b, opts);
    });
    std::vector<ConnectingOrbit> orbits;
    for (const auto& pr : pairs) {
        if (pr.index_gap != 1) continue;
        auto e = enumerate_orbits_zero_dim(f, run.points, run.points[static_cast<std::size_t>(pr.upper)],
                                           run.points[static_cast<std::size_t>(pr.lower)], 64, opts);
        orbits.insert(orbits.end(), e.orbits.begin(), e.orbits.end());
    }
    run.complex = build_morse_complex(run.points, orbits, run.n, Coefficients::Integers);
    return run;
}

std::vector<int> free_ranks(const GradedComplex& c)
{
    std::vector<int> out;
    for (const auto& h : homology_ranks(c)) out.push_back(h.free_rank);
    return out;
}

// gcd of all k x k minors, by cofactor expansion
std::int64_t determinant(const IntMatrix& m)
{
    if (m.rows() == 1) return m(0, 0);
    std::int64_t det = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        IntMatrix minor(m.rows() - 1, m.cols() - 1);
        for (Eigen::Index r = 1; r < m.rows(); ++r)
            for (Eigen::Index c = 0, cc = 0; c < m.cols(); ++c)
                if (c != j) minor(r - 1, cc++) = m(r, c);
        det += (j % 2 ? -1 : 1) * m(0, j) * determinant(minor);
    }
    return det;
}

std::int64_t minor_gcd(const IntMatrix& m, int k)
{
    std::int64_t g = 0;
    std::vector<Eigen::Index> rows, cols;
    std::function<void(Eigen::Index)> pick_cols;
    std::function<void(Eigen::Index)> pick_rows = [&](Eigen::Index start) {
        if (static_cast<int>(rows.size()) == k) {
            pick_cols(0);
            return;
        }
        for (Eigen::Index r = start; r < m.rows(); ++r) {
            rows.push_back(r);
            pick_rows(r + 1);
            rows.pop_back();
        }
    };
    pick_cols = [&](Eigen::Index start) {
        if (static_cast<int>(cols.size()) == k) {
            IntMatrix sub(k, k);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) sub(i, j) = m(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
            g = std::gcd(g, std::llabs(determinant(sub)));
            return;
        }
        for (Eigen::Index c = start; c < m.cols(); ++c) {
            cols.push_back(c);
            pick_cols(c + 1);
            cols.pop_back();
        }
    };
    pick_rows(0);
    return g;
}

}  // namespace

TEST_CASE("sphere complex")
{
    auto run = full_run("sphere(2)", "x3", 3);
    CHECK(run.complex.basis[0].size() == 1);
    CHECK(run.complex.basis[1].empty());
    CHECK(run.complex.basis[2].size() == 1);
    CHECK(free_ranks(run.complex) == std::vector<int>{1, 0, 1});
}

TEST_CASE("tilted torus complex over Z and Z/2")
{
    auto m = std::make_shared<const ImplicitManifold>(ImplicitManifold::from_catalog(CatalogTag::torus(2, 1)));
    RestrictedFunction f(expr::Expr::parse("x3 + 0.05*x1", 3), m);
    auto pts = find_critical_points(f, {});
    std::vector<ConnectingOrbit> orbits;
    for (const auto& P : pts)
        for (const auto& Q : pts)
            if (P.index - Q.index == 1) {
                auto e = enumerate_orbits_zero_dim(f, pts, P, Q, 64, {});
                orbits.insert(orbits.end(), e.orbits.begin(), e.orbits.end());
            }
    REQUIRE(orbits.size() == 8);
    for (auto coeffs : {Coefficients::Integers, Coefficients::Mod2}) {
        auto c = build_morse_complex(pts, orbits, 2, coeffs);
        CHECK(c.differentials[2] == IntMatrix::Zero(2, 1));
        CHECK(c.differentials[1] == IntMatrix::Zero(1, 2));
        CHECK(free_ranks(c) == std::vector<int>{1, 2, 1});
        for (const auto& h : homology_ranks(c)) CHECK(h.torsion.empty());
    }

    // a missed orbit on each of max -> s and s -> min leaves d o d = +-1
    const int saddle = pts[1].id;
    std::vector<ConnectingOrbit> partial;
    bool dropped_upper = false, dropped_lower = false;
    for (const auto& o : orbits) {
        if (!dropped_upper && o.q_id == saddle) {
            dropped_upper = true;
            continue;
        }
        if (!dropped_lower && o.p_id == saddle) {
            dropped_lower = true;
            continue;
        }
        partial.push_back(o);
    }
    CHECK_THROWS_AS(build_morse_complex(pts, partial, 2, Coefficients::Integers), ComplexInconsistencyError);
}

TEST_CASE("zero complex homology")
{
    GradedComplex c;
    c.basis = {{0}, {1, 2, 3}, {4}};
    c.differentials = {IntMatrix::Zero(0, 1), IntMatrix::Zero(1, 3), IntMatrix::Zero(3, 1)};
    CHECK(free_ranks(c) == std::vector<int>{1, 3, 1});
}

TEST_CASE("torsion from the Smith normal form")
{
    // RP^2-like cell complex: D_2 = (2), D_1 = 0
    GradedComplex c;
    c.basis = {{0}, {1}, {2}};
    c.differentials = {IntMatrix::Zero(0, 1), IntMatrix::Zero(1, 1), IntMatrix::Constant(1, 1, 2)};
    auto h = homology_ranks(c);
    CHECK(h[0].free_rank == 1);
    CHECK(h[1].free_rank == 0);
    CHECK(h[1].torsion == std::vector<std::int64_t>{2});
    CHECK(h[2].free_rank == 0);
    c.coefficients = Coefficients::Mod2;
    CHECK(free_ranks(c) == std::vector<int>{1, 1, 1});
}

TEST_CASE("property: Smith invariants match determinantal divisors")
{
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> entry(-6, 6), size(1, 4);
    for (int trial = 0; trial < 300; ++trial) {
        IntMatrix m(size(rng), size(rng));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = entry(rng);
        auto inv = smith_invariants(m);
        std::int64_t prefix = 1;
        for (int k = 1; k <= static_cast<int>(std::min(m.rows(), m.cols())); ++k) {
            const std::int64_t dk = minor_gcd(m, k);
            if (k <= static_cast<int>(inv.size())) {
                prefix *= inv[static_cast<std::size_t>(k - 1)];
                CHECK(prefix == dk);
                if (k > 1) CHECK(inv[static_cast<std::size_t>(k - 1)] % inv[static_cast<std::size_t>(k - 2)] == 0);
            } else {
                CHECK(dk == 0);
            }
        }
    }
    const std::int64_t huge = std::int64_t{1} << 62;
    IntMatrix big(2, 2);
    big << 3, huge, huge, 3;
    CHECK_THROWS_AS(smith_invariants(big), std::overflow_error);
}

TEST_CASE("duality: -f gives the flipped transpose")
{
    auto f = full_run("torus(2,1)", "x3 + 0.05*x1", 3);
    auto g = full_run("torus(2,1)", "0 - x3 - 0.05*x1", 3);
    auto report = duality_transpose_check(f, g);
    CHECK(report.holds);
    CHECK(report.point_map.size() == 4);

    auto s = full_run("sphere(2)", "x3", 3);
    auto t = full_run("sphere(2)", "0 - x3", 3);
    CHECK(duality_transpose_check(s, t).holds);

    CHECK_THROWS_AS(duality_transpose_check(f, s), PreconditionError);
    CHECK_THROWS_AS(duality_transpose_check(s, s), DualityViolationError);
}

TEST_CASE("property: d o d = 0 over 20 random torus tilts")
{
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> tilt(0.02, 0.3);
    std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
    for (int trial = 0; trial < 20; ++trial) {
        const double t = tilt(rng), a = angle(rng);
        std::ostringstream fn;
        fn.precision(17);
        auto term = [&](double c) {
            std::ostringstream os;
            os.precision(17);
            if (c < 0)
                os << "(0-" << -c << ")";
            else
                os << c;
            return os.str();
        };
        fn << "x3 + " << term(t * std::cos(a)) << "*x1 + " << term(t * std::sin(a)) << "*x2";
        auto run = full_run("torus(2,1)", fn.str(), 3);
        CHECK(run.points.size() == 4);
        verify_d_squared(run.complex);
        auto mod2 = run.complex;
        mod2.coefficients = Coefficients::Mod2;
        CHECK(free_ranks(mod2) == std::vector<int>{1, 2, 1});
    }
}

#include <doctest.h>

#include "morseflow/errors.hpp"
#include "morseflow/loop_homology.hpp"

#include <chrono>
#include <map>
#include <memory>

using namespace morseflow;

namespace {

// Coefficients of a rational generating function num/den, den(0) = 1.
std::vector<int> series(std::vector<int> num, const std::vector<int>& den, int cap)
{
    num.resize(static_cast<std::size_t>(cap) + 1, 0);
    std::vector<int> out(static_cast<std::size_t>(cap) + 1, 0);
    for (int k = 0; k <= cap; ++k) {
        int c = num[static_cast<std::size_t>(k)];
        for (int j = 1; j <= k && j < static_cast<int>(den.size()); ++j)
            c -= den[static_cast<std::size_t>(j)] * out[static_cast<std::size_t>(k - j)];
        out[static_cast<std::size_t>(k)] = c;
    }
    return out;
}

std::vector<int> product_series(const std::vector<int>& a, const std::vector<int>& b)
{
    std::vector<int> out(a.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; i + j < a.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

CriticalPoint fake_point(int id, double value, int index)
{
    CriticalPoint p;
    p.id = id;
    p.value = value;
    p.index = index;
    p.location = VectorXd::Constant(1, id);
    return p;
}

}  // namespace

TEST_CASE("sphere(3) ring")
{
    auto r = make_ring(CatalogTag::sphere(3), 8);
    std::vector<std::string> names;
    for (int i = 0; i < static_cast<int>(r.basis().size()); ++i) names.push_back(r.monomial_name(i));
    CHECK(names == std::vector<std::string>{"1", "x2", "x2^2", "x2^3", "x2^4"});
    auto x = r.generator("x2");
    CHECK(r.format(r.multiply(x, x)) == "x2^2");
    CHECK(r.poincare_series() == series({1}, {1, 0, -1}, 8));
    CHECK(make_ring(CatalogTag::sphere(3)).poincare_series() == series({1}, {1, 0, -1}, 12));
}

TEST_CASE("product of two 2-spheres")
{
    auto r = make_ring(CatalogTag::parse("product(sphere(2),sphere(2))"));
    auto a = r.generator("a");
    auto b = r.generator("b");
    CHECK(r.degree_of(a) == 1);
    CHECK(r.multiply(a, b) == r.multiply(b, a));
    auto s = r.sum(a, b);
    CHECK(r.format(r.multiply(s, s)) == "a^2 + b^2");
    CHECK(r.multiply(r.unit(), s) == s);
    // tensor-ring oracle: series of the product is the product of the series
    auto one = series({1}, {1, -1}, 12);
    CHECK(r.poincare_series() == product_series(one, one));
    CHECK(r.parse("a*b + b^2") == r.sum(r.multiply(a, b), r.multiply(b, b)));
}

TEST_CASE("cpn(2) ring")
{
    auto r = make_ring(CatalogTag::cpn(2));
    auto u = r.generator("u");
    auto v = r.generator("v");
    CHECK(r.multiply(u, u).is_zero());
    CHECK(r.degree_of(v) == 4);
    CHECK(r.poincare_series() == series({1, 1}, {1, 0, 0, 0, -1}, 12));
}

TEST_CASE("ring axioms hold exhaustively and quickly")
{
    const auto start = std::chrono::steady_clock::now();
    for (auto tag : {"sphere(3)", "product(sphere(2),sphere(2))", "cpn(2)"}) {
        auto r = make_ring(CatalogTag::parse(tag));
        auto report = check_ring_axioms(r);
        CHECK(report.failures.empty());
        CHECK(report.triples_checked > 0);
    }
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));
}

TEST_CASE("cap and unsupported tags")
{
    auto r = make_ring(CatalogTag::sphere(3), 4);
    auto x = r.generator("x2");
    CHECK_THROWS_AS(r.multiply(r.multiply(x, x), x), CapExceededError);
    CHECK_THROWS_AS(make_ring(CatalogTag::torus(2, 1)), UnsupportedManifoldError);
    CHECK_THROWS_AS(make_ring(CatalogTag::sphere(1)), UnsupportedManifoldError);
    CHECK_THROWS_AS(make_ring(CatalogTag::parse("product(sphere(1),sphere(1))")), UnsupportedManifoldError);
    CHECK_THROWS_AS(r.parse("y"), ConfigError);
}

TEST_CASE("loop classes")
{
    auto r = make_ring(CatalogTag::parse("product(sphere(2),sphere(2))"));
    CHECK(gap_one_class(r, 2).is_zero());
    CHECK(gap_one_class(r, 3) == r.unit());

    ModuliSample m;
    m.dimension = 1;
    m.component_count = 1;
    m.swept_factor = 2;
    CHECK(assign_loop_class(m, r) == r.generator("b"));
    m.component_count = 0;
    CHECK(assign_loop_class(m, r).is_zero());
    m.component_count = 1;
    m.swept_factor.reset();
    CHECK_THROWS_AS(assign_loop_class(m, r), ClassUnknownError);
}

TEST_CASE("S2 x S2 extended complex from the geometric pipeline")
{
    auto manifold = std::make_shared<const ImplicitManifold>(
        ImplicitManifold::from_catalog(CatalogTag::parse("product(sphere(2),sphere(2))")));
    RestrictedFunction f(expr::Expr::parse("x3 + x6", 6), manifold);
    auto pts = find_critical_points(f, {});
    REQUIRE(pts.size() == 4);
    auto ring = make_ring(*manifold->catalog_tag());
    std::map<std::pair<int, int>, RingElement> classes;
    auto lookup = [&](const CriticalPoint& P, const CriticalPoint& Q) -> std::optional<RingElement> {
        auto s = sample_moduli(f, pts, P, Q, 64, 1, {});
        auto cls = assign_loop_class(s, ring);
        classes[{P.id, Q.id}] = cls;
        return cls;
    };
    auto c = build_extended_complex(pts, ring, lookup);
    CHECK(c.levels.size() == 3);
    REQUIRE(c.composites.size() == 1);
    CHECK(c.composites[0].value.is_zero());

    // Q1 = (N, S) sweeps factor 2: d'(P) = b Q1 + a Q2, d'(Q1) = a R, d'(Q2) = b R
    const auto& P = pts[0];
    const auto& R = pts[3];
    for (int k : {1, 2}) {
        const auto& Q = pts[static_cast<std::size_t>(k)];
        const bool first_north = Q.location[2] > 0;
        CHECK(ring.format(classes.at({P.id, Q.id})) == (first_north ? "b" : "a"));
        CHECK(ring.format(classes.at({Q.id, R.id})) == (first_north ? "a" : "b"));
    }
    CHECK(is_self_indexed(c, pts));
    GradedComplex classical = build_morse_complex(pts, {}, 4, Coefficients::Mod2);
    CHECK(augmentation_mismatches(c, ring, pts, classical).empty());
}

TEST_CASE("synthetic cpn(2) complex")
{
    auto ring = make_ring(CatalogTag::cpn(2));
    std::vector<CriticalPoint> pts = {fake_point(0, 4, 4), fake_point(1, 2, 2), fake_point(2, 0, 0)};
    auto u = ring.generator("u");
    auto c = build_extended_complex(pts, ring, [&](const CriticalPoint&, const CriticalPoint&) { return u; });
    REQUIRE(c.composites.size() == 1);
    CHECK(c.composites[0].value.is_zero());

    // the same pattern with a polynomial generator would not be a complex
    auto s = make_ring(CatalogTag::sphere(2));
    auto x = s.generator("x1");
    CHECK_THROWS_AS(build_extended_complex(pts, s, [&](const CriticalPoint&, const CriticalPoint&) { return x; }),
                    ExtendedInconsistencyError);
    auto v = ring.generator("v");
    CHECK_THROWS_AS(build_extended_complex(pts, ring, [&](const CriticalPoint&, const CriticalPoint&) { return v; }),
                    DegreeMismatchError);
    CHECK_THROWS_AS(build_extended_complex(pts, ring,
                                           [&](const CriticalPoint&, const CriticalPoint&) -> std::optional<RingElement> {
                                               return std::nullopt;
                                           }),
                    ClassUnknownError);
}

TEST_CASE("sphere height extended complex is trivially a complex")
{
    auto ring = make_ring(CatalogTag::sphere(2));
    std::vector<CriticalPoint> pts = {fake_point(0, 1, 2), fake_point(1, -1, 0)};
    auto c = build_extended_complex(pts, ring, [&](const CriticalPoint&, const CriticalPoint&) {
        return ring.zero();
    });
    CHECK(c.entries.size() == 1);
    CHECK(c.composites.empty());
}

#include <doctest.h>

#include "morseflow/errors.hpp"
#include "morseflow/flowlines.hpp"

#include <cmath>
#include <memory>
#include <sstream>

using namespace morseflow;

namespace {

std::shared_ptr<const ImplicitManifold> catalog(const std::string& tag)
{
    return std::make_shared<const ImplicitManifold>(ImplicitManifold::from_catalog(CatalogTag::parse(tag)));
}

VectorXd vec(std::initializer_list<double> v)
{
    VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

struct Setup {
    RestrictedFunction f;
    std::vector<CriticalPoint> points;

    Setup(const std::string& tag, const std::string& function, std::size_t vars)
        : f(expr::Expr::parse(function, vars), catalog(tag)), points(find_critical_points(f, {}))
    {
    }
};

Setup& torus()
{
    static Setup s("torus(2,1)", "x3 + 0.05*x1", 3);
    return s;
}

void check_monotone(const RestrictedFunction& f, const FlowTrajectory& t, bool descending = true)
{
    for (std::size_t i = 1; i < t.points.size(); ++i) {
        const double df = f.value(t.points[i]) - f.value(t.points[i - 1]);
        CHECK((descending ? df : -df) <= 1e-12);
        CHECK(f.manifold().constraint_values(t.points[i]).norm() <= 1e-12);
    }
}

}  // namespace

TEST_CASE("meridian flow on the sphere")
{
    Setup s("sphere(2)", "x3", 3);
    const double theta = 0.1;
    auto t = flow_to_limit(s.f, vec({std::sin(theta), 0, std::cos(theta)}), s.points, {});
    CHECK(t.stop == FlowStop::Converged);
    REQUIRE(t.end_id);
    CHECK(*t.end_id == 1);
    CHECK((t.points.back() - vec({0, 0, -1})).norm() < 1e-4);
    // the meridian stays in the xz-plane; the polyline is a chord
    // approximation of the arc of length pi - theta
    for (const auto& p : t.points) CHECK(std::abs(p[1]) < 1e-14);
    CHECK(t.arc_length <= M_PI - theta);
    CHECK(t.arc_length >= M_PI - theta - 1e-3);
    check_monotone(s.f, t);

    auto still = flow_to_limit(s.f, vec({0, 0, 1}), s.points, {});
    CHECK(still.points.size() == 1);
    REQUIRE(still.end_id);
    CHECK(*still.end_id == 0);

    CHECK_THROWS_AS(flow_to_limit(s.f, vec({0, 0, 1.1}), s.points, {}), PreconditionError);
}

TEST_CASE("generic torus flows end at the minimum")
{
    auto& s = torus();
    const int min_id = s.points.back().id;
    for (double theta : {0.3, 1.7, 2.9, 4.4}) {
        for (double phi : {0.5, 2.0, 4.0}) {
            VectorXd x = vec({(2 + std::cos(phi)) * std::cos(theta), (2 + std::cos(phi)) * std::sin(theta), std::sin(phi)});
            auto t = flow_to_limit(s.f, s.f.manifold().retract(x), s.points, {});
            REQUIRE(t.end_id);
            CHECK(*t.end_id == min_id);
            check_monotone(s.f, t);
        }
    }
}

TEST_CASE("shooting plan picks the smaller hit codimension")
{
    CHECK(plan_shooting(2, 2, 1).side == ShootSide::StableOfLower);
    CHECK(plan_shooting(2, 2, 1).sphere_dim == 0);
    CHECK(plan_shooting(2, 1, 0).side == ShootSide::UnstableOfUpper);
    CHECK(plan_shooting(3, 2, 1).sphere_dim == 1);
    CHECK(plan_shooting(3, 2, 1).hit_codim == 1);
    CHECK(plan_shooting(4, 4, 2).hit_codim == 0);
}

TEST_CASE("tilted torus: two orbits of opposite sign per gap-one pair")
{
    auto& s = torus();
    FlowOptions opts;
    for (const auto& P : s.points) {
        for (const auto& Q : s.points) {
            if (P.index - Q.index != 1) continue;
            auto res = enumerate_orbits_zero_dim(s.f, s.points, P, Q, 4096, opts);
            REQUIRE(res.orbits.size() == 2);
            CHECK(res.orbits[0].sign + res.orbits[1].sign == 0);
            CHECK(res.warnings.empty());
            for (const auto& o : res.orbits) {
                const auto& t = o.trajectory;
                CHECK((t.points.front() - P.location).norm() <= 1.01 * opts.r_shoot + 1e-6);
                CHECK((t.points.back() - Q.location).norm() <= opts.arrival_radius + 1e-9);
                CHECK(t.times.front() == 0.0);
                check_monotone(s.f, t);
                // enters no other index-q arrival ball
                for (const auto& X : s.points) {
                    if (X.id == Q.id || X.index != Q.index) continue;
                    for (const auto& p : t.points) CHECK((p - X.location).norm() > opts.arrival_radius);
                }
            }
        }
    }
}

TEST_CASE("torus orbit counts are stable across resolutions")
{
    auto& s = torus();
    const auto& P = s.points[0];
    const auto& Q = s.points[1];
    for (std::size_t res : {8u, 64u, 512u}) {
        auto r = enumerate_orbits_zero_dim(s.f, s.points, P, Q, res, {});
        CHECK(r.orbits.size() == 2);
        int total = 0;
        for (const auto& o : r.orbits) total += o.sign;
        CHECK(total == 0);
    }
}

TEST_CASE("index gap two is a precondition violation")
{
    Setup s("sphere(2)", "x3", 3);
    CHECK_THROWS_AS(enumerate_orbits_zero_dim(s.f, s.points, s.points[0], s.points[1], 64, {}), PreconditionError);
}

TEST_CASE("frame comparison with itself is positive")
{
    auto& s = torus();
    for (const auto& p : s.points) {
        if (p.index == 0) continue;
        CHECK(frame_orientation_sign(p.unstable_frame, p.unstable_frame) == 1);
    }
    MatrixXd a = MatrixXd::Identity(2, 2);
    MatrixXd b(2, 2);
    b << 0, 1, 1, 0;
    CHECK(frame_orientation_sign(a, b) == -1);
    MatrixXd c(2, 2);
    c << 1, 1, 0, 1e-8;
    CHECK_THROWS_AS(frame_orientation_sign(a, c), SignIndeterminateError);
}

TEST_CASE("circle scan on the three-torus")
{
    // T^3 = S^1 x S^1 x S^1, f = x2 + x4 + x6: 8 critical points, each factor
    // at (0, +-1). Index 2 -> 1 pairs need a scan of a shooting circle. Two
    // points differing in one factor are joined by exactly the two arcs of
    // that circle; all other gap-one pairs have no orbits.
    Setup s("product(sphere(1),sphere(1),sphere(1))", "x2 + x4 + x6", 6);
    REQUIRE(s.points.size() == 8);
    int checked = 0;
    for (const auto& P : s.points) {
        if (P.index != 2) continue;
        for (const auto& Q : s.points) {
            if (Q.index != 1) continue;
            auto r = enumerate_orbits_zero_dim(s.f, s.points, P, Q, 64, {});
            CHECK(r.plan.sphere_dim == 1);
            int differing = 0;
            for (int k = 0; k < 3; ++k)
                differing += std::abs(P.location[2 * k + 1] - Q.location[2 * k + 1]) > 1 ? 1 : 0;
            CHECK(r.orbits.size() == (differing == 1 ? 2u : 0u));
            if (r.orbits.size() == 2) CHECK(r.orbits[0].sign + r.orbits[1].sign == 0);
            ++checked;
        }
    }
    CHECK(checked == 9);
}

TEST_CASE("moduli of the product of spheres")
{
    Setup s("product(sphere(2),sphere(2))", "x3 + x6", 6);
    REQUIRE(s.points.size() == 4);
    const auto& max = s.points[0];
    const auto& min = s.points[3];
    for (int k : {1, 2}) {
        const auto& Q = s.points[static_cast<std::size_t>(k)];
        REQUIRE(Q.index == 2);
        auto m = sample_moduli(s.f, s.points, max, Q, 64, 7, {});
        CHECK(m.dimension == 1);
        CHECK(m.component_count == 1);
        // Q at (N, S) lies in {N} x S^2: the second factor is swept
        const int expected = Q.location[2] > 0 ? 2 : 1;
        REQUIRE(m.swept_factor);
        CHECK(*m.swept_factor == expected);
        CHECK(*m.swept_label == "factor-" + std::to_string(expected) + " sphere");

        auto lower = sample_moduli(s.f, s.points, Q, min, 64, 7, {});
        CHECK(lower.component_count == 1);
    }
    CHECK_THROWS_AS(sample_moduli(s.f, s.points, s.points[1], s.points[2], 64, 7, {}), PreconditionError);
}

TEST_CASE("reachability probe")
{
    auto& s = torus();
    FlowOptions opts;
    CHECK(reachable(s.f, s.points, s.points[0], s.points[1], opts));
    CHECK(reachable(s.f, s.points, s.points[0], s.points[2], opts));
    CHECK(reachable(s.f, s.points, s.points[1], s.points[3], opts));
    CHECK_FALSE(reachable(s.f, s.points, s.points[1], s.points[2], opts));
    CHECK_FALSE(reachable(s.f, s.points, s.points[3], s.points[0], opts));

    Setup p("product(sphere(2),sphere(2))", "x3 + x6", 6);
    CHECK(reachable(p.f, p.points, p.points[0], p.points[1], opts));
    CHECK(reachable(p.f, p.points, p.points[1], p.points[3], opts));
    CHECK_FALSE(reachable(p.f, p.points, p.points[1], p.points[2], opts));
    auto pairs = consecutive_pairs(p.points, [&](const CriticalPoint& a, const CriticalPoint& b) {
        return reachable(p.f, p.points, a, b, opts);
    });
    CHECK(pairs.size() == 4);
}

TEST_CASE("flow-line CSV export")
{
    auto& s = torus();
    auto r = enumerate_orbits_zero_dim(s.f, s.points, s.points[1], s.points[3], 64, {});
    std::ostringstream os;
    write_flowlines_csv(os, "run", r.orbits, 3);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "run_id,orbit_id,t_index,x1,x2,x3");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == r.orbits[0].trajectory.points.size() + r.orbits[1].trajectory.points.size());
}

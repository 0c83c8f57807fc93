#include <doctest.h>

#include "morseflow/errors.hpp"
#include "morseflow/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <memory>
#include <random>

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

// Analytic torus parametrization (independent of the implicit machinery).
VectorXd torus_point(double R, double r, double theta, double phi)
{
    return vec({(R + r * std::cos(phi)) * std::cos(theta), (R + r * std::cos(phi)) * std::sin(theta),
                r * std::sin(phi)});
}

VectorXd torus_closest(double R, double r, const VectorXd& q)
{
    const double rho = std::hypot(q[0], q[1]);
    VectorXd c = vec({R * q[0] / rho, R * q[1] / rho, 0.0});
    VectorXd d = q - c;
    return c + r * d / d.norm();
}

}  // namespace

TEST_CASE("catalog tags parse, print and carry Betti numbers")
{
    auto t = CatalogTag::parse("product(sphere(2), sphere(2))");
    CHECK(t.to_string() == "product(sphere(2),sphere(2))");
    CHECK(t.dimension() == 4);
    CHECK(t.ambient_dimension() == 6);
    CHECK(t.mod2_betti() == std::vector<int>{1, 0, 2, 0, 1});
    CHECK(CatalogTag::parse("torus(2,1)").mod2_betti() == std::vector<int>{1, 2, 1});
    CHECK(CatalogTag::parse("cpn(2)").mod2_betti() == std::vector<int>{1, 0, 1, 0, 1});
    CHECK(CatalogTag::parse("product(sphere(1),sphere(1),sphere(1))").mod2_betti() == std::vector<int>{1, 3, 3, 1});
    CHECK_THROWS_AS(CatalogTag::parse("klein(2)"), UnsupportedManifoldError);
    CHECK_THROWS_AS(ImplicitManifold::from_catalog(CatalogTag::cpn(2)), UnsupportedManifoldError);

    auto m = ImplicitManifold::from_catalog(t);
    CHECK(m.ambient_dim() == 6);
    CHECK(m.codim() == 2);
    CHECK(m.intrinsic_dim() == 4);
    REQUIRE(m.factors().size() == 2);
    CHECK(m.factors()[1].offset == 3);
}

TEST_CASE("tangent projector")
{
    auto sphere = catalog("sphere(2)");
    MatrixXd P = sphere->tangent_projector(vec({0, 0, 1}));
    CHECK((P - Eigen::Vector3d(1, 1, 0).asDiagonal().toDenseMatrix()).norm() < 1e-14);

    auto torus = catalog("torus(2,1)");
    MatrixXd T = torus->tangent_projector(vec({3, 0, 0}));
    CHECK((T * vec({1, 0, 0})).norm() < 1e-14);
    CHECK((T * vec({0, 1, 0}) - vec({0, 1, 0})).norm() < 1e-14);
    CHECK((T * vec({0, 0, 1}) - vec({0, 0, 1})).norm() < 1e-14);

    CHECK_THROWS_AS(sphere->tangent_projector(vec({0, 0, 0})), SingularConstraintError);
    CHECK_THROWS_AS(sphere->tangent_projector(vec({0, 0, 1.01})), PreconditionError);
}

TEST_CASE("retraction")
{
    auto sphere = catalog("sphere(2)");
    VectorXd y = sphere->retract(vec({0, 0, 1.1}));
    CHECK((y - vec({0, 0, 1})).norm() < 1e-12);
    CHECK_THROWS_AS(sphere->retract(vec({0, 0, 5})), RetractionError);

    auto torus = catalog("torus(2,1)");
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
    for (int k = 0; k < 50; ++k) {
        VectorXd p = torus_point(2, 1, angle(rng), angle(rng));
        VectorXd dir = vec({std::cos(angle(rng)), std::sin(angle(rng)), std::cos(angle(rng))}).normalized();
        VectorXd q = p + 1e-3 * dir;
        VectorXd r = torus->retract(q);
        CHECK(torus->constraint_values(r).norm() <= 1e-12);
        CHECK((r - q).norm() <= 2e-3);
        // first-order retraction agrees with the exact closest point to O(d^2)
        CHECK((r - torus_closest(2, 1, q)).norm() <= 1e-5);
    }
}

TEST_CASE("restricted gradient and Hessian")
{
    auto sphere = catalog("sphere(2)");
    RestrictedFunction height(expr::Expr::parse("x3", 3), sphere);
    auto top = height.grad_hess(vec({0, 0, 1}));
    CHECK(top.gradient.norm() < 1e-15);
    CHECK((top.hessian + MatrixXd::Identity(2, 2)).norm() < 1e-14);
    auto side = height.grad_hess(vec({1, 0, 0}));
    CHECK((side.gradient - vec({0, 0, 1})).norm() < 1e-15);

    // tilted torus height: maximum located analytically at theta = 0,
    // tan(phi) = 1 / tilt (outward normal parallel to (tilt, 0, 1))
    auto torus = catalog("torus(2,1)");
    RestrictedFunction tilted(expr::Expr::parse("x3 + 0.1*x1", 3), torus);
    VectorXd top_t = torus_point(2, 1, 0.0, std::atan2(1.0, 0.1));
    auto d = tilted.grad_hess(top_t);
    CHECK(d.gradient.norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(d.hessian);
    CHECK(eig.eigenvalues().maxCoeff() < 0.0);
}

TEST_CASE("property: projector annihilates normals, gradient matches retracted finite differences")
{
    auto torus = catalog("torus(2,1)");
    RestrictedFunction f(expr::Expr::parse("x3 + 0.05*x1 + 0.3*sin(x2)*x1", 3), torus);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
    std::normal_distribution<double> gauss;
    for (int k = 0; k < 200; ++k) {
        VectorXd x = torus->retract(torus_point(2, 1, angle(rng), angle(rng)));
        MatrixXd P = torus->tangent_projector(x);
        MatrixXd J = torus->constraint_jacobian(x);
        CHECK((P * J.transpose()).norm() <= 1e-9);
        CHECK((P * P - P).norm() <= 1e-9);

        auto d = f.grad_hess(x);
        CHECK((d.hessian - d.hessian.transpose()).norm() <= 1e-9);

        VectorXd v = P * vec({gauss(rng), gauss(rng), gauss(rng)});
        v.normalize();
        const double h = 1e-6;
        const double fd = (f.value(torus->retract(x + h * v)) - f.value(torus->retract(x - h * v))) / (2 * h);
        CHECK(std::abs(fd - d.gradient.dot(v)) <= 1e-6);
    }
}

TEST_CASE("products concatenate coordinates and constraints")
{
    auto m = catalog("product(sphere(2),sphere(2))");
    VectorXd x = vec({0, 0, 1.05, 0.98, 0, 0});
    VectorXd y = m->retract(x);
    CHECK((y - vec({0, 0, 1, 1, 0, 0})).norm() < 1e-12);
    auto ts = m->tangent_space(y);
    CHECK(ts.tangent_basis.cols() == 4);
}

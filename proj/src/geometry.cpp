#include "morseflow/geometry.hpp"

#include "morseflow/errors.hpp"

#include <cmath>
#include <span>
#include <sstream>

namespace morseflow {

namespace {

std::string format_point(const VectorXd& x)
{
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

std::span<const double> as_span(const VectorXd& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

struct CatalogPresentation {
    std::vector<expr::Expr> constraints;
    std::vector<FactorBlock> factors;
    std::vector<std::pair<double, double>> box;
};

// Presentation of a single (non-product) catalog factor over `dim`
// ambient variables, placed at `offset`.
void present(const CatalogTag& tag, std::size_t offset, std::size_t dim, CatalogPresentation& out)
{
    using expr::Expr;
    switch (tag.kind) {
    case CatalogTag::Kind::Sphere: {
        const auto m = static_cast<std::size_t>(tag.n) + 1;
        Expr g = Expr::constant(-1.0, dim);
        for (std::size_t i = 0; i < m; ++i) g = pow(Expr::variable(offset + i, dim), 2) + g;
        out.constraints.push_back(g);
        out.factors.push_back({offset, m, tag.to_string()});
        for (std::size_t i = 0; i < m; ++i) out.box.emplace_back(-1.5, 1.5);
        return;
    }
    case CatalogTag::Kind::Torus: {
        // (sqrt(x^2 + y^2) - R)^2 + z^2 - r^2
        Expr x = Expr::variable(offset, dim);
        Expr y = Expr::variable(offset + 1, dim);
        Expr z = Expr::variable(offset + 2, dim);
        Expr rho = sqrt(pow(x, 2) + pow(y, 2));
        Expr g = pow(rho - Expr::constant(tag.major, dim), 2) + pow(z, 2) -
                 Expr::constant(tag.minor * tag.minor, dim);
        out.constraints.push_back(g);
        out.factors.push_back({offset, 3, tag.to_string()});
        const double outer = 1.2 * (tag.major + tag.minor);
        out.box.emplace_back(-outer, outer);
        out.box.emplace_back(-outer, outer);
        out.box.emplace_back(-1.2 * tag.minor, 1.2 * tag.minor);
        return;
    }
    case CatalogTag::Kind::Cpn:
        throw UnsupportedManifoldError("cpn(" + std::to_string(tag.n) +
                                       ") has no geometric presentation; use it in an algebraic extended complex");
    case CatalogTag::Kind::Product: {
        std::size_t at = offset;
        for (const auto& f : tag.factors) {
            present(f, at, dim, out);
            at += static_cast<std::size_t>(f.ambient_dimension());
        }
        return;
    }
    }
}

}  // namespace

ImplicitManifold::ImplicitManifold(std::size_t ambient_dim, std::vector<expr::Expr> constraints,
                                   std::optional<std::vector<int>> reference_betti)
    : ambient_dim_(ambient_dim), constraints_(std::move(constraints)), betti_(std::move(reference_betti))
{
    if (constraints_.size() >= ambient_dim_)
        throw PreconditionError("need fewer constraints than ambient dimensions");
    for (const auto& g : constraints_) {
        if (g.n_vars() != ambient_dim_)
            throw PreconditionError("constraint dimension does not match ambient dimension");
        constraint_derivatives_.push_back(expr::derivatives(g));
        constraint_gradients_.push_back(constraint_derivatives_.back().gradient);
    }
    if (betti_ && betti_->size() != intrinsic_dim() + 1)
        throw PreconditionError("reference_betti must list b_0..b_n");
    factors_.push_back({0, ambient_dim_, "M"});
    box_.assign(ambient_dim_, {-2.0, 2.0});
}

ImplicitManifold ImplicitManifold::from_catalog(const CatalogTag& tag)
{
    const int ambient = tag.ambient_dimension();
    if (ambient == 0)
        throw UnsupportedManifoldError(tag.to_string() + " has no geometric presentation");
    CatalogPresentation p;
    present(tag, 0, static_cast<std::size_t>(ambient), p);
    ImplicitManifold m(static_cast<std::size_t>(ambient), std::move(p.constraints), tag.mod2_betti());
    m.tag_ = tag;
    m.factors_ = std::move(p.factors);
    m.box_ = std::move(p.box);
    return m;
}

void ImplicitManifold::set_bounding_box(std::vector<std::pair<double, double>> box)
{
    if (box.size() != ambient_dim_) throw PreconditionError("bounding box dimension mismatch");
    box_ = std::move(box);
}

VectorXd ImplicitManifold::constraint_values(const VectorXd& x) const
{
    VectorXd g(static_cast<Eigen::Index>(codim()));
    for (std::size_t k = 0; k < codim(); ++k) g[static_cast<Eigen::Index>(k)] = constraints_[k].evaluate(as_span(x));
    return g;
}

MatrixXd ImplicitManifold::constraint_jacobian(const VectorXd& x) const
{
    MatrixXd J(static_cast<Eigen::Index>(codim()), static_cast<Eigen::Index>(ambient_dim_));
    for (std::size_t k = 0; k < codim(); ++k)
        for (std::size_t i = 0; i < ambient_dim_; ++i)
            J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
                constraint_gradients_[k][i].evaluate(as_span(x));
    return J;
}

MatrixXd ImplicitManifold::constraint_hessian(std::size_t k, const VectorXd& x) const
{
    const auto N = static_cast<Eigen::Index>(ambient_dim_);
    MatrixXd H(N, N);
    const auto& h = constraint_derivatives_.at(k).hessian;
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = i; j < N; ++j) {
            H(i, j) = h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].evaluate(as_span(x));
            H(j, i) = H(i, j);
        }
    return H;
}

TangentSpace ImplicitManifold::tangent_space(const VectorXd& x) const
{
    const MatrixXd J = constraint_jacobian(x);
    Eigen::JacobiSVD<MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    const double largest = sv.size() ? sv.maxCoeff() : 0.0;
    const double smallest = sv.size() ? sv.minCoeff() : 0.0;
    if (!(smallest > kRankRelativeThreshold * largest) || largest == 0.0)
        throw SingularConstraintError("constraint Jacobian is rank deficient at " + format_point(x));

    const auto N = static_cast<Eigen::Index>(ambient_dim_);
    const auto c = static_cast<Eigen::Index>(codim());
    Eigen::HouseholderQR<MatrixXd> qr(J.transpose());
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(N, N);
    TangentSpace ts;
    ts.normal_basis = Q.leftCols(c);
    ts.tangent_basis = Q.rightCols(N - c);
    ts.projector = MatrixXd::Identity(N, N) - ts.normal_basis * ts.normal_basis.transpose();
    return ts;
}

MatrixXd ImplicitManifold::tangent_projector(const VectorXd& x) const
{
    TangentSpace ts = tangent_space(x);
    const double residual = constraint_values(x).norm();
    if (residual > 10.0 * kConstraintTolerance)
        throw PreconditionError("tangent_projector: point " + format_point(x) + " is off the manifold (|g| = " +
                                std::to_string(residual) + ")");
    return ts.projector;
}

VectorXd ImplicitManifold::normal_correction(const VectorXd& x) const
{
    const MatrixXd J = constraint_jacobian(x);
    const VectorXd g = constraint_values(x);
    const MatrixXd JJt = J * J.transpose();
    Eigen::LDLT<MatrixXd> ldlt(JJt);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || JJt.diagonal().minCoeff() <= 0.0)
        throw SingularConstraintError("constraint Jacobian is rank deficient at " + format_point(x));
    return -J.transpose() * ldlt.solve(g);
}

VectorXd ImplicitManifold::retract(const VectorXd& x) const
{
    VectorXd y = x;
    VectorXd step = normal_correction(y);
    if (!(step.norm() <= kRetractionBasin))
        throw RetractionError("point " + format_point(x) + " is outside the retraction basin (distance estimate " +
                              std::to_string(step.norm()) + ")");
    for (int it = 0; it < kRetractionMaxIterations; ++it) {
        if (constraint_values(y).norm() <= kConstraintTolerance) return y;
        y += normal_correction(y);
    }
    if (constraint_values(y).norm() <= kConstraintTolerance) return y;
    throw RetractionError("retraction from " + format_point(x) + " did not converge in " +
                          std::to_string(kRetractionMaxIterations) + " iterations");
}

std::optional<VectorXd> ImplicitManifold::project_from(const VectorXd& x) const
{
    VectorXd y = x;
    try {
        for (int it = 0; it < 200; ++it) {
            VectorXd step = normal_correction(y);
            if (!step.allFinite()) return std::nullopt;
            const double len = step.norm();
            if (len <= kRetractionBasin) return retract(y);
            y += step * (0.5 / len);
        }
    } catch (const Error&) {
        return std::nullopt;
    }
    return std::nullopt;
}

RestrictedFunction::RestrictedFunction(expr::Expr f, std::shared_ptr<const ImplicitManifold> manifold)
    : f_(std::move(f)), manifold_(std::move(manifold))
{
    if (!manifold_) throw PreconditionError("restricted function needs a manifold");
    if (f_.n_vars() != manifold_->ambient_dim())
        throw PreconditionError("function dimension does not match the manifold's ambient dimension");
    derivatives_ = expr::derivatives(f_);
}

double RestrictedFunction::value(const VectorXd& x) const { return f_.evaluate(as_span(x)); }

VectorXd RestrictedFunction::ambient_gradient(const VectorXd& x) const
{
    VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        g[i] = derivatives_.gradient[static_cast<std::size_t>(i)].evaluate(as_span(x));
    return g;
}

MatrixXd RestrictedFunction::ambient_hessian(const VectorXd& x) const
{
    const auto N = x.size();
    MatrixXd H(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = i; j < N; ++j) {
            H(i, j) = derivatives_.hessian[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].evaluate(
                as_span(x));
            H(j, i) = H(i, j);
        }
    return H;
}

VectorXd RestrictedFunction::projected_gradient(const VectorXd& x) const
{
    const VectorXd df = ambient_gradient(x);
    const MatrixXd J = manifold_->constraint_jacobian(x);
    const VectorXd lambda = (J * J.transpose()).ldlt().solve(J * df);
    return df - J.transpose() * lambda;
}

RestrictedDerivatives RestrictedFunction::grad_hess(const VectorXd& x) const
{
    const TangentSpace ts = manifold_->tangent_space(x);
    const VectorXd df = ambient_gradient(x);
    const MatrixXd J = manifold_->constraint_jacobian(x);
    RestrictedDerivatives out;
    out.multipliers = (J * J.transpose()).ldlt().solve(J * df);
    out.gradient = ts.projector * df;
    MatrixXd L = ambient_hessian(x);
    for (std::size_t k = 0; k < manifold_->codim(); ++k)
        L -= out.multipliers[static_cast<Eigen::Index>(k)] * manifold_->constraint_hessian(k, x);
    MatrixXd H = ts.tangent_basis.transpose() * L * ts.tangent_basis;
    out.hessian = 0.5 * (H + H.transpose());
    out.tangent_basis = ts.tangent_basis;
    return out;
}

RestrictedFunction RestrictedFunction::negated() const { return RestrictedFunction(-f_, manifold_); }

}  // namespace morseflow

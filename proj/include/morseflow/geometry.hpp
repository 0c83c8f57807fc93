#pragma once

// Implicit submanifolds M = g^{-1}(0) of R^N and functions restricted to
// them. Everything here is a pure function of immutable inputs.

#include "morseflow/catalog.hpp"
#include "morseflow/expression.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace morseflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kConstraintTolerance = 1e-12;
inline constexpr double kRankRelativeThreshold = 1e-8;
inline constexpr double kRetractionBasin = 0.1;
inline constexpr int kRetractionMaxIterations = 50;

// A contiguous coordinate range belonging to one factor of a product.
struct FactorBlock {
    std::size_t offset = 0;
    std::size_t size = 0;
    std::string name;
};

struct TangentSpace {
    MatrixXd normal_basis;   // N x c, orthonormal
    MatrixXd tangent_basis;  // N x n, orthonormal
    MatrixXd projector;      // N x N
};

class ImplicitManifold {
public:
    ImplicitManifold(std::size_t ambient_dim, std::vector<expr::Expr> constraints,
                     std::optional<std::vector<int>> reference_betti = std::nullopt);

    // Throws UnsupportedManifoldError for tags without a geometric
    // presentation (cpn).
    static ImplicitManifold from_catalog(const CatalogTag& tag);

    std::size_t ambient_dim() const noexcept { return ambient_dim_; }
    std::size_t codim() const noexcept { return constraints_.size(); }
    std::size_t intrinsic_dim() const noexcept { return ambient_dim_ - constraints_.size(); }
    const std::vector<expr::Expr>& constraints() const noexcept { return constraints_; }
    const std::optional<CatalogTag>& catalog_tag() const noexcept { return tag_; }
    const std::optional<std::vector<int>>& reference_betti() const noexcept { return betti_; }
    const std::vector<FactorBlock>& factors() const noexcept { return factors_; }

    // Axis-aligned box used for quasi-random seeding.
    const std::vector<std::pair<double, double>>& bounding_box() const noexcept { return box_; }
    void set_bounding_box(std::vector<std::pair<double, double>> box);

    VectorXd constraint_values(const VectorXd& x) const;
    MatrixXd constraint_jacobian(const VectorXd& x) const;
    MatrixXd constraint_hessian(std::size_t k, const VectorXd& x) const;

    // Orthonormal normal/tangent bases at x; throws SingularConstraintError
    // when Jg is rank deficient. No on-manifold check.
    TangentSpace tangent_space(const VectorXd& x) const;

    // I - Jg^T (Jg Jg^T)^{-1} Jg. Requires |g(x)| <= 10 * constraint tolerance.
    MatrixXd tangent_projector(const VectorXd& x) const;

    // Newton iteration along normal directions until |g| <= 1e-12.
    // Requires x within the retraction basin (first-order distance to M
    // at most 0.1); throws RetractionError otherwise or on non-convergence.
    VectorXd retract(const VectorXd& x) const;

    // Damped Gauss-Newton projection from an arbitrary ambient point; used
    // for seeding. Returns nullopt when it does not reach M.
    std::optional<VectorXd> project_from(const VectorXd& x) const;

    // Minimal-norm Gauss-Newton correction -Jg^+ g(x).
    VectorXd normal_correction(const VectorXd& x) const;

private:
    std::size_t ambient_dim_;
    std::vector<expr::Expr> constraints_;
    std::vector<std::vector<expr::Expr>> constraint_gradients_;
    std::vector<expr::Derivatives> constraint_derivatives_;
    std::optional<CatalogTag> tag_;
    std::optional<std::vector<int>> betti_;
    std::vector<FactorBlock> factors_;
    std::vector<std::pair<double, double>> box_;
};

struct RestrictedDerivatives {
    VectorXd gradient;       // N, tangent to M
    MatrixXd hessian;        // n x n in tangent_basis coordinates
    MatrixXd tangent_basis;  // N x n
    VectorXd multipliers;    // c Lagrange multipliers
};

class RestrictedFunction {
public:
    RestrictedFunction(expr::Expr f, std::shared_ptr<const ImplicitManifold> manifold);

    const expr::Expr& function() const noexcept { return f_; }
    const ImplicitManifold& manifold() const noexcept { return *manifold_; }
    std::shared_ptr<const ImplicitManifold> manifold_ptr() const noexcept { return manifold_; }

    double value(const VectorXd& x) const;
    VectorXd ambient_gradient(const VectorXd& x) const;
    MatrixXd ambient_hessian(const VectorXd& x) const;

    // Pi(x) grad f(x), computed without rank checks (flow hot path).
    VectorXd projected_gradient(const VectorXd& x) const;

    // Projected gradient and Lagrange-corrected intrinsic Hessian
    // B^T (Hf - sum_k lambda_k Hg_k) B.
    RestrictedDerivatives grad_hess(const VectorXd& x) const;

    RestrictedFunction negated() const;

private:
    expr::Expr f_;
    std::shared_ptr<const ImplicitManifold> manifold_;
    expr::Derivatives derivatives_;
};

}  // namespace morseflow

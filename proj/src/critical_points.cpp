#include "morseflow/critical_points.hpp"

#include "morseflow/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <sstream>

namespace morseflow {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t i, int base)
{
    double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
        i /= static_cast<std::uint64_t>(base);
        f *= inv;
    }
    return r;
}

std::string format_point(const VectorXd& x)
{
    std::ostringstream os;
    os.precision(12);
    os << "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

// Scale so the largest-magnitude component is positive. Components within
// 1e-9 of the largest count as ties; the first wins.
void fix_orientation(Eigen::Ref<VectorXd> v)
{
    const double biggest = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) >= biggest - 1e-9) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

// Damped Newton (Levenberg-Marquardt) on the restricted gradient, in
// tangent coordinates with retraction; the restricted gradient is the
// Lagrange residual grad f - Jg^T lambda at the least-squares multipliers.
std::optional<VectorXd> lagrange_newton(const RestrictedFunction& rf, VectorXd x, int iterations)
{
    const ImplicitManifold& m = rf.manifold();
    try {
        double mu = 1e-4;
        auto d = rf.grad_hess(x);
        double residual = d.gradient.norm();
        for (int it = 0; it < iterations && residual > 1e-13; ++it) {
            const VectorXd g = d.tangent_basis.transpose() * d.gradient;
            const MatrixXd& H = d.hessian;
            const MatrixXd A = H.transpose() * H + mu * MatrixXd::Identity(H.rows(), H.cols());
            VectorXd step = -d.tangent_basis * A.ldlt().solve(H.transpose() * g);
            if (!step.allFinite()) return std::nullopt;
            const double len = step.norm();
            if (len > 0.3) step *= 0.3 / len;
            std::optional<VectorXd> y;
            try {
                y = m.retract(x + step);
            } catch (const RetractionError&) {
            }
            if (y) {
                auto dy = rf.grad_hess(*y);
                const double ry = dy.gradient.norm();
                if (ry < residual) {
                    x = std::move(*y);
                    d = std::move(dy);
                    residual = ry;
                    mu = std::max(mu * 0.1, 1e-14);
                    continue;
                }
            }
            mu *= 10.0;
            if (mu > 1e8) break;
        }
        // polish with the undamped intrinsic Newton step
        for (int it = 0; it < 5; ++it) {
            if (d.gradient.norm() <= 1e-13) break;
            Eigen::SelfAdjointEigenSolver<MatrixXd> eig(d.hessian);
            if (eig.eigenvalues().cwiseAbs().minCoeff() < 1e-12) break;
            VectorXd step = -d.tangent_basis * d.hessian.ldlt().solve(d.tangent_basis.transpose() * d.gradient);
            if (step.norm() > 1e-3) break;
            x = m.retract(x + step);
            d = rf.grad_hess(x);
        }
        if (rf.projected_gradient(x).norm() <= kCriticalGradientTolerance) return x;
    } catch (const Error&) {
        return std::nullopt;
    }
    return std::nullopt;
}

bool location_less(const VectorXd& a, const VectorXd& b)
{
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i] - 1e-9) return true;
        if (a[i] > b[i] + 1e-9) return false;
    }
    return false;
}

}  // namespace

CriticalPoint analyze_critical_point(const RestrictedFunction& rf, const VectorXd& location)
{
    auto d = rf.grad_hess(location);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(d.hessian);
    const VectorXd& ev = eig.eigenvalues();
    CriticalPoint cp;
    cp.location = location;
    cp.value = rf.value(location);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev[i]) < kNondegeneracyThreshold) {
            std::ostringstream os;
            os << "critical point at " << format_point(location) << " has restricted-Hessian eigenvalue " << ev[i]
               << " (threshold " << kNondegeneracyThreshold << ")";
            throw DegenerateCriticalPointError(os.str());
        }
        cp.hessian_spectrum.push_back(ev[i]);
        if (ev[i] < 0) ++cp.index;
    }
    MatrixXd frame = d.tangent_basis * eig.eigenvectors();
    for (Eigen::Index j = 0; j < frame.cols(); ++j) fix_orientation(frame.col(j));
    cp.unstable_frame = frame.leftCols(cp.index);
    cp.stable_frame = frame.rightCols(frame.cols() - cp.index);
    return cp;
}

bool canonical_less(const CriticalPoint& a, const CriticalPoint& b)
{
    if (std::abs(a.value - b.value) > kValueTieTolerance) return a.value > b.value;
    return location_less(a.location, b.location);
}

void sort_canonically(std::vector<CriticalPoint>& points)
{
    // sort by value first, then order tie groups lexicographically; doing it
    // in two passes keeps the comparator a strict weak ordering
    std::stable_sort(points.begin(), points.end(),
                     [](const CriticalPoint& a, const CriticalPoint& b) { return a.value > b.value; });
    auto group_start = points.begin();
    while (group_start != points.end()) {
        auto group_end = group_start + 1;
        while (group_end != points.end() && std::abs((group_end - 1)->value - group_end->value) <= kValueTieTolerance)
            ++group_end;
        std::stable_sort(group_start, group_end,
                         [](const CriticalPoint& a, const CriticalPoint& b) { return location_less(a.location, b.location); });
        group_start = group_end;
    }
    for (std::size_t i = 0; i < points.size(); ++i) points[i].id = static_cast<int>(i);
}

std::vector<CriticalPoint> find_critical_points(const RestrictedFunction& rf, const SearchOptions& options)
{
    if (options.budget < 100) throw PreconditionError("find_critical_points needs a budget of at least 100 seeds");
    const ImplicitManifold& m = rf.manifold();
    const std::size_t N = m.ambient_dim();
    if (N > std::size(kPrimes)) throw PreconditionError("ambient dimension too large for Halton seeding");
    const auto& box = m.bounding_box();

    // Cranley-Patterson rotation of a Halton sequence
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> shift(N);
    for (auto& s : shift) s = unit(rng);

    std::vector<VectorXd> found;
    for (std::size_t i = 0; i < options.budget; ++i) {
        VectorXd seed(static_cast<Eigen::Index>(N));
        for (std::size_t k = 0; k < N; ++k) {
            double u = radical_inverse(i + 1, kPrimes[k]) + shift[k];
            u -= std::floor(u);
            seed[static_cast<Eigen::Index>(k)] = box[k].first + u * (box[k].second - box[k].first);
        }
        auto start = m.project_from(seed);
        if (!start) continue;
        auto x = lagrange_newton(rf, *start, options.newton_iterations);
        if (!x) continue;
        bool duplicate = std::any_of(found.begin(), found.end(),
                                     [&](const VectorXd& y) { return (y - *x).norm() <= kDedupDistance; });
        if (!duplicate) found.push_back(*x);
    }

    std::vector<CriticalPoint> points;
    points.reserve(found.size());
    for (const auto& x : found) points.push_back(analyze_critical_point(rf, x));
    sort_canonically(points);
    return points;
}

std::vector<CriticalPair> consecutive_pairs(const std::vector<CriticalPoint>& points, const Reachability& reach)
{
    std::map<std::pair<int, int>, bool> memo;
    auto reaches = [&](const CriticalPoint& a, const CriticalPoint& b) {
        auto key = std::make_pair(a.id, b.id);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        bool r = reach(a, b);
        memo.emplace(key, r);
        return r;
    };

    std::vector<CriticalPair> pairs;
    for (const auto& P : points) {
        for (const auto& Q : points) {
            if (!(P.value > Q.value + kValueTieTolerance) || P.index <= Q.index) continue;
            bool broken = false;
            for (const auto& X : points) {
                if (X.id == P.id || X.id == Q.id) continue;
                if (!(P.value > X.value + kValueTieTolerance && X.value > Q.value + kValueTieTolerance)) continue;
                if (reaches(P, X) && reaches(X, Q)) {
                    broken = true;
                    break;
                }
            }
            if (!broken) pairs.push_back({P.id, Q.id, P.index - Q.index});
        }
    }
    return pairs;
}

std::vector<int> index_counts(const std::vector<CriticalPoint>& points, std::size_t n)
{
    std::vector<int> counts(n + 1, 0);
    for (const auto& p : points) counts.at(static_cast<std::size_t>(p.index)) += 1;
    return counts;
}

}  // namespace morseflow

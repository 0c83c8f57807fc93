#include "morseflow/flowlines.hpp"

#include "morseflow/errors.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace morseflow {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kMonotoneSlack = 1e-12;
constexpr double kSideZero = 1e-13;

std::string format_point(const VectorXd& x)
{
    std::ostringstream os;
    os.precision(12);
    os << "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

std::optional<int> classify(const VectorXd& x, std::span<const CriticalPoint> points, double radius)
{
    std::optional<int> best;
    double best_d = radius;
    for (const auto& p : points) {
        const double d = (p.location - x).norm();
        if (d <= best_d) {
            best_d = d;
            best = p.id;
        }
    }
    return best;
}

// Modified Gram-Schmidt; keeps the orientation of the column frame.
void orthonormalize(MatrixXd& V)
{
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        for (Eigen::Index k = 0; k < j; ++k) V.col(j) -= V.col(k).dot(V.col(j)) * V.col(k);
        const double len = V.col(j).norm();
        if (len == 0.0 || !std::isfinite(len))
            throw SignIndeterminateError("transported frame collapsed during orthonormalization");
        V.col(j) /= len;
    }
}

VectorXd circle_parameter(double angle)
{
    VectorXd u(2);
    u << std::cos(angle), std::sin(angle);
    return u;
}

// Everything needed to shoot from one critical point's unstable or stable
// sphere toward another critical point.
struct Shooter {
    const RestrictedFunction& rf;
    std::span<const CriticalPoint> points;
    const CriticalPoint& base;
    const CriticalPoint& target;
    MatrixXd frame;       // N x (sphere_dim + 1)
    MatrixXd complement;  // target's frame transverse to the hit set
    FlowDirection direction;
    const FlowOptions& options;

    Shooter(const RestrictedFunction& f, std::span<const CriticalPoint> pts, const CriticalPoint& P,
            const CriticalPoint& Q, ShootSide side, const FlowOptions& opts)
        : rf(f),
          points(pts),
          base(side == ShootSide::UnstableOfUpper ? P : Q),
          target(side == ShootSide::UnstableOfUpper ? Q : P),
          frame(side == ShootSide::UnstableOfUpper ? P.unstable_frame : Q.stable_frame),
          complement(side == ShootSide::UnstableOfUpper ? Q.unstable_frame : P.stable_frame),
          direction(side == ShootSide::UnstableOfUpper ? FlowDirection::Descending : FlowDirection::Ascending),
          options(opts)
    {
    }

    VectorXd start(const VectorXd& u) const
    {
        return rf.manifold().retract(base.location + options.r_shoot * (frame * u));
    }

    FlowTrajectory shoot(const VectorXd& u, double radius, bool record) const
    {
        FlowRequest req;
        req.direction = direction;
        req.target = FlowTarget{target.location, target.id, radius};
        req.record = record;
        auto traj = flow_to_limit(rf, start(u), points, options, req);
        traj.start_id = base.id;
        return traj;
    }

    struct Label {
        bool near = false;     // came within `near_radius`
        bool hit = false;      // came within the arrival radius
        int side = 0;          // exit side at closest approach
        double closest = 0.0;
    };

    // Flow until the trajectory has clearly passed the target (or reached
    // its limit); report which side of the target it went by.
    Label label(const VectorXd& u, double near_radius) const
    {
        Label out;
        out.closest = std::numeric_limits<double>::infinity();
        double side_value = 0.0;
        bool passed = false;
        FlowRequest req;
        req.direction = direction;
        req.record = false;
        req.observer = [&](const VectorXd& x, double) {
            const VectorXd d = x - target.location;
            const double dist = d.norm();
            if (dist < out.closest) {
                out.closest = dist;
                side_value = complement.cols() ? complement.col(0).dot(d) : 0.0;
            }
            if (out.closest <= near_radius && dist > 2.0 * out.closest) passed = true;
        };
        req.stop_when = [&](const VectorXd&, double) { return passed; };
        flow_to_limit(rf, start(u), points, options, req);
        out.near = out.closest <= near_radius;
        out.hit = out.closest <= options.arrival_radius;
        out.side = std::abs(side_value) <= kSideZero ? 0 : (side_value > 0 ? 1 : -1);
        return out;
    }
};

struct Crossing {
    double angle = 0.0;
    bool came_near = false;
};

// Bisect the circle parameter between two samples whose exit sides differ.
Crossing bisect_crossing(const Shooter& shooter, double lo, int side_lo, double hi, double near_radius)
{
    Crossing c;
    double best = std::numeric_limits<double>::infinity();
    while (hi - lo > shooter.options.bisection_tolerance) {
        const double mid = 0.5 * (lo + hi);
        auto lab = shooter.label(circle_parameter(mid), near_radius);
        best = std::min(best, lab.closest);
        if (lab.side == 0) {
            lo = hi = mid;
            break;
        }
        if (lab.side == side_lo)
            lo = mid;
        else
            hi = mid;
    }
    c.angle = 0.5 * (lo + hi);
    c.came_near = best <= near_radius;
    return c;
}

ConnectingOrbit orient_from_upper(ConnectingOrbit orbit, ShootSide side)
{
    if (side == ShootSide::StableOfLower) {
        auto& t = orbit.trajectory;
        std::reverse(t.points.begin(), t.points.end());
        const double total = t.times.empty() ? 0.0 : t.times.back();
        std::reverse(t.times.begin(), t.times.end());
        for (auto& s : t.times) s = total - s;
        std::swap(t.start_id, t.end_id);
        t.direction = FlowDirection::Descending;
    }
    return orbit;
}

std::vector<VectorXd> quasi_random_sphere(int dim, std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<VectorXd> out;
    out.reserve(count);
    if (dim == 1) {
        const double offset = unit(rng);
        for (std::size_t k = 0; k < count; ++k)
            out.push_back(circle_parameter(2.0 * M_PI * (static_cast<double>(k) + offset) / static_cast<double>(count)));
        return out;
    }
    static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    const int m = dim + 1;
    if (m > static_cast<int>(std::size(primes))) throw ShootingError("sphere dimension too large for Halton sampling");
    std::vector<double> shift(static_cast<std::size_t>(m));
    for (auto& s : shift) s = unit(rng);
    for (std::size_t k = 0; k < count; ++k) {
        VectorXd g(m);
        for (int j = 0; j < m; ++j) {
            double f = 1.0 / primes[j], r = 0.0, inv = f;
            for (std::size_t i = k + 1; i > 0; i /= static_cast<std::size_t>(primes[j])) {
                r += f * static_cast<double>(i % static_cast<std::size_t>(primes[j]));
                f *= inv;
            }
            double u = r + shift[static_cast<std::size_t>(j)];
            u -= std::floor(u);
            u = std::clamp(u, 1e-12, 1.0 - 1e-12);
            g[j] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
        }
        out.push_back(g.normalized());
    }
    return out;
}

double sphere_volume(int d)
{
    // area of the unit d-sphere in R^{d+1}
    const double k = 0.5 * (d + 1);
    return 2.0 * std::pow(M_PI, k) / std::tgamma(k);
}

std::size_t count_components(const std::vector<VectorXd>& pts, double radius)
{
    std::vector<std::size_t> parent(pts.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> root = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if ((pts[i] - pts[j]).norm() <= radius) parent[root(i)] = root(j);
    std::size_t count = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (root(i) == i) ++count;
    return count;
}

VectorXd arc_length_midpoint(const FlowTrajectory& t)
{
    double total = 0.0;
    for (std::size_t i = 1; i < t.points.size(); ++i) total += (t.points[i] - t.points[i - 1]).norm();
    double acc = 0.0;
    for (std::size_t i = 1; i < t.points.size(); ++i) {
        acc += (t.points[i] - t.points[i - 1]).norm();
        if (acc >= 0.5 * total) return t.points[i];
    }
    return t.points.back();
}

}  // namespace

FlowTrajectory flow_to_limit(const RestrictedFunction& rf, const VectorXd& x0, std::span<const CriticalPoint> points,
                             const FlowOptions& options, const FlowRequest& request)
{
    const ImplicitManifold& m = rf.manifold();
    if (x0.size() != static_cast<Eigen::Index>(m.ambient_dim()))
        throw PreconditionError("flow start point has the wrong dimension");
    if (m.constraint_values(x0).norm() > 1e-10)
        throw PreconditionError("flow start point " + format_point(x0) + " is not on the manifold");

    const double sigma = request.direction == FlowDirection::Descending ? -1.0 : 1.0;
    auto field = [&](const VectorXd& x) -> VectorXd { return sigma * rf.projected_gradient(x); };

    FlowTrajectory traj;
    traj.direction = request.direction;
    traj.start_id = classify(x0, points, options.classify_radius);

    VectorXd x = x0;
    double fx = rf.value(x);
    double t = 0.0;
    auto accept_vertex = [&](const VectorXd& v, double time) {
        if (request.record) {
            traj.points.push_back(v);
            traj.times.push_back(time);
        }
        if (request.observer) request.observer(v, time);
    };
    auto arrived = [&](const VectorXd& v) {
        return request.target && (v - request.target->location).norm() <= request.target->radius;
    };

    accept_vertex(x, t);
    VectorXd k1 = field(x);
    if (arrived(x)) {
        traj.stop = FlowStop::Arrived;
        traj.end_id = request.target->id;
        return traj;
    }
    if (k1.norm() <= options.gradient_tolerance) {
        traj.stop = FlowStop::Converged;
        traj.end_id = classify(x, points, options.classify_radius);
        return traj;
    }

    double h = options.initial_step;
    std::size_t steps = 0;
    while (true) {
        if (t >= options.max_time || steps >= options.max_steps) {
            traj.stop = FlowStop::Escaped;
            traj.end_id.reset();
            return traj;
        }
        if (request.stop_when && request.stop_when(x, t)) {
            traj.stop = FlowStop::Stopped;
            traj.end_id = classify(x, points, options.classify_radius);
            return traj;
        }
        const double speed = k1.norm();
        h = std::min(h, options.max_step_length / speed);
        if (h < options.min_step)
            throw StiffFlowError("step size underflow at " + format_point(x) + " (t = " + std::to_string(t) + ")");

        const VectorXd k2 = field(x + h * (a21 * k1));
        const VectorXd k3 = field(x + h * (a31 * k1 + a32 * k2));
        const VectorXd k4 = field(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const VectorXd k5 = field(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const VectorXd k6 = field(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const VectorXd y5 = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const VectorXd k7 = field(y5);
        const double err = (h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7)).norm();
        const double allowed = options.error_tolerance * (y5 - x).norm();
        const double ratio = err > 0.0 ? allowed / err : 1e30;
        const double factor = std::clamp(0.9 * std::pow(ratio, 0.2), 0.2, 5.0);
        if (!(err <= allowed)) {
            h *= factor;
            continue;
        }

        VectorXd y;
        try {
            y = m.retract(y5);
        } catch (const RetractionError&) {
            h *= 0.5;
            continue;
        }
        const double fy = rf.value(y);
        if (sigma * (fy - fx) < -kMonotoneSlack) {
            h *= 0.5;
            continue;
        }

        x = std::move(y);
        fx = fy;
        t += h;
        ++steps;
        if (request.record) traj.arc_length += (x - traj.points.back()).norm();
        accept_vertex(x, t);
        k1 = field(x);
        h *= factor;

        if (arrived(x)) {
            traj.stop = FlowStop::Arrived;
            traj.end_id = request.target->id;
            return traj;
        }
        if (k1.norm() <= options.gradient_tolerance) {
            traj.stop = FlowStop::Converged;
            traj.end_id = classify(x, points, options.classify_radius);
            return traj;
        }
    }
}

ShootPlan plan_shooting(int n, int upper_index, int lower_index)
{
    ShootPlan forward{ShootSide::UnstableOfUpper, upper_index - 1, lower_index};
    ShootPlan backward{ShootSide::StableOfLower, n - lower_index - 1, n - upper_index};
    return backward.hit_codim < forward.hit_codim ? backward : forward;
}

OrbitEnumeration enumerate_orbits_zero_dim(const RestrictedFunction& rf, std::span<const CriticalPoint> points,
                                           const CriticalPoint& P, const CriticalPoint& Q, std::size_t resolution,
                                           const FlowOptions& options)
{
    if (P.index - Q.index != 1)
        throw PreconditionError("zero-dimensional enumeration needs index gap 1 (got " +
                                std::to_string(P.index - Q.index) + ")");
    const int n = static_cast<int>(rf.manifold().intrinsic_dim());
    OrbitEnumeration out;
    out.plan = plan_shooting(n, P.index, Q.index);
    const Shooter shooter(rf, points, P, Q, out.plan.side, options);

    auto make_orbit = [&](const VectorXd& u) -> std::optional<ConnectingOrbit> {
        auto traj = shooter.shoot(u, options.arrival_radius, true);
        if (traj.stop != FlowStop::Arrived) return std::nullopt;
        ConnectingOrbit o;
        o.p_id = P.id;
        o.q_id = Q.id;
        o.side = out.plan.side;
        o.shoot_parameter = u;
        o.trajectory = std::move(traj);
        return orient_from_upper(std::move(o), out.plan.side);
    };

    if (out.plan.sphere_dim == 0) {
        for (double s : {1.0, -1.0}) {
            VectorXd u(1);
            u << s;
            ++out.scanned;
            if (auto o = make_orbit(u)) out.orbits.push_back(std::move(*o));
        }
    } else if (out.plan.sphere_dim == 1) {
        if (resolution < 2) throw PreconditionError("scan resolution must be at least 2");
        const double near = options.probe_radius_factor * options.arrival_radius;
        std::vector<Shooter::Label> labels;
        labels.reserve(resolution);
        const double step = 2.0 * M_PI / static_cast<double>(resolution);
        for (std::size_t k = 0; k < resolution; ++k) labels.push_back(shooter.label(circle_parameter(step * k), near));
        out.scanned = resolution;
        for (std::size_t k = 0; k < resolution; ++k) {
            const auto& a = labels[k];
            const auto& b = labels[(k + 1) % resolution];
            const double lo = step * static_cast<double>(k);
            if (a.side == 0) {
                if (a.hit) {
                    if (auto o = make_orbit(circle_parameter(lo))) out.orbits.push_back(std::move(*o));
                }
                continue;
            }
            if (b.side == 0 || a.side == b.side) continue;
            ++out.brackets;
            const Crossing c = bisect_crossing(shooter, lo, a.side, lo + step, near);
            if (auto o = make_orbit(circle_parameter(c.angle))) {
                out.orbits.push_back(std::move(*o));
            } else if (c.came_near) {
                std::ostringstream os;
                os.precision(12);
                os << "crossing near shoot angle " << c.angle << " for pair (" << P.id << ", " << Q.id
                   << ") did not converge to the lower point; transversality suspect";
                out.warnings.push_back(os.str());
            }
        }
    } else {
        throw ShootingError("zero-dimensional enumeration needs a shooting sphere of dimension <= 1 (pair " +
                            std::to_string(P.id) + ", " + std::to_string(Q.id) + " would need S^" +
                            std::to_string(out.plan.sphere_dim) + ")");
    }

    for (auto& o : out.orbits) o.sign = orbit_sign(rf, o, P, Q);
    std::sort(out.orbits.begin(), out.orbits.end(), [](const ConnectingOrbit& a, const ConnectingOrbit& b) {
        return std::lexicographical_compare(a.shoot_parameter.data(), a.shoot_parameter.data() + a.shoot_parameter.size(),
                                            b.shoot_parameter.data(), b.shoot_parameter.data() + b.shoot_parameter.size());
    });
    return out;
}

int frame_orientation_sign(const MatrixXd& reference, const MatrixXd& frame)
{
    if (reference.cols() != frame.cols() || reference.rows() != frame.rows())
        throw PreconditionError("frame comparison needs frames of equal shape");
    if (frame.cols() == 0) return 1;
    const double det = (reference.transpose() * frame).determinant();
    if (!(std::abs(det) >= 1e-6))
        throw SignIndeterminateError("frame comparison matrix is near-singular (|det| = " + std::to_string(std::abs(det)) +
                                     ")");
    return det > 0 ? 1 : -1;
}

int orbit_sign(const RestrictedFunction& rf, const ConnectingOrbit& orbit, const CriticalPoint& P,
               const CriticalPoint& Q)
{
    const auto& path = orbit.trajectory.points;
    const auto& times = orbit.trajectory.times;
    if (path.empty() || path.size() != times.size())
        throw PreconditionError("orbit sign needs a recorded trajectory");
    if (P.index - Q.index != 1) throw PreconditionError("orbit sign is defined for index gap 1");
    const ImplicitManifold& m = rf.manifold();

    MatrixXd V = m.tangent_space(path.front()).projector * P.unstable_frame;
    orthonormalize(V);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double dt = times[i + 1] - times[i];
        const auto d = rf.grad_hess(path[i]);
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(d.hessian);
        const VectorXd decay = (-dt * eig.eigenvalues().array()).exp();
        const MatrixXd propagator = eig.eigenvectors() * decay.asDiagonal() * eig.eigenvectors().transpose();
        V = d.tangent_basis * (propagator * (d.tangent_basis.transpose() * V));
        V = m.tangent_space(path[i + 1]).projector * V;
        orthonormalize(V);
    }

    VectorXd e = -rf.projected_gradient(path.back());
    if (e.norm() == 0.0) throw SignIndeterminateError("orbit ends at a critical point; no flow direction");
    MatrixXd reference(e.size(), 1 + Q.unstable_frame.cols());
    reference.col(0) = e.normalized();
    reference.rightCols(Q.unstable_frame.cols()) = Q.unstable_frame;
    return frame_orientation_sign(reference, V);
}

ModuliSample sample_moduli(const RestrictedFunction& rf, std::span<const CriticalPoint> points,
                           const CriticalPoint& P, const CriticalPoint& Q, std::size_t samples, std::uint64_t seed,
                           const FlowOptions& options)
{
    if (P.index - Q.index < 2) throw PreconditionError("moduli sampling needs index gap >= 2");
    if (samples < 2) throw PreconditionError("moduli sampling needs at least two samples");
    const int n = static_cast<int>(rf.manifold().intrinsic_dim());

    ShootPlan plan;
    if (Q.index == 0)
        plan = {ShootSide::UnstableOfUpper, P.index - 1, 0};
    else if (P.index == n)
        plan = {ShootSide::StableOfLower, n - Q.index - 1, 0};
    else
        throw ShootingError("moduli sampling for pair (" + std::to_string(P.id) + ", " + std::to_string(Q.id) +
                            ") needs a codimension-0 hit set; both shooting spheres give positive codimension");

    const Shooter shooter(rf, points, P, Q, plan.side, options);
    ModuliSample out;
    out.p_id = P.id;
    out.q_id = Q.id;
    out.dimension = P.index - Q.index - 1;
    out.side = plan.side;
    out.sample_count = samples;
    const int d = plan.sphere_dim;
    const double spacing = d == 1 ? 2.0 * M_PI / static_cast<double>(samples)
                                  : std::pow(sphere_volume(d) / static_cast<double>(samples), 1.0 / d);
    out.cluster_radius = 5.0 * spacing;

    for (const auto& u : quasi_random_sphere(d, samples, seed)) {
        auto traj = shooter.shoot(u, options.arrival_radius, true);
        if (traj.stop != FlowStop::Arrived) continue;
        out.hit_parameters.push_back(u);
        out.hit_midpoints.push_back(arc_length_midpoint(traj));
    }
    out.component_count = static_cast<int>(count_components(out.hit_parameters, out.cluster_radius));

    const ImplicitManifold& m = rf.manifold();
    const bool product = m.catalog_tag() && m.catalog_tag()->kind == CatalogTag::Kind::Product && m.factors().size() > 1;
    if (product && !out.hit_midpoints.empty()) {
        std::vector<int> swept;
        for (std::size_t f = 0; f < m.factors().size(); ++f) {
            const auto& block = m.factors()[f];
            double variance = 0.0;
            for (std::size_t c = block.offset; c < block.offset + block.size; ++c) {
                double mean = 0.0;
                for (const auto& x : out.hit_midpoints) mean += x[static_cast<Eigen::Index>(c)];
                mean /= static_cast<double>(out.hit_midpoints.size());
                for (const auto& x : out.hit_midpoints) {
                    const double dv = x[static_cast<Eigen::Index>(c)] - mean;
                    variance += dv * dv;
                }
            }
            variance /= static_cast<double>(out.hit_midpoints.size());
            if (variance > 0.1) swept.push_back(static_cast<int>(f) + 1);
        }
        if (swept.size() == 1) {
            out.swept_factor = swept.front();
            const auto& name = m.factors()[static_cast<std::size_t>(swept.front() - 1)].name;
            out.swept_label = "factor-" + std::to_string(swept.front()) + (name.rfind("sphere", 0) == 0 ? " sphere" : "");
        }
    }
    return out;
}

bool reachable(const RestrictedFunction& rf, std::span<const CriticalPoint> points, const CriticalPoint& upper,
               const CriticalPoint& lower, const FlowOptions& options)
{
    if (upper.index <= lower.index || !(upper.value > lower.value)) return false;
    const int n = static_cast<int>(rf.manifold().intrinsic_dim());
    const ShootPlan plan = plan_shooting(n, upper.index, lower.index);
    const Shooter shooter(rf, points, upper, lower, plan.side, options);
    const double near = options.probe_radius_factor * options.arrival_radius;

    std::vector<VectorXd> params;
    if (plan.sphere_dim == 0) {
        for (double s : {1.0, -1.0}) {
            VectorXd u(1);
            u << s;
            params.push_back(u);
        }
    } else if (plan.sphere_dim == 1) {
        for (std::size_t k = 0; k < options.probe_count; ++k)
            params.push_back(circle_parameter(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(options.probe_count)));
    } else {
        params = quasi_random_sphere(plan.sphere_dim, options.probe_count, 0x5eed);
    }

    if (plan.hit_codim == 1 && plan.sphere_dim == 1) {
        std::vector<Shooter::Label> labels;
        for (const auto& u : params) {
            labels.push_back(shooter.label(u, near));
            if (labels.back().near) return true;
        }
        const double step = 2.0 * M_PI / static_cast<double>(params.size());
        for (std::size_t k = 0; k < labels.size(); ++k) {
            const auto& a = labels[k];
            const auto& b = labels[(k + 1) % labels.size()];
            if (a.side == 0 || b.side == 0 || a.side == b.side) continue;
            const double lo = step * static_cast<double>(k);
            if (bisect_crossing(shooter, lo, a.side, lo + step, near).came_near) return true;
        }
        return false;
    }
    for (const auto& u : params) {
        if (shooter.shoot(u, near, false).stop == FlowStop::Arrived) return true;
    }
    return false;
}

void write_flowlines_csv(std::ostream& out, const std::string& run_id, std::span<const ConnectingOrbit> orbits,
                         std::size_t ambient_dim, bool header)
{
    if (header) {
        out << "run_id,orbit_id,t_index";
        for (std::size_t i = 1; i <= ambient_dim; ++i) out << ",x" << i;
        out << "\n";
    }
    const auto old_precision = out.precision(17);
    for (std::size_t k = 0; k < orbits.size(); ++k) {
        const auto& pts = orbits[k].trajectory.points;
        for (std::size_t t = 0; t < pts.size(); ++t) {
            out << run_id << "," << k << "," << t;
            for (Eigen::Index i = 0; i < pts[t].size(); ++i) out << "," << pts[t][i];
            out << "\n";
        }
    }
    out.precision(old_precision);
}

}  // namespace morseflow

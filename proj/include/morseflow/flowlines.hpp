#pragma once

// Negative projected gradient flow on an implicit manifold, connecting
// orbit enumeration with orientation signs, and sampling of positive-
// dimensional moduli of flow lines.

#include "morseflow/critical_points.hpp"
#include "morseflow/geometry.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace morseflow {

struct FlowOptions {
    double r_shoot = 1e-3;          // shoot sphere radius in eigen-coordinates
    double arrival_radius = 1e-3;
    double error_tolerance = 1e-10; // local error per unit arc length
    double gradient_tolerance = 1e-8;
    double classify_radius = 1e-4;
    double max_time = 1e5;
    std::size_t max_steps = 500000;
    double initial_step = 1e-2;
    double max_step_length = 0.05;  // ambient displacement cap per step
    double min_step = 1e-14;
    double bisection_tolerance = 1e-10;
    std::size_t probe_count = 32;
    double probe_radius_factor = 10.0;
};

enum class FlowDirection { Descending, Ascending };
enum class FlowStop { Converged, Arrived, Escaped, Stopped };

struct FlowTrajectory {
    std::vector<VectorXd> points;
    std::vector<double> times;
    std::optional<int> start_id;
    std::optional<int> end_id;  // empty: escaped / unclassified
    double arc_length = 0.0;
    FlowDirection direction = FlowDirection::Descending;
    FlowStop stop = FlowStop::Escaped;
};

struct FlowTarget {
    VectorXd location;
    int id = 0;
    double radius = 1e-3;
};

// Called for every accepted vertex (including the first).
using FlowObserver = std::function<void(const VectorXd&, double)>;

struct FlowRequest {
    FlowDirection direction = FlowDirection::Descending;
    std::optional<FlowTarget> target;  // stop on entering its ball
    bool record = true;                // keep the polyline
    FlowObserver observer;
    std::function<bool(const VectorXd&, double)> stop_when;  // checked before each step
};

// Adaptive Dormand-Prince 5(4) integration of x' = -Pi(x) grad f(x) (or
// +Pi grad f when ascending) with retraction after every step. Stops when
// the restricted gradient drops below the tolerance (classifying against
// `points` within classify_radius), on entering the target ball, or after
// max time/steps ("escaped"). Throws StiffFlowError on step underflow.
FlowTrajectory flow_to_limit(const RestrictedFunction& rf, const VectorXd& x0, std::span<const CriticalPoint> points,
                             const FlowOptions& options, const FlowRequest& request = {});

// Which sphere a connecting-orbit search shoots from: the unstable sphere
// of the upper point (flowing down) or the stable sphere of the lower
// point (flowing up). The hit set has codimension ind(lower) on the first
// and n - ind(upper) on the second; the engine shoots from the side with
// the smaller codimension.
enum class ShootSide { UnstableOfUpper, StableOfLower };

struct ShootPlan {
    ShootSide side = ShootSide::UnstableOfUpper;
    int sphere_dim = 0;
    int hit_codim = 0;
};

ShootPlan plan_shooting(int n, int upper_index, int lower_index);

struct ConnectingOrbit {
    int p_id = 0;
    int q_id = 0;
    ShootSide side = ShootSide::UnstableOfUpper;
    VectorXd shoot_parameter;  // unit vector in the shooting frame coordinates
    int sign = 0;
    FlowTrajectory trajectory;  // oriented from P to Q
};

struct OrbitEnumeration {
    std::vector<ConnectingOrbit> orbits;
    std::vector<std::string> warnings;  // transversality warnings
    ShootPlan plan;
    std::size_t scanned = 0;
    std::size_t brackets = 0;
};

// Zero-dimensional Z(P,Q) for index gap 1: scan `resolution` points on the
// shooting circle, bisect every change of the exit side to 1e-10 in
// parameter, keep each refined trajectory that enters Q's arrival ball.
// Shooting spheres of dimension 0 are enumerated exhaustively. Signs are
// filled in by orbit_sign.
OrbitEnumeration enumerate_orbits_zero_dim(const RestrictedFunction& rf, std::span<const CriticalPoint> points,
                                           const CriticalPoint& P, const CriticalPoint& Q, std::size_t resolution,
                                           const FlowOptions& options);

// sign det([e, U_Q]^T V): compares an oriented frame V with the reference
// frame [e, U_Q]. Throws SignIndeterminateError when |det| < 1e-6.
int frame_orientation_sign(const MatrixXd& reference, const MatrixXd& frame);

// Transport P's unstable frame along the orbit with the linearized flow
// (re-orthonormalized at every vertex), then compare it at arrival with
// (flow direction, Q's unstable frame).
int orbit_sign(const RestrictedFunction& rf, const ConnectingOrbit& orbit, const CriticalPoint& P,
               const CriticalPoint& Q);

struct ModuliSample {
    int p_id = 0;
    int q_id = 0;
    int dimension = 0;  // p - q - 1
    ShootSide side = ShootSide::UnstableOfUpper;
    std::size_t sample_count = 0;
    std::vector<VectorXd> hit_parameters;
    std::vector<VectorXd> hit_midpoints;  // arc-length midpoints of the hit trajectories
    int component_count = 0;
    double cluster_radius = 0.0;
    std::optional<int> swept_factor;  // 1-based factor of a catalog product
    std::optional<std::string> swept_label;
};

// Quasi-random sample of the shooting sphere; hits are the parameters whose
// trajectories reach the other point's arrival ball. Components come from
// single-linkage clustering at 5x the sample spacing. Throws ShootingError
// when neither shooting sphere carries the hit set with codimension 0.
ModuliSample sample_moduli(const RestrictedFunction& rf, std::span<const CriticalPoint> points,
                           const CriticalPoint& P, const CriticalPoint& Q, std::size_t samples, std::uint64_t seed,
                           const FlowOptions& options);

// Broken-line probe: does some flow line run from `upper` to within
// probe_radius_factor * arrival_radius of `lower`?
bool reachable(const RestrictedFunction& rf, std::span<const CriticalPoint> points, const CriticalPoint& upper,
               const CriticalPoint& lower, const FlowOptions& options);

// CSV rows: run_id, orbit_id, t_index, x1..xN
void write_flowlines_csv(std::ostream& out, const std::string& run_id, std::span<const ConnectingOrbit> orbits,
                         std::size_t ambient_dim, bool header = true);

}  // namespace morseflow

#pragma once

#include "morseflow/geometry.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace morseflow {

inline constexpr double kDedupDistance = 1e-6;
inline constexpr double kNondegeneracyThreshold = 1e-6;
inline constexpr double kCriticalGradientTolerance = 1e-9;
// Critical values closer than this are treated as equal when ordering.
inline constexpr double kValueTieTolerance = 1e-9;

struct CriticalPoint {
    int id = 0;  // position in the canonical ordering
    VectorXd location;
    double value = 0.0;
    int index = 0;
    std::vector<double> hessian_spectrum;  // ascending
    MatrixXd unstable_frame;               // N x index
    MatrixXd stable_frame;                 // N x (n - index)
};

struct SearchOptions {
    std::size_t budget = 400;
    std::uint64_t seed = 1;
    int newton_iterations = 60;
};

// Multistart Newton on the Lagrange system (grad f - Jg^T lambda, g) = 0
// from quasi-random seeds in the manifold's bounding box. Result is sorted
// by value descending (ties broken lexicographically on location) and ids
// are assigned in that order. Throws DegenerateCriticalPointError when a
// converged point has a restricted-Hessian eigenvalue below 1e-6 in
// magnitude.
std::vector<CriticalPoint> find_critical_points(const RestrictedFunction& rf, const SearchOptions& options);

// Builds a CriticalPoint (spectrum, index, frames) at a point already known
// to be critical. Frames: eigenvectors sorted by eigenvalue, each scaled so
// its largest-magnitude ambient component is positive.
CriticalPoint analyze_critical_point(const RestrictedFunction& rf, const VectorXd& location);

// Canonical order used everywhere: value descending, ties lexicographic.
bool canonical_less(const CriticalPoint& a, const CriticalPoint& b);
void sort_canonically(std::vector<CriticalPoint>& points);

struct CriticalPair {
    int upper = 0;  // id of P
    int lower = 0;  // id of Q
    int index_gap = 0;
};

// reach(a, b): is there a flow line from point a down to point b?
using Reachability = std::function<bool(const CriticalPoint&, const CriticalPoint&)>;

// Pairs (P, Q) with f(P) > f(Q), ind P > ind Q, and no intermediate X
// (f(P) > f(X) > f(Q)) with P reaching X and X reaching Q, i.e. no broken
// flow line through a third critical point.
std::vector<CriticalPair> consecutive_pairs(const std::vector<CriticalPoint>& points, const Reachability& reach);

// Number of critical points of each index 0..n.
std::vector<int> index_counts(const std::vector<CriticalPoint>& points, std::size_t n);

}  // namespace morseflow

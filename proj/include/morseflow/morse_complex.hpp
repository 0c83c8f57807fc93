#pragma once

// Classical index-graded Morse complex over Z or Z/2, its homology, and the
// -f transpose duality check.

#include "morseflow/critical_points.hpp"
#include "morseflow/flowlines.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace morseflow {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class Coefficients { Integers, Mod2 };

std::string to_string(Coefficients c);

struct GradedComplex {
    Coefficients coefficients = Coefficients::Integers;
    std::vector<std::vector<int>> basis;  // grade k -> critical-point ids in canonical order
    // differentials[k]: C_k -> C_{k-1}, |C_{k-1}| x |C_k|; differentials[0] is 0 x |C_0|
    std::vector<IntMatrix> differentials;

    int top_grade() const { return static_cast<int>(basis.size()) - 1; }
};

// Entry (y, x) of D_k is the signed orbit count x -> y (or the count mod 2).
// Throws ComplexInconsistencyError when some D_k D_{k+1} is nonzero.
GradedComplex build_morse_complex(std::span<const CriticalPoint> points, std::span<const ConnectingOrbit> orbits,
                                  std::size_t n, Coefficients coefficients);

// Throws ComplexInconsistencyError naming the nonzero entries of D_k D_{k+1}.
void verify_d_squared(const GradedComplex& c);

// Nonzero invariant factors d_1 | d_2 | ... (positive). Exact int64
// arithmetic; throws std::overflow_error if an intermediate overflows.
std::vector<std::int64_t> smith_invariants(const IntMatrix& m);

int rank_mod2(const IntMatrix& m);

struct HomologyGroup {
    int free_rank = 0;
    std::vector<std::int64_t> torsion;  // invariant factors > 1
};

std::vector<HomologyGroup> homology_ranks(const GradedComplex& c);

// One complete run: the manifold it was computed on, its critical points
// and its complex over Z.
struct MorseRun {
    std::string manifold;  // identifies the manifold; runs must agree
    std::size_t n = 0;
    std::vector<CriticalPoint> points;
    GradedComplex complex;
};

struct DualityReport {
    bool holds = false;
    std::vector<std::pair<int, int>> point_map;  // (id in f run, id in -f run)
    std::vector<std::string> mismatches;         // entries where |D_k(-f)| != |D_{n-k+1}(f)^T|
};

// Grade-k basis of the -f complex must be the grade-(n-k) basis of the f
// complex (same locations within 1e-6), and |D_k(-f)| = |D_{n-k+1}(f)^T|
// entrywise. Different manifolds: PreconditionError. Basis mismatch:
// DualityViolationError.
DualityReport duality_transpose_check(const MorseRun& f, const MorseRun& negative);

}  // namespace morseflow

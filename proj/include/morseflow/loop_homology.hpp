#pragma once

// Mod-2 Pontryagin rings H_*(Omega M; Z/2) of catalog manifolds, loop classes
// of connecting manifolds, and the level-graded extended Morse complex.

#include "morseflow/catalog.hpp"
#include "morseflow/critical_points.hpp"
#include "morseflow/flowlines.hpp"
#include "morseflow/morse_complex.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace morseflow {

inline constexpr int kDefaultDegreeCap = 12;

struct RingGenerator {
    std::string name;
    int degree = 0;
    bool exterior = false;  // squares to zero
};

using Monomial = std::vector<int>;  // exponent per generator

// Z/2 combination of basis monomials, stored as basis indices.
struct RingElement {
    std::set<int> terms;

    bool is_zero() const { return terms.empty(); }
    friend bool operator==(const RingElement&, const RingElement&) = default;
};

class PontryaginRing {
public:
    PontryaginRing(std::string name, std::vector<RingGenerator> generators, int degree_cap);

    // Z/2 concentrated in degree 0.
    static PontryaginRing ground(int degree_cap = kDefaultDegreeCap);

    const std::string& name() const noexcept { return name_; }
    int degree_cap() const noexcept { return cap_; }
    const std::vector<RingGenerator>& generators() const noexcept { return generators_; }
    // Sorted by degree, then exponent vector descending (1, a, b, a^2, ...).
    const std::vector<Monomial>& basis() const noexcept { return basis_; }
    int degree(int basis_index) const { return degrees_.at(static_cast<std::size_t>(basis_index)); }
    std::string monomial_name(int basis_index) const;

    RingElement zero() const { return {}; }
    RingElement unit() const;
    RingElement generator(const std::string& name) const;
    RingElement sum(const RingElement& a, const RingElement& b) const;

    // Bilinear product over Z/2; CapExceededError if a product term would
    // pass the degree cap.
    RingElement multiply(const RingElement& a, const RingElement& b) const;
    std::optional<int> multiply_basis(int i, int j) const;  // nullopt: zero

    // Degree of a homogeneous nonzero element; nullopt for zero.
    // Throws PreconditionError for inhomogeneous elements.
    std::optional<int> degree_of(const RingElement& e) const;
    // Coefficient of the unit.
    int augmentation(const RingElement& e) const;

    std::string format(const RingElement& e) const;
    // "0", "1", "a", "a*b + u", "x2^3"
    RingElement parse(const std::string& text) const;

    // dim over Z/2 of each degree 0..cap
    std::vector<int> poincare_series() const;
    // (i, j, product) for every basis pair whose product degree is within the cap
    std::vector<std::tuple<int, int, std::optional<int>>> multiplication_table() const;

private:
    int index_of(const Monomial& m) const;

    std::string name_;
    std::vector<RingGenerator> generators_;
    int cap_ = kDefaultDegreeCap;
    std::vector<Monomial> basis_;
    std::vector<int> degrees_;
    std::map<Monomial, int> lookup_;
};

// sphere(n), n >= 2: polynomial on x{n-1}; product of spheres(n_i >= 2):
// tensor product with generators a, b, c, ...; cpn(n): exterior u (degree 1)
// tensor polynomial v (degree 2n). Anything else: UnsupportedManifoldError.
PontryaginRing make_ring(const CatalogTag& tag, int degree_cap = kDefaultDegreeCap);

struct RingAxiomReport {
    std::size_t triples_checked = 0;
    std::vector<std::string> failures;
};

// Associativity on all basis triples within the cap, unit laws, degree
// additivity and commutativity.
RingAxiomReport check_ring_axioms(const PontryaginRing& ring);

// Index gap 1: (count mod 2) * unit.
RingElement gap_one_class(const PontryaginRing& ring, std::size_t orbit_count);

// Swept factor i of a catalog product maps to the generator of factor i
// (which must have degree p - q - 1); each component contributes one copy,
// summed mod 2. Empty moduli give 0. No swept label: ClassUnknownError.
RingElement assign_loop_class(const ModuliSample& sample, const PontryaginRing& ring);

struct ExtendedEntry {
    int upper = 0;
    int lower = 0;
    RingElement cls;
};

struct CompositeEntry {
    int upper = 0;
    int lower = 0;
    RingElement value;
};

struct ExtendedComplex {
    std::vector<double> levels;            // ascending critical values
    std::vector<std::vector<int>> basis;   // point ids per level
    std::vector<ExtendedEntry> entries;    // adjacent levels, upper -> lower
    std::vector<CompositeEntry> composites;  // two levels apart
};

// Class of the pair (P, Q) with Q one level below P and ind P > ind Q;
// nullopt means unknown.
using ClassLookup = std::function<std::optional<RingElement>(const CriticalPoint&, const CriticalPoint&)>;

// Levels are the distinct critical values (within kValueTieTolerance); d'
// pairs each level with the next lower one. Pairs with ind P <= ind Q get 0.
// Unknown classes: ClassUnknownError. Wrong degree: DegreeMismatchError.
// A nonzero composite: ExtendedInconsistencyError naming (P, R).
ExtendedComplex build_extended_complex(const std::vector<CriticalPoint>& points, const PontryaginRing& ring,
                                       const ClassLookup& class_of);

// True when every level holds points of a single index and indices increase
// with the level: the setting where augmentation recovers the classical
// mod-2 complex.
bool is_self_indexed(const ExtendedComplex& c, const std::vector<CriticalPoint>& points);

// Compares the degree-0 augmentation of every entry with the classical
// mod-2 differential; returns the mismatching pairs.
std::vector<std::string> augmentation_mismatches(const ExtendedComplex& c, const PontryaginRing& ring,
                                                 const std::vector<CriticalPoint>& points,
                                                 const GradedComplex& classical_mod2);

}  // namespace morseflow

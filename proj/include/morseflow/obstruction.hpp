#pragma once

// Stable stems pi^S_k and Im(J) for k <= 7, and the smoothability
// obstruction on a pair of stable relative attaching maps.

#include <cstdint>
#include <string>
#include <vector>

namespace morseflow {

inline constexpr int kMaxStem = 7;

struct StemGroup {
    int k = 0;
    bool infinite = false;                 // k = 0: Z, with Im(J) flagged as everything
    std::vector<std::int64_t> factors;     // cyclic factor orders (0 for Z)
    std::vector<std::int64_t> im_j_orders; // order of Im(J) inside each factor
    std::vector<std::string> generators;

    std::string describe() const;  // "Z/24", "0", "Z"
    std::string describe_im_j() const;
};

struct StemElement {
    int k = 0;
    std::vector<std::int64_t> residues;  // one per cyclic factor
};

// Throws OutOfTableError for k outside 0..7.
const StemGroup& stem_group(int k);
const std::vector<StemGroup>& stem_tables();

// Residues reduced into [0, order); PreconditionError on a wrong length.
StemElement make_stem_element(int k, std::vector<std::int64_t> residues);

std::vector<StemElement> all_elements(const StemGroup& g);  // finite groups only

StemElement add(const StemElement& a, const StemElement& b);
StemElement negate(const StemElement& a);

bool element_in_im_j(int k, const StemElement& e);

enum class Verdict { Passes, Obstructed };

std::string to_string(Verdict v);

// OBSTRUCTED iff neither delta - delta' nor delta + delta' lies in Im(J).
// Conservative: uses Im(J^0), which is contained in Im(J^q).
// DegreeMismatchError when an element does not live in pi^S_k.
Verdict smoothing_verdict(int k, const StemElement& delta, const StemElement& delta_prime);

}  // namespace morseflow

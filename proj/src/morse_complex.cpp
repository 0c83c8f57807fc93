#include "morseflow/morse_complex.hpp"

#include "morseflow/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>

namespace morseflow {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("integer overflow in Smith normal form");
    return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("integer overflow in Smith normal form");
    return r;
}

std::int64_t checked_sub(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_sub_overflow(a, b, &r)) throw std::overflow_error("integer overflow in Smith normal form");
    return r;
}

IntMatrix checked_product(const IntMatrix& a, const IntMatrix& b)
{
    IntMatrix out = IntMatrix::Zero(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            for (Eigen::Index k = 0; k < a.cols(); ++k) out(i, j) = checked_add(out(i, j), checked_mul(a(i, k), b(k, j)));
    return out;
}

}  // namespace

std::string to_string(Coefficients c)
{
    return c == Coefficients::Integers ? "Z" : "Z/2";
}

GradedComplex build_morse_complex(std::span<const CriticalPoint> points, std::span<const ConnectingOrbit> orbits,
                                  std::size_t n, Coefficients coefficients)
{
    GradedComplex c;
    c.coefficients = coefficients;
    c.basis.assign(n + 1, {});
    std::map<int, std::pair<int, Eigen::Index>> slot;  // id -> (grade, position)
    for (const auto& p : points) {
        if (p.index < 0 || static_cast<std::size_t>(p.index) > n)
            throw PreconditionError("critical point " + std::to_string(p.id) + " has index outside 0.." + std::to_string(n));
        auto& b = c.basis[static_cast<std::size_t>(p.index)];
        slot[p.id] = {p.index, static_cast<Eigen::Index>(b.size())};
        b.push_back(p.id);
    }
    c.differentials.resize(n + 1);
    c.differentials[0] = IntMatrix::Zero(0, static_cast<Eigen::Index>(c.basis[0].size()));
    for (std::size_t k = 1; k <= n; ++k)
        c.differentials[k] = IntMatrix::Zero(static_cast<Eigen::Index>(c.basis[k - 1].size()),
                                             static_cast<Eigen::Index>(c.basis[k].size()));

    for (const auto& o : orbits) {
        auto from = slot.find(o.p_id);
        auto to = slot.find(o.q_id);
        if (from == slot.end() || to == slot.end())
            throw PreconditionError("orbit refers to an unknown critical point");
        if (from->second.first != to->second.first + 1) continue;
        auto& D = c.differentials[static_cast<std::size_t>(from->second.first)];
        auto& entry = D(to->second.second, from->second.second);
        entry = coefficients == Coefficients::Integers ? entry + o.sign : (entry + 1) % 2;
    }
    verify_d_squared(c);
    return c;
}

void verify_d_squared(const GradedComplex& c)
{
    std::vector<std::string> bad;
    for (std::size_t k = 1; k + 1 < c.differentials.size(); ++k) {
        IntMatrix dd = checked_product(c.differentials[k], c.differentials[k + 1]);
        for (Eigen::Index i = 0; i < dd.rows(); ++i) {
            for (Eigen::Index j = 0; j < dd.cols(); ++j) {
                const std::int64_t v = c.coefficients == Coefficients::Mod2 ? dd(i, j) % 2 : dd(i, j);
                if (v == 0) continue;
                std::ostringstream os;
                os << "(D" << k << " D" << k + 1 << ")[" << c.basis[k - 1][static_cast<std::size_t>(i)] << ", "
                   << c.basis[k + 1][static_cast<std::size_t>(j)] << "] = " << v;
                bad.push_back(os.str());
            }
        }
    }
    if (bad.empty()) return;
    std::string msg = "d o d != 0:";
    for (const auto& b : bad) msg += " " + b;
    throw ComplexInconsistencyError(msg);
}

std::vector<std::int64_t> smith_invariants(const IntMatrix& input)
{
    IntMatrix a = input;
    const Eigen::Index rows = a.rows(), cols = a.cols();
    std::vector<std::int64_t> diag;
    for (Eigen::Index t = 0; t < std::min(rows, cols); ++t) {
        // pivot: smallest nonzero magnitude in the remaining block
        Eigen::Index pi = -1, pj = -1;
        for (Eigen::Index i = t; i < rows; ++i)
            for (Eigen::Index j = t; j < cols; ++j)
                if (a(i, j) != 0 && (pi < 0 || std::llabs(a(i, j)) < std::llabs(a(pi, pj)))) {
                    pi = i;
                    pj = j;
                }
        if (pi < 0) break;
        a.row(t).swap(a.row(pi));
        a.col(t).swap(a.col(pj));

        bool clean = false;
        while (!clean) {
            clean = true;
            for (Eigen::Index i = t + 1; i < rows; ++i) {
                if (a(i, t) == 0) continue;
                const std::int64_t q = a(i, t) / a(t, t);
                for (Eigen::Index j = t; j < cols; ++j) a(i, j) = checked_sub(a(i, j), checked_mul(q, a(t, j)));
                if (a(i, t) != 0) {
                    a.row(t).swap(a.row(i));
                    clean = false;
                }
            }
            for (Eigen::Index j = t + 1; j < cols; ++j) {
                if (a(t, j) == 0) continue;
                const std::int64_t q = a(t, j) / a(t, t);
                for (Eigen::Index i = t; i < rows; ++i) a(i, j) = checked_sub(a(i, j), checked_mul(q, a(i, t)));
                if (a(t, j) != 0) {
                    a.col(t).swap(a.col(j));
                    clean = false;
                }
            }
            if (!clean) continue;
            // divisibility: fold a row whose entries the pivot does not divide
            for (Eigen::Index i = t + 1; i < rows && clean; ++i)
                for (Eigen::Index j = t + 1; j < cols; ++j)
                    if (a(i, j) % a(t, t) != 0) {
                        for (Eigen::Index k = t; k < cols; ++k) a(t, k) = checked_add(a(t, k), a(i, k));
                        clean = false;
                        break;
                    }
        }
        diag.push_back(std::llabs(a(t, t)));
    }
    return diag;
}

int rank_mod2(const IntMatrix& input)
{
    IntMatrix a = input.unaryExpr([](std::int64_t v) { return ((v % 2) + 2) % 2; });
    int rank = 0;
    for (Eigen::Index j = 0; j < a.cols() && rank < a.rows(); ++j) {
        Eigen::Index pivot = -1;
        for (Eigen::Index i = rank; i < a.rows(); ++i)
            if (a(i, j)) {
                pivot = i;
                break;
            }
        if (pivot < 0) continue;
        a.row(rank).swap(a.row(pivot));
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (i != rank && a(i, j)) a.row(i) = a.row(i).binaryExpr(a.row(rank), [](auto x, auto y) { return x ^ y; });
        ++rank;
    }
    return rank;
}

std::vector<HomologyGroup> homology_ranks(const GradedComplex& c)
{
    const std::size_t grades = c.basis.size();
    std::vector<int> rank(grades + 1, 0);
    std::vector<std::vector<std::int64_t>> invariants(grades + 1);
    for (std::size_t k = 1; k < grades; ++k) {
        if (c.coefficients == Coefficients::Mod2) {
            rank[k] = rank_mod2(c.differentials[k]);
        } else {
            invariants[k] = smith_invariants(c.differentials[k]);
            rank[k] = static_cast<int>(invariants[k].size());
        }
    }
    std::vector<HomologyGroup> out(grades);
    for (std::size_t k = 0; k < grades; ++k) {
        out[k].free_rank = static_cast<int>(c.basis[k].size()) - rank[k] - rank[k + 1];
        for (auto d : invariants[k + 1])
            if (d > 1) out[k].torsion.push_back(d);
    }
    return out;
}

DualityReport duality_transpose_check(const MorseRun& f, const MorseRun& negative)
{
    if (f.manifold != negative.manifold || f.n != negative.n)
        throw PreconditionError("duality check needs two runs on the same manifold (" + f.manifold + " vs " +
                                negative.manifold + ")");
    if (f.complex.coefficients != Coefficients::Integers || negative.complex.coefficients != Coefficients::Integers)
        throw PreconditionError("duality check compares complexes over Z");
    const int n = static_cast<int>(f.n);
    DualityReport report;

    // location match: id in f -> id in -f
    std::map<int, int> to_negative;
    for (const auto& p : f.points) {
        const CriticalPoint* match = nullptr;
        for (const auto& q : negative.points)
            if ((p.location - q.location).norm() <= kDedupDistance) match = &q;
        if (!match)
            throw DualityViolationError("critical point " + std::to_string(p.id) + " of f has no partner in the -f run");
        if (match->index != n - p.index)
            throw DualityViolationError("critical point " + std::to_string(p.id) + " has index " + std::to_string(p.index) +
                                        " for f but " + std::to_string(match->index) + " for -f");
        to_negative[p.id] = match->id;
        report.point_map.emplace_back(p.id, match->id);
    }
    if (f.points.size() != negative.points.size())
        throw DualityViolationError("the f and -f runs found different numbers of critical points");

    for (int k = 0; k <= n; ++k) {
        const auto& fb = f.complex.basis[static_cast<std::size_t>(n - k)];
        const auto& nb = negative.complex.basis[static_cast<std::size_t>(k)];
        if (fb.size() != nb.size())
            throw DualityViolationError("grade " + std::to_string(k) + " of the -f complex does not match grade " +
                                        std::to_string(n - k) + " of the f complex");
        for (std::size_t i = 0; i < fb.size(); ++i)
            if (std::find(nb.begin(), nb.end(), to_negative.at(fb[i])) == nb.end())
                throw DualityViolationError("basis of grade " + std::to_string(k) + " does not match under p -> n - p");
    }

    auto position = [](const std::vector<int>& basis, int id) {
        return static_cast<Eigen::Index>(std::find(basis.begin(), basis.end(), id) - basis.begin());
    };
    for (int k = 1; k <= n; ++k) {
        // D_k(-f): C_k(-f) -> C_{k-1}(-f); D_{n-k+1}(f): C_{n-k+1}(f) -> C_{n-k}(f)
        const auto& Dneg = negative.complex.differentials[static_cast<std::size_t>(k)];
        const auto& Df = f.complex.differentials[static_cast<std::size_t>(n - k + 1)];
        const auto& f_rows = f.complex.basis[static_cast<std::size_t>(n - k)];     // partners of -f grade k
        const auto& f_cols = f.complex.basis[static_cast<std::size_t>(n - k + 1)]; // partners of -f grade k-1
        for (std::size_t r = 0; r < f_rows.size(); ++r) {
            for (std::size_t s = 0; s < f_cols.size(); ++s) {
                const std::int64_t vf = std::llabs(Df(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)));
                const Eigen::Index col = position(negative.complex.basis[static_cast<std::size_t>(k)], to_negative.at(f_rows[r]));
                const Eigen::Index row =
                    position(negative.complex.basis[static_cast<std::size_t>(k - 1)], to_negative.at(f_cols[s]));
                const std::int64_t vn = std::llabs(Dneg(row, col));
                if (vf != vn) {
                    std::ostringstream os;
                    os << "|D" << k << "(-f)[" << to_negative.at(f_cols[s]) << ", " << to_negative.at(f_rows[r]) << "]| = " << vn
                       << " but |D" << n - k + 1 << "(f)[" << f_rows[r] << ", " << f_cols[s] << "]| = " << vf;
                    report.mismatches.push_back(os.str());
                }
            }
        }
    }
    report.holds = report.mismatches.empty();
    return report;
}

}  // namespace morseflow

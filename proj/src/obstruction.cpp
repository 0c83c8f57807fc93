#include "morseflow/obstruction.hpp"

#include "morseflow/errors.hpp"

#include "stem_tables_data.hpp"

#include <json.hpp>

namespace morseflow {

namespace {

std::vector<StemGroup> load_tables()
{
    const auto doc = nlohmann::json::parse(detail::kStemTablesJson);
    std::vector<StemGroup> out;
    for (const auto& s : doc.at("stems")) {
        StemGroup g;
        g.k = s.at("k").get<int>();
        g.infinite = s.value("infinite", false);
        g.factors = s.at("factors").get<std::vector<std::int64_t>>();
        g.im_j_orders = s.at("im_j_orders").get<std::vector<std::int64_t>>();
        g.generators = s.at("generators").get<std::vector<std::string>>();
        if (g.k != static_cast<int>(out.size()) || g.factors.size() != g.im_j_orders.size())
            throw std::logic_error("malformed stem table entry for k = " + std::to_string(g.k));
        for (std::size_t i = 0; i < g.factors.size(); ++i)
            if (!g.infinite && g.factors[i] % g.im_j_orders[i] != 0)
                throw std::logic_error("Im(J) order does not divide the group order for k = " + std::to_string(g.k));
        out.push_back(std::move(g));
    }
    return out;
}

std::int64_t reduce(std::int64_t r, std::int64_t order)
{
    if (order == 0) return r;
    r %= order;
    return r < 0 ? r + order : r;
}

std::string cyclic(std::int64_t order)
{
    return order == 0 ? "Z" : "Z/" + std::to_string(order);
}

}  // namespace

std::string StemGroup::describe() const
{
    if (factors.empty()) return "0";
    std::string out;
    for (auto f : factors) out += (out.empty() ? "" : " + ") + cyclic(f);
    return out;
}

std::string StemGroup::describe_im_j() const
{
    if (infinite) return "all";
    if (im_j_orders.empty()) return "0";
    std::string out;
    for (auto f : im_j_orders) out += (out.empty() ? "" : " + ") + (f == 1 ? std::string("0") : cyclic(f));
    return out;
}

const std::vector<StemGroup>& stem_tables()
{
    static const std::vector<StemGroup> tables = load_tables();
    return tables;
}

const StemGroup& stem_group(int k)
{
    const auto& t = stem_tables();
    if (k < 0 || k >= static_cast<int>(t.size()))
        throw OutOfTableError("stem k = " + std::to_string(k) + " is outside the shipped table (0.." +
                              std::to_string(static_cast<int>(t.size()) - 1) + ")");
    return t[static_cast<std::size_t>(k)];
}

StemElement make_stem_element(int k, std::vector<std::int64_t> residues)
{
    const auto& g = stem_group(k);
    if (residues.size() != g.factors.size())
        throw PreconditionError("pi^S_" + std::to_string(k) + " has " + std::to_string(g.factors.size()) +
                                " cyclic factor(s) but " + std::to_string(residues.size()) + " residue(s) were given");
    for (std::size_t i = 0; i < residues.size(); ++i) residues[i] = reduce(residues[i], g.factors[i]);
    return {k, std::move(residues)};
}

std::vector<StemElement> all_elements(const StemGroup& g)
{
    if (g.infinite) throw PreconditionError("pi^S_0 is infinite");
    std::vector<StemElement> out{{g.k, std::vector<std::int64_t>(g.factors.size(), 0)}};
    for (std::size_t i = 0; i < g.factors.size(); ++i) {
        std::vector<StemElement> next;
        for (const auto& e : out)
            for (std::int64_t r = 0; r < g.factors[i]; ++r) {
                auto copy = e;
                copy.residues[i] = r;
                next.push_back(copy);
            }
        out = std::move(next);
    }
    return out;
}

StemElement add(const StemElement& a, const StemElement& b)
{
    if (a.k != b.k) throw DegreeMismatchError("cannot add elements of pi^S_" + std::to_string(a.k) + " and pi^S_" +
                                              std::to_string(b.k));
    const auto& g = stem_group(a.k);
    StemElement out{a.k, a.residues};
    for (std::size_t i = 0; i < out.residues.size(); ++i)
        out.residues[i] = reduce(a.residues[i] + b.residues.at(i), g.factors[i]);
    return out;
}

StemElement negate(const StemElement& a)
{
    const auto& g = stem_group(a.k);
    StemElement out{a.k, a.residues};
    for (std::size_t i = 0; i < out.residues.size(); ++i) out.residues[i] = reduce(-a.residues[i], g.factors[i]);
    return out;
}

bool element_in_im_j(int k, const StemElement& e)
{
    const auto& g = stem_group(k);
    if (e.k != k) throw DegreeMismatchError("element of pi^S_" + std::to_string(e.k) + " tested against k = " +
                                            std::to_string(k));
    if (g.infinite) return true;
    for (std::size_t i = 0; i < g.factors.size(); ++i) {
        // Im(J) in Z/n of order m is generated by n/m
        const std::int64_t step = g.factors[i] / g.im_j_orders[i];
        if (reduce(e.residues.at(i), g.factors[i]) % step != 0) return false;
    }
    return true;
}

std::string to_string(Verdict v)
{
    return v == Verdict::Passes ? "PASSES" : "OBSTRUCTED";
}

Verdict smoothing_verdict(int k, const StemElement& delta, const StemElement& delta_prime)
{
    stem_group(k);
    if (delta.k != k || delta_prime.k != k)
        throw DegreeMismatchError("smoothing check in degree " + std::to_string(k) + " got elements of degrees " +
                                  std::to_string(delta.k) + " and " + std::to_string(delta_prime.k));
    const auto difference = add(delta, negate(delta_prime));
    const auto total = add(delta, delta_prime);
    return element_in_im_j(k, difference) || element_in_im_j(k, total) ? Verdict::Passes : Verdict::Obstructed;
}

}  // namespace morseflow

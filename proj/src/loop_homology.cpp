#include "morseflow/loop_homology.hpp"

#include "morseflow/errors.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace morseflow {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace

PontryaginRing::PontryaginRing(std::string name, std::vector<RingGenerator> generators, int degree_cap)
    : name_(std::move(name)), generators_(std::move(generators)), cap_(degree_cap)
{
    if (cap_ < 0) throw PreconditionError("degree cap must be non-negative");
    for (const auto& g : generators_)
        if (g.degree < 1) throw UnsupportedManifoldError("ring generator " + g.name + " must have positive degree");

    // enumerate all monomials of degree <= cap
    Monomial m(generators_.size(), 0);
    std::function<void(std::size_t, int)> walk = [&](std::size_t k, int deg) {
        if (k == generators_.size()) {
            basis_.push_back(m);
            degrees_.push_back(deg);
            return;
        }
        const auto& g = generators_[k];
        const int max_exp = g.exterior ? 1 : (cap_ - deg) / g.degree;
        for (int e = 0; e <= max_exp && deg + e * g.degree <= cap_; ++e) {
            m[k] = e;
            walk(k + 1, deg + e * g.degree);
        }
        m[k] = 0;
    };
    walk(0, 0);

    std::vector<std::size_t> order(basis_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (degrees_[a] != degrees_[b]) return degrees_[a] < degrees_[b];
        return basis_[a] > basis_[b];
    });
    std::vector<Monomial> sorted_basis;
    std::vector<int> sorted_degrees;
    for (auto i : order) {
        sorted_basis.push_back(basis_[i]);
        sorted_degrees.push_back(degrees_[i]);
    }
    basis_ = std::move(sorted_basis);
    degrees_ = std::move(sorted_degrees);
    for (std::size_t i = 0; i < basis_.size(); ++i) lookup_[basis_[i]] = static_cast<int>(i);
}

PontryaginRing PontryaginRing::ground(int degree_cap)
{
    return PontryaginRing("ground", {}, degree_cap);
}

int PontryaginRing::index_of(const Monomial& m) const
{
    auto it = lookup_.find(m);
    if (it == lookup_.end()) throw PreconditionError("monomial outside the ring basis");
    return it->second;
}

std::string PontryaginRing::monomial_name(int basis_index) const
{
    const auto& m = basis_.at(static_cast<std::size_t>(basis_index));
    std::string out;
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (m[k] == 0) continue;
        if (!out.empty()) out += "*";
        out += generators_[k].name;
        if (m[k] > 1) out += "^" + std::to_string(m[k]);
    }
    return out.empty() ? "1" : out;
}

RingElement PontryaginRing::unit() const
{
    return RingElement{{0}};
}

RingElement PontryaginRing::generator(const std::string& name) const
{
    for (std::size_t k = 0; k < generators_.size(); ++k) {
        if (generators_[k].name != name) continue;
        Monomial m(generators_.size(), 0);
        m[k] = 1;
        auto it = lookup_.find(m);
        if (it == lookup_.end())
            throw CapExceededError("generator " + name + " has degree above the cap " + std::to_string(cap_));
        return RingElement{{it->second}};
    }
    throw PreconditionError("ring " + name_ + " has no generator named '" + name + "'");
}

RingElement PontryaginRing::sum(const RingElement& a, const RingElement& b) const
{
    RingElement out = a;
    for (int t : b.terms)
        if (!out.terms.erase(t)) out.terms.insert(t);
    return out;
}

std::optional<int> PontryaginRing::multiply_basis(int i, int j) const
{
    const auto& a = basis_.at(static_cast<std::size_t>(i));
    const auto& b = basis_.at(static_cast<std::size_t>(j));
    const int deg = degrees_[static_cast<std::size_t>(i)] + degrees_[static_cast<std::size_t>(j)];
    Monomial m(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        m[k] = a[k] + b[k];
        if (generators_[k].exterior && m[k] > 1) return std::nullopt;
    }
    if (deg > cap_)
        throw CapExceededError("product " + monomial_name(i) + " * " + monomial_name(j) + " has degree " +
                               std::to_string(deg) + " above the cap " + std::to_string(cap_));
    return index_of(m);
}

RingElement PontryaginRing::multiply(const RingElement& a, const RingElement& b) const
{
    RingElement out;
    for (int i : a.terms) {
        for (int j : b.terms) {
            if (auto k = multiply_basis(i, j)) {
                if (!out.terms.erase(*k)) out.terms.insert(*k);
            }
        }
    }
    return out;
}

std::optional<int> PontryaginRing::degree_of(const RingElement& e) const
{
    std::optional<int> deg;
    for (int t : e.terms) {
        const int d = degree(t);
        if (deg && *deg != d) throw PreconditionError("element " + format(e) + " is not homogeneous");
        deg = d;
    }
    return deg;
}

int PontryaginRing::augmentation(const RingElement& e) const
{
    return e.terms.count(0) ? 1 : 0;
}

std::string PontryaginRing::format(const RingElement& e) const
{
    if (e.terms.empty()) return "0";
    std::string out;
    for (int t : e.terms) {
        if (!out.empty()) out += " + ";
        out += monomial_name(t);
    }
    return out;
}

RingElement PontryaginRing::parse(const std::string& text) const
{
    RingElement out;
    for (const auto& term : split(text, '+')) {
        if (term.empty()) throw ConfigError("empty term in ring element '" + text + "'");
        if (term == "0") continue;
        RingElement product = unit();
        for (const auto& factor : split(term, '*')) {
            if (factor == "1") continue;
            std::string name = factor;
            int power = 1;
            if (auto caret = factor.find('^'); caret != std::string::npos) {
                name = trim(factor.substr(0, caret));
                try {
                    std::size_t used = 0;
                    power = std::stoi(factor.substr(caret + 1), &used);
                    if (used != factor.size() - caret - 1 || power < 0) throw std::invalid_argument("");
                } catch (const std::exception&) {
                    throw ConfigError("bad exponent in ring element '" + text + "'");
                }
            }
            RingElement g;
            try {
                g = generator(name);
            } catch (const PreconditionError&) {
                throw ConfigError("unknown generator '" + name + "' for ring " + name_);
            }
            for (int p = 0; p < power; ++p) product = multiply(product, g);
        }
        out = sum(out, product);
    }
    return out;
}

std::vector<int> PontryaginRing::poincare_series() const
{
    std::vector<int> out(static_cast<std::size_t>(cap_) + 1, 0);
    for (int d : degrees_) out[static_cast<std::size_t>(d)] += 1;
    return out;
}

std::vector<std::tuple<int, int, std::optional<int>>> PontryaginRing::multiplication_table() const
{
    std::vector<std::tuple<int, int, std::optional<int>>> out;
    const int n = static_cast<int>(basis_.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (degree(i) + degree(j) <= cap_) out.emplace_back(i, j, multiply_basis(i, j));
    return out;
}

PontryaginRing make_ring(const CatalogTag& tag, int degree_cap)
{
    switch (tag.kind) {
    case CatalogTag::Kind::Sphere:
        if (tag.n < 2) break;
        return PontryaginRing(tag.to_string(), {{"x" + std::to_string(tag.n - 1), tag.n - 1, false}}, degree_cap);
    case CatalogTag::Kind::Cpn:
        return PontryaginRing(tag.to_string(), {{"u", 1, true}, {"v", 2 * tag.n, false}}, degree_cap);
    case CatalogTag::Kind::Product: {
        std::vector<RingGenerator> gens;
        bool ok = tag.factors.size() <= 26;
        for (std::size_t i = 0; ok && i < tag.factors.size(); ++i) {
            const auto& f = tag.factors[i];
            ok = f.kind == CatalogTag::Kind::Sphere && f.n >= 2;
            if (ok) gens.push_back({std::string(1, static_cast<char>('a' + i)), f.n - 1, false});
        }
        if (!ok) break;
        return PontryaginRing(tag.to_string(), std::move(gens), degree_cap);
    }
    case CatalogTag::Kind::Torus:
        break;
    }
    throw UnsupportedManifoldError("no Pontryagin ring table for " + tag.to_string() +
                                   " (supported: sphere(n) n>=2, products of such spheres, cpn(n))");
}

RingAxiomReport check_ring_axioms(const PontryaginRing& ring)
{
    RingAxiomReport report;
    const int n = static_cast<int>(ring.basis().size());
    auto fail = [&](const std::string& what) { report.failures.push_back(what); };
    auto as_element = [](std::optional<int> k) { return k ? RingElement{{*k}} : RingElement{}; };
    if (n == 0 || ring.degree(0) != 0 || ring.monomial_name(0) != "1") fail("no unit in degree 0");

    for (int i = 0; i < n; ++i) {
        if (ring.multiply_basis(0, i) != std::optional<int>(i) || ring.multiply_basis(i, 0) != std::optional<int>(i))
            fail("unit law fails for " + ring.monomial_name(i));
        for (int j = 0; j < n; ++j) {
            if (ring.degree(i) + ring.degree(j) > ring.degree_cap()) continue;
            const auto ij = ring.multiply_basis(i, j);
            if (ij != ring.multiply_basis(j, i))
                fail(ring.monomial_name(i) + " and " + ring.monomial_name(j) + " do not commute");
            if (ij && ring.degree(*ij) != ring.degree(i) + ring.degree(j))
                fail("degree not additive for " + ring.monomial_name(i) + " * " + ring.monomial_name(j));
            for (int k = 0; k < n; ++k) {
                if (ring.degree(i) + ring.degree(j) + ring.degree(k) > ring.degree_cap()) continue;
                ++report.triples_checked;
                const RingElement x{{i}}, y{{j}}, z{{k}};
                const auto left = ring.multiply(as_element(ij), z);
                const auto right = ring.multiply(x, ring.multiply(y, z));
                if (left != right)
                    fail("associativity fails for (" + ring.monomial_name(i) + ", " + ring.monomial_name(j) + ", " +
                         ring.monomial_name(k) + ")");
            }
        }
    }
    return report;
}

RingElement gap_one_class(const PontryaginRing& ring, std::size_t orbit_count)
{
    return orbit_count % 2 ? ring.unit() : ring.zero();
}

RingElement assign_loop_class(const ModuliSample& sample, const PontryaginRing& ring)
{
    if (sample.component_count == 0) return ring.zero();
    if (!sample.swept_factor)
        throw ClassUnknownError("pair (" + std::to_string(sample.p_id) + ", " + std::to_string(sample.q_id) +
                                ") has no swept-factor label; supply its class in the config");
    const auto factor = static_cast<std::size_t>(*sample.swept_factor - 1);
    if (factor >= ring.generators().size())
        throw ClassUnknownError("swept factor " + std::to_string(*sample.swept_factor) + " has no generator in ring " +
                                ring.name());
    const auto& g = ring.generators()[factor];
    if (g.degree != sample.dimension)
        throw DegreeMismatchError("generator " + g.name + " has degree " + std::to_string(g.degree) +
                                  " but Z(" + std::to_string(sample.p_id) + ", " + std::to_string(sample.q_id) +
                                  ") has dimension " + std::to_string(sample.dimension));
    return sample.component_count % 2 ? ring.generator(g.name) : ring.zero();
}

ExtendedComplex build_extended_complex(const std::vector<CriticalPoint>& points, const PontryaginRing& ring,
                                       const ClassLookup& class_of)
{
    ExtendedComplex c;
    std::vector<const CriticalPoint*> by_value;
    for (const auto& p : points) by_value.push_back(&p);
    std::stable_sort(by_value.begin(), by_value.end(),
                     [](const CriticalPoint* a, const CriticalPoint* b) { return a->value < b->value; });
    for (const auto* p : by_value) {
        if (c.levels.empty() || p->value - c.levels.back() > kValueTieTolerance) {
            c.levels.push_back(p->value);
            c.basis.emplace_back();
        }
        c.basis.back().push_back(p->id);
    }
    for (auto& b : c.basis) std::sort(b.begin(), b.end());

    auto point = [&](int id) -> const CriticalPoint& {
        for (const auto& p : points)
            if (p.id == id) return p;
        throw PreconditionError("unknown critical point id");
    };

    std::map<std::pair<int, int>, RingElement> entry;
    for (std::size_t lvl = 1; lvl < c.basis.size(); ++lvl) {
        for (int pid : c.basis[lvl]) {
            for (int qid : c.basis[lvl - 1]) {
                const auto& P = point(pid);
                const auto& Q = point(qid);
                RingElement cls;
                if (P.index > Q.index) {
                    auto found = class_of(P, Q);
                    if (!found)
                        throw ClassUnknownError("no loop class for the pair (" + std::to_string(pid) + ", " +
                                                std::to_string(qid) + ")");
                    cls = *found;
                    const auto deg = ring.degree_of(cls);
                    if (deg && *deg != P.index - Q.index - 1)
                        throw DegreeMismatchError("class " + ring.format(cls) + " of (" + std::to_string(pid) + ", " +
                                                  std::to_string(qid) + ") has degree " + std::to_string(*deg) +
                                                  ", expected " + std::to_string(P.index - Q.index - 1));
                }
                entry[{pid, qid}] = cls;
                c.entries.push_back({pid, qid, cls});
            }
        }
    }

    for (std::size_t lvl = 2; lvl < c.basis.size(); ++lvl) {
        for (int pid : c.basis[lvl]) {
            for (int rid : c.basis[lvl - 2]) {
                RingElement total;
                for (int qid : c.basis[lvl - 1])
                    total = ring.sum(total, ring.multiply(entry.at({pid, qid}), entry.at({qid, rid})));
                c.composites.push_back({pid, rid, total});
                if (!total.is_zero())
                    throw ExtendedInconsistencyError("d' o d' != 0: composite entry (" + std::to_string(pid) + ", " +
                                                     std::to_string(rid) + ") = " + ring.format(total));
            }
        }
    }
    return c;
}

bool is_self_indexed(const ExtendedComplex& c, const std::vector<CriticalPoint>& points)
{
    std::map<int, int> index;
    for (const auto& p : points) index[p.id] = p.index;
    int previous = -1;
    for (const auto& level : c.basis) {
        const int k = index.at(level.front());
        for (int id : level)
            if (index.at(id) != k) return false;
        if (k <= previous) return false;
        previous = k;
    }
    return true;
}

std::vector<std::string> augmentation_mismatches(const ExtendedComplex& c, const PontryaginRing& ring,
                                                 const std::vector<CriticalPoint>& points,
                                                 const GradedComplex& classical_mod2)
{
    std::map<std::pair<int, int>, int> augmented;
    for (const auto& e : c.entries) augmented[{e.upper, e.lower}] = ring.augmentation(e.cls);

    std::map<int, std::pair<std::size_t, Eigen::Index>> slot;
    for (std::size_t k = 0; k < classical_mod2.basis.size(); ++k)
        for (std::size_t i = 0; i < classical_mod2.basis[k].size(); ++i)
            slot[classical_mod2.basis[k][i]] = {k, static_cast<Eigen::Index>(i)};

    std::vector<std::string> out;
    for (const auto& P : points) {
        for (const auto& Q : points) {
            if (P.index != Q.index + 1) continue;
            const auto [kp, ip] = slot.at(P.id);
            const Eigen::Index iq = slot.at(Q.id).second;
            const std::int64_t classical = classical_mod2.differentials[kp](iq, ip) % 2;
            auto it = augmented.find({P.id, Q.id});
            const int ext = it == augmented.end() ? 0 : it->second;
            if (classical != ext)
                out.push_back("(" + std::to_string(P.id) + ", " + std::to_string(Q.id) + "): augmented " +
                              std::to_string(ext) + ", classical " + std::to_string(classical));
        }
    }
    return out;
}

}  // namespace morseflow

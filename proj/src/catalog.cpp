#include "morseflow/catalog.hpp"

#include "morseflow/errors.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace morseflow {

CatalogTag CatalogTag::sphere(int n)
{
    if (n < 1) throw UnsupportedManifoldError("sphere dimension must be >= 1");
    CatalogTag t;
    t.kind = Kind::Sphere;
    t.n = n;
    return t;
}

CatalogTag CatalogTag::torus(double major, double minor)
{
    if (!(major > minor && minor > 0.0))
        throw UnsupportedManifoldError("torus needs R > r > 0");
    CatalogTag t;
    t.kind = Kind::Torus;
    t.n = 2;
    t.major = major;
    t.minor = minor;
    return t;
}

CatalogTag CatalogTag::cpn(int n)
{
    if (n < 1) throw UnsupportedManifoldError("cpn dimension must be >= 1");
    CatalogTag t;
    t.kind = Kind::Cpn;
    t.n = n;
    return t;
}

CatalogTag CatalogTag::product(std::vector<CatalogTag> factors)
{
    if (factors.size() < 2) throw UnsupportedManifoldError("product needs at least two factors");
    CatalogTag t;
    t.kind = Kind::Product;
    t.factors = std::move(factors);
    return t;
}

namespace {

class TagParser {
public:
    explicit TagParser(std::string_view s) : s_(s) {}

    CatalogTag parse_all()
    {
        auto t = parse_tag();
        skip();
        if (i_ != s_.size()) fail("trailing characters");
        return t;
    }

private:
    [[noreturn]] void fail(const std::string& why) const
    {
        throw UnsupportedManifoldError("bad catalog tag '" + std::string(s_) + "': " + why);
    }

    void skip()
    {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }

    void expect(char c)
    {
        skip();
        if (i_ >= s_.size() || s_[i_] != c) fail(std::string("expected '") + c + "'");
        ++i_;
    }

    double number()
    {
        skip();
        double v = 0.0;
        auto [end, ec] = std::from_chars(s_.data() + i_, s_.data() + s_.size(), v);
        if (ec != std::errc()) fail("expected number");
        i_ = static_cast<std::size_t>(end - s_.data());
        return v;
    }

    int integer()
    {
        double v = number();
        if (v != static_cast<int>(v)) fail("expected integer");
        return static_cast<int>(v);
    }

    CatalogTag parse_tag()
    {
        skip();
        std::size_t start = i_;
        while (i_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[i_]))) ++i_;
        std::string_view name = s_.substr(start, i_ - start);
        expect('(');
        CatalogTag t;
        if (name == "sphere") {
            t = CatalogTag::sphere(integer());
        } else if (name == "cpn") {
            t = CatalogTag::cpn(integer());
        } else if (name == "torus") {
            double major = number();
            expect(',');
            double minor = number();
            t = CatalogTag::torus(major, minor);
        } else if (name == "product") {
            std::vector<CatalogTag> fs;
            fs.push_back(parse_tag());
            for (;;) {
                skip();
                if (i_ < s_.size() && s_[i_] == ',') {
                    ++i_;
                    fs.push_back(parse_tag());
                } else {
                    break;
                }
            }
            t = CatalogTag::product(std::move(fs));
        } else {
            fail("unknown name '" + std::string(name) + "'");
        }
        expect(')');
        return t;
    }

    std::string_view s_;
    std::size_t i_ = 0;
};

std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

CatalogTag CatalogTag::parse(std::string_view text) { return TagParser(text).parse_all(); }

std::string CatalogTag::to_string() const
{
    switch (kind) {
    case Kind::Sphere: return "sphere(" + std::to_string(n) + ")";
    case Kind::Cpn: return "cpn(" + std::to_string(n) + ")";
    case Kind::Torus: return "torus(" + short_number(major) + "," + short_number(minor) + ")";
    case Kind::Product: {
        std::string s = "product(";
        for (std::size_t i = 0; i < factors.size(); ++i) {
            if (i) s += ",";
            s += factors[i].to_string();
        }
        return s + ")";
    }
    }
    return {};
}

int CatalogTag::dimension() const
{
    switch (kind) {
    case Kind::Sphere: return n;
    case Kind::Torus: return 2;
    case Kind::Cpn: return 2 * n;
    case Kind::Product: {
        int d = 0;
        for (const auto& f : factors) d += f.dimension();
        return d;
    }
    }
    return 0;
}

int CatalogTag::ambient_dimension() const
{
    switch (kind) {
    case Kind::Sphere: return n + 1;
    case Kind::Torus: return 3;
    case Kind::Cpn: return 0;
    case Kind::Product: {
        int d = 0;
        for (const auto& f : factors) {
            int a = f.ambient_dimension();
            if (a == 0) return 0;
            d += a;
        }
        return d;
    }
    }
    return 0;
}

std::vector<int> CatalogTag::mod2_betti() const
{
    switch (kind) {
    case Kind::Sphere: {
        std::vector<int> b(static_cast<std::size_t>(n) + 1, 0);
        b.front() = 1;
        b.back() += 1;
        return b;
    }
    case Kind::Torus: return {1, 2, 1};
    case Kind::Cpn: {
        std::vector<int> b(static_cast<std::size_t>(2 * n) + 1, 0);
        for (int k = 0; k <= 2 * n; k += 2) b[static_cast<std::size_t>(k)] = 1;
        return b;
    }
    case Kind::Product: {
        std::vector<int> acc{1};
        for (const auto& f : factors) {
            auto fb = f.mod2_betti();
            std::vector<int> next(acc.size() + fb.size() - 1, 0);
            for (std::size_t i = 0; i < acc.size(); ++i)
                for (std::size_t j = 0; j < fb.size(); ++j) next[i + j] += acc[i] * fb[j];
            acc = std::move(next);
        }
        return acc;
    }
    }
    return {};
}

bool operator==(const CatalogTag& a, const CatalogTag& b)
{
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case CatalogTag::Kind::Sphere:
    case CatalogTag::Kind::Cpn: return a.n == b.n;
    case CatalogTag::Kind::Torus: return a.major == b.major && a.minor == b.minor;
    case CatalogTag::Kind::Product: return a.factors == b.factors;
    }
    return false;
}

}  // namespace morseflow

#pragma once

// Named manifolds the engine knows how to present (or, for CP^n, only
// to use algebraically): sphere(n), torus(R,r), cpn(n) and products.

#include <string>
#include <string_view>
#include <vector>

namespace morseflow {

struct CatalogTag {
    enum class Kind { Sphere, Torus, Cpn, Product };

    Kind kind = Kind::Sphere;
    int n = 2;                        // sphere(n), cpn(n)
    double major = 2.0;               // torus(R, r)
    double minor = 1.0;
    std::vector<CatalogTag> factors;  // product(...)

    static CatalogTag sphere(int n);
    static CatalogTag torus(double major, double minor);
    static CatalogTag cpn(int n);
    static CatalogTag product(std::vector<CatalogTag> factors);

    // "sphere(2)", "torus(2,1)", "cpn(2)", "product(sphere(2),sphere(2))"
    static CatalogTag parse(std::string_view text);
    std::string to_string() const;

    int dimension() const;
    int ambient_dimension() const;  // 0 for cpn (no geometric presentation)

    // Mod-2 Betti numbers b_0..b_dim (Kunneth for products).
    std::vector<int> mod2_betti() const;
};

bool operator==(const CatalogTag& a, const CatalogTag& b);

}  // namespace morseflow

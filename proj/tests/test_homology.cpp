#include "doctest.h"

#include <random>

#include "pathlab/homology.hpp"
#include "support.hpp"

using namespace pathlab;
using fixture::unimodular;

TEST_CASE("selectors: validation and 1-based conversion") {
    const BundleSelector s = BundleSelector::from_one_based({1, 2}, 3);
    CHECK(s.indices() == std::vector<int>{0, 1});
    CHECK(s.one_based() == std::vector<int>{1, 2});
    CHECK(s.is_strongest_block());
    CHECK(s.label() == "{1,2}");
    CHECK_FALSE(BundleSelector({1, 2}, 3).is_strongest_block());
    CHECK_FALSE(BundleSelector({0, 2}, 3).contiguous());
    CHECK_THROWS_AS(BundleSelector({}, 3), NumericalError);
    CHECK_THROWS_AS(BundleSelector({2, 1}, 3), NumericalError);
    CHECK_THROWS_AS(BundleSelector({3}, 3), NumericalError);
    CHECK_THROWS_AS(BundleSelector::from_one_based({0}, 3), NumericalError);
}

TEST_CASE("induced map on H_1 is A and on H_n is det A") {
    for (const auto& rows : {oracle::kCat, oracle::kCompanion, oracle::kPalindromic}) {
        const auto a = unimodular(rows);
        CHECK(induced_on_Hk(a, 1) == a.entries());
        const IntMatrix top = induced_on_Hk(a, a.dim());
        REQUIRE(top.size() == 1);
        CHECK(top(0, 0) == a.determinant());
    }
}

TEST_CASE("induced maps agree with the cofactor-minor oracle") {
    const auto a = unimodular(oracle::kPalindromic);
    for (int k = 1; k <= 4; ++k) {
        const IntMatrix m = induced_on_Hk(a, k);
        const auto ref = oracle::minors(oracle::kPalindromic, k);
        for (std::size_t i = 0; i < ref.size(); ++i)
            for (std::size_t j = 0; j < ref.size(); ++j) CHECK(m(i, j) == ref[i][j]);
    }
}

TEST_CASE("property: spectrum of the induced map is all k-fold eigenvalue products") {
    for (const auto& rows : {oracle::kCat, oracle::kCompanion, oracle::kPalindromic}) {
        const auto a = unimodular(rows);
        const auto roots = oracle::eigenvalues_by_bisection(oracle::to_real(rows));
        const int n = a.dim();
        REQUIRE(static_cast<int>(roots.size()) == n);
        for (int k = 1; k < n; ++k) {
            std::vector<double> products;
            for (const auto& sub : oracle::subsets(n, k)) {
                double p = 1;
                for (int i : sub) p *= roots[i];
                products.push_back(p);
            }
            std::sort(products.begin(), products.end());
            Eigen::EigenSolver<BigMatrix> es(BigMatrix(induced_on_Hk(a, k).cast<double>()));
            std::vector<double> got;
            for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
                CHECK(std::abs(es.eigenvalues()(i).imag()) < 1e-8);
                got.push_back(es.eigenvalues()(i).real());
            }
            std::sort(got.begin(), got.end());
            for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - products[i]) <= 1e-8 * (1 + products[i]));
        }
    }
}

TEST_CASE("topological growth of the cat map") {
    const auto a = unimodular(oracle::kCat);
    const TopologicalGrowth g = topological_growth(a, BundleSelector({0}, 2));
    CHECK(g.lambda_w == doctest::Approx(oracle::cat_lambda()).epsilon(1e-12));
    CHECK(g.lambda_w == doctest::Approx(2.6180339887).epsilon(1e-10));
    const auto v = oracle::null_vector2(oracle::to_real(oracle::kCat), oracle::cat_lambda());
    CHECK(std::abs(g.h_w.coefficients[0] - std::abs(v[0])) < 1e-12);
    CHECK(std::abs(g.h_w.coefficients[1] - std::abs(v[1])) < 1e-12);
    CHECK(g.h_w.coefficients[0] == doctest::Approx(0.8507).epsilon(1e-4));
    CHECK(g.h_w.coefficients[1] == doctest::Approx(0.5257).epsilon(1e-4));
    // Nondegenerate one-form witness.
    CHECK(pairing(g.h_w, {1.0, 0.0}) == doctest::Approx(0.8507).epsilon(1e-4));
}

TEST_CASE("topological growth of the companion unstable plane") {
    const auto a = unimodular(oracle::kCompanion);
    const auto real = oracle::to_real(oracle::kCompanion);
    const auto roots = oracle::eigenvalues_by_bisection(real);
    const TopologicalGrowth g = topological_growth(a, BundleSelector({0, 1}, 3));
    CHECK(g.lambda_w == doctest::Approx(roots[0] * roots[1]).epsilon(1e-12));
    CHECK(g.lambda_w == doctest::Approx(1.0 / roots[2]).epsilon(1e-12));
    CHECK(g.lambda_w == doctest::Approx(5.0489).epsilon(1e-4));
    CHECK(g.eigen_residual <= 1e-9 * g.lambda_w);
    // h_W is the Plucker vector of v1^v2; v1 x v2 lists its components (dx2^dx3, -dx1^dx3, dx1^dx2).
    const auto v1 = oracle::null_vector3(real, roots[0]);
    const auto v2 = oracle::null_vector3(real, roots[1]);
    const auto c = oracle::cross(v1, v2);
    std::vector<double> plucker = {c[2], -c[1], c[0]};
    const double nrm = oracle::norm(plucker);
    double big = 0;
    for (double x : plucker) big = std::abs(x) > std::abs(big) ? x : big;
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(g.h_w.coefficients[i] == doctest::Approx(plucker[i] / nrm * (big < 0 ? -1 : 1)).epsilon(1e-10));
    }
}

TEST_CASE("full selector gives the fundamental class") {
    const TopologicalGrowth g = topological_growth(unimodular(oracle::kCompanion), BundleSelector({0, 1, 2}, 3));
    CHECK(g.lambda_w == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(g.h_w.coefficients.size() == 1);
    CHECK(g.h_w.coefficients[0] == doctest::Approx(1.0));
}

TEST_CASE("non-simple products are rejected") {
    // Reciprocal spectrum: lambda1 lambda4 = lambda2 lambda3 = 1.
    const auto a = unimodular(oracle::kPalindromic);
    try {
        topological_growth(a, BundleSelector({0, 3}, 4));
        FAIL("expected NonSimpleTopEigenvalue");
    } catch (const NumericalError& e) {
        CHECK(e.kind() == ErrorKind::NonSimpleTopEigenvalue);
    }
    // The strongest pair is simple.
    CHECK_NOTHROW(topological_growth(a, BundleSelector({0, 1}, 4)));
}

TEST_CASE("property: inversion reverses the order and inverts the growth") {
    for (const auto& rows : {oracle::kCat, oracle::kCompanion, oracle::kPalindromic}) {
        const auto a = unimodular(rows);
        const int n = a.dim();
        std::vector<std::vector<std::int64_t>> inv_rows;
        for (int i = 0; i < n; ++i) {
            inv_rows.emplace_back();
            for (int j = 0; j < n; ++j) inv_rows.back().push_back(a.inverse()(i, j));
        }
        const auto b = UnimodularMatrix::from_rows(inv_rows);
        for (int k = 1; k < n; ++k) {
            for (const auto& sub : oracle::subsets(n, k)) {
                std::vector<int> mirrored;
                for (auto it = sub.rbegin(); it != sub.rend(); ++it) mirrored.push_back(n - 1 - *it);
                try {
                    const auto g = topological_growth(a, BundleSelector(sub, n));
                    const auto h = topological_growth(b, BundleSelector(mirrored, n));
                    CHECK(h.lambda_w * g.lambda_w == doctest::Approx(1.0).epsilon(1e-9));
                } catch (const NumericalError& e) {
                    CHECK(e.kind() == ErrorKind::NonSimpleTopEigenvalue);
                }
            }
        }
    }
}

TEST_CASE("property: wedge class is independent of frame order and basis") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int t = 0; t < 50; ++t) {
        Matrix f(4, 2);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 2; ++j) f(i, j) = g(rng);
        Matrix swapped(4, 2);
        swapped.col(0) = f.col(1);
        swapped.col(1) = f.col(0);
        Matrix mixed = f * (Matrix(2, 2) << 2.0, 1.0, -0.5, 3.0).finished();
        const auto h1 = wedge_class(f), h2 = wedge_class(swapped), h3 = wedge_class(mixed);
        for (std::size_t i = 0; i < h1.coefficients.size(); ++i) {
            CHECK(h1.coefficients[i] == doctest::Approx(h2.coefficients[i]).epsilon(1e-12));
            CHECK(h1.coefficients[i] == doctest::Approx(h3.coefficients[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("pairing with dual basis forms") {
    HomologyClass e1{1, {1.0, 0.0}};
    CHECK(pairing(e1, {1.0, 0.0}) == 1.0);
    CHECK(pairing(e1, {0.0, 1.0}) == 0.0);
    CHECK_THROWS_AS(pairing(e1, {1.0, 0.0, 0.0}), NumericalError);
}

TEST_CASE("report fragment names the basis") {
    const auto g = topological_growth(unimodular(oracle::kCompanion), BundleSelector({0, 1}, 3));
    const auto j = homology_fragment(g, 3);
    CHECK(j["k"] == 2);
    CHECK(j["basis"] == nlohmann::json::array({"dx1^dx2", "dx1^dx3", "dx2^dx3"}));
    CHECK(j["h_W"].size() == 3);
}

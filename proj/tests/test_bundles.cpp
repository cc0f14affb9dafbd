#include "doctest.h"

#include <random>

#include "pathlab/bundles.hpp"
#include "support.hpp"

using namespace pathlab;
using fixture::vec;

namespace {

struct EigenOracle {
    std::vector<double> values;
    std::vector<Matrix> lines;  // unit eigenvectors as 3x1 frames
};

EigenOracle companion_oracle() {
    const auto real = oracle::to_real(oracle::kCompanion);
    EigenOracle o;
    o.values = oracle::eigenvalues_by_bisection(real);
    for (double l : o.values) {
        const auto v = oracle::null_vector3(real, l);
        Matrix m(3, 1);
        m << v[0], v[1], v[2];
        o.lines.push_back(m);
    }
    return o;
}

Matrix span(const Matrix& a, const Matrix& b) {
    Matrix m(a.rows(), a.cols() + b.cols());
    m << a, b;
    return m;
}

AlignmentOptions fixed(int m) {
    AlignmentOptions o;
    o.iterations = m;
    o.auto_refine = false;
    o.gap_tolerance = 1.0;
    return o;
}

} // namespace

TEST_CASE("seed frame is orthonormal and generic") {
    const EigenOracle o = companion_oracle();
    for (int k = 1; k <= 3; ++k) {
        const Matrix s = seed_frame(3, k);
        CHECK((s.transpose() * s - Matrix::Identity(k, k)).norm() < 1e-14);
    }
    const Matrix s1 = seed_frame(3, 1);
    for (const auto& l : o.lines) CHECK(subspace_angle(s1, l) > 0.05);
    CHECK(seed_frame(3, 2).isApprox(seed_frame(3, 2)));
}

TEST_CASE("linear map: strongest and weakest subbundles are eigen-planes") {
    const TorusMap m = fixture::companion_linear();
    const EigenOracle o = companion_oracle();
    fixture::Points pts(1);
    for (int t = 0; t < 5; ++t) {
        const Vector x = pts.point(3);
        CHECK(subspace_angle(strongest_subbundle(m, x, 1).frame, o.lines[0]) <= 1e-12);
        CHECK(subspace_angle(strongest_subbundle(m, x, 2).frame, span(o.lines[0], o.lines[1])) <= 1e-12);
        CHECK(subspace_angle(weakest_subbundle(m, x, 1).frame, o.lines[2]) <= 1e-12);
        CHECK(subspace_angle(weakest_subbundle(m, x, 2).frame, span(o.lines[2], o.lines[1])) <= 1e-12);
    }
}

TEST_CASE("perturbed map: alignment at m = 30 and m = 40 agree") {
    const TorusMap m = fixture::companion_perturbed(0.3, 0.1);
    for (std::uint64_t i = 0; i < 40; ++i) {
        const Vector x = diagnostic_sample(m, 99, i);
        for (int k = 1; k <= 2; ++k) {
            const double ds = subspace_angle(strongest_subbundle(m, x, k, fixed(30)).frame,
                                             strongest_subbundle(m, x, k, fixed(40)).frame);
            const double dw = subspace_angle(weakest_subbundle(m, x, k, fixed(30)).frame,
                                             weakest_subbundle(m, x, k, fixed(40)).frame);
            CHECK(ds <= 1e-8);
            CHECK(dw <= 1e-8);
        }
    }
}

TEST_CASE("no gap for the identity map") {
    const TorusMap id(fixture::unimodular({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
    AlignmentOptions o;
    o.cap = 80;
    // Every frame is invariant, so the m and m+5 frames may agree; a hyperbolic-free
    // map must still not pass domination.
    const DominationReport r = domination_check(id, {1, 1, 1}, 20, 2, 3, o);
    CHECK_FALSE(r.holds);
    CHECK(r.margin < 0);
}

TEST_CASE("intersect_planes examples") {
    Matrix p(3, 2), q(3, 2);
    p << 1, 0, 0, 1, 0, 0;  // xy-plane
    q << 1, 0, 0, 0, 0, 1;  // xz-plane
    const Matrix w = intersect_planes(p, q);
    REQUIRE(w.cols() == 1);
    CHECK(subspace_angle(w, vec({1, 0, 0})) < 1e-14);

    const EigenOracle o = companion_oracle();
    const Matrix mid = intersect_planes(span(o.lines[0], o.lines[1]), span(o.lines[1], o.lines[2]));
    CHECK(subspace_angle(mid, o.lines[1]) <= 1e-10);

    try {
        intersect_planes(p, p);
        FAIL("expected IllConditionedIntersection");
    } catch (const NumericalError& e) {
        CHECK(e.kind() == ErrorKind::IllConditionedIntersection);
    }
    CHECK_THROWS_AS(intersect_planes(vec({1, 0, 0}), vec({0, 1, 0})), NumericalError);
}

TEST_CASE("property: intersections lie in both planes") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (int t = 0; t < 200; ++t) {
        const int n = 3 + t % 3;
        Matrix p(n, n - 1), q(n, n - 1);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n - 1; ++j) {
                p(i, j) = g(rng);
                q(i, j) = g(rng);
            }
        const Matrix w = intersect_planes(p, q);
        CHECK(w.cols() == n - 2);
        const Matrix qp = orthonormalize(p), qq = orthonormalize(q);
        CHECK((w - qp * (qp.transpose() * w)).norm() <= 1e-8);
        CHECK((w - qq * (qq.transpose() * w)).norm() <= 1e-8);
    }
}

TEST_CASE("splitting of the linear map is the eigen-splitting") {
    const TorusMap m = fixture::companion_linear();
    const EigenOracle o = companion_oracle();
    fixture::Points pts(3);
    for (int t = 0; t < 10; ++t) {
        const SplittingFrame sp = splitting_at(m, pts.point(3), {1, 1, 1}, {}, true);
        REQUIRE(sp.blocks.size() == 3);
        for (int b = 0; b < 3; ++b) {
            CHECK(subspace_angle(sp.blocks[b], o.lines[b]) <= 1e-10);
            CHECK(sp.invariance_residual[b] <= 1e-10);
        }
        CHECK(sp.spanning_volume >= 1e-6);
        const SplittingFrame sp2 = splitting_at(m, pts.point(3), {2, 1});
        CHECK(subspace_angle(sp2.blocks[0], span(o.lines[0], o.lines[1])) <= 1e-10);
    }
    CHECK_THROWS_AS(splitting_at(m, vec({0.1, 0.2, 0.3}), {1, 1}), NumericalError);
}

TEST_CASE("perturbed splitting away from the supports is the eigen-splitting") {
    const TorusMap m = fixture::companion_perturbed(0.5, 0.12);
    const EigenOracle o = companion_oracle();
    fixture::Points pts(4);
    int found = 0;
    AlignmentOptions opts;
    opts.auto_refine = false;
    for (int t = 0; t < 400 && found < 5; ++t) {
        const Vector x = pts.point(3);
        bool clear = true;
        Vector f = x, b = x;
        for (int j = 0; j <= opts.iterations + 6 && clear; ++j) {
            clear = !m.in_any_support(f) && !m.in_any_support(b);
            f = m.apply(f);
            b = m.inverse_apply(b);
        }
        if (!clear) continue;
        ++found;
        const SplittingFrame sp = splitting_at(m, x, {1, 1, 1}, opts);
        for (int i = 0; i < 3; ++i) CHECK(subspace_angle(sp.blocks[i], o.lines[i]) <= 1e-9);
    }
    CHECK(found == 5);
}

TEST_CASE("perturbed splitting: invariance residual and its decrease with m") {
    const TorusMap m = fixture::companion_perturbed(0.5, 0.12);
    for (std::uint64_t i = 1; i < 40; i += 2) {
        const Vector x = diagnostic_sample(m, 5, i);
        const SplittingFrame sp = splitting_at(m, x, {1, 1, 1}, {}, true);
        for (double r : sp.invariance_residual) CHECK(r <= 1e-6);
        double prev = std::numeric_limits<double>::infinity();
        for (int mm : {5, 10, 20, 40}) {
            const SplittingFrame s = splitting_at(m, x, {1, 1, 1}, fixed(mm), true);
            const double worst = *std::max_element(s.invariance_residual.begin(), s.invariance_residual.end());
            CHECK(worst <= std::max(prev, 1e-10));
            prev = worst;
        }
    }
}

TEST_CASE("domination margins of the linear companion") {
    const TorusMap m = fixture::companion_linear();
    const EigenOracle o = companion_oracle();
    for (int l : {1, 2, 3}) {
        const DominationReport r = domination_check(m, {1, 1, 1}, 200, l);
        const double expect = 0.5 * std::pow(o.values[0] / o.values[1], l) - 1.0;
        CHECK(r.margin == doctest::Approx(expect).epsilon(1e-9));
        CHECK(r.holds);
        CHECK(r.rejected == 0);
    }
    // (lambda2/lambda1)^2 is about 0.229 and lambda2/lambda1 about 0.479, so both are below 1/2.
    CHECK(std::pow(o.values[1] / o.values[0], 2) == doctest::Approx(0.229).epsilon(1e-2));
    CHECK(o.values[1] / o.values[0] == doctest::Approx(0.479).epsilon(1e-2));
    const auto j = to_json(domination_check(m, {1, 1, 1}, 10, 2));
    for (const char* key : {"l", "margin", "holds", "samples"}) CHECK(j.contains(key));
}

TEST_CASE("property: domination margin tends to the linear margin as theta_max -> 0") {
    const double linear = domination_check(fixture::companion_linear(), {1, 1, 1}, 200, 3).margin;
    double prev = std::numeric_limits<double>::infinity();
    for (double theta : {0.4, 0.2, 0.1, 0.05, 0.01}) {
        const DominationReport r = domination_check(fixture::companion_perturbed(theta, 0.12), {1, 1, 1}, 400, 3);
        const double dist = std::abs(r.margin - linear);
        CHECK(dist <= prev * 1.05 + 1e-9);
        prev = dist;
    }
    CHECK(prev < 0.1);
}

TEST_CASE("closedness condition for the linear companion") {
    const TorusMap m = fixture::companion_linear();
    const EigenOracle o = companion_oracle();
    const ClosednessReport r1 = closedness_condition_check(m, BundleSelector({0, 1}, 3), 1, 200);
    CHECK(r1.sup_lower == doctest::Approx(o.values[0]).epsilon(1e-10));
    CHECK(r1.inf_top == doctest::Approx(o.values[0] * o.values[1]).epsilon(1e-10));
    CHECK(r1.holds);
    double prev = 0;
    for (int n = 1; n <= 4; ++n) {
        const ClosednessReport r = closedness_condition_check(m, BundleSelector({0, 1}, 3), n, 100);
        // Margin ln(inf/sup) = n ln lambda2.
        CHECK(r.margin == doctest::Approx(n * std::log(o.values[1])).epsilon(1e-9));
        CHECK(r.margin > prev);
        prev = r.margin;
    }
    // The bundle {2,3} contains the contracting direction: weak expansion below 1.
    const ClosednessReport bad = closedness_condition_check(m, BundleSelector({1, 2}, 3), 2, 100);
    CHECK_FALSE(bad.holds);
    CHECK_THROWS_AS(closedness_condition_check(m, BundleSelector({0}, 3), 1, 10), NumericalError);
}

TEST_CASE("closedness condition on perturbed maps has positive margin at n = 3") {
    for (auto [theta, rho] : {std::pair{0.3, 0.1}, std::pair{0.5, 0.12}}) {
        const ClosednessReport r = closedness_condition_check(fixture::companion_perturbed(theta, rho),
                                                              BundleSelector({0, 1}, 3), 3, 500);
        CHECK(r.holds);
        CHECK(r.margin > 0.5);
        CHECK(r.rejected == 0);
    }
}

TEST_CASE("diagnostic samples alternate between the torus and the supports") {
    const TorusMap m = fixture::companion_perturbed(0.5, 0.12);
    for (std::uint64_t i = 1; i < 200; i += 2) CHECK(m.in_any_support(diagnostic_sample(m, 1, i)));
    CHECK(diagnostic_sample(m, 1, 4).isApprox(diagnostic_sample(m, 1, 4)));
}

#include "doctest.h"

#include "pathlab/lyapunov.hpp"
#include "support.hpp"

using namespace pathlab;
using fixture::vec;

namespace {

std::vector<double> companion_logs() {
    std::vector<double> out;
    for (double r : oracle::eigenvalues_by_bisection(oracle::to_real(oracle::kCompanion))) out.push_back(std::log(std::abs(r)));
    return out;
}

const std::vector<double> kLogs = companion_logs();

oracle::Rows columns(const Matrix& m) {
    oracle::Rows out;
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(fixture::std_vec(m.col(j)));
    return out;
}

} // namespace

TEST_CASE("QR spectrum of linear maps is the log spectrum") {
    const auto roots = oracle::eigenvalues_by_bisection(oracle::to_real(oracle::kCompanion));
    const auto s = qr_spectrum(fixture::companion_linear(), vec({0.1, 0.2, 0.3}), 400);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(s[i] - std::log(std::abs(roots[i]))) <= 1e-8);
    const auto c = qr_spectrum(fixture::cat_linear(), vec({0.4, 0.1}), 400);
    CHECK(std::abs(c[0] - std::log(oracle::cat_lambda())) <= 1e-8);
    CHECK(std::abs(c[1] + std::log(oracle::cat_lambda())) <= 1e-8);
    for (double v : qr_spectrum(TorusMap(fixture::unimodular({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})), vec({0.5, 0.5, 0.5}), 50))
        CHECK(std::abs(v) <= 1e-14);
    CHECK_THROWS_AS(qr_spectrum(fixture::cat_linear(), vec({0.4, 0.1}), 0), NumericalError);
}

TEST_CASE("property: QR spectrum of a perturbed map sums to zero") {
    const TorusMap m = fixture::companion_perturbed(0.5, 0.12);
    fixture::Points pts(21);
    for (int t = 0; t < 5; ++t) {
        const auto s = qr_spectrum(m, pts.point(3), 2000);
        CHECK(std::abs(s[0] + s[1] + s[2]) <= 1e-6);
        CHECK(s[0] > s[1]);
        CHECK(s[1] > s[2]);
    }
}

TEST_CASE("one-step log-Jacobian") {
    const TorusMap lin = fixture::companion_linear();
    for (int i = 0; i < 3; ++i) {
        Matrix f(3, 1);
        f.col(0) = lin.eigen().vectors.col(i);
        CHECK(one_step_log_jacobian(lin, vec({0.3, 0.3, 0.3}), f) == doctest::Approx(kLogs[i]).epsilon(1e-10));
        CHECK(adapted_log_jacobian(lin, vec({0.3, 0.3, 0.3}), f, {i}) == doctest::Approx(kLogs[i]).epsilon(1e-10));
    }
    const TorusMap m = fixture::companion_perturbed(0.5, 0.12);
    fixture::Points pts(22);
    for (int t = 0; t < 200; ++t) {
        const Vector x = pts.point(3);
        const Matrix frame = Matrix::Random(3, 2);
        const double ref = std::log(oracle::gram_volume(columns(m.differential(x) * frame)) /
                                    oracle::gram_volume(columns(frame)));
        CHECK(one_step_log_jacobian(m, x, frame) == doctest::Approx(ref).epsilon(1e-10));
        CHECK(std::abs(one_step_log_jacobian(m, x, Matrix::Identity(3, 3))) <= 1e-12);
        const Matrix mixed = frame * (Matrix(2, 2) << 1.5, -0.3, 0.7, 2.0).finished();
        CHECK(std::abs(one_step_log_jacobian(m, x, mixed) - one_step_log_jacobian(m, x, frame)) <= 1e-10);
    }
    CHECK_THROWS_AS(one_step_log_jacobian(m, vec({0.1, 0.1, 0.1}), Matrix::Zero(3, 1)), NumericalError);
}

TEST_CASE("integrated exponents of linear maps are exact with zero spread") {
    const TorusMap lin = fixture::companion_linear();
    for (Estimator e : {Estimator::Uniform, Estimator::SupportAdapted}) {
        for (int i = 0; i < 3; ++i) {
            const ExponentReport r = integrated_exponent(lin, BundleSelector({i}, 3), 500, {}, 1, 1, e);
            CHECK(std::abs(r.estimate - kLogs[i]) <= 1e-9);
            CHECK(r.std_error <= 1e-12);
            CHECK(r.rejected == 0);
        }
    }
    const ExponentReport u = integrated_exponent(lin, BundleSelector({0, 1}, 3), 200);
    CHECK(std::abs(u.estimate - kLogs[0] - kLogs[1]) <= 1e-9);
    const ExponentReport c = integrated_exponent(fixture::cat_linear(), BundleSelector({0}, 2), 200);
    CHECK(c.estimate == doctest::Approx(0.9624236501).epsilon(1e-9));
}

TEST_CASE("zero amplitude reproduces the linear exponents") {
    const TorusMap zero = fixture::companion_perturbed(0.0, 0.12);
    const auto rs = integrated_exponents(zero, {1, 1, 1}, 2000);
    REQUIRE(rs.size() == 4);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(rs[i].estimate - kLogs[i]) <= 1e-9);
    CHECK(std::abs(rs[3].estimate) <= 1e-9);
    CHECK(rs[3].bundle.empty());
    const auto adapted = integrated_exponent(zero, BundleSelector({1}, 3), 1000, {}, 1, 1, Estimator::SupportAdapted);
    CHECK(std::abs(adapted.estimate - kLogs[1]) <= 1e-9);
}

TEST_CASE("perturbed exponents: sum within three standard errors, estimators agree") {
    const TorusMap m = fixture::companion_perturbed(0.5, 0.12);
    const auto rs = integrated_exponents(m, {1, 1, 1}, 20000);
    CHECK(std::abs(rs[3].estimate) <= 3 * rs[3].std_error + 1e-12);
    for (std::size_t i = 0; i < 3; ++i) CHECK(rs[i].acceptable());
    const auto adapted = integrated_exponent(m, BundleSelector({1}, 3), 20000, {}, 1, 1, Estimator::SupportAdapted);
    const double combined = std::hypot(adapted.std_error, rs[1].std_error);
    CHECK(std::abs(adapted.estimate - rs[1].estimate) <= 3 * combined);
    CHECK(adapted.std_error < rs[1].std_error);
    CHECK(adapted.sampled_volume > 0.0);
    CHECK(adapted.sampled_volume < 0.05);
}

TEST_CASE("standard error scales like one over root N") {
    const TorusMap m = fixture::companion_perturbed(0.5, 0.12);
    std::vector<double> scaled;
    for (std::int64_t n : {1000, 10000, 100000}) {
        const ExponentReport r = integrated_exponent(m, BundleSelector({1}, 3), n, {}, 7, 1, Estimator::SupportAdapted);
        scaled.push_back(r.std_error * std::sqrt(static_cast<double>(n)));
    }
    for (double s : scaled) CHECK(std::abs(s / scaled.back() - 1.0) <= 0.2);
}

TEST_CASE("estimates do not depend on the worker count") {
    const TorusMap m = fixture::companion_perturbed(0.5, 0.12);
    for (Estimator e : {Estimator::Uniform, Estimator::SupportAdapted}) {
        const auto a = integrated_exponent(m, BundleSelector({1}, 3), 3000, {}, 5, 1, e);
        const auto b = integrated_exponent(m, BundleSelector({1}, 3), 3000, {}, 5, 3, e);
        CHECK(a.estimate == b.estimate);
        CHECK(a.std_error == b.std_error);
        CHECK(to_json(a).dump() == to_json(b).dump());
    }
    const auto s1 = integrated_exponent(m, BundleSelector({1}, 3), 3000, {}, 5);
    const auto s2 = integrated_exponent(m, BundleSelector({1}, 3), 3000, {}, 6);
    CHECK(s1.estimate != s2.estimate);
}

TEST_CASE("Birkhoff averages") {
    const TorusMap lin = fixture::companion_linear();
    const BirkhoffReport b = birkhoff_exponent(lin, BundleSelector({1}, 3), vec({0.11, 0.52, 0.73}), 2000);
    CHECK(std::abs(b.estimate - kLogs[1]) <= 1e-8);
    CHECK(b.std_error <= 1e-10);
    CHECK(b.steps == 2000);
    CHECK_THROWS_AS(birkhoff_exponent(lin, BundleSelector({1}, 3), vec({0.1, 0.5, 0.7}), 0), NumericalError);

    const TorusMap m = fixture::companion_perturbed(0.5, 0.12);
    const BirkhoffReport p = birkhoff_exponent(m, BundleSelector({1}, 3), vec({0.11, 0.52, 0.73}), 100000);
    const auto mc = integrated_exponent(m, BundleSelector({1}, 3), 20000, {}, 1, 1, Estimator::SupportAdapted);
    CHECK(std::abs(p.estimate - mc.estimate) <= 3 * std::hypot(p.std_error, mc.std_error));
}

TEST_CASE("estimator names and report keys") {
    CHECK(estimator_from_string("uniform") == Estimator::Uniform);
    CHECK(estimator_from_string(to_string(Estimator::SupportAdapted)) == Estimator::SupportAdapted);
    CHECK_THROWS_AS(estimator_from_string("mcmc"), NumericalError);
    const auto r = integrated_exponent(fixture::companion_linear(), BundleSelector({1}, 3), 10);
    const auto j = to_json(r);
    CHECK(j["bundle"] == nlohmann::json::array({2}));
    CHECK(j.contains("stderr"));
    CHECK(j["N"] == 10);
    CHECK_THROWS_AS(integrated_exponent(fixture::companion_linear(), BundleSelector({1}, 3), 0), NumericalError);
    CHECK_THROWS_AS(integrated_exponents(fixture::companion_linear(), {1, 1}, 10), NumericalError);
}

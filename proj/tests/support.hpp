#pragma once

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pathlab/torusmap.hpp"

namespace fixture {

inline pathlab::UnimodularMatrix unimodular(const oracle::IntRows& rows) {
    std::vector<std::vector<std::int64_t>> r;
    for (const auto& row : rows) r.emplace_back(row.begin(), row.end());
    return pathlab::UnimodularMatrix::from_rows(r);
}

inline pathlab::Vector vec(std::initializer_list<double> xs) {
    pathlab::Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

inline std::vector<double> std_vec(const pathlab::Vector& v) { return {v.data(), v.data() + v.size()}; }

inline oracle::Rows rows(const pathlab::Matrix& m) {
    oracle::Rows r(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
    return r;
}

inline pathlab::Vector rotation_center() { return vec({0.3183, 0.6180, 0.4142}); }

inline pathlab::TorusMap companion_linear() { return pathlab::TorusMap(unimodular(oracle::kCompanion)); }

/// Companion map with one rotation mixing the weak-unstable and strong-unstable planes.
inline pathlab::TorusMap companion_perturbed(double theta_max, double rho) {
    return pathlab::TorusMap::build(unimodular(oracle::kCompanion), {{rotation_center(), {1, 0}, rho, theta_max}});
}

inline pathlab::TorusMap cat_linear() { return pathlab::TorusMap(unimodular(oracle::kCat)); }

/// Uniform points from a fixed linear congruential sequence (independent of the library RNG).
struct Points {
    std::uint64_t state;
    explicit Points(std::uint64_t s) : state(s * 2654435761u + 1) {}
    double next() {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    }
    pathlab::Vector point(int n) {
        pathlab::Vector x(n);
        for (int i = 0; i < n; ++i) x(i) = next();
        return x;
    }
};

} // namespace fixture

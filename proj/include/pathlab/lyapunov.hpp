#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "pathlab/bundles.hpp"

namespace pathlab {

/// Uniform: plain Monte Carlo over the torus with the Euclidean one-step Jacobian.
/// SupportAdapted: the same integral with the Jacobian measured in linear eigen-coordinates,
/// which differs from the Euclidean one by a coboundary and equals the linear value off the
/// rotation supports; only the supports are sampled.
enum class Estimator { Uniform, SupportAdapted };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);

struct ExponentReport {
    std::vector<int> bundle;  // 1-based; empty means the full spectrum
    double estimate = 0.0;
    double std_error = 0.0;
    std::int64_t samples = 0;
    int alignment = 0;
    std::uint64_t seed = 0;
    std::int64_t rejected = 0;
    Estimator estimator = Estimator::Uniform;
    double sampled_volume = 1.0;  // measure of the sampled region

    double rejection_rate() const noexcept {
        return samples > 0 ? static_cast<double>(rejected) / static_cast<double>(samples) : 0.0;
    }
    /// Samples whose splitting failed are dropped; more than 0.1% makes the estimate unusable.
    bool acceptable() const noexcept { return rejected * 1000 < samples; }
};

/// Orthonormalized-cocycle estimates of all n exponents along the orbit of x, sorted
/// descending. The first `warmup` steps align the frame and are not averaged.
std::vector<double> qr_spectrum(const TorusMap& map, const Vector& x, int steps, int warmup = 40);

/// ln(k_volume(Df(x) frame) / k_volume(frame)).
double one_step_log_jacobian(const TorusMap& map, const Vector& x, const Matrix& frame);

/// ln|det(P L^{-1} Df(x) frame)| - ln|det(P L^{-1} frame)|, P the rows `indices` and L the eigenvector matrix.
double adapted_log_jacobian(const TorusMap& map, const Vector& x, const Matrix& frame, const std::vector<int>& indices);

/// Monte Carlo space average of the one-step log-Jacobian on the bundle S. Sample i uses
/// its own stream derived from (seed, i), and accumulation is in index order.
ExponentReport integrated_exponent(const TorusMap& map, const BundleSelector& s, std::int64_t samples,
                                   const AlignmentOptions& opts = {}, std::uint64_t seed = 1, int threads = 1,
                                   Estimator estimator = Estimator::Uniform);

/// All blocks of the splitting `dims` from the same samples, plus their sum as the last entry.
std::vector<ExponentReport> integrated_exponents(const TorusMap& map, const std::vector<int>& dims,
                                                 std::int64_t samples, const AlignmentOptions& opts = {},
                                                 std::uint64_t seed = 1, int threads = 1,
                                                 Estimator estimator = Estimator::Uniform);

struct BirkhoffReport {
    std::vector<int> bundle;
    double estimate = 0.0;
    double std_error = 0.0;  // batch means
    std::int64_t steps = 0;
    int batches = 0;
    std::vector<double> x0;
};

/// Time average of the restricted one-step log-Jacobian along the orbit of x0. Bundle
/// frames are carried along the stored orbit: the weak part by a single backward pass,
/// the strong part forward.
BirkhoffReport birkhoff_exponent(const TorusMap& map, const BundleSelector& s, const Vector& x0, std::int64_t steps,
                                 const AlignmentOptions& opts = {}, int batches = 100);

nlohmann::json to_json(const ExponentReport& r);
nlohmann::json to_json(const BirkhoffReport& r);

} // namespace pathlab

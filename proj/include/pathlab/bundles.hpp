#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "pathlab/homology.hpp"
#include "pathlab/torusmap.hpp"

namespace pathlab {

struct AlignmentOptions {
    int iterations = 40;
    bool auto_refine = true;       // double m until the Cauchy increment drops below tolerance
    double cauchy_tolerance = 1e-9;
    int cap = 200;
    double gap_tolerance = 1e-6;   // NoGap if the m vs m+5 angle is still above this at the cap
};

struct AlignedFrame {
    Matrix frame;          // n x k orthonormal; the first j columns span the j-dimensional result
    int iterations = 0;    // m actually used
    double increment = 0;  // largest angle between the m and m+5 frames
};

/// The deterministic generic seed: first k columns of a fixed Hadamard-like orthonormal matrix.
Matrix seed_frame(int n, int k);

/// k most expanded directions at x: push the seed frame from f^{-m}(x) forward with Df.
AlignedFrame strongest_subbundle(const TorusMap& map, const Vector& x, int k, const AlignmentOptions& opts = {});
/// k most contracted directions at x: pull the seed frame from f^{m}(x) back with D(f^{-1}).
AlignedFrame weakest_subbundle(const TorusMap& map, const Vector& x, int k, const AlignmentOptions& opts = {});

/// Orthonormal basis of span(P) ∩ span(Q); requires cols(P) + cols(Q) > n.
/// Throws IllConditionedIntersection when the intersection is not transversal.
Matrix intersect_planes(const Matrix& p, const Matrix& q);

struct SplittingFrame {
    Vector x;
    std::vector<int> dims;
    std::vector<Matrix> blocks;  // ordered from most to least expanded
    int m_forward = 0;
    int m_backward = 0;
    double spanning_volume = 0.0;
    std::vector<double> invariance_residual;  // angle(Df(x) E_i(x), E_i(f(x))); empty unless requested
};

SplittingFrame splitting_at(const TorusMap& map, const Vector& x, const std::vector<int>& dims,
                            const AlignmentOptions& opts = {}, bool with_residuals = false);

/// Frame of the invariant bundle spanned by a contiguous block of eigen-indices.
Matrix bundle_frame(const TorusMap& map, const Vector& x, const BundleSelector& s, const AlignmentOptions& opts = {});

/// Sample point `index` for diagnostics: odd indices land inside a rotation support
/// when the map has rotations, even indices are uniform on the torus.
Vector diagnostic_sample(const TorusMap& map, std::uint64_t seed, std::uint64_t index);

/// Product Df(f^{l-1}x) ... Df(x).
Matrix iterated_differential(const TorusMap& map, const Vector& x, int steps);

struct DominationReport {
    int l = 0;
    double margin = 0.0;
    bool holds = false;
    std::int64_t samples = 0;
    std::int64_t rejected = 0;
};

/// Checks ||Df^l u|| < 1/2 ||Df^l v|| for unit u in each weaker block and unit v in the
/// next stronger one (via extreme singular values, which covers all unit vectors).
DominationReport domination_check(const TorusMap& map, const std::vector<int>& dims, std::int64_t samples, int l,
                                  std::uint64_t seed = 11, const AlignmentOptions& opts = {}, int threads = 1);

struct ClosednessReport {
    int steps = 0;
    double sup_lower = 0.0;  // sup of (k-1)-volume growth
    double inf_top = 0.0;    // inf of k-volume growth
    double margin = 0.0;     // ln(inf_top / sup_lower)
    bool holds = false;
    std::int64_t samples = 0;
    std::int64_t rejected = 0;
};

ClosednessReport closedness_condition_check(const TorusMap& map, const BundleSelector& s, int steps,
                                            std::int64_t samples, std::uint64_t seed = 13,
                                            const AlignmentOptions& opts = {}, int threads = 1);

nlohmann::json to_json(const DominationReport& r);
nlohmann::json to_json(const ClosednessReport& r);

} // namespace pathlab

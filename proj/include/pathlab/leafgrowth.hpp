#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathlab/torusmap.hpp"

namespace pathlab {

/// An iterated leaf disk f^n(W_r(x)) carried in the universal cover.
///
/// Every node keeps its parameter in the seed disk (k = 1: t in [-1, 1]; k = 2: a point
/// of the closed unit disk) and its point is always F^n applied to the seed point, so
/// refinement never interpolates. To keep coordinates small the whole disk is shifted
/// by an integer vector after each step; `shifts` records the schedule and
/// `point_from_parameter` replays it.
struct LeafDisk {
    struct Triangle {
        std::uint32_t v[3];
        std::uint8_t boundary;  // bit e set: edge (v[e], v[(e+1)%3]) lies on the disk boundary
    };

    int k = 1;
    int n = 0;
    Vector base;
    Matrix frame;
    double radius = 0.0;
    double delta = 0.0;
    int step = 0;
    std::size_t budget = 2'000'000;
    bool truncated = false;

    std::vector<double> params;  // stride k
    std::vector<double> points;  // stride n
    std::vector<double> boundary_angle;  // k = 2: angle of boundary nodes, NaN for interior nodes
    std::vector<Triangle> triangles;     // k = 2 only; k = 1 nodes are ordered by parameter
    std::unordered_map<std::uint64_t, std::uint32_t> midpoints;

    Vector anchor;                  // image of the base point under the shift schedule
    std::vector<Vector> shifts;     // integer shift applied after step t+1
    std::vector<double> volumes;    // volume after each recorded step, volumes[0] = seed

    std::size_t node_count() const noexcept { return points.size() / static_cast<std::size_t>(n); }
    Eigen::Map<const Eigen::VectorXd> point(std::size_t i) const {
        return Eigen::Map<const Eigen::VectorXd>(points.data() + i * static_cast<std::size_t>(n), n);
    }
    Vector seed_point(const double* param) const;
    Vector point_from_parameter(const TorusMap& map, const double* param) const;
};

/// Straight segment (k = 1) or triangulated round disk (k = 2) in the plane of `frame`
/// through x, sampled at spacing <= delta. Throws BadRadius unless 0 < r <= 0.01 and
/// delta > 0; BadFrame unless `frame` has 1 or 2 orthonormal columns.
LeafDisk seed_disk(const Vector& x, const Matrix& frame, double r, double delta, std::size_t budget = 2'000'000);

/// Advances the disk `steps` iterations, refining after each one so every segment
/// (k = 1) or triangle edge (k = 2) is at most delta. On budget overflow the disk is
/// left at the last consistent state with `truncated` set and the call returns.
LeafDisk& iterate_refine(LeafDisk& disk, const TorusMap& map, int steps, int threads = 1);

double disk_volume(const LeafDisk& disk);

/// Test form alpha = g(2 pi x_j) dx_i (k = 2) or the function g(2 pi x_j) (k = 1),
/// g in {sin, cos}. The exact form d(alpha) is what the current is tested against.
struct TestForm {
    bool cosine = false;
    int i = -1;  // dx index; -1 for 0-forms
    int j = 0;
    std::string label() const;
};

std::vector<TestForm> default_test_forms(int n, int k);

struct CurrentValue {
    int step = 0;
    double volume = 0.0;
    std::vector<double> components;     // C_n(dx_I) in WedgeIndex order
    std::vector<double> boundary_terms; // |C_n(d alpha)| per test form, via the boundary integral
    double boundary_length = 0.0;       // k = 2: length of the boundary polyline
};

CurrentValue current_eval(const LeafDisk& disk, const std::vector<TestForm>& forms);

/// Integral of alpha along the segment a -> b, exact for straight segments.
double segment_integral(const TestForm& form, const Eigen::Ref<const Eigen::VectorXd>& a,
                        const Eigen::Ref<const Eigen::VectorXd>& b);

struct CycleEstimate {
    int step = 0;
    Vector displacement;
    Vector integer_class;
    Vector normalized;
    double length = 0.0;
};

CycleEstimate asymptotic_cycle(const LeafDisk& disk);

struct ChiEstimate {
    double ratio = 0.0;               // ln(V_N / V_{N-1})
    double ratio_residual = 0.0;      // |ratio_N - ratio_{N-1}|
    double regression = 0.0;          // least-squares slope of ln V_n vs n
    double regression_residual = 0.0; // RMS residual of the fit
    std::vector<double> per_step_ratio;  // ln(V_n / V_{n-1}), entry 0 unused (NaN)
};

/// Needs at least 4 recorded volumes. Steps before `burn_in` are left out of the fit.
ChiEstimate chi_estimate(const std::vector<double>& volumes, int burn_in = 0);

/// Max distance between stored nodes and their recomputation from parameters, over
/// `count` nodes chosen deterministically from `seed`.
double provenance_error(const LeafDisk& disk, const TorusMap& map, std::size_t count, std::uint64_t seed = 5);

} // namespace pathlab

#include "pathlab/bundles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pathlab/parallel.hpp"

namespace pathlab {

namespace {

double nested_increment(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (Eigen::Index j = 1; j <= a.cols(); ++j) {
        worst = std::max(worst, subspace_angle(a.leftCols(j), b.leftCols(j)));
    }
    return worst;
}

// One alignment attempt at a fixed m: two frames, started m+5 and m steps away.
struct AlignmentPair {
    Matrix late;   // started at distance m
    Matrix early;  // started at distance m + 5
};

AlignmentPair push_strong(const TorusMap& map, const Vector& x, int k, int m) {
    const int n = map.dim();
    const int total = m + 5;
    std::vector<Vector> orbit(static_cast<std::size_t>(total) + 1);
    orbit[0] = x;
    for (int t = 1; t <= total; ++t) orbit[static_cast<std::size_t>(t)] = map.inverse_apply(orbit[static_cast<std::size_t>(t - 1)]);
    AlignmentPair out;
    out.early = seed_frame(n, k);
    Matrix df;
    for (int t = total; t >= 1; --t) {
        if (t == m) out.late = seed_frame(n, k);
        map.step(orbit[static_cast<std::size_t>(t)], df);
        out.early = df * out.early;
        orthonormalize_inplace(out.early);
        if (t <= m) {
            out.late = df * out.late;
            orthonormalize_inplace(out.late);
        }
    }
    return out;
}

AlignmentPair push_weak(const TorusMap& map, const Vector& x, int k, int m) {
    const int n = map.dim();
    const int total = m + 5;
    std::vector<Vector> orbit(static_cast<std::size_t>(total) + 1);
    orbit[0] = x;
    for (int t = 1; t <= total; ++t) orbit[static_cast<std::size_t>(t)] = map.apply(orbit[static_cast<std::size_t>(t - 1)]);
    AlignmentPair out;
    out.early = seed_frame(n, k);
    Matrix dinv;
    for (int t = total; t >= 1; --t) {
        if (t == m) out.late = seed_frame(n, k);
        map.inverse_step(orbit[static_cast<std::size_t>(t)], dinv);
        out.early = dinv * out.early;
        orthonormalize_inplace(out.early);
        if (t <= m) {
            out.late = dinv * out.late;
            orthonormalize_inplace(out.late);
        }
    }
    return out;
}

template <class Push>
AlignedFrame align(const TorusMap& map, const Vector& x, int k, const AlignmentOptions& opts, Push push) {
    const int n = map.dim();
    if (k < 1 || k > n) throw NumericalError(ErrorKind::InvalidArgument, "subbundle dimension out of range");
    if (opts.iterations < 1) throw NumericalError(ErrorKind::InvalidArgument, "alignment iterations must be >= 1");
    AlignedFrame out;
    int m = opts.iterations;
    while (true) {
        const AlignmentPair pair = push(map, x, k, m);
        out.frame = pair.early;
        out.iterations = m;
        out.increment = nested_increment(pair.late, pair.early);
        if (out.increment < opts.cauchy_tolerance || !opts.auto_refine || m >= opts.cap) break;
        m = std::min(2 * m, opts.cap);
    }
    if (!(out.increment <= opts.gap_tolerance)) {
        throw NumericalError(ErrorKind::NoGap, "frames at m and m+5 differ by " + std::to_string(out.increment) +
                                                   " rad (m = " + std::to_string(out.iterations) + ")");
    }
    return out;
}

} // namespace

Matrix seed_frame(int n, int k) {
    // Rows/columns of the Sylvester-Hadamard matrix, sign(-1)^{popcount(i & j)},
    // tilted by a small irrational offset so no entry pattern aligns with a lattice direction.
    Matrix g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double h = (__builtin_popcount(static_cast<unsigned>(i & j)) % 2 == 0) ? 1.0 : -1.0;
            const double frac = std::fmod((i + 1) * (j + 2) * 0.6180339887498949, 1.0) - 0.5;
            g(i, j) = h + 0.25 * frac;
        }
    }
    Matrix q = orthonormalize(g);
    return q.leftCols(k);
}

AlignedFrame strongest_subbundle(const TorusMap& map, const Vector& x, int k, const AlignmentOptions& opts) {
    return align(map, x, k, opts, push_strong);
}

AlignedFrame weakest_subbundle(const TorusMap& map, const Vector& x, int k, const AlignmentOptions& opts) {
    return align(map, x, k, opts, push_weak);
}

Matrix intersect_planes(const Matrix& p, const Matrix& q) {
    const int n = static_cast<int>(p.rows());
    if (q.rows() != n) throw NumericalError(ErrorKind::InvalidArgument, "planes live in different dimensions");
    const int d = static_cast<int>(p.cols() + q.cols()) - n;
    if (d < 1) throw NumericalError(ErrorKind::InvalidArgument, "planes of these dimensions need not intersect");
    const Matrix qp = orthonormalize(p);
    const Matrix qq = orthonormalize(q);
    const Matrix id = Matrix::Identity(n, n);
    Eigen::MatrixXd stacked(2 * n, n);
    stacked.topRows(n) = id - qp * qp.transpose();
    stacked.bottomRows(n) = id - qq * qq.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (n - d - 1 >= 0 && sv(n - d - 1) < 1e-6) {
        throw NumericalError(ErrorKind::IllConditionedIntersection,
                             "smallest relevant singular value " + std::to_string(sv(n - d - 1)));
    }
    Matrix w = svd.matrixV().rightCols(d);
    w = orthonormalize(w);
    normalize_signs(w);
    const double rp = (w - qp * (qp.transpose() * w)).norm();
    const double rq = (w - qq * (qq.transpose() * w)).norm();
    if (!(std::max(rp, rq) <= 1e-8)) {
        throw NumericalError(ErrorKind::IllConditionedIntersection, "intersection residual " + std::to_string(std::max(rp, rq)));
    }
    return w;
}

namespace {

struct BlockRange {
    int first;
    int last;
};

std::vector<BlockRange> ranges_of(const std::vector<int>& dims, int n) {
    std::vector<BlockRange> r;
    int s = 0;
    for (int d : dims) {
        if (d < 1) throw NumericalError(ErrorKind::InvalidArgument, "block dimensions must be positive");
        r.push_back({s, s + d - 1});
        s += d;
    }
    if (s != n) throw NumericalError(ErrorKind::InvalidArgument, "block dimensions must sum to n");
    return r;
}

Matrix block_from(const BlockRange& b, int n, const Matrix* strong, const Matrix* weak) {
    if (b.first == 0 && b.last == n - 1) return Matrix::Identity(n, n);
    if (b.first == 0) {
        Matrix f = strong->leftCols(b.last + 1);
        if (f.cols() == 1) normalize_signs(f);
        return f;
    }
    if (b.last == n - 1) {
        Matrix f = weak->leftCols(n - b.first);
        if (f.cols() == 1) normalize_signs(f);
        return f;
    }
    return intersect_planes(strong->leftCols(b.last + 1), weak->leftCols(n - b.first));
}

} // namespace

SplittingFrame splitting_at(const TorusMap& map, const Vector& x, const std::vector<int>& dims,
                            const AlignmentOptions& opts, bool with_residuals) {
    const int n = map.dim();
    const auto ranges = ranges_of(dims, n);
    int strong_k = 0, weak_k = 0;
    for (std::size_t b = 0; b < ranges.size(); ++b) {
        if (ranges[b].last < n - 1) strong_k = std::max(strong_k, ranges[b].last + 1);
        if (ranges[b].first > 0) weak_k = std::max(weak_k, n - ranges[b].first);
    }
    SplittingFrame out;
    out.x = x;
    out.dims = dims;
    AlignedFrame strong, weak;
    if (strong_k > 0) {
        strong = strongest_subbundle(map, x, strong_k, opts);
        out.m_forward = strong.iterations;
    }
    if (weak_k > 0) {
        weak = weakest_subbundle(map, x, weak_k, opts);
        out.m_backward = weak.iterations;
    }
    Matrix all(n, n);
    int col = 0;
    for (const auto& r : ranges) {
        out.blocks.push_back(block_from(r, n, &strong.frame, &weak.frame));
        all.middleCols(col, out.blocks.back().cols()) = out.blocks.back();
        col += static_cast<int>(out.blocks.back().cols());
    }
    out.spanning_volume = k_volume(all);
    if (out.spanning_volume < 1e-6) {
        throw NumericalError(ErrorKind::DegenerateFrame, "splitting blocks do not span R^n");
    }
    if (with_residuals) {
        Matrix df;
        const Vector fx = map.step(x, df);
        const SplittingFrame image = splitting_at(map, wrap(fx), dims, opts, false);
        for (std::size_t b = 0; b < out.blocks.size(); ++b) {
            out.invariance_residual.push_back(subspace_angle(df * out.blocks[b], image.blocks[b]));
        }
    }
    return out;
}

Matrix bundle_frame(const TorusMap& map, const Vector& x, const BundleSelector& s, const AlignmentOptions& opts) {
    const int n = map.dim();
    if (!s.contiguous()) {
        throw NumericalError(ErrorKind::InvalidArgument, "bundle " + s.label() + " is not a contiguous block");
    }
    const BlockRange b{s.front(), s.back()};
    AlignedFrame strong, weak;
    if (b.last < n - 1 && !(b.first == 0 && b.last == n - 1)) strong = strongest_subbundle(map, x, b.last + 1, opts);
    if (b.first > 0) weak = weakest_subbundle(map, x, n - b.first, opts);
    return block_from(b, n, &strong.frame, &weak.frame);
}

Vector diagnostic_sample(const TorusMap& map, std::uint64_t seed, std::uint64_t index) {
    SampleStream rng(seed, index);
    const int n = map.dim();
    const auto& rots = map.rotations();
    if (rots.empty() || index % 2 == 0) return rng.uniform_point(n);
    const auto& rot = rots[static_cast<std::size_t>((index / 2) % rots.size())];
    // Uniform in the chart ball: gaussian direction, radius rho * U^{1/n}.
    Vector g(n);
    for (int i = 0; i < n; i += 2) {
        const double u1 = std::max(rng.uniform(), std::numeric_limits<double>::min());
        const double u2 = rng.uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        g(i) = rad * std::cos(2.0 * M_PI * u2);
        if (i + 1 < n) g(i + 1) = rad * std::sin(2.0 * M_PI * u2);
    }
    const double radius = rot.rho() * std::pow(rng.uniform(), 1.0 / n);
    const Vector u = g.normalized() * radius;
    return wrap(rot.center() + rot.chart() * u);
}

Matrix iterated_differential(const TorusMap& map, const Vector& x, int steps) {
    const int n = map.dim();
    Matrix prod = Matrix::Identity(n, n);
    Vector y = x;
    Matrix df;
    for (int t = 0; t < steps; ++t) {
        y = wrap(map.step(y, df));
        prod = df * prod;
    }
    return prod;
}

DominationReport domination_check(const TorusMap& map, const std::vector<int>& dims, std::int64_t samples, int l,
                                  std::uint64_t seed, const AlignmentOptions& opts, int threads) {
    if (l < 1) throw NumericalError(ErrorKind::InvalidArgument, "domination steps must be >= 1");
    if (dims.size() < 2) throw NumericalError(ErrorKind::InvalidArgument, "domination needs at least two blocks");
    std::vector<double> margins(static_cast<std::size_t>(samples), std::numeric_limits<double>::quiet_NaN());
    parallel_for(samples, threads, [&](std::int64_t i) {
        const Vector x = diagnostic_sample(map, seed, static_cast<std::uint64_t>(i));
        try {
            const SplittingFrame sp = splitting_at(map, x, dims, opts);
            const Matrix p = iterated_differential(map, x, l);
            double worst = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b + 1 < sp.blocks.size(); ++b) {
                Eigen::JacobiSVD<Matrix> strong(p * sp.blocks[b]);
                Eigen::JacobiSVD<Matrix> weak(p * sp.blocks[b + 1]);
                const double min_strong = strong.singularValues()(strong.singularValues().size() - 1);
                const double max_weak = weak.singularValues()(0);
                worst = std::min(worst, 0.5 * min_strong / max_weak - 1.0);
            }
            margins[static_cast<std::size_t>(i)] = worst;
        } catch (const NumericalError&) {
            // left as NaN: counted as rejected
        }
    });
    DominationReport rep;
    rep.l = l;
    rep.samples = samples;
    rep.margin = std::numeric_limits<double>::infinity();
    for (double m : margins) {
        if (std::isnan(m)) {
            ++rep.rejected;
            continue;
        }
        rep.margin = std::min(rep.margin, m);
    }
    if (rep.rejected == samples) rep.margin = -std::numeric_limits<double>::infinity();
    rep.holds = rep.rejected == 0 && rep.margin > 0;
    return rep;
}

ClosednessReport closedness_condition_check(const TorusMap& map, const BundleSelector& s, int steps,
                                            std::int64_t samples, std::uint64_t seed, const AlignmentOptions& opts,
                                            int threads) {
    const int k = s.size();
    if (k < 2) throw NumericalError(ErrorKind::InvalidArgument, "closedness check needs a bundle of dimension >= 2");
    if (steps < 1) throw NumericalError(ErrorKind::InvalidArgument, "closedness steps must be >= 1");
    const int n = map.dim();
    const Matrix chart = map.has_eigen() ? map.eigen().chart() : Matrix::Identity(n, n);
    const Matrix chart_inverse = chart.inverse();
    std::vector<double> sups(static_cast<std::size_t>(samples), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> infs(static_cast<std::size_t>(samples), std::numeric_limits<double>::quiet_NaN());
    parallel_for(samples, threads, [&](std::int64_t i) {
        const Vector x = diagnostic_sample(map, seed, static_cast<std::uint64_t>(i));
        try {
            // Volumes are measured in linear eigen-coordinates, where the unperturbed
            // restricted map is diagonal; Euclidean volumes of a non-normal block
            // overshoot at finite n.
            const Matrix e = orthonormalize(chart_inverse * bundle_frame(map, x, s, opts));
            const Matrix b = chart_inverse * iterated_differential(map, x, steps) * chart * e;
            Eigen::JacobiSVD<Matrix> svd(b);
            const auto& sv = svd.singularValues();
            double lower = 1.0;
            for (int j = 0; j < k - 1; ++j) lower *= sv(j);
            sups[static_cast<std::size_t>(i)] = lower;
            infs[static_cast<std::size_t>(i)] = lower * sv(k - 1);
        } catch (const NumericalError&) {
        }
    });
    ClosednessReport rep;
    rep.steps = steps;
    rep.samples = samples;
    rep.sup_lower = 0.0;
    rep.inf_top = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sups.size(); ++i) {
        if (std::isnan(sups[i])) {
            ++rep.rejected;
            continue;
        }
        rep.sup_lower = std::max(rep.sup_lower, sups[i]);
        rep.inf_top = std::min(rep.inf_top, infs[i]);
    }
    rep.margin = std::log(rep.inf_top / rep.sup_lower);
    rep.holds = rep.rejected == 0 && rep.sup_lower < rep.inf_top;
    return rep;
}

nlohmann::json to_json(const DominationReport& r) {
    return {{"l", r.l}, {"margin", r.margin}, {"holds", r.holds}, {"samples", r.samples}, {"rejected", r.rejected}};
}

nlohmann::json to_json(const ClosednessReport& r) {
    return {{"l", r.steps},          {"margin", r.margin},     {"holds", r.holds},
            {"samples", r.samples},  {"sup", r.sup_lower},     {"inf", r.inf_top},
            {"rejected", r.rejected}};
}

} // namespace pathlab

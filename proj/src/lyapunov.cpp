#include "pathlab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "pathlab/parallel.hpp"

namespace pathlab {

namespace {

/// Frame of an arbitrary (possibly non-contiguous) selector at x.
Matrix selector_frame(const TorusMap& map, const Vector& x, const BundleSelector& s, const AlignmentOptions& opts) {
    if (s.contiguous()) return bundle_frame(map, x, s, opts);
    const int n = map.dim();
    const SplittingFrame sp = splitting_at(map, x, std::vector<int>(static_cast<std::size_t>(n), 1), opts);
    Matrix f(n, s.size());
    for (int c = 0; c < s.size(); ++c) f.col(c) = sp.blocks[static_cast<std::size_t>(s.indices()[c])].col(0);
    return f;
}

struct Welford {
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double v) {
        ++count;
        const double d = v - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (v - mean);
    }
    double std_error() const {
        if (count < 2) return 0.0;
        return std::sqrt(m2 / static_cast<double>(count - 1)) / std::sqrt(static_cast<double>(count));
    }
};

/// L^{-1}, L the unit eigenvector matrix.
Matrix adapted_coordinates(const TorusMap& map) { return Matrix(map.eigen().vectors).inverse(); }

double linear_value(const TorusMap& map, const BundleSelector& s) {
    double v = 0.0;
    for (int i : s.indices()) v += std::log(std::abs(map.eigen().values[static_cast<std::size_t>(i)]));
    return v;
}

/// Uniform points in the union of rotation supports, weighted by total volume over multiplicity.
class SupportSampler {
public:
    explicit SupportSampler(const TorusMap& map) : map_(map) {
        const int n = map.dim();
        const double unit_ball = std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
        for (const auto& rot : map.rotations()) {
            total_ += unit_ball * std::pow(rot.rho(), n) * std::abs(rot.chart().determinant());
            cumulative_.push_back(total_);
        }
    }
    double total() const noexcept { return total_; }
    Vector sample(SampleStream& rng, double& weight) const {
        const int n = map_.dim();
        const double pick = rng.uniform() * total_;
        std::size_t j = 0;
        while (j + 1 < cumulative_.size() && pick >= cumulative_[j]) ++j;
        const auto& rot = map_.rotations()[j];
        Vector u(n);
        do {
            for (int i = 0; i < n; ++i) u(i) = 2.0 * rng.uniform() - 1.0;
        } while (u.squaredNorm() >= 1.0);
        const Vector x = wrap(rot.center() + rot.chart() * (rot.rho() * u));
        int count = 0;
        for (const auto& r : map_.rotations()) count += r.in_support(x) ? 1 : 0;
        weight = total_ / std::max(1, count);
        return x;
    }

private:
    const TorusMap& map_;
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

/// Shared driver. With `dims` nonempty the blocks come from one splitting per sample and
/// a final entry holds the sum over blocks.
std::vector<ExponentReport> run_exponents(const TorusMap& map, const std::vector<BundleSelector>& sels,
                                          const std::vector<int>& dims, std::int64_t samples,
                                          const AlignmentOptions& opts, std::uint64_t seed, int threads,
                                          Estimator estimator) {
    if (samples < 1) throw NumericalError(ErrorKind::InvalidArgument, "need at least one sample");
    const int n = map.dim();
    const bool adapted = estimator == Estimator::SupportAdapted;
    if (adapted) (void)map.eigen();
    const std::size_t count = sels.size();
    const std::size_t stride = dims.empty() ? count : count + 1;
    std::vector<double> lin(stride, 0.0);
    if (adapted) {
        for (std::size_t b = 0; b < count; ++b) lin[b] = linear_value(map, sels[b]);
        if (stride > count) {
            for (std::size_t b = 0; b < count; ++b) lin[count] += lin[b];
        }
    }
    std::optional<SupportSampler> sampler;
    if (adapted) sampler.emplace(map);
    const bool trivial = adapted && sampler->total() == 0.0;

    std::vector<double> values(static_cast<std::size_t>(samples) * stride, 0.0);
    std::vector<char> bad(static_cast<std::size_t>(samples), 0);
    if (!trivial) {
        parallel_for(samples, threads, [&](std::int64_t i) {
            SampleStream rng(seed, static_cast<std::uint64_t>(i));
            double weight = 1.0;
            const Vector x = adapted ? sampler->sample(rng, weight) : rng.uniform_point(n);
            double* row = values.data() + static_cast<std::size_t>(i) * stride;
            try {
                std::vector<Matrix> frames;
                if (!dims.empty()) {
                    frames = splitting_at(map, x, dims, opts).blocks;
                } else {
                    for (const auto& s : sels) frames.push_back(selector_frame(map, x, s, opts));
                }
                double total = 0.0;
                for (std::size_t b = 0; b < count; ++b) {
                    const double v = adapted ? weight * (adapted_log_jacobian(map, x, frames[b], sels[b].indices()) - lin[b])
                                             : one_step_log_jacobian(map, x, frames[b]);
                    row[b] = v;
                    total += v;
                }
                if (stride > count) row[count] = total;
            } catch (const NumericalError&) {
                bad[static_cast<std::size_t>(i)] = 1;
            }
        });
    }
    std::vector<Welford> acc(stride);
    std::int64_t rejected = 0;
    for (std::int64_t i = 0; i < samples; ++i) {
        if (bad[static_cast<std::size_t>(i)]) {
            ++rejected;
            continue;
        }
        const double* row = values.data() + static_cast<std::size_t>(i) * stride;
        for (std::size_t b = 0; b < stride; ++b) acc[b].add(row[b]);
    }
    std::vector<ExponentReport> out;
    for (std::size_t b = 0; b < stride; ++b) {
        ExponentReport r;
        if (b < count) r.bundle = sels[b].one_based();
        r.estimate = lin[b] + acc[b].mean;
        r.std_error = acc[b].std_error();
        r.samples = samples;
        r.alignment = opts.iterations;
        r.seed = seed;
        r.rejected = rejected;
        r.estimator = estimator;
        r.sampled_volume = adapted ? sampler->total() : 1.0;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace

std::vector<double> qr_spectrum(const TorusMap& map, const Vector& x, int steps, int warmup) {
    if (steps < 1) throw NumericalError(ErrorKind::InvalidArgument, "qr_spectrum needs at least one step");
    const int n = map.dim();
    Matrix q = seed_frame(n, n);
    Vector y = wrap(x);
    Matrix df;
    for (int t = 0; t < warmup; ++t) {
        y = wrap(map.step(y, df));
        q = df * q;
        orthonormalize_inplace(q);
    }
    std::vector<double> sums(static_cast<std::size_t>(n), 0.0);
    for (int t = 0; t < steps; ++t) {
        y = wrap(map.step(y, df));
        Eigen::HouseholderQR<Matrix> qr(df * q);
        const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        Matrix qn = qr.householderQ() * Matrix::Identity(n, n);
        for (int i = 0; i < n; ++i) {
            sums[static_cast<std::size_t>(i)] += std::log(std::abs(r(i, i)));
            if (r(i, i) < 0) qn.col(i) = -qn.col(i);
        }
        q = qn;
    }
    for (double& s : sums) s /= steps;
    std::sort(sums.begin(), sums.end(), std::greater<>());
    return sums;
}

double one_step_log_jacobian(const TorusMap& map, const Vector& x, const Matrix& frame) {
    const double v0 = k_volume(frame);
    if (!(v0 > 1e-300)) throw NumericalError(ErrorKind::DegenerateFrame, "frame does not span a k-plane");
    return std::log(k_volume(map.differential(x) * frame) / v0);
}

std::string to_string(Estimator e) { return e == Estimator::Uniform ? "uniform" : "support-adapted"; }

Estimator estimator_from_string(const std::string& s) {
    if (s == "uniform") return Estimator::Uniform;
    if (s == "support-adapted") return Estimator::SupportAdapted;
    throw NumericalError(ErrorKind::InvalidArgument, "unknown estimator '" + s + "'");
}

double adapted_log_jacobian(const TorusMap& map, const Vector& x, const Matrix& frame, const std::vector<int>& indices) {
    const Matrix li = adapted_coordinates(map);
    const int k = static_cast<int>(indices.size());
    Matrix rows(k, map.dim());
    for (int i = 0; i < k; ++i) rows.row(i) = li.row(indices[static_cast<std::size_t>(i)]);
    const double before = std::abs((rows * frame).determinant());
    if (!(before > 1e-8)) throw NumericalError(ErrorKind::DegenerateFrame, "bundle frame degenerate in eigen-coordinates");
    return std::log(std::abs((rows * map.differential(x) * frame).determinant()) / before);
}

ExponentReport integrated_exponent(const TorusMap& map, const BundleSelector& s, std::int64_t samples,
                                   const AlignmentOptions& opts, std::uint64_t seed, int threads, Estimator estimator) {
    const std::vector<int> dims;
    return run_exponents(map, {s}, dims, samples, opts, seed, threads, estimator).front();
}

std::vector<ExponentReport> integrated_exponents(const TorusMap& map, const std::vector<int>& dims,
                                                 std::int64_t samples, const AlignmentOptions& opts,
                                                 std::uint64_t seed, int threads, Estimator estimator) {
    std::vector<BundleSelector> blocks;
    int first = 0;
    for (int d : dims) {
        blocks.push_back(BundleSelector::interval(first, first + d - 1, map.dim()));
        first += d;
    }
    if (first != map.dim()) throw NumericalError(ErrorKind::InvalidArgument, "block dimensions must sum to n");
    auto out = run_exponents(map, blocks, dims, samples, opts, seed, threads, estimator);
    out.back().bundle.clear();
    return out;
}

BirkhoffReport birkhoff_exponent(const TorusMap& map, const BundleSelector& s, const Vector& x0, std::int64_t steps,
                                 const AlignmentOptions& opts, int batches) {
    if (steps < 1) throw NumericalError(ErrorKind::InvalidArgument, "Birkhoff average needs at least one step");
    if (steps > 20'000'000) throw NumericalError(ErrorKind::InvalidArgument, "orbit too long to store");
    if (!s.contiguous()) throw NumericalError(ErrorKind::InvalidArgument, "Birkhoff average needs a contiguous bundle");
    const int n = map.dim();
    const int kw = s.front() > 0 ? n - s.front() : 0;
    const int ks = s.back() < n - 1 ? s.back() + 1 : 0;
    const auto len = static_cast<std::size_t>(steps);

    std::vector<double> orbit((len + 1) * static_cast<std::size_t>(n));
    Vector y = wrap(x0);
    for (std::size_t t = 0;; ++t) {
        std::copy(y.data(), y.data() + n, orbit.begin() + static_cast<std::ptrdiff_t>(t * n));
        if (t == len) break;
        y = map.apply(y);
    }
    auto at = [&](std::size_t t) {
        Vector p(n);
        for (int c = 0; c < n; ++c) p(c) = orbit[t * n + c];
        return p;
    };

    // Weak frames at every orbit point, pulled back from the far end.
    std::vector<double> weak;
    if (kw > 0) {
        const std::size_t block = static_cast<std::size_t>(n * kw);
        weak.resize((len + 1) * block);
        Matrix w = weakest_subbundle(map, at(len), kw, opts).frame;
        for (std::size_t t = len + 1; t-- > 0;) {
            if (t < len) {
                w = map.inverse_differential(at(t + 1)) * w;
                orthonormalize_inplace(w);
            }
            std::copy(w.data(), w.data() + block, weak.begin() + static_cast<std::ptrdiff_t>(t * block));
        }
    }

    Matrix strong;
    if (ks > 0) strong = strongest_subbundle(map, at(0), ks, opts).frame;
    std::vector<double> values(len);
    for (std::size_t t = 0; t < len; ++t) {
        const Vector x = at(t);
        Matrix w;
        if (kw > 0) w = Eigen::Map<const Matrix>(weak.data() + t * static_cast<std::size_t>(n * kw), n, kw);
        Matrix e;
        if (ks > 0 && kw > 0) {
            e = intersect_planes(strong, w);
        } else if (ks > 0) {
            e = strong;
        } else if (kw > 0) {
            e = w;
        } else {
            e = Matrix::Identity(n, n);
        }
        Matrix df;
        map.step(x, df);
        values[t] = std::log(k_volume(df * e) / k_volume(e));
        if (ks > 0) {
            strong = df * strong;
            orthonormalize_inplace(strong);
        }
    }

    BirkhoffReport rep;
    rep.bundle = s.one_based();
    rep.steps = steps;
    rep.x0.assign(x0.data(), x0.data() + n);
    const std::int64_t nb = std::max<std::int64_t>(1, std::min<std::int64_t>(batches, steps));
    rep.batches = static_cast<int>(nb);
    double total = 0.0;
    for (double v : values) total += v;
    rep.estimate = total / static_cast<double>(steps);
    if (nb >= 2) {
        const std::int64_t per = steps / nb;
        Welford acc;
        for (std::int64_t b = 0; b < nb; ++b) {
            double sum = 0.0;
            for (std::int64_t t = b * per; t < (b + 1) * per; ++t) sum += values[static_cast<std::size_t>(t)];
            acc.add(sum / static_cast<double>(per));
        }
        rep.std_error = acc.std_error();
    }
    return rep;
}

nlohmann::json to_json(const ExponentReport& r) {
    nlohmann::json bundle = r.bundle.empty() ? nlohmann::json("full") : nlohmann::json(r.bundle);
    return {{"bundle", bundle}, {"estimate", r.estimate}, {"stderr", r.std_error}, {"N", r.samples},
            {"m", r.alignment},  {"seed", r.seed},         {"rejected", r.rejected},
            {"estimator", to_string(r.estimator)}, {"sampled_volume", r.sampled_volume}};
}

nlohmann::json to_json(const BirkhoffReport& r) {
    return {{"bundle", r.bundle}, {"estimate", r.estimate}, {"stderr", r.std_error},
            {"n", r.steps},       {"batches", r.batches},   {"x0", r.x0}};
}

} // namespace pathlab

#include "pathlab/leafgrowth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pathlab/parallel.hpp"

namespace pathlab {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

// Lengths within this relative slack of delta count as meeting the bound, so seeds at exact spacing delta stay put.
constexpr double kSlack = 1.0 + 1e-9;

double sinc(double z) {
    if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0 + z * z * z * z / 120.0;
    return std::sin(z) / z;
}

double triangle_area(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                     const Eigen::Ref<const Eigen::VectorXd>& c) {
    const Eigen::VectorXd u = b - a;
    const Eigen::VectorXd v = c - a;
    const double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
    return 0.5 * std::sqrt(std::max(0.0, uu * vv - uv * uv));
}

void compute_points(const LeafDisk& disk, const TorusMap& map, const std::vector<double>& params,
                    std::vector<double>& out, int threads) {
    const std::size_t count = params.size() / static_cast<std::size_t>(disk.k);
    out.assign(count * static_cast<std::size_t>(disk.n), 0.0);
    parallel_for(static_cast<std::int64_t>(count), threads, [&](std::int64_t i) {
        const Vector p = disk.point_from_parameter(map, params.data() + i * disk.k);
        for (int c = 0; c < disk.n; ++c) out[static_cast<std::size_t>(i) * disk.n + c] = p(c);
    });
}

void refine_curve(LeafDisk& disk, const TorusMap& map, int threads) {
    while (true) {
        const std::size_t nodes = disk.node_count();
        std::vector<std::size_t> split;
        for (std::size_t i = 0; i + 1 < nodes; ++i) {
            if ((disk.point(i + 1) - disk.point(i)).norm() > disk.delta * kSlack) split.push_back(i);
        }
        if (split.empty()) return;
        if (nodes + split.size() > disk.budget) {
            disk.truncated = true;
            return;
        }
        std::vector<double> mids;
        mids.reserve(split.size());
        for (std::size_t i : split) mids.push_back(0.5 * (disk.params[i] + disk.params[i + 1]));
        std::vector<double> mid_points;
        compute_points(disk, map, mids, mid_points, threads);

        std::vector<double> params, points;
        params.reserve(nodes + split.size());
        points.reserve((nodes + split.size()) * static_cast<std::size_t>(disk.n));
        std::size_t next = 0;
        for (std::size_t i = 0; i < nodes; ++i) {
            params.push_back(disk.params[i]);
            points.insert(points.end(), disk.points.begin() + static_cast<std::ptrdiff_t>(i * disk.n),
                          disk.points.begin() + static_cast<std::ptrdiff_t>((i + 1) * disk.n));
            if (next < split.size() && split[next] == i) {
                params.push_back(mids[next]);
                points.insert(points.end(), mid_points.begin() + static_cast<std::ptrdiff_t>(next * disk.n),
                              mid_points.begin() + static_cast<std::ptrdiff_t>((next + 1) * disk.n));
                ++next;
            }
        }
        disk.params = std::move(params);
        disk.points = std::move(points);
    }
}

void refine_surface(LeafDisk& disk, const TorusMap& map, int threads) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    while (true) {
        struct Mark {
            std::size_t tri;
            int edge;
        };
        std::vector<Mark> marks;
        for (std::size_t t = 0; t < disk.triangles.size(); ++t) {
            const auto& tri = disk.triangles[t];
            int best = -1;
            double best_len = disk.delta * kSlack;
            for (int e = 0; e < 3; ++e) {
                const double len = (disk.point(tri.v[(e + 1) % 3]) - disk.point(tri.v[e])).norm();
                if (len > best_len) {
                    best_len = len;
                    best = e;
                }
            }
            if (best >= 0) marks.push_back({t, best});
        }
        if (marks.empty()) return;

        const std::uint32_t first_new = static_cast<std::uint32_t>(disk.node_count());
        std::vector<double> new_params, new_angles;
        std::unordered_map<std::uint64_t, std::uint32_t> pending;
        std::vector<std::uint32_t> mark_mid(marks.size());
        for (std::size_t i = 0; i < marks.size(); ++i) {
            const auto& tri = disk.triangles[marks[i].tri];
            const int e = marks[i].edge;
            const std::uint32_t a = tri.v[e], b = tri.v[(e + 1) % 3];
            const std::uint64_t key = edge_key(a, b);
            if (auto it = disk.midpoints.find(key); it != disk.midpoints.end()) {
                mark_mid[i] = it->second;
                continue;
            }
            if (auto it = pending.find(key); it != pending.end()) {
                mark_mid[i] = it->second;
                continue;
            }
            const std::uint32_t idx = first_new + static_cast<std::uint32_t>(new_angles.size());
            pending.emplace(key, idx);
            mark_mid[i] = idx;
            if (tri.boundary & (1u << e)) {
                double a0 = disk.boundary_angle[a], a1 = disk.boundary_angle[b];
                // CCW boundary edge: a1 follows a0
                if (a1 < a0) a1 += kTwoPi;
                const double mid = 0.5 * (a0 + a1);
                new_params.push_back(std::cos(mid));
                new_params.push_back(std::sin(mid));
                new_angles.push_back(std::fmod(mid, kTwoPi));
            } else {
                new_params.push_back(0.5 * (disk.params[2 * a] + disk.params[2 * b]));
                new_params.push_back(0.5 * (disk.params[2 * a + 1] + disk.params[2 * b + 1]));
                new_angles.push_back(nan);
            }
        }
        if (disk.node_count() + new_angles.size() > disk.budget) {
            disk.truncated = true;
            return;
        }
        std::vector<double> new_points;
        compute_points(disk, map, new_params, new_points, threads);
        disk.params.insert(disk.params.end(), new_params.begin(), new_params.end());
        disk.points.insert(disk.points.end(), new_points.begin(), new_points.end());
        disk.boundary_angle.insert(disk.boundary_angle.end(), new_angles.begin(), new_angles.end());
        for (const auto& [key, idx] : pending) disk.midpoints.emplace(key, idx);

        for (std::size_t i = 0; i < marks.size(); ++i) {
            const LeafDisk::Triangle tri = disk.triangles[marks[i].tri];
            const int e = marks[i].edge;
            const std::uint32_t p = tri.v[e], q = tri.v[(e + 1) % 3], o = tri.v[(e + 2) % 3];
            const std::uint8_t b0 = (tri.boundary >> e) & 1u;
            const std::uint8_t b1 = (tri.boundary >> ((e + 1) % 3)) & 1u;
            const std::uint8_t b2 = (tri.boundary >> ((e + 2) % 3)) & 1u;
            const std::uint32_t m = mark_mid[i];
            disk.triangles[marks[i].tri] = {{p, m, o}, static_cast<std::uint8_t>(b0 | (b2 << 2))};
            disk.triangles.push_back({{m, q, o}, static_cast<std::uint8_t>(b0 | (b1 << 1))});
        }
    }
}

void refine(LeafDisk& disk, const TorusMap& map, int threads) {
    if (disk.k == 1) {
        refine_curve(disk, map, threads);
    } else {
        refine_surface(disk, map, threads);
    }
}

} // namespace

Vector LeafDisk::seed_point(const double* param) const {
    Vector q(k);
    for (int i = 0; i < k; ++i) q(i) = param[i];
    return base + radius * (frame * q);
}

Vector LeafDisk::point_from_parameter(const TorusMap& map, const double* param) const {
    Vector y = seed_point(param);
    for (int t = 0; t < step; ++t) y = map.lift_apply(y) - shifts[static_cast<std::size_t>(t)];
    return y;
}

LeafDisk seed_disk(const Vector& x, const Matrix& frame, double r, double delta, std::size_t budget) {
    if (!(r > 0.0 && r <= 0.01)) throw NumericalError(ErrorKind::BadRadius, "radius must lie in (0, 0.01]");
    if (!(delta > 0.0)) throw NumericalError(ErrorKind::BadRadius, "mesh bound delta must be positive");
    const int k = static_cast<int>(frame.cols());
    if (k < 1 || k > 2) throw NumericalError(ErrorKind::BadFrame, "leaf disks are 1- or 2-dimensional");
    if (frame.rows() != x.size()) throw NumericalError(ErrorKind::BadFrame, "frame dimension mismatch");
    const Matrix gram = frame.transpose() * frame;
    if ((gram - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-9) {
        throw NumericalError(ErrorKind::BadFrame, "frame must be orthonormal");
    }

    LeafDisk d;
    d.k = k;
    d.n = static_cast<int>(x.size());
    d.base = x;
    d.anchor = x;
    d.frame = frame;
    d.radius = r;
    d.delta = delta;
    d.budget = budget;
    if (k == 1) {
        const int segments = std::max(2, static_cast<int>(std::ceil(2.0 * r / delta - 1e-9)));
        for (int i = 0; i <= segments; ++i) d.params.push_back(-1.0 + 2.0 * i / segments);
    } else {
        const int ring = 32;
        d.params = {0.0, 0.0};
        d.boundary_angle.push_back(std::numeric_limits<double>::quiet_NaN());
        for (int i = 0; i < ring; ++i) {
            const double a = kTwoPi * i / ring;
            d.params.push_back(std::cos(a));
            d.params.push_back(std::sin(a));
            d.boundary_angle.push_back(a);
        }
        for (int i = 0; i < ring; ++i) {
            const auto b0 = static_cast<std::uint32_t>(1 + i);
            const auto b1 = static_cast<std::uint32_t>(1 + (i + 1) % ring);
            d.triangles.push_back({{0u, b0, b1}, static_cast<std::uint8_t>(1u << 1)});
        }
    }
    const std::size_t count = d.params.size() / static_cast<std::size_t>(k);
    if (count > budget) throw NumericalError(ErrorKind::BudgetExceeded, "seed alone exceeds node budget");
    d.points.reserve(count * static_cast<std::size_t>(d.n));
    for (std::size_t i = 0; i < count; ++i) {
        const Vector p = d.seed_point(d.params.data() + i * k);
        d.points.insert(d.points.end(), p.data(), p.data() + p.size());
    }
    if (k == 2) {
        // The identity map stands in for "no steps yet": refinement only uses the shift schedule.
        const TorusMap identity(UnimodularMatrix(IntMatrix::Identity(d.n, d.n)));
        refine_surface(d, identity, 1);
        if (d.truncated) throw NumericalError(ErrorKind::BudgetExceeded, "seed refinement exceeds node budget");
    }
    d.volumes.push_back(disk_volume(d));
    return d;
}

LeafDisk& iterate_refine(LeafDisk& disk, const TorusMap& map, int steps, int threads) {
    if (map.dim() != disk.n) throw NumericalError(ErrorKind::InvalidArgument, "map and disk dimensions differ");
    for (int s = 0; s < steps && !disk.truncated; ++s) {
        Vector next = map.lift_apply(disk.anchor);
        Vector z(disk.n);
        for (int i = 0; i < disk.n; ++i) z(i) = std::round(next(i));
        disk.anchor = next - z;
        disk.shifts.push_back(z);
        const std::size_t nodes = disk.node_count();
        parallel_for(static_cast<std::int64_t>(nodes), threads, [&](std::int64_t i) {
            double* p = disk.points.data() + i * disk.n;
            Vector y(disk.n);
            for (int c = 0; c < disk.n; ++c) y(c) = p[c];
            y = map.lift_apply(y) - z;
            for (int c = 0; c < disk.n; ++c) p[c] = y(c);
        });
        ++disk.step;
        refine(disk, map, threads);
        disk.volumes.push_back(disk_volume(disk));
    }
    return disk;
}

double disk_volume(const LeafDisk& disk) {
    double vol = 0.0;
    if (disk.k == 1) {
        for (std::size_t i = 0; i + 1 < disk.node_count(); ++i) vol += (disk.point(i + 1) - disk.point(i)).norm();
    } else {
        for (const auto& t : disk.triangles) vol += triangle_area(disk.point(t.v[0]), disk.point(t.v[1]), disk.point(t.v[2]));
    }
    return vol;
}

std::string TestForm::label() const {
    std::string g = std::string(cosine ? "cos" : "sin") + "(2pi x" + std::to_string(j + 1) + ")";
    if (i < 0) return g;
    return g + " dx" + std::to_string(i + 1);
}

std::vector<TestForm> default_test_forms(int n, int k) {
    std::vector<TestForm> forms;
    if (k == 1) {
        for (int j = 0; j < n; ++j) {
            forms.push_back({false, -1, j});
            forms.push_back({true, -1, j});
        }
        return forms;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            forms.push_back({false, i, j});
            forms.push_back({true, i, j});
        }
    }
    return forms;
}

double segment_integral(const TestForm& form, const Eigen::Ref<const Eigen::VectorXd>& a,
                        const Eigen::Ref<const Eigen::VectorXd>& b) {
    // mean over t in [0,1] of g(2 pi (a_j + t d_j)) = g(2 pi a_j + pi d_j) sinc(pi d_j)
    const double dj = b(form.j) - a(form.j);
    const double di = b(form.i) - a(form.i);
    const double phase = kTwoPi * a(form.j) + M_PI * dj;
    const double mean = (form.cosine ? std::cos(phase) : std::sin(phase)) * sinc(M_PI * dj);
    return di * mean;
}

CurrentValue current_eval(const LeafDisk& disk, const std::vector<TestForm>& forms) {
    CurrentValue cv;
    cv.step = disk.step;
    cv.volume = disk_volume(disk);
    const int n = disk.n;
    if (disk.k == 1) {
        cv.components.assign(static_cast<std::size_t>(n), 0.0);
        const std::size_t nodes = disk.node_count();
        const Eigen::VectorXd disp = disk.point(nodes - 1) - disk.point(0);
        for (int i = 0; i < n; ++i) cv.components[static_cast<std::size_t>(i)] = disp(i) / cv.volume;
        for (const auto& f : forms) {
            auto g = [&](double v) { return f.cosine ? std::cos(kTwoPi * v) : std::sin(kTwoPi * v); };
            const double diff = g(disk.point(nodes - 1)(f.j)) - g(disk.point(0)(f.j));
            cv.boundary_terms.push_back(std::abs(diff) / cv.volume);
        }
        return cv;
    }
    const WedgeIndex idx(n, 2);
    cv.components.assign(static_cast<std::size_t>(idx.size()), 0.0);
    std::vector<double> boundary(forms.size(), 0.0);
    for (const auto& t : disk.triangles) {
        const Eigen::VectorXd u = disk.point(t.v[1]) - disk.point(t.v[0]);
        const Eigen::VectorXd v = disk.point(t.v[2]) - disk.point(t.v[0]);
        for (int I = 0; I < idx.size(); ++I) {
            const auto& s = idx.subset(I);
            cv.components[static_cast<std::size_t>(I)] += 0.5 * (u(s[0]) * v(s[1]) - u(s[1]) * v(s[0]));
        }
        if (t.boundary == 0) continue;
        for (int e = 0; e < 3; ++e) {
            if (!(t.boundary & (1u << e))) continue;
            const auto a = disk.point(t.v[e]);
            const auto b = disk.point(t.v[(e + 1) % 3]);
            cv.boundary_length += (b - a).norm();
            for (std::size_t f = 0; f < forms.size(); ++f) boundary[f] += segment_integral(forms[f], a, b);
        }
    }
    for (double& c : cv.components) c /= cv.volume;
    for (double b : boundary) cv.boundary_terms.push_back(std::abs(b) / cv.volume);
    return cv;
}

CycleEstimate asymptotic_cycle(const LeafDisk& disk) {
    if (disk.k != 1) throw NumericalError(ErrorKind::InvalidArgument, "asymptotic cycles are defined for curves");
    CycleEstimate c;
    c.step = disk.step;
    const std::size_t nodes = disk.node_count();
    c.displacement = disk.point(nodes - 1) - disk.point(0);
    // The shift schedule moves every node by the same integer vector, so the
    // displacement is exactly that of the unshifted lift.
    c.length = disk_volume(disk);
    c.normalized = c.displacement / c.length;
    c.integer_class = c.displacement.array().round().matrix();
    return c;
}

ChiEstimate chi_estimate(const std::vector<double>& volumes, int burn_in) {
    if (volumes.size() < 4) throw NumericalError(ErrorKind::InvalidArgument, "chi estimate needs >= 4 recorded steps");
    const int last = static_cast<int>(volumes.size()) - 1;
    if (burn_in < 0 || last - burn_in < 1) throw NumericalError(ErrorKind::InvalidArgument, "burn-in leaves no steps");
    ChiEstimate est;
    est.per_step_ratio.assign(volumes.size(), std::numeric_limits<double>::quiet_NaN());
    for (int i = 1; i <= last; ++i) est.per_step_ratio[static_cast<std::size_t>(i)] = std::log(volumes[i] / volumes[i - 1]);
    est.ratio = est.per_step_ratio[static_cast<std::size_t>(last)];
    est.ratio_residual = last >= 2 ? std::abs(est.ratio - est.per_step_ratio[static_cast<std::size_t>(last - 1)]) : 0.0;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double count = last - burn_in + 1;
    for (int i = burn_in; i <= last; ++i) {
        const double y = std::log(volumes[static_cast<std::size_t>(i)]);
        sx += i;
        sy += y;
        sxx += static_cast<double>(i) * i;
        sxy += i * y;
    }
    const double denom = count * sxx - sx * sx;
    est.regression = (count * sxy - sx * sy) / denom;
    const double intercept = (sy - est.regression * sx) / count;
    double rss = 0;
    for (int i = burn_in; i <= last; ++i) {
        const double r = std::log(volumes[static_cast<std::size_t>(i)]) - (intercept + est.regression * i);
        rss += r * r;
    }
    est.regression_residual = std::sqrt(rss / count);
    return est;
}

double provenance_error(const LeafDisk& disk, const TorusMap& map, std::size_t count, std::uint64_t seed) {
    const std::size_t nodes = disk.node_count();
    double worst = 0.0;
    for (std::size_t c = 0; c < count; ++c) {
        SampleStream rng(seed, c);
        const std::size_t i = static_cast<std::size_t>(rng.next_u64() % nodes);
        const Vector p = disk.point_from_parameter(map, disk.params.data() + i * disk.k);
        worst = std::max(worst, (Eigen::VectorXd(p) - disk.point(i)).norm());
    }
    return worst;
}

} // namespace pathlab

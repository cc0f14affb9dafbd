#pragma once

// Independent reference computations for the tests. Nothing here calls into the
// library: determinants by cofactor expansion, roots by bisection, null vectors by
// cross products, derivatives by central differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

using IntRows = std::vector<std::vector<long long>>;
using Rows = std::vector<std::vector<double>>;

template <class T>
T cofactor_det(const std::vector<std::vector<T>>& a) {
    const std::size_t n = a.size();
    if (n == 1) return a[0][0];
    if (n == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
    T sum = 0;
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<std::vector<T>> m;
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<T> row;
            for (std::size_t cc = 0; cc < n; ++cc)
                if (cc != c) row.push_back(a[r][cc]);
            m.push_back(row);
        }
        const T term = a[0][c] * cofactor_det(m);
        sum += (c % 2 == 0) ? term : -term;
    }
    return sum;
}

/// k-subsets of {0..n-1} in lexicographic order, by recursion.
inline void subsets_rec(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == k) {
        out.push_back(cur);
        return;
    }
    for (int i = start; i < n; ++i) {
        cur.push_back(i);
        subsets_rec(n, k, i + 1, cur, out);
        cur.pop_back();
    }
}

inline std::vector<std::vector<int>> subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    subsets_rec(n, k, 0, cur, out);
    return out;
}

/// Matrix of k x k minors, rows and columns in lexicographic subset order.
template <class T>
std::vector<std::vector<T>> minors(const std::vector<std::vector<T>>& a, int k) {
    const int n = static_cast<int>(a.size());
    const auto subs = subsets(n, k);
    std::vector<std::vector<T>> out(subs.size(), std::vector<T>(subs.size()));
    for (std::size_t i = 0; i < subs.size(); ++i) {
        for (std::size_t j = 0; j < subs.size(); ++j) {
            std::vector<std::vector<T>> m(static_cast<std::size_t>(k), std::vector<T>(static_cast<std::size_t>(k)));
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < k; ++c) m[r][c] = a[subs[i][r]][subs[j][c]];
            out[i][j] = cofactor_det(m);
        }
    }
    return out;
}

/// det(xI - A) at a point, through the cofactor expansion.
inline double char_poly_at(const Rows& a, double x) {
    Rows m = a;
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (auto& v : m[i]) v = -v;
        m[i][i] += x;
    }
    return cofactor_det(m);
}

/// All real roots of det(xI - A) in [lo, hi], by sign changes on a grid plus bisection.
/// Sorted by decreasing absolute value.
inline std::vector<double> eigenvalues_by_bisection(const Rows& a, double lo = -20, double hi = 20, int grid = 40000) {
    std::vector<double> roots;
    double x0 = lo, f0 = char_poly_at(a, x0);
    for (int i = 1; i <= grid; ++i) {
        const double x1 = lo + (hi - lo) * i / grid;
        const double f1 = char_poly_at(a, x1);
        if (f0 == 0.0) roots.push_back(x0);
        else if (f0 * f1 < 0) {
            double l = x0, h = x1, fl = f0;
            for (int it = 0; it < 200; ++it) {
                const double m = 0.5 * (l + h);
                const double fm = char_poly_at(a, m);
                if ((fm < 0) == (fl < 0)) {
                    l = m;
                    fl = fm;
                } else {
                    h = m;
                }
            }
            roots.push_back(0.5 * (l + h));
        }
        x0 = x1;
        f0 = f1;
    }
    std::sort(roots.begin(), roots.end(), [](double p, double q) { return std::abs(p) > std::abs(q); });
    return roots;
}

/// Larger root of x^2 - 3x + 1: the cat-map expansion (3 + sqrt 5) / 2.
inline double cat_lambda() { return (3.0 + std::sqrt(5.0)) / 2.0; }

/// Unit null vector of the 3x3 matrix A - lambda I via the largest cross product of two rows.
inline std::vector<double> null_vector3(const Rows& a, double lambda) {
    Rows m = a;
    for (int i = 0; i < 3; ++i) m[i][i] -= lambda;
    std::vector<double> best(3, 0.0);
    double best_norm = -1;
    for (int p = 0; p < 3; ++p) {
        for (int q = p + 1; q < 3; ++q) {
            const auto& u = m[p];
            const auto& v = m[q];
            std::vector<double> c = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
            const double nrm = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
            if (nrm > best_norm) {
                best_norm = nrm;
                best = c;
            }
        }
    }
    for (auto& x : best) x /= best_norm;
    return best;
}

/// Unit null vector of [[a, b], [c, d]] - lambda I.
inline std::vector<double> null_vector2(const Rows& a, double lambda) {
    std::vector<double> v = {a[0][1], lambda - a[0][0]};
    const double nrm = std::hypot(v[0], v[1]);
    return {v[0] / nrm, v[1] / nrm};
}

/// |cos| of the angle between two lines, as an angle in [0, pi/2].
inline double line_angle(const std::vector<double>& u, const std::vector<double>& v) {
    double d = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        d += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    const double c = std::min(1.0, std::abs(d) / std::sqrt(nu * nv));
    return std::acos(c);
}

inline std::vector<double> cross(const std::vector<double>& u, const std::vector<double>& v) {
    return {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
}

inline double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// sqrt det(G^T G) with the Gram determinant by cofactor expansion; columns given as rows of `vs`.
inline double gram_volume(const Rows& vs) {
    Rows g(vs.size(), std::vector<double>(vs.size()));
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = 0; j < vs.size(); ++j) {
            double s = 0;
            for (std::size_t c = 0; c < vs[i].size(); ++c) s += vs[i][c] * vs[j][c];
            g[i][j] = s;
        }
    return std::sqrt(std::max(0.0, cofactor_det(g)));
}

/// Central-difference Jacobian; column j is (f(x + h e_j) - f(x - h e_j)) / 2h.
inline Rows jacobian_fd(const std::function<std::vector<double>(const std::vector<double>&)>& f,
                        const std::vector<double>& x, double h) {
    const std::size_t n = x.size();
    Rows jac(n, std::vector<double>(n));
    for (std::size_t j = 0; j < n; ++j) {
        auto xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const auto fp = f(xp), fm = f(xm);
        for (std::size_t i = 0; i < n; ++i) jac[i][j] = (fp[i] - fm[i]) / (2 * h);
    }
    return jac;
}

/// Composite Simpson rule with `panels` (even) subintervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 2000) {
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
    return s * h / 3;
}

/// Integer matrix polynomial p(A) with coefficients lowest degree first.
inline IntRows poly_at_matrix(const std::vector<long long>& coeffs, const IntRows& a) {
    const std::size_t n = a.size();
    IntRows result(n, std::vector<long long>(n, 0));
    IntRows power(n, std::vector<long long>(n, 0));
    for (std::size_t i = 0; i < n; ++i) power[i][i] = 1;
    for (long long c : coeffs) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) result[i][j] += c * power[i][j];
        IntRows next(n, std::vector<long long>(n, 0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t j = 0; j < n; ++j) next[i][j] += power[i][k] * a[k][j];
        power = next;
    }
    return result;
}

// Fixtures shared by several suites.
inline const IntRows kCat = {{2, 1}, {1, 1}};
inline const IntRows kCompanion = {{0, 0, 1}, {1, 0, -6}, {0, 1, 5}};
// Companion of x^4 - 8x^3 + 17x^2 - 8x + 1: reciprocal roots, so lambda1 lambda4 = lambda2 lambda3 = 1.
inline const IntRows kPalindromic = {{0, 0, 0, -1}, {1, 0, 0, 8}, {0, 1, 0, -17}, {0, 0, 1, 8}};

inline Rows to_real(const IntRows& a) {
    Rows r(a.size(), std::vector<double>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) r[i][j] = static_cast<double>(a[i][j]);
    return r;
}

} // namespace oracle

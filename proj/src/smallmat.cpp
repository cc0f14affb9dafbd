#include "pathlab/smallmat.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace pathlab {

namespace {

using i128 = __int128;

i128 checked_mul(i128 a, i128 b) {
    i128 r;
    if (__builtin_mul_overflow(a, b, &r)) {
        throw NumericalError(ErrorKind::IntegerOverflow, "128-bit product overflow");
    }
    return r;
}

i128 checked_sub(i128 a, i128 b) {
    i128 r;
    if (__builtin_sub_overflow(a, b, &r)) {
        throw NumericalError(ErrorKind::IntegerOverflow, "128-bit difference overflow");
    }
    return r;
}

std::int64_t narrow(i128 v) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
        throw NumericalError(ErrorKind::IntegerOverflow, "result exceeds 64 bits");
    }
    return static_cast<std::int64_t>(v);
}

i128 bareiss(std::vector<i128> m, int n) {
    if (n == 0) return 1;
    int sign = 1;
    i128 prev = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (m[k * n + k] == 0) {
            int swap = -1;
            for (int i = k + 1; i < n; ++i) {
                if (m[i * n + k] != 0) {
                    swap = i;
                    break;
                }
            }
            if (swap < 0) return 0;
            for (int j = 0; j < n; ++j) std::swap(m[k * n + j], m[swap * n + j]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i) {
            for (int j = k + 1; j < n; ++j) {
                const i128 num = checked_sub(checked_mul(m[i * n + j], m[k * n + k]),
                                             checked_mul(m[i * n + k], m[k * n + j]));
                m[i * n + j] = num / prev;  // exact by Sylvester's identity
            }
        }
        prev = m[k * n + k];
    }
    return sign * m[(n - 1) * n + (n - 1)];
}

i128 minor_of(const IntMatrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
    const int k = static_cast<int>(rows.size());
    std::vector<i128> m(static_cast<std::size_t>(k) * k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) m[i * k + j] = a(rows[i], cols[j]);
    return bareiss(std::move(m), k);
}

void enumerate_subsets(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == k) {
        out.push_back(cur);
        return;
    }
    for (int i = start; i <= n - (k - static_cast<int>(cur.size())); ++i) {
        cur.push_back(i);
        enumerate_subsets(n, k, i + 1, cur, out);
        cur.pop_back();
    }
}

} // namespace

std::int64_t exact_determinant(const IntMatrix& a) {
    if (a.rows() != a.cols()) throw NumericalError(ErrorKind::InvalidArgument, "determinant of non-square matrix");
    const int n = static_cast<int>(a.rows());
    std::vector<i128> m(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[i * n + j] = a(i, j);
    return narrow(bareiss(std::move(m), n));
}

UnimodularMatrix::UnimodularMatrix(IntMatrix entries) : entries_(std::move(entries)) {
    const auto n = entries_.rows();
    if (n != entries_.cols()) throw NumericalError(ErrorKind::InvalidArgument, "matrix must be square");
    if (n < 2 || n > kMaxDim) {
        throw NumericalError(ErrorKind::InvalidArgument, "dimension must be between 2 and 8");
    }
    det_ = exact_determinant(entries_);
    if (det_ != 1 && det_ != -1) {
        throw NumericalError(ErrorKind::NotUnimodular, "|det| = " + std::to_string(std::llabs(det_)) + ", expected 1");
    }
    // inverse = det * adj(A) since det = +-1
    const int dim = static_cast<int>(n);
    inverse_.resize(dim, dim);
    std::vector<int> rows, cols;
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            rows.clear();
            cols.clear();
            for (int r = 0; r < dim; ++r)
                if (r != j) rows.push_back(r);
            for (int c = 0; c < dim; ++c)
                if (c != i) cols.push_back(c);
            const i128 cof = ((i + j) % 2 == 0 ? 1 : -1) * minor_of(entries_, rows, cols);
            inverse_(i, j) = narrow(cof * det_);
        }
    }
}

UnimodularMatrix UnimodularMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    IntMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != n) {
            throw NumericalError(ErrorKind::InvalidArgument, "ragged matrix rows");
        }
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return UnimodularMatrix(std::move(m));
}

std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

WedgeIndex::WedgeIndex(int n, int k) : n_(n), k_(k) {
    if (k < 1 || k > n) throw NumericalError(ErrorKind::InvalidArgument, "grade must satisfy 1 <= k <= n");
    std::vector<int> cur;
    enumerate_subsets(n, k, 0, cur, subsets_);
}

int WedgeIndex::ordinal(const std::vector<int>& subset) const {
    if (static_cast<int>(subset.size()) != k_) throw NumericalError(ErrorKind::InvalidArgument, "subset has wrong size");
    // Lexicographic rank: count subsets that precede position by position.
    std::int64_t rank = 0;
    int prev = -1;
    for (int pos = 0; pos < k_; ++pos) {
        const int v = subset[pos];
        if (v <= prev || v >= n_) throw NumericalError(ErrorKind::InvalidArgument, "subset must be sorted and in range");
        for (int c = prev + 1; c < v; ++c) rank += binomial(n_ - 1 - c, k_ - 1 - pos);
        prev = v;
    }
    return static_cast<int>(rank);
}

std::string WedgeIndex::label(int ordinal) const {
    std::string s;
    for (int idx : subset(ordinal)) {
        if (!s.empty()) s += '^';
        s += "dx" + std::to_string(idx + 1);
    }
    return s;
}

std::vector<std::string> WedgeIndex::labels() const {
    std::vector<std::string> out;
    out.reserve(subsets_.size());
    for (int i = 0; i < size(); ++i) out.push_back(label(i));
    return out;
}

std::vector<std::int64_t> char_poly(const UnimodularMatrix& a) {
    // c_{n-k} = (-1)^k * (sum of principal k x k minors)
    const int n = a.dim();
    std::vector<std::int64_t> coeffs(n + 1, 0);
    coeffs[n] = 1;
    for (int k = 1; k <= n; ++k) {
        i128 sum = 0;
        const WedgeIndex wedges(n, k);
        for (const auto& s : wedges.subsets()) sum += minor_of(a.entries(), s, s);
        coeffs[n - k] = narrow((k % 2 == 0) ? sum : -sum);
    }
    return coeffs;
}

double operator_norm(const BigMatrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<BigMatrix> svd(a);
    return svd.singularValues()(0);
}

void normalize_signs(Matrix& frame) {
    for (Eigen::Index j = 0; j < frame.cols(); ++j) {
        Eigen::Index imax = 0;
        frame.col(j).cwiseAbs().maxCoeff(&imax);
        if (frame(imax, j) < 0) frame.col(j) = -frame.col(j);
    }
}

void normalize_signs(BigMatrix& frame) {
    for (Eigen::Index j = 0; j < frame.cols(); ++j) {
        Eigen::Index imax = 0;
        frame.col(j).cwiseAbs().maxCoeff(&imax);
        if (frame(imax, j) < 0) frame.col(j) = -frame.col(j);
    }
}

EigenData eigen_real(const BigMatrix& a, double tol) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw NumericalError(ErrorKind::InvalidArgument, "eigen_real needs a non-empty square matrix");
    }
    if (!(tol > 0)) throw NumericalError(ErrorKind::InvalidArgument, "tol must be positive");
    const Eigen::Index n = a.rows();
    Eigen::EigenSolver<BigMatrix> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericalError(ErrorKind::NonRealSpectrum, "eigenvalue iteration did not converge");
    }
    const Eigen::VectorXcd ev = solver.eigenvalues();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        const double ai = std::abs(ev(i)), aj = std::abs(ev(j));
        if (ai != aj) return ai > aj;
        return ev(i).real() > ev(j).real();
    });
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (std::abs(ev(i) - ev(j)) <= tol) {
                throw NumericalError(ErrorKind::DegenerateSpectrum,
                                     "eigenvalues " + std::to_string(ev(i).real()) + " and " +
                                         std::to_string(ev(j).real()) + " coincide within tolerance");
            }
        }
    }

    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    EigenData out;
    out.vectors.resize(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const std::complex<double> lam = ev(order[static_cast<std::size_t>(c)]);
        if (std::abs(lam.imag()) > 1e-12 * scale) {
            throw NumericalError(ErrorKind::NonRealSpectrum, "complex eigenvalue pair detected");
        }
        double lambda = lam.real();
        // Inverse iteration with a slightly shifted real pole, refined by Rayleigh quotient.
        BigMatrix shifted = a;
        const double shift = lambda + 1e-13 * scale;
        shifted.diagonal().array() -= shift;
        Eigen::FullPivLU<BigMatrix> lu(shifted);
        BigVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.37 * std::sin(1.7 * static_cast<double>(i) + 0.3);
        v.normalize();
        for (int it = 0; it < 3; ++it) {
            BigVector w = lu.solve(v);
            const double nw = w.norm();
            if (!(nw > 0) || !std::isfinite(nw)) break;
            v = w / nw;
        }
        lambda = v.dot(a * v);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0) v = -v;
        const double res = (a * v - lambda * v).norm();
        if (!(res <= tol * scale)) {
            throw NumericalError(ErrorKind::NonRealSpectrum, "eigen-pair residual floor not reached");
        }
        out.values.push_back(lambda);
        out.residuals.push_back(res);
        out.vectors.col(c) = v;
    }
    return out;
}

BigMatrix exterior_power(const BigMatrix& a, int k) {
    if (a.rows() != a.cols()) throw NumericalError(ErrorKind::InvalidArgument, "square matrix required");
    const int n = static_cast<int>(a.rows());
    const WedgeIndex idx(n, k);
    const int m = idx.size();
    BigMatrix out(m, m);
    BigMatrix sub(k, k);
    for (int I = 0; I < m; ++I) {
        const auto& rows = idx.subset(I);
        for (int J = 0; J < m; ++J) {
            const auto& cols = idx.subset(J);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) sub(i, j) = a(rows[i], cols[j]);
            out(I, J) = sub.determinant();
        }
    }
    return out;
}

IntMatrix exterior_power(const IntMatrix& a, int k) {
    if (a.rows() != a.cols()) throw NumericalError(ErrorKind::InvalidArgument, "square matrix required");
    const int n = static_cast<int>(a.rows());
    const WedgeIndex idx(n, k);
    const int m = idx.size();
    IntMatrix out(m, m);
    for (int I = 0; I < m; ++I)
        for (int J = 0; J < m; ++J) out(I, J) = narrow(minor_of(a, idx.subset(I), idx.subset(J)));
    return out;
}

void orthonormalize_inplace(Matrix& frame, double* log_stretch) {
    const Eigen::Index k = frame.cols();
    for (Eigen::Index j = 0; j < k; ++j) {
        double norm_before = frame.col(j).norm();
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const double c = frame.col(i).dot(frame.col(j));
                frame.col(j) -= c * frame.col(i);
            }
        }
        const double nrm = frame.col(j).norm();
        if (!(nrm > 1e-300) || !(nrm > 1e-14 * norm_before)) {
            throw NumericalError(ErrorKind::DegenerateFrame, "frame columns are linearly dependent");
        }
        frame.col(j) /= nrm;
        if (log_stretch) log_stretch[j] = std::log(nrm);
    }
}

Matrix orthonormalize(const Matrix& frame, std::vector<double>* log_stretch) {
    Matrix q = frame;
    if (log_stretch) {
        log_stretch->assign(static_cast<std::size_t>(frame.cols()), 0.0);
        orthonormalize_inplace(q, log_stretch->data());
    } else {
        orthonormalize_inplace(q);
    }
    return q;
}

double k_volume(const Matrix& frame) {
    if (frame.cols() == 0) return 1.0;
    if (frame.cols() > frame.rows()) return 0.0;
    // Householder QR: sqrt(det G^T G) = prod |R_jj|, without squaring the condition number.
    Eigen::HouseholderQR<Matrix> qr(frame);
    const Matrix& r = qr.matrixQR();
    double vol = 1.0;
    for (Eigen::Index j = 0; j < frame.cols(); ++j) vol *= std::abs(r(j, j));
    return vol;
}

double subspace_angle(const Matrix& p, const Matrix& q) {
    const Matrix qp = orthonormalize(p);
    const Matrix qq = orthonormalize(q);
    const Matrix resid = qq - qp * (qp.transpose() * qq);
    Eigen::JacobiSVD<Matrix> svd(resid);
    const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    return std::asin(std::min(1.0, s));
}

} // namespace pathlab

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pathlab/errors.hpp"

namespace pathlab {

inline constexpr int kMaxDim = 8;

// Stack-allocated dynamic sizes; every tangent-space object fits in 8x8.
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
// Exterior powers of an 8x8 matrix reach 70x70.
using BigMatrix = Eigen::MatrixXd;
using BigVector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Exact determinant by fraction-free Bareiss elimination in 128-bit arithmetic.
/// Throws NumericalError(IntegerOverflow) if an intermediate leaves the 128-bit range
/// or the result does not fit in 64 bits.
std::int64_t exact_determinant(const IntMatrix& a);

/// Integer n x n matrix with |det| = 1 and its exact integer inverse.
class UnimodularMatrix {
public:
    explicit UnimodularMatrix(IntMatrix entries);
    static UnimodularMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

    int dim() const noexcept { return static_cast<int>(entries_.rows()); }
    const IntMatrix& entries() const noexcept { return entries_; }
    const IntMatrix& inverse() const noexcept { return inverse_; }
    std::int64_t determinant() const noexcept { return det_; }
    Matrix to_real() const { return entries_.cast<double>(); }
    Matrix inverse_real() const { return inverse_.cast<double>(); }

private:
    IntMatrix entries_;
    IntMatrix inverse_;
    std::int64_t det_ = 0;
};

/// Sorted real eigen-decomposition. Eigenvalues are ordered by decreasing |lambda|;
/// eigenvector j is column j of `vectors`.
struct EigenData {
    std::vector<double> values;
    BigMatrix vectors;
    std::vector<double> residuals;

    int dim() const noexcept { return static_cast<int>(values.size()); }
    Matrix chart() const { return vectors; }
};

/// Basis bookkeeping for Lambda^k R^n: lexicographic k-subsets of {0..n-1}.
class WedgeIndex {
public:
    WedgeIndex(int n, int k);

    int n() const noexcept { return n_; }
    int k() const noexcept { return k_; }
    int size() const noexcept { return static_cast<int>(subsets_.size()); }
    const std::vector<int>& subset(int ordinal) const { return subsets_.at(ordinal); }
    const std::vector<std::vector<int>>& subsets() const noexcept { return subsets_; }
    /// Ordinal of a sorted subset; throws InvalidArgument if it is not a valid k-subset.
    int ordinal(const std::vector<int>& subset) const;
    /// Human label such as "dx1^dx3".
    std::string label(int ordinal) const;
    std::vector<std::string> labels() const;

private:
    int n_;
    int k_;
    std::vector<std::vector<int>> subsets_;
};

std::int64_t binomial(int n, int k);

/// Coefficients of det(xI - A), lowest degree first; the leading coefficient is 1.
std::vector<std::int64_t> char_poly(const UnimodularMatrix& a);

/// Real simple spectrum decomposition. `tol` bounds every residual ||Av - lambda v||
/// and is also the minimal eigenvalue separation.
EigenData eigen_real(const BigMatrix& a, double tol = 1e-10);

/// k-th exterior power: entry (I, J) is the minor with rows I and columns J.
BigMatrix exterior_power(const BigMatrix& a, int k);
IntMatrix exterior_power(const IntMatrix& a, int k);

/// k-dimensional volume spanned by the columns of `frame` (sqrt of the Gram determinant).
double k_volume(const Matrix& frame);

/// Largest principal angle between the column spans of two frames of equal rank.
double subspace_angle(const Matrix& p, const Matrix& q);

/// Orthonormal basis of the column span, ordered so that span of the first j columns is
/// preserved (Gram-Schmidt with reorthogonalization). `log_stretch`, if non-null,
/// receives log|R_jj|.
Matrix orthonormalize(const Matrix& frame, std::vector<double>* log_stretch = nullptr);
/// In-place variant; `log_stretch` (if non-null) must hold frame.cols() entries.
void orthonormalize_inplace(Matrix& frame, double* log_stretch = nullptr);

/// Flip each column so its largest-magnitude component is positive.
void normalize_signs(Matrix& frame);
void normalize_signs(BigMatrix& frame);

double operator_norm(const BigMatrix& a);

} // namespace pathlab

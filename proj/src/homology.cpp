#include "pathlab/homology.hpp"

#include <algorithm>
#include <cmath>

namespace pathlab {

BundleSelector::BundleSelector(std::vector<int> indices, int n) : indices_(std::move(indices)), n_(n) {
    if (indices_.empty()) throw NumericalError(ErrorKind::InvalidArgument, "bundle selector is empty");
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        if (indices_[i] < 0 || indices_[i] >= n) {
            throw NumericalError(ErrorKind::InvalidArgument, "bundle selector index out of range");
        }
        if (i > 0 && indices_[i] <= indices_[i - 1]) {
            throw NumericalError(ErrorKind::InvalidArgument, "bundle selector must be sorted and unique");
        }
    }
}

BundleSelector BundleSelector::from_one_based(const std::vector<int>& indices, int n) {
    std::vector<int> zero;
    zero.reserve(indices.size());
    for (int i : indices) zero.push_back(i - 1);
    return BundleSelector(std::move(zero), n);
}

BundleSelector BundleSelector::interval(int first, int last, int n) {
    std::vector<int> idx;
    for (int i = first; i <= last; ++i) idx.push_back(i);
    return BundleSelector(std::move(idx), n);
}

bool BundleSelector::contiguous() const noexcept {
    return !indices_.empty() && indices_.back() - indices_.front() + 1 == size();
}

bool BundleSelector::is_strongest_block() const noexcept { return contiguous() && indices_.front() == 0; }

std::vector<int> BundleSelector::one_based() const {
    std::vector<int> out;
    for (int i : indices_) out.push_back(i + 1);
    return out;
}

std::string BundleSelector::label() const {
    std::string s = "{";
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(indices_[i] + 1);
    }
    return s + "}";
}

IntMatrix induced_on_Hk(const UnimodularMatrix& a, int k) { return exterior_power(a.entries(), k); }

HomologyClass wedge_class(const Matrix& frame) {
    const int n = static_cast<int>(frame.rows());
    const int k = static_cast<int>(frame.cols());
    const WedgeIndex idx(n, k);
    HomologyClass h;
    h.k = k;
    h.coefficients.resize(static_cast<std::size_t>(idx.size()));
    Matrix sub(k, k);
    for (int I = 0; I < idx.size(); ++I) {
        const auto& rows = idx.subset(I);
        for (int i = 0; i < k; ++i) sub.row(i) = frame.row(rows[i]);
        h.coefficients[static_cast<std::size_t>(I)] = sub.determinant();
    }
    double norm = 0.0, big = 0.0;
    for (double c : h.coefficients) {
        norm += c * c;
        if (std::abs(c) > std::abs(big)) big = c;
    }
    norm = std::sqrt(norm);
    if (!(norm > 0)) throw NumericalError(ErrorKind::DegenerateFrame, "frame does not span a k-plane");
    const double scale = (big < 0 ? -1.0 : 1.0) / norm;
    for (double& c : h.coefficients) c *= scale;
    return h;
}

TopologicalGrowth topological_growth(const Matrix& a, const EigenData& eigen, const BundleSelector& s) {
    const int n = eigen.dim();
    if (s.ambient_dim() != n) throw NumericalError(ErrorKind::InvalidArgument, "selector dimension mismatch");
    const int k = s.size();
    TopologicalGrowth out;
    out.lambda_w = 1.0;
    for (int i : s.indices()) out.lambda_w *= eigen.values[static_cast<std::size_t>(i)];

    const double tol = 1e-9 * std::max(1.0, std::abs(out.lambda_w));
    const WedgeIndex wedges(n, k);
    for (const auto& other : wedges.subsets()) {
        if (other == s.indices()) continue;
        double prod = 1.0;
        for (int i : other) prod *= eigen.values[static_cast<std::size_t>(i)];
        if (std::abs(prod - out.lambda_w) <= tol) {
            throw NumericalError(ErrorKind::NonSimpleTopEigenvalue,
                                 "lambda_W = " + std::to_string(out.lambda_w) + " is not simple on H_" +
                                     std::to_string(k));
        }
    }

    Matrix frame(n, k);
    for (int c = 0; c < k; ++c) frame.col(c) = eigen.vectors.col(s.indices()[static_cast<std::size_t>(c)]);
    out.h_w = wedge_class(frame);

    const BigMatrix lk = exterior_power(BigMatrix(a), k);
    const BigVector h = Eigen::Map<const BigVector>(out.h_w.coefficients.data(),
                                                    static_cast<Eigen::Index>(out.h_w.coefficients.size()));
    out.eigen_residual = (lk * h - out.lambda_w * h).norm();
    if (!(out.eigen_residual <= 1e-9 * std::max(1.0, std::abs(out.lambda_w)))) {
        throw NumericalError(ErrorKind::NonRealSpectrum, "carried class is not an eigenvector of the induced map");
    }
    return out;
}

TopologicalGrowth topological_growth(const UnimodularMatrix& a, const BundleSelector& s) {
    return topological_growth(a.to_real(), eigen_real(a.to_real()), s);
}

double pairing(const HomologyClass& h, const std::vector<double>& form) {
    if (form.size() != h.coefficients.size()) {
        throw NumericalError(ErrorKind::InvalidArgument, "form grade does not match homology grade");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < form.size(); ++i) s += h.coefficients[i] * form[i];
    return s;
}

nlohmann::json homology_fragment(const TopologicalGrowth& g, int n) {
    return {{"k", g.h_w.k},
            {"lambda_W", g.lambda_w},
            {"h_W", g.h_w.coefficients},
            {"basis", WedgeIndex(n, g.h_w.k).labels()}};
}

} // namespace pathlab

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "pathlab/smallmat.hpp"

namespace pathlab {

/// Sorted, 0-based eigen-indices spanning a bundle (and its foliation).
class BundleSelector {
public:
    BundleSelector() = default;
    /// Validates: nonempty, sorted, unique, within [0, n).
    BundleSelector(std::vector<int> indices, int n);
    /// From 1-based indices as written in configs and reports.
    static BundleSelector from_one_based(const std::vector<int>& indices, int n);
    static BundleSelector interval(int first, int last, int n);

    const std::vector<int>& indices() const noexcept { return indices_; }
    int size() const noexcept { return static_cast<int>(indices_.size()); }
    int ambient_dim() const noexcept { return n_; }
    int front() const { return indices_.front(); }
    int back() const { return indices_.back(); }
    bool contiguous() const noexcept;
    /// {1, 2, ...}: the strongest |S| directions.
    bool is_strongest_block() const noexcept;
    std::vector<int> one_based() const;
    std::string label() const;

    bool operator==(const BundleSelector& o) const { return indices_ == o.indices_ && n_ == o.n_; }

private:
    std::vector<int> indices_;
    int n_ = 0;
};

struct HomologyClass {
    int k = 0;
    std::vector<double> coefficients;  // WedgeIndex basis, unit norm, largest entry positive
};

/// Matrix of f_* on H_k(T^n, Z) in the WedgeIndex basis.
IntMatrix induced_on_Hk(const UnimodularMatrix& a, int k);

struct TopologicalGrowth {
    double lambda_w = 0.0;
    HomologyClass h_w;
    double eigen_residual = 0.0;  // ||Lambda^k A h - lambda h||
};

/// lambda_W = prod_{i in S} lambda_i and h_W = normalized v_{s1} ^ ... ^ v_{sk}.
/// Throws NonSimpleTopEigenvalue if another k-fold product coincides with lambda_W.
TopologicalGrowth topological_growth(const Matrix& a, const EigenData& eigen, const BundleSelector& s);
TopologicalGrowth topological_growth(const UnimodularMatrix& a, const BundleSelector& s);

/// Plucker coordinates of the column span of `frame`, normalized to unit norm with
/// the largest-magnitude entry positive.
HomologyClass wedge_class(const Matrix& frame);

/// Canonical pairing with a constant-coefficient k-form given in the dual basis.
double pairing(const HomologyClass& h, const std::vector<double>& form);

nlohmann::json homology_fragment(const TopologicalGrowth& g, int n);

} // namespace pathlab

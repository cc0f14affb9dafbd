#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pathlab/smallmat.hpp"

namespace pathlab {

/// Compactly supported, radius-preserving rotation in eigen-chart coordinates.
///
/// With u = L^{-1}(x - p) (p taken at its nearest lattice translate), the (u_i, u_j)
/// plane is rotated by psi(|u|), psi(r) = theta_max * exp(1 - 1/(1 - (r/rho)^2)) for
/// r < rho and 0 beyond. The chart radius is preserved, so the map is volume
/// preserving and its inverse is the rotation by -psi.
class LocalizedRotation {
public:
    LocalizedRotation(Vector center, Matrix chart, std::array<int, 2> plane, double rho, double theta_max);

    const Vector& center() const noexcept { return center_; }
    const Matrix& chart() const noexcept { return chart_; }
    std::array<int, 2> plane() const noexcept { return plane_; }
    double rho() const noexcept { return rho_; }
    double theta_max() const noexcept { return theta_max_; }

    double angle(double r) const;
    double angle_derivative(double r) const;

    /// Chart coordinates of x relative to the nearest translate of the center.
    Vector chart_coordinates(const Vector& x) const;
    bool in_support(const Vector& x) const;

    /// Lifted action on R^n; periodic displacement, identity outside the support.
    Vector apply(const Vector& x) const;
    Vector apply_inverse(const Vector& x) const;
    Matrix differential(const Vector& x) const;
    Matrix inverse_differential(const Vector& x) const;

private:
    Vector rotate(const Vector& x, double sign) const;
    Matrix rotate_differential(const Vector& x, double sign) const;

    Vector center_;
    Matrix chart_;
    Matrix chart_inverse_;
    std::array<int, 2> plane_;
    double rho_;
    double theta_max_;
};

/// `plane` holds 0-based eigen-indices into `eigen`. Throws SupportTooLarge if
/// 2 rho ||L|| >= 1 and LatticePointInSupport if an integer point lies in the support.
LocalizedRotation build_localized_rotation(const EigenData& eigen, std::array<int, 2> plane, Vector center,
                                           double rho, double theta_max);

/// f = T_A o h_1 o ... o h_m as a diffeomorphism of T^n.
class TorusMap {
public:
    /// Eigen data is computed when the spectrum is real and simple; maps with a
    /// degenerate spectrum (e.g. identity) are allowed only without rotations.
    explicit TorusMap(UnimodularMatrix linear, std::vector<LocalizedRotation> rotations = {});

    struct RotationParams {
        Vector center;
        std::array<int, 2> plane;  // 0-based eigen-indices
        double rho;
        double theta_max;
    };
    static TorusMap build(const UnimodularMatrix& linear, const std::vector<RotationParams>& rotations);

    int dim() const noexcept { return linear_.dim(); }
    const UnimodularMatrix& linear() const noexcept { return linear_; }
    const Matrix& linear_real() const noexcept { return a_; }
    const Matrix& linear_inverse_real() const noexcept { return a_inv_; }
    bool has_eigen() const noexcept { return eigen_.has_value(); }
    /// Throws DegenerateSpectrum/NonRealSpectrum if the linear part has none.
    const EigenData& eigen() const;
    const std::vector<LocalizedRotation>& rotations() const noexcept { return rotations_; }
    bool is_linear() const noexcept { return rotations_.empty(); }

    /// Image on the torus, coordinates reduced to [0, 1).
    Vector apply(const Vector& x) const;
    /// Lift F(x) = A H(x); F(x + z) = F(x) + A z.
    Vector lift_apply(const Vector& x) const;
    Matrix differential(const Vector& x) const;
    /// Image and differential in one pass.
    Vector step(const Vector& x, Matrix& df) const;

    Vector inverse_apply(const Vector& x) const;
    Vector inverse_lift_apply(const Vector& x) const;
    /// D(f^{-1}) at x.
    Matrix inverse_differential(const Vector& x) const;
    Vector inverse_step(const Vector& x, Matrix& dfinv) const;

    bool in_any_support(const Vector& x) const;

private:
    UnimodularMatrix linear_;
    Matrix a_;
    Matrix a_inv_;
    std::optional<EigenData> eigen_;
    std::string eigen_error_;
    ErrorKind eigen_kind_ = ErrorKind::DegenerateSpectrum;
    std::vector<LocalizedRotation> rotations_;
};

/// Reduce to [0, 1)^n.
Vector wrap(const Vector& x);
/// Euclidean length of the shortest representative of x - y modulo Z^n.
double torus_distance(const Vector& x, const Vector& y);

struct C1DistanceReport {
    double estimate = 0.0;
    std::int64_t samples = 0;
    std::int64_t support_hits = 0;
    bool support_unsampled = false;
};

/// max over sampled x of max(|f(x) - Ax|_mod1, ||Df(x) - A||_op). A sampled estimate.
C1DistanceReport c1_distance_estimate(const TorusMap& map, std::int64_t samples, std::uint64_t seed = 7);

/// {"linear": [[...]], "rotations": [{"center": [...], "plane": [i, j], "rho": r, "theta_max": t}]}
/// `plane` entries in JSON are 1-based eigen-indices.
TorusMap torus_map_from_json(const nlohmann::json& j);
nlohmann::json torus_map_to_json(const TorusMap& map);

} // namespace pathlab

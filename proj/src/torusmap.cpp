#include "pathlab/torusmap.hpp"

#include <cmath>

#include "json.hpp"

#include "pathlab/parallel.hpp"

namespace pathlab {

LocalizedRotation::LocalizedRotation(Vector center, Matrix chart, std::array<int, 2> plane, double rho,
                                     double theta_max)
    : center_(std::move(center)), chart_(std::move(chart)), plane_(plane), rho_(rho), theta_max_(theta_max) {
    const int n = static_cast<int>(chart_.rows());
    if (chart_.cols() != n || center_.size() != n) {
        throw NumericalError(ErrorKind::InvalidArgument, "rotation chart and center dimensions disagree");
    }
    if (plane_[0] == plane_[1] || plane_[0] < 0 || plane_[1] < 0 || plane_[0] >= n || plane_[1] >= n) {
        throw NumericalError(ErrorKind::InvalidArgument, "rotation plane needs two distinct valid eigen-indices");
    }
    if (!(rho_ > 0) || !std::isfinite(rho_)) throw NumericalError(ErrorKind::InvalidArgument, "rho must be positive");
    if (!(theta_max_ >= 0) || !std::isfinite(theta_max_)) {
        throw NumericalError(ErrorKind::InvalidArgument, "theta_max must be finite and non-negative");
    }
    Eigen::FullPivLU<Matrix> lu(chart_);
    if (!lu.isInvertible()) throw NumericalError(ErrorKind::InvalidArgument, "rotation chart is singular");
    chart_inverse_ = lu.inverse();
}

double LocalizedRotation::angle(double r) const {
    const double s = r / rho_;
    if (s >= 1.0) return 0.0;
    return theta_max_ * std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double LocalizedRotation::angle_derivative(double r) const {
    const double s = r / rho_;
    if (s >= 1.0) return 0.0;
    const double q = 1.0 - s * s;
    return -angle(r) * 2.0 * s / (rho_ * q * q);
}

Vector LocalizedRotation::chart_coordinates(const Vector& x) const {
    Vector d = x - center_;
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) -= std::round(d(i));
    return chart_inverse_ * d;
}

bool LocalizedRotation::in_support(const Vector& x) const { return chart_coordinates(x).norm() < rho_; }

Vector LocalizedRotation::rotate(const Vector& x, double sign) const {
    const Vector u = chart_coordinates(x);
    const double r = u.norm();
    if (r >= rho_) return x;
    const double psi = sign * angle(r);
    const double c = std::cos(psi), s = std::sin(psi);
    const int i = plane_[0], j = plane_[1];
    const double dui = (c - 1.0) * u(i) - s * u(j);
    const double duj = s * u(i) + (c - 1.0) * u(j);
    return x + chart_.col(i) * dui + chart_.col(j) * duj;
}

Matrix LocalizedRotation::rotate_differential(const Vector& x, double sign) const {
    const int n = static_cast<int>(x.size());
    Matrix id = Matrix::Identity(n, n);
    const Vector u = chart_coordinates(x);
    const double r = u.norm();
    if (r >= rho_) return id;
    const double psi = sign * angle(r);
    const double c = std::cos(psi), s = std::sin(psi);
    const int i = plane_[0], j = plane_[1];
    // Rows i, j of Dh_u - I in chart coordinates: rotation block plus the shear
    // (dR/dpsi u) psi'(r) (u/r)^T from the radius dependence of the angle.
    Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxDim> row_i = Eigen::RowVectorXd::Zero(n);
    Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxDim> row_j = Eigen::RowVectorXd::Zero(n);
    row_i(i) = c - 1.0;
    row_i(j) = -s;
    row_j(i) = s;
    row_j(j) = c - 1.0;
    if (r > 0) {
        const double dpsi = sign * angle_derivative(r) / r;
        const double gi = -s * u(i) - c * u(j);
        const double gj = c * u(i) - s * u(j);
        row_i += (gi * dpsi) * u.transpose();
        row_j += (gj * dpsi) * u.transpose();
    }
    id += chart_.col(i) * (row_i * chart_inverse_) + chart_.col(j) * (row_j * chart_inverse_);
    return id;
}

Vector LocalizedRotation::apply(const Vector& x) const { return rotate(x, 1.0); }
Vector LocalizedRotation::apply_inverse(const Vector& x) const { return rotate(x, -1.0); }
Matrix LocalizedRotation::differential(const Vector& x) const { return rotate_differential(x, 1.0); }
Matrix LocalizedRotation::inverse_differential(const Vector& x) const { return rotate_differential(x, -1.0); }

LocalizedRotation build_localized_rotation(const EigenData& eigen, std::array<int, 2> plane, Vector center,
                                           double rho, double theta_max) {
    const int n = eigen.dim();
    if (center.size() != n) throw NumericalError(ErrorKind::InvalidArgument, "center has wrong dimension");
    for (int i = 0; i < n; ++i) {
        if (!(center(i) >= 0.0 && center(i) < 1.0)) {
            throw NumericalError(ErrorKind::InvalidArgument, "center coordinates must lie in [0, 1)");
        }
    }
    const Matrix chart = eigen.chart();
    const double norm = operator_norm(eigen.vectors);
    if (!(2.0 * rho * norm < 1.0)) {
        throw NumericalError(ErrorKind::SupportTooLarge,
                             "2 rho ||L|| = " + std::to_string(2.0 * rho * norm) + " must be below 1");
    }
    LocalizedRotation rot(center, chart, plane, rho, theta_max);
    // Support sup-radius is below 1/2, so only the floor/ceil corners can fall inside.
    for (int mask = 0; mask < (1 << n); ++mask) {
        Vector z(n);
        for (int i = 0; i < n; ++i) z(i) = std::floor(center(i)) + ((mask >> i) & 1);
        if (rot.in_support(z)) {
            throw NumericalError(ErrorKind::LatticePointInSupport, "rotation support contains a lattice point");
        }
    }
    return rot;
}

TorusMap::TorusMap(UnimodularMatrix linear, std::vector<LocalizedRotation> rotations)
    : linear_(std::move(linear)), rotations_(std::move(rotations)) {
    a_ = linear_.to_real();
    a_inv_ = linear_.inverse_real();
    try {
        eigen_ = eigen_real(a_);
    } catch (const NumericalError& e) {
        if (!rotations_.empty()) throw;
        eigen_error_ = e.what();
        eigen_kind_ = e.kind();
    }
    for (const auto& r : rotations_) {
        if (r.center().size() != dim()) throw NumericalError(ErrorKind::InvalidArgument, "rotation dimension mismatch");
    }
}

TorusMap TorusMap::build(const UnimodularMatrix& linear, const std::vector<RotationParams>& rotations) {
    std::vector<LocalizedRotation> rots;
    if (!rotations.empty()) {
        const EigenData eigen = eigen_real(linear.to_real());
        for (const auto& p : rotations) rots.push_back(build_localized_rotation(eigen, p.plane, p.center, p.rho, p.theta_max));
    }
    return TorusMap(linear, std::move(rots));
}

const EigenData& TorusMap::eigen() const {
    if (!eigen_) throw NumericalError(eigen_kind_, eigen_error_);
    return *eigen_;
}

Vector wrap(const Vector& x) {
    Vector y = x;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y(i) -= std::floor(y(i));
        if (y(i) >= 1.0) y(i) = 0.0;
    }
    return y;
}

double torus_distance(const Vector& x, const Vector& y) {
    Vector d = x - y;
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) -= std::round(d(i));
    return d.norm();
}

Vector TorusMap::lift_apply(const Vector& x) const {
    Vector y = x;
    for (auto it = rotations_.rbegin(); it != rotations_.rend(); ++it) y = it->apply(y);
    return a_ * y;
}

Vector TorusMap::apply(const Vector& x) const { return wrap(lift_apply(x)); }

Vector TorusMap::step(const Vector& x, Matrix& df) const {
    Vector y = x;
    Matrix m = Matrix::Identity(dim(), dim());
    for (auto it = rotations_.rbegin(); it != rotations_.rend(); ++it) {
        if (it->in_support(y)) {
            m = it->differential(y) * m;
            y = it->apply(y);
        }
    }
    df = a_ * m;
    return a_ * y;
}

Matrix TorusMap::differential(const Vector& x) const {
    Matrix df;
    step(x, df);
    return df;
}

Vector TorusMap::inverse_lift_apply(const Vector& x) const {
    Vector y = a_inv_ * x;
    for (const auto& r : rotations_) y = r.apply_inverse(y);
    return y;
}

Vector TorusMap::inverse_apply(const Vector& x) const { return wrap(inverse_lift_apply(x)); }

Vector TorusMap::inverse_step(const Vector& x, Matrix& dfinv) const {
    Vector y = a_inv_ * x;
    Matrix m = a_inv_;
    for (const auto& r : rotations_) {
        if (r.in_support(y)) {
            m = r.inverse_differential(y) * m;
            y = r.apply_inverse(y);
        }
    }
    dfinv = m;
    return y;
}

Matrix TorusMap::inverse_differential(const Vector& x) const {
    Matrix m;
    inverse_step(x, m);
    return m;
}

bool TorusMap::in_any_support(const Vector& x) const {
    for (const auto& r : rotations_)
        if (r.in_support(x)) return true;
    return false;
}

C1DistanceReport c1_distance_estimate(const TorusMap& map, std::int64_t samples, std::uint64_t seed) {
    if (samples < 1) throw NumericalError(ErrorKind::InvalidArgument, "samples must be >= 1");
    C1DistanceReport rep;
    rep.samples = samples;
    const Matrix& a = map.linear_real();
    for (std::int64_t s = 0; s < samples; ++s) {
        SampleStream rng(seed, static_cast<std::uint64_t>(s));
        const Vector x = rng.uniform_point(map.dim());
        if (map.in_any_support(x)) ++rep.support_hits;
        Matrix df;
        const Vector fx = map.step(x, df);
        const double d0 = torus_distance(fx, a * x);
        Eigen::JacobiSVD<Matrix> svd(df - a);
        const double d1 = svd.singularValues()(0);
        rep.estimate = std::max({rep.estimate, d0, d1});
    }
    rep.support_unsampled = !map.rotations().empty() && rep.support_hits == 0;
    return rep;
}

namespace {

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

} // namespace

TorusMap torus_map_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("map must be an object");
    reject_unknown(j, {"linear", "rotations"}, "map");
    if (!j.contains("linear") || !j["linear"].is_array()) throw ConfigError("map.linear must be an array of rows");
    std::vector<std::vector<std::int64_t>> rows;
    for (const auto& row : j["linear"]) {
        if (!row.is_array()) throw ConfigError("map.linear rows must be arrays");
        std::vector<std::int64_t> r;
        for (const auto& v : row) {
            if (!v.is_number_integer()) throw ConfigError("map.linear entries must be integers");
            r.push_back(v.get<std::int64_t>());
        }
        rows.push_back(std::move(r));
    }
    if (rows.size() < 2 || rows.size() > static_cast<std::size_t>(kMaxDim)) {
        throw ConfigError("map.linear must have between 2 and 8 rows");
    }
    for (const auto& r : rows) {
        if (r.size() != rows.size()) throw ConfigError("map.linear must be square");
    }
    UnimodularMatrix a = UnimodularMatrix::from_rows(rows);
    const int n = a.dim();
    std::vector<TorusMap::RotationParams> params;
    if (j.contains("rotations")) {
        if (!j["rotations"].is_array()) throw ConfigError("map.rotations must be an array");
        for (const auto& r : j["rotations"]) {
            if (!r.is_object()) throw ConfigError("each rotation must be an object");
            reject_unknown(r, {"center", "plane", "rho", "theta_max"}, "rotation");
            for (const char* key : {"center", "plane", "rho", "theta_max"}) {
                if (!r.contains(key)) throw ConfigError(std::string("rotation is missing '") + key + "'");
            }
            TorusMap::RotationParams p;
            if (!r["center"].is_array() || static_cast<int>(r["center"].size()) != n) {
                throw ConfigError("rotation.center must have " + std::to_string(n) + " coordinates");
            }
            p.center.resize(n);
            for (int i = 0; i < n; ++i) {
                if (!r["center"][i].is_number()) throw ConfigError("rotation.center entries must be numbers");
                p.center(i) = r["center"][i].get<double>();
            }
            if (!r["plane"].is_array() || r["plane"].size() != 2 || !r["plane"][0].is_number_integer() ||
                !r["plane"][1].is_number_integer()) {
                throw ConfigError("rotation.plane must be a pair of integers");
            }
            p.plane = {r["plane"][0].get<int>() - 1, r["plane"][1].get<int>() - 1};
            if (!r["rho"].is_number() || !r["theta_max"].is_number()) {
                throw ConfigError("rotation.rho and rotation.theta_max must be numbers");
            }
            p.rho = r["rho"].get<double>();
            p.theta_max = r["theta_max"].get<double>();
            params.push_back(std::move(p));
        }
    }
    return TorusMap::build(a, params);
}

nlohmann::json torus_map_to_json(const TorusMap& map) {
    nlohmann::json j;
    nlohmann::json rows = nlohmann::json::array();
    const IntMatrix& a = map.linear().entries();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(a(i, c));
        rows.push_back(row);
    }
    j["linear"] = rows;
    nlohmann::json rots = nlohmann::json::array();
    for (const auto& r : map.rotations()) {
        nlohmann::json o;
        std::vector<double> c(r.center().data(), r.center().data() + r.center().size());
        o["center"] = c;
        o["plane"] = {r.plane()[0] + 1, r.plane()[1] + 1};
        o["rho"] = r.rho();
        o["theta_max"] = r.theta_max();
        rots.push_back(o);
    }
    j["rotations"] = rots;
    return j;
}

} // namespace pathlab

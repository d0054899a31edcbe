#pragma once

#include "sbie/harmonics.hpp"

#include <vector>

namespace sbie {

// z-y-z Euler angles; matrix() = Rz(alpha) Ry(beta) Rz(gamma).
struct Rotation {
    double alpha = 0.0, beta = 0.0, gamma = 0.0;

    Mat3 matrix() const;
    Rotation inverse() const;
    static Rotation from_matrix(const Mat3& m);
};

// a after b
Rotation compose(const Rotation& a, const Rotation& b);

// Rotation taking +z to center/|center|, gamma = 0.
Rotation align_pole(const Vec3& center);

// Real Wigner-d matrices d^n_{m'm}(beta), n <= p, stored as (m'+n, m+n).
// Three-term recurrence in the degree from closed-form seeds; O(p^3).
class WignerTable {
public:
    WignerTable(int p, double beta);

    int order() const { return p_; }
    double beta() const { return beta_; }
    const Eigen::MatrixXd& block(int n) const { return d_[n]; }
    double operator()(int n, int mp, int m) const { return d_[n](mp + n, m + n); }

private:
    int p_;
    double beta_;
    std::vector<Eigen::MatrixXd> d_;
};

// Coefficient map of f -> f∘R^{-1} for degrees <= p, in the Y_n^{-m} = conj(Y_n^m) basis.
// Vector fields map as u -> R u(R^{-1} x); each of the V, W, X channels rotates like a scalar.
class RotationOperator {
public:
    RotationOperator(int p, const Rotation& rot);

    int order() const { return p_; }
    const Rotation& rotation() const { return rot_; }
    const Eigen::MatrixXcd& block(int n) const { return D_[n]; }

    ScalarCoeffs apply(const ScalarCoeffs& c) const;
    VectorCoeffsVWX apply(const VectorCoeffsVWX& c) const;
    // the map of rotation().inverse(), using unitarity
    ScalarCoeffs apply_inverse(const ScalarCoeffs& c) const;
    VectorCoeffsVWX apply_inverse(const VectorCoeffsVWX& c) const;

private:
    int p_;
    Rotation rot_;
    std::vector<Eigen::MatrixXcd> D_;
};

ScalarCoeffs rotate_scalar(const ScalarCoeffs& c, const Rotation& rot);
VectorCoeffsVWX rotate_vector(const VectorCoeffsVWX& c, const Rotation& rot);

}  // namespace sbie

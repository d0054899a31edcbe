#include "sbie/rotation.hpp"

#include <cmath>
#include <stdexcept>

namespace sbie {

namespace {

Mat3 rz(double a)
{
    Mat3 m;
    m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return m;
}

Mat3 ry(double b)
{
    Mat3 m;
    m << std::cos(b), 0, std::sin(b), 0, 1, 0, -std::sin(b), 0, std::cos(b);
    return m;
}

// d^l_{m'm} at l = max(|m'|, |m|), from the closed forms for a row or column of index ±l
double wigner_seed(int mp, int m, double lc, double ls)
{
    auto term = [&](int l, int a, int b, int k) {
        // sqrt(C(2l, k)) cos^a(β/2) sin^b(β/2), evaluated in logs
        const double lbin = std::lgamma(2.0 * l + 1) - std::lgamma(k + 1.0) - std::lgamma(2.0 * l - k + 1);
        double e = 0.5 * lbin;
        if (a > 0)
            e += a * lc;
        if (b > 0)
            e += b * ls;
        return std::exp(e);
    };
    const int l = std::max(std::abs(mp), std::abs(m));
    if (std::abs(mp) >= std::abs(m)) {
        if (mp == l) {
            const double s = ((l - m) & 1) ? -1.0 : 1.0;
            return s * term(l, l + m, l - m, l + m);
        }
        return term(l, l - m, l + m, l - m);
    }
    if (m == l)
        return term(l, l + mp, l - mp, l + mp);
    const double s = ((l + mp) & 1) ? -1.0 : 1.0;
    return s * term(l, l - mp, l + mp, l - mp);
}

// (-1)^m for m < 0 relates the conj-symmetric basis to the Condon-Shortley one
double basis_sign(int m) { return (m < 0 && (m & 1)) ? -1.0 : 1.0; }

}  // namespace

Mat3 Rotation::matrix() const { return rz(alpha) * ry(beta) * rz(gamma); }

Rotation Rotation::inverse() const { return Rotation{-gamma, -beta, -alpha}; }

Rotation Rotation::from_matrix(const Mat3& m)
{
    Rotation r;
    const double c = std::clamp(m(2, 2), -1.0, 1.0);
    r.beta = std::acos(c);
    const double s = std::hypot(m(0, 2), m(1, 2));
    if (s > 1e-12) {
        r.alpha = std::atan2(m(1, 2), m(0, 2));
        r.gamma = std::atan2(m(2, 1), -m(2, 0));
    } else if (c > 0) {
        r.beta = 0.0;
        r.alpha = std::atan2(m(1, 0), m(0, 0));
    } else {
        r.beta = M_PI;
        r.alpha = std::atan2(-m(1, 0), m(1, 1));
    }
    return r;
}

Rotation compose(const Rotation& a, const Rotation& b)
{
    return Rotation::from_matrix(a.matrix() * b.matrix());
}

Rotation align_pole(const Vec3& center)
{
    const double len = center.norm();
    if (!(len > 0.0) || !std::isfinite(len))
        throw std::invalid_argument("align_pole: zero or non-finite direction");
    const Vec3 u = center / len;
    Rotation r;
    r.beta = std::acos(std::clamp(u.z(), -1.0, 1.0));
    if (std::hypot(u.x(), u.y()) > 1e-15)
        r.alpha = std::atan2(u.y(), u.x());
    return r;
}

WignerTable::WignerTable(int p, double beta) : p_(p), beta_(beta), d_(p + 1)
{
    if (p < 0)
        throw std::invalid_argument("WignerTable: negative order");
    for (int n = 0; n <= p; ++n)
        d_[n].setZero(2 * n + 1, 2 * n + 1);
    const double cb = std::cos(beta);
    const double ch = std::abs(std::cos(0.5 * beta)), sh = std::abs(std::sin(0.5 * beta));
    const double lc = ch > 0 ? std::log(ch) : -INFINITY, ls = sh > 0 ? std::log(sh) : -INFINITY;
    const double sgn_c = std::cos(0.5 * beta) < 0 ? -1.0 : 1.0, sgn_s = std::sin(0.5 * beta) < 0 ? -1.0 : 1.0;
    for (int mp = -p; mp <= p; ++mp)
        for (int m = -p; m <= p; ++m) {
            const int l = std::max(std::abs(mp), std::abs(m));
            // signs of cos^a sin^b for β outside [0, π]
            int a, b;
            if (std::abs(mp) >= std::abs(m)) {
                a = mp == l ? l + m : l - m;
                b = 2 * l - a;
            } else {
                a = m == l ? l + mp : l - mp;
                b = 2 * l - a;
            }
            double prev = 0.0;
            double cur = wigner_seed(mp, m, lc, ls) * ((a & 1) ? sgn_c : 1.0) * ((b & 1) ? sgn_s : 1.0);
            d_[l](mp + l, m + l) = cur;
            // three-term recurrence in the degree
            for (int J = l; J < p; ++J) {
                const double J1 = J + 1.0;
                const double lead = J1 * (2.0 * J + 1) / std::sqrt((J1 * J1 - m * m) * (J1 * J1 - mp * mp));
                const double mix = J > 0 ? double(m) * mp / (J * J1) : 0.0;
                const double back = J > 0 ? std::sqrt((double(J) * J - m * m) * (double(J) * J - mp * mp)) /
                                                (J * (2.0 * J + 1))
                                          : 0.0;
                const double next = lead * ((cb - mix) * cur - back * prev);
                prev = cur;
                cur = next;
                d_[J + 1](mp + J + 1, m + J + 1) = cur;
            }
        }
}

RotationOperator::RotationOperator(int p, const Rotation& rot) : p_(p), rot_(rot), D_(p + 1)
{
    const WignerTable d(p, rot.beta);
    for (int n = 0; n <= p; ++n) {
        const int s = 2 * n + 1;
        Eigen::MatrixXcd D(s, s);
        for (int mp = -n; mp <= n; ++mp)
            for (int m = -n; m <= n; ++m)
                D(mp + n, m + n) = basis_sign(mp) * basis_sign(m) * d(n, mp, m) *
                                   std::exp(cplx(0.0, -mp * rot.alpha - m * rot.gamma));
        D_[n] = std::move(D);
    }
}

ScalarCoeffs RotationOperator::apply(const ScalarCoeffs& c) const
{
    if (c.p > p_)
        throw std::invalid_argument("RotationOperator: coefficient order exceeds operator order");
    ScalarCoeffs out(c.p);
    for (int n = 0; n <= c.p; ++n) {
        const Eigen::Map<const Eigen::VectorXcd> in(c.c.data() + coeff_index(n, -n), 2 * n + 1);
        Eigen::Map<Eigen::VectorXcd> o(out.c.data() + coeff_index(n, -n), 2 * n + 1);
        o.noalias() = D_[n] * in;
    }
    return out;
}

VectorCoeffsVWX RotationOperator::apply(const VectorCoeffsVWX& c) const
{
    VectorCoeffsVWX out;
    out.p = c.p;
    out.v = apply(c.v);
    out.w = apply(c.w);
    out.x = apply(c.x);
    return out;
}

ScalarCoeffs RotationOperator::apply_inverse(const ScalarCoeffs& c) const
{
    if (c.p > p_)
        throw std::invalid_argument("RotationOperator: coefficient order exceeds operator order");
    ScalarCoeffs out(c.p);
    for (int n = 0; n <= c.p; ++n) {
        const Eigen::Map<const Eigen::VectorXcd> in(c.c.data() + coeff_index(n, -n), 2 * n + 1);
        Eigen::Map<Eigen::VectorXcd> o(out.c.data() + coeff_index(n, -n), 2 * n + 1);
        o.noalias() = D_[n].adjoint() * in;
    }
    return out;
}

VectorCoeffsVWX RotationOperator::apply_inverse(const VectorCoeffsVWX& c) const
{
    VectorCoeffsVWX out;
    out.p = c.p;
    out.v = apply_inverse(c.v);
    out.w = apply_inverse(c.w);
    out.x = apply_inverse(c.x);
    return out;
}

ScalarCoeffs rotate_scalar(const ScalarCoeffs& c, const Rotation& rot)
{
    return RotationOperator(c.p, rot).apply(c);
}

VectorCoeffsVWX rotate_vector(const VectorCoeffsVWX& c, const Rotation& rot)
{
    return RotationOperator(c.p, rot).apply(c);
}

}  // namespace sbie

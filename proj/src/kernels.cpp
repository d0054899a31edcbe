#include "sbie/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sbie {

namespace {
constexpr double pi = std::numbers::pi;

double checked_norm(const Vec3& r)
{
    const double d = r.norm();
    if (d == 0.0)
        throw std::domain_error("kernel evaluated at coincident points");
    return d;
}
}  // namespace

double kernel_laplace(const Vec3& x, const Vec3& y)
{
    return 1.0 / (4 * pi * checked_norm(x - y));
}

double kernel_laplace_dn(const Vec3& x, const Vec3& y, const Vec3& ny)
{
    const Vec3 r = x - y;
    const double d = checked_norm(r);
    return r.dot(ny) / (4 * pi * d * d * d);
}

double kernel_laplace_dnx(const Vec3& x, const Vec3& y, const Vec3& nx)
{
    const Vec3 r = x - y;
    const double d = checked_norm(r);
    return -r.dot(nx) / (4 * pi * d * d * d);
}

Mat3 kernel_stokeslet(const Vec3& x, const Vec3& y)
{
    const Vec3 r = x - y;
    const double d = checked_norm(r);
    return (Mat3::Identity() / d + r * r.transpose() / (d * d * d)) / (8 * pi);
}

std::array<double, 27> kernel_stresslet(const Vec3& x, const Vec3& y)
{
    const Vec3 r = x - y;
    const double d = checked_norm(r);
    const double c = -3.0 / (4 * pi * std::pow(d, 5));
    std::array<double, 27> t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                t[i * 9 + j * 3 + k] = c * r(i) * r(j) * r(k);
    return t;
}

CVec3 stokes_double_layer_point(const Vec3& x, const Vec3& y, const Vec3& ny, const CVec3& mu)
{
    const Vec3 r = x - y;
    const double d = checked_norm(r);
    const double c = 3.0 / (4 * pi * std::pow(d, 5)) * r.dot(ny);
    return (c * (r(0) * mu(0) + r(1) * mu(1) + r(2) * mu(2))) * r.cast<cplx>();
}

CVec3 stokes_traction_point(const Vec3& x, const Vec3& y, const Vec3& nx, const CVec3& mu)
{
    const Vec3 r = x - y;
    const double d = checked_norm(r);
    const double c = -3.0 / (4 * pi * std::pow(d, 5)) * r.dot(nx);
    return (c * (r(0) * mu(0) + r(1) * mu(1) + r(2) * mu(2))) * r.cast<cplx>();
}

CVec3 rotlet(const Vec3& x, const Vec3& c, const CVec3& t)
{
    const Vec3 r = x - c;
    const double d = checked_norm(r);
    return t.cross(r.cast<cplx>()) / (8 * pi * d * d * d);
}

}  // namespace sbie

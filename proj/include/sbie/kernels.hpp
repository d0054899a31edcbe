#pragma once

#include "sbie/harmonics.hpp"

#include <array>

namespace sbie {

// G(x,y) = 1/(4π|x-y|)
double kernel_laplace(const Vec3& x, const Vec3& y);
// ∂G/∂n_y = (x-y)·n_y / (4π|x-y|^3), the double-layer kernel
double kernel_laplace_dn(const Vec3& x, const Vec3& y, const Vec3& ny);
// ∂G/∂n_x = -(x-y)·n_x / (4π|x-y|^3), the flux of the single layer
double kernel_laplace_dnx(const Vec3& x, const Vec3& y, const Vec3& nx);

// G_ij = (δ_ij/r + r_i r_j/r^3)/(8π), r = x - y
Mat3 kernel_stokeslet(const Vec3& x, const Vec3& y);

// T_ijk = -3/(4π) r_i r_j r_k / r^5, r = x - y; index i*9 + j*3 + k
std::array<double, 27> kernel_stresslet(const Vec3& x, const Vec3& y);

// ∫ T_ijk(y,x) n_k(y) μ_j: double-layer velocity at x from a point density μ at y
CVec3 stokes_double_layer_point(const Vec3& x, const Vec3& y, const Vec3& ny, const CVec3& mu);
// T_ijk(x,y) n_k(x) μ_j: traction at x (normal nx) of the Stokeslet flow from y
CVec3 stokes_traction_point(const Vec3& x, const Vec3& y, const Vec3& nx, const CVec3& mu);
// Rotlet flow (t × (x-c)) / (8π|x-c|^3)
CVec3 rotlet(const Vec3& x, const Vec3& c, const CVec3& t);

}  // namespace sbie

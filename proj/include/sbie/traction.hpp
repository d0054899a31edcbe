#pragma once

#include "sbie/harmonics.hpp"

#include <array>
#include <vector>

namespace sbie {

// Normalized Legendre values and derivatives at one θ, tri_index layout, degrees <= N.
// Ps = P/sinθ and dPs = d(P/sinθ)/dθ are stored for m >= 1 (zero at m = 0). All pole safe.
struct LegendreJet {
    int N = -1;
    double theta = 0.0, cos_t = 1.0, sin_t = 0.0;
    std::vector<double> P, dP, d2P, Ps, dPs;

    void compute(int degree, double th);
};

// φ-free part of a vector harmonic (Z e^{imφ}) and its surface gradient, spherical components.
// row_t = ∂θ Z, row_p = (1/sinθ) ∂φ Z, both including the derivatives of the moving frame.
struct VshJet {
    CVec3 Z, row_t, row_p;
};

VshJet vsh_jet(VshBasis b, int n, int m, const LegendreJet& J);
// value part only
CVec3 vsh_value(VshBasis b, int n, int m, const LegendreJet& J);

// Brackets of the strain of a(r) Z at radius r for a normal ν (spherical components):
// (∇u + ∇u^T) ν = a' A + (a/r) B with A = e_r (Z·ν) + Z ν_r and B = (∇_s Z + ∇_s Z^T) ν.
CVec3 bracket_a(const VshJet& j, const CVec3& nu);
CVec3 bracket_b(const VshJet& j, const CVec3& nu);

// Projections of the brackets A, B (for V, W, X sources) and C = Y n onto vector harmonics.
// Directions: e_r, e_z, e_+ = e_x + i e_y, e_- = e_x - i e_y. For a source of order m the output
// has order m + shift(dir) and degrees n-1, n, n+1.
class TractionCouplingTables {
public:
    enum Dir { R = 0, Z = 1, Plus = 2, Minus = 3 };
    enum Bracket { AV = 0, AW, AX, BV, BW, BX, CY, NumBrackets };
    // target channel (V, W, X) x degree offset (-1, 0, +1)
    using Entry = std::array<cplx, 9>;

    explicit TractionCouplingTables(int p);

    int order() const { return p_; }
    static int shift(Dir d) { return d == Plus ? 1 : d == Minus ? -1 : 0; }
    const Entry& entry(Dir d, Bracket b, int n, int m) const
    {
        return data_[(static_cast<size_t>(d) * NumBrackets + b) * num_coeffs(p_) + coeff_index(n, m)];
    }
    static cplx& at(Entry& e, int channel, int dn) { return e[channel * 3 + dn + 1]; }
    static cplx at(const Entry& e, int channel, int dn) { return e[channel * 3 + dn + 1]; }

private:
    int p_;
    std::vector<Entry> data_;
};

TractionCouplingTables precompute_traction_coupling(int p);
// Shared instance per order.
const TractionCouplingTables& traction_tables(int p);

// Normal of the direction d in spherical components at θ, without the e^{±iφ} factor.
CVec3 direction_normal(TractionCouplingTables::Dir d, double cos_t, double sin_t);

}  // namespace sbie

#include "sbie/traction.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace sbie {

void LegendreJet::compute(int degree, double th)
{
    const int sz = (degree + 1) * (degree + 2) / 2;
    if (N != degree) {
        N = degree;
        P.assign(sz, 0.0);
        dP.assign(sz, 0.0);
        d2P.assign(sz, 0.0);
        Ps.assign(sz, 0.0);
        dPs.assign(sz, 0.0);
    }
    theta = th;
    cos_t = std::cos(th);
    sin_t = std::sin(th);
    legendre_normalized(N, th, P.data(), dP.data(), Ps.data());
    for (int n = 0; n <= N; ++n) {
        // ladder in m: dP^m = (c+ P^{m+1} - c- P^{m-1})/2, applied to dP
        d2P[tri_index(n, 0)] = n > 0 ? std::sqrt(n * (n + 1.0)) * dP[tri_index(n, 1)] : 0.0;
        dPs[tri_index(n, 0)] = 0.0;
        for (int m = 1; m <= n; ++m) {
            const double cp = std::sqrt(double(n - m) * (n + m + 1));
            const double cm = std::sqrt(double(n + m) * (n - m + 1));
            const double up = m + 1 <= n ? dP[tri_index(n, m + 1)] : 0.0;
            d2P[tri_index(n, m)] = 0.5 * (cp * up - cm * dP[tri_index(n, m - 1)]);
            // P_n^m / sinθ as a combination of degree n-1, orders m±1
            double s = 0.0;
            if (m + 1 <= n - 1)
                s += std::sqrt(double(n - m) * (n - m - 1)) * dP[tri_index(n - 1, m + 1)];
            if (m - 1 <= n - 1)
                s += std::sqrt(double(n + m) * (n + m - 1)) * dP[tri_index(n - 1, m - 1)];
            dPs[tri_index(n, m)] = -s / (2.0 * m) * std::sqrt((2.0 * n + 1) / (2.0 * n - 1));
        }
    }
}

VshJet vsh_jet(VshBasis b, int n, int m, const LegendreJet& J)
{
    const int k = tri_index(n, std::abs(m));
    const double P = J.P[k], dP = J.dP[k], d2P = J.d2P[k], Ps = J.Ps[k], dPs = J.dPs[k];
    const cplx im(0.0, m);
    // m^2 P/sin^2 - cot dP, from the Legendre equation
    const double L = d2P + n * (n + 1.0) * P;
    VshJet j;
    switch (b) {
    case VshBasis::V:
        j.Z = CVec3(-(n + 1.0) * P, dP, im * Ps);
        j.row_t = CVec3(-(n + 2.0) * dP, d2P - (n + 1.0) * P, im * dPs);
        j.row_p = CVec3(-(n + 2.0) * im * Ps, im * dPs, -L - (n + 1.0) * P);
        break;
    case VshBasis::W:
        j.Z = CVec3(double(n) * P, dP, im * Ps);
        j.row_t = CVec3((n - 1.0) * dP, d2P + n * P, im * dPs);
        j.row_p = CVec3((n - 1.0) * im * Ps, im * dPs, -L + n * P);
        break;
    case VshBasis::X:
        j.Z = CVec3(0.0, -im * Ps, dP);
        j.row_t = CVec3(im * Ps, -im * dPs, d2P);
        j.row_p = CVec3(-dP, L, im * dPs);
        break;
    }
    return j;
}

CVec3 vsh_value(VshBasis b, int n, int m, const LegendreJet& J)
{
    const int k = tri_index(n, std::abs(m));
    const double P = J.P[k], dP = J.dP[k], Ps = J.Ps[k];
    const cplx im(0.0, m);
    switch (b) {
    case VshBasis::V:
        return CVec3(-(n + 1.0) * P, dP, im * Ps);
    case VshBasis::W:
        return CVec3(double(n) * P, dP, im * Ps);
    default:
        return CVec3(0.0, -im * Ps, dP);
    }
}

CVec3 bracket_a(const VshJet& j, const CVec3& nu)
{
    CVec3 a = j.Z * nu(0);
    a(0) += j.Z(0) * nu(0) + j.Z(1) * nu(1) + j.Z(2) * nu(2);
    return a;
}

CVec3 bracket_b(const VshJet& j, const CVec3& nu)
{
    CVec3 b = j.row_t * nu(1) + j.row_p * nu(2);
    b(1) += j.row_t(0) * nu(0) + j.row_t(1) * nu(1) + j.row_t(2) * nu(2);
    b(2) += j.row_p(0) * nu(0) + j.row_p(1) * nu(1) + j.row_p(2) * nu(2);
    return b;
}

CVec3 direction_normal(TractionCouplingTables::Dir d, double cos_t, double sin_t)
{
    switch (d) {
    case TractionCouplingTables::R:
        return CVec3(1.0, 0.0, 0.0);
    case TractionCouplingTables::Z:
        return CVec3(cos_t, -sin_t, 0.0);
    case TractionCouplingTables::Plus:
        return CVec3(sin_t, cos_t, cplx(0.0, 1.0));
    default:
        return CVec3(sin_t, cos_t, cplx(0.0, -1.0));
    }
}

namespace {

double vsh_norm2(int t, int n)
{
    switch (t) {
    case 0: return (n + 1.0) * (2 * n + 1.0);
    case 1: return n * (2 * n + 1.0);
    default: return n * (n + 1.0);
    }
}

}  // namespace

TractionCouplingTables::TractionCouplingTables(int p)
    : p_(p), data_(static_cast<size_t>(4) * NumBrackets * num_coeffs(p))
{
    if (p < 1)
        throw std::invalid_argument("traction tables need p >= 1");
    for (auto& e : data_)
        e.fill(0.0);
    const int Q = p + 2, Nt = p + 1;
    std::vector<double> x, w;
    gauss_legendre(Q, x, w);
    const VshBasis bases[3] = {VshBasis::V, VshBasis::W, VshBasis::X};
    LegendreJet J;
    std::vector<CVec3> vals(3 * num_coeffs(Nt));
    for (int q = 0; q < Q; ++q) {
        J.compute(Nt, std::acos(x[q]));
        const double wq = 2 * std::numbers::pi * w[q];
        for (int t = 0; t < 3; ++t)
            for (int n = 0; n <= Nt; ++n)
                for (int m = -n; m <= n; ++m)
                    vals[t * num_coeffs(Nt) + coeff_index(n, m)] = vsh_value(bases[t], n, m, J);

        for (int d = 0; d < 4; ++d) {
            const CVec3 nu = direction_normal(static_cast<Dir>(d), J.cos_t, J.sin_t);
            const int s = shift(static_cast<Dir>(d));
            for (int n = 0; n <= p; ++n)
                for (int m = -n; m <= n; ++m) {
                    const int mt = m + s;
                    CVec3 F[NumBrackets];
                    for (int c = 0; c < 3; ++c) {
                        const VshJet jet = vsh_jet(bases[c], n, m, J);
                        F[AV + c] = bracket_a(jet, nu);
                        F[BV + c] = bracket_b(jet, nu);
                    }
                    F[CY] = J.P[tri_index(n, std::abs(m))] * nu;
                    for (int dn = -1; dn <= 1; ++dn) {
                        const int nt = n + dn;
                        if (nt < std::abs(mt) || nt < 0)
                            continue;
                        for (int t = 0; t < 3; ++t) {
                            if (t > 0 && nt == 0)
                                continue;
                            const CVec3& Zt = vals[t * num_coeffs(Nt) + coeff_index(nt, mt)];
                            const double scale = wq / vsh_norm2(t, nt);
                            for (int b = 0; b < NumBrackets; ++b) {
                                const cplx ip = F[b](0) * std::conj(Zt(0)) + F[b](1) * std::conj(Zt(1)) +
                                                F[b](2) * std::conj(Zt(2));
                                Entry& e = data_[(static_cast<size_t>(d) * NumBrackets + b) * num_coeffs(p) +
                                                 coeff_index(n, m)];
                                at(e, t, dn) += scale * ip;
                            }
                        }
                    }
                }
        }
    }
}

TractionCouplingTables precompute_traction_coupling(int p) { return TractionCouplingTables(p); }

const TractionCouplingTables& traction_tables(int p)
{
    static std::mutex mu;
    static std::map<int, std::unique_ptr<TractionCouplingTables>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[p];
    if (!slot)
        slot = std::make_unique<TractionCouplingTables>(p);
    return *slot;
}

}  // namespace sbie

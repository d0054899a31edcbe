#include "sbie/evaluation.hpp"

#include "sbie/kernels.hpp"
#include "sbie/rotation.hpp"
#include "sbie/traction.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <unordered_map>

namespace sbie {

namespace {

constexpr double pi = std::numbers::pi;

// r^k for k in [kmin, kmax]
class PowerTable {
public:
    PowerTable(int kmin, int kmax) : off_(-kmin), v_(kmax - kmin + 1) {}
    void fill(double r)
    {
        const int kmin = -off_;
        v_[off_] = 1.0;
        for (int k = 1; k + off_ < static_cast<int>(v_.size()); ++k)
            v_[off_ + k] = v_[off_ + k - 1] * r;
        const double ir = 1.0 / r;
        for (int k = -1; k >= kmin; --k)
            v_[off_ + k] = v_[off_ + k + 1] * ir;
    }
    double operator()(int k) const { return v_[off_ + k]; }

private:
    int off_;
    std::vector<double> v_;
};

double eval_poly(const RadialPoly& f, const PowerTable& pw)
{
    double s = 0.0;
    for (const auto& [c, k] : f.terms)
        s += c * pw(k);
    return s;
}

double eval_poly_deriv(const RadialPoly& f, const PowerTable& pw)
{
    double s = 0.0;
    for (const auto& [c, k] : f.terms)
        if (k != 0)
            s += c * k * pw(k - 1);
    return s;
}

// Closed-form radial functions for n <= p on both sides.
struct RadialCache {
    int p = 0;
    bool laplace = false;
    // [side][n]
    std::vector<RadialPoly> lS[2], lD[2];
    // [side][n][channel]
    std::vector<std::array<StokesRadialFunctions, 3>> sS[2], sD[2];

    RadialCache(int order, bool lap) : p(order), laplace(lap)
    {
        for (int s = 0; s < 2; ++s) {
            const Side side = s == 0 ? Side::Exterior : Side::Interior;
            if (laplace) {
                lS[s].resize(p + 1);
                lD[s].resize(p + 1);
                for (int n = 0; n <= p; ++n) {
                    const double d = 2.0 * n + 1;
                    if (side == Side::Exterior) {
                        lS[s][n].add(1.0 / d, -n - 1);
                        lD[s][n].add(n / d, -n - 1);
                    } else {
                        lS[s][n].add(1.0 / d, n);
                        lD[s][n].add(-(n + 1.0) / d, n);
                    }
                }
            } else {
                sS[s].resize(p + 1);
                sD[s].resize(p + 1);
                for (int n = 0; n <= p; ++n)
                    for (int c = 0; c < 3; ++c) {
                        if (c > 0 && n == 0)
                            continue;
                        const Channel ch = c == 0 ? Channel::V : c == 1 ? Channel::W : Channel::X;
                        sS[s][n][c] = stokes_radial_functions(Potential::S, ch, n, side);
                        sD[s][n][c] = stokes_radial_functions(Potential::D, ch, n, side);
                    }
            }
        }
    }
};

// Per-degree radial numbers at one radius: source channel c -> field coefficients.
struct StokesRadialSet {
    double vel_self[3], vel_cross[3];  // velocity (s S + d D)
    double der_self[3], der_cross[3];  // k S'
    double val_self[3], val_cross[3];  // k S / r
    double pres[3];                    // k P of S
};

void stokes_radial_set(const RadialCache& rc, int side, int n, double r, const PowerTable& pw, double s_eff,
                       double d, double k, StokesRadialSet& o)
{
    for (int c = 0; c < 3; ++c) {
        o.vel_self[c] = o.vel_cross[c] = o.der_self[c] = o.der_cross[c] = 0.0;
        o.val_self[c] = o.val_cross[c] = o.pres[c] = 0.0;
        if (c > 0 && n == 0)
            continue;
        const StokesRadialFunctions& S = rc.sS[side][n][c];
        const StokesRadialFunctions& D = rc.sD[side][n][c];
        if (s_eff != 0.0) {
            o.vel_self[c] += s_eff * eval_poly(S.self, pw);
            o.vel_cross[c] += s_eff * eval_poly(S.cross, pw);
        }
        if (d != 0.0) {
            o.vel_self[c] += d * eval_poly(D.self, pw);
            o.vel_cross[c] += d * eval_poly(D.cross, pw);
        }
        if (k != 0.0) {
            o.der_self[c] = k * eval_poly_deriv(S.self, pw);
            o.der_cross[c] = k * eval_poly_deriv(S.cross, pw);
            o.val_self[c] = k * eval_poly(S.self, pw) / r;
            o.val_cross[c] = k * eval_poly(S.cross, pw) / r;
            o.pres[c] = k * eval_poly(S.pressure, pw);
        }
    }
}

// Field coefficients of one (n, m) mode: a (value), b (A bracket), g (B bracket) per target
// channel, and the pressure factor.
struct ModeCoeffs {
    cplx a[3], b[3], g[3], pres;
};

inline void mode_coeffs(const StokesRadialSet& rs, cplx cV, cplx cW, cplx cX, ModeCoeffs& o)
{
    o.a[0] = cV * rs.vel_self[0] + cW * rs.vel_cross[1];
    o.a[1] = cW * rs.vel_self[1] + cV * rs.vel_cross[0];
    o.a[2] = cX * rs.vel_self[2];
    o.b[0] = cV * rs.der_self[0] + cW * rs.der_cross[1];
    o.b[1] = cW * rs.der_self[1] + cV * rs.der_cross[0];
    o.b[2] = cX * rs.der_self[2];
    o.g[0] = cV * rs.val_self[0] + cW * rs.val_cross[1];
    o.g[1] = cW * rs.val_self[1] + cV * rs.val_cross[0];
    o.g[2] = cX * rs.val_self[2];
    o.pres = cV * rs.pres[0] + cW * rs.pres[1];
}

constexpr VshBasis kBases[3] = {VshBasis::V, VshBasis::W, VshBasis::X};

// Per-order amplitudes (spherical components, without e^{imφ}) at one (r, θ). With nu, the
// traction brackets are evaluated pointwise for the φ-independent normal nu.
void stokes_amplitudes(const VectorCoeffsVWX& c, const RadialCache& rc, int side, double r, const PowerTable& pw,
                       const LayerCombo& combo, double s_eff, const LegendreJet& J, const CVec3* nu,
                       std::vector<CVec3>& amp)
{
    const int p = c.p;
    amp.assign(2 * p + 1, CVec3::Zero());
    StokesRadialSet rs;
    ModeCoeffs mc;
    for (int n = 0; n <= p; ++n) {
        stokes_radial_set(rc, side, n, r, pw, s_eff, combo.d, combo.k, rs);
        for (int m = -n; m <= n; ++m) {
            mode_coeffs(rs, c.v(n, m), c.w(n, m), c.x(n, m), mc);
            CVec3& out = amp[m + p];
            if (nu) {
                for (int t = 0; t < 3; ++t) {
                    if (t > 0 && n == 0)
                        continue;
                    const VshJet jet = vsh_jet(kBases[t], n, m, J);
                    out += mc.a[t] * jet.Z + mc.b[t] * bracket_a(jet, *nu) + mc.g[t] * bracket_b(jet, *nu);
                }
                out -= (mc.pres * J.P[tri_index(n, std::abs(m))]) * (*nu);
            } else {
                for (int t = 0; t < 3; ++t) {
                    if (t > 0 && n == 0)
                        continue;
                    out += mc.a[t] * vsh_value(kBases[t], n, m, J);
                }
            }
        }
    }
}

void laplace_amplitudes(const ScalarCoeffs& c, const RadialCache& rc, int side, double r, const PowerTable& pw,
                        const LayerCombo& combo, double s_eff, const LegendreJet& J, const CVec3& nu,
                        std::vector<cplx>& amp)
{
    const int p = c.p;
    amp.assign(2 * p + 1, 0.0);
    for (int n = 0; n <= p; ++n) {
        const RadialPoly& S = rc.lS[side][n];
        const double sv = eval_poly(S, pw);
        const double val = s_eff * sv + combo.d * eval_poly(rc.lD[side][n], pw);
        const double der = combo.k * eval_poly_deriv(S, pw);
        const double tan = combo.k * sv / r;
        for (int m = -n; m <= n; ++m) {
            const int i = tri_index(n, std::abs(m));
            const cplx y = J.P[i];
            cplx f = val * y;
            if (combo.k != 0.0)
                f += der * y * nu(0) + tan * (J.dP[i] * nu(1) + cplx(0.0, m) * J.Ps[i] * nu(2));
            amp[m + p] += c(n, m) * f;
        }
    }
}

// Branch selection for a target at source-local radius r.
// Points within kSurfaceTol of r = 1 count as on the surface.
constexpr double kSurfaceTol = 1e-12;

int branch(double r, bool interior, Side on_surface)
{
    if (std::abs(r - 1.0) <= kSurfaceTol)
        return interior ? 1 : (on_surface == Side::Exterior ? 0 : 1);
    if (r > 1.0) {
        if (interior)
            throw GeometryError("interior evaluation requested at a target outside the source sphere");
        return 0;
    }
    if (!interior)
        throw GeometryError("target inside the source sphere without the interior flag");
    return 1;
}

void check_density(int p)
{
    if (p < 1)
        throw std::invalid_argument("density order must be >= 1");
}

// Direct-path traction of s-layer modes through the coupling tables at one target.
void direct_traction(const VectorCoeffsVWX& c, const RadialCache& rc, int side, double r, const PowerTable& pw,
                     const LayerCombo& combo, const LegendreJet& J1, double phi, const Vec3& nu_cart,
                     CVec3& out_sph)
{
    const int p = c.p, Nt = p + 1;
    const TractionCouplingTables& T = traction_tables(p);
    // coefficients of the traction field in V, W, X up to degree p+1
    std::vector<cplx> acc(3 * num_coeffs(Nt), 0.0);
    const cplx w[4] = {0.0, nu_cart.z(), cplx(nu_cart.x(), -nu_cart.y()) * 0.5,
                       cplx(nu_cart.x(), nu_cart.y()) * 0.5};
    StokesRadialSet rs;
    ModeCoeffs mc;
    const LayerCombo konly{false, 0.0, 0.0, combo.k};
    for (int n = 0; n <= p; ++n) {
        stokes_radial_set(rc, side, n, r, pw, 0.0, 0.0, konly.k, rs);
        for (int m = -n; m <= n; ++m) {
            mode_coeffs(rs, c.v(n, m), c.w(n, m), c.x(n, m), mc);
            for (int d = 1; d < 4; ++d) {
                if (w[d] == 0.0)
                    continue;
                const auto dir = static_cast<TractionCouplingTables::Dir>(d);
                const int mt = m + TractionCouplingTables::shift(dir);
                const auto& eC = T.entry(dir, TractionCouplingTables::CY, n, m);
                const TractionCouplingTables::Entry* eA[3] = {
                    &T.entry(dir, TractionCouplingTables::AV, n, m), &T.entry(dir, TractionCouplingTables::AW, n, m),
                    &T.entry(dir, TractionCouplingTables::AX, n, m)};
                const TractionCouplingTables::Entry* eB[3] = {
                    &T.entry(dir, TractionCouplingTables::BV, n, m), &T.entry(dir, TractionCouplingTables::BW, n, m),
                    &T.entry(dir, TractionCouplingTables::BX, n, m)};
                for (int dn = -1; dn <= 1; ++dn) {
                    const int nt = n + dn;
                    if (nt < std::abs(mt) || nt < 0)
                        continue;
                    for (int t = 0; t < 3; ++t) {
                        cplx s = -mc.pres * TractionCouplingTables::at(eC, t, dn);
                        for (int z = 0; z < 3; ++z)
                            s += mc.b[z] * TractionCouplingTables::at(*eA[z], t, dn) +
                                 mc.g[z] * TractionCouplingTables::at(*eB[z], t, dn);
                        acc[t * num_coeffs(Nt) + coeff_index(nt, mt)] += w[d] * s;
                    }
                }
            }
        }
    }
    for (int t = 0; t < 3; ++t)
        for (int n = 0; n <= Nt; ++n) {
            if (t > 0 && n == 0)
                continue;
            for (int m = -n; m <= n; ++m) {
                const cplx a = acc[t * num_coeffs(Nt) + coeff_index(n, m)];
                if (a != 0.0)
                    out_sph += a * std::exp(cplx(0.0, m * phi)) * vsh_value(kBases[t], n, m, J1);
            }
        }
}

// FFTW backward plans per length; execution with new arrays is thread safe.
fftw_plan backward_plan(int L)
{
    static std::mutex mu;
    static std::map<int, fftw_plan> plans;
    std::lock_guard<std::mutex> lock(mu);
    auto it = plans.find(L);
    if (it != plans.end())
        return it->second;
    std::vector<cplx> a(L), b(L);
    fftw_plan pl = fftw_plan_dft_1d(L, reinterpret_cast<fftw_complex*>(a.data()),
                                    reinterpret_cast<fftw_complex*>(b.data()), FFTW_BACKWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans[L] = pl;
    return pl;
}

// Σ_m amp_m e^{imφ_k} at the L equispaced azimuths
void synth_ring(const cplx* amp, int p, int stride, int L, std::vector<cplx>& in, std::vector<cplx>& out)
{
    std::fill(in.begin(), in.end(), 0.0);
    for (int m = -p; m <= p; ++m)
        in[(m + L) % L] = amp[(m + p) * stride];
    fftw_execute_dft(backward_plan(L), reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

struct PairFrame {
    Rotation rot;
    double Cz, Rt;  // target centre distance and radius in source units
};

PairFrame pair_frame(const Sphere& src, const Sphere& target)
{
    const Vec3 d = target.center - src.center;
    PairFrame f;
    f.Cz = d.norm() / src.radius;
    f.Rt = target.radius / src.radius;
    if (!(f.Cz - f.Rt > 1.0))
        throw GeometryError("near_eval_fft: target sphere is not exterior to the source");
    f.rot = align_pole(d);
    return f;
}

// Evaluate on the rotated target grid; values are Cartesian (rotated frame) per node.
template <class Density>
void fft_core(const LayerCombo& combo, const Density& dens, const Sphere& src, const PairFrame& f,
              std::vector<cplx> out[3], int ncomp)
{
    const int p = dens.p;
    const SphGrid& g = sht(p).grid();
    const int L = g.nlon();
    constexpr bool vec = std::is_same_v<Density, VectorCoeffsVWX>;
    const RadialCache rc(p, !vec);
    PowerTable pw(-p - 4, p + 2);
    LegendreJet J;
    std::vector<double> th(g.theta.begin(), g.theta.end());
    const std::vector<PoleNormal> nus = pole_aligned_normals(f.Rt, f.Cz, th);
    const double s_eff = combo.s * src.radius;
    std::vector<cplx> in(L), ring(L);
    for (int c = 0; c < ncomp; ++c)
        out[c].assign(static_cast<size_t>(g.nlat()) * L, 0.0);
    for (int j = 0; j < g.nlat(); ++j) {
        const double zt = f.Cz + f.Rt * g.cos_theta[j], xt = f.Rt * g.sin_theta[j];
        const double r = std::hypot(xt, zt);
        const double tp = std::atan2(xt, zt);
        pw.fill(r);
        J.compute(p, tp);
        const CVec3 nu(nus[j].nu_r, nus[j].nu_theta, 0.0);
        const double ct = std::cos(tp), st = std::sin(tp);
        if constexpr (vec) {
            std::vector<CVec3> amp;
            stokes_amplitudes(dens, rc, 0, r, pw, combo, s_eff, J, combo.k != 0.0 ? &nu : nullptr, amp);
            std::vector<cplx> comp[3];
            for (int c = 0; c < 3; ++c) {
                synth_ring(amp.data()->data() + c, p, 3, L, in, ring);
                comp[c] = ring;
            }
            for (int k = 0; k < L; ++k) {
                const double cp = std::cos(g.phi[k]), sp = std::sin(g.phi[k]);
                const cplx ur = comp[0][k], ut = comp[1][k], uf = comp[2][k];
                out[0][j * L + k] = st * cp * ur + ct * cp * ut - sp * uf;
                out[1][j * L + k] = st * sp * ur + ct * sp * ut + cp * uf;
                out[2][j * L + k] = ct * ur - st * ut;
            }
        } else {
            std::vector<cplx> amp;
            laplace_amplitudes(dens, rc, 0, r, pw, combo, s_eff, J, nu, amp);
            synth_ring(amp.data(), p, 1, L, in, ring);
            for (int k = 0; k < L; ++k)
                out[0][j * L + k] = ring[k];
        }
    }
}

GridValues as_grid(const std::vector<cplx>& v, int p)
{
    const SphGrid& g = sht(p).grid();
    return Eigen::Map<const GridValues>(v.data(), g.nlat(), g.nlon());
}

}  // namespace

LayerCombo LayerCombo::from_kind(OperatorKind kind)
{
    LayerCombo c;
    c.laplace = is_laplace(kind);
    switch (potential_of(kind)) {
    case Potential::S: c.s = 1.0; break;
    case Potential::D: c.d = 1.0; break;
    case Potential::K: c.k = 1.0; break;
    }
    return c;
}

void Suspension::validate() const
{
    if (p < 1)
        throw std::invalid_argument("expansion order p must be >= 1");
    if (!(eta > 0.0))
        throw std::invalid_argument("eta must be positive");
    for (const Sphere& s : spheres)
        if (!(s.radius > 0.0) || !s.center.allFinite())
            throw GeometryError("sphere " + std::to_string(s.id) + " has an invalid radius or centre");
    double rmax = 0.0;
    for (const Sphere& s : spheres)
        rmax = std::max(rmax, s.radius);
    const auto cand = neighbor_candidates(spheres, 2.0 * rmax);
    for (size_t i = 0; i < spheres.size(); ++i)
        for (int j : cand[i])
            if (static_cast<size_t>(j) > i &&
                (spheres[i].center - spheres[j].center).norm() <= spheres[i].radius + spheres[j].radius)
                throw GeometryError("spheres " + std::to_string(spheres[i].id) + " and " +
                                    std::to_string(spheres[j].id) + " overlap");
}

std::vector<std::vector<int>> neighbor_candidates(const std::vector<Sphere>& spheres, double reach)
{
    const int n = static_cast<int>(spheres.size());
    std::vector<std::vector<int>> out(n);
    if (n < 2)
        return out;
    if (!(reach > 0.0) || !std::isfinite(reach))
        throw std::invalid_argument("neighbor reach must be positive and finite");
    using Cell = std::array<long long, 3>;
    struct CellHash {
        size_t operator()(const Cell& c) const
        {
            return std::hash<long long>()(c[0] * 73856093LL ^ c[1] * 19349663LL ^ c[2] * 83492791LL);
        }
    };
    auto cell_of = [&](const Vec3& x) {
        return Cell{static_cast<long long>(std::floor(x.x() / reach)), static_cast<long long>(std::floor(x.y() / reach)),
                    static_cast<long long>(std::floor(x.z() / reach))};
    };
    std::unordered_map<Cell, std::vector<int>, CellHash> grid;
    for (int i = 0; i < n; ++i)
        grid[cell_of(spheres[i].center)].push_back(i);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const Cell c = cell_of(spheres[i].center);
        for (long long dx = -1; dx <= 1; ++dx)
            for (long long dy = -1; dy <= 1; ++dy)
                for (long long dz = -1; dz <= 1; ++dz) {
                    const auto it = grid.find(Cell{c[0] + dx, c[1] + dy, c[2] + dz});
                    if (it == grid.end())
                        continue;
                    for (int j : it->second)
                        if (j != i && (spheres[i].center - spheres[j].center).norm() <= reach)
                            out[i].push_back(j);
                }
        std::sort(out[i].begin(), out[i].end());
    }
    return out;
}

std::vector<std::vector<int>> near_lists(const std::vector<Sphere>& spheres, double eta)
{
    double rmax = 0.0;
    for (const Sphere& s : spheres)
        rmax = std::max(rmax, s.radius);
    // not well separated implies |c_i - c_j| < r_i + r_j + 2 eta max(r_i, r_j)
    auto lists = neighbor_candidates(spheres, (2.0 + 2.0 * eta) * rmax);
    for (size_t i = 0; i < lists.size(); ++i)
        std::erase_if(lists[i], [&](int j) { return well_separated(spheres[i], spheres[j], eta); });
    return lists;
}

void TargetBatch::validate() const
{
    if (has_normals()) {
        if (normals.size() != points.size())
            throw std::invalid_argument("one normal per target point required");
        for (const Vec3& n : normals)
            if (std::abs(n.norm() - 1.0) > 1e-12)
                throw std::invalid_argument("target normals must have unit length");
    }
}

SurfaceNodes surface_nodes(const Sphere& s, int p)
{
    const SphGrid& g = sht(p).grid();
    SurfaceNodes out;
    const int N = g.nlat() * g.nlon();
    out.points.reserve(N);
    out.normals.reserve(N);
    out.weights.reserve(N);
    for (int j = 0; j < g.nlat(); ++j)
        for (int k = 0; k < g.nlon(); ++k) {
            const Vec3 n(g.sin_theta[j] * std::cos(g.phi[k]), g.sin_theta[j] * std::sin(g.phi[k]), g.cos_theta[j]);
            out.points.push_back(s.center + s.radius * n);
            out.normals.push_back(n);
            out.weights.push_back(g.weight(j) * s.radius * s.radius);
        }
    return out;
}

TargetBatch grid_targets(const Sphere& s, int p, bool with_normals)
{
    SurfaceNodes nodes = surface_nodes(s, p);
    TargetBatch t;
    t.points = std::move(nodes.points);
    if (with_normals)
        t.normals = std::move(nodes.normals);
    return t;
}

double surface_distance(const Sphere& a, const Sphere& b)
{
    return (a.center - b.center).norm() - a.radius - b.radius;
}

double surface_distance(const Sphere& a, const TargetBatch& t)
{
    double d = INFINITY;
    for (const Vec3& x : t.points)
        d = std::min(d, std::abs((x - a.center).norm() - a.radius));
    return d;
}

bool well_separated(const Sphere& a, const Sphere& b, double eta)
{
    return surface_distance(a, b) >= eta * 2.0 * std::max(a.radius, b.radius);
}

bool well_separated(const Sphere& a, const TargetBatch& t, double eta)
{
    return surface_distance(a, t) >= eta * 2.0 * a.radius;
}

PointSources weighted_sources(const ScalarCoeffs& density, const Sphere& s)
{
    check_density(density.p);
    SurfaceNodes nodes = surface_nodes(s, density.p);
    const GridValues f = sht(density.p).inverse(density);
    PointSources out;
    out.densities.resize(f.size(), 1);
    for (Eigen::Index q = 0; q < f.size(); ++q)
        out.densities(q, 0) = nodes.weights[q] * f.data()[q];
    out.points = std::move(nodes.points);
    out.normals = std::move(nodes.normals);
    return out;
}

PointSources weighted_sources(const VectorCoeffsVWX& density, const Sphere& s)
{
    check_density(density.p);
    SurfaceNodes nodes = surface_nodes(s, density.p);
    GridValues fx, fy, fz;
    sht(density.p).vinverse_cart(density, fx, fy, fz);
    PointSources out;
    out.densities.resize(fx.size(), 3);
    for (Eigen::Index q = 0; q < fx.size(); ++q) {
        out.densities(q, 0) = nodes.weights[q] * fx.data()[q];
        out.densities(q, 1) = nodes.weights[q] * fy.data()[q];
        out.densities(q, 2) = nodes.weights[q] * fz.data()[q];
    }
    out.points = std::move(nodes.points);
    out.normals = std::move(nodes.normals);
    return out;
}

FieldValues point_source_sum(const LayerCombo& combo, const PointSources& src, const TargetBatch& targets)
{
    const int ncol = combo.laplace ? 1 : 3;
    if (src.densities.cols() != ncol || src.densities.rows() != src.size())
        throw std::invalid_argument("point_source_sum: density shape does not match the layer family");
    if (combo.d != 0.0 && static_cast<int>(src.normals.size()) != src.size())
        throw std::invalid_argument("point_source_sum: double layer needs source normals");
    if (combo.needs_normals() && !targets.has_normals())
        throw std::invalid_argument("point_source_sum: flux or traction needs target normals");
    FieldValues out = FieldValues::Zero(targets.size(), ncol);
    const int nt = targets.size(), ns = src.size();
    bool coincident = false;
#pragma omp parallel for schedule(static) reduction(|| : coincident)
    for (int i = 0; i < nt; ++i) {
        const Vec3& x = targets.points[i];
        const Vec3 nx = combo.k != 0.0 ? targets.normals[i] : Vec3::Zero();
        if (combo.laplace) {
            cplx s = 0.0;
            for (int q = 0; q < ns; ++q) {
                const Vec3 r = x - src.points[q];
                const double d2 = r.squaredNorm();
                if (d2 == 0.0) {
                    coincident = true;
                    continue;
                }
                const double d = std::sqrt(d2);
                const double id3 = 1.0 / (4 * pi * d2 * d);
                double kq = combo.s / (4 * pi * d);
                if (combo.d != 0.0)
                    kq += combo.d * r.dot(src.normals[q]) * id3;
                if (combo.k != 0.0)
                    kq -= combo.k * r.dot(nx) * id3;
                s += kq * src.densities(q, 0);
            }
            out(i, 0) = s;
        } else {
            cplx s0 = 0.0, s1 = 0.0, s2 = 0.0;
            for (int q = 0; q < ns; ++q) {
                const Vec3 r = x - src.points[q];
                const double d2 = r.squaredNorm();
                if (d2 == 0.0) {
                    coincident = true;
                    continue;
                }
                const double d = std::sqrt(d2);
                const cplx m0 = src.densities(q, 0), m1 = src.densities(q, 1), m2 = src.densities(q, 2);
                const cplx rmu = r(0) * m0 + r(1) * m1 + r(2) * m2;
                // Stokeslet (mu/d + r (r.mu)/d^3)/(8 pi) and the stress kernels -+3 r (r.mu)(r.n)/(4 pi d^5)
                double c = 0.0;
                if (combo.d != 0.0)
                    c += combo.d * r.dot(src.normals[q]);
                if (combo.k != 0.0)
                    c -= combo.k * r.dot(nx);
                const double a = combo.s / (8 * pi * d);
                const cplx b = rmu * (combo.s / (8 * pi * d2 * d) + c * 3.0 / (4 * pi * d2 * d2 * d));
                s0 += a * m0 + b * r(0);
                s1 += a * m1 + b * r(1);
                s2 += a * m2 + b * r(2);
            }
            out(i, 0) = s0;
            out(i, 1) = s1;
            out(i, 2) = s2;
        }
    }
    if (coincident)
        throw std::domain_error("point_source_sum: target coincides with a source point");
    return out;
}

FieldValues smooth_quadrature_eval(const LayerCombo& combo, const ScalarCoeffs& density, const Sphere& src,
                                   const TargetBatch& targets)
{
    if (!combo.laplace)
        throw std::invalid_argument("scalar density needs a Laplace combination");
    return point_source_sum(combo, weighted_sources(density, src), targets);
}

FieldValues smooth_quadrature_eval(const LayerCombo& combo, const VectorCoeffsVWX& density, const Sphere& src,
                                   const TargetBatch& targets)
{
    if (combo.laplace)
        throw std::invalid_argument("vector density needs a Stokes combination");
    return point_source_sum(combo, weighted_sources(density, src), targets);
}

FieldValues smooth_quadrature_eval(OperatorKind kind, const ScalarCoeffs& density, const Sphere& src,
                                   const TargetBatch& targets)
{
    return smooth_quadrature_eval(LayerCombo::from_kind(kind), density, src, targets);
}

FieldValues smooth_quadrature_eval(OperatorKind kind, const VectorCoeffsVWX& density, const Sphere& src,
                                   const TargetBatch& targets)
{
    return smooth_quadrature_eval(LayerCombo::from_kind(kind), density, src, targets);
}

double self_eigenvalue(const LayerCombo& combo, SurfaceLimit limit, int n, Channel channel)
{
    if (!combo.laplace && (channel == Channel::W || channel == Channel::X) && n == 0)
        return 0.0;
    auto eig = [&](Potential pot) {
        if (pot == Potential::S)
            return eigenvalue(make_kind(combo.laplace, pot, Side::Exterior), n, channel);
        const double e = eigenvalue(make_kind(combo.laplace, pot, Side::Exterior), n, channel);
        const double i = eigenvalue(make_kind(combo.laplace, pot, Side::Interior), n, channel);
        switch (limit) {
        case SurfaceLimit::Exterior: return e;
        case SurfaceLimit::Interior: return i;
        default: return 0.5 * (e + i);
        }
    };
    double v = 0.0;
    if (combo.s != 0.0)
        v += combo.s * eig(Potential::S);
    if (combo.d != 0.0)
        v += combo.d * eig(Potential::D);
    if (combo.k != 0.0)
        v += combo.k * eig(Potential::K);
    return v;
}

ScalarCoeffs self_apply(const LayerCombo& combo, SurfaceLimit limit, const ScalarCoeffs& density, const Sphere& s)
{
    if (!combo.laplace)
        throw std::invalid_argument("scalar density needs a Laplace combination");
    LayerCombo scaled = combo;
    scaled.s *= s.radius;
    ScalarCoeffs out(density.p);
    for (int n = 0; n <= density.p; ++n) {
        const double e = self_eigenvalue(scaled, limit, n, Channel::Y);
        for (int m = -n; m <= n; ++m)
            out(n, m) = e * density(n, m);
    }
    return out;
}

VectorCoeffsVWX self_apply(const LayerCombo& combo, SurfaceLimit limit, const VectorCoeffsVWX& density,
                           const Sphere& s)
{
    if (combo.laplace)
        throw std::invalid_argument("vector density needs a Stokes combination");
    LayerCombo scaled = combo;
    scaled.s *= s.radius;
    VectorCoeffsVWX out(density.p);
    for (int n = 0; n <= density.p; ++n) {
        const double ev = self_eigenvalue(scaled, limit, n, Channel::V);
        const double ew = self_eigenvalue(scaled, limit, n, Channel::W);
        const double ex = self_eigenvalue(scaled, limit, n, Channel::X);
        for (int m = -n; m <= n; ++m) {
            out.v(n, m) = ev * density.v(n, m);
            out.w(n, m) = ew * density.w(n, m);
            out.x(n, m) = ex * density.x(n, m);
        }
    }
    return out;
}

namespace {
SurfaceLimit limit_of(OperatorKind kind)
{
    return side_of(kind) == Side::Exterior ? SurfaceLimit::Exterior : SurfaceLimit::Interior;
}
}  // namespace

FieldValues self_eval(OperatorKind kind, const ScalarCoeffs& density, const Sphere& s)
{
    return synthesize(self_apply(LayerCombo::from_kind(kind), limit_of(kind), density, s));
}

FieldValues self_eval(OperatorKind kind, const VectorCoeffsVWX& density, const Sphere& s)
{
    return synthesize(self_apply(LayerCombo::from_kind(kind), limit_of(kind), density, s));
}

FieldValues near_eval_direct(const LayerCombo& combo, const ScalarCoeffs& density, const Sphere& src,
                             const TargetBatch& targets, bool interior, Side on_surface)
{
    if (!combo.laplace)
        throw std::invalid_argument("scalar density needs a Laplace combination");
    check_density(density.p);
    if (combo.needs_normals() && !targets.has_normals())
        throw std::invalid_argument("flux evaluation needs target normals");
    const int p = density.p;
    const RadialCache rc(p, true);
    PowerTable pw(-p - 4, p + 2);
    LegendreJet J;
    std::vector<cplx> amp;
    FieldValues out = FieldValues::Zero(targets.size(), 1);
    const double s_eff = combo.s * src.radius;
    for (int i = 0; i < targets.size(); ++i) {
        const Vec3 xl = (targets.points[i] - src.center) / src.radius;
        double r, th, ph;
        cart_to_sph(xl, r, th, ph);
        const int side = branch(r, interior, on_surface);
        pw.fill(r);
        J.compute(p, th);
        CVec3 nu = CVec3::Zero();
        if (combo.k != 0.0)
            nu = (spherical_frame(th, ph).transpose() * targets.normals[i]).cast<cplx>();
        laplace_amplitudes(density, rc, side, r, pw, combo, s_eff, J, nu, amp);
        cplx s = 0.0;
        for (int m = -p; m <= p; ++m)
            s += amp[m + p] * std::exp(cplx(0.0, m * ph));
        out(i, 0) = s;
    }
    return out;
}

FieldValues near_eval_direct(const LayerCombo& combo, const VectorCoeffsVWX& density, const Sphere& src,
                             const TargetBatch& targets, bool interior, Side on_surface)
{
    if (combo.laplace)
        throw std::invalid_argument("vector density needs a Stokes combination");
    check_density(density.p);
    if (combo.needs_normals() && !targets.has_normals())
        throw std::invalid_argument("traction evaluation needs target normals");
    const int p = density.p;
    const RadialCache rc(p, false);
    PowerTable pw(-p - 4, p + 2);
    LegendreJet J, J1;
    std::vector<CVec3> amp;
    FieldValues out = FieldValues::Zero(targets.size(), 3);
    const double s_eff = combo.s * src.radius;
    const bool vel = combo.s != 0.0 || combo.d != 0.0;
    for (int i = 0; i < targets.size(); ++i) {
        const Vec3 xl = (targets.points[i] - src.center) / src.radius;
        double r, th, ph;
        cart_to_sph(xl, r, th, ph);
        const int side = branch(r, interior, on_surface);
        pw.fill(r);
        CVec3 u = CVec3::Zero();
        if (vel) {
            J.compute(p, th);
            stokes_amplitudes(density, rc, side, r, pw, LayerCombo{false, combo.s, combo.d, 0.0}, s_eff, J, nullptr,
                              amp);
            for (int m = -p; m <= p; ++m)
                u += amp[m + p] * std::exp(cplx(0.0, m * ph));
        }
        if (combo.k != 0.0) {
            J1.compute(p + 1, th);
            direct_traction(density, rc, side, r, pw, combo, J1, ph, targets.normals[i], u);
        }
        out.row(i) = (spherical_frame(th, ph).cast<cplx>() * u).transpose();
    }
    return out;
}

FieldValues near_eval_direct(OperatorKind kind, const ScalarCoeffs& density, const Sphere& src,
                             const TargetBatch& targets, bool interior)
{
    return near_eval_direct(LayerCombo::from_kind(kind), density, src, targets, interior,
                            interior ? Side::Interior : side_of(kind));
}

FieldValues near_eval_direct(OperatorKind kind, const VectorCoeffsVWX& density, const Sphere& src,
                             const TargetBatch& targets, bool interior)
{
    return near_eval_direct(LayerCombo::from_kind(kind), density, src, targets, interior,
                            interior ? Side::Interior : side_of(kind));
}

std::vector<PoleNormal> pole_aligned_normals(double R, double Cz, const std::vector<double>& theta)
{
    if (!(R > 0.0) || !(Cz > 0.0))
        throw std::invalid_argument("pole_aligned_normals: R > 0 and C_z > 0 required");
    std::vector<PoleNormal> out;
    out.reserve(theta.size());
    for (double t : theta) {
        const double rho = std::sqrt(R * R + 2 * R * Cz * std::cos(t) + Cz * Cz);
        out.push_back({(R + Cz * std::cos(t)) / rho, Cz * std::sin(t) / rho});
    }
    return out;
}

namespace {

// Target grid of the pair in the pole-aligned frame, mapped to global coordinates.
TargetBatch rotated_grid(const Sphere& src, const PairFrame& f, int p)
{
    const Mat3 R = f.rot.matrix();
    const SphGrid& g = sht(p).grid();
    TargetBatch t;
    for (int j = 0; j < g.nlat(); ++j)
        for (int k = 0; k < g.nlon(); ++k) {
            const Vec3 n(g.sin_theta[j] * std::cos(g.phi[k]), g.sin_theta[j] * std::sin(g.phi[k]), g.cos_theta[j]);
            t.points.push_back(src.center + src.radius * (R * (Vec3(0, 0, f.Cz) + f.Rt * n)));
            t.normals.push_back(R * n);
        }
    return t;
}

template <class Density>
Density direct_coeffs_impl(const LayerCombo& combo, const Density& dens, const Sphere& src, const Sphere& target)
{
    constexpr bool vec = std::is_same_v<Density, VectorCoeffsVWX>;
    check_density(dens.p);
    const int p = dens.p;
    const PairFrame f = pair_frame(src, target);
    const RotationOperator op(p, f.rot);
    const FieldValues v = near_eval_direct(combo, dens, src, rotated_grid(src, f, p));
    if constexpr (vec) {
        // Cartesian components in the pole-aligned frame
        const FieldValues local = v * f.rot.matrix().cast<cplx>();
        return op.apply(project_vector(local, p));
    } else {
        return op.apply(project_scalar(v, p));
    }
}

template <class Density>
FftSamples fft_samples_impl(const LayerCombo& combo, const Density& dens, const Sphere& src, const Sphere& target)
{
    constexpr bool vec = std::is_same_v<Density, VectorCoeffsVWX>;
    if (combo.laplace == vec)
        throw std::invalid_argument("density type does not match the layer family");
    check_density(dens.p);
    const int p = dens.p;
    const PairFrame f = pair_frame(src, target);
    const RotationOperator op(p, f.rot);
    const Density rotated = op.apply_inverse(dens);
    std::vector<cplx> vals[3];
    fft_core(combo, rotated, src, f, vals, vec ? 3 : 1);
    const Mat3 R = f.rot.matrix();
    FftSamples out;
    out.targets = rotated_grid(src, f, p);
    const int N = out.targets.size();
    out.values.resize(N, vec ? 3 : 1);
    for (int q = 0; q < N; ++q) {
        if constexpr (vec) {
            const CVec3 v(vals[0][q], vals[1][q], vals[2][q]);
            out.values.row(q) = (R.cast<cplx>() * v).transpose();
        } else {
            out.values(q, 0) = vals[0][q];
        }
    }
    return out;
}

template <class Density>
Density fft_coeffs_impl(const LayerCombo& combo, const Density& dens, const Sphere& src, const Sphere& target)
{
    constexpr bool vec = std::is_same_v<Density, VectorCoeffsVWX>;
    if (combo.laplace == vec)
        throw std::invalid_argument("density type does not match the layer family");
    check_density(dens.p);
    const int p = dens.p;
    const PairFrame f = pair_frame(src, target);
    const RotationOperator op(p, f.rot);
    const Density rotated = op.apply_inverse(dens);
    std::vector<cplx> vals[3];
    fft_core(combo, rotated, src, f, vals, vec ? 3 : 1);
    const Sht& S = sht(p);
    if constexpr (vec)
        return op.apply(S.vforward_cart(as_grid(vals[0], p), as_grid(vals[1], p), as_grid(vals[2], p)));
    else
        return op.apply(S.forward(as_grid(vals[0], p)));
}

}  // namespace

ScalarCoeffs near_eval_fft(const LayerCombo& combo, const ScalarCoeffs& density, const Sphere& src,
                           const Sphere& target)
{
    return fft_coeffs_impl(combo, density, src, target);
}

VectorCoeffsVWX near_eval_fft(const LayerCombo& combo, const VectorCoeffsVWX& density, const Sphere& src,
                              const Sphere& target)
{
    return fft_coeffs_impl(combo, density, src, target);
}

ScalarCoeffs near_eval_fft(OperatorKind kind, const ScalarCoeffs& density, const Sphere& src, const Sphere& target)
{
    return near_eval_fft(LayerCombo::from_kind(kind), density, src, target);
}

VectorCoeffsVWX near_eval_fft(OperatorKind kind, const VectorCoeffsVWX& density, const Sphere& src,
                              const Sphere& target)
{
    return near_eval_fft(LayerCombo::from_kind(kind), density, src, target);
}

FftSamples near_eval_fft_samples(const LayerCombo& combo, const ScalarCoeffs& density, const Sphere& src,
                                 const Sphere& target)
{
    return fft_samples_impl(combo, density, src, target);
}

FftSamples near_eval_fft_samples(const LayerCombo& combo, const VectorCoeffsVWX& density, const Sphere& src,
                                 const Sphere& target)
{
    return fft_samples_impl(combo, density, src, target);
}

ScalarCoeffs near_eval_direct_coeffs(const LayerCombo& combo, const ScalarCoeffs& density, const Sphere& src,
                                     const Sphere& target)
{
    return direct_coeffs_impl(combo, density, src, target);
}

VectorCoeffsVWX near_eval_direct_coeffs(const LayerCombo& combo, const VectorCoeffsVWX& density, const Sphere& src,
                                        const Sphere& target)
{
    return direct_coeffs_impl(combo, density, src, target);
}

ScalarCoeffs project_scalar(const FieldValues& v, int p)
{
    const SphGrid& g = sht(p).grid();
    if (v.rows() != g.nlat() * g.nlon() || v.cols() != 1)
        throw std::invalid_argument("project_scalar: grid size mismatch");
    return sht(p).forward(Eigen::Map<const GridValues>(v.data(), g.nlat(), g.nlon()));
}

VectorCoeffsVWX project_vector(const FieldValues& v, int p)
{
    const SphGrid& g = sht(p).grid();
    if (v.rows() != g.nlat() * g.nlon() || v.cols() != 3)
        throw std::invalid_argument("project_vector: grid size mismatch");
    GridValues c[3];
    for (int i = 0; i < 3; ++i) {
        const Eigen::VectorXcd col = v.col(i);
        c[i] = Eigen::Map<const GridValues>(col.data(), g.nlat(), g.nlon());
    }
    return sht(p).vforward_cart(c[0], c[1], c[2]);
}

FieldValues synthesize(const ScalarCoeffs& c)
{
    const GridValues f = sht(c.p).inverse(c);
    FieldValues out(f.size(), 1);
    for (Eigen::Index i = 0; i < f.size(); ++i)
        out(i, 0) = f.data()[i];
    return out;
}

FieldValues synthesize(const VectorCoeffsVWX& c)
{
    GridValues fx, fy, fz;
    sht(c.p).vinverse_cart(c, fx, fy, fz);
    FieldValues out(fx.size(), 3);
    for (Eigen::Index i = 0; i < fx.size(); ++i) {
        out(i, 0) = fx.data()[i];
        out(i, 1) = fy.data()[i];
        out(i, 2) = fz.data()[i];
    }
    return out;
}

}  // namespace sbie

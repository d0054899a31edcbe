#include "sbie/spectra.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace sbie {

bool is_laplace(OperatorKind k)
{
    switch (k) {
    case OperatorKind::LaplaceS:
    case OperatorKind::LaplaceDplus:
    case OperatorKind::LaplaceDminus:
    case OperatorKind::LaplaceKplus:
    case OperatorKind::LaplaceKminus:
        return true;
    default:
        return false;
    }
}

Potential potential_of(OperatorKind k)
{
    switch (k) {
    case OperatorKind::LaplaceS:
    case OperatorKind::StokesS:
        return Potential::S;
    case OperatorKind::LaplaceDplus:
    case OperatorKind::LaplaceDminus:
    case OperatorKind::StokesDplus:
    case OperatorKind::StokesDminus:
        return Potential::D;
    default:
        return Potential::K;
    }
}

Side side_of(OperatorKind k)
{
    switch (k) {
    case OperatorKind::LaplaceDminus:
    case OperatorKind::LaplaceKminus:
    case OperatorKind::StokesDminus:
    case OperatorKind::StokesKminus:
        return Side::Interior;
    default:
        return Side::Exterior;
    }
}

OperatorKind make_kind(bool laplace, Potential pot, Side side)
{
    const bool ext = side == Side::Exterior;
    if (laplace) {
        switch (pot) {
        case Potential::S:
            return OperatorKind::LaplaceS;
        case Potential::D:
            return ext ? OperatorKind::LaplaceDplus : OperatorKind::LaplaceDminus;
        case Potential::K:
            return ext ? OperatorKind::LaplaceKplus : OperatorKind::LaplaceKminus;
        }
    }
    switch (pot) {
    case Potential::S:
        return OperatorKind::StokesS;
    case Potential::D:
        return ext ? OperatorKind::StokesDplus : OperatorKind::StokesDminus;
    case Potential::K:
        break;
    }
    return ext ? OperatorKind::StokesKplus : OperatorKind::StokesKminus;
}

const std::vector<OperatorKind>& all_kinds()
{
    static const std::vector<OperatorKind> kinds = {
        OperatorKind::LaplaceS,     OperatorKind::LaplaceDplus, OperatorKind::LaplaceDminus,
        OperatorKind::LaplaceKplus, OperatorKind::LaplaceKminus, OperatorKind::StokesS,
        OperatorKind::StokesDplus,  OperatorKind::StokesDminus, OperatorKind::StokesKplus,
        OperatorKind::StokesKminus};
    return kinds;
}

std::string to_string(OperatorKind k)
{
    switch (k) {
    case OperatorKind::LaplaceS: return "LaplaceS";
    case OperatorKind::LaplaceDplus: return "LaplaceDplus";
    case OperatorKind::LaplaceDminus: return "LaplaceDminus";
    case OperatorKind::LaplaceKplus: return "LaplaceKplus";
    case OperatorKind::LaplaceKminus: return "LaplaceKminus";
    case OperatorKind::StokesS: return "StokesS";
    case OperatorKind::StokesDplus: return "StokesDplus";
    case OperatorKind::StokesDminus: return "StokesDminus";
    case OperatorKind::StokesKplus: return "StokesKplus";
    case OperatorKind::StokesKminus: return "StokesKminus";
    }
    return "?";
}

std::string to_string(Channel c)
{
    switch (c) {
    case Channel::V: return "V";
    case Channel::W: return "W";
    case Channel::X: return "X";
    case Channel::Y: return "Y";
    }
    return "?";
}

OperatorKind parse_kind(const std::string& s)
{
    for (OperatorKind k : all_kinds())
        if (to_string(k) == s)
            return k;
    throw std::invalid_argument("unknown operator kind: " + s);
}

double RadialPoly::operator()(double r) const
{
    double s = 0.0;
    for (const auto& [c, k] : terms)
        if (c != 0.0)
            s += c * std::pow(r, k);
    return s;
}

double RadialPoly::derivative(double r) const
{
    double s = 0.0;
    for (const auto& [c, k] : terms)
        if (c != 0.0 && k != 0)
            s += c * k * std::pow(r, k - 1);
    return s;
}

double RadialPoly::second_derivative(double r) const
{
    double s = 0.0;
    for (const auto& [c, k] : terms)
        if (c != 0.0 && k != 0 && k != 1)
            s += c * k * (k - 1.0) * std::pow(r, k - 2);
    return s;
}

RadialPoly& RadialPoly::add(double c, int k)
{
    if (c != 0.0)
        terms.emplace_back(c, k);
    return *this;
}

namespace {

Side resolve_side(Potential pot, double r, std::optional<Side> side)
{
    if (!(r > 0.0))
        throw std::invalid_argument("radius must be positive");
    if (r > 1.0) {
        if (side && *side == Side::Interior)
            throw std::invalid_argument("interior branch requested at r > 1");
        return Side::Exterior;
    }
    if (r < 1.0) {
        if (side && *side == Side::Exterior)
            throw std::invalid_argument("exterior branch requested at r < 1");
        return Side::Interior;
    }
    if (side)
        return *side;
    if (pot == Potential::S)
        return Side::Exterior;
    throw std::domain_error("on-surface evaluation of a discontinuous potential needs a side");
}

RadialPoly laplace_function(Potential pot, int n, Side side)
{
    const double d = 2.0 * n + 1.0;
    const bool ext = side == Side::Exterior;
    RadialPoly f;
    switch (pot) {
    case Potential::S:
        ext ? f.add(1.0 / d, -n - 1) : f.add(1.0 / d, n);
        break;
    case Potential::D:
        ext ? f.add(n / d, -n - 1) : f.add(-(n + 1.0) / d, n);
        break;
    case Potential::K:
        ext ? f.add(-(n + 1.0) / d, -n - 2) : f.add(n / d, n - 1);
        break;
    }
    return f;
}

}  // namespace

double laplace_radial(Potential pot, int n, double r, std::optional<Side> side)
{
    if (n < 0)
        throw std::invalid_argument("degree must be non-negative");
    return laplace_function(pot, n, resolve_side(pot, r, side))(r);
}

double laplace_radial_derivative(Potential pot, int n, double r, std::optional<Side> side)
{
    if (n < 0)
        throw std::invalid_argument("degree must be non-negative");
    return laplace_function(pot, n, resolve_side(pot, r, side)).derivative(r);
}

double laplace_radial(OperatorKind kind, int n, double r)
{
    if (!is_laplace(kind))
        throw std::invalid_argument("laplace_radial: Stokes kind");
    const Potential pot = potential_of(kind);
    return laplace_radial(pot, n, r, r == 1.0 ? std::optional<Side>(side_of(kind)) : std::nullopt);
}

StokesRadialFunctions stokes_radial_functions(Potential pot, Channel source, int n, Side side)
{
    const double N = n;
    const double a = 2 * N + 1, b = 2 * N + 3, c = 2 * N - 1;
    const bool ext = side == Side::Exterior;
    StokesRadialFunctions F;
    switch (source) {
    case Channel::V:
        switch (pot) {
        case Potential::S:
            if (ext) {
                F.self.add(N / (a * b), -n - 2);
            } else {
                F.self.add(N / (a * b), n + 1);
                F.cross.add((N + 1) / (2 * a), n + 1).add(-(N + 1) / (2 * a), n - 1);
                F.pressure.add(N + 1, n);
            }
            break;
        case Potential::D:
            if (ext) {
                F.self.add((2 * N * N + 4 * N + 3) / (a * b), -n - 2);
            } else {
                F.self.add(-2 * N * (N + 2) / (a * b), n + 1);
                const double k = -(N + 1) * (N + 2) / a;
                F.cross.add(k, n + 1).add(-k, n - 1);
                F.pressure.add(-2 * (N + 1) * (N + 2), n);
            }
            break;
        case Potential::K:
            if (ext) {
                F.self.add(-2 * N * (N + 2) / (a * b), -n - 3);
            } else {
                F.self.add((2 * N * N + 4 * N + 3) / (a * b), n);
                const double k = (N - 1) * (N + 1) / a;
                F.cross.add(k, n).add(-k, n - 2);
            }
            break;
        }
        break;
    case Channel::W:
        switch (pot) {
        case Potential::S:
            if (ext) {
                F.self.add((N + 1) / (c * a), -n);
                F.cross.add(N / (2 * a), -n - 2).add(-N / (2 * a), -n);
                F.pressure.add(N, -n - 1);
            } else {
                F.self.add((N + 1) / (c * a), n - 1);
            }
            break;
        case Potential::D:
            if (ext) {
                F.self.add(2 * (N - 1) * (N + 1) / (c * a), -n);
                const double k = N * (N - 1) / a;
                F.cross.add(k, -n - 2).add(-k, -n);
                F.pressure.add(2 * N * (N - 1), -n - 1);
            } else {
                F.self.add(-(2 * N * N + 1) / (c * a), n - 1);
            }
            break;
        case Potential::K:
            if (ext) {
                F.self.add(-(2 * N * N + 1) / (c * a), -n - 1);
                const double k = N * (N + 2) / a;
                F.cross.add(k, -n - 1).add(-k, -n - 3);
            } else {
                F.self.add(2 * (N - 1) * (N + 1) / (c * a), n - 2);
            }
            break;
        }
        break;
    case Channel::X:
        switch (pot) {
        case Potential::S:
            ext ? F.self.add(1 / a, -n - 1) : F.self.add(1 / a, n);
            break;
        case Potential::D:
            ext ? F.self.add((N - 1) / a, -n - 1) : F.self.add(-(N + 2) / a, n);
            break;
        case Potential::K:
            ext ? F.self.add(-(N + 2) / a, -n - 2) : F.self.add((N - 1) / a, n - 1);
            break;
        }
        break;
    case Channel::Y:
        throw std::invalid_argument("stokes_radial: scalar channel");
    }
    return F;
}

namespace {

StokesRadialCoeffs pack(Channel source, double self, double cross, double q)
{
    StokesRadialCoeffs s;
    switch (source) {
    case Channel::V: s.gV = self; break;
    case Channel::W: s.gW = self; break;
    default: s.gX = self; break;
    }
    s.gCross = cross;
    s.q = q;
    return s;
}

void check_degree(Channel source, int n)
{
    if (n < 0 || (source == Channel::X && n < 1))
        throw std::invalid_argument("stokes_radial: degree out of range for channel");
}

}  // namespace

StokesRadialCoeffs stokes_radial(Potential pot, Channel source, int n, double r, std::optional<Side> side)
{
    check_degree(source, n);
    const auto F = stokes_radial_functions(pot, source, n, resolve_side(pot, r, side));
    return pack(source, F.self(r), F.cross(r), F.pressure(r));
}

StokesRadialCoeffs stokes_radial_derivative(Potential pot, Channel source, int n, double r,
                                            std::optional<Side> side)
{
    check_degree(source, n);
    const auto F = stokes_radial_functions(pot, source, n, resolve_side(pot, r, side));
    return pack(source, F.self.derivative(r), F.cross.derivative(r), F.pressure.derivative(r));
}

StokesRadialCoeffs stokes_radial(OperatorKind kind, Channel source, int n, double r)
{
    if (is_laplace(kind))
        throw std::invalid_argument("stokes_radial: Laplace kind");
    const Potential pot = potential_of(kind);
    return stokes_radial(pot, source, n, r, r == 1.0 ? std::optional<Side>(side_of(kind)) : std::nullopt);
}

double eigenvalue(OperatorKind kind, int n, Channel channel)
{
    const Potential pot = potential_of(kind);
    const Side side = side_of(kind);
    if (is_laplace(kind)) {
        if (channel != Channel::Y)
            throw std::invalid_argument("eigenvalue: Laplace kinds use the Y channel");
        return laplace_function(pot, n, side)(1.0);
    }
    if (channel == Channel::Y)
        throw std::invalid_argument("eigenvalue: Stokes kinds use V, W or X");
    if (n < 0)
        throw std::invalid_argument("eigenvalue: negative degree");
    if (channel == Channel::X && n == 0)
        return 0.0;
    return stokes_radial_functions(pot, channel, n, side).self(1.0);
}

ScalarCoeffs apply_diagonal(OperatorKind kind, const ScalarCoeffs& density)
{
    if (!is_laplace(kind))
        throw std::invalid_argument("apply_diagonal: Stokes kind applied to scalar density");
    ScalarCoeffs out(density.p);
    for (int n = 0; n <= density.p; ++n) {
        const double e = eigenvalue(kind, n, Channel::Y);
        for (int m = -n; m <= n; ++m)
            out(n, m) = e * density(n, m);
    }
    return out;
}

VectorCoeffsVWX apply_diagonal(OperatorKind kind, const VectorCoeffsVWX& density)
{
    if (is_laplace(kind))
        throw std::invalid_argument("apply_diagonal: Laplace kind applied to vector density");
    VectorCoeffsVWX out(density.p);
    for (int n = 0; n <= density.p; ++n) {
        const double ev = eigenvalue(kind, n, Channel::V);
        const double ew = n > 0 ? eigenvalue(kind, n, Channel::W) : 0.0;
        const double ex = n > 0 ? eigenvalue(kind, n, Channel::X) : 0.0;
        for (int m = -n; m <= n; ++m) {
            out.v(n, m) = ev * density.v(n, m);
            out.w(n, m) = ew * density.w(n, m);
            out.x(n, m) = ex * density.x(n, m);
        }
    }
    return out;
}

VWXTriple traction_radial(int n, double r, double f, double g, double h, double P, double fr,
                          double gr, double hr)
{
    const double a = f + g, ar = fr + gr;
    const double b = n * g - (n + 1.0) * f, br = n * gr - (n + 1.0) * fr;
    const double shear = ar - (a - b) / r;
    const double d = 2.0 * n + 1.0;
    VWXTriple t;
    t.V = (-(2.0 * br - P) + n * shear) / d;
    t.W = ((2.0 * br - P) + (n + 1.0) * shear) / d;
    t.X = hr - h / r;
    return t;
}

VWXTriple traction_on_sphere(int n, double f, double g, double h, double q, double fr, double gr,
                             double hr)
{
    return traction_radial(n, 1.0, f, g, h, -q, fr, gr, hr);
}

std::array<OdeSolutionEntry, 6> ode_solutions(int n)
{
    const double N = n;
    std::array<OdeSolutionEntry, 6> e;
    for (int i = 0; i < 6; ++i) {
        e[i].n = n;
        e[i].side = i < 3 ? Side::Exterior : Side::Interior;
    }
    e[0].label = "i";
    e[0].f.add(1.0, -n - 2);
    e[1].label = "ii";
    e[1].f.add(-N * (2 * N - 1) / (2 * (N + 1)), -n);
    e[1].g.add(1.0, -n);
    e[1].q.add(-N * (2 * N - 1) * (2 * N + 1) / (N + 1), -n);
    e[2].label = "iii";
    e[2].h.add(1.0, -n - 1);
    e[3].label = "iv";
    e[3].g.add(1.0, n - 1);
    e[4].label = "v";
    e[4].f.add(2 * N / ((N + 1) * (2 * N + 3)), n + 1);
    e[4].g.add(1.0, n + 1);
    e[4].q.add(-2 * (2 * N + 1), n + 1);
    e[5].label = "vi";
    e[5].h.add(1.0, n);
    return e;
}

double ode_residual(const OdeSolutionEntry& e, const std::vector<double>& r_samples)
{
    const double N = e.n;
    double res = 0.0;
    for (double r : r_samples) {
        const double f = e.f(r), fr = e.f.derivative(r), frr = e.f.second_derivative(r);
        const double g = e.g(r), gr = e.g.derivative(r), grr = e.g.second_derivative(r);
        const double h = e.h(r), hr = e.h.derivative(r), hrr = e.h.second_derivative(r);
        const double q = e.q(r), qr = e.q.derivative(r);
        const double a1 = r * r * frr + 2 * r * fr - (N + 1) * (N + 2) * f +
                          (-r * qr + (N + 1) * q) / (2 * N + 1);
        const double a2 = r * r * grr + 2 * r * gr - N * (N - 1) * g + (r * qr + N * q) / (2 * N + 1);
        const double a3 = r * r * hrr + 2 * r * hr - N * (N + 1) * h;
        const double a4 = (N + 1) * r * fr + (N + 1) * (N + 2) * f - N * r * gr + N * (N - 1) * g;
        res = std::max({res, std::abs(a1), std::abs(a2), std::abs(a3), std::abs(a4)});
    }
    return res;
}

namespace {

struct BasisAtOne {
    double f, g, h, P, fr, gr, hr;
    VWXTriple t;
};

BasisAtOne basis_at_one(const OdeSolutionEntry& e)
{
    BasisAtOne b{};
    b.f = e.f(1.0);
    b.g = e.g(1.0);
    b.h = e.h(1.0);
    b.P = -e.q(1.0);
    b.fr = e.f.derivative(1.0);
    b.gr = e.g.derivative(1.0);
    b.hr = e.h.derivative(1.0);
    b.t = traction_radial(e.n, 1.0, b.f, b.g, b.h, b.P, b.fr, b.gr, b.hr);
    return b;
}

}  // namespace

LayerWeights derive_layer_coefficients(int n, Potential pot)
{
    if (n < 1)
        throw std::invalid_argument("derive_layer_coefficients: n >= 1 required");
    if (pot == Potential::K)
        throw std::invalid_argument("derive_layer_coefficients: S or D only");
    const auto sol = ode_solutions(n);
    std::array<BasisAtOne, 6> B;
    for (int i = 0; i < 6; ++i)
        B[i] = basis_at_one(sol[i]);

    // (f, g) block: unknowns (i), (ii), (iv), (v); exterior minus interior
    Eigen::Matrix4d A;
    const int cols[4] = {0, 1, 3, 4};
    for (int c = 0; c < 4; ++c) {
        const BasisAtOne& b = B[cols[c]];
        const double s = c < 2 ? 1.0 : -1.0;
        A(0, c) = s * b.f;
        A(1, c) = s * b.g;
        A(2, c) = s * b.t.V;
        A(3, c) = s * b.t.W;
    }
    Eigen::Matrix2d A2;
    A2 << B[2].h, -B[5].h, B[2].t.X, -B[5].t.X;

    Eigen::FullPivLU<Eigen::Matrix4d> lu(A);
    Eigen::FullPivLU<Eigen::Matrix2d> lu2(A2);
    if (lu.rank() < 4 || lu2.rank() < 2)
        throw std::runtime_error("derive_layer_coefficients: singular jump system");

    LayerWeights out;
    out.n = n;
    out.pot = pot;
    auto solve4 = [&](const Eigen::Vector4d& rhs, std::array<double, 6>& w) {
        const Eigen::Vector4d x = lu.solve(rhs);
        w = {x(0), x(1), 0.0, x(2), x(3), 0.0};
    };
    if (pot == Potential::S) {
        solve4(Eigen::Vector4d(0, 0, -1, 0), out.V);
        solve4(Eigen::Vector4d(0, 0, 0, -1), out.W);
        const Eigen::Vector2d x = lu2.solve(Eigen::Vector2d(0, -1));
        out.X = {0, 0, x(0), 0, 0, x(1)};
    } else {
        solve4(Eigen::Vector4d(1, 0, 0, 0), out.V);
        solve4(Eigen::Vector4d(0, 1, 0, 0), out.W);
        const Eigen::Vector2d x = lu2.solve(Eigen::Vector2d(1, 0));
        out.X = {0, 0, x(0), 0, 0, x(1)};
    }
    return out;
}

RadialState evaluate_weights(int n, const std::array<double, 6>& w, double r)
{
    const auto sol = ode_solutions(n);
    const int off = r > 1.0 ? 0 : 3;
    RadialState s;
    for (int i = off; i < off + 3; ++i) {
        s.f += w[i] * sol[i].f(r);
        s.g += w[i] * sol[i].g(r);
        s.h += w[i] * sol[i].h(r);
        s.P += -w[i] * sol[i].q(r) / r;
    }
    return s;
}

}  // namespace sbie

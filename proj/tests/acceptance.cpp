// Acceptance run: one PASS/FAIL line per criterion, details above each line.
// Exit status is nonzero when any criterion fails.

#include "sbie/applications.hpp"
#include "sbie/composite.hpp"
#include "sbie/experiments.hpp"
#include "sbie/lattice.hpp"
#include "sbie/solver.hpp"
#include "sbie/spectra.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

using namespace sbie;
using namespace sbie::testing;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
    bool pass = true;
    std::string summary;
};

int failures = 0;

void run(int id, const char* title, double time_limit, const std::function<Verdict()>& body)
{
    std::printf("---- criterion %d: %s\n", id, title);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v = body();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < time_limit;
    const bool ok = v.pass && in_time;
    if (!ok)
        ++failures;
    std::printf("criterion %2d: %s  %s; %.1f s (limit %.0f s%s)\n", id, ok ? "PASS" : "FAIL", v.summary.c_str(),
                secs, time_limit, in_time ? "" : ", exceeded");
    std::fflush(stdout);
}

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ------------------------------------------------------------------ 1. spectra

struct Rational {
    long long num = 0, den = 1;
    Rational(long long a = 0, long long b = 1) : num(a), den(b)
    {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend Rational operator-(Rational a, Rational b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
    friend bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
};

// Surface eigenvalues written out from the closed forms (exterior branch for +, interior for -).
Rational closed_eigenvalue(OperatorKind k, long long n, Channel c)
{
    using K = OperatorKind;
    const long long a = 2 * n + 1;
    switch (k) {
    case K::LaplaceS: return {1, a};
    case K::LaplaceDplus:
    case K::LaplaceKminus: return {n, a};
    case K::LaplaceDminus:
    case K::LaplaceKplus: return {-(n + 1), a};
    default: break;
    }
    const long long v = a * (2 * n + 3), w = a * (2 * n - 1);
    if (k == K::StokesS) {
        if (c == Channel::V)
            return {n, v};
        if (c == Channel::W)
            return {n + 1, w};
        return {1, a};
    }
    const bool dplus_like = k == K::StokesDplus || k == K::StokesKminus;
    if (dplus_like) {
        if (c == Channel::V)
            return {2 * n * n + 4 * n + 3, v};
        if (c == Channel::W)
            return {2 * (n + 1) * (n - 1), w};
        return {n - 1, a};
    }
    if (c == Channel::V)
        return {-2 * n * (n + 2), v};
    if (c == Channel::W)
        return {-(2 * n * n + 1), w};
    return {-(n + 2), a};
}

double self_coeff(const StokesRadialCoeffs& r, Channel c)
{
    return c == Channel::V ? r.gV : c == Channel::W ? r.gW : r.gX;
}

Verdict criterion_spectra()
{
    using K = OperatorKind;
    const double eps = std::numeric_limits<double>::epsilon();
    double worst_closed = 0.0, worst_limit = 0.0, worst_jump = 0.0;
    bool exact_ok = true;
    int spot = 0;
    for (int n = 0; n <= 64; ++n) {
        const bool spot_n = n == 0 || n == 1 || n == 2 || n == 5 || n == 10;
        for (K k : all_kinds()) {
            const bool lap = is_laplace(k);
            for (Channel c : lap ? std::vector<Channel>{Channel::Y}
                                 : std::vector<Channel>{Channel::V, Channel::W, Channel::X}) {
                if (n == 0 && (c == Channel::W || c == Channel::X))
                    continue;  // W_0 and X_0 vanish
                const Rational q = closed_eigenvalue(k, n, c);
                const double e = eigenvalue(k, n, c);
                const double scale = std::max(std::abs(q.value()), 1e-300);
                worst_closed = std::max(worst_closed, std::abs(e - q.value()) / scale);
                if (spot_n) {
                    // within 4 ulp of the correctly rounded fraction
                    ++spot;
                    const double num = static_cast<double>(q.num);
                    if (std::abs(e * static_cast<double>(q.den) - num) > 4 * eps * std::abs(num) ||
                        (q.num == 0 && e != 0.0))
                        exact_ok = false;
                }
                // branch of the off-surface closed form evaluated at r = 1
                const Side side = side_of(k);
                double lim;
                if (lap)
                    lim = laplace_radial(potential_of(k), n, 1.0, side);
                else
                    lim = self_coeff(stokes_radial(potential_of(k), c, n, 1.0, side), c);
                worst_limit = std::max(worst_limit, std::abs(lim - q.value()) / std::max(std::abs(q.value()), 1.0));
            }
        }
        for (Channel c : {Channel::Y, Channel::V, Channel::W, Channel::X}) {
            if (n == 0 && (c == Channel::W || c == Channel::X))
                continue;
            const bool lap = c == Channel::Y;
            const K dp = lap ? K::LaplaceDplus : K::StokesDplus, dm = lap ? K::LaplaceDminus : K::StokesDminus;
            const K kp = lap ? K::LaplaceKplus : K::StokesKplus, km = lap ? K::LaplaceKminus : K::StokesKminus;
            worst_jump = std::max(worst_jump, std::abs(eigenvalue(dp, n, c) - eigenvalue(dm, n, c) - 1.0));
            worst_jump = std::max(worst_jump, std::abs(eigenvalue(kp, n, c) - eigenvalue(km, n, c) + 1.0));
            if (spot_n) {
                exact_ok = exact_ok && closed_eigenvalue(dp, n, c) - closed_eigenvalue(dm, n, c) == Rational(1);
                exact_ok = exact_ok && closed_eigenvalue(kp, n, c) - closed_eigenvalue(km, n, c) == Rational(-1);
            }
        }
    }
    std::printf("  max rel diff vs closed forms (n <= 64): %.2e\n", worst_closed);
    std::printf("  max diff of r = 1 branch values: %.2e\n", worst_limit);
    std::printf("  rational spot checks: %d values, %s\n", spot, exact_ok ? "all within 4 ulp" : "mismatch");
    std::printf("  max jump identity defect: %.2e\n", worst_jump);
    const bool ok = exact_ok && worst_closed <= 1e-14 && worst_limit <= 1e-14 && worst_jump <= 1e-14;
    return {ok, "closed-form " + fmt("%.1e", worst_closed) + ", jumps " + fmt("%.1e", worst_jump) +
                    " (tol 1e-14), rational " + (exact_ok ? "exact" : "mismatch")};
}

// ------------------------------------------------------------------ 2. quadrature vs formulas

Verdict criterion_quadrature()
{
    constexpr int p = 24, degree = 8;
    std::mt19937_64 rng(2024);
    const Sphere src{Vec3(0.2, -0.1, 0.3), 1.0, 0};
    double worst = 0.0;
    for (OperatorKind k : all_kinds()) {
        const LayerCombo combo = LayerCombo::from_kind(k);
        TargetBatch t;
        for (double d : {1.0, 1.5, 3.0})
            for (const Vec3& u : random_directions(40, rng)) {
                t.points.push_back(src.center + (src.radius + d) * u);
                if (combo.needs_normals())
                    t.normals.push_back(random_directions(1, rng)[0]);
            }
        double err, ref;
        if (is_laplace(k)) {
            const ScalarCoeffs c = random_real_scalar(degree, rng).resized(p);
            const FieldValues a = smooth_quadrature_eval(k, c, src, t), b = near_eval_direct(k, c, src, t);
            err = (a - b).cwiseAbs().maxCoeff();
            ref = b.cwiseAbs().maxCoeff();
        } else {
            const VectorCoeffsVWX c = random_vector(degree, rng, 0.0, true).resized(p);
            const FieldValues a = smooth_quadrature_eval(k, c, src, t), b = near_eval_direct(k, c, src, t);
            err = (a - b).rowwise().norm().maxCoeff();
            ref = b.rowwise().norm().maxCoeff();
        }
        std::printf("  %-14s rel err %.2e\n", to_string(k).c_str(), err / ref);
        worst = std::max(worst, err / ref);
    }
    return {worst <= 1e-10, "max rel err " + fmt("%.2e", worst) + " (tol 1e-10, p = 24, distance >= 1)"};
}

// ------------------------------------------------------------------ 3. appendix closure

struct Velocity {
    double f = 0.0, g = 0.0, h = 0.0;
};

// Off-surface closed forms of S and D for a single source channel.
Velocity closed_velocity(Potential pot, Channel c, int n, double r)
{
    const double a = 2 * n + 1, b = 2 * n + 3, d = 2 * n - 1;
    const bool ext = r > 1.0;
    Velocity v;
    if (pot == Potential::S) {
        if (c == Channel::V) {
            if (ext) {
                v.f = n / (a * b) * std::pow(r, -n - 2);
            } else {
                v.f = n / (a * b) * std::pow(r, n + 1);
                v.g = (n + 1) / (4.0 * n + 2) * (std::pow(r, n + 1) - std::pow(r, n - 1));
            }
        } else if (c == Channel::W) {
            if (ext) {
                v.g = (n + 1) / (a * d) * std::pow(r, -n);
                v.f = n / (4.0 * n + 2) * (std::pow(r, -n - 2) - std::pow(r, -n));
            } else {
                v.g = (n + 1) / (a * d) * std::pow(r, n - 1);
            }
        } else {
            v.h = std::pow(r, ext ? -n - 1 : n) / a;
        }
        return v;
    }
    if (c == Channel::V) {
        if (ext) {
            v.f = (2.0 * n * n + 4 * n + 3) / (a * b) * std::pow(r, -n - 2);
        } else {
            v.f = -2.0 * n * (n + 2) / (a * b) * std::pow(r, n + 1);
            v.g = -(n + 1.0) * (n + 2) / a * (std::pow(r, n + 1) - std::pow(r, n - 1));
        }
    } else if (c == Channel::W) {
        if (ext) {
            v.g = 2.0 * (n + 1) * (n - 1) / (a * d) * std::pow(r, -n);
            v.f = 2.0 * n * (n - 1) / (4.0 * n + 2) * (std::pow(r, -n - 2) - std::pow(r, -n));
        } else {
            v.g = -(2.0 * n * n + 1) / (a * d) * std::pow(r, n - 1);
        }
    } else {
        v.h = ext ? (n - 1) / a * std::pow(r, -n - 1) : -(n + 2) / a * std::pow(r, n);
    }
    return v;
}

Verdict criterion_appendix()
{
    const std::vector<double> radii{0.2, 0.5, 0.8, 0.95, 1.05, 1.3, 2.0, 4.0};
    double worst_coeff = 0.0;
    for (int n = 1; n <= 32; ++n)
        for (Potential pot : {Potential::S, Potential::D}) {
            const LayerWeights lw = derive_layer_coefficients(n, pot);
            for (Channel c : {Channel::V, Channel::W, Channel::X}) {
                const auto& w = c == Channel::V ? lw.V : c == Channel::W ? lw.W : lw.X;
                for (double r : radii) {
                    const RadialState st = evaluate_weights(n, w, r);
                    const Velocity o = closed_velocity(pot, c, n, r);
                    const double scale = std::max({std::abs(o.f), std::abs(o.g), std::abs(o.h), 1e-300});
                    const double e = std::max({std::abs(st.f - o.f), std::abs(st.g - o.g), std::abs(st.h - o.h)});
                    worst_coeff = std::max(worst_coeff, e / scale);
                }
            }
        }
    std::vector<double> ext, in;
    for (int i = 0; i <= 40; ++i) {
        ext.push_back(1.1 + i * (3.9 / 40));
        in.push_back(0.2 + i * (0.7 / 40));
    }
    double worst_ode = 0.0;
    for (int n = 1; n <= 32; ++n)
        for (const auto& e : ode_solutions(n))
            worst_ode = std::max(worst_ode, ode_residual(e, e.side == Side::Exterior ? ext : in));
    std::printf("  derived vs closed forms, n = 1..32, 8 radii: max rel diff %.2e\n", worst_coeff);
    std::printf("  ODE solutions, n = 1..32: max residual %.2e\n", worst_ode);
    return {worst_coeff <= 1e-10 && worst_ode < 1e-10,
            "layer coefficients " + fmt("%.1e", worst_coeff) + ", ODE residual " + fmt("%.1e", worst_ode) +
                " (tol 1e-10)"};
}

// ------------------------------------------------------------------ 4. near-singular robustness

Verdict criterion_near_singular()
{
    OperatorSweep sweep;
    const std::vector<ErrorRow> rows = operator_convergence(sweep);
    std::map<std::pair<std::string, int>, std::vector<const ErrorRow*>> groups;
    for (const ErrorRow& r : rows)
        groups[{r.quantity, r.p}].push_back(&r);
    std::printf("  %-12s %3s %11s %11s %11s %11s %9s %9s\n", "kind", "p", "smooth@1", "smooth@1e-3", "near min",
                "near max", "near dec", "gap dec");
    bool near_ok = true, gap_ok = true;
    double worst_near = 0.0, worst_gap = 1e300;
    for (const auto& [key, g] : groups) {
        double nmin = 1e300, nmax = 0.0, s1 = 0.0, s3 = 0.0;
        for (const ErrorRow* r : g) {
            nmin = std::min(nmin, r->near);
            nmax = std::max(nmax, r->near);
            if (std::abs(r->distance - 1.0) < 1e-12)
                s1 = r->smooth;
            if (std::abs(r->distance - 1e-3) < 1e-15)
                s3 = r->smooth;
        }
        // floor at roundoff so an exact zero does not count as a decade change
        const double floor = 1e-16;
        const double near_dec = std::log10(std::max(nmax, floor) / std::max(nmin, floor));
        const double gap = std::log10(s3 / s1);
        std::printf("  %-12s %3d %11.2e %11.2e %11.2e %11.2e %9.2f %9.2f\n", key.first.c_str(), key.second, s1, s3,
                    nmin, nmax, near_dec, gap);
        near_ok = near_ok && near_dec < 1.0;
        gap_ok = gap_ok && gap >= 4.0;
        worst_near = std::max(worst_near, near_dec);
        worst_gap = std::min(worst_gap, gap);
    }
    return {near_ok && gap_ok, "near variation max " + fmt("%.2f", worst_near) + " dec (< 1) " +
                                   (near_ok ? "ok" : "fails") + "; smooth gap min " + fmt("%.2f", worst_gap) +
                                   " dec (>= 4) " + (gap_ok ? "ok" : "fails")};
}

// ------------------------------------------------------------------ 5. BIE experiment

Verdict criterion_bie()
{
    BieSweep sweep;
    const std::vector<ErrorRow> rows = bie_convergence(sweep);
    std::map<std::pair<std::string, int>, double> worst_near;
    std::printf("  %-7s %3s %10s %11s %11s\n", "qty", "p", "distance", "near", "smooth");
    for (const ErrorRow& r : rows) {
        std::printf("  %-7s %3d %10.1e %11.2e %11.2e\n", r.quantity.c_str(), r.p, r.distance, r.near, r.smooth);
        double& w = worst_near[{r.quantity, r.p}];
        w = std::max(w, r.near);
    }
    double worst24 = 0.0;
    for (const auto& [key, w] : worst_near) {
        std::printf("  max over ladder: %-7s p = %2d: %.2e\n", key.first.c_str(), key.second, w);
        if (key.second == 24)
            worst24 = std::max(worst24, w);
    }
    return {worst24 <= 1e-8, "max rel err at p = 24 " + fmt("%.2e", worst24) + " (tol 1e-8)"};
}

// ------------------------------------------------------------------ 6. physics oracles

Verdict criterion_physics()
{
    constexpr int p = 8;
    auto single = [](const Sphere& s) {
        Suspension sus;
        sus.spheres = {s};
        sus.p = p;
        return sus;
    };
    const Sphere sph{Vec3(0.3, -0.2, 0.5), 0.7, 0};
    const double a = sph.radius;
    const Suspension s = single(sph);

    const BodyForce ft{Vec3(1.0, 2.0, -0.5), Vec3(0.3, -1.0, 0.8)};
    const MobilitySolution mob = solve_mobility(s, {ft});
    const double ev = (mob.motions[0].v - ft.F / (6 * pi * a)).norm() / (ft.F / (6 * pi * a)).norm();
    const double ew = (mob.motions[0].omega - ft.T / (8 * pi * a * a * a)).norm() / (ft.T / (8 * pi * a * a * a)).norm();

    const RigidMotion rm{Vec3(0.5, -1.0, 0.2), Vec3(0.1, 0.4, -0.3)};
    const ResistanceSolution res = solve_resistance(s, {rm});
    const double eF = std::abs(res.forces[0].F.norm() - 6 * pi * a * rm.v.norm()) / (6 * pi * a * rm.v.norm());
    const double eT =
        std::abs(res.forces[0].T.norm() - 8 * pi * a * a * a * rm.omega.norm()) / (8 * pi * a * a * a * rm.omega.norm());
    const double dirF = (res.forces[0].F.normalized() - rm.v.normalized()).norm();
    const double dirT = (res.forces[0].T.normalized() - rm.omega.normalized()).norm();

    const double B1 = 1.3, B2 = -0.7;
    const Vec3 axis = Vec3(1.0, -2.0, 0.5).normalized();
    const SquirmerSolution sq = solve_squirmer(s, {squirmer_slip(sph, axis, B1, B2, p)});
    const Vec3 swim = 2.0 / 3.0 * B1 * axis;
    const double eS = (sq.motions[0].v - swim).norm() / swim.norm();
    const double eSw = sq.motions[0].omega.norm() / swim.norm();

    const double mu = 5.0, mu0 = 1.5;
    const MagneticParams prm{Vec3(0.3, 1.0, -0.7), mu, mu0};
    const MagneticSolution mag = magneto_solve(s, prm);
    const Vec3 m_exact = 4.0 * pi * a * a * a * (mu - mu0) / (mu + 2.0 * mu0) * prm.H0;
    const double eM = (dipole_moment(sph, mag.q[0]) - m_exact).norm() / m_exact.norm();

    std::printf("  mobility: v %.2e, omega %.2e\n", ev, ew);
    std::printf("  resistance: |F| %.2e, |T| %.2e, direction %.1e / %.1e\n", eF, eT, dirF, dirT);
    std::printf("  squirmer: swim velocity %.2e, rotation %.2e\n", eS, eSw);
    std::printf("  magnetostatics: dipole moment %.2e\n", eM);
    const double hydro = std::max({ev, ew, eF, eT, dirF, dirT, eS, eSw});
    return {hydro <= 1e-8 && eM <= 1e-10,
            "hydrodynamics " + fmt("%.1e", hydro) + " (tol 1e-8), dipole " + fmt("%.1e", eM) + " (tol 1e-10)"};
}

// ------------------------------------------------------------------ 7. near paths

Verdict criterion_near_paths()
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> P(4, 16);
    const auto& kinds = all_kinds();
    std::uniform_int_distribution<size_t> K(0, kinds.size() - 1);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int p = P(rng);
        const OperatorKind k = kinds[K(rng)];
        const LayerCombo combo = LayerCombo::from_kind(k);
        const Sphere src{Vec3(U(rng) - 0.5, U(rng) - 0.5, U(rng) - 0.5), 0.5 + U(rng), 0};
        const double b = 0.3 + 1.2 * U(rng);
        const double gap = std::pow(10.0, -3.0 * U(rng)) * std::min(src.radius, b);
        const Vec3 dir = random_directions(1, rng)[0];
        const Sphere trg{src.center + (src.radius + b + gap) * dir, b, 1};
        double rel;
        if (is_laplace(k)) {
            const ScalarCoeffs c = random_real_scalar(p, rng, 1.0);
            const ScalarCoeffs f = near_eval_fft(combo, c, src, trg), d = near_eval_direct_coeffs(combo, c, src, trg);
            rel = max_diff(f, d) / std::max(d.norm(), 1e-300);
        } else {
            const VectorCoeffsVWX c = random_vector(p, rng, 1.0, true);
            const VectorCoeffsVWX f = near_eval_fft(combo, c, src, trg), d = near_eval_direct_coeffs(combo, c, src, trg);
            rel = max_diff(f, d) / std::max(d.norm(), 1e-300);
        }
        worst = std::max(worst, rel);
    }
    std::printf("  100 random geometries, p in [4, 16], all kinds: max rel diff %.2e\n", worst);
    const NearTiming t = time_near_paths(64, 5, 5);
    const double speedup = t.direct_seconds / t.fft_seconds;
    std::printf("  p = 64: fft %.4f s, direct %.4f s, speedup %.1fx, diff %.1e\n", t.fft_seconds, t.direct_seconds,
                speedup, t.max_difference);
    return {worst <= 1e-11 && speedup >= 10.0,
            "max rel diff " + fmt("%.1e", worst) + " (tol 1e-11), speedup at p = 64 " + fmt("%.1f", speedup) +
                "x (>= 10x)"};
}

// ------------------------------------------------------------------ 8. composite apply

Verdict criterion_composite()
{
    constexpr int p = 8;
    std::mt19937_64 rng(8);
    const Suspension s = make_lattice(LatticeSpec{2, 1, false, 2.0}, p);
    double worst = 0.0;
    for (OperatorKind k : all_kinds()) {
        const LayerCombo combo = LayerCombo::from_kind(k);
        const SurfaceLimit lim = side_of(k) == Side::Interior ? SurfaceLimit::Interior : SurfaceLimit::Exterior;
        double err = 0.0, scale = 0.0;
        if (is_laplace(k)) {
            std::vector<ScalarCoeffs> d;
            for (int i = 0; i < s.size(); ++i)
                d.push_back(random_real_scalar(p, rng));
            const auto out = composite_apply(k, s, d);
            for (int t = 0; t < s.size(); ++t) {
                const TargetBatch g = grid_targets(s.spheres[t], p, combo.needs_normals());
                FieldValues v = FieldValues::Zero(g.size(), 1);
                for (int j = 0; j < s.size(); ++j)
                    if (j != t)
                        v += smooth_quadrature_eval(combo, d[j], s.spheres[j], g);
                ScalarCoeffs ref = project_scalar(v, p);
                const ScalarCoeffs self = self_apply(combo, lim, d[t], s.spheres[t]);
                for (size_t i = 0; i < ref.c.size(); ++i)
                    ref.c[i] += self.c[i];
                err = std::max(err, max_diff(out[t], ref));
                scale = std::max(scale, ref.norm());
            }
        } else {
            std::vector<VectorCoeffsVWX> d;
            for (int i = 0; i < s.size(); ++i)
                d.push_back(random_vector(p, rng, 0.0, true));
            const auto out = composite_apply(k, s, d);
            for (int t = 0; t < s.size(); ++t) {
                const TargetBatch g = grid_targets(s.spheres[t], p, combo.needs_normals());
                FieldValues v = FieldValues::Zero(g.size(), 3);
                for (int j = 0; j < s.size(); ++j)
                    if (j != t)
                        v += smooth_quadrature_eval(combo, d[j], s.spheres[j], g);
                VectorCoeffsVWX ref = project_vector(v, p);
                const VectorCoeffsVWX self = self_apply(combo, lim, d[t], s.spheres[t]);
                for (size_t i = 0; i < ref.v.c.size(); ++i) {
                    ref.v.c[i] += self.v.c[i];
                    ref.w.c[i] += self.w.c[i];
                    ref.x.c[i] += self.x.c[i];
                }
                err = std::max(err, max_diff(out[t], ref));
                scale = std::max(scale, ref.norm());
            }
        }
        std::printf("  %-14s rel diff %.2e\n", to_string(k).c_str(), err / scale);
        worst = std::max(worst, err / scale);
    }
    return {worst <= 1e-9, "2x2x2 lattice, max rel diff " + fmt("%.1e", worst) + " (tol 1e-9)"};
}

// ------------------------------------------------------------------ 9. scaling

Verdict criterion_scaling()
{
    const std::vector<int> sides{2, 3, 5, 9};
    double worst = 0.0;
    for (int q : {1, 4})
        for (int p : {4, 8}) {
            std::vector<double> nb, secs, pairs;
            for (int v : sides) {
                const LatticeSpec spec{v, q, false, 2.0};
                const ApplyTiming t = time_composite_apply(OperatorKind::StokesDplus, spec, p, "null", 5, 9);
                const Suspension s = make_lattice(spec, p);
                int near = 0;
                for (int i = 0; i < s.size(); ++i)
                    for (int j = 0; j < s.size(); ++j)
                        near += i != j && !well_separated(s.spheres[i], s.spheres[j], s.eta);
                nb.push_back(t.bodies);
                secs.push_back(t.seconds);
                pairs.push_back(near);
                std::printf("  q = %d p = %d n_b = %4d: %.4f s, %5d near pairs, %.2e s per near pair\n", q, p,
                            t.bodies, t.seconds, near, near > 0 ? t.seconds / near : 0.0);
            }
            const double slope = loglog_slope(nb, secs);
            std::printf("  q = %d p = %d fitted exponent %.3f", q, p, slope);
            if (pairs.back() > 0)
                std::printf(" (near pairs alone %.3f)", loglog_slope(nb, pairs));
            std::printf("\n");
            worst = std::max(worst, slope);
        }
    return {worst <= 1.2, "max fitted exponent " + fmt("%.3f", worst) + " (<= 1.2, near + self, far excluded)"};
}

// ------------------------------------------------------------------ 10. mobility symmetry

Verdict criterion_symmetry()
{
    Suspension s;
    s.p = 16;
    const Vec3 dir = Vec3(0.6, -0.3, 0.74).normalized();
    s.spheres = {Sphere{Vec3::Zero(), 1.0, 0}, Sphere{(1.0 + 0.6 + 0.4) * dir, 0.6, 1}};
    Eigen::Matrix<double, 12, 12> M;
    for (int col = 0; col < 12; ++col) {
        std::vector<BodyForce> f(2);
        Vec3& slot = col % 6 < 3 ? f[col / 6].F : f[col / 6].T;
        slot[col % 3] = 1.0;
        const MobilitySolution sol = solve_mobility(s, f);
        for (int b = 0; b < 2; ++b) {
            M.block<3, 1>(6 * b, col) = sol.motions[b].v;
            M.block<3, 1>(6 * b + 3, col) = sol.motions[b].omega;
        }
    }
    const double asym = (M - M.transpose()).cwiseAbs().maxCoeff() / M.cwiseAbs().maxCoeff();
    std::printf("  12x12 mobility, p = 16, gap 0.4: max |M - M^T| / max |M| = %.2e\n", asym);
    return {asym <= 1e-7, "relative asymmetry " + fmt("%.1e", asym) + " (tol 1e-7)"};
}

}  // namespace

int main()
{
    run(1, "spectra tables", 1, criterion_spectra);
    run(2, "smooth quadrature against the evaluation formulas", 30, criterion_quadrature);
    run(3, "layer coefficients from the radial system", 5, criterion_appendix);
    run(4, "near-singular robustness", 120, criterion_near_singular);
    run(5, "three-sphere integral equations", 600, criterion_bie);
    run(6, "single-body physics", 60, criterion_physics);
    run(7, "FFT and direct near paths", 300, criterion_near_paths);
    run(8, "composite apply on a lattice", 120, criterion_composite);
    run(9, "near and self cost scaling", 1200, criterion_scaling);
    run(10, "mobility matrix symmetry", 300, criterion_symmetry);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

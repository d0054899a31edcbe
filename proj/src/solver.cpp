#include "sbie/solver.hpp"

#include "sbie/kernels.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <iomanip>

namespace sbie {

namespace {

constexpr double pi = std::numbers::pi;

// ---------------------------------------------------------------- GMRES

void givens(cplx a, cplx b, double& c, cplx& s)
{
    const double aa = std::abs(a), bb = std::abs(b);
    if (bb == 0.0) {
        c = 1.0;
        s = 0.0;
        return;
    }
    if (aa == 0.0) {
        c = 0.0;
        s = 1.0;
        return;
    }
    const double r = std::hypot(aa, bb);
    c = aa / r;
    s = (a / aa) * std::conj(b) / r;
}

}  // namespace

Eigen::VectorXcd gmres(const LinearOperator& A, const Eigen::VectorXcd& b, const GmresOptions& opt,
                       GmresReport& report)
{
    if (opt.restart < 1 || opt.max_iterations < 0 || !(opt.tol > 0.0))
        throw std::invalid_argument("bad GMRES options");
    report = GmresReport{};
    const Eigen::Index n = b.size();
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
    const double bnorm = b.norm();
    report.history.push_back(1.0);
    if (bnorm == 0.0) {
        report.converged = true;
        report.history.back() = 0.0;
        report.status = "zero right-hand side";
        return x;
    }
    const int m = opt.restart;
    Eigen::VectorXcd r = b;
    double rel = 1.0;
    bool first = true;
    while (true) {
        if (!first)
            r = b - A(x);
        first = false;
        double beta = r.norm();
        rel = beta / bnorm;
        report.relative_residual = rel;
        if (rel <= opt.tol) {
            report.converged = true;
            report.status = "converged";
            break;
        }
        if (report.iterations >= opt.max_iterations) {
            report.status = "iteration limit reached";
            break;
        }
        Eigen::MatrixXcd V(n, m + 1);
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
        std::vector<double> cs(m);
        std::vector<cplx> sn(m);
        Eigen::VectorXcd g = Eigen::VectorXcd::Zero(m + 1);
        V.col(0) = r / beta;
        g(0) = beta;
        int k = 0;
        bool lucky = false;
        for (; k < m && report.iterations < opt.max_iterations;) {
            Eigen::VectorXcd w = A(V.col(k));
            if (w.size() != n)
                throw std::invalid_argument("operator changed the vector length");
            const double wnorm = w.norm();
            for (int i = 0; i <= k; ++i) {
                H(i, k) = V.col(i).dot(w);
                w -= H(i, k) * V.col(i);
            }
            const double h = w.norm();
            H(k + 1, k) = h;
            for (int i = 0; i < k; ++i) {
                const cplx t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
                H(i + 1, k) = -std::conj(sn[i]) * H(i, k) + cs[i] * H(i + 1, k);
                H(i, k) = t;
            }
            givens(H(k, k), H(k + 1, k), cs[k], sn[k]);
            H(k, k) = cs[k] * H(k, k) + sn[k] * H(k + 1, k);
            H(k + 1, k) = 0.0;
            g(k + 1) = -std::conj(sn[k]) * g(k);
            g(k) = cs[k] * g(k);
            ++k;
            ++report.iterations;
            rel = std::abs(g(k)) / bnorm;
            report.history.push_back(rel);
            if (h <= 1e-14 * std::max(wnorm, 1e-300)) {
                lucky = true;
                break;
            }
            V.col(k) = w / h;
            if (rel <= opt.tol)
                break;
        }
        if (k > 0) {
            const Eigen::VectorXcd y =
                H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
            x += V.leftCols(k) * y;
        }
        if (lucky) {
            r = b - A(x);
            report.relative_residual = r.norm() / bnorm;
            report.converged = report.relative_residual <= std::max(opt.tol, 1e-12);
            report.status = report.converged ? "converged (invariant subspace)" : "breakdown";
            break;
        }
    }
    return x;
}

std::string format_gmres_log(const GmresReport& r)
{
    std::ostringstream os;
    os << "# status: " << r.status << "\n";
    os << "# iterations: " << r.iterations << "\n";
    os << "# final relative residual: " << std::scientific << std::setprecision(6) << r.relative_residual
       << "\n";
    for (size_t i = 0; i < r.history.size(); ++i)
        os << i << " " << std::scientific << std::setprecision(6) << r.history[i] << "\n";
    return os.str();
}

void require_converged(const GmresReport& r, const std::string& problem)
{
    if (!r.converged) {
        std::ostringstream os;
        os << problem << ": GMRES did not converge (" << r.status << ", " << r.iterations
           << " iterations, relative residual " << std::scientific << r.relative_residual << ")";
        throw SolverError(os.str(), r);
    }
}

// ---------------------------------------------------------------- packing

int block_size(int p) { return 3 * num_coeffs(p); }

Eigen::VectorXcd pack(const std::vector<VectorCoeffsVWX>& blocks)
{
    if (blocks.empty())
        return {};
    const int p = blocks.front().p, nc = num_coeffs(p);
    Eigen::VectorXcd x(static_cast<Eigen::Index>(blocks.size()) * block_size(p));
    Eigen::Index o = 0;
    for (const VectorCoeffsVWX& b : blocks) {
        if (b.p != p)
            throw std::invalid_argument("blocks of different order");
        for (const ScalarCoeffs* c : {&b.v, &b.w, &b.x})
            for (int i = 0; i < nc; ++i)
                x(o++) = c->c[i];
    }
    return x;
}

std::vector<VectorCoeffsVWX> unpack(const Eigen::VectorXcd& x, int nb, int p)
{
    const int nc = num_coeffs(p);
    if (x.size() < static_cast<Eigen::Index>(nb) * block_size(p))
        throw std::invalid_argument("vector too short to unpack");
    std::vector<VectorCoeffsVWX> out(nb, VectorCoeffsVWX(p));
    Eigen::Index o = 0;
    for (VectorCoeffsVWX& b : out)
        for (ScalarCoeffs* c : {&b.v, &b.w, &b.x})
            for (int i = 0; i < nc; ++i)
                c->c[i] = x(o++);
    return out;
}

// ---------------------------------------------------------------- rigid motions

namespace {

// Coefficients of e_i (W_1^m) and e_i × n (X_1^m) on the unit sphere, and the squared norms
// of W_1^m and X_1^m.
struct RigidBasis {
    std::array<std::array<cplx, 3>, 3> t{}, r{};
    std::array<double, 3> wn{}, xn{};
};

const RigidBasis& rigid_basis()
{
    static const RigidBasis basis = [] {
        RigidBasis b;
        const int p = 2;
        const Sht& T = sht(p);
        const SphGrid& g = T.grid();
        for (int i = 0; i < 3; ++i) {
            GridValues f[3], h[3];
            for (int c = 0; c < 3; ++c) {
                f[c] = GridValues::Zero(g.nlat(), g.nlon());
                h[c] = GridValues::Zero(g.nlat(), g.nlon());
            }
            for (int j = 0; j < g.nlat(); ++j)
                for (int k = 0; k < g.nlon(); ++k) {
                    const Vec3 n(g.sin_theta[j] * std::cos(g.phi[k]), g.sin_theta[j] * std::sin(g.phi[k]),
                                 g.cos_theta[j]);
                    const Vec3 e = Vec3::Unit(i);
                    const Vec3 en = e.cross(n);
                    for (int c = 0; c < 3; ++c) {
                        f[c](j, k) = e(c);
                        h[c](j, k) = en(c);
                    }
                }
            const VectorCoeffsVWX ct = T.vforward_cart(f[0], f[1], f[2]);
            const VectorCoeffsVWX cr = T.vforward_cart(h[0], h[1], h[2]);
            for (int m = -1; m <= 1; ++m) {
                b.t[i][m + 1] = ct.w(1, m);
                b.r[i][m + 1] = cr.x(1, m);
            }
        }
        for (int m = -1; m <= 1; ++m) {
            VectorCoeffsVWX cw(p), cx(p);
            cw.w(1, m) = 1.0;
            cx.x(1, m) = 1.0;
            GridValues a[3], c[3];
            T.vinverse_cart(cw, a[0], a[1], a[2]);
            T.vinverse_cart(cx, c[0], c[1], c[2]);
            double sw = 0.0, sx = 0.0;
            for (int j = 0; j < g.nlat(); ++j)
                for (int k = 0; k < g.nlon(); ++k)
                    for (int d = 0; d < 3; ++d) {
                        sw += g.weight(j) * std::norm(a[d](j, k));
                        sx += g.weight(j) * std::norm(c[d](j, k));
                    }
            b.wn[m + 1] = sw;
            b.xn[m + 1] = sx;
        }
        return b;
    }();
    return basis;
}

Vec3 to_vec(const CVec3& v) { return v.real(); }

}  // namespace

VectorCoeffsVWX rigid_field(const Sphere& s, const RigidMotion& mo, int p)
{
    if (p < 1)
        throw std::invalid_argument("rigid motions need p >= 1");
    const RigidBasis& b = rigid_basis();
    VectorCoeffsVWX out(p);
    for (int m = -1; m <= 1; ++m) {
        cplx w = 0.0, x = 0.0;
        for (int i = 0; i < 3; ++i) {
            w += mo.v(i) * b.t[i][m + 1];
            x += mo.omega(i) * b.r[i][m + 1];
        }
        out.w(1, m) = w;
        out.x(1, m) = s.radius * x;
    }
    return out;
}

BodyForce density_moments(const Sphere& s, const VectorCoeffsVWX& mu)
{
    BodyForce f;
    if (mu.p < 1)
        return f;
    const RigidBasis& b = rigid_basis();
    const double a = s.radius;
    for (int i = 0; i < 3; ++i) {
        cplx F = 0.0, T = 0.0;
        for (int m = -1; m <= 1; ++m) {
            F += std::conj(b.t[i][m + 1]) * mu.w(1, m) * b.wn[m + 1];
            T += std::conj(b.r[i][m + 1]) * mu.x(1, m) * b.xn[m + 1];
        }
        f.F(i) = a * a * F.real();
        f.T(i) = a * a * a * T.real();
    }
    return f;
}

VectorCoeffsVWX rho_from_forces(const Sphere& s, const BodyForce& f, int p)
{
    const double a = s.radius;
    RigidMotion m;
    m.v = f.F / (4.0 * pi * a * a);
    m.omega = 3.0 * f.T / (8.0 * pi * a * a * a * a);
    return rigid_field(s, m, p);
}

RigidMotion extract_rigid_motion(const Sphere& s, const FieldValues& u, int p, double* residual)
{
    const SurfaceNodes nodes = surface_nodes(s, p);
    if (u.rows() != static_cast<Eigen::Index>(nodes.points.size()) || u.cols() != 3)
        throw std::invalid_argument("velocity samples do not match the sphere grid");
    const double a = s.radius;
    Vec3 F = Vec3::Zero(), T = Vec3::Zero();
    for (size_t i = 0; i < nodes.points.size(); ++i) {
        const Vec3 ui = to_vec(u.row(i).transpose());
        F += nodes.weights[i] * ui;
        T += nodes.weights[i] * (nodes.points[i] - s.center).cross(ui);
    }
    RigidMotion m;
    m.v = F / (4.0 * pi * a * a);
    m.omega = 3.0 * T / (8.0 * pi * a * a * a * a);
    if (residual) {
        double res = 0.0;
        for (size_t i = 0; i < nodes.points.size(); ++i) {
            const Vec3 fit = m.v + m.omega.cross(nodes.points[i] - s.center);
            res = std::max(res, (u.row(i).transpose() - fit.cast<cplx>()).norm());
        }
        *residual = res;
    }
    return m;
}

RigidMotion extract_rigid_motion(const Sphere& s, const VectorCoeffsVWX& u, double* residual)
{
    return extract_rigid_motion(s, synthesize(u), u.p, residual);
}

BodyForce net_force_torque(const Sphere& s, const FieldValues& traction, int p)
{
    const SurfaceNodes nodes = surface_nodes(s, p);
    if (traction.rows() != static_cast<Eigen::Index>(nodes.points.size()) || traction.cols() != 3)
        throw std::invalid_argument("traction samples do not match the sphere grid");
    BodyForce f;
    for (size_t i = 0; i < nodes.points.size(); ++i) {
        const Vec3 t = to_vec(traction.row(i).transpose());
        f.F += nodes.weights[i] * t;
        f.T += nodes.weights[i] * (nodes.points[i] - s.center).cross(t);
    }
    return f;
}

// ---------------------------------------------------------------- operators

namespace {

const LayerCombo kS{false, 1.0, 0.0, 0.0};
const LayerCombo kD{false, 0.0, 1.0, 0.0};
const LayerCombo kK{false, 0.0, 0.0, 1.0};
const LayerCombo kSD{false, 1.0, 1.0, 0.0};

std::vector<VectorCoeffsVWX> apply_combo(const LayerCombo& combo, SurfaceLimit limit, const Suspension& s,
                                         const std::vector<VectorCoeffsVWX>& dens, const ProblemOptions& opt)
{
    CompositeOptions o = opt.eval;
    o.self_limit = limit;
    return composite_apply(combo, s, dens, o);
}

void add_to(VectorCoeffsVWX& a, const VectorCoeffsVWX& b, double scale = 1.0)
{
    for (int i = 0; i < num_coeffs(a.p); ++i) {
        a.v.c[i] += scale * b.v.c[i];
        a.w.c[i] += scale * b.w.c[i];
        a.x.c[i] += scale * b.x.c[i];
    }
}

void check_vector(const Suspension& s, const Eigen::VectorXcd& x, int extra_per_body)
{
    s.validate();
    if (s.p < 1)
        throw std::invalid_argument("solvers need p >= 1");
    const Eigen::Index want = static_cast<Eigen::Index>(s.size()) * (block_size(s.p) + extra_per_body);
    if (x.size() != want)
        throw std::invalid_argument("unknown vector has the wrong length");
}

VectorCoeffsVWX sample_and_project(const Sphere& sp, int p, const std::function<Vec3(const Vec3&)>& f)
{
    const SurfaceNodes nodes = surface_nodes(sp, p);
    FieldValues v(static_cast<Eigen::Index>(nodes.points.size()), 3);
    for (size_t i = 0; i < nodes.points.size(); ++i)
        v.row(i) = f(nodes.points[i]).cast<cplx>().transpose();
    return project_vector(v, p);
}

std::vector<BodyForce> all_moments(const Suspension& s, const std::vector<VectorCoeffsVWX>& d)
{
    std::vector<BodyForce> out(s.size());
    for (int k = 0; k < s.size(); ++k)
        out[k] = density_moments(s.spheres[k], d[k]);
    return out;
}

CVec3 completion_at(const Suspension& s, const std::vector<BodyForce>& str, const Vec3& x)
{
    CVec3 u = CVec3::Zero();
    for (int k = 0; k < s.size(); ++k) {
        const Vec3& c = s.spheres[k].center;
        u += (kernel_stokeslet(x, c) * str[k].F).cast<cplx>();
        u += rotlet(x, c, str[k].T.cast<cplx>());
    }
    return u;
}

}  // namespace

std::vector<VectorCoeffsVWX> completion_flow(const Suspension& s, const std::vector<VectorCoeffsVWX>& psi)
{
    const std::vector<BodyForce> str = all_moments(s, psi);
    std::vector<VectorCoeffsVWX> out(s.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < s.size(); ++i)
        out[i] = sample_and_project(s.spheres[i], s.p,
                                    [&](const Vec3& x) { return to_vec(completion_at(s, str, x)); });
    return out;
}

std::vector<VectorCoeffsVWX> rigid_completion(const Suspension& s, const std::vector<VectorCoeffsVWX>& mu)
{
    std::vector<VectorCoeffsVWX> out(s.size());
    for (int k = 0; k < s.size(); ++k) {
        const BodyForce m = density_moments(s.spheres[k], mu[k]);
        out[k] = rigid_field(s.spheres[k], RigidMotion{m.F, m.T}, s.p);
    }
    return out;
}

Eigen::VectorXcd apply_porous(const Suspension& s, const Eigen::VectorXcd& mu, const ProblemOptions& opt)
{
    check_vector(s, mu, 0);
    return pack(apply_combo(kSD, SurfaceLimit::Exterior, s, unpack(mu, s.size(), s.p), opt));
}

Eigen::VectorXcd rhs_porous(const Suspension& s, const VelocityField& u_inf)
{
    s.validate();
    std::vector<VectorCoeffsVWX> b(s.size());
    for (int k = 0; k < s.size(); ++k)
        b[k] = sample_and_project(s.spheres[k], s.p, [&](const Vec3& x) { return Vec3(-u_inf(x)); });
    return pack(b);
}

Eigen::VectorXcd apply_mobility(const Suspension& s, const Eigen::VectorXcd& mu, const ProblemOptions& opt)
{
    check_vector(s, mu, 0);
    const std::vector<VectorCoeffsVWX> d = unpack(mu, s.size(), s.p);
    std::vector<VectorCoeffsVWX> out = apply_combo(kK, SurfaceLimit::Interior, s, d, opt);
    const std::vector<VectorCoeffsVWX> L = rigid_completion(s, d);
    for (int k = 0; k < s.size(); ++k)
        add_to(out[k], L[k]);
    return pack(out);
}

namespace {

std::vector<VectorCoeffsVWX> rho_all(const Suspension& s, const std::vector<BodyForce>& forces)
{
    if (static_cast<int>(forces.size()) != s.size())
        throw std::invalid_argument("one force/torque pair per body required");
    std::vector<VectorCoeffsVWX> rho(s.size());
    for (int k = 0; k < s.size(); ++k)
        rho[k] = rho_from_forces(s.spheres[k], forces[k], s.p);
    return rho;
}

}  // namespace

Eigen::VectorXcd rhs_mobility(const Suspension& s, const std::vector<BodyForce>& forces, const ProblemOptions& opt)
{
    s.validate();
    return -pack(apply_combo(kK, SurfaceLimit::Interior, s, rho_all(s, forces), opt));
}

Eigen::VectorXcd apply_resistance(const Suspension& s, const Eigen::VectorXcd& psi, const ProblemOptions& opt)
{
    check_vector(s, psi, 0);
    const std::vector<VectorCoeffsVWX> d = unpack(psi, s.size(), s.p);
    std::vector<VectorCoeffsVWX> out = apply_combo(kD, SurfaceLimit::Exterior, s, d, opt);
    const std::vector<VectorCoeffsVWX> N = completion_flow(s, d);
    for (int k = 0; k < s.size(); ++k)
        add_to(out[k], N[k]);
    return pack(out);
}

Eigen::VectorXcd rhs_resistance(const Suspension& s, const std::vector<RigidMotion>& motions)
{
    s.validate();
    if (static_cast<int>(motions.size()) != s.size())
        throw std::invalid_argument("one rigid motion per body required");
    std::vector<VectorCoeffsVWX> b(s.size());
    for (int k = 0; k < s.size(); ++k)
        b[k] = rigid_field(s.spheres[k], motions[k], s.p);
    return pack(b);
}

Eigen::VectorXcd apply_squirmer(const Suspension& s, const Eigen::VectorXcd& x, const ProblemOptions& opt)
{
    check_vector(s, x, 6);
    const int nb = s.size(), bs = block_size(s.p);
    const std::vector<VectorCoeffsVWX> d = unpack(x.head(static_cast<Eigen::Index>(nb) * bs), nb, s.p);
    std::vector<VectorCoeffsVWX> out = apply_combo(kSD, SurfaceLimit::Exterior, s, d, opt);
    Eigen::VectorXcd y(x.size());
    const Eigen::Index off = static_cast<Eigen::Index>(nb) * bs;
    for (int k = 0; k < nb; ++k) {
        const Sphere& sp = s.spheres[k];
        RigidMotion m;
        m.v = x.segment(off + 6 * k, 3).real();
        m.omega = x.segment(off + 6 * k + 3, 3).real();
        add_to(out[k], rigid_field(sp, m, s.p), -1.0);
        const BodyForce f = density_moments(sp, d[k]);
        const double a = sp.radius;
        y.segment(off + 6 * k, 3) = (f.F / (4.0 * pi * a * a)).cast<cplx>();
        y.segment(off + 6 * k + 3, 3) = (3.0 * f.T / (8.0 * pi * a * a * a * a)).cast<cplx>();
    }
    y.head(off) = pack(out);
    return y;
}

Eigen::VectorXcd rhs_squirmer(const Suspension& s, const std::vector<VectorCoeffsVWX>& slips)
{
    s.validate();
    if (static_cast<int>(slips.size()) != s.size())
        throw std::invalid_argument("one slip velocity per body required");
    const Eigen::Index off = static_cast<Eigen::Index>(s.size()) * block_size(s.p);
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(off + 6 * s.size());
    std::vector<VectorCoeffsVWX> sl;
    for (const VectorCoeffsVWX& u : slips)
        sl.push_back(u.resized(s.p));
    b.head(off) = pack(sl);
    return b;
}

VectorCoeffsVWX squirmer_slip(const Sphere& s, const Vec3& axis, double B1, double B2, int p)
{
    if (!(axis.norm() > 0.0))
        throw std::invalid_argument("squirmer axis must be nonzero");
    const Vec3 e = axis.normalized();
    // sinθ e_θ = cosθ n - e
    return sample_and_project(s, p, [&](const Vec3& x) {
        const Vec3 n = (x - s.center) / s.radius;
        const double ct = n.dot(e);
        return Vec3((B1 + B2 * ct) * (ct * n - e));
    });
}

// ---------------------------------------------------------------- solves

PorousSolution solve_porous(const Suspension& s, const VelocityField& u_inf, const ProblemOptions& opt)
{
    const Eigen::VectorXcd b = rhs_porous(s, u_inf);
    PorousSolution sol;
    const Eigen::VectorXcd x = gmres([&](const Eigen::VectorXcd& v) { return apply_porous(s, v, opt); }, b,
                                     opt.gmres, sol.report);
    require_converged(sol.report, "porous");
    sol.mu = unpack(x, s.size(), s.p);
    for (int k = 0; k < s.size(); ++k) {
        const BodyForce m = density_moments(s.spheres[k], sol.mu[k]);
        sol.drag.push_back(BodyForce{-m.F, -m.T});
    }
    return sol;
}

MobilitySolution solve_mobility(const Suspension& s, const std::vector<BodyForce>& forces,
                                const ProblemOptions& opt)
{
    const Eigen::VectorXcd b = rhs_mobility(s, forces, opt);
    MobilitySolution sol;
    const Eigen::VectorXcd x = gmres([&](const Eigen::VectorXcd& v) { return apply_mobility(s, v, opt); }, b,
                                     opt.gmres, sol.report);
    require_converged(sol.report, "mobility");
    sol.mu = unpack(x, s.size(), s.p);
    sol.rho = rho_all(s, forces);
    std::vector<VectorCoeffsVWX> total = sol.mu;
    for (int k = 0; k < s.size(); ++k)
        add_to(total[k], sol.rho[k]);
    const std::vector<VectorCoeffsVWX> u = apply_combo(kS, SurfaceLimit::Exterior, s, total, opt);
    for (int k = 0; k < s.size(); ++k) {
        double res = 0.0;
        sol.motions.push_back(extract_rigid_motion(s.spheres[k], u[k], &res));
        sol.rigid_residuals.push_back(res);
    }
    return sol;
}

ResistanceSolution solve_resistance(const Suspension& s, const std::vector<RigidMotion>& motions,
                                    const ProblemOptions& opt)
{
    const Eigen::VectorXcd b = rhs_resistance(s, motions);
    ResistanceSolution sol;
    const Eigen::VectorXcd x = gmres([&](const Eigen::VectorXcd& v) { return apply_resistance(s, v, opt); }, b,
                                     opt.gmres, sol.report);
    require_converged(sol.report, "resistance");
    sol.psi = unpack(x, s.size(), s.p);
    sol.forces = all_moments(s, sol.psi);
    return sol;
}

SquirmerSolution solve_squirmer(const Suspension& s, const std::vector<VectorCoeffsVWX>& slips,
                                const ProblemOptions& opt)
{
    const Eigen::VectorXcd b = rhs_squirmer(s, slips);
    SquirmerSolution sol;
    const Eigen::VectorXcd x = gmres([&](const Eigen::VectorXcd& v) { return apply_squirmer(s, v, opt); }, b,
                                     opt.gmres, sol.report);
    require_converged(sol.report, "squirmer");
    const Eigen::Index off = static_cast<Eigen::Index>(s.size()) * block_size(s.p);
    sol.mu = unpack(x.head(off), s.size(), s.p);
    for (int k = 0; k < s.size(); ++k)
        sol.motions.push_back(
            RigidMotion{x.segment(off + 6 * k, 3).real(), x.segment(off + 6 * k + 3, 3).real()});
    return sol;
}

// ---------------------------------------------------------------- fields

namespace {

TargetBatch batch_of(const std::vector<Vec3>& points)
{
    TargetBatch t;
    t.points = points;
    return t;
}

}  // namespace

FieldValues porous_velocity(const Suspension& s, const PorousSolution& sol, const VelocityField& u_inf,
                            const std::vector<Vec3>& points)
{
    FieldValues u = evaluate_field(kSD, s, sol.mu, batch_of(points));
    for (size_t i = 0; i < points.size(); ++i)
        u.row(i) += u_inf(points[i]).cast<cplx>().transpose();
    return u;
}

FieldValues mobility_velocity(const Suspension& s, const MobilitySolution& sol, const std::vector<Vec3>& points)
{
    std::vector<VectorCoeffsVWX> total = sol.mu;
    for (int k = 0; k < s.size(); ++k)
        add_to(total[k], sol.rho[k]);
    return evaluate_field(kS, s, total, batch_of(points));
}

FieldValues resistance_velocity(const Suspension& s, const ResistanceSolution& sol, const std::vector<Vec3>& points)
{
    FieldValues u = evaluate_field(kD, s, sol.psi, batch_of(points));
    for (size_t i = 0; i < points.size(); ++i)
        u.row(i) += completion_at(s, sol.forces, points[i]).transpose();
    return u;
}

FieldValues squirmer_velocity(const Suspension& s, const SquirmerSolution& sol, const std::vector<Vec3>& points)
{
    return evaluate_field(kSD, s, sol.mu, batch_of(points));
}

}  // namespace sbie

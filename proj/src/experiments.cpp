#include "sbie/experiments.hpp"

#include "sbie/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace sbie {

namespace {

ScalarCoeffs random_real(int p, std::mt19937_64& rng, double decay)
{
    std::normal_distribution<double> g;
    ScalarCoeffs c(p);
    for (int n = 0; n <= p; ++n) {
        const double s = std::pow(1.0 + n, -decay);
        c(n, 0) = g(rng) * s;
        for (int m = 1; m <= n; ++m) {
            const double re = g(rng), im = g(rng);
            c(n, m) = cplx(re, im) * s;
            c(n, -m) = std::conj(c(n, m));
        }
    }
    return c;
}

double max_row_norm(const FieldValues& v) { return v.rows() ? v.rowwise().norm().maxCoeff() : 0.0; }

TargetBatch shell(const Sphere& s, const std::vector<Vec3>& dirs, double d)
{
    TargetBatch t;
    for (const Vec3& u : dirs) {
        t.points.push_back(s.center + s.radius * (1.0 + d) * u);
        t.normals.push_back(u);
    }
    return t;
}

template <class Density>
ErrorRow operator_row(const LayerCombo& combo, const Density& exact, const Density& sampled, const TargetBatch& t)
{
    const Sphere unit{Vec3::Zero(), 1.0, 0};
    const FieldValues ref = near_eval_direct(combo, exact, unit, t);
    const FieldValues near = near_eval_direct(combo, sampled, unit, t);
    const FieldValues smooth = smooth_quadrature_eval(combo, exact, unit, t);
    const double scale = max_row_norm(ref);
    ErrorRow row;
    row.near = max_row_norm(near - ref) / scale;
    row.smooth = max_row_norm(smooth - ref) / scale;
    return row;
}

VectorCoeffsVWX project_field(const Sphere& s, int p, const std::function<CVec3(const Vec3&, const Vec3&)>& f)
{
    const SurfaceNodes nodes = surface_nodes(s, p);
    FieldValues v(static_cast<Eigen::Index>(nodes.points.size()), 3);
    for (size_t i = 0; i < nodes.points.size(); ++i)
        v.row(static_cast<Eigen::Index>(i)) = f(nodes.points[i], nodes.normals[i]).transpose();
    return project_vector(v, p);
}

FieldValues smooth_sum(const LayerCombo& combo, const Suspension& s, const std::vector<VectorCoeffsVWX>& dens,
                       const TargetBatch& t)
{
    FieldValues out = FieldValues::Zero(t.size(), 3);
    for (int k = 0; k < s.size(); ++k)
        out += smooth_quadrature_eval(combo, dens[k], s.spheres[k], t);
    return out;
}

}  // namespace

std::vector<double> distance_ladder(double max_exponent)
{
    std::vector<double> d;
    for (int i = 0; 0.5 * i <= max_exponent + 1e-12; ++i)
        d.push_back(std::pow(10.0, -0.5 * i));
    return d;
}

ScalarCoeffs synthetic_scalar(int p, std::uint64_t seed, double decay)
{
    std::mt19937_64 rng(seed);
    return random_real(p, rng, decay);
}

VectorCoeffsVWX synthetic_vector(int p, std::uint64_t seed, double decay)
{
    std::mt19937_64 rng(seed);
    VectorCoeffsVWX c(p);
    c.v = random_real(p, rng, decay);
    c.w = random_real(p, rng, decay);
    c.x = random_real(p, rng, decay);
    c.w(0, 0) = 0.0;
    c.x(0, 0) = 0.0;
    return c;
}

std::vector<Vec3> random_directions(int count, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    std::vector<Vec3> d;
    while (static_cast<int>(d.size()) < count) {
        const Vec3 v(g(rng), g(rng), g(rng));
        if (v.norm() > 1e-8)
            d.push_back(v.normalized());
    }
    return d;
}

std::vector<ErrorRow> operator_convergence(const OperatorSweep& sweep)
{
    std::mt19937_64 rng(sweep.seed);
    const std::vector<Vec3> dirs = random_directions(sweep.directions, rng);
    std::vector<ErrorRow> rows;
    for (OperatorKind kind : sweep.kinds) {
        const LayerCombo combo = LayerCombo::from_kind(kind);
        for (int p : sweep.orders) {
            const std::uint64_t s = sweep.seed + 7919 * static_cast<std::uint64_t>(p);
            for (double d : sweep.distances) {
                const TargetBatch t = shell(Sphere{}, dirs, d);
                ErrorRow row;
                if (combo.laplace) {
                    const ScalarCoeffs c = synthetic_scalar(p, s, sweep.decay);
                    row = operator_row(combo, c, project_scalar(synthesize(c), p), t);
                } else {
                    const VectorCoeffsVWX c = synthetic_vector(p, s, sweep.decay);
                    row = operator_row(combo, c, project_vector(synthesize(c), p), t);
                }
                row.quantity = to_string(kind);
                row.p = p;
                row.distance = d;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

std::vector<Sphere> bie_spheres(double gap)
{
    const double r1 = 0.903, r2 = 0.510, r3 = 0.262;
    const double d12 = r1 + r2 + gap, d13 = r1 + r3 + gap, d23 = r2 + r3 + gap;
    const double x3 = (d13 * d13 - d23 * d23 + d12 * d12) / (2.0 * d12);
    const double y3 = std::sqrt(d13 * d13 - x3 * x3);
    return {Sphere{Vec3::Zero(), r1, 0}, Sphere{Vec3(d12, 0.0, 0.0), r2, 1}, Sphere{Vec3(x3, y3, 0.0), r3, 2}};
}

std::vector<ErrorRow> bie_convergence(const BieSweep& sweep)
{
    const std::vector<Sphere> spheres = bie_spheres(sweep.gap);
    const int nb = static_cast<int>(spheres.size());
    std::mt19937_64 rng(sweep.seed);
    const std::vector<Vec3> src_dirs = random_directions(nb, rng), strengths = random_directions(nb, rng);
    std::vector<Vec3> src(nb);
    for (int l = 0; l < nb; ++l)
        src[l] = spheres[l].center + sweep.offset * spheres[l].radius * src_dirs[l];

    auto gamma = [&](const Vec3& x) {
        Vec3 u = Vec3::Zero();
        for (int l = 0; l < nb; ++l)
            u += kernel_stokeslet(x, src[l]) * strengths[l];
        return u;
    };
    auto tau = [&](const Vec3& x, const Vec3& n) {
        CVec3 t = CVec3::Zero();
        for (int l = 0; l < nb; ++l)
            t += stokes_traction_point(x, src[l], n, strengths[l].cast<cplx>());
        return t;
    };
    // D[ψ] of the exact solution: the Stokeslet flow minus its completion, force f_l and
    // torque (p_l - c_l) × f_l at every centre
    auto d_exact = [&](const Vec3& x) {
        Vec3 u = gamma(x);
        for (int l = 0; l < nb; ++l) {
            u -= kernel_stokeslet(x, spheres[l].center) * strengths[l];
            const Vec3 torque = (src[l] - spheres[l].center).cross(strengths[l]);
            u -= rotlet(x, spheres[l].center, torque.cast<cplx>()).real();
        }
        return u;
    };

    // shells of targets, skipping points inside other spheres
    std::vector<TargetBatch> shells;
    std::vector<Vec3> dirs = random_directions(sweep.directions * nb, rng);
    for (double d : sweep.distances) {
        TargetBatch t;
        for (int l = 0; l < nb; ++l)
            for (int i = 0; i < sweep.directions; ++i) {
                const Vec3& u = dirs[l * sweep.directions + i];
                const Vec3 x = spheres[l].center + spheres[l].radius * (1.0 + d) * u;
                bool inside = false;
                for (int j = 0; j < nb; ++j)
                    inside = inside || (j != l && (x - spheres[j].center).norm() < spheres[j].radius);
                if (!inside) {
                    t.points.push_back(x);
                    t.normals.push_back(u);
                }
            }
        shells.push_back(t);
    }

    ProblemOptions opt;
    opt.gmres.tol = sweep.tol;
    auto suspension = [&](int p) {
        Suspension s;
        s.spheres = spheres;
        s.p = p;
        return s;
    };
    auto solve = [&](const Suspension& s, bool mobility) {
        std::vector<VectorCoeffsVWX> b;
        for (const Sphere& sp : s.spheres)
            b.push_back(project_field(sp, s.p, [&](const Vec3& x, const Vec3& n) {
                return mobility ? tau(x, n) : CVec3(gamma(x).cast<cplx>());
            }));
        GmresReport rep;
        const Eigen::VectorXcd x = gmres(
            [&](const Eigen::VectorXcd& v) { return mobility ? apply_mobility(s, v, opt) : apply_resistance(s, v, opt); },
            pack(b), opt.gmres, rep);
        require_converged(rep, mobility ? "mobility form" : "resistance form");
        return unpack(x, nb, s.p);
    };

    const LayerCombo kS{false, 1.0, 0.0, 0.0}, kD{false, 0.0, 1.0, 0.0}, kK{false, 0.0, 0.0, 1.0};
    const Suspension ref_s = suspension(sweep.reference_order);
    const std::vector<VectorCoeffsVWX> mu_ref = solve(ref_s, true);
    std::vector<FieldValues> S_ref, K_ref;
    for (const TargetBatch& t : shells) {
        S_ref.push_back(evaluate_field(kS, ref_s, mu_ref, t));
        K_ref.push_back(evaluate_field(kK, ref_s, mu_ref, t));
    }

    std::vector<ErrorRow> rows;
    for (int p : sweep.orders) {
        const Suspension s = suspension(p);
        const std::vector<VectorCoeffsVWX> psi = solve(s, false), mu = solve(s, true);
        for (size_t k = 0; k < shells.size(); ++k) {
            const TargetBatch& t = shells[k];
            FieldValues D_ref(t.size(), 3);
            for (int i = 0; i < t.size(); ++i)
                D_ref.row(i) = d_exact(t.points[i]).cast<cplx>().transpose();
            auto add = [&](const char* name, const LayerCombo& c, const std::vector<VectorCoeffsVWX>& dens,
                           const FieldValues& ref) {
                const double scale = max_row_norm(ref);
                ErrorRow row;
                row.quantity = name;
                row.p = p;
                row.distance = sweep.distances[k];
                row.near = max_row_norm(evaluate_field(c, s, dens, t) - ref) / scale;
                row.smooth = max_row_norm(smooth_sum(c, s, dens, t) - ref) / scale;
                rows.push_back(row);
            };
            add("S[mu]", kS, mu, S_ref[k]);
            add("K[mu]", kK, mu, K_ref[k]);
            add("D[psi]", kD, psi, D_ref);
        }
    }
    return rows;
}

double median_seconds(const std::function<void()>& f, int reps)
{
    using clock = std::chrono::steady_clock;
    f();
    std::vector<double> t;
    for (int i = 0; i < std::max(reps, 1); ++i) {
        const auto a = clock::now();
        f();
        t.push_back(std::chrono::duration<double>(clock::now() - a).count());
    }
    std::sort(t.begin(), t.end());
    const size_t n = t.size();
    return n % 2 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope needs two or more matching samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

NearTiming time_near_paths(int p, int reps, std::uint64_t seed)
{
    const Sphere src{Vec3::Zero(), 1.0, 0};
    const Sphere tgt{Vec3(0.3, -0.4, 1.0).normalized() * 1.9, 0.8, 1};
    const LayerCombo combo{false, 0.0, 1.0, 0.0};
    const VectorCoeffsVWX dens = synthetic_vector(p, seed);
    NearTiming out;
    out.p = p;
    VectorCoeffsVWX a, b;
    out.fft_seconds = median_seconds([&] { a = near_eval_fft(combo, dens, src, tgt); }, reps);
    out.direct_seconds = median_seconds([&] { b = near_eval_direct_coeffs(combo, dens, src, tgt); }, reps);
    double diff = 0.0;
    for (const auto& [x, y] : {std::pair{&a.v, &b.v}, std::pair{&a.w, &b.w}, std::pair{&a.x, &b.x}})
        for (size_t i = 0; i < x->c.size(); ++i)
            diff = std::max(diff, std::abs(x->c[i] - y->c[i]));
    out.max_difference = diff / std::max(a.norm(), 1e-300);
    return out;
}

ApplyTiming time_composite_apply(OperatorKind kind, const LatticeSpec& lattice, int p, const std::string& far,
                                 int reps, std::uint64_t seed)
{
    const Suspension s = make_lattice(lattice, p);
    const std::unique_ptr<FarFieldBackend> backend = make_far_backend(far);
    CompositeOptions opt;
    opt.far = backend.get();
    opt.self_limit = side_of(kind) == Side::Exterior ? SurfaceLimit::Exterior : SurfaceLimit::Interior;
    const LayerCombo combo = LayerCombo::from_kind(kind);

    ApplyTiming out;
    out.kind = to_string(kind);
    out.p = p;
    out.q = lattice.q;
    out.vertices_per_side = lattice.vertices_per_side;
    out.polydisperse = lattice.polydisperse;
    out.bodies = s.size();
    out.far = backend->name();
    if (combo.laplace) {
        std::vector<ScalarCoeffs> d;
        for (int k = 0; k < s.size(); ++k)
            d.push_back(synthetic_scalar(p, seed + k));
        out.seconds = median_seconds([&] { composite_apply(combo, s, d, opt); }, reps);
    } else {
        std::vector<VectorCoeffsVWX> d;
        for (int k = 0; k < s.size(); ++k)
            d.push_back(synthetic_vector(p, seed + k));
        out.seconds = median_seconds([&] { composite_apply(combo, s, d, opt); }, reps);
    }
    return out;
}

}  // namespace sbie

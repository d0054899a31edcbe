#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace sbie::cli {

namespace fs = std::filesystem;

namespace {

class Csv {
public:
    Csv(const fs::path& path, const std::vector<std::string>& header) : os_(path)
    {
        if (!os_)
            throw std::runtime_error("cannot write " + path.string());
        os_ << std::setprecision(17);
        for (size_t i = 0; i < header.size(); ++i)
            os_ << (i ? "," : "") << header[i];
        os_ << '\n';
    }

    template <class... T>
    void row(const T&... v)
    {
        bool first = true;
        ((os_ << (first ? "" : ",") << v, first = false), ...);
        os_ << '\n';
    }

    std::ostream& stream() { return os_; }

private:
    std::ofstream os_;
};

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot write " + path.string());
    os << text;
}

void prepare(const RunConfig& c, const fs::path& out)
{
    fs::create_directories(out);
    write_text(out / "resolved_config.json", resolved_json(c).dump(2) + "\n");
}

double max_abs_diff(const ScalarCoeffs& a, const ScalarCoeffs& b)
{
    double e = 0.0;
    for (size_t i = 0; i < a.c.size(); ++i)
        e = std::max(e, std::abs(a.c[i] - b.c[i]));
    return e;
}

double max_abs(const ScalarCoeffs& a)
{
    double e = 0.0;
    for (const cplx& z : a.c)
        e = std::max(e, std::abs(z));
    return e;
}

// max |<Y_n^m, Y_n'^m> - δ| under the grid quadrature; other m pairs vanish by the FFT
double orthonormality_error(int p)
{
    const Sht& t = sht(p);
    const SphGrid& g = t.grid();
    double e = 0.0;
    for (int m = 0; m <= p; ++m)
        for (int n = m; n <= p; ++n)
            for (int k = n; k <= p; ++k) {
                double s = 0.0;
                for (int j = 0; j < g.nlat(); ++j)
                    s += g.nlon() * g.weight(j) * t.legendre(j, n, m) * t.legendre(j, k, m);
                e = std::max(e, std::abs(s - (n == k ? 1.0 : 0.0)));
            }
    return e;
}

ScalarCoeffs coeffs_from(const std::vector<cplx>& v, int p, const std::string& what)
{
    int q = 0;
    while ((q + 1) * (q + 1) < static_cast<int>(v.size()))
        ++q;
    if (v.empty())
        return ScalarCoeffs(p);
    if ((q + 1) * (q + 1) != static_cast<int>(v.size()))
        throw ConfigError(what + ": coefficient count must be (p+1)^2");
    ScalarCoeffs c(q);
    c.c = v;
    return c.resized(p);
}

void write_densities(const fs::path& path, const std::vector<VectorCoeffsVWX>& dens)
{
    Csv csv(path, {"body", "channel", "n", "m", "re", "im"});
    for (size_t b = 0; b < dens.size(); ++b)
        for (const auto& [name, ch] : {std::pair{"V", &dens[b].v}, std::pair{"W", &dens[b].w}, std::pair{"X", &dens[b].x}})
            for (int n = 0; n <= ch->p; ++n)
                for (int m = -n; m <= n; ++m)
                    csv.row(b, name, n, m, (*ch)(n, m).real(), (*ch)(n, m).imag());
}

void write_vector_probes(const fs::path& path, const std::vector<Vec3>& pts, const FieldValues& u)
{
    Csv csv(path, {"x", "y", "z", "ux", "uy", "uz"});
    for (size_t i = 0; i < pts.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        csv.row(pts[i](0), pts[i](1), pts[i](2), u(r, 0).real(), u(r, 1).real(), u(r, 2).real());
    }
}

void write_forces(const fs::path& path, const std::vector<BodyForce>& f)
{
    Csv csv(path, {"id", "Fx", "Fy", "Fz", "Tx", "Ty", "Tz"});
    for (size_t k = 0; k < f.size(); ++k)
        csv.row(k, f[k].F(0), f[k].F(1), f[k].F(2), f[k].T(0), f[k].T(1), f[k].T(2));
}

void write_motions(const fs::path& path, const std::vector<RigidMotion>& m, const std::vector<double>& residuals = {})
{
    std::vector<std::string> header{"id", "vx", "vy", "vz", "wx", "wy", "wz"};
    if (!residuals.empty())
        header.push_back("rigid_residual");
    Csv csv(path, header);
    for (size_t k = 0; k < m.size(); ++k) {
        csv.stream() << k << ',' << m[k].v(0) << ',' << m[k].v(1) << ',' << m[k].v(2) << ',' << m[k].omega(0) << ','
                     << m[k].omega(1) << ',' << m[k].omega(2);
        if (!residuals.empty())
            csv.stream() << ',' << residuals[k];
        csv.stream() << '\n';
    }
}

}  // namespace

int cmd_transform(const RunConfig& c, const fs::path& out, std::ostream& log)
{
    prepare(c, out);
    Csv csv(out / "transform.csv", {"p", "scalar_roundtrip", "vector_roundtrip", "orthonormality"});
    for (int p : c.transform.orders) {
        const Sht& t = sht(p);
        const ScalarCoeffs a = synthetic_scalar(p, c.seed, 0.0);
        const double es = max_abs_diff(t.forward(t.inverse(a)), a) / max_abs(a);

        const VectorCoeffsVWX v = synthetic_vector(p, c.seed + 1, 0.0);
        GridValues fr, ft, fp;
        t.vinverse(v, fr, ft, fp);
        const VectorCoeffsVWX w = t.vforward(fr, ft, fp);
        const double ev = std::max({max_abs_diff(w.v, v.v), max_abs_diff(w.w, v.w), max_abs_diff(w.x, v.x)}) /
                          std::max({max_abs(v.v), max_abs(v.w), max_abs(v.x)});
        const double eo = orthonormality_error(p);
        csv.row(p, es, ev, eo);
        log << "transform p=" << p << " scalar " << es << " vector " << ev << " orthonormality " << eo << '\n';
    }
    return kOk;
}

int cmd_spectra(const RunConfig& c, const fs::path& out, std::ostream& log)
{
    prepare(c, out);
    Csv csv(out / "spectra.csv", {"kind", "channel", "n", "value"});
    for (OperatorKind k : all_kinds()) {
        const std::vector<Channel> channels =
            is_laplace(k) ? std::vector<Channel>{Channel::Y} : std::vector<Channel>{Channel::V, Channel::W, Channel::X};
        for (Channel ch : channels)
            for (int n = 0; n <= c.spectra.max_degree; ++n) {
                if (n == 0 && (ch == Channel::W || ch == Channel::X))
                    continue;  // W_0 and X_0 vanish identically
                csv.row(to_string(k), to_string(ch), n, eigenvalue(k, n, ch));
            }
    }
    log << "spectra up to n=" << c.spectra.max_degree << '\n';
    return kOk;
}

int cmd_convergence(const RunConfig& c, const fs::path& out, std::ostream& log)
{
    prepare(c, out);
    const ConvergenceConfig& v = c.convergence;
    std::vector<ErrorRow> rows;
    if (v.mode == "operator") {
        OperatorSweep s;
        s.kinds.clear();
        for (const std::string& k : v.kinds)
            s.kinds.push_back(parse_kind(k));
        s.orders = v.orders;
        s.distances = distance_ladder(v.max_exponent);
        s.directions = v.directions;
        s.decay = v.decay;
        s.seed = c.seed;
        rows = operator_convergence(s);
    } else {
        BieSweep s;
        s.orders = v.bie_orders;
        s.distances = distance_ladder(v.max_exponent);
        s.directions = v.bie_directions;
        s.gap = v.gap;
        s.offset = v.offset;
        s.reference_order = v.reference_order;
        s.tol = v.bie_tol;
        s.seed = c.seed;
        rows = bie_convergence(s);
    }
    Csv csv(out / "convergence.csv",
            {"mode", "quantity", "p", "distance", "smooth_error", "near_error", "log10_smooth", "log10_near"});
    auto lg = [](double e) { return std::log10(std::max(e, 1e-300)); };
    std::map<std::pair<std::string, int>, double> worst;
    for (const ErrorRow& r : rows) {
        csv.row(v.mode, r.quantity, r.p, r.distance, r.smooth, r.near, lg(r.smooth), lg(r.near));
        double& w = worst[{r.quantity, r.p}];
        w = std::max(w, r.near);
    }
    for (const auto& [key, e] : worst)
        log << "convergence " << key.first << " p=" << key.second << " worst near-path error " << e << '\n';
    return kOk;
}

int cmd_solve(const RunConfig& c, const fs::path& out, std::ostream& log)
{
    prepare(c, out);
    const Suspension s = c.suspension();
    const SolveConfig& sc = c.solve;
    std::unique_ptr<FarFieldBackend> far = make_far_backend(c.far_backend);
    ProblemOptions opt = c.problem_options();
    opt.eval.far = far.get();
    const fs::path solve_csv = out / "solve.csv", probes_csv = out / "probes.csv";

    GmresReport report;
    try {
        if (sc.problem == "porous") {
            const Vec3 U = sc.u_inf;
            const VelocityField u_inf = [U](const Vec3&) { return U; };
            const PorousSolution sol = solve_porous(s, u_inf, opt);
            report = sol.report;
            write_forces(solve_csv, sol.drag);
            if (!sc.probes.empty())
                write_vector_probes(probes_csv, sc.probes, porous_velocity(s, sol, u_inf, sc.probes));
            if (sc.write_densities)
                write_densities(out / "densities.csv", sol.mu);
        } else if (sc.problem == "mobility") {
            const MobilitySolution sol = solve_mobility(s, sc.forces, opt);
            report = sol.report;
            write_motions(solve_csv, sol.motions, sol.rigid_residuals);
            if (!sc.probes.empty())
                write_vector_probes(probes_csv, sc.probes, mobility_velocity(s, sol, sc.probes));
            if (sc.write_densities)
                write_densities(out / "densities.csv", sol.mu);
        } else if (sc.problem == "resistance") {
            const ResistanceSolution sol = solve_resistance(s, sc.motions, opt);
            report = sol.report;
            write_forces(solve_csv, sol.forces);
            if (!sc.probes.empty())
                write_vector_probes(probes_csv, sc.probes, resistance_velocity(s, sol, sc.probes));
            if (sc.write_densities)
                write_densities(out / "densities.csv", sol.psi);
        } else if (sc.problem == "squirmer") {
            std::vector<VectorCoeffsVWX> slips;
            for (int k = 0; k < s.size(); ++k) {
                if (sc.slips.empty()) {
                    slips.push_back(squirmer_slip(s.spheres[k], sc.orientations[k].normalized(), sc.squirmer.B1,
                                                  sc.squirmer.B2, s.p));
                } else {
                    const std::string what = "config.solve.slips[" + std::to_string(k) + "]";
                    VectorCoeffsVWX v(s.p);
                    v.v = coeffs_from(sc.slips[k].v, s.p, what + ".v");
                    v.w = coeffs_from(sc.slips[k].w, s.p, what + ".w");
                    v.x = coeffs_from(sc.slips[k].x, s.p, what + ".x");
                    slips.push_back(v);
                }
            }
            const SquirmerSolution sol = solve_squirmer(s, slips, opt);
            report = sol.report;
            write_motions(solve_csv, sol.motions);
            if (!sc.probes.empty())
                write_vector_probes(probes_csv, sc.probes, squirmer_velocity(s, sol, sc.probes));
            if (sc.write_densities)
                write_densities(out / "densities.csv", sol.mu);
        } else {
            const MagneticSolution sol = magneto_solve(s, sc.magnetic, opt);
            report = sol.report;
            const std::vector<BodyForce> f = magnetic_forces(sol, opt);
            Csv csv(solve_csv, {"id", "Fx", "Fy", "Fz", "Tx", "Ty", "Tz", "mx", "my", "mz"});
            for (int k = 0; k < s.size(); ++k) {
                const Vec3 m = dipole_moment(s.spheres[k], sol.q[k]);
                csv.row(k, f[k].F(0), f[k].F(1), f[k].F(2), f[k].T(0), f[k].T(1), f[k].T(2), m(0), m(1), m(2));
            }
            if (!sc.probes.empty()) {
                const FieldValues phi = sol.potential(sc.probes), H = sol.field(sc.probes);
                Csv pc(probes_csv, {"x", "y", "z", "phi", "Hx", "Hy", "Hz"});
                for (size_t i = 0; i < sc.probes.size(); ++i) {
                    const auto r = static_cast<Eigen::Index>(i);
                    const Vec3& x = sc.probes[i];
                    pc.row(x(0), x(1), x(2), phi(r, 0).real(), H(r, 0).real(), H(r, 1).real(), H(r, 2).real());
                }
            }
        }
    } catch (const SolverError& e) {
        write_text(out / "gmres.log", format_gmres_log(e.report));
        log << "solve " << sc.problem << " failed: " << e.what() << '\n';
        return kSolverFailure;
    }
    write_text(out / "gmres.log", format_gmres_log(report));
    log << "solve " << sc.problem << ": " << report.iterations << " iterations, relative residual "
        << report.relative_residual << '\n';
    return kOk;
}

int cmd_bench(const RunConfig& c, const fs::path& out, std::ostream& log)
{
    prepare(c, out);
    const BenchConfig& b = c.bench;
    {
        Csv csv(out / "bench_near.csv", {"p", "fft_seconds", "direct_seconds", "speedup", "max_difference"});
        for (int p : b.near_orders) {
            const NearTiming t = time_near_paths(p, b.repetitions, c.seed);
            csv.row(p, t.fft_seconds, t.direct_seconds, t.direct_seconds / t.fft_seconds, t.max_difference);
            log << "near p=" << p << " fft " << t.fft_seconds << " s, direct " << t.direct_seconds << " s\n";
        }
    }

    Csv csv(out / "bench_scaling.csv",
            {"kind", "far", "q", "polydisperse", "vertices_per_side", "bodies", "p", "seconds", "seconds_per_body"});
    Csv fit(out / "bench_fit.csv", {"kind", "far", "q", "p", "exponent"});
    for (const std::string& kname : b.kinds)
        for (const std::string& far : b.far_backends)
            for (int q : b.q)
                for (int p : b.orders) {
                    std::vector<double> nb, secs;
                    for (int n : b.vertices_per_side) {
                        const LatticeSpec spec{n, q, b.polydisperse, 2.0};
                        try {
                            const ApplyTiming t =
                                time_composite_apply(parse_kind(kname), spec, p, far, b.repetitions, c.seed);
                            csv.row(t.kind, t.far, q, b.polydisperse ? 1 : 0, n, t.bodies, p, t.seconds,
                                    t.seconds / t.bodies);
                            log << "apply " << kname << " far=" << far << " q=" << q << " p=" << p
                                << " bodies=" << t.bodies << " " << t.seconds << " s\n";
                            nb.push_back(t.bodies);
                            secs.push_back(t.seconds);
                        } catch (const GeometryError& e) {
                            log << "skipped lattice n=" << n << " q=" << q << ": " << e.what() << '\n';
                        }
                    }
                    if (nb.size() >= 2)
                        fit.row(kname, far, q, p, loglog_slope(nb, secs));
                }
    return kOk;
}

int cmd_simulate(const RunConfig& c, const fs::path& out, std::ostream& log)
{
    prepare(c, out);
    const SimulateConfig& m = c.simulate;
    SimState state;
    if (!m.restart.empty()) {
        std::ifstream in(m.restart);
        if (!in)
            throw ConfigError("config.simulate.restart: cannot open " + m.restart);
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        state = parse_restart(text);
    } else {
        const std::vector<Sphere> sp = c.spheres();
        for (size_t k = 0; k < sp.size(); ++k) {
            BodyState b;
            b.id = sp[k].id;
            b.center = sp[k].center;
            b.radius = sp[k].radius;
            b.orientation = m.orientations[k].normalized();
            state.bodies.push_back(b);
        }
    }

    DynamicsOptions opt;
    opt.p = c.p;
    opt.eta = c.eta;
    opt.integrator = m.integrator == "rk4" ? Integrator::RK4 : Integrator::Euler;
    opt.solver = c.problem_options();
    std::unique_ptr<FarFieldBackend> far = make_far_backend(c.far_backend);
    opt.solver.eval.far = far.get();

    std::ofstream traj(out / "trajectory.csv");
    if (!traj)
        throw std::runtime_error("cannot write trajectory.csv");
    write_trajectory_header(traj);
    write_trajectory_rows(traj, state);
    int code = kOk;
    for (int i = 0; i < m.steps; ++i) {
        try {
            state = m.kind == "mhd" ? mhd_step(state, m.magnetic, m.dt, opt)
                                    : squirmer_step(state, m.squirmer, m.dt, opt);
        } catch (const GeometryError& e) {
            log << "simulate halted: " << e.what() << '\n';
            code = kGeometryHalt;
            break;
        } catch (const SolverError& e) {
            write_text(out / "gmres.log", format_gmres_log(e.report));
            log << "simulate halted: " << e.what() << '\n';
            code = kSolverFailure;
            break;
        }
        if (state.step % m.output_every == 0 || i + 1 == m.steps)
            write_trajectory_rows(traj, state);
    }
    write_text(out / "restart.json", restart_json(state) + "\n");
    log << "simulate " << m.kind << ": reached step " << state.step << " at t=" << state.time << '\n';
    return code;
}

int run_command(const std::string& name, const RunConfig& c, const fs::path& out, std::ostream& log)
{
    if (name == "transform")
        return cmd_transform(c, out, log);
    if (name == "spectra")
        return cmd_spectra(c, out, log);
    if (name == "convergence")
        return cmd_convergence(c, out, log);
    if (name == "solve")
        return cmd_solve(c, out, log);
    if (name == "bench")
        return cmd_bench(c, out, log);
    if (name == "simulate")
        return cmd_simulate(c, out, log);
    throw std::invalid_argument("unknown subcommand " + name);
}

}  // namespace sbie::cli

#include "sbie/applications.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace sbie {

namespace {

constexpr double pi = std::numbers::pi;

const LayerCombo kLapS{true, 1.0, 0.0, 0.0};
const LayerCombo kLapK{true, 0.0, 0.0, 1.0};

Eigen::VectorXcd pack_scalar(const std::vector<ScalarCoeffs>& q)
{
    if (q.empty())
        return {};
    const int nc = num_coeffs(q.front().p);
    Eigen::VectorXcd x(static_cast<Eigen::Index>(q.size()) * nc);
    for (size_t k = 0; k < q.size(); ++k)
        for (int i = 0; i < nc; ++i)
            x(static_cast<Eigen::Index>(k) * nc + i) = q[k].c[i];
    return x;
}

std::vector<ScalarCoeffs> unpack_scalar(const Eigen::VectorXcd& x, int nb, int p)
{
    const int nc = num_coeffs(p);
    std::vector<ScalarCoeffs> q(nb, ScalarCoeffs(p));
    for (int k = 0; k < nb; ++k)
        for (int i = 0; i < nc; ++i)
            q[k].c[i] = x(static_cast<Eigen::Index>(k) * nc + i);
    return q;
}

TargetBatch batch_of(const std::vector<Vec3>& points, const std::vector<Vec3>& normals = {})
{
    TargetBatch t;
    t.points = points;
    t.normals = normals;
    return t;
}

}  // namespace

double MagneticParams::eta_m() const { return (mu_particle - mu_fluid) / (mu_particle + mu_fluid); }

void MagneticParams::validate() const
{
    if (!(mu_particle > 0.0) || !(mu_fluid > 0.0))
        throw std::invalid_argument("permeabilities must be positive");
    if (!H0.allFinite())
        throw std::invalid_argument("H0 must be finite");
}

MagneticSolution magneto_solve(const Suspension& s, const MagneticParams& params, const ProblemOptions& opt)
{
    params.validate();
    s.validate();
    const double eta = params.eta_m();
    const int nb = s.size(), p = s.p;

    std::vector<ScalarCoeffs> rhs(nb);
    for (int k = 0; k < nb; ++k) {
        const SurfaceNodes nodes = surface_nodes(s.spheres[k], p);
        FieldValues v(static_cast<Eigen::Index>(nodes.points.size()), 1);
        for (size_t i = 0; i < nodes.points.size(); ++i)
            v(i, 0) = eta * params.H0.dot(nodes.normals[i]);
        rhs[k] = project_scalar(v, p);
    }

    CompositeOptions co = opt.eval;
    co.self_limit = SurfaceLimit::PrincipalValue;
    const LayerCombo combo{true, 0.0, 0.0, eta};
    auto apply = [&](const Eigen::VectorXcd& x) {
        const std::vector<ScalarCoeffs> q = unpack_scalar(x, nb, p);
        if (eta == 0.0)
            return Eigen::VectorXcd(0.5 * x);
        return Eigen::VectorXcd(0.5 * x + pack_scalar(composite_apply(combo, s, q, co)));
    };

    MagneticSolution sol;
    sol.suspension = s;
    sol.params = params;
    const Eigen::VectorXcd x = gmres(apply, pack_scalar(rhs), opt.gmres, sol.report);
    require_converged(sol.report, "magnetostatic");
    sol.q = unpack_scalar(x, nb, p);
    return sol;
}

FieldValues MagneticSolution::potential(const std::vector<Vec3>& points) const
{
    FieldValues phi = evaluate_field(kLapS, suspension, q, batch_of(points));
    for (size_t i = 0; i < points.size(); ++i)
        phi(i, 0) -= params.H0.dot(points[i]);
    return phi;
}

FieldValues MagneticSolution::field(const std::vector<Vec3>& points) const
{
    FieldValues H(static_cast<Eigen::Index>(points.size()), 3);
    for (int c = 0; c < 3; ++c) {
        // the flux with normal e_c is the c-th gradient component
        const std::vector<Vec3> normals(points.size(), Vec3::Unit(c));
        const FieldValues g = evaluate_field(kLapK, suspension, q, batch_of(points, normals));
        for (size_t i = 0; i < points.size(); ++i)
            H(i, c) = params.H0(c) - g(i, 0);
    }
    return H;
}

Vec3 dipole_moment(const Sphere& s, const ScalarCoeffs& q)
{
    const SurfaceNodes nodes = surface_nodes(s, q.p);
    const FieldValues v = synthesize(q);
    Vec3 m = Vec3::Zero();
    for (size_t i = 0; i < nodes.points.size(); ++i)
        m += nodes.weights[i] * v(i, 0).real() * (nodes.points[i] - s.center);
    return m;
}

namespace {

// Maxwell stress jump on every sphere, from one set of composite applies.
std::vector<FieldValues> maxwell_tractions(const MagneticSolution& sol, const ProblemOptions& opt)
{
    const Suspension& s = sol.suspension;
    const int p = s.p;
    CompositeOptions co = opt.eval;
    co.self_limit = SurfaceLimit::Exterior;
    const std::vector<ScalarCoeffs> phi_s = composite_apply(kLapS, s, sol.q, co);
    const std::vector<ScalarCoeffs> flux_ext = composite_apply(kLapK, s, sol.q, co);
    co.self_limit = SurfaceLimit::Interior;
    const std::vector<ScalarCoeffs> flux_int = composite_apply(kLapK, s, sol.q, co);

    const Vec3& H0 = sol.params.H0;
    const double mu_out = sol.params.mu_fluid, mu_in = sol.params.mu_particle;
    std::vector<FieldValues> out(s.size());
    for (int k = 0; k < s.size(); ++k) {
        const Sphere& sp = s.spheres[k];
        const SurfaceNodes nodes = surface_nodes(sp, p);
        // surface gradient of the layer potentials: coefficients on ∇_Ω Y, divided by a
        VectorCoeffsYGX grad(p);
        for (size_t i = 0; i < grad.g.c.size(); ++i)
            grad.g.c[i] = phi_s[k].c[i] / sp.radius;
        const FieldValues gs = synthesize(to_vwx(grad));
        const FieldValues fe = synthesize(flux_ext[k]), fi = synthesize(flux_int[k]);
        FieldValues& t = out[k];
        t.resize(static_cast<Eigen::Index>(nodes.points.size()), 3);
        for (Eigen::Index i = 0; i < t.rows(); ++i) {
            const Vec3& n = nodes.normals[i];
            const Vec3 tang = gs.row(i).real().transpose();
            // H = H0 - ∇S[q]; only the normal derivative of S jumps
            const Vec3 Ht = (H0 - H0.dot(n) * n) - (tang - tang.dot(n) * n);
            const Vec3 He = Ht + (H0.dot(n) - fe(i, 0).real()) * n;
            const Vec3 Hi = Ht + (H0.dot(n) - fi(i, 0).real()) * n;
            const Vec3 te = mu_out * (He * He.dot(n) - 0.5 * He.squaredNorm() * n);
            const Vec3 ti = mu_in * (Hi * Hi.dot(n) - 0.5 * Hi.squaredNorm() * n);
            t.row(i) = (te - ti).cast<cplx>().transpose();
        }
    }
    return out;
}

}  // namespace

FieldValues maxwell_traction(const MagneticSolution& sol, int body, const ProblemOptions& opt)
{
    if (body < 0 || body >= sol.suspension.size())
        throw std::out_of_range("body index out of range");
    return maxwell_tractions(sol, opt)[body];
}

std::vector<BodyForce> magnetic_forces(const MagneticSolution& sol, const ProblemOptions& opt)
{
    const std::vector<FieldValues> t = maxwell_tractions(sol, opt);
    std::vector<BodyForce> out;
    for (int k = 0; k < sol.suspension.size(); ++k)
        out.push_back(net_force_torque(sol.suspension.spheres[k], t[k], sol.suspension.p));
    return out;
}

// ---------------------------------------------------------------- dynamics

Suspension suspension_of(const SimState& state, int p, double eta)
{
    Suspension s;
    s.p = p;
    s.eta = eta;
    for (const BodyState& b : state.bodies)
        s.spheres.push_back(Sphere{b.center, b.radius, b.id});
    return s;
}

std::vector<RigidMotion> mhd_velocities(const SimState& state, const MagneticParams& params,
                                        const DynamicsOptions& opt)
{
    const Suspension s = suspension_of(state, opt.p, opt.eta);
    const MagneticSolution mag = magneto_solve(s, params, opt.solver);
    const std::vector<BodyForce> f = magnetic_forces(mag, opt.solver);
    return solve_mobility(s, f, opt.solver).motions;
}

std::vector<RigidMotion> squirmer_velocities(const SimState& state, const SquirmerParams& params,
                                             const DynamicsOptions& opt)
{
    const Suspension s = suspension_of(state, opt.p, opt.eta);
    std::vector<VectorCoeffsVWX> slips;
    for (size_t k = 0; k < state.bodies.size(); ++k)
        slips.push_back(squirmer_slip(s.spheres[k], state.bodies[k].orientation, params.B1, params.B2, s.p));
    return solve_squirmer(s, slips, opt.solver).motions;
}

namespace {

using VelocityFn = std::function<std::vector<RigidMotion>(const SimState&)>;

Vec3 rotate_by(const Vec3& e, const Vec3& w, double dt)
{
    const double angle = w.norm() * dt;
    if (angle == 0.0)
        return e;
    return (Eigen::AngleAxisd(angle, w.normalized()) * e).normalized();
}

void check_geometry(const SimState& s, int step)
{
    try {
        suspension_of(s, 1, 1.0).validate();
    } catch (const GeometryError& e) {
        throw GeometryError("step " + std::to_string(step) + ": " + e.what());
    }
}

// base + h * (stage derivative), the stage derivative taken at `stage`
SimState advance(const SimState& base, const SimState& stage, const std::vector<RigidMotion>& m, double h)
{
    SimState out = base;
    for (size_t k = 0; k < base.bodies.size(); ++k) {
        out.bodies[k].center += h * m[k].v;
        out.bodies[k].orientation += h * m[k].omega.cross(stage.bodies[k].orientation);
    }
    return out;
}

SimState step_with(const SimState& state, double dt, const DynamicsOptions& opt, const VelocityFn& f)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("time step must be positive");
    const int next = state.step + 1;
    check_geometry(state, state.step);
    SimState out = state;
    std::vector<RigidMotion> eff;
    if (opt.integrator == Integrator::Euler) {
        eff = f(state);
        for (size_t k = 0; k < state.bodies.size(); ++k) {
            out.bodies[k].center += dt * eff[k].v;
            out.bodies[k].orientation = rotate_by(state.bodies[k].orientation, eff[k].omega, dt);
        }
    } else {
        const auto k1 = f(state);
        SimState s2 = advance(state, state, k1, 0.5 * dt);
        check_geometry(s2, next);
        const auto k2 = f(s2);
        SimState s3 = advance(state, s2, k2, 0.5 * dt);
        check_geometry(s3, next);
        const auto k3 = f(s3);
        SimState s4 = advance(state, s3, k3, dt);
        check_geometry(s4, next);
        const auto k4 = f(s4);
        const auto stage_omega = [&](const std::vector<RigidMotion>& k, const SimState& st, size_t b) {
            return Vec3(k[b].omega.cross(st.bodies[b].orientation));
        };
        eff.resize(state.bodies.size());
        for (size_t b = 0; b < state.bodies.size(); ++b) {
            eff[b].v = (k1[b].v + 2.0 * k2[b].v + 2.0 * k3[b].v + k4[b].v) / 6.0;
            eff[b].omega = (k1[b].omega + 2.0 * k2[b].omega + 2.0 * k3[b].omega + k4[b].omega) / 6.0;
            out.bodies[b].center += dt * eff[b].v;
            const Vec3 de = (stage_omega(k1, state, b) + 2.0 * stage_omega(k2, s2, b) +
                             2.0 * stage_omega(k3, s3, b) + stage_omega(k4, s4, b)) /
                            6.0;
            out.bodies[b].orientation = (state.bodies[b].orientation + dt * de).normalized();
        }
    }
    for (size_t b = 0; b < state.bodies.size(); ++b)
        out.bodies[b].motion = eff[b];
    out.step = next;
    out.time = state.time + dt;
    check_geometry(out, next);
    return out;
}

}  // namespace

SimState mhd_step(const SimState& state, const MagneticParams& params, double dt, const DynamicsOptions& opt)
{
    return step_with(state, dt, opt, [&](const SimState& s) { return mhd_velocities(s, params, opt); });
}

SimState squirmer_step(const SimState& state, const SquirmerParams& params, double dt, const DynamicsOptions& opt)
{
    return step_with(state, dt, opt, [&](const SimState& s) { return squirmer_velocities(s, params, opt); });
}

void write_trajectory_header(std::ostream& os)
{
    os << "step,time,id,x,y,z,ox,oy,oz,vx,vy,vz,wx,wy,wz\n";
}

void write_trajectory_rows(std::ostream& os, const SimState& state)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(17);
    for (const BodyState& b : state.bodies) {
        os << state.step << ',' << state.time << ',' << b.id;
        for (const Vec3* v : {&b.center, &b.orientation, &b.motion.v, &b.motion.omega})
            os << ',' << (*v)(0) << ',' << (*v)(1) << ',' << (*v)(2);
        os << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v(0), v(1), v(2)}); }

Vec3 json_vec(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("restart: expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

std::string restart_json(const SimState& state)
{
    nlohmann::json j;
    j["format"] = "sbie-restart";
    j["version"] = 1;
    j["step"] = state.step;
    j["time"] = state.time;
    j["bodies"] = nlohmann::json::array();
    for (const BodyState& b : state.bodies)
        j["bodies"].push_back({{"id", b.id},
                               {"center", vec_json(b.center)},
                               {"radius", b.radius},
                               {"orientation", vec_json(b.orientation)},
                               {"v", vec_json(b.motion.v)},
                               {"omega", vec_json(b.motion.omega)}});
    return j.dump(2);
}

SimState parse_restart(const std::string& text)
{
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "sbie-restart" || j.value("version", 0) != 1)
        throw std::invalid_argument("restart: unsupported format or version");
    SimState s;
    s.step = j.at("step").get<int>();
    s.time = j.at("time").get<double>();
    for (const auto& b : j.at("bodies")) {
        BodyState body;
        body.id = b.at("id").get<int>();
        body.center = json_vec(b.at("center"));
        body.radius = b.at("radius").get<double>();
        body.orientation = json_vec(b.at("orientation"));
        body.motion.v = json_vec(b.at("v"));
        body.motion.omega = json_vec(b.at("omega"));
        s.bodies.push_back(body);
    }
    return s;
}

}  // namespace sbie

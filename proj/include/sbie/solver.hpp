#pragma once

#include "sbie/composite.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbie {

struct GmresOptions {
    double tol = 1e-10;
    int restart = 50;
    int max_iterations = 1000;
};

struct GmresReport {
    bool converged = false;
    int iterations = 0;
    double relative_residual = 0.0;
    std::vector<double> history;  // relative residual estimate after each iteration, starting at 1
    std::string status;
};

struct SolverError : std::runtime_error {
    GmresReport report;
    SolverError(const std::string& what, GmresReport r) : std::runtime_error(what), report(std::move(r)) {}
};

using LinearOperator = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

// Restarted GMRES (modified Gram-Schmidt, Givens rotations) from a zero initial guess.
// Non-convergence is reported in `report`, not thrown.
Eigen::VectorXcd gmres(const LinearOperator& A, const Eigen::VectorXcd& b, const GmresOptions& opt,
                       GmresReport& report);

// Plain-text residual log.
std::string format_gmres_log(const GmresReport& r);

struct BodyForce {
    Vec3 F = Vec3::Zero(), T = Vec3::Zero();
};

struct RigidMotion {
    Vec3 v = Vec3::Zero(), omega = Vec3::Zero();
};

// Per-sphere coefficient blocks, v then w then x, optionally followed by 6 real-valued rigid-motion
// unknowns per body (v, omega).
Eigen::VectorXcd pack(const std::vector<VectorCoeffsVWX>& blocks);
std::vector<VectorCoeffsVWX> unpack(const Eigen::VectorXcd& x, int nb, int p);
int block_size(int p);

// u(y) = v + omega × (y - c) on the sphere, as coefficients (W_1 and X_1 only).
VectorCoeffsVWX rigid_field(const Sphere& s, const RigidMotion& m, int p);
// ∫ μ dΓ and ∫ (y - c) × μ dΓ (real parts) over the sphere.
BodyForce density_moments(const Sphere& s, const VectorCoeffsVWX& mu);

// ρ = F/(4πa²) + 3/(8πa⁴) T × (y - c), with ∫ρ = F and ∫(y - c) × ρ = T.
VectorCoeffsVWX rho_from_forces(const Sphere& s, const BodyForce& f, int p);

// Least-squares rigid motion of a velocity sampled on the sphere grid (rows j*(2p+2)+k, three
// Cartesian columns). `residual` receives the max pointwise deviation from the fit.
RigidMotion extract_rigid_motion(const Sphere& s, const FieldValues& u, int p, double* residual = nullptr);
RigidMotion extract_rigid_motion(const Sphere& s, const VectorCoeffsVWX& u, double* residual = nullptr);

// Quadrature of a traction sampled on the sphere grid.
BodyForce net_force_torque(const Sphere& s, const FieldValues& traction, int p);

struct ProblemOptions {
    GmresOptions gmres;
    CompositeOptions eval;
};

// Porous media: u = u_inf + Σ(S + D)[μ], no slip on every sphere.
using VelocityField = std::function<Vec3(const Vec3&)>;
Eigen::VectorXcd apply_porous(const Suspension& s, const Eigen::VectorXcd& mu, const ProblemOptions& opt = {});
Eigen::VectorXcd rhs_porous(const Suspension& s, const VelocityField& u_inf);

// Mobility: u = ΣS[μ + ρ]; K is taken with its interior limit.
Eigen::VectorXcd apply_mobility(const Suspension& s, const Eigen::VectorXcd& mu, const ProblemOptions& opt = {});
Eigen::VectorXcd rhs_mobility(const Suspension& s, const std::vector<BodyForce>& forces,
                              const ProblemOptions& opt = {});

// Resistance: u = Σ(D + N)[ψ], N the Stokeslet and rotlet at each centre.
Eigen::VectorXcd apply_resistance(const Suspension& s, const Eigen::VectorXcd& psi, const ProblemOptions& opt = {});
Eigen::VectorXcd rhs_resistance(const Suspension& s, const std::vector<RigidMotion>& motions);

// Squirmers: unknowns (μ, v, ω); surface rows (1/2 + Σ(S + D))[μ] - v - ω × (x - c), closure rows
// ∫μ = 0 and ∫(y - c) × μ = 0, scaled by 1/(4πa²) and 3/(8πa⁴).
Eigen::VectorXcd apply_squirmer(const Suspension& s, const Eigen::VectorXcd& x, const ProblemOptions& opt = {});
Eigen::VectorXcd rhs_squirmer(const Suspension& s, const std::vector<VectorCoeffsVWX>& slips);
// Tangential slip (B1 sinθ + B2 sinθ cosθ) e_θ, θ measured from the unit axis e.
VectorCoeffsVWX squirmer_slip(const Sphere& s, const Vec3& axis, double B1, double B2, int p);

// Completion flows of ψ (Stokeslet + rotlet per body) on every sphere.
std::vector<VectorCoeffsVWX> completion_flow(const Suspension& s, const std::vector<VectorCoeffsVWX>& psi);
// Completion L_k on each body's own surface.
std::vector<VectorCoeffsVWX> rigid_completion(const Suspension& s, const std::vector<VectorCoeffsVWX>& mu);

struct PorousSolution {
    std::vector<VectorCoeffsVWX> mu;
    std::vector<BodyForce> drag;  // hydrodynamic force and torque on each body
    GmresReport report;
};
PorousSolution solve_porous(const Suspension& s, const VelocityField& u_inf, const ProblemOptions& opt = {});

struct MobilitySolution {
    std::vector<VectorCoeffsVWX> mu, rho;
    std::vector<RigidMotion> motions;
    std::vector<double> rigid_residuals;
    GmresReport report;
};
MobilitySolution solve_mobility(const Suspension& s, const std::vector<BodyForce>& forces,
                                const ProblemOptions& opt = {});

struct ResistanceSolution {
    std::vector<VectorCoeffsVWX> psi;
    std::vector<BodyForce> forces;  // applied force and torque that sustain the motion
    GmresReport report;
};
ResistanceSolution solve_resistance(const Suspension& s, const std::vector<RigidMotion>& motions,
                                    const ProblemOptions& opt = {});

struct SquirmerSolution {
    std::vector<VectorCoeffsVWX> mu;
    std::vector<RigidMotion> motions;
    GmresReport report;
};
SquirmerSolution solve_squirmer(const Suspension& s, const std::vector<VectorCoeffsVWX>& slips,
                                const ProblemOptions& opt = {});

// Velocity in the fluid for each solved problem.
FieldValues porous_velocity(const Suspension& s, const PorousSolution& sol, const VelocityField& u_inf,
                            const std::vector<Vec3>& points);
FieldValues mobility_velocity(const Suspension& s, const MobilitySolution& sol, const std::vector<Vec3>& points);
FieldValues resistance_velocity(const Suspension& s, const ResistanceSolution& sol, const std::vector<Vec3>& points);
FieldValues squirmer_velocity(const Suspension& s, const SquirmerSolution& sol, const std::vector<Vec3>& points);

// Throws SolverError when the report did not converge.
void require_converged(const GmresReport& r, const std::string& problem);

}  // namespace sbie

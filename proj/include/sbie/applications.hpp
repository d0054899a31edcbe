#pragma once

#include "sbie/solver.hpp"

#include <iosfwd>
#include <string>

namespace sbie {

// ---------------------------------------------------------------- magnetostatics

struct MagneticParams {
    Vec3 H0 = Vec3::Zero();
    double mu_particle = 1.0, mu_fluid = 1.0;

    // (mu_particle - mu_fluid)/(mu_particle + mu_fluid)
    double eta_m() const;
    void validate() const;
};

struct MagneticSolution {
    Suspension suspension;
    MagneticParams params;
    std::vector<ScalarCoeffs> q;
    GmresReport report;

    // φ(x) = -H0·x + Σ S^L[q]
    FieldValues potential(const std::vector<Vec3>& points) const;
    // H = -∇φ, three columns
    FieldValues field(const std::vector<Vec3>& points) const;
};

// Solves (1/2 + η K^L)[q] = η H0·n with K^L the principal value.
MagneticSolution magneto_solve(const Suspension& s, const MagneticParams& params, const ProblemOptions& opt = {});

// ∫ q (y - c) dΓ: the dipole moment of the single layer on one sphere.
Vec3 dipole_moment(const Sphere& s, const ScalarCoeffs& q);

// Maxwell stress jump [T·n]_ext - [T·n]_int on the grid of sphere `body`,
// T = μ_side (H H^T - |H|²/2 I).
FieldValues maxwell_traction(const MagneticSolution& sol, int body, const ProblemOptions& opt = {});
std::vector<BodyForce> magnetic_forces(const MagneticSolution& sol, const ProblemOptions& opt = {});

// ---------------------------------------------------------------- dynamics

struct SquirmerParams {
    double B1 = 0.0, B2 = 0.0;
};

struct BodyState {
    int id = 0;
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
    Vec3 orientation = Vec3::UnitZ();
    RigidMotion motion;
};

struct SimState {
    int step = 0;
    double time = 0.0;
    std::vector<BodyState> bodies;
};

enum class Integrator { Euler, RK4 };

struct DynamicsOptions {
    int p = 8;
    double eta = 1.0;
    Integrator integrator = Integrator::Euler;
    ProblemOptions solver;
};

Suspension suspension_of(const SimState& state, int p, double eta);

// Rigid motions of every body in the current configuration.
std::vector<RigidMotion> mhd_velocities(const SimState& state, const MagneticParams& params,
                                        const DynamicsOptions& opt);
std::vector<RigidMotion> squirmer_velocities(const SimState& state, const SquirmerParams& params,
                                             const DynamicsOptions& opt);

// One step of the chosen integrator. Throws GeometryError naming the step when bodies overlap.
SimState mhd_step(const SimState& state, const MagneticParams& params, double dt, const DynamicsOptions& opt);
SimState squirmer_step(const SimState& state, const SquirmerParams& params, double dt, const DynamicsOptions& opt);

// Trajectory CSV: step,time,id,x,y,z,ox,oy,oz,vx,vy,vz,wx,wy,wz
void write_trajectory_header(std::ostream& os);
void write_trajectory_rows(std::ostream& os, const SimState& state);

// Restart files hold the full SimState as JSON.
std::string restart_json(const SimState& state);
SimState parse_restart(const std::string& json);

}  // namespace sbie

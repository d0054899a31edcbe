#pragma once

#include "sbie/lattice.hpp"
#include "sbie/solver.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>

namespace sbie {

// {1, 10^-0.5, ..., 10^-max_exponent}
std::vector<double> distance_ladder(double max_exponent = 6.0);

// Real fields of degree <= p with coefficients ~ N(0,1) (1+n)^-decay.
ScalarCoeffs synthetic_scalar(int p, std::uint64_t seed, double decay = 2.0);
VectorCoeffsVWX synthetic_vector(int p, std::uint64_t seed, double decay = 2.0);

std::vector<Vec3> random_directions(int count, std::mt19937_64& rng);

// One (quantity, p, distance) cell: max |error| / max |reference| over the shell targets.
struct ErrorRow {
    std::string quantity;
    int p = 0;
    double distance = 0.0;
    double smooth = 0.0, near = 0.0;
};

// Single unit sphere, synthetic density of degree <= p. The reference is the exact expansion of
// the density; the near path uses the coefficients recovered from its grid samples.
struct OperatorSweep {
    std::vector<OperatorKind> kinds{OperatorKind::StokesS, OperatorKind::StokesDplus, OperatorKind::StokesKplus};
    std::vector<int> orders{4, 8, 16};
    std::vector<double> distances = distance_ladder();
    int directions = 200;
    double decay = 2.0;
    std::uint64_t seed = 1;
};

std::vector<ErrorRow> operator_convergence(const OperatorSweep& sweep);

// Three spheres of radii 0.903, 0.510, 0.262 with Stokeslets inside. D[ψ] from the resistance
// form is compared with its closed form, S[μ] and K[μ] from the mobility form with a
// high-order solve.
struct BieSweep {
    std::vector<int> orders{4, 8, 16, 24};
    std::vector<double> distances = distance_ladder();
    int directions = 30;
    double gap = 0.5;     // surface gap between every pair
    double offset = 0.5;  // source distance from the centre, in radii
    int reference_order = 40;
    double tol = 1e-13;
    std::uint64_t seed = 1;
};

std::vector<Sphere> bie_spheres(double gap);
std::vector<ErrorRow> bie_convergence(const BieSweep& sweep);

// Median wall time of `reps` runs after one warm-up.
double median_seconds(const std::function<void()>& f, int reps);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct NearTiming {
    int p = 0;
    double fft_seconds = 0.0, direct_seconds = 0.0;
    double max_difference = 0.0;  // relative, between the two coefficient sets
};

// Stokes D from a unit sphere onto a nearby sphere, FFT against direct near path.
NearTiming time_near_paths(int p, int reps, std::uint64_t seed);

struct ApplyTiming {
    std::string kind;
    int p = 0, q = 0, vertices_per_side = 0, bodies = 0;
    bool polydisperse = false;
    std::string far;
    double seconds = 0.0;
};

ApplyTiming time_composite_apply(OperatorKind kind, const LatticeSpec& lattice, int p, const std::string& far,
                                 int reps, std::uint64_t seed);

}  // namespace sbie

#pragma once

#include "sbie/harmonics.hpp"
#include "sbie/spectra.hpp"

#include <stdexcept>
#include <vector>

namespace sbie {

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
    int id = 0;
};

// Spheres sharing one expansion order p. eta is the well-separation parameter.
struct Suspension {
    std::vector<Sphere> spheres;
    int p = 8;
    double eta = 1.0;

    // throws GeometryError on overlap or bad radii, std::invalid_argument on bad p / eta
    void validate() const;
    int size() const { return static_cast<int>(spheres.size()); }
};

struct TargetBatch {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty, or one unit normal per point

    bool has_normals() const { return !normals.empty(); }
    void validate() const;
    int size() const { return static_cast<int>(points.size()); }
};

// Rows are targets; one column for scalar kinds, three Cartesian columns for Stokes.
using FieldValues = Eigen::MatrixXcd;

// s S + d D + k K of one family. K is the flux (Laplace) or traction (Stokes) of S at a target
// with a given normal.
struct LayerCombo {
    bool laplace = false;
    double s = 0.0, d = 0.0, k = 0.0;

    static LayerCombo from_kind(OperatorKind kind);
    bool needs_normals() const { return k != 0.0; }
};

// Surface limit used for the sphere's own contribution.
enum class SurfaceLimit { Exterior, Interior, PrincipalValue };

// Grid nodes, outward normals and smooth-quadrature weights (including a^2) of a sphere.
struct SurfaceNodes {
    std::vector<Vec3> points, normals;
    std::vector<double> weights;
};
SurfaceNodes surface_nodes(const Sphere& s, int p);
TargetBatch grid_targets(const Sphere& s, int p, bool with_normals);

// Surface-to-surface distance, and point-to-surface distance for a batch (minimum over points).
double surface_distance(const Sphere& a, const Sphere& b);
double surface_distance(const Sphere& a, const TargetBatch& t);
// dist >= eta * max(diameters); a tie counts as well separated
bool well_separated(const Sphere& a, const Sphere& b, double eta);
bool well_separated(const Sphere& a, const TargetBatch& t, double eta);
// For every sphere, the indices j != i with |c_i - c_j| <= reach, ascending. Uses a uniform cell
// grid, so the cost is linear in the sphere count at bounded density.
std::vector<std::vector<int>> neighbor_candidates(const std::vector<Sphere>& spheres, double reach);
// Indices of the spheres that are not well separated from sphere i, ascending.
std::vector<std::vector<int>> near_lists(const std::vector<Sphere>& spheres, double eta);

// Weighted point sources: grid nodes with the quadrature weights folded into the densities
// (one column for Laplace, three Cartesian columns for Stokes).
struct PointSources {
    std::vector<Vec3> points, normals;
    FieldValues densities;

    int size() const { return static_cast<int>(points.size()); }
};
PointSources weighted_sources(const ScalarCoeffs& density, const Sphere& s);
PointSources weighted_sources(const VectorCoeffsVWX& density, const Sphere& s);

// Kernel sum over point sources; throws std::domain_error if a target coincides with a source.
FieldValues point_source_sum(const LayerCombo& combo, const PointSources& sources, const TargetBatch& targets);

// Discrete sum over the source grid. Targets must be well separated (not checked).
FieldValues smooth_quadrature_eval(const LayerCombo& combo, const ScalarCoeffs& density, const Sphere& src,
                                   const TargetBatch& targets);
FieldValues smooth_quadrature_eval(const LayerCombo& combo, const VectorCoeffsVWX& density, const Sphere& src,
                                   const TargetBatch& targets);
FieldValues smooth_quadrature_eval(OperatorKind kind, const ScalarCoeffs& density, const Sphere& src,
                                   const TargetBatch& targets);
FieldValues smooth_quadrature_eval(OperatorKind kind, const VectorCoeffsVWX& density, const Sphere& src,
                                   const TargetBatch& targets);

// Eigenvalue of the combination on the sphere's own surface (unit radius).
double self_eigenvalue(const LayerCombo& combo, SurfaceLimit limit, int n, Channel channel);

// Diagonal self interaction in coefficient space, scaled for the sphere radius.
ScalarCoeffs self_apply(const LayerCombo& combo, SurfaceLimit limit, const ScalarCoeffs& density, const Sphere& s);
VectorCoeffsVWX self_apply(const LayerCombo& combo, SurfaceLimit limit, const VectorCoeffsVWX& density,
                           const Sphere& s);
// Surface values at the grid nodes.
FieldValues self_eval(OperatorKind kind, const ScalarCoeffs& density, const Sphere& s);
FieldValues self_eval(OperatorKind kind, const VectorCoeffsVWX& density, const Sphere& s);

// Summation of the closed-form off-surface expansions at each target. Targets inside the source
// need interior = true; targets exactly on the surface use `on_surface` for the branch.
FieldValues near_eval_direct(const LayerCombo& combo, const ScalarCoeffs& density, const Sphere& src,
                             const TargetBatch& targets, bool interior = false,
                             Side on_surface = Side::Exterior);
FieldValues near_eval_direct(const LayerCombo& combo, const VectorCoeffsVWX& density, const Sphere& src,
                             const TargetBatch& targets, bool interior = false,
                             Side on_surface = Side::Exterior);
FieldValues near_eval_direct(OperatorKind kind, const ScalarCoeffs& density, const Sphere& src,
                             const TargetBatch& targets, bool interior = false);
FieldValues near_eval_direct(OperatorKind kind, const VectorCoeffsVWX& density, const Sphere& src,
                             const TargetBatch& targets, bool interior = false);

// Normal of a sphere of radius R centred at (0,0,C_z), at its grid latitude θ, in the spherical
// frame of the evaluation point seen from the origin. ν_φ = 0.
struct PoleNormal {
    double nu_r = 1.0, nu_theta = 0.0;
};
std::vector<PoleNormal> pole_aligned_normals(double R, double Cz, const std::vector<double>& theta);

// Rotated-grid evaluation on a target sphere with an FFT over each latitude disc.
// The result is projected onto the target's own harmonics of order p (the source order).
ScalarCoeffs near_eval_fft(const LayerCombo& combo, const ScalarCoeffs& density, const Sphere& src,
                           const Sphere& target);
VectorCoeffsVWX near_eval_fft(const LayerCombo& combo, const VectorCoeffsVWX& density, const Sphere& src,
                              const Sphere& target);
ScalarCoeffs near_eval_fft(OperatorKind kind, const ScalarCoeffs& density, const Sphere& src, const Sphere& target);
VectorCoeffsVWX near_eval_fft(OperatorKind kind, const VectorCoeffsVWX& density, const Sphere& src,
                              const Sphere& target);

// The same pipeline stopped before projection: values (global frame) at the rotated grid points.
struct FftSamples {
    TargetBatch targets;  // points and normals in the global frame
    FieldValues values;
};
FftSamples near_eval_fft_samples(const LayerCombo& combo, const ScalarCoeffs& density, const Sphere& src,
                                 const Sphere& target);
FftSamples near_eval_fft_samples(const LayerCombo& combo, const VectorCoeffsVWX& density, const Sphere& src,
                                 const Sphere& target);

// Direct sums at the same rotated target grid as near_eval_fft, projected the same way.
ScalarCoeffs near_eval_direct_coeffs(const LayerCombo& combo, const ScalarCoeffs& density, const Sphere& src,
                                     const Sphere& target);
VectorCoeffsVWX near_eval_direct_coeffs(const LayerCombo& combo, const VectorCoeffsVWX& density, const Sphere& src,
                                        const Sphere& target);

// Projection of grid values (Cartesian columns for vectors) to coefficients on a sphere.
ScalarCoeffs project_scalar(const FieldValues& grid_values, int p);
VectorCoeffsVWX project_vector(const FieldValues& grid_values, int p);
// Grid values (node order j*(2p+2)+k) from coefficients.
FieldValues synthesize(const ScalarCoeffs& c);
FieldValues synthesize(const VectorCoeffsVWX& c);

}  // namespace sbie

#pragma once

#include "sbie/harmonics.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace sbie {

enum class OperatorKind {
    LaplaceS,
    LaplaceDplus,
    LaplaceDminus,
    LaplaceKplus,
    LaplaceKminus,
    StokesS,
    StokesDplus,
    StokesDminus,
    StokesKplus,
    StokesKminus
};

enum class Potential { S, D, K };
enum class Side { Exterior, Interior };
// Y is the Laplace (scalar) channel.
enum class Channel { V, W, X, Y };

bool is_laplace(OperatorKind k);
Potential potential_of(OperatorKind k);
// side of the surface limit; S reports Exterior (it is continuous)
Side side_of(OperatorKind k);
OperatorKind make_kind(bool laplace, Potential pot, Side side);
std::string to_string(OperatorKind k);
std::string to_string(Channel c);
OperatorKind parse_kind(const std::string& s);
const std::vector<OperatorKind>& all_kinds();

// Sum of c_i r^{k_i}; keeps radial functions differentiable in closed form.
struct RadialPoly {
    std::vector<std::pair<double, int>> terms;

    double operator()(double r) const;
    double derivative(double r) const;
    double second_derivative(double r) const;
    RadialPoly& add(double c, int k);
};

// Off-surface branch is selected by r; at r == 1 the side must be given for D and K.
double laplace_radial(Potential pot, int n, double r, std::optional<Side> side = std::nullopt);
double laplace_radial_derivative(Potential pot, int n, double r, std::optional<Side> side = std::nullopt);
// Kind overload: the ± suffix supplies the side at r == 1.
double laplace_radial(OperatorKind kind, int n, double r);

// Coefficients for a single source channel. For a V source the cross term multiplies W,
// for a W source it multiplies V. q is the physical pressure factor, p = q(r) Y_n^m.
// For the K potential the entries are traction coefficients for the normal e_r.
struct StokesRadialCoeffs {
    double gV = 0.0, gW = 0.0, gX = 0.0, gCross = 0.0, q = 0.0;
};

StokesRadialCoeffs stokes_radial(Potential pot, Channel source, int n, double r,
                                 std::optional<Side> side = std::nullopt);
StokesRadialCoeffs stokes_radial_derivative(Potential pot, Channel source, int n, double r,
                                            std::optional<Side> side = std::nullopt);
StokesRadialCoeffs stokes_radial(OperatorKind kind, Channel source, int n, double r);

// Closed-form radial functions behind stokes_radial.
struct StokesRadialFunctions {
    RadialPoly self, cross, pressure;
};
StokesRadialFunctions stokes_radial_functions(Potential pot, Channel source, int n, Side side);

double eigenvalue(OperatorKind kind, int n, Channel channel);

ScalarCoeffs apply_diagonal(OperatorKind kind, const ScalarCoeffs& density);
VectorCoeffsVWX apply_diagonal(OperatorKind kind, const VectorCoeffsVWX& density);

struct VWXTriple {
    double V = 0.0, W = 0.0, X = 0.0;
};

// Traction (normal e_r) at radius r of u = f V + g W + h X with physical pressure P Y.
VWXTriple traction_radial(int n, double r, double f, double g, double h, double P, double fr,
                          double gr, double hr);
// Same on the unit sphere, with q in the appendix convention (q = -r P).
VWXTriple traction_on_sphere(int n, double f, double g, double h, double q, double fr, double gr,
                             double hr);

// Lamb-type solutions of the radial Stokes system; q uses the convention q = -r P.
struct OdeSolutionEntry {
    std::string label;
    Side side = Side::Exterior;
    int n = 0;
    RadialPoly f, g, h, q;
};

std::array<OdeSolutionEntry, 6> ode_solutions(int n);
double ode_residual(const OdeSolutionEntry& e, const std::vector<double>& r_samples);

// Weights of the six ODE solutions (i)..(vi) for the layer potential of V, W and X densities,
// obtained by solving the jump conditions numerically.
struct LayerWeights {
    int n = 0;
    Potential pot = Potential::S;
    std::array<double, 6> V{}, W{}, X{};
};
LayerWeights derive_layer_coefficients(int n, Potential pot);

// Velocity and pressure (f, g, h, P) at r from a weight vector.
struct RadialState {
    double f = 0.0, g = 0.0, h = 0.0, P = 0.0;
};
RadialState evaluate_weights(int n, const std::array<double, 6>& w, double r);

}  // namespace sbie

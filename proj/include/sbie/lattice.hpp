#pragma once

#include "sbie/evaluation.hpp"

namespace sbie {

// Cubic lattice with unit cells of side `spacing`. Vertex spheres have radius (1 - 2^-q) times
// spacing/2; the polydisperse variant adds face spheres of radius r_v (2 - √2) and a centre
// sphere of radius r_v (√2 - 1) in every cell.
struct LatticeSpec {
    int vertices_per_side = 2;
    int q = 1;
    bool polydisperse = false;
    double spacing = 2.0;
};

// Spheres only; ids follow generation order (vertices, faces, centres). Not validated.
std::vector<Sphere> lattice_spheres(const LatticeSpec& spec);

Suspension make_lattice(const LatticeSpec& spec, int p, double eta = 1.0);

// Smallest surface-to-surface distance over all pairs (negative on overlap).
double minimum_gap(const std::vector<Sphere>& spheres);

}  // namespace sbie

#include "sbie/lattice.hpp"

#include <cmath>
#include <stdexcept>

namespace sbie {

std::vector<Sphere> lattice_spheres(const LatticeSpec& spec)
{
    if (spec.vertices_per_side < 1)
        throw std::invalid_argument("lattice needs at least one vertex per side");
    if (spec.q < 1)
        throw std::invalid_argument("lattice q must be >= 1");
    if (!(spec.spacing > 0.0))
        throw std::invalid_argument("lattice spacing must be positive");
    const int k = spec.vertices_per_side;
    const double h = spec.spacing;
    const double rv = (1.0 - std::ldexp(1.0, -spec.q)) * 0.5 * h;
    std::vector<Sphere> out;
    auto push = [&](double x, double y, double z, double r) {
        out.push_back(Sphere{Vec3(x, y, z), r, static_cast<int>(out.size())});
    };
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int l = 0; l < k; ++l)
                push(i * h, j * h, l * h, rv);
    if (!spec.polydisperse || k < 2)
        return out;
    const double rf = rv * (2.0 - std::sqrt(2.0)), rc = rv * (std::sqrt(2.0) - 1.0);
    // faces normal to x, y, z
    for (int axis = 0; axis < 3; ++axis)
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k - 1; ++j)
                for (int l = 0; l < k - 1; ++l) {
                    double c[3];
                    c[axis] = i * h;
                    c[(axis + 1) % 3] = (j + 0.5) * h;
                    c[(axis + 2) % 3] = (l + 0.5) * h;
                    push(c[0], c[1], c[2], rf);
                }
    for (int i = 0; i < k - 1; ++i)
        for (int j = 0; j < k - 1; ++j)
            for (int l = 0; l < k - 1; ++l)
                push((i + 0.5) * h, (j + 0.5) * h, (l + 0.5) * h, rc);
    return out;
}

Suspension make_lattice(const LatticeSpec& spec, int p, double eta)
{
    Suspension s;
    s.spheres = lattice_spheres(spec);
    s.p = p;
    s.eta = eta;
    return s;
}

double minimum_gap(const std::vector<Sphere>& spheres)
{
    double g = INFINITY;
    for (size_t i = 0; i < spheres.size(); ++i)
        for (size_t j = i + 1; j < spheres.size(); ++j)
            g = std::min(g, surface_distance(spheres[i], spheres[j]));
    return g;
}

}  // namespace sbie

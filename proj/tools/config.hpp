#pragma once

#include "sbie/applications.hpp"
#include "sbie/experiments.hpp"
#include "sbie/lattice.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbie::cli {

// Schema violations; the message names the offending key path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kConfigVersion = 1;

struct GeometryConfig {
    std::string type = "spheres";  // "spheres" or "lattice"
    std::vector<Sphere> spheres{Sphere{}};
    LatticeSpec lattice;
};

struct TransformConfig {
    std::vector<int> orders{1, 2, 4, 8, 16, 32};
};

struct SpectraConfig {
    int max_degree = 64;
};

struct ConvergenceConfig {
    std::string mode = "operator";  // "operator" or "bie"
    std::vector<std::string> kinds{"StokesS", "StokesDplus", "StokesKplus"};
    std::vector<int> orders{4, 8, 16};
    double max_exponent = 6.0;
    int directions = 200;
    double decay = 2.0;
    // bie mode
    std::vector<int> bie_orders{4, 8, 16, 24};
    int bie_directions = 30;
    double gap = 0.5;
    double offset = 0.5;
    int reference_order = 40;
    double bie_tol = 1e-13;
};

struct SlipConfig {
    std::vector<cplx> v, w, x;  // packed n-major, any order
};

struct SolveConfig {
    std::string problem = "mobility";  // porous, mobility, resistance, squirmer, magnetostatics
    Vec3 u_inf = Vec3(1.0, 0.0, 0.0);
    std::vector<BodyForce> forces;
    std::vector<RigidMotion> motions;
    MagneticParams magnetic{Vec3(0.0, 0.0, 1.0), 4.0, 1.0};
    SquirmerParams squirmer{1.0, 0.0};
    std::vector<Vec3> orientations;
    std::vector<SlipConfig> slips;  // replaces the two-mode slip when given
    std::vector<Vec3> probes;
    bool write_densities = false;
};

struct BenchConfig {
    std::vector<int> near_orders{8, 16, 32, 64};
    int repetitions = 5;
    std::vector<int> vertices_per_side{2, 3, 5, 9};
    std::vector<int> q{1, 4};
    std::vector<int> orders{4, 8};
    std::vector<std::string> kinds{"StokesDplus", "StokesKminus"};
    std::vector<std::string> far_backends{"null"};
    bool polydisperse = false;
};

struct SimulateConfig {
    std::string kind = "squirmer";  // squirmer or mhd
    double dt = 0.1;
    int steps = 10;
    std::string integrator = "euler";  // euler or rk4
    MagneticParams magnetic{Vec3(0.0, 0.0, 1.0), 4.0, 1.0};
    SquirmerParams squirmer{1.0, 0.0};
    std::vector<Vec3> orientations;
    std::string restart;  // path of a restart file to continue from, or empty
    int output_every = 1;
};

struct RunConfig {
    int version = kConfigVersion;
    std::uint64_t seed = 1;
    int p = 8;
    double eta = 1.0;
    std::string near_method = "fft";
    std::string far_backend = "direct";
    GmresOptions gmres;
    GeometryConfig geometry;
    TransformConfig transform;
    SpectraConfig spectra;
    ConvergenceConfig convergence;
    SolveConfig solve;
    BenchConfig bench;
    SimulateConfig simulate;

    // Bodies of the geometry section.
    std::vector<Sphere> spheres() const;
    Suspension suspension() const;
    ProblemOptions problem_options() const;
};

// Parses and validates. Missing keys take the defaults above; unknown keys are errors.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Every field, defaults included, with per-body lists expanded to the body count.
nlohmann::json resolved_json(const RunConfig& c);

}  // namespace sbie::cli

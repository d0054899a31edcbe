#include "commands.hpp"

#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace sbie;
using namespace sbie::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

using Table = std::vector<std::vector<std::string>>;

Table read_csv(const fs::path& path)
{
    std::ifstream in(path);
    REQUIRE(in);
    Table t;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        t.push_back(cells);
    }
    return t;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("sbie_cli_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig cfg(const json& j)
{
    json full = j;
    full["version"] = 1;
    return parse_config(full);
}

void check_error(const json& j, const std::string& fragment)
{
    try {
        parse_config(j);
        FAIL("expected a config error mentioning " << fragment);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
}

}  // namespace

TEST_CASE("config schema is strict")
{
    check_error(json::object(), "config.version");
    check_error({{"version", 2}}, "unsupported version");
    check_error({{"version", 1}, {"pp", 3}}, "config.pp: unknown key");
    check_error({{"version", 1}, {"gmres", {{"tolerance", 1e-8}}}}, "config.gmres.tolerance: unknown key");
    check_error({{"version", 1}, {"geometry", {{"spheres", {{{"center", {0, 0, 0}}, {"r", 1.0}}}}}}},
                "config.geometry.spheres[0].r: unknown key");
    check_error({{"version", 1}, {"p", 2.5}}, "config.p: expected an integer");
    check_error({{"version", 1}, {"seed", -3}}, "config.seed");
    check_error({{"version", 1}, {"near_method", "magic"}}, "config.near_method");
    check_error({{"version", 1}, {"solve", {{"problem", "heat"}}}}, "config.solve.problem");
    check_error({{"version", 1}, {"solve", {{"u_inf", {1, 2}}}}}, "3-vector");
    check_error({{"version", 1}, {"convergence", {{"kinds", {"StokesQ"}}}}}, "unknown operator kind");
    // two bodies, one force
    check_error({{"version", 1},
                 {"geometry", {{"spheres", {{{"center", {0, 0, 0}}}, {{"center", {3, 0, 0}}}}}}},
                 {"solve", {{"forces", {{{"F", {1, 0, 0}}}}}}}},
                "one entry per body");
    // overlapping spheres
    check_error({{"version", 1}, {"geometry", {{"spheres", {{{"center", {0, 0, 0}}}, {{"center", {1, 0, 0}}}}}}}},
                "config.geometry");
}

TEST_CASE("resolved config is explicit and round trips")
{
    const RunConfig c = cfg({{"geometry", {{"spheres", {{{"center", {0, 0, 0}}}, {{"center", {3, 0, 0}}, {"radius", 0.5}}}}}},
                             {"solve", {{"problem", "resistance"}}}});
    const json r = resolved_json(c);
    CHECK(r["p"] == 8);
    CHECK(r["eta"] == 1.0);
    CHECK(r["gmres"]["restart"] == 50);
    CHECK(r["convergence"]["decay"] == 2.0);
    // per-body lists are expanded to the body count
    CHECK(r["solve"]["forces"].size() == 2);
    CHECK(r["solve"]["motions"].size() == 2);
    CHECK(r["simulate"]["orientations"].size() == 2);
    CHECK(r["geometry"]["spheres"][1]["radius"] == 0.5);

    const RunConfig back = parse_config(r);
    CHECK(resolved_json(back) == r);

    const RunConfig lat = cfg({{"geometry", {{"type", "lattice"}, {"lattice", {{"vertices_per_side", 3}}}}}});
    CHECK(lat.spheres().size() == 27);
    CHECK(resolved_json(parse_config(resolved_json(lat))) == resolved_json(lat));
}

TEST_CASE("spectra and transform tables")
{
    const fs::path out = scratch("tables");
    std::ostringstream log;
    RunConfig c = cfg({{"spectra", {{"max_degree", 4}}}, {"transform", {{"orders", {1, 4, 16}}}}});
    REQUIRE(cmd_spectra(c, out, log) == kOk);
    const Table s = read_csv(out / "spectra.csv");
    CHECK(s[0] == std::vector<std::string>{"kind", "channel", "n", "value"});
    // 5 Laplace kinds x 5 degrees, 5 Stokes kinds x (5 V + 4 W + 4 X)
    CHECK(s.size() == 1 + 25 + 65);
    for (const auto& row : s)
        if (row[0] == "LaplaceS" && row[2] == "1")
            CHECK(std::stod(row[3]) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    REQUIRE(cmd_transform(c, out, log) == kOk);
    const Table t = read_csv(out / "transform.csv");
    REQUIRE(t.size() == 4);
    for (size_t i = 1; i < t.size(); ++i) {
        CHECK(std::stod(t[i][1]) < 1e-11);
        CHECK(std::stod(t[i][2]) < 1e-11);
        CHECK(std::stod(t[i][3]) < 1e-12);
    }
    CHECK(t[1][0] == "1");
    CHECK(fs::exists(out / "resolved_config.json"));
    CHECK(json::parse(slurp(out / "resolved_config.json")) == resolved_json(c));
}

TEST_CASE("convergence sweep is deterministic across thread counts")
{
    const RunConfig c = cfg({{"convergence", {{"orders", {4, 8}}, {"directions", 20}, {"max_exponent", 3.0}}}});
    const fs::path a = scratch("conv_a"), b = scratch("conv_b");
    std::ostringstream log;
    omp_set_num_threads(1);
    REQUIRE(cmd_convergence(c, a, log) == kOk);
    omp_set_num_threads(4);
    REQUIRE(cmd_convergence(c, b, log) == kOk);
    CHECK(slurp(a / "convergence.csv") == slurp(b / "convergence.csv"));

    const Table t = read_csv(a / "convergence.csv");
    CHECK(t.size() == 1 + 3 * 2 * 7);
    for (size_t i = 1; i < t.size(); ++i)
        CHECK(std::stod(t[i][5]) < 1e-12);  // the near path is exact for band-limited densities
}

TEST_CASE("solve: single-sphere mobility, zero data and reciprocity")
{
    std::ostringstream log;
    const fs::path out = scratch("solve");
    const double a = 0.7;
    RunConfig c = cfg({{"geometry", {{"spheres", {{{"center", {1, 0, 0}}, {"radius", a}}}}}},
                       {"solve",
                        {{"problem", "mobility"},
                         {"forces", {{{"F", {0, 0, -2}}, {"T", {0, 1, 0}}}}},
                         {"probes", {{4, 0, 0}}}}}});
    REQUIRE(cmd_solve(c, out, log) == kOk);
    Table t = read_csv(out / "solve.csv");
    CHECK(std::stod(t[1][3]) == doctest::Approx(-2.0 / (6 * pi * a)).epsilon(1e-9));
    CHECK(std::stod(t[1][5]) == doctest::Approx(1.0 / (8 * pi * a * a * a)).epsilon(1e-9));
    CHECK(read_csv(out / "probes.csv").size() == 2);
    // an isolated sphere is solved by the force density alone
    CHECK(slurp(out / "gmres.log").find("# status: zero right-hand side") != std::string::npos);

    // zero data gives the zero solution
    c.solve.forces[0] = BodyForce{};
    REQUIRE(cmd_solve(c, out, log) == kOk);
    t = read_csv(out / "solve.csv");
    for (int k = 1; k <= 6; ++k)
        CHECK(std::stod(t[1][k]) == 0.0);

    // reciprocity: the velocity of body 1 due to a force on body 0 is the transpose
    RunConfig two = cfg({{"p", 16},
                         {"geometry", {{"spheres", {{{"center", {0, 0, 0}}}, {{"center", {2.4, 0.5, 0}}, {"radius", 0.6}}}}}},
                         {"solve", {{"problem", "mobility"}}}});
    Eigen::Matrix3d M01, M10;
    for (int i = 0; i < 3; ++i) {
        for (int body = 0; body < 2; ++body) {
            two.solve.forces.assign(2, BodyForce{});
            two.solve.forces[body].F(i) = 1.0;
            REQUIRE(cmd_solve(two, out, log) == kOk);
            const Table r = read_csv(out / "solve.csv");
            const int other = 1 - body;
            for (int j = 0; j < 3; ++j)
                (body == 0 ? M10 : M01)(j, i) = std::stod(r[1 + other][1 + j]);
        }
    }
    CHECK((M01 - M10.transpose()).norm() < 1e-8 * M01.norm());
}

TEST_CASE("solve: every problem writes its tables")
{
    std::ostringstream log;
    for (const std::string problem : {"porous", "resistance", "squirmer", "magnetostatics"}) {
        const fs::path out = scratch("solve_" + problem);
        const RunConfig c = cfg({{"p", 6},
                                 {"geometry", {{"spheres", {{{"center", {0, 0, 0}}}, {{"center", {3, 0, 0}}}}}}},
                                 {"solve", {{"problem", problem}, {"probes", {{0, 5, 0}, {8, 0, 0}}}, {"write_densities", true}}}});
        REQUIRE(cmd_solve(c, out, log) == kOk);
        CHECK(read_csv(out / "solve.csv").size() == 3);
        CHECK(read_csv(out / "probes.csv").size() == 3);
        if (problem != "magnetostatics")
            CHECK(read_csv(out / "densities.csv").size() == 1 + 2 * 3 * 49);
    }

    // an impossible iteration budget is reported with its residual history
    const fs::path out = scratch("solve_fail");
    const RunConfig c = cfg({{"gmres", {{"max_iterations", 1}, {"tol", 1e-14}}},
                             {"geometry", {{"spheres", {{{"center", {0, 0, 0}}}, {{"center", {2.2, 0, 0}}}}}}},
                             {"solve", {{"problem", "porous"}}}});
    CHECK(cmd_solve(c, out, log) == kSolverFailure);
    CHECK(slurp(out / "gmres.log").find("iteration limit") != std::string::npos);
}

TEST_CASE("simulate: straight swimmer, restart and overlap halt")
{
    std::ostringstream log;
    const fs::path out = scratch("sim");
    RunConfig c = cfg({{"p", 4},
                       {"simulate", {{"steps", 4}, {"dt", 0.5}, {"squirmer", {{"B1", 1.5}, {"B2", 0.0}}}, {"orientations", {{1, 0, 0}}}}}});
    REQUIRE(cmd_simulate(c, out, log) == kOk);
    const Table t = read_csv(out / "trajectory.csv");
    REQUIRE(t.size() == 6);
    CHECK(std::stod(t[5][3]) == doctest::Approx(4 * 0.5 * 1.0).epsilon(1e-9));  // (2/3) B1 = 1
    const SimState s = parse_restart(slurp(out / "restart.json"));
    CHECK(s.step == 4);

    // continue from the restart file
    const fs::path out2 = scratch("sim2");
    c.simulate.restart = (out / "restart.json").string();
    c.simulate.steps = 2;
    REQUIRE(cmd_simulate(c, out2, log) == kOk);
    const Table t2 = read_csv(out2 / "trajectory.csv");
    CHECK(t2[1][0] == "4");
    CHECK(std::stod(t2.back()[3]) == doctest::Approx(3.0).epsilon(1e-9));

    // head-on swimmers collide and the run halts with the step number
    const fs::path out3 = scratch("sim3");
    RunConfig h = cfg({{"p", 4},
                       {"geometry", {{"spheres", {{{"center", {0, 0, 0}}}, {{"center", {2.3, 0, 0}}}}}}},
                       {"simulate", {{"steps", 10}, {"dt", 0.5}, {"orientations", {{1, 0, 0}, {-1, 0, 0}}}}}});
    CHECK(cmd_simulate(h, out3, log) == kGeometryHalt);
    CHECK(log.str().find("simulate halted: step") != std::string::npos);
    CHECK(fs::exists(out3 / "restart.json"));
}

TEST_CASE("bench writes timing tables")
{
    std::ostringstream log;
    const fs::path out = scratch("bench");
    const RunConfig c = cfg({{"bench",
                              {{"near_orders", {4}},
                               {"repetitions", 1},
                               {"vertices_per_side", {2, 3}},
                               {"q", {1, 4}},
                               {"orders", {2}},
                               {"kinds", {"StokesDplus"}}}}});
    REQUIRE(cmd_bench(c, out, log) == kOk);
    const Table near = read_csv(out / "bench_near.csv");
    REQUIRE(near.size() == 2);
    CHECK(std::stod(near[1][4]) < 1e-11);
    CHECK(read_csv(out / "bench_scaling.csv").size() == 5);
    CHECK(read_csv(out / "bench_fit.csv").size() == 3);
}

TEST_CASE("unknown subcommand")
{
    std::ostringstream log;
    CHECK_THROWS_AS(run_command("plot", cfg(json::object()), scratch("none"), log), std::invalid_argument);
}

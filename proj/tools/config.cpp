#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace sbie::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void convert(const json& j, const std::string& path, double& out)
{
    if (!j.is_number())
        fail(path, "expected a number");
    out = j.get<double>();
}

void convert(const json& j, const std::string& path, int& out)
{
    if (!j.is_number_integer())
        fail(path, "expected an integer");
    out = j.get<int>();
}

void convert(const json& j, const std::string& path, std::uint64_t& out)
{
    if (!j.is_number_unsigned())
        fail(path, "expected a non-negative integer");
    out = j.get<std::uint64_t>();
}

void convert(const json& j, const std::string& path, bool& out)
{
    if (!j.is_boolean())
        fail(path, "expected true or false");
    out = j.get<bool>();
}

void convert(const json& j, const std::string& path, std::string& out)
{
    if (!j.is_string())
        fail(path, "expected a string");
    out = j.get<std::string>();
}

void convert(const json& j, const std::string& path, Vec3& out)
{
    if (!j.is_array() || j.size() != 3)
        fail(path, "expected a 3-vector");
    for (int i = 0; i < 3; ++i)
        convert(j[i], path + "[" + std::to_string(i) + "]", out(i));
}

void convert(const json& j, const std::string& path, cplx& out)
{
    if (!j.is_array() || j.size() != 2)
        fail(path, "expected [re, im]");
    double re = 0, im = 0;
    convert(j[0], path + "[0]", re);
    convert(j[1], path + "[1]", im);
    out = cplx(re, im);
}

template <class T>
void convert(const json& j, const std::string& path, std::vector<T>& out)
{
    if (!j.is_array())
        fail(path, "expected an array");
    out.assign(j.size(), T{});
    for (size_t i = 0; i < j.size(); ++i)
        convert(j[i], path + "[" + std::to_string(i) + "]", out[i]);
}

// Strict object reader: every key must be consumed before finish().
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            fail(path_, "expected an object");
    }

    template <class T>
    Obj& get(const char* key, T& out)
    {
        if (const auto it = j_.find(key); it != j_.end()) {
            used_.insert(key);
            convert(*it, path_ + "." + key, out);
        }
        return *this;
    }

    // Sub-object, or null when absent.
    const json* sub(const char* key)
    {
        const auto it = j_.find(key);
        if (it == j_.end())
            return nullptr;
        used_.insert(key);
        return &*it;
    }

    std::string path(const char* key) const { return path_ + "." + key; }

    void finish() const
    {
        for (const auto& item : j_.items())
            if (!used_.count(item.key()))
                fail(path_ + "." + item.key(), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class T, class F>
void read_list(Obj& parent, const char* key, std::vector<T>& out, F&& read_one)
{
    const json* a = parent.sub(key);
    if (!a)
        return;
    const std::string path = parent.path(key);
    if (!a->is_array())
        fail(path, "expected an array");
    out.clear();
    for (size_t i = 0; i < a->size(); ++i) {
        Obj o((*a)[i], path + "[" + std::to_string(i) + "]");
        T v{};
        read_one(o, v);
        o.finish();
        out.push_back(v);
    }
}

void read_magnetic(Obj& parent, MagneticParams& m)
{
    if (const json* j = parent.sub("magnetic")) {
        Obj o(*j, parent.path("magnetic"));
        o.get("H0", m.H0).get("mu_particle", m.mu_particle).get("mu_fluid", m.mu_fluid);
        o.finish();
    }
}

void read_squirmer(Obj& parent, SquirmerParams& s)
{
    if (const json* j = parent.sub("squirmer")) {
        Obj o(*j, parent.path("squirmer"));
        o.get("B1", s.B1).get("B2", s.B2);
        o.finish();
    }
}

void require(bool ok, const std::string& path, const std::string& what)
{
    if (!ok)
        fail(path, what);
}

template <class T>
void expand(std::vector<T>& v, size_t nb, const T& fill, const std::string& path)
{
    if (v.empty())
        v.assign(nb, fill);
    else if (v.size() != nb)
        fail(path, "expected one entry per body (" + std::to_string(nb) + "), got " + std::to_string(v.size()));
}

bool is_order(int p) { return p >= 1 && p <= 256; }

void validate(RunConfig& c)
{
    require(c.version == kConfigVersion, "config.version", "unsupported version " + std::to_string(c.version));
    require(is_order(c.p), "config.p", "must be in [1, 256]");
    require(c.eta > 0.0, "config.eta", "must be positive");
    require(c.near_method == "fft" || c.near_method == "direct", "config.near_method", "must be fft or direct");
    require(c.far_backend == "direct" || c.far_backend == "null", "config.far_backend", "must be direct or null");
    require(c.gmres.tol > 0.0 && c.gmres.restart >= 1 && c.gmres.max_iterations >= 1, "config.gmres",
            "tol > 0, restart >= 1 and max_iterations >= 1 required");

    GeometryConfig& g = c.geometry;
    require(g.type == "spheres" || g.type == "lattice", "config.geometry.type", "must be spheres or lattice");
    if (g.type == "lattice") {
        require(g.lattice.vertices_per_side >= 1, "config.geometry.lattice.vertices_per_side", "must be >= 1");
        require(g.lattice.q >= 1, "config.geometry.lattice.q", "must be >= 1");
        require(g.lattice.spacing > 0.0, "config.geometry.lattice.spacing", "must be positive");
        g.spheres.clear();
    }
    require(!c.spheres().empty(), "config.geometry", "no bodies");
    for (int i = 0; i < static_cast<int>(c.spheres().size()); ++i)
        require(c.spheres()[i].radius > 0.0, "config.geometry.spheres[" + std::to_string(i) + "].radius",
                "must be positive");
    try {
        c.suspension().validate();
    } catch (const std::exception& e) {
        fail("config.geometry", e.what());
    }
    const size_t nb = c.spheres().size();

    for (int p : c.transform.orders)
        require(is_order(p), "config.transform.orders", "orders must be in [1, 256]");
    require(c.spectra.max_degree >= 0, "config.spectra.max_degree", "must be >= 0");

    ConvergenceConfig& v = c.convergence;
    require(v.mode == "operator" || v.mode == "bie", "config.convergence.mode", "must be operator or bie");
    for (const std::string& k : v.kinds) {
        try {
            parse_kind(k);
        } catch (const std::exception&) {
            fail("config.convergence.kinds", "unknown operator kind " + k);
        }
    }
    for (int p : v.orders)
        require(is_order(p), "config.convergence.orders", "orders must be in [1, 256]");
    for (int p : v.bie_orders)
        require(is_order(p), "config.convergence.bie.orders", "orders must be in [1, 256]");
    require(is_order(v.reference_order), "config.convergence.bie.reference_order", "must be in [1, 256]");
    require(v.max_exponent >= 0.0, "config.convergence.max_exponent", "must be >= 0");
    require(v.directions >= 1 && v.bie_directions >= 1, "config.convergence", "directions must be >= 1");
    require(v.gap > 0.0, "config.convergence.bie.gap", "must be positive");
    require(v.offset >= 0.0 && v.offset < 1.0, "config.convergence.bie.offset", "must be in [0, 1)");
    require(v.bie_tol > 0.0, "config.convergence.bie.tol", "must be positive");

    SolveConfig& s = c.solve;
    static const std::set<std::string> problems{"porous", "mobility", "resistance", "squirmer", "magnetostatics"};
    require(problems.count(s.problem) > 0, "config.solve.problem",
            "must be porous, mobility, resistance, squirmer or magnetostatics");
    expand(s.forces, nb, BodyForce{}, "config.solve.forces");
    expand(s.motions, nb, RigidMotion{}, "config.solve.motions");
    expand(s.orientations, nb, Vec3(Vec3::UnitZ()), "config.solve.orientations");
    if (!s.slips.empty())
        expand(s.slips, nb, SlipConfig{}, "config.solve.slips");
    for (const Vec3& e : s.orientations)
        require(e.norm() > 0.0, "config.solve.orientations", "must be nonzero");
    try {
        s.magnetic.validate();
    } catch (const std::exception& e) {
        fail("config.solve.magnetic", e.what());
    }

    BenchConfig& b = c.bench;
    require(b.repetitions >= 1, "config.bench.repetitions", "must be >= 1");
    for (int p : b.near_orders)
        require(is_order(p), "config.bench.near_orders", "orders must be in [1, 256]");
    for (int p : b.orders)
        require(is_order(p), "config.bench.orders", "orders must be in [1, 256]");
    for (int n : b.vertices_per_side)
        require(n >= 1, "config.bench.vertices_per_side", "must be >= 1");
    for (int q : b.q)
        require(q >= 1, "config.bench.q", "must be >= 1");
    for (const std::string& k : b.kinds) {
        try {
            parse_kind(k);
        } catch (const std::exception&) {
            fail("config.bench.kinds", "unknown operator kind " + k);
        }
    }
    for (const std::string& f : b.far_backends)
        require(f == "direct" || f == "null", "config.bench.far_backends", "entries must be direct or null");

    SimulateConfig& m = c.simulate;
    require(m.kind == "squirmer" || m.kind == "mhd", "config.simulate.kind", "must be squirmer or mhd");
    require(m.integrator == "euler" || m.integrator == "rk4", "config.simulate.integrator", "must be euler or rk4");
    require(m.dt > 0.0, "config.simulate.dt", "must be positive");
    require(m.steps >= 0, "config.simulate.steps", "must be >= 0");
    require(m.output_every >= 1, "config.simulate.output_every", "must be >= 1");
    expand(m.orientations, nb, Vec3(Vec3::UnitZ()), "config.simulate.orientations");
    for (const Vec3& e : m.orientations)
        require(e.norm() > 0.0, "config.simulate.orientations", "must be nonzero");
    try {
        m.magnetic.validate();
    } catch (const std::exception& e) {
        fail("config.simulate.magnetic", e.what());
    }
}

json vec(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

json cvec(const std::vector<cplx>& c)
{
    json a = json::array();
    for (const cplx& z : c)
        a.push_back(json::array({z.real(), z.imag()}));
    return a;
}

json magnetic_json(const MagneticParams& m)
{
    return {{"H0", vec(m.H0)}, {"mu_particle", m.mu_particle}, {"mu_fluid", m.mu_fluid}};
}

json squirmer_json(const SquirmerParams& s) { return {{"B1", s.B1}, {"B2", s.B2}}; }

json vec_list(const std::vector<Vec3>& v)
{
    json a = json::array();
    for (const Vec3& x : v)
        a.push_back(vec(x));
    return a;
}

}  // namespace

std::vector<Sphere> RunConfig::spheres() const
{
    if (geometry.type == "lattice")
        return lattice_spheres(geometry.lattice);
    std::vector<Sphere> s = geometry.spheres;
    for (size_t i = 0; i < s.size(); ++i)
        s[i].id = static_cast<int>(i);
    return s;
}

Suspension RunConfig::suspension() const
{
    Suspension s;
    s.spheres = spheres();
    s.p = p;
    s.eta = eta;
    return s;
}

ProblemOptions RunConfig::problem_options() const
{
    ProblemOptions o;
    o.gmres = gmres;
    o.eval.near = near_method == "direct" ? NearMethod::Direct : NearMethod::Fft;
    return o;
}

RunConfig parse_config(const json& j)
{
    RunConfig c;
    Obj root(j, "config");
    if (!j.contains("version"))
        fail("config.version", "required");
    root.get("version", c.version);
    if (c.version != kConfigVersion)
        fail("config.version", "unsupported version " + std::to_string(c.version));
    root.get("seed", c.seed).get("p", c.p).get("eta", c.eta);
    root.get("near_method", c.near_method).get("far_backend", c.far_backend);

    if (const json* g = root.sub("gmres")) {
        Obj o(*g, "config.gmres");
        o.get("tol", c.gmres.tol).get("restart", c.gmres.restart).get("max_iterations", c.gmres.max_iterations);
        o.finish();
    }

    if (const json* g = root.sub("geometry")) {
        Obj o(*g, "config.geometry");
        o.get("type", c.geometry.type);
        read_list(o, "spheres", c.geometry.spheres,
                  [](Obj& s, Sphere& sp) { s.get("center", sp.center).get("radius", sp.radius); });
        if (const json* l = o.sub("lattice")) {
            Obj lo(*l, "config.geometry.lattice");
            LatticeSpec& ls = c.geometry.lattice;
            lo.get("vertices_per_side", ls.vertices_per_side).get("q", ls.q);
            lo.get("polydisperse", ls.polydisperse).get("spacing", ls.spacing);
            lo.finish();
        }
        o.finish();
    }

    if (const json* t = root.sub("transform")) {
        Obj o(*t, "config.transform");
        o.get("orders", c.transform.orders);
        o.finish();
    }

    if (const json* t = root.sub("spectra")) {
        Obj o(*t, "config.spectra");
        o.get("max_degree", c.spectra.max_degree);
        o.finish();
    }

    if (const json* t = root.sub("convergence")) {
        ConvergenceConfig& v = c.convergence;
        Obj o(*t, "config.convergence");
        o.get("mode", v.mode).get("kinds", v.kinds).get("orders", v.orders);
        o.get("max_exponent", v.max_exponent).get("directions", v.directions).get("decay", v.decay);
        if (const json* b = o.sub("bie")) {
            Obj bo(*b, "config.convergence.bie");
            bo.get("orders", v.bie_orders).get("directions", v.bie_directions).get("gap", v.gap);
            bo.get("offset", v.offset).get("reference_order", v.reference_order).get("tol", v.bie_tol);
            bo.finish();
        }
        o.finish();
    }

    if (const json* t = root.sub("solve")) {
        SolveConfig& s = c.solve;
        Obj o(*t, "config.solve");
        o.get("problem", s.problem).get("u_inf", s.u_inf).get("orientations", s.orientations);
        o.get("probes", s.probes).get("write_densities", s.write_densities);
        read_list(o, "forces", s.forces, [](Obj& f, BodyForce& b) { f.get("F", b.F).get("T", b.T); });
        read_list(o, "motions", s.motions, [](Obj& f, RigidMotion& m) { f.get("v", m.v).get("omega", m.omega); });
        read_list(o, "slips", s.slips, [](Obj& f, SlipConfig& sl) { f.get("v", sl.v).get("w", sl.w).get("x", sl.x); });
        read_magnetic(o, s.magnetic);
        read_squirmer(o, s.squirmer);
        o.finish();
    }

    if (const json* t = root.sub("bench")) {
        BenchConfig& b = c.bench;
        Obj o(*t, "config.bench");
        o.get("near_orders", b.near_orders).get("repetitions", b.repetitions);
        o.get("vertices_per_side", b.vertices_per_side).get("q", b.q).get("orders", b.orders);
        o.get("kinds", b.kinds).get("far_backends", b.far_backends).get("polydisperse", b.polydisperse);
        o.finish();
    }

    if (const json* t = root.sub("simulate")) {
        SimulateConfig& m = c.simulate;
        Obj o(*t, "config.simulate");
        o.get("kind", m.kind).get("dt", m.dt).get("steps", m.steps).get("integrator", m.integrator);
        o.get("orientations", m.orientations).get("restart", m.restart).get("output_every", m.output_every);
        read_magnetic(o, m.magnetic);
        read_squirmer(o, m.squirmer);
        o.finish();
    }

    root.finish();
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot open");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

json resolved_json(const RunConfig& c)
{
    json j;
    j["version"] = c.version;
    j["seed"] = c.seed;
    j["p"] = c.p;
    j["eta"] = c.eta;
    j["near_method"] = c.near_method;
    j["far_backend"] = c.far_backend;
    j["gmres"] = {{"tol", c.gmres.tol}, {"restart", c.gmres.restart}, {"max_iterations", c.gmres.max_iterations}};

    json spheres = json::array();
    for (const Sphere& s : c.geometry.spheres)
        spheres.push_back({{"center", vec(s.center)}, {"radius", s.radius}});
    const LatticeSpec& l = c.geometry.lattice;
    j["geometry"] = {{"type", c.geometry.type},
                     {"spheres", spheres},
                     {"lattice",
                      {{"vertices_per_side", l.vertices_per_side},
                       {"q", l.q},
                       {"polydisperse", l.polydisperse},
                       {"spacing", l.spacing}}}};

    j["transform"] = {{"orders", c.transform.orders}};
    j["spectra"] = {{"max_degree", c.spectra.max_degree}};

    const ConvergenceConfig& v = c.convergence;
    j["convergence"] = {{"mode", v.mode},
                        {"kinds", v.kinds},
                        {"orders", v.orders},
                        {"max_exponent", v.max_exponent},
                        {"directions", v.directions},
                        {"decay", v.decay},
                        {"bie",
                         {{"orders", v.bie_orders},
                          {"directions", v.bie_directions},
                          {"gap", v.gap},
                          {"offset", v.offset},
                          {"reference_order", v.reference_order},
                          {"tol", v.bie_tol}}}};

    const SolveConfig& s = c.solve;
    json forces = json::array(), motions = json::array(), slips = json::array();
    for (const BodyForce& f : s.forces)
        forces.push_back({{"F", vec(f.F)}, {"T", vec(f.T)}});
    for (const RigidMotion& m : s.motions)
        motions.push_back({{"v", vec(m.v)}, {"omega", vec(m.omega)}});
    for (const SlipConfig& sl : s.slips)
        slips.push_back({{"v", cvec(sl.v)}, {"w", cvec(sl.w)}, {"x", cvec(sl.x)}});
    j["solve"] = {{"problem", s.problem},
                  {"u_inf", vec(s.u_inf)},
                  {"forces", forces},
                  {"motions", motions},
                  {"magnetic", magnetic_json(s.magnetic)},
                  {"squirmer", squirmer_json(s.squirmer)},
                  {"orientations", vec_list(s.orientations)},
                  {"slips", slips},
                  {"probes", vec_list(s.probes)},
                  {"write_densities", s.write_densities}};

    const BenchConfig& b = c.bench;
    j["bench"] = {{"near_orders", b.near_orders},
                  {"repetitions", b.repetitions},
                  {"vertices_per_side", b.vertices_per_side},
                  {"q", b.q},
                  {"orders", b.orders},
                  {"kinds", b.kinds},
                  {"far_backends", b.far_backends},
                  {"polydisperse", b.polydisperse}};

    const SimulateConfig& m = c.simulate;
    j["simulate"] = {{"kind", m.kind},
                     {"dt", m.dt},
                     {"steps", m.steps},
                     {"integrator", m.integrator},
                     {"magnetic", magnetic_json(m.magnetic)},
                     {"squirmer", squirmer_json(m.squirmer)},
                     {"orientations", vec_list(m.orientations)},
                     {"restart", m.restart},
                     {"output_every", m.output_every}};
    return j;
}

}  // namespace sbie::cli

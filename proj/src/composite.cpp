#include "sbie/composite.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sbie {

FieldValues DirectFarField::evaluate(const LayerCombo& combo, const PointSources& sources,
                                     const TargetBatch& targets) const
{
    return point_source_sum(combo, sources, targets);
}

FieldValues NullFarField::evaluate(const LayerCombo& combo, const PointSources&, const TargetBatch& targets) const
{
    return FieldValues::Zero(targets.size(), combo.laplace ? 1 : 3);
}

std::unique_ptr<FarFieldBackend> make_far_backend(const std::string& name)
{
    if (name == "direct")
        return std::make_unique<DirectFarField>();
    if (name == "null")
        return std::make_unique<NullFarField>();
    throw std::invalid_argument("unknown far-field backend '" + name + "'");
}

namespace {

void add_to(ScalarCoeffs& a, const ScalarCoeffs& b)
{
    for (size_t i = 0; i < a.c.size(); ++i)
        a.c[i] += b.c[i];
}

void add_to(VectorCoeffsVWX& a, const VectorCoeffsVWX& b)
{
    add_to(a.v, b.v);
    add_to(a.w, b.w);
    add_to(a.x, b.x);
}

ScalarCoeffs project(const FieldValues& v, int p, const ScalarCoeffs*) { return project_scalar(v, p); }
VectorCoeffsVWX project(const FieldValues& v, int p, const VectorCoeffsVWX*) { return project_vector(v, p); }

template <class Density>
void check_inputs(const LayerCombo& combo, const Suspension& s, const std::vector<Density>& dens)
{
    constexpr bool vec = std::is_same_v<Density, VectorCoeffsVWX>;
    if (combo.laplace == vec)
        throw std::invalid_argument("density type does not match the layer family");
    s.validate();
    if (static_cast<int>(dens.size()) != s.size())
        throw std::invalid_argument("one density per sphere required");
    for (const Density& d : dens)
        if (d.p != s.p)
            throw std::invalid_argument("density order differs from the suspension order");
}

std::vector<int> id_order(const Suspension& s)
{
    std::vector<int> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return s.spheres[a].id < s.spheres[b].id; });
    return idx;
}

template <class Density>
std::vector<Density> composite_impl(const LayerCombo& combo, const Suspension& s, const std::vector<Density>& dens,
                                    const CompositeOptions& opt)
{
    check_inputs(combo, s, dens);
    static const DirectFarField default_far;
    const FarFieldBackend& far = opt.far ? *opt.far : default_far;
    const int nb = s.size(), p = s.p;
    const std::vector<int> order = id_order(s);

    // point sources of every sphere, built once
    std::vector<PointSources> sources(nb);
    const bool use_far = dynamic_cast<const NullFarField*>(&far) == nullptr;
    if (use_far && nb > 1) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < nb; ++i)
            sources[i] = weighted_sources(dens[i], s.spheres[i]);
    }

    // near sources of each target, self included, in id order
    std::vector<int> rank(nb);
    for (int i = 0; i < nb; ++i)
        rank[order[i]] = i;
    std::vector<std::vector<int>> near = near_lists(s.spheres, s.eta);
    for (int t = 0; t < nb; ++t) {
        near[t].push_back(t);
        std::sort(near[t].begin(), near[t].end(), [&](int a, int b) { return rank[a] < rank[b]; });
    }

    std::vector<Density> out(nb);
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < nb; ++t) {
        try {
            const Sphere& tgt = s.spheres[t];
            Density acc(p);
            for (int src : near[t]) {
                if (src == t) {
                    add_to(acc, self_apply(combo, opt.self_limit, dens[t], tgt));
                } else if (opt.near == NearMethod::Fft) {
                    add_to(acc, near_eval_fft(combo, dens[src], s.spheres[src], tgt));
                } else {
                    add_to(acc, near_eval_direct_coeffs(combo, dens[src], s.spheres[src], tgt));
                }
            }
            PointSources far_src;
            std::vector<int> far_ids;
            if (use_far && static_cast<int>(near[t].size()) < nb) {
                std::vector<char> is_near(nb, 0);
                for (int src : near[t])
                    is_near[src] = 1;
                for (int src : order)
                    if (!is_near[src])
                        far_ids.push_back(src);
            }
            if (!far_ids.empty()) {
                const TargetBatch targets = grid_targets(tgt, p, combo.needs_normals());
                size_t total = 0;
                for (int src : far_ids)
                    total += sources[src].points.size();
                far_src.points.reserve(total);
                far_src.normals.reserve(total);
                far_src.densities.resize(static_cast<Eigen::Index>(total), combo.laplace ? 1 : 3);
                Eigen::Index row = 0;
                for (int src : far_ids) {
                    const PointSources& ps = sources[src];
                    far_src.points.insert(far_src.points.end(), ps.points.begin(), ps.points.end());
                    far_src.normals.insert(far_src.normals.end(), ps.normals.begin(), ps.normals.end());
                    far_src.densities.middleRows(row, ps.size()) = ps.densities;
                    row += ps.size();
                }
                const FieldValues v = far.evaluate(combo, far_src, targets);
                add_to(acc, project(v, p, &acc));
            }
            out[t] = std::move(acc);
        } catch (...) {
#pragma omp critical(sbie_composite_error)
            if (!error)
                error = std::current_exception();
        }
    }
    if (error)
        std::rethrow_exception(error);
    return out;
}

SurfaceLimit limit_of(OperatorKind kind)
{
    return side_of(kind) == Side::Exterior ? SurfaceLimit::Exterior : SurfaceLimit::Interior;
}

template <class Density>
FieldValues field_impl(const LayerCombo& combo, const Suspension& s, const std::vector<Density>& dens,
                       const TargetBatch& targets)
{
    check_inputs(combo, s, dens);
    targets.validate();
    if (combo.needs_normals() && !targets.has_normals())
        throw std::invalid_argument("flux or traction evaluation needs target normals");
    const int nt = targets.size();
    FieldValues out = FieldValues::Zero(nt, combo.laplace ? 1 : 3);
    for (int i : id_order(s)) {
        const Sphere& sp = s.spheres[i];
        TargetBatch near, far;
        std::vector<int> near_idx, far_idx;
        for (int j = 0; j < nt; ++j) {
            const double r = (targets.points[j] - sp.center).norm();
            if (r < sp.radius * (1.0 - 1e-12))
                throw GeometryError("evaluation point inside sphere " + std::to_string(sp.id));
            const bool is_far = r - sp.radius >= s.eta * 2.0 * sp.radius;
            TargetBatch& b = is_far ? far : near;
            (is_far ? far_idx : near_idx).push_back(j);
            b.points.push_back(targets.points[j]);
            if (targets.has_normals())
                b.normals.push_back(targets.normals[j]);
        }
        if (!near_idx.empty()) {
            const FieldValues v = near_eval_direct(combo, dens[i], sp, near);
            for (size_t k = 0; k < near_idx.size(); ++k)
                out.row(near_idx[k]) += v.row(k);
        }
        if (!far_idx.empty()) {
            const FieldValues v = smooth_quadrature_eval(combo, dens[i], sp, far);
            for (size_t k = 0; k < far_idx.size(); ++k)
                out.row(far_idx[k]) += v.row(k);
        }
    }
    return out;
}

}  // namespace

std::vector<ScalarCoeffs> composite_apply(const LayerCombo& combo, const Suspension& s,
                                          const std::vector<ScalarCoeffs>& densities, const CompositeOptions& opt)
{
    return composite_impl(combo, s, densities, opt);
}

std::vector<VectorCoeffsVWX> composite_apply(const LayerCombo& combo, const Suspension& s,
                                             const std::vector<VectorCoeffsVWX>& densities,
                                             const CompositeOptions& opt)
{
    return composite_impl(combo, s, densities, opt);
}

std::vector<ScalarCoeffs> composite_apply(OperatorKind kind, const Suspension& s,
                                          const std::vector<ScalarCoeffs>& densities, const CompositeOptions& opt)
{
    CompositeOptions o = opt;
    o.self_limit = limit_of(kind);
    return composite_impl(LayerCombo::from_kind(kind), s, densities, o);
}

std::vector<VectorCoeffsVWX> composite_apply(OperatorKind kind, const Suspension& s,
                                             const std::vector<VectorCoeffsVWX>& densities,
                                             const CompositeOptions& opt)
{
    CompositeOptions o = opt;
    o.self_limit = limit_of(kind);
    return composite_impl(LayerCombo::from_kind(kind), s, densities, o);
}

std::vector<FieldValues> composite_values(const std::vector<ScalarCoeffs>& coeffs)
{
    std::vector<FieldValues> out;
    out.reserve(coeffs.size());
    for (const ScalarCoeffs& c : coeffs)
        out.push_back(synthesize(c));
    return out;
}

std::vector<FieldValues> composite_values(const std::vector<VectorCoeffsVWX>& coeffs)
{
    std::vector<FieldValues> out;
    out.reserve(coeffs.size());
    for (const VectorCoeffsVWX& c : coeffs)
        out.push_back(synthesize(c));
    return out;
}

FieldValues evaluate_field(const LayerCombo& combo, const Suspension& s, const std::vector<ScalarCoeffs>& densities,
                           const TargetBatch& targets)
{
    return field_impl(combo, s, densities, targets);
}

FieldValues evaluate_field(const LayerCombo& combo, const Suspension& s,
                           const std::vector<VectorCoeffsVWX>& densities, const TargetBatch& targets)
{
    return field_impl(combo, s, densities, targets);
}

}  // namespace sbie

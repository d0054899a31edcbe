#pragma once

#include "sbie/evaluation.hpp"

#include <memory>
#include <string>

namespace sbie {

// Far-field summation interface. An FMM can implement it; targets never coincide with sources.
class FarFieldBackend {
public:
    virtual ~FarFieldBackend() = default;
    virtual std::string name() const = 0;
    virtual FieldValues evaluate(const LayerCombo& combo, const PointSources& sources,
                                 const TargetBatch& targets) const = 0;
};

// Exact O(N_src N_trg) summation.
class DirectFarField : public FarFieldBackend {
public:
    std::string name() const override { return "direct"; }
    FieldValues evaluate(const LayerCombo& combo, const PointSources& sources,
                         const TargetBatch& targets) const override;
};

// Returns zeros; isolates near and self cost in timings.
class NullFarField : public FarFieldBackend {
public:
    std::string name() const override { return "null"; }
    FieldValues evaluate(const LayerCombo& combo, const PointSources& sources,
                         const TargetBatch& targets) const override;
};

std::unique_ptr<FarFieldBackend> make_far_backend(const std::string& name);

enum class NearMethod { Fft, Direct };

struct CompositeOptions {
    NearMethod near = NearMethod::Fft;
    SurfaceLimit self_limit = SurfaceLimit::Exterior;
    const FarFieldBackend* far = nullptr;  // null: a shared DirectFarField
};

// Field of all spheres on every sphere surface, as coefficients of order p per target sphere.
// Pairs that are not well separated use the near path, others the far backend.
std::vector<ScalarCoeffs> composite_apply(const LayerCombo& combo, const Suspension& s,
                                          const std::vector<ScalarCoeffs>& densities,
                                          const CompositeOptions& opt = {});
std::vector<VectorCoeffsVWX> composite_apply(const LayerCombo& combo, const Suspension& s,
                                             const std::vector<VectorCoeffsVWX>& densities,
                                             const CompositeOptions& opt = {});
// Kind overloads use the kind's side for the self term.
std::vector<ScalarCoeffs> composite_apply(OperatorKind kind, const Suspension& s,
                                          const std::vector<ScalarCoeffs>& densities,
                                          const CompositeOptions& opt = {});
std::vector<VectorCoeffsVWX> composite_apply(OperatorKind kind, const Suspension& s,
                                             const std::vector<VectorCoeffsVWX>& densities,
                                             const CompositeOptions& opt = {});

// Grid values per sphere after the single inverse transform.
std::vector<FieldValues> composite_values(const std::vector<ScalarCoeffs>& coeffs);
std::vector<FieldValues> composite_values(const std::vector<VectorCoeffsVWX>& coeffs);

// Exterior field of all spheres at arbitrary points in the fluid. Points inside a sphere are
// rejected; points on a surface take the exterior limit.
FieldValues evaluate_field(const LayerCombo& combo, const Suspension& s, const std::vector<ScalarCoeffs>& densities,
                           const TargetBatch& targets);
FieldValues evaluate_field(const LayerCombo& combo, const Suspension& s,
                           const std::vector<VectorCoeffsVWX>& densities, const TargetBatch& targets);

}  // namespace sbie

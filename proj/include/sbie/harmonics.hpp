#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <vector>

namespace sbie {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;

// Row j = polar node, column k = azimuthal node.
using GridValues = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline int num_coeffs(int p) { return (p + 1) * (p + 1); }
inline int coeff_index(int n, int m) { return n * n + n + m; }
inline int tri_index(int n, int m) { return n * (n + 1) / 2 + m; }

struct GridSpec {
    int p = 1;
};

struct SphGrid {
    int p = 0;
    std::vector<double> theta, cos_theta, sin_theta, lambda;
    std::vector<double> phi;

    int nlat() const { return p + 1; }
    int nlon() const { return 2 * p + 2; }
    // smooth-quadrature weight for node (j, k) on the unit sphere
    double weight(int j) const;
};

SphGrid make_grid(const GridSpec& spec);

// Gauss-Legendre nodes in descending order of x (ascending theta) and weights.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

struct ScalarCoeffs {
    int p = 0;
    std::vector<cplx> c;

    ScalarCoeffs() = default;
    explicit ScalarCoeffs(int order) : p(order), c(num_coeffs(order)) {}

    cplx& operator()(int n, int m) { return c[coeff_index(n, m)]; }
    cplx operator()(int n, int m) const { return c[coeff_index(n, m)]; }
    // zero outside the stored range
    cplx at(int n, int m) const;

    ScalarCoeffs resized(int order) const;
    double norm() const;
    // Y_n^{-m} = conj(Y_n^m) here, so a real field has c(n,-m) == conj(c(n,m)).
    bool is_real_field(double tol = 1e-12) const;
};

struct VectorCoeffsVWX {
    int p = 0;
    ScalarCoeffs v, w, x;

    VectorCoeffsVWX() = default;
    explicit VectorCoeffsVWX(int order) : p(order), v(order), w(order), x(order) {}
    VectorCoeffsVWX resized(int order) const;
    double norm() const;
};

struct VectorCoeffsYGX {
    int p = 0;
    ScalarCoeffs y, g, x;

    VectorCoeffsYGX() = default;
    explicit VectorCoeffsYGX(int order) : p(order), y(order), g(order), x(order) {}
};

// Unnormalized P_n^m(x) including the (-1)^m phase, P_2^1 = -3x sqrt(1-x^2). Degree <= 32.
double assoc_legendre(int n, int m, double x);

// Fully normalized P~_n^m(theta) for 0 <= m <= n <= N (tri_index layout), so that
// Y_n^m = P~_n^|m| e^{imφ}. dP holds d/dθ and Ps holds P~/sinθ (m >= 1, zero for m = 0);
// both are pole safe. Any output pointer may be null.
void legendre_normalized(int N, double theta, double* P, double* dP, double* Ps);

// sinθ ∂θ Y_n^m = alpha Y_{n+1}^m - beta Y_{n-1}^m
double alpha_nm(int n, int m);
double beta_nm(int n, int m);

cplx ynm_eval(int n, int m, double theta, double phi);

enum class VshBasis { V, W, X };

// spherical components (e_r, e_θ, e_φ)
CVec3 eval_vector_harmonic(VshBasis basis, int n, int m, double theta, double phi);

// Columns e_r, e_θ, e_φ in Cartesian coordinates.
Mat3 spherical_frame(double theta, double phi);
void cart_to_sph(const Vec3& x, double& r, double& theta, double& phi);

VectorCoeffsYGX to_ygx(const VectorCoeffsVWX& c);
VectorCoeffsVWX to_vwx(const VectorCoeffsYGX& c);

// Precomputed transforms on the order-p grid. Immutable after construction.
class Sht {
public:
    explicit Sht(int p);
    ~Sht();
    Sht(const Sht&) = delete;
    Sht& operator=(const Sht&) = delete;

    int order() const { return p_; }
    const SphGrid& grid() const { return grid_; }

    // Degrees up to N (p or p+1), orders |m| <= p.
    ScalarCoeffs forward(const GridValues& f, int N = -1) const;
    GridValues inverse(const ScalarCoeffs& c) const;

    VectorCoeffsVWX vforward(const GridValues& fr, const GridValues& ft, const GridValues& fp) const;
    void vinverse(const VectorCoeffsVWX& c, GridValues& fr, GridValues& ft, GridValues& fp) const;

    // Cartesian component fields on the grid.
    VectorCoeffsVWX vforward_cart(const GridValues& fx, const GridValues& fy, const GridValues& fz) const;
    void vinverse_cart(const VectorCoeffsVWX& c, GridValues& fx, GridValues& fy, GridValues& fz) const;

    // P~_n^m at node j, n <= p+1
    double legendre(int j, int n, int m) const { return P_[j * tri_size_ + tri_index(n, m)]; }

private:
    void fft_rows(GridValues& a, bool forward) const;

    int p_;
    SphGrid grid_;
    int tri_size_;
    std::vector<double> P_;
    void* plan_fwd_ = nullptr;
    void* plan_bwd_ = nullptr;
};

// Shared instance per order.
const Sht& sht(int p);

// Direct summation at arbitrary points.
std::vector<cplx> sht_inverse_points(const ScalarCoeffs& c, const std::vector<double>& theta,
                                     const std::vector<double>& phi);
cplx eval_scalar(const ScalarCoeffs& c, double theta, double phi);
CVec3 eval_vector(const VectorCoeffsVWX& c, double theta, double phi);

// Per-m matrices of the tangential maps. Forward: interleaved (a_k, b_k), k = |m|..p+1, the
// coefficients of f_θ/sinθ and f_φ/sinθ, to interleaved (G_n, X_n), n = |m|..p.
// Inverse: (G_n, X_n) to the coefficients of sinθ f_θ and sinθ f_φ, k = |m|..p+1.
// Quadrature: the grid map from sinθ·f coefficients to f/sinθ coefficients.
Eigen::MatrixXcd tangential_forward_matrix(int p, int m);
Eigen::MatrixXcd tangential_inverse_matrix(int p, int m);
Eigen::MatrixXcd tangential_quadrature_matrix(int p, int m);

}  // namespace sbie

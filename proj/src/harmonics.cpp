#include "sbie/harmonics.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sbie {

namespace {

constexpr double pi = std::numbers::pi;

std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

inline int fft_bin(int m, int L) { return m >= 0 ? m : L + m; }

}  // namespace

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w)
{
    if (n < 1)
        throw std::invalid_argument("gauss_legendre: n must be positive");
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1)
                p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if (n == 1)
            p0 = 1.0;
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    if (n % 2 == 1)
        x[n / 2] = 0.0;
}

double SphGrid::weight(int j) const
{
    return 2.0 * pi * lambda[j] / nlon();
}

SphGrid make_grid(const GridSpec& spec)
{
    if (spec.p < 1)
        throw std::invalid_argument("grid order must be >= 1");
    SphGrid g;
    g.p = spec.p;
    gauss_legendre(spec.p + 1, g.cos_theta, g.lambda);
    for (double t : g.cos_theta) {
        g.theta.push_back(std::acos(t));
        g.sin_theta.push_back(std::sqrt((1.0 - t) * (1.0 + t)));
    }
    const int L = g.nlon();
    for (int k = 0; k < L; ++k)
        g.phi.push_back(2.0 * pi * k / L);
    return g;
}

cplx ScalarCoeffs::at(int n, int m) const
{
    if (n < 0 || n > p || std::abs(m) > n)
        return 0.0;
    return c[coeff_index(n, m)];
}

ScalarCoeffs ScalarCoeffs::resized(int order) const
{
    ScalarCoeffs out(order);
    const int nmax = std::min(order, p);
    for (int i = 0; i < num_coeffs(nmax); ++i)
        out.c[i] = c[i];
    return out;
}

double ScalarCoeffs::norm() const
{
    double s = 0.0;
    for (const auto& z : c)
        s += std::norm(z);
    return std::sqrt(s);
}

bool ScalarCoeffs::is_real_field(double tol) const
{
    for (int n = 0; n <= p; ++n)
        for (int m = 0; m <= n; ++m)
            if (std::abs((*this)(n, -m) - std::conj((*this)(n, m))) > tol)
                return false;
    return true;
}

VectorCoeffsVWX VectorCoeffsVWX::resized(int order) const
{
    VectorCoeffsVWX out;
    out.p = order;
    out.v = v.resized(order);
    out.w = w.resized(order);
    out.x = x.resized(order);
    return out;
}

double VectorCoeffsVWX::norm() const
{
    return std::sqrt(v.norm() * v.norm() + w.norm() * w.norm() + x.norm() * x.norm());
}

double assoc_legendre(int n, int m, double x)
{
    if (m < 0 || n < m)
        throw std::invalid_argument("assoc_legendre: need 0 <= m <= n");
    if (n > 32)
        throw std::invalid_argument("assoc_legendre: unnormalized values limited to degree 32");
    if (!(std::abs(x) <= 1.0))
        throw std::invalid_argument("assoc_legendre: |x| must be <= 1");
    double pmm = 1.0;
    const double s = std::sqrt((1.0 - x) * (1.0 + x));
    for (int i = 1; i <= m; ++i)
        pmm *= -(2.0 * i - 1.0) * s;
    if (n == m)
        return pmm;
    double pm1 = x * (2.0 * m + 1.0) * pmm;
    if (n == m + 1)
        return pm1;
    double pnm = 0.0;
    for (int k = m + 2; k <= n; ++k) {
        pnm = (x * (2.0 * k - 1.0) * pm1 - (k + m - 1.0) * pmm) / (k - m);
        pmm = pm1;
        pm1 = pnm;
    }
    return pnm;
}

double alpha_nm(int n, int m)
{
    const double mm = double(m) * m;
    const double num = (n + 1.0) * (n + 1.0) - mm;
    return n * std::sqrt(num / ((2.0 * n + 1.0) * (2.0 * n + 3.0)));
}

double beta_nm(int n, int m)
{
    const double mm = double(m) * m;
    const double num = double(n) * n - mm;
    if (num <= 0.0)
        return 0.0;
    return (n + 1.0) * std::sqrt(num / ((2.0 * n - 1.0) * (2.0 * n + 1.0)));
}

void legendre_normalized(int N, double theta, double* P, double* dP, double* Ps)
{
    const int M = N + 1;
    const double x = std::cos(theta);
    const double s = std::sin(theta);
    std::vector<double> p((M + 1) * (M + 2) / 2), ps((M + 1) * (M + 2) / 2, 0.0);

    double pmm = 1.0 / std::sqrt(4.0 * pi);
    for (int m = 0; m <= M; ++m) {
        double psmm = 0.0;
        if (m > 0) {
            const double f = -std::sqrt((2.0 * m + 1.0) / (2.0 * m));
            psmm = f * pmm;
            pmm = f * s * pmm;
        }
        p[tri_index(m, m)] = pmm;
        ps[tri_index(m, m)] = psmm;
        if (m + 1 <= M) {
            const double f = std::sqrt(2.0 * m + 3.0);
            p[tri_index(m + 1, m)] = f * x * pmm;
            ps[tri_index(m + 1, m)] = f * x * psmm;
        }
        for (int n = m + 2; n <= M; ++n) {
            const double a = std::sqrt((4.0 * n * n - 1.0) / (double(n) * n - double(m) * m));
            const double b = std::sqrt(((n - 1.0) * (n - 1.0) - double(m) * m) /
                                       (4.0 * (n - 1.0) * (n - 1.0) - 1.0));
            p[tri_index(n, m)] = a * (x * p[tri_index(n - 1, m)] - b * p[tri_index(n - 2, m)]);
            ps[tri_index(n, m)] = a * (x * ps[tri_index(n - 1, m)] - b * ps[tri_index(n - 2, m)]);
        }
    }

    for (int n = 0; n <= N; ++n) {
        for (int m = 0; m <= n; ++m) {
            const int i = tri_index(n, m);
            if (P)
                P[i] = p[i];
            if (Ps)
                Ps[i] = m > 0 ? ps[i] : 0.0;
            if (dP) {
                if (m == 0) {
                    dP[i] = n > 0 ? std::sqrt(n * (n + 1.0)) * p[tri_index(n, 1)] : 0.0;
                } else {
                    double d = alpha_nm(n, m) * ps[tri_index(n + 1, m)];
                    if (n - 1 >= m)
                        d -= beta_nm(n, m) * ps[tri_index(n - 1, m)];
                    dP[i] = d;
                }
            }
        }
    }
}

cplx ynm_eval(int n, int m, double theta, double phi)
{
    if (n < 0 || std::abs(m) > n)
        throw std::invalid_argument("ynm_eval: need |m| <= n");
    if (!std::isfinite(theta) || !std::isfinite(phi))
        throw std::invalid_argument("ynm_eval: angles must be finite");
    std::vector<double> P((n + 1) * (n + 2) / 2);
    legendre_normalized(n, theta, P.data(), nullptr, nullptr);
    return P[tri_index(n, std::abs(m))] * std::polar(1.0, m * phi);
}

CVec3 eval_vector_harmonic(VshBasis basis, int n, int m, double theta, double phi)
{
    if (n < 0 || std::abs(m) > n)
        throw std::invalid_argument("eval_vector_harmonic: need |m| <= n");
    const int sz = (n + 1) * (n + 2) / 2;
    std::vector<double> P(sz), dP(sz), Ps(sz);
    legendre_normalized(n, theta, P.data(), dP.data(), Ps.data());
    const int i = tri_index(n, std::abs(m));
    const cplx e = std::polar(1.0, m * phi);
    const cplx y = P[i] * e, yt = dP[i] * e, yp = cplx(0.0, m) * Ps[i] * e;
    switch (basis) {
    case VshBasis::V:
        return CVec3(-(n + 1.0) * y, yt, yp);
    case VshBasis::W:
        return CVec3(double(n) * y, yt, yp);
    case VshBasis::X:
        return CVec3(0.0, -yp, yt);
    }
    return CVec3::Zero();
}

Mat3 spherical_frame(double theta, double phi)
{
    const double st = std::sin(theta), ct = std::cos(theta), sp = std::sin(phi), cp = std::cos(phi);
    Mat3 F;
    F.col(0) << st * cp, st * sp, ct;
    F.col(1) << ct * cp, ct * sp, -st;
    F.col(2) << -sp, cp, 0.0;
    return F;
}

void cart_to_sph(const Vec3& x, double& r, double& theta, double& phi)
{
    r = x.norm();
    theta = r > 0.0 ? std::atan2(std::hypot(x.x(), x.y()), x.z()) : 0.0;
    phi = std::atan2(x.y(), x.x());
    if (phi < 0.0)
        phi += 2.0 * pi;
}

VectorCoeffsYGX to_ygx(const VectorCoeffsVWX& c)
{
    VectorCoeffsYGX out(c.p);
    out.x = c.x;
    for (int n = 0; n <= c.p; ++n)
        for (int m = -n; m <= n; ++m) {
            const int i = coeff_index(n, m);
            out.y.c[i] = -(n + 1.0) * c.v.c[i] + double(n) * c.w.c[i];
            out.g.c[i] = n > 0 ? c.v.c[i] + c.w.c[i] : 0.0;
        }
    out.x.c[0] = 0.0;
    return out;
}

VectorCoeffsVWX to_vwx(const VectorCoeffsYGX& c)
{
    VectorCoeffsVWX out(c.p);
    out.x = c.x;
    for (int n = 0; n <= c.p; ++n)
        for (int m = -n; m <= n; ++m) {
            const int i = coeff_index(n, m);
            if (n == 0) {
                out.v.c[i] = -c.y.c[i];
                out.w.c[i] = 0.0;
            } else {
                out.v.c[i] = (double(n) * c.g.c[i] - c.y.c[i]) / (2.0 * n + 1.0);
                out.w.c[i] = ((n + 1.0) * c.g.c[i] + c.y.c[i]) / (2.0 * n + 1.0);
            }
        }
    out.x.c[0] = 0.0;
    return out;
}

Sht::Sht(int p) : p_(p), grid_(make_grid(GridSpec{p}))
{
    const int N = p + 1;
    tri_size_ = (N + 1) * (N + 2) / 2;
    P_.resize(size_t(grid_.nlat()) * tri_size_);
    for (int j = 0; j < grid_.nlat(); ++j)
        legendre_normalized(N, grid_.theta[j], &P_[size_t(j) * tri_size_], nullptr, nullptr);

    const int L = grid_.nlon();
    std::vector<cplx> a(L), b(L);
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan_fwd_ = fftw_plan_dft_1d(L, in, out, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_bwd_ = fftw_plan_dft_1d(L, in, out, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

Sht::~Sht()
{
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

void Sht::fft_rows(GridValues& a, bool forward) const
{
    const int L = grid_.nlon();
    std::vector<cplx> tmp(L);
    auto plan = static_cast<fftw_plan>(forward ? plan_fwd_ : plan_bwd_);
    for (int j = 0; j < a.rows(); ++j) {
        auto* row = reinterpret_cast<fftw_complex*>(a.row(j).data());
        fftw_execute_dft(plan, row, reinterpret_cast<fftw_complex*>(tmp.data()));
        for (int k = 0; k < L; ++k)
            a(j, k) = tmp[k];
    }
}

ScalarCoeffs Sht::forward(const GridValues& f, int N) const
{
    if (N < 0)
        N = p_;
    if (N > p_ + 1)
        throw std::invalid_argument("Sht::forward: degree exceeds p+1");
    if (f.rows() != grid_.nlat() || f.cols() != grid_.nlon())
        throw std::invalid_argument("Sht::forward: sample shape does not match the grid");
    const int L = grid_.nlon();
    GridValues F = f;
    fft_rows(F, true);
    const double scale = 2.0 * pi / L;
    ScalarCoeffs c(N);
    for (int j = 0; j < grid_.nlat(); ++j) {
        const double wj = grid_.lambda[j] * scale;
        const double* Pj = &P_[size_t(j) * tri_size_];
        for (int m = -std::min(N, p_); m <= std::min(N, p_); ++m) {
            const cplx Fm = F(j, fft_bin(m, L)) * wj;
            const int am = std::abs(m);
            for (int n = am; n <= N; ++n)
                c(n, m) += Pj[tri_index(n, am)] * Fm;
        }
    }
    return c;
}

GridValues Sht::inverse(const ScalarCoeffs& c) const
{
    if (c.p > p_ + 1)
        throw std::invalid_argument("Sht::inverse: degree exceeds p+1");
    const int L = grid_.nlon();
    GridValues G = GridValues::Zero(grid_.nlat(), L);
    const int mmax = std::min(c.p, p_);
    for (int j = 0; j < grid_.nlat(); ++j) {
        const double* Pj = &P_[size_t(j) * tri_size_];
        for (int m = -mmax; m <= mmax; ++m) {
            const int am = std::abs(m);
            cplx s = 0.0;
            for (int n = am; n <= c.p; ++n)
                s += Pj[tri_index(n, am)] * c(n, m);
            G(j, fft_bin(m, L)) = s;
        }
    }
    fft_rows(G, false);
    return G;
}

VectorCoeffsVWX Sht::vforward(const GridValues& fr, const GridValues& ft, const GridValues& fp) const
{
    GridValues a = ft, b = fp;
    for (int j = 0; j < grid_.nlat(); ++j) {
        a.row(j) /= grid_.sin_theta[j];
        b.row(j) /= grid_.sin_theta[j];
    }
    const ScalarCoeffs ca = forward(a, p_ + 1), cb = forward(b, p_ + 1);
    VectorCoeffsYGX ygx(p_);
    ygx.y = forward(fr, p_);
    for (int n = 1; n <= p_; ++n) {
        const double nn = n * (n + 1.0);
        for (int m = -n; m <= n; ++m) {
            const double al = alpha_nm(n, m), be = beta_nm(n, m);
            const cplx im(0.0, m);
            ygx.g(n, m) = (al * ca.at(n + 1, m) - be * ca.at(n - 1, m) - im * cb(n, m)) / nn;
            ygx.x(n, m) = (im * ca(n, m) + al * cb.at(n + 1, m) - be * cb.at(n - 1, m)) / nn;
        }
    }
    return to_vwx(ygx);
}

void Sht::vinverse(const VectorCoeffsVWX& c, GridValues& fr, GridValues& ft, GridValues& fp) const
{
    if (c.p > p_)
        throw std::invalid_argument("Sht::vinverse: degree exceeds grid order");
    const VectorCoeffsYGX ygx = to_ygx(c);
    ScalarCoeffs st(c.p + 1), sp(c.p + 1);
    for (int n = 1; n <= c.p; ++n)
        for (int m = -n; m <= n; ++m) {
            const double al = alpha_nm(n, m), be = beta_nm(n, m);
            const cplx im(0.0, m);
            const cplx g = ygx.g(n, m), x = ygx.x(n, m);
            st(n + 1, m) += al * g;
            sp(n + 1, m) += al * x;
            if (n - 1 >= std::abs(m)) {
                st(n - 1, m) -= be * g;
                sp(n - 1, m) -= be * x;
            }
            st(n, m) -= im * x;
            sp(n, m) += im * g;
        }
    fr = inverse(ygx.y);
    ft = inverse(st);
    fp = inverse(sp);
    for (int j = 0; j < grid_.nlat(); ++j) {
        ft.row(j) /= grid_.sin_theta[j];
        fp.row(j) /= grid_.sin_theta[j];
    }
}

VectorCoeffsVWX Sht::vforward_cart(const GridValues& fx, const GridValues& fy, const GridValues& fz) const
{
    const int J = grid_.nlat(), L = grid_.nlon();
    GridValues fr(J, L), ft(J, L), fp(J, L);
    for (int j = 0; j < J; ++j)
        for (int k = 0; k < L; ++k) {
            const Mat3 F = spherical_frame(grid_.theta[j], grid_.phi[k]);
            const CVec3 v(fx(j, k), fy(j, k), fz(j, k));
            const CVec3 s = F.transpose().cast<cplx>() * v;
            fr(j, k) = s(0);
            ft(j, k) = s(1);
            fp(j, k) = s(2);
        }
    return vforward(fr, ft, fp);
}

void Sht::vinverse_cart(const VectorCoeffsVWX& c, GridValues& fx, GridValues& fy, GridValues& fz) const
{
    GridValues fr, ft, fp;
    vinverse(c, fr, ft, fp);
    const int J = grid_.nlat(), L = grid_.nlon();
    fx.resize(J, L);
    fy.resize(J, L);
    fz.resize(J, L);
    for (int j = 0; j < J; ++j)
        for (int k = 0; k < L; ++k) {
            const Mat3 F = spherical_frame(grid_.theta[j], grid_.phi[k]);
            const CVec3 v = F.cast<cplx>() * CVec3(fr(j, k), ft(j, k), fp(j, k));
            fx(j, k) = v(0);
            fy(j, k) = v(1);
            fz(j, k) = v(2);
        }
}

const Sht& sht(int p)
{
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<Sht>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto& slot = cache[p];
    if (!slot)
        slot = std::make_unique<Sht>(p);
    return *slot;
}

std::vector<cplx> sht_inverse_points(const ScalarCoeffs& c, const std::vector<double>& theta,
                                     const std::vector<double>& phi)
{
    if (theta.size() != phi.size())
        throw std::invalid_argument("sht_inverse_points: theta/phi size mismatch");
    std::vector<cplx> out(theta.size());
    for (size_t i = 0; i < theta.size(); ++i)
        out[i] = eval_scalar(c, theta[i], phi[i]);
    return out;
}

cplx eval_scalar(const ScalarCoeffs& c, double theta, double phi)
{
    std::vector<double> P((c.p + 1) * (c.p + 2) / 2);
    legendre_normalized(c.p, theta, P.data(), nullptr, nullptr);
    cplx s = 0.0;
    for (int m = -c.p; m <= c.p; ++m) {
        cplx t = 0.0;
        const int am = std::abs(m);
        for (int n = am; n <= c.p; ++n)
            t += P[tri_index(n, am)] * c(n, m);
        s += t * std::polar(1.0, m * phi);
    }
    return s;
}

CVec3 eval_vector(const VectorCoeffsVWX& c, double theta, double phi)
{
    const int sz = (c.p + 1) * (c.p + 2) / 2;
    std::vector<double> P(sz), dP(sz), Ps(sz);
    legendre_normalized(c.p, theta, P.data(), dP.data(), Ps.data());
    CVec3 out = CVec3::Zero();
    for (int m = -c.p; m <= c.p; ++m) {
        const int am = std::abs(m);
        const cplx im(0.0, m);
        cplx r = 0.0, t = 0.0, f = 0.0;
        for (int n = am; n <= c.p; ++n) {
            const int i = tri_index(n, am);
            const cplx v = c.v(n, m), w = c.w(n, m), x = c.x(n, m);
            r += P[i] * (double(n) * w - (n + 1.0) * v);
            t += dP[i] * (v + w) - im * Ps[i] * x;
            f += im * Ps[i] * (v + w) + dP[i] * x;
        }
        const cplx e = std::polar(1.0, m * phi);
        out += CVec3(r, t, f) * e;
    }
    return out;
}

Eigen::MatrixXcd tangential_forward_matrix(int p, int m)
{
    const int am = std::abs(m);
    const int K = p + 2 - am, Nn = p + 1 - am;
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(2 * Nn, 2 * K);
    const cplx im(0.0, m);
    for (int n = std::max(1, am); n <= p; ++n) {
        const double nn = n * (n + 1.0), al = alpha_nm(n, m), be = beta_nm(n, m);
        const int rg = 2 * (n - am), rx = rg + 1;
        T(rg, 2 * (n + 1 - am)) += al / nn;
        T(rx, 2 * (n + 1 - am) + 1) += al / nn;
        if (n - 1 >= am) {
            T(rg, 2 * (n - 1 - am)) -= be / nn;
            T(rx, 2 * (n - 1 - am) + 1) -= be / nn;
        }
        T(rg, 2 * (n - am) + 1) -= im / nn;
        T(rx, 2 * (n - am)) += im / nn;
    }
    return T;
}

Eigen::MatrixXcd tangential_inverse_matrix(int p, int m)
{
    const int am = std::abs(m);
    const int K = p + 2 - am, Nn = p + 1 - am;
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(2 * K, 2 * Nn);
    const cplx im(0.0, m);
    for (int n = std::max(1, am); n <= p; ++n) {
        const double al = alpha_nm(n, m), be = beta_nm(n, m);
        const int cg = 2 * (n - am), cx = cg + 1;
        T(2 * (n + 1 - am), cg) += al;
        T(2 * (n + 1 - am) + 1, cx) += al;
        if (n - 1 >= am) {
            T(2 * (n - 1 - am), cg) -= be;
            T(2 * (n - 1 - am) + 1, cx) -= be;
        }
        T(2 * (n - am), cx) -= im;
        T(2 * (n - am) + 1, cg) += im;
    }
    return T;
}

Eigen::MatrixXcd tangential_quadrature_matrix(int p, int m)
{
    const int am = std::abs(m);
    const int K = p + 2 - am;
    const Sht& S = sht(p);
    const SphGrid& g = S.grid();
    Eigen::MatrixXcd Q = Eigen::MatrixXcd::Zero(2 * K, 2 * K);
    for (int k = am; k <= p + 1; ++k)
        for (int l = am; l <= p + 1; ++l) {
            double s = 0.0;
            for (int j = 0; j < g.nlat(); ++j)
                s += g.lambda[j] * S.legendre(j, k, am) * S.legendre(j, l, am) /
                     (g.sin_theta[j] * g.sin_theta[j]);
            s *= 2.0 * pi;
            Q(2 * (k - am), 2 * (l - am)) = s;
            Q(2 * (k - am) + 1, 2 * (l - am) + 1) = s;
        }
    return Q;
}

}  // namespace sbie

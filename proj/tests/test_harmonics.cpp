#include "sbie/harmonics.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sbie;
using namespace sbie::testing;

namespace {
constexpr double pi = std::numbers::pi;

GridValues sample(int p, const std::function<cplx(double, double)>& f)
{
    const SphGrid& g = sht(p).grid();
    GridValues out(g.nlat(), g.nlon());
    for (int j = 0; j < g.nlat(); ++j)
        for (int k = 0; k < g.nlon(); ++k)
            out(j, k) = f(g.theta[j], g.phi[k]);
    return out;
}

// the inverse map of the (V,W,X) basis evaluated mode by mode
void sample_vector(int p, const VectorCoeffsVWX& c, GridValues& fr, GridValues& ft, GridValues& fp)
{
    const SphGrid& g = sht(p).grid();
    fr.setZero(g.nlat(), g.nlon());
    ft = fr;
    fp = fr;
    for (int j = 0; j < g.nlat(); ++j)
        for (int k = 0; k < g.nlon(); ++k) {
            CVec3 s = CVec3::Zero();
            for (int n = 0; n <= c.p; ++n)
                for (int m = -n; m <= n; ++m) {
                    s += c.v(n, m) * eval_vector_harmonic(VshBasis::V, n, m, g.theta[j], g.phi[k]);
                    s += c.w(n, m) * eval_vector_harmonic(VshBasis::W, n, m, g.theta[j], g.phi[k]);
                    s += c.x(n, m) * eval_vector_harmonic(VshBasis::X, n, m, g.theta[j], g.phi[k]);
                }
            fr(j, k) = s(0);
            ft(j, k) = s(1);
            fp(j, k) = s(2);
        }
}
}  // namespace

TEST_CASE("grid nodes and weights")
{
    for (int p : {1, 4, 16, 64, 256}) {
        const SphGrid g = make_grid(GridSpec{p});
        CHECK(g.nlat() == p + 1);
        CHECK(g.nlon() == 2 * p + 2);
        double s = 0.0;
        for (int j = 0; j < g.nlat(); ++j) {
            s += g.lambda[j];
            CHECK(g.theta[j] > 0.0);
            CHECK(g.theta[j] < pi);
            if (j > 0)
                CHECK(g.theta[j] > g.theta[j - 1]);
        }
        CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(g.phi[0] == 0.0);
    }
    CHECK_THROWS_AS(make_grid(GridSpec{0}), std::invalid_argument);
}

TEST_CASE("unnormalized associated Legendre")
{
    CHECK(assoc_legendre(0, 0, 0.3) == 1.0);
    CHECK(assoc_legendre(1, 0, 0.5) == 0.5);
    CHECK(std::abs(assoc_legendre(2, 1, 0.0)) < 1e-16);
    for (int i = 0; i <= 20; ++i) {
        const double x = -1.0 + 0.1 * i;
        const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
        CHECK(assoc_legendre(2, 1, x) == doctest::Approx(-3.0 * x * s).epsilon(1e-14));
        CHECK(assoc_legendre(2, 2, x) == doctest::Approx(3.0 * (1 - x * x)).epsilon(1e-14));
        CHECK(assoc_legendre(3, 0, x) == doctest::Approx(0.5 * (5 * x * x * x - 3 * x)).epsilon(1e-14));
        CHECK(assoc_legendre(1, 1, x) == doctest::Approx(-s).epsilon(1e-14));
    }
    CHECK_THROWS_AS(assoc_legendre(2, 3, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(assoc_legendre(2, 1, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(assoc_legendre(40, 1, 0.5), std::invalid_argument);
}

TEST_CASE("normalized table agrees with unnormalized values")
{
    const int N = 30;
    std::vector<double> P((N + 1) * (N + 2) / 2);
    for (double th : {0.01, 0.7, 1.9, 3.1}) {
        legendre_normalized(N, th, P.data(), nullptr, nullptr);
        for (int n = 0; n <= N; ++n)
            for (int m = 0; m <= n; ++m) {
                const double lf = std::lgamma(n - m + 1.0) - std::lgamma(n + m + 1.0);
                const double ref = std::sqrt((2 * n + 1) / (4 * pi) * std::exp(lf)) *
                                   assoc_legendre(n, m, std::cos(th));
                CHECK(std::abs(P[tri_index(n, m)] - ref) < 1e-11 * (1 + std::abs(ref)));
            }
    }
}

TEST_CASE("Legendre derivative and pole-safe quotient")
{
    const int N = 40;
    const int sz = (N + 1) * (N + 2) / 2;
    std::vector<double> P(sz), dP(sz), Ps(sz), Pp(sz), Pm(sz);
    const double h = 1e-6;
    for (double th : {0.3, 1.2, 2.8}) {
        legendre_normalized(N, th, P.data(), dP.data(), Ps.data());
        legendre_normalized(N, th + h, Pp.data(), nullptr, nullptr);
        legendre_normalized(N, th - h, Pm.data(), nullptr, nullptr);
        for (int n = 0; n <= N; ++n)
            for (int m = 0; m <= n; ++m) {
                const int i = tri_index(n, m);
                const double fd = (Pp[i] - Pm[i]) / (2 * h);
                CHECK(std::abs(dP[i] - fd) < 1e-6 * (1 + std::abs(fd)));
                if (m > 0)
                    CHECK(std::abs(Ps[i] * std::sin(th) - P[i]) < 1e-13);
            }
    }
    // finite at the poles
    legendre_normalized(N, 0.0, P.data(), dP.data(), Ps.data());
    for (double v : Ps)
        CHECK(std::isfinite(v));
    CHECK(Ps[tri_index(1, 1)] == doctest::Approx(-std::sqrt(3.0 / (8 * pi))));
}

TEST_CASE("high order table does not overflow")
{
    const int N = 256;
    const int sz = (N + 1) * (N + 2) / 2;
    std::vector<double> P(sz), dP(sz), Ps(sz);
    for (double th : {1e-3, 0.5, 1.5707}) {
        legendre_normalized(N, th, P.data(), dP.data(), Ps.data());
        for (int i = 0; i < sz; ++i) {
            CHECK(std::isfinite(P[i]));
            CHECK(std::abs(P[i]) < 10.0);
        }
    }
}

TEST_CASE("ynm values")
{
    CHECK(std::abs(ynm_eval(0, 0, 0.4, 1.3) - 1.0 / std::sqrt(4 * pi)) < 1e-15);
    CHECK(std::abs(ynm_eval(1, 0, 0.0, 0.0) - std::sqrt(3.0 / (4 * pi))) < 1e-15);
    for (double th : {0.3, 2.0})
        for (double ph : {0.0, 1.1})
            for (int n = 0; n < 5; ++n)
                for (int m = 1; m <= n; ++m)
                    CHECK(std::abs(ynm_eval(n, -m, th, ph) - std::conj(ynm_eval(n, m, th, ph))) < 1e-15);

    const SphGrid& g = sht(8).grid();
    double s = 0.0;
    for (int j = 0; j < g.nlat(); ++j)
        for (int k = 0; k < g.nlon(); ++k)
            s += g.weight(j) * std::norm(ynm_eval(2, 1, g.theta[j], g.phi[k]));
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("Gram matrix under grid quadrature")
{
    const int p = 8;
    const SphGrid& g = sht(p).grid();
    double err = 0.0;
    for (int n1 = 0; n1 <= p; ++n1)
        for (int m1 = -n1; m1 <= n1; ++m1)
            for (int n2 = 0; n2 <= p; ++n2)
                for (int m2 = -n2; m2 <= n2; ++m2) {
                    cplx s = 0.0;
                    for (int j = 0; j < g.nlat(); ++j)
                        for (int k = 0; k < g.nlon(); ++k)
                            s += g.weight(j) * ynm_eval(n1, m1, g.theta[j], g.phi[k]) *
                                 std::conj(ynm_eval(n2, m2, g.theta[j], g.phi[k]));
                    const double ref = (n1 == n2 && m1 == m2) ? 1.0 : 0.0;
                    err = std::max(err, std::abs(s - ref));
                }
    CHECK(err < 1e-12);
}

TEST_CASE("scalar transform")
{
    const int p = 10;
    const Sht& S = sht(p);
    ScalarCoeffs c = S.forward(sample(p, [](double t, double f) { return ynm_eval(2, 1, t, f); }));
    for (int n = 0; n <= p; ++n)
        for (int m = -n; m <= n; ++m)
            CHECK(std::abs(c(n, m) - ((n == 2 && m == 1) ? 1.0 : 0.0)) < 1e-13);

    c = S.forward(sample(p, [](double, double) { return 1.0 / std::sqrt(4 * pi); }));
    CHECK(std::abs(c(0, 0) - 1.0) < 1e-14);

    std::mt19937_64 rng(7);
    for (int q : {1, 5, 16, 33}) {
        const Sht& T = sht(q);
        const ScalarCoeffs r = random_scalar(q, rng);
        const GridValues f = T.inverse(r);
        CHECK(max_diff(T.forward(f), r) < 1e-12);
        CHECK((T.inverse(T.forward(f)) - f).cwiseAbs().maxCoeff() < 1e-12);

        // Parseval
        double s = 0.0;
        for (int j = 0; j < f.rows(); ++j)
            for (int k = 0; k < f.cols(); ++k)
                s += T.grid().weight(j) * std::norm(f(j, k));
        CHECK(std::abs(s - r.norm() * r.norm()) < 1e-10 * s);

        // direct summation at the grid nodes matches the FFT path
        std::vector<double> th, ph;
        for (int j = 0; j < f.rows(); j += 3)
            for (int k = 0; k < f.cols(); k += 5) {
                th.push_back(T.grid().theta[j]);
                ph.push_back(T.grid().phi[k]);
            }
        const auto vals = sht_inverse_points(r, th, ph);
        size_t i = 0;
        for (int j = 0; j < f.rows(); j += 3)
            for (int k = 0; k < f.cols(); k += 5)
                CHECK(std::abs(vals[i++] - f(j, k)) < 1e-11);
    }
    CHECK_THROWS_AS(S.forward(GridValues::Zero(3, 3)), std::invalid_argument);
}

TEST_CASE("real-field symmetry predicate")
{
    const int p = 9;
    const Sht& S = sht(p);
    std::mt19937_64 rng(3);
    GridValues f = S.inverse(random_scalar(p, rng));
    f = f.real().cast<cplx>();
    CHECK(S.forward(f).is_real_field(1e-12));
    CHECK_FALSE(random_scalar(p, rng).is_real_field());
    CHECK(random_real_scalar(p, rng).is_real_field());
}

TEST_CASE("vector harmonic values")
{
    CHECK(eval_vector_harmonic(VshBasis::X, 0, 0, 0.4, 0.2).norm() == 0.0);
    const CVec3 v0 = eval_vector_harmonic(VshBasis::V, 0, 0, 1.0, 2.0);
    CHECK(std::abs(v0(0) + 1.0 / std::sqrt(4 * pi)) < 1e-15);
    CHECK(std::abs(v0(1)) + std::abs(v0(2)) < 1e-15);
    for (double th : {0.2, 1.3, 2.9}) {
        const CVec3 w = eval_vector_harmonic(VshBasis::W, 1, 0, th, 0.7);
        const double c = std::sqrt(3 / (4 * pi));
        CHECK(std::abs(w(0) - c * std::cos(th)) < 1e-14);
        CHECK(std::abs(w(1) + c * std::sin(th)) < 1e-14);
        CHECK(std::abs(w(2)) < 1e-14);
    }
}

TEST_CASE("vector harmonics agree with finite-difference surface gradients")
{
    const double h = 1e-6;
    for (int n = 1; n <= 6; ++n)
        for (int m = -n; m <= n; ++m)
            for (double th : {0.4, 1.7}) {
                const double ph = 0.9;
                const cplx y = ynm_eval(n, m, th, ph);
                const cplx yt = (ynm_eval(n, m, th + h, ph) - ynm_eval(n, m, th - h, ph)) / (2 * h);
                const cplx yp = (ynm_eval(n, m, th, ph + h) - ynm_eval(n, m, th, ph - h)) / (2 * h) /
                                std::sin(th);
                const CVec3 V(-(n + 1.0) * y, yt, yp), W(double(n) * y, yt, yp), X(0.0, -yp, yt);
                CHECK((eval_vector_harmonic(VshBasis::V, n, m, th, ph) - V).norm() < 1e-8);
                CHECK((eval_vector_harmonic(VshBasis::W, n, m, th, ph) - W).norm() < 1e-8);
                CHECK((eval_vector_harmonic(VshBasis::X, n, m, th, ph) - X).norm() < 1e-8);
            }
}

TEST_CASE("vector transform")
{
    const int p = 8;
    const Sht& S = sht(p);
    const SphGrid& g = S.grid();
    GridValues fx = GridValues::Zero(g.nlat(), g.nlon()), fy = fx, fz = fx;
    fz.setConstant(1.0);
    VectorCoeffsVWX ez = S.vforward_cart(fx, fy, fz);
    CHECK(std::abs(ez.w(1, 0) - std::sqrt(4 * pi / 3)) < 1e-13);
    CHECK(std::abs(ez.w(1, 0).real() - 2.046653415892977) < 1e-12);
    ez.w.c[coeff_index(1, 0)] = 0.0;
    CHECK(ez.norm() < 1e-13);

    VectorCoeffsVWX x32(p);
    x32.x(3, 2) = 1.0;
    GridValues fr, ft, fp;
    sample_vector(p, x32, fr, ft, fp);
    const VectorCoeffsVWX back = S.vforward(fr, ft, fp);
    CHECK(max_diff(back, x32) < 1e-12);

    std::mt19937_64 rng(11);
    for (int q : {1, 3, 12, 32}) {
        const Sht& T = sht(q);
        const VectorCoeffsVWX c = random_vector(q, rng);
        GridValues a, b, d;
        T.vinverse(c, a, b, d);
        CHECK(max_diff(T.vforward(a, b, d), c) < 1e-11);
        GridValues a2, b2, d2;
        T.vinverse(T.vforward(a, b, d), a2, b2, d2);
        const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), d.cwiseAbs().maxCoeff()});
        CHECK((a2 - a).cwiseAbs().maxCoeff() < 1e-11 * scale);
        CHECK((b2 - b).cwiseAbs().maxCoeff() < 1e-11 * scale);
        CHECK((d2 - d).cwiseAbs().maxCoeff() < 1e-11 * scale);
        if (q <= 3) {
            GridValues r1, t1, p1;
            sample_vector(q, c, r1, t1, p1);
            CHECK((r1 - a).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((t1 - b).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((p1 - d).cwiseAbs().maxCoeff() < 1e-12);
        }
        // point evaluation agrees with the grid synthesis
        for (int j = 0; j < T.grid().nlat(); j += 2) {
            const CVec3 e = eval_vector(c, T.grid().theta[j], T.grid().phi[1]);
            CHECK(std::abs(e(0) - a(j, 1)) < 1e-11);
            CHECK(std::abs(e(1) - b(j, 1)) < 1e-11);
            CHECK(std::abs(e(2) - d(j, 1)) < 1e-11);
        }
    }
}

TEST_CASE("basis conversion")
{
    VectorCoeffsVWX c(3);
    c.x(2, 1) = cplx(0.3, -1.0);
    VectorCoeffsYGX y = to_ygx(c);
    CHECK(y.y.norm() == 0.0);
    CHECK(y.g.norm() == 0.0);
    CHECK(y.x(2, 1) == c.x(2, 1));

    VectorCoeffsVWX one(1);
    one.v(1, 0) = 1.0;
    y = to_ygx(one);
    CHECK(std::abs(y.g(1, 0) - 1.0) < 1e-15);
    CHECK(std::abs(y.y(1, 0) + 2.0) < 1e-15);

    std::mt19937_64 rng(5);
    const VectorCoeffsVWX r = random_vector(10, rng);
    CHECK(max_diff(to_vwx(to_ygx(r)), r) < 1e-14);
}

TEST_CASE("tangential maps per order")
{
    const int p = 10;
    for (int m : {0, 1, -3, 7, 10}) {
        const Eigen::MatrixXcd F = tangential_forward_matrix(p, m);
        const Eigen::MatrixXcd B = tangential_inverse_matrix(p, m);
        const Eigen::MatrixXcd Q = tangential_quadrature_matrix(p, m);
        for (int i = 0; i < F.rows(); ++i)
            for (int j = 0; j < F.cols(); ++j)
                if (std::abs(i - j) > 2)
                    CHECK(std::abs(F(i, j)) == 0.0);
        for (int i = 0; i < B.rows(); ++i)
            for (int j = 0; j < B.cols(); ++j)
                if (std::abs(i - j) > 2)
                    CHECK(std::abs(B(i, j)) == 0.0);
        const Eigen::MatrixXcd I = F * Q * B;
        const int am = std::abs(m), n0 = std::max(1, am);
        double err = 0.0;
        for (int i = 2 * (n0 - am); i < I.rows(); ++i)
            for (int j = 2 * (n0 - am); j < I.cols(); ++j)
                err = std::max(err, std::abs(I(i, j) - (i == j ? 1.0 : 0.0)));
        CHECK(err < 1e-12);
    }
}

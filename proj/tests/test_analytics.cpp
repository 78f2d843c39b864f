#include "doctest.h"

#include "spikelds/analytics.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace spikelds;

namespace {

Eigen::MatrixXd random_stable(Eigen::Index m, double rho, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> mag(-1.0, 1.0);
    Eigen::MatrixXd a(m, m);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        a(i) = mag(rng);
    return a * (rho / a.eigenvalues().cwiseAbs().maxCoeff());
}

Eigen::MatrixXd brute_series(const Eigen::MatrixXd& a, int terms)
{
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd p = a;
    for (int k = 1; k < terms; ++k) {
        s += p * p.transpose();
        p = p * a;
    }
    return s;
}

} // namespace

TEST_CASE("lag shape and scalar stats")
{
    CHECK(f_lag(0) == 1.0);
    CHECK(f_lag(1) == -0.5);
    CHECK(f_lag(-1) == -0.5);
    CHECK(f_lag(2) == 0.0);
    CHECK(f_lag(-7) == 0.0);

    const ScalarErrorStats s = scalar_error_stats();
    CHECK(s.mean == 0.0);
    CHECK(s.variance == doctest::Approx(1.0 / 6.0));
    CHECK(s.lag1 == doctest::Approx(-1.0 / 12.0));
    CHECK(s.lag2 == 0.0);
}

TEST_CASE("variance of the remainder grid")
{
    CHECK(discrete_error_variance(1) == 0.0);
    CHECK(discrete_error_variance(2) == doctest::Approx(3.0 / 24.0));
    CHECK(discrete_error_variance(255) == doctest::Approx((255.0 * 255.0 - 1.0) / (6.0 * 255.0 * 255.0)));
    CHECK(discrete_error_variance(100000) == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
    CHECK_THROWS_AS(discrete_error_variance(0), std::invalid_argument);
    CHECK_THROWS_AS(discrete_error_variance(-3), std::invalid_argument);
}

TEST_CASE("row error covariance scales with the term count")
{
    const Eigen::MatrixXd c0 = matvec_error_cov(5, 0, 3);
    CHECK(c0.rows() == 3);
    CHECK(c0.isApprox(5.0 / 6.0 * Eigen::MatrixXd::Identity(3, 3)));
    CHECK(matvec_error_cov(5, 1, 3).isApprox(-5.0 / 12.0 * Eigen::MatrixXd::Identity(3, 3)));
    CHECK(matvec_error_cov(5, -1, 2).isApprox(-5.0 / 12.0 * Eigen::MatrixXd::Identity(2, 2)));
    CHECK(matvec_error_cov(5, 2, 3).isZero());
}

TEST_CASE("power series sum matches brute force and the fixed point")
{
    Eigen::MatrixXd a1(1, 1);
    a1 << 0.5;
    CHECK(series_sum(a1)(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd a = random_stable(4, 0.9, rng);
        const Eigen::MatrixXd s = series_sum(a);
        CHECK((s - brute_series(a, 2000)).norm() < 1e-9);
        // fixed point S = A S A^T + I
        CHECK((s - a * s * a.transpose() - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-9);
        CHECK(s.isApprox(s.transpose()));
    }

    // rotation dynamics exercise the complex-eigenvalue path
    Eigen::MatrixXd rot(2, 2);
    rot << 0.9 * std::cos(1.0), -0.9 * std::sin(1.0), 0.9 * std::sin(1.0), 0.9 * std::cos(1.0);
    CHECK((series_sum(rot) - brute_series(rot, 2000)).norm() < 1e-9);

    // defective matrix forces the truncated fallback
    Eigen::MatrixXd jordan(2, 2);
    jordan << 0.5, 1.0, 0.0, 0.5;
    CHECK((series_sum(jordan) - brute_series(jordan, 2000)).norm() < 1e-9);

    Eigen::MatrixXd unstable(1, 1);
    unstable << 1.0;
    CHECK_THROWS_AS(series_sum(unstable), std::domain_error);
}

TEST_CASE("residual covariance prediction recomputes from first principles")
{
    std::mt19937_64 rng(7);
    const Eigen::MatrixXd a = random_stable(5, 0.85, rng);
    const std::uint32_t m = 5, n = 3;

    const Eigen::MatrixXd s = brute_series(a, 3000);
    const Eigen::MatrixXd ims = (Eigen::MatrixXd::Identity(5, 5) - a) * s;
    const Eigen::MatrixXd want =
        static_cast<double>(2 * m + n) / 6.0 * 0.5 * (ims + ims.transpose());
    CHECK((theory_cov_counts(a, m, n) - want).norm() < 1e-8);

    CodecConfig cfg{25, 21, 0.9};
    const double gain = 0.9 * 21.0 * 25.0;
    CHECK(theory_cov(a, m, n, cfg).isApprox(theory_cov_counts(a, m, n) / (gain * gain)));

    CHECK_THROWS_AS(theory_cov_counts(a, 4, n), std::invalid_argument);
}

TEST_CASE("lagged residual covariance applies powers of the dynamics")
{
    std::mt19937_64 rng(13);
    const Eigen::MatrixXd a = random_stable(3, 0.8, rng);
    const Eigen::MatrixXd cov = theory_cov_counts(a, 3, 2);
    CHECK(residual_autocov_theory(a, cov, 0).isApprox(cov));
    CHECK(residual_autocov_theory(a, cov, 2).isApprox(a * a * cov));
    CHECK_THROWS_AS(residual_autocov_theory(a, cov, -1), std::invalid_argument);
}

TEST_CASE("effective sample count follows the decorrelation rate")
{
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 2);
    CHECK(effective_samples(z, 1000) == 1000.0);

    Eigen::MatrixXd a(1, 1);
    a << 0.9;
    CHECK(effective_samples(a, 1000) == doctest::Approx(1000.0 * std::log(1.0 / 0.9)));

    a << 0.1; // fast mixing saturates at the run length
    CHECK(effective_samples(a, 1000) == 1000.0);

    a << 1.0;
    CHECK(effective_samples(a, 1000) == 0.0);
}

TEST_CASE("sample moments are second moments about zero")
{
    Eigen::MatrixXd s(2, 3);
    s << 1, 2, 3, 4, 5, 6;

    Eigen::MatrixXd want(2, 2);
    want << (1. + 4. + 9.) / 3., (4. + 10. + 18.) / 3., (4. + 10. + 18.) / 3.,
        (16. + 25. + 36.) / 3.;
    CHECK(sample_cov(s).isApprox(want));

    // lag 1: mean of col_{t+1} col_t^T over the two overlapping pairs
    Eigen::MatrixXd w1(2, 2);
    w1 << (2. * 1 + 3. * 2) / 2., (2. * 4 + 3. * 5) / 2., (5. * 1 + 6. * 2) / 2.,
        (5. * 4 + 6. * 5) / 2.;
    CHECK(sample_autocov(s, 1).isApprox(w1));
    CHECK(sample_autocov(s, 0).isApprox(sample_cov(s)));

    CHECK_THROWS_AS(sample_autocov(s, 3), std::invalid_argument);
    CHECK_THROWS_AS(sample_cov(Eigen::MatrixXd(2, 0)), std::invalid_argument);
}

TEST_CASE("stability verdict tracks the magnitude dynamics, not the signed ones")
{
    // stable in the signed sense, unstable once signs are split
    Eigen::MatrixXd a(2, 2);
    a << 0.5, -0.7, 0.7, 0.5;
    const StabilityReport r = stability_check(a);
    CHECK(r.rho == doctest::Approx(std::hypot(0.5, 0.7)));
    CHECK(r.rho_abs == doctest::Approx(1.2));
    CHECK(!r.stable);
    CHECK(r.spectrum_union_gap < 1e-8);

    std::mt19937_64 rng(4242);
    for (int rep = 0; rep < 100; ++rep) {
        std::uniform_real_distribution<double> mag(-1.0, 1.0);
        Eigen::MatrixXd w(3, 3);
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w(i) = mag(rng);
        const StabilityReport rr = stability_check(w);
        CHECK(rr.spectrum_union_gap < 1e-8);
        CHECK(rr.rho <= rr.rho_abs + 1e-12);
        CHECK(rr.stable == (rr.rho_abs < 1.0));
    }
}

TEST_CASE("assumption-matched inputs are uniform over whole remainder periods")
{
    const RationalWeight w{3, 7};
    const std::int64_t T = 70000;
    const auto xs = gen_assumption_inputs(w, T, 5);
    CHECK(xs.size() == static_cast<std::size_t>(T));

    std::vector<std::int64_t> residue(7, 0);
    for (std::int64_t v : xs) {
        CHECK(v >= 0);
        CHECK(v < 28); // four whole periods by default
        ++residue[static_cast<std::size_t>(v % 7)];
    }
    // each residue class has probability exactly 1/7; allow 5 sigma
    const double expect = static_cast<double>(T) / 7.0;
    const double sigma = std::sqrt(expect * 6.0 / 7.0);
    for (std::int64_t c : residue)
        CHECK(std::abs(static_cast<double>(c) - expect) < 5.0 * sigma);

    // capping trims to the largest whole number of periods: values 0..20 are
    // exactly three, 0..19 only two
    for (std::int64_t v : gen_assumption_inputs(w, 1000, 5, 20))
        CHECK(v < 21);
    for (std::int64_t v : gen_assumption_inputs(w, 1000, 5, 19))
        CHECK(v < 14);
    CHECK_THROWS_AS(gen_assumption_inputs(w, 10, 5, 5), std::invalid_argument);

    CHECK_THROWS_AS(gen_assumption_inputs({4, 2}, 10, 5), std::invalid_argument);
    CHECK_THROWS_AS(gen_assumption_inputs({3, 1}, 10, 5), std::invalid_argument);

    CHECK(gen_assumption_inputs(w, 100, 5) == gen_assumption_inputs(w, 100, 5));
    CHECK(gen_assumption_inputs(w, 100, 5) != gen_assumption_inputs(w, 100, 6));
}

TEST_CASE("count error of the floor recursion matches the discrete law")
{
    // frame-level recursion driven by assumption-matched inputs; the sample
    // moments must approach the discrete remainder-grid law
    for (const auto& [num, den] : {std::pair<int, int>{3, 7}, {5, 12}, {63, 64}}) {
        const RationalWeight w{num, den};
        const std::int64_t T = 400000;
        const auto xs = gen_assumption_inputs(w, T, 17);

        std::vector<double> eps(static_cast<std::size_t>(T));
        std::int64_t v = 0;
        const double wr = static_cast<double>(num) / den;
        for (std::int64_t t = 0; t < T; ++t) {
            v += num * xs[static_cast<std::size_t>(t)];
            const std::int64_t out = v / den;
            v -= out * den;
            eps[static_cast<std::size_t>(t)] =
                wr * static_cast<double>(xs[static_cast<std::size_t>(t)]) -
                static_cast<double>(out);
        }

        double mean = 0, var = 0, lag1 = 0, lag2 = 0;
        for (double e : eps)
            mean += e;
        mean /= static_cast<double>(T);
        for (std::size_t t = 0; t < eps.size(); ++t) {
            var += eps[t] * eps[t];
            if (t + 1 < eps.size())
                lag1 += eps[t] * eps[t + 1];
            if (t + 2 < eps.size())
                lag2 += eps[t] * eps[t + 2];
        }
        var /= static_cast<double>(T);
        lag1 /= static_cast<double>(T - 1);
        lag2 /= static_cast<double>(T - 2);

        CHECK(std::abs(mean) <= 1.0 / static_cast<double>(T)); // telescoping sum
        CHECK(var == doctest::Approx(discrete_error_variance(den)).epsilon(0.02));
        CHECK(lag1 == doctest::Approx(-discrete_error_variance(den) / 2.0).epsilon(0.06));
        CHECK(std::abs(lag2) < 0.01 * var + 5.0 / std::sqrt(static_cast<double>(T)));
    }
}

TEST_CASE("perturbation response kernel")
{
    std::mt19937_64 rng(321);
    std::uniform_real_distribution<double> mag(-1.0, 1.0);

    const Eigen::Index m = 3, r = 2, T = 20;
    const Eigen::MatrixXd a = random_stable(m, 0.7, rng);
    Eigen::MatrixXd b(m, r), p(m, m), u(r, T);
    for (Eigen::Index i = 0; i < b.size(); ++i)
        b(i) = mag(rng);
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p(i) = mag(rng);
    for (Eigen::Index i = 0; i < u.size(); ++i)
        u(i) = mag(rng);

    // direct convolution with the documented kernel k A^k P B
    Eigen::MatrixXd want = Eigen::MatrixXd::Zero(m, T);
    for (Eigen::Index t = 0; t < T; ++t) {
        Eigen::MatrixXd ak = Eigen::MatrixXd::Identity(m, m);
        for (Eigen::Index k = 0; k <= t; ++k) {
            want.col(t) += static_cast<double>(k) * ak * p * b * u.col(t - k);
            ak = a * ak;
        }
    }
    const Eigen::MatrixXd got = perturbation_estimate(a, b, p, u);
    CHECK((got - want).norm() < 1e-10);

    CHECK(perturbation_estimate(a, b, 2.0 * p, u).isApprox(2.0 * got));
    CHECK(perturbation_estimate(Eigen::MatrixXd::Zero(m, m), b, p, u).isZero());
    CHECK_THROWS_AS(perturbation_estimate(a, b, Eigen::MatrixXd::Zero(2, 2), u),
                    std::invalid_argument);

    // commuting case: the kernel is exactly c times the derivative of the
    // driven state, so a simulated bump of size eps moves it by eps/c
    const double c = 0.6, eps = 1e-5;
    const Eigen::MatrixXd ac = c * Eigen::MatrixXd::Identity(m, m);
    auto drive = [&](const Eigen::MatrixXd& dyn) {
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(m, T);
        Eigen::VectorXd prev = Eigen::VectorXd::Zero(m);
        for (Eigen::Index t = 0; t < T; ++t) {
            prev = dyn * prev + b * u.col(t);
            x.col(t) = prev;
        }
        return x;
    };
    const Eigen::MatrixXd diff = drive(ac + eps * p) - drive(ac);
    const Eigen::MatrixXd est = perturbation_estimate(ac, b, p, u);
    CHECK((diff - (eps / c) * est).norm() < 1e-3 * diff.norm());
}

#include "doctest.h"

#include "spikelds/workbench.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace spikelds;

TEST_CASE("random systems are reproducible and hit the codec range")
{
    GenParams gp;
    gp.m = 4;
    gp.n = 3;
    gp.rho0 = 0.85;
    gp.T = 300;
    gp.seed = 42;
    gp.codec = CodecConfig{20, 7, 0.9};

    const LdsSpec s1 = gen_random_lds(gp);
    const LdsSpec s2 = gen_random_lds(gp);
    CHECK(s1.a == s2.a);
    CHECK(s1.b == s2.b);
    CHECK(s1.inputs == s2.inputs);

    gp.seed = 43;
    const LdsSpec s3 = gen_random_lds(gp);
    CHECK(s1.a != s3.a);

    CHECK(s1.a.rows() == 4);
    CHECK(s1.b.cols() == 3);
    CHECK(s1.inputs.rows() == 3);
    CHECK(s1.inputs.cols() == 300);
    CHECK(s1.a.eigenvalues().cwiseAbs().maxCoeff() == doctest::Approx(0.85).epsilon(1e-9));

    const auto amp = gp.codec.amplitude();
    CHECK(s1.inputs.cwiseAbs().maxCoeff() <= amp);
    CHECK(s1.inputs.cwiseAbs().maxCoeff() > amp / 2); // sinusoids actually use the range

    // b is normalized so the reference trajectory peaks at the amplitude,
    // unless that would push an entry of b past the unit range
    const Eigen::MatrixXd ref = simulate_reference(s1.a, s1.b, s1.inputs);
    const double peak = ref.cwiseAbs().maxCoeff();
    CHECK(peak <= static_cast<double>(amp) * (1 + 1e-9));
    CHECK(s1.b.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    if (s1.b.cwiseAbs().maxCoeff() < 1.0 - 1e-9)
        CHECK(peak == doctest::Approx(static_cast<double>(amp)).epsilon(1e-9));
}

TEST_CASE("reference recursion starts from rest")
{
    Eigen::MatrixXd a(2, 2), b(2, 1);
    a << 0.5, 0.1, 0.0, 0.3;
    b << 1.0, 2.0;
    Eigen::MatrixXi u(1, 3);
    u << 4, 0, 2;

    const Eigen::MatrixXd x = simulate_reference(a, b, u);
    CHECK(x.col(0).isApprox(b * 4.0));
    CHECK(x.col(1).isApprox(a * x.col(0)));
    CHECK(x.col(2).isApprox(a * x.col(1) + b * 2.0));
}

TEST_CASE("residual series normalizes by the codec gain")
{
    CodecConfig cfg{20, 5, 0.9};
    Eigen::MatrixXi decoded(2, 2);
    decoded << 10, -3, 0, 7;
    Eigen::MatrixXd ref(2, 2);
    ref << 9.5, -3.25, 1.0, 7.0;

    const ResidualSeries r = residuals(decoded, ref, cfg);
    CHECK(r.raw(0, 0) == doctest::Approx(0.5));
    CHECK(r.raw(1, 0) == doctest::Approx(-1.0));
    CHECK(r.normalized.isApprox(r.raw / (0.9 * 5.0 * 20.0)));
}

TEST_CASE("covariance comparison recomputes every field")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::uint32_t m = 3, n = 2;
    CodecConfig cfg{25, 7, 0.9};

    Eigen::MatrixXd a(3, 3);
    a << 0.4, 0.1, 0.0, -0.2, 0.5, 0.1, 0.0, 0.2, 0.3;
    Eigen::MatrixXd series(3, 500);
    for (Eigen::Index i = 0; i < series.size(); ++i)
        series(i) = gauss(rng) * 1e-3;

    const CovarianceComparison c = compare_covariance(series, a, m, n, cfg);
    CHECK(c.sample.isApprox(sample_cov(series)));
    CHECK(c.theory.isApprox(theory_cov(a, m, n, cfg)));
    CHECK(c.frob_rel == doctest::Approx((c.sample - c.theory).norm() / c.theory.norm()));
    CHECK(c.mse_sample == doctest::Approx(c.sample.trace()));
    CHECK(c.mse_theory == doctest::Approx(c.theory.trace()));
    CHECK(c.mse_rel == doctest::Approx(std::abs(c.mse_sample - c.mse_theory) / c.mse_theory));
    CHECK(c.n_eff == doctest::Approx(effective_samples(a, 500)));
}

TEST_CASE("loop amplification scale and its inverse")
{
    Eigen::MatrixXd a1(1, 1);
    a1 << 0.5;
    CHECK(recurrent_strength(a1) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

    // rotation-flavored dynamics: strength grows without bound toward rho=1
    Eigen::MatrixXd rot(2, 2);
    rot << 0.5, -0.7, 0.7, 0.5;
    for (const double target : {3.0, 8.0, 14.0}) {
        const Eigen::MatrixXd scaled = scale_to_strength(rot, target);
        CHECK(recurrent_strength(scaled) == doctest::Approx(target).epsilon(1e-6));
        CHECK(scaled.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
    }

    CHECK_THROWS_AS(scale_to_strength(rot, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(scale_to_strength(rot, 1e9), std::invalid_argument);
}

TEST_CASE("a short spiking run stays on the reference trajectory")
{
    GenParams gp;
    gp.m = 2;
    gp.n = 2;
    gp.rho0 = 0.8;
    gp.T = 120;
    gp.seed = 9;
    gp.codec = CodecConfig{18, 5, 0.9};

    const LdsSpec spec = gen_random_lds(gp);
    const SpikingLds s = build_spiking_lds(transform_lds(spec), gp.codec);

    const Eigen::MatrixXi serial = run_spiking(s, spec.inputs, false);
    const Eigen::MatrixXi parallel = run_spiking(s, spec.inputs, true);
    CHECK(serial == parallel);
    CHECK(serial.rows() == 2);
    CHECK(serial.cols() == 120);

    const Eigen::MatrixXd ref = simulate_reference(s.a_realized, s.b_realized, spec.inputs);
    const ResidualSeries r = residuals(serial, ref, gp.codec);
    // errors stay at spike-count scale while the state spans the codec range
    CHECK(r.raw.cwiseAbs().maxCoeff() < 0.15 * ref.cwiseAbs().maxCoeff());
    CHECK(ref.cwiseAbs().maxCoeff() > 40.0);
}

TEST_CASE("sweeps vary one axis and stay deterministic")
{
    GenParams gp;
    gp.m = 2;
    gp.n = 2;
    gp.rho0 = 0.75;
    gp.T = 80;
    gp.seed = 21;
    gp.codec = CodecConfig{15, 5, 0.9};

    const auto dims = run_sweep(SweepAxis::InputDim, {2.0, 4.0}, gp);
    REQUIRE(dims.size() == 2);
    CHECK(dims[0].axis_value == 2.0);
    CHECK(dims[1].axis_value == 4.0);
    for (const auto& pt : dims) {
        CHECK(pt.theory_mse > 0.0);
        CHECK(pt.sample_mse > 0.0);
        CHECK(pt.rho < 1.0);
        CHECK(pt.n_eff > 0.0);
        CHECK(pt.mse_rel ==
              doctest::Approx(std::abs(pt.sample_mse - pt.theory_mse) / pt.theory_mse));
    }
    // the theory term count rises with the input dimension
    CHECK(dims[1].theory_mse > dims[0].theory_mse);

    const auto again = run_sweep(SweepAxis::InputDim, {2.0, 4.0}, gp);
    CHECK(again[0].sample_mse == dims[0].sample_mse);
    CHECK(again[1].sample_mse == dims[1].sample_mse);

    const auto frames = run_sweep(SweepAxis::FrameLen, {12.0, 24.0}, gp);
    REQUIRE(frames.size() == 2);
    // normalized error shrinks as 1/l^2 at fixed dynamics
    CHECK(frames[0].theory_mse == doctest::Approx(4.0 * frames[1].theory_mse).epsilon(1e-9));
}

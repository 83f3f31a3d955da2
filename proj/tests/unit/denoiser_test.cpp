#include <gtest/gtest.h>

#include <cmath>

#include "asyncra/denoiser.hpp"
#include "asyncra/solver_common.hpp"
#include "oracles.hpp"

namespace asyncra {
namespace {

TEST(PosteriorStats, PureSpikePriorGivesZero) {
    const PosteriorStats ps = posterior_stats({0.7, -0.2}, 0.1, 1.0, 0.0);
    EXPECT_EQ(ps.mean, cdouble(0.0, 0.0));
    EXPECT_EQ(ps.var, 0.0);
    EXPECT_EQ(ps.support_prob, 0.0);
}

TEST(PosteriorStats, PureSlabPriorIsLmmseShrinkage) {
    const cdouble r{0.7, -0.2};
    const double tau2 = 0.1, beta = 2.0;
    const PosteriorStats ps = posterior_stats(r, tau2, beta, 1.0);
    EXPECT_DOUBLE_EQ(ps.support_prob, 1.0);
    EXPECT_NEAR(std::abs(ps.mean - beta / (tau2 + beta) * r), 0.0, 1e-15);
    EXPECT_NEAR(ps.var, tau2 * beta / (tau2 + beta), 1e-15);
}

TEST(PosteriorStats, MatchesQuadratureOnReferencePoint) {
    const cdouble r{0.3, 0.4};
    const PosteriorStats ps = posterior_stats(r, 0.1, 1.0, 0.2);
    const oracle::Posterior ref = oracle::posterior_by_quadrature(r, 0.1, 1.0, 0.2);
    EXPECT_LT(oracle::relative_error(ps.mean, ref.mean), 1e-8);
    EXPECT_LT(oracle::relative_error(ps.var, ref.var), 1e-8);
}

TEST(PosteriorStats, MatchesQuadratureAcrossRegimes) {
    Rng rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const double beta = std::pow(10.0, -13.0 + 2.0 * u(rng));
        const double tau2 = beta * std::pow(10.0, -3.0 + 4.0 * u(rng));
        const double omega = 0.01 + 0.98 * u(rng);
        const bool active = u(rng) < 0.5;
        const cdouble h = active ? complex_normal(rng, beta) : cdouble{};
        const cdouble r = h + complex_normal(rng, tau2);
        const PosteriorStats ps = posterior_stats(r, tau2, beta, omega);
        const oracle::Posterior ref = oracle::posterior_by_quadrature(r, tau2, beta, omega);
        EXPECT_LT(oracle::relative_error(ps.mean, ref.mean), 1e-6) << "k=" << k;
        EXPECT_LT(oracle::relative_error(ps.var, ref.var), 1e-6) << "k=" << k;
    }
}

TEST(PosteriorStats, RejectsNonPositiveNoise) {
    EXPECT_THROW(posterior_stats({1.0, 0.0}, 0.0, 1.0, 0.5), std::domain_error);
    EXPECT_THROW(posterior_stats({1.0, 0.0}, -1.0, 1.0, 0.5), std::domain_error);
}

TEST(PosteriorStats, ZeroObservationShrinksSupportBelief) {
    for (double omega : {0.01, 0.2, 0.5, 0.9}) {
        const PosteriorStats ps = posterior_stats({0.0, 0.0}, 0.3, 1.5, omega);
        EXPECT_LT(ps.support_prob, omega);
    }
}

TEST(PosteriorStats, SupportProbabilityIncreasesWithMagnitude) {
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const double tau2 = 0.05 + u(rng), beta = 0.1 + 3.0 * u(rng), omega = 0.05 + 0.9 * u(rng);
        const double phase = 6.28 * u(rng);
        double prev = -1.0;
        for (double mag = 0.0; mag < 2.0; mag += 0.05) {
            const double pi = posterior_stats(std::polar(mag, phase), tau2, beta, omega).support_prob;
            if (prev < 1.0) EXPECT_GT(pi, prev);  // saturates at 1 in double precision
            else EXPECT_EQ(pi, 1.0);
            prev = pi;
        }
    }
}

TEST(PosteriorStats, VarianceNonNegativeAndBounded) {
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
        const double beta = std::pow(10.0, -14.0 + 4.0 * u(rng));
        const double tau2 = beta * std::pow(10.0, -6.0 + 8.0 * u(rng));
        const double omega = u(rng);
        const cdouble r = complex_normal(rng, (beta + tau2) * std::pow(10.0, 2.0 * u(rng)));
        const PosteriorStats ps = posterior_stats(r, tau2, beta, omega);
        const cdouble mu = beta / (tau2 + beta) * r;
        const double gamma = tau2 * beta / (tau2 + beta);
        ASSERT_GE(ps.var, 0.0);
        EXPECT_LE(ps.var, ps.support_prob * (std::norm(mu) + gamma) * (1.0 + 1e-12));
        EXPECT_GE(ps.support_prob, 0.0);
        EXPECT_LE(ps.support_prob, 1.0);
    }
}

TEST(PosteriorStats, NoOverflowAtHighSnr) {
    const PosteriorStats ps = posterior_stats({1e3, 0.0}, 1e-6, 1.0, 0.1);
    EXPECT_TRUE(std::isfinite(ps.mean.real()));
    EXPECT_DOUBLE_EQ(ps.support_prob, 1.0);
}

TEST(PosteriorStats, MeanBeatsLmmseOnPriorSamples) {
    Rng rng(17);
    const double beta = 1.0, tau2 = 0.2, omega = 0.1;
    std::bernoulli_distribution active(omega);
    double mse_mmse = 0.0, mse_lin = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const cdouble h = active(rng) ? complex_normal(rng, beta) : cdouble{};
        const cdouble r = h + complex_normal(rng, tau2);
        mse_mmse += std::norm(posterior_stats(r, tau2, beta, omega).mean - h);
        mse_lin += std::norm(beta / (tau2 + beta) * r - h);
    }
    EXPECT_LE(mse_mmse, mse_lin);
}

TEST(DivergenceAvg, ClosedForms) {
    EXPECT_EQ(divergence_avg(0.0, 0.4), 0.0);
    EXPECT_DOUBLE_EQ(divergence_avg(0.4, 0.4), 1.0);
}

TEST(DivergenceAvg, MatchesFiniteDifferenceOfPosteriorMean) {
    Rng rng(23);
    const int N = 60, T = 2;
    RVector beta(N);
    for (int n = 0; n < N; ++n) beta[n] = 0.2 + 0.05 * n;
    const Prior prior = Prior::uniform(beta, 0.15, T);
    const double tau2 = 0.3;
    CVector r(N * (T + 1));
    for (Eigen::Index k = 0; k < r.size(); ++k) r[k] = complex_normal(rng, 0.5);

    const DenoisedColumn den = denoise_column(r, tau2, prior);
    cdouble fd_sum{0.0, 0.0};
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        const double b = beta[k / (T + 1)], w = prior.omega(k / (T + 1), k % (T + 1));
        auto eta = [&](cdouble x) { return posterior_stats(x, tau2, b, w).mean; };
        fd_sum += oracle::wirtinger_derivative(eta, r[k], 1e-6);
    }
    const cdouble fd_avg = fd_sum / static_cast<double>(r.size());
    EXPECT_NEAR(fd_avg.real(), divergence_avg(den.psi_bar, tau2), 1e-4);
    EXPECT_NEAR(fd_avg.imag(), 0.0, 1e-4);
}

TEST(CommonSparsity, SingleAntennaIsIdentity) {
    const int N = 3, T = 1;
    RMatrix pi(N * (T + 1), 1);
    pi << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
    const RMatrix omega = update_common_sparsity(pi, N, T);
    for (int n = 0; n < N; ++n)
        for (int t = 0; t <= T; ++t) EXPECT_DOUBLE_EQ(omega(n, t), pi(n * (T + 1) + t, 0));
}

TEST(CommonSparsity, ConstantInputIsPreserved) {
    const RMatrix omega = update_common_sparsity(RMatrix::Constant(10, 4, 0.37), 5, 1);
    EXPECT_TRUE((omega.array() == 0.37).all());
}

TEST(CommonSparsity, AveragesAcrossAntennas) {
    RMatrix pi(1, 2);
    pi << 0.2, 0.8;
    EXPECT_DOUBLE_EQ(update_common_sparsity(pi, 1, 0)(0, 0), 0.5);
}

TEST(CommonSparsity, RejectsWrongShape) {
    EXPECT_THROW(update_common_sparsity(RMatrix::Zero(7, 2), 2, 2), std::invalid_argument);
}

TEST(Prior, UniformAndClamp) {
    const Prior p = Prior::uniform(RVector::Constant(4, 1.0), 0.25, 4);
    EXPECT_EQ(p.omega.rows(), 4);
    EXPECT_EQ(p.omega.cols(), 5);
    EXPECT_DOUBLE_EQ(p.omega(2, 3), 0.05);

    Prior q = Prior::uniform(RVector::Constant(2, 1.0), 0.0, 0);
    EXPECT_DOUBLE_EQ(q.omega(0, 0), kOmegaClamp);
    q.omega(1, 0) = 1.0;
    q.clamp();
    EXPECT_DOUBLE_EQ(q.omega(1, 0), 1.0 - kOmegaClamp);
}

TEST(Prior, ValidateRejectsBadInputs) {
    Prior p = Prior::uniform(RVector::Constant(3, 1.0), 0.3, 1);
    EXPECT_NO_THROW(p.validate());
    p.omega(0, 0) = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = Prior::uniform(RVector::Constant(3, 1.0), 0.3, 1);
    p.beta[1] = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(DenoiseColumn, SharedPathIsBitIdentical) {
    Rng rng(9);
    const Prior prior = Prior::uniform(RVector::LinSpaced(20, 0.5, 2.0), 0.2, 0);
    CVector r(20);
    for (auto& x : r) x = complex_normal(rng, 1.0);
    const DenoisedColumn a = denoise_column(r, 0.25, prior);
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        const PosteriorStats ps = posterior_stats(r[k], 0.25, prior.beta[k], prior.omega(k, 0));
        EXPECT_EQ(a.mean[k], ps.mean);
        EXPECT_EQ(a.support_prob[k], ps.support_prob);
    }
}

// Composite divergence-free NLE: the average Wirtinger derivative over entries vanishes when
// the normalizer and correction coefficient are held at their computed values.
TEST(NleStep, CompositeDenoiserIsDivergenceFree) {
    Rng rng(31);
    const int N = 80, T = 4;
    RVector beta(N);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < N; ++n) beta[n] = 0.1 + u(rng);
    const Prior prior = Prior::uniform(beta, 0.1, T);
    const double tau2 = 0.2;
    CVector r(N * (T + 1));
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        const bool on = u(rng) < 0.03;
        r[k] = (on ? complex_normal(rng, beta[k / (T + 1)]) : cdouble{}) + complex_normal(rng, tau2);
    }
    const NleOutput out = nle_step(r, tau2, prior);
    const double slope = divergence_avg(out.denoised.psi_bar, tau2);
    EXPECT_FALSE(out.clamped);
    EXPECT_NEAR(out.C, tau2 / (tau2 - out.denoised.psi_bar), 1e-12);

    cdouble fd_sum{0.0, 0.0};
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        const double b = beta[k / (T + 1)], w = prior.omega(k / (T + 1), k % (T + 1));
        auto eta = [&](cdouble x) { return out.C * (posterior_stats(x, tau2, b, w).mean - slope * x); };
        fd_sum += oracle::wirtinger_derivative(eta, r[k], 1e-6);
    }
    EXPECT_LE(std::abs(fd_sum / static_cast<double>(r.size())), 1e-3);
}

TEST(NleStep, ZeroPriorGivesZero) {
    Prior prior = Prior::uniform(RVector::Constant(5, 1.0), 0.5, 0);
    prior.omega.setZero();
    const NleOutput out = nle_step(CVector::Constant(5, cdouble(0.3, 0.1)), 0.1, prior);
    EXPECT_EQ(out.denoised.psi_bar, 0.0);
    EXPECT_DOUBLE_EQ(out.C, 1.0);
    EXPECT_TRUE(out.s_next.isZero(0.0));
}

TEST(NleStep, NormalizerClampIsReported) {
    // omega ~ 1 with a huge slab: psi_bar approaches tau2, so tau2 - psi_bar hits its floor.
    Prior prior = Prior::uniform(RVector::Constant(4, 1e20), 1.0, 0);
    prior.omega.setOnes();
    const NleOutput out = nle_step(CVector::Constant(4, cdouble(1.0, 0.0)), 1.0, prior);
    EXPECT_TRUE(out.clamped);
    EXPECT_TRUE(out.s_next.allFinite());
}

}  // namespace
}  // namespace asyncra

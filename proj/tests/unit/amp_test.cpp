#include <gtest/gtest.h>

#include <cmath>

#include "asyncra/amp.hpp"
#include "asyncra/detection.hpp"

namespace asyncra {
namespace {

Problem make_problem(const Scenario& sc, const Prior& prior) { return {sc.rx.Y, sc.pilots, prior, sc.rx.noise_var_eff}; }

SystemConfig sync_config() {
    SystemConfig c;
    c.n_users = 100;
    c.pilot_len = 40;
    c.max_delay = 0;
    c.n_antennas = 8;
    c.n_active = 10;
    return c;
}

TEST(RunAmp, NoActiveUsersNoDetections) {
    SystemConfig c = sync_config();
    c.n_active = 0;
    const Scenario sc = draw_scenario(c, 1);
    const Prior prior = Prior::uniform(sc.truth.beta, c.activity_prob(), c.max_delay);
    const SolverResult res = run_amp(make_problem(sc, prior));
    EXPECT_TRUE(detect(res.omega).active_users.empty());
}

TEST(RunAmp, RecoversSparseChannelsInValidRegime) {
    const SystemConfig c = sync_config();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Scenario sc = draw_scenario(c, seed);
        const Prior prior = Prior::uniform(sc.truth.beta, c.activity_prob(), c.max_delay);
        const SolverResult res = run_amp(make_problem(sc, prior));
        DetectionResult det = detect(res.omega);
        det.H_hat = res.H_hat;
        const TrialMetrics m = score_trial(sc.truth, det);
        EXPECT_FALSE(res.diag.aborted);
        EXPECT_EQ(m.activity_error_prob, 0.0);
        EXPECT_LT(m.nmse_db(), -20.0);
    }
}

TEST(RunAmp, OnsagerTermMatters) {
    SystemConfig c = sync_config();
    c.n_active = 14;
    double with = 0.0, without = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Scenario sc = draw_scenario(c, 100 + k);
        const Prior prior = Prior::uniform(sc.truth.beta, c.activity_prob(), c.max_delay);
        const double ref = sc.truth.H.squaredNorm();
        SolverOptions off;
        off.onsager = false;
        with += (run_amp(make_problem(sc, prior)).H_hat - sc.truth.H).squaredNorm() / ref;
        without += (run_amp(make_problem(sc, prior), off).H_hat - sc.truth.H).squaredNorm() / ref;
    }
    EXPECT_GT(10.0 * std::log10(without / with), 1.0);
}

TEST(RunAmp, DivergenceAbortsWithZeroEstimate) {
    const SystemConfig c = sync_config();
    const Scenario sc = draw_scenario(c, 7);
    const Prior prior = Prior::uniform(sc.truth.beta, c.activity_prob(), c.max_delay);
    SolverOptions opt;
    opt.divergence_ratio = 1e-30;  // any second iteration counts as blown up
    const SolverResult res = run_amp(make_problem(sc, prior), opt);
    EXPECT_TRUE(res.diag.aborted);
    EXPECT_FALSE(res.diag.abort_reason.empty());
    EXPECT_TRUE(res.H_hat.isZero(0.0));
    EXPECT_TRUE(detect(res.omega).active_users.empty());
}

TEST(RunSolver, DispatchAndNames) {
    EXPECT_EQ(to_string(Algorithm::kMamp), "mamp");
    EXPECT_EQ(parse_algorithm("amp"), Algorithm::kAmp);
    EXPECT_FALSE(parse_algorithm("vamp").has_value());
    const SystemConfig c = sync_config();
    const Scenario sc = draw_scenario(c, 2);
    const Prior prior = Prior::uniform(sc.truth.beta, c.activity_prob(), c.max_delay);
    EXPECT_TRUE(run_solver(Algorithm::kAmp, make_problem(sc, prior)).H_hat == run_amp(make_problem(sc, prior)).H_hat);
}

TEST(StoppingRule, ConvergesAndRespectsCap) {
    const SystemConfig c = sync_config();
    const Scenario sc = draw_scenario(c, 3);
    const Prior prior = Prior::uniform(sc.truth.beta, c.activity_prob(), c.max_delay);
    SolverOptions capped;
    capped.stop.max_iters = 2;
    const SolverResult r2 = run_amp(make_problem(sc, prior), capped);
    EXPECT_EQ(r2.diag.iterations, 2);
    EXPECT_EQ(r2.diag.trace.size(), 2u);
    const SolverResult full = run_amp(make_problem(sc, prior));
    EXPECT_TRUE(full.diag.converged);
    EXPECT_LT(full.diag.trace.back().rel_change, 1e-5);
    EXPECT_TRUE(std::isinf(full.diag.trace.front().rel_change));
}

TEST(RelativeChange, ZeroDenominatorIsInfinite) {
    EXPECT_TRUE(std::isinf(relative_change(CMatrix::Ones(2, 2), CMatrix::Zero(2, 2))));
    EXPECT_DOUBLE_EQ(relative_change(2.0 * CMatrix::Ones(2, 2), CMatrix::Ones(2, 2)), 1.0);
}

}  // namespace
}  // namespace asyncra

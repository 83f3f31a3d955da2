#pragma once

// Outer loop shared by the OAMP, MAMP and AMP solvers. Each solver supplies a linear stage
// with
//   bool step(int iteration, const CMatrix& S, LinearOutput& out, FlopCounter& flops, Diagnostics& diag);
//   void observe_nle(const RVector& avg_derivative);
// `step` fills out.R ((T+1)N x M) and the per-antenna tau^2 / v^2, or returns false after
// setting diag.abort_reason.

#include <cmath>
#include <string>

#include "asyncra/solver_common.hpp"

namespace asyncra::detail {

struct LinearOutput {
    CMatrix R;
    RVector tau2;
    RVector v2;
    double trace_ratio = 1.0;
};

enum class NleKind { kDivergenceFree, kPosteriorMean };

inline SolverResult abort_result(const Problem& problem, Diagnostics diag, std::string reason) {
    SolverResult res;
    res.H_hat = CMatrix::Zero(problem.pilots.cols(), problem.Y.cols());
    res.omega = RMatrix::Zero(problem.prior.n_users(), problem.prior.max_delay() + 1);
    diag.aborted = true;
    diag.abort_reason = std::move(reason);
    res.diag = std::move(diag);
    return res;
}

template <class LinearStage>
SolverResult iterate(const Problem& problem, const SolverOptions& options, LinearStage& stage, NleKind nle,
                     FlopCounter& flops, Diagnostics diag) {
    const Eigen::Index n = problem.pilots.cols();
    const Eigen::Index M = problem.Y.cols();
    const int N = problem.prior.n_users();
    const int T = problem.prior.max_delay();

    Prior prior = problem.prior;
    prior.clamp();

    CMatrix S = CMatrix::Zero(n, M);
    CMatrix S_next(n, M);
    CMatrix eta(n, M);
    RMatrix support(n, M);
    RVector avg_derivative(M);
    LinearOutput lin;
    bool have_posterior = false;

    for (int i = 1; i <= options.stop.max_iters; ++i) {
        const double flops_before = flops.total;
        if (!stage.step(i, S, lin, flops, diag)) {
            std::string why = diag.abort_reason;
            return abort_result(problem, std::move(diag), std::move(why));
        }
        if (!lin.R.allFinite() || !lin.tau2.allFinite())
            return abort_result(problem, std::move(diag), "non-finite LE output at iteration " + std::to_string(i));

        if (options.common_sparsity && have_posterior) {
            prior.omega = update_common_sparsity(support, N, T);
            prior.clamp();
        }

        for (Eigen::Index m = 0; m < M; ++m) {
            const CVector r = lin.R.col(m);
            if (nle == NleKind::kDivergenceFree) {
                NleOutput out = nle_step(r, lin.tau2[m], prior);
                if (out.clamped) ++diag.c_clamps;
                S_next.col(m) = out.s_next;
                eta.col(m) = out.denoised.mean;
                support.col(m) = out.denoised.support_prob;
                avg_derivative[m] = divergence_avg(out.denoised.psi_bar, lin.tau2[m]);
            } else {
                DenoisedColumn d = denoise_column(r, lin.tau2[m], prior);
                S_next.col(m) = d.mean;
                eta.col(m) = d.mean;
                support.col(m) = d.support_prob;
                avg_derivative[m] = divergence_avg(d.psi_bar, lin.tau2[m]);
            }
        }
        // Posterior stats: a handful of flops per entry; divergence-free correction adds an axpy.
        flops.axpy(n * M, nle == NleKind::kDivergenceFree ? 40.0 : 32.0);
        have_posterior = true;
        stage.observe_nle(avg_derivative);

        if (!S_next.allFinite())
            return abort_result(problem, std::move(diag), "non-finite NLE output at iteration " + std::to_string(i));

        IterationRecord rec;
        rec.rel_change = relative_change(S_next, S);
        rec.mean_v2 = lin.v2.mean();
        rec.mean_tau2 = lin.tau2.mean();
        rec.trace_ratio = lin.trace_ratio;
        rec.flops = flops.total - flops_before;
        diag.trace.push_back(rec);
        diag.iterations = i;

        S.swap(S_next);
        if (rec.rel_change < options.stop.tol) {
            diag.converged = true;
            break;
        }
    }

    SolverResult res;
    res.H_hat = std::move(eta);
    res.omega = update_common_sparsity(support, N, T);
    res.diag = std::move(diag);
    return res;
}

}  // namespace asyncra::detail

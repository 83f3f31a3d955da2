#pragma once

#include "asyncra/solver_common.hpp"

namespace asyncra {

// Explicit decorrelated LMMSE filter. Sized (T+1)N x L and (T+1)N x (T+1)N; intended for
// small problems and tests. The solver uses the factored form in LmmseStage.
struct LmmseFilter {
    CMatrix W;
    CMatrix B;  // I - W P
};

LmmseFilter lmmse_W(const CMatrix& P, double v2, double noise_var_eff);

// r = s + W (y - P s)
CVector le_step(const CVector& s, const CVector& y, const CMatrix& P, const CMatrix& W);

// (|y - P s|^2 - L noise_var_eff) / tr(P^H P), floored.
double estimate_v2(const CVector& y, const ExpandedPilotMatrix& pilots, const CVector& s, double noise_var_eff,
                   double floor = 1e-12);

// Unfloored variant, shared with the MAMP cross-covariance estimator.
double estimate_v2_raw(const CVector& residual, double trace_gram, double noise_var_eff);

// (tr(B B^H) v^2 + tr(W W^H) noise_var_eff) / (T+1)N, floored.
double estimate_tau2(const CMatrix& W, const CMatrix& B, double v2, double noise_var_eff, double floor = 1e-12);

// Per-iteration LMMSE work for one antenna: one Cholesky factorization of P P^H + c I,
// the L x (T+1)N solve giving W^H, and the traces needed for tau^2, all without forming B.
class LmmseStage {
public:
    LmmseStage(const CMatrix& P, FlopCounter& flops);

    struct Filter {
        CMatrix W_hat_adj;   // (P P^H + c I)^{-1} P, i.e. W_hat^H
        double scale = 1.0;  // (T+1)N / tr(W_hat P)
        double trace_WP = 0.0;
        double trace_WWh = 0.0;
        double trace_BBh = 0.0;
    };

    Filter filter(double v2, double noise_var_eff) const;

    // r = s + scale * W_hat (y - P s); also returns the residual used for v^2.
    CVector apply(const Filter& f, const CVector& s, const CVector& residual) const;

    const CMatrix& gram() const { return gram_; }

private:
    const CMatrix& P_;
    CMatrix gram_;
    FlopCounter& flops_;
};

SolverResult run_oamp(const Problem& problem, const SolverOptions& options = {});

}  // namespace asyncra

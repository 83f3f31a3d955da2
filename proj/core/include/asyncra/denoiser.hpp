#pragma once

#include "asyncra/types.hpp"

namespace asyncra {

// Smallest / largest sparsity ratio allowed when a posterior average is fed back as a prior.
inline constexpr double kOmegaClamp = 1e-12;

// Spike-and-slab prior over the expanded channel: entry (n, t, m) is zero with probability
// 1 - omega(n, t) and CN(0, beta(n)) otherwise. beta is shared by every delay of a user.
struct Prior {
    RMatrix omega;  // N x (T+1)
    RVector beta;   // N

    int n_users() const { return static_cast<int>(beta.size()); }
    int max_delay() const { return static_cast<int>(omega.cols()) - 1; }

    // omega = activity_prob / (T+1) everywhere.
    static Prior uniform(const RVector& beta, double activity_prob, int max_delay);

    void validate() const;
    void clamp();
};

struct PosteriorStats {
    cdouble mean;
    double var = 0.0;
    double support_prob = 0.0;
};

// Posterior of h given r = h + CN(0, tau2) under the prior above.
// Throws std::domain_error when tau2 <= 0; callers clamp first.
PosteriorStats posterior_stats(cdouble r, double tau2, double beta, double omega);

// Average derivative of the posterior-mean denoiser over all entries.
inline double divergence_avg(double psi_bar, double tau2) { return psi_bar / tau2; }

// omega(n, t) = mean over antennas of pi(n, t, m). `support_prob` is (T+1)N x M.
RMatrix update_common_sparsity(const RMatrix& support_prob, int n_users, int max_delay);

// Element-wise denoising of one antenna's LE output.
struct DenoisedColumn {
    CVector mean;         // eta_hat(r)
    RVector support_prob; // pi per entry
    double psi_bar = 0.0; // average posterior variance
};

DenoisedColumn denoise_column(const CVector& r, double tau2, const Prior& prior);

}  // namespace asyncra

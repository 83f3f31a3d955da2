#include "asyncra/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asyncra {

Prior Prior::uniform(const RVector& beta, double activity_prob, int max_delay) {
    Prior p;
    p.beta = beta;
    p.omega = RMatrix::Constant(beta.size(), max_delay + 1, activity_prob / (max_delay + 1));
    p.clamp();
    return p;
}

void Prior::validate() const {
    if (omega.rows() != beta.size() || omega.cols() < 1) throw std::invalid_argument("prior shapes disagree");
    if ((omega.array() < 0.0).any() || (omega.array() > 1.0).any())
        throw std::invalid_argument("prior sparsity ratios must lie in [0, 1]");
    if (!(beta.array() > 0.0).all()) throw std::invalid_argument("large-scale fading must be positive");
}

void Prior::clamp() { omega = omega.cwiseMax(kOmegaClamp).cwiseMin(1.0 - kOmegaClamp); }

PosteriorStats posterior_stats(cdouble r, double tau2, double beta, double omega) {
    if (!(tau2 > 0.0)) throw std::domain_error("posterior_stats: tau2 must be positive");
    if (omega <= 0.0) return {};

    const double r2 = abs2(r);
    const double slab = tau2 + beta;
    const cdouble mu = (beta / slab) * r;
    const double gamma = tau2 * beta / slab;

    double pi = 1.0;
    if (omega < 1.0) {
        // xi = log of the spike-to-slab likelihood ratio.
        const double xi = r2 / slab - r2 / tau2 - std::log(tau2 / slab);
        pi = omega / (omega + (1.0 - omega) * std::exp(std::clamp(xi, -700.0, 700.0)));
    }
    // pi (|mu|^2 + Gamma) - |pi mu|^2, rearranged to avoid cancellation near pi = 1.
    const double var = pi * (1.0 - pi) * abs2(mu) + pi * gamma;
    return {pi * mu, std::max(var, 0.0), pi};
}

RMatrix update_common_sparsity(const RMatrix& support_prob, int n_users, int max_delay) {
    const Eigen::Index taps = max_delay + 1;
    if (support_prob.rows() != taps * n_users || support_prob.cols() < 1)
        throw std::invalid_argument("support probabilities must be (T+1)N x M");
    const RVector avg = support_prob.rowwise().mean();
    // Row k = n (T+1) + t of avg maps to omega(n, t); the reshape is a row-major view.
    RMatrix omega(n_users, taps);
    for (Eigen::Index n = 0; n < n_users; ++n)
        for (Eigen::Index t = 0; t < taps; ++t) omega(n, t) = avg[n * taps + t];
    return omega;
}

DenoisedColumn denoise_column(const CVector& r, double tau2, const Prior& prior) {
    const int taps = prior.max_delay() + 1;
    DenoisedColumn out;
    out.mean.resize(r.size());
    out.support_prob.resize(r.size());
    double psi_sum = 0.0;
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        const Eigen::Index n = k / taps;
        const PosteriorStats ps = posterior_stats(r[k], tau2, prior.beta[n], prior.omega(n, k % taps));
        out.mean[k] = ps.mean;
        out.support_prob[k] = ps.support_prob;
        psi_sum += ps.var;
    }
    out.psi_bar = psi_sum / static_cast<double>(r.size());
    return out;
}

}  // namespace asyncra

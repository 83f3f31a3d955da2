#include "asyncra/solver_common.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "asyncra/amp.hpp"
#include "asyncra/mamp.hpp"
#include "asyncra/oamp.hpp"

namespace asyncra {

std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::kOamp: return "oamp";
        case Algorithm::kMamp: return "mamp";
        case Algorithm::kAmp: return "amp";
    }
    return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
    if (name == "oamp") return Algorithm::kOamp;
    if (name == "mamp") return Algorithm::kMamp;
    if (name == "amp") return Algorithm::kAmp;
    return std::nullopt;
}

void StoppingRule::validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

void Problem::validate() const {
    prior.validate();
    if (Y.rows() != pilots.rows()) throw std::invalid_argument("Y rows must equal the observation length");
    if (Y.cols() < 1) throw std::invalid_argument("Y must have at least one antenna");
    if (prior.n_users() != pilots.n_users() || prior.max_delay() != pilots.max_delay())
        throw std::invalid_argument("prior does not match the pilot matrix");
    if (!(noise_var_eff > 0.0)) throw std::invalid_argument("effective noise variance must be positive");
    if (!(pilots.trace_gram() > 0.0)) throw std::invalid_argument("pilot matrix is zero");
}

double Problem::floor_scale() const { return prior.beta.mean(); }

NleOutput nle_step(const CVector& r, double tau2, const Prior& prior) {
    NleOutput out;
    out.denoised = denoise_column(r, tau2, prior);
    const double psi_bar = out.denoised.psi_bar;
    double gap = tau2 - psi_bar;
    if (gap < kNormalizerFloor * tau2) {
        gap = kNormalizerFloor * tau2;
        out.clamped = true;
    }
    out.C = tau2 / gap;
    out.s_next = out.C * (out.denoised.mean - divergence_avg(psi_bar, tau2) * r);
    return out;
}

double relative_change(const CMatrix& s_new, const CMatrix& s_old) {
    const double denom = s_old.squaredNorm();
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return (s_new - s_old).squaredNorm() / denom;
}

bool all_finite(const CMatrix& m) { return m.allFinite(); }

SolverResult run_solver(Algorithm a, const Problem& problem, const SolverOptions& options) {
    switch (a) {
        case Algorithm::kOamp: return run_oamp(problem, options);
        case Algorithm::kMamp: return run_mamp(problem, options);
        case Algorithm::kAmp: return run_amp(problem, options);
    }
    throw std::invalid_argument("unknown algorithm");
}

}  // namespace asyncra

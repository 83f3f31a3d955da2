#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "asyncra/solver_common.hpp"

namespace asyncra {

// Normalized trace moments of the Gram matrix G = P P^H and of D = lambda_dagger I - G.
//   f_k = tr(G^k) / n,  b_k = tr(D^k) / n,  w_k = tr(G D^k) / n = lambda_dagger b_k - b_{k+1},
//   wbar(i, j) = lambda_dagger w_{i+j} - w_{i+j+1} - w_i w_j,
// with n = (T+1)N. All moments come from the eigenvalues of G.
struct SpectralData {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double lambda_dagger = 0.0;
    Eigen::Index n_rows = 0;  // L
    Eigen::Index n_cols = 0;  // n
    std::vector<double> f;
    std::vector<double> b;
    std::vector<double> w;
    std::vector<double> g2;  // tr(G^2 D^k) / n, so wbar(i, j) = g2[i+j] - w_i w_j

    int max_order() const { return static_cast<int>(w.size()) - 1; }
    double wbar(int i, int j) const { return g2.at(i + j) - w.at(i) * w.at(j); }
};

SpectralData compute_spectral(const RVector& gram_eigenvalues, Eigen::Index n_cols, int max_order);
SpectralData compute_spectral(const CMatrix& P, int max_order);

struct DegenerateWeights : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coefficients of the LE error as a function of the newest weight alpha:
//   tau^2(alpha) = (alpha^2 c1 - 2 alpha c2 + c3) / (w_0 (alpha + c0))^2
struct AlphaTerms {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

struct AlphaChoice {
    double alpha = 1.0;
    bool fallback = false;
    AlphaTerms terms;
};

// past_theta[g-1] is the accumulated weight of s^(g) for g < i; cov is the i x i table of
// error cross-covariances (v^(g,l))^2, Hermitian, 1-based g mapped to row g-1.
AlphaTerms alpha_terms(std::span<const double> past_theta, const CMatrix& cov, const SpectralData& spectral,
                       double noise_var_eff, int iteration);

AlphaChoice optimal_alpha(std::span<const double> past_theta, const CMatrix& cov, const SpectralData& spectral,
                          double noise_var_eff, int iteration);

double predicted_le_error(double alpha, const AlphaTerms& terms, const SpectralData& spectral);

// ((y - P s_a)^H (y - P s_b) - L noise_var_eff) / tr(P^H P), from the two residuals.
cdouble estimate_cross_cov(const CVector& residual_a, const CVector& residual_b, double trace_gram,
                           double noise_var_eff);

// Scalar memory of one antenna.
struct MampAntennaState {
    std::vector<double> iota;   // iota^(1..i)
    std::vector<double> alpha;  // alpha^(1..i)
    CMatrix cov;                // (v^(g,l))^2, g,l = 1..i
    std::vector<double> theta;  // accumulated weight of s^(g) in the current iteration
    std::vector<double> p;      // p_(g) = -theta_g w_{i-g}
    double eps = 0.0;
    double tau2 = 0.0;
    AlphaTerms terms;
    bool alpha_fallback = false;
};

// Memory linear estimator for M antennas sharing P. Each call to step() consumes s^(i)
// and produces r^(i); no matrix is inverted and D is applied as lambda_dagger x - P (P^H x).
class MemoryLinearEstimator {
public:
    MemoryLinearEstimator(const CMatrix& P, double trace_gram, const SpectralData& spectral, double noise_var_eff,
                          Eigen::Index n_antennas, double variance_floor, FlopCounter* flops = nullptr);

    struct Output {
        CMatrix R;
        RVector tau2;
        RVector v2;
    };

    // Throws DegenerateWeights when a normalizer collapses or the memory exceeds the spectral table.
    Output step(const CMatrix& S, const CMatrix& Y);

    int iteration() const { return iteration_; }
    const MampAntennaState& antenna(Eigen::Index m) const { return antennas_.at(m); }
    const CMatrix& r_hat() const { return r_hat_; }
    const std::vector<CMatrix>& s_history() const { return s_hist_; }
    const std::vector<CMatrix>& residual_history() const { return z_hist_; }

private:
    const CMatrix& P_;
    double trace_gram_;
    const SpectralData& sp_;
    double noise_;
    double floor_;
    FlopCounter* flops_;
    int iteration_ = 0;
    std::vector<MampAntennaState> antennas_;
    std::vector<CMatrix> s_hist_;
    std::vector<CMatrix> z_hist_;
    CMatrix r_hat_;      // L x M
    CMatrix ph_r_hat_;   // P^H r_hat, reused for the next D r_hat
};

SolverResult run_mamp(const Problem& problem, const SolverOptions& options = {});

}  // namespace asyncra

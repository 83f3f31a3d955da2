#include "asyncra/mamp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asyncra/detail/driver.hpp"

namespace asyncra {

SpectralData compute_spectral(const RVector& gram_eigenvalues, Eigen::Index n_cols, int max_order) {
    if (gram_eigenvalues.size() == 0 || n_cols < 1) throw std::invalid_argument("empty spectrum");
    if (max_order < 0) throw std::invalid_argument("max_order must be >= 0");
    // Eigenvalues of a Gram matrix are nonnegative; clip solver round-off.
    const RVector lambda = gram_eigenvalues.cwiseMax(0.0);
    SpectralData sp;
    sp.n_rows = lambda.size();
    sp.n_cols = n_cols;
    sp.lambda_min = lambda.minCoeff();
    sp.lambda_max = lambda.maxCoeff();
    sp.lambda_dagger = 0.5 * (sp.lambda_min + sp.lambda_max);
    if (!(sp.lambda_max > 0.0)) throw std::invalid_argument("pilot Gram matrix is zero");

    const double inv_n = 1.0 / static_cast<double>(n_cols);
    const Eigen::Index count = max_order + 1;
    sp.f.assign(count + 1, 0.0);
    sp.b.assign(count + 1, 0.0);
    sp.w.assign(count, 0.0);
    sp.g2.assign(count, 0.0);
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
        const double lam = lambda[j];
        const double d = sp.lambda_dagger - lam;
        double lam_k = 1.0;
        double d_k = 1.0;
        for (Eigen::Index k = 0; k <= count; ++k) {
            sp.f[k] += lam_k;
            sp.b[k] += d_k;
            if (k < count) {
                sp.w[k] += lam * d_k;
                sp.g2[k] += lam * lam * d_k;
            }
            lam_k *= lam;
            d_k *= d;
        }
    }
    for (auto* v : {&sp.f, &sp.b, &sp.w, &sp.g2})
        for (double& x : *v) x *= inv_n;
    return sp;
}

SpectralData compute_spectral(const CMatrix& P, int max_order) {
    const CMatrix gram = P * P.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(gram, Eigen::EigenvaluesOnly);
    return compute_spectral(solver.eigenvalues(), P.cols(), max_order);
}

AlphaTerms alpha_terms(std::span<const double> past_theta, const CMatrix& cov, const SpectralData& sp,
                       double noise_var_eff, int iteration) {
    const int i = iteration;
    if (static_cast<int>(past_theta.size()) != i - 1 || cov.rows() < i || cov.cols() < i)
        throw std::invalid_argument("alpha_terms: memory sizes disagree with the iteration index");
    if (2 * i - 2 > sp.max_order()) throw DegenerateWeights("memory exceeds the spectral moment table");

    const double w0 = sp.w[0];
    AlphaTerms t;
    t.c1 = noise_var_eff * w0 + cov(i - 1, i - 1).real() * sp.wbar(0, 0);
    for (int g = 1; g < i; ++g) {
        const double th = past_theta[g - 1];
        t.c0 += th * sp.w[i - g];
        t.c2 -= th * (noise_var_eff * sp.w[i - g] + cov(i - 1, g - 1).real() * sp.wbar(0, i - g));
        for (int l = 1; l < i; ++l) {
            t.c3 += th * past_theta[l - 1] *
                    (noise_var_eff * sp.w[2 * i - g - l] + cov(g - 1, l - 1).real() * sp.wbar(i - g, i - l));
        }
    }
    t.c0 /= w0;
    return t;
}

AlphaChoice optimal_alpha(std::span<const double> past_theta, const CMatrix& cov, const SpectralData& sp,
                          double noise_var_eff, int iteration) {
    if (iteration < 1) throw std::invalid_argument("optimal_alpha: iteration must be >= 1");
    AlphaChoice choice;
    choice.terms = alpha_terms(past_theta, cov, sp, noise_var_eff, iteration);
    if (iteration == 1) return choice;
    const AlphaTerms& t = choice.terms;
    const double num = t.c2 * t.c0 + t.c3;
    const double den = t.c1 * t.c0 + t.c2;
    if (!std::isfinite(num) || !std::isfinite(den) || std::abs(den) <= 1e-14 * (std::abs(t.c1 * t.c0) + std::abs(t.c2))) {
        choice.fallback = true;
        return choice;
    }
    choice.alpha = num / den;
    return choice;
}

double predicted_le_error(double alpha, const AlphaTerms& t, const SpectralData& sp) {
    const double scale = sp.w[0] * (alpha + t.c0);
    return (alpha * alpha * t.c1 - 2.0 * alpha * t.c2 + t.c3) / (scale * scale);
}

cdouble estimate_cross_cov(const CVector& residual_a, const CVector& residual_b, double trace_gram,
                           double noise_var_eff) {
    const double L = static_cast<double>(residual_a.size());
    return (residual_a.dot(residual_b) - L * noise_var_eff) / trace_gram;
}

MemoryLinearEstimator::MemoryLinearEstimator(const CMatrix& P, double trace_gram, const SpectralData& spectral,
                                             double noise_var_eff, Eigen::Index n_antennas, double variance_floor,
                                             FlopCounter* flops)
    : P_(P),
      trace_gram_(trace_gram),
      sp_(spectral),
      noise_(noise_var_eff),
      floor_(variance_floor),
      flops_(flops),
      antennas_(n_antennas) {}

MemoryLinearEstimator::Output MemoryLinearEstimator::step(const CMatrix& S, const CMatrix& Y) {
    const int i = ++iteration_;
    const Eigen::Index L = P_.rows();
    const Eigen::Index n = P_.cols();
    const Eigen::Index M = S.cols();
    if (static_cast<Eigen::Index>(antennas_.size()) != M || Y.cols() != M)
        throw std::invalid_argument("antenna count changed between iterations");

    s_hist_.push_back(S);
    z_hist_.push_back(Y - P_ * S);
    const CMatrix& Z = z_hist_.back();

    Output out;
    out.tau2.resize(M);
    out.v2.resize(M);
    RVector iota(M), alpha(M), inv_eps(M);
    RMatrix p(i, M);

    for (Eigen::Index m = 0; m < M; ++m) {
        MampAntennaState& st = antennas_[m];

        CMatrix cov = CMatrix::Zero(i, i);
        if (i > 1) cov.topLeftCorner(i - 1, i - 1) = st.cov;
        for (int g = 1; g <= i; ++g) {
            const cdouble c = estimate_cross_cov(Z.col(m), z_hist_[g - 1].col(m), trace_gram_, noise_);
            cov(i - 1, g - 1) = c;
            cov(g - 1, i - 1) = std::conj(c);
        }
        cov(i - 1, i - 1) = std::max(cov(i - 1, i - 1).real(), floor_);
        // Keep the table a valid covariance: |v_gl| <= sqrt(v_gg v_ll).
        for (int g = 1; g < i; ++g) {
            const double bound = std::sqrt(cov(i - 1, i - 1).real() * cov(g - 1, g - 1).real());
            const double mag = std::abs(cov(i - 1, g - 1));
            if (mag > bound) {
                cov(i - 1, g - 1) *= bound / mag;
                cov(g - 1, i - 1) = std::conj(cov(i - 1, g - 1));
            }
        }
        st.cov = std::move(cov);
        const double v2 = st.cov(i - 1, i - 1).real();

        st.iota.push_back(1.0 / (sp_.lambda_dagger + noise_ / v2));
        for (double& th : st.theta) th *= st.iota.back();

        const AlphaChoice choice = optimal_alpha(st.theta, st.cov, sp_, noise_, i);
        st.alpha.push_back(choice.alpha);
        st.alpha_fallback = choice.fallback;
        st.terms = choice.terms;
        st.theta.push_back(choice.alpha);

        st.p.assign(i, 0.0);
        double eps = 0.0;
        double eps_mag = 0.0;
        for (int g = 1; g <= i; ++g) {
            st.p[g - 1] = -st.theta[g - 1] * sp_.w[i - g];
            eps -= st.p[g - 1];
            eps_mag += std::abs(st.p[g - 1]);
            p(g - 1, m) = st.p[g - 1];
        }
        if (!(std::abs(eps) >= 1e-14 * eps_mag) || eps == 0.0)
            throw DegenerateWeights("MAMP normalizer vanished at iteration " + std::to_string(i));
        st.eps = eps;
        st.tau2 = std::max(predicted_le_error(choice.alpha, choice.terms, sp_), floor_);

        iota[m] = st.iota.back();
        alpha[m] = choice.alpha;
        inv_eps[m] = 1.0 / eps;
        out.tau2[m] = st.tau2;
        out.v2[m] = v2;
    }

    if (i == 1) {
        r_hat_ = Z * alpha.asDiagonal();
    } else {
        const CMatrix D_r_hat = sp_.lambda_dagger * r_hat_ - P_ * ph_r_hat_;
        r_hat_ = D_r_hat * iota.asDiagonal() + Z * alpha.asDiagonal();
    }
    ph_r_hat_ = P_.adjoint() * r_hat_;

    out.R = ph_r_hat_;
    for (int g = 1; g <= i; ++g) out.R -= s_hist_[g - 1] * p.row(g - 1).asDiagonal();
    out.R = out.R * inv_eps.asDiagonal();

    if (flops_) {
        // Three L x n products per antenna (P s, P (P^H r_hat), P^H r_hat), the memory sum,
        // and the pairwise residual inner products.
        flops_->matvec(L, n, 3 * M);
        flops_->axpy(static_cast<Eigen::Index>(i) * n * M, 8.0);
        flops_->axpy(static_cast<Eigen::Index>(i) * L * M, 8.0);
        flops_->add(12.0 * static_cast<double>(i) * i * M);
    }
    return out;
}

namespace {

class MampLinearStage {
public:
    MampLinearStage(const Problem& problem, const SpectralData& spectral, double floor, FlopCounter& flops)
        : problem_(problem),
          le_(problem.pilots.matrix(), problem.pilots.trace_gram(), spectral, problem.noise_var_eff,
              problem.Y.cols(), floor, &flops) {}

    bool step(int /*iteration*/, const CMatrix& S, detail::LinearOutput& out, FlopCounter&, Diagnostics& diag) {
        try {
            MemoryLinearEstimator::Output o = le_.step(S, problem_.Y);
            out.R = std::move(o.R);
            out.tau2 = std::move(o.tau2);
            out.v2 = std::move(o.v2);
        } catch (const DegenerateWeights& e) {
            diag.abort_reason = e.what();
            return false;
        }
        for (Eigen::Index m = 0; m < problem_.Y.cols(); ++m)
            if (le_.antenna(m).alpha_fallback) ++diag.alpha_fallbacks;
        return true;
    }

    void observe_nle(const RVector&) {}

private:
    const Problem& problem_;
    MemoryLinearEstimator le_;
};

}  // namespace

SolverResult run_mamp(const Problem& problem, const SolverOptions& options) {
    problem.validate();
    options.stop.validate();
    FlopCounter flops;
    const CMatrix& P = problem.pilots.matrix();
    const double L = static_cast<double>(P.rows());

    Diagnostics diag;
    // Gram product plus a dense Hermitian eigensolve, skipped when the pilots carry a cached spectrum.
    if (!problem.pilots.has_cached_spectrum()) diag.setup_flops = 8.0 * L * L * P.cols() + 9.0 * 8.0 * L * L * L;
    const SpectralData spectral =
        compute_spectral(problem.pilots.gram_eigenvalues(), P.cols(), 2 * options.stop.max_iters);

    MampLinearStage stage(problem, spectral, options.relative_floor * problem.floor_scale(), flops);
    return detail::iterate(problem, options, stage, detail::NleKind::kDivergenceFree, flops, std::move(diag));
}

}  // namespace asyncra

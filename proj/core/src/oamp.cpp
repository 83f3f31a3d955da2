#include "asyncra/oamp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "asyncra/detail/driver.hpp"

namespace asyncra {

namespace {

Eigen::LLT<CMatrix> factor_regularized_gram(const CMatrix& gram, double ratio) {
    CMatrix A = gram;
    A.diagonal().array() += ratio;
    Eigen::LLT<CMatrix> llt(A);
    if (llt.info() != Eigen::Success) throw std::runtime_error("LMMSE system is not positive definite");
    return llt;
}

}  // namespace

LmmseFilter lmmse_W(const CMatrix& P, double v2, double noise_var_eff) {
    if (!(v2 > 0.0)) throw std::invalid_argument("lmmse_W: v2 must be positive");
    const CMatrix gram = P * P.adjoint();
    const Eigen::LLT<CMatrix> llt = factor_regularized_gram(gram, noise_var_eff / v2);
    const CMatrix W_hat = llt.solve(P).adjoint();
    const double tr = (W_hat * P).trace().real();
    LmmseFilter f;
    f.W = (static_cast<double>(P.cols()) / tr) * W_hat;
    f.B = CMatrix::Identity(P.cols(), P.cols()) - f.W * P;
    return f;
}

CVector le_step(const CVector& s, const CVector& y, const CMatrix& P, const CMatrix& W) {
    return s + W * (y - P * s);
}

double estimate_v2_raw(const CVector& residual, double trace_gram, double noise_var_eff) {
    return (residual.squaredNorm() - residual.size() * noise_var_eff) / trace_gram;
}

double estimate_v2(const CVector& y, const ExpandedPilotMatrix& pilots, const CVector& s, double noise_var_eff,
                   double floor) {
    const CVector residual = y - pilots.matrix() * s;
    return std::max(estimate_v2_raw(residual, pilots.trace_gram(), noise_var_eff), floor);
}

double estimate_tau2(const CMatrix& W, const CMatrix& B, double v2, double noise_var_eff, double floor) {
    const double dim = static_cast<double>(B.rows());
    const double value = (B.squaredNorm() * v2 + W.squaredNorm() * noise_var_eff) / dim;
    return std::max(value, floor);
}

LmmseStage::LmmseStage(const CMatrix& P, FlopCounter& flops) : P_(P), gram_(P * P.adjoint()), flops_(flops) {}

LmmseStage::Filter LmmseStage::filter(double v2, double noise_var_eff) const {
    const Eigen::Index L = P_.rows();
    const Eigen::Index n = P_.cols();
    const Eigen::LLT<CMatrix> llt = factor_regularized_gram(gram_, noise_var_eff / v2);
    Filter f;
    f.W_hat_adj = llt.solve(P_);
    const CMatrix X = llt.solve(gram_);  // (P P^H + c I)^{-1} P P^H
    // Cholesky, two triangular solves against n and L right-hand sides.
    flops_.add(8.0 * static_cast<double>(L) * L * L / 3.0);
    flops_.matvec(L, L, n);
    flops_.matvec(L, L, L);

    // tr(W_hat P) through the entries of W_hat^H, cross-checked against tr(X) below.
    const double tr_what_p = f.W_hat_adj.conjugate().cwiseProduct(P_).sum().real();
    f.scale = static_cast<double>(n) / tr_what_p;
    f.trace_WP = f.scale * X.trace().real();
    f.trace_WWh = f.scale * f.scale * f.W_hat_adj.squaredNorm();
    // |W P|_F^2 = scale^2 tr(X X)
    const double tr_xx = X.cwiseProduct(X.transpose()).sum().real();
    f.trace_BBh = static_cast<double>(n) - 2.0 * f.trace_WP + f.scale * f.scale * tr_xx;
    flops_.axpy(L * n, 16.0);
    flops_.axpy(L * L, 8.0);
    return f;
}

CVector LmmseStage::apply(const Filter& f, const CVector& s, const CVector& residual) const {
    flops_.matvec(P_.cols(), P_.rows());
    return s + f.scale * (f.W_hat_adj.adjoint() * residual);
}

namespace {

class OampLinearStage {
public:
    OampLinearStage(const Problem& problem, const SolverOptions& options, FlopCounter& flops)
        : problem_(problem),
          lmmse_(problem.pilots.matrix(), flops),
          floor_(options.relative_floor * problem.floor_scale()) {}

    bool step(int /*iteration*/, const CMatrix& S, detail::LinearOutput& out, FlopCounter& flops,
              Diagnostics& diag) {
        const CMatrix& P = problem_.pilots.matrix();
        const Eigen::Index M = S.cols();
        const double n = static_cast<double>(P.cols());
        out.R.resize(S.rows(), M);
        out.tau2.resize(M);
        out.v2.resize(M);
        out.trace_ratio = 1.0;
        double worst = 0.0;
        for (Eigen::Index m = 0; m < M; ++m) {
            const CVector residual = problem_.Y.col(m) - P * S.col(m);
            flops.matvec(P.rows(), P.cols());
            const double v2 =
                std::max(estimate_v2_raw(residual, problem_.pilots.trace_gram(), problem_.noise_var_eff), floor_);
            LmmseStage::Filter f;
            try {
                f = lmmse_.filter(v2, problem_.noise_var_eff);
            } catch (const std::runtime_error& e) {
                diag.abort_reason = e.what();
                return false;
            }
            out.R.col(m) = lmmse_.apply(f, S.col(m), residual);
            out.v2[m] = v2;
            out.tau2[m] = std::max((f.trace_BBh * v2 + f.trace_WWh * problem_.noise_var_eff) / n, floor_);
            const double ratio = f.trace_WP / n;
            if (std::abs(ratio - 1.0) >= worst) {
                worst = std::abs(ratio - 1.0);
                out.trace_ratio = ratio;
            }
        }
        return true;
    }

    void observe_nle(const RVector&) {}

    double setup_flops() const {
        const CMatrix& P = problem_.pilots.matrix();
        return 8.0 * static_cast<double>(P.rows()) * P.rows() * P.cols();
    }

private:
    const Problem& problem_;
    LmmseStage lmmse_;
    double floor_;
};

}  // namespace

SolverResult run_oamp(const Problem& problem, const SolverOptions& options) {
    problem.validate();
    options.stop.validate();
    FlopCounter flops;
    OampLinearStage stage(problem, options, flops);
    Diagnostics diag;
    diag.setup_flops = stage.setup_flops();
    return detail::iterate(problem, options, stage, detail::NleKind::kDivergenceFree, flops, std::move(diag));
}

}  // namespace asyncra

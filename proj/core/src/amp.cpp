#include "asyncra/amp.hpp"

#include <algorithm>
#include <string>

#include "asyncra/detail/driver.hpp"

namespace asyncra {

namespace {

class AmpLinearStage {
public:
    AmpLinearStage(const Problem& problem, const SolverOptions& options)
        : problem_(problem),
          options_(options),
          floor_(options.relative_floor * problem.floor_scale()),
          onsager_(RVector::Zero(problem.Y.cols())) {}

    bool step(int iteration, const CMatrix& S, detail::LinearOutput& out, FlopCounter& flops, Diagnostics& diag) {
        const CMatrix& P = problem_.pilots.matrix();
        const Eigen::Index L = P.rows();
        const Eigen::Index n = P.cols();
        const Eigen::Index M = S.cols();

        CMatrix Z = problem_.Y - P * S;
        if (options_.onsager && iteration > 1) Z += z_prev_ * onsager_.asDiagonal();
        out.R = S + P.adjoint() * Z;
        flops.matvec(L, n, 2 * M);

        out.tau2 = (Z.colwise().squaredNorm() / static_cast<double>(L)).transpose();
        out.tau2 = out.tau2.cwiseMax(floor_);
        out.v2 = RVector::Zero(M);
        out.trace_ratio = 1.0;
        if (iteration == 1) {
            first_tau2_ = out.tau2;
        } else if ((out.tau2.array() > options_.divergence_ratio * first_tau2_.array()).any()) {
            diag.abort_reason = "AMP diverged at iteration " + std::to_string(iteration);
            return false;
        }
        z_prev_ = std::move(Z);
        return true;
    }

    void observe_nle(const RVector& avg_derivative) {
        const double ratio = static_cast<double>(problem_.pilots.cols()) / problem_.pilots.rows();
        onsager_ = ratio * avg_derivative;
    }

private:
    const Problem& problem_;
    const SolverOptions& options_;
    double floor_;
    RVector onsager_;
    RVector first_tau2_;
    CMatrix z_prev_;
};

}  // namespace

SolverResult run_amp(const Problem& problem, const SolverOptions& options) {
    problem.validate();
    options.stop.validate();
    FlopCounter flops;
    AmpLinearStage stage(problem, options);
    return detail::iterate(problem, options, stage, detail::NleKind::kPosteriorMean, flops, Diagnostics{});
}

}  // namespace asyncra

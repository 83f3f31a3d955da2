#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asyncra/denoiser.hpp"
#include "asyncra/scenario.hpp"
#include "asyncra/types.hpp"

namespace asyncra {

enum class Algorithm { kOamp, kMamp, kAmp };

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct StoppingRule {
    int max_iters = 50;
    double tol = 1e-5;

    void validate() const;
};

struct SolverOptions {
    StoppingRule stop;
    // Floors on v^2 and tau^2, relative to the mean slab variance of the prior. The model
    // works in absolute received-power units, so an absolute floor would swamp the noise.
    double relative_floor = 1e-12;
    bool common_sparsity = true;  // refine omega from the cross-antenna posterior each iteration
    bool onsager = true;          // AMP only
    double divergence_ratio = 1e8; // AMP: abort once tau^2 exceeds this multiple of its first value
};

// Real floating-point operations, counted analytically per kernel (complex MAC = 8 flops).
struct FlopCounter {
    double total = 0.0;

    void matvec(Eigen::Index rows, Eigen::Index cols, Eigen::Index rhs = 1) {
        total += 8.0 * static_cast<double>(rows) * static_cast<double>(cols) * static_cast<double>(rhs);
    }
    void axpy(Eigen::Index n, double per_entry = 8.0) { total += per_entry * static_cast<double>(n); }
    void add(double flops) { total += flops; }
};

struct IterationRecord {
    double rel_change = 0.0;   // summed over antennas, as in the stopping test
    double mean_v2 = 0.0;
    double mean_tau2 = 0.0;
    double flops = 0.0;
    double trace_ratio = 1.0;  // OAMP: worst tr(W P) / ((T+1)N) over antennas
};

struct Diagnostics {
    int iterations = 0;
    bool converged = false;
    bool aborted = false;
    std::string abort_reason;
    int c_clamps = 0;          // NLE normalizer hit its floor
    int alpha_fallbacks = 0;   // MAMP weight denominator degenerate
    double setup_flops = 0.0;  // once-per-solve work (Gram, eigensolve)
    std::vector<IterationRecord> trace;
};

struct SolverResult {
    CMatrix H_hat;  // (T+1)N x M
    RMatrix omega;  // final N x (T+1) sparsity ratios used for detection
    Diagnostics diag;
};

// Inputs shared by every solver.
struct Problem {
    const CMatrix& Y;
    const ExpandedPilotMatrix& pilots;
    const Prior& prior;
    double noise_var_eff;

    void validate() const;
    double floor_scale() const;  // mean of beta
};

// Divergence-free NLE output for one antenna.
struct NleOutput {
    CVector s_next;
    DenoisedColumn denoised;
    double C = 1.0;
    bool clamped = false;
};

inline constexpr double kNormalizerFloor = 1e-12;

NleOutput nle_step(const CVector& r, double tau2, const Prior& prior);

// Sum over antennas of |s_new - s_old|^2 divided by the sum of |s_old|^2; +inf when s_old = 0.
double relative_change(const CMatrix& s_new, const CMatrix& s_old);

bool all_finite(const CMatrix& m);

// Dispatch by algorithm tag.
SolverResult run_solver(Algorithm a, const Problem& problem, const SolverOptions& options = {});

}  // namespace asyncra

#pragma once

#include "asyncra/solver_common.hpp"

namespace asyncra {

// Conventional AMP with the spike-and-slab MMSE denoiser and the same common-sparsity
// refinement. The effective noise level is tracked as |z|^2 / L; the Onsager term uses the
// previous iteration's average denoiser derivative. Set SolverOptions::onsager = false to
// drop it. Divergence (non-finite iterates or tau^2 blowing past
// SolverOptions::divergence_ratio times its first value) aborts the solve.
SolverResult run_amp(const Problem& problem, const SolverOptions& options = {});

}  // namespace asyncra

#include "asyncra/detection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace asyncra {

DetectionResult detect(const RMatrix& omega, double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("detection threshold must lie in (0, 1)");
    DetectionResult r;
    r.delay.assign(omega.rows(), -1);
    for (Eigen::Index n = 0; n < omega.rows(); ++n) {
        if (omega.row(n).sum() < theta) continue;
        Eigen::Index best = 0;
        for (Eigen::Index t = 1; t < omega.cols(); ++t)
            if (omega(n, t) > omega(n, best)) best = t;
        r.active_users.push_back(static_cast<int>(n));
        r.delay[n] = static_cast<int>(best);
    }
    return r;
}

double TrialMetrics::nmse_db() const {
    return nmse > 0.0 ? 10.0 * std::log10(nmse) : -std::numeric_limits<double>::infinity();
}

TrialMetrics score_trial(const GroundTruth& truth, const DetectionResult& result) {
    const std::size_t N = truth.active.size();
    if (result.delay.size() != N) throw std::invalid_argument("detection and truth disagree on the user count");

    std::size_t wrong_activity = 0;
    std::size_t wrong_delay = 0;
    for (std::size_t n = 0; n < N; ++n) {
        const bool detected = result.delay[n] >= 0;
        const bool active = truth.active[n] != 0;
        if (detected != active) ++wrong_activity;
        if (active && (!detected || result.delay[n] != truth.delay[n])) ++wrong_delay;
    }

    TrialMetrics m;
    m.activity_error_prob = static_cast<double>(wrong_activity) / static_cast<double>(N);
    const std::size_t K = truth.active_users.size();
    m.delay_error_prob = K == 0 ? 0.0 : static_cast<double>(wrong_delay) / static_cast<double>(K);

    const double energy = truth.H.squaredNorm();
    if (result.H_hat.size() == 0) {
        m.nmse = energy > 0.0 ? 1.0 : 0.0;
    } else {
        if (result.H_hat.rows() != truth.H.rows() || result.H_hat.cols() != truth.H.cols())
            throw std::invalid_argument("channel estimate has the wrong shape");
        const double err = (result.H_hat - truth.H).squaredNorm();
        // No channel to estimate: false alarms already show up in the activity error.
        m.nmse = energy > 0.0 ? err / energy : 0.0;
    }
    return m;
}

TrialMetrics all_miss_metrics(const GroundTruth& truth) {
    DetectionResult none;
    none.delay.assign(truth.active.size(), -1);
    TrialMetrics m = score_trial(truth, none);
    m.diverged = true;
    return m;
}

}  // namespace asyncra

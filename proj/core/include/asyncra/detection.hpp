#pragma once

#include <vector>

#include "asyncra/scenario.hpp"
#include "asyncra/types.hpp"

namespace asyncra {

inline constexpr double kDefaultThreshold = 0.6;

struct DetectionResult {
    std::vector<int> active_users;  // ascending
    std::vector<int> delay;         // per user; -1 outside active_users
    CMatrix H_hat;
};

// A user is active when its sparsity ratios sum to at least theta; its delay is the argmax
// over t, ties going to the smaller delay.
DetectionResult detect(const RMatrix& omega, double theta = kDefaultThreshold);

struct TrialMetrics {
    double activity_error_prob = 0.0;  // (misses + false alarms) / N
    double delay_error_prob = 0.0;     // true actives missed or mis-delayed / K; 0 when K = 0
    double nmse = 0.0;                 // |H_hat - H|_F^2 / |H|_F^2; 0 when H = 0
    double runtime_s = 0.0;
    int iterations = 0;
    bool diverged = false;

    double nmse_db() const;
};

TrialMetrics score_trial(const GroundTruth& truth, const DetectionResult& result);

// Metrics charged to a solve that aborted: every true active user missed, H_hat = 0.
TrialMetrics all_miss_metrics(const GroundTruth& truth);

}  // namespace asyncra

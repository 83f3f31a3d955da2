#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "asyncra/types.hpp"

namespace asyncra {

// Physical and combinatorial parameters of one asynchronous random-access block.
// Powers are given in dBm (noise as a PSD in dBm/Hz), distances in km.
struct SystemConfig {
    int n_users = 400;
    int n_antennas = 16;
    int pilot_len = 50;  // symbols before delay padding
    int max_delay = 4;   // symbols
    int n_active = 50;

    double tx_power_dbm = 23.0;
    double noise_psd_dbm_hz = -169.0;
    double bandwidth_hz = 1.0e6;
    double cell_radius_min_km = 0.05;
    double cell_radius_max_km = 1.0;
    double pathloss_intercept_db = -128.1;
    double pathloss_slope_db = 36.7;

    std::uint64_t rng_seed = 0;

    int observation_len() const { return pilot_len + max_delay; }
    int n_columns() const { return (max_delay + 1) * n_users; }
    double activity_prob() const { return static_cast<double>(n_active) / n_users; }

    double tx_power_w() const;
    double noise_power_dbm() const;
    double noise_power_w() const;
    double noise_var_eff() const;  // sigma^2 / (rho L)

    // Throws std::invalid_argument on the first violated constraint.
    void validate() const;
};

double dbm_to_watts(double dbm);
double db_to_linear(double db);
double pathloss_db(const SystemConfig& cfg, double distance_km);

// Column (n, t) of the expanded matrix, 0-based, lives at index n * (T + 1) + t.
inline int column_index(int user, int delay, int max_delay) { return user * (max_delay + 1) + delay; }

// Base pilots and the L x (T+1)N sensing matrix of every (user, delay) shift.
class ExpandedPilotMatrix {
public:
    ExpandedPilotMatrix() = default;
    ExpandedPilotMatrix(CMatrix base_pilots, int max_delay);

    const CMatrix& base() const { return base_; }
    const CMatrix& matrix() const { return P_; }
    int max_delay() const { return max_delay_; }
    int n_users() const { return static_cast<int>(base_.cols()); }
    int pilot_len() const { return static_cast<int>(base_.rows()); }
    int rows() const { return static_cast<int>(P_.rows()); }
    int cols() const { return static_cast<int>(P_.cols()); }
    double trace_gram() const { return trace_gram_; }

    // Ascending eigenvalues of P P^H. Computed on first use, then shared by all copies.
    const RVector& gram_eigenvalues() const;
    bool has_cached_spectrum() const;

private:
    struct SpectrumCache;

    CMatrix base_;
    CMatrix P_;
    int max_delay_ = 0;
    double trace_gram_ = 0.0;
    std::shared_ptr<SpectrumCache> spectrum_;
};

struct GroundTruth {
    std::vector<std::uint8_t> active;  // u_n
    std::vector<int> delay;            // t_n, -1 for inactive users
    std::vector<int> active_users;     // ascending ids with u_n = 1
    RVector distance_km;
    RVector beta;  // linear large-scale fading
    CMatrix f;     // N x M small-scale channels
    RMatrix phi;   // N x (T+1) activity/delay indicator
    CMatrix H;     // (T+1)N x M effective channel
};

struct ReceivedSignal {
    CMatrix Y;  // normalized, L x M
    double noise_var_eff = 0.0;
};

struct Scenario {
    SystemConfig cfg;
    ExpandedPilotMatrix pilots;
    GroundTruth truth;
    ReceivedSignal rx;
};

CVector expand_pilot(const CVector& pilot, int delay, int max_delay);

ExpandedPilotMatrix generate_pilots(const SystemConfig& cfg, Rng& rng);

GroundTruth sample_ground_truth(const SystemConfig& cfg, Rng& rng);

// Builds H from per-user activity, delays, and channels.
CMatrix assemble_effective_channel(const std::vector<int>& delay, const CMatrix& f, int max_delay);

ReceivedSignal synthesize_received(const ExpandedPilotMatrix& pilots, const CMatrix& H, const SystemConfig& cfg,
                                   Rng& rng);

// Lower-level variant with linear powers; noise_power_w may be zero.
ReceivedSignal synthesize_received(const ExpandedPilotMatrix& pilots, const CMatrix& H, double tx_power_w,
                                   double noise_power_w, Rng& rng);

// Independent pilot / truth / noise streams derived from a single seed.
Scenario draw_scenario(const SystemConfig& cfg, std::uint64_t seed);
Scenario draw_scenario(const SystemConfig& cfg, std::uint64_t seed, const ExpandedPilotMatrix& fixed_pilots);

}  // namespace asyncra

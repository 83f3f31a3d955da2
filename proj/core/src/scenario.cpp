#include "asyncra/scenario.hpp"

#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>

namespace asyncra {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double pathloss_db(const SystemConfig& cfg, double distance_km) {
    return cfg.pathloss_intercept_db - cfg.pathloss_slope_db * std::log10(distance_km);
}

double SystemConfig::tx_power_w() const { return dbm_to_watts(tx_power_dbm); }

double SystemConfig::noise_power_dbm() const { return noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz); }

double SystemConfig::noise_power_w() const { return dbm_to_watts(noise_power_dbm()); }

double SystemConfig::noise_var_eff() const { return noise_power_w() / (tx_power_w() * observation_len()); }

void SystemConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid system config: " + what); };
    if (n_users < 1) fail("n_users must be >= 1");
    if (n_antennas < 1) fail("n_antennas must be >= 1");
    if (pilot_len < 1) fail("pilot_len must be >= 1");
    if (max_delay < 0) fail("max_delay must be >= 0");
    if (n_active < 0 || n_active > n_users) fail("n_active must lie in [0, n_users]");
    if (!(bandwidth_hz > 0.0)) fail("bandwidth_hz must be positive");
    if (!(cell_radius_min_km > 0.0) || !(cell_radius_max_km >= cell_radius_min_km))
        fail("cell radii must satisfy 0 < min <= max");
    if (!std::isfinite(tx_power_dbm) || !std::isfinite(noise_psd_dbm_hz)) fail("powers must be finite");
}

struct ExpandedPilotMatrix::SpectrumCache {
    std::once_flag once;
    RVector eigenvalues;
};

ExpandedPilotMatrix::ExpandedPilotMatrix(CMatrix base_pilots, int max_delay)
    : base_(std::move(base_pilots)), max_delay_(max_delay), spectrum_(std::make_shared<SpectrumCache>()) {
    if (max_delay_ < 0) throw std::invalid_argument("max_delay must be >= 0");
    const Eigen::Index lbar = base_.rows();
    const Eigen::Index n_users = base_.cols();
    const Eigen::Index taps = max_delay_ + 1;
    P_ = CMatrix::Zero(lbar + max_delay_, taps * n_users);
    for (Eigen::Index n = 0; n < n_users; ++n) {
        for (Eigen::Index t = 0; t < taps; ++t) {
            P_.col(n * taps + t).segment(t, lbar) = base_.col(n);
        }
    }
    trace_gram_ = static_cast<double>(taps) * base_.squaredNorm();
}

const RVector& ExpandedPilotMatrix::gram_eigenvalues() const {
    if (!spectrum_) throw std::logic_error("pilot matrix is empty");
    std::call_once(spectrum_->once, [this] {
        const CMatrix gram = P_ * P_.adjoint();
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(gram, Eigen::EigenvaluesOnly);
        spectrum_->eigenvalues = solver.eigenvalues();
    });
    return spectrum_->eigenvalues;
}

bool ExpandedPilotMatrix::has_cached_spectrum() const {
    return spectrum_ && spectrum_->eigenvalues.size() > 0;
}

CVector expand_pilot(const CVector& pilot, int delay, int max_delay) {
    if (delay < 0 || delay > max_delay) {
        throw std::out_of_range("delay " + std::to_string(delay) + " outside [0, " + std::to_string(max_delay) +
                                "]");
    }
    CVector out = CVector::Zero(pilot.size() + max_delay);
    out.segment(delay, pilot.size()) = pilot;
    return out;
}

ExpandedPilotMatrix generate_pilots(const SystemConfig& cfg, Rng& rng) {
    cfg.validate();
    const double var = 1.0 / cfg.pilot_len;
    CMatrix base(cfg.pilot_len, cfg.n_users);
    for (Eigen::Index n = 0; n < base.cols(); ++n)
        for (Eigen::Index l = 0; l < base.rows(); ++l) base(l, n) = complex_normal(rng, var);
    return ExpandedPilotMatrix(std::move(base), cfg.max_delay);
}

CMatrix assemble_effective_channel(const std::vector<int>& delay, const CMatrix& f, int max_delay) {
    const Eigen::Index n_users = f.rows();
    if (static_cast<Eigen::Index>(delay.size()) != n_users)
        throw std::invalid_argument("delay vector and channel rows disagree");
    CMatrix H = CMatrix::Zero((max_delay + 1) * n_users, f.cols());
    for (Eigen::Index n = 0; n < n_users; ++n) {
        const int t = delay[n];
        if (t < 0) continue;
        if (t > max_delay) throw std::out_of_range("delay exceeds max_delay");
        H.row(column_index(static_cast<int>(n), t, max_delay)) = f.row(n);
    }
    return H;
}

GroundTruth sample_ground_truth(const SystemConfig& cfg, Rng& rng) {
    cfg.validate();
    const int N = cfg.n_users;
    const int T = cfg.max_delay;
    GroundTruth g;
    g.active.assign(N, 0);
    g.delay.assign(N, -1);

    // Partial Fisher-Yates: the first K entries form a uniform K-subset.
    std::vector<int> ids(N);
    std::iota(ids.begin(), ids.end(), 0);
    for (int k = 0; k < cfg.n_active; ++k) {
        std::uniform_int_distribution<int> pick(k, N - 1);
        std::swap(ids[k], ids[pick(rng)]);
    }
    std::uniform_int_distribution<int> delay_dist(0, T);
    for (int k = 0; k < cfg.n_active; ++k) g.active[ids[k]] = 1;
    for (int n = 0; n < N; ++n) {
        if (g.active[n]) {
            g.delay[n] = delay_dist(rng);
            g.active_users.push_back(n);
        }
    }

    std::uniform_real_distribution<double> radius(cfg.cell_radius_min_km, cfg.cell_radius_max_km);
    g.distance_km.resize(N);
    g.beta.resize(N);
    g.f.resize(N, cfg.n_antennas);
    for (int n = 0; n < N; ++n) {
        g.distance_km[n] = radius(rng);
        g.beta[n] = db_to_linear(pathloss_db(cfg, g.distance_km[n]));
        for (int m = 0; m < cfg.n_antennas; ++m) g.f(n, m) = complex_normal(rng, g.beta[n]);
    }

    g.phi = RMatrix::Zero(N, T + 1);
    for (int n = 0; n < N; ++n)
        if (g.delay[n] >= 0) g.phi(n, g.delay[n]) = 1.0;
    g.H = assemble_effective_channel(g.delay, g.f, T);
    return g;
}

ReceivedSignal synthesize_received(const ExpandedPilotMatrix& pilots, const CMatrix& H, double tx_power_w,
                                   double noise_power_w, Rng& rng) {
    if (H.rows() != pilots.cols()) throw std::invalid_argument("H rows must equal the number of pilot columns");
    if (!(tx_power_w > 0.0) || noise_power_w < 0.0) throw std::invalid_argument("invalid power levels");
    const double L = pilots.rows();
    const double gain = std::sqrt(tx_power_w * L);
    CMatrix Y = gain * (pilots.matrix() * H);
    if (noise_power_w > 0.0) {
        for (Eigen::Index m = 0; m < Y.cols(); ++m)
            for (Eigen::Index l = 0; l < Y.rows(); ++l) Y(l, m) += complex_normal(rng, noise_power_w);
    }
    Y /= gain;
    return {std::move(Y), noise_power_w / (tx_power_w * L)};
}

ReceivedSignal synthesize_received(const ExpandedPilotMatrix& pilots, const CMatrix& H, const SystemConfig& cfg,
                                   Rng& rng) {
    return synthesize_received(pilots, H, cfg.tx_power_w(), cfg.noise_power_w(), rng);
}

namespace {

enum Stream : std::uint64_t { kPilotStream = 1, kTruthStream = 2, kNoiseStream = 3 };

Scenario finish_scenario(const SystemConfig& cfg, std::uint64_t seed, ExpandedPilotMatrix pilots) {
    Rng truth_rng(mix_seed(seed, kTruthStream));
    Rng noise_rng(mix_seed(seed, kNoiseStream));
    Scenario s;
    s.cfg = cfg;
    s.pilots = std::move(pilots);
    s.truth = sample_ground_truth(cfg, truth_rng);
    s.rx = synthesize_received(s.pilots, s.truth.H, cfg, noise_rng);
    return s;
}

}  // namespace

Scenario draw_scenario(const SystemConfig& cfg, std::uint64_t seed) {
    Rng pilot_rng(mix_seed(seed, kPilotStream));
    return finish_scenario(cfg, seed, generate_pilots(cfg, pilot_rng));
}

Scenario draw_scenario(const SystemConfig& cfg, std::uint64_t seed, const ExpandedPilotMatrix& fixed_pilots) {
    if (fixed_pilots.n_users() != cfg.n_users || fixed_pilots.pilot_len() != cfg.pilot_len ||
        fixed_pilots.max_delay() != cfg.max_delay)
        throw std::invalid_argument("fixed pilot matrix does not match the system config");
    return finish_scenario(cfg, seed, fixed_pilots);
}

}  // namespace asyncra

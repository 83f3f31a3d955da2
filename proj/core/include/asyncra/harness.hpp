#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "asyncra/detection.hpp"
#include "asyncra/scenario.hpp"
#include "asyncra/solver_common.hpp"

namespace asyncra {

struct ExperimentPlan {
    SystemConfig base;
    std::vector<int> k_values;  // sweep over the number of active users; empty means {base.n_active}
    std::vector<Algorithm> algorithms{Algorithm::kOamp, Algorithm::kMamp, Algorithm::kAmp};
    int n_trials = 500;
    std::uint64_t seed = 1;
    std::string out_dir = "results";
    int threads = 1;
    bool fixed_pilots = false;  // draw P once per plan instead of once per trial
    StoppingRule stop;
    double theta = kDefaultThreshold;

    std::vector<int> sweep() const;
    void validate() const;  // throws std::invalid_argument
};

struct TrialRecord {
    Algorithm algorithm = Algorithm::kOamp;
    int k = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    TrialMetrics metrics;
    bool converged = false;
};

struct AggregateRow {
    std::string algorithm;
    int k = 0;
    int trials = 0;
    int divergences = 0;
    double activity_error_prob = 0.0;
    double activity_ci95 = 0.0;
    double delay_error_prob = 0.0;
    double delay_ci95 = 0.0;
    double nmse = 0.0;  // mean of per-trial linear NMSE
    double nmse_ci95 = 0.0;
    double runtime_s = 0.0;
    double iterations = 0.0;

    double nmse_db() const;
    bool operator==(const AggregateRow&) const = default;
};

struct ExperimentResult {
    std::vector<TrialRecord> trials;  // ordered by (k, trial, algorithm)
    std::vector<AggregateRow> summary;
};

// Counter-based split of the master seed; independent of thread scheduling.
std::uint64_t trial_seed(std::uint64_t master, int k, int trial);

using ProgressFn = std::function<void(int done, int total)>;

ExperimentResult run_experiment(const ExperimentPlan& plan, const ProgressFn& progress = {});

// Runs every algorithm of the plan on one scenario; the building block of run_experiment.
std::vector<TrialRecord> run_trial(const ExperimentPlan& plan, const Scenario& scenario, int k, int trial,
                                   std::uint64_t seed);

std::vector<AggregateRow> aggregate(const ExperimentPlan& plan, const std::vector<TrialRecord>& trials);

void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& trials);
void write_summary_csv(std::ostream& os, const std::vector<AggregateRow>& rows);  // throws on empty rows
std::vector<AggregateRow> read_summary_csv(std::istream& is);
std::string format_summary_table(const std::vector<AggregateRow>& rows);
void write_meta(std::ostream& os, const ExperimentPlan& plan);

// trials.csv, summary.csv and meta.txt under plan.out_dir. Throws std::runtime_error on I/O failure.
void write_outputs(const ExperimentPlan& plan, const ExperimentResult& result);

// ---- configuration files -------------------------------------------------------------
//
// Flat "key = value" lines; '#' starts a comment. Units: *_dbm in dBm, noise_psd_dbm_hz in
// dBm/Hz, bandwidth_hz in Hz, *_km in km, *_db in dB. Lists are comma separated.

ExperimentPlan parse_plan(std::istream& is);
ExperimentPlan load_plan(const std::string& path);
void apply_setting(ExperimentPlan& plan, const std::string& key, const std::string& value);
void apply_override(ExperimentPlan& plan, const std::string& assignment);  // "key=value"
std::string describe_plan(const ExperimentPlan& plan);  // round-trips through parse_plan

}  // namespace asyncra

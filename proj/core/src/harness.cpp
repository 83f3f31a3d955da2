#include "asyncra/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "asyncra/version.hpp"

namespace asyncra {

namespace {

constexpr double kZ95 = 1.959963984540054;

constexpr const char* kMetricDefinitions[] = {
    "activity_error_prob: (missed active users + false alarms) / N, averaged over trials",
    "delay_error_prob: true active users that are missed or assigned a wrong delay / K, averaged over trials",
    "nmse: |H_hat - H|_F^2 / |H|_F^2 per trial, averaged linearly; nmse_db = 10 log10(mean nmse)",
    "ci95: normal-approximation 95% half-widths; binomial over trials*N (activity) and trials*K (delay)",
    "runtime_s: wall clock around the solver call only (MAMP includes its spectral setup)",
    "diverged/aborted solves are scored as all-miss: no detections and H_hat = 0",
    "amp: canonical AMP with the spike-and-slab MMSE denoiser and common-sparsity prior update",
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

double AggregateRow::nmse_db() const { return 10.0 * std::log10(nmse); }

std::uint64_t trial_seed(std::uint64_t master, int k, int trial) {
    return mix_seed(mix_seed(master, static_cast<std::uint64_t>(k)), static_cast<std::uint64_t>(trial));
}

std::vector<TrialRecord> run_trial(const ExperimentPlan& plan, const Scenario& scenario, int k, int trial,
                                   std::uint64_t seed) {
    const SystemConfig& cfg = scenario.cfg;
    const Prior prior = Prior::uniform(scenario.truth.beta, cfg.activity_prob(), cfg.max_delay);
    const Problem problem{scenario.rx.Y, scenario.pilots, prior, scenario.rx.noise_var_eff};
    SolverOptions options;
    options.stop = plan.stop;

    std::vector<TrialRecord> out;
    out.reserve(plan.algorithms.size());
    for (Algorithm a : plan.algorithms) {
        const auto t0 = std::chrono::steady_clock::now();
        SolverResult res = run_solver(a, problem, options);
        const auto t1 = std::chrono::steady_clock::now();

        TrialRecord rec;
        rec.algorithm = a;
        rec.k = k;
        rec.trial = trial;
        rec.seed = seed;
        if (res.diag.aborted) {
            rec.metrics = all_miss_metrics(scenario.truth);
        } else {
            DetectionResult det = detect(res.omega, plan.theta);
            det.H_hat = std::move(res.H_hat);
            rec.metrics = score_trial(scenario.truth, det);
        }
        rec.metrics.runtime_s = std::chrono::duration<double>(t1 - t0).count();
        rec.metrics.iterations = res.diag.iterations;
        rec.converged = res.diag.converged;
        out.push_back(rec);
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentPlan& plan, const ProgressFn& progress) {
    plan.validate();
    const std::vector<int> ks = plan.sweep();
    const int per_point = plan.n_trials;
    const int total = static_cast<int>(ks.size()) * per_point;
    const std::size_t n_alg = plan.algorithms.size();

    ExpandedPilotMatrix shared_pilots;
    if (plan.fixed_pilots) {
        SystemConfig cfg = plan.base;
        cfg.n_active = ks.front();
        Rng rng(mix_seed(plan.seed, 0x70696c6f7473ULL));
        shared_pilots = generate_pilots(cfg, rng);
        shared_pilots.gram_eigenvalues();  // warm the cache before workers share it
    }

    ExperimentResult result;
    result.trials.resize(static_cast<std::size_t>(total) * n_alg);

    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::mutex progress_mutex;

    auto worker = [&] {
        for (;;) {
            const int job = next.fetch_add(1);
            if (job >= total) return;
            const int k = ks[job / per_point];
            const int trial = job % per_point;
            try {
                SystemConfig cfg = plan.base;
                cfg.n_active = k;
                const std::uint64_t seed = trial_seed(plan.seed, k, trial);
                const Scenario sc = plan.fixed_pilots ? draw_scenario(cfg, seed, shared_pilots)
                                                      : draw_scenario(cfg, seed);
                auto recs = run_trial(plan, sc, k, trial, seed);
                for (std::size_t a = 0; a < n_alg; ++a) result.trials[job * n_alg + a] = recs[a];
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(total);
                return;
            }
            const int d = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(d, total);
            }
        }
    };

    const int n_threads = std::min(plan.threads, total);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);

    result.summary = aggregate(plan, result.trials);
    return result;
}

std::vector<AggregateRow> aggregate(const ExperimentPlan& plan, const std::vector<TrialRecord>& trials) {
    std::vector<AggregateRow> rows;
    for (int k : plan.sweep()) {
        for (Algorithm a : plan.algorithms) {
            AggregateRow row;
            row.algorithm = std::string(to_string(a));
            row.k = k;
            double act = 0, del = 0, nmse = 0, nmse2 = 0, rt = 0, it = 0;
            for (const TrialRecord& t : trials) {
                if (t.k != k || t.algorithm != a) continue;
                ++row.trials;
                if (t.metrics.diverged) ++row.divergences;
                act += t.metrics.activity_error_prob;
                del += t.metrics.delay_error_prob;
                nmse += t.metrics.nmse;
                nmse2 += t.metrics.nmse * t.metrics.nmse;
                rt += t.metrics.runtime_s;
                it += t.metrics.iterations;
            }
            if (row.trials == 0) continue;
            const double cnt = row.trials;
            row.activity_error_prob = act / cnt;
            row.delay_error_prob = del / cnt;
            row.nmse = nmse / cnt;
            row.runtime_s = rt / cnt;
            row.iterations = it / cnt;

            const double n_act = cnt * plan.base.n_users;
            row.activity_ci95 =
                kZ95 * std::sqrt(row.activity_error_prob * (1.0 - row.activity_error_prob) / n_act);
            const double n_del = cnt * k;
            row.delay_ci95 =
                k > 0 ? kZ95 * std::sqrt(row.delay_error_prob * (1.0 - row.delay_error_prob) / n_del) : 0.0;
            const double var = row.trials > 1 ? std::max(0.0, (nmse2 - cnt * row.nmse * row.nmse) / (cnt - 1.0)) : 0.0;
            row.nmse_ci95 = kZ95 * std::sqrt(var / cnt);
            rows.push_back(row);
        }
    }
    return rows;
}

void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& trials) {
    os << "algorithm,k,trial,seed,activity_error_prob,delay_error_prob,nmse,nmse_db,iterations,converged,diverged,"
          "runtime_s\n";
    for (const TrialRecord& t : trials) {
        os << to_string(t.algorithm) << ',' << t.k << ',' << t.trial << ',' << t.seed << ','
           << fmt(t.metrics.activity_error_prob) << ',' << fmt(t.metrics.delay_error_prob) << ','
           << fmt(t.metrics.nmse) << ',' << std::fixed << std::setprecision(2) << t.metrics.nmse_db()
           << std::defaultfloat << ',' << t.metrics.iterations << ',' << (t.converged ? 1 : 0) << ','
           << (t.metrics.diverged ? 1 : 0) << ',' << fmt(t.metrics.runtime_s) << '\n';
    }
}

void write_summary_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("write_summary_csv: no aggregate rows");
    for (const char* def : kMetricDefinitions) os << "# " << def << '\n';
    os << "algorithm,k,trials,divergences,activity_error_prob,activity_ci95,delay_error_prob,delay_ci95,nmse,"
          "nmse_ci95,nmse_db,runtime_s,iterations\n";
    for (const AggregateRow& r : rows) {
        os << r.algorithm << ',' << r.k << ',' << r.trials << ',' << r.divergences << ','
           << fmt(r.activity_error_prob) << ',' << fmt(r.activity_ci95) << ',' << fmt(r.delay_error_prob) << ','
           << fmt(r.delay_ci95) << ',' << fmt(r.nmse) << ',' << fmt(r.nmse_ci95) << ',' << std::fixed
           << std::setprecision(2) << r.nmse_db() << std::defaultfloat << ',' << fmt(r.runtime_s) << ','
           << fmt(r.iterations) << '\n';
    }
}

std::vector<AggregateRow> read_summary_csv(std::istream& is) {
    std::vector<AggregateRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto c = split_csv(line);
        if (c.size() != 13) throw std::runtime_error("summary row has " + std::to_string(c.size()) + " columns");
        AggregateRow r;
        r.algorithm = c[0];
        r.k = std::stoi(c[1]);
        r.trials = std::stoi(c[2]);
        r.divergences = std::stoi(c[3]);
        r.activity_error_prob = std::stod(c[4]);
        r.activity_ci95 = std::stod(c[5]);
        r.delay_error_prob = std::stod(c[6]);
        r.delay_ci95 = std::stod(c[7]);
        r.nmse = std::stod(c[8]);
        r.nmse_ci95 = std::stod(c[9]);
        // c[10] is the rounded dB view of nmse.
        r.runtime_s = std::stod(c[11]);
        r.iterations = std::stod(c[12]);
        rows.push_back(r);
    }
    return rows;
}

std::string format_summary_table(const std::vector<AggregateRow>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(6) << "alg" << std::right << std::setw(6) << "K" << std::setw(8) << "trials"
       << std::setw(6) << "div" << std::setw(14) << "P_act" << std::setw(14) << "P_delay" << std::setw(11)
       << "NMSE(dB)" << std::setw(12) << "runtime(s)" << std::setw(8) << "iters" << '\n';
    for (const AggregateRow& r : rows) {
        os << std::left << std::setw(6) << r.algorithm << std::right << std::setw(6) << r.k << std::setw(8)
           << r.trials << std::setw(6) << r.divergences << std::setw(14) << std::scientific << std::setprecision(3)
           << r.activity_error_prob << std::setw(14) << r.delay_error_prob << std::fixed << std::setprecision(2)
           << std::setw(11) << r.nmse_db() << std::setw(12) << std::setprecision(4) << r.runtime_s
           << std::setw(8) << std::setprecision(1) << r.iterations << '\n';
    }
    return os.str();
}

void write_meta(std::ostream& os, const ExperimentPlan& plan) {
    os << "version: asyncra " << version_string() << "\n\n";
    os << "[config]\n" << describe_plan(plan) << "\n";
    os << "[derived]\n"
       << "observation_len = " << plan.base.observation_len() << "\n"
       << "n_columns = " << plan.base.n_columns() << "\n"
       << "noise_power_dbm = " << fmt(plan.base.noise_power_dbm()) << "\n"
       << "pilots = " << (plan.fixed_pilots ? "fixed per plan" : "redrawn per trial") << "\n\n";
    os << "[metrics]\n";
    for (const char* def : kMetricDefinitions) os << def << "\n";
}

void write_outputs(const ExperimentPlan& plan, const ExperimentResult& result) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(plan.out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + plan.out_dir + ": " + ec.message());

    auto open = [&](const char* name) {
        const fs::path p = fs::path(plan.out_dir) / name;
        std::ofstream f(p);
        if (!f) throw std::runtime_error("cannot write " + p.string());
        return f;
    };
    {
        auto f = open("trials.csv");
        write_trials_csv(f, result.trials);
        if (!f) throw std::runtime_error("write failed: trials.csv");
    }
    {
        auto f = open("summary.csv");
        write_summary_csv(f, result.summary);
        if (!f) throw std::runtime_error("write failed: summary.csv");
    }
    {
        auto f = open("meta.txt");
        write_meta(f, plan);
        if (!f) throw std::runtime_error("write failed: meta.txt");
    }
}

}  // namespace asyncra

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "asyncra/harness.hpp"

namespace asyncra {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw std::invalid_argument("invalid value for '" + key + "': '" + value + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* begin = value.data();
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
    if (value == "0" || value == "false" || value == "no" || value == "off") return false;
    bad_value(key, value);
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

std::vector<int> ExperimentPlan::sweep() const {
    return k_values.empty() ? std::vector<int>{base.n_active} : k_values;
}

void ExperimentPlan::validate() const {
    // A sweep replaces n_active, so the base value only matters without one.
    SystemConfig checked = base;
    if (!k_values.empty()) checked.n_active = 0;
    checked.validate();
    stop.validate();
    if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
    if (algorithms.empty()) throw std::invalid_argument("at least one algorithm is required");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
    for (int k : sweep())
        if (k < 0 || k > base.n_users) throw std::invalid_argument("k values must lie in [0, n_users]");
}

void apply_setting(ExperimentPlan& plan, const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    SystemConfig& c = plan.base;
    if (key == "n_users") c.n_users = parse_number<int>(key, value);
    else if (key == "n_antennas") c.n_antennas = parse_number<int>(key, value);
    else if (key == "pilot_len") c.pilot_len = parse_number<int>(key, value);
    else if (key == "max_delay") c.max_delay = parse_number<int>(key, value);
    else if (key == "n_active") c.n_active = parse_number<int>(key, value);
    else if (key == "tx_power_dbm") c.tx_power_dbm = parse_number<double>(key, value);
    else if (key == "noise_psd_dbm_hz") c.noise_psd_dbm_hz = parse_number<double>(key, value);
    else if (key == "bandwidth_hz") c.bandwidth_hz = parse_number<double>(key, value);
    else if (key == "cell_radius_min_km") c.cell_radius_min_km = parse_number<double>(key, value);
    else if (key == "cell_radius_max_km") c.cell_radius_max_km = parse_number<double>(key, value);
    else if (key == "pathloss_intercept_db") c.pathloss_intercept_db = parse_number<double>(key, value);
    else if (key == "pathloss_slope_db") c.pathloss_slope_db = parse_number<double>(key, value);
    else if (key == "seed" || key == "rng_seed") {
        plan.seed = parse_number<std::uint64_t>(key, value);
        c.rng_seed = plan.seed;
    } else if (key == "k_values") {
        plan.k_values.clear();
        for (const auto& item : split_list(value)) plan.k_values.push_back(parse_number<int>(key, item));
    } else if (key == "algorithms") {
        plan.algorithms.clear();
        for (const auto& item : split_list(value)) {
            const auto a = parse_algorithm(item);
            if (!a) bad_value(key, item);
            plan.algorithms.push_back(*a);
        }
    } else if (key == "n_trials") plan.n_trials = parse_number<int>(key, value);
    else if (key == "out_dir") plan.out_dir = value;
    else if (key == "threads") plan.threads = parse_number<int>(key, value);
    else if (key == "fixed_pilots") plan.fixed_pilots = parse_bool(key, value);
    else if (key == "max_iters") plan.stop.max_iters = parse_number<int>(key, value);
    else if (key == "tol") plan.stop.tol = parse_number<double>(key, value);
    else if (key == "theta") plan.theta = parse_number<double>(key, value);
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

void apply_override(ExperimentPlan& plan, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override must look like key=value: " + assignment);
    apply_setting(plan, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

ExperimentPlan parse_plan(std::istream& is) {
    ExperimentPlan plan;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
        try {
            apply_setting(plan, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return plan;
}

ExperimentPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    return parse_plan(in);
}

std::string describe_plan(const ExperimentPlan& plan) {
    const SystemConfig& c = plan.base;
    std::ostringstream os;
    os << "n_users = " << c.n_users << "\n"
       << "n_antennas = " << c.n_antennas << "\n"
       << "pilot_len = " << c.pilot_len << "\n"
       << "max_delay = " << c.max_delay << "\n"
       << "n_active = " << c.n_active << "\n"
       << "tx_power_dbm = " << fmt(c.tx_power_dbm) << "\n"
       << "noise_psd_dbm_hz = " << fmt(c.noise_psd_dbm_hz) << "\n"
       << "bandwidth_hz = " << fmt(c.bandwidth_hz) << "\n"
       << "cell_radius_min_km = " << fmt(c.cell_radius_min_km) << "\n"
       << "cell_radius_max_km = " << fmt(c.cell_radius_max_km) << "\n"
       << "pathloss_intercept_db = " << fmt(c.pathloss_intercept_db) << "\n"
       << "pathloss_slope_db = " << fmt(c.pathloss_slope_db) << "\n"
       << "seed = " << plan.seed << "\n";
    os << "k_values = ";
    const auto ks = plan.sweep();
    for (std::size_t i = 0; i < ks.size(); ++i) os << (i ? "," : "") << ks[i];
    os << "\nalgorithms = ";
    for (std::size_t i = 0; i < plan.algorithms.size(); ++i) os << (i ? "," : "") << to_string(plan.algorithms[i]);
    os << "\nn_trials = " << plan.n_trials << "\n"
       << "out_dir = " << plan.out_dir << "\n"
       << "threads = " << plan.threads << "\n"
       << "fixed_pilots = " << (plan.fixed_pilots ? "true" : "false") << "\n"
       << "max_iters = " << plan.stop.max_iters << "\n"
       << "tol = " << fmt(plan.stop.tol) << "\n"
       << "theta = " << fmt(plan.theta) << "\n";
    return os.str();
}

}  // namespace asyncra

// Command-line front-end: reproducible experiment runner for the Barker
// two-coin MCMC library. Subcommands: toy, sandwich, wf-sim, wf-infer, report.
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "barker/chain.hpp"
#include "barker/diffusion.hpp"
#include "barker/rng.hpp"
#include "barker/toy_mixture.hpp"
#include "barker/wright_fisher.hpp"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// Config file: either a flat JSON object or key=value lines ('#' comments).
// Values become defaults; flags given on the command line win.
std::vector<std::pair<std::string, std::string>> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::vector<std::pair<std::string, std::string>> kv;
    const std::string body = trim(text);
    if (!body.empty() && body.front() == '{') {
        json j;
        try {
            j = json::parse(body);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config: invalid JSON: ") + e.what());
        }
        if (!j.is_object()) throw ConfigError("config: JSON root must be an object");
        for (const auto& [k, v] : j.items())
            kv.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
    } else {
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) {
            const std::string t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: expected key=value, got '" + t + "'");
            kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        }
    }
    return kv;
}

// Splice config-file entries into argv as --key=value tokens, skipping keys
// the user already passed so explicit flags always override the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    const auto present = [&](const std::string& key) {
        const std::string flag = "--" + key;
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    std::vector<std::string> out = args;
    for (const auto& [k, v] : load_config_file(config_path)) {
        if (k == "config") throw ConfigError("config: files may not nest 'config'");
        if (!present(k)) out.push_back("--" + k + "=" + v);
    }
    return out;
}

// Output directory precedence: --out-dir flag, then BARKER_OUT_DIR, then cwd.
fs::path resolve_out_dir(const std::string& flag_value) {
    std::string dir = flag_value;
    if (dir.empty()) {
        if (const char* env = std::getenv("BARKER_OUT_DIR")) dir = env;
    }
    if (dir.empty()) dir = ".";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("out-dir: cannot create directory '" + dir + "'");
    return dir;
}

double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const double idx = p * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double w = idx - static_cast<double>(lo);
    return (1.0 - w) * xs[lo] + w * xs[hi];
}

struct Moments {
    double mean = 0.0, sd = 0.0, ci_lo = 0.0, ci_hi = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    if (xs.empty()) return m;
    double s1 = 0.0;
    for (double x : xs) s1 += x;
    m.mean = s1 / static_cast<double>(xs.size());
    double s2 = 0.0;
    for (double x : xs) s2 += (x - m.mean) * (x - m.mean);
    m.sd = xs.size() > 1 ? std::sqrt(s2 / static_cast<double>(xs.size() - 1)) : 0.0;
    m.ci_lo = quantile(xs, 0.025);
    m.ci_hi = quantile(xs, 0.975);
    return m;
}

json moments_json(const Moments& m) {
    return json{{"mean", m.mean}, {"sd", m.sd}, {"ci_lower", m.ci_lo}, {"ci_upper", m.ci_hi}};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << j.dump(2) << '\n';
}

// Generic plain-text rendering of a summary object: one aligned line per
// scalar, nested objects as dotted keys. Deterministic (JSON keys sorted).
void render_report(const json& j, const std::string& prefix, std::ostream& out) {
    for (const auto& [k, v] : j.items()) {
        const std::string key = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object())
            render_report(v, key, out);
        else
            out << key << " = " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
}

void emit_report(const fs::path& dir, const std::string& stem, const json& summary) {
    write_json(dir / (stem + "_summary.json"), summary);
    std::ofstream txt(dir / (stem + "_report.txt"));
    if (!txt) throw std::runtime_error("cannot open report file");
    txt.precision(17);
    render_report(summary, "", txt);
}

// Safe batch-means ESS: 0 when the trace is too short or degenerate.
template <class State>
double safe_ess(const barker::ChainTrace<State>& trace, const std::function<double(const State&)>& f) {
    try {
        return barker::chain_stats<State>(trace, f, 50).ess;
    } catch (const std::exception&) {
        return 0.0;
    }
}

// ---------------------------------------------------------------- toy -----

int cmd_toy(std::uint64_t seed, long iterations, long burn_in, long halfwidth, long init,
            const std::string& out_dir) {
    if (iterations < 0) throw ConfigError("iterations: must be non-negative");
    if (burn_in < 0) throw ConfigError("burn-in: must be non-negative");
    if (halfwidth < 1) throw ConfigError("halfwidth: must be positive");
    const fs::path dir = resolve_out_dir(out_dir);

    barker::toy::ToyConfig cfg;
    cfg.iterations = static_cast<std::size_t>(iterations);
    cfg.burn_in = static_cast<std::size_t>(burn_in);
    cfg.rw_halfwidth = halfwidth;
    cfg.init = init;
    cfg.seed = seed;
    const auto res = barker::toy::run_toy(cfg);

    barker::write_trace_csv<long>(
        (dir / "toy_trace.csv").string(), res.trace, {"theta"},
        [](const long& th) { return std::vector<double>{static_cast<double>(th)}; });

    std::vector<double> post;
    for (std::size_t i = std::min<std::size_t>(cfg.burn_in, res.trace.states.size() - 1);
         i < res.trace.states.size(); ++i)
        post.push_back(static_cast<double>(res.trace.states[i]));
    const Moments m = moments(post);
    json summary = {
        {"subcommand", "toy"},
        {"seed", seed},
        {"iterations", iterations},
        {"burn_in", burn_in},
        {"trace_length", res.trace.states.size()},
        {"theta", moments_json(m)},
        {"mean", res.summary.mean},
        {"variance", res.summary.variance},
        {"acceptance_rate", res.summary.acceptance_rate},
        {"mean_loops", res.summary.mean_loops},
        {"tv_distance", res.summary.tv_distance},
        {"ess", safe_ess<long>(res.trace, [](const long& th) { return static_cast<double>(th); })},
    };
    emit_report(dir, "toy", summary);
    std::cout << "toy: wrote " << (dir / "toy_trace.csv").string() << '\n';
    return 0;
}

// ----------------------------------------------------------- sandwich -----

int cmd_sandwich(std::uint64_t seed, long iterations, long burn_in, long halfwidth, long init,
                 const std::string& out_dir) {
    if (iterations < 200) throw ConfigError("iterations: need at least 200 for batch means");
    const fs::path dir = resolve_out_dir(out_dir);

    barker::toy::ToyConfig cfg;
    cfg.iterations = static_cast<std::size_t>(iterations);
    cfg.burn_in = static_cast<std::size_t>(burn_in);
    cfg.rw_halfwidth = halfwidth;
    cfg.init = init;
    cfg.seed = seed;
    const auto barker_res = barker::toy::run_toy(cfg);

    const auto kernel = barker::toy::toy_kernel(halfwidth);
    const std::function<double(const long&)> log_target = [](const long& th) {
        return barker::toy::nb_log_pmf(th);
    };
    auto mh = [&](const long& cur, barker::Rng& rng) -> std::pair<long, barker::StepMeta> {
        bool acc = false;
        const long next = barker::mh_step<long>(cur, kernel, log_target, rng, &acc);
        return {next, barker::StepMeta{acc, 0, 0.0}};
    };
    const auto mh_trace = barker::run_chain<long>(mh, init, static_cast<std::size_t>(iterations), seed + 1);

    const auto trim = [&](const barker::ChainTrace<long>& t) {
        barker::ChainTrace<long> out;
        const std::size_t from = std::min<std::size_t>(static_cast<std::size_t>(burn_in), t.states.size() - 1);
        out.states.assign(t.states.begin() + static_cast<long>(from), t.states.end());
        out.meta.assign(t.meta.begin() + static_cast<long>(from), t.meta.end());
        return out;
    };
    const std::function<double(const long&)> ident = [](const long& th) { return static_cast<double>(th); };
    const auto sb = barker::chain_stats<long>(trim(barker_res.trace), ident, 50);
    const auto sm = barker::chain_stats<long>(trim(mh_trace), ident, 50);

    const double se = sb.batch_means_standard_error + sm.batch_means_standard_error;
    const double sigma2_pi = sb.variance;
    const double lower = sm.batch_means_asymptotic_variance - 3.0 * se;
    const double upper = 2.0 * sm.batch_means_asymptotic_variance + sigma2_pi + 3.0 * se;
    const double sigma2_b = sb.batch_means_asymptotic_variance;

    barker::write_trace_csv<long>(
        (dir / "sandwich_barker_trace.csv").string(), barker_res.trace, {"theta"},
        [](const long& th) { return std::vector<double>{static_cast<double>(th)}; });
    barker::write_trace_csv<long>(
        (dir / "sandwich_mh_trace.csv").string(), mh_trace, {"theta"},
        [](const long& th) { return std::vector<double>{static_cast<double>(th)}; });

    json summary = {
        {"subcommand", "sandwich"},
        {"seed", seed},
        {"iterations", iterations},
        {"burn_in", burn_in},
        {"sigma2_barker", sigma2_b},
        {"sigma2_mh", sm.batch_means_asymptotic_variance},
        {"sigma2_pi", sigma2_pi},
        {"se_combined", se},
        {"bound_lower", lower},
        {"bound_upper", upper},
        {"sandwich_holds", lower <= sigma2_b && sigma2_b <= upper},
        {"barker", {{"acceptance_rate", barker_res.trace.acceptance_rate()},
                    {"mean_loops", barker_res.trace.mean_loops()},
                    {"ess", sb.ess}}},
        {"mh", {{"acceptance_rate", mh_trace.acceptance_rate()}, {"ess", sm.ess}}},
    };
    emit_report(dir, "sandwich", summary);
    std::cout << "sandwich: sigma2_barker=" << sigma2_b << " in [" << lower << ", " << upper
              << "]: " << (lower <= sigma2_b && sigma2_b <= upper ? "yes" : "no") << '\n';
    return 0;
}

// ------------------------------------------------------------- wf-sim -----

int cmd_wf_sim(std::uint64_t seed, double gamma1, double gamma2, double t_end, long n_obs,
               double step, const std::string& out_dir, const std::string& out_file) {
    const barker::wf::ThetaState th{gamma1, gamma2};
    if (!barker::wf::wf_theta_domain(th))
        throw ConfigError("gamma1/gamma2: need gamma1 > 0 and gamma2 in (0,1)");
    if (n_obs < 2) throw ConfigError("n-obs: need at least two observations");
    if (!(t_end > 0.0)) throw ConfigError("t-end: must be positive");
    if (!(step > 0.0)) throw ConfigError("step: must be positive");
    const fs::path dir = resolve_out_dir(out_dir);

    std::vector<double> times(static_cast<std::size_t>(n_obs));
    for (long i = 0; i < n_obs; ++i)
        times[static_cast<std::size_t>(i)] = t_end * static_cast<double>(i) / static_cast<double>(n_obs - 1);
    barker::Rng rng(seed);
    const std::vector<double> values = barker::wf::simulate_wf_data(th, times, step, rng);

    const fs::path csv = dir / out_file;
    std::ofstream out(csv);
    if (!out) throw std::runtime_error("cannot open " + csv.string());
    out.precision(17);
    out << "time,value\n";
    for (std::size_t i = 0; i < times.size(); ++i) out << times[i] << ',' << values[i] << '\n';

    json summary = {{"subcommand", "wf-sim"}, {"seed", seed},   {"gamma1", gamma1},
                    {"gamma2", gamma2},       {"t_end", t_end}, {"n_obs", n_obs},
                    {"step", step},           {"file", csv.filename().string()}};
    emit_report(dir, "wf_sim", summary);
    std::cout << "wf-sim: wrote " << csv.string() << '\n';
    return 0;
}

// ----------------------------------------------------------- wf-infer -----

std::pair<std::vector<double>, std::vector<double>> read_observations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("obs: cannot open file '" + path + "'");
    std::vector<double> times, values;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (line_no == 1 && t.rfind("time", 0) == 0) continue;  // header
        const auto comma = t.find(',');
        if (comma == std::string::npos)
            throw ConfigError("obs: line " + std::to_string(line_no) + " is not 'time,value'");
        try {
            times.push_back(std::stod(t.substr(0, comma)));
            values.push_back(std::stod(t.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ConfigError("obs: line " + std::to_string(line_no) + " is not numeric");
        }
    }
    if (times.size() < 2) throw ConfigError("obs: need at least two observations");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] < times[i + 1]))
            throw ConfigError("obs: times must be strictly increasing (row " + std::to_string(i + 2) + ")");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!(values[i] > 0.0 && values[i] < 1.0))
            throw ConfigError("obs: values must lie in (0,1) (row " + std::to_string(i + 1) + ")");
    return {times, values};
}

int cmd_wf_infer(std::uint64_t seed, const std::string& obs_path, long iterations, long burn_in,
                 int k, double delta, double half_g1, double half_g2, double init_g1,
                 double init_g2, bool parallel, long loop_cap, bool audit,
                 const std::string& out_dir) {
    if (iterations < 0) throw ConfigError("iterations: must be non-negative");
    if (burn_in < 0) throw ConfigError("burn-in: must be non-negative");
    if (k < 1) throw ConfigError("k: need at least one path sweep per iteration");
    if (!(delta > 0.0)) throw ConfigError("delta: must be positive");
    if (!(half_g1 > 0.0) || !(half_g2 > 0.0))
        throw ConfigError("half-g1/half-g2: proposal half-widths must be positive");
    if (!barker::wf::wf_theta_domain({init_g1, init_g2}))
        throw ConfigError("init-g1/init-g2: initial point outside the parameter domain");
    const fs::path dir = resolve_out_dir(out_dir);

    const auto [times, values] = read_observations(obs_path);
    barker::diffusion::GibbsConfig<barker::wf::ThetaState> cfg;
    cfg.times = times;
    cfg.values = values;
    cfg.init = {init_g1, init_g2};
    cfg.kernel = barker::wf::wf_box_kernel(half_g1, half_g2);
    cfg.iterations = iterations;
    cfg.sweeps_per_iteration = k;
    cfg.seed = seed;
    cfg.parallel = parallel;
    cfg.delta = delta;
    if (loop_cap > 0) cfg.loop_cap = static_cast<std::uint64_t>(loop_cap);

    const auto model = barker::wf::wf_model();
    const auto res = barker::diffusion::gibbs_run(cfg, model);

    barker::ChainTrace<barker::wf::ThetaState> trace;
    trace.states = res.theta_trace;
    trace.meta.reserve(res.param_meta.size());
    for (const auto& m : res.param_meta) trace.meta.push_back({m.accepted, m.loops, 0.0});
    barker::write_trace_csv<barker::wf::ThetaState>(
        (dir / "wf_trace.csv").string(), trace, {"gamma1", "gamma2"},
        [](const barker::wf::ThetaState& th) { return std::vector<double>{th.gamma1, th.gamma2}; });

    std::vector<double> g1s, g2s;
    const std::size_t from = std::min<std::size_t>(static_cast<std::size_t>(burn_in), trace.states.size() - 1);
    for (std::size_t i = from; i < trace.states.size(); ++i) {
        g1s.push_back(trace.states[i].gamma1);
        g2s.push_back(trace.states[i].gamma2);
    }
    const Moments m1 = moments(g1s), m2 = moments(g2s);
    double corr = 0.0;
    if (m1.sd > 0.0 && m2.sd > 0.0) {
        double c = 0.0;
        for (std::size_t i = 0; i < g1s.size(); ++i) c += (g1s[i] - m1.mean) * (g2s[i] - m2.mean);
        corr = c / (static_cast<double>(g1s.size() - 1) * m1.sd * m2.sd);
    }
    json summary = {
        {"subcommand", "wf-infer"},
        {"seed", seed},
        {"iterations", iterations},
        {"burn_in", burn_in},
        {"sweeps_per_iteration", k},
        {"parallel", parallel},
        {"n_observations", times.size()},
        {"gamma1", moments_json(m1)},
        {"gamma2", moments_json(m2)},
        {"correlation", corr},
        {"param_acceptance_rate", res.param_acceptance_rate},
        {"param_mean_loops", res.param_mean_loops},
        {"path_acceptance_rate", res.path_acceptance_rate},
        {"path_mean_loops", res.path_mean_loops},
        {"ess_gamma1",
         safe_ess<barker::wf::ThetaState>(trace, [](const barker::wf::ThetaState& t) { return t.gamma1; })},
        {"ess_gamma2",
         safe_ess<barker::wf::ThetaState>(trace, [](const barker::wf::ThetaState& t) { return t.gamma2; })},
    };
    if (audit) {
        std::uint64_t max_loops = 0;
        for (const auto& m : res.param_meta) max_loops = std::max(max_loops, m.loops);
        summary["audit"] = {{"delta", delta},
                            {"half_g1", half_g1},
                            {"half_g2", half_g2},
                            {"init_g1", init_g1},
                            {"init_g2", init_g2},
                            {"loop_cap", loop_cap},
                            {"max_param_loops", max_loops}};
    }
    emit_report(dir, "wf", summary);
    std::cout << "wf-infer: gamma1 mean " << m1.mean << " [" << m1.ci_lo << ", " << m1.ci_hi
              << "], gamma2 mean " << m2.mean << " [" << m2.ci_lo << ", " << m2.ci_hi << "]\n";
    return 0;
}

// ------------------------------------------------------------- report -----

int cmd_report(const std::string& summary_path, const std::string& out_dir) {
    std::ifstream in(summary_path);
    if (!in) throw ConfigError("summary: cannot open file '" + summary_path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("summary: invalid JSON: ") + e.what());
    }
    render_report(j, "", std::cout);
    if (!out_dir.empty()) {
        const fs::path dir = resolve_out_dir(out_dir);
        std::ofstream txt(dir / "report.txt");
        if (!txt) throw std::runtime_error("cannot open report file");
        render_report(j, "", txt);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> raw(argv + 1, argv + argc);
    CLI::App app{"Barker two-coin MCMC experiments"};
    app.require_subcommand(1);

    // Shared per-subcommand state (CLI11 binds by reference).
    std::uint64_t seed = 0;
    std::string out_dir, config_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "PRNG seed (required; no entropy default)")->required();
        sub->add_option("--out-dir", out_dir, "output directory (or env BARKER_OUT_DIR)");
        sub->add_option("--config", config_path, "config file: key=value lines or a JSON object");
        return sub;
    };

    // toy / sandwich
    long halfwidth = 10, init_theta = 20;
    long toy_iterations = 200000, toy_burn_in = 1000;
    auto* toy = add_common(app.add_subcommand("toy", "Poisson-mixture toy posterior"));
    toy->add_option("--iterations", toy_iterations, "MCMC iterations");
    toy->add_option("--burn-in", toy_burn_in, "iterations discarded from summaries");
    toy->add_option("--halfwidth", halfwidth, "random-walk proposal half-width");
    toy->add_option("--init", init_theta, "initial state");

    long sw_iterations = 1000000, sw_burn_in = 1000;
    auto* sandwich =
        add_common(app.add_subcommand("sandwich", "Barker vs MH asymptotic-variance sandwich"));
    sandwich->add_option("--iterations", sw_iterations, "iterations per kernel");
    sandwich->add_option("--burn-in", sw_burn_in, "iterations discarded before batch means");
    sandwich->add_option("--halfwidth", halfwidth, "random-walk proposal half-width");
    sandwich->add_option("--init", init_theta, "initial state");

    // wf-sim
    double gamma1 = 8.0, gamma2 = 0.5, t_end = 200.0, sim_step = 1e-3;
    long n_obs = 201;
    std::string out_file = "wf_obs.csv";
    auto* wf_sim = add_common(app.add_subcommand("wf-sim", "simulate Wright-Fisher data"));
    wf_sim->add_option("--gamma1", gamma1, "drift size theta1 + theta2");
    wf_sim->add_option("--gamma2", gamma2, "reversible mean theta1/(theta1+theta2)");
    wf_sim->add_option("--t-end", t_end, "final observation time");
    wf_sim->add_option("--n-obs", n_obs, "number of equally spaced observations");
    wf_sim->add_option("--step", sim_step, "Euler discretisation step");
    wf_sim->add_option("--out-file", out_file, "observation CSV filename");

    // wf-infer
    std::string obs_path;
    int k_sweeps = 2;
    double delta = 1.0, half_g1 = 0.65, half_g2 = 0.01, init_g1 = 1.0, init_g2 = 0.5;
    bool parallel = false, audit = false;
    long loop_cap = 0, wf_iterations = 5000, wf_burn_in = 2000;
    auto* wf_infer = add_common(app.add_subcommand("wf-infer", "exact Wright-Fisher inference"));
    wf_infer->add_option("--obs", obs_path, "observation CSV (time,value)")->required();
    wf_infer->add_option("--iterations", wf_iterations, "Gibbs iterations");
    wf_infer->add_option("--burn-in", wf_burn_in, "iterations discarded from summaries");
    wf_infer->add_option("--k", k_sweeps, "path sweeps per iteration");
    wf_infer->add_option("--delta", delta, "layer width unit");
    wf_infer->add_option("--half-g1", half_g1, "gamma1 proposal half-width");
    wf_infer->add_option("--half-g2", half_g2, "gamma2 proposal half-width");
    wf_infer->add_option("--init-g1", init_g1, "initial gamma1");
    wf_infer->add_option("--init-g2", init_g2, "initial gamma2");
    wf_infer->add_flag("--parallel", parallel, "run path sweeps concurrently");
    wf_infer->add_option("--loop-cap", loop_cap, "abort two-coin loops past this count (0 = off)");
    wf_infer->add_flag("--audit", audit, "record extra run diagnostics in the summary");

    // report
    std::string summary_path;
    auto* report = app.add_subcommand("report", "re-render a summary JSON as plain text");
    report->add_option("--summary", summary_path, "summary JSON file")->required();
    report->add_option("--out-dir", out_dir, "also write report.txt here");

    try {
        const std::vector<std::string> expanded = expand_config(raw);
        // CLI11 parses reversed argv vectors.
        std::vector<std::string> rev(expanded.rbegin(), expanded.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (toy->parsed())
            return cmd_toy(seed, toy_iterations, toy_burn_in, halfwidth, init_theta, out_dir);
        if (sandwich->parsed())
            return cmd_sandwich(seed, sw_iterations, sw_burn_in, halfwidth, init_theta, out_dir);
        if (wf_sim->parsed())
            return cmd_wf_sim(seed, gamma1, gamma2, t_end, n_obs, sim_step, out_dir, out_file);
        if (wf_infer->parsed())
            return cmd_wf_infer(seed, obs_path, wf_iterations, wf_burn_in, k_sweeps, delta, half_g1,
                                half_g2, init_g1, init_g2, parallel, loop_cap, audit, out_dir);
        if (report->parsed()) return cmd_report(summary_path, out_dir);
        std::cerr << "config error: no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 1;
    }
}

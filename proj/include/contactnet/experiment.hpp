#pragma once

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "contactnet/degrees.hpp"
#include "contactnet/dynamics.hpp"
#include "contactnet/errors.hpp"
#include "contactnet/estimators.hpp"
#include "contactnet/exact.hpp"
#include "contactnet/graph.hpp"
#include "contactnet/parallel.hpp"
#include "contactnet/rng.hpp"

namespace contactnet {

inline constexpr const char* kVersion = "0.1.0";

/// One validated experiment invocation. Fields map 1:1 to kebab-case flags
/// and JSON config keys; the manifest echoes them under the same names.
struct ExperimentConfig {
    std::string command;
    double alpha = 3.5;
    int k_min = 3;
    int k_max = 1000000;
    int n = 10000;
    std::vector<int> n_grid;           // diameter: grid of graph sizes
    double lambda = 1.0;
    std::vector<double> lambda_grid;   // rho-scan / duality / oracle
    std::vector<double> t_grid;        // duality / oracle observation times
    double epsilon = 0.3;              // star degree exponent
    double epsilon_slack = 0.5;        // diameter bound slack
    double horizon = 0.0;              // 0 = per-command default
    double sample_dt = 1.0;
    int reps = 100;
    int sample_size = 1000;            // dual samples per lambda (rho-scan)
    int star_k = 400;                  // --k
    int star_m0 = 0;                   // --m0
    int star_center0 = 1;              // --center0
    std::vector<int> star_levels;      // --levels: tracked leaf counts
    int max_retries = 1000;
    int num_graphs = 10;               // --graphs: duality / oracle instances
    std::uint64_t master_seed = 0;
    int workers = 1;
    std::string output_path = "out";
    std::string graph_file;            // read the graph instead of sampling it
    std::string input_path;            // fit-beta: rho-scan results.jsonl
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{{"command", c.command},
                       {"alpha", c.alpha},
                       {"k-min", c.k_min},
                       {"k-max", c.k_max},
                       {"n", c.n},
                       {"n-grid", c.n_grid},
                       {"lambda", c.lambda},
                       {"lambda-grid", c.lambda_grid},
                       {"t-grid", c.t_grid},
                       {"epsilon", c.epsilon},
                       {"epsilon-slack", c.epsilon_slack},
                       {"horizon", c.horizon},
                       {"sample-dt", c.sample_dt},
                       {"reps", c.reps},
                       {"sample-size", c.sample_size},
                       {"k", c.star_k},
                       {"m0", c.star_m0},
                       {"center0", c.star_center0},
                       {"levels", c.star_levels},
                       {"max-retries", c.max_retries},
                       {"graphs", c.num_graphs},
                       {"master-seed", c.master_seed},
                       {"workers", c.workers},
                       {"output", c.output_path},
                       {"graph-file", c.graph_file},
                       {"input", c.input_path}};
}

// ---------------------------------------------------------------------------
// Config assembly: per-command defaults, then config file, then flags, then
// the CONTACTNET_SEED environment variable. Later sources win.

namespace detail {

inline const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> cmds = {"gen-graph",    "simulate", "star",
                                                  "rho-scan",     "fit-beta", "diameter",
                                                  "duality-check", "oracle-check"};
    return cmds;
}

inline ExperimentConfig default_config(const std::string& command) {
    ExperimentConfig cfg;
    cfg.command = command;
    if (command == "duality-check" || command == "oracle-check") {
        cfg.n = 6;
        cfg.lambda_grid = {0.3, 1.0};
        cfg.t_grid = {0.5, 2.0};
    }
    if (command == "oracle-check") cfg.reps = 100000;
    if (command == "rho-scan") cfg.lambda_grid = {0.08, 0.12, 0.18, 0.27, 0.40};
    if (command == "simulate") cfg.horizon = 100.0;
    return cfg;
}

template <class T>
T number_from(const nlohmann::json& v, const std::string& key) {
    try {
        if (v.is_string()) {
            const std::string s = v.get<std::string>();
            std::size_t used = 0;
            if constexpr (std::is_same_v<T, double>) {
                const double x = std::stod(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return x;
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                const auto x = std::stoull(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return static_cast<T>(x);
            } else {
                const long long x = std::stoll(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max())
                    throw std::out_of_range(s);
                return static_cast<T>(x);
            }
        }
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw usage_error("--" + key + ": expected a number");
    } catch (const std::invalid_argument&) {
        throw usage_error("--" + key + ": expected a number");
    } catch (const std::out_of_range&) {
        throw usage_error("--" + key + ": value out of range");
    }
}

template <class T>
std::vector<T> list_from(const nlohmann::json& v, const std::string& key) {
    std::vector<T> out;
    if (v.is_array()) {
        for (const auto& e : v) out.push_back(number_from<T>(e, key));
        return out;
    }
    if (v.is_string()) {
        std::stringstream ss(v.get<std::string>());
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(number_from<T>(nlohmann::json(item), key));
        return out;
    }
    throw usage_error("--" + key + ": expected a comma-separated list");
}

inline std::string string_from(const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw usage_error("--" + key + ": expected a string");
    return v.get<std::string>();
}

inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const nlohmann::json& v,
                          bool& seed_given) {
    if (key == "command") cfg.command = string_from(v, key);
    else if (key == "alpha") cfg.alpha = number_from<double>(v, key);
    else if (key == "k-min") cfg.k_min = number_from<int>(v, key);
    else if (key == "k-max") cfg.k_max = number_from<int>(v, key);
    else if (key == "n") cfg.n = number_from<int>(v, key);
    else if (key == "n-grid") cfg.n_grid = list_from<int>(v, key);
    else if (key == "lambda") cfg.lambda = number_from<double>(v, key);
    else if (key == "lambda-grid") cfg.lambda_grid = list_from<double>(v, key);
    else if (key == "t-grid") cfg.t_grid = list_from<double>(v, key);
    else if (key == "epsilon") cfg.epsilon = number_from<double>(v, key);
    else if (key == "epsilon-slack") cfg.epsilon_slack = number_from<double>(v, key);
    else if (key == "horizon") cfg.horizon = number_from<double>(v, key);
    else if (key == "sample-dt") cfg.sample_dt = number_from<double>(v, key);
    else if (key == "reps") cfg.reps = number_from<int>(v, key);
    else if (key == "sample-size") cfg.sample_size = number_from<int>(v, key);
    else if (key == "k") cfg.star_k = number_from<int>(v, key);
    else if (key == "m0") cfg.star_m0 = number_from<int>(v, key);
    else if (key == "center0") cfg.star_center0 = number_from<int>(v, key);
    else if (key == "levels") cfg.star_levels = list_from<int>(v, key);
    else if (key == "max-retries") cfg.max_retries = number_from<int>(v, key);
    else if (key == "graphs") cfg.num_graphs = number_from<int>(v, key);
    else if (key == "master-seed") {
        cfg.master_seed = number_from<std::uint64_t>(v, key);
        seed_given = true;
    } else if (key == "workers") cfg.workers = number_from<int>(v, key);
    else if (key == "output") cfg.output_path = string_from(v, key);
    else if (key == "graph-file") cfg.graph_file = string_from(v, key);
    else if (key == "input") cfg.input_path = string_from(v, key);
    else throw usage_error("--" + key + ": unknown option");
}

inline void validate_config(const ExperimentConfig& cfg) {
    bool known = false;
    for (const auto& c : known_commands()) known = known || c == cfg.command;
    if (!known) throw usage_error("--command: unknown command '" + cfg.command + "'");
    if (!(cfg.alpha > 1)) throw usage_error("--alpha: must be > 1");
    if (cfg.k_min < 1) throw usage_error("--k-min: must be >= 1");
    if (cfg.k_max < cfg.k_min) throw usage_error("--k-max: must be >= k-min");
    if (cfg.n < 1) throw usage_error("--n: must be >= 1");
    if (cfg.lambda < 0) throw usage_error("--lambda: must be >= 0");
    for (double l : cfg.lambda_grid)
        if (!(l > 0)) throw usage_error("--lambda-grid: entries must be > 0");
    for (double t : cfg.t_grid)
        if (!(t > 0)) throw usage_error("--t-grid: entries must be > 0");
    if (!(cfg.epsilon > 0 && cfg.epsilon < 1)) throw usage_error("--epsilon: must lie in (0,1)");
    if (cfg.epsilon_slack < 0) throw usage_error("--epsilon-slack: must be >= 0");
    if (cfg.horizon < 0) throw usage_error("--horizon: must be >= 0");
    if (!(cfg.sample_dt > 0)) throw usage_error("--sample-dt: must be > 0");
    if (cfg.reps < 1) throw usage_error("--reps: must be >= 1");
    if (cfg.sample_size < 1) throw usage_error("--sample-size: must be >= 1");
    if (cfg.star_k < 1) throw usage_error("--k: must be >= 1");
    if (cfg.star_m0 < 0 || cfg.star_m0 > cfg.star_k) throw usage_error("--m0: must lie in [0, k]");
    if (cfg.star_center0 != 0 && cfg.star_center0 != 1) throw usage_error("--center0: must be 0 or 1");
    if (cfg.max_retries < 0) throw usage_error("--max-retries: must be >= 0");
    if (cfg.num_graphs < 1) throw usage_error("--graphs: must be >= 1");
    if (cfg.workers < 1) throw usage_error("--workers: must be >= 1");
    if (cfg.output_path.empty()) throw usage_error("--output: must not be empty");
    if ((cfg.command == "duality-check" || cfg.command == "oracle-check") && cfg.n > 12)
        throw usage_error("--n: the exact oracle supports at most 12 vertices");
    if (cfg.command == "fit-beta" && cfg.input_path.empty())
        throw usage_error("--input: fit-beta needs a rho-scan results file");
    if (cfg.alpha <= 3 && (cfg.command == "rho-scan" || cfg.command == "fit-beta"))
        std::cerr << "warning: alpha <= 3 gives infinite-variance degrees; the exponent "
                     "bracket is calibrated for alpha > 3\n";
}

}  // namespace detail

inline std::string usage_text() {
    return "usage: contactnet <command> [--flag value ...]\n"
           "commands: gen-graph simulate star rho-scan fit-beta diameter duality-check oracle-check\n"
           "flags: --config FILE --alpha R --k-min I --k-max I --n I --n-grid LIST\n"
           "       --lambda R --lambda-grid LIST --t-grid LIST --epsilon R --epsilon-slack R\n"
           "       --horizon R --sample-dt R --reps I --sample-size I --k I --m0 I --center0 I\n"
           "       --levels LIST --max-retries I --graphs I --master-seed U64 --workers I\n"
           "       --output DIR --graph-file FILE --input FILE\n"
           "CONTACTNET_SEED overrides --master-seed. A manifest.json is accepted as --config.\n";
}

/// Builds a validated config from CLI words. A bare word is the command;
/// every flag takes one value. --config points at a JSON object (or at a
/// manifest, whose "config" object is used); flags override the file, and
/// CONTACTNET_SEED overrides both. An unset master seed is drawn from the
/// system entropy source and recorded so the run stays replayable.
inline ExperimentConfig parse_config(const std::vector<std::string>& args) {
    std::vector<std::pair<std::string, nlohmann::json>> file_settings;
    std::vector<std::pair<std::string, nlohmann::json>> flag_settings;

    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& tok = args[i];
        if (tok.rfind("--", 0) != 0) {
            flag_settings.emplace_back("command", tok);
            continue;
        }
        const std::string key = tok.substr(2);
        if (i + 1 >= args.size()) throw usage_error(tok + ": missing value");
        const std::string value = args[++i];
        if (key == "config") {
            std::ifstream in(value);
            if (!in) throw usage_error("--config: cannot open " + value);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw usage_error("--config: invalid JSON in " + value + ": " + e.what());
            }
            if (j.contains("config")) j = j["config"];  // manifest form
            if (!j.is_object()) throw usage_error("--config: expected a JSON object");
            for (const auto& [k, v] : j.items()) file_settings.emplace_back(k, v);
        } else {
            flag_settings.emplace_back(key, value);
        }
    }

    std::string command;
    for (const auto& [k, v] : file_settings)
        if (k == "command") command = detail::string_from(v, k);
    for (const auto& [k, v] : flag_settings)
        if (k == "command") command = detail::string_from(v, k);
    if (command.empty()) throw usage_error("missing command");

    ExperimentConfig cfg = detail::default_config(command);
    bool seed_given = false;
    for (const auto& [k, v] : file_settings) detail::apply_setting(cfg, k, v, seed_given);
    for (const auto& [k, v] : flag_settings) detail::apply_setting(cfg, k, v, seed_given);

    if (const char* env = std::getenv("CONTACTNET_SEED")) {
        cfg.master_seed = detail::number_from<std::uint64_t>(nlohmann::json(std::string(env)),
                                                             "CONTACTNET_SEED");
        seed_given = true;
    }
    if (!seed_given) {
        std::random_device rd;
        cfg.master_seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    detail::validate_config(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Output plumbing

namespace detail {

// Stream seeds are derived in two levels: stage_seed = derive_seed(master,
// stage), replicate seed = derive_seed(stage_seed, i). Stage 0 is graph
// construction; replicate stages start at 1 (one per lambda / n entry).
inline std::uint64_t stage_seed(std::uint64_t master, std::uint64_t stage) {
    return derive_seed(master, stage);
}

inline nlohmann::json result_row(const std::string& experiment, int replicate,
                                 std::uint64_t seed, nlohmann::json params,
                                 nlohmann::json result) {
    return nlohmann::json{{"experiment", experiment},
                          {"replicate", replicate},
                          {"seed", seed},
                          {"params", std::move(params)},
                          {"result", std::move(result)}};
}

inline nlohmann::json summary_row(const std::string& experiment, std::uint64_t seed,
                                  nlohmann::json params, nlohmann::json result) {
    return nlohmann::json{{"experiment", experiment},
                          {"summary", true},
                          {"seed", seed},
                          {"params", std::move(params)},
                          {"result", std::move(result)}};
}

inline void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    nlohmann::json m{{"version", kVersion},
                     {"written_at_unix", static_cast<std::int64_t>(std::time(nullptr))},
                     {"config", cfg}};
    std::ofstream os(dir / "manifest.json");
    if (!os) throw std::runtime_error("cannot write manifest in " + dir.string());
    os << m.dump(2) << '\n';
}

struct GraphSource {
    Graph graph;
    nlohmann::json info;
};

/// Loads --graph-file if given, otherwise samples degree sequence and
/// matching from the stage-0 stream and saves the result as graph.txt.
inline GraphSource obtain_graph(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    GraphSource out;
    if (!cfg.graph_file.empty()) {
        out.graph = load_graph(cfg.graph_file);
        out.info = {{"source", cfg.graph_file}, {"n", out.graph.n}, {"m", out.graph.num_edges()}};
        return out;
    }
    const DegreePmf pmf = power_law_pmf(cfg.alpha, cfg.k_min, cfg.k_max);
    rng_t stream(stage_seed(cfg.master_seed, 0));
    auto built = sample_graph(pmf, cfg.n, stream, cfg.max_retries);
    out.info = {{"source", "sampled"},
                {"n", built.graph.n},
                {"m", built.graph.num_edges()},
                {"degree-draws", built.degree_draws},
                {"matching-rounds", built.matching_rounds},
                {"connected", is_connected(built.graph)}};
    out.graph = std::move(built.graph);
    save_graph(out.graph, (dir / "graph.txt").string());
    return out;
}

/// Random simple graph on n vertices: each pair is an edge with probability
/// 1/2. Used by the oracle commands.
inline Graph random_tiny_graph(int n, rng_t& rng) {
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (uniform01(rng) < 0.5) edges.emplace_back(u, v);
    return make_graph(n, edges);
}

inline std::vector<int> random_nonempty_subset(int n, rng_t& rng) {
    const auto mask = pick_below(rng, (std::uint64_t{1} << n) - 1) + 1;
    std::vector<int> out;
    for (int v = 0; v < n; ++v)
        if (mask & (std::uint64_t{1} << v)) out.push_back(v);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands. Each writes manifest.json first, then results.jsonl with one row
// per replicate (buffered and flushed in replicate order, so worker count
// never changes the bytes) plus summary rows.

namespace detail {

inline void cmd_gen_graph(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                          std::ostream& results) {
    const GraphSource src = obtain_graph(cfg, dir);
    nlohmann::json params{
        {"alpha", cfg.alpha}, {"k-min", cfg.k_min}, {"k-max", cfg.k_max}, {"n", cfg.n}};
    results << summary_row("gen-graph", cfg.master_seed, params, src.info).dump() << '\n';
}

inline void cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                         std::ostream& results) {
    const GraphSource src = obtain_graph(cfg, dir);
    const Graph& g = src.graph;
    const double horizon = cfg.horizon > 0 ? cfg.horizon : 100.0;
    std::vector<double> schedule;
    for (double t = 0.0; t <= horizon; t += cfg.sample_dt) schedule.push_back(t);
    std::vector<int> all(static_cast<std::size_t>(g.n));
    for (int v = 0; v < g.n; ++v) all[static_cast<std::size_t>(v)] = v;

    const nlohmann::json params{{"lambda", cfg.lambda},
                                {"n", g.n},
                                {"horizon", horizon},
                                {"sample-dt", cfg.sample_dt},
                                {"epsilon", cfg.epsilon}};
    const std::uint64_t stage = stage_seed(cfg.master_seed, 1);
    std::vector<std::string> rows(static_cast<std::size_t>(cfg.reps));
    std::vector<std::optional<double>> ext(static_cast<std::size_t>(cfg.reps));
    parallel_replicates(cfg.reps, cfg.workers, [&](int i) {
        const std::uint64_t seed = derive_seed(stage, static_cast<std::uint64_t>(i));
        rng_t stream(seed);
        const Trajectory tr =
            run_forward(g, cfg.lambda, all, horizon, schedule, cfg.epsilon, stream);
        char name[32];
        std::snprintf(name, sizeof(name), "trajectory_%04d.csv", i);
        std::ofstream csv(dir / name);
        write_trajectory_csv(tr, csv);
        ext[static_cast<std::size_t>(i)] = tr.extinction_time;
        nlohmann::json result{{"survived", !tr.extinction_time.has_value()},
                              {"extinction_time", tr.extinction_time ? nlohmann::json(*tr.extinction_time)
                                                                     : nlohmann::json(nullptr)},
                              {"final_infected", tr.samples.empty() ? 0 : tr.samples.back().infected}};
        rows[static_cast<std::size_t>(i)] = result_row("simulate", i, seed, params, result).dump();
    });
    for (const auto& r : rows) results << r << '\n';

    int extinct = 0;
    double sum = 0;
    for (const auto& e : ext)
        if (e) {
            ++extinct;
            sum += *e;
        }
    nlohmann::json summary{{"reps", cfg.reps},
                           {"extinct", extinct},
                           {"survived", cfg.reps - extinct},
                           {"mean_extinction_time",
                            extinct > 0 ? nlohmann::json(sum / extinct) : nlohmann::json(nullptr)}};
    results << summary_row("simulate", cfg.master_seed, params, summary).dump() << '\n';
}

inline void cmd_star(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                     std::ostream& results) {
    (void)dir;
    const double kl2 = cfg.star_k * cfg.lambda * cfg.lambda;
    const double horizon = cfg.horizon > 0 ? cfg.horizon : std::exp(kl2 / 10.0);
    const StarChain initial{cfg.star_k, cfg.star_m0, cfg.star_center0, 0.0};
    const nlohmann::json params{{"k", cfg.star_k},
                                {"lambda", cfg.lambda},
                                {"m0", cfg.star_m0},
                                {"center0", cfg.star_center0},
                                {"horizon", horizon},
                                {"levels", cfg.star_levels}};
    const std::uint64_t stage = stage_seed(cfg.master_seed, 1);
    std::vector<std::string> rows(static_cast<std::size_t>(cfg.reps));
    std::vector<std::uint8_t> survived(static_cast<std::size_t>(cfg.reps), 0);
    parallel_replicates(cfg.reps, cfg.workers, [&](int i) {
        const std::uint64_t seed = derive_seed(stage, static_cast<std::uint64_t>(i));
        rng_t stream(seed);
        const StarChainRun run = run_star_chain(initial, cfg.lambda, horizon, cfg.star_levels, stream);
        survived[static_cast<std::size_t>(i)] = run.survived ? 1 : 0;
        nlohmann::json hits = nlohmann::json::object();
        for (const auto& [lvl, t] : run.hit_times) hits[std::to_string(lvl)] = t;
        nlohmann::json result{
            {"survived", run.survived},
            {"min_leaves", run.min_infected_leaves},
            {"center_first_recovery", std::isfinite(run.center_first_recovery)
                                          ? nlohmann::json(run.center_first_recovery)
                                          : nlohmann::json(nullptr)},
            {"extinction_time",
             run.extinction_time ? nlohmann::json(*run.extinction_time) : nlohmann::json(nullptr)},
            {"hits", hits}};
        rows[static_cast<std::size_t>(i)] = result_row("star", i, seed, params, result).dump();
    });
    for (const auto& r : rows) results << r << '\n';

    int successes = 0;
    for (auto s : survived) successes += s;
    const SurvivalEstimate est = make_survival_estimate(successes, cfg.reps);
    nlohmann::json summary{{"successes", est.successes},
                           {"trials", est.trials},
                           {"p_hat", est.p_hat},
                           {"ci_low", est.ci_low},
                           {"ci_high", est.ci_high}};
    results << summary_row("star", cfg.master_seed, params, summary).dump() << '\n';
}

inline void cmd_rho_scan(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                         std::ostream& results) {
    const GraphSource src = obtain_graph(cfg, dir);
    const Graph& g = src.graph;
    std::vector<std::pair<double, double>> points;
    for (std::size_t j = 0; j < cfg.lambda_grid.size(); ++j) {
        const double lambda = cfg.lambda_grid[j];
        const double horizon =
            cfg.horizon > 0 ? cfg.horizon : default_rho_horizon(lambda, cfg.alpha);
        const nlohmann::json params{{"lambda", lambda}, {"horizon", horizon}, {"n", g.n}};
        const std::uint64_t stage = stage_seed(cfg.master_seed, 1 + j);
        std::vector<std::string> rows(static_cast<std::size_t>(cfg.sample_size));
        std::vector<std::uint8_t> survived(static_cast<std::size_t>(cfg.sample_size), 0);
        parallel_replicates(cfg.sample_size, cfg.workers, [&](int i) {
            const std::uint64_t seed = derive_seed(stage, static_cast<std::uint64_t>(i));
            rng_t stream(seed);
            const int x = static_cast<int>(pick_below(stream, static_cast<std::uint64_t>(g.n)));
            const DualResult dual = run_dual(g, lambda, {x}, horizon, stream);
            survived[static_cast<std::size_t>(i)] = dual.survived ? 1 : 0;
            nlohmann::json result{{"vertex", x}, {"survived", dual.survived}};
            rows[static_cast<std::size_t>(i)] = result_row("rho-scan", i, seed, params, result).dump();
        });
        for (const auto& r : rows) results << r << '\n';
        int successes = 0;
        for (auto s : survived) successes += s;
        const SurvivalEstimate est = make_survival_estimate(successes, cfg.sample_size);
        points.emplace_back(lambda, est.p_hat);
        nlohmann::json summary{{"successes", est.successes},
                               {"trials", est.trials},
                               {"p_hat", est.p_hat},
                               {"ci_low", est.ci_low},
                               {"ci_high", est.ci_high}};
        results << summary_row("rho-scan", cfg.master_seed, params, summary).dump() << '\n';
    }
    nlohmann::json overall{{"points", points}};
    results << summary_row("rho-scan", cfg.master_seed,
                           nlohmann::json{{"lambda-grid", cfg.lambda_grid}}, overall)
                   .dump()
            << '\n';
}

inline void cmd_fit_beta(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                         std::ostream& results) {
    (void)dir;
    std::ifstream in(cfg.input_path);
    if (!in) throw usage_error("--input: cannot open " + cfg.input_path);
    std::vector<std::pair<double, double>> points;
    int dropped = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            continue;  // not a record line
        }
        if (j.value("experiment", "") != "rho-scan" || !j.value("summary", false)) continue;
        if (!j["result"].contains("p_hat") || !j["params"].contains("lambda")) continue;
        const double lambda = j["params"]["lambda"].get<double>();
        const double rho = j["result"]["p_hat"].get<double>();
        if (rho > 0)
            points.emplace_back(lambda, rho);
        else
            ++dropped;
    }
    std::sort(points.begin(), points.end());
    const ExponentFit fit = fit_exponent(points);
    for (std::size_t i = 0; i < fit.points.size(); ++i) {
        nlohmann::json result{{"lambda", fit.points[i].first}, {"rho_hat", fit.points[i].second}};
        results << result_row("fit-beta", static_cast<int>(i), cfg.master_seed,
                              nlohmann::json::object(), result)
                       .dump()
                << '\n';
    }
    nlohmann::json summary{{"beta_hat", fit.beta_hat},
                           {"intercept", fit.intercept},
                           {"r_squared", fit.r_squared},
                           {"stderr_beta", fit.stderr_beta},
                           {"points", fit.points},
                           {"dropped_zero_rho", dropped}};
    results << summary_row("fit-beta", cfg.master_seed, nlohmann::json{{"input", cfg.input_path}},
                           summary)
                   .dump()
            << '\n';
}

inline void cmd_diameter(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                         std::ostream& results) {
    (void)dir;
    const std::vector<int> grid = cfg.n_grid.empty() ? std::vector<int>{cfg.n} : cfg.n_grid;
    const DegreePmf pmf = power_law_pmf(cfg.alpha, cfg.k_min, cfg.k_max);
    const double nu = size_biased_mean(pmf);
    if (cfg.k_min < 3) throw std::invalid_argument("diameter: k-min must be >= 3");

    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const int n = grid[gi];
        const double bound = (1.0 + cfg.epsilon_slack) * std::log(n) / std::log(nu);
        const nlohmann::json params{{"alpha", cfg.alpha},
                                    {"k-min", cfg.k_min},
                                    {"k-max", cfg.k_max},
                                    {"n", n},
                                    {"epsilon-slack", cfg.epsilon_slack}};
        const std::uint64_t stage = stage_seed(cfg.master_seed, 1 + gi);
        std::vector<std::string> rows(static_cast<std::size_t>(cfg.reps));
        std::vector<int> diameters(static_cast<std::size_t>(cfg.reps), -1);  // -1: disconnected
        parallel_replicates(cfg.reps, cfg.workers, [&](int i) {
            const std::uint64_t seed = derive_seed(stage, static_cast<std::uint64_t>(i));
            rng_t stream(seed);
            const auto built = sample_graph(pmf, n, stream, cfg.max_retries);
            nlohmann::json result;
            if (is_connected(built.graph)) {
                const int d = diameter(built.graph);
                diameters[static_cast<std::size_t>(i)] = d;
                result = {{"connected", true}, {"diameter", d}, {"within", d <= bound}};
            } else {
                result = {{"connected", false}, {"diameter", nullptr}, {"within", nullptr}};
            }
            rows[static_cast<std::size_t>(i)] = result_row("diameter", i, seed, params, result).dump();
        });
        for (const auto& r : rows) results << r << '\n';

        int connected = 0, within = 0;
        double sum = 0;
        for (int d : diameters)
            if (d >= 0) {
                ++connected;
                sum += d;
                if (d <= bound) ++within;
            }
        nlohmann::json summary{
            {"samples", cfg.reps},
            {"connected", connected},
            {"connected_fraction", static_cast<double>(connected) / cfg.reps},
            {"nu", nu},
            {"bound", bound},
            {"mean_diameter", connected ? nlohmann::json(sum / connected) : nlohmann::json(nullptr)},
            {"fraction_within",
             connected ? nlohmann::json(static_cast<double>(within) / connected)
                       : nlohmann::json(nullptr)}};
        results << summary_row("diameter", cfg.master_seed, params, summary).dump() << '\n';
    }
}

inline void cmd_duality_check(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                              std::ostream& results) {
    (void)dir;
    rng_t graph_stream(stage_seed(cfg.master_seed, 0));
    struct Case {
        Graph g;
        std::vector<int> a, b;
        double lambda, t;
    };
    std::vector<Case> cases;
    for (int gi = 0; gi < cfg.num_graphs; ++gi) {
        const Graph g = random_tiny_graph(cfg.n, graph_stream);
        const auto a = random_nonempty_subset(cfg.n, graph_stream);
        const auto b = random_nonempty_subset(cfg.n, graph_stream);
        for (double lambda : cfg.lambda_grid)
            for (double t : cfg.t_grid) cases.push_back({g, a, b, lambda, t});
    }
    std::vector<std::string> rows(cases.size());
    double max_gap = 0.0;
    std::mutex mu;
    parallel_replicates(static_cast<int>(cases.size()), cfg.workers, [&](int i) {
        const Case& c = cases[static_cast<std::size_t>(i)];
        const DualityGap gap = duality_gap(c.g, c.lambda, c.a, c.b, c.t);
        nlohmann::json params{{"n", c.g.n}, {"m", c.g.num_edges()}, {"lambda", c.lambda},
                              {"t", c.t},   {"a", c.a},             {"b", c.b}};
        nlohmann::json result{{"p_ab", gap.p_ab}, {"p_ba", gap.p_ba}, {"gap", gap.abs_gap}};
        rows[static_cast<std::size_t>(i)] =
            result_row("duality-check", i, cfg.master_seed, params, result).dump();
        std::lock_guard<std::mutex> lock(mu);
        max_gap = std::max(max_gap, gap.abs_gap);
    });
    for (const auto& r : rows) results << r << '\n';
    nlohmann::json summary{{"cases", cases.size()}, {"max_gap", max_gap}};
    results << summary_row("duality-check", cfg.master_seed,
                           nlohmann::json{{"graphs", cfg.num_graphs}, {"n", cfg.n}}, summary)
                   .dump()
            << '\n';
}

inline void cmd_oracle_check(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                             std::ostream& results) {
    (void)dir;
    rng_t graph_stream(stage_seed(cfg.master_seed, 0));
    struct Case {
        Graph g;
        std::vector<int> a;
        double lambda, t;
    };
    std::vector<Case> cases;
    for (int gi = 0; gi < cfg.num_graphs; ++gi) {
        const Graph g = random_tiny_graph(cfg.n, graph_stream);
        const auto a = random_nonempty_subset(cfg.n, graph_stream);
        for (double lambda : cfg.lambda_grid)
            for (double t : cfg.t_grid) cases.push_back({g, a, lambda, t});
    }
    std::vector<std::string> rows(cases.size());
    double max_z = 0.0;
    std::mutex mu;
    parallel_replicates(static_cast<int>(cases.size()), cfg.workers, [&](int ci) {
        const Case& c = cases[static_cast<std::size_t>(ci)];
        const double exact = exact_survival_tiny(c.g, c.lambda, c.a, c.t);
        const std::uint64_t stage = stage_seed(cfg.master_seed, 1 + static_cast<std::uint64_t>(ci));
        int successes = 0;
        for (int i = 0; i < cfg.reps; ++i) {
            rng_t stream(derive_seed(stage, static_cast<std::uint64_t>(i)));
            if (run_dual(c.g, c.lambda, c.a, c.t, stream).survived) ++successes;
        }
        const double p_hat = static_cast<double>(successes) / cfg.reps;
        const double sigma = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) / cfg.reps);
        const double z = std::fabs(p_hat - exact) / sigma;
        nlohmann::json params{{"n", c.g.n}, {"m", c.g.num_edges()}, {"lambda", c.lambda},
                              {"t", c.t},   {"a", c.a},             {"reps", cfg.reps}};
        nlohmann::json result{
            {"exact", exact}, {"successes", successes}, {"p_hat", p_hat}, {"z_distance", z}};
        rows[static_cast<std::size_t>(ci)] =
            result_row("oracle-check", ci, cfg.master_seed, params, result).dump();
        std::lock_guard<std::mutex> lock(mu);
        max_z = std::max(max_z, z);
    });
    for (const auto& r : rows) results << r << '\n';
    nlohmann::json summary{{"cases", cases.size()}, {"max_z", max_z}};
    results << summary_row("oracle-check", cfg.master_seed,
                           nlohmann::json{{"graphs", cfg.num_graphs}, {"n", cfg.n}}, summary)
                   .dump()
            << '\n';
}

}  // namespace detail

/// Runs one configured experiment: creates the output directory, writes the
/// manifest before any computation, then streams JSONL records. Throws on
/// failure; the CLI maps exception types to exit codes.
inline void run_experiment(const ExperimentConfig& cfg) {
    const std::filesystem::path dir(cfg.output_path);
    std::filesystem::create_directories(dir);
    detail::write_manifest(cfg, dir);
    std::ofstream results(dir / "results.jsonl");
    if (!results) throw std::runtime_error("cannot write results in " + dir.string());

    if (cfg.command == "gen-graph") detail::cmd_gen_graph(cfg, dir, results);
    else if (cfg.command == "simulate") detail::cmd_simulate(cfg, dir, results);
    else if (cfg.command == "star") detail::cmd_star(cfg, dir, results);
    else if (cfg.command == "rho-scan") detail::cmd_rho_scan(cfg, dir, results);
    else if (cfg.command == "fit-beta") detail::cmd_fit_beta(cfg, dir, results);
    else if (cfg.command == "diameter") detail::cmd_diameter(cfg, dir, results);
    else if (cfg.command == "duality-check") detail::cmd_duality_check(cfg, dir, results);
    else if (cfg.command == "oracle-check") detail::cmd_oracle_check(cfg, dir, results);
    else throw usage_error("--command: unknown command '" + cfg.command + "'");
}

}  // namespace contactnet

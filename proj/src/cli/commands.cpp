#include "microtrade/cli/commands.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "microtrade/baselines/baselines.hpp"
#include "microtrade/io/config.hpp"
#include "microtrade/io/profiles.hpp"
#include "microtrade/marl/evaluation.hpp"
#include "microtrade/marl/trainer.hpp"
#include "microtrade/report/report.hpp"

namespace microtrade::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const char* const kConfigFile = "config.cfg";
const char* const kCheckpointDir = "checkpoint";
const char* const kSummaryFile = "summary.csv";

struct CommonFlags {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> episodes;
    std::string policy;
    std::string output;
    std::size_t parallel = 1;
};

io::ExperimentConfig load_config(const CommonFlags& f) {
    io::ExperimentConfig c;
    if (!f.config.empty()) {
        if (!fs::exists(f.config)) throw UsageError("config file not found: " + f.config);
        c = io::parse_config(f.config);
    } else if (!f.preset.empty()) {
        c = io::preset_config(f.preset);
    } else {
        throw UsageError("one of --config or --preset is required");
    }
    if (f.seed) c.seed = *f.seed;
    if (f.episodes) c.episodes = *f.episodes;
    if (!f.policy.empty()) {
        try {
            c.policy = io::parse_policy_kind(f.policy);
        } catch (const std::invalid_argument& e) {
            throw UsageError("--policy: " + std::string(e.what()));
        }
    }
    c.validate();
    return c;
}

bool is_learned(io::PolicyKind k) { return k == io::PolicyKind::Maddpg || k == io::PolicyKind::IndependentDdpg; }

std::unique_ptr<marl::Policy> fixed_policy(const io::ExperimentConfig& c, const grid::EnvironmentConfig& env) {
    if (c.policy == io::PolicyKind::Isolated) return std::make_unique<baselines::IsolatedPolicy>(env.microgrids);
    return std::make_unique<baselines::RandomPolicy>(env.microgrids, marl::PriceBounds{c.price_floor, c.price_cap},
                                                     marl::derive_seed(c.seed, 0xBA5E));
}

void print_progress(std::ostream& out, const marl::EpisodeMetrics& m) {
    for (std::size_t i = 0; i < m.agents.size(); ++i) {
        out << m.episode << ',' << i << ',' << report::format_number(m.agents[i].mean_reward) << '\n';
    }
    out.flush();
}

// Fixed policies have nothing to learn; their "training" rollouts produce
// the same metrics schema over the same episode windows.
std::vector<marl::EpisodeMetrics> rollout_fixed(const io::ExperimentConfig& c,
                                                std::shared_ptr<const grid::ExogenousProfiles> profiles,
                                                const std::function<void(const marl::EpisodeMetrics&)>& on_episode) {
    const auto env_cfg = io::environment_config(c);
    grid::Environment env(env_cfg, profiles);
    auto policy = fixed_policy(c, env_cfg);
    std::vector<marl::EpisodeMetrics> all;
    const std::size_t n = env.microgrid_count();
    std::vector<grid::ScheduleAction> actions(n);
    for (std::size_t e = 0; e < c.episodes; ++e) {
        env.reset(grid::episode_start(e, c.horizon, profiles->length()));
        policy->begin_episode(e);
        marl::EpisodeMetrics m{e, std::vector<marl::AgentEpisodeMetrics>(n)};
        for (std::size_t t = 0; t < c.horizon; ++t) {
            for (std::size_t i = 0; i < n; ++i) actions[i] = policy->act(i, env.observe(i));
            const auto step = env.step(actions);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& r = step.records[i];
                auto& a = m.agents[i];
                a.mean_reward += r.reward.value();
                a.selling += r.sell_revenue.value();
                a.buying += r.buy_cost.value();
                a.wholesale += r.wholesale_cost.value();
                a.penalty += r.penalty.value();
            }
        }
        const auto steps = static_cast<double>(c.horizon);
        for (auto& a : m.agents) {
            a.mean_reward /= steps;
            a.selling /= steps;
            a.buying /= steps;
            a.wholesale /= steps;
            a.penalty /= steps;
        }
        all.push_back(m);
        if (on_episode) on_episode(m);
    }
    return all;
}

int cmd_train(const CommonFlags& f, std::ostream& out) {
    const auto c = load_config(f);
    const fs::path dir = f.output.empty() ? fs::path("run") : fs::path(f.output);
    fs::create_directories(dir);
    report::write_text(dir / kConfigFile, io::serialize_config(c));

    const auto profiles = io::build_profiles(c);
    std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
    if (!metrics) throw std::runtime_error("cannot write " + (dir / "metrics.csv").string());
    report::write_metrics_header(metrics);
    auto on_episode = [&](const marl::EpisodeMetrics& m) {
        report::write_metrics_rows(metrics, m);
        metrics.flush();
        print_progress(out, m);
    };

    std::vector<marl::EpisodeMetrics> all;
    if (is_learned(c.policy)) {
        marl::Trainer trainer(io::trainer_config(c), grid::Environment(io::environment_config(c), profiles));
        all = trainer.train(on_episode, dir / "abort_checkpoint");
        marl::save_checkpoint(dir / kCheckpointDir, trainer.agents());
    } else {
        all = rollout_fixed(c, profiles, on_episode);
    }
    metrics.close();
    report::write_training_charts(dir, all);
    return kSuccess;
}

void write_summary(const fs::path& dir, const marl::EvaluationReport& r) {
    std::ostringstream s;
    s << "episodes,slots,traded_slots,cleared_energy_kwh\n"
      << r.episodes << ',' << r.slots << ',' << r.traded_slots << ',' << report::format_number(r.cleared_energy) << '\n';
    report::write_text(dir / kSummaryFile, s.str());
}

int cmd_evaluate(const std::string& run_dir, CommonFlags f, std::optional<std::size_t> eval_episodes,
                 std::ostream& out) {
    io::ExperimentConfig c;
    if (!run_dir.empty()) {
        if (!f.config.empty() || !f.preset.empty()) throw UsageError("give either a run directory or --config/--preset");
        f.config = (fs::path(run_dir) / kConfigFile).string();
        if (!fs::exists(f.config)) throw std::runtime_error("missing run configuration: " + f.config);
    }
    c = load_config(f);
    if (f.episodes) c.eval_episodes = *f.episodes;
    if (eval_episodes) c.eval_episodes = *eval_episodes;
    if (c.eval_episodes == 0) throw UsageError("--episodes must be > 0");

    const auto profiles = io::build_profiles(c);
    const auto env_cfg = io::environment_config(c);
    std::unique_ptr<marl::Policy> policy;
    if (is_learned(c.policy)) {
        if (run_dir.empty()) throw UsageError("learned policies need a run directory with checkpoints");
        const fs::path ckpt = fs::path(run_dir) / kCheckpointDir;
        if (!fs::is_directory(ckpt)) throw std::runtime_error("missing checkpoint directory: " + ckpt.string());
        const marl::PriceBounds prices{c.price_floor, c.price_cap};
        policy = std::make_unique<marl::ActorPolicy>(marl::load_actors(ckpt, c.agent_count()),
                                                     marl::ObservationScaler::from_setup(env_cfg.microgrids, *profiles, prices),
                                                     env_cfg.microgrids, prices);
    } else {
        policy = fixed_policy(c, env_cfg);
    }

    marl::EvaluationOptions opt;
    opt.episodes = c.eval_episodes;
    opt.horizon = c.horizon;
    opt.first_episode = c.episodes;  // windows after the training ones
    opt.parallel = f.parallel;
    opt.keep_log = true;
    const auto report = marl::evaluate(env_cfg, profiles, *policy, opt);

    const fs::path dir = !f.output.empty() ? fs::path(f.output) : fs::path(run_dir.empty() ? "eval" : run_dir) / "eval";
    fs::create_directories(dir);
    report::write_text(dir / kConfigFile, io::serialize_config(c));
    report::write_evaluation(dir, report, env_cfg);
    write_summary(dir, report);
    for (std::size_t i = 0; i < report.breakdown.size(); ++i) {
        out << "microgrid " << i << " overall " << report::format_number(report.breakdown[i].overall) << '\n';
    }
    out << "successful_trading_ratio " << report::format_number(report.successful_trading_ratio()) << '\n';
    return kSuccess;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path, const std::string& header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != header) throw std::runtime_error(path.string() + ": unexpected header");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

double parse_double(const std::string& s, const fs::path& where) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw std::runtime_error(where.string() + ": bad number '" + s + "'");
    return v;
}

fs::path eval_dir_of(const fs::path& dir) {
    if (fs::exists(dir / "decomposition.csv")) return dir;
    if (fs::exists(dir / "eval" / "decomposition.csv")) return dir / "eval";
    throw std::runtime_error("no evaluation results in " + dir.string());
}

baselines::ComparisonRun load_run(const fs::path& dir) {
    const fs::path ev = eval_dir_of(dir);
    const auto c = io::parse_config(ev / kConfigFile);
    baselines::ComparisonRun run;
    run.name = io::to_string(c.policy);
    run.environment = io::environment_config(c);
    auto& r = run.report;
    const auto summary = read_csv_rows(ev / kSummaryFile, "episodes,slots,traded_slots,cleared_energy_kwh");
    if (summary.size() != 1 || summary[0].size() != 4) throw std::runtime_error(ev.string() + ": malformed summary");
    r.episodes = static_cast<std::size_t>(parse_double(summary[0][0], ev));
    r.slots = static_cast<std::size_t>(parse_double(summary[0][1], ev));
    r.traded_slots = static_cast<std::size_t>(parse_double(summary[0][2], ev));
    r.cleared_energy = parse_double(summary[0][3], ev);
    for (const auto& row : read_csv_rows(ev / "decomposition.csv", "microgrid,wholesale,buying,selling,penalty,overall")) {
        if (row.size() != 6) throw std::runtime_error(ev.string() + ": malformed decomposition");
        r.breakdown.push_back({parse_double(row[1], ev), parse_double(row[2], ev), parse_double(row[3], ev),
                               parse_double(row[4], ev), parse_double(row[5], ev)});
    }
    if (r.breakdown.size() != c.agent_count()) throw std::runtime_error(ev.string() + ": decomposition size mismatch");
    return run;
}

int cmd_compare(const std::vector<std::string>& dirs, const CommonFlags& f, std::ostream& out) {
    if (dirs.size() < 2) throw UsageError("compare needs at least two run directories");
    std::vector<baselines::ComparisonRun> runs;
    std::map<std::string, int> seen;
    for (const auto& d : dirs) {
        runs.push_back(load_run(d));
        if (int k = ++seen[runs.back().name]; k > 1) runs.back().name += "#" + std::to_string(k);
    }
    baselines::ComparisonReport rep;
    try {
        rep = baselines::compare(runs);
    } catch (const baselines::CompareError& e) {
        throw UsageError(e.what());
    }
    const fs::path dir = f.output.empty() ? fs::path("comparison") : fs::path(f.output);
    report::write_comparison(dir, rep);
    out << report::comparison_csv(rep) << report::market_csv(rep);
    return kSuccess;
}

}  // namespace

std::vector<SlotOrders> read_orders_csv(std::istream& in) {
    std::map<int, std::vector<market::MarketOrder>> by_slot;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (!header_seen) {
            if (line != "slot,participant,side,price_cents_kwh,quantity_kwh") {
                throw std::invalid_argument(where + "expected header slot,participant,side,price_cents_kwh,quantity_kwh");
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 5) throw std::invalid_argument(where + "expected 5 fields, found " + std::to_string(f.size()));
        auto int_field = [&](const std::string& s, const char* name) {
            int v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size()) {
                throw std::invalid_argument(where + name + " '" + s + "' is not an integer");
            }
            return v;
        };
        auto num_field = [&](const std::string& s, const char* name) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
                throw std::invalid_argument(where + name + " '" + s + "' is not a number");
            }
            return v;
        };
        market::MarketOrder o;
        const int slot = int_field(f[0], "slot");
        o.participant = int_field(f[1], "participant");
        if (f[2] == "buy") o.side = market::Side::Buy;
        else if (f[2] == "sell") o.side = market::Side::Sell;
        else throw std::invalid_argument(where + "side '" + f[2] + "' must be buy or sell");
        o.price = num_field(f[3], "price_cents_kwh");
        o.quantity = Energy::from_double(num_field(f[4], "quantity_kwh"));
        by_slot[slot].push_back(o);
    }
    std::vector<SlotOrders> out;
    for (auto& [slot, orders] : by_slot) out.push_back({slot, std::move(orders)});
    return out;
}

std::string clear_auction_csv(const std::vector<SlotOrders>& slots, const market::MarketLimits& limits) {
    std::ostringstream out;
    out << "slot,clearing_price,participant,allocation_kwh\n";
    if (slots.empty()) {
        out << "0,none,,\n";
        return out.str();
    }
    for (const auto& s : slots) {
        try {
            market::validate_orders(s.orders, limits);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("slot " + std::to_string(s.slot) + ": " + e.what());
        }
        const auto result = market::run_auction(s.orders, limits);
        const std::string price = result.clearing_price ? report::format_number(*result.clearing_price) : "none";
        std::vector<int> ids;
        for (const auto& o : s.orders) ids.push_back(o.participant);
        std::sort(ids.begin(), ids.end());
        for (int id : ids) {
            out << s.slot << ',' << price << ',' << id << ',' << report::format_number(result.allocation(id).value())
                << '\n';
        }
    }
    return out.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Peer-to-peer microgrid energy trading: double auction market and multi-agent training"};
    app.require_subcommand(1);

    CommonFlags f;
    std::optional<std::size_t> eval_episodes;
    std::string run_dir;
    std::vector<std::string> compare_dirs;
    std::string orders_path;

    auto add_config_flags = [&](CLI::App* sub) {
        auto* cfg = sub->add_option("--config", f.config, "Experiment config file");
        sub->add_option("--preset", f.preset, "Built-in preset")->check(CLI::IsMember({"paper4", "desk4"}))->excludes(cfg);
        sub->add_option("--seed", f.seed, "Master seed override");
        sub->add_option("--policy", f.policy, "maddpg | iddpg | isolated | random");
        sub->add_option("--output", f.output, "Output directory");
    };

    auto* train = app.add_subcommand("train", "Train (or roll out a fixed baseline) and write checkpoints and metrics");
    add_config_flags(train);
    train->add_option("--episodes", f.episodes, "Training episode override");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained run or a fixed baseline without noise");
    evaluate->add_option("run", run_dir, "Run directory written by train");
    add_config_flags(evaluate);
    evaluate->add_option("--episodes", eval_episodes, "Evaluation episodes");
    evaluate->add_option("--parallel-eval", f.parallel, "Evaluation worker threads")->check(CLI::PositiveNumber);

    auto* compare = app.add_subcommand("compare", "Compare two or more evaluated runs");
    compare->add_option("runs", compare_dirs, "Run or evaluation directories")->required();
    compare->add_option("--output", f.output, "Output directory");

    auto* clear = app.add_subcommand("clear-auction", "Clear one double auction per slot from an orders CSV");
    clear->add_option("orders", orders_path, "Orders CSV")->required();
    clear->add_option("--config", f.config, "Config supplying the price bounds");
    clear->add_option("--output", f.output, "Write the result here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsageError;
    }

    try {
        if (train->parsed()) return cmd_train(f, out);
        if (evaluate->parsed()) return cmd_evaluate(run_dir, f, eval_episodes, out);
        if (compare->parsed()) return cmd_compare(compare_dirs, f, out);
        if (clear->parsed()) {
            market::MarketLimits limits;
            if (!f.config.empty()) {
                const auto c = io::parse_config(f.config);
                limits.price_floor = c.price_floor;
                limits.price_cap = c.price_cap;
            }
            std::ifstream in(orders_path);
            if (!in) throw UsageError("cannot open orders file " + orders_path);
            std::string csv;
            try {
                csv = clear_auction_csv(read_orders_csv(in), limits);
            } catch (const std::invalid_argument& e) {
                throw UsageError(orders_path + ": " + e.what());
            }
            if (f.output.empty()) out << csv;
            else report::write_text(f.output, csv);
            return kSuccess;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsageError;
    } catch (const io::ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kUsageError;
}

}  // namespace microtrade::cli

#include "microtrade/io/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace microtrade::io {

namespace pt = boost::property_tree;

namespace {

const std::string kSectionPrefix = "microgrid.";

MicrogridSetup high_solar(double capacity) {
    MicrogridSetup m;
    m.archetype = Archetype::HighSolar;
    m.params.panel_area = 150.0;
    m.params.conversion_efficiency = 0.2;
    m.params.battery_capacity = kwh(capacity);
    m.params.charge_efficiency = 0.95;
    m.params.discharge_efficiency = 0.95;
    m.params.max_charge_rate = kwh(capacity);
    m.params.max_bid_quantity = kwh(7.5);
    return m;
}

MicrogridSetup low_solar(double capacity) {
    MicrogridSetup m = high_solar(capacity);
    m.archetype = Archetype::LowSolar;
    m.params.panel_area = 25.0;
    return m;
}

std::vector<MicrogridSetup> paper_microgrids() {
    return {high_solar(100.0), high_solar(100.0), low_solar(20.0), low_solar(10.0)};
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string format_list(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
    throw ConfigError("key '" + key + "': invalid value '" + value + "' (" + why + ")");
}

double to_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, s, "expected a number");
    return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, s, "expected a non-negative integer");
    return v;
}

bool to_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    bad_value(key, s, "expected true or false");
}

std::vector<int> to_list(const std::string& key, const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto v = to_uint(key, item);
        if (v == 0) bad_value(key, s, "layer sizes must be positive");
        out.push_back(static_cast<int>(v));
    }
    if (out.empty()) bad_value(key, s, "expected a comma-separated list");
    return out;
}

void apply_network_preset(ExperimentConfig& c, const std::string& name) {
    if (name == "paper") {
        c.actor_hidden = {512, 128};
        c.critic_hidden = {1024, 512, 256};
    } else if (name == "desk") {
        c.actor_hidden = {64, 64};
        c.critic_hidden = {128, 64};
    } else {
        bad_value("network_preset", name, "expected paper or desk");
    }
    c.network_preset = name;
}

void apply_microgrid_key(MicrogridSetup& m, const std::string& section, const std::string& key,
                         const std::string& value) {
    const std::string full = section + "." + key;
    auto& p = m.params;
    if (key == "archetype") {
        try {
            m.archetype = parse_archetype(value);
        } catch (const std::invalid_argument& e) {
            bad_value(full, value, e.what());
        }
    } else if (key == "panel_area") p.panel_area = to_double(full, value);
    else if (key == "conversion_efficiency") p.conversion_efficiency = to_double(full, value);
    else if (key == "battery_capacity") p.battery_capacity = kwh(to_double(full, value));
    else if (key == "charge_efficiency") p.charge_efficiency = to_double(full, value);
    else if (key == "discharge_efficiency") p.discharge_efficiency = to_double(full, value);
    else if (key == "max_charge_rate") p.max_charge_rate = kwh(to_double(full, value));
    else if (key == "max_bid_quantity") p.max_bid_quantity = kwh(to_double(full, value));
    else if (key == "gamma") m.gamma = to_double(full, value);
    else if (key == "profile") m.profile_path = value;
    else if (key == "radiation_scale") m.radiation_scale = to_double(full, value);
    else if (key == "load_scale") m.load_scale = to_double(full, value);
    else throw ConfigError("unknown key '" + full + "'");
}

void apply_top_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
    if (key == "policy") {
        try {
            c.policy = parse_policy_kind(value);
        } catch (const std::invalid_argument& e) {
            bad_value(key, value, e.what());
        }
    } else if (key == "wholesale_price") c.wholesale_price = to_double(key, value);
    else if (key == "price_floor") c.price_floor = to_double(key, value);
    else if (key == "price_cap") c.price_cap = to_double(key, value);
    else if (key == "episodes") c.episodes = to_uint(key, value);
    else if (key == "horizon") c.horizon = to_uint(key, value);
    else if (key == "batch_size") c.batch_size = to_uint(key, value);
    else if (key == "eval_episodes") c.eval_episodes = to_uint(key, value);
    else if (key == "replay_capacity") c.replay_capacity = to_uint(key, value);
    else if (key == "gamma") c.gamma = to_double(key, value);
    else if (key == "tau") c.tau = to_double(key, value);
    else if (key == "actor_step") c.actor_step = to_double(key, value);
    else if (key == "critic_step") c.critic_step = to_double(key, value);
    else if (key == "noise_initial_scale") c.noise_initial_scale = to_double(key, value);
    else if (key == "noise_decay_episodes") c.noise_decay_episodes = to_uint(key, value);
    else if (key == "ou_theta") c.ou.theta = to_double(key, value);
    else if (key == "ou_mu") c.ou.mu = to_double(key, value);
    else if (key == "ou_sigma") c.ou.sigma = to_double(key, value);
    else if (key == "reward_scale") c.reward_scale = to_double(key, value);
    else if (key == "actor_hidden") c.actor_hidden = to_list(key, value);
    else if (key == "critic_hidden") c.critic_hidden = to_list(key, value);
    else if (key == "seed") c.seed = to_uint(key, value);
    else if (key == "profile_source") {
        if (value == "synthetic") c.profile_source = ProfileSource::Synthetic;
        else if (value == "csv") c.profile_source = ProfileSource::Csv;
        else bad_value(key, value, "expected synthetic or csv");
    } else if (key == "profile_seed") c.profile_seed = to_uint(key, value);
    else if (key == "profile_length") c.profile_length = to_uint(key, value);
    else if (key == "initial_battery_fraction") c.initial_battery_fraction = to_double(key, value);
    else if (key == "outage_probability") c.outage_probability = to_double(key, value);
    else if (key == "market_enabled") c.market_enabled = to_bool(key, value);
    else throw ConfigError("unknown key '" + key + "'");
}

}  // namespace

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Maddpg: return "maddpg";
        case PolicyKind::IndependentDdpg: return "iddpg";
        case PolicyKind::Isolated: return "isolated";
        case PolicyKind::Random: return "random";
    }
    return "?";
}

PolicyKind parse_policy_kind(const std::string& text) {
    if (text == "maddpg") return PolicyKind::Maddpg;
    if (text == "iddpg" || text == "ddpg") return PolicyKind::IndependentDdpg;
    if (text == "isolated") return PolicyKind::Isolated;
    if (text == "random") return PolicyKind::Random;
    throw std::invalid_argument("expected maddpg, iddpg, isolated or random");
}

std::string to_string(Archetype a) { return a == Archetype::HighSolar ? "high_solar" : "low_solar"; }

Archetype parse_archetype(const std::string& text) {
    if (text == "high_solar") return Archetype::HighSolar;
    if (text == "low_solar") return Archetype::LowSolar;
    throw std::invalid_argument("expected high_solar or low_solar");
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(!microgrids.empty(), "agent_count must be >= 1");
    require(std::isfinite(wholesale_price) && wholesale_price >= 0.0, "wholesale_price must be >= 0");
    require(price_floor < price_cap, "price_floor must be < price_cap");
    require(horizon > 0, "horizon must be > 0");
    require(batch_size > 0, "batch_size must be > 0");
    require(replay_capacity >= batch_size, "replay_capacity must be >= batch_size");
    require(gamma >= 0.0 && gamma < 1.0, "gamma must be in [0, 1)");
    require(tau >= 0.0 && tau <= 1.0, "tau must be in [0, 1]");
    require(actor_step > 0.0 && critic_step > 0.0, "optimizer step sizes must be > 0");
    require(noise_initial_scale >= 0.0, "noise_initial_scale must be >= 0");
    require(ou.sigma >= 0.0 && std::isfinite(ou.theta) && std::isfinite(ou.mu), "invalid OU parameters");
    require(reward_scale > 0.0, "reward_scale must be > 0");
    require(profile_length >= horizon, "profile_length must be >= horizon");
    require(initial_battery_fraction >= 0.0 && initial_battery_fraction <= 1.0,
            "initial_battery_fraction must be in [0, 1]");
    require(outage_probability >= 0.0 && outage_probability <= 1.0, "outage_probability must be in [0, 1]");
    for (std::size_t i = 0; i < microgrids.size(); ++i) {
        const auto& m = microgrids[i];
        const std::string where = kSectionPrefix + std::to_string(i) + ": ";
        try {
            m.params.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where + e.what());
        }
        if (m.gamma) require(*m.gamma >= 0.0 && *m.gamma < 1.0, where + "gamma must be in [0, 1)");
        require(m.radiation_scale >= 0.0 && m.load_scale >= 0.0, where + "scales must be >= 0");
        if (profile_source == ProfileSource::Csv) require(!m.profile_path.empty(), where + "profile path required");
    }
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;
    c.microgrids = paper_microgrids();
    if (name == "paper4") {
        c.preset = "paper4";
        apply_network_preset(c, "paper");
    } else if (name == "desk4") {
        c.preset = "desk4";
        c.episodes = 200;
        c.batch_size = 256;
        c.eval_episodes = 100;
        c.noise_decay_episodes = 133;
        apply_network_preset(c, "desk");
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected paper4 or desk4)");
    }
    return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }
    // read_ini drops sections without keys; they still count as microgrids
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        const auto open = line.find_first_not_of(" \t");
        const auto close = line.find_last_not_of(" \t\r");
        if (open == std::string::npos || line[open] != '[' || line[close] != ']') continue;
        const std::string name = line.substr(open + 1, close - open - 1);
        if (tree.find(name) == tree.not_found()) tree.push_back({name, pt::ptree()});
    }

    std::string preset = "paper4";
    if (auto p = tree.get_child_optional(pt::ptree::path_type("preset", '\0'))) preset = p->data();
    ExperimentConfig c = preset_config(preset);

    // network_preset first so explicit hidden sizes override it
    if (auto p = tree.get_child_optional(pt::ptree::path_type("network_preset", '\0'))) {
        apply_network_preset(c, p->data());
    }

    std::optional<std::size_t> agent_count;
    std::vector<std::pair<std::size_t, const pt::ptree*>> sections;
    for (const auto& [key, node] : tree) {
        if (!node.empty() || key.rfind(kSectionPrefix, 0) == 0) {
            if (key.rfind(kSectionPrefix, 0) != 0) throw ConfigError("unknown section [" + key + "]");
            std::size_t index = to_uint("[" + key + "]", key.substr(kSectionPrefix.size()));
            sections.emplace_back(index, &node);
            continue;
        }
        if (key == "preset" || key == "network_preset") continue;
        if (key == "agent_count") {
            agent_count = to_uint(key, node.data());
            if (*agent_count == 0) bad_value(key, node.data(), "must be >= 1");
            continue;
        }
        apply_top_key(c, key, node.data());
    }

    const auto preset_grids = c.microgrids;
    if (!sections.empty()) {
        const std::size_t n = agent_count.value_or(sections.size());
        if (sections.size() != n) {
            throw ConfigError("agent_count = " + std::to_string(n) + " but " + std::to_string(sections.size()) +
                              " [microgrid.*] sections given");
        }
        std::set<std::size_t> seen;
        c.microgrids.resize(n);
        for (std::size_t i = 0; i < n; ++i) c.microgrids[i] = preset_grids[i % preset_grids.size()];
        for (const auto& [index, node] : sections) {
            if (index >= n) throw ConfigError("section [microgrid." + std::to_string(index) + "] out of range");
            if (!seen.insert(index).second) throw ConfigError("duplicate section [microgrid." + std::to_string(index) + "]");
            const std::string name = kSectionPrefix + std::to_string(index);
            for (const auto& [key, leaf] : *node) apply_microgrid_key(c.microgrids[index], name, key, leaf.data());
        }
    } else if (agent_count) {
        c.microgrids.resize(*agent_count);
        for (std::size_t i = 0; i < *agent_count; ++i) c.microgrids[i] = preset_grids[i % preset_grids.size()];
    }

    c.validate();
    return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "preset = " << c.preset << '\n'
        << "policy = " << to_string(c.policy) << '\n'
        << "agent_count = " << c.agent_count() << '\n'
        << "wholesale_price = " << format_double(c.wholesale_price) << '\n'
        << "price_floor = " << format_double(c.price_floor) << '\n'
        << "price_cap = " << format_double(c.price_cap) << '\n'
        << "episodes = " << c.episodes << '\n'
        << "horizon = " << c.horizon << '\n'
        << "batch_size = " << c.batch_size << '\n'
        << "eval_episodes = " << c.eval_episodes << '\n'
        << "replay_capacity = " << c.replay_capacity << '\n'
        << "gamma = " << format_double(c.gamma) << '\n'
        << "tau = " << format_double(c.tau) << '\n'
        << "actor_step = " << format_double(c.actor_step) << '\n'
        << "critic_step = " << format_double(c.critic_step) << '\n'
        << "noise_initial_scale = " << format_double(c.noise_initial_scale) << '\n'
        << "noise_decay_episodes = " << c.noise_decay_episodes << '\n'
        << "ou_theta = " << format_double(c.ou.theta) << '\n'
        << "ou_mu = " << format_double(c.ou.mu) << '\n'
        << "ou_sigma = " << format_double(c.ou.sigma) << '\n'
        << "reward_scale = " << format_double(c.reward_scale) << '\n'
        << "network_preset = " << c.network_preset << '\n'
        << "actor_hidden = " << format_list(c.actor_hidden) << '\n'
        << "critic_hidden = " << format_list(c.critic_hidden) << '\n'
        << "seed = " << c.seed << '\n'
        << "profile_source = " << (c.profile_source == ProfileSource::Csv ? "csv" : "synthetic") << '\n'
        << "profile_seed = " << c.profile_seed << '\n'
        << "profile_length = " << c.profile_length << '\n'
        << "initial_battery_fraction = " << format_double(c.initial_battery_fraction) << '\n'
        << "outage_probability = " << format_double(c.outage_probability) << '\n'
        << "market_enabled = " << (c.market_enabled ? "true" : "false") << '\n';
    for (std::size_t i = 0; i < c.microgrids.size(); ++i) {
        const auto& m = c.microgrids[i];
        out << "\n[" << kSectionPrefix << i << "]\n"
            << "archetype = " << to_string(m.archetype) << '\n'
            << "panel_area = " << format_double(m.params.panel_area) << '\n'
            << "conversion_efficiency = " << format_double(m.params.conversion_efficiency) << '\n'
            << "battery_capacity = " << format_double(m.params.battery_capacity.value()) << '\n'
            << "charge_efficiency = " << format_double(m.params.charge_efficiency) << '\n'
            << "discharge_efficiency = " << format_double(m.params.discharge_efficiency) << '\n'
            << "max_charge_rate = " << format_double(m.params.max_charge_rate.value()) << '\n'
            << "max_bid_quantity = " << format_double(m.params.max_bid_quantity.value()) << '\n';
        if (m.gamma) out << "gamma = " << format_double(*m.gamma) << '\n';
        if (!m.profile_path.empty()) out << "profile = " << m.profile_path << '\n';
        out << "radiation_scale = " << format_double(m.radiation_scale) << '\n'
            << "load_scale = " << format_double(m.load_scale) << '\n';
    }
    return out.str();
}

grid::EnvironmentConfig environment_config(const ExperimentConfig& c) {
    grid::EnvironmentConfig e;
    for (const auto& m : c.microgrids) e.microgrids.push_back(m.params);
    e.price_floor = c.price_floor;
    e.price_cap = c.price_cap;
    e.market_enabled = c.market_enabled && c.policy != PolicyKind::Isolated;
    e.initial_battery_fraction = c.initial_battery_fraction;
    e.outage_probability = c.outage_probability;
    e.seed = marl::derive_seed(c.seed, 0xE0E0);
    return e;
}

marl::TrainerConfig trainer_config(const ExperimentConfig& c) {
    marl::TrainerConfig t;
    t.mode = c.policy == PolicyKind::IndependentDdpg ? marl::CriticMode::Independent : marl::CriticMode::Centralized;
    t.episodes = c.episodes;
    t.horizon = c.horizon;
    t.batch_size = c.batch_size;
    t.replay_capacity = c.replay_capacity;
    for (const auto& m : c.microgrids) t.gamma.push_back(m.gamma.value_or(c.gamma));
    t.tau = c.tau;
    t.actor_step = c.actor_step;
    t.critic_step = c.critic_step;
    t.noise_initial_scale = c.noise_initial_scale;
    t.noise_decay_episodes = c.noise_decay_episodes;
    t.ou = c.ou;
    t.reward_scale = c.reward_scale;
    t.actor_hidden = c.actor_hidden;
    t.critic_hidden = c.critic_hidden;
    t.seed = c.seed;
    t.prices = {c.price_floor, c.price_cap};
    return t;
}

}  // namespace microtrade::io

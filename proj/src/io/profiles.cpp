#include "microtrade/io/profiles.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "microtrade/marl/noise.hpp"

namespace microtrade::io {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

struct Series {
    std::vector<double> radiation;
    std::vector<double> load;
};

Series read_one(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ProfileError(path.string() + ": cannot open profile file");
    std::string line;
    if (!std::getline(in, line) || trim(line) != kProfileHeader) {
        throw ProfileError(path.string() + ":1: expected header '" + kProfileHeader + "'");
    }
    Series s;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
        const auto fields = split(line);
        if (fields.size() != 3) {
            throw ProfileError(where + "expected 3 fields, found " + std::to_string(fields.size()));
        }
        std::size_t slot = 0;
        auto [sp, sec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), slot);
        if (sec != std::errc() || sp != fields[0].data() + fields[0].size()) {
            throw ProfileError(where + "slot '" + fields[0] + "' is not an integer");
        }
        if (slot != s.radiation.size()) {
            throw ProfileError(where + "expected slot " + std::to_string(s.radiation.size()) + ", found " +
                               std::to_string(slot));
        }
        double values[2];
        const char* names[2] = {"radiation_kw_m2", "load_kwh"};
        for (int k = 0; k < 2; ++k) {
            const auto& f = fields[k + 1];
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), values[k]);
            if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(values[k])) {
                throw ProfileError(where + names[k] + " '" + f + "' is not a number");
            }
            if (values[k] < 0.0) throw ProfileError(where + names[k] + " is negative (" + f + ")");
        }
        s.radiation.push_back(values[0]);
        s.load.push_back(values[1]);
    }
    return s;
}

}  // namespace

grid::ExogenousProfiles load_profiles(const std::vector<std::filesystem::path>& paths,
                                      const std::vector<ProfileScale>& scales, double wholesale_price,
                                      std::size_t min_length) {
    if (paths.empty()) throw ProfileError("no profile files given");
    if (scales.size() != paths.size()) throw ProfileError("one scale pair per profile file required");
    grid::ExogenousProfiles out;
    out.wholesale_price = wholesale_price;
    std::size_t length = SIZE_MAX;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        auto s = read_one(paths[i]);
        if (s.radiation.size() < min_length) {
            throw ProfileError(paths[i].string() + ": series has " + std::to_string(s.radiation.size()) +
                               " rows, at least " + std::to_string(min_length) + " required");
        }
        for (auto& v : s.radiation) v *= scales[i].radiation;
        for (auto& v : s.load) v *= scales[i].load;
        length = std::min(length, s.radiation.size());
        out.radiation.push_back(std::move(s.radiation));
        out.load.push_back(std::move(s.load));
    }
    for (std::size_t i = 0; i < paths.size(); ++i) {
        out.radiation[i].resize(length);
        out.load[i].resize(length);
    }
    out.validate();
    return out;
}

void write_profile_csv(const std::filesystem::path& path, const std::vector<double>& radiation,
                       const std::vector<double>& load) {
    if (radiation.size() != load.size()) throw std::invalid_argument("radiation and load lengths differ");
    std::ofstream out(path);
    if (!out) throw ProfileError(path.string() + ": cannot write profile file");
    out << kProfileHeader << '\n';
    out.precision(17);
    for (std::size_t t = 0; t < radiation.size(); ++t) out << t << ',' << radiation[t] << ',' << load[t] << '\n';
}

ArchetypeShape archetype_shape(Archetype archetype) {
    ArchetypeShape s;
    if (archetype == Archetype::LowSolar) {
        s.base_load = 6.5;
        s.evening_load = 3.0;
    }
    return s;
}

grid::ExogenousProfiles synth_profiles(std::uint64_t seed, const std::vector<Archetype>& archetypes,
                                       std::size_t length, double wholesale_price) {
    grid::ExogenousProfiles out;
    out.wholesale_price = wholesale_price;
    for (std::size_t i = 0; i < archetypes.size(); ++i) {
        const auto shape = archetype_shape(archetypes[i]);
        std::mt19937_64 rng(marl::derive_seed(seed, i));
        std::uniform_real_distribution<double> cloud(shape.min_cloud_factor, 1.0);
        std::uniform_real_distribution<double> jitter(shape.min_hourly_jitter, 1.0);
        std::normal_distribution<double> noise(0.0, shape.load_noise_sd);

        std::vector<double> radiation(length), load(length);
        double day_factor = 1.0;
        for (std::size_t t = 0; t < length; ++t) {
            const double hour = static_cast<double>(t % 24);
            if (t % 24 == 0) day_factor = cloud(rng);
            const double phase = std::sin(std::numbers::pi * (hour - 6.0) / 12.0);
            // draw the jitter every slot so the stream does not depend on daylight
            const double j = jitter(rng);
            radiation[t] = hour > 6.0 && hour < 18.0 ? shape.peak_radiation * phase * day_factor * j : 0.0;
            const double evening = std::max(0.0, std::cos(2.0 * std::numbers::pi * (hour - 19.0) / 24.0));
            load[t] = std::max(0.0, shape.base_load + shape.evening_load * evening + noise(rng));
        }
        out.radiation.push_back(std::move(radiation));
        out.load.push_back(std::move(load));
    }
    return out;
}

std::shared_ptr<const grid::ExogenousProfiles> build_profiles(const ExperimentConfig& config) {
    grid::ExogenousProfiles p;
    if (config.profile_source == ProfileSource::Csv) {
        std::vector<std::filesystem::path> paths;
        std::vector<ProfileScale> scales;
        for (const auto& m : config.microgrids) {
            paths.emplace_back(m.profile_path);
            scales.push_back({m.radiation_scale, m.load_scale});
        }
        p = load_profiles(paths, scales, config.wholesale_price, config.horizon);
    } else {
        std::vector<Archetype> archetypes;
        for (const auto& m : config.microgrids) archetypes.push_back(m.archetype);
        p = synth_profiles(config.profile_seed, archetypes, config.profile_length, config.wholesale_price);
        for (std::size_t i = 0; i < config.microgrids.size(); ++i) {
            for (auto& v : p.radiation[i]) v *= config.microgrids[i].radiation_scale;
            for (auto& v : p.load[i]) v *= config.microgrids[i].load_scale;
        }
    }
    return std::make_shared<const grid::ExogenousProfiles>(std::move(p));
}

}  // namespace microtrade::io

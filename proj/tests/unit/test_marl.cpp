#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "../support/fixtures.hpp"
#include "microtrade/marl/action_codec.hpp"
#include "microtrade/marl/critic_layout.hpp"
#include "microtrade/marl/evaluation.hpp"
#include "microtrade/marl/noise.hpp"
#include "microtrade/marl/replay_buffer.hpp"
#include "microtrade/marl/trainer.hpp"

using namespace microtrade;
using namespace microtrade::marl;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

TrainerConfig tiny_config(CriticMode mode = CriticMode::Centralized) {
    TrainerConfig c;
    c.mode = mode;
    c.episodes = 3;
    c.horizon = 24;
    c.batch_size = 16;
    c.actor_hidden = {8};
    c.critic_hidden = {8, 8};
    c.seed = 5;
    return c;
}

grid::Environment tiny_env(std::size_t agents, std::uint64_t seed = 1) {
    grid::EnvironmentConfig cfg;
    for (std::size_t i = 0; i < agents; ++i) cfg.microgrids.push_back(support::params(i % 2 ? 20 : 100, i % 2 ? 25 : 150));
    cfg.seed = seed;
    return grid::Environment(cfg, support::random_profiles(agents, 96, seed + 10));
}

Batch random_batch(std::size_t agents, std::size_t size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ReplayBuffer buf(size, agents, seed);
    std::uniform_real_distribution<double> u(-1, 1), r(-2, 0);
    for (std::size_t k = 0; k < size; ++k) {
        Transition t;
        for (std::size_t i = 0; i < agents * kStateSize; ++i) t.states.push_back(u(rng)), t.next_states.push_back(u(rng));
        for (std::size_t i = 0; i < agents * kActionSize; ++i) t.actions.push_back(u(rng));
        for (std::size_t i = 0; i < agents; ++i) t.rewards.push_back(r(rng));
        buf.add(t);
    }
    std::vector<std::size_t> all(size);
    for (std::size_t k = 0; k < size; ++k) all[k] = k;
    return buf.gather(all);
}

void set_constant_output(nn::DenseNetwork& net, double value) {
    for (auto& l : net.layers()) {
        l.weights.setZero();
        l.bias.setZero();
    }
    net.layers().back().bias.setConstant(value);
}

}  // namespace

TEST(DecodeAction, NeutralPointIsIdle) {
    auto a = decode_action({0, 0, 0}, support::params(), {});
    EXPECT_TRUE(a.is_idle());
    EXPECT_EQ(a.battery_delta, Energy{});
}

TEST(DecodeAction, PriceBounds) {
    auto hi = decode_action({1, 0.5, 0}, support::params(), {15.0, 22.79});
    auto lo = decode_action({-1, 0.5, 0}, support::params(), {15.0, 22.79});
    EXPECT_DOUBLE_EQ(std::get<grid::BuyerRole>(hi.role).price, 22.79);
    EXPECT_DOUBLE_EQ(std::get<grid::BuyerRole>(lo.role).price, 15.0);
}

TEST(DecodeAction, RoleFromQuantitySign) {
    auto seller = decode_action({0, -1, 0}, support::params(), {});
    ASSERT_TRUE(std::holds_alternative<grid::SellerRole>(seller.role));
    EXPECT_EQ(std::get<grid::SellerRole>(seller.role).quantity, kwh(7.5));
    auto buyer = decode_action({0, 0.2, 0}, support::params(), {});
    EXPECT_EQ(std::get<grid::BuyerRole>(buyer.role).quantity, kwh(1.5));
    EXPECT_TRUE(decode_action({0, 1e-9, 0}, support::params(), {}).is_idle());
}

TEST(DecodeAction, BatteryScaledByRate) {
    auto p = support::params(20);
    EXPECT_EQ(decode_action({0, 0, 0.5}, p, {}).battery_delta, kwh(10));
    EXPECT_EQ(decode_action({0, 0, -1}, p, {}).battery_delta, kwh(-20));
}

TEST(DecodeAction, RejectsOutOfRange) {
    EXPECT_THROW(decode_action({1.01, 0, 0}, support::params(), {}), std::invalid_argument);
    EXPECT_THROW(decode_action({0, std::nan(""), 0}, support::params(), {}), std::invalid_argument);
}

TEST(DecodeAction, EveryPointIsLegal) {
    std::mt19937_64 rng(8);
    const auto p = support::params(10, 25);
    market::MarketLimits limits{15.0, 22.79, p.max_bid_quantity};
    for (int i = 0; i < 100000; ++i) {
        auto a = decode_action(support::random_action(rng), p, {});
        ASSERT_LE(std::abs(a.battery_delta.value()), p.max_charge_rate.value());
        if (auto o = a.order(0)) ASSERT_NO_THROW(market::validate_order(*o, limits));
    }
}

TEST(ObservationScaler, NormalizesIntoUnitRange) {
    ObservationScaler s({100}, {30}, {10}, {15, 22.79});
    grid::Observation o{kwh(50), kwh(15), kwh(10), 22.79, 15.0};
    auto v = s.normalize(0, o);
    EXPECT_DOUBLE_EQ(v[0], 0.5);
    EXPECT_DOUBLE_EQ(v[1], 0.5);
    EXPECT_DOUBLE_EQ(v[2], 1.0);
    EXPECT_DOUBLE_EQ(v[3], 1.0);
    EXPECT_DOUBLE_EQ(v[4], 0.0);
}

TEST(OuNoise, FixedPointWithoutDiffusion) {
    std::mt19937_64 rng(1);
    std::vector<double> x{0.0, 0.0};
    ou_noise_step(x, {0.15, 0.0, 0.0}, rng);
    EXPECT_EQ(x, (std::vector<double>{0.0, 0.0}));
}

TEST(OuNoise, GeometricDecayWithoutDiffusion) {
    std::mt19937_64 rng(1);
    std::vector<double> x{1.0};
    for (int k = 1; k <= 10; ++k) {
        ou_noise_step(x, {0.15, 0.0, 0.0}, rng);
        EXPECT_NEAR(x[0], std::pow(0.85, k), 1e-15);
    }
}

TEST(OuNoise, StationaryStandardDeviation) {
    const OuParams p{0.15, 0.0, 0.2};
    OrnsteinUhlenbeck ou(1, p, 99);
    const int burn = 1000, n = 100000;
    double sum = 0, sq = 0;
    for (int i = 0; i < burn + n; ++i) {
        const double x = ou.sample()[0];
        if (i < burn) continue;
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    const double expected = p.sigma / std::sqrt(2 * p.theta - p.theta * p.theta);
    EXPECT_NEAR(sd, expected, 0.05 * expected);
}

TEST(OuNoise, SeedDeterminism) {
    OrnsteinUhlenbeck a(3, {}, 4), b(3, {}, 4);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(a.sample(), b.sample());
    a.reset();
    EXPECT_EQ(a.state(), (std::vector<double>{0, 0, 0}));
}

TEST(NoiseSchedule, LinearDecayToZero) {
    EXPECT_DOUBLE_EQ(noise_scale(0, 1.0, 1000), 1.0);
    EXPECT_DOUBLE_EQ(noise_scale(500, 1.0, 1000), 0.5);
    EXPECT_DOUBLE_EQ(noise_scale(1000, 1.0, 1000), 0.0);
    EXPECT_DOUBLE_EQ(noise_scale(1400, 1.0, 1000), 0.0);
}

TEST(DeriveSeed, DistinctStreams) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(ReplayBuffer, FifoEviction) {
    ReplayBuffer buf(3, 1, 1);
    for (int k = 0; k < 5; ++k) {
        Transition t{std::vector<double>(5, k), std::vector<double>(3, k), {double(k)}, std::vector<double>(5, k)};
        buf.add(t);
    }
    EXPECT_EQ(buf.size(), 3u);
    std::vector<double> rewards;
    for (std::size_t i = 0; i < 3; ++i) rewards.push_back(buf.at(i).rewards[0]);
    std::sort(rewards.begin(), rewards.end());
    EXPECT_EQ(rewards, (std::vector<double>{2, 3, 4}));
}

TEST(ReplayBuffer, RoundTripsTransitions) {
    ReplayBuffer buf(10, 2, 1);
    Transition t;
    for (int i = 0; i < 10; ++i) t.states.push_back(i), t.next_states.push_back(100 + i);
    for (int i = 0; i < 6; ++i) t.actions.push_back(-i);
    t.rewards = {7, 8};
    buf.add(t);
    auto back = buf.at(0);
    EXPECT_EQ(back.states, t.states);
    EXPECT_EQ(back.actions, t.actions);
    EXPECT_EQ(back.rewards, t.rewards);
    EXPECT_EQ(back.next_states, t.next_states);
}

TEST(ReplayBuffer, RejectsMalformedTransition) {
    ReplayBuffer buf(10, 2, 1);
    EXPECT_THROW(buf.add(Transition{}), std::invalid_argument);
    EXPECT_THROW(buf.sample_indices(1), std::invalid_argument);
}

TEST(ReplayBuffer, SamplesWithoutReplacementAndUniformly) {
    const std::size_t n = 50, batch = 10, rounds = 20000;
    ReplayBuffer buf(n, 1, 3);
    for (std::size_t k = 0; k < n; ++k) buf.add({std::vector<double>(5), std::vector<double>(3), {0}, std::vector<double>(5)});
    std::vector<double> counts(n, 0);
    for (std::size_t r = 0; r < rounds; ++r) {
        auto idx = buf.sample_indices(batch);
        std::sort(idx.begin(), idx.end());
        ASSERT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
        for (auto i : idx) counts[i] += 1;
    }
    const double expected = double(rounds * batch) / n;
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 49 degrees of freedom: the 0.99 quantile is 74.92.
    EXPECT_LT(chi2, 74.92);
}

TEST(CriticLayout, Lengths) {
    EXPECT_EQ(CriticLayout(CriticMode::Centralized, 4, 0).input_size(), 26);
    EXPECT_EQ(CriticLayout(CriticMode::Centralized, 1, 0).input_size(), 8);
    for (std::size_t n = 1; n <= 6; ++n) EXPECT_EQ(CriticLayout(CriticMode::Independent, n, n - 1).input_size(), 8);
}

TEST(CriticLayout, CentralizedOrdering) {
    std::vector<std::array<double, kStateSize>> s{{1, 2, 3, 0.9, 0.8}, {4, 5, 6, 0.9, 0.8}};
    std::vector<NormalizedAction> a{{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
    nn::Vector v = critic_input(CriticMode::Centralized, 1, s, a);
    std::vector<double> got(v.data(), v.data() + v.size());
    EXPECT_EQ(got, (std::vector<double>{1, 2, 3, 4, 5, 6, 0.9, 0.8, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
    EXPECT_EQ(CriticLayout(CriticMode::Centralized, 2, 1).action_row(1), 11);
}

TEST(CriticLayout, IndependentSeesOnlyOwner) {
    std::vector<std::array<double, kStateSize>> s{{1, 2, 3, 0.9, 0.8}, {4, 5, 6, 0.9, 0.8}};
    std::vector<NormalizedAction> a{{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
    nn::Vector v = critic_input(CriticMode::Independent, 1, s, a);
    std::vector<double> got(v.data(), v.data() + v.size());
    EXPECT_EQ(got, (std::vector<double>{4, 5, 6, 0.9, 0.8, 0.4, 0.5, 0.6}));
}

TEST(CriticLayout, PermutingAgentsPermutesBlocks) {
    std::vector<std::array<double, kStateSize>> s{{1, 2, 3, 0.9, 0.8}, {4, 5, 6, 0.9, 0.8}};
    std::vector<NormalizedAction> a{{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
    std::vector<std::array<double, kStateSize>> sp{s[1], s[0]};
    std::vector<NormalizedAction> ap{a[1], a[0]};
    nn::Vector v = critic_input(CriticMode::Centralized, 0, s, a);
    nn::Vector w = critic_input(CriticMode::Centralized, 1, sp, ap);
    EXPECT_EQ(v.segment(0, 3), w.segment(3, 3));
    EXPECT_EQ(v.segment(8, 3), w.segment(11, 3));
}

TEST(CriticLayout, BatchBuildMatchesSingleSample) {
    Batch b = random_batch(3, 5, 1);
    for (auto mode : {CriticMode::Centralized, CriticMode::Independent}) {
        CriticLayout layout(mode, 3, 2);
        nn::Matrix m = layout.build(b.states, b.actions);
        for (int c = 0; c < 5; ++c) {
            std::vector<std::array<double, kStateSize>> s(3);
            std::vector<NormalizedAction> a(3);
            for (int i = 0; i < 3; ++i) {
                for (int k = 0; k < kStateSize; ++k) s[i][k] = b.states(i * kStateSize + k, c);
                a[i] = NormalizedAction::from(b.actions.col(c).data() + i * kActionSize);
            }
            EXPECT_EQ(nn::Vector(m.col(c)), critic_input(mode, 2, s, a));
        }
    }
}

TEST(Trainer, TargetQArithmetic) {
    Trainer t(tiny_config(), tiny_env(2));
    Batch b = random_batch(2, 6, 2);
    b.rewards.setOnes();
    set_constant_output(t.agents()[0].target_critic, 2.0);
    nn::Matrix y = t.compute_target_q(0, b);
    for (int c = 0; c < 6; ++c) EXPECT_DOUBLE_EQ(y(0, c), 2.6);

    auto cfg = tiny_config();
    cfg.gamma = {0.0, 0.0};
    Trainer zero(cfg, tiny_env(2));
    nn::Matrix y0 = zero.compute_target_q(1, b);
    for (int c = 0; c < 6; ++c) EXPECT_DOUBLE_EQ(y0(0, c), b.rewards(1, c));
}

TEST(Trainer, CriticLossMatchesDefinitionAndDecreases) {
    Trainer t(tiny_config(), tiny_env(2));
    Batch b = random_batch(2, 32, 3);
    auto& ag = t.agents()[0];
    nn::Matrix y = t.compute_target_q(0, b);
    nn::Matrix q = ag.critic.forward(ag.layout.build(b.states, b.actions));
    const double expected = (q - y).squaredNorm() / 32.0;
    // Freeze targets so y stays fixed while the critic fits it.
    const double first = t.update_critic(0, b);
    EXPECT_NEAR(first, expected, 1e-12);
    double prev = first;
    int decreases = 0;
    for (int k = 0; k < 300; ++k) {
        const double loss = t.update_critic(0, b);
        if (k < 50) decreases += loss < prev;
        prev = loss;
    }
    EXPECT_GE(decreases, 45);
    EXPECT_LT(prev, 0.5 * first);
}

TEST(Trainer, CriticAtTargetHasZeroLoss) {
    auto cfg = tiny_config();
    cfg.gamma = {0.0, 0.0};
    Trainer t(cfg, tiny_env(2));
    Batch b = random_batch(2, 8, 4);
    b.rewards.setConstant(0.25);
    set_constant_output(t.agents()[1].critic, 0.25);
    const auto before = t.agents()[1].critic.layers().back().bias;
    EXPECT_NEAR(t.update_critic(1, b), 0.0, 1e-20);
    EXPECT_LT((t.agents()[1].critic.layers().back().bias - before).norm(), 1e-9);
}

TEST(Trainer, ConstantCriticLeavesActorUnchanged) {
    Trainer t(tiny_config(), tiny_env(2));
    set_constant_output(t.agents()[0].critic, 3.0);
    const auto before = t.agents()[0].actor.layers();
    Batch b = random_batch(2, 8, 5);
    t.update_actor(0, b);
    for (std::size_t k = 0; k < before.size(); ++k) {
        EXPECT_EQ(t.agents()[0].actor.layers()[k].weights, before[k].weights);
    }
}

TEST(Trainer, ActorFollowsCriticSlope) {
    // Critic Q = w * battery action of agent 0, w > 0.
    Trainer t(tiny_config(), tiny_env(1));
    auto& ag = t.agents()[0];
    set_constant_output(ag.critic, 0.0);
    auto& first = ag.critic.layers().front();
    auto& last = ag.critic.layers().back();
    // route the battery component (row 7) through identity-like ReLU units
    first.weights(0, 7) = 1.0;
    first.bias(0) = 2.0;
    ag.critic.layers()[1].weights(0, 0) = 1.0;
    last.weights(0, 0) = 1.5;
    Batch b = random_batch(1, 16, 6);
    auto battery_out = [&] { return ag.actor.forward(nn::Matrix(b.states.topRows(5))).row(2).mean(); };
    double prev = battery_out();
    for (int k = 0; k < 200; ++k) {
        t.update_actor(0, b);
        const double now = battery_out();
        ASSERT_GT(now, prev);
        prev = now;
    }
    EXPECT_GT(prev, 0.5);
}

TEST(Trainer, ActStaysInBoundsAndIsNoiseFreeAtZeroScale) {
    Trainer t(tiny_config(), tiny_env(2));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int k = 0; k < 20000; ++k) {
        std::array<double, kStateSize> s{u(rng), u(rng), u(rng), u(rng), u(rng)};
        auto a = t.act(k % 2, s, 5.0);
        for (double c : a.as_array()) ASSERT_TRUE(c >= -1.0 && c <= 1.0);
    }
    std::array<double, kStateSize> s{0.1, 0.2, 0.3, 1.0, 0.5};
    auto a = t.act(0, s, 0.0);
    nn::Vector direct = t.agents()[0].actor.forward(nn::Vector(Eigen::Map<nn::Vector>(s.data(), 5)));
    EXPECT_DOUBLE_EQ(a.price, direct(0));
    EXPECT_DOUBLE_EQ(a.battery, direct(2));
}

TEST(Trainer, ZeroEpisodesLeavesNetworksUntouched) {
    auto cfg = tiny_config();
    cfg.episodes = 0;
    Trainer t(cfg, tiny_env(2));
    const auto before = t.agents()[1].actor.layers()[0].weights;
    EXPECT_TRUE(t.train().empty());
    EXPECT_EQ(t.agents()[1].actor.layers()[0].weights, before);
}

TEST(Trainer, TargetsTrackOnlineExactly) {
    auto cfg = tiny_config();
    cfg.tau = 0.05;
    Trainer t(cfg, tiny_env(2));
    t.begin_episode();
    int learned = 0;
    for (std::size_t step = 0; step < cfg.horizon; ++step) {
        std::vector<std::vector<nn::DenseLayer>> prev;
        for (const auto& a : t.agents()) prev.push_back(a.target_critic.layers());
        auto out = t.step();
        if (!out.learned) continue;
        ++learned;
        for (std::size_t i = 0; i < t.agents().size(); ++i) {
            const auto& online = t.agents()[i].critic.layers();
            const auto& target = t.agents()[i].target_critic.layers();
            for (std::size_t k = 0; k < online.size(); ++k) {
                nn::Matrix expected = cfg.tau * online[k].weights + (1 - cfg.tau) * prev[i][k].weights;
                const double scale = std::max(1.0, expected.cwiseAbs().maxCoeff());
                ASSERT_LE((target[k].weights - expected).cwiseAbs().maxCoeff(), 4 * kEps * scale);
            }
        }
    }
    EXPECT_GT(learned, 5);
}

TEST(Trainer, SameSeedSameRun) {
    auto run = [] {
        Trainer t(tiny_config(), tiny_env(3));
        auto metrics = t.train();
        std::vector<double> out;
        for (const auto& m : metrics) {
            for (const auto& a : m.agents) out.push_back(a.mean_reward);
        }
        const auto& w = t.agents()[2].critic.layers()[0].weights;
        out.insert(out.end(), w.data(), w.data() + w.size());
        return out;
    };
    EXPECT_EQ(run(), run());
}

TEST(Trainer, SingleAgentIndependentEqualsCentralized) {
    Trainer central(tiny_config(CriticMode::Centralized), tiny_env(1));
    Trainer independent(tiny_config(CriticMode::Independent), tiny_env(1));
    central.train();
    independent.train();
    for (std::size_t k = 0; k < central.agents()[0].critic.layers().size(); ++k) {
        EXPECT_EQ(central.agents()[0].critic.layers()[k].weights, independent.agents()[0].critic.layers()[k].weights);
        EXPECT_EQ(central.agents()[0].target_actor.layers().back().bias,
                  independent.agents()[0].target_actor.layers().back().bias);
    }
}

TEST(Trainer, IndependentCriticsHaveEightInputs) {
    Trainer t(tiny_config(CriticMode::Independent), tiny_env(4));
    for (const auto& a : t.agents()) EXPECT_EQ(a.critic.input_size(), 8);
    Trainer c(tiny_config(), tiny_env(4));
    for (const auto& a : c.agents()) EXPECT_EQ(a.critic.input_size(), 26);
}

TEST(Trainer, CheckpointRoundTrip) {
    Trainer t(tiny_config(), tiny_env(2));
    t.train();
    const auto dir = std::filesystem::temp_directory_path() / "microtrade_ckpt_test";
    std::filesystem::remove_all(dir);
    save_checkpoint(dir, t.agents());
    for (const char* stem : {"actor_1", "critic_1", "target_actor_0", "target_critic_0"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / (std::string(stem) + ".mtnn")));
    }
    auto actors = load_actors(dir, 2);
    EXPECT_EQ(actors[1].layers()[0].weights, t.agents()[1].actor.layers()[0].weights);
    EXPECT_THROW(load_actors(dir, 3), std::runtime_error);
    std::filesystem::remove_all(dir);
}

TEST(Evaluation, DecompositionSumsToOverallAndIsParallelInvariant) {
    Trainer t(tiny_config(), tiny_env(3));
    t.train();
    const auto& env = t.environment();
    std::vector<nn::DenseNetwork> actors;
    for (const auto& a : t.agents()) actors.push_back(a.actor);
    ActorPolicy policy(actors, t.scaler(), env.config().microgrids, {});
    auto profiles = std::make_shared<const grid::ExogenousProfiles>(env.profiles());
    EvaluationOptions opt;
    opt.episodes = 6;
    opt.horizon = 24;
    auto serial = evaluate(env.config(), profiles, policy, opt);
    opt.parallel = 3;
    auto parallel = evaluate(env.config(), profiles, policy, opt);
    ASSERT_EQ(serial.slots, 144u);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& m = serial.totals[i];
        EXPECT_EQ(m.overall, m.selling - m.wholesale - m.buying - m.penalty);
        EXPECT_EQ(m.overall, parallel.totals[i].overall);
        EXPECT_EQ(serial.episode_reward[i], parallel.episode_reward[i]);
        const auto& b = serial.breakdown[i];
        EXPECT_NEAR(b.overall, b.selling - b.wholesale - b.buying - b.penalty, 1e-9);
    }
    EXPECT_EQ(serial.clearing_prices, parallel.clearing_prices);
    for (const auto& p : serial.clearing_prices) {
        if (p) EXPECT_TRUE(*p >= 15.0 && *p <= 22.79);
    }
}

#include <gtest/gtest.h>

#include <random>

#include "../support/fixtures.hpp"
#include "microtrade/grid/environment.hpp"
#include "microtrade/grid/microgrid.hpp"
#include "microtrade/marl/action_codec.hpp"

using namespace microtrade;
using namespace microtrade::grid;

namespace {

MicrogridParams plain(double capacity, double beta_c, double beta_d) {
    MicrogridParams p;
    p.panel_area = 1000;
    p.conversion_efficiency = 0.2;
    p.battery_capacity = kwh(capacity);
    p.charge_efficiency = beta_c;
    p.discharge_efficiency = beta_d;
    p.max_charge_rate = kwh(capacity);
    return p;
}

MicrogridState at_level(double b) { return {kwh(b), {}, {}}; }

// Wholesale purchase plus the clamp residual: both sides of the energy balance.
void expect_balance(const SettlementRecord& r) {
    const Energy supply = r.generation + r.discharged + r.cleared_buy + r.wholesale_energy;
    const Energy demand = r.load + r.charged + r.delivered + r.wasted_energy;
    EXPECT_EQ(supply, demand);
}

}  // namespace

TEST(PvGeneration, DirectProduct) {
    MicrogridParams p = plain(100, 0.9, 0.9);
    EXPECT_EQ(pv_generation(p, 0.5), kwh(100));
    EXPECT_EQ(pv_generation(p, 0.0), Energy{});
    p.panel_area = 1;
    p.conversion_efficiency = 1;
    EXPECT_EQ(pv_generation(p, 1.0), kwh(1));
}

TEST(PvGeneration, RejectsNegativeRadiation) {
    EXPECT_THROW(pv_generation(plain(100, 0.9, 0.9), -0.1), std::invalid_argument);
}

TEST(Battery, ChargeWithLoss) {
    auto out = apply_battery(at_level(50), plain(100, 0.9, 0.9), kwh(10));
    EXPECT_EQ(out.new_level, kwh(59));
    EXPECT_EQ(out.charged, kwh(10));
    EXPECT_EQ(out.discharged, Energy{});
}

TEST(Battery, DischargeClippedAtEmpty) {
    auto out = apply_battery(at_level(5), plain(100, 0.9, 0.9), kwh(-10));
    EXPECT_EQ(out.discharged, kwh(4.5));
    EXPECT_EQ(out.new_level, Energy{});
}

TEST(Battery, FullBatteryRejectsCharge) {
    auto out = apply_battery(at_level(100), plain(100, 0.9, 0.9), kwh(10));
    EXPECT_EQ(out.charged, Energy{});
    EXPECT_EQ(out.new_level, kwh(100));
}

TEST(Battery, ChargeClippedAtCapacity) {
    auto out = apply_battery(at_level(95), plain(100, 0.9, 0.9), kwh(20));
    EXPECT_LE(out.new_level, kwh(100));
    EXPECT_GE(out.new_level, kwh(99.999));
    EXPECT_LT(out.charged, kwh(20));
}

TEST(Battery, RateLimit) {
    MicrogridParams p = plain(100, 0.9, 0.9);
    p.max_charge_rate = kwh(5);
    EXPECT_EQ(apply_battery(at_level(50), p, kwh(10)).charged, kwh(5));
    EXPECT_EQ(apply_battery(at_level(50), p, kwh(-10)).discharged, kwh(5));
}

TEST(Battery, FuzzedBounds) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> eff(0.5, 0.99), cap(1, 200), frac(0, 1), req(-250, 250);
    for (int i = 0; i < 20000; ++i) {
        MicrogridParams p = plain(cap(rng), eff(rng), eff(rng));
        auto s = at_level(p.battery_capacity.value() * frac(rng));
        auto out = apply_battery(s, p, kwh(req(rng)));
        ASSERT_GE(out.new_level, Energy{});
        ASSERT_LE(out.new_level, p.battery_capacity);
        ASSERT_FALSE(out.charged.is_positive() && out.discharged.is_positive());
        ASSERT_LE(out.charged, p.max_charge_rate);
        ASSERT_LE(out.discharged, p.max_charge_rate);
    }
}

TEST(DeliveredEnergy, Examples) {
    EXPECT_EQ(delivered_energy(kwh(5), kwh(20), {}, kwh(10), kwh(3)), kwh(5));
    EXPECT_EQ(delivered_energy(kwh(5), kwh(13), {}, kwh(10), {}), kwh(3));
    EXPECT_EQ(delivered_energy({}, kwh(20), {}, kwh(1), {}), Energy{});
    EXPECT_EQ(delivered_energy(kwh(5), kwh(1), {}, kwh(10), {}), Energy{});
}

TEST(Settle, UnderDeliveryPenalty) {
    PhysicalFlows f;
    f.generation = kwh(13);
    f.load = kwh(10);
    f.committed_sale = kwh(5);
    f.delivered = kwh(3);
    auto r = settle(f, {17.5, 22.79});
    EXPECT_EQ(r.penalty, cents(10.58));
    EXPECT_EQ(r.sell_revenue, cents(52.5));
    EXPECT_EQ(r.reward, r.sell_revenue - r.wholesale_cost - r.buy_cost - r.penalty);
    expect_balance(r);
}

TEST(Settle, FulfilledContractHasNoPenalty) {
    PhysicalFlows f;
    f.generation = kwh(20);
    f.load = kwh(10);
    f.committed_sale = kwh(5);
    f.delivered = kwh(5);
    auto r = settle(f, {17.5, 22.79});
    EXPECT_EQ(r.penalty, Money{});
    EXPECT_EQ(r.wasted_energy, kwh(5));
    EXPECT_EQ(r.wholesale_energy, Energy{});
    expect_balance(r);
}

TEST(Settle, BuyerWithWholesaleTopUp) {
    PhysicalFlows f;
    f.generation = kwh(2);
    f.load = kwh(10);
    f.cleared_buy = kwh(4);
    auto r = settle(f, {17.5, 22.79});
    EXPECT_EQ(r.buy_cost, cents(70));
    EXPECT_EQ(r.wholesale_energy, kwh(4));
    EXPECT_EQ(r.wholesale_cost, cents(4 * 22.79));
    EXPECT_EQ(r.reward, -(cents(70) + cents(4 * 22.79)));
    expect_balance(r);
}

TEST(Settle, PenaltyWeightNeverNegative) {
    PhysicalFlows f;
    f.committed_sale = kwh(2);
    f.load = kwh(1);
    auto r = settle(f, {25.0, 22.79});
    EXPECT_EQ(r.penalty, Money{});
}

TEST(Settle, RejectsInconsistentInputs) {
    PhysicalFlows f;
    f.committed_sale = kwh(2);
    f.delivered = kwh(3);
    EXPECT_THROW(settle(f, {17.5, 22.79}), std::invalid_argument);
    PhysicalFlows both;
    both.committed_sale = kwh(1);
    both.cleared_buy = kwh(1);
    EXPECT_THROW(settle(both, {17.5, 22.79}), std::invalid_argument);
    PhysicalFlows no_price;
    no_price.cleared_buy = kwh(1);
    EXPECT_THROW(settle(no_price, {std::nullopt, 22.79}), std::invalid_argument);
    PhysicalFlows battery;
    battery.charged = kwh(1);
    battery.discharged = kwh(1);
    EXPECT_THROW(settle(battery, {std::nullopt, 22.79}), std::invalid_argument);
}

namespace {

std::shared_ptr<const ExogenousProfiles> flat_profiles(std::vector<double> radiation, std::vector<double> load,
                                                       std::size_t length = 24) {
    ExogenousProfiles p;
    for (std::size_t i = 0; i < radiation.size(); ++i) {
        p.radiation.emplace_back(length, radiation[i]);
        p.load.emplace_back(length, load[i]);
    }
    return std::make_shared<const ExogenousProfiles>(std::move(p));
}

}  // namespace

TEST(Environment, InitialObservation) {
    EnvironmentConfig c;
    c.microgrids = {plain(100, 0.9, 0.9)};
    Environment env(c, flat_profiles({0.1}, {5}));
    auto o = env.observe(0);
    EXPECT_EQ(o.battery_level, kwh(50));
    EXPECT_EQ(o.last_generation, Energy{});
    EXPECT_EQ(o.last_load, Energy{});
    EXPECT_DOUBLE_EQ(o.wholesale_price, 22.79);
    EXPECT_DOUBLE_EQ(o.last_clearing_price, 22.79);
}

TEST(Environment, IdleWithoutGenerationPaysWholesaleForLoad) {
    EnvironmentConfig c;
    c.microgrids = {plain(100, 0.9, 0.9), plain(50, 0.9, 0.9)};
    Environment env(c, flat_profiles({0, 0}, {4, 7}));
    std::vector<ScheduleAction> idle(2);
    auto step = env.step(idle);
    EXPECT_EQ(step.records[0].reward, -cents(22.79 * 4));
    EXPECT_EQ(step.records[1].reward, -cents(22.79 * 7));
}

TEST(Environment, SellerAndBuyerTrade) {
    EnvironmentConfig c;
    c.microgrids = {plain(100, 0.9, 0.9), plain(100, 0.9, 0.9)};
    // microgrid 0: 1000*0.2*0.05 = 10 kWh generation against 2 kWh load
    Environment env(c, flat_profiles({0.05, 0.0}, {2, 6}));
    std::vector<ScheduleAction> a(2);
    a[0].role = SellerRole{16.0, kwh(5)};
    a[1].role = BuyerRole{20.0, kwh(4)};
    auto step = env.step(a);
    ASSERT_TRUE(step.clearing.traded());
    EXPECT_DOUBLE_EQ(*step.clearing.clearing_price, 18.0);
    EXPECT_EQ(step.records[0].committed_sale, kwh(4));
    EXPECT_EQ(step.records[0].delivered, kwh(4));
    EXPECT_EQ(step.records[0].sell_revenue, cents(72));
    EXPECT_EQ(step.records[1].buy_cost, cents(72));
    EXPECT_EQ(step.records[1].wholesale_energy, kwh(2));
    EXPECT_EQ(step.records[0].wasted_energy, kwh(4));
    for (const auto& r : step.records) expect_balance(r);
    EXPECT_DOUBLE_EQ(env.observe(1).last_clearing_price, 18.0);
}

TEST(Environment, FullBatterySellerWastesSurplus) {
    EnvironmentConfig c;
    c.microgrids = {plain(100, 0.9, 0.9)};
    c.initial_battery_fraction = 1.0;
    Environment env(c, flat_profiles({0.1}, {1}));
    std::vector<ScheduleAction> a(1);
    a[0].battery_delta = kwh(30);
    auto step = env.step(a);
    EXPECT_EQ(step.records[0].charged, Energy{});
    EXPECT_EQ(step.records[0].wasted_energy, kwh(19));
    expect_balance(step.records[0]);
}

TEST(Environment, ClearingPriceCarriesForwardAfterNoTrade) {
    EnvironmentConfig c;
    c.microgrids = {plain(100, 0.9, 0.9), plain(100, 0.9, 0.9)};
    Environment env(c, flat_profiles({0.05, 0.0}, {2, 6}));
    std::vector<ScheduleAction> a(2);
    a[0].role = SellerRole{16.0, kwh(5)};
    a[1].role = BuyerRole{20.0, kwh(4)};
    env.step(a);
    a[1].role = BuyerRole{15.5, kwh(4)};
    auto step = env.step(a);
    EXPECT_FALSE(step.clearing.traded());
    EXPECT_DOUBLE_EQ(env.observe(0).last_clearing_price, 18.0);
}

TEST(Environment, ObservationsTrackPreviousSlot) {
    EnvironmentConfig c;
    c.microgrids = {plain(100, 0.9, 0.9)};
    ExogenousProfiles p;
    p.radiation = {{0.0, 0.02, 0.04, 0.0}};
    p.load = {{1.0, 2.0, 3.0, 4.0}};
    Environment env(c, std::make_shared<const ExogenousProfiles>(p));
    std::vector<ScheduleAction> a(1);
    a[0].battery_delta = kwh(-2);
    for (int t = 0; t < 3; ++t) {
        auto step = env.step(a);
        auto o = env.observe(0);
        EXPECT_EQ(o.last_generation, kwh(1000 * 0.2 * p.radiation[0][t]));
        EXPECT_EQ(o.last_load, kwh(p.load[0][t]));
        EXPECT_EQ(o.battery_level, step.records[0].battery_level);
    }
}

TEST(Environment, InvalidOrderBecomesIdle) {
    EnvironmentConfig c;
    c.microgrids = {plain(100, 0.9, 0.9), plain(100, 0.9, 0.9)};
    Environment env(c, flat_profiles({0.05, 0.0}, {2, 6}));
    std::vector<ScheduleAction> a(2);
    a[0].role = SellerRole{16.0, kwh(50)};  // above max bid quantity
    a[1].role = BuyerRole{20.0, kwh(4)};
    auto step = env.step(a);
    EXPECT_EQ(step.rejected_orders, std::vector<int>{0});
    EXPECT_FALSE(step.clearing.traded());
}

TEST(Environment, MarketDisabledReducesToWholesaleCost) {
    auto cfg = support::four_grid_config();
    cfg.market_enabled = false;
    Environment env(cfg, support::random_profiles(4, 200, 1));
    std::mt19937_64 rng(2);
    for (int t = 0; t < 168; ++t) {
        std::vector<ScheduleAction> a;
        for (std::size_t i = 0; i < 4; ++i) a.push_back(marl::decode_action(support::random_action(rng), cfg.microgrids[i], {}));
        for (const auto& r : env.step(a).records) {
            ASSERT_EQ(r.reward, -r.wholesale_cost);
            ASSERT_EQ(r.buy_cost + r.sell_revenue + r.penalty, Money{});
        }
    }
}

TEST(Environment, DeterministicGivenSeedAndActions) {
    auto cfg = support::four_grid_config(11);
    cfg.outage_probability = 0.2;
    auto profiles = support::random_profiles(4, 300, 9);
    auto run = [&] {
        Environment env(cfg, profiles);
        env.reset(episode_start(1, 168, profiles->length()));
        std::mt19937_64 rng(4);
        std::vector<Money> rewards;
        for (int t = 0; t < 168; ++t) {
            std::vector<ScheduleAction> a;
            for (std::size_t i = 0; i < 4; ++i) a.push_back(marl::decode_action(support::random_action(rng), cfg.microgrids[i], {}));
            for (const auto& r : env.step(a).records) rewards.push_back(r.reward);
        }
        return rewards;
    };
    EXPECT_EQ(run(), run());
}

TEST(Environment, OutageZeroesGeneration) {
    EnvironmentConfig c;
    c.microgrids = {plain(100, 0.9, 0.9)};
    c.outage_probability = 1.0;
    Environment env(c, flat_profiles({0.5}, {1}));
    std::vector<ScheduleAction> a(1);
    EXPECT_EQ(env.step(a).records[0].generation, Energy{});
}

TEST(Environment, EpisodeWindowsWrap) {
    EXPECT_EQ(episode_start(0, 168, 8760), 0u);
    EXPECT_EQ(episode_start(2, 168, 8760), 336u);
    EXPECT_EQ(episode_start(53, 168, 8760), (53u * 168u) % 8760u);
    EXPECT_EQ(episode_start(3, 168, 200), (3u * 168u) % 200u);
}

TEST(Environment, RejectsMismatchedSetup) {
    auto cfg = support::four_grid_config();
    EXPECT_THROW(Environment(cfg, support::random_profiles(3, 10, 1)), std::invalid_argument);
    Environment env(cfg, support::random_profiles(4, 10, 1));
    std::vector<ScheduleAction> three(3);
    EXPECT_THROW(env.step(three), std::invalid_argument);
}

TEST(EnvironmentProperties, FuzzedAccounting) {
    std::mt19937_64 rng(123);
    auto cfg = support::four_grid_config(17);
    cfg.outage_probability = 0.05;
    auto profiles = support::random_profiles(4, 500, 5);
    Environment env(cfg, profiles);
    for (int episode = 0; episode < 200; ++episode) {
        env.reset(episode_start(static_cast<std::size_t>(episode), 48, profiles->length()));
        for (int t = 0; t < 48; ++t) {
            std::vector<ScheduleAction> a;
            for (std::size_t i = 0; i < 4; ++i) a.push_back(marl::decode_action(support::random_action(rng), cfg.microgrids[i], {}));
            auto step = env.step(a);
            for (std::size_t i = 0; i < 4; ++i) {
                const auto& r = step.records[i];
                ASSERT_EQ(r.reward, r.sell_revenue - r.wholesale_cost - r.buy_cost - r.penalty);
                ASSERT_GE(r.penalty, Money{});
                ASSERT_LE(r.delivered, r.committed_sale);
                if (r.delivered == r.committed_sale) ASSERT_EQ(r.penalty, Money{});
                ASSERT_GE(r.battery_level, Energy{});
                ASSERT_LE(r.battery_level, cfg.microgrids[i].battery_capacity);
                const Energy supply = r.generation + r.discharged + r.cleared_buy + r.wholesale_energy;
                const Energy demand = r.load + r.charged + r.delivered + r.wasted_energy;
                ASSERT_EQ(supply, demand);
            }
        }
    }
}

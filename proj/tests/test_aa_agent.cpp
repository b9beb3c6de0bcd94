#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qrlbench/aa_agent.hpp"

using namespace qrlbench;
using namespace qrlbench::aa;

TEST(ActionRegister, UniformStartSamplesUniformly) {
    AaAgent agent(9, 4, AaConfig{});
    Rng rng(1);
    qsim::CostLedger ledger;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(agent.select_action(0, rng, ledger))];
    for (int c : counts) EXPECT_NEAR(c / 10000.0, 0.25, 0.02);
    EXPECT_EQ(ledger.circuit_executions(), 10000u);
    // sampling never collapses the register
    for (double p : agent.register_at(0).probabilities()) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(ActionRegister, CertainActionAlwaysReturned) {
    AaAgent agent(9, 4, AaConfig{});
    grover_update(agent.register_at(3), 2, 1);
    Rng rng(2);
    qsim::CostLedger ledger;
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(agent.select_action(3, rng, ledger), 2);
}

TEST(ActionRegister, SeededSamplingIsDeterministic) {
    AaAgent agent(9, 4, AaConfig{});
    Rng a(9), b(9);
    qsim::CostLedger la, lb;
    for (int i = 0; i < 200; ++i) EXPECT_EQ(agent.select_action(1, a, la), agent.select_action(1, b, lb));
}

TEST(ComputeL, Examples) {
    EXPECT_EQ(compute_L(1.0, 0.5, 1.2), 1);
    EXPECT_EQ(compute_L(0.0, 1.0, 5.0), 0);
    EXPECT_EQ(compute_L(0.6, 1.0, 0.0), 0);
    EXPECT_EQ(compute_L(2.0, 1.0, 0.0), 2);
    EXPECT_EQ(compute_L(2.0, -0.075, 0.5), 0);
    EXPECT_EQ(compute_L(2.0, -0.075, 0.7), 1);
    EXPECT_EQ(compute_L(5.0, -1.0, 0.0), 0);
    EXPECT_EQ(compute_L(1e9, 1.0, 1.0), 1 << 20);
    EXPECT_THROW(compute_L(2.0, std::nan(""), 0.0), ArgumentError);
}

TEST(Grover, SingleIterationMarksActionWithCertainty) {
    ActionRegister reg;
    grover_update(reg, 1, 1);
    EXPECT_NEAR(reg.probability(1), 1.0, 1e-12);
    EXPECT_EQ(reg.iterations(), 1);
}

TEST(Grover, ZeroIterationsLeaveRegisterUnchanged) {
    ActionRegister reg;
    grover_update(reg, 1, 0);
    const ActionRegister fresh;
    const auto a = reg.state().amplitudes();
    const auto b = fresh.state().amplitudes();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    EXPECT_THROW(grover_update(reg, 1, -1), ArgumentError);
    EXPECT_THROW(grover_update(reg, 4, 1), IndexError);
}

TEST(Grover, ThreeIterationsOvershoot) {
    ActionRegister reg;
    grover_update(reg, 0, 3);
    EXPECT_NEAR(reg.probability(0), 0.25, 1e-12);
}

TEST(Grover, ClosedFormForFourActions) {
    for (int L = 0; L <= 12; ++L) {
        ActionRegister reg;
        grover_update(reg, 3, L);
        const double want = std::pow(std::sin((2 * L + 1) * std::numbers::pi / 6), 2);
        EXPECT_NEAR(reg.probability(3), want, 1e-9) << L;
    }
}

TEST(Grover, ClosedFormForLargerRegisters) {
    for (int m : {3, 4, 5}) {
        const double theta = std::asin(1.0 / std::sqrt(static_cast<double>(1 << m)));
        for (int L = 0; L <= 8; ++L) {
            ActionRegister reg(m);
            grover_update(reg, 1, L);
            EXPECT_NEAR(reg.probability(1), std::pow(std::sin((2 * L + 1) * theta), 2), 1e-9);
        }
    }
}

TEST(Grover, NormPreservedFromRandomStates) {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<qsim::Amplitude> amps(4);
        double norm = 0.0;
        for (auto& a : amps) {
            a = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            norm += std::norm(a);
        }
        for (auto& a : amps) a /= std::sqrt(norm);
        ActionRegister reg;
        reg.state() = qsim::Statevector::from_amplitudes(amps);
        const int L = static_cast<int>(rng.uniform_index(10));
        grover_update(reg, static_cast<int>(rng.uniform_index(4)), L);
        double total = 0.0;
        for (double p : reg.probabilities()) total += p;
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Grover, CapStopsBeforeDecrease) {
    ActionRegister reg;
    EXPECT_EQ(grover_update_capped(reg, 2, 3), 1);
    EXPECT_NEAR(reg.probability(2), 1.0, 1e-12);
    EXPECT_EQ(reg.iterations(), 1);
    EXPECT_EQ(grover_update_capped(reg, 2, 5), 0);
    // a register already leaning elsewhere still climbs
    ActionRegister other;
    grover_update(other, 0, 1);
    const double before = other.probability(1);
    grover_update_capped(other, 1, 4);
    EXPECT_GE(other.probability(1), before);
}

TEST(Td0, Examples) {
    ValueTable t{{0.0, 0.5}, 0.1, 0.95};
    td0_update(t, {0, 1, -0.075, 1, false, false});
    EXPECT_NEAR(t.v[0], 0.1 * (-0.075 + 0.95 * 0.5), 1e-15);
    ValueTable u{{0.2, 0.5}, 0.1, 0.95};
    td0_update(u, {0, 1, 1.0, 1, true, false});
    EXPECT_NEAR(u.v[0], 0.2 + 0.1 * (1.0 - 0.2), 1e-15);
}

TEST(AaAgent, ZeroGainKeepsPolicyUniform) {
    AaAgent agent(9, 4, AaConfig{0.0, 0.1, 0.95, true});
    Rng rng(0);
    qsim::CostLedger ledger;
    for (int i = 0; i < 50; ++i) agent.observe({0, 1, 1.0, 8, true, false}, i, rng, ledger);
    for (double p : agent.register_at(0).probabilities()) EXPECT_NEAR(p, 0.25, 1e-15);
    EXPECT_GT(agent.values().v[0], 0.9);
}

TEST(AaAgent, ObserveUsesPreUpdateNextValue) {
    AaAgent agent(2, 4, AaConfig{2.0, 0.5, 0.95, false});
    Rng rng(0);
    qsim::CostLedger ledger;
    // V(1) = 0 so L = floor(2 * 0.4) = 0
    agent.observe({0, 3, 0.4, 1, false, false}, 0, rng, ledger);
    EXPECT_EQ(agent.register_at(0).iterations(), 0);
    EXPECT_NEAR(agent.values().v[0], 0.2, 1e-15);
    // terminal reward 1: L = 2 on state 1
    agent.observe({1, 0, 1.0, 0, true, false}, 1, rng, ledger);
    EXPECT_EQ(agent.register_at(1).iterations(), 2);
    EXPECT_NEAR(agent.register_at(1).probability(0), std::pow(std::sin(5 * std::numbers::pi / 6), 2), 1e-12);
}

TEST(AaAgent, ExecutionChargesGroverHistory) {
    AaAgent agent(3, 4, AaConfig{});
    Rng rng(0);
    qsim::CostLedger ledger;
    agent.select_action(0, rng, ledger);
    EXPECT_EQ(ledger.modeled_clock_time(), std::chrono::nanoseconds(1000 * (2 * 30 + 300)));
    grover_update(agent.register_at(1), 0, 2);
    qsim::CostLedger l2;
    agent.select_action(1, rng, l2);
    const auto n1 = 2 + kGroverOneQubitGates * 2;
    const auto n2 = kGroverTwoQubitGates * 2;
    EXPECT_EQ(l2.modeled_clock_time(), std::chrono::nanoseconds(1000 * (static_cast<long>(n1) * 30 + static_cast<long>(n2) * 300 + 300)));
    EXPECT_EQ(agent.qubit_count(), 2);
}

TEST(AaAgent, Validation) {
    EXPECT_THROW(AaAgent(9, 3, AaConfig{}), ConfigError);
    EXPECT_THROW(AaAgent(9, 4, AaConfig{-1.0, 0.1, 0.95, true}), ConfigError);
    EXPECT_THROW(AaAgent(9, 4, AaConfig{2.0, 1.5, 0.95, true}), ConfigError);
}

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qrlbench/qsim.hpp"

using namespace qrlbench;
using namespace qrlbench::qsim;
using std::numbers::pi;

namespace {

double z0(const Statevector& s) { return expectation(s, PauliZ{{0}}); }

}  // namespace

TEST(Statevector, StartsInZeroState) {
    Statevector s(3);
    EXPECT_EQ(s.dim(), 8u);
    EXPECT_DOUBLE_EQ(s.probability(0), 1.0);
    EXPECT_DOUBLE_EQ(s.norm_squared(), 1.0);
}

TEST(Statevector, RejectsBadSizes) {
    EXPECT_THROW(Statevector(0), ArgumentError);
    EXPECT_THROW(Statevector(kMaxQubits + 1), ArgumentError);
    EXPECT_THROW(Statevector::from_amplitudes({1.0, 0.0, 0.0}), ArgumentError);
    EXPECT_THROW(Statevector::from_amplitudes({1.0, 1.0}), ArgumentError);
}

TEST(ApplyGate, RxPiFlipsZero) {
    Statevector s(1);
    apply_gate(s, Gate::rotation(GateKind::RX, 0, pi), pi);
    EXPECT_NEAR(std::abs(s.amplitudes()[0]), 0.0, 1e-15);
    EXPECT_NEAR(s.amplitudes()[1].real(), 0.0, 1e-15);
    EXPECT_NEAR(s.amplitudes()[1].imag(), -1.0, 1e-15);
    EXPECT_NEAR(z0(s), -1.0, 1e-15);
}

TEST(ApplyGate, RzLeavesZUnchanged) {
    for (double phi : {0.0, 0.3, 1.7, -2.9, pi}) {
        Statevector s(1);
        apply_gate(s, Gate::rotation(GateKind::RZ, 0, phi), phi);
        EXPECT_NEAR(z0(s), 1.0, 1e-15);
    }
}

TEST(ApplyGate, CzNegatesOneOneOnPlusPlus) {
    Statevector s = Statevector::uniform(2);
    apply_gate(s, Gate::cz(0, 1), 0.0);
    const auto a = s.amplitudes();
    EXPECT_NEAR(a[0].real(), 0.5, 1e-15);
    EXPECT_NEAR(a[1].real(), 0.5, 1e-15);
    EXPECT_NEAR(a[2].real(), 0.5, 1e-15);
    EXPECT_NEAR(a[3].real(), -0.5, 1e-15);
    EXPECT_NEAR(s.norm_squared(), 1.0, 1e-12);
}

TEST(ApplyGate, CnotUsesControlThenTarget) {
    Statevector s(2);
    apply_gate(s, Gate::rotation(GateKind::RX, 0, pi), pi);  // |01>: qubit 0 set
    apply_gate(s, Gate::cnot(0, 1), 0.0);
    EXPECT_NEAR(s.probability(3), 1.0, 1e-15);
}

TEST(ApplyGate, RejectsOutOfRangeTargetsAndAngles) {
    Statevector s(2);
    EXPECT_THROW(apply_gate(s, Gate::rotation(GateKind::RX, 2, 0.1), 0.1), IndexError);
    EXPECT_THROW(apply_gate(s, Gate::cz(0, 5), 0.0), IndexError);
    EXPECT_THROW(apply_gate(s, Gate::rotation(GateKind::RX, 0, 0.1), std::nan("")), ArgumentError);
}

TEST(Circuit, RejectsInvalidGates) {
    Circuit c(2);
    EXPECT_THROW(c.add(Gate::rotation(GateKind::RY, 2, 0.0)), IndexError);
    EXPECT_THROW(c.add(Gate::cz(1, 1)), ArgumentError);
    EXPECT_THROW(c.add(Gate::rotation(GateKind::RY, 0, INFINITY)), ArgumentError);
    EXPECT_THROW(c.observe(PauliZ{{3}}), IndexError);
}

TEST(Expectation, ClosedForms) {
    Statevector s(1);
    EXPECT_DOUBLE_EQ(z0(s), 1.0);
    apply_gate(s, Gate::rotation(GateKind::RY, 0, pi / 2), pi / 2);
    EXPECT_NEAR(z0(s), 0.0, 1e-15);

    Statevector bell = Statevector::from_amplitudes({M_SQRT1_2, 0.0, 0.0, M_SQRT1_2});
    EXPECT_NEAR(expectation(bell, PauliZ{{0, 1}}), 1.0, 1e-15);
    EXPECT_NEAR(expectation(bell, PauliZ{{0}}), 0.0, 1e-15);
}

TEST(Expectation, RyAngleFollowsCosine) {
    for (double t = -3.0; t <= 3.0; t += 0.25) {
        Statevector s(1);
        apply_gate(s, Gate::rotation(GateKind::RY, 0, t), t);
        EXPECT_NEAR(z0(s), std::cos(t), 1e-14);
    }
}

TEST(RunCircuit, ZeroAnglesGiveAllPlusOne) {
    Circuit c(3);
    for (int q = 0; q < 3; ++q) {
        c.add(Gate::rotation(GateKind::RX, q, ParamRef{static_cast<std::size_t>(q), 0.8}));
        c.add(Gate::rotation(GateKind::RZ, q, ParamRef{static_cast<std::size_t>(q + 3), 1.0}));
        c.observe(PauliZ{{q}});
    }
    c.add(Gate::cz(0, 1));
    CostLedger ledger;
    const auto e = run_circuit(c, std::vector<double>(6, 0.0), ledger);
    for (double x : e) EXPECT_NEAR(x, 1.0, 1e-15);
    EXPECT_EQ(ledger.circuit_executions(), 1u);
}

TEST(RunCircuit, NetRyPiGivesMinusOne) {
    Circuit c(1);
    c.add(Gate::rotation(GateKind::RY, 0, ParamRef{0, 1.0}));
    c.observe(PauliZ{{0}});
    CostLedger ledger;
    EXPECT_NEAR(run_circuit(c, std::vector<double>{pi}, ledger)[0], -1.0, 1e-15);
}

TEST(RunCircuit, UnboundParameterIsConfigError) {
    Circuit c(1);
    c.add(Gate::rotation(GateKind::RY, 0, ParamRef{3, 1.0}));
    c.observe(PauliZ{{0}});
    CostLedger ledger;
    EXPECT_THROW(run_circuit(c, std::vector<double>{0.1}, ledger), ConfigError);
    EXPECT_EQ(ledger.circuit_executions(), 0u);
}

TEST(RunCircuit, ShotModeOnBalancedStateStaysNearZero) {
    Circuit c(1);
    c.add(Gate::rotation(GateKind::RY, 0, pi / 2));
    c.observe(PauliZ{{0}});
    // |mean| > 0.1 at 1000 shots is a > 3 sigma event; check it is rare
    int outside = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        CostLedger ledger;
        const double m = run_circuit(c, {}, Shots{1000, rng}, ledger)[0];
        if (std::abs(m) > 0.1) ++outside;
    }
    EXPECT_LE(outside, 2);
}

TEST(RunCircuit, ShotEstimateConvergesToAnalytic) {
    Rng rng(11);
    const auto rc = oracle::random_circuit(rng, 4, 2);
    CostLedger ledger;
    const auto exact = run_circuit(rc.circuit, rc.params, ledger);
    const auto noisy = run_circuit(rc.circuit, rc.params, Shots{100000, rng}, ledger);
    for (std::size_t k = 0; k < exact.size(); ++k) EXPECT_NEAR(noisy[k], exact[k], 0.02);
}

TEST(RunCircuit, MatchesDenseUnitaryOracle) {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto rc = oracle::random_circuit(rng, 5, 3);
        CostLedger ledger;
        const auto got = run_circuit(rc.circuit, rc.params, ledger);
        const auto want = oracle::expectations(rc.circuit, rc.params);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-10);
    }
}

TEST(ParameterShift, SingleRyClosedForm) {
    Circuit c(1);
    c.add(Gate::rotation(GateKind::RY, 0, ParamRef{0, 1.0}));
    c.observe(PauliZ{{0}});
    CostLedger ledger;
    const std::vector<double> w{1.0};
    EXPECT_NEAR(parameter_shift_grad(c, std::vector<double>{0.0}, w, ledger)[0], 0.0, 1e-15);
    EXPECT_NEAR(parameter_shift_grad(c, std::vector<double>{pi / 2}, w, ledger)[0], -1.0, 1e-15);
    EXPECT_EQ(ledger.circuit_executions(), 4u);
}

TEST(ParameterShift, MatchesFiniteDifferences) {
    Rng rng(42);
    for (int trial = 0; trial < 25; ++trial) {
        const auto rc = oracle::random_circuit(rng, 5, 3);
        std::vector<double> lw;
        for (std::size_t k = 0; k < rc.circuit.observables().size(); ++k) lw.push_back(rng.uniform(-1.0, 1.0));
        CostLedger ledger;
        const auto g = parameter_shift_grad(rc.circuit, rc.params, lw, ledger);
        auto f = [&](const std::vector<double>& p) {
            const auto e = oracle::expectations(rc.circuit, p);
            double acc = 0.0;
            for (std::size_t k = 0; k < e.size(); ++k) acc += lw[k] * e[k];
            return acc;
        };
        const auto fd = oracle::finite_diff(f, rc.params);
        for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(g[k], fd[k], 1e-4) << "trial " << trial << " param " << k;
    }
}

TEST(ParameterShift, RejectsBindingOnEntangler) {
    Circuit c(2);
    c.add(Gate{GateKind::CZ, {0, 1}, ParamRef{0, 1.0}});
    c.observe(PauliZ{{0}});
    CostLedger ledger;
    const std::vector<double> w{1.0};
    EXPECT_THROW(parameter_shift_grad(c, std::vector<double>{0.3}, w, ledger), UnsupportedGradientError);
}

TEST(ParameterShift, SixtyParametersCostOneHundredTwentyExecutions) {
    Circuit c(4);
    std::size_t id = 0;
    for (int l = 0; l < 5; ++l) {
        for (int q = 0; q < 4; ++q) {
            c.add(Gate::rotation(GateKind::RX, q, ParamRef{id++, 0.5}));
            c.add(Gate::rotation(GateKind::RY, q, ParamRef{id++, 1.0}));
            c.add(Gate::rotation(GateKind::RZ, q, ParamRef{id++, 1.0}));
        }
    }
    for (int q = 0; q < 4; ++q) c.observe(PauliZ{{q}});
    ASSERT_EQ(id, 60u);
    CostLedger ledger;
    const std::vector<double> w{1.0, -1.0, 0.5, 0.0};
    parameter_shift_grad(c, std::vector<double>(60, 0.2), w, ledger);
    EXPECT_EQ(ledger.circuit_executions(), 120u);
}

TEST(CostLedger, ExecutionAccountingIsTwoPGPlusF) {
    Rng rng(8);
    const auto rc = oracle::random_circuit(rng, 3, 2);
    std::size_t bound = 0;
    for (const auto& g : rc.circuit.gates()) bound += g.is_bound() ? 1 : 0;
    CostLedger ledger;
    const std::vector<double> lw(rc.circuit.observables().size(), 1.0);
    const int G = 3, F = 7;
    for (int i = 0; i < G; ++i) parameter_shift_grad(rc.circuit, rc.params, lw, ledger);
    for (int i = 0; i < F; ++i) run_circuit(rc.circuit, rc.params, ledger);
    EXPECT_EQ(ledger.circuit_executions(), 2 * bound * G + F);
}

TEST(Timing, FourQubitFiveLayerForwardPass) {
    Circuit c(4);
    for (int l = 0; l < 5; ++l) {
        for (int q = 0; q < 4; ++q) {
            c.add(Gate::rotation(GateKind::RX, q, 0.1));
            c.add(Gate::rotation(GateKind::RY, q, 0.1));
            c.add(Gate::rotation(GateKind::RZ, q, 0.1));
        }
        for (int q = 0; q < 4; ++q) c.add(Gate::cz(q, (q + 1) % 4));
    }
    EXPECT_EQ(c.one_qubit_gates(), 60u);
    EXPECT_EQ(c.two_qubit_gates(), 20u);
    EXPECT_EQ(estimate_circuit_time(c, TimingModel{}), std::chrono::microseconds(8100));
}

TEST(Timing, EmptyCircuitAndShotLinearity) {
    Circuit c(2);
    TimingModel t;
    EXPECT_EQ(estimate_circuit_time(c, t), std::chrono::microseconds(300));
    Circuit d(2);
    d.add(Gate::rotation(GateKind::RX, 0, 0.3)).add(Gate::cz(0, 1));
    TimingModel t2 = t;
    t2.shots = 2 * t.shots;
    EXPECT_EQ(estimate_circuit_time(d, t2), 2 * estimate_circuit_time(d, t));
}

TEST(Timing, RejectsNonPositiveConstants) {
    TimingModel t;
    t.shots = 0;
    EXPECT_THROW(CostLedger{t}, ConfigError);
    TimingModel u;
    u.t_2q = Duration{0};
    EXPECT_THROW(u.validate(), ConfigError);
}

TEST(CostLedger, MergeAddsCounters) {
    CostLedger a, b;
    a.record_execution(2, 1);
    b.record_execution(0, 0);
    b.record_anneal(std::chrono::milliseconds(115));
    a.merge(b);
    EXPECT_EQ(a.circuit_executions(), 2u);
    EXPECT_EQ(a.anneal_jobs(), 1u);
    EXPECT_EQ(a.modeled_clock_time(), Duration{1000 * (60 + 300 + 300) + 1000 * 300} + std::chrono::milliseconds(115));
}

TEST(SampleMeasurements, DeterministicAndCorrectlyDistributed) {
    Rng rng(1);
    const auto zero = sample_measurements(Statevector(1), 100, rng);
    EXPECT_EQ(zero[0], 100u);
    EXPECT_EQ(zero[1], 0u);

    const auto u = Statevector::uniform(2);
    Rng a(99), b(99);
    const auto ca = sample_measurements(u, 40000, a);
    const auto cb = sample_measurements(u, 40000, b);
    EXPECT_EQ(ca, cb);
    std::uint64_t total = 0;
    for (auto n : ca) {
        total += n;
        // binomial sd = sqrt(40000 * 0.25 * 0.75) ~ 87
        EXPECT_NEAR(static_cast<double>(n), 10000.0, 5 * 87.0);
    }
    EXPECT_EQ(total, 40000u);
    EXPECT_THROW(sample_measurements(u, 0, rng), ArgumentError);
}

// Properties over random circuits.

TEST(Properties, NormPreservedAndExpectationsBounded) {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(6));
        Statevector s(n);
        const int gates = 1 + static_cast<int>(rng.uniform_index(40));
        for (int g = 0; g < gates; ++g) {
            const int q = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
            const auto pick = rng.uniform_index(5);
            if (pick < 3 || n == 1) {
                const GateKind k = pick == 0 ? GateKind::RX : pick == 1 ? GateKind::RY : GateKind::RZ;
                const double a = rng.uniform(-10, 10);
                apply_gate(s, Gate::rotation(k, q, a), a);
            } else {
                const int r = (q + 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n - 1)))) % n;
                apply_gate(s, pick == 3 ? Gate::cz(q, r) : Gate::cnot(q, r), 0.0);
            }
            ASSERT_NEAR(s.norm_squared(), 1.0, 1e-10);
        }
        for (int q = 0; q < n; ++q) {
            const double e = expectation(s, PauliZ{{q}});
            EXPECT_GE(e, -1.0 - 1e-12);
            EXPECT_LE(e, 1.0 + 1e-12);
        }
    }
}

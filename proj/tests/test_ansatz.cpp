#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "qrlbench/ansatz.hpp"

using namespace qrlbench;
using namespace qrlbench::ansatz;

namespace {

AnsatzSpec spec(int n, Variant v, Encoding e = Encoding::Binary, int n_states = 16) {
    AnsatzSpec s;
    s.n_qubits = n;
    s.n_layers = 5;
    s.variant = v;
    s.encoding = e;
    s.n_states = n_states;
    return s;
}

}  // namespace

TEST(Encoding, OneHot) {
    const auto x = encode_state(Encoding::OneHot, 2, 9);
    const std::vector<double> want{-1, -1, 1, -1, -1, -1, -1, -1, -1};
    EXPECT_EQ(x, want);
}

TEST(Encoding, BinaryMostSignificantFirst) {
    EXPECT_EQ(encode_state(Encoding::Binary, 5, 16), (std::vector<double>{-1, 1, -1, 1}));
    EXPECT_EQ(encode_state(Encoding::Binary, 0, 9), (std::vector<double>{-1, -1, -1, -1}));
    EXPECT_EQ(encode_state(Encoding::Binary, 8, 9), (std::vector<double>{1, -1, -1, -1}));
}

TEST(Encoding, OutOfRangeState) {
    EXPECT_THROW(encode_state(Encoding::Binary, 9, 9), IndexError);
    EXPECT_THROW(encode_state(Encoding::OneHot, -1, 9), IndexError);
}

TEST(Encoding, DistinctStatesGetDistinctCodes) {
    for (auto e : {Encoding::Binary, Encoding::OneHot}) {
        for (int n : {2, 3, 9, 15, 16, 64}) {
            std::set<std::vector<double>> seen;
            for (int s = 0; s < n; ++s) {
                const auto x = encode_state(e, s, n);
                for (double v : x) EXPECT_TRUE(v == 1.0 || v == -1.0);
                seen.insert(x);
            }
            EXPECT_EQ(static_cast<int>(seen.size()), n);
        }
    }
}

TEST(CountQubits, Examples) {
    EXPECT_EQ(count_qubits(Encoding::OneHot, 9, 4), 9);
    EXPECT_EQ(count_qubits(Encoding::Binary, 9, 4), 4);
    EXPECT_EQ(count_qubits(Encoding::Binary, 64, 4), 6);
    EXPECT_EQ(count_qubits(Encoding::Binary, 2, 4), 4);
}

TEST(BuildCircuit, GateCountsPerVariant) {
    const auto x = encode_state(Encoding::Binary, 3, 16);
    const auto full = build_circuit(spec(4, Variant::Full), x);
    EXPECT_EQ(full.one_qubit_gates(), 60u);
    EXPECT_EQ(full.two_qubit_gates(), 20u);

    const auto a = build_circuit(spec(4, Variant::NoEntanglement), x);
    EXPECT_EQ(a.one_qubit_gates(), 60u);
    EXPECT_EQ(a.two_qubit_gates(), 0u);

    const auto b = build_circuit(spec(4, Variant::NoEntanglementFullEncoding), x);
    std::size_t rx = 0;
    for (const auto& g : b.gates()) rx += g.kind == qsim::GateKind::RX ? 1 : 0;
    EXPECT_EQ(rx, 16u * 5u);
    EXPECT_EQ(b.two_qubit_gates(), 0u);
}

TEST(BuildCircuit, FullRingHasNTimesLayersEntanglers) {
    for (int n = 4; n <= 8; ++n) {
        auto s = spec(n, Variant::Full, Encoding::Binary, 8);
        s.n_layers = 3;
        EXPECT_EQ(build_circuit(s, 0).two_qubit_gates(), static_cast<std::size_t>(3 * n));
    }
}

TEST(BuildCircuit, ObservablesAreReadoutQubits) {
    const auto c = build_circuit(spec(4, Variant::Full), 7);
    ASSERT_EQ(c.observables().size(), 4u);
    for (int a = 0; a < 4; ++a) EXPECT_EQ(c.observables()[static_cast<std::size_t>(a)].qubits, std::vector<int>{a});
}

TEST(BuildCircuit, DeterministicRebuild) {
    const auto s = spec(9, Variant::Full, Encoding::OneHot, 9);
    EXPECT_EQ(build_circuit(s, 4), build_circuit(s, 4));
    EXPECT_FALSE(build_circuit(s, 4) == build_circuit(s, 5));
}

TEST(BuildCircuit, FeatureLengthMismatch) {
    const std::vector<double> x{1.0, -1.0};
    EXPECT_THROW(build_circuit(spec(4, Variant::Full), x), ConfigError);
}

TEST(BuildCircuit, TooFewQubitsForFeaturesOrActions) {
    EXPECT_THROW(spec(4, Variant::Full, Encoding::OneHot, 9).validate(), ConfigError);
    EXPECT_NO_THROW(spec(4, Variant::NoEntanglementFullEncoding, Encoding::OneHot, 9).validate());
    EXPECT_THROW(spec(3, Variant::NoEntanglementFullEncoding, Encoding::Binary, 4).validate(), ConfigError);
}

TEST(Params, CountsMatchClosedForms) {
    for (auto v : {Variant::Full, Variant::NoEntanglement, Variant::NoEntanglementFullEncoding}) {
        const auto s = spec(4, v);
        Rng rng(1);
        const auto p = init_params(s, rng);
        EXPECT_EQ(p.theta().size(), 2u * 5u * 4u);
        const std::size_t lam = v == Variant::NoEntanglementFullEncoding ? 5u * 4u * 4u : 5u * 4u;
        EXPECT_EQ(p.lambda().size(), lam);
        EXPECT_EQ(p.w.size(), 4u);
        // every id is referenced by exactly one gate
        const auto c = build_circuit(s, 2);
        std::vector<int> uses(p.circuit.size(), 0);
        for (const auto& g : c.gates()) {
            if (const auto* r = g.binding()) ++uses.at(r->id);
        }
        for (int u : uses) EXPECT_EQ(u, 1);
    }
}

TEST(Params, InitialisationRanges) {
    Rng rng(3);
    const auto p = init_params(spec(4, Variant::Full), rng);
    for (double t : p.theta()) {
        EXPECT_GE(t, -std::numbers::pi);
        EXPECT_LE(t, std::numbers::pi);
    }
    for (double l : p.lambda()) EXPECT_EQ(l, 1.0);
    for (double w : p.w) EXPECT_EQ(w, 1.0);
}

TEST(BuildCircuit, EncodingEntersAsLambdaTimesFeature) {
    // a single-layer, single-qubit circuit reduces to RZ RY RX(lambda x) |0>,
    // whose <Z> is cos(theta_y) cos(lambda x)
    AnsatzSpec s;
    s.n_qubits = 1;
    s.n_layers = 1;
    s.n_actions = 1;
    s.n_states = 2;
    s.encoding = Encoding::Binary;
    auto p = zero_params(s);
    p.theta()[0] = 0.4;
    p.lambda()[0] = 0.9;
    qsim::CostLedger ledger;
    for (int st : {0, 1}) {
        const double x = st == 0 ? -1.0 : 1.0;
        const auto e = qsim::run_circuit(build_circuit(s, st), p.circuit, ledger);
        EXPECT_NEAR(e[0], std::cos(0.4) * std::cos(0.9 * x), 1e-14);
    }
}

TEST(BuildCircuit, MatchesDenseOracleForAllVariants) {
    Rng rng(17);
    for (auto v : {Variant::Full, Variant::NoEntanglement, Variant::NoEntanglementFullEncoding}) {
        auto s = spec(4, v, Encoding::Binary, 9);
        s.n_layers = 2;
        const auto p = init_params(s, rng);
        qsim::CostLedger ledger;
        for (int st = 0; st < 9; ++st) {
            const auto c = build_circuit(s, st);
            const auto got = qsim::run_circuit(c, p.circuit, ledger);
            const auto want = oracle::expectations(c, p.circuit);
            for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-10);
        }
    }
}

TEST(Variants, ParseAndPrint) {
    for (auto v : {Variant::Full, Variant::NoEntanglement, Variant::NoEntanglementFullEncoding}) {
        EXPECT_EQ(parse_variant(to_string(v)), v);
    }
    EXPECT_EQ(parse_variant("A_NO_ENT"), Variant::NoEntanglement);
    EXPECT_FALSE(parse_variant("c").has_value());
    EXPECT_EQ(parse_encoding("one_hot"), Encoding::OneHot);
    EXPECT_FALSE(parse_encoding("gray").has_value());
}

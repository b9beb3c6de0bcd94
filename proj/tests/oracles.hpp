#pragma once

// Reference implementations used only by the tests. Nothing here calls the
// library's kernels: circuits are evaluated as dense 2^n x 2^n matrices built
// from Kronecker products.

#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "qrlbench/qsim.hpp"
#include "qrlbench/rng.hpp"

namespace oracle {

using C = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat one_qubit_matrix(qrlbench::qsim::GateKind k, double angle) {
    using qrlbench::qsim::GateKind;
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    const C i{0.0, 1.0};
    Mat m(2, 2);
    switch (k) {
        case GateKind::RX: m << c, -i * s, -i * s, c; break;
        case GateKind::RY: m << c, -s, s, c; break;
        case GateKind::RZ: m << std::exp(-i * (angle / 2)), 0, 0, std::exp(i * (angle / 2)); break;
        default: throw std::logic_error("not a one-qubit gate");
    }
    return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    }
    return out;
}

/// Qubit q is bit q of the basis index, so it is the q-th factor from the right.
inline Mat embed(const Mat& u, int q, int n) {
    Mat out = Mat::Identity(1, 1);
    for (int k = n - 1; k >= 0; --k) out = kron(out, k == q ? u : Mat::Identity(2, 2));
    return out;
}

inline Mat two_qubit_matrix(qrlbench::qsim::GateKind k, int a, int b, int n) {
    const Eigen::Index dim = Eigen::Index{1} << n;
    Mat m = Mat::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const bool ba = (i >> a) & 1, bb = (i >> b) & 1;
        if (k == qrlbench::qsim::GateKind::CZ) {
            m(i, i) = (ba && bb) ? -1.0 : 1.0;
        } else {
            const Eigen::Index j = ba ? (i ^ (Eigen::Index{1} << b)) : i;  // a = control, b = target
            m(j, i) = 1.0;
        }
    }
    return m;
}

inline Mat circuit_unitary(const qrlbench::qsim::Circuit& c, const std::vector<double>& params) {
    using namespace qrlbench::qsim;
    const int n = c.n_qubits();
    Mat u = Mat::Identity(Eigen::Index{1} << n, Eigen::Index{1} << n);
    for (const auto& g : c.gates()) {
        double angle = 0.0;
        if (const auto* r = g.binding()) {
            angle = r->multiplier * params.at(r->id);
        } else {
            angle = std::get<double>(g.angle);
        }
        const Mat m = is_rotation(g.kind) ? embed(one_qubit_matrix(g.kind, angle), g.targets[0], n)
                                          : two_qubit_matrix(g.kind, g.targets[0], g.targets[1], n);
        u = m * u;
    }
    return u;
}

/// <psi| Z_{q1} Z_{q2} ... |psi> from the dense final state.
inline std::vector<double> expectations(const qrlbench::qsim::Circuit& c, const std::vector<double>& params) {
    const int n = c.n_qubits();
    Vec psi = Vec::Zero(Eigen::Index{1} << n);
    psi(0) = 1.0;
    psi = circuit_unitary(c, params) * psi;
    std::vector<double> out;
    for (const auto& o : c.observables()) {
        Mat z = Mat::Identity(psi.size(), psi.size());
        for (int q : o.qubits) {
            Mat pz(2, 2);
            pz << 1, 0, 0, -1;
            z = embed(pz, q, n) * z;
        }
        out.push_back((psi.adjoint() * z * psi)(0, 0).real());
    }
    return out;
}

/// Central finite differences of f at x, step h.
inline std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-4) {
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double x0 = x[k];
        x[k] = x0 + h;
        const double up = f(x);
        x[k] = x0 - h;
        const double down = f(x);
        x[k] = x0;
        g[k] = (up - down) / (2 * h);
    }
    return g;
}

/// Random layered circuit: every parameter class (plain angle, angle with a
/// feature multiplier, fixed angle) on random qubits, CZ/CNOT entanglers.
struct RandomCircuit {
    qrlbench::qsim::Circuit circuit;
    std::vector<double> params;
};

inline RandomCircuit random_circuit(qrlbench::Rng& rng, int max_qubits, int max_layers) {
    using namespace qrlbench::qsim;
    const int n = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_qubits)));
    const int layers = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_layers)));
    Circuit c(n);
    std::size_t next_id = 0;
    const GateKind rot[3] = {GateKind::RX, GateKind::RY, GateKind::RZ};
    for (int l = 0; l < layers; ++l) {
        for (int q = 0; q < n; ++q) {
            // encoding-style gate: parameter times a feature
            const double feature = rng.uniform(-1.5, 1.5);
            c.add(Gate::rotation(rot[rng.uniform_index(3)], q, ParamRef{next_id++, feature}));
            c.add(Gate::rotation(rot[rng.uniform_index(3)], q, ParamRef{next_id++, 1.0}));
            if (rng.bernoulli(0.3)) c.add(Gate::rotation(rot[rng.uniform_index(3)], q, rng.uniform(-3.0, 3.0)));
        }
        if (n > 1) {
            for (int q = 0; q + 1 < n; ++q) {
                if (rng.bernoulli(0.5)) c.add(Gate::cz(q, q + 1)); else c.add(Gate::cnot(q + 1, q));
            }
        }
    }
    // a shared parameter: reuse id 0 on the last qubit
    c.add(Gate::rotation(GateKind::RY, n - 1, ParamRef{0, 0.7}));
    for (int q = 0; q < n; ++q) c.observe(PauliZ{{q}});
    if (n > 1) c.observe(PauliZ{{0, n - 1}});
    RandomCircuit out{std::move(c), {}};
    for (std::size_t k = 0; k < next_id; ++k) out.params.push_back(rng.uniform(-std::numbers::pi, std::numbers::pi));
    return out;
}

}  // namespace oracle

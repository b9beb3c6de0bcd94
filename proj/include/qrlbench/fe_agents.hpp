#pragma once

// Free-energy Q-learning with clamped deep Boltzmann machines.
//
// Spin convention: sigma in {-1, +1}, energy
//     E(sigma) = -sum_i h_i sigma_i - sum_{(i,j)} J_ij sigma_i sigma_j,
// so a positive field favours sigma = +1. Visible units are clamped to +-1
// values and enter only through the fields of the first hidden layer.
// Q(s, a) = -F(v) with v the concatenated (state, action) encoding.
//
// With a transverse field Gamma the clamped model becomes a transverse-field
// Ising model. Sampling-based estimates use the replica (Suzuki-Trotter)
// image: r copies of the hidden layer, intra-replica terms divided by r, and
// a periodic chain coupling w+ = (1/2 beta) ln coth(Gamma beta / r) between
// copies of each hidden spin.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "qrlbench/agent.hpp"
#include "qrlbench/ansatz.hpp"
#include "qrlbench/envs.hpp"
#include "qrlbench/errors.hpp"
#include "qrlbench/qsim.hpp"
#include "qrlbench/rng.hpp"

namespace qrlbench::fe {

struct Coupling {
    int i = 0;
    int j = 0;
    double value = 0.0;

    bool operator==(const Coupling&) const = default;
};

/// Classical Ising model; a clamped DBM is one of these over its hidden units.
struct Ising {
    int n_spins = 0;
    std::vector<double> field;
    std::vector<Coupling> couplings;

    double energy(std::span<const std::int8_t> s) const {
        double e = 0.0;
        for (int i = 0; i < n_spins; ++i) e -= field[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)];
        for (const auto& c : couplings) {
            e -= c.value * s[static_cast<std::size_t>(c.i)] * s[static_cast<std::size_t>(c.j)];
        }
        return e;
    }
};

using ClampedIsing = Ising;

/// Visible block: state encoding followed by a one-hot action encoding, both +-1.
struct VisibleLayout {
    ansatz::Encoding encoding = ansatz::Encoding::OneHot;
    int n_states = 9;
    int n_actions = 4;

    int state_units() const { return ansatz::feature_dim(encoding, n_states); }
    int size() const { return state_units() + n_actions; }

    std::vector<double> encode(int state, int action) const {
        if (action < 0 || action >= n_actions) throw IndexError("action " + std::to_string(action) + " out of range");
        auto v = ansatz::encode_state(encoding, state, n_states);
        for (int a = 0; a < n_actions; ++a) v.push_back(a == action ? 1.0 : -1.0);
        return v;
    }

    bool operator==(const VisibleLayout&) const = default;
};

/// Deep Boltzmann machine: visible units couple to the first hidden layer,
/// and each hidden layer couples only to the next one.
class QbmModel {
public:
    QbmModel(VisibleLayout layout, std::vector<int> hidden_layers, double transverse_field, double beta)
        : layout_(layout), layers_(std::move(hidden_layers)), gamma_tf_(transverse_field), beta_(beta) {
        if (layers_.empty() || std::any_of(layers_.begin(), layers_.end(), [](int n) { return n < 1; })) {
            throw ConfigError("QBM needs at least one non-empty hidden layer");
        }
        if (!(transverse_field >= 0.0)) throw ConfigError("transverse field must be >= 0");
        if (!(beta > 0.0)) throw ConfigError("inverse temperature must be > 0");
        int offset = 0;
        for (int n : layers_) {
            offsets_.push_back(offset);
            offset += n;
        }
        n_hidden_ = offset;
        w_vh_.assign(static_cast<std::size_t>(layout_.size() * layers_[0]), 0.0);
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
            for (int a = 0; a < layers_[l]; ++a) {
                for (int b = 0; b < layers_[l + 1]; ++b) w_hh_.push_back({offsets_[l] + a, offsets_[l + 1] + b, 0.0});
            }
        }
    }

    const VisibleLayout& layout() const { return layout_; }
    const std::vector<int>& hidden_layers() const { return layers_; }
    int n_visible() const { return layout_.size(); }
    int n_hidden() const { return n_hidden_; }
    int first_layer_size() const { return layers_[0]; }
    double transverse_field() const { return gamma_tf_; }
    double beta() const { return beta_; }

    /// theta^{vh} for visible v and first-layer hidden h.
    double& w_vh(int v, int h) { return w_vh_.at(static_cast<std::size_t>(v * layers_[0] + h)); }
    double w_vh(int v, int h) const { return w_vh_.at(static_cast<std::size_t>(v * layers_[0] + h)); }
    std::vector<double>& w_vh_data() { return w_vh_; }
    const std::vector<double>& w_vh_data() const { return w_vh_; }

    /// theta^{hh'} edges between successive hidden layers.
    std::vector<Coupling>& hidden_couplings() { return w_hh_; }
    const std::vector<Coupling>& hidden_couplings() const { return w_hh_; }

    void randomize(Rng& rng, double scale) {
        for (auto& w : w_vh_) w = rng.uniform(-scale, scale);
        for (auto& c : w_hh_) c.value = rng.uniform(-scale, scale);
    }

    bool operator==(const QbmModel&) const = default;

private:
    VisibleLayout layout_;
    std::vector<int> layers_;
    std::vector<int> offsets_;
    int n_hidden_ = 0;
    double gamma_tf_;
    double beta_;
    std::vector<double> w_vh_;
    std::vector<Coupling> w_hh_;
};

inline ClampedIsing clamp(const QbmModel& m, std::span<const double> visible) {
    if (static_cast<int>(visible.size()) != m.n_visible()) {
        throw ConfigError("visible vector has length " + std::to_string(visible.size()) + ", model expects " +
                          std::to_string(m.n_visible()));
    }
    ClampedIsing c;
    c.n_spins = m.n_hidden();
    c.field.assign(static_cast<std::size_t>(c.n_spins), 0.0);
    for (int v = 0; v < m.n_visible(); ++v) {
        for (int h = 0; h < m.first_layer_size(); ++h) {
            c.field[static_cast<std::size_t>(h)] += m.w_vh(v, h) * visible[static_cast<std::size_t>(v)];
        }
    }
    c.couplings = m.hidden_couplings();
    return c;
}

inline ClampedIsing clamp(const QbmModel& m, int state, int action) {
    return clamp(m, m.layout().encode(state, action));
}

/// Inter-replica coupling (1 / 2 beta) ln coth(Gamma beta / r).
inline double w_plus(double transverse_field, double beta, int replicas) {
    if (!(beta > 0.0)) throw ArgumentError("beta must be positive");
    if (replicas < 1) throw ArgumentError("replica count must be >= 1");
    if (!(transverse_field > 0.0)) {
        throw NumericalError("w+ diverges for a zero transverse field; use the classical path");
    }
    const double x = transverse_field * beta / replicas;
    return std::log(1.0 / std::tanh(x)) / (2.0 * beta);
}

struct ReplicaIsing {
    int n_hidden = 0;
    int replicas = 1;
    double chain_coupling = 0.0;  // w+
    Ising intra;                  // spin (h, k) has index k * n_hidden + h
    std::vector<Coupling> chain;  // (h, k) -- (h, k+1), periodic

    int n_spins() const { return intra.n_spins; }
    static int spin(int n_hidden, int h, int k) { return k * n_hidden + h; }

    /// Intra-replica plus chain terms: the model the sampler sees.
    Ising full() const {
        Ising f = intra;
        f.couplings.insert(f.couplings.end(), chain.begin(), chain.end());
        return f;
    }

    double chain_energy(std::span<const std::int8_t> s) const {
        double e = 0.0;
        for (const auto& c : chain) e -= c.value * s[static_cast<std::size_t>(c.i)] * s[static_cast<std::size_t>(c.j)];
        return e;
    }
};

/// r = 1 reproduces the clamped model (its self-chain term is a constant and
/// is dropped), so Gamma is not needed there.
inline ReplicaIsing replica_transform(const ClampedIsing& c, int replicas, double transverse_field, double beta) {
    if (replicas < 1) throw ArgumentError("replica count must be >= 1");
    ReplicaIsing r;
    r.n_hidden = c.n_spins;
    r.replicas = replicas;
    r.intra.n_spins = c.n_spins * replicas;
    r.intra.field.resize(static_cast<std::size_t>(r.intra.n_spins));
    const double inv_r = 1.0 / replicas;
    for (int k = 0; k < replicas; ++k) {
        for (int h = 0; h < c.n_spins; ++h) {
            r.intra.field[static_cast<std::size_t>(ReplicaIsing::spin(c.n_spins, h, k))] =
                c.field[static_cast<std::size_t>(h)] * inv_r;
        }
        for (const auto& e : c.couplings) {
            r.intra.couplings.push_back(
                {ReplicaIsing::spin(c.n_spins, e.i, k), ReplicaIsing::spin(c.n_spins, e.j, k), e.value * inv_r});
        }
    }
    if (replicas > 1) {
        r.chain_coupling = w_plus(transverse_field, beta, replicas);
        for (int h = 0; h < c.n_spins; ++h) {
            for (int k = 0; k < replicas; ++k) {
                r.chain.push_back({ReplicaIsing::spin(c.n_spins, h, k), ReplicaIsing::spin(c.n_spins, h, (k + 1) % replicas),
                                   r.chain_coupling});
            }
        }
    }
    return r;
}

struct SaSchedule {
    int sweeps = 50;
    int reads = 1000;
    double beta_start = 0.1;
    double beta_end = 2.0;

    void validate() const {
        if (reads < 1 || sweeps < 1) throw ConfigError("annealing needs at least one read and one sweep");
        if (!(beta_start > 0.0) || !(beta_end >= beta_start)) {
            throw ConfigError("annealing schedule needs 0 < beta_start <= beta_end");
        }
    }
};

/// Clock time charged per annealing job.
inline constexpr qsim::Duration kAnnealAccessTime = std::chrono::milliseconds(115);

struct SpinSamples {
    int n_spins = 0;
    std::vector<std::int8_t> spins;  // reads x n_spins, row-major

    int reads() const { return n_spins == 0 ? 0 : static_cast<int>(spins.size()) / n_spins; }
    std::span<const std::int8_t> read(int k) const {
        return std::span(spins).subspan(static_cast<std::size_t>(k) * static_cast<std::size_t>(n_spins),
                                        static_cast<std::size_t>(n_spins));
    }
};

/// Metropolis single-spin-flip annealing. Each read starts from a uniformly
/// random configuration and sweeps the spins in index order while beta ramps
/// linearly from beta_start to beta_end. Charges one annealing job.
inline SpinSamples sa_sample(const Ising& model, const SaSchedule& schedule, Rng& rng, qsim::CostLedger& ledger,
                             qsim::Duration charge = kAnnealAccessTime) {
    schedule.validate();
    const int n = model.n_spins;
    // adjacency in compressed rows
    std::vector<int> start(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& c : model.couplings) {
        ++start[static_cast<std::size_t>(c.i) + 1];
        ++start[static_cast<std::size_t>(c.j) + 1];
    }
    for (int i = 0; i < n; ++i) start[static_cast<std::size_t>(i) + 1] += start[static_cast<std::size_t>(i)];
    std::vector<int> nbr(static_cast<std::size_t>(start.back()));
    std::vector<double> jv(nbr.size());
    std::vector<int> fill(start.begin(), start.end() - 1);
    for (const auto& c : model.couplings) {
        auto put = [&](int a, int b) {
            const auto k = static_cast<std::size_t>(fill[static_cast<std::size_t>(a)]++);
            nbr[k] = b;
            jv[k] = c.value;
        };
        put(c.i, c.j);
        put(c.j, c.i);
    }

    SpinSamples out;
    out.n_spins = n;
    out.spins.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(schedule.reads));
    std::vector<std::int8_t> s(static_cast<std::size_t>(n));
    for (int read = 0; read < schedule.reads; ++read) {
        for (auto& x : s) x = (rng.next_u64() >> 63) ? 1 : -1;
        for (int sweep = 0; sweep < schedule.sweeps; ++sweep) {
            const double beta = schedule.sweeps == 1 ? schedule.beta_end
                                                     : schedule.beta_start + (schedule.beta_end - schedule.beta_start) *
                                                                                 sweep / (schedule.sweeps - 1);
            for (int i = 0; i < n; ++i) {
                double local = model.field[static_cast<std::size_t>(i)];
                for (int k = start[static_cast<std::size_t>(i)]; k < start[static_cast<std::size_t>(i) + 1]; ++k) {
                    local += jv[static_cast<std::size_t>(k)] * s[static_cast<std::size_t>(nbr[static_cast<std::size_t>(k)])];
                }
                const double dE = 2.0 * s[static_cast<std::size_t>(i)] * local;
                if (dE <= 0.0 || rng.uniform() < std::exp(-beta * dE)) {
                    s[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(-s[static_cast<std::size_t>(i)]);
                }
            }
        }
        std::copy(s.begin(), s.end(), out.spins.begin() + static_cast<std::ptrdiff_t>(read) * n);
    }
    ledger.record_anneal(charge);
    return out;
}

struct FreeEnergyEstimate {
    double free_energy = 0.0;
    double mean_energy = 0.0;
    double entropy_term = 0.0;          // (1/beta) tr(rho ln rho), <= 0
    std::vector<double> magnetization;  // <sigma_h>, per hidden unit
    std::vector<double> correlation;    // <sigma_h sigma_h'>, n_hidden x n_hidden, symmetric

    double corr(int h, int g, int n_hidden) const {
        return correlation[static_cast<std::size_t>(h) * static_cast<std::size_t>(n_hidden) + static_cast<std::size_t>(g)];
    }
};

/// Sample-based estimate. <H_v> is the mean intra-replica energy (the chain
/// term is excluded unless `include_chain_energy`); the entropy term is the
/// plug-in sum over distinct sampled configurations; observables are averaged
/// over reads and replicas.
inline FreeEnergyEstimate estimate_free_energy(const SpinSamples& samples, const ReplicaIsing& ising, double beta,
                                               bool include_chain_energy = false) {
    const int reads = samples.reads();
    if (reads == 0) throw ArgumentError("no samples");
    if (samples.n_spins != ising.n_spins()) throw ConfigError("sample width does not match the replica model");
    const int H = ising.n_hidden, r = ising.replicas;

    FreeEnergyEstimate est;
    est.magnetization.assign(static_cast<std::size_t>(H), 0.0);
    est.correlation.assign(static_cast<std::size_t>(H * H), 0.0);
    std::unordered_map<std::string, int> counts;
    counts.reserve(static_cast<std::size_t>(reads));

    double e_sum = 0.0;
    for (int k = 0; k < reads; ++k) {
        const auto s = samples.read(k);
        double e = ising.intra.energy(s);
        if (include_chain_energy) e += ising.chain_energy(s);
        e_sum += e;
        ++counts[std::string(reinterpret_cast<const char*>(s.data()), s.size())];
        for (int rep = 0; rep < r; ++rep) {
            const auto base = static_cast<std::size_t>(rep * H);
            for (int h = 0; h < H; ++h) {
                const double sh = s[base + static_cast<std::size_t>(h)];
                est.magnetization[static_cast<std::size_t>(h)] += sh;
                for (int g = 0; g < H; ++g) {
                    est.correlation[static_cast<std::size_t>(h * H + g)] += sh * s[base + static_cast<std::size_t>(g)];
                }
            }
        }
    }
    const double norm = 1.0 / (static_cast<double>(reads) * r);
    for (auto& m : est.magnetization) m *= norm;
    for (auto& c : est.correlation) c *= norm;

    double plogp = 0.0;
    for (const auto& [cfg, n] : counts) {
        const double p = static_cast<double>(n) / reads;
        plogp += p * std::log(p);
    }
    est.mean_energy = e_sum / reads;
    est.entropy_term = plogp / beta;
    est.free_energy = est.mean_energy + est.entropy_term;
    return est;
}

inline constexpr int kMaxClassicalHidden = 12;
inline constexpr int kMaxQuantumHidden = 10;

namespace detail {

inline double log_sum_exp(std::span<const double> x) {
    const double hi = *std::max_element(x.begin(), x.end());
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

inline std::int8_t spin_of(std::uint32_t basis, int i) { return ((basis >> i) & 1U) ? -1 : 1; }

/// Thermal observables from z-basis populations.
inline void fill_observables(FreeEnergyEstimate& est, int n, std::span<const double> population) {
    est.magnetization.assign(static_cast<std::size_t>(n), 0.0);
    est.correlation.assign(static_cast<std::size_t>(n * n), 0.0);
    for (std::uint32_t b = 0; b < population.size(); ++b) {
        const double p = population[b];
        for (int h = 0; h < n; ++h) {
            const double sh = spin_of(b, h);
            est.magnetization[static_cast<std::size_t>(h)] += p * sh;
            for (int g = 0; g < n; ++g) est.correlation[static_cast<std::size_t>(h * n + g)] += p * sh * spin_of(b, g);
        }
    }
}

}  // namespace detail

/// Exact thermal state of a classical Ising model by enumeration.
inline FreeEnergyEstimate exact_classical(const Ising& m, double beta) {
    if (m.n_spins > kMaxClassicalHidden) throw SizeLimitError("classical enumeration capped at 12 spins");
    const std::uint32_t dim = 1U << m.n_spins;
    std::vector<double> energies(dim), logw(dim);
    std::vector<std::int8_t> s(static_cast<std::size_t>(m.n_spins));
    for (std::uint32_t b = 0; b < dim; ++b) {
        for (int i = 0; i < m.n_spins; ++i) s[static_cast<std::size_t>(i)] = detail::spin_of(b, i);
        energies[b] = m.energy(s);
        logw[b] = -beta * energies[b];
    }
    const double log_z = detail::log_sum_exp(logw);
    std::vector<double> pop(dim);
    FreeEnergyEstimate est;
    for (std::uint32_t b = 0; b < dim; ++b) {
        pop[b] = std::exp(logw[b] - log_z);
        est.mean_energy += pop[b] * energies[b];
    }
    est.free_energy = -log_z / beta;
    est.entropy_term = est.free_energy - est.mean_energy;
    detail::fill_observables(est, m.n_spins, pop);
    return est;
}

/// Dense 2^n x 2^n transverse-field Hamiltonian of the clamped model.
inline Eigen::MatrixXd tfim_hamiltonian(const Ising& m, double transverse_field) {
    if (m.n_spins > kMaxQuantumHidden) throw SizeLimitError("dense diagonalization capped at 10 spins");
    const Eigen::Index dim = Eigen::Index{1} << m.n_spins;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    std::vector<std::int8_t> s(static_cast<std::size_t>(m.n_spins));
    for (Eigen::Index b = 0; b < dim; ++b) {
        for (int i = 0; i < m.n_spins; ++i) s[static_cast<std::size_t>(i)] = detail::spin_of(static_cast<std::uint32_t>(b), i);
        h(b, b) = m.energy(s);
        for (int i = 0; i < m.n_spins; ++i) h(b, b ^ (Eigen::Index{1} << i)) -= transverse_field;
    }
    return h;
}

/// Exact thermal state of the transverse-field model by diagonalization.
inline FreeEnergyEstimate exact_quantum(const Ising& m, double transverse_field, double beta) {
    const Eigen::MatrixXd h = tfim_hamiltonian(m, transverse_field);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const Eigen::VectorXd& eval = solver.eigenvalues();
    const Eigen::MatrixXd& evec = solver.eigenvectors();
    std::vector<double> logw(static_cast<std::size_t>(eval.size()));
    for (Eigen::Index k = 0; k < eval.size(); ++k) logw[static_cast<std::size_t>(k)] = -beta * eval[k];
    const double log_z = detail::log_sum_exp(logw);

    FreeEnergyEstimate est;
    std::vector<double> pop(static_cast<std::size_t>(eval.size()), 0.0);
    for (Eigen::Index k = 0; k < eval.size(); ++k) {
        const double p = std::exp(logw[static_cast<std::size_t>(k)] - log_z);
        est.mean_energy += p * eval[k];
        for (Eigen::Index b = 0; b < eval.size(); ++b) pop[static_cast<std::size_t>(b)] += p * evec(b, k) * evec(b, k);
    }
    est.free_energy = -log_z / beta;
    est.entropy_term = est.free_energy - est.mean_energy;
    detail::fill_observables(est, m.n_spins, pop);
    return est;
}

/// Exact free energy of the clamped model: enumeration when the transverse
/// field is zero, dense diagonalization otherwise.
inline FreeEnergyEstimate exact_estimate(const QbmModel& m, std::span<const double> visible) {
    const auto c = clamp(m, visible);
    if (m.transverse_field() == 0.0) return exact_classical(c, m.beta());
    return exact_quantum(c, m.transverse_field(), m.beta());
}

inline double exact_free_energy(const QbmModel& m, int state, int action) {
    return exact_estimate(m, m.layout().encode(state, action)).free_energy;
}

enum class EstimatorKind { SimulatedAnnealing, Exact };

inline std::optional<EstimatorKind> parse_estimator(std::string_view s) {
    if (s == "sa") return EstimatorKind::SimulatedAnnealing;
    if (s == "exact") return EstimatorKind::Exact;
    return std::nullopt;
}

struct EstimatorConfig {
    EstimatorKind kind = EstimatorKind::SimulatedAnnealing;
    int replicas = 5;
    SaSchedule schedule{};
    bool include_chain_energy = false;
    qsim::Duration anneal_charge = kAnnealAccessTime;
};

struct FeEvaluation {
    double q = 0.0;
    FreeEnergyEstimate estimate;
};

/// Q = -F for one (state, action) pair. Sampling mode charges one annealing job.
inline FeEvaluation fe_q_value(const QbmModel& m, std::span<const double> visible, const EstimatorConfig& est, Rng& rng,
                               qsim::CostLedger& ledger) {
    FeEvaluation out;
    if (est.kind == EstimatorKind::Exact) {
        out.estimate = exact_estimate(m, visible);
    } else {
        const auto c = clamp(m, visible);
        const int r = m.transverse_field() > 0.0 ? est.replicas : 1;
        const auto rep = replica_transform(c, r, m.transverse_field(), m.beta());
        const auto samples = sa_sample(rep.full(), est.schedule, rng, ledger, est.anneal_charge);
        out.estimate = estimate_free_energy(samples, rep, m.beta(), est.include_chain_energy);
    }
    out.q = -out.estimate.free_energy;
    return out;
}

inline FeEvaluation fe_q_value(const QbmModel& m, int state, int action, const EstimatorConfig& est, Rng& rng,
                               qsim::CostLedger& ledger) {
    return fe_q_value(m, m.layout().encode(state, action), est, rng, ledger);
}

/// delta = R - gamma F(s', a') + F(s, a), or R + F(s, a) when s' is terminal.
inline double fe_td_error(double reward, double f_now, std::optional<double> f_next, double gamma) {
    return f_next ? reward - gamma * *f_next + f_now : reward + f_now;
}

/// theta^{vh} += alpha delta v <sigma_h>, theta^{hh'} += alpha delta <sigma_h sigma_h'>,
/// with observables from the evaluation that produced F(s, a).
inline void fe_td_update(QbmModel& m, std::span<const double> visible, double delta, const FreeEnergyEstimate& now,
                         double alpha) {
    if (static_cast<int>(visible.size()) != m.n_visible()) throw ConfigError("visible vector length mismatch");
    const double step = alpha * delta;
    if (step == 0.0) return;
    for (int v = 0; v < m.n_visible(); ++v) {
        for (int h = 0; h < m.first_layer_size(); ++h) {
            m.w_vh(v, h) += step * visible[static_cast<std::size_t>(v)] * now.magnetization[static_cast<std::size_t>(h)];
        }
    }
    const int H = m.n_hidden();
    for (auto& c : m.hidden_couplings()) c.value += step * now.corr(c.i, c.j, H);
}

struct FeConfig {
    std::vector<int> hidden_layers{4, 4};
    double transverse_field = 0.506;
    double beta = 2.0;
    EstimatorConfig estimator{};
    ansatz::Encoding encoding = ansatz::Encoding::OneHot;
    double lr = 0.01;
    double lr_decay = 0.999;  // per learner step
    double gamma = 0.95;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_decay_fraction = 0.5;
    double init_scale = 0.1;  // weights ~ U[-init_scale, init_scale]

    void validate() const {
        if (!(lr >= 0.0) || !(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("FE learning-rate schedule invalid");
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("FE gamma must lie in [0, 1]");
        if (estimator.replicas < 1) throw ConfigError("FE replica count must be >= 1");
        if (estimator.kind == EstimatorKind::SimulatedAnnealing && estimator.replicas > 1 && transverse_field <= 0.0) {
            throw ConfigError("FE replicas > 1 need a positive transverse field");
        }
        estimator.schedule.validate();
    }
};

/// SARSA-style free-energy agent: the next action is drawn before the update
/// and its evaluation becomes the current one on the following step.
class FeAgent : public Agent {
public:
    FeAgent(int n_states, FeConfig cfg, std::int64_t total_steps, Rng& rng)
        : cfg_(cfg),
          model_({cfg.encoding, n_states, envs::kNumActions}, cfg.hidden_layers, cfg.transverse_field, cfg.beta),
          schedule_{cfg.eps_start, cfg.eps_end, cfg.eps_decay_fraction, total_steps} {
        cfg_.validate();
        model_.randomize(rng, cfg_.init_scale);
    }

    std::string family() const override { return "fe"; }
    int qubit_count() const override {
        const bool replicated = cfg_.estimator.kind == EstimatorKind::SimulatedAnnealing && cfg_.transverse_field > 0.0;
        return model_.n_hidden() * (replicated ? cfg_.estimator.replicas : 1);
    }

    QbmModel& model() { return model_; }
    double learning_rate() const { return alpha_; }

    void begin_episode() override { has_pending_ = false; }

    int act(int state, std::int64_t env_step, Rng& rng, qsim::CostLedger& ledger) override {
        if (!has_pending_ || pending_.state != state) {
            pending_ = choose(state, env_step, rng, ledger);
            has_pending_ = true;
        }
        return pending_.action;
    }

    void observe(const envs::Transition& t, std::int64_t env_step, Rng& rng, qsim::CostLedger& ledger) override {
        if (!has_pending_ || pending_.state != t.state || pending_.action != t.action) {
            pending_ = Choice{t.state, t.action, evaluate(t.state, t.action, rng, ledger)};
        }
        const Choice now = std::move(pending_);
        has_pending_ = false;
        std::optional<double> f_next;
        if (!t.terminal) {
            pending_ = choose(t.next_state, env_step, rng, ledger);
            has_pending_ = true;
            f_next = -pending_.eval.q;
        }
        const double delta = fe_td_error(t.reward, -now.eval.q, f_next, cfg_.gamma);
        const auto v = model_.layout().encode(now.state, now.action);
        fe_td_update(model_, v, delta, now.eval.estimate, alpha_);
        alpha_ *= cfg_.lr_decay;
    }

    FeEvaluation evaluate(int state, int action, Rng& rng, qsim::CostLedger& ledger) const {
        return fe_q_value(model_, state, action, cfg_.estimator, rng, ledger);
    }

private:
    struct Choice {
        int state = -1;
        int action = 0;
        FeEvaluation eval;
    };

    Choice choose(int state, std::int64_t env_step, Rng& rng, qsim::CostLedger& ledger) const {
        const double eps = schedule_.at(env_step);
        if (eps > 0.0 && rng.uniform() < eps) {
            const int a = static_cast<int>(rng.uniform_index(envs::kNumActions));
            return {state, a, evaluate(state, a, rng, ledger)};
        }
        std::optional<Choice> best;
        for (int a = 0; a < envs::kNumActions; ++a) {
            auto e = evaluate(state, a, rng, ledger);
            if (!best || e.q > best->eval.q) best = Choice{state, a, std::move(e)};
        }
        return *best;
    }

    FeConfig cfg_;
    QbmModel model_;
    EpsilonSchedule schedule_;
    double alpha_ = cfg_.lr;
    Choice pending_;
    bool has_pending_ = false;
};

}  // namespace qrlbench::fe

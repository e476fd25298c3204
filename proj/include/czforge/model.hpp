#pragma once

// Truncated multi-mode bosonic Hamiltonians, their dressed spectra and
// effective couplings.
//
// Input frequencies are linear (GHz); matrices are stored in angular units
// (rad/ns), i.e. multiplied by 2*pi.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "czforge/errors.hpp"

namespace czforge::model {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Occupation = std::vector<int>;

inline std::string to_string(const Occupation& occ) {
    std::string s;
    for (int n : occ) {
        s += std::to_string(n);
    }
    return s;
}

inline constexpr int kMinLevels = 2;
inline constexpr int kMaxLevels = 6;

/// Product basis over per-mode truncations, optionally restricted to a total
/// excitation number <= cutoff. States are ordered lexicographically with the
/// first mode most significant.
class Basis {
public:
    explicit Basis(std::vector<int> levels, std::optional<int> excitation_cutoff = std::nullopt)
        : levels_(std::move(levels)), cutoff_(excitation_cutoff) {
        if (levels_.empty()) {
            throw ConfigError("basis needs at least one mode");
        }
        for (int l : levels_) {
            if (l < kMinLevels || l > kMaxLevels) {
                throw ConfigError("per-mode truncation must lie in [2, 6], got " + std::to_string(l));
            }
        }
        if (cutoff_ && *cutoff_ < 0) {
            throw ConfigError("excitation cutoff must be nonnegative");
        }
        Occupation occ(levels_.size(), 0);
        enumerate(occ, 0, 0);
        for (std::size_t i = 0; i < states_.size(); ++i) {
            index_.emplace(states_[i], i);
        }
    }

    [[nodiscard]] std::size_t size() const { return states_.size(); }
    [[nodiscard]] std::size_t modes() const { return levels_.size(); }
    [[nodiscard]] const std::vector<int>& levels() const { return levels_; }
    [[nodiscard]] std::optional<int> excitation_cutoff() const { return cutoff_; }
    [[nodiscard]] const Occupation& state(std::size_t i) const { return states_.at(i); }
    [[nodiscard]] const std::vector<Occupation>& states() const { return states_; }

    [[nodiscard]] std::optional<std::size_t> find(const Occupation& occ) const {
        auto it = index_.find(occ);
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::size_t index_of(const Occupation& occ) const {
        if (auto i = find(occ)) {
            return *i;
        }
        throw ParameterDomainError("state |" + to_string(occ) + "> is not in the truncated basis");
    }

private:
    void enumerate(Occupation& occ, std::size_t mode, int total) {
        if (mode == levels_.size()) {
            states_.push_back(occ);
            return;
        }
        for (int n = 0; n < levels_[mode]; ++n) {
            if (cutoff_ && total + n > *cutoff_) {
                break;
            }
            occ[mode] = n;
            enumerate(occ, mode + 1, total + n);
        }
        occ[mode] = 0;
    }

    std::vector<int> levels_;
    std::optional<int> cutoff_;
    std::vector<Occupation> states_;
    std::map<Occupation, std::size_t> index_;
};

struct ModeSpec {
    std::string name;
    int levels = 4;
    double omega = 0.0;  // GHz
    double alpha = 0.0;  // GHz
};

struct Coupling {
    std::size_t a = 0;
    std::size_t b = 0;
    double g = 0.0;  // GHz
};

enum class CouplingForm { Rwa, Full };

inline std::string to_string(CouplingForm f) { return f == CouplingForm::Rwa ? "rwa" : "full"; }

struct HamiltonianModel {
    std::shared_ptr<const Basis> basis;
    Eigen::MatrixXd matrix;  // rad/ns, real symmetric
    CouplingForm form = CouplingForm::Full;

    [[nodiscard]] std::size_t dimension() const { return static_cast<std::size_t>(matrix.rows()); }
    [[nodiscard]] double hermiticity_defect() const { return (matrix - matrix.transpose()).cwiseAbs().maxCoeff(); }
};

/// Static structure of a coupled-mode system. The Hamiltonian at arbitrary
/// per-mode frequencies is diagonal(freqs) + a fixed coupling matrix, which is
/// what time-dependent frequency pulses need.
class ModeSystem {
public:
    ModeSystem(std::vector<ModeSpec> modes, std::vector<Coupling> couplings, CouplingForm form,
               std::optional<int> excitation_cutoff = std::nullopt)
        : modes_(std::move(modes)), couplings_(std::move(couplings)), form_(form) {
        std::vector<int> levels;
        levels.reserve(modes_.size());
        for (const auto& m : modes_) {
            levels.push_back(m.levels);
        }
        basis_ = std::make_shared<const Basis>(levels, excitation_cutoff);
        for (const auto& c : couplings_) {
            if (c.a >= modes_.size() || c.b >= modes_.size()) {
                throw ConfigError("coupling references unknown mode index");
            }
            if (c.a == c.b) {
                throw ConfigError("coupling must join two distinct modes");
            }
        }
        assemble();
    }

    [[nodiscard]] const Basis& basis() const { return *basis_; }
    [[nodiscard]] std::shared_ptr<const Basis> shared_basis() const { return basis_; }
    [[nodiscard]] const std::vector<ModeSpec>& modes() const { return modes_; }
    [[nodiscard]] const std::vector<Coupling>& couplings() const { return couplings_; }
    [[nodiscard]] CouplingForm form() const { return form_; }
    [[nodiscard]] std::size_t dimension() const { return basis_->size(); }

    [[nodiscard]] std::vector<double> idle_frequencies() const {
        std::vector<double> f;
        f.reserve(modes_.size());
        for (const auto& m : modes_) {
            f.push_back(m.omega);
        }
        return f;
    }

    /// Off-diagonal coupling matrix (rad/ns).
    [[nodiscard]] const Eigen::MatrixXd& coupling_matrix() const { return coupling_; }

    /// Diagonal part at the given per-mode frequencies (rad/ns).
    [[nodiscard]] Eigen::VectorXd diagonal(const std::vector<double>& freqs) const {
        check_freqs(freqs);
        Eigen::VectorXd d = anharmonic_;
        for (std::size_t k = 0; k < modes_.size(); ++k) {
            d += (kTwoPi * freqs[k]) * number_[k];
        }
        return d;
    }

    [[nodiscard]] HamiltonianModel hamiltonian(const std::vector<double>& freqs) const {
        HamiltonianModel h{basis_, coupling_, form_};
        h.matrix.diagonal() += diagonal(freqs);
        return h;
    }

    [[nodiscard]] HamiltonianModel hamiltonian() const { return hamiltonian(idle_frequencies()); }

    /// Number operator of mode k as a diagonal vector.
    [[nodiscard]] const Eigen::VectorXd& number_diagonal(std::size_t k) const { return number_.at(k); }

    /// Connected components of the coupling graph over basis states.
    [[nodiscard]] const std::vector<std::vector<std::size_t>>& blocks() const { return blocks_; }

private:
    void check_freqs(const std::vector<double>& freqs) const {
        if (freqs.size() != modes_.size()) {
            throw ParameterDomainError("frequency vector size does not match mode count");
        }
    }

    void assemble() {
        const auto& basis = *basis_;
        const std::size_t dim = basis.size();
        const std::size_t nm = modes_.size();
        anharmonic_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        number_.assign(nm, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)));
        for (std::size_t i = 0; i < dim; ++i) {
            const auto& occ = basis.state(i);
            for (std::size_t k = 0; k < nm; ++k) {
                const double n = occ[k];
                number_[k][static_cast<Eigen::Index>(i)] = n;
                anharmonic_[static_cast<Eigen::Index>(i)] += kTwoPi * 0.5 * modes_[k].alpha * n * (n - 1.0);
            }
        }

        coupling_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (const auto& c : couplings_) {
            const double g = kTwoPi * c.g;
            // a_i^dag a_j + h.c. for the exchange term; -(a_i a_j + h.c.) for the counter-rotating term.
            add_pair_term(c.a, c.b, +1, -1, g);
            if (form_ == CouplingForm::Full) {
                add_pair_term(c.a, c.b, +1, +1, -g);
            }
        }

        // Union-find over nonzero couplings gives independent blocks (e.g. parity sectors).
        std::vector<std::size_t> parent(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            parent[i] = i;
        }
        auto root = [&](std::size_t i) {
            while (parent[i] != i) {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            return i;
        };
        for (Eigen::Index j = 0; j < coupling_.cols(); ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                if (coupling_(i, j) != 0.0) {
                    parent[root(static_cast<std::size_t>(i))] = root(static_cast<std::size_t>(j));
                }
            }
        }
        std::map<std::size_t, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < dim; ++i) {
            groups[root(i)].push_back(i);
        }
        blocks_.clear();
        for (auto& [r, members] : groups) {
            blocks_.push_back(std::move(members));
        }
        std::sort(blocks_.begin(), blocks_.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
    }

    // Adds g * (O + O^dag) where O raises mode a by da and mode b by db (+1 raise, -1 lower).
    // Only O is enumerated; its adjoint fills the transposed entry.
    void add_pair_term(std::size_t a, std::size_t b, int da, int db, double g) {
        const auto& basis = *basis_;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            Occupation occ = basis.state(i);
            const int na = occ[a] + da;
            const int nb = occ[b] + db;
            if (na < 0 || nb < 0 || na >= modes_[a].levels || nb >= modes_[b].levels) {
                continue;
            }
            const double amp = std::sqrt(static_cast<double>(da > 0 ? na : occ[a])) *
                               std::sqrt(static_cast<double>(db > 0 ? nb : occ[b]));
            occ[a] = na;
            occ[b] = nb;
            const auto j = basis.find(occ);
            if (!j) {
                continue;  // outside the excitation cutoff
            }
            const auto r = static_cast<Eigen::Index>(*j);
            const auto c = static_cast<Eigen::Index>(i);
            coupling_(r, c) += g * amp;
            coupling_(c, r) += g * amp;
        }
    }

    std::vector<ModeSpec> modes_;
    std::vector<Coupling> couplings_;
    CouplingForm form_;
    std::shared_ptr<const Basis> basis_;
    Eigen::VectorXd anharmonic_;
    std::vector<Eigen::VectorXd> number_;
    Eigen::MatrixXd coupling_;
    std::vector<std::vector<std::size_t>> blocks_;
};

/// H = sum_i w_i n_i + (a_i/2) n_i(n_i-1) + sum_{i<j} g_ij (a_i^dag a_j + h.c.) [- g_ij (a_i a_j + h.c.)].
inline HamiltonianModel build(const std::vector<ModeSpec>& modes, const std::vector<Coupling>& couplings,
                              CouplingForm form, std::optional<int> excitation_cutoff = std::nullopt) {
    return ModeSystem(modes, couplings, form, excitation_cutoff).hamiltonian();
}

// ---------------------------------------------------------------------------
// Dressed spectrum

inline constexpr double kHybridizationThreshold = 0.5;

struct DressedLabel {
    std::size_t eigenindex = 0;
    Occupation bare;
    double overlap = 0.0;  // |<bare|dressed>|
    bool hybridized = false;
};

struct DressedState {
    double energy = 0.0;  // rad/ns
    DressedLabel label;
    Eigen::VectorXd vector;  // sign fixed so the labeled component is positive
};

class DressedSpectrum {
public:
    DressedSpectrum() = default;
    explicit DressedSpectrum(std::vector<DressedState> states) : states_(std::move(states)) {
        for (std::size_t i = 0; i < states_.size(); ++i) {
            if (!states_[i].label.hybridized) {
                by_label_.emplace(states_[i].label.bare, i);
            }
        }
    }

    [[nodiscard]] const std::vector<DressedState>& states() const { return states_; }
    [[nodiscard]] std::size_t size() const { return states_.size(); }
    [[nodiscard]] const DressedState& operator[](std::size_t i) const { return states_.at(i); }

    [[nodiscard]] const DressedState* find(const Occupation& bare) const {
        auto it = by_label_.find(bare);
        return it == by_label_.end() ? nullptr : &states_[it->second];
    }

    [[nodiscard]] const DressedState& require(const Occupation& bare) const {
        if (const auto* s = find(bare)) {
            return *s;
        }
        throw LabelingError("no unambiguous dressed state for |" + to_string(bare) + ">");
    }

private:
    std::vector<DressedState> states_;
    std::map<Occupation, std::size_t> by_label_;
};

/// Eigen-decomposition with max-overlap labels. Eigenvalues ascending.
inline DressedSpectrum dressed_spectrum(const HamiltonianModel& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix);
    const auto& vals = es.eigenvalues();
    const auto& vecs = es.eigenvectors();
    std::vector<DressedState> out;
    out.reserve(static_cast<std::size_t>(vals.size()));
    for (Eigen::Index k = 0; k < vals.size(); ++k) {
        Eigen::Index arg = 0;
        const double peak = vecs.col(k).cwiseAbs().maxCoeff(&arg);
        DressedState s;
        s.energy = vals[k];
        s.vector = vecs.col(k);
        if (s.vector[arg] < 0.0) {
            s.vector = -s.vector;
        }
        s.label.eigenindex = static_cast<std::size_t>(k);
        s.label.bare = h.basis->state(static_cast<std::size_t>(arg));
        s.label.overlap = peak;
        s.label.hybridized = !(peak * peak > kHybridizationThreshold);
        out.push_back(std::move(s));
    }
    return DressedSpectrum(std::move(out));
}

// ---------------------------------------------------------------------------
// Effective couplings

/// (|x> + |y>)/sqrt(2), e.g. |B> = (|200> + |020>)/sqrt(2).
struct Superposition {
    Occupation first;
    Occupation second;
};

inline Superposition bright_state(const Occupation& x, const Occupation& y) { return {x, y}; }

using StateRef = std::variant<Occupation, Superposition>;

/// Bare matrix element |<a|H|b>| / 2pi in GHz.
inline double effective_coupling(const HamiltonianModel& h, const Occupation& a, const StateRef& b) {
    const auto& basis = *h.basis;
    const auto ia = static_cast<Eigen::Index>(basis.index_of(a));
    if (const auto* occ = std::get_if<Occupation>(&b)) {
        const auto ib = static_cast<Eigen::Index>(basis.index_of(*occ));
        return std::abs(h.matrix(ia, ib)) / kTwoPi;
    }
    const auto& sup = std::get<Superposition>(b);
    const auto i1 = basis.find(sup.first);
    const auto i2 = basis.find(sup.second);
    if (!i1 || !i2 || sup.first == sup.second) {
        throw ParameterDomainError("superposition needs two distinct states inside the truncated basis");
    }
    const double elem = (h.matrix(ia, static_cast<Eigen::Index>(*i1)) + h.matrix(ia, static_cast<Eigen::Index>(*i2))) /
                        std::sqrt(2.0);
    return std::abs(elem) / kTwoPi;
}

/// Effective Hamiltonian (GHz) on the span of the given bare states, obtained by
/// des Cloizeaux block-diagonalization of the dressed states that best overlap them.
inline Eigen::MatrixXd effective_block(const HamiltonianModel& h, const std::vector<Occupation>& states) {
    const auto& basis = *h.basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix);
    const auto n = static_cast<Eigen::Index>(states.size());
    std::vector<Eigen::Index> rows;
    for (const auto& s : states) {
        rows.push_back(static_cast<Eigen::Index>(basis.index_of(s)));
    }
    // Greedy assignment of distinct eigenvectors by weight on the target subspace.
    std::vector<Eigen::Index> cols;
    std::vector<bool> used(static_cast<std::size_t>(es.eigenvalues().size()), false);
    for (Eigen::Index r : rows) {
        Eigen::Index best = -1;
        double best_w = -1.0;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            if (used[static_cast<std::size_t>(k)]) {
                continue;
            }
            const double w = std::abs(es.eigenvectors()(r, k));
            if (w > best_w) {
                best_w = w;
                best = k;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        cols.push_back(best);
    }
    Eigen::MatrixXd s(n, n);
    Eigen::VectorXd e(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        e[j] = es.eigenvalues()[cols[static_cast<std::size_t>(j)]];
        for (Eigen::Index i = 0; i < n; ++i) {
            s(i, j) = es.eigenvectors()(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
        }
    }
    // X = S (S^T S)^{-1/2}; H_eff = X diag(E) X^T.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram(s.transpose() * s);
    if (gram.eigenvalues().minCoeff() < 1e-8) {
        throw LabelingError("target states are not representable by distinct dressed states");
    }
    const Eigen::MatrixXd inv_sqrt = gram.eigenvectors() *
                                     gram.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                     gram.eigenvectors().transpose();
    const Eigen::MatrixXd x = s * inv_sqrt;
    return x * e.asDiagonal() * x.transpose() / kTwoPi;
}

/// Dressed exchange coupling <a|H_eff|b> (GHz), signed.
inline double exchange_coupling(const HamiltonianModel& h, const Occupation& a, const Occupation& b) {
    return effective_block(h, {a, b})(0, 1);
}

/// Dressed <a|H_eff|B> with |B> = (|x> + |y>)/sqrt(2) (GHz), signed.
inline double bright_coupling(const HamiltonianModel& h, const Occupation& a, const Occupation& x,
                              const Occupation& y) {
    const Eigen::MatrixXd heff = effective_block(h, {a, x, y});
    return (heff(0, 1) + heff(0, 2)) / std::sqrt(2.0);
}

}  // namespace czforge::model

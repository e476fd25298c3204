#pragma once

// Time-dependent Schroedinger propagation under frequency pulses.
//
// The integrator is the midpoint piecewise-constant exponential
//   U = prod_k exp(-i H(t_k + dt/2) dt),
// realized either with dense Hermitian eigendecompositions (per independent
// block of the coupling graph) or, for large truncated lattices, with a
// Lanczos approximation of exp(-i H dt) psi.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "czforge/control.hpp"
#include "czforge/errors.hpp"
#include "czforge/model.hpp"

namespace czforge::dynamics {

using cplx = std::complex<double>;
using model::Occupation;

inline constexpr double kUnitarityTolerance = 1e-9;
inline constexpr std::size_t kMinSteps = 100;

struct Propagator {
    Eigen::MatrixXcd unitary;
    double t_gate = 0.0;
    double dt = 0.0;  // effective step, t_gate / steps
    std::size_t steps = 0;
    double unitarity_defect = 0.0;
};

inline double unitarity_defect(const Eigen::MatrixXcd& u) {
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(u.cols(), u.cols());
    return (u.adjoint() * u - id).cwiseAbs().maxCoeff();
}

/// Number of midpoint steps for a duration; the effective step is t_gate / n.
inline std::size_t step_count(double t_gate, double dt) {
    if (!(t_gate > 0.0) || !(dt > 0.0)) {
        throw ParameterDomainError("t_gate and dt must be positive");
    }
    const auto n = static_cast<std::size_t>(std::ceil(t_gate / dt - 1e-9));
    if (n < kMinSteps) {
        std::ostringstream os;
        os << "dt = " << dt << " ns gives only " << n << " steps over " << t_gate << " ns (need >= " << kMinSteps << ")";
        throw ParameterDomainError(os.str());
    }
    return n;
}

/// exp(-i H t) for a Hermitian H via eigendecomposition.
template <class Matrix>
Eigen::MatrixXcd exp_hermitian(const Matrix& h, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const Eigen::VectorXcd phases = (es.eigenvalues().template cast<cplx>() * cplx(0.0, -t)).array().exp().matrix();
    const Eigen::MatrixXcd v = es.eigenvectors().template cast<cplx>();
    return v * phases.asDiagonal() * v.adjoint();
}

inline void check_unitarity(double defect) {
    if (!(defect <= kUnitarityTolerance)) {
        std::ostringstream os;
        os << "unitarity defect " << defect << " exceeds " << kUnitarityTolerance << "; reduce dt";
        throw IntegrationError(os.str());
    }
}

/// Generic midpoint propagation of a Hamiltonian hook t -> H(t) (real or complex Hermitian, rad/ns).
template <class Hook>
Propagator propagate(Hook&& hamiltonian_at, double t_gate, double dt) {
    const std::size_t n = step_count(t_gate, dt);
    const double h = t_gate / static_cast<double>(n);
    Propagator p;
    p.t_gate = t_gate;
    p.dt = h;
    p.steps = n;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * h;
        const auto hk = hamiltonian_at(t);
        if (k == 0) {
            p.unitary = Eigen::MatrixXcd::Identity(hk.rows(), hk.cols());
        }
        p.unitary = exp_hermitian(hk, h) * p.unitary;
    }
    p.unitarity_defect = unitarity_defect(p.unitary);
    check_unitarity(p.unitarity_defect);
    return p;
}

enum class Method {
    Auto,       // Chebyshev
    Dense,      // eigendecomposition per coupling-graph block
    Chebyshev,  // Chebyshev-Bessel series of the step exponential, sparse matvecs
    Krylov,     // Lanczos approximation per state, sparse matvecs
};

inline std::string to_string(Method m) {
    switch (m) {
        case Method::Dense: return "dense";
        case Method::Chebyshev: return "chebyshev";
        case Method::Krylov: return "krylov";
        default: return "auto";
    }
}

/// Applies exp(-i H dt) with H = coupling + diag(d) to a set of column states.
/// All methods realize the same step exponential to round-off.
class StepKernel {
public:
    StepKernel(const model::ModeSystem& system, Method method)
        : system_(&system), method_(method == Method::Auto ? Method::Chebyshev : method) {
        const auto& c = system.coupling_matrix();
        const auto dim = c.rows();
        row_ptr_.assign(static_cast<std::size_t>(dim) + 1, 0);
        row_abs_ = Eigen::VectorXd::Zero(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            for (Eigen::Index j = 0; j < dim; ++j) {
                if (c(i, j) != 0.0) {
                    col_.push_back(j);
                    val_.push_back(c(i, j));
                    row_abs_[i] += std::abs(c(i, j));
                }
            }
            row_ptr_[static_cast<std::size_t>(i) + 1] = col_.size();
        }
        if (method_ == Method::Dense) {
            for (const auto& b : system.blocks()) {
                Block blk;
                blk.index.assign(b.begin(), b.end());
                const auto m = static_cast<Eigen::Index>(b.size());
                blk.coupling.resize(m, m);
                for (Eigen::Index i = 0; i < m; ++i) {
                    for (Eigen::Index j = 0; j < m; ++j) {
                        blk.coupling(i, j) = c(static_cast<Eigen::Index>(b[static_cast<std::size_t>(i)]),
                                               static_cast<Eigen::Index>(b[static_cast<std::size_t>(j)]));
                    }
                }
                blocks_.push_back(std::move(blk));
            }
        }
    }

    [[nodiscard]] Method method() const { return method_; }

    /// psi <- exp(-i (C + diag(d)) dt) psi.
    void apply(const Eigen::VectorXd& d, double dt, Eigen::MatrixXcd& psi) {
        switch (method_) {
            case Method::Dense: apply_dense(d, dt, psi); break;
            case Method::Krylov:
                for (Eigen::Index c = 0; c < psi.cols(); ++c) {
                    Eigen::VectorXcd col = psi.col(c);
                    lanczos_step(d, dt, col);
                    psi.col(c) = col;
                }
                break;
            default: apply_chebyshev(d, dt, psi); break;
        }
    }

    /// Full step unitary.
    [[nodiscard]] Eigen::MatrixXcd step_unitary(const Eigen::VectorXd& d, double dt) {
        const auto dim = static_cast<Eigen::Index>(system_->dimension());
        Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
        apply(d, dt, u);
        return u;
    }

private:
    struct Block {
        std::vector<std::size_t> index;
        Eigen::MatrixXd coupling;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        Eigen::VectorXcd phases;
    };

    // out = (C + diag(d)) x, C in CSR form.
    void hamiltonian_times(const Eigen::VectorXd& d, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const {
        const auto dim = x.rows();
        out.resize(dim, x.cols());
        for (Eigen::Index i = 0; i < dim; ++i) {
            out.row(i) = d[i] * x.row(i);
            for (std::size_t k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1];
                 ++k) {
                out.row(i) += val_[k] * x.row(col_[k]);
            }
        }
    }

    void apply_dense(const Eigen::VectorXd& d, double dt, Eigen::MatrixXcd& psi) {
        const bool reuse = cached_ && dt == cached_dt_ && (d.array() == cached_d_.array()).all();
        for (auto& blk : blocks_) {
            const auto m = static_cast<Eigen::Index>(blk.index.size());
            if (!reuse) {
                Eigen::MatrixXd hb = blk.coupling;
                for (Eigen::Index i = 0; i < m; ++i) {
                    hb(i, i) += d[static_cast<Eigen::Index>(blk.index[static_cast<std::size_t>(i)])];
                }
                blk.solver.compute(hb);
                blk.phases = (blk.solver.eigenvalues().cast<cplx>() * cplx(0.0, -dt)).array().exp().matrix();
            }
            // psi_b <- V diag(phases) V^T psi_b without forming the block exponential.
            const auto& v = blk.solver.eigenvectors();
            Eigen::MatrixXcd sub(m, psi.cols());
            for (Eigen::Index i = 0; i < m; ++i) {
                sub.row(i) = psi.row(static_cast<Eigen::Index>(blk.index[static_cast<std::size_t>(i)]));
            }
            Eigen::MatrixXcd rotated = v.transpose().cast<cplx>() * sub;
            rotated = blk.phases.asDiagonal() * rotated;
            sub.noalias() = v.cast<cplx>() * rotated;
            for (Eigen::Index i = 0; i < m; ++i) {
                psi.row(static_cast<Eigen::Index>(blk.index[static_cast<std::size_t>(i)])) = sub.row(i);
            }
        }
        cached_ = true;
        cached_d_ = d;
        cached_dt_ = dt;
    }

    // exp(-i H dt) = exp(-i c dt) sum_k (2 - delta_k0) (-i)^k J_k(r dt) T_k((H - c)/r)
    // with [c - r, c + r] a Gershgorin enclosure of the spectrum.
    void apply_chebyshev(const Eigen::VectorXd& d, double dt, Eigen::MatrixXcd& psi) const {
        const double lo = (d - row_abs_).minCoeff();
        const double hi = (d + row_abs_).maxCoeff();
        const double center = 0.5 * (lo + hi);
        const double radius = std::max(0.5 * (hi - lo), 1e-12);
        const double x = radius * dt;
        const Eigen::VectorXd shifted = d.array() - center;

        auto scaled = [&](const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out) {
            hamiltonian_times(shifted, in, out);
            out /= radius;
        };

        Eigen::MatrixXcd t_prev = psi;
        Eigen::MatrixXcd t_curr;
        scaled(t_prev, t_curr);
        Eigen::MatrixXcd acc = std::cyl_bessel_j(0.0, x) * t_prev + (2.0 * std::cyl_bessel_j(1.0, x)) * cplx(0.0, -1.0) * t_curr;
        Eigen::MatrixXcd t_next;
        cplx phase(0.0, -1.0);
        constexpr int kMaxTerms = 400;
        for (int k = 2; k < kMaxTerms; ++k) {
            scaled(t_curr, t_next);
            t_next = 2.0 * t_next - t_prev;
            phase *= cplx(0.0, -1.0);
            const double jk = std::cyl_bessel_j(static_cast<double>(k), x);
            acc += (2.0 * jk) * phase * t_next;
            if (k > x && std::abs(jk) < 1e-17) {
                psi = std::polar(1.0, -center * dt) * acc;
                return;
            }
            std::swap(t_prev, t_curr);
            std::swap(t_curr, t_next);
        }
        throw IntegrationError("Chebyshev step did not converge; reduce dt");
    }

    // Lanczos with full reorthogonalization; grows the subspace until the
    // a-posteriori residual falls below tolerance.
    void lanczos_step(const Eigen::VectorXd& d, double dt, Eigen::VectorXcd& psi) const {
        constexpr int kMaxDim = 60;
        constexpr double kTol = 1e-13;
        const double norm = psi.norm();
        if (norm == 0.0) {
            return;
        }
        const auto dim = psi.size();
        Eigen::MatrixXcd v(dim, kMaxDim + 1);
        std::vector<double> alpha;
        std::vector<double> beta;
        v.col(0) = psi / norm;
        Eigen::VectorXcd result;
        Eigen::MatrixXcd w;
        for (int j = 0; j < kMaxDim; ++j) {
            hamiltonian_times(d, v.col(j), w);
            const double a = v.col(j).dot(w.col(0)).real();
            alpha.push_back(a);
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i <= j; ++i) {
                    w.col(0) -= v.col(i).dot(w.col(0)) * v.col(i);
                }
            }
            const double b = w.col(0).norm();
            const int m = j + 1;
            Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                t(i, i) = alpha[static_cast<std::size_t>(i)];
                if (i + 1 < m) {
                    t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
                }
            }
            const Eigen::VectorXcd coeff = exp_hermitian(t, dt).col(0);
            const double residual = b * std::abs(coeff[m - 1]);
            if (residual < kTol || b < 1e-14 || m == dim) {
                result = v.leftCols(m) * coeff;
                break;
            }
            if (j + 1 == kMaxDim) {
                throw IntegrationError("Lanczos step did not converge; reduce dt");
            }
            beta.push_back(b);
            v.col(j + 1) = w.col(0) / b;
        }
        psi = norm * result;
    }

    const model::ModeSystem* system_;
    Method method_;
    std::vector<std::size_t> row_ptr_;
    std::vector<Eigen::Index> col_;
    std::vector<double> val_;
    Eigen::VectorXd row_abs_;
    std::vector<Block> blocks_;
    bool cached_ = false;
    Eigen::VectorXd cached_d_;
    double cached_dt_ = 0.0;
};

/// Full propagator of a mode system under a schedule (lab frame, bare basis).
inline Propagator propagate(const model::ModeSystem& system, const control::PulseSchedule& schedule,
                            Method method = Method::Dense) {
    const std::size_t n = step_count(schedule.t_gate(), schedule.dt());
    const double h = schedule.t_gate() / static_cast<double>(n);
    const auto idle = system.idle_frequencies();
    StepKernel kernel(system, method);
    const auto dim = static_cast<Eigen::Index>(system.dimension());
    Propagator p;
    p.t_gate = schedule.t_gate();
    p.dt = h;
    p.steps = n;
    p.unitary = Eigen::MatrixXcd::Identity(dim, dim);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * h;
        kernel.apply(system.diagonal(schedule.frequencies(t, idle)), h, p.unitary);
    }
    p.unitarity_defect = unitarity_defect(p.unitary);
    check_unitarity(p.unitarity_defect);
    return p;
}

// ---------------------------------------------------------------------------
// Dressed-state evolution

enum class Frame { Lab, RotatingIdle };

/// Rotation applied to dressed-basis amplitudes: c_k -> c_k exp(+i E_k t) in the rotating frame.
struct FrameConvention {
    Frame kind = Frame::RotatingIdle;
    Eigen::VectorXd rotation;  // rad/ns per dressed state; empty for the lab frame

    [[nodiscard]] Eigen::VectorXcd apply(const Eigen::VectorXcd& dressed_amplitudes, double t) const {
        if (kind == Frame::Lab) {
            return dressed_amplitudes;
        }
        const Eigen::VectorXcd phase = (rotation * cplx(0.0, t)).array().exp().matrix();
        return dressed_amplitudes.cwiseProduct(phase);
    }
};

struct TimeSeries {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void write_csv(std::ostream& os) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            os << (i ? "," : "") << columns[i];
        }
        os << '\n';
        os << std::setprecision(12);
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                os << (i ? "," : "") << r[i];
            }
            os << '\n';
        }
    }
};

struct EvolveOptions {
    Method method = Method::Auto;
    Frame frame = Frame::RotatingIdle;
    /// Record a time-series row every this many steps (0 = off).
    std::size_t record_every = 0;
    /// Labels whose populations are recorded; defaults to the initial labels.
    std::vector<Occupation> record_labels;
};

struct EvolvedState {
    Occupation initial;
    Eigen::VectorXcd final_state;  // lab frame, bare basis
    Eigen::VectorXcd amplitudes;   // dressed idle basis, in the requested frame
    std::map<Occupation, double> populations;  // labeled dressed states only
};

struct Evolution {
    model::DressedSpectrum idle_spectrum;
    FrameConvention frame;
    std::vector<EvolvedState> states;
    double t_gate = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;
    double unitarity_defect = 0.0;  // max |<psi_i|psi_j> - delta_ij| over evolved states
    TimeSeries series;

    /// Amplitude <label|psi> of evolved state `s` in the stored frame.
    [[nodiscard]] cplx amplitude(std::size_t s, const Occupation& label) const {
        return states.at(s).amplitudes[static_cast<Eigen::Index>(idle_spectrum.require(label).label.eigenindex)];
    }
};

inline model::DressedSpectrum idle_spectrum(const model::ModeSystem& system, const control::PulseSchedule& schedule) {
    return model::dressed_spectrum(system.hamiltonian(schedule.idle_frequencies(system.idle_frequencies())));
}

/// Evolves the idle-point dressed states named by `initial` through the schedule.
inline Evolution evolve_states(const model::ModeSystem& system, const control::PulseSchedule& schedule,
                               const std::vector<Occupation>& initial, const EvolveOptions& opts = {}) {
    Evolution ev;
    ev.idle_spectrum = idle_spectrum(system, schedule);
    const auto& spec = ev.idle_spectrum;
    const auto dim = static_cast<Eigen::Index>(system.dimension());

    Eigen::MatrixXd dressed(dim, static_cast<Eigen::Index>(spec.size()));
    Eigen::VectorXd energies(static_cast<Eigen::Index>(spec.size()));
    for (std::size_t k = 0; k < spec.size(); ++k) {
        dressed.col(static_cast<Eigen::Index>(k)) = spec[k].vector;
        energies[static_cast<Eigen::Index>(k)] = spec[k].energy;
    }
    ev.frame.kind = opts.frame;
    if (opts.frame == Frame::RotatingIdle) {
        ev.frame.rotation = energies;
    }

    Eigen::MatrixXcd psi(dim, static_cast<Eigen::Index>(initial.size()));
    for (std::size_t s = 0; s < initial.size(); ++s) {
        psi.col(static_cast<Eigen::Index>(s)) = spec.require(initial[s]).vector.cast<cplx>();
    }

    const std::size_t n = step_count(schedule.t_gate(), schedule.dt());
    const double h = schedule.t_gate() / static_cast<double>(n);
    ev.t_gate = schedule.t_gate();
    ev.dt = h;
    ev.steps = n;
    const auto idle = system.idle_frequencies();

    const auto& record_labels = opts.record_labels.empty() ? initial : opts.record_labels;
    std::vector<Eigen::Index> record_index;
    if (opts.record_every > 0) {
        ev.series.columns.push_back("t");
        for (std::size_t s = 0; s < initial.size(); ++s) {
            for (const auto& lab : record_labels) {
                record_index.push_back(static_cast<Eigen::Index>(spec.require(lab).label.eigenindex));
                ev.series.columns.push_back("P" + model::to_string(lab) + "_from_" + model::to_string(initial[s]));
            }
        }
        for (const auto& [mode, drive] : schedule.drives()) {
            ev.series.columns.push_back("omega_" + system.modes().at(mode).name);
        }
    }
    auto record = [&](double t) {
        std::vector<double> row{t};
        const Eigen::MatrixXcd c = dressed.transpose() * psi;
        std::size_t r = 0;
        for (Eigen::Index s = 0; s < psi.cols(); ++s) {
            for (std::size_t l = 0; l < record_labels.size(); ++l, ++r) {
                row.push_back(std::norm(c(record_index[r], s)));
            }
        }
        const auto f = schedule.frequencies(t, idle);
        for (const auto& [mode, drive] : schedule.drives()) {
            row.push_back(f[mode]);
        }
        ev.series.rows.push_back(std::move(row));
    };

    StepKernel kernel(system, opts.method);
    if (opts.record_every > 0) {
        record(0.0);
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * h;
        kernel.apply(system.diagonal(schedule.frequencies(t, idle)), h, psi);
        if (opts.record_every > 0 && ((k + 1) % opts.record_every == 0 || k + 1 == n)) {
            record(static_cast<double>(k + 1) * h);
        }
    }

    const Eigen::MatrixXcd gram = psi.adjoint() * psi;
    ev.unitarity_defect =
        (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    check_unitarity(ev.unitarity_defect);

    for (std::size_t s = 0; s < initial.size(); ++s) {
        EvolvedState es;
        es.initial = initial[s];
        es.final_state = psi.col(static_cast<Eigen::Index>(s));
        es.amplitudes = ev.frame.apply(dressed.transpose() * es.final_state, ev.t_gate);
        for (const auto& d : spec.states()) {
            if (!d.label.hybridized) {
                es.populations[d.label.bare] = std::norm(es.amplitudes[static_cast<Eigen::Index>(d.label.eigenindex)]);
            }
        }
        ev.states.push_back(std::move(es));
    }
    return ev;
}

}  // namespace czforge::dynamics

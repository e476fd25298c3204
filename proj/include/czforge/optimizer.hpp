#pragma once

// Bounded Nelder-Mead simplex minimization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "czforge/errors.hpp"

namespace czforge::optimizer {

using Point = std::vector<double>;
using Objective = std::function<double(const Point&)>;

struct Bounds {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    [[nodiscard]] double width() const { return hi - lo; }
    [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
};

struct NelderMeadConfig {
    Point p0;
    std::vector<Bounds> bounds;
    /// Initial simplex step per coordinate as a fraction of the bound width.
    double step_fraction = 0.05;
    /// Explicit per-coordinate initial steps; overrides step_fraction when set.
    std::vector<double> initial_steps;
    double tol_f = 1e-9;
    std::vector<double> tol_x;
    std::size_t max_iterations = 500;

    // Standard coefficients.
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
};

struct TraceEntry {
    Point p;
    double cost = 0.0;
};

struct OptimizationRun {
    NelderMeadConfig config;
    std::vector<TraceEntry> trace;  // every evaluation, in order
    bool converged = false;
    std::string stop_reason;
    std::size_t iterations = 0;
    Point best_p;
    double best_cost = std::numeric_limits<double>::infinity();

    void write_csv(std::ostream& os, const std::vector<std::string>& names) const {
        os << "iteration";
        for (const auto& n : names) {
            os << ',' << n;
        }
        os << ",cost\n" << std::setprecision(15);
        for (std::size_t i = 0; i < trace.size(); ++i) {
            os << i;
            for (double x : trace[i].p) {
                os << ',' << x;
            }
            os << ',' << trace[i].cost << '\n';
        }
    }
};

/// Mirror a coordinate back into [lo, hi].
inline double fold_into(double x, const Bounds& b) {
    if (!(b.width() > 0.0)) {
        return b.lo;
    }
    for (int i = 0; i < 64 && !b.contains(x); ++i) {
        if (x < b.lo) {
            x = 2.0 * b.lo - x;
        } else if (x > b.hi) {
            x = 2.0 * b.hi - x;
        }
    }
    return std::clamp(x, b.lo, b.hi);
}

inline OptimizationRun minimize(const Objective& f, const NelderMeadConfig& cfg) {
    const std::size_t n = cfg.p0.size();
    if (n == 0) {
        throw ParameterDomainError("empty starting point");
    }
    std::vector<Bounds> bounds = cfg.bounds;
    if (bounds.empty()) {
        bounds.assign(n, Bounds{});
    }
    if (bounds.size() != n) {
        throw ParameterDomainError("bounds size does not match the starting point");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!bounds[i].contains(cfg.p0[i])) {
            throw ParameterDomainError("starting point lies outside its bounds");
        }
    }
    std::vector<double> tol_x = cfg.tol_x;
    if (tol_x.empty()) {
        tol_x.assign(n, 0.0);
    }

    OptimizationRun run;
    run.config = cfg;
    auto evaluate = [&](Point p) {
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = fold_into(p[i], bounds[i]);
        }
        double c = f(p);
        if (std::isnan(c)) {
            c = std::numeric_limits<double>::infinity();
        }
        run.trace.push_back({p, c});
        if (c < run.best_cost) {
            run.best_cost = c;
            run.best_p = p;
        }
        return TraceEntry{std::move(p), c};
    };

    std::vector<TraceEntry> simplex;
    simplex.push_back(evaluate(cfg.p0));
    for (std::size_t i = 0; i < n; ++i) {
        double step = cfg.initial_steps.empty() ? cfg.step_fraction * bounds[i].width() : cfg.initial_steps.at(i);
        if (!std::isfinite(step) || step == 0.0) {
            step = cfg.step_fraction * std::max(1.0, std::abs(cfg.p0[i]));
        }
        Point p = cfg.p0;
        p[i] += step;
        if (!bounds[i].contains(p[i])) {
            p[i] = cfg.p0[i] - step;
        }
        simplex.push_back(evaluate(p));
    }

    auto order = [&] {
        std::stable_sort(simplex.begin(), simplex.end(),
                         [](const TraceEntry& a, const TraceEntry& b) { return a.cost < b.cost; });
    };
    auto combine = [&](const Point& c, const Point& x, double t) {
        // c + t (x - c)
        Point out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = c[i] + t * (x[i] - c[i]);
        }
        return out;
    };

    for (;;) {
        order();
        const double spread = simplex.back().cost - simplex.front().cost;
        bool small = true;
        for (std::size_t v = 1; v <= n && small; ++v) {
            for (std::size_t i = 0; i < n; ++i) {
                if (std::abs(simplex[v].p[i] - simplex[0].p[i]) > tol_x[i]) {
                    small = false;
                    break;
                }
            }
        }
        if (spread < cfg.tol_f) {
            run.converged = true;
            run.stop_reason = "cost spread below tol_f";
            break;
        }
        if (small) {
            run.converged = true;
            run.stop_reason = "simplex diameter below tol_x";
            break;
        }
        if (run.iterations >= cfg.max_iterations) {
            run.stop_reason = "iteration cap";
            break;
        }
        ++run.iterations;

        Point centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t i = 0; i < n; ++i) {
                centroid[i] += simplex[v].p[i] / static_cast<double>(n);
            }
        }
        const TraceEntry& worst = simplex[n];
        const TraceEntry reflected = evaluate(combine(centroid, worst.p, -cfg.reflection));
        if (reflected.cost < simplex[0].cost) {
            TraceEntry expanded = evaluate(combine(centroid, worst.p, -cfg.reflection * cfg.expansion));
            simplex[n] = expanded.cost < reflected.cost ? std::move(expanded) : reflected;
            continue;
        }
        if (reflected.cost < simplex[n - 1].cost) {
            simplex[n] = reflected;
            continue;
        }
        if (reflected.cost < worst.cost) {
            TraceEntry outside = evaluate(combine(centroid, reflected.p, cfg.contraction));
            if (outside.cost <= reflected.cost) {
                simplex[n] = std::move(outside);
                continue;
            }
        } else {
            TraceEntry inside = evaluate(combine(centroid, worst.p, cfg.contraction));
            if (inside.cost < worst.cost) {
                simplex[n] = std::move(inside);
                continue;
            }
        }
        for (std::size_t v = 1; v <= n; ++v) {
            simplex[v] = evaluate(combine(simplex[0].p, simplex[v].p, cfg.shrink));
        }
    }
    return run;
}

}  // namespace czforge::optimizer

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "wtm/electric_graph.hpp"
#include "wtm/error.hpp"
#include "wtm/evs.hpp"
#include "wtm/subsolver.hpp"
#include "wtm/waveform.hpp"
#include "wtm/wtl.hpp"

namespace wtm {

/// Z(t) either as a constant or as samples that must sit exactly on the run grid.
template <typename Scalar>
struct ImpedanceSpec {
    Scalar constant = Scalar(1);
    std::vector<Scalar> times;   // empty for a constant impedance
    std::vector<Scalar> values;

    static ImpedanceSpec constant_value(Scalar z) { return {z, {}, {}}; }
    static ImpedanceSpec sampled(std::vector<Scalar> t, std::vector<Scalar> z) { return {Scalar(0), std::move(t), std::move(z)}; }
    bool is_sampled() const { return !times.empty(); }

    ImpedanceWaveform<Scalar> on(const TimeGrid<Scalar>& grid) const {
        using std::abs;
        if (!is_sampled()) {
            if (!(constant > Scalar(0)))
                throw NonPositiveSample("impedance must satisfy Z(t) > 0; got " + std::to_string(static_cast<double>(constant)), 0);
            return ImpedanceWaveform<Scalar>(wf_constant(grid, constant));
        }
        if (times.size() != grid.n_points() || values.size() != times.size())
            throw GridMismatch("impedance samples: " + std::to_string(times.size()) + " rows for a grid of " +
                               std::to_string(grid.n_points()) + " points");
        const Scalar slack = Scalar(1e-12) * (grid.t_end() - grid.t_start());
        for (std::size_t m = 0; m < times.size(); ++m)
            if (abs(times[m] - grid.time(m)) > slack)
                throw GridMismatch("impedance samples: row " + std::to_string(m) + " is off the run grid");
        typename Waveform<Scalar>::Samples s(static_cast<Index>(values.size()));
        for (std::size_t m = 0; m < values.size(); ++m) s[static_cast<Index>(m)] = values[m];
        return ImpedanceWaveform<Scalar>(Waveform<Scalar>(grid, std::move(s)));
    }
};

template <typename Scalar>
struct RunConfig {
    TimeGrid<Scalar> grid{Scalar(0), Scalar(1), Scalar(0.01)};
    Scalar tol = Scalar(1e-9);
    int max_sweeps = 500;
    int delay = 1;
    ImpedanceSpec<Scalar> impedance;
    std::map<int, ImpedanceSpec<Scalar>> impedance_per_line;  // keyed by WTL id
    InitialWaveformPolicy init = InitialWaveformPolicy::Zero;
    Scalar divergence_cap = Scalar(1e12);
    int workers = 1;
    bool with_reference = false;

    void validate() const {
        if (!(tol > Scalar(0))) throw ValidationError("tol must be positive");
        if (max_sweeps < 1) throw ValidationError("max_sweeps must be at least 1");
        if (delay < 1) throw ValidationError("delay must be at least 1");
        if (!(divergence_cap > Scalar(0))) throw ValidationError("divergence cap must be positive");
        if (workers < 1) throw ValidationError("worker count must be at least 1");
    }
};

template <typename Scalar>
struct SweepState {
    int k = 0;
    std::vector<LocalSolveOutput<Scalar>> outputs;  // per subproblem; empty before the first sweep
    std::vector<Wtl<Scalar>> wtls;                   // indexed by WTL id
};

/// Error of one twin end against the monolithic reference at sweep k.
template <typename Scalar>
struct ReferenceError {
    int k = 0;
    int wtl = 0;
    int end = 1;
    Index vertex = 0;
    Scalar max_err = 0;
};

template <typename Scalar>
struct SweepRecord {
    int k = 0;
    Scalar successive_diff = 0;
    std::vector<Scalar> reference_err;  // per twin end: wtl 0 end 1, wtl 0 end 2, wtl 1 end 1, ...
};

template <typename Scalar>
struct Solution {
    SplitResult<Scalar> split;
    MergedSolution<Scalar> merged;
    int sweeps_used = 0;
    bool converged = false;
    std::vector<SweepRecord<Scalar>> error_curve;
};

/// Runs task(0..count-1) on up to `workers` threads. Results come back in
/// index order; the first failing index's exception is rethrown.
template <typename Task>
auto parallel_execute(std::size_t count, int workers, Task&& task) {
    using R = decltype(task(std::size_t{0}));
    std::vector<std::optional<R>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    auto body = [&](std::size_t idx) {
        try {
            slots[idx].emplace(task(idx));
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    };
    const auto nthreads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
    if (nthreads <= 1) {
        for (std::size_t idx = 0; idx < count; ++idx) body(idx);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(nthreads);
        for (std::size_t t = 0; t < nthreads; ++t)
            pool.emplace_back([&] {
                for (std::size_t idx = next++; idx < count; idx = next++) body(idx);
            });
    }
    std::vector<R> out;
    out.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
        if (errors[idx]) std::rethrow_exception(errors[idx]);
        out.push_back(std::move(*slots[idx]));
    }
    return out;
}

/// Backward Euler on the undecomposed system, same scheme as the subsolver.
template <typename Scalar>
std::vector<Waveform<Scalar>> reference_solve(const OdeSystem<Scalar>& sys, const TimeGrid<Scalar>& grid) {
    const Index n = sys.n;
    const auto steps = static_cast<Index>(grid.n_points());
    const Scalar h = grid.step();
    const DenseMatrix<Scalar> c_over_h = sys.C.to_dense() / h;
    const SpdFactor<Scalar> factor(DenseMatrix<Scalar>(c_over_h + sys.A.to_dense()));
    DenseMatrix<Scalar> x(n, steps);
    x.col(0) = sys.x0;
    DenseVector<Scalar> rhs(n);
    for (Index m = 1; m < steps; ++m) {
        rhs.noalias() = c_over_h * x.col(m - 1);
        rhs += sys.b;
        x.col(m) = factor.solve(rhs);
    }
    std::vector<Waveform<Scalar>> out;
    for (Index v = 0; v < n; ++v) out.emplace_back(grid, x.row(v).transpose().array());
    return out;
}

template <typename Scalar>
std::vector<Wtl<Scalar>> make_wtls(const SplitResult<Scalar>& split, const OdeSystem<Scalar>& sys,
                                   const RunConfig<Scalar>& cfg) {
    std::vector<Wtl<Scalar>> wtls;
    for (const auto& tp : split.twins) {
        auto it = cfg.impedance_per_line.find(tp.wtl);
        const auto& spec = it == cfg.impedance_per_line.end() ? cfg.impedance : it->second;
        Wtl<Scalar> line(tp.wtl, spec.on(cfg.grid), cfg.delay);
        line.init_history(cfg.init, sys.x0[tp.vertex]);
        wtls.push_back(std::move(line));
    }
    return wtls;
}

template <typename Scalar>
SweepState<Scalar> initial_state(const SplitResult<Scalar>& split, const OdeSystem<Scalar>& sys,
                                 const RunConfig<Scalar>& cfg) {
    return {0, {}, make_wtls(split, sys, cfg)};
}

/// Replaces every WTL history with the port states implied by a global
/// solution: u from the waveform of the split vertex, i from the subgraph's
/// backward-Euler residual at that port (zero at the first grid point).
/// Used to seed a sweep at a known fixed point.
template <typename Scalar>
SweepState<Scalar> state_from_global(const SplitResult<Scalar>& split, SweepState<Scalar> base,
                                     const std::vector<Waveform<Scalar>>& global) {
    if (base.wtls.empty()) return base;
    const auto& grid = base.wtls.front().grid();
    const Index steps = static_cast<Index>(grid.n_points());
    const Scalar h = grid.step();
    // Per-subproblem, per-port residual currents.
    std::vector<std::vector<Waveform<Scalar>>> current(split.subs.size());
    for (std::size_t s = 0; s < split.subs.size(); ++s) {
        const auto& sub = split.subs[s];
        DenseMatrix<Scalar> x(sub.n(), steps);
        for (Index l = 0; l < sub.n(); ++l)
            x.row(l) = global.at(static_cast<std::size_t>(sub.global_of[static_cast<std::size_t>(l)])).samples().transpose();
        const DenseMatrix<Scalar> c = sub.C.to_dense();
        const DenseMatrix<Scalar> a = sub.A.to_dense();
        DenseMatrix<Scalar> residual = DenseMatrix<Scalar>::Zero(sub.n(), steps);
        for (Index m = 1; m < steps; ++m)
            residual.col(m) = c * (x.col(m) - x.col(m - 1)) / h + a * x.col(m) - sub.b;
        for (const auto& port : sub.ports)
            current[s].emplace_back(grid, residual.row(port.local).transpose().array());
    }
    auto port_index = [&](std::size_t s, int wtl, int end) {
        const auto& ports = split.subs[s].ports;
        for (std::size_t p = 0; p < ports.size(); ++p)
            if (ports[p].wtl == wtl && ports[p].end == end) return p;
        throw Error("state_from_global: port not found");
    };
    for (const auto& tp : split.twins) {
        auto& line = base.wtls[static_cast<std::size_t>(tp.wtl)];
        const auto& u = global.at(static_cast<std::size_t>(tp.vertex));
        PortState<Scalar> p1{u, current[tp.port1.sub][port_index(tp.port1.sub, tp.wtl, 1)]};
        PortState<Scalar> p2{u, current[tp.port2.sub][port_index(tp.port2.sub, tp.wtl, 2)]};
        const int newest = line.newest();
        Wtl<Scalar> fresh(line.id(), line.impedance(), line.delay());
        for (int k = newest - line.delay(); k <= newest; ++k) fresh.push_history(k, p1, p2);
        line = std::move(fresh);
    }
    return base;
}

/// One Gauss-Jacobi sweep: every subproblem reads only sweep k-delay data,
/// then all port states are committed together.
template <typename Scalar>
SweepState<Scalar> sweep(const SweepState<Scalar>& state, const SplitResult<Scalar>& split,
                         const TimeGrid<Scalar>& grid, int workers = 1) {
    const int k = state.k + 1;
    auto solve_one = [&](std::size_t s) {
        const auto& sub = split.subs[s];
        LocalSolveInput<Scalar> in{sub, {}, {}, grid};
        for (const auto& port : sub.ports) {
            const auto& line = state.wtls.at(static_cast<std::size_t>(port.wtl));
            const int far_end = port.end == 1 ? 2 : 1;
            in.incident.push_back(incident_wave(line.state(k - line.delay(), far_end), line.impedance()));
            in.z.push_back(line.impedance());
        }
        return local_solve(in);
    };
    SweepState<Scalar> next{k, parallel_execute(split.subs.size(), workers, solve_one), state.wtls};

    for (const auto& tp : split.twins) {
        const PortState<Scalar>* ends[2] = {nullptr, nullptr};
        for (const PortRef* ref : {&tp.port1, &tp.port2}) {
            const auto& sub = split.subs[ref->sub];
            for (std::size_t p = 0; p < sub.ports.size(); ++p)
                if (sub.ports[p].wtl == tp.wtl) ends[sub.ports[p].end - 1] = &next.outputs[ref->sub].ports[p];
        }
        next.wtls[static_cast<std::size_t>(tp.wtl)].push_history(k, *ends[0], *ends[1]);
    }
    return next;
}

/// max over twin potentials of |u^k - u^{k-rho}|. Sweep k only depends on
/// sweep k-rho, so with rho > 1 adjacent sweeps belong to separate chains and
/// can coincide long before either has settled.
template <typename Scalar>
Scalar successive_diff(const SweepState<Scalar>& state) {
    Scalar diff = 0;
    for (const auto& line : state.wtls)
        for (int end : {1, 2})
            diff = std::max(diff, wf_max_abs_diff(line.state(state.k, end).u,
                                                  line.state(state.k - line.delay(), end).u));
    return diff;
}

template <typename Scalar>
std::vector<ReferenceError<Scalar>> error_curve_vs_reference(const SweepState<Scalar>& state,
                                                             const SplitResult<Scalar>& split,
                                                             const std::vector<Waveform<Scalar>>& ref) {
    std::vector<ReferenceError<Scalar>> out;
    for (const auto& tp : split.twins) {
        const auto& line = state.wtls.at(static_cast<std::size_t>(tp.wtl));
        const auto& target = ref.at(static_cast<std::size_t>(tp.vertex));
        for (int end : {1, 2})
            out.push_back({state.k, tp.wtl, end, tp.vertex, wf_max_abs_diff(line.state(state.k, end).u, target)});
    }
    return out;
}

template <typename Scalar>
Scalar max_magnitude(const SweepState<Scalar>& state) {
    Scalar mag = 0;
    for (const auto& out : state.outputs) {
        for (const auto& x : out.x) mag = std::max(mag, wf_max_abs(x));
        for (const auto& p : out.ports) mag = std::max(mag, wf_max_abs(p.i));
    }
    return mag;
}

/// Splits the system and iterates sweeps until the twin potentials stop
/// changing (converged), max_sweeps is hit, or a sample exceeds the cap.
template <typename Scalar>
Solution<Scalar> run(const OdeSystem<Scalar>& sys, const PartitionSpec<Scalar>& p, const RunConfig<Scalar>& cfg) {
    if (auto check = validate_system(sys); !check) {
        std::string msg;
        for (const auto& r : check.reasons) msg += (msg.empty() ? "" : "; ") + r;
        throw ValidationError(msg);
    }
    cfg.validate();

    Solution<Scalar> sol;
    sol.split = split(sys, p);
    auto state = initial_state(sol.split, sys, cfg);
    std::optional<std::vector<Waveform<Scalar>>> ref;
    if (cfg.with_reference) ref = reference_solve(sys, cfg.grid);

    for (int k = 1; k <= cfg.max_sweeps; ++k) {
        state = sweep(state, sol.split, cfg.grid, cfg.workers);
        const Scalar mag = max_magnitude(state);
        if (!(mag <= cfg.divergence_cap)) throw DivergenceError(k, static_cast<double>(mag));

        SweepRecord<Scalar> rec{k, successive_diff(state), {}};
        if (ref)
            for (const auto& e : error_curve_vs_reference(state, sol.split, *ref)) rec.reference_err.push_back(e.max_err);
        sol.error_curve.push_back(std::move(rec));
        sol.sweeps_used = k;
        if (sol.error_curve.back().successive_diff <= cfg.tol) {
            sol.converged = true;
            break;
        }
    }

    std::vector<std::vector<Waveform<Scalar>>> per_sub;
    for (auto& out : state.outputs) per_sub.push_back(out.x);
    sol.merged = merge_solution(sol.split, per_sub);
    return sol;
}

using RunConfigd = RunConfig<double>;
using Solutiond = Solution<double>;

}  // namespace wtm

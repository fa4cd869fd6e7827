#pragma once

#include <deque>
#include <string>
#include <utility>

#include "wtm/error.hpp"
#include "wtm/waveform.hpp"

namespace wtm {

/// Potential and outflow current of one line end over the window.
template <typename Scalar>
struct PortState {
    Waveform<Scalar> u;
    Waveform<Scalar> i;
};

/// Characteristic impedance Z(t); every sample strictly positive.
template <typename Scalar>
class ImpedanceWaveform {
public:
    explicit ImpedanceWaveform(Waveform<Scalar> z) : z_(std::move(z)) {
        for (std::size_t m = 0; m < z_.size(); ++m)
            if (!(z_[m] > Scalar(0)))
                throw NonPositiveSample("impedance must satisfy Z(t) > 0; sample " + std::to_string(m) + " is " +
                                            std::to_string(static_cast<double>(z_[m])),
                                        m);
        constant_ = (z_.samples() == z_[0]).all();
    }

    const Waveform<Scalar>& waveform() const { return z_; }
    const TimeGrid<Scalar>& grid() const { return z_.grid(); }
    Scalar operator[](std::size_t m) const { return z_[m]; }
    bool is_constant() const { return constant_; }

private:
    Waveform<Scalar> z_;
    bool constant_ = false;
};

enum class InitialWaveformPolicy { Zero, FlatX0 };

/// Wave arriving from the far end: u_far - Z i_far.
template <typename Scalar>
Waveform<Scalar> incident_wave(const PortState<Scalar>& far, const ImpedanceWaveform<Scalar>& z) {
    detail::require_same_grid(far.u, far.i, "incident_wave");
    detail::require_same_grid(far.u, z.waveform(), "incident_wave");
    return Waveform<Scalar>(far.u.grid(), far.u.samples() - z.waveform().samples() * far.i.samples());
}

/// Waveform transmission line between a twin pair. Sweep k of either end
/// sees the other end's state from sweep k - delay.
template <typename Scalar>
class Wtl {
public:
    Wtl(int id, ImpedanceWaveform<Scalar> z, int delay) : id_(id), z_(std::move(z)), delay_(delay) {
        if (delay < 1) throw Error("WTL delay must be at least one sweep");
    }

    int id() const { return id_; }
    int delay() const { return delay_; }
    const ImpedanceWaveform<Scalar>& impedance() const { return z_; }
    const TimeGrid<Scalar>& grid() const { return z_.grid(); }

    /// Fills sweeps 1-delay .. 0. FlatX0 holds u at `x0` with zero current.
    void init_history(InitialWaveformPolicy policy, Scalar x0 = Scalar(0)) {
        history_.clear();
        const Scalar u0 = policy == InitialWaveformPolicy::FlatX0 ? x0 : Scalar(0);
        const PortState<Scalar> s{wf_constant(grid(), u0), wf_zero(grid())};
        for (int k = 1 - delay_; k <= 0; ++k) history_.push_back({k, s, s});
    }

    void push_history(int k, PortState<Scalar> port1, PortState<Scalar> port2) {
        if (!history_.empty()) {
            if (k == history_.back().k)
                throw HistoryError("WTL " + std::to_string(id_) + ": sweep " + std::to_string(k) + " already pushed");
            if (k != history_.back().k + 1)
                throw HistoryError("WTL " + std::to_string(id_) + ": sweep " + std::to_string(k) +
                                   " pushed out of order");
        }
        if (!(port1.u.grid() == grid()) || !(port2.u.grid() == grid()) || !(port1.i.grid() == grid()) ||
            !(port2.i.grid() == grid()))
            throw GridMismatch("WTL " + std::to_string(id_) + ": port state on a different grid");
        history_.push_back({k, std::move(port1), std::move(port2)});
        while (history_.size() > static_cast<std::size_t>(delay_) + 1) history_.pop_front();
    }

    /// State of `end` (1 or 2) stored for sweep k.
    const PortState<Scalar>& state(int k, int end) const {
        for (const auto& e : history_)
            if (e.k == k) return end == 1 ? e.port1 : e.port2;
        throw HistoryError("WTL " + std::to_string(id_) + ": no history for sweep " + std::to_string(k));
    }

    bool has(int k) const {
        for (const auto& e : history_)
            if (e.k == k) return true;
        return false;
    }

    int newest() const {
        if (history_.empty()) throw HistoryError("WTL " + std::to_string(id_) + ": empty history");
        return history_.back().k;
    }

    /// Incident waves for sweep k: (to port 1, to port 2).
    std::pair<Waveform<Scalar>, Waveform<Scalar>> exchange(int k) const {
        const int src = k - delay_;
        return {incident_wave(state(src, 2), z_), incident_wave(state(src, 1), z_)};
    }

private:
    struct Entry {
        int k;
        PortState<Scalar> port1;
        PortState<Scalar> port2;
    };

    int id_;
    ImpedanceWaveform<Scalar> z_;
    int delay_;
    std::deque<Entry> history_;
};

using PortStated = PortState<double>;
using ImpedanceWaveformd = ImpedanceWaveform<double>;
using Wtld = Wtl<double>;

}  // namespace wtm

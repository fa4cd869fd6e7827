#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "wtm/error.hpp"

namespace wtm {

/// Uniform sampling of the physical time window [t_start, t_end].
template <typename Scalar>
class TimeGrid {
public:
    TimeGrid(Scalar t_start, Scalar t_end, Scalar step) : t_start_(t_start), t_end_(t_end), step_(step) {
        using std::abs;
        using std::isfinite;
        using std::round;
        if (!isfinite(t_start) || !isfinite(t_end) || !isfinite(step))
            throw Error("time grid: non-finite parameter");
        if (!(t_end > t_start)) throw Error("time grid: t_end must exceed t_start");
        if (!(step > Scalar(0))) throw Error("time grid: step must be positive");
        const Scalar span = t_end - t_start;
        const Scalar intervals = round(span / step);
        if (intervals < Scalar(1) || abs(intervals * step - span) > Scalar(1e-12) * span)
            throw Error("time grid: step does not divide the window evenly");
        n_points_ = static_cast<std::size_t>(intervals) + 1;
    }

    Scalar t_start() const { return t_start_; }
    Scalar t_end() const { return t_end_; }
    Scalar step() const { return step_; }
    std::size_t n_points() const { return n_points_; }
    Scalar time(std::size_t m) const { return t_start_ + static_cast<Scalar>(m) * step_; }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
        return a.n_points_ == b.n_points_ && a.t_start_ == b.t_start_ && a.step_ == b.step_ &&
               a.t_end_ == b.t_end_;
    }

private:
    Scalar t_start_;
    Scalar t_end_;
    Scalar step_;
    std::size_t n_points_ = 0;
};

/// A real-valued function of time sampled on a TimeGrid. Immutable once built.
template <typename Scalar>
class Waveform {
public:
    using Samples = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    Waveform(const TimeGrid<Scalar>& grid, Samples samples) : grid_(grid), samples_(std::move(samples)) {
        if (static_cast<std::size_t>(samples_.size()) != grid_.n_points())
            throw GridMismatch("waveform: sample count " + std::to_string(samples_.size()) +
                               " does not match grid size " + std::to_string(grid_.n_points()));
        if (!samples_.allFinite()) throw Error("waveform: non-finite sample");
    }

    const TimeGrid<Scalar>& grid() const { return grid_; }
    const Samples& samples() const { return samples_; }
    std::size_t size() const { return grid_.n_points(); }
    Scalar operator[](std::size_t m) const { return samples_[static_cast<Eigen::Index>(m)]; }

    friend bool operator==(const Waveform& a, const Waveform& b) {
        return a.grid_ == b.grid_ && (a.samples_ == b.samples_).all();
    }

private:
    TimeGrid<Scalar> grid_;
    Samples samples_;
};

using TimeGridd = TimeGrid<double>;
using Waveformd = Waveform<double>;

namespace detail {
template <typename Scalar>
void require_same_grid(const Waveform<Scalar>& a, const Waveform<Scalar>& b, const char* op) {
    if (!(a.grid() == b.grid())) throw GridMismatch(std::string(op) + ": waveforms on different grids");
}
}  // namespace detail

template <typename Scalar>
Waveform<Scalar> wf_constant(const TimeGrid<Scalar>& grid, Scalar value) {
    using std::isfinite;
    if (!isfinite(value)) throw Error("wf_constant: non-finite value");
    return Waveform<Scalar>(grid, Waveform<Scalar>::Samples::Constant(grid.n_points(), value));
}

template <typename Scalar>
Waveform<Scalar> wf_zero(const TimeGrid<Scalar>& grid) {
    return wf_constant(grid, Scalar(0));
}

/// Samplewise a*x + y.
template <typename Scalar>
Waveform<Scalar> wf_axpy(Scalar a, const Waveform<Scalar>& x, const Waveform<Scalar>& y) {
    detail::require_same_grid(x, y, "wf_axpy");
    return Waveform<Scalar>(x.grid(), a * x.samples() + y.samples());
}

/// Samplewise x/z; every z sample must be strictly positive.
template <typename Scalar>
Waveform<Scalar> wf_pointwise_div(const Waveform<Scalar>& x, const Waveform<Scalar>& z) {
    detail::require_same_grid(x, z, "wf_pointwise_div");
    for (std::size_t m = 0; m < z.size(); ++m) {
        if (!(z[m] > Scalar(0)))
            throw NonPositiveSample("wf_pointwise_div: nonpositive divisor at time index " + std::to_string(m), m);
    }
    return Waveform<Scalar>(x.grid(), x.samples() / z.samples());
}

/// max over the grid of |a(t) - b(t)|.
template <typename Scalar>
Scalar wf_max_abs_diff(const Waveform<Scalar>& a, const Waveform<Scalar>& b) {
    detail::require_same_grid(a, b, "wf_max_abs_diff");
    return (a.samples() - b.samples()).abs().maxCoeff();
}

template <typename Scalar>
Scalar wf_max_abs(const Waveform<Scalar>& a) {
    return a.samples().abs().maxCoeff();
}

}  // namespace wtm

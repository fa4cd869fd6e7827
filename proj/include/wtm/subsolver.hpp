#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wtm/error.hpp"
#include "wtm/evs.hpp"
#include "wtm/waveform.hpp"
#include "wtm/wtl.hpp"

namespace wtm {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Cholesky factor of an SPD step matrix; throws if M is not SPD.
template <typename Scalar>
class SpdFactor {
public:
    explicit SpdFactor(const DenseMatrix<Scalar>& m) : llt_(m) {
        if (llt_.info() != Eigen::Success)
            throw FactorizationError("step matrix is not symmetric positive definite");
    }
    DenseVector<Scalar> solve(const DenseVector<Scalar>& rhs) const { return llt_.solve(rhs); }

private:
    Eigen::LLT<DenseMatrix<Scalar>> llt_;
};

template <typename Scalar>
DenseVector<Scalar> linear_solve(const DenseMatrix<Scalar>& m, const DenseVector<Scalar>& rhs) {
    if (m.rows() != m.cols() || m.rows() != rhs.size()) throw Error("linear_solve: dimension mismatch");
    return SpdFactor<Scalar>(m).solve(rhs);
}

/// M = C/h + A + D, with D adding 1/Z at every port row. `z_at_t` is
/// parallel to sub.ports.
template <typename Scalar>
DenseMatrix<Scalar> assemble_step_matrix(const Subproblem<Scalar>& sub, std::span<const Scalar> z_at_t, Scalar h) {
    if (!(h > Scalar(0))) throw Error("assemble_step_matrix: step must be positive");
    if (z_at_t.size() != sub.ports.size()) throw Error("assemble_step_matrix: one impedance per port required");
    DenseMatrix<Scalar> m = sub.C.to_dense() / h + sub.A.to_dense();
    for (std::size_t p = 0; p < sub.ports.size(); ++p) {
        if (!(z_at_t[p] > Scalar(0))) throw NonPositiveSample("assemble_step_matrix: nonpositive impedance", p);
        m(sub.ports[p].local, sub.ports[p].local) += Scalar(1) / z_at_t[p];
    }
    return m;
}

/// Everything one subgraph needs for a sweep. `incident` and `z` are
/// parallel to sub.ports.
template <typename Scalar>
struct LocalSolveInput {
    const Subproblem<Scalar>& sub;
    std::vector<Waveform<Scalar>> incident;
    std::vector<ImpedanceWaveform<Scalar>> z;
    TimeGrid<Scalar> grid;
};

template <typename Scalar>
struct LocalSolveOutput {
    std::vector<Waveform<Scalar>> x;         // per local vertex
    std::vector<PortState<Scalar>> ports;    // parallel to sub.ports
};

/// Backward-Euler march of C x' + (A + D) x = b + r over the grid, where r
/// carries w/Z into each port row; port currents follow i = (w - u)/Z.
template <typename Scalar>
LocalSolveOutput<Scalar> local_solve(const LocalSolveInput<Scalar>& in) {
    const auto& sub = in.sub;
    const auto& grid = in.grid;
    const std::size_t np = sub.ports.size();
    if (in.incident.size() != np || in.z.size() != np)
        throw Error("local_solve: part " + std::to_string(sub.part) + " needs one incident wave and Z per port");
    for (std::size_t p = 0; p < np; ++p) {
        if (!(in.incident[p].grid() == grid) || !(in.z[p].grid() == grid))
            throw GridMismatch("local_solve: port waveform not on the run grid");
    }

    const Index n = sub.n();
    const auto steps = static_cast<Index>(grid.n_points());
    const Scalar h = grid.step();
    const DenseMatrix<Scalar> c_over_h = sub.C.to_dense() / h;

    bool constant_z = true;
    for (const auto& z : in.z) constant_z = constant_z && z.is_constant();

    std::vector<Scalar> z_at(np);
    auto z_samples = [&](Index m) {
        for (std::size_t p = 0; p < np; ++p) z_at[p] = in.z[p][static_cast<std::size_t>(m)];
        return std::span<const Scalar>(z_at);
    };

    DenseMatrix<Scalar> x(n, steps);
    x.col(0) = sub.x0;
    std::optional<SpdFactor<Scalar>> factor;
    if (steps > 1 && constant_z) factor.emplace(assemble_step_matrix(sub, z_samples(1), h));

    DenseVector<Scalar> rhs(n);
    for (Index m = 1; m < steps; ++m) {
        rhs.noalias() = c_over_h * x.col(m - 1);
        rhs += sub.b;
        for (std::size_t p = 0; p < np; ++p) {
            const auto ms = static_cast<std::size_t>(m);
            rhs[sub.ports[p].local] += in.incident[p][ms] / in.z[p][ms];
        }
        if (!constant_z) factor.emplace(assemble_step_matrix(sub, z_samples(m), h));
        x.col(m) = factor->solve(rhs);
    }
    if (!x.allFinite()) throw Error("local_solve: non-finite result in part " + std::to_string(sub.part));

    LocalSolveOutput<Scalar> out;
    out.x.reserve(static_cast<std::size_t>(n));
    for (Index l = 0; l < n; ++l) out.x.emplace_back(grid, x.row(l).transpose().array());
    out.ports.reserve(np);
    for (std::size_t p = 0; p < np; ++p) {
        const auto& u = out.x[static_cast<std::size_t>(sub.ports[p].local)];
        Waveform<Scalar> i(grid, (in.incident[p].samples() - u.samples()) / in.z[p].waveform().samples());
        out.ports.push_back({u, std::move(i)});
    }
    return out;
}

}  // namespace wtm

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wtm/error.hpp"

namespace wtm {

using Index = Eigen::Index;

/// Symmetric matrix kept as its upper half in coordinate form. Entry (i, j)
/// with i <= j stands for both (i, j) and (j, i).
template <typename Scalar>
class SymMatrix {
public:
    using Key = std::pair<Index, Index>;
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    SymMatrix() = default;
    explicit SymMatrix(Index n) : n_(n) {
        if (n < 0) throw Error("SymMatrix: negative dimension");
    }

    Index n() const { return n_; }
    const std::map<Key, Scalar>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    /// Inserts a new entry; (i, j) is normalized to i <= j. Duplicates are rejected.
    void insert(Index i, Index j, Scalar value) {
        using std::isfinite;
        if (i < 0 || j < 0 || i >= n_ || j >= n_)
            throw Error("SymMatrix: index (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
        if (!isfinite(value)) throw Error("SymMatrix: non-finite value");
        if (i > j) std::swap(i, j);
        if (!entries_.emplace(Key{i, j}, value).second)
            throw Error("SymMatrix: duplicate entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }

    /// Adds value into (i, j), creating the entry if absent.
    void accumulate(Index i, Index j, Scalar value) {
        if (i > j) std::swap(i, j);
        entries_[Key{i, j}] += value;
    }

    Scalar operator()(Index i, Index j) const {
        if (i > j) std::swap(i, j);
        auto it = entries_.find(Key{i, j});
        return it == entries_.end() ? Scalar(0) : it->second;
    }

    Dense to_dense() const {
        Dense m = Dense::Zero(n_, n_);
        for (const auto& [key, v] : entries_) {
            m(key.first, key.second) = v;
            m(key.second, key.first) = v;
        }
        return m;
    }

    static SymMatrix from_dense(const Dense& m) {
        SymMatrix s(m.rows());
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i <= j; ++i)
                if (m(i, j) != Scalar(0)) s.insert(i, j, m(i, j));
        return s;
    }

    friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
        return a.n_ == b.n_ && a.entries_ == b.entries_;
    }

private:
    Index n_ = 0;
    std::map<Key, Scalar> entries_;
};

/// C dx/dt + A x = b, x(T1) = x0.
template <typename Scalar>
struct OdeSystem {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Index n = 0;
    SymMatrix<Scalar> C;
    SymMatrix<Scalar> A;
    Vector b;
    Vector x0;

    friend bool operator==(const OdeSystem& l, const OdeSystem& r) {
        return l.n == r.n && l.C == r.C && l.A == r.A && l.b.size() == r.b.size() &&
               l.x0.size() == r.x0.size() && l.b == r.b && l.x0 == r.x0;
    }
};

using SymMatrixd = SymMatrix<double>;
using OdeSystemd = OdeSystem<double>;

/// Outcome of a definiteness check. `value` is the smallest pivot or eigenvalue seen.
struct Check {
    bool ok = false;
    double value = 0.0;
    std::string reason;
    explicit operator bool() const { return ok; }
};

struct SystemCheck {
    bool ok = true;
    std::vector<std::string> reasons;
    explicit operator bool() const { return ok; }
};

template <typename Dense>
typename Dense::Scalar max_abs_diagonal(const Dense& m) {
    return m.rows() == 0 ? typename Dense::Scalar(0) : m.diagonal().cwiseAbs().maxCoeff();
}

/// Positive definiteness via pivoted LDL^T on the dense expansion.
template <typename Scalar>
Check validate_spd(const SymMatrix<Scalar>& M) {
    if (M.n() == 0) return {false, 0.0, "empty matrix"};
    const auto dense = M.to_dense();
    const Scalar tol = Scalar(1e-14) * max_abs_diagonal(dense);
    Eigen::LDLT<typename SymMatrix<Scalar>::Dense> ldlt(dense);
    const Scalar min_pivot = ldlt.vectorD().minCoeff();
    if (ldlt.info() != Eigen::Success || !(min_pivot > tol)) {
        std::ostringstream os;
        os << "not positive definite (smallest pivot " << static_cast<double>(min_pivot) << ")";
        return {false, static_cast<double>(min_pivot), os.str()};
    }
    return {true, static_cast<double>(min_pivot), {}};
}

/// Smallest eigenvalue of the dense expansion.
template <typename Scalar>
Scalar min_eigenvalue(const SymMatrix<Scalar>& M) {
    Eigen::SelfAdjointEigenSolver<typename SymMatrix<Scalar>::Dense> es(M.to_dense(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error("eigenvalue computation failed");
    return es.eigenvalues().minCoeff();
}

/// Symmetric non-negative definiteness: smallest eigenvalue >= -1e-10 * max|diag|.
template <typename Scalar>
Check validate_snnd(const SymMatrix<Scalar>& M) {
    if (M.n() == 0) return {false, 0.0, "empty matrix"};
    const Scalar tol = Scalar(1e-10) * max_abs_diagonal(M.to_dense());
    const Scalar lambda = min_eigenvalue(M);
    if (lambda < -tol) {
        std::ostringstream os;
        os << "not non-negative definite (smallest eigenvalue " << static_cast<double>(lambda) << ")";
        return {false, static_cast<double>(lambda), os.str()};
    }
    return {true, static_cast<double>(lambda), {}};
}

template <typename Scalar>
SystemCheck validate_system(const OdeSystem<Scalar>& sys) {
    SystemCheck out;
    auto fail = [&](std::string r) {
        out.ok = false;
        out.reasons.push_back(std::move(r));
    };
    if (sys.n <= 0) fail("dimension: system has no vertices");
    if (sys.C.n() != sys.n) fail("dimension: C is " + std::to_string(sys.C.n()) + "x" + std::to_string(sys.C.n()));
    if (sys.A.n() != sys.n) fail("dimension: A is " + std::to_string(sys.A.n()) + "x" + std::to_string(sys.A.n()));
    if (sys.b.size() != sys.n) fail("dimension: b has length " + std::to_string(sys.b.size()));
    if (sys.x0.size() != sys.n) fail("dimension: x0 has length " + std::to_string(sys.x0.size()));
    if (!out.ok) return out;
    if (!sys.b.allFinite() || !sys.x0.allFinite()) fail("non-finite entry in b or x0");
    if (auto c = validate_spd(sys.C); !c) fail("SPD check failed for C: " + c.reason);
    if (auto a = validate_spd(sys.A); !a) fail("SPD check failed for A: " + a.reason);
    return out;
}

}  // namespace wtm

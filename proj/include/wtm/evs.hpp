#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wtm/electric_graph.hpp"
#include "wtm/error.hpp"
#include "wtm/waveform.hpp"

namespace wtm {

/// A vertex split into twins between two parts. Fractions are the shares of
/// the diagonal of C, A and of b that go to part_a; part_b receives the rest.
template <typename Scalar>
struct BoundaryVertex {
    Index vertex = 0;
    int part_a = 0;
    int part_b = 0;
    std::optional<Scalar> f_c;
    std::optional<Scalar> f_a;
    std::optional<Scalar> f_b;
};

template <typename Scalar>
struct PartitionSpec {
    std::map<Index, int> interior;
    std::vector<BoundaryVertex<Scalar>> boundary;
    /// Optional explicit part list; when non-empty every part must receive a vertex.
    std::vector<int> declared_parts;
};

/// One end of a WTL inside a subproblem.
struct Port {
    Index local = 0;
    int wtl = 0;
    int end = 1;  // 1 or 2
};

template <typename Scalar>
struct Subproblem {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    int part = 0;
    std::map<Index, Index> local_index;  // global vertex -> local row
    std::vector<Index> global_of;        // local row -> global vertex
    SymMatrix<Scalar> C;
    SymMatrix<Scalar> A;
    Vector b;
    Vector x0;
    std::vector<Port> ports;

    Index n() const { return static_cast<Index>(global_of.size()); }
};

struct PortRef {
    std::size_t sub = 0;  // position in the split's subproblem list
    int part = 0;
    Index local = 0;
};

template <typename Scalar>
struct TwinPair {
    int wtl = 0;
    Index vertex = 0;
    PortRef port1;  // part_a side
    PortRef port2;  // part_b side
    Scalar f_c = 0.5;
    Scalar f_a = 0.5;
    Scalar f_b = 0.5;
};

template <typename Scalar>
struct SplitResult {
    std::vector<Subproblem<Scalar>> subs;  // ordered by part id
    std::vector<TwinPair<Scalar>> twins;   // ordered by vertex; wtl id == position
};

/// Proportional share of |A| off-diagonal weight from v into part_a, clamped
/// to [0.1, 0.9]; 0.5 for a vertex with no off-diagonal entries. Returns (fC, fA, fb).
template <typename Scalar>
std::array<Scalar, 3> default_fractions(const OdeSystem<Scalar>& sys, const PartitionSpec<Scalar>& p, Index v,
                                        int part_a, int /*part_b*/) {
    using std::abs;
    Scalar total = 0;
    Scalar into_a = 0;
    for (const auto& [key, value] : sys.A.entries()) {
        if (key.first == key.second) continue;
        Index other;
        if (key.first == v)
            other = key.second;
        else if (key.second == v)
            other = key.first;
        else
            continue;
        total += abs(value);
        auto it = p.interior.find(other);
        if (it != p.interior.end() && it->second == part_a) into_a += abs(value);
    }
    if (total == Scalar(0)) return {Scalar(0.5), Scalar(0.5), Scalar(0.5)};
    const Scalar f = std::clamp(into_a / total, Scalar(0.1), Scalar(0.9));
    return {f, f, f};
}

namespace detail {

template <typename Scalar>
void check_fraction(const std::optional<Scalar>& f, Index v) {
    if (f && !(*f >= Scalar(0) && *f <= Scalar(1)))
        throw PartitionError("boundary vertex " + std::to_string(v) + ": fraction outside [0,1]");
}

}  // namespace detail

/// Electric vertex splitting of `sys` along the boundary of `p`. With
/// check_snnd off, subgraphs are returned unchecked (for reporting tools).
template <typename Scalar>
SplitResult<Scalar> split(const OdeSystem<Scalar>& sys, const PartitionSpec<Scalar>& p, bool check_snnd = true) {
    const Index n = sys.n;
    if (n <= 0) throw PartitionError("cannot split an empty system");

    // role[v]: -1 unassigned, 0 interior, 1 boundary
    std::vector<int> role(static_cast<std::size_t>(n), -1);
    std::vector<int> part_of(static_cast<std::size_t>(n), 0);
    std::vector<std::size_t> boundary_slot(static_cast<std::size_t>(n), 0);
    std::set<int> parts;

    for (const auto& [v, part] : p.interior) {
        if (v < 0 || v >= n) throw PartitionError("interior vertex " + std::to_string(v) + " out of range");
        role[static_cast<std::size_t>(v)] = 0;
        part_of[static_cast<std::size_t>(v)] = part;
        parts.insert(part);
    }
    for (std::size_t k = 0; k < p.boundary.size(); ++k) {
        const auto& bv = p.boundary[k];
        if (bv.vertex < 0 || bv.vertex >= n)
            throw PartitionError("boundary vertex " + std::to_string(bv.vertex) + " out of range");
        auto& r = role[static_cast<std::size_t>(bv.vertex)];
        if (r != -1) throw PartitionError("vertex " + std::to_string(bv.vertex) + " assigned more than once");
        if (bv.part_a == bv.part_b)
            throw PartitionError("boundary vertex " + std::to_string(bv.vertex) + " joins a part to itself");
        detail::check_fraction(bv.f_c, bv.vertex);
        detail::check_fraction(bv.f_a, bv.vertex);
        detail::check_fraction(bv.f_b, bv.vertex);
        r = 1;
        boundary_slot[static_cast<std::size_t>(bv.vertex)] = k;
        parts.insert(bv.part_a);
        parts.insert(bv.part_b);
    }
    for (Index v = 0; v < n; ++v)
        if (role[static_cast<std::size_t>(v)] == -1)
            throw PartitionError("vertex " + std::to_string(v) + " is not assigned to any part");

    if (!p.declared_parts.empty()) {
        std::set<int> declared(p.declared_parts.begin(), p.declared_parts.end());
        for (int part : parts)
            if (!declared.count(part)) throw PartitionError("part " + std::to_string(part) + " is not declared");
        for (int part : declared)
            if (!parts.count(part)) throw PartitionError("part " + std::to_string(part) + " has no vertices");
    }

    auto edge_check = [&](const SymMatrix<Scalar>& M, const char* name) {
        for (const auto& [key, value] : M.entries()) {
            const auto [u, v] = key;
            if (u == v || value == Scalar(0)) continue;
            const int ru = role[static_cast<std::size_t>(u)];
            const int rv = role[static_cast<std::size_t>(v)];
            const std::string edge = std::string(name) + " edge (" + std::to_string(u) + "," + std::to_string(v) + ")";
            if (ru == 1 && rv == 1) throw PartitionError(edge + " connects two boundary vertices");
            if (ru == 0 && rv == 0) {
                if (part_of[static_cast<std::size_t>(u)] != part_of[static_cast<std::size_t>(v)])
                    throw PartitionError(edge + " crosses parts " +
                                         std::to_string(part_of[static_cast<std::size_t>(u)]) + " and " +
                                         std::to_string(part_of[static_cast<std::size_t>(v)]));
                continue;
            }
            const Index in = ru == 0 ? u : v;
            const Index bd = ru == 0 ? v : u;
            const auto& bv = p.boundary[boundary_slot[static_cast<std::size_t>(bd)]];
            const int pin = part_of[static_cast<std::size_t>(in)];
            if (pin != bv.part_a && pin != bv.part_b)
                throw PartitionError(edge + " joins boundary vertex " + std::to_string(bd) + " to part " +
                                     std::to_string(pin) + " which it does not border");
        }
    };
    edge_check(sys.C, "C");
    edge_check(sys.A, "A");

    SplitResult<Scalar> out;
    std::map<int, std::size_t> sub_of_part;
    for (int part : parts) {
        sub_of_part[part] = out.subs.size();
        Subproblem<Scalar> s;
        s.part = part;
        out.subs.push_back(std::move(s));
    }

    auto add_local = [&](int part, Index v) {
        auto& s = out.subs[sub_of_part.at(part)];
        s.local_index[v] = static_cast<Index>(s.global_of.size());
        s.global_of.push_back(v);
    };
    for (Index v = 0; v < n; ++v) {
        const auto sv = static_cast<std::size_t>(v);
        if (role[sv] == 0) {
            add_local(part_of[sv], v);
        } else {
            const auto& bv = p.boundary[boundary_slot[sv]];
            add_local(bv.part_a, v);
            add_local(bv.part_b, v);
        }
    }

    for (auto& s : out.subs) {
        const Index m = s.n();
        s.C = SymMatrix<Scalar>(m);
        s.A = SymMatrix<Scalar>(m);
        s.b = Subproblem<Scalar>::Vector::Zero(m);
        s.x0 = Subproblem<Scalar>::Vector::Zero(m);
        for (Index l = 0; l < m; ++l) s.x0[l] = sys.x0[s.global_of[static_cast<std::size_t>(l)]];
    }

    // Twins, in ascending vertex order.
    for (Index v = 0; v < n; ++v) {
        const auto sv = static_cast<std::size_t>(v);
        if (role[sv] != 1) continue;
        const auto& bv = p.boundary[boundary_slot[sv]];
        const auto defaults = default_fractions(sys, p, v, bv.part_a, bv.part_b);
        TwinPair<Scalar> tp;
        tp.wtl = static_cast<int>(out.twins.size());
        tp.vertex = v;
        tp.f_a = bv.f_a.value_or(defaults[1]);
        tp.f_c = bv.f_c.value_or(bv.f_a ? *bv.f_a : defaults[0]);
        tp.f_b = bv.f_b.value_or(bv.f_a ? *bv.f_a : defaults[2]);
        const std::size_t sa = sub_of_part.at(bv.part_a);
        const std::size_t sb = sub_of_part.at(bv.part_b);
        tp.port1 = {sa, bv.part_a, out.subs[sa].local_index.at(v)};
        tp.port2 = {sb, bv.part_b, out.subs[sb].local_index.at(v)};
        out.subs[sa].ports.push_back({tp.port1.local, tp.wtl, 1});
        out.subs[sb].ports.push_back({tp.port2.local, tp.wtl, 2});
        out.twins.push_back(tp);
    }
    std::vector<const TwinPair<Scalar>*> twin_of(static_cast<std::size_t>(n), nullptr);
    for (const auto& tp : out.twins) twin_of[static_cast<std::size_t>(tp.vertex)] = &tp;

    auto distribute = [&](const SymMatrix<Scalar>& M, SymMatrix<Scalar> Subproblem<Scalar>::*field, bool is_c) {
        for (const auto& [key, value] : M.entries()) {
            const auto [u, v] = key;
            const auto su = static_cast<std::size_t>(u);
            if (u == v) {
                if (role[su] == 0) {
                    auto& s = out.subs[sub_of_part.at(part_of[su])];
                    const Index l = s.local_index.at(u);
                    (s.*field).accumulate(l, l, value);
                } else {
                    const auto& tp = *twin_of[su];
                    const Scalar f = is_c ? tp.f_c : tp.f_a;
                    (out.subs[tp.port1.sub].*field).accumulate(tp.port1.local, tp.port1.local, f * value);
                    (out.subs[tp.port2.sub].*field).accumulate(tp.port2.local, tp.port2.local, (Scalar(1) - f) * value);
                }
                continue;
            }
            if (value == Scalar(0)) continue;
            const Index in = role[su] == 0 ? u : v;
            auto& s = out.subs[sub_of_part.at(part_of[static_cast<std::size_t>(in)])];
            (s.*field).accumulate(s.local_index.at(u), s.local_index.at(v), value);
        }
    };
    distribute(sys.C, &Subproblem<Scalar>::C, true);
    distribute(sys.A, &Subproblem<Scalar>::A, false);

    for (Index v = 0; v < n; ++v) {
        const auto sv = static_cast<std::size_t>(v);
        if (role[sv] == 0) {
            auto& s = out.subs[sub_of_part.at(part_of[sv])];
            s.b[s.local_index.at(v)] += sys.b[v];
        } else {
            const auto& tp = *twin_of[sv];
            out.subs[tp.port1.sub].b[tp.port1.local] += tp.f_b * sys.b[v];
            out.subs[tp.port2.sub].b[tp.port2.local] += (Scalar(1) - tp.f_b) * sys.b[v];
        }
    }

    for (const auto& s : out.subs) {
        if (!check_snnd) break;
        if (auto c = validate_snnd(s.C); !c)
            throw PartitionError("part " + std::to_string(s.part) + ": C " + c.reason);
        if (auto a = validate_snnd(s.A); !a)
            throw PartitionError("part " + std::to_string(s.part) + ": A " + a.reason);
    }
    return out;
}

/// Sums every twin pair back into one vertex. x0 is taken from the part_a twin.
template <typename Scalar>
OdeSystem<Scalar> reassemble(const SplitResult<Scalar>& split, Index n) {
    OdeSystem<Scalar> sys;
    sys.n = n;
    sys.C = SymMatrix<Scalar>(n);
    sys.A = SymMatrix<Scalar>(n);
    sys.b = OdeSystem<Scalar>::Vector::Zero(n);
    sys.x0 = OdeSystem<Scalar>::Vector::Zero(n);
    for (const auto& s : split.subs) {
        auto g = [&](Index l) { return s.global_of[static_cast<std::size_t>(l)]; };
        for (const auto& [key, v] : s.C.entries()) sys.C.accumulate(g(key.first), g(key.second), v);
        for (const auto& [key, v] : s.A.entries()) sys.A.accumulate(g(key.first), g(key.second), v);
        for (Index l = 0; l < s.n(); ++l) {
            sys.b[g(l)] += s.b[l];
            sys.x0[g(l)] = s.x0[l];
        }
    }
    return sys;
}

template <typename Scalar>
struct TwinReport {
    int wtl = 0;
    Index vertex = 0;
    Waveform<Scalar> u1;
    Waveform<Scalar> u2;
    Scalar mismatch = 0;
};

template <typename Scalar>
struct MergedSolution {
    std::vector<Waveform<Scalar>> global;  // one per original vertex
    std::vector<TwinReport<Scalar>> twins;
};

/// Maps per-subproblem waveforms back onto the original vertices; split
/// vertices get the twin average plus a mismatch report.
template <typename Scalar>
MergedSolution<Scalar> merge_solution(const SplitResult<Scalar>& split,
                                      const std::vector<std::vector<Waveform<Scalar>>>& per_sub) {
    if (per_sub.size() != split.subs.size()) throw Error("merge_solution: missing subproblem waveforms");
    Index n = 0;
    for (std::size_t k = 0; k < split.subs.size(); ++k) {
        if (static_cast<Index>(per_sub[k].size()) != split.subs[k].n())
            throw Error("merge_solution: missing waveform in part " + std::to_string(split.subs[k].part));
        for (Index g : split.subs[k].global_of) n = std::max(n, g + 1);
    }
    std::vector<std::optional<Waveform<Scalar>>> slots(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < split.subs.size(); ++k) {
        const auto& s = split.subs[k];
        for (Index l = 0; l < s.n(); ++l) slots[static_cast<std::size_t>(s.global_of[static_cast<std::size_t>(l)])] =
            per_sub[k][static_cast<std::size_t>(l)];
    }
    MergedSolution<Scalar> out;
    for (const auto& tp : split.twins) {
        const auto& u1 = per_sub[tp.port1.sub][static_cast<std::size_t>(tp.port1.local)];
        const auto& u2 = per_sub[tp.port2.sub][static_cast<std::size_t>(tp.port2.local)];
        const Scalar mismatch = wf_max_abs_diff(u1, u2);
        slots[static_cast<std::size_t>(tp.vertex)] =
            Waveform<Scalar>(u1.grid(), Scalar(0.5) * (u1.samples() + u2.samples()));
        out.twins.push_back({tp.wtl, tp.vertex, u1, u2, mismatch});
    }
    for (std::size_t v = 0; v < slots.size(); ++v) {
        if (!slots[v]) throw Error("merge_solution: no waveform for vertex " + std::to_string(v));
        out.global.push_back(*slots[v]);
    }
    return out;
}

}  // namespace wtm

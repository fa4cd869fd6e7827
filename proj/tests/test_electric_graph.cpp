#include <doctest.h>

#include <cmath>
#include <random>

#include "wtm/electric_graph.hpp"

using namespace wtm;

namespace {

SymMatrixd make(std::initializer_list<std::initializer_list<double>> rows) {
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
    Index i = 0;
    for (auto r : rows) {
        Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return SymMatrixd::from_dense(m);
}

// Laplace expansion, independent of any factorization.
double det(const std::vector<std::vector<double>>& m) {
    const std::size_t n = m.size();
    if (n == 1) return m[0][0];
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<std::vector<double>> minor;
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<double> row;
            for (std::size_t k = 0; k < n; ++k)
                if (k != c) row.push_back(m[r][k]);
            minor.push_back(row);
        }
        acc += (c % 2 ? -1.0 : 1.0) * m[0][c] * det(minor);
    }
    return acc;
}

// Sylvester's criterion; returns the smallest leading minor.
double smallest_leading_minor(const Eigen::MatrixXd& a) {
    double smallest = INFINITY;
    for (Index k = 1; k <= a.rows(); ++k) {
        std::vector<std::vector<double>> m(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k)));
        for (Index i = 0; i < k; ++i)
            for (Index j = 0; j < k; ++j) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = a(i, j);
        smallest = std::min(smallest, det(m));
    }
    return smallest;
}

// Roots of the characteristic polynomial of a symmetric 2x2.
std::pair<double, double> eig2(double a, double b, double d) {
    const double tr = a + d, dt = a * d - b * b;
    const double disc = std::sqrt(tr * tr - 4 * dt);
    return {(tr - disc) / 2, (tr + disc) / 2};
}

}  // namespace

TEST_CASE("SymMatrix storage") {
    SymMatrixd m(2);
    m.insert(1, 0, 4.0);
    CHECK(m(0, 1) == 4.0);
    CHECK(m(1, 0) == 4.0);
    CHECK_THROWS(m.insert(0, 1, 1.0));
    CHECK_THROWS(m.insert(0, 2, 1.0));
    auto d = m.to_dense();
    CHECK(d(0, 1) == d(1, 0));
}

TEST_CASE("validate_spd examples") {
    auto [l1, l2] = eig2(2, -1, 2);
    CHECK(l1 == doctest::Approx(1.0));
    CHECK(l2 == doctest::Approx(3.0));
    CHECK(validate_spd(make({{2, -1}, {-1, 2}})).ok);

    auto [m1, m2] = eig2(1, 2, 1);
    CHECK(m1 == doctest::Approx(-1.0));
    (void)m2;
    auto bad = validate_spd(make({{1, 2}, {2, 1}}));
    CHECK_FALSE(bad.ok);
    CHECK(bad.reason.find("positive definite") != std::string::npos);

    CHECK(validate_spd(make({{3}})).ok);
    CHECK_FALSE(validate_spd(make({{0}})).ok);
}

TEST_CASE("validate_snnd examples") {
    auto [l1, l2] = eig2(1, -1, 1);
    CHECK(l1 == doctest::Approx(0.0));
    CHECK(l2 == doctest::Approx(2.0));
    CHECK(validate_snnd(make({{1, -1}, {-1, 1}})).ok);
    CHECK_FALSE(validate_spd(make({{1, -1}, {-1, 1}})).ok);
    CHECK(validate_snnd(SymMatrixd(1)).ok);  // [[0]]
    CHECK_FALSE(validate_snnd(make({{-1}})).ok);
}

TEST_CASE("validate_system") {
    OdeSystemd sys;
    sys.n = 1;
    sys.C = make({{3}});
    sys.A = make({{1.5}});
    sys.b = Eigen::VectorXd::Constant(1, 3.0);
    sys.x0 = Eigen::VectorXd::Zero(1);
    CHECK(validate_system(sys).ok);

    auto neg = sys;
    neg.A = make({{-1.5}});
    auto r = validate_system(neg);
    CHECK_FALSE(r.ok);
    REQUIRE(r.reasons.size() == 1);
    CHECK(r.reasons[0].find("SPD") != std::string::npos);

    auto shortb = sys;
    shortb.b = Eigen::VectorXd::Zero(2);
    auto d = validate_system(shortb);
    CHECK_FALSE(d.ok);
    CHECK(d.reasons[0].find("dimension") != std::string::npos);
}

TEST_CASE("validate_spd agrees with leading principal minors") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    int agreed = 0, spd_seen = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const Index n = 1 + trial % 6;
        Eigen::MatrixXd r(n, n);
        for (auto& v : r.reshaped()) v = dist(rng);
        // Shift the spectrum so roughly half the samples are SPD.
        Eigen::MatrixXd m = r * r.transpose() - 0.4 * static_cast<double>(n) * dist(rng) * Eigen::MatrixXd::Identity(n, n);
        m = 0.5 * (m + m.transpose());
        const double minor = smallest_leading_minor(m);
        if (std::abs(minor) < 1e-8) continue;
        const bool oracle = minor > 0;
        const auto s = SymMatrixd::from_dense(m);
        CHECK(validate_spd(s).ok == oracle);
        if (validate_spd(s).ok) {
            CHECK(validate_snnd(s).ok);
            ++spd_seen;
        }
        ++agreed;
    }
    CHECK(agreed > 300);
    CHECK(spd_seen > 50);
}

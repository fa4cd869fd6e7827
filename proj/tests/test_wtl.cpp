#include <doctest.h>

#include <random>

#include "wtm/wtl.hpp"

using namespace wtm;

namespace {

const TimeGridd kGrid(0.0, 1.0, 0.1);

Waveformd c(double v) { return wf_constant(kGrid, v); }

Wtld line(int delay = 1, double z = 1.5) { return Wtld(0, ImpedanceWaveformd(c(z)), delay); }

}  // namespace

TEST_CASE("incident_wave") {
    ImpedanceWaveformd z(c(1.5));
    CHECK((incident_wave(PortStated{c(1.0), c(0.5)}, z).samples() == 0.25).all());
    CHECK((incident_wave(PortStated{c(0.0), c(0.0)}, z).samples() == 0.0).all());
    CHECK((incident_wave(PortStated{c(1.0), c(-2.0)}, z).samples() == 4.0).all());
    CHECK_THROWS_AS(incident_wave(PortStated{wf_zero(TimeGridd(0, 1, 0.5)), wf_zero(TimeGridd(0, 1, 0.5))}, z),
                    GridMismatch);
}

TEST_CASE("impedance must be strictly positive") {
    CHECK_THROWS_AS(ImpedanceWaveformd(c(0.0)), NonPositiveSample);
    CHECK_THROWS_AS(ImpedanceWaveformd(c(-1.0)), NonPositiveSample);
    Eigen::ArrayXd s = Eigen::ArrayXd::Constant(11, 2.0);
    s[7] = -0.1;
    try {
        ImpedanceWaveformd bad(Waveformd(kGrid, s));
        FAIL("accepted a negative sample");
    } catch (const NonPositiveSample& e) {
        CHECK(e.index() == 7);
    }
    CHECK(ImpedanceWaveformd(c(2.0)).is_constant());
    s[7] = 1.0;
    CHECK_FALSE(ImpedanceWaveformd(Waveformd(kGrid, s)).is_constant());
}

TEST_CASE("exchange with zero initial history") {
    auto l = line();
    l.init_history(InitialWaveformPolicy::Zero);
    auto [w1, w2] = l.exchange(1);
    CHECK((w1.samples() == 0.0).all());
    CHECK((w2.samples() == 0.0).all());
}

TEST_CASE("exchange reads the far end") {
    auto l = line();
    l.init_history(InitialWaveformPolicy::Zero);
    l.push_history(1, {c(1.0), c(0.5)}, {c(1.0), c(-2.0)});
    auto [w1, w2] = l.exchange(2);
    CHECK((w1.samples() == 4.0).all());   // from port 2
    CHECK((w2.samples() == 0.25).all());  // from port 1

    l.push_history(2, {c(3.0), c(1.0)}, {c(3.0), c(1.0)});
    auto [s1, s2] = l.exchange(3);
    CHECK(s1 == s2);
}

TEST_CASE("push_history guards and delay indexing") {
    auto l = line(1);
    l.init_history(InitialWaveformPolicy::Zero);
    CHECK_THROWS_AS(l.push_history(0, {c(1), c(1)}, {c(1), c(1)}), HistoryError);
    l.push_history(1, {c(1), c(0)}, {c(1), c(0)});
    CHECK_THROWS_AS(l.push_history(1, {c(1), c(0)}, {c(1), c(0)}), HistoryError);
    CHECK_THROWS_AS(l.push_history(3, {c(1), c(0)}, {c(1), c(0)}), HistoryError);

    auto d2 = line(2);
    d2.init_history(InitialWaveformPolicy::Zero);
    CHECK(d2.has(-1));
    CHECK(d2.has(0));
    d2.push_history(1, {c(7), c(0)}, {c(7), c(0)});
    // k=2 with delay 2 reads sweep 0, not sweep 1.
    auto [w1, w2] = d2.exchange(2);
    CHECK((w1.samples() == 0.0).all());
    auto [x1, x2] = d2.exchange(3);
    CHECK((x1.samples() == 7.0).all());
    d2.push_history(2, {c(8), c(0)}, {c(8), c(0)});
    d2.push_history(3, {c(9), c(0)}, {c(9), c(0)});
    CHECK_FALSE(d2.has(0));  // evicted beyond capacity delay+1
    CHECK_THROWS_AS(d2.exchange(2), HistoryError);
}

TEST_CASE("init_history policies") {
    auto l = line(2);
    l.init_history(InitialWaveformPolicy::FlatX0, 2.0);
    CHECK((l.state(0, 1).u.samples() == 2.0).all());
    CHECK((l.state(-1, 2).u.samples() == 2.0).all());
    CHECK((l.state(0, 1).i.samples() == 0.0).all());

    auto z = line();
    z.init_history(InitialWaveformPolicy::FlatX0, 0.0);
    auto y = line();
    y.init_history(InitialWaveformPolicy::Zero);
    CHECK(z.state(0, 1).u == y.state(0, 1).u);
}

TEST_CASE("fixed-point consistency of the line equations") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    auto rnd = [&] {
        Eigen::ArrayXd s(11);
        for (auto& v : s) v = dist(rng);
        return Waveformd(kGrid, s);
    };
    Eigen::ArrayXd zs(11);
    for (auto& v : zs) v = 0.5 + std::abs(dist(rng));
    ImpedanceWaveformd z(Waveformd(kGrid, zs));
    Wtld l(0, z, 1);
    l.init_history(InitialWaveformPolicy::Zero);
    auto u = rnd();
    auto i1 = rnd();
    auto i2 = wf_axpy(-1.0, i1, wf_zero(kGrid));
    l.push_history(1, {u, i1}, {u, i2});
    auto [w1, w2] = l.exchange(2);
    // Port equations u + Z i_self = w must hold for the same state.
    Eigen::ArrayXd lhs1 = u.samples() + zs * i1.samples();
    Eigen::ArrayXd lhs2 = u.samples() + zs * i2.samples();
    CHECK((lhs1 - w1.samples()).abs().maxCoeff() <= 1e-13);
    CHECK((lhs2 - w2.samples()).abs().maxCoeff() <= 1e-13);
}

TEST_CASE("exchange is linear in the stored history") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    auto rnd = [&] {
        Eigen::ArrayXd s(11);
        for (auto& v : s) v = dist(rng);
        return Waveformd(kGrid, s);
    };
    const double alpha = 0.7, beta = -1.3;
    PortStated a1{rnd(), rnd()}, a2{rnd(), rnd()}, b1{rnd(), rnd()}, b2{rnd(), rnd()};
    auto mix = [&](const PortStated& x, const PortStated& y) {
        return PortStated{Waveformd(kGrid, alpha * x.u.samples() + beta * y.u.samples()),
                          Waveformd(kGrid, alpha * x.i.samples() + beta * y.i.samples())};
    };
    auto ex = [&](const PortStated& p1, const PortStated& p2) {
        auto l = line(1, 1.7);
        l.init_history(InitialWaveformPolicy::Zero);
        l.push_history(1, p1, p2);
        return l.exchange(2);
    };
    auto [ea1, ea2] = ex(a1, a2);
    auto [eb1, eb2] = ex(b1, b2);
    auto [em1, em2] = ex(mix(a1, b1), mix(a2, b2));
    CHECK((em1.samples() - (alpha * ea1.samples() + beta * eb1.samples())).abs().maxCoeff() <= 1e-13);
    CHECK((em2.samples() - (alpha * ea2.samples() + beta * eb2.samples())).abs().maxCoeff() <= 1e-13);
}

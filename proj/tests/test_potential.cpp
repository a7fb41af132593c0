#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "qle/potential.hpp"
#include "qle/states.hpp"

using namespace qle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TrigPotential random_potential(oracle::Gen& gen, std::vector<oracle::Coeff>* full = nullptr) {
    std::map<Mode, cplx> cs;
    cs[{0, 0}] = gen.uniform(-1, 1);
    while (cs.size() < 5) {
        const Mode k{gen.integer(-3, 3), gen.integer(-3, 3)};
        if (k == Mode{} || cs.contains(k) || cs.contains(-k)) continue;
        cs[k] = {gen.uniform(-1, 1), gen.uniform(-1, 1)};
    }
    std::vector<TrigPotential::Entry> es;
    for (const auto& [k, c] : cs) es.push_back({k, c});
    auto v = TrigPotential::from_entries(es);
    if (full) {
        for (const auto& [k, c] : v.coefficients())
            full->push_back({static_cast<int>(k.x), static_cast<int>(k.y), c});
    }
    return v;
}

}  // namespace

TEST_CASE("Potential construction", "[potential]") {
    const auto v = TrigPotential::from_entries({{{1, 0}, {0.5, 0.0}}});
    CHECK(v.coefficient({-1, 0}) == cplx{0.5, 0.0});
    CHECK_THROWS_AS(TrigPotential::from_entries({{{0, 0}, {1.0, 0.5}}}), ConfigError);
    CHECK_THROWS_AS(TrigPotential::from_entries({{{1, 0}, {0.5, 0.0}}, {{1, 0}, {0.5, 0.0}}}), ConfigError);
    CHECK_THROWS_AS(TrigPotential::from_entries({{{1, 0}, {0.5, 0.1}}, {{-1, 0}, {0.5, 0.1}}}), ConfigError);
    CHECK_NOTHROW(TrigPotential::from_entries({{{1, 0}, {0.5, 0.1}}, {{-1, 0}, {0.5, -0.1}}}));
    CHECK(TrigPotential::constant(2.0).mean() == 2.0);
}

TEST_CASE("Potential evaluation", "[potential]") {
    const auto c = TrigPotential::cosine({1, 0}, 1.0);
    CHECK_THAT(eval(c, {0.0, 0.37}), WithinAbs(1.0, 1e-15));
    CHECK_THAT(eval(c, {0.5, 0.81}), WithinAbs(-1.0, 1e-15));

    oracle::Gen gen(3);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<oracle::Coeff> full;
        const auto v = random_potential(gen, &full);
        for (int i = 0; i < 100; ++i) {
            const double x1 = gen.uniform(0, 1), x2 = gen.uniform(0, 1);
            CHECK_THAT(eval(v, {x1, x2}), WithinAbs(oracle::naive_eval(full, x1, x2), 1e-12));
            cplx s{};
            for (const auto& f : full) s += f.v * std::exp(cplx{0.0, 2.0 * oracle::pi * (f.kx * x1 + f.ky * x2)});
            CHECK(std::abs(s.imag()) < 1e-12);
        }
    }
}

TEST_CASE("Regime", "[potential]") {
    const RegimeSpec r{2.0, 1.5};
    for (double h : {0.5, 0.01, 1.0 / 512}) CHECK_THAT(r.critical_time(h) * r.epsilon(h), WithinRel(h, 1e-15));
    CHECK(r.in_main_regime());
    CHECK((RegimeSpec{1.0, 1.0}.is_strong()));
    CHECK_FALSE((RegimeSpec{1.0, 1.0}.in_main_regime()));
    CHECK_THROWS_AS((RegimeSpec{-1.0, 1.5}.validate()), ConfigError);
}

TEST_CASE("Moments", "[potential]") {
    const auto c = TrigPotential::cosine({1, 0}, 1.0);
    const auto pw = plane_wave({5, 3}, 16);
    const auto m = moments(c, pw);
    CHECK_THAT(m.mean, WithinAbs(0.0, 1e-15));
    CHECK_THAT(m.second, WithinAbs(0.5, 1e-15));

    const auto k = moments(TrigPotential::constant(0.7), pw);
    CHECK_THAT(k.mean, WithinAbs(0.7, 1e-15));
    CHECK_THAT(k.variance(), WithinAbs(0.0, 1e-15));

    // Mode at the window edge: V-shifted mass escapes.
    const auto edge = plane_wave({7, 0}, 16);
    CHECK_THROWS_AS(moments(c, edge), TruncationError);

    // Coherent state against position-space quadrature of the separable density.
    const double hbar = 1.0 / 64;
    const CoherentSpec spec{{0.3, 0.6}, {0.0, 0.5}, Profile::gaussian()};
    const auto psi = coherent_state(spec, hbar, coherent_window(spec, hbar, 4));
    const double n1 = oracle::integrate_1d(
        [&](double x) { return std::norm(oracle::periodized_gaussian(x, spec.x0[0], spec.xi0[0], hbar)); });
    const double n2 = oracle::integrate_1d(
        [&](double x) { return std::norm(oracle::periodized_gaussian(x, spec.x0[1], spec.xi0[1], hbar)); });
    const double c1 = oracle::integrate_1d([&](double x) {
        return std::cos(2.0 * oracle::pi * x) * std::norm(oracle::periodized_gaussian(x, spec.x0[0], spec.xi0[0], hbar));
    });
    CHECK_THAT(moments(c, psi).mean, WithinAbs(c1 / n1, 1e-8));
    CHECK(n2 > 0.0);

    oracle::Gen gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto v = random_potential(gen);
        const auto mm = moments(v, psi);
        CHECK(mm.variance() >= -1e-12);
    }
}

TEST_CASE("Phase integral", "[potential]") {
    const auto c = TrigPotential::cosine({1, 0}, 1.0);
    const PrimitiveDirection e1(1, 0);
    CHECK_THAT(phase_integral(c, e1, {0.2, 0.4}, 0.0, 1.7), WithinAbs(1.7 * std::cos(0.4 * oracle::pi), 1e-14));
    CHECK(phase_integral(c, e1, {0.2, 0.4}, 0.3, 0.0) == 0.0);
    const double q = oracle::trapezoid([&](double s) { return std::cos(2.0 * oracle::pi * s); }, 1.0);
    CHECK_THAT(phase_integral(c, e1, {0.0, 0.0}, 1.0, 1.0), WithinAbs(q, 1e-8));
    CHECK_THAT(phase_integral(c, e1, {0.0, 0.0}, 1.0, 1.0), WithinAbs(0.0, 1e-14));
    // Small eta: no cancellation loss.
    for (double eta : {1e-11, 1e-9, 1e-7, 1e-5, 1e-3}) {
        const double q3 = oracle::simpson([&](double s) { return std::cos(2.0 * oracle::pi * (0.1 + s * eta)); }, 1.3);
        CHECK_THAT(phase_integral(c, e1, {0.1, 0.0}, eta, 1.3), WithinAbs(q3, 1e-13));
    }

    oracle::Gen gen(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto v = random_potential(gen);
        const auto dirs = enumerate_primitive(2.0);
        const auto& dir = dirs[static_cast<std::size_t>(gen.integer(0, static_cast<int>(dirs.size()) - 1))];
        const Vec2 x{gen.uniform(0, 1), gen.uniform(0, 1)};
        const double eta = gen.uniform(-2, 2), t = gen.uniform(0, 2);
        const auto iv = project_I_lambda(v, dir);
        const auto g = dir.generator();
        const double len = dir.length();
        const double q2 = oracle::simpson(
            [&](double s) { return eval(iv, {x[0] + s * eta * g.x / len, x[1] + s * eta * g.y / len}); }, t);
        CHECK_THAT(phase_integral(v, dir, x, eta, t), WithinAbs(q2, 1e-8));

        // Cocycle in t.
        const double t1 = gen.uniform(0, 1), t2 = gen.uniform(0, 1);
        const Vec2 x1{x[0] + t1 * eta * g.x / len, x[1] + t1 * eta * g.y / len};
        CHECK_THAT(phase_integral(v, dir, x, eta, t1 + t2),
                   WithinAbs(phase_integral(v, dir, x, eta, t1) + phase_integral(v, dir, x1, eta, t2), 1e-10));
    }
}

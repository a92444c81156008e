#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dimerlab/errors.hpp"
#include "dimerlab/phase_boundary.hpp"

using namespace dimerlab;

namespace {
constexpr auto C = kCritical;
}

TEST_CASE("wall against reference values") {
    struct Ref { double J, gamma, m1, m2; };
    // tests/oracles/reference_values.py, 60 bisections at 50 digits
    const Ref refs[] = {
        {1.46, -0.34460871533026306802, 0.54753006566925160842, 0.62343095361826270093},
        {2.0, -0.41281739308863945521, 0.15094086096055860578, 0.94043349541640636912},
        {3.0, -0.46885390492279162504, 0.038481111396797026143, 0.99322552598818548003},
        {5.0, -0.49587432347439939238, 0.0042736846932206791057, 0.99987733375865371764},
    };
    for (const auto& r : refs) {
        const auto w = wall(r.J);
        CHECK(w.gamma == doctest::Approx(r.gamma).epsilon(1e-11));
        CHECK(w.m1 == doctest::Approx(r.m1).epsilon(1e-10));
        CHECK(w.m2 == doctest::Approx(r.m2).epsilon(1e-10));
        const auto ps = psi_curves(r.J);
        CHECK(ps.psi2 < w.gamma);
        CHECK(w.gamma < ps.psi1);
        CHECK(std::abs(w.delta_residual) <= 1e-10);
        CHECK(std::abs(w.gamma_prime - (1.0 - w.m1 - w.m2)) <= 1e-8);
        CHECK(!w.degenerate_strip);
    }
    const auto w20 = wall(20.0);
    CHECK(w20.gamma_plus_half == doctest::Approx(1.2501528899434003289e-9).epsilon(1e-8));
    CHECK(w20.m1 == doctest::Approx(1.250152929683476054e-9).epsilon(1e-8));
    CHECK(w20.gamma_prime == doctest::Approx(-1.2501529181352519099e-9).epsilon(1e-6));
    CHECK(std::abs(wall(100.0).gamma + 0.5) <= 0.02);
    CHECK_THROWS_AS((void)wall(C.J_c), DomainError);
    CHECK_THROWS_AS((void)wall(1.0), DomainError);
}

TEST_CASE("delta sign and monotonicity") {
    for (double J : {1.5, 2.0, 3.0, 7.0}) {
        const auto ps = psi_curves(J);
        CHECK(delta({ps.psi2, J}) < 0.0);
        CHECK(delta({ps.psi1, J}) > 0.0);
        int changes = 0;
        double prev = delta({ps.psi2, J});
        for (int i = 1; i <= 1000; ++i) {
            const double h = i == 1000 ? ps.psi1 : ps.psi2 + (ps.psi1 - ps.psi2) * i / 1000.0;
            const double cur = delta({h, J});
            CHECK(cur >= prev);
            if ((cur > 0.0) != (prev > 0.0)) ++changes;
            prev = cur;
        }
        CHECK(changes == 1);
    }
    const double d = delta({-0.45, 2.0});
    CHECK(std::isfinite(d));
    CHECK(d < 0.0);
    const auto rep = classify({-0.45, 2.0});
    CHECK(d == doctest::Approx(tilde_p(rep.points[2].m, {-0.45, 2.0}) - tilde_p(rep.points[0].m, {-0.45, 2.0}))
                   .epsilon(1e-12));
    CHECK_THROWS_AS((void)delta({0.0, 2.0}), DomainError);
    CHECK_THROWS_AS((void)delta({-0.4, 1.0}), DomainError);
}

TEST_CASE("global maximizer switches branch across the wall") {
    for (double J : {1.5, 2.0, 3.0, 5.0, 10.0}) {
        const auto w = wall(J);
        const auto below = global_maximizer({w.gamma - 1e-6, J});
        const auto above = global_maximizer({w.gamma + 1e-6, J});
        CHECK(below.branch == Branch::m1);
        CHECK(above.branch == Branch::m2);
        CHECK(!below.on_wall);
        CHECK(!above.on_wall);
        const auto phi = inflection_points({w.gamma, J});
        REQUIRE(phi);
        CHECK(w.jump() > phi->phi2 - phi->phi1);
        CHECK(phi->phi2 - phi->phi1 > 0.0);
    }
}

TEST_CASE("slope at the critical point") {
    const double target = 1.0 - 2.0 * C.m_c;
    const auto w = wall(C.J_c + 1e-5);
    CHECK(std::abs(w.gamma - C.h_c) <= 1e-4);
    CHECK((w.gamma - C.h_c) / 1e-5 == doctest::Approx(target).epsilon(1e-3));
    CHECK(w.gamma_prime == doctest::Approx(target).epsilon(1e-2));
    CHECK(target == doctest::Approx(-0.171573).epsilon(1e-5));
}

TEST_CASE("wall table") {
    const auto rows = wall_table(C.J_c + 1e-4, 10.0, 50);
    REQUIRE(rows.size() == 50);
    CHECK(std::abs(rows.front().gamma - C.h_c) <= 1e-2);
    CHECK(rows.back().J == doctest::Approx(10.0).epsilon(1e-14));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].J > rows[i - 1].J);
        CHECK(rows[i].jump() > rows[i - 1].jump());
        CHECK(rows[i].jump() > 0.0);
        CHECK(rows[i].J / rows[i - 1].J == doctest::Approx(rows[1].J / rows[0].J).epsilon(1e-12));
    }
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
        const double fd = (rows[i + 1].gamma - rows[i - 1].gamma) / (rows[i + 1].J - rows[i - 1].J);
        // Geometric spacing makes the centred difference lopsided; the ratio
        // error is O(h^2 gamma''), well inside 1e-4 except right at J_c.
        CHECK(std::abs(fd - rows[i].gamma_prime) <= 1e-4 + 0.05 * std::abs(rows[i + 1].J - rows[i - 1].J));
    }
    CHECK_THROWS_AS((void)wall_table(1.0, 2.0, 5), DomainError);
    CHECK_THROWS_AS((void)wall_table(2.0, 3.0, 1), std::invalid_argument);
}

TEST_CASE("approach to the asymptote") {
    double prev = wall(5.0).gamma_plus_half;
    for (double J : {20.0, 40.0, 80.0, 120.0, 160.0, 200.0}) {
        const auto w = wall(J);
        CHECK(w.gamma_plus_half > 0.0);
        CHECK(w.gamma_plus_half < prev);
        prev = w.gamma_plus_half;
    }
    CHECK(wall(200.0).gamma_plus_half == doctest::Approx(8.39376e-88).epsilon(1e-5));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dimerlab/errors.hpp"
#include "dimerlab/variational.hpp"

using namespace dimerlab;

// Reference values from tests/oracles/reference_values.py.

namespace {

constexpr auto C = kCritical;

// Textbook closed form, kept separate from the library's rationalised one.
double g_plain(double h) {
    const double e = std::exp(2.0 * h);
    return 0.5 * (std::sqrt(e * e + 4.0 * e) - e);
}

double G_plain(double m, ModelPoint p) { return 2.0 * p.J * (g_plain((2.0 * m - 1.0) * p.J + p.h) - m); }

int sign_changes(ModelPoint p) {
    int changes = 0;
    double prev = G_plain(0.0, p);
    for (int i = 1; i <= 10000; ++i) {
        const double cur = G_plain(i / 10000.0, p);
        if ((cur > 0.0) != (prev > 0.0) && cur != 0.0) ++changes;
        if (cur != 0.0) prev = cur;
    }
    return changes;
}

}  // namespace

TEST_CASE("tilde_p values and derivatives") {
    CHECK(tilde_p(0.5, {0.0, 1.0}) == doctest::Approx(0.54022881943455087160).epsilon(1e-14));
    CHECK(tilde_p(1e-6, {0.0, 1.0}) > tilde_p(0.0, {0.0, 1.0}));
    const auto dc = tilde_p_derivatives(C.m_c, {C.h_c, C.J_c});
    CHECK(std::abs(dc.first) <= 1e-9);
    CHECK(std::abs(dc.second) <= 1e-9);
    // xi_c is the inflection point of g, so the third derivative vanishes too;
    // the fourth carries the sign of the quartic maximum.
    CHECK(std::abs(dc.third) <= 1e-9);
    CHECK(dc.fourth < 0.0);
    for (auto p : {ModelPoint{0.0, 1.0}, ModelPoint{-1.0, 2.0}, ModelPoint{1.0, 3.0}}) {
        CHECK(tilde_p_derivatives(0.0, p).first > 0.0);
        CHECK(tilde_p_derivatives(1.0, p).first < 0.0);
    }
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> um(0.0, 1.0), uh(-3.0, 3.0), uj(0.1, 6.0);
    for (int i = 0; i < 300; ++i) {
        const ModelPoint p{uh(rng), uj(rng)};
        const double m = 0.01 + 0.98 * um(rng), step = 1e-3;
        const auto d = tilde_p_derivatives(m, p);
        auto five_point = [&](auto f) {
            return (f(m - 2 * step) - 8 * f(m - step) + 8 * f(m + step) - f(m + 2 * step)) / (12 * step);
        };
        const double fd1 = five_point([&](double x) { return tilde_p(x, p); });
        const double fd2 = five_point([&](double x) { return tilde_p_derivatives(x, p).first; });
        CHECK(std::abs(fd1 - d.first) <= 1e-6 * std::max(std::abs(d.first), 1.0));
        CHECK(std::abs(fd2 - d.second) <= 1e-6 * std::max(std::abs(d.second), 1.0));
    }
    CHECK_THROWS_AS((void)tilde_p(0.5, {0.0, 0.0}), DomainError);
    CHECK_THROWS_AS((void)tilde_p(0.5, {0.0, -1.0}), DomainError);
}

TEST_CASE("inflection points and psi curves") {
    const auto at_c = inflection_points({C.h_c, C.J_c});
    REQUIRE(at_c);
    CHECK(at_c->degenerate);
    CHECK(at_c->phi1 == doctest::Approx(C.m_c).epsilon(1e-14));
    CHECK(!inflection_points({0.0, 1.0}));

    const auto phi = inflection_points({0.0, 2.0});
    REQUIRE(phi);
    CHECK(phi->phi1 == doctest::Approx(0.5 + std::log(0.13364128879227350945) / 8.0).epsilon(1e-14));
    CHECK(phi->phi2 == doctest::Approx(0.5 + std::log(3.7413587112077264905) / 8.0).epsilon(1e-14));
    for (double m = phi->phi1 + 1e-3; m < phi->phi2; m += 1e-3) CHECK(tilde_p_derivatives(m, {0.0, 2.0}).second > 0.0);
    CHECK(tilde_p_derivatives(phi->phi1 - 1e-3, {0.0, 2.0}).second < 0.0);

    const auto psi2 = psi_curves(2.0);
    CHECK(psi2.psi1 == doctest::Approx(-0.22552160248492582964).epsilon(1e-13));
    CHECK(psi2.psi2 == doctest::Approx(-0.62105198779504682507).epsilon(1e-13));
    const auto psic = psi_curves(C.J_c);
    CHECK(psic.psi1 == doctest::Approx(C.h_c).epsilon(1e-14));
    CHECK(psic.psi2 == doctest::Approx(C.h_c).epsilon(1e-14));
    double prev_gap = 0.0;
    for (double J = C.J_c + 1e-6; J < 50.0; J *= 1.2) {
        const auto ps = psi_curves(J);
        CHECK(ps.psi2 < ps.psi1);
        CHECK(ps.psi1 - ps.psi2 > prev_gap);
        prev_gap = ps.psi1 - ps.psi2;
    }
    CHECK(psi_curves(50.0).psi1 > 40.0);
    CHECK(psi_curves(50.0).psi2 < -40.0);
    CHECK_THROWS_AS((void)psi_curves(1.0), DomainError);
}

TEST_CASE("classification examples") {
    const auto sub = classify({0.0, 1.0});
    CHECK(sub.region == Region::subcritical);
    REQUIRE(sub.points.size() == 1);
    CHECK(sub.points[0].m == doctest::Approx(0.81019034110019623332).epsilon(1e-14));

    const auto three = classify({-0.4, 2.0});
    CHECK(three.region == Region::three_solutions);
    REQUIRE(three.points.size() == 3);
    CHECK(three.points[0].m == doctest::Approx(0.15503971589157777804).epsilon(1e-13));
    CHECK(three.points[1].m == doctest::Approx(0.55132260679819664874).epsilon(1e-13));
    CHECK(three.points[2].m == doctest::Approx(0.94271379670088179922).epsilon(1e-13));
    CHECK(three.points[0].kind == PointKind::local_max);
    CHECK(three.points[1].kind == PointKind::local_min);

    const auto above = classify({0.0, 2.0});
    CHECK(above.region == Region::above_psi1);
    REQUIRE(above.points.size() == 1);
    CHECK(above.points[0].branch == Branch::m2);
    CHECK(above.points[0].m > above.phi->phi2);
    CHECK(above.points[0].m == doctest::Approx(0.97926721874736528456).epsilon(1e-14));

    CHECK(classify({-2.0, 2.0}).region == Region::below_psi2);

    const auto ps = psi_curves(2.0);
    const auto on1 = classify({ps.psi1, 2.0});
    CHECK(on1.region == Region::on_psi1);
    REQUIRE(on1.points.size() == 2);
    CHECK(on1.points[0].kind == PointKind::inflection_degenerate);
    CHECK(on1.points[0].m == doctest::Approx(on1.phi->phi1));
    const auto on2 = classify({ps.psi2, 2.0});
    CHECK(on2.region == Region::on_psi2);
    CHECK(on2.points[1].kind == PointKind::inflection_degenerate);
}

TEST_CASE("random points: root count, residual, ordering, global maximum") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uj(0.1, 6.0), uh(-1.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double J = uj(rng);
        // Centre h on the strip so all regions are visited.
        const ModelPoint p{0.5 - J + 1.5 * uh(rng) * std::min(J, 3.0) * 0.5, J};
        const auto rep = classify(p);
        CHECK_MESSAGE(sign_changes(p) == static_cast<int>(rep.points.size()), "h = " << p.h << " J = " << p.J);
        for (const auto& s : rep.points) CHECK(s.residual <= 1e-12);
        if (rep.region == Region::three_solutions) {
            CHECK(rep.points[0].m < rep.phi->phi1);
            CHECK(rep.phi->phi1 < rep.points[1].m);
            CHECK(rep.points[1].m < rep.phi->phi2);
            CHECK(rep.phi->phi2 < rep.points[2].m);
        }
        const auto gm = global_maximizer(p);
        double grid_max = -1e300;
        for (int k = 0; k <= 1000; ++k) grid_max = std::max(grid_max, tilde_p(k / 1000.0, p));
        CHECK(gm.pressure >= grid_max - 1e-12);
    }
}

TEST_CASE("global maximizer examples") {
    const auto crit = global_maximizer({C.h_c, C.J_c});
    CHECK(crit.m == doctest::Approx(C.m_c).epsilon(1e-6));
    CHECK(crit.pressure == doctest::Approx(tilde_p(C.m_c, {C.h_c, C.J_c})).epsilon(1e-14));

    const auto sub = global_maximizer({0.0, 1.0});
    CHECK(std::abs(sub.m - g(2.0 * sub.m - 1.0)) <= 1e-12);

    const auto low = global_maximizer({-0.5, 3.0});
    CHECK(low.branch == Branch::m1);
    CHECK(low.m == doctest::Approx(0.036999370325831468030).epsilon(1e-13));
    CHECK(tilde_p(*low.m1, {-0.5, 3.0}) > tilde_p(*low.m2, {-0.5, 3.0}));
    CHECK(low.pressure == doctest::Approx(1.0332434316078757917).epsilon(1e-14));
}

TEST_CASE("m* is Lipschitz along segments that avoid the wall") {
    struct Segment { double J, h0, h1; };
    for (const Segment s : {Segment{1.0, -2.0, 2.0}, Segment{2.0, 0.0, 1.0}, Segment{3.0, -2.0, -1.0}}) {
        // Fit K on a coarse grid, then require it on a grid ten times finer.
        double K = 0.0;
        const double coarse = (s.h1 - s.h0) / 50.0;
        for (int i = 0; i < 50; ++i) {
            const double a = global_maximizer({s.h0 + i * coarse, s.J}).m;
            const double b = global_maximizer({s.h0 + (i + 1) * coarse, s.J}).m;
            K = std::max(K, std::abs(b - a) / coarse);
        }
        const double fine = coarse / 10.0;
        double prev = global_maximizer({s.h0, s.J}).m;
        for (int i = 1; i <= 500; ++i) {
            const double cur = global_maximizer({s.h0 + i * fine, s.J}).m;
            CHECK(std::abs(cur - prev) <= 1.5 * K * fine);
            prev = cur;
        }
    }
}

TEST_CASE("susceptibilities") {
    const ModelPoint p01{0.0, 1.0};
    const double m = global_maximizer(p01).m;
    const auto s = susceptibilities(p01, Branch::unique);
    CHECK(s.dm_dh == doctest::Approx(2 * m * (1 - m) / (2 - m - 4 * m * (1 - m))).epsilon(1e-14));
    CHECK(susceptibilities({C.h_c + 0.5, C.J_c}, Branch::unique).dm_dh > 0.0);

    struct Case { ModelPoint p; Branch b; };
    const Case cases[] = {{{0.0, 1.0}, Branch::unique}, {{-0.4, 2.0}, Branch::m1}, {{-0.4, 2.0}, Branch::m0},
                          {{-0.4, 2.0}, Branch::m2}, {{0.3, 2.5}, Branch::m2}, {{-1.0, 0.5}, Branch::unique},
                          {{-1.5, 3.0}, Branch::m1}};
    for (const auto& [p, b] : cases) {
        const auto sus = susceptibilities(p, b);
        auto branch_m = [&](ModelPoint q) {
            const auto rep = classify(q);
            if (b == Branch::unique) return global_maximizer(q).m;
            const auto* sp = rep.find(b);
            return sp ? sp->m : rep.points.front().m;
        };
        const double step = 1e-6;
        const double fd_h = (branch_m({p.h + step, p.J}) - branch_m({p.h - step, p.J})) / (2 * step);
        const double fd_J = (branch_m({p.h, p.J + step}) - branch_m({p.h, p.J - step})) / (2 * step);
        CHECK(std::abs(fd_h - sus.dm_dh) <= 1e-5 * std::abs(sus.dm_dh));
        CHECK(std::abs(fd_J - sus.dm_dJ) <= 1e-5 * std::max(std::abs(sus.dm_dJ), 1e-3 * std::abs(sus.dm_dh)));
        const double mu = sus.dp_dh;
        CHECK(std::abs(sus.dm_dJ - (2 * mu - 1) * sus.dm_dh) <= 1e-12);
        if ((2 * mu - 1) * sus.dm_dh != 0.0) CHECK((sus.dm_dJ > 0.0) == ((2 * mu - 1) * sus.dm_dh > 0.0));

        // Envelope derivatives of p~ along the branch.
        auto branch_p = [&](ModelPoint q) { return tilde_p(branch_m(q), q); };
        const double fp_h = (branch_p({p.h + step, p.J}) - branch_p({p.h - step, p.J})) / (2 * step);
        const double fp_J = (branch_p({p.h, p.J + step}) - branch_p({p.h, p.J - step})) / (2 * step);
        CHECK(fp_h == doctest::Approx(sus.dp_dh).epsilon(1e-6));
        CHECK(fp_J == doctest::Approx(sus.dp_dJ).epsilon(1e-6));
    }
    CHECK_THROWS_AS((void)susceptibilities({0.0, 1.0}, Branch::m0), BranchUndefined);
    CHECK_THROWS_AS((void)susceptibilities({0.0, 2.0}, Branch::m1), BranchUndefined);
    const auto ps = psi_curves(2.0);
    CHECK_THROWS_AS((void)susceptibilities({ps.psi1, 2.0}, Branch::m1), BranchUndefined);
}

TEST_CASE("large-J behaviour") {
    const double Js[] = {10.0, 20.0, 40.0, 50.0};
    const auto rows = large_J_asymptotics(Js, 0.0);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        REQUIRE(r.m0);
        REQUIRE(r.J_m1);
        REQUIRE(r.J_one_minus_m2);
    }
    CHECK(std::abs(*rows[3].m0 - 0.5) <= 0.01);
    CHECK(*rows[3].m0 == doctest::Approx(0.49642694288851753357).epsilon(1e-13));
    CHECK(*rows[3].m1 == doctest::Approx(1.9287498479636680459e-22).epsilon(1e-12));
    for (int i = 0; i < 2; ++i) {
        CHECK(*rows[i + 1].J_m1 < *rows[i].J_m1);
        CHECK(*rows[i + 1].J_one_minus_m2 < *rows[i].J_one_minus_m2);
    }
    CHECK(*rows[2].J_m1 < 1e-10);
    CHECK(*rows[2].J_one_minus_m2 > 0.0);
    CHECK(*rows[2].J_one_minus_m2 < 1e-20);
    const double bad[] = {5.0, 4.0};
    CHECK_THROWS_AS((void)large_J_asymptotics(bad, 0.0), std::invalid_argument);
}

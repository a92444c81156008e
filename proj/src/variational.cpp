#include "dimerlab/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dimerlab/criticality.hpp"
#include "dimerlab/errors.hpp"

namespace dimerlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNearCriticalWidth = 1e-6;
constexpr double kStripFraction = 1e-3;

double xi_of(double m, ModelPoint p) noexcept { return (2.0 * m - 1.0) * p.J + p.h; }

// g(xi(m)) - m, written with complements above 1/2 so that roots near 1 stay resolved.
double fixed_point_gap(double m, ModelPoint p) noexcept {
    const double xi = xi_of(m, p);
    if (m >= 0.5) return (1.0 - m) - one_minus_g(xi);
    return g(xi) - m;
}

double fixed_point_gap_slope(double m, ModelPoint p) noexcept {
    return 2.0 * p.J * g_derivatives(xi_of(m, p)).g1 - 1.0;
}

// Root of fixed_point_gap on [lo, hi] where the gap has sign sign_lo at lo and
// the opposite sign at hi. Bisection to the tolerance, then guarded Newton.
double solve_bracket(ModelPoint p, double lo, double hi, int sign_lo, double tol,
                     std::optional<double> seed) {
    const double lo0 = lo, hi0 = hi;
    auto newton_from = [&](double m, int max_iter) {
        double f = fixed_point_gap(m, p);
        for (int it = 0; it < max_iter && f != 0.0; ++it) {
            const double next = m - f / fixed_point_gap_slope(m, p);
            if (!(next >= lo0 && next <= hi0)) break;
            const double f_next = fixed_point_gap(next, p);
            if (!(std::abs(f_next) < std::abs(f))) break;
            m = next;
            f = f_next;
        }
        return m;
    };
    if (seed) {
        const double m = newton_from(std::clamp(*seed, lo0, hi0), 60);
        if (std::abs(fixed_point_gap(m, p)) <= 4.0 * std::numeric_limits<double>::epsilon()) return m;
    }
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = fixed_point_gap(mid, p);
        if (f == 0.0) return mid;
        if ((f > 0.0) == (sign_lo > 0)) lo = mid;
        else hi = mid;
    }
    return newton_from(0.5 * (lo + hi), 4);
}

// Newton on u = 1 - m for u = (1 - g)(J + h - 2 J u); converges from the
// bisection result even when m has rounded to 1.
double refine_complement(double m, ModelPoint p) {
    double u = 1.0 - m;
    if (u <= 0.0) u = one_minus_g(p.J + p.h);
    for (int it = 0; it < 8; ++it) {
        const double xi = p.J + p.h - 2.0 * p.J * u;
        const double f = u - one_minus_g(xi);
        const double slope = 1.0 - 2.0 * p.J * g_derivatives(xi).g1;
        const double next = u - f / slope;
        if (!(next > 0.0) || next == u) break;
        u = next;
    }
    return u;
}

StationaryPoint make_point(ModelPoint p, double m, PointKind kind, Branch branch, double lo,
                           double hi) {
    StationaryPoint s{m, 1.0 - m, kind, branch, lo, hi, 0.0};
    if (m > 0.5 && kind != PointKind::inflection_degenerate) s.complement = refine_complement(m, p);
    s.residual = std::abs(fixed_point_gap(m, p));
    return s;
}

}  // namespace

void validate(ModelPoint p) {
    if (!std::isfinite(p.h) || !std::isfinite(p.J)) throw DomainError("model point must be finite");
    if (!(p.J > 0.0)) throw DomainError("J must be positive");
}

double tilde_p(double m, ModelPoint p) {
    validate(p);
    return -p.J * m * m + 0.5 * p.J + pressure_md(xi_of(m, p));
}

TildePDerivatives tilde_p_derivatives(double m, ModelPoint p) {
    validate(p);
    const GDerivatives d = g_derivatives(xi_of(m, p));
    const double two_j = 2.0 * p.J;
    return {two_j * fixed_point_gap(m, p), -two_j + two_j * two_j * d.g1,
            two_j * two_j * two_j * d.g2, two_j * two_j * two_j * two_j * d.g3};
}

std::optional<InflectionPoints> inflection_points(ModelPoint p) {
    validate(p);
    const GPrimeThreshold t = g_prime_threshold(1.0 / (2.0 * p.J));
    if (t.kind == GPrimeThreshold::Kind::everywhere_below) return std::nullopt;
    const double base = 0.5 - p.h / (2.0 * p.J);
    return InflectionPoints{base + t.lower / (2.0 * p.J), base + t.upper / (2.0 * p.J),
                            t.kind == GPrimeThreshold::Kind::degenerate};
}

PsiCurves psi_curves(double J) {
    validate({0.0, J});
    const GPrimeThreshold t = g_prime_threshold(1.0 / (2.0 * J));
    if (t.kind == GPrimeThreshold::Kind::everywhere_below)
        throw DomainError("psi_curves: J must be at least J_c");
    return {J + t.lower - 2.0 * J * g(t.lower), J + t.upper - 2.0 * J * g(t.upper)};
}

std::string_view to_string(Region r) noexcept {
    switch (r) {
        case Region::subcritical: return "subcritical";
        case Region::three_solutions: return "three-solutions";
        case Region::above_psi1: return "above-psi1";
        case Region::on_psi1: return "on-psi1";
        case Region::below_psi2: return "below-psi2";
        case Region::on_psi2: return "on-psi2";
    }
    return "?";
}

std::string_view to_string(PointKind k) noexcept {
    switch (k) {
        case PointKind::global_max_candidate: return "global-max-candidate";
        case PointKind::local_max: return "local-max";
        case PointKind::local_min: return "local-min";
        case PointKind::inflection_degenerate: return "inflection-degenerate";
    }
    return "?";
}

std::string_view to_string(Branch b) noexcept {
    switch (b) {
        case Branch::m1: return "m1";
        case Branch::m0: return "m0";
        case Branch::m2: return "m2";
        case Branch::unique: return "unique";
    }
    return "?";
}

const StationaryPoint* StationaryReport::find(Branch b) const noexcept {
    for (const auto& s : points)
        if (s.branch == b) return &s;
    return nullptr;
}

StationaryReport classify(ModelPoint p, const Tolerances& tol) {
    validate(p);
    StationaryReport rep{p, Region::subcritical, {}, inflection_points(p), std::nullopt};
    if (!rep.phi || rep.phi->degenerate) {
        const double m = solve_bracket(p, 0.0, 1.0, +1, tol.bisection, std::nullopt);
        rep.points.push_back(make_point(p, m, PointKind::global_max_candidate, Branch::unique, 0.0, 1.0));
        return rep;
    }
    rep.psi = psi_curves(p.J);
    const double phi1 = rep.phi->phi1, phi2 = rep.phi->phi2;
    const double psi1 = rep.psi->psi1, psi2 = rep.psi->psi2;

    // Near J_c the strip itself is narrower than the absolute tolerance, so
    // the tolerance is capped at a small fraction of its width.
    const double btol = std::min(tol.boundary, kStripFraction * (psi1 - psi2));
    const double d1 = std::abs(p.h - psi1), d2 = std::abs(p.h - psi2);
    if (p.h > psi1 + btol) rep.region = Region::above_psi1;
    else if (p.h < psi2 - btol) rep.region = Region::below_psi2;
    else if (d1 <= btol && d1 <= d2) rep.region = Region::on_psi1;
    else if (d2 <= btol) rep.region = Region::on_psi2;
    else rep.region = Region::three_solutions;

    // Close to J_c the sub-brackets are narrow and the gap is a difference of
    // nearly equal numbers, so start Newton from the truncated cubic.
    std::vector<double> seeds;
    if (p.J - kCritical.J_c < kNearCriticalWidth) seeds = truncated_cubic_roots(p);
    auto seed_in = [&](double lo, double hi) -> std::optional<double> {
        for (double s : seeds)
            if (s >= lo && s <= hi) return s;
        return std::nullopt;
    };

    const double left_hi = std::clamp(phi1, 0.0, 1.0);
    const double right_lo = std::clamp(phi2, 0.0, 1.0);
    auto left = [&](PointKind kind) {
        const double m = solve_bracket(p, 0.0, left_hi, +1, tol.bisection, seed_in(0.0, left_hi));
        rep.points.push_back(make_point(p, m, kind, Branch::m1, 0.0, left_hi));
    };
    auto right = [&](PointKind kind) {
        const double m = solve_bracket(p, right_lo, 1.0, +1, tol.bisection, seed_in(right_lo, 1.0));
        rep.points.push_back(make_point(p, m, kind, Branch::m2, right_lo, 1.0));
    };
    auto degenerate = [&](double phi, Branch b) {
        rep.points.push_back(make_point(p, phi, PointKind::inflection_degenerate, b, phi, phi));
    };

    switch (rep.region) {
        case Region::above_psi1: right(PointKind::global_max_candidate); break;
        case Region::below_psi2: left(PointKind::global_max_candidate); break;
        case Region::on_psi1:
            degenerate(phi1, Branch::m1);
            right(PointKind::global_max_candidate);
            break;
        case Region::on_psi2:
            left(PointKind::global_max_candidate);
            degenerate(phi2, Branch::m2);
            break;
        case Region::three_solutions: {
            left(PointKind::local_max);
            const double m0 = solve_bracket(p, left_hi, right_lo, -1, tol.bisection, seed_in(left_hi, right_lo));
            rep.points.push_back(make_point(p, m0, PointKind::local_min, Branch::m0, left_hi, right_lo));
            right(PointKind::local_max);
            break;
        }
        case Region::subcritical: break;
    }
    return rep;
}

double branch_pressure_gap(double h_plus_half, double J, double m1, double m2_complement) {
    // Exact p~ values with J/2 and the O(J) parts cancelled by hand:
    //   p~(m1) - J/2 = -1/2 + [g1/2 - J m1^2 - log(1 - g1)/2],          g1 = g(xi1)
    //   p~(m2) - J/2 = h + [-J u^2 - q2/2 - log(1 - q2)],  u = 1 - m2, q2 = 1 - g(xi2)
    // Being p~ itself, each bracket is stationary in m, so root errors enter
    // only at second order.
    const double h = h_plus_half - 0.5;
    const double u = m2_complement;
    const double g1 = g((2.0 * m1 - 1.0) * J + h);
    const double q2 = one_minus_g(J + h - 2.0 * J * u);
    const double high = -J * u * u - 0.5 * q2 - std::log1p(-q2);
    const double low = 0.5 * g1 - J * m1 * m1 - 0.5 * std::log1p(-g1);
    return h_plus_half + (high - low);
}

GlobalMaximizer global_maximizer(ModelPoint p, const Tolerances& tol) {
    const StationaryReport rep = classify(p, tol);
    GlobalMaximizer out{false, kNaN, Branch::unique, std::nullopt, std::nullopt, kNaN, kNaN};
    if (rep.region != Region::three_solutions) {
        for (const auto& s : rep.points) {
            if (s.kind == PointKind::global_max_candidate) {
                out.m = s.m;
                out.branch = s.branch;
            }
        }
        out.pressure = tilde_p(out.m, p);
        return out;
    }
    const StationaryPoint& s1 = *rep.find(Branch::m1);
    const StationaryPoint& s2 = *rep.find(Branch::m2);
    out.m1 = s1.m;
    out.m2 = s2.m;
    out.gap = branch_pressure_gap(p.h + 0.5, p.J, s1.m, s2.complement);
    if (std::abs(out.gap) <= tol.wall) {
        out.on_wall = true;
        out.pressure = tilde_p(s1.m, p);
        return out;
    }
    const StationaryPoint& best = out.gap > 0.0 ? s2 : s1;
    out.m = best.m;
    out.branch = best.branch;
    out.pressure = tilde_p(best.m, p);
    return out;
}

Susceptibilities susceptibilities(ModelPoint p, Branch b) {
    const StationaryReport rep = classify(p);
    double mu = kNaN;
    if (b == Branch::unique) {
        const GlobalMaximizer gm = global_maximizer(p);
        if (gm.on_wall) throw BranchUndefined("susceptibilities: global maximizer is not unique on the coexistence line");
        mu = gm.m;
    } else {
        const StationaryPoint* s = rep.find(b);
        // m1 and m2 continue into the single-solution region; m0 does not.
        if (s == nullptr && b != Branch::m0 && rep.points.size() == 1 && rep.points.front().branch == Branch::unique)
            s = &rep.points.front();
        if (s == nullptr)
            throw BranchUndefined("susceptibilities: branch " + std::string(to_string(b)) + " does not exist here");
        if (s->kind == PointKind::inflection_degenerate)
            throw BranchUndefined("susceptibilities: branch is degenerate on the psi curve");
        mu = s->m;
    }
    const double denom = 2.0 - mu - 4.0 * p.J * mu * (1.0 - mu);
    if (std::abs(denom) < 1e-12) throw BranchUndefined("susceptibilities: singular at this point");
    const double dm_dh = 2.0 * mu * (1.0 - mu) / denom;
    return {dm_dh, (2.0 * mu - 1.0) * dm_dh, mu, mu * mu - mu + 0.5};
}

std::vector<LargeJRow> large_J_asymptotics(std::span<const double> Js, double h) {
    std::vector<LargeJRow> rows;
    double prev = -std::numeric_limits<double>::infinity();
    for (double J : Js) {
        if (!(J > prev)) throw std::invalid_argument("large_J_asymptotics: J values must increase");
        if (!(J > kCritical.J_c)) throw DomainError("large_J_asymptotics: J values must exceed J_c");
        prev = J;
        const StationaryReport rep = classify({h, J});
        LargeJRow row{J, {}, {}, {}, {}, {}};
        if (const auto* s = rep.find(Branch::m1); s && s->kind != PointKind::inflection_degenerate) {
            row.m1 = s->m;
            row.J_m1 = J * s->m;
        }
        if (const auto* s = rep.find(Branch::m0)) row.m0 = s->m;
        if (const auto* s = rep.find(Branch::m2); s && s->kind != PointKind::inflection_degenerate) {
            row.m2 = s->m;
            row.J_one_minus_m2 = J * s->complement;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace dimerlab

#include "dimerlab/phase_boundary.hpp"

#include <cmath>
#include <stdexcept>

#include "dimerlab/errors.hpp"

namespace dimerlab {

namespace {

constexpr double kBisectionTol = 1e-12;
constexpr double kDegenerateStrip = 1e-12;

struct Branches {
    double m1;
    double m2_complement;
    double m2;
};

Branches outer_branches(ModelPoint p) {
    const StationaryReport rep = classify(p);
    const StationaryPoint* s1 = rep.find(Branch::m1);
    const StationaryPoint* s2 = rep.find(Branch::m2);
    if (s1 == nullptr || s2 == nullptr) throw DomainError("delta: h lies outside the three-solution strip");
    return {s1->m, s2->complement, s2->m};
}

}  // namespace

double delta(ModelPoint p) {
    validate(p);
    const PsiCurves psi = psi_curves(p.J);
    if (p.h > psi.psi1 || p.h < psi.psi2) throw DomainError("delta: h lies outside [psi2(J), psi1(J)]");
    const Branches b = outer_branches(p);
    return branch_pressure_gap(p.h + 0.5, p.J, b.m1, b.m2_complement);
}

WallSample wall(double J) {
    validate({0.0, J});
    if (!(J > kCritical.J_c)) throw DomainError("wall: J must exceed J_c");
    const PsiCurves psi = psi_curves(J);
    WallSample out{};
    out.J = J;
    double t = 0.0;  // h + 1/2
    if (psi.psi1 - psi.psi2 < kDegenerateStrip) {
        out.degenerate_strip = true;
        t = 0.5 * (psi.psi1 + psi.psi2) + 0.5;
    } else {
        auto gap_at = [J](double tt, Branches& b) {
            b = outer_branches({tt - 0.5, J});
            return branch_pressure_gap(tt, J, b.m1, b.m2_complement);
        };
        double lo = psi.psi2 + 0.5, hi = psi.psi1 + 0.5;
        Branches b{};
        while (hi - lo > kBisectionTol) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (gap_at(mid, b) < 0.0) lo = mid;
            else hi = mid;
        }
        t = 0.5 * (lo + hi);
        double gap = gap_at(t, b);
        for (int it = 0; it < 10 && gap != 0.0; ++it) {
            const double next = t - gap / (b.m2 - b.m1);
            if (!(next >= psi.psi2 + 0.5 && next <= psi.psi1 + 0.5)) break;
            Branches nb{};
            const double next_gap = gap_at(next, nb);
            if (!(std::abs(next_gap) < std::abs(gap))) break;
            t = next;
            gap = next_gap;
        }
    }
    const double h = t - 0.5;
    const Branches b = outer_branches({h, J});
    out.gamma = h;
    out.gamma_plus_half = t;
    out.m1 = b.m1;
    out.m2 = b.m2;
    out.m2_complement = b.m2_complement;
    out.gamma_prime = b.m2_complement - b.m1;
    out.delta_residual = std::abs(branch_pressure_gap(t, J, b.m1, b.m2_complement));
    return out;
}

std::vector<double> wall_grid(double J_min, double J_max, int steps) {
    if (steps < 2) throw std::invalid_argument("wall_table: need at least two steps");
    if (!(J_min > kCritical.J_c)) throw DomainError("wall_table: J_min must exceed J_c");
    if (!(J_max > J_min)) throw std::invalid_argument("wall_table: J_max must exceed J_min");
    std::vector<double> Js;
    Js.reserve(static_cast<std::size_t>(steps));
    const double ratio = std::log(J_max / J_min);
    for (int i = 0; i < steps; ++i) Js.push_back(i == steps - 1 ? J_max : J_min * std::exp(ratio * i / (steps - 1)));
    return Js;
}

std::vector<WallSample> wall_table(double J_min, double J_max, int steps) {
    std::vector<WallSample> rows;
    for (double J : wall_grid(J_min, J_max, steps)) rows.push_back(wall(J));
    return rows;
}

}  // namespace dimerlab

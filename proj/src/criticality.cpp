#include "dimerlab/criticality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dimerlab/errors.hpp"
#include "dimerlab/phase_boundary.hpp"

namespace dimerlab {

namespace {

constexpr auto C = kCritical;
constexpr double kFitR2 = 0.999;

}  // namespace

CubicCoefficients critical_cubic_coefficients(ModelPoint p) {
    validate(p);
    const double two_minus_mc = 2.0 - C.m_c;
    return {3.0 * (C.J_c / p.J) * two_minus_mc, 3.0 * (C.J_c * C.J_c / p.J) * two_minus_mc,
            p.h - C.h_c + (2.0 * C.m_c - 1.0) * (p.J - C.J_c)};
}

double critical_cubic_residual(double xi, ModelPoint p) {
    const CubicCoefficients k = critical_cubic_coefficients(p);
    const double x = xi - C.xi_c;
    return x * x * x - k.kappa1 * (p.J - C.J_c) * x - k.kappa2 * k.rho;
}

std::vector<double> truncated_cubic_roots(ModelPoint p) {
    const CubicCoefficients k = critical_cubic_coefficients(p);
    // Depressed cubic t^3 + a t + b = 0.
    const double a = -k.kappa1 * (p.J - C.J_c);
    const double b = -k.kappa2 * k.rho;
    std::vector<double> xs;
    const double disc = -(4.0 * a * a * a + 27.0 * b * b);
    if (a < 0.0 && disc > 0.0) {
        const double r = 2.0 * std::sqrt(-a / 3.0);
        const double arg = std::clamp(3.0 * b / (a * r), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int j = 0; j < 3; ++j) xs.push_back(r * std::cos(theta - 2.0 * std::numbers::pi * j / 3.0));
    } else {
        const double s = std::sqrt(std::max(0.0, 0.25 * b * b + a * a * a / 27.0));
        xs.push_back(std::cbrt(-0.5 * b + s) + std::cbrt(-0.5 * b - s));
    }
    std::vector<double> ms;
    for (double x : xs) ms.push_back(C.m_c + (x - k.rho) / (2.0 * p.J));
    std::sort(ms.begin(), ms.end());
    return ms;
}

double AmplitudeConstants::C_alpha(double alpha) const {
    return std::cbrt(3.0 * C.J_c * (2.0 - C.m_c) * (2.0 * C.m_c - 1.0 + alpha)) / (2.0 * C.J_c);
}

AmplitudeConstants amplitude_constants() noexcept {
    const double two_jc = 2.0 * C.J_c;
    return {std::sqrt(3.0 * (2.0 - C.m_c)) / two_jc, std::pow(2.0, 0.25) / two_jc,
            std::cbrt(3.0 * C.J_c * (2.0 - C.m_c)) / two_jc};
}

ModelPoint CurveSpec::at(double d) const {
    switch (kind) {
        case Kind::tangent: return {C.h_c + kTangentSlope * d, C.J_c + d};
        case Kind::slope: return {C.h_c + alpha * d, C.J_c + d};
        case Kind::flat: return {C.h_c + d, C.J_c};
    }
    return {C.h_c, C.J_c};
}

std::string CurveSpec::name() const {
    switch (kind) {
        case Kind::tangent: return "tangent";
        case Kind::slope: return "slope";
        case Kind::flat: return "flat";
    }
    return "?";
}

double CurveSpec::nominal_exponent() const { return kind == Kind::tangent ? 0.5 : 1.0 / 3.0; }

std::vector<double> default_distances() {
    std::vector<double> d;
    for (double v = 1e-2; v >= 1e-6; v *= 0.5) d.push_back(v);
    return d;
}

ExponentFit fit_power_law(std::vector<ExponentSample> samples, double nominal_exponent) {
    std::sort(samples.begin(), samples.end(),
              [](const ExponentSample& a, const ExponentSample& b) { return a.distance < b.distance; });
    auto fit = [](std::span<const ExponentSample> s) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        const double n = static_cast<double>(s.size());
        for (const auto& e : s) {
            const double x = std::log(e.distance), y = std::log(std::abs(e.deviation));
            sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
        }
        const double cxx = sxx - sx * sx / n, cxy = sxy - sx * sy / n, cyy = syy - sy * sy / n;
        const double slope = cxy / cxx;
        const double intercept = (sy - slope * sx) / n;
        const double r2 = cyy > 0.0 ? cxy * cxy / (cxx * cyy) : 1.0;
        return ExponentFit{slope, intercept, r2, std::exp(intercept), 0, 0.0, 0.0, {}};
    };
    if (samples.size() < 3) throw std::invalid_argument("fit_power_law: need at least three samples");
    ExponentFit out{};
    for (int drop = 0; drop <= 2; ++drop) {
        std::span<const ExponentSample> s(samples.data(), samples.size() - static_cast<std::size_t>(drop));
        if (s.size() < 3) break;
        out = fit(s);
        out.dropped = drop;
        if (out.r2 >= kFitR2) break;
    }
    if (out.r2 < kFitR2)
        throw FitQualityError("fit_power_law: r^2 = " + std::to_string(out.r2) + " below 0.999");
    // dev / d^beta = A + B d^beta over every sample.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& e : samples) {
        const double x = std::pow(e.distance, nominal_exponent);
        const double y = e.deviation / x;
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double n = static_cast<double>(samples.size());
    const double b = (sxy - sx * sy / n) / (sxx - sx * sx / n);
    out.nominal_exponent = nominal_exponent;
    out.leading_amplitude = (sy - b * sx) / n;
    out.samples = std::move(samples);
    return out;
}

ExponentFit exponent_fit(const CurveSpec& curve, std::span<const double> distances, Branch branch) {
    if (curve.kind == CurveSpec::Kind::tangent && branch != Branch::m1 && branch != Branch::m2)
        throw std::invalid_argument("exponent_fit: the tangent curve needs branch m1 or m2");
    std::vector<ExponentSample> samples;
    for (double d : distances) {
        if (!(d > 0.0)) throw std::invalid_argument("exponent_fit: distances must be positive");
        const ModelPoint p = curve.at(d);
        double m = 0.0;
        if (branch == Branch::unique) {
            const GlobalMaximizer gm = global_maximizer(p);
            if (gm.on_wall) throw BranchUndefined("exponent_fit: curve point lies on the coexistence line");
            m = gm.m;
        } else {
            const StationaryReport rep = classify(p);
            const StationaryPoint* s = rep.find(branch);
            if (s == nullptr || s->kind == PointKind::inflection_degenerate)
                throw BranchUndefined("exponent_fit: requested branch missing along the curve");
            m = s->m;
        }
        samples.push_back({d, m - C.m_c});
    }
    return fit_power_law(std::move(samples), curve.nominal_exponent());
}

WallExponentCheck wall_exponent_check(std::span<const double> distances) {
    std::vector<ExponentSample> up, down;
    const double c_m = amplitude_constants().C_m;
    WallExponentCheck out{};
    out.ratio_min = std::numeric_limits<double>::infinity();
    out.ratio_max = 0.0;
    for (double d : distances) {
        const WallSample w = wall(C.J_c + d);
        up.push_back({d, w.m2 - C.m_c});
        down.push_back({d, w.m1 - C.m_c});
        for (double dev : {w.m2 - C.m_c, C.m_c - w.m1}) {
            const double r = dev / std::sqrt(d);
            out.ratio_min = std::min(out.ratio_min, r);
            out.ratio_max = std::max(out.ratio_max, r);
        }
    }
    out.upper = fit_power_law(std::move(up), 0.5);
    out.lower = fit_power_law(std::move(down), 0.5);
    out.within_band = out.ratio_min >= 0.5 * c_m && out.ratio_max <= 2.0 * c_m;
    return out;
}

FlexScaling flex_point_scaling(std::span<const double> distances) {
    if (distances.empty()) throw std::invalid_argument("flex_point_scaling: no distances");
    std::vector<ExponentSample> up, down;
    const double c_phi = amplitude_constants().C_phi;
    double smallest = std::numeric_limits<double>::infinity();
    FlexScaling out{};
    for (double d : distances) {
        const auto phi = inflection_points(CurveSpec::tangent().at(d));
        if (!phi) throw DomainError("flex_point_scaling: no inflection points at this distance");
        up.push_back({d, phi->phi2 - C.m_c});
        down.push_back({d, phi->phi1 - C.m_c});
        if (d < smallest) {
            smallest = d;
            out.ratio_upper_smallest = (phi->phi2 - C.m_c) / (c_phi * std::sqrt(d));
            out.ratio_lower_smallest = (C.m_c - phi->phi1) / (c_phi * std::sqrt(d));
        }
    }
    out.upper = fit_power_law(std::move(up), 0.5);
    out.lower = fit_power_law(std::move(down), 0.5);
    return out;
}

}  // namespace dimerlab

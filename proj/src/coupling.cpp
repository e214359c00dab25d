#include "ori/coupling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace ori {

namespace {

constexpr double kPreTol = 1e-9;

double sgn(double x) { return x < 0 ? -1.0 : 1.0; }

double checked_div(double num, double den, const char* what) {
    if (std::abs(den) < 1e-12) throw NumericError(std::string("singular coupling: ") + what);
    return num / den;
}

double checked_sqrt(double x, const char* what) {
    if (x < -1e-12) throw CouplingError(std::string("negative radicand: ") + what);
    return std::sqrt(std::max(x, 0.0));
}

void require(bool ok, const char* what) {
    if (!ok) throw CouplingError(std::string("not a coupling: ") + what);
}

bool near(double a, double b) {
    return std::abs(a - b) <= kPreTol * std::max({1.0, std::abs(a), std::abs(b)});
}

VertexAngles swap_ab(const VertexAngles& v) { return {v.beta, v.alpha, v.gamma, v.delta}; }

}  // namespace

double ResidualVector::max_abs() const {
    double m = 0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

ResidualVector vertex_type_residual(VertexFamily fam, const VertexAngles& v) {
    ResidualVector r;
    switch (fam) {
        case VertexFamily::isogram:
            r.add(v.gamma - v.alpha, "gamma-alpha");
            r.add(v.delta - v.beta, "delta-beta");
            break;
        case VertexFamily::anti_isogram:
            r.add(v.gamma - (kPi - v.alpha), "gamma-(pi-alpha)");
            r.add(v.delta - (kPi - v.beta), "delta-(pi-beta)");
            break;
        case VertexFamily::deltoid_i:
            r.add(v.alpha - v.delta, "alpha-delta");
            r.add(v.beta - v.gamma, "beta-gamma");
            break;
        case VertexFamily::anti_deltoid_i:
            r.add(v.alpha + v.delta - kPi, "alpha+delta-pi");
            r.add(v.beta + v.gamma - kPi, "beta+gamma-pi");
            break;
        case VertexFamily::deltoid_ii:
            r.add(v.beta - v.alpha, "beta-alpha");
            r.add(v.gamma - v.delta, "gamma-delta");
            break;
        case VertexFamily::anti_deltoid_ii:
            r.add(v.alpha + v.beta - kPi, "alpha+beta-pi");
            r.add(v.gamma + v.delta - kPi, "gamma+delta-pi");
            break;
        case VertexFamily::conic_i:
            r.add((v.alpha + v.gamma) - (v.beta + v.delta), "(alpha+gamma)-(beta+delta)");
            break;
        case VertexFamily::conic_iv:
            r.add(v.alpha + v.beta + v.gamma + v.delta - 2 * kPi, "anglesum-2pi");
            break;
        case VertexFamily::elliptic:
            break;
    }
    return r;
}

double panel_sum_residual(double s1, double s2, double s3, double s4) {
    return s1 + s2 + s3 + s4 - 2 * kPi;
}

double amplitude_px(const VertexAngles& v) {
    double den = std::sin(v.gamma) * std::sin(v.delta);
    double rad = checked_div(std::sin(v.alpha) * std::sin(v.beta), den, "amplitude px") - 1.0;
    return checked_sqrt(rad, "amplitude px");
}

double amplitude_py(const VertexAngles& v) {
    double den = std::sin(v.delta) * std::sin(v.alpha);
    double rad = checked_div(std::sin(v.beta) * std::sin(v.gamma), den, "amplitude py") - 1.0;
    return checked_sqrt(rad, "amplitude py");
}

double elliptic_modulus(const VertexAngles& v) {
    double s = 0.5 * (v.alpha + v.beta + v.gamma + v.delta);
    double den = std::sin(s - v.alpha) * std::sin(s - v.beta) * std::sin(s - v.gamma) *
                 std::sin(s - v.delta);
    return checked_div(
        std::sin(v.alpha) * std::sin(v.beta) * std::sin(v.gamma) * std::sin(v.delta), den,
        "elliptic modulus");
}

namespace {

// anti-isogram branch forms: numerator/denominator trig pair per form
double anti_isogram_form(int form, const VertexAngles& t, const VertexAngles& b) {
    auto f1 = [&](double x) { return (form == 0 || form == 2) ? std::sin(x) : std::cos(x); };
    auto f2 = [&](double x) { return (form == 0 || form == 1) ? std::sin(x) : std::cos(x); };
    double num = f1(0.5 * (b.alpha - b.beta)) * f2(0.5 * (t.alpha + t.beta));
    double den = f1(0.5 * (b.alpha + b.beta)) * f2(0.5 * (t.alpha - t.beta));
    return checked_div(num, den, "anti-isogram ratio");
}

double isogram_form(const VertexAngles& t, const VertexAngles& b) {
    double num = std::cos(0.5 * (b.alpha + b.beta)) * std::cos(0.5 * (t.alpha - t.beta));
    double den = std::cos(0.5 * (b.alpha - b.beta)) * std::cos(0.5 * (t.alpha + t.beta));
    return checked_div(num, den, "isogram ratio");
}

// deltoid II ratio, shared by its anti class
double deltoid_ii_form(const VertexAngles& t, const VertexAngles& b) {
    double sign_arg = checked_div(kPi - b.beta - b.gamma, kPi - t.beta - t.gamma,
                                  "deltoid II sign");
    double num = std::sin(b.beta + b.gamma) * std::sin(t.beta - t.gamma);
    double den = std::sin(b.beta - b.gamma) * std::sin(t.beta + t.gamma);
    return sgn(sign_arg) * checked_sqrt(checked_div(num, den, "deltoid II ratio"),
                                        "deltoid II ratio");
}

double conic_sigma_i(const VertexAngles& v) { return v.alpha + v.gamma; }
double conic_sigma_iv(const VertexAngles& v) {
    return 0.5 * (-v.alpha + v.beta - v.gamma + v.delta) + kPi;
}

double elliptic_py(const VertexAngles& v) {
    double s = 0.5 * (v.alpha + v.beta + v.gamma + v.delta);
    double den = std::sin(s - v.beta) * std::sin(s - v.gamma);
    return checked_sqrt(
        checked_div(std::sin(v.beta) * std::sin(v.gamma), den, "elliptic py") - 1.0,
        "elliptic py");
}

double elliptic_pw(const VertexAngles& v) {
    double s = 0.5 * (v.alpha + v.beta + v.gamma + v.delta);
    double den = std::sin(s - v.delta) * std::sin(s - v.alpha);
    return checked_sqrt(
        checked_div(std::sin(v.delta) * std::sin(v.alpha), den, "elliptic pw") - 1.0,
        "elliptic pw");
}

double elliptic_px_sigma(const VertexAngles& v) {
    double s = 0.5 * (v.alpha + v.beta + v.gamma + v.delta);
    double den = std::sin(s - v.alpha) * std::sin(s - v.beta);
    return checked_sqrt(
        checked_div(std::sin(v.alpha) * std::sin(v.beta), den, "elliptic px") - 1.0,
        "elliptic px");
}

double tan_ratio(const VertexAngles& v) {
    return checked_div(std::tan(v.alpha), std::tan(v.beta), "tan ratio");
}

double sin_ratio_bg(const VertexAngles& v) {
    return checked_div(std::sin(v.beta), std::sin(v.gamma), "sin ratio");
}

}  // namespace

std::vector<RatioPair> linear_ratio_forms(VertexFamily fam, const VertexAngles& t,
                                          const VertexAngles& b) {
    std::vector<RatioPair> out;
    switch (fam) {
        case VertexFamily::isogram: {
            out.push_back({isogram_form(t, b), isogram_form(swap_ab(t), swap_ab(b))});
            break;
        }
        case VertexFamily::anti_isogram: {
            const double wsign[4] = {1, 1, -1, -1};
            for (int f = 0; f < 4; ++f) {
                double cy = anti_isogram_form(f, t, b);
                double cw = wsign[f] * anti_isogram_form(f, swap_ab(t), swap_ab(b));
                out.push_back({cy, cw});
            }
            break;
        }
        case VertexFamily::deltoid_i: {
            require(near(tan_ratio(t), tan_ratio(b)), "involution factors differ");
            out.push_back({checked_div(std::cos(b.beta), std::cos(t.beta), "deltoid I"),
                           checked_div(std::cos(b.alpha), std::cos(t.alpha), "deltoid I")});
            break;
        }
        case VertexFamily::anti_deltoid_i: {
            require(near(tan_ratio(t), tan_ratio(b)), "involution factors differ");
            out.push_back({checked_div(std::cos(t.beta), std::cos(b.beta), "anti-deltoid I"),
                           checked_div(std::cos(t.alpha), std::cos(b.alpha), "anti-deltoid I")});
            break;
        }
        case VertexFamily::deltoid_ii: {
            require(near(sin_ratio_bg(t), sin_ratio_bg(b)), "amplitudes differ");
            double cy = deltoid_ii_form(t, b);
            out.push_back({cy, cy});
            break;
        }
        case VertexFamily::anti_deltoid_ii: {
            require(near(sin_ratio_bg(t), sin_ratio_bg(b)), "amplitudes differ");
            double cy = deltoid_ii_form(t, b);
            double cw = checked_div(std::cos(t.alpha), std::cos(b.alpha), "anti-deltoid II");
            out.push_back({cy, cw});
            break;
        }
        case VertexFamily::conic_i: {
            require(near(amplitude_px(t), amplitude_px(b)), "amplitudes differ");
            require(near(std::sin(t.beta) * std::sin(t.delta) /
                             (std::sin(t.alpha) * std::sin(t.gamma)),
                         std::sin(b.beta) * std::sin(b.delta) /
                             (std::sin(b.alpha) * std::sin(b.gamma))),
                    "phase products differ");
            double s = sgn(checked_div(kPi - conic_sigma_i(b), kPi - conic_sigma_i(t),
                                       "conic I sign"));
            double cy = s * checked_div(amplitude_py(b), amplitude_py(t), "conic I y");
            auto qw = [](const VertexAngles& v) {
                return checked_sqrt(
                    checked_div(std::sin(v.delta) * std::sin(v.alpha),
                                std::sin(v.beta) * std::sin(v.gamma), "conic I w") -
                        1.0,
                    "conic I w");
            };
            double cw = s * checked_div(qw(b), qw(t), "conic I w");
            out.push_back({cy, cw});
            break;
        }
        case VertexFamily::conic_iv: {
            require(near(amplitude_px(t), amplitude_px(b)), "amplitudes differ");
            require(near(std::sin(t.beta) * std::sin(t.delta) /
                             (std::sin(t.alpha) * std::sin(t.gamma)),
                         std::sin(b.beta) * std::sin(b.delta) /
                             (std::sin(b.alpha) * std::sin(b.gamma))),
                    "phase products differ");
            double st = conic_sigma_iv(t), sb = conic_sigma_iv(b);
            double cy = sgn(checked_div(kPi - st, kPi - sb, "conic IV sign")) *
                        checked_div(amplitude_py(t), amplitude_py(b), "conic IV y");
            auto qw = [](const VertexAngles& v) {
                return checked_sqrt(
                    checked_div(std::sin(v.delta) * std::sin(v.alpha),
                                std::sin(v.beta) * std::sin(v.gamma), "conic IV w") -
                        1.0,
                    "conic IV w");
            };
            double cw = sgn(checked_div(kPi + st, kPi + sb, "conic IV sign")) *
                        checked_div(qw(t), qw(b), "conic IV w");
            out.push_back({cy, cw});
            break;
        }
        case VertexFamily::elliptic: {
            require(near(elliptic_px_sigma(t), elliptic_px_sigma(b)), "amplitudes differ");
            require(near(elliptic_modulus(t), elliptic_modulus(b)), "moduli differ");
            auto ag = [](const VertexAngles& v) {
                double s = 0.5 * (v.alpha + v.beta + v.gamma + v.delta);
                return std::sin(v.alpha) * std::sin(v.gamma) /
                       (std::sin(s - v.alpha) * std::sin(s - v.gamma));
            };
            require(near(ag(t), ag(b)), "phase products differ");
            double st = 0.5 * (t.alpha + t.beta + t.gamma + t.delta);
            double sb2 = 0.5 * (b.alpha + b.beta + b.gamma + b.delta);
            double s = sgn(checked_div(kPi - sb2, kPi - st, "elliptic sign"));
            out.push_back({s * checked_div(elliptic_py(b), elliptic_py(t), "elliptic y"),
                           s * checked_div(elliptic_pw(b), elliptic_pw(t), "elliptic w")});
            break;
        }
    }
    return out;
}

RatioPair linear_ratio(VertexFamily fam, const VertexAngles& t, const VertexAngles& b) {
    return linear_ratio_forms(fam, t, b)[0];
}

double phase_shift_residual(const VertexAngles& topA, const VertexAngles& bottomA,
                            const VertexAngles& topB, const VertexAngles& bottomB) {
    auto ia = two_vertex_feasible_interval(topA, bottomA);
    auto ib = two_vertex_feasible_interval(topB, bottomB);
    double lo = std::max({ia.first, ib.first, -10.0});
    double hi = std::min({ia.second, ib.second, 10.0});
    if (!(hi > lo)) throw NumericError("unsampleable: no common feasible input interval");
    double mid = 0.5 * (lo + hi), half = 0.49 * (hi - lo);

    constexpr int kSamples = 16;
    double y[kSamples];
    for (int k = 0; k < kSamples; ++k)
        y[k] = mid + half * std::cos((2 * k + 1) * kPi / (2 * kSamples));

    // per-column transfer outputs, indexed [combo][sample]; NaN = infeasible
    auto table = [&](const VertexAngles& top, const VertexAngles& bot) {
        std::array<std::array<double, kSamples>, 4> t{};
        for (int bt = 0; bt < 2; ++bt)
            for (int bb = 0; bb < 2; ++bb)
                for (int k = 0; k < kSamples; ++k) {
                    double& cell = t[2 * bt + bb][k];
                    try {
                        cell = two_vertex_transfer(top, bot, y[k], bt, bb).y21;
                    } catch (const NumericError&) {
                        cell = std::numeric_limits<double>::quiet_NaN();
                    }
                }
        return t;
    };
    auto ta = table(topA, bottomA);
    auto tb = table(topB, bottomB);

    double best = std::numeric_limits<double>::infinity();
    for (int ca = 0; ca < 4; ++ca)
        for (int cb = 0; cb < 4; ++cb) {
            double worst = 0;
            bool ok = true;
            for (int k = 0; k < kSamples && ok; ++k) {
                double d = std::abs(ta[ca][k] - tb[cb][k]);
                if (std::isnan(d)) ok = false;
                else worst = std::max(worst, d);
            }
            if (ok) best = std::min(best, worst);
        }
    if (!std::isfinite(best)) throw NumericError("unsampleable: all branch combinations infeasible");
    return best;
}

}  // namespace ori

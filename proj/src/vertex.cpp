#include "ori/vertex.hpp"

#include <algorithm>
#include <cmath>

namespace ori {

namespace {

// Branch radicand tolerance: clamps grazing contact to a single solution.
constexpr double kRadTol = 1e-12;

Vec3 unit_or_throw(const Vec3& v, const char* what) {
    double n = v.norm();
    if (n < 1e-13) throw NumericError(what);
    return v / n;
}

}  // namespace

SectorQuad sectors_from_labels(const VertexAngles& v, bool row_odd, bool col_odd) {
    double q[2][2];  // [south][west]
    auto put = [&](bool south, bool west, double val) { q[south][west] = val; };
    put(row_odd, col_odd, v.alpha);
    put(row_odd, !col_odd, v.beta);
    put(!row_odd, !col_odd, v.gamma);
    put(!row_odd, col_odd, v.delta);
    // a1 = NE, a2 = NW, a3 = SW, a4 = SE
    return {q[0][0], q[0][1], q[1][1], q[1][0]};
}

double vertex_closure_residual(const SectorQuad& s, const FoldQuad& f) {
    const double A[4] = {s.a1, s.a2, s.a3, s.a4};
    const double R[4] = {f.n, f.w, f.s, f.e};
    Mat3 G = Mat3::Identity();
    for (int k = 0; k < 4; ++k) G = G * rot_z(A[k]) * rot_x(R[k]);
    return (G - Mat3::Identity()).norm();
}

std::vector<FoldQuad> fold_transfer_branches(const SectorQuad& s, Crease crease,
                                             double rho_in) {
    const int s0 = static_cast<int>(crease);
    const double A[4] = {s.a1, s.a2, s.a3, s.a4};
    double Ap[4];
    for (int i = 0; i < 4; ++i) Ap[i] = A[(s0 + i) % 4];

    // Panel 1 flat in z = 0, input crease along +x, creases numbered
    // counterclockwise seen from +z.
    const Vec3 c1(1, 0, 0);
    const Vec3 n1(0, 0, 1);
    const Vec3 n2 = rot_x(rho_in) * n1;
    const Vec3 c2 = rot_axis(n2, Ap[1]) * c1;
    const Vec3 c4 = rot_z(-Ap[0]) * c1;

    const double c24 = c2.dot(c4);
    const double det = 1.0 - c24 * c24;
    if (det < 1e-14)
        throw KinematicInfeasible("degenerate linkage: opposite creases parallel");
    const double cA3 = std::cos(Ap[2]);
    const double cA4 = std::cos(Ap[3]);
    const double p = (cA3 - c24 * cA4) / det;
    const double q = (cA4 - c24 * cA3) / det;
    double r2 = 1.0 - p * cA3 - q * cA4;
    if (r2 < -kRadTol) throw KinematicInfeasible("no real configuration for this fold");
    if (r2 < 0) r2 = 0;
    const double r = std::sqrt(r2);
    const Vec3 u = unit_or_throw(c2.cross(c4), "collapsed crease pair");

    std::vector<FoldQuad> out;
    for (double sgn : {1.0, -1.0}) {
        const Vec3 c3 = p * c2 + q * c4 + sgn * r * u;
        const Vec3 n3 = unit_or_throw(c2.cross(c3), "collapsed sector a3");
        const Vec3 n4 = unit_or_throw(c3.cross(c4), "collapsed sector a4");
        double rho[4];
        rho[0] = rho_in;
        rho[1] = std::atan2(n2.cross(n3).dot(c2), n2.dot(n3));
        rho[2] = std::atan2(n3.cross(n4).dot(c3), n3.dot(n4));
        rho[3] = std::atan2(n4.cross(n1).dot(c4), n4.dot(n1));
        FoldQuad f;
        for (int i = 0; i < 4; ++i) f[(s0 + i) % 4] = rho[i];
        out.push_back(f);
        if (r < 1e-15) break;  // grazing: both signs coincide
    }
    if (out.size() == 2) {
        double d = 0;
        for (int k = 0; k < 4; ++k)
            d = std::max(d, std::abs(out[0][k] - out[1][k]));
        if (d < 1e-9) out.pop_back();
    }
    return out;
}

namespace {

double max_abs_fold(const FoldQuad& f) {
    double m = 0;
    for (int k = 0; k < 4; ++k) m = std::max(m, std::abs(f[k]));
    return m;
}

double fold_distance(const FoldQuad& a, const FoldQuad& b) {
    double m = 0;
    for (int k = 0; k < 4; ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace

FoldQuad fold_transfer(const SectorQuad& s, Crease crease, double rho_in,
                       const FoldQuad* hint) {
    auto branches = fold_transfer_branches(s, crease, rho_in);
    if (branches.size() == 1) return branches[0];
    if (hint) {
        double d0 = fold_distance(branches[0], *hint);
        double d1 = fold_distance(branches[1], *hint);
        return d0 <= d1 ? branches[0] : branches[1];
    }
    double m0 = max_abs_fold(branches[0]);
    double m1 = max_abs_fold(branches[1]);
    if (std::abs(m0 - m1) < 1e-12)
        throw BifurcationError("two equally folded branches and no hint");
    return m0 < m1 ? branches[0] : branches[1];
}

std::pair<int, int> mv_assignment(const FoldQuad& f) {
    int m = 0, v = 0;
    for (int k = 0; k < 4; ++k) {
        if (f[k] < -1e-12) ++m;
        else if (f[k] > 1e-12) ++v;
    }
    return {m, v};
}

namespace {

// Connected feasible interval around the most central feasible sample,
// refined by bisection on the predicate boundary.
template <class Pred>
std::pair<double, double> scan_interval(double lo, double hi, const Pred& ok) {
    const int n = 2001;
    std::vector<char> good(n);
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) {
        t[i] = lo + (hi - lo) * i / (n - 1);
        good[i] = ok(t[i]) ? 1 : 0;
    }
    // pick the feasible index closest to the middle, else widest run
    int mid = n / 2, pick = -1;
    for (int d = 0; d < n && pick < 0; ++d) {
        if (mid - d >= 0 && good[mid - d]) pick = mid - d;
        else if (mid + d < n && good[mid + d]) pick = mid + d;
    }
    if (pick < 0) throw KinematicInfeasible("no feasible fold found in scan");
    int a = pick, b = pick;
    while (a > 0 && good[a - 1]) --a;
    while (b < n - 1 && good[b + 1]) ++b;
    double left = t[a], right = t[b];
    if (a > 0) {
        double bad = t[a - 1], g = t[a];
        for (int it = 0; it < 60; ++it) {
            double m = 0.5 * (bad + g);
            (ok(m) ? g : bad) = m;
        }
        left = g;
    }
    if (b < n - 1) {
        double bad = t[b + 1], g = t[b];
        for (int it = 0; it < 60; ++it) {
            double m = 0.5 * (bad + g);
            (ok(m) ? g : bad) = m;
        }
        right = g;
    }
    return {left, right};
}

}  // namespace

std::pair<double, double> feasible_fold_interval(const SectorQuad& s, Crease crease) {
    auto ok = [&](double rho) {
        try {
            return !fold_transfer_branches(s, crease, rho).empty();
        } catch (const KinematicInfeasible&) {
            return false;
        }
    };
    return scan_interval(-kPi + 1e-9, kPi - 1e-9, ok);
}

// Transverse crease reported by the two-vertex map; fixed so the half-tangent
// ratios reproduce the printed coupling factors.
static constexpr Crease kTransverse = Crease::E;

TwoVertexResult two_vertex_transfer(const VertexAngles& top,
                                    const VertexAngles& bottom, double y11,
                                    int branch_top, int branch_bottom) {
    const SectorQuad st = sectors_from_labels(top, true, true);
    const SectorQuad sb = sectors_from_labels(bottom, false, true);
    const double rho_in = 2.0 * std::atan(y11);

    TwoVertexResult res;
    if (branch_top == kAutoBranch) {
        res.top = fold_transfer(st, Crease::N, rho_in);
    } else {
        auto br = fold_transfer_branches(st, Crease::N, rho_in);
        if (branch_top < 0 || branch_top >= static_cast<int>(br.size()))
            throw KinematicInfeasible("requested top branch does not exist");
        res.top = br[branch_top];
    }
    const double x11 = res.top.s;
    if (branch_bottom == kAutoBranch) {
        res.bottom = fold_transfer(sb, Crease::N, x11);
    } else {
        auto br = fold_transfer_branches(sb, Crease::N, x11);
        if (branch_bottom < 0 || branch_bottom >= static_cast<int>(br.size()))
            throw KinematicInfeasible("requested bottom branch does not exist");
        res.bottom = br[branch_bottom];
    }
    res.y21 = std::tan(0.5 * res.bottom.s);
    res.w11 = std::tan(0.5 * res.top[static_cast<int>(kTransverse)]);
    res.w21 = std::tan(0.5 * res.bottom[static_cast<int>(kTransverse)]);
    return res;
}

std::pair<double, double> two_vertex_feasible_interval(const VertexAngles& top,
                                                       const VertexAngles& bottom) {
    const SectorQuad st = sectors_from_labels(top, true, true);
    const SectorQuad sb = sectors_from_labels(bottom, false, true);
    auto ok = [&](double rho) {
        try {
            for (const auto& ft : fold_transfer_branches(st, Crease::N, rho)) {
                try {
                    if (!fold_transfer_branches(sb, Crease::N, ft.s).empty()) return true;
                } catch (const KinematicInfeasible&) {
                }
            }
            return false;
        } catch (const KinematicInfeasible&) {
            return false;
        }
    };
    auto [lo, hi] = scan_interval(-kPi + 1e-9, kPi - 1e-9, ok);
    return {std::tan(0.5 * lo), std::tan(0.5 * hi)};
}

}  // namespace ori

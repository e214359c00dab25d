#include "ori/nets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ori/vertex.hpp"

namespace ori {

namespace {

double angle_between(const Vec3& u, const Vec3& v) {
    return std::atan2(u.cross(v).norm(), u.dot(v));
}

int sign_of(double x) { return (x > 0) - (x < 0); }

// Recursive adaptive Simpson; integrand assumed smooth.
double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-13) {
    if (a == b) return 0.0;
    if (b < a) return -integrate(f, b, a, tol);
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

// Shared prefix data of the trajectory sums (1-based k maps to array k-1).
struct TPrefix {
    std::vector<double> phi, c;   // size cols
    std::vector<double> tx, ty;   // trajectory partial sums, size cols
};

TPrefix prefix_sums(const THedronData& d) {
    const int cols = d.cols();
    TPrefix p;
    p.phi.assign(cols, 0.0);
    p.c.assign(cols, 1.0);
    p.tx.assign(cols, 0.0);
    p.ty.assign(cols, 0.0);
    for (int k = 1; k < cols; ++k) {
        double eta = d.eta[k - 1], theta = d.theta[k - 1];
        double psi = p.phi[k - 1] + eta;
        p.phi[k] = p.phi[k - 1] + eta + theta;
        p.c[k] = p.c[k - 1] * std::cos(eta) / std::cos(theta);
        p.tx[k] = p.tx[k - 1] - d.b[k - 1] * std::sin(psi);
        p.ty[k] = p.ty[k - 1] + d.b[k - 1] * std::cos(psi);
    }
    return p;
}

QuadMesh thedron_build_core(const THedronData& d) {
    const int rows = d.rows(), cols = d.cols();
    TPrefix p = prefix_sums(d);
    QuadMesh m(rows, cols);
    for (int i1 = 0; i1 < rows; ++i1)
        for (int i2 = 0; i2 < cols; ++i2) {
            double r = d.a[i1] * p.c[i2];
            m.at(i1, i2) = Vec3(p.tx[i2] + r * std::cos(p.phi[i2]),
                                p.ty[i2] + r * std::sin(p.phi[i2]), d.z[i1]);
        }
    return m;
}

}  // namespace

void validate(const THedronData& d) {
    const size_t steps = d.b.size();
    if (d.eta.size() != steps || d.theta.size() != steps)
        throw UsageError("thedron data: eta, theta, b must share one size");
    if (d.a.size() != d.z.size())
        throw UsageError("thedron data: a and z must share one size");
    if (d.a.size() < 2 || steps < 1)
        throw UsageError("thedron data: need at least 2 rows and 2 columns");
    for (size_t k = 0; k < steps; ++k) {
        if (std::abs(d.eta[k]) >= kPi / 2 || std::abs(d.theta[k]) >= kPi / 2)
            throw UsageError("thedron data: eta, theta must lie in (-pi/2, pi/2) at segment " +
                             std::to_string(k + 1));
        if (d.b[k] == 0.0)
            throw UsageError("thedron data: b must be nonzero at segment " +
                             std::to_string(k + 1));
    }
    int dir = sign_of(d.z[1] - d.z[0]);
    if (dir == 0) throw UsageError("thedron data: z must be strictly monotone");
    for (size_t j = 1; j + 1 < d.z.size(); ++j)
        if (sign_of(d.z[j + 1] - d.z[j]) != dir)
            throw UsageError("thedron data: z must be strictly monotone");
}

QuadMesh thedron_build(const THedronData& d) {
    validate(d);
    return thedron_build_core(d);
}

std::pair<double, double> thedron_flex_interval(const THedronData& d) {
    validate(d);
    TPrefix p = prefix_sums(d);
    double lo = -1.0;
    for (int k = 1; k < d.cols(); ++k)
        lo = std::max(lo, -sq(p.c[k - 1] * std::cos(d.eta[k - 1])));
    double hi = std::numeric_limits<double>::infinity();
    for (size_t j = 1; j < d.a.size(); ++j) {
        double da = d.a[j] - d.a[j - 1];
        if (da != 0.0) hi = std::min(hi, sq((d.z[j] - d.z[j - 1]) / da));
    }
    return {lo, hi};
}

QuadMesh thedron_flex(const THedronData& d, double t) {
    validate(d);
    if (t == 0.0) return thedron_build_core(d);
    TPrefix p = prefix_sums(d);
    for (int k = 1; k < d.cols(); ++k) {
        double bound = -sq(p.c[k - 1] * std::cos(d.eta[k - 1]));
        if (t <= bound)
            throw FlexRangeError("flex t = " + std::to_string(t) +
                                 " at or below the angle bound " + std::to_string(bound) +
                                 " set by column segment " + std::to_string(k));
    }
    for (size_t j = 1; j < d.a.size(); ++j) {
        double da = d.a[j] - d.a[j - 1];
        if (da == 0.0) continue;
        double bound = sq((d.z[j] - d.z[j - 1]) / da);
        if (t > bound)
            throw FlexRangeError("flex t = " + std::to_string(t) +
                                 " above the height bound " + std::to_string(bound) +
                                 " set by row " + std::to_string(j));
    }

    THedronData f = d;
    double root = std::sqrt(1.0 + t);
    for (auto& a : f.a) a *= root;
    for (int k = 1; k < d.cols(); ++k) {
        f.eta[k - 1] = std::asin(std::sin(d.eta[k - 1]) * p.c[k - 1] /
                                 std::sqrt(sq(p.c[k - 1]) + t));
        f.theta[k - 1] = std::asin(std::sin(d.theta[k - 1]) * p.c[k] /
                                   std::sqrt(sq(p.c[k]) + t));
    }
    for (size_t j = 1; j < d.z.size(); ++j) {
        double dz = d.z[j] - d.z[j - 1], da = d.a[j] - d.a[j - 1];
        f.z[j] = f.z[j - 1] + sign_of(dz) * std::sqrt(sq(dz) - t * sq(da));
    }
    return thedron_build_core(f);
}

namespace {

double phi_prime(const TSurfaceData& s, double v) {
    double h = 1e-6;
    return (s.phi(v + h) - s.phi(v - h)) / (2.0 * h);
}

double c_of(const TSurfaceData& s, double u2) {
    double I = integrate(
        [&](double v) { return phi_prime(s, v) * std::tan(s.eta(v)); }, 0.0, u2);
    return s.c0 * std::exp(I);
}

}  // namespace

Vec3 tsurface_eval(const TSurfaceData& s, double u1, double u2) {
    auto psi = [&](double v) { return s.phi(v) - s.eta(v); };
    double tx = integrate([&](double v) { return -s.b(v) * std::sin(psi(v)); }, 0.0, u2);
    double ty = integrate([&](double v) { return s.b(v) * std::cos(psi(v)); }, 0.0, u2);
    double r = s.a(u1) * c_of(s, u2);
    return Vec3(tx + r * std::cos(s.phi(u2)), ty + r * std::sin(s.phi(u2)), s.z(u1));
}

double tsurface_conjugate_residual(const TSurfaceData& s, double u2) {
    double h = 1e-5;
    double dc = (c_of(s, u2 + h) - c_of(s, u2 - h)) / (2.0 * h);
    return c_of(s, u2) * phi_prime(s, u2) * std::tan(s.eta(u2)) - dc;
}

namespace {

// In-plane corner rays. All panels carry the normal oriented as
// south-edge x east-edge, matching the canonical reconstruction pose.
Vec3 ray_east_of_south(const Vec3& n, const Vec3& s_dir, double ang) {
    return rot_axis(n, ang) * s_dir;
}
Vec3 ray_south_of_east(const Vec3& n, const Vec3& e_dir, double ang) {
    return rot_axis(n, -ang) * e_dir;
}
Vec3 ray_east_of_north(const Vec3& n, const Vec3& n_dir, double ang) {
    return rot_axis(n, -ang) * n_dir;
}
Vec3 ray_south_of_west(const Vec3& n, const Vec3& w_dir, double ang) {
    return rot_axis(n, ang) * w_dir;
}

// Least-squares meeting point of two lines p + s u, q + t v.
Vec3 intersect_lines(const Vec3& p, const Vec3& u, const Vec3& q, const Vec3& v,
                     const std::string& what) {
    double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
    double det = uu * vv - uv * uv;
    if (det <= 1e-14 * uu * vv)
        throw NumericError(what + ": fill rays are parallel");
    Vec3 w = q - p;
    double sp = (w.dot(u) * vv - w.dot(v) * uv) / det;
    double tp = (w.dot(u) * uv - w.dot(v) * uu) / det;
    return 0.5 * (p + sp * u + q + tp * v);
}

void check_sector(double ang, int i1, int i2, const std::string& who) {
    if (!(ang > 0.0 && ang < kPi))
        throw NumericError(who + ": sector angle leaves (0, pi) at vertex (" +
                           std::to_string(i1) + ", " + std::to_string(i2) + ")");
}

}  // namespace

const Vec3& VHedron::normal(int i1, int i2) const {
    return panel_normals[static_cast<size_t>(i1) * (mesh.cols() - 1) + i2];
}
int VHedron::panel_rows() const { return mesh.rows() - 1; }
int VHedron::panel_cols() const { return mesh.cols() - 1; }

VHedron vhedron_from_normals(const VHedronNormalData& d) {
    const int R = static_cast<int>(d.col0.size()) - 1;
    const int C = static_cast<int>(d.row0.size()) - 1;
    if (R < 2 || C < 2)
        throw UsageError("vhedron boundary polylines need at least 3 points each");
    if (d.sa_col.size() + 2 != d.col0.size() || d.sc_row.size() + 2 != d.row0.size())
        throw UsageError("vhedron boundary angle family sizes do not match the polylines");
    if ((d.row0[0] - d.col0[0]).norm() > 1e-9 * (1.0 + d.col0[0].norm()))
        throw UsageError("vhedron boundary polylines must share their first point");
    for (double a : d.sa_col)
        if (!(a > 0.0 && a < kPi)) throw UsageError("vhedron sa_col angle outside (0, pi)");
    for (double a : d.sc_row)
        if (!(a > 0.0 && a < kPi)) throw UsageError("vhedron sc_row angle outside (0, pi)");

    // Normal strips along both boundary curves, one panel past the patch.
    std::vector<Vec3> nn(static_cast<size_t>(R) * C);
    auto N = [&](int i, int j) -> Vec3& { return nn[static_cast<size_t>(i) * C + j]; };
    std::vector<Vec3> dcol(R), erow(C);  // interior crease rays off the boundaries

    N(0, 0) = (d.col0[1] - d.col0[0]).cross(d.row0[1] - d.row0[0]).normalized();
    for (int i = 1; i < R; ++i) {
        dcol[i] = ray_east_of_north(N(i - 1, 0), (d.col0[i - 1] - d.col0[i]).normalized(),
                                    d.sa_col[i - 1]);
        N(i, 0) = (d.col0[i + 1] - d.col0[i]).cross(dcol[i]).normalized();
    }
    for (int j = 1; j < C; ++j) {
        erow[j] = ray_south_of_west(N(0, j - 1), (d.row0[j - 1] - d.row0[j]).normalized(),
                                    d.sc_row[j - 1]);
        N(0, j) = erow[j].cross(d.row0[j + 1] - d.row0[j]).normalized();
    }

    // Moutard fill of the Gauss map.
    for (int i = 0; i + 1 < R; ++i)
        for (int j = 0; j + 1 < C; ++j) {
            Vec3 sum = N(i + 1, j) + N(i, j + 1);
            double den = 1.0 + N(i + 1, j).dot(N(i, j + 1));
            if (std::abs(den) < 1e-12)
                throw NumericError("vhedron normals are antipodal across panel (" +
                                   std::to_string(i) + ", " + std::to_string(j) + ")");
            double lam = N(i, j).dot(sum) / den - 1.0;
            N(i + 1, j + 1) = -N(i, j) + (lam + 1.0) * sum;
        }

    QuadMesh mesh(R, C);
    for (int i = 0; i < R; ++i) mesh.at(i, 0) = d.col0[i];
    for (int j = 0; j < C; ++j) mesh.at(0, j) = d.row0[j];

    // Positions: each fill intersects the crease through x(i+1,j) with the
    // crease through x(i,j+1). Crease directions come from adjacent normals;
    // along a flat crease they degenerate and the equal-opposite-angle rule
    // of a planar interior vertex supplies the ray instead.
    const double kFlat = 1e-9;
    auto fill_ray_a = [&](int i, int j) -> Vec3 {  // at x(i+1, j), j >= 1
        Vec3 c = N(i, j).cross(N(i + 1, j));
        if (c.norm() >= kFlat) return c;
        Vec3 b = mesh.at(i + 1, j);
        Vec3 nd = (mesh.at(i, j) - b).normalized();
        Vec3 wd = (mesh.at(i + 1, j - 1) - b).normalized();
        Vec3 pl = (mesh.at(i + 1, j) - mesh.at(i, j))
                      .cross(mesh.at(i, j + 1) - mesh.at(i, j))
                      .normalized();
        return ray_east_of_north(pl, nd, kPi - angle_between(nd, wd));
    };
    auto fill_ray_b = [&](int i, int j) -> Vec3 {  // at x(i, j+1), i >= 1
        Vec3 c = N(i, j).cross(N(i, j + 1));
        if (c.norm() >= kFlat) return c;
        Vec3 b = mesh.at(i, j + 1);
        Vec3 wd = (mesh.at(i, j) - b).normalized();
        Vec3 nd = (mesh.at(i - 1, j + 1) - b).normalized();
        Vec3 pl = (mesh.at(i + 1, j) - mesh.at(i, j))
                      .cross(mesh.at(i, j + 1) - mesh.at(i, j))
                      .normalized();
        return ray_south_of_west(pl, wd, kPi - angle_between(wd, nd));
    };
    for (int i = 0; i + 1 < R; ++i)
        for (int j = 0; j + 1 < C; ++j) {
            Vec3 da = (j == 0) ? dcol[i + 1] : fill_ray_a(i, j);
            Vec3 db = (i == 0) ? erow[j + 1] : fill_ray_b(i, j);
            mesh.at(i + 1, j + 1) =
                intersect_lines(mesh.at(i + 1, j), da, mesh.at(i, j + 1), db,
                                "vhedron fill (" + std::to_string(i + 1) + ", " +
                                    std::to_string(j + 1) + ")");
        }

    VHedron out;
    out.mesh = std::move(mesh);
    out.panel_normals.resize(static_cast<size_t>(R - 1) * (C - 1));
    for (int i = 0; i + 1 < R; ++i)
        for (int j = 0; j + 1 < C; ++j)
            out.panel_normals[static_cast<size_t>(i) * (C - 1) + j] = N(i, j);
    return out;
}

VHedron vhedron_from_angles(const VHedronAngleData& d) {
    const int R = static_cast<int>(d.sd_col.size());
    const int C = static_cast<int>(d.sd_row.size());
    if (R < 3 || C < 3)
        throw UsageError("vhedron angle data needs at least a 3 x 3 patch");
    if (static_cast<int>(d.sa_col.size()) != R - 1 ||
        static_cast<int>(d.sc_row.size()) != C - 1 ||
        static_cast<int>(d.len_col.size()) != R - 1 ||
        static_cast<int>(d.len_row.size()) != C - 1)
        throw UsageError("vhedron angle data sizes disagree");
    if (std::abs(d.sd_row[0] - d.sd_col[0]) > 1e-12)
        throw UsageError("vhedron angle data: sd_row[0] must equal sd_col[0]");
    auto in_range = [](double a) { return a > 0.0 && a < kPi; };
    for (double a : d.sd_col) if (!in_range(a)) throw UsageError("vhedron sd_col angle outside (0, pi)");
    for (double a : d.sa_col) if (!in_range(a)) throw UsageError("vhedron sa_col angle outside (0, pi)");
    for (double a : d.sd_row) if (!in_range(a)) throw UsageError("vhedron sd_row angle outside (0, pi)");
    for (double a : d.sc_row) if (!in_range(a)) throw UsageError("vhedron sc_row angle outside (0, pi)");
    if (!in_range(d.p00)) throw UsageError("vhedron p00 outside (0, pi)");
    for (double l : d.len_col) if (l <= 0) throw UsageError("vhedron crease lengths must be positive");
    for (double l : d.len_row) if (l <= 0) throw UsageError("vhedron crease lengths must be positive");

    // Transfer ratios. At a vertex with equal opposite sectors p, q the two
    // fold half-tangents obey t_h * t_v = G(p, q); across the mesh G must
    // factor as row value times column value, anchored by the boundary
    // families and the three reach-past angles.
    auto G = [](double p, double q) {
        return std::cos(0.5 * (p + q)) / std::cos(0.5 * (p - q));
    };
    double g00 = G(d.p00, d.sd_col[0]);
    if (std::abs(g00) < 1e-12)
        throw UsageError("vhedron anchor angles p00 + sd_col[0] too close to pi");

    // Interior (and one phantom row/column of) sector angles p = NE = SW,
    // q = NW = SE, solved from panel angle sums and the factored ratios.
    std::vector<double> pv(static_cast<size_t>(R) * C, 0.0), qv(pv);
    auto P = [&](int i, int j) -> double& { return pv[static_cast<size_t>(i) * C + j]; };
    auto Q = [&](int i, int j) -> double& { return qv[static_cast<size_t>(i) * C + j]; };
    for (int j = 1; j < C; ++j)
        for (int i = 1; i < R; ++i) {
            double se = (i == 1) ? ((j == 1) ? d.sd_col[0] : d.sd_row[j - 1])
                                 : ((j == 1) ? d.sd_col[i - 1] : Q(i - 1, j - 1));
            double ne = (j == 1) ? d.sa_col[i - 1] : P(i, j - 1);
            double sw = (i == 1) ? d.sc_row[j - 1] : P(i - 1, j);
            double q = 2.0 * kPi - se - ne - sw;
            check_sector(q, i, j, "vhedron angle chain");
            double g = G(d.sa_col[i - 1], d.sd_col[i]) *
                       G(d.sc_row[j - 1], d.sd_row[j]) / g00;
            double w = std::atan((g - std::cos(q)) / std::sin(q));
            double p = q - 2.0 * w;
            check_sector(p, i, j, "vhedron angle chain");
            P(i, j) = p;
            Q(i, j) = q;
        }

    // Fold field of the pinned state: folds are constant along coordinate
    // curves, so one column drive spreads through the first interior row
    // and column on the equal-opposite-fold branch.
    auto symmetric_out = [&](int i, int j, Crease in, double rho) {
        SectorQuad s{P(i, j), Q(i, j), P(i, j), Q(i, j)};
        auto branches = fold_transfer_branches(s, in, rho);
        if (branches.empty())
            throw KinematicInfeasible("vhedron drive infeasible at vertex (" +
                                      std::to_string(i) + ", " + std::to_string(j) + ")");
        int opp = (static_cast<int>(in) + 2) % 4;
        const FoldQuad* best = &branches[0];
        for (const auto& b : branches)
            if (std::abs(b[opp] - rho) < std::abs((*best)[opp] - rho)) best = &b;
        return *best;
    };
    std::vector<double> vfold(C, 0.0), hfold(R, 0.0);
    vfold[1] = d.drive;
    for (int i = 1; i + 1 < R; ++i) hfold[i] = symmetric_out(i, 1, Crease::N, vfold[1]).e;
    for (int j = 2; j + 1 < C; ++j) vfold[j] = symmetric_out(1, j, Crease::W, hfold[1]).n;

    // Panel march in the canonical pose: panel (0,0) in the z = 0 plane
    // with normal -z, east along +x, south along +y.
    QuadMesh mesh(R, C);
    std::vector<Vec3> nrm(static_cast<size_t>(R - 1) * (C - 1));
    auto NR = [&](int i, int j) -> Vec3& { return nrm[static_cast<size_t>(i) * (C - 1) + j]; };

    mesh.at(0, 0) = Vec3::Zero();
    mesh.at(0, 1) = Vec3(d.len_row[0], 0, 0);
    mesh.at(1, 0) = d.len_col[0] * Vec3(std::cos(d.sd_col[0]), std::sin(d.sd_col[0]), 0);
    NR(0, 0) = Vec3(0, 0, -1);
    mesh.at(1, 1) = intersect_lines(
        mesh.at(1, 0),
        ray_east_of_north(NR(0, 0), (mesh.at(0, 0) - mesh.at(1, 0)).normalized(), d.sa_col[0]),
        mesh.at(0, 1),
        ray_south_of_west(NR(0, 0), (mesh.at(0, 0) - mesh.at(0, 1)).normalized(), d.sc_row[0]),
        "vhedron fill (1, 1)");

    for (int j = 1; j + 1 < C; ++j) {  // first panel row
        Vec3 down = (mesh.at(1, j) - mesh.at(0, j)).normalized();
        NR(0, j) = rot_axis(down, vfold[j]) * NR(0, j - 1);
        mesh.at(0, j + 1) = mesh.at(0, j) + d.len_row[j] * ray_east_of_south(NR(0, j), down, d.sd_row[j]);
        mesh.at(1, j + 1) = intersect_lines(
            mesh.at(1, j),
            ray_east_of_north(NR(0, j), (mesh.at(0, j) - mesh.at(1, j)).normalized(), P(1, j)),
            mesh.at(0, j + 1),
            ray_south_of_west(NR(0, j), (mesh.at(0, j) - mesh.at(0, j + 1)).normalized(), d.sc_row[j]),
            "vhedron fill (1, " + std::to_string(j + 1) + ")");
    }
    for (int i = 1; i + 1 < R; ++i) {  // first panel column
        Vec3 east = (mesh.at(i, 1) - mesh.at(i, 0)).normalized();
        NR(i, 0) = rot_axis(east, -hfold[i]) * NR(i - 1, 0);
        mesh.at(i + 1, 0) = mesh.at(i, 0) + d.len_col[i] * ray_south_of_east(NR(i, 0), east, d.sd_col[i]);
        mesh.at(i + 1, 1) = intersect_lines(
            mesh.at(i + 1, 0),
            ray_east_of_north(NR(i, 0), (mesh.at(i, 0) - mesh.at(i + 1, 0)).normalized(), d.sa_col[i]),
            mesh.at(i, 1),
            ray_south_of_west(NR(i, 0), (mesh.at(i, 0) - mesh.at(i, 1)).normalized(), P(i, 1)),
            "vhedron fill (" + std::to_string(i + 1) + ", 1)");
    }
    for (int i = 1; i + 1 < R; ++i)
        for (int j = 1; j + 1 < C; ++j) {
            Vec3 down = (mesh.at(i + 1, j) - mesh.at(i, j)).normalized();
            NR(i, j) = rot_axis(down, vfold[j]) * NR(i, j - 1);
            mesh.at(i + 1, j + 1) = intersect_lines(
                mesh.at(i + 1, j),
                ray_east_of_north(NR(i, j), (mesh.at(i, j) - mesh.at(i + 1, j)).normalized(), P(i + 1, j)),
                mesh.at(i, j + 1),
                ray_south_of_west(NR(i, j), (mesh.at(i, j) - mesh.at(i, j + 1)).normalized(), P(i, j + 1)),
                "vhedron fill (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ")");
        }

    VHedron out;
    out.mesh = std::move(mesh);
    out.panel_normals = std::move(nrm);
    return out;
}

AngleField vhedron_angles(const QuadMesh& mesh) {
    const int R = mesh.rows(), C = mesh.cols();
    AngleField f(R, C);
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) {
            const Vec3& x = mesh.at(i, j);
            QuadrantAngles qa{0, 0, 0, 0};
            if (i > 0 && j + 1 < C)
                qa.ne = angle_between(mesh.at(i - 1, j) - x, mesh.at(i, j + 1) - x);
            if (i > 0 && j > 0)
                qa.nw = angle_between(mesh.at(i - 1, j) - x, mesh.at(i, j - 1) - x);
            if (i + 1 < R && j > 0)
                qa.sw = angle_between(mesh.at(i + 1, j) - x, mesh.at(i, j - 1) - x);
            if (i + 1 < R && j + 1 < C)
                qa.se = angle_between(mesh.at(i + 1, j) - x, mesh.at(i, j + 1) - x);
            set_vertex_quadrants(f, i, j, qa);
        }
    return f;
}

double opposite_angle_residual(const QuadMesh& mesh) {
    double worst = 0.0;
    for (int i = 1; i + 1 < mesh.rows(); ++i)
        for (int j = 1; j + 1 < mesh.cols(); ++j) {
            const Vec3& x = mesh.at(i, j);
            Vec3 en = mesh.at(i - 1, j) - x, ew = mesh.at(i, j - 1) - x;
            Vec3 es = mesh.at(i + 1, j) - x, ee = mesh.at(i, j + 1) - x;
            worst = std::max(worst, std::abs(angle_between(en, ee) - angle_between(es, ew)));
            worst = std::max(worst, std::abs(angle_between(en, ew) - angle_between(es, ee)));
        }
    return worst;
}

double moutard_residual(const VHedron& v) {
    double worst = 0.0;
    for (int i = 0; i + 1 < v.panel_rows(); ++i)
        for (int j = 0; j + 1 < v.panel_cols(); ++j) {
            const Vec3 &n00 = v.normal(i, j), &n10 = v.normal(i + 1, j);
            const Vec3 &n01 = v.normal(i, j + 1), &n11 = v.normal(i + 1, j + 1);
            double lam = n00.dot(n10 + n01) / (1.0 + n10.dot(n01)) - 1.0;
            Vec3 r = (n11 - n10 - n01 + n00) - lam * (n10 + n01);
            worst = std::max(worst, r.norm());
        }
    return worst;
}

double rigid_motion_residual(const QuadMesh& a, const QuadMesh& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw UsageError("rigid_motion_residual: mesh sizes disagree");
    const int n = a.rows() * a.cols();
    Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
            ca += a.at(i, j);
            cb += b.at(i, j);
        }
    ca /= n;
    cb /= n;
    Mat3 m = Mat3::Zero();
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            m += (b.at(i, j) - cb) * (a.at(i, j) - ca).transpose();
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 rot = svd.matrixV() * svd.matrixU().transpose();  // orthogonal, det +-1
    double worst = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            worst = std::max(worst,
                             ((a.at(i, j) - ca) - rot * (b.at(i, j) - cb)).norm());
    return worst;
}

QuadMesh chebyshev_build(const std::vector<Vec3>& col0, const std::vector<Vec3>& row0,
                         const std::function<double(int, int)>& lambda) {
    const int R = static_cast<int>(col0.size()), C = static_cast<int>(row0.size());
    if (R < 2 || C < 2) throw UsageError("chebyshev boundary polylines too short");
    if ((row0[0] - col0[0]).norm() > 1e-9 * (1.0 + col0[0].norm()))
        throw UsageError("chebyshev boundary polylines must share their first point");
    QuadMesh m(R, C);
    for (int i = 0; i < R; ++i) m.at(i, 0) = col0[i];
    for (int j = 0; j < C; ++j) m.at(0, j) = row0[j];
    for (int i = 1; i < R; ++i)
        for (int j = 1; j < C; ++j) {
            Vec3 s = m.at(i - 1, j) - m.at(i, j - 1);
            Vec3 dvec = m.at(i, j - 1) + m.at(i - 1, j) - 2.0 * m.at(i - 1, j - 1);
            double half = 0.5 * lambda(i - 1, j - 1);
            Mat3 A;
            A << 1, -half * s.z(), half * s.y(),
                 half * s.z(), 1, -half * s.x(),
                 -half * s.y(), half * s.x(), 1;
            m.at(i, j) = m.at(i - 1, j - 1) + A.partialPivLu().solve(dvec);
        }
    return m;
}

double chebyshev_residual(const QuadMesh& m) {
    double worst = 0.0;
    for (int i = 0; i + 1 < m.rows(); ++i)
        for (int j = 0; j + 1 < m.cols(); ++j) {
            double top = (m.at(i, j + 1) - m.at(i, j)).norm();
            double bot = (m.at(i + 1, j + 1) - m.at(i + 1, j)).norm();
            double lef = (m.at(i + 1, j) - m.at(i, j)).norm();
            double rig = (m.at(i + 1, j + 1) - m.at(i, j + 1)).norm();
            double scale = std::max({top, bot, lef, rig});
            if (scale == 0) continue;
            worst = std::max(worst, std::max(std::abs(top - bot), std::abs(lef - rig)) / scale);
        }
    return worst;
}

double chebyshev_lambda_measure(const QuadMesh& m, int i1, int i2) {
    Vec3 d1 = m.at(i1 + 1, i2 + 1) - m.at(i1, i2);
    Vec3 d2 = m.at(i1, i2 + 1) - m.at(i1 + 1, i2);
    Vec3 u = d1.cross(d2);
    Vec3 mixed = m.at(i1 + 1, i2 + 1) - m.at(i1, i2 + 1) - m.at(i1 + 1, i2) + m.at(i1, i2);
    double den = u.squaredNorm();
    if (den == 0) throw NumericError("chebyshev quad has collinear diagonals");
    return 2.0 * mixed.dot(u) / den;
}

KHedron khedron_build(const std::vector<Vec3>& ncol0, const std::vector<Vec3>& nrow0,
                      const Vec3& x00) {
    const int R = static_cast<int>(ncol0.size()), C = static_cast<int>(nrow0.size());
    if (R < 2 || C < 2) throw UsageError("khedron normal strips too short");
    if ((nrow0[0] - ncol0[0]).norm() > 1e-12)
        throw UsageError("khedron normal strips must share their first entry");
    KHedron k;
    k.normals.rows = R;
    k.normals.cols = C;
    k.normals.n.resize(static_cast<size_t>(R) * C);
    for (int i = 0; i < R; ++i) k.normals.at(i, 0) = ncol0[i];
    for (int j = 0; j < C; ++j) k.normals.at(0, j) = nrow0[j];
    for (int i = 1; i < R; ++i)
        for (int j = 1; j < C; ++j)
            k.normals.at(i, j) =
                -k.normals.at(i - 1, j - 1) - k.normals.at(i - 1, j) - k.normals.at(i, j - 1);

    k.mesh = QuadMesh(R, C);
    k.mesh.at(0, 0) = x00;
    for (int i = 1; i < R; ++i)
        k.mesh.at(i, 0) =
            k.mesh.at(i - 1, 0) + k.normals.at(i - 1, 0).cross(k.normals.at(i, 0));
    for (int j = 1; j < C; ++j)
        k.mesh.at(0, j) =
            k.mesh.at(0, j - 1) + k.normals.at(0, j).cross(k.normals.at(0, j - 1));
    for (int i = 1; i < R; ++i)
        for (int j = 1; j < C; ++j)
            k.mesh.at(i, j) =
                k.mesh.at(i, j - 1) + k.normals.at(i, j).cross(k.normals.at(i, j - 1));
    return k;
}

KHedron khedron_fixture(int rows, int cols, double u10, double u20, double h1,
                        double h2) {
    if (rows < 2 || cols < 2) throw UsageError("khedron fixture needs a 2 x 2 grid");
    auto nu = [](double u1, double u2) {
        double s = u1 + u2, d = u1 - u2;
        return Vec3(std::tanh(s) * std::cos(d), std::tanh(s) * std::sin(d),
                    1.0 / std::cosh(s));
    };
    std::vector<Vec3> ncol0(rows), nrow0(cols);
    for (int i = 0; i < rows; ++i)
        ncol0[i] = (i % 2 ? -1.0 : 1.0) * nu(u10 + i * h1, u20);
    for (int j = 0; j < cols; ++j)
        nrow0[j] = (j % 2 ? -1.0 : 1.0) * nu(u10, u20 + j * h2);
    double s = u10 + u20, d = u10 - u20;
    Vec3 x00(std::cos(d) / std::cosh(s), std::sin(d) / std::cosh(s), s - std::tanh(s));
    return khedron_build(ncol0, nrow0, x00);
}

double coplanarity_residual(const QuadMesh& m) {
    double worst = 0.0;
    for (int i = 1; i + 1 < m.rows(); ++i)
        for (int j = 1; j + 1 < m.cols(); ++j) {
            const Vec3& x = m.at(i, j);
            Vec3 e[4] = {(m.at(i - 1, j) - x).normalized(), (m.at(i, j - 1) - x).normalized(),
                         (m.at(i + 1, j) - x).normalized(), (m.at(i, j + 1) - x).normalized()};
            for (int a = 0; a < 4; ++a)
                worst = std::max(worst, std::abs(e[a % 4].dot(
                                     e[(a + 1) % 4].cross(e[(a + 2) % 4]))));
        }
    return worst;
}

double gauss_chebyshev_residual(const LelieuvreField& f) {
    double worst = 0.0;
    for (int i = 0; i + 1 < f.rows; ++i)
        for (int j = 0; j + 1 < f.cols; ++j) {
            Vec3 n00 = f.at(i, j).normalized(), n10 = f.at(i + 1, j).normalized();
            Vec3 n01 = f.at(i, j + 1).normalized(), n11 = f.at(i + 1, j + 1).normalized();
            double top = (n01 - n00).norm(), bot = (n11 - n10).norm();
            double lef = (n10 - n00).norm(), rig = (n11 - n01).norm();
            double scale = std::max({top, bot, lef, rig});
            if (scale == 0) continue;
            worst = std::max(worst, std::max(std::abs(top - bot), std::abs(lef - rig)) / scale);
        }
    return worst;
}

}  // namespace ori

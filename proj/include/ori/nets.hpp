#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ori/mesh.hpp"

namespace ori {

// T-hedra: trapezoidal quad meshes with horizontal coplanar rows. eta and
// theta are the signed trajectory/profile angles per column step, a the
// per-row axis coordinates, b the per-column signed projected lengths,
// z the strictly monotone per-row heights.
struct THedronData {
    std::vector<double> eta;    // size cols-1, in (-pi/2, pi/2)
    std::vector<double> theta;  // size cols-1, in (-pi/2, pi/2)
    std::vector<double> a;      // size rows
    std::vector<double> b;      // size cols-1, nonzero
    std::vector<double> z;      // size rows, strictly monotone

    int rows() const { return static_cast<int>(a.size()); }
    int cols() const { return static_cast<int>(b.size()) + 1; }
};

void validate(const THedronData& d);

QuadMesh thedron_build(const THedronData& d);

// Exact one-parameter isometric flex. t = 0 is the identity.
QuadMesh thedron_flex(const THedronData& d, double t);

// Feasible flex range (t_min, t_max) from the radicand scan; the build
// state t = 0 is always inside.
std::pair<double, double> thedron_flex_interval(const THedronData& d);

// Smooth T-surface. phi is the trajectory tangent direction, eta the
// (equal) trajectory/profile angle, b the signed trajectory speed, all
// functions of u2; a, z are functions of u1. psi = phi - eta, and
// c(u2) = c0 exp(int_0^u2 phi'(v) tan eta(v) dv) enforces the conjugate
// condition c phi' tan(eta) = c'.
struct TSurfaceData {
    std::function<double(double)> phi, eta, b;
    std::function<double(double)> a, z;
    double c0 = 1.0;
};

Vec3 tsurface_eval(const TSurfaceData& s, double u1, double u2);

// Residual of the conjugate-net condition c * (dphi/du2) * tan(eta) - dc/du2
// at u2, from central differences.
double tsurface_conjugate_residual(const TSurfaceData& s, double u2);

// V-hedra (discrete Voss surfaces): every interior vertex has equal
// opposite sector angles. The Gauss map lives on panels; N(i1,i2) is the
// unit normal of panel (i1,i2).

// Construction 1 data: two boundary position polylines plus the sector
// angles that tilt each successive boundary panel. sa_col[i1] is the panel
// (i1,0) corner angle at x(i1+1,0) (between the crease up the boundary and
// the interior crease); sc_row[i2] the panel (0,i2) corner at x(0,i2+1).
// The polylines overshoot the output patch by one point each: a finite
// patch of R x C vertices needs col0 = x(0..R, 0) and row0 = x(0, 0..C),
// because the last interior fills lean on one more boundary panel in each
// direction. The result has col0.size()-1 rows and row0.size()-1 columns.
struct VHedronNormalData {
    std::vector<Vec3> col0;      // x(i1, 0), size rows+1
    std::vector<Vec3> row0;      // x(0, i2), size cols+1; row0[0] == col0[0]
    std::vector<double> sa_col;  // size col0.size()-2
    std::vector<double> sc_row;  // size row0.size()-2
};

struct VHedron {
    QuadMesh mesh;
    std::vector<Vec3> panel_normals;  // (rows-1) x (cols-1), row-major
    const Vec3& normal(int i1, int i2) const;
    int panel_rows() const;
    int panel_cols() const;
};

VHedron vhedron_from_normals(const VHedronNormalData& d);

// Construction 2 data: sector angles and crease lengths on the coordinate
// curves. Angles follow the panel-corner convention: per boundary-column
// panel (i1,0) its west corners S^d (top) and S^a (bottom); per
// boundary-row panel (0,i2) its north corners S^d (left) and S^c (right,
// at the bottom of the next column). Three angles reach past the patch:
// sd_col[rows-1], sd_row[cols-1] and p00 are the S^d continuation at the
// last boundary vertex of each curve and the NE sector at x(0,0). They
// anchor the transfer-ratio chains that the interior angles are solved
// from; without them a finite patch leaves its far corner undetermined.
// The construction fixes the shape only up to the one-parameter flex, so
// the fold angle of the first interior vertical crease pins the state.
struct VHedronAngleData {
    std::vector<double> sd_col;  // SE sector at x(i1,0), size rows
    std::vector<double> sa_col;  // NE sector at x(i1+1,0), size rows-1
    std::vector<double> sd_row;  // SE sector at x(0,i2), size cols;
                                 // sd_row[0] == sd_col[0]
    std::vector<double> sc_row;  // SW sector at x(0,i2+1), size cols-1
    std::vector<double> len_col;  // |x(i1+1,0)-x(i1,0)|, size rows-1
    std::vector<double> len_row;  // |x(0,i2+1)-x(0,i2)|, size cols-1
    double p00 = kPi / 2;         // NE sector at x(0,0)
    double drive = 0.0;           // fold on crease (0,1)-(1,1)
};

VHedron vhedron_from_angles(const VHedronAngleData& d);

// Full sector-angle field of a V-hedron mesh, stored by the parity rule.
AngleField vhedron_angles(const QuadMesh& mesh);

// max over interior vertices of |opposite-angle differences|.
double opposite_angle_residual(const QuadMesh& mesh);

// max over panel quads of the Moutard residual of the panel-normal field,
// with lambda evaluated from its printed expression.
double moutard_residual(const VHedron& v);

// Least-squares rigid alignment (rotation + translation, det +1 or -1
// allowed) of b onto a; returns max vertex distance after alignment.
double rigid_motion_residual(const QuadMesh& a, const QuadMesh& b);

// Discrete Chebyshev net from two boundary polylines and a per-quad
// coefficient field: solves (I + (lambda/2) [s]x) E = d per quad.
QuadMesh chebyshev_build(const std::vector<Vec3>& col0,
                         const std::vector<Vec3>& row0,
                         const std::function<double(int, int)>& lambda);

// max over quads of the opposite edge length mismatch, relative to the
// longest edge of the quad.
double chebyshev_residual(const QuadMesh& m);

// Coefficient measured back from the built mesh: 2 |OO'| / area(AB'CD').
double chebyshev_lambda_measure(const QuadMesh& m, int i1, int i2);

// K-hedra via the Lelieuvre normal field, Moutard coefficient -4:
// N(i1+1,i2+1) = -N(i1,i2) - N(i1+1,i2) - N(i1,i2+1), positions from
// delta_1 x = N(i1,i2) x N(i1+1,i2), delta_2 x = N(i1,i2+1) x N(i1,i2).
struct LelieuvreField {
    int rows = 0, cols = 0;
    std::vector<Vec3> n;
    Vec3& at(int i1, int i2) { return n[static_cast<size_t>(i1) * cols + i2]; }
    const Vec3& at(int i1, int i2) const {
        return n[static_cast<size_t>(i1) * cols + i2];
    }
};

struct KHedron {
    QuadMesh mesh;
    LelieuvreField normals;
};

KHedron khedron_build(const std::vector<Vec3>& ncol0,
                      const std::vector<Vec3>& nrow0, const Vec3& x00);

// Pseudosphere fixture: boundary Lelieuvre strips sampled from the unit
// normal of the K-surface x = (cos(u1-u2)/cosh(u1+u2),
// sin(u1-u2)/cosh(u1+u2), u1+u2-tanh(u1+u2)), checkerboard-signed into the
// Moutard -4 gauge, then filled by khedron_build. Residuals shrink as
// O(h^2), so keep h1, h2 small.
KHedron khedron_fixture(int rows, int cols, double u10, double u20,
                        double h1, double h2);

// max over interior vertices of the five-point coplanarity volume
// (normalized by edge scale).
double coplanarity_residual(const QuadMesh& m);

// max over quads of the opposite chord-length mismatch of the normalized
// field, relative to the longest chord of the quad.
double gauss_chebyshev_residual(const LelieuvreField& f);

}  // namespace ori

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ori/core.hpp"

namespace ori {

// Sector angles of one interior vertex under the printed unit labels.
struct VertexAngles {
    double alpha, beta, gamma, delta;
};

// Geometric sector angles around a vertex, indexed by the crease pair they
// sit between: a1 = E..N, a2 = N..W, a3 = W..S, a4 = S..E.
struct SectorQuad {
    double a1, a2, a3, a4;
    double sum() const { return a1 + a2 + a3 + a4; }
};

// Fold angles on the four creases at one vertex.
struct FoldQuad {
    double n = 0, w = 0, s = 0, e = 0;
    double& operator[](int k) { return (&n)[k]; }
    double operator[](int k) const { return (&n)[k]; }
};

enum class Crease { N = 0, W = 1, S = 2, E = 3 };

// The printed labels alternate geometric quadrant with vertex parity
// (see vertex_quadrants); this is the single conversion point.
SectorQuad sectors_from_labels(const VertexAngles& v, bool row_odd, bool col_odd);

// Frobenius distance of the eight-factor rotation loop from identity;
// zero exactly when the four panels close up rigidly around the vertex.
double vertex_closure_residual(const SectorQuad& s, const FoldQuad& f);

// Solve the spherical-linkage transfer: given the fold on one crease,
// return the fold angles on the remaining three. At most two branches.
// With no hint the least-folded branch is returned; equal-norm distinct
// branches raise BifurcationError, an empty feasible set raises
// KinematicInfeasible.
FoldQuad fold_transfer(const SectorQuad& s, Crease crease, double rho_in,
                       const FoldQuad* hint = nullptr);

// Both kinematic branches (deduplicated when the radicand vanishes).
std::vector<FoldQuad> fold_transfer_branches(const SectorQuad& s, Crease crease,
                                             double rho_in);

// (mountain_count, valley_count); zero folds count as neither.
std::pair<int, int> mv_assignment(const FoldQuad& f);

// Closed interval of feasible input folds on `crease`, found by scanning the
// branch radicand over (-pi, pi) and bisecting the sign changes.
std::pair<double, double> feasible_fold_interval(const SectorQuad& s, Crease crease);

// Two stacked vertices joined by a vertical crease: the top vertex is read
// at (odd row, odd column) parity, the bottom at (even row, odd column),
// matching the printed labels at positions (1,j) and (2,j) for odd j.
// y11 drives the top vertex's N crease; x11 = top S fold feeds bottom N.
struct TwoVertexResult {
    double y21 = 0;  // half-tangent on the bottom vertex's S crease
    double w11 = 0;  // half-tangent on the top vertex's transverse crease
    double w21 = 0;  // same crease choice on the bottom vertex
    FoldQuad top, bottom;
};

inline constexpr int kAutoBranch = -1;

TwoVertexResult two_vertex_transfer(const VertexAngles& top,
                                    const VertexAngles& bottom, double y11,
                                    int branch_top = kAutoBranch,
                                    int branch_bottom = kAutoBranch);

// Feasible y11 interval of the composed two-vertex map (both vertices
// must admit real branches along the chain).
std::pair<double, double> two_vertex_feasible_interval(const VertexAngles& top,
                                                       const VertexAngles& bottom);

}  // namespace ori

#pragma once

#include <array>
#include <map>
#include <vector>

#include "ori/core.hpp"

namespace ori {

struct GridIndex {
    int i1 = 0;  // row, increases downward
    int i2 = 0;  // column, increases rightward
    bool operator==(const GridIndex&) const = default;
};

// Sector angles (alpha, beta, gamma, delta) stored per vertex of an
// rows x cols grid, counterclockwise order, radians in (0, pi).
// Boundary vertices carry angles too (filled by periodic extension or
// by the construction that made the field); kinematic code only reads
// interior vertices.
class AngleField {
   public:
    AngleField() = default;
    AngleField(int rows, int cols)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    std::array<double, 4>& at(int i1, int i2) { return data_[idx(i1, i2)]; }
    const std::array<double, 4>& at(int i1, int i2) const {
        return data_[idx(i1, i2)];
    }

    // Replace slot k of vertex (i1,i2) by its supplement pi - x. The
    // original is recorded so a second flip restores it bitwise (the real
    // identity pi - (pi - x) = x would otherwise be lost to rounding).
    void flip_supplement(int i1, int i2, int k) {
        size_t key = idx(i1, i2) * 4 + static_cast<size_t>(k);
        double& x = data_[key / 4][key % 4];
        auto it = flipped_.find(key);
        if (it != flipped_.end() && x == kPi - it->second) {
            x = it->second;
            flipped_.erase(it);
        } else {
            flipped_[key] = x;
            x = kPi - x;
        }
    }

    bool operator==(const AngleField&) const = default;

   private:
    size_t idx(int i1, int i2) const {
        if (i1 < 0 || i1 >= rows_ || i2 < 0 || i2 >= cols_)
            throw UsageError("AngleField index out of range");
        return static_cast<size_t>(i1) * cols_ + i2;
    }
    int rows_ = 0, cols_ = 0;
    std::vector<std::array<double, 4>> data_;
    std::map<size_t, double> flipped_;  // pre-flip values by flat slot
};

// Crease lengths on grid edges. h(i1,i2) = |x(i1,i2+1)-x(i1,i2)| joins
// column neighbours, v(i1,i2) = |x(i1+1,i2)-x(i1,i2)| joins row neighbours.
struct LengthField {
    int rows = 0, cols = 0;
    std::vector<double> h;  // rows x (cols-1)
    std::vector<double> v;  // (rows-1) x cols

    LengthField() = default;
    LengthField(int r, int c)
        : rows(r),
          cols(c),
          h(static_cast<size_t>(r) * (c - 1), 0.0),
          v(static_cast<size_t>(r - 1) * c, 0.0) {}

    double& hat(int i1, int i2) { return h[static_cast<size_t>(i1) * (cols - 1) + i2]; }
    double hat(int i1, int i2) const { return h[static_cast<size_t>(i1) * (cols - 1) + i2]; }
    double& vat(int i1, int i2) { return v[static_cast<size_t>(i1) * cols + i2]; }
    double vat(int i1, int i2) const { return v[static_cast<size_t>(i1) * cols + i2]; }
};

// 3D vertex positions of a folded (or flat) configuration.
class QuadMesh {
   public:
    QuadMesh() = default;
    QuadMesh(int rows, int cols)
        : rows_(rows), cols_(cols), pts_(static_cast<size_t>(rows) * cols, Vec3::Zero()) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    Vec3& at(int i1, int i2) { return pts_[idx(i1, i2)]; }
    const Vec3& at(int i1, int i2) const { return pts_[idx(i1, i2)]; }

   private:
    size_t idx(int i1, int i2) const {
        if (i1 < 0 || i1 >= rows_ || i2 < 0 || i2 >= cols_)
            throw UsageError("QuadMesh index out of range");
        return static_cast<size_t>(i1) * cols_ + i2;
    }
    int rows_ = 0, cols_ = 0;
    std::vector<Vec3> pts_;
};

// Fold angles live on interior creases. vfold(i1,i2) sits on the edge
// (i1,i2)-(i1+1,i2) (valid for i2 in [1, cols-2]); hfold(i1,i2) on
// (i1,i2)-(i1,i2+1) (valid for i1 in [1, rows-2]). Entries outside the
// interior bands are stored but meaningless (kept at 0).
struct FoldState {
    QuadMesh mesh;
    std::vector<double> vfold;  // (rows-1) x cols
    std::vector<double> hfold;  // rows x (cols-1)
    double drive = 0.0;         // driving fold angle, radians
    int rows = 0, cols = 0;

    FoldState() = default;
    FoldState(int r, int c)
        : mesh(r, c),
          vfold(static_cast<size_t>(r - 1) * c, 0.0),
          hfold(static_cast<size_t>(r) * (c - 1), 0.0),
          rows(r),
          cols(c) {}

    double& vfold_at(int i1, int i2) { return vfold[static_cast<size_t>(i1) * cols + i2]; }
    double vfold_at(int i1, int i2) const { return vfold[static_cast<size_t>(i1) * cols + i2]; }
    double& hfold_at(int i1, int i2) { return hfold[static_cast<size_t>(i1) * (cols - 1) + i2]; }
    double hfold_at(int i1, int i2) const { return hfold[static_cast<size_t>(i1) * (cols - 1) + i2]; }
};

// Normalized triple product |(u01 x u10) . u11| per panel, zero iff planar.
// Dimensionless, so rigid motions and uniform scaling leave it unchanged.
std::vector<double> panel_planarity_residual(const QuadMesh& mesh);
double max_planarity_residual(const QuadMesh& mesh);

LengthField edge_lengths(const QuadMesh& mesh);

// Sum of the four corner angles of panel (i1,i2) measured from positions.
double panel_angle_sum(const QuadMesh& mesh, int i1, int i2);

// Panel-corner angles S^a..S^d of panel (i1,i2) picked out of the per-vertex
// (alpha,beta,gamma,delta) field: S^d at x(i1,i2), S^a at x(i1+1,i2),
// S^b at x(i1+1,i2+1), S^c at x(i1,i2+1). This is the single reindexing
// point between vertex labels and panel corners.
struct PanelAngles {
    double sa, sb, sc, sd;
};
PanelAngles panel_corner_angles(const AngleField& f, int i1, int i2);

// Quadrant angles at a vertex: the sector angle between the outgoing grid
// edges in each of the four index-space quadrants.
// ne = between edge toward (i1-1,i2) and edge toward (i1,i2+1), etc.
struct QuadrantAngles {
    double ne, nw, sw, se;
};
QuadrantAngles vertex_quadrants(const AngleField& f, int i1, int i2);

// Inverse of vertex_quadrants: store measured quadrant angles into the
// (alpha..delta) slots the parity rule assigns at (i1,i2).
void set_vertex_quadrants(AngleField& f, int i1, int i2,
                          const QuadrantAngles& q);

}  // namespace ori

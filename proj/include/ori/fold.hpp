#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ori/mesh.hpp"
#include "ori/vertex.hpp"

namespace ori {

// Driving crease: the vertical crease north of vertex (vertex_row,
// vertex_col), i.e. edge (vertex_row-1, vertex_col)-(vertex_row,
// vertex_col). Default is the first interior vertex (1,1).
struct DriveSpec {
    int vertex_row = 1;
    int vertex_col = 1;
    double rho = 0.0;  // radians, in (-pi, pi)
};

struct FoldFieldReport {
    double max_loop_residual = 0.0;
    GridIndex worst_block;  // top-left vertex of the worst Kokotsakis block
};

// Fold angle on every interior crease from one driven crease, propagated
// vertex by vertex; throws KinematicInfeasible with the feasible drive
// interval when the drive is out of range, and NumericError naming the
// worst block when the loop condition fails (pattern not flexible).
FoldState solve_fold_field(const AngleField& angles, const DriveSpec& drive,
                           const FoldState* hint = nullptr,
                           FoldFieldReport* report = nullptr);

// 3D positions from angles + lengths + fold field. Panel (0,0) is placed
// canonically: vertex (0,0) at the origin, edge to (0,1) along +x, panel
// in the z = 0 plane, vertex (1,0) toward +y.
QuadMesh reconstruct_mesh(const AngleField& angles, const LengthField& lengths,
                          const FoldState& folds);

// solve_fold_field + reconstruct_mesh in one step.
FoldState reconstruct(const AngleField& angles, const LengthField& lengths,
                      const DriveSpec& drive, const FoldState* hint = nullptr);

struct SweepFrame {
    double rho = 0.0;
    FoldState state;
    double planarity = 0.0;
    double length_err = 0.0;  // max relative edge-length deviation
};

// Frames at `frames` evenly spaced drives in [rho_start, rho_end]; each
// frame seeds the next frame's branch choices.
std::vector<SweepFrame> sweep(const AngleField& angles,
                              const LengthField& lengths, DriveSpec drive,
                              double rho_start, double rho_end, int frames);

// Largest feasible drive interval around rho = value found by bisection,
// reported in the error message of an out-of-range drive.
std::pair<double, double> feasible_drive_interval(const AngleField& angles,
                                                  const DriveSpec& drive);

// Mountain/valley census of one frame: counts per interior vertex.
std::vector<std::pair<int, int>> mv_census(const FoldState& state);

double max_relative_length_error(const QuadMesh& mesh,
                                 const LengthField& expected);

}  // namespace ori

#pragma once

#include <functional>
#include <vector>

#include "ori/mesh.hpp"

namespace ori {

struct LineFit {
    Vec3 centroid = Vec3::Zero();
    Vec3 direction = Vec3::UnitX();
    double r2 = 0.0;  // leading eigenvalue / trace of the covariance
};

// PCA line fit: mean, residuals, C = dX dX^T/(n-1), spectral decomposition,
// leading eigenvector. Ties in the spectrum break toward the direction with
// the largest |x| component, then |y|.
LineFit best_fit_line(const std::vector<Vec3>& points);

struct RulingR2 {
    double min_r2 = 0.0;
    std::vector<double> per_ruling;
};

enum class RulingDirection { row, col };

// Fits one line per ruling polyline: vertices at the same relative periodic
// position along the chosen direction, one polyline per offset. stride =
// vertices per unit along the transverse direction.
RulingR2 ruling_r2(const QuadMesh& mesh, RulingDirection direction,
                   int stride);

struct RuledFit {
    double a = 0.0;      // helix radius
    double theta = 0.0;  // azimuthal step per sample, radians
    double b = 0.0;      // rise per sample
    std::vector<double> f;  // modulation, f[0] = 1
    double residual = 0.0;  // rms model mismatch of unit steps
    Vec3 axis = Vec3::UnitZ();
    Vec3 center = Vec3::Zero();
    double phase = 0.0;
};

// Fits the directrix step model dG(i) = f(i) * (-2a sin(i t + t/2) sin(t/2),
// 2a cos(i t + t/2) sin(t/2), b) after estimating the axis from successive
// step cross products. Throws NumericError when the steps are not helical.
RuledFit fit_helix(const std::vector<Vec3>& gamma, double mismatch_tol = 0.2);

// Cosines between directrix steps and rulings; returns (mean, max deviation
// from the mean).
std::pair<double, double> constant_angle_residual(
    const std::vector<Vec3>& gamma_steps, const std::vector<Vec3>& rulings);

// Samples x(u1,u2) = G(u2) + u1 * Phi(u2) on the given parameter grid.
// G integrates f(v) * (-a sin v, a cos v, b) by composite Simpson with step
// halving to 1e-10; Phi makes a constant angle with dG/du2 where
// (dG/du2 . Phi) / (f sqrt(a^2+b^2)) = angle_const in [0, 1).
QuadMesh limiting_surface(double a, double b, double angle_const,
                          const std::function<double(double)>& f,
                          const std::vector<double>& u1_samples,
                          const std::vector<double>& u2_samples);

// 2*pi minus the vertex angle sum, measured from 3D positions.
double angular_defect(const QuadMesh& mesh, GridIndex v);

// Area-gradient mean curvature at an interior vertex (cotan formula over
// the four incident triangles cut along both diagonals being the a,b,c,d
// fan); returns grad(area)/area. Falls back to the averaged triangle
// normal direction with zero magnitude when the gradient vanishes.
Vec3 mean_curvature_vector(const QuadMesh& mesh, GridIndex v);

// Same quantity on an explicit fan: center + ring (ordered, closed).
Vec3 fan_mean_curvature(const Vec3& center, const std::vector<Vec3>& ring);
double fan_area(const Vec3& center, const std::vector<Vec3>& ring);

// Unit normal of a fan: direction of the area gradient; when the gradient
// vanishes (flat or balanced fan) the average of the triangle normals.
Vec3 fan_normal(const Vec3& center, const std::vector<Vec3>& ring);

}  // namespace ori

#pragma once

#include <string>
#include <vector>

#include "ori/core.hpp"
#include "ori/vertex.hpp"

namespace ori {

enum class VertexFamily {
    isogram,
    anti_isogram,
    deltoid_i,
    anti_deltoid_i,
    deltoid_ii,
    anti_deltoid_ii,
    conic_i,
    conic_iv,
    elliptic,
};

// Pair does not satisfy the coupling precondition, or the vertex is outside
// the intended class regime (negative amplitude radicand).
struct CouplingError : NumericError {
    using NumericError::NumericError;
};

struct ResidualVector {
    std::vector<double> values;
    std::vector<std::string> labels;
    void add(double v, std::string label) {
        values.push_back(v);
        labels.push_back(std::move(label));
    }
    double max_abs() const;
};

// Signed defects of the class-defining angle equalities; empty for elliptic.
ResidualVector vertex_type_residual(VertexFamily fam, const VertexAngles& v);

// (sum of four corner angles) - 2*pi
double panel_sum_residual(double s1, double s2, double s3, double s4);

struct RatioPair {
    double cy, cw;
};

// Closed-form coupling ratios (y21/y11, w21/w11). The anti-isogram class
// admits four sign/branch forms; every other class has one.
std::vector<RatioPair> linear_ratio_forms(VertexFamily fam, const VertexAngles& top,
                                          const VertexAngles& bottom);
RatioPair linear_ratio(VertexFamily fam, const VertexAngles& top,
                       const VertexAngles& bottom);

double amplitude_px(const VertexAngles& v);
double amplitude_py(const VertexAngles& v);
double elliptic_modulus(const VertexAngles& v);

// Transfer-map mismatch of two stacked-vertex columns: max over sampled
// inputs of |T_A(y) - T_B(y)|, minimized over the four-by-four kinematic
// branch combinations. Zero (to tolerance) iff the Kokotsakis block built
// from the two columns flexes.
double phase_shift_residual(const VertexAngles& topA, const VertexAngles& bottomA,
                            const VertexAngles& topB, const VertexAngles& bottomB);

}  // namespace ori

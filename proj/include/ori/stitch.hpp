#pragma once

#include <vector>

#include "ori/mesh.hpp"
#include "ori/unit.hpp"

namespace ori {

struct TileSpec {
    UnitSolution unit;
    int m = 1;  // copies downward
    int n = 1;  // copies rightward
};

// Full vertex field of an m x n tiling: label-grid entries repeated
// periodically, plus one boundary ring so every interior vertex of the
// periodic pattern keeps its four panels. Grid size (pr*m + 2) x (pc*n + 2).
AngleField tile(const TileSpec& spec);

struct LengthProfile {
    enum class Kind { uniform, quadratic, samples };
    Kind kind = Kind::uniform;
    double base = 1.0;
    double q = 0.0;  // quadratic: L0 * (1 + q*(k/K - 1/2)^2), q > -4
    std::vector<double> samples;

    double at(int k, int K) const;

    static LengthProfile uniform(double L0) { return {Kind::uniform, L0, 0.0, {}}; }
    static LengthProfile quadratic(double L0, double q) {
        return {Kind::quadratic, L0, q, {}};
    }
};

// Crease lengths everywhere from one input row and one input column of
// lengths, via the four quadrant recurrences. row0 fills the horizontal
// creases of grid row `input_row`, col0 the vertical creases of grid
// column `input_col`.
LengthField propagate_lengths(const AngleField& angles,
                              const LengthProfile& row0,
                              const LengthProfile& col0, int input_row = 0,
                              int input_col = 0);

// Same, starting from explicit length rows (used by tests for
// traversal-order and scale checks).
LengthField propagate_lengths(const AngleField& angles,
                              const std::vector<double>& row0,
                              const std::vector<double>& col0,
                              int input_row = 0, int input_col = 0);

// The length recurrences subtract, so propagated lengths stay positive only
// when the column seeds sit inside a cone relative to the row seeds. Returns
// a scale s for col0 inside that cone (log-midpoint of the feasible window,
// found by probing and edge bisection). Throws InfeasibleLength when no
// scale works.
double balanced_col_scale(const AngleField& angles, const LengthProfile& row0,
                          const LengthProfile& col0, int input_row = 0,
                          int input_col = 0);

inline LengthProfile scaled_profile(LengthProfile p, double s) {
    p.base *= s;
    for (double& v : p.samples) v *= s;
    return p;
}

}  // namespace ori

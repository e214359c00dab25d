#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ori/coupling.hpp"
#include "ori/mesh.hpp"

namespace ori {

// One period of sector-angle classes. Families 1-5 use a 2x4 label grid
// (one 3x5-panel unit), family 6 a 4x4 grid (5x5 panels). Family 0 is the
// worked demo unit (anti-isogram row over anti-deltoid row, also 2x4);
// it is not reachable from the CLI.
struct UnitSpec {
    int family = 1;
    std::map<std::string, double> free_inputs;  // "b11" -> radians
    uint64_t seed = 0;
};

struct UnitSolution {
    int family = 0;
    AngleField angles;  // label grid
    double residual_norm = 0.0;
    int jacobian_rank = 0;
};

// Residual map of one family's constraint system after the vertex-type
// equalities have been eliminated by substitution. Sign-branch factors of
// the ratio equations are frozen from a configuration and passed back in,
// which keeps the residual smooth during iteration.
struct UnitSystem {
    int family = 0;
    int label_rows = 0, label_cols = 0;
    std::vector<std::string> unknown_names;
    std::vector<std::string> residual_labels;
    std::function<AngleField(const Eigen::VectorXd&)> expand;
    std::function<std::vector<double>(const Eigen::VectorXd&)> signs;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                  const std::vector<double>&)>
        residual;

    int dim() const { return static_cast<int>(unknown_names.size()); }
    int unknown_index(const std::string& name) const;
};

// family 0..6; families 5 and 6 build the system they are printed as
// (family 3, resp. all-conic-I) and the solver applies the strip-switch
// transform a,g -> pi - a,g to the solved grid afterwards.
UnitSystem build_unit_system(int family);

UnitSolution solve_unit(const UnitSpec& spec, double tol = 1e-12,
                        int max_restarts = 64);

// Full printed constraint list evaluated on a label grid (families 5/6:
// evaluated through the inverse switch transform), labels included.
ResidualVector unit_residuals(int family, const AngleField& labels);

// Equations the printed lists leave out because periodicity implies them;
// checked unimposed. For family 0 these are the two closing equations of
// the demo unit; for the others, the wrap-around seam conditions.
ResidualVector implied_residuals(int family, const AngleField& labels);

enum class StripAxis { row, col };

// Replaces the sector angles of one row/column of panels by pi minus
// themselves in a vertex field that follows the parity storage rule.
AngleField switch_strip(const AngleField& field, StripAxis axis, int index);

std::string unit_solution_to_json(const UnitSolution& u);
UnitSolution unit_solution_from_json(const std::string& text);

// Label-grid periods and the per-family free-input names.
struct FamilyInfo {
    int label_rows = 0, label_cols = 0;
    std::vector<std::string> default_inputs;  // names; empty for family 6
};
FamilyInfo family_info(int family);

}  // namespace ori

#include "ori/stitch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ori/core.hpp"

namespace ori {

namespace {

int floor_mod(int a, int p) {
    int r = a % p;
    return r < 0 ? r + p : r;
}

}  // namespace

AngleField tile(const TileSpec& spec) {
    const AngleField& u = spec.unit.angles;
    const int pr = u.rows();
    const int pc = u.cols();
    if (spec.m < 1 || spec.n < 1) throw UsageError("tile: m, n must be >= 1");
    const int rows = pr * spec.m + 2;
    const int cols = pc * spec.n + 2;
    AngleField out(rows, cols);
    for (int i = 0; i < rows; ++i) {
        // global vertex g1 = i; label row = (g1 - 1) mod pr, so the unit
        // block starts at grid row 1 and the boundary ring extends it
        // periodically.
        int lr = floor_mod(i - 1, pr);
        for (int j = 0; j < cols; ++j) {
            int lc = floor_mod(j - 1, pc);
            out.at(i, j) = u.at(lr, lc);
        }
    }
    return out;
}

double LengthProfile::at(int k, int K) const {
    switch (kind) {
        case Kind::uniform:
            return base;
        case Kind::quadratic: {
            double s = K > 0 ? static_cast<double>(k) / K : 0.0;
            return base * (1.0 + q * sq(s - 0.5));
        }
        case Kind::samples:
            if (k < 0 || k >= static_cast<int>(samples.size()))
                throw UsageError("length profile: sample index out of range");
            return samples[static_cast<size_t>(k)];
    }
    throw UsageError("length profile: bad kind");
}

namespace {

std::string panel_tag(int i, int j) {
    return "panel (" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

double checked_sin(double x, int i, int j) {
    double s = std::sin(x);
    if (std::abs(s) < 1e-9)
        throw SingularPanel("length recurrence denominator vanishes at " +
                            panel_tag(i, j));
    return s;
}

double checked_len(double v, int i, int j) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw InfeasibleLength("nonpositive crease length propagated from " +
                               panel_tag(i, j));
    return v;
}

}  // namespace

LengthField propagate_lengths(const AngleField& angles,
                              const std::vector<double>& row0,
                              const std::vector<double>& col0, int input_row,
                              int input_col) {
    const int rows = angles.rows();
    const int cols = angles.cols();
    if (rows < 2 || cols < 2) throw UsageError("propagate_lengths: grid too small");
    if (static_cast<int>(row0.size()) != cols - 1)
        throw UsageError("propagate_lengths: input row needs cols-1 lengths");
    if (static_cast<int>(col0.size()) != rows - 1)
        throw UsageError("propagate_lengths: input column needs rows-1 lengths");
    if (input_row < 0 || input_row >= rows || input_col < 0 || input_col >= cols)
        throw UsageError("propagate_lengths: input row/column out of range");
    for (double v : row0)
        if (!(v > 0.0)) throw UsageError("propagate_lengths: nonpositive input length");
    for (double v : col0)
        if (!(v > 0.0)) throw UsageError("propagate_lengths: nonpositive input length");

    LengthField L(rows, cols);
    for (int j = 0; j + 1 < cols; ++j) L.hat(input_row, j) = row0[static_cast<size_t>(j)];
    for (int i = 0; i + 1 < rows; ++i) L.vat(i, input_col) = col0[static_cast<size_t>(i)];

    // Panel (i,j) edges: left v(i,j), top h(i,j), right v(i,j+1),
    // bottom h(i+1,j). Each quadrant recurrence consumes the two edges
    // nearer the input cross and produces the two farther ones.
    auto S = [&](int i, int j) { return panel_corner_angles(angles, i, j); };

    // right-bottom: panels with i >= input_row, j >= input_col
    for (int i = input_row; i + 1 < rows; ++i) {
        for (int j = input_col; j + 1 < cols; ++j) {
            PanelAngles p = S(i, j);
            double lx = L.vat(i, j), ly = L.hat(i, j);
            double den = checked_sin(p.sb, i, j);
            L.vat(i, j + 1) = checked_len(
                (lx * std::sin(p.sa) - ly * std::sin(p.sd + p.sa)) / den, i, j);
            L.hat(i + 1, j) = checked_len(
                (ly * std::sin(p.sc) - lx * std::sin(p.sd + p.sc)) / den, i, j);
        }
    }
    // right-top: panels with i < input_row, j >= input_col
    for (int i = input_row - 1; i >= 0; --i) {
        for (int j = input_col; j + 1 < cols; ++j) {
            PanelAngles p = S(i, j);
            double lx = L.vat(i, j), ly1 = L.hat(i + 1, j);
            double den = checked_sin(p.sc, i, j);
            L.vat(i, j + 1) = checked_len(
                (lx * std::sin(p.sd) - ly1 * std::sin(p.sa + p.sd)) / den, i, j);
            L.hat(i, j) = checked_len(
                (ly1 * std::sin(p.sb) - lx * std::sin(p.sa + p.sb)) / den, i, j);
        }
    }
    // left-bottom: panels with i >= input_row, j < input_col
    for (int i = input_row; i + 1 < rows; ++i) {
        for (int j = input_col - 1; j >= 0; --j) {
            PanelAngles p = S(i, j);
            double lx1 = L.vat(i, j + 1), ly = L.hat(i, j);
            double den = checked_sin(p.sa, i, j);
            L.vat(i, j) = checked_len(
                (lx1 * std::sin(p.sb) - ly * std::sin(p.sc + p.sb)) / den, i, j);
            L.hat(i + 1, j) = checked_len(
                (ly * std::sin(p.sd) - lx1 * std::sin(p.sc + p.sd)) / den, i, j);
        }
    }
    // left-top: panels with i < input_row, j < input_col
    for (int i = input_row - 1; i >= 0; --i) {
        for (int j = input_col - 1; j >= 0; --j) {
            PanelAngles p = S(i, j);
            double lx1 = L.vat(i, j + 1), ly1 = L.hat(i + 1, j);
            double den = checked_sin(p.sd, i, j);
            L.vat(i, j) = checked_len(
                (lx1 * std::sin(p.sc) - ly1 * std::sin(p.sb + p.sc)) / den, i, j);
            L.hat(i, j) = checked_len(
                (ly1 * std::sin(p.sa) - lx1 * std::sin(p.sb + p.sa)) / den, i, j);
        }
    }
    return L;
}

LengthField propagate_lengths(const AngleField& angles,
                              const LengthProfile& row0,
                              const LengthProfile& col0, int input_row,
                              int input_col) {
    const int rows = angles.rows();
    const int cols = angles.cols();
    std::vector<double> r(static_cast<size_t>(cols - 1));
    std::vector<double> c(static_cast<size_t>(rows - 1));
    for (int j = 0; j + 1 < cols; ++j) r[static_cast<size_t>(j)] = row0.at(j, cols - 2);
    for (int i = 0; i + 1 < rows; ++i) c[static_cast<size_t>(i)] = col0.at(i, rows - 2);
    return propagate_lengths(angles, r, c, input_row, input_col);
}

double balanced_col_scale(const AngleField& angles, const LengthProfile& row0,
                          const LengthProfile& col0, int input_row,
                          int input_col) {
    // Balance quality of the propagated field: min edge / max edge, or -1
    // when the scale is infeasible. Keeping this ratio high matters beyond
    // feasibility: the mesh assembly conditions like max/min, so a lopsided
    // field amplifies roundoff.
    auto spread = [&](double s) -> double {
        try {
            LengthField f = propagate_lengths(angles, row0,
                                              scaled_profile(col0, s),
                                              input_row, input_col);
            double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
            for (int i = 0; i < f.rows; ++i)
                for (int j = 0; j + 1 < f.cols; ++j) {
                    mn = std::min(mn, f.hat(i, j));
                    mx = std::max(mx, f.hat(i, j));
                }
            for (int i = 0; i + 1 < f.rows; ++i)
                for (int j = 0; j < f.cols; ++j) {
                    mn = std::min(mn, f.vat(i, j));
                    mx = std::max(mx, f.vat(i, j));
                }
            return mn / mx;
        } catch (const NumericError&) {
            return -1.0;
        }
    };
    const int n = 97;
    auto grid = [](int k) { return std::pow(10.0, -6.0 + 12.0 * k / (n - 1)); };
    int best = -1;
    double best_q = -1.0;
    for (int k = 0; k < n; ++k) {
        double q = spread(grid(k));
        if (q > best_q) {
            best_q = q;
            best = k;
        }
    }
    if (best_q <= 0.0)
        throw InfeasibleLength(
            "no positive crease-length seed scale exists for this pattern");
    // golden-section refinement on log10(s) around the best probe
    double a = std::log10(grid(std::max(best - 1, 0)));
    double b = std::log10(grid(std::min(best + 1, n - 1)));
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double q1 = spread(std::pow(10.0, x1)), q2 = spread(std::pow(10.0, x2));
    for (int it = 0; it < 40; ++it) {
        if (q1 < q2) {
            a = x1;
            x1 = x2;
            q1 = q2;
            x2 = a + gr * (b - a);
            q2 = spread(std::pow(10.0, x2));
        } else {
            b = x2;
            x2 = x1;
            q2 = q1;
            x1 = b - gr * (b - a);
            q1 = spread(std::pow(10.0, x1));
        }
    }
    double s = std::pow(10.0, 0.5 * (a + b));
    if (spread(s) <= 0.0) s = grid(best);
    return s;
}

}  // namespace ori

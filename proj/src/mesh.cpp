#include "ori/mesh.hpp"

namespace ori {

std::vector<double> panel_planarity_residual(const QuadMesh& mesh) {
    int pr = mesh.rows() - 1, pc = mesh.cols() - 1;
    std::vector<double> out(static_cast<size_t>(pr) * pc, 0.0);
    for (int i = 0; i < pr; ++i) {
        for (int j = 0; j < pc; ++j) {
            const Vec3& p00 = mesh.at(i, j);
            Vec3 e10 = (mesh.at(i + 1, j) - p00).normalized();
            Vec3 e01 = (mesh.at(i, j + 1) - p00).normalized();
            Vec3 e11 = (mesh.at(i + 1, j + 1) - p00).normalized();
            out[static_cast<size_t>(i) * pc + j] = std::abs(e10.cross(e01).dot(e11));
        }
    }
    return out;
}

double max_planarity_residual(const QuadMesh& mesh) {
    double m = 0.0;
    for (double r : panel_planarity_residual(mesh)) m = std::max(m, r);
    return m;
}

LengthField edge_lengths(const QuadMesh& mesh) {
    LengthField f(mesh.rows(), mesh.cols());
    for (int i = 0; i < mesh.rows(); ++i)
        for (int j = 0; j + 1 < mesh.cols(); ++j)
            f.hat(i, j) = (mesh.at(i, j + 1) - mesh.at(i, j)).norm();
    for (int i = 0; i + 1 < mesh.rows(); ++i)
        for (int j = 0; j < mesh.cols(); ++j)
            f.vat(i, j) = (mesh.at(i + 1, j) - mesh.at(i, j)).norm();
    return f;
}

static double corner_angle(const Vec3& at, const Vec3& p, const Vec3& q) {
    Vec3 u = p - at, v = q - at;
    double c = u.dot(v) / (u.norm() * v.norm());
    return std::acos(std::clamp(c, -1.0, 1.0));
}

double panel_angle_sum(const QuadMesh& mesh, int i1, int i2) {
    const Vec3& a = mesh.at(i1, i2);
    const Vec3& b = mesh.at(i1 + 1, i2);
    const Vec3& c = mesh.at(i1 + 1, i2 + 1);
    const Vec3& d = mesh.at(i1, i2 + 1);
    return corner_angle(a, b, d) + corner_angle(b, c, a) +
           corner_angle(c, d, b) + corner_angle(d, a, c);
}

// The printed unit labels (alpha..delta) alternate their geometric quadrant
// with vertex parity so that equal labels tile seamlessly. Row parity odd
// puts alpha in the S half, column parity odd in the W half; beta mirrors
// alpha across the column axis, delta across the row axis, gamma across both.
QuadrantAngles vertex_quadrants(const AngleField& f, int i1, int i2) {
    const auto& t = f.at(i1, i2);
    double a = t[0], b = t[1], g = t[2], d = t[3];
    bool row_s = (i1 % 2) == 1;  // alpha sits in the S half
    bool col_w = (i2 % 2) == 1;  // alpha sits in the W half
    QuadrantAngles q{};
    auto put = [&](bool s, bool w, double val) {
        if (!s && !w)
            q.ne = val;
        else if (!s && w)
            q.nw = val;
        else if (s && w)
            q.sw = val;
        else
            q.se = val;
    };
    put(row_s, col_w, a);
    put(row_s, !col_w, b);
    put(!row_s, !col_w, g);
    put(!row_s, col_w, d);
    return q;
}

void set_vertex_quadrants(AngleField& f, int i1, int i2,
                          const QuadrantAngles& q) {
    bool row_s = (i1 % 2) == 1;
    bool col_w = (i2 % 2) == 1;
    auto pick = [&](bool s, bool w) {
        if (!s && !w) return q.ne;
        if (!s && w) return q.nw;
        if (s && w) return q.sw;
        return q.se;
    };
    auto& t = f.at(i1, i2);
    t[0] = pick(row_s, col_w);
    t[1] = pick(row_s, !col_w);
    t[2] = pick(!row_s, !col_w);
    t[3] = pick(!row_s, col_w);
}

PanelAngles panel_corner_angles(const AngleField& f, int i1, int i2) {
    PanelAngles p{};
    p.sd = vertex_quadrants(f, i1, i2).se;
    p.sa = vertex_quadrants(f, i1 + 1, i2).ne;
    p.sb = vertex_quadrants(f, i1 + 1, i2 + 1).nw;
    p.sc = vertex_quadrants(f, i1, i2 + 1).sw;
    return p;
}

}  // namespace ori

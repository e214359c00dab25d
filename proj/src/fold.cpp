#include "ori/fold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ori/core.hpp"

namespace ori {

namespace {

double ang_diff(double a, double b) { return std::remainder(a - b, 2.0 * kPi); }

SectorQuad sectors_at(const AngleField& angles, int i, int j) {
    QuadrantAngles q = vertex_quadrants(angles, i, j);
    return SectorQuad{q.ne, q.nw, q.sw, q.se};
}

FoldQuad folds_at(const FoldState& fs, int i, int j) {
    FoldQuad f;
    f.n = fs.vfold_at(i - 1, j);
    f.w = fs.hfold_at(i, j - 1);
    f.s = fs.vfold_at(i, j);
    f.e = fs.hfold_at(i, j);
    return f;
}

void store_folds(FoldState& fs, int i, int j, const FoldQuad& f) {
    fs.vfold_at(i - 1, j) = f.n;
    fs.hfold_at(i, j - 1) = f.w;
    fs.vfold_at(i, j) = f.s;
    fs.hfold_at(i, j) = f.e;
}

double branch_norm(const FoldQuad& f) {
    return std::abs(f.n) + std::abs(f.w) + std::abs(f.s) + std::abs(f.e);
}

double hint_dist(const FoldQuad& f, const FoldQuad& h) {
    double d = 0.0;
    for (int k = 0; k < 4; ++k) d = std::max(d, std::abs(ang_diff(f[k], h[k])));
    return d;
}

// Branch rejection threshold during the search; the final report still
// carries the exact residual of the accepted assignment.
constexpr double kLoopTol = 1e-9;

struct Propagator {
    const AngleField& angles;
    const FoldState* hint;
    int rows, cols;
    int vr, vc;
    // greedy mode: never reject a branch, just track the best-matching one;
    // used to produce the inflexibility report after the search fails.
    bool greedy = false;
    double max_residual = 0.0;
    GridIndex worst{0, 0};
    long n_checked = 0, n_grow = 0, n_reject_tol = 0, n_reject_infeas = 0;

    Propagator(const AngleField& a, const FoldState* h, int vr_, int vc_)
        : angles(a), hint(h), rows(a.rows()), cols(a.cols()), vr(vr_), vc(vc_) {}

    std::vector<FoldQuad> ordered_branches(int i, int j, Crease in, double rho) {
        std::vector<FoldQuad> br = fold_transfer_branches(sectors_at(angles, i, j), in, rho);
        if (br.size() > 1) {
            if (hint) {
                FoldQuad h = folds_at(*hint, i, j);
                std::stable_sort(br.begin(), br.end(),
                                 [&](const FoldQuad& x, const FoldQuad& y) {
                                     return hint_dist(x, h) < hint_dist(y, h);
                                 });
            } else {
                std::stable_sort(br.begin(), br.end(),
                                 [](const FoldQuad& x, const FoldQuad& y) {
                                     return branch_norm(x) < branch_norm(y);
                                 });
            }
        }
        return br;
    }

    // Solve a cross-checked vertex: the fold comes in on `in`, and the
    // crease `chk` already carries a value the chosen branch must match.
    // The mismatch on `chk` is the Kokotsakis loop residual at this block.
    bool solve_checked(FoldState& fs, int i, int j, Crease in, Crease chk) {
        ++n_checked;
        double rho = folds_at(fs, i, j)[static_cast<int>(in)];
        double known = folds_at(fs, i, j)[static_cast<int>(chk)];
        std::vector<FoldQuad> br;
        try {
            br = fold_transfer_branches(sectors_at(angles, i, j), in, rho);
        } catch (const KinematicInfeasible&) {
            ++n_reject_infeas;
            if (greedy) throw;
            return false;
        }
        double best = std::numeric_limits<double>::infinity();
        const FoldQuad* pick = nullptr;
        for (const FoldQuad& f : br) {
            double d = std::abs(ang_diff(f[static_cast<int>(chk)], known));
            if (d < best) {
                best = d;
                pick = &f;
            }
        }
        if (!pick) return false;
        if (!greedy && best > kLoopTol) {
            ++n_reject_tol;
            return false;
        }
        FoldQuad f = *pick;
        f[static_cast<int>(chk)] = known;  // redundant crease keeps its value
        store_folds(fs, i, j, f);
        if (best > max_residual) {
            max_residual = best;
            worst = GridIndex{i - 1, j - 1};
        }
        return true;
    }

    // Fill the interior cells of row i between the spine column and the
    // current horizontal extents (exclusive of the spine itself).
    bool fill_row(FoldState& fs, int i, int r_ext, int l_ext, Crease in) {
        for (int j = vc + 1; j <= vc + r_ext; ++j)
            if (!solve_checked(fs, i, j, in, Crease::W)) return false;
        for (int j = vc - 1; j >= vc - l_ext; --j)
            if (!solve_checked(fs, i, j, in, Crease::E)) return false;
        return true;
    }

    bool fill_col(FoldState& fs, int j, int d_ext, int u_ext, Crease chk) {
        for (int i = vr + 1; i <= vr + d_ext; ++i)
            if (!solve_checked(fs, i, j, Crease::N, chk)) return false;
        for (int i = vr - 1; i >= vr - u_ext; --i)
            if (!solve_checked(fs, i, j, Crease::S, chk)) return false;
        return true;
    }

    // Depth-first growth over the four arms; each step commits one spine
    // vertex (two kinematic branches at most) and force-fills the newly
    // determined interior cells, so a wrong spine branch dies immediately.
    bool grow(FoldState& fs, int d, int u, int r, int l, bool& infeasible) {
        ++n_grow;
        const int dmax = rows - 2 - vr, umax = vr - 1;
        const int rmax = cols - 2 - vc, lmax = vc - 1;
        // pick the least-advanced arm so the front stays balanced
        int arm = -1;
        double best = 2.0;
        auto consider = [&](int a, int done, int total) {
            if (done >= total) return;
            double p = static_cast<double>(done) / total;
            if (p < best) {
                best = p;
                arm = a;
            }
        };
        consider(0, d, dmax);
        consider(1, r, rmax);
        consider(2, u, umax);
        consider(3, l, lmax);
        if (arm < 0) return true;  // fully grown

        int i = vr, j = vc;
        Crease in = Crease::N;
        if (arm == 0) {
            i = vr + d + 1;
            in = Crease::N;
        } else if (arm == 1) {
            j = vc + r + 1;
            in = Crease::W;
        } else if (arm == 2) {
            i = vr - u - 1;
            in = Crease::S;
        } else {
            j = vc - l - 1;
            in = Crease::E;
        }
        double rho = folds_at(fs, i, j)[static_cast<int>(in)];
        std::vector<FoldQuad> br;
        try {
            br = ordered_branches(i, j, in, rho);
        } catch (const KinematicInfeasible&) {
            infeasible = true;
            return false;
        }
        for (const FoldQuad& f : br) {
            FoldState trial = fs;
            double saved_res = max_residual;
            GridIndex saved_worst = worst;
            store_folds(trial, i, j, f);
            bool ok = true;
            if (arm == 0)
                ok = fill_row(trial, i, r, l, Crease::N);
            else if (arm == 2)
                ok = fill_row(trial, i, r, l, Crease::S);
            else if (arm == 1)
                ok = fill_col(trial, j, d, u, Crease::W);
            else
                ok = fill_col(trial, j, d, u, Crease::E);
            if (ok && grow(trial, d + (arm == 0), u + (arm == 2), r + (arm == 1),
                           l + (arm == 3), infeasible)) {
                fs = trial;
                return true;
            }
            max_residual = saved_res;
            worst = saved_worst;
        }
        return false;
    }
};

FoldState solve_core(const AngleField& angles, const DriveSpec& drive,
                     const FoldState* hint, FoldFieldReport* report) {
    const int rows = angles.rows(), cols = angles.cols();
    if (rows < 3 || cols < 3)
        throw UsageError("solve_fold_field: grid has no interior vertex");
    const int vr = drive.vertex_row, vc = drive.vertex_col;
    if (vr < 1 || vr > rows - 2 || vc < 1 || vc > cols - 2)
        throw UsageError("solve_fold_field: driven vertex is not interior");

    Propagator prop(angles, hint, vr, vc);
    struct Stats {
        const Propagator& p;
        ~Stats() {
            if (std::getenv("ORI_FOLD_STATS"))
                std::fprintf(stderr,
                             "fold stats: grow=%ld checked=%ld reject_tol=%ld "
                             "reject_infeas=%ld\n",
                             p.n_grow, p.n_checked, p.n_reject_tol,
                             p.n_reject_infeas);
        }
    } stats{prop};
    FoldState fs(rows, cols);
    fs.drive = drive.rho;
    fs.vfold_at(vr - 1, vc) = drive.rho;

    // the driven vertex itself: pure branch choice, no cross-check
    std::vector<FoldQuad> br = prop.ordered_branches(vr, vc, Crease::N, drive.rho);
    bool infeasible = false;
    for (const FoldQuad& f : br) {
        FoldState trial = fs;
        store_folds(trial, vr, vc, f);
        if (prop.grow(trial, 0, 0, 0, 0, infeasible)) {
            if (report) {
                report->max_loop_residual = prop.max_residual;
                report->worst_block = prop.worst;
            }
            return trial;
        }
        prop.max_residual = 0.0;
        prop.worst = GridIndex{0, 0};
    }
    if (infeasible || br.empty())
        throw KinematicInfeasible("drive out of range");

    // No branch assignment satisfies every loop: rerun greedily to find the
    // best-effort residual, then report the pattern as inflexible.
    prop.greedy = true;
    prop.max_residual = 0.0;
    FoldState greedy_fs(rows, cols);
    greedy_fs.drive = drive.rho;
    greedy_fs.vfold_at(vr - 1, vc) = drive.rho;
    store_folds(greedy_fs, vr, vc, br.front());
    bool dummy = false;
    prop.grow(greedy_fs, 0, 0, 0, 0, dummy);
    if (report) {
        report->max_loop_residual = prop.max_residual;
        report->worst_block = prop.worst;
    }
    throw NumericError(
        "pattern is not flexible: loop residual " +
        std::to_string(prop.max_residual) + " at Kokotsakis block (" +
        std::to_string(prop.worst.i1) + ", " + std::to_string(prop.worst.i2) + ")");
}

}  // namespace

FoldState solve_fold_field(const AngleField& angles, const DriveSpec& drive,
                           const FoldState* hint, FoldFieldReport* report) {
    try {
        return solve_core(angles, drive, hint, report);
    } catch (const KinematicInfeasible&) {
        auto iv = feasible_drive_interval(angles, drive);
        throw KinematicInfeasible(
            "drive " + std::to_string(drive.rho) +
            " rad is out of range; feasible drive interval is approximately [" +
            std::to_string(iv.first) + ", " + std::to_string(iv.second) + "]");
    }
}

std::pair<double, double> feasible_drive_interval(const AngleField& angles,
                                                  const DriveSpec& drive) {
    auto feasible = [&](double rho) {
        DriveSpec d = drive;
        d.rho = rho;
        try {
            solve_core(angles, d, nullptr, nullptr);
            return true;
        } catch (const std::runtime_error&) {
            return false;
        }
    };
    const int n = 201;
    const double lo = -kPi + 1e-6, hi = kPi - 1e-6;
    std::vector<char> ok(n);
    for (int k = 0; k < n; ++k)
        ok[static_cast<size_t>(k)] = feasible(lo + (hi - lo) * k / (n - 1)) ? 1 : 0;
    // maximal feasible runs; prefer the one containing the requested drive
    int best_a = -1, best_b = -1;
    int cur_a = -1;
    int want = static_cast<int>(std::lround((drive.rho - lo) / (hi - lo) * (n - 1)));
    want = std::clamp(want, 0, n - 1);
    auto better = [&](int a, int b) {
        if (best_a < 0) return true;
        bool has_want = a <= want && want <= b;
        bool best_has = best_a <= want && want <= best_b;
        if (has_want != best_has) return has_want;
        return (b - a) > (best_b - best_a);
    };
    for (int k = 0; k <= n; ++k) {
        if (k < n && ok[static_cast<size_t>(k)]) {
            if (cur_a < 0) cur_a = k;
        } else if (cur_a >= 0) {
            if (better(cur_a, k - 1)) {
                best_a = cur_a;
                best_b = k - 1;
            }
            cur_a = -1;
        }
    }
    if (best_a < 0) throw KinematicInfeasible("no feasible drive found");
    auto at = [&](int k) { return lo + (hi - lo) * k / (n - 1); };
    double a = at(best_a), b = at(best_b);
    // bisect outward to the true boundary of this component
    double a_out = best_a > 0 ? at(best_a - 1) : a;
    double b_out = best_b < n - 1 ? at(best_b + 1) : b;
    for (int it = 0; it < 50; ++it) {
        double m = 0.5 * (a_out + a);
        (feasible(m) ? a : a_out) = m;
        m = 0.5 * (b_out + b);
        (feasible(m) ? b : b_out) = m;
    }
    return {a, b};
}

QuadMesh reconstruct_mesh(const AngleField& angles, const LengthField& lengths,
                          const FoldState& folds) {
    const int rows = angles.rows(), cols = angles.cols();
    if (lengths.rows != rows || lengths.cols != cols ||
        folds.rows != rows || folds.cols != cols)
        throw UsageError("reconstruct_mesh: field sizes disagree");

    QuadMesh mesh(rows, cols);
    std::vector<char> placed(static_cast<size_t>(rows) * cols, 0);
    auto set_point = [&](int i, int j, const Vec3& p) {
        size_t k = static_cast<size_t>(i) * cols + j;
        if (placed[k]) {
            // redundant prediction: must agree with the earlier placement
            double scale = 1.0 + p.norm();
            if ((mesh.at(i, j) - p).norm() > 1e-6 * scale)
                throw NumericError("reconstruct_mesh: inconsistent panel loop at vertex (" +
                                   std::to_string(i) + ", " + std::to_string(j) + ")");
            return;
        }
        mesh.at(i, j) = p;
        placed[k] = 1;
    };

    // local 2D shape of panel (i,j): A=x(i,j) at origin, top edge along +x,
    // row direction toward +y; the panel normal in this frame is -z.
    struct Local {
        Vec3 A, B, C, D;
    };
    auto local_shape = [&](int i, int j) {
        PanelAngles p = panel_corner_angles(angles, i, j);
        double h0 = lengths.hat(i, j), h1 = lengths.hat(i + 1, j);
        double v0 = lengths.vat(i, j), v1 = lengths.vat(i, j + 1);
        Local L;
        L.A = Vec3(0, 0, 0);
        L.D = Vec3(h0, 0, 0);
        L.B = Vec3(v0 * std::cos(p.sd), v0 * std::sin(p.sd), 0);
        L.C = L.D + Vec3(-v1 * std::cos(p.sc), v1 * std::sin(p.sc), 0);
        double close = std::abs((L.B - L.C).norm() - h1);
        if (close > 1e-6 * (1.0 + h1))
            throw NumericError("reconstruct_mesh: panel (" + std::to_string(i) +
                               ", " + std::to_string(j) + ") does not close");
        return L;
    };

    const int prows = rows - 1, pcols = cols - 1;

    // Rigid pose per panel, world = R * local + t. Poses chain through exact
    // local geometry only: deriving hinge axes from already-placed points
    // would amplify roundoff by the panel aspect ratio at every crossing.
    struct Pose {
        Mat3 R;
        Vec3 t;
    };
    std::vector<Pose> pose(static_cast<size_t>(prows) * pcols);
    auto pose_at = [&](int i, int j) -> Pose& {
        return pose[static_cast<size_t>(i) * pcols + j];
    };

    // rotation taking the local in-plane direction e1 (with local normal -z)
    // to the world direction f1 with world normal n
    auto frame = [](const Vec3& e1, const Vec3& f1, const Vec3& n) {
        Vec3 e3(0, 0, -1);
        Vec3 e2 = e3.cross(e1);
        Vec3 f3 = (n - n.dot(f1) * f1).normalized();
        Vec3 f2 = f3.cross(f1);
        Mat3 R;
        R = f1 * e1.transpose() + f2 * e2.transpose() + f3 * e3.transpose();
        return R;
    };

    auto commit = [&](int i, int j, const Local& L, const Pose& P) {
        pose_at(i, j) = P;
        set_point(i, j, P.R * L.A + P.t);
        set_point(i + 1, j, P.R * L.B + P.t);
        set_point(i + 1, j + 1, P.R * L.C + P.t);
        set_point(i, j + 1, P.R * L.D + P.t);
    };

    for (int i = 0; i < prows; ++i) {
        for (int j = 0; j < pcols; ++j) {
            Local L = local_shape(i, j);
            Pose P;
            if (i == 0 && j == 0) {
                P.R = Mat3::Identity();
                P.t = Vec3::Zero();
            } else if (j > 0) {
                // enter across the vertical crease from the left neighbour;
                // the hinge is its D -> C edge, our A -> B edge
                const Pose& Q = pose_at(i, j - 1);
                Local Lq = local_shape(i, j - 1);
                Vec3 axis = Q.R * (Lq.C - Lq.D).normalized();
                Vec3 n = rot_axis(axis, folds.vfold_at(i, j)) *
                         (Q.R * Vec3(0, 0, -1));
                P.R = frame((L.B - L.A).normalized(), axis, n);
                P.t = Q.R * Lq.D + Q.t;
            } else {
                // enter across the horizontal crease from the panel above;
                // the hinge is its B -> C edge, our A -> D edge
                const Pose& Q = pose_at(i - 1, j);
                Local Lq = local_shape(i - 1, j);
                Vec3 axis = Q.R * (Lq.C - Lq.B).normalized();
                Vec3 n = rot_axis(axis, -folds.hfold_at(i, j)) *
                         (Q.R * Vec3(0, 0, -1));
                P.R = frame((L.D - L.A).normalized(), axis, n);
                P.t = Q.R * Lq.B + Q.t;
            }
            commit(i, j, L, P);
        }
    }
    return mesh;
}

FoldState reconstruct(const AngleField& angles, const LengthField& lengths,
                      const DriveSpec& drive, const FoldState* hint) {
    FoldState fs = solve_fold_field(angles, drive, hint);
    fs.mesh = reconstruct_mesh(angles, lengths, fs);
    return fs;
}

std::vector<SweepFrame> sweep(const AngleField& angles,
                              const LengthField& lengths, DriveSpec drive,
                              double rho_start, double rho_end, int frames) {
    if (frames < 1) throw UsageError("sweep: need at least one frame");
    std::vector<SweepFrame> out;
    out.reserve(static_cast<size_t>(frames));
    const FoldState* hint = nullptr;
    for (int k = 0; k < frames; ++k) {
        double t = frames == 1 ? 0.0 : static_cast<double>(k) / (frames - 1);
        drive.rho = rho_start + t * (rho_end - rho_start);
        SweepFrame fr;
        fr.rho = drive.rho;
        fr.state = reconstruct(angles, lengths, drive, hint);
        fr.planarity = max_planarity_residual(fr.state.mesh);
        fr.length_err = max_relative_length_error(fr.state.mesh, lengths);
        out.push_back(std::move(fr));
        hint = &out.back().state;
    }
    return out;
}

std::vector<std::pair<int, int>> mv_census(const FoldState& state) {
    std::vector<std::pair<int, int>> out;
    for (int i = 1; i + 1 < state.rows; ++i)
        for (int j = 1; j + 1 < state.cols; ++j)
            out.push_back(mv_assignment(folds_at(state, i, j)));
    return out;
}

double max_relative_length_error(const QuadMesh& mesh,
                                 const LengthField& expected) {
    LengthField got = edge_lengths(mesh);
    double worst = 0.0;
    for (int i = 0; i < mesh.rows(); ++i)
        for (int j = 0; j + 1 < mesh.cols(); ++j)
            worst = std::max(worst, std::abs(got.hat(i, j) - expected.hat(i, j)) /
                                        expected.hat(i, j));
    for (int i = 0; i + 1 < mesh.rows(); ++i)
        for (int j = 0; j < mesh.cols(); ++j)
            worst = std::max(worst, std::abs(got.vat(i, j) - expected.vat(i, j)) /
                                        expected.vat(i, j));
    return worst;
}

}  // namespace ori

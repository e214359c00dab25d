#include "ori/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "ori/core.hpp"

namespace ori {

namespace {

// Small damped least-squares driver with forward-difference Jacobian;
// enough for the 6-parameter helix refinement.
Eigen::VectorXd levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
    Eigen::VectorXd x, int iters) {
    double lambda = 1e-3;
    Eigen::VectorXd r = fn(x);
    double cost = r.squaredNorm();
    const int n = static_cast<int>(x.size());
    for (int it = 0; it < iters; ++it) {
        Eigen::MatrixXd J(r.size(), n);
        for (int k = 0; k < n; ++k) {
            double h = 1e-7 * (1.0 + std::abs(x[k]));
            Eigen::VectorXd xp = x;
            xp[k] += h;
            J.col(k) = (fn(xp) - r) / h;
        }
        Eigen::MatrixXd JtJ = J.transpose() * J;
        Eigen::VectorXd g = J.transpose() * r;
        bool improved = false;
        for (int tries = 0; tries < 12; ++tries) {
            Eigen::MatrixXd M = JtJ;
            M.diagonal().array() += lambda * (JtJ.diagonal().array() + 1e-12);
            Eigen::VectorXd dx = M.ldlt().solve(-g);
            Eigen::VectorXd xn = x + dx;
            Eigen::VectorXd rn = fn(xn);
            if (rn.squaredNorm() < cost) {
                x = xn;
                r = rn;
                cost = rn.squaredNorm();
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved || cost < 1e-28) break;
    }
    return x;
}

}  // namespace

LineFit best_fit_line(const std::vector<Vec3>& points) {
    const size_t n = points.size();
    if (n < 2) throw UsageError("best_fit_line: need at least two points");
    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : points) mean += p;
    mean /= static_cast<double>(n);
    Mat3 C = Mat3::Zero();
    for (const Vec3& p : points) {
        Vec3 d = p - mean;
        C += d * d.transpose();
    }
    C /= static_cast<double>(n - 1);
    double tr = C.trace();
    if (tr <= 0.0 || !std::isfinite(tr))
        throw NumericError("best_fit_line: degenerate point cloud");

    Eigen::SelfAdjointEigenSolver<Mat3> es(C);
    Vec3 evals = es.eigenvalues();  // ascending
    Mat3 evecs = es.eigenvectors();

    // multiplicity of the top eigenvalue decides tie handling
    double top = evals[2];
    double tol = 1e-12 * tr;
    int k = 1;
    if (top - evals[1] <= tol) k = (top - evals[0] <= tol) ? 3 : 2;

    Vec3 dir;
    if (k == 1) {
        dir = evecs.col(2);
    } else {
        // within the top eigenspace prefer the direction closest to x, then y
        auto project = [&](const Vec3& e) {
            Vec3 p = Vec3::Zero();
            for (int c = 3 - k; c < 3; ++c) p += e.dot(evecs.col(c)) * evecs.col(c);
            return p;
        };
        Vec3 p = project(Vec3::UnitX());
        if (p.norm() < 1e-9) p = project(Vec3::UnitY());
        dir = p.normalized();
    }
    // deterministic sign: biggest component positive
    int big = 0;
    for (int c = 1; c < 3; ++c)
        if (std::abs(dir[c]) > std::abs(dir[big])) big = c;
    if (dir[big] < 0) dir = -dir;

    LineFit out;
    out.centroid = mean;
    out.direction = dir;
    out.r2 = top / tr;
    return out;
}

RulingR2 ruling_r2(const QuadMesh& mesh, RulingDirection direction, int stride) {
    if (stride < 1) throw UsageError("ruling_r2: stride must be >= 1");
    const int rows = mesh.rows(), cols = mesh.cols();
    RulingR2 out;
    out.min_r2 = std::numeric_limits<double>::infinity();
    const int nlines = direction == RulingDirection::row ? rows : cols;
    const int len = direction == RulingDirection::row ? cols : rows;
    for (int line = 0; line < nlines; ++line) {
        for (int off = 0; off < stride; ++off) {
            std::vector<Vec3> pts;
            for (int t = off; t < len; t += stride)
                pts.push_back(direction == RulingDirection::row ? mesh.at(line, t)
                                                                : mesh.at(t, line));
            if (pts.size() < 2) throw UsageError("ruling_r2: too few points per ruling");
            double r2 = best_fit_line(pts).r2;
            out.per_ruling.push_back(r2);
            out.min_r2 = std::min(out.min_r2, r2);
        }
    }
    return out;
}

RuledFit fit_helix(const std::vector<Vec3>& gamma, double mismatch_tol) {
    const int n = static_cast<int>(gamma.size());
    if (n < 4) throw UsageError("fit_helix: need at least four directrix points");
    const int m = n - 1;
    std::vector<Vec3> d(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) d[static_cast<size_t>(i)] = gamma[static_cast<size_t>(i) + 1] - gamma[static_cast<size_t>(i)];
    double l0 = d[0].norm();
    if (l0 < 1e-300) throw NumericError("fit_helix: zero first step");

    RuledFit out;
    out.f.resize(static_cast<size_t>(m));
    std::vector<Vec3> u(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        double li = d[static_cast<size_t>(i)].norm();
        if (li < 1e-300) throw NumericError("fit_helix: zero directrix step");
        out.f[static_cast<size_t>(i)] = li / l0;
        u[static_cast<size_t>(i)] = d[static_cast<size_t>(i)] / out.f[static_cast<size_t>(i)];
    }

    // axis seed: mean of successive cross products
    Vec3 ax = Vec3::Zero();
    for (int i = 0; i + 1 < m; ++i) ax += u[static_cast<size_t>(i)].cross(u[static_cast<size_t>(i) + 1]);
    if (ax.norm() < 1e-12 * l0 * l0) {
        // straight progression: zero curvature, pure translation
        out.a = 0.0;
        out.theta = 0.0;
        out.axis = u[0].normalized();
        out.b = l0;
        out.phase = 0.0;
        double rss = 0.0;
        for (int i = 0; i < m; ++i) rss += (u[static_cast<size_t>(i)] - u[0]).squaredNorm();
        out.residual = std::sqrt(rss / (3.0 * m)) / l0;
        Vec3 c = Vec3::Zero();
        for (const Vec3& p : gamma) c += p;
        out.center = c / n;
        if (out.residual > mismatch_tol)
            throw NumericError("fit_helix: directrix steps are not helical");
        return out;
    }
    ax.normalize();

    double b0 = 0.0;
    for (int i = 0; i < m; ++i) b0 += u[static_cast<size_t>(i)].dot(ax);
    b0 /= m;
    std::vector<Vec3> p(static_cast<size_t>(m));
    double rbar = 0.0;
    for (int i = 0; i < m; ++i) {
        p[static_cast<size_t>(i)] = u[static_cast<size_t>(i)] - u[static_cast<size_t>(i)].dot(ax) * ax;
        rbar += p[static_cast<size_t>(i)].norm();
    }
    rbar /= m;
    double th0 = 0.0;
    for (int i = 0; i + 1 < m; ++i)
        th0 += std::atan2(p[static_cast<size_t>(i)].cross(p[static_cast<size_t>(i) + 1]).dot(ax),
                          p[static_cast<size_t>(i)].dot(p[static_cast<size_t>(i) + 1]));
    th0 /= (m - 1);
    double a0 = std::abs(th0) > 1e-12 ? rbar / (2.0 * std::abs(std::sin(th0 / 2.0))) : rbar;

    // frame: e2 along the first in-plane step so the initial phase is -theta/2
    Vec3 e2 = p[0].normalized();
    Vec3 e1 = e2.cross(ax);

    // params: a, theta, b, phase, two axis tilts
    auto model = [&](const Eigen::VectorXd& q, int i) {
        Mat3 R = rot_axis(e1, q[4]) * rot_axis(e2, q[5]);
        Vec3 E1 = R * e1, E2 = R * e2, A = R * ax;
        double s = q[0] * 2.0 * std::sin(q[1] / 2.0);
        double sig = i * q[1] + q[1] / 2.0 + q[3];
        return Vec3(-s * std::sin(sig) * E1 + s * std::cos(sig) * E2 + q[2] * A);
    };
    auto resid = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd r(3 * m);
        for (int i = 0; i < m; ++i)
            r.segment<3>(3 * i) = u[static_cast<size_t>(i)] - model(q, i);
        return r;
    };
    Eigen::VectorXd q0(6);
    q0 << a0, th0, b0, -th0 / 2.0, 0.0, 0.0;
    Eigen::VectorXd q = levenberg_marquardt(resid, q0, 80);

    out.a = q[0];
    out.theta = q[1];
    out.b = q[2];
    out.phase = q[3];
    Mat3 R = rot_axis(e1, q[4]) * rot_axis(e2, q[5]);
    out.axis = R * ax;
    if (out.a < 0) {  // (-a, phase) and (a, phase + pi) are the same model
        out.a = -out.a;
        out.phase += kPi;
    }
    if (out.theta < 0) {  // joint flip that leaves every model step unchanged
        out.theta = -out.theta;
        out.b = -out.b;
        out.axis = -out.axis;
        out.phase = -out.phase;
    }
    Vec3 c = Vec3::Zero();
    for (const Vec3& g : gamma) c += g;
    out.center = c / n;
    out.residual = std::sqrt(resid(q).squaredNorm() / (3.0 * m)) / l0;
    if (out.residual > mismatch_tol)
        throw NumericError("fit_helix: directrix steps are not helical");
    return out;
}

std::pair<double, double> constant_angle_residual(
    const std::vector<Vec3>& gamma_steps, const std::vector<Vec3>& rulings) {
    if (gamma_steps.size() != rulings.size() || gamma_steps.empty())
        throw UsageError("constant_angle_residual: size mismatch");
    std::vector<double> cosines;
    for (size_t i = 0; i < gamma_steps.size(); ++i) {
        double den = gamma_steps[i].norm() * rulings[i].norm();
        if (den < 1e-300) throw NumericError("constant_angle_residual: zero vector");
        cosines.push_back(gamma_steps[i].dot(rulings[i]) / den);
    }
    double mean = 0.0;
    for (double c : cosines) mean += c;
    mean /= static_cast<double>(cosines.size());
    double dev = 0.0;
    for (double c : cosines) dev = std::max(dev, std::abs(c - mean));
    return {mean, dev};
}

namespace {

Vec3 simpson(const std::function<Vec3(double)>& g, double a, double b) {
    // composite Simpson with step halving until the 1e-10 tail stabilizes
    auto pass = [&](int n) {
        double h = (b - a) / n;
        Vec3 s = g(a) + g(b);
        for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * g(a + k * h);
        return Vec3(s * h / 3.0);
    };
    Vec3 prev = pass(2);
    for (int n = 4; n <= 1 << 20; n *= 2) {
        Vec3 cur = pass(n);
        if ((cur - prev).norm() <= 1e-10 * (1.0 + cur.norm())) return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace

QuadMesh limiting_surface(double a, double b, double angle_const,
                          const std::function<double(double)>& f,
                          const std::vector<double>& u1_samples,
                          const std::vector<double>& u2_samples) {
    if (!(a > 0)) throw UsageError("limiting_surface: radius a must be positive");
    if (angle_const < 0.0 || angle_const >= 1.0)
        throw UsageError("limiting_surface: angle constant must lie in [0, 1)");
    if (u1_samples.empty() || u2_samples.size() < 2)
        throw UsageError("limiting_surface: need a parameter grid");
    auto g = [&](double v) {
        return Vec3(f(v) * Vec3(-a * std::sin(v), a * std::cos(v), b));
    };
    const int rows = static_cast<int>(u1_samples.size());
    const int cols = static_cast<int>(u2_samples.size());
    QuadMesh mesh(rows, cols);
    Vec3 gamma = simpson(g, 0.0, u2_samples[0]);
    for (int j = 0; j < cols; ++j) {
        if (j > 0) gamma += simpson(g, u2_samples[static_cast<size_t>(j) - 1], u2_samples[static_cast<size_t>(j)]);
        double v = u2_samples[static_cast<size_t>(j)];
        Vec3 T = g(v);
        double speed = T.norm();  // = f(v) sqrt(a^2 + b^2)
        if (speed < 1e-300) throw NumericError("limiting_surface: vanishing directrix speed");
        Vec3 That = T / speed;
        Vec3 ref = Vec3::UnitZ() - Vec3::UnitZ().dot(That) * That;
        if (ref.norm() < 1e-12) ref = Vec3::UnitX() - Vec3::UnitX().dot(That) * That;
        Vec3 phi = angle_const * That +
                   std::sqrt(1.0 - sq(angle_const)) * ref.normalized();
        for (int i = 0; i < rows; ++i)
            mesh.at(i, j) = gamma + u1_samples[static_cast<size_t>(i)] * phi;
    }
    return mesh;
}

double angular_defect(const QuadMesh& mesh, GridIndex v) {
    const int i = v.i1, j = v.i2;
    if (i < 1 || i >= mesh.rows() - 1 || j < 1 || j >= mesh.cols() - 1)
        throw UsageError("angular_defect: boundary vertex");
    const Vec3& c = mesh.at(i, j);
    Vec3 e[4] = {mesh.at(i - 1, j) - c, mesh.at(i, j - 1) - c,
                 mesh.at(i + 1, j) - c, mesh.at(i, j + 1) - c};
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
        const Vec3& x = e[k];
        const Vec3& y = e[(k + 1) % 4];
        sum += std::atan2(x.cross(y).norm(), x.dot(y));
    }
    return 2.0 * kPi - sum;
}

double fan_area(const Vec3& center, const std::vector<Vec3>& ring) {
    double A = 0.0;
    for (size_t k = 0; k < ring.size(); ++k)
        A += 0.5 * (ring[k] - center).cross(ring[(k + 1) % ring.size()] - center).norm();
    return A;
}

Vec3 fan_mean_curvature(const Vec3& center, const std::vector<Vec3>& ring) {
    const size_t n = ring.size();
    if (n < 3) throw UsageError("fan_mean_curvature: ring too small");
    // cotan weights: edge (center, ring[k]) gets the cotangents of the two
    // angles opposite it, one in each incident triangle
    auto cot_at = [&](const Vec3& at, const Vec3& u, const Vec3& w) {
        Vec3 du = u - at, dw = w - at;
        double cr = du.cross(dw).norm();
        double scale = du.norm() * dw.norm();
        if (cr < 1e-14 * scale || scale == 0.0)
            throw NumericError("degenerate fan triangle");
        return du.dot(dw) / cr;
    };
    Vec3 grad = Vec3::Zero();
    for (size_t k = 0; k < n; ++k) {
        const Vec3& prev = ring[(k + n - 1) % n];
        const Vec3& next = ring[(k + 1) % n];
        double w = cot_at(prev, center, ring[k]) + cot_at(next, center, ring[k]);
        grad += 0.5 * w * (center - ring[k]);
    }
    double A = fan_area(center, ring);
    if (A <= 0.0) throw NumericError("degenerate fan");
    return grad / A;
}

Vec3 fan_normal(const Vec3& center, const std::vector<Vec3>& ring) {
    Vec3 grad = fan_mean_curvature(center, ring) * fan_area(center, ring);
    if (grad.norm() > 1e-12) return grad.normalized();
    Vec3 avg = Vec3::Zero();
    for (size_t k = 0; k < ring.size(); ++k)
        avg += (ring[k] - center).cross(ring[(k + 1) % ring.size()] - center).normalized();
    if (avg.norm() < 1e-300) throw NumericError("degenerate fan");
    return avg.normalized();
}

Vec3 mean_curvature_vector(const QuadMesh& mesh, GridIndex v) {
    const int i = v.i1, j = v.i2;
    if (i < 1 || i >= mesh.rows() - 1 || j < 1 || j >= mesh.cols() - 1)
        throw UsageError("mean_curvature_vector: boundary vertex");
    std::vector<Vec3> ring = {mesh.at(i - 1, j), mesh.at(i, j - 1),
                              mesh.at(i + 1, j), mesh.at(i, j + 1)};
    return fan_mean_curvature(mesh.at(i, j), ring);
}

}  // namespace ori

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ori {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

// Error taxonomy: numeric(2) vs usage(1) vs io(3) maps onto CLI exit codes.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct KinematicInfeasible : NumericError {
    using NumericError::NumericError;
};
struct BifurcationError : NumericError {
    using NumericError::NumericError;
};
struct SingularPanel : NumericError {
    using NumericError::NumericError;
};
struct InfeasibleLength : NumericError {
    using NumericError::NumericError;
};
struct FlexRangeError : NumericError {
    using NumericError::NumericError;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Rotation about +x by angle t.
inline Mat3 rot_x(double t) {
    Mat3 m;
    double c = std::cos(t), s = std::sin(t);
    m << 1, 0, 0, 0, c, -s, 0, s, c;
    return m;
}

// Rotation about +z by angle t.
inline Mat3 rot_z(double t) {
    Mat3 m;
    double c = std::cos(t), s = std::sin(t);
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return m;
}

// Rodrigues rotation about unit axis u by angle t.
inline Mat3 rot_axis(const Vec3& u, double t) {
    return Eigen::AngleAxisd(t, u).toRotationMatrix();
}

inline double sq(double x) { return x * x; }

// Deterministic RNG wrapper; all stochastic code paths seed through here.
class Rng {
   public:
    explicit Rng(uint64_t seed) : gen_(seed) {}
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    int integer(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }

   private:
    std::mt19937_64 gen_;
};

}  // namespace ori

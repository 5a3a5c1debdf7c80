#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace symp {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Two error families, matching the CLI exit codes: bad input (1) and
// numerics that could not be trusted (2).
struct ValidationError : std::runtime_error {
    std::string kind;
    ValidationError(std::string k, const std::string& what)
        : std::runtime_error(k + ": " + what), kind(std::move(k)) {}
};

struct ConditioningError : std::runtime_error {
    std::string kind;
    ConditioningError(std::string k, const std::string& what)
        : std::runtime_error(k + ": " + what), kind(std::move(k)) {}
};

struct NumericPolicy {
    double tol_sym = 1e-10;
    double tol_rank = 1e-8;
    double tol_det = 1e-10;
    double tol_cluster = 1e-6;
    std::uint64_t seed = 20240611;

    void validate() const {
        for (double v : {tol_sym, tol_rank, tol_det, tol_cluster})
            if (!(v > 0.0 && v <= 1e-2))
                throw ValidationError("policy", "tolerances must lie in (0, 1e-2]");
    }
};

inline const NumericPolicy& default_policy() {
    static const NumericPolicy p{};
    return p;
}

// Principal argument mapped into [0, 2pi).
inline double arg_0_2pi(cplx z) {
    double a = std::arg(z);
    if (a < 0) a += kTwoPi;
    if (a >= kTwoPi) a -= kTwoPi;
    return a;
}

inline cplx unit(double theta) { return std::polar(1.0, theta); }

}  // namespace symp

#pragma once

#include "symp/linham.hpp"

#include <random>

namespace support {

using namespace symp;

// Random periodic coefficient B(t) = C0 + A cos(2 pi t) + S sin(2 pi t) on [0, 1].
// The identity shift spreads the suite over elliptic and hyperbolic regimes
// while keeping the fundamental solution well conditioned.
inline CoefficientMatrix random_coefficient(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> shift(-2.0, 8.0);
    Mat C0 = random_symmetric(rng, 2 * n, 1.0) + shift(rng) * Mat::Identity(2 * n, 2 * n);
    return fourier_coefficient(C0, {random_symmetric(rng, 2 * n, 1.0)}, {random_symmetric(rng, 2 * n, 1.0)}, 1.0);
}

inline SymplecticPath random_path(std::mt19937_64& rng, int n, double tol = 1e-7) {
    return fundamental_solution(random_coefficient(rng, n), 64, tol);
}

// Scalar Sturm problem on [0, 2 pi] with P = 1 + a cos t, R = -(c + b sin 2t).
inline SturmData scalar_sturm(double c, double a = 0.0, double b = 0.0) {
    SturmData s;
    s.n = 1;
    s.tau = kTwoPi;
    s.P = [a](double t) { return Mat::Constant(1, 1, 1.0 + a * std::cos(t)); };
    s.Q = [](double) { return Mat::Zero(1, 1); };
    s.R = [b, c](double t) { return Mat::Constant(1, 1, -(c + b * std::sin(2 * t))); };
    return s;
}

// Periodic spectrum of -y'' - c y on [0, 2 pi]: k^2 - c, k = 0 once, k >= 1 twice.
inline std::pair<int, int> harmonic_morse_exact(double c) {
    int neg = 0, zero = 0;
    for (int k = 0; k * k <= c + 1; ++k) {
        int mult = k == 0 ? 1 : 2;
        double e = k * k - c;
        if (std::abs(e) < 1e-12) zero += mult;
        else if (e < 0) neg += mult;
    }
    return {neg, zero};
}

// Phase-space shell estimate of dN/dE for H = |p|^2/2 + sum w_i^2 q_i^2 / 2,
// h = 2 pi hbar. Returns (value, standard error).
inline std::pair<double, double> phase_space_density(const Vec& w, double E, double hbar, double delta,
                                                     long samples, std::uint64_t seed) {
    int n = int(w.size());
    std::mt19937_64 rng(seed);
    double emax = E + delta;
    std::vector<double> half(2 * n);
    for (int i = 0; i < n; ++i) {
        half[i] = std::sqrt(2 * emax) / w(i);
        half[n + i] = std::sqrt(2 * emax);
    }
    double vol = 1;
    for (double h : half) vol *= 2 * h;
    std::uniform_real_distribution<double> u(-1, 1);
    long hits = 0;
    for (long s = 0; s < samples; ++s) {
        double H = 0;
        for (int i = 0; i < n; ++i) {
            double q = half[i] * u(rng), p = half[n + i] * u(rng);
            H += 0.5 * (p * p + w(i) * w(i) * q * q);
        }
        if (H > E - delta && H <= E + delta) ++hits;
    }
    double f = double(hits) / samples;
    double c = vol / (2 * delta) / std::pow(kTwoPi * hbar, n);
    return {c * f, c * std::sqrt(f * (1 - f) / samples)};
}

}  // namespace support

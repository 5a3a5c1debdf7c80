// Acceptance runner: one PASS/FAIL line per criterion.
#include "support.hpp"
#include "symp/gutzwiller.hpp"
#include "symp/io.hpp"
#include "symp/iteration.hpp"
#include "symp/lagrangian.hpp"
#include "symp/selberg.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

using namespace symp;
using support::random_path;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

std::vector<int> failed;

void run(int id, const char* name, double budget, const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = secs < budget;
    bool ok = o.ok && in_time;
    if (!ok) failed.push_back(id);
    std::printf("%s %2d %-28s %7.2fs (budget %gs%s)  %s\n", ok ? "PASS" : "FAIL", id, name, secs, budget,
                in_time ? "" : ", OVER", o.detail.c_str());
    std::fflush(stdout);
}

template <class... T>
std::string cat(const T&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    return os.str();
}

// Expected (S+, S-) for the basic normal forms.
struct TableRow {
    const char* label;
    Mat M;
    cplx omega;
    int s_plus, s_minus;
};

}  // namespace

// --expect-fail 10,... : exit 0 only if exactly those criteria fail.
int main(int argc, char** argv) {
    std::vector<int> expected;
    for (int a = 1; a + 1 < argc; ++a)
        if (std::string(argv[a]) == "--expect-fail")
            for (const auto& tok : io::split(argv[a + 1], ',')) expected.push_back(std::stoi(tok));
    std::sort(expected.begin(), expected.end());
    run(1, "normality", 1, [] {
        Outcome o;
        for (int n = 1; n <= 3; ++n) {
            int v = i1(diagonal_path(1.0, 1.0, n));
            if (v != 0) o.ok = false;
            o.detail += cat("n=", n, ":", v, " ");
        }
        return o;
    });

    run(2, "endpoint-free normalization", 1, [] {
        Outcome o;
        for (double b : {-1.0, 0.0, 1.0}) {
            auto f = [b](double t) { return Mat(N1(1, b) * rotation(t / 2, 1)); };
            int v = curve_index(1, f, 0, 1);
            int left = curve_index(1, f, -1, 0), whole = curve_index(1, f, -1, 1);
            if (v != 2 - int(std::abs(b)) || whole != left + v) o.ok = false;
            o.detail += cat("b=", b, ":", v, " ");
        }
        return o;
    });

    run(3, "symplectic additivity", 30, [] {
        std::mt19937_64 rng(301);
        int bad = 0, total = 0;
        for (int k = 0; k < 100; ++k) {
            auto a = random_path(rng, 1);
            auto b = random_path(rng, k % 2 ? 2 : 1);
            int lhs = i1(diamond_path(a, b)), rhs = i1(a) + i1(b);
            ++total;
            if (lhs != rhs) ++bad;
        }
        return Outcome{bad == 0, cat(total - bad, "/", total, " pairs")};
    });

    run(4, "Bott identity", 120, [] {
        std::mt19937_64 rng(401);
        int bad = 0, total = 0;
        const cplx zs[] = {cplx(1, 0), cplx(-1, 0), unit(kTwoPi / 3)};
        for (int k = 0; k < 50; ++k) {
            auto p = random_path(rng, k % 2 ? 2 : 1);
            for (int m = 1; m <= 6; ++m)
                for (cplx z : zs) {
                    auto r = bott_check(p, m, z);
                    ++total;
                    if (r.lhs_index != r.rhs_index || r.lhs_nullity != r.rhs_nullity) ++bad;
                }
        }
        return Outcome{bad == 0, cat(total - bad, "/", total, " (path, m, z) cases")};
    });

    run(5, "splitting-number table", 10, [] {
        std::vector<TableRow> rows = {
            {"N1(1,1)", N1(1, 1), 1, 1, 1},
            {"N1(1,0)", N1(1, 0), 1, 1, 1},
            {"N1(1,-1)", N1(1, -1), 1, 0, 0},
            {"N1(-1,-1)", N1(-1, -1), -1, 1, 1},
            {"N1(-1,0)", N1(-1, 0), -1, 1, 1},
            {"N1(-1,1)", N1(-1, 1), -1, 0, 0},
            {"R(1)", R(1.0), unit(1.0), 0, 1},
            {"R(4)", R(4.0), unit(4.0), 0, 1},
            {"N2(1) nontrivial", N2_from(1.0, -1.0, 0.0), unit(1.0), 1, 1},
            {"N2(4) nontrivial", N2_from(4.0, 1.0, 0.0), unit(4.0), 1, 1},
            {"N2(1) trivial", N2_from(1.0, 1.0, 0.0), unit(1.0), 0, 0},
            {"N2(4) trivial", N2_from(4.0, -1.0, 0.0), unit(4.0), 0, 0},
            {"D(2) at 1", D(2.0), 1, 0, 0},
            {"D(2) at i", D(2.0), cplx(0, 1), 0, 0},
            {"D(-2) at -1", D(-2.0), -1, 0, 0},
        };
        Outcome o;
        int good = 0;
        for (const auto& r : rows) {
            auto s = splitting_numbers(r.M, r.omega);
            auto u = ultimate_type(r.M, r.omega);
            bool ok = s.s_plus == r.s_plus && s.s_minus == r.s_minus && u.p == r.s_plus && u.q == r.s_minus;
            if (ok) ++good;
            else o.detail += cat(r.label, "=(", s.s_plus, ",", s.s_minus, ") ");
        }
        o.ok = good == int(rows.size());
        o.detail = cat(good, "/", rows.size(), " rows ", o.detail);
        return o;
    });

    run(6, "precise iteration formula", 120, [] {
        std::mt19937_64 rng(601);
        int bad = 0, total = 0;
        auto check = [&](const SymplecticPath& p) {
            int base = i1(p);
            for (int m = 1; m <= 12; ++m) {
                ++total;
                if (precise_iteration_index(base, p.end(), m, default_policy(), &p) != i1(iterate_path(p, m))) ++bad;
            }
        };
        for (int k = 0; k < 24; ++k) check(random_path(rng, k % 2 ? 2 : 1));
        for (double rate : {0.7, 1.0, kPi, 4.0, kTwoPi, 5.5}) check(rotation_path(rate, 1.0));
        return Outcome{bad == 0, cat(total - bad, "/", total, " (path, m) cases")};
    });

    run(7, "Krein types", 30, [] {
        Outcome o;
        for (double th : {0.5, 2.0, 4.0, 5.5}) {
            for (const auto& e : krein_types(R(th))) {
                bool upper = std::abs(e.value - unit(th)) < 1e-8;
                if (upper ? (e.p != 0 || e.q != 1) : (e.p != 1 || e.q != 0)) o.ok = false;
            }
        }
        std::mt19937_64 rng(701);
        std::uniform_real_distribution<double> ang(0.1, kPi - 0.1);
        std::uniform_int_distribution<int> pick(0, 4);
        int checked = 0, eigen = 0;
        for (int k = 0; k < 200; ++k) {
            // diamond of normal-form blocks, conjugated by a random symplectic matrix
            Mat M;
            int blocks = 1 + k % 3;
            for (int b = 0; b < blocks; ++b) {
                Mat B;
                switch (pick(rng)) {
                    case 0: B = R(ang(rng) * (k % 2 ? 1 : -1)); break;
                    case 1: B = N1(k % 2 ? 1 : -1, double(k % 3) - 1); break;
                    case 2: B = D(2.0 + ang(rng)); break;
                    case 3: B = N2_from(ang(rng), k % 2 ? 1.0 : -1.0, 0.3); break;
                    default: B = random_symplectic(rng, 1, 0.5); break;
                }
                M = b == 0 ? B : diamond(M, B);
            }
            Mat P = random_symplectic(rng, half_dim(M), 0.5);
            Mat C = P * M * sp_inverse(P);
            auto types = krein_types(C);
            auto base = krein_types(M);
            for (const auto& e : types) {
                ++eigen;
                if (e.p + e.q != e.algebraic_multiplicity) o.ok = false;
                if (std::abs(e.value.imag()) < 1e-8 && e.p != e.q) o.ok = false;
                bool partner = false;
                for (const auto& f : types)
                    if (std::abs(f.value - std::conj(e.value)) < 1e-6 && f.p == e.q && f.q == e.p) partner = true;
                bool same = false;
                for (const auto& f : base)
                    if (std::abs(f.value - e.value) < 1e-6 && f.p == e.p && f.q == e.q) same = true;
                if (!partner || !same) o.ok = false;
            }
            ++checked;
        }
        o.detail = cat(checked, " matrices, ", eigen, " unit eigenvalues");
        return o;
    });

    run(8, "Morse-Maslov", 60, [] {
        Outcome o;
        int cases = 0, bad = 0;
        auto sturm_case = [&](const SturmData& s, int exact_neg, int exact_zero) {
            auto mr = morse_index_fourier(s);
            auto p = fundamental_solution(sturm_to_hamiltonian(s), 64, 1e-8);
            auto r = omega_index(p, 1.0);
            ++cases;
            bool ok = mr.m_minus == r.index && mr.m_zero == r.nullity;
            if (exact_neg >= 0) ok = ok && mr.m_minus == exact_neg && mr.m_zero == exact_zero;
            if (!ok) {
                ++bad;
                o.detail += cat("[m-=", mr.m_minus, " m0=", mr.m_zero, " i1=", r.index, " nu=", r.nullity, "] ");
            }
        };
        for (double c = -0.5; c <= 10.01; c += 0.25) {
            auto [neg, zero] = support::harmonic_morse_exact(c);
            sturm_case(support::scalar_sturm(c), neg, zero);
        }
        for (double c : {0.3, 1.7, 3.2, 6.1})
            for (double a : {0.2, 0.5})
                for (double b : {0.0, 0.4}) sturm_case(support::scalar_sturm(c, a, b), -1, 0);
        std::mt19937_64 rng(801);
        int phase = 0;
        for (int k = 0; k < 6; ++k) {
            auto c = support::random_coefficient(rng, 1 + k % 2);
            auto mr = morse_index_phase_space(c);
            int idx = i1(fundamental_solution(c, 64, 1e-8));
            ++phase;
            if (mr.m_minus != mr.d + idx) {
                ++bad;
                o.detail += cat("[phase m-=", mr.m_minus, " d=", mr.d, " i1=", idx, "] ");
            }
        }
        o.ok = bad == 0;
        o.detail = cat(cases, " Sturm + ", phase, " phase-space cases, ", bad, " bad ", o.detail);
        return o;
    });

    run(9, "Lagrangian and crossing oracles", 180, [] {
        std::mt19937_64 rng(901);
        int lag_bad = 0, cross_bad = 0;
        for (int k = 0; k < 200; ++k) {
            auto p = random_path(rng, k % 2 ? 2 : 1);
            if (cz_from_lagrangian(p) != i1(p)) ++lag_bad;
        }
        for (int k = 0; k < 500; ++k) {
            auto p = random_path(rng, 1);
            if (sp2_crossing_oracle(p, 1.0) != i1(p)) ++cross_bad;
        }
        return Outcome{lag_bad == 0 && cross_bad == 0,
                       cat("lagrangian ", 200 - lag_bad, "/200, crossing ", 500 - cross_bad, "/500")};
    });

    run(10, "Gutzwiller desk scale", 10, [] {
        const double w2 = std::sqrt(2.0), sigma = 0.15;
        Vec w(2);
        w << 1, w2;
        auto sys = harmonic_system(w);
        auto grid = energy_grid(2, 12, 2001);
        auto semi = gutzwiller_density(anisotropic_ho_catalog(1, w2, 0, 20), grid, 1.0, sigma, &sys);
        auto levels = anisotropic_ho_levels(1, w2, 1.0, 14);
        auto exact = exact_spectrum_density(levels, grid, sigma);
        double num = 0, den = 0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            num += std::pow(semi.values[k] - exact.values[k], 2);
            den += exact.values[k] * exact.values[k];
        }
        double rel = std::sqrt(num / den);
        std::vector<double> peaks;
        for (std::size_t k = 1; k + 1 < grid.size(); ++k)
            if (semi.values[k] > semi.values[k - 1] && semi.values[k] >= semi.values[k + 1]) peaks.push_back(grid[k]);
        int inside = 0, hit = 0;
        for (double e : levels) {
            if (e < 2 || e > 12) continue;
            ++inside;
            for (double p : peaks)
                if (std::abs(p - e) <= sigma / 2) {
                    ++hit;
                    break;
                }
        }
        return Outcome{rel <= 0.05 && hit == inside, cat("relative L2 ", rel, ", levels with a peak ", hit, "/", inside,
                                                         " (", peaks.size(), " maxima)")};
    });

    run(11, "Weyl term", 10, [] {
        Vec w(2);
        w << 1, 1;
        auto sys = harmonic_system(w);
        Outcome o;
        for (double E : {2.0, 5.0}) {
            double q = weyl_term(sys, E).value;
            auto [mc, se] = support::phase_space_density(w, E, 1.0, 0.25, 2000000, 1101);
            bool ok = std::abs(q - E) <= 0.01 * E && std::abs(q - mc) <= 3 * se;
            if (!ok) o.ok = false;
            o.detail += cat("E=", E, ": ", q, " vs MC ", mc, "+-", se, " ");
        }
        return o;
    });

    run(12, "torus and Selberg", 5, [] {
        Outcome o;
        std::mt19937_64 rng(1201);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        double worst = 0;
        for (int b = 0; b < 3; ++b) {
            Mat B(2, 2);
            do B << u(rng), u(rng), u(rng), u(rng);
            while (std::abs(B.determinant()) < 0.3);
            for (double t : {0.05, 0.1, 0.5}) {
                auto r = torus_trace_check(B, t);
                worst = std::max(worst, r.gap / std::abs(r.lhs));
            }
        }
        if (worst > 1e-10) o.ok = false;
        LengthSpectrum L;
        L.area = 8 * kPi;
        L.entries = {{1.2, 2}, {2.0, 3}, {3.1, 1}};
        std::vector<double> ev = {0, 0.1, 0.3, 1.5, 4};
        double dev = 0;
        for (double t : {0.1, 0.5, 2.0}) {
            auto g = selberg_general(gaussian_test(t), ev, L, 40);
            double l = selberg_lhs_heat(ev, t).value, r = selberg_rhs_heat(L, t, 40).value;
            dev = std::max({dev, std::abs(g.lhs - l) / std::abs(l), std::abs(g.rhs - r) / std::abs(r)});
        }
        if (dev > 1e-12) o.ok = false;
        o.detail = cat("torus relative gap ", worst, ", gaussian vs heat ", dev);
        return o;
    });

    run(13, "integrator", 30, [] {
        std::mt19937_64 rng(1301);
        double resid = 0, rel_resid = 0;
        for (int k = 0; k < 40; ++k) {
            auto p = random_path(rng, k % 2 ? 2 : 1);
            for (const Mat& M : p.mats) {
                double r = symplectic_residual(M);
                resid = std::max(resid, r);
                rel_resid = std::max(rel_resid, r / std::pow(M.norm(), 2));
            }
        }
        double lo = 1e9, hi = 0;
        for (int k = 0; k < 6; ++k) {
            auto c = support::random_coefficient(rng, 1 + k % 2);
            Mat ref = detail::midpoint_run(c, 16384).back();
            double prev = -1;
            for (int steps = 64; steps <= 512; steps *= 2) {
                double e = (detail::midpoint_run(c, steps).back() - ref).norm();
                if (prev > 0) {
                    lo = std::min(lo, prev / e);
                    hi = std::max(hi, prev / e);
                }
                prev = e;
            }
        }
        bool ok = resid <= 1e-10 && lo >= 3.5 && hi <= 4.5;
        return Outcome{ok, cat("max residual ", resid, " (relative ", rel_resid, "), doubling ratios [", lo, ", ", hi,
                               "]")};
    });

    std::printf("%zu failing criteria:", failed.size());
    for (int id : failed) std::printf(" %d", id);
    std::printf("\n");
    if (!expected.empty()) {
        bool match = failed == expected;
        std::printf("expected failures:");
        for (int id : expected) std::printf(" %d", id);
        std::printf(" (%s)\n", match ? "match" : "MISMATCH");
        return match ? 0 : 1;
    }
    return failed.empty() ? 0 : 1;
}

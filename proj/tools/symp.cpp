#include "symp/io.hpp"
#include "symp/iteration.hpp"
#include "symp/lagrangian.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace symp;
using io::json;

namespace {

struct Global {
    std::string format = "json";
    std::string out;
    std::string policy_file;
    double tol_sym = -1, tol_rank = -1, tol_det = -1, tol_cluster = -1;
    long long seed = -1;
};

NumericPolicy make_policy(const Global& g) {
    NumericPolicy p = default_policy();
    if (!g.policy_file.empty()) p = io::policy_from_json(io::parse_json_text(io::read_file(g.policy_file), g.policy_file));
    if (g.tol_sym > 0) p.tol_sym = g.tol_sym;
    if (g.tol_rank > 0) p.tol_rank = g.tol_rank;
    if (g.tol_det > 0) p.tol_det = g.tol_det;
    if (g.tol_cluster > 0) p.tol_cluster = g.tol_cluster;
    if (g.seed >= 0) p.seed = static_cast<std::uint64_t>(g.seed);
    for (double v : {g.tol_sym, g.tol_rank, g.tol_det, g.tol_cluster})
        if (v == 0 || (v < 0 && v != -1)) throw ValidationError("policy", "tolerances must lie in (0, 1e-2]");
    p.validate();
    return p;
}

void emit(const Global& g, const std::string& text) {
    if (g.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(g.out);
    if (!f) throw ValidationError("io", "cannot write " + g.out);
    f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json omega_json(cplx w) { return json::array({w.real(), w.imag()}); }

// table as CSV: header plus rows of already formatted fields
std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string s;
    for (std::size_t k = 0; k < header.size(); ++k) s += (k ? "," : "") + header[k];
    s += "\n";
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) s += (k ? "," : "") + r[k];
        s += "\n";
    }
    return s;
}

std::string fi(long long v) { return std::to_string(v); }

cplx read_omega(const std::string& s) {
    std::string warn;
    cplx w = io::parse_complex(s, true, &warn);
    if (!warn.empty()) std::cerr << "warning: " << warn << "\n";
    return w;
}

SymplecticPath read_path(const std::string& file) {
    return io::path_from_json(io::parse_json_text(io::read_file(file), file));
}

std::string index_record(const Global& g, const IndexResult& r) {
    if (g.format == "csv")
        return csv({"omega_re", "omega_im", "index", "nullity"},
                   {{io::fmt(r.omega.real()), io::fmt(r.omega.imag()), fi(r.index), fi(r.nullity)}});
    return dump({{"omega", omega_json(r.omega)}, {"index", r.index}, {"nullity", r.nullity}});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maslov-type index and trace-formula toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--out", g.out, "write output to this file");
    app.add_option("--policy", g.policy_file, "NumericPolicy JSON");
    app.add_option("--tol-sym", g.tol_sym);
    app.add_option("--tol-rank", g.tol_rank);
    app.add_option("--tol-det", g.tol_det);
    app.add_option("--tol-cluster", g.tol_cluster);
    app.add_option("--seed", g.seed);

    std::string path_file, omega_s = "1,0", matrix_file, sturm_file, coef_file;
    int m = 1, K = 8;

    auto* c_index = app.add_subcommand("index", "i_1 and nu_1 of a path");
    c_index->add_option("--path", path_file)->required();

    auto* c_omega = app.add_subcommand("omega-index", "omega-index of a path");
    c_omega->add_option("--path", path_file)->required();
    c_omega->add_option("--omega", omega_s)->required();

    auto* c_iter = app.add_subcommand("iterate", "iteration formula against direct iterates");
    c_iter->add_option("--path", path_file)->required();
    c_iter->add_option("--m", m)->required()->check(CLI::PositiveNumber);

    auto* c_split = app.add_subcommand("splitting", "splitting numbers of a matrix");
    c_split->add_option("--matrix", matrix_file)->required();
    c_split->add_option("--omega", omega_s)->required();

    auto* c_nf = app.add_subcommand("normal-form", "basic normal form recognition");
    c_nf->add_option("--matrix", matrix_file)->required();

    auto* c_krein = app.add_subcommand("krein", "Krein types of unit-circle eigenvalues");
    c_krein->add_option("--matrix", matrix_file)->required();

    auto* c_morse = app.add_subcommand("morse", "Morse index against the Maslov-type index");
    c_morse->add_option("--sturm", sturm_file, "constant Sturm data JSON");
    c_morse->add_option("--coefficient", coef_file, "coefficient JSON (phase-space variant)");
    c_morse->add_option("--K", K, "initial Fourier truncation")->check(CLI::PositiveNumber);

    std::string system = "aniso-ho", catalog_file, descriptor_file, emit_catalog;
    double w1 = 1, w2 = std::sqrt(2.0), mass = 1, hbar = 1, sigma = 0.15, emin = 2, emax = 12;
    int esteps = 501, max_rep = 20;
    bool exact = false;
    auto* c_trace = app.add_subcommand("trace", "semiclassical density of states");
    c_trace->add_option("--system", system)->check(CLI::IsMember({"aniso-ho"}));
    c_trace->add_option("--w1", w1);
    c_trace->add_option("--w2", w2);
    c_trace->add_option("--hbar", hbar);
    c_trace->add_option("--sigma", sigma);
    c_trace->add_option("--emin", emin);
    c_trace->add_option("--emax", emax);
    c_trace->add_option("--esteps", esteps);
    c_trace->add_option("--max-rep", max_rep);
    c_trace->add_option("--catalog", catalog_file, "orbit catalog JSON instead of the built-in system");
    c_trace->add_option("--descriptor", descriptor_file, "system descriptor JSON for the Weyl term");
    c_trace->add_option("--emit-catalog", emit_catalog, "write the orbit catalog JSON here");
    c_trace->add_flag("--exact", exact, "also emit the exact smoothed density");

    std::string weyl_route = "auto";
    std::string E_s, weyl_omega = "1,1";
    int samples = 400000;
    auto* c_weyl = app.add_subcommand("weyl", "Weyl term dN/dE");
    c_weyl->add_option("--descriptor", descriptor_file, "system descriptor JSON");
    c_weyl->add_option("--omega", weyl_omega, "harmonic frequencies, comma separated");
    c_weyl->add_option("--mass", mass, "mass for --omega");
    c_weyl->add_option("--hbar", hbar);
    c_weyl->add_option("--E", E_s, "energies, comma separated");
    c_weyl->add_option("--emin", emin);
    c_weyl->add_option("--emax", emax);
    c_weyl->add_option("--esteps", esteps);
    c_weyl->add_option("--route", weyl_route)->check(CLI::IsMember({"auto", "quadrature", "monte-carlo"}));
    c_weyl->add_option("--samples", samples);

    std::string lengths_file, eigs_file, basis_s;
    double t = 0.1, area = 0;
    int kmax = 64;
    auto* c_sel = app.add_subcommand("selberg", "both sides of the heat trace formula");
    c_sel->add_option("--lengths", lengths_file)->required();
    c_sel->add_option("--eigs", eigs_file)->required();
    c_sel->add_option("--t", t)->required();
    c_sel->add_option("--area", area)->required();
    c_sel->add_option("--kmax", kmax);

    auto* c_torus = app.add_subcommand("torus-check", "flat torus Poisson identity");
    c_torus->add_option("--basis", basis_s, "b1x,b1y,b2x,b2y")->required();
    c_torus->add_option("--t", t)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        NumericPolicy pol = make_policy(g);
        const bool as_csv = g.format == "csv";

        if (*c_index) {
            auto p = read_path(path_file);
            emit(g, index_record(g, omega_index(p, cplx(1, 0), pol)));
        } else if (*c_omega) {
            auto p = read_path(path_file);
            emit(g, index_record(g, omega_index(p, read_omega(omega_s), pol)));
        } else if (*c_iter) {
            auto p = read_path(path_file);
            int i = i1(p, pol);
            json arr = json::array();
            std::vector<std::vector<std::string>> rows;
            for (int k = 1; k <= m; ++k) {
                int f = precise_iteration_index(i, p.end(), k, pol, &p);
                int d = i1(iterate_path(p, k), pol);
                arr.push_back({{"m", k}, {"index_formula", f}, {"index_direct", d}});
                rows.push_back({fi(k), fi(f), fi(d)});
            }
            emit(g, as_csv ? csv({"m", "index_formula", "index_direct"}, rows) : dump(arr));
        } else if (*c_split) {
            Mat M = io::read_matrix(matrix_file);
            require_symplectic(M, pol.tol_sym);
            auto s = splitting_numbers(M, read_omega(omega_s), pol);
            emit(g, as_csv ? csv({"omega_re", "omega_im", "s_plus", "s_minus"},
                                 {{io::fmt(s.omega.real()), io::fmt(s.omega.imag()), fi(s.s_plus), fi(s.s_minus)}})
                           : dump({{"omega", omega_json(s.omega)}, {"s_plus", s.s_plus}, {"s_minus", s.s_minus}}));
        } else if (*c_nf) {
            Mat M = io::read_matrix(matrix_file);
            require_symplectic(M, pol.tol_sym);
            auto dec = recognize_normal_form(M);
            json j{{"recognized", bool(dec)}};
            std::vector<std::vector<std::string>> rows;
            if (dec) {
                auto put = [&](const std::vector<BasicNormalForm>& v, const char* key) {
                    j[key] = json::array();
                    for (const auto& f : v) {
                        j[key].push_back({{"kind", kind_name(f.kind)}, {"params", f.params}, {"trivial", f.trivial}});
                        std::string ps;
                        for (double x : f.params) ps += (ps.empty() ? "" : " ") + io::fmt(x);
                        rows.push_back({kind_name(f.kind), ps, f.trivial ? "1" : "0"});
                    }
                };
                put(dec->factors, "factors");
                put(dec->m0, "m0");
            }
            emit(g, as_csv ? csv({"kind", "params", "trivial"}, rows) : dump(j));
        } else if (*c_krein) {
            Mat M = io::read_matrix(matrix_file);
            json arr = json::array();
            std::vector<std::vector<std::string>> rows;
            for (const auto& e : krein_types(M, pol)) {
                arr.push_back({{"value", omega_json(e.value)}, {"p", e.p}, {"q", e.q},
                               {"algebraic_multiplicity", e.algebraic_multiplicity},
                               {"geometric_multiplicity", e.geometric_multiplicity}});
                rows.push_back({io::fmt(e.value.real()), io::fmt(e.value.imag()), fi(e.p), fi(e.q),
                                fi(e.algebraic_multiplicity), fi(e.geometric_multiplicity)});
            }
            emit(g, as_csv ? csv({"re", "im", "p", "q", "algebraic", "geometric"}, rows) : dump(arr));
        } else if (*c_morse) {
            if (sturm_file.empty() == coef_file.empty())
                throw ValidationError("morse", "give exactly one of --sturm or --coefficient");
            if (!sturm_file.empty()) {
                auto s = io::sturm_from_json(io::parse_json_text(io::read_file(sturm_file), sturm_file));
                auto mr = morse_index_fourier(s, K);
                auto p = fundamental_solution(sturm_to_hamiltonian(s));
                auto r = omega_index(p, cplx(1, 0), pol);
                bool ok = mr.m_minus == r.index && mr.m_zero == r.nullity;
                emit(g, as_csv ? csv({"m_minus", "m_zero", "i1", "nu1", "agree"},
                                     {{fi(mr.m_minus), fi(mr.m_zero), fi(r.index), fi(r.nullity), ok ? "1" : "0"}})
                               : dump({{"m_minus", mr.m_minus}, {"m_zero", mr.m_zero}, {"i1", r.index},
                                       {"nu1", r.nullity}, {"truncation", mr.K}, {"agree", ok}}));
            } else {
                auto c = io::coefficient_from_json(io::parse_json_text(io::read_file(coef_file), coef_file));
                auto mr = morse_index_phase_space(c, K);
                int i = i1(fundamental_solution(c), pol);
                bool ok = mr.m_minus - mr.d == i;
                emit(g, as_csv ? csv({"m_minus", "d", "i1", "agree"},
                                     {{fi(mr.m_minus), fi(mr.d), fi(i), ok ? "1" : "0"}})
                               : dump({{"m_minus", mr.m_minus}, {"d", mr.d}, {"i1", i}, {"truncation", mr.K},
                                       {"agree", ok}}));
            }
        } else if (*c_trace) {
            auto grid = energy_grid(emin, emax, esteps);
            std::vector<PeriodicOrbit> orbits;
            std::optional<NaturalSystem> sys;
            std::vector<double> levels;
            if (!catalog_file.empty()) {
                orbits = io::orbits_from_json(io::parse_json_text(io::read_file(catalog_file), catalog_file));
                if (!descriptor_file.empty())
                    sys = io::system_from_json(io::parse_json_text(io::read_file(descriptor_file), descriptor_file));
                if (exact) throw ValidationError("trace", "--exact needs the built-in system");
            } else {
                orbits = anisotropic_ho_catalog(w1, w2, 0.5 * (emin + emax), max_rep, pol);
                Vec w(2);
                w << w1, w2;
                sys = harmonic_system(w);
                levels = anisotropic_ho_levels(w1, w2, hbar, emax + 12 * sigma);
            }
            if (!emit_catalog.empty()) {
                json arr = json::array();
                for (const auto& o : orbits) arr.push_back(io::orbit_json(o));
                std::ofstream f(emit_catalog);
                if (!f) throw ValidationError("io", "cannot write " + emit_catalog);
                f << arr.dump(2) << "\n";
            }
            DensityDiagnostics diag;
            auto d = gutzwiller_density(orbits, grid, hbar, sigma, sys ? &*sys : nullptr, &diag, pol);
            for (const auto& r : diag.rejected) std::cerr << "warning: rejected near-degenerate orbit " << r << "\n";
            if (as_csv) {
                if (!exact) {
                    emit(g, io::density_csv(d));
                } else {
                    auto ex = exact_spectrum_density(levels, grid, sigma);
                    std::vector<std::vector<std::string>> rows;
                    for (std::size_t k = 0; k < grid.size(); ++k)
                        rows.push_back({io::fmt(grid[k]), io::fmt(d.values[k]), io::fmt(ex.values[k])});
                    emit(g, csv({"E", "value", "exact"}, rows));
                }
            } else {
                json j{{"energies", d.energies}, {"values", d.values}, {"sigma", d.sigma}, {"rejected", diag.rejected}};
                if (exact) j["exact"] = exact_spectrum_density(levels, grid, sigma).values;
                emit(g, dump(j));
            }
        } else if (*c_weyl) {
            NaturalSystem sys;
            if (!descriptor_file.empty()) {
                sys = io::system_from_json(io::parse_json_text(io::read_file(descriptor_file), descriptor_file));
            } else {
                auto w = io::parse_list(weyl_omega, "--omega");
                sys = harmonic_system(Eigen::Map<Vec>(w.data(), Eigen::Index(w.size())), mass);
            }
            std::vector<double> Es = E_s.empty() ? energy_grid(emin, emax, esteps) : io::parse_list(E_s, "--E");
            WeylRoute route = weyl_route == "quadrature"    ? WeylRoute::Quadrature
                              : weyl_route == "monte-carlo" ? WeylRoute::MonteCarlo
                                                            : WeylRoute::Auto;
            json arr = json::array();
            std::vector<std::vector<std::string>> rows;
            for (double E : Es) {
                auto r = weyl_term(sys, E, hbar, route, pol.seed, samples);
                arr.push_back({{"E", E}, {"value", r.value}, {"std_error", r.std_error}, {"route", r.route}});
                rows.push_back({io::fmt(E), io::fmt(r.value)});
            }
            emit(g, as_csv ? csv({"E", "value"}, rows) : dump(arr));
        } else if (*c_sel) {
            auto ev = io::eigenvalues_from_csv(io::read_file(eigs_file), eigs_file);
            auto L = io::lengths_from_csv(io::read_file(lengths_file), lengths_file, area);
            auto l = selberg_lhs_heat(ev, t);
            auto r = selberg_rhs_heat(L, t, kmax);
            double gap = std::abs(l.value - r.value);
            emit(g, as_csv ? csv({"lhs", "rhs", "gap", "lhs_tail", "rhs_tail"},
                                 {{io::fmt(l.value), io::fmt(r.value), io::fmt(gap), io::fmt(l.tail_bound),
                                   io::fmt(r.tail_bound)}})
                           : dump({{"lhs", l.value}, {"rhs", r.value}, {"gap", gap},
                                   {"tail_bounds", {{"lhs", l.tail_bound}, {"rhs", r.tail_bound}}}}));
        } else if (*c_torus) {
            auto b = io::parse_list(basis_s, "--basis");
            if (b.size() != 4) throw ValidationError("torus", "--basis needs four numbers");
            Mat B(2, 2);
            B << b[0], b[2], b[1], b[3];
            auto r = torus_trace_check(B, t);
            double rel = r.gap / std::abs(r.lhs);
            emit(g, as_csv ? csv({"lhs", "rhs", "gap", "relative_gap", "lhs_tail", "rhs_tail"},
                                 {{io::fmt(r.lhs), io::fmt(r.rhs), io::fmt(r.gap), io::fmt(rel), io::fmt(r.lhs_tail),
                                   io::fmt(r.rhs_tail)}})
                           : dump({{"lhs", r.lhs}, {"rhs", r.rhs}, {"gap", r.gap}, {"relative_gap", rel},
                                   {"tail_bounds", {{"lhs", r.lhs_tail}, {"rhs", r.rhs_tail}}}}));
        }
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConditioningError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

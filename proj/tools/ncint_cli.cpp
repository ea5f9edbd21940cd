// Command-line front end: instance parsing, solver orchestration, report
// emission, and a seeded generator for feasible-by-construction instances.
//
// Exit codes: 0 feasible / success, 1 infeasible, 2 input error,
// 3 numerical failure (cross-check, decay, or residual above tolerance).

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ncint/ncint.hpp"

namespace {

using namespace ncint;

constexpr int kExitFeasible = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Output {
    bool pretty = false;

    void emit(const json& j) const { std::cout << (pretty ? j.dump(2) : j.dump()) << "\n"; }
};

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw parse_error("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

json certificate_to_json(const InterpolantCertificate& cert) {
    json residuals = json::array();
    for (double r : cert.point_residuals) residuals.push_back(r);
    return json{{"T", to_json(cert.t)},
                {"residuals", std::move(residuals)},
                {"norm_bound", cert.norm_bound},
                {"norm_level", cert.norm_level},
                {"theta_defect", cert.theta_defect},
                {"intertwine_defect", cert.intertwine_defect},
                {"wave_residual", cert.wave_residual},
                {"factor_rank", cert.factor_rank}};
}

struct SettingsOverride {
    double tol_psd = -1.0, tol_interp = -1.0, tol_series = -1.0;
    int depth_cap = -1, k_out = -1;

    Settings apply(Settings s) const {
        if (tol_psd > 0) s.tol_psd = tol_psd;
        if (tol_interp > 0) s.tol_interp = tol_interp;
        if (tol_series > 0) s.tol_series = tol_series;
        if (depth_cap > 0) s.depth_cap = depth_cap;
        if (k_out > 0) s.k_out = k_out;
        return s;
    }
};

int run_feasibility(const std::string& path, const SettingsOverride& ovr, bool with_matrix,
                    const Output& out) {
    const Timer timer;
    const InstanceFile inst = instance_from_json(load_json(path));
    const Settings cfg = ovr.apply(inst.settings);
    FeasibilityReport rep;
    if (inst.kind == "nevpick")
        rep = np_feasible(np_from_json(inst.problem), cfg);
    else if (inst.kind == "cara")
        rep = cara_feasible(cara_from_json(inst.problem), cfg);
    else
        throw parse_error("feasibility expects a nevpick or cara instance");

    json report{{"kind", inst.kind},
                {"verdict", rep.feasible ? "feasible" : "infeasible"},
                {"min_eig", rep.min_eig},
                {"settings", to_json(cfg)},
                {"timing_ms", timer.ms()}};
    if (with_matrix) report["matrix"] = to_json(rep.matrix);
    out.emit(report);
    return rep.feasible ? kExitFeasible : kExitInfeasible;
}

int run_synthesize(const std::string& path, const SettingsOverride& ovr, bool with_matrix,
                   bool verify, const Output& out) {
    const Timer timer;
    const InstanceFile inst = instance_from_json(load_json(path));
    const Settings cfg = ovr.apply(inst.settings);

    json report{{"kind", inst.kind}, {"settings", to_json(cfg)}};
    double max_residual = 0.0;
    if (inst.kind == "nevpick") {
        const NPProblem prob = np_from_json(inst.problem);
        const InterpolantCertificate cert = synthesize(prob, cfg.k_out, cfg);
        for (double r : cert.point_residuals) max_residual = std::max(max_residual, r);
        report["verdict"] = "feasible";
        report["certificate"] = certificate_to_json(cert);
        if (with_matrix) report["matrix"] = to_json(np_feasible(prob, cfg).matrix);
        if (verify) {
            const VerificationReport vr = verify_certificate(cert, prob, cfg);
            json res = json::array();
            for (double r : vr.point_residuals) res.push_back(r);
            report["verify"] = json{{"residuals", std::move(res)},
                                    {"wave_residual", vr.wave_residual},
                                    {"pass", vr.pass}};
        }
    } else if (inst.kind == "cara") {
        const CaraProblem prob = cara_from_json(inst.problem);
        const InterpolantCertificate cert = cara_synthesize(prob, cfg.k_out, cfg);
        for (double r : cert.point_residuals) max_residual = std::max(max_residual, r);
        report["verdict"] = "feasible";
        report["certificate"] = certificate_to_json(cert);
        if (with_matrix) report["matrix"] = to_json(cara_feasible(prob, cfg).matrix);
        if (verify) {
            json res = json::array();
            bool pass = true;
            if (prob.variant == CaraVariant::partial) {
                const LoweredTuple lt = build_lowered(prob.z, prob.order);
                const CMatrix row = detail::derivative_row(cert.t, lt.f, lt.g());
                for (int k = 0; k <= prob.order; ++k) {
                    const Index base = graded_offset(prob.z.dim(), prob.z.n(), k);
                    const Index cols = prob.z.dim() * pow_i64(prob.z.n(), k);
                    const double r = operator_norm(row.middleCols(base, cols) -
                                                   prob.targets[static_cast<std::size_t>(k)]);
                    res.push_back(r);
                    pass = pass && r <= cfg.tol_interp;
                }
            } else {
                for (int k = 0; k <= prob.order; ++k) {
                    const double r =
                        operator_norm(total_derivative_direct(cert.t, prob.z, k, prob.order) -
                                      prob.targets[static_cast<std::size_t>(k)]);
                    res.push_back(r);
                    pass = pass && r <= cfg.tol_interp;
                }
            }
            report["verify"] = json{{"residuals", std::move(res)}, {"pass", pass}};
        }
    } else {
        throw parse_error("synthesize expects a nevpick or cara instance");
    }
    report["timing_ms"] = timer.ms();
    out.emit(report);
    if (max_residual > cfg.tol_interp)
        throw numerical_error("synthesize: residual " + std::to_string(max_residual) +
                              " above tolerance " + std::to_string(cfg.tol_interp));
    return kExitFeasible;
}

struct GenerateOpts {
    std::string kind = "nevpick";
    std::uint64_t seed = 0;
    int n_points = 2;
    int order = 2;
    std::string variant = "total";
    int n_components = 2;
    Index dim_e = 1;
    double margin = 0.9;
    double point_margin = -1.0; // kind-dependent default
    int degree = 6;
    std::string out_path;
};

int run_generate(const GenerateOpts& g, const SettingsOverride& ovr, const Output& out) {
    InstanceFile inst;
    inst.settings = ovr.apply(Settings{});
    if (g.kind == "nevpick") {
        NPGenConfig cfg;
        cfg.n_points = g.n_points;
        cfg.n_components = g.n_components;
        cfg.dim_e = g.dim_e;
        cfg.margin = g.margin;
        if (g.point_margin > 0) cfg.point_margin = g.point_margin;
        cfg.degree = g.degree;
        inst.kind = "nevpick";
        inst.problem = to_json(make_np_instance(g.seed, cfg));
    } else if (g.kind == "cara") {
        CaraGenConfig cfg;
        cfg.variant = g.variant == "partial" ? CaraVariant::partial : CaraVariant::total;
        cfg.order = g.order;
        cfg.n_components = g.n_components;
        cfg.dim_e = g.dim_e;
        cfg.margin = g.margin;
        if (g.point_margin > 0) cfg.point_margin = g.point_margin;
        cfg.degree = g.degree;
        inst.kind = "cara";
        inst.problem = to_json(make_cara_instance(g.seed, cfg));
    } else {
        throw parse_error("generate: unknown kind \"" + g.kind + "\"");
    }
    const json doc = to_json(inst);
    if (g.out_path.empty()) {
        out.emit(doc);
    } else {
        std::ofstream f(g.out_path);
        if (!f) throw parse_error("cannot write file: " + g.out_path);
        f << (out.pretty ? doc.dump(2) : doc.dump()) << "\n";
    }
    return kExitFeasible;
}

int run_kernel(const std::string& path, const Output& out) {
    const Timer timer;
    const InstanceFile inst = instance_from_json(load_json(path));
    if (inst.kind != "kernel") throw parse_error("kernel expects a kernel instance");
    if (!inst.problem.contains("Z") || !inst.problem.contains("W"))
        throw parse_error("kernel instance needs points Z and W");
    const OperatorTuple z = point_from_json(inst.problem["Z"]);
    const OperatorTuple w = point_from_json(inst.problem["W"]);
    const double tol =
        inst.problem.contains("tol") ? inst.problem["tol"].get<double>() : 1e-10;
    const KernelResult k = szego_kernel(z, w, tol);
    out.emit(json{{"kind", "kernel"},
                  {"K", to_json(k.value)},
                  {"depth", k.depth},
                  {"tail_bound", k.tail_bound},
                  {"timing_ms", timer.ms()}});
    return kExitFeasible;
}

int run_solve_displacement(const std::string& path, const std::string& method,
                           const SettingsOverride& ovr, const Output& out) {
    const Timer timer;
    const InstanceFile inst = instance_from_json(load_json(path));
    if (inst.kind != "displacement")
        throw parse_error("solve-displacement expects a displacement instance");
    const DisplacementSystem sys = displacement_from_json(inst.problem);
    const Settings cfg = ovr.apply(inst.settings);

    json report{{"kind", "displacement"}, {"settings", to_json(cfg)}};
    CMatrix a;
    if (method == "series" || method == "both") {
        const SeriesSolveResult r = solve_series(sys, cfg.tol_series, cfg.depth_cap);
        report["series"] = json{{"depth", r.depth},
                                {"tail_estimate", r.tail_estimate},
                                {"residual", displacement_residual(sys, r.a)}};
        a = r.a;
    }
    if (method == "exact" || method == "both") {
        const CMatrix e = solve_exact(sys);
        report["exact"] = json{{"residual", displacement_residual(sys, e)}};
        if (method == "both") {
            const double gap = operator_norm(a - e);
            report["agreement"] = gap;
            if (gap > 1e-8 * (1.0 + operator_norm(e)))
                throw crosscheck_error("solve-displacement: routes disagree by " +
                                       std::to_string(gap));
        }
        a = e;
    }
    report["A"] = to_json(a);
    report["timing_ms"] = timer.ms();
    out.emit(report);
    return kExitFeasible;
}

// Compact invariant suite over every module; prints one line per check.
int run_selftest() {
    struct Check {
        std::string name;
        bool ok;
    };
    std::vector<Check> checks;
    auto add = [&](const std::string& name, bool ok) {
        checks.push_back({name, ok});
        std::cout << (ok ? "PASS  " : "FAIL  ") << name << "\n";
    };

    {
        bool ok = true;
        for (int n = 1; n <= 4 && ok; ++n)
            for (int k = 0; k <= 5 && ok; ++k)
                for (std::int64_t o = 0; o < pow_i64(n, k) && ok; ++o)
                    ok = word_index(index_word({k, o}, n), n) == LevelIndex{k, o};
        add("words: index round trip", ok);
    }
    {
        bool ok = true;
        for (std::uint64_t seed = 0; seed < 20 && ok; ++seed) {
            Rng rng(seed);
            const CMatrix m = random_cmatrix(rng, 6, 6);
            const CMatrix psd = m * m.adjoint();
            const CMatrix l = psd_factor(psd, 1e-10);
            ok = operator_norm(l * l.adjoint() - psd) <= 1e-9 * (1.0 + operator_norm(psd));
        }
        add("linalg: psd_factor reconstruction", ok);
    }
    {
        bool ok = true;
        for (std::uint64_t seed = 0; seed < 20 && ok; ++seed) {
            Rng rng(100 + seed);
            const OperatorTuple z = random_point(rng, 2, 1, 0.2 + 0.6 * rng.uniform());
            const OperatorTuple w = random_point(rng, 2, 1, 0.2 + 0.6 * rng.uniform());
            Complex pair = 0.0;
            for (int k = 1; k <= 2; ++k)
                pair += std::conj(z.component(k)(0, 0)) * w.component(k)(0, 0);
            ok = std::abs(szego_kernel(z, w, 1e-10).value(0, 0) - 1.0 / (1.0 - pair)) < 1e-9;
        }
        add("points: scalar kernel closed form", ok);
    }
    {
        bool ok = true;
        for (std::uint64_t seed = 0; seed < 5 && ok; ++seed) {
            Rng rng(200 + seed);
            const SchurElement t = random_schur(300 + seed, 2, 1, 3, 0.9);
            const OperatorTuple z = random_point(rng, 2, 1, 0.5);
            ok = evaluation_identity_defect(t, z, 5) < 1e-10;
        }
        add("schur: evaluation identity on completed rows", ok);
    }
    {
        bool ok = true;
        for (std::uint64_t seed = 0; seed < 10 && ok; ++seed) {
            Rng rng(400 + seed);
            DisplacementSystem sys;
            CMatrix gram = CMatrix::Zero(6, 6);
            for (int k = 0; k < 2; ++k) {
                sys.f.push_back(random_cmatrix(rng, 6, 6));
                gram += sys.f.back() * sys.f.back().adjoint();
            }
            const double sc = std::sqrt(0.8 / operator_norm(gram));
            for (CMatrix& fk : sys.f) fk *= sc;
            sys.u = 0.5 * random_cmatrix(rng, 6, 1);
            sys.v = 0.5 * random_cmatrix(rng, 6, 1);
            ok = operator_norm(solve_series(sys, 1e-12).a - solve_exact(sys)) < 1e-8;
        }
        add("displacement: series and exact solvers agree", ok);
    }
    {
        bool ok = true;
        for (std::uint64_t seed = 1; seed <= 5 && ok; ++seed) {
            const NPProblem prob = make_np_instance(seed);
            const InterpolantCertificate cert = synthesize(prob, 8);
            for (double r : cert.point_residuals) ok = ok && r <= 1e-6;
            ok = ok && cert.theta_defect <= 1e-10 && cert.norm_bound <= 1.0 + 1e-8;
        }
        add("interpolate: generator round trip", ok);
    }
    {
        bool ok = true;
        for (int n = 1; n <= 3 && ok; ++n) {
            Rng rng(500 + static_cast<std::uint64_t>(n));
            const OperatorTuple z = random_point(rng, n, 2, 0.4);
            for (int len = 1; len <= 3 && ok; ++len)
                for (const Word& w : enumerate_words(n, len))
                    ok = ok && pq_check(z, w, 2).defect <= 1e-12;
        }
        add("derive: block-summation recursion", ok);
    }
    {
        bool ok = true;
        for (std::uint64_t seed = 1; seed <= 4 && ok; ++seed) {
            CaraGenConfig cfg;
            cfg.variant = seed % 2 == 0 ? CaraVariant::partial : CaraVariant::total;
            const CaraProblem prob = make_cara_instance(seed, cfg);
            const InterpolantCertificate cert = cara_synthesize(prob, 8);
            for (double r : cert.point_residuals) ok = ok && r <= 1e-6;
        }
        add("derive: Caratheodory round trip", ok);
    }

    bool all = true;
    for (const Check& c : checks) all = all && c.ok;
    std::cout << (all ? "selftest: all checks passed" : "selftest: FAILURES above") << "\n";
    return all ? kExitFeasible : kExitNumerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noncommutative Nevanlinna-Pick / Caratheodory interpolation on the "
                 "operator unit ball"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name

    Output out;
    SettingsOverride ovr;
    app.add_flag("--pretty", out.pretty, "indent JSON output");
    app.add_flag("--json", "emit compact JSON (default)");
    app.add_option("--tol-psd", ovr.tol_psd, "PSD tolerance (default 1e-9)");
    app.add_option("--tol-interp", ovr.tol_interp, "interpolation residual tolerance (default 1e-6)");
    app.add_option("--tol-series", ovr.tol_series, "series residual tolerance (default 1e-9)");
    app.add_option("--depth-cap", ovr.depth_cap, "series depth cap (default 200)");
    app.add_option("--K-out", ovr.k_out, "synthesis coefficient degree (default 8)");

    std::string feas_path;
    bool feas_matrix = false;
    CLI::App* feas = app.add_subcommand("feasibility", "decide interpolation feasibility");
    feas->add_option("instance", feas_path, "instance JSON file")->required();
    feas->add_flag("--matrix", feas_matrix, "include the tested matrix in the report");

    std::string synth_path;
    bool synth_matrix = false, synth_verify = false;
    CLI::App* synth = app.add_subcommand("synthesize", "construct an interpolant");
    synth->add_option("instance", synth_path, "instance JSON file")->required();
    synth->add_flag("--matrix", synth_matrix, "include the tested matrix in the report");
    synth->add_flag("--verify", synth_verify, "re-derive residuals independently");

    GenerateOpts gen;
    CLI::App* generate = app.add_subcommand("generate", "emit a feasible seeded instance");
    generate->add_option("--kind", gen.kind, "nevpick | cara")->required();
    generate->add_option("--seed", gen.seed, "generator seed")->required();
    generate->add_option("--n", gen.n_points, "number of interpolation points (nevpick)");
    generate->add_option("--l", gen.order, "derivative order (cara)");
    generate->add_option("--variant", gen.variant, "partial | total (cara)");
    generate->add_option("--N", gen.n_components, "number of ball components");
    generate->add_option("--dimE", gen.dim_e, "coefficient space dimension");
    generate->add_option("--margin", gen.margin, "norm margin of the generating element")
        ->check(CLI::Range(1e-6, 0.999999));
    generate->add_option("--point-margin", gen.point_margin, "ball margin of the points");
    generate->add_option("--degree", gen.degree, "degree of the generating element");
    generate->add_option("-o,--output", gen.out_path, "output file (default stdout)");

    std::string kernel_path;
    CLI::App* kern = app.add_subcommand("kernel", "evaluate the Szego-type kernel");
    kern->add_option("instance", kernel_path, "instance JSON file")->required();

    std::string disp_path, disp_method = "both";
    CLI::App* disp = app.add_subcommand("solve-displacement", "solve a displacement equation");
    disp->add_option("instance", disp_path, "instance JSON file")->required();
    disp->add_option("--method", disp_method, "series | exact | both")
        ->check(CLI::IsMember({"series", "exact", "both"}));

    CLI::App* self = app.add_subcommand("selftest", "run the built-in invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitInput;
    }

    try {
        if (feas->parsed()) return run_feasibility(feas_path, ovr, feas_matrix, out);
        if (synth->parsed()) return run_synthesize(synth_path, ovr, synth_matrix, synth_verify, out);
        if (generate->parsed()) return run_generate(gen, ovr, out);
        if (kern->parsed()) return run_kernel(kernel_path, out);
        if (disp->parsed()) return run_solve_displacement(disp_path, disp_method, ovr, out);
        if (self->parsed()) return run_selftest();
    } catch (const infeasible_error& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const invalid_input& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitInput;
}

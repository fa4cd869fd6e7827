#include "wtm/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "wtm/problem_io.hpp"

namespace wtm::cli {

namespace {

namespace fs = std::filesystem;

struct Overrides {
    std::optional<double> tol;
    std::optional<int> max_sweeps;
    std::optional<double> h;
    std::optional<double> z;
    std::optional<int> rho;
    std::optional<int> workers;
    std::optional<double> fraction;
    bool with_reference = false;
    std::string out_dir;
};

void add_run_flags(CLI::App& cmd, Overrides& ov) {
    cmd.set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
    cmd.add_option("--tol", ov.tol, "Stopping threshold on successive sweep difference");
    cmd.add_option("--max-sweeps", ov.max_sweeps, "Sweep limit");
    cmd.add_option("--h", ov.h, "Time step (keeps the window)");
    cmd.add_option("--z", ov.z, "Constant characteristic impedance for every line");
    cmd.add_option("--rho", ov.rho, "Line delay in sweeps");
    cmd.add_option("--workers", ov.workers, "Worker threads per sweep");
    cmd.add_option("--fraction", ov.fraction, "Force fC=fA=fb for every boundary vertex")->check(CLI::Range(0.0, 1.0));
    cmd.add_flag("--with-reference", ov.with_reference, "Track error against the monolithic solve");
    cmd.add_option("--out", ov.out_dir, "Output directory (default $WTM_OUT or .)");
}

void apply(Problem& pb, const Overrides& ov) {
    auto& cfg = pb.config;
    if (ov.tol) cfg.tol = *ov.tol;
    if (ov.max_sweeps) cfg.max_sweeps = *ov.max_sweeps;
    if (ov.h) cfg.grid = TimeGridd(cfg.grid.t_start(), cfg.grid.t_end(), *ov.h);
    if (ov.z) {
        cfg.impedance = ImpedanceSpec<double>::constant_value(*ov.z);
        cfg.impedance_per_line.clear();
        pb.impedance_file.reset();
    }
    if (ov.rho) cfg.delay = *ov.rho;
    if (ov.workers) cfg.workers = *ov.workers;
    if (ov.with_reference) cfg.with_reference = true;
    if (ov.fraction)
        for (auto& bv : pb.partition.boundary) bv.f_c = bv.f_a = bv.f_b = *ov.fraction;
}

fs::path output_dir(const Overrides& ov) {
    if (!ov.out_dir.empty()) return ov.out_dir;
    if (const char* env = std::getenv("WTM_OUT"); env && *env) return env;
    return ".";
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
}

std::string solution_csv(const Solutiond& sol) {
    const auto& global = sol.merged.global;
    std::string s = "t";
    for (std::size_t v = 0; v < global.size(); ++v) s += ",v" + std::to_string(v);
    s += "\n";
    if (global.empty()) return s;
    const auto& grid = global.front().grid();
    for (std::size_t m = 0; m < grid.n_points(); ++m) {
        s += format_real(grid.time(m));
        for (const auto& wf : global) s += "," + format_real(wf[m]);
        s += "\n";
    }
    return s;
}

std::string convergence_csv(const Solutiond& sol) {
    std::string s = "sweep,successive_diff";
    const bool with_ref = !sol.error_curve.empty() && !sol.error_curve.front().reference_err.empty();
    if (with_ref)
        for (const auto& tp : sol.split.twins)
            for (int part : {tp.port1.part, tp.port2.part})
                s += ",ref_err_v" + std::to_string(tp.vertex) + "_p" + std::to_string(part);
    s += "\n";
    for (const auto& rec : sol.error_curve) {
        s += std::to_string(rec.k) + "," + format_real(rec.successive_diff);
        for (double e : rec.reference_err) s += "," + format_real(e);
        s += "\n";
    }
    return s;
}

std::string twins_csv(const Solutiond& sol) {
    std::string s = "wtl,vertex,part_a,part_b,mismatch\n";
    for (std::size_t t = 0; t < sol.merged.twins.size(); ++t) {
        const auto& rep = sol.merged.twins[t];
        const auto& tp = sol.split.twins[t];
        s += std::to_string(rep.wtl) + "," + std::to_string(rep.vertex) + "," + std::to_string(tp.port1.part) + "," +
             std::to_string(tp.port2.part) + "," + format_real(rep.mismatch) + "\n";
    }
    return s;
}

int execute(const Problem& pb, const fs::path& dir, std::ostream& out, std::ostream& err) {
    try {
        const auto sol = run(pb.system, pb.partition, pb.config);
        fs::create_directories(dir);
        write_text(dir / "solution.csv", solution_csv(sol));
        write_text(dir / "convergence.csv", convergence_csv(sol));
        write_text(dir / "twins.csv", twins_csv(sol));
        const double last = sol.error_curve.empty() ? 0.0 : sol.error_curve.back().successive_diff;
        out << (sol.converged ? "converged" : "not converged") << " after " << sol.sweeps_used
            << " sweeps (successive diff " << format_real(last) << ")\n";
        if (!sol.error_curve.empty() && !sol.error_curve.back().reference_err.empty()) {
            double worst = 0.0;
            for (double e : sol.error_curve.back().reference_err) worst = std::max(worst, e);
            out << "max error vs reference " << format_real(worst) << "\n";
        }
        out << "wrote " << (dir / "solution.csv").string() << ", convergence.csv, twins.csv\n";
        return sol.converged ? kConverged : kNotConverged;
    } catch (const DivergenceError& e) {
        err << "wtm: " << e.what() << "\n";
        return kDiverged;
    }
}

struct Report {
    std::ostream& out;
    std::optional<std::string> first_failure;
    void line(const std::string& check, bool ok, const std::string& detail = {}) {
        out << check << ": " << (ok ? "pass" : "FAIL") << (detail.empty() ? "" : " (" + detail + ")") << "\n";
        if (!ok && !first_failure) first_failure = check + (detail.empty() ? "" : ": " + detail);
    }
};

int validate(const Problem& pb, std::ostream& out, std::ostream& err) {
    Report rep{out, {}};
    const auto& sys = pb.system;
    const auto sc = validate_system(sys);
    bool dims_ok = true;
    for (const auto& r : sc.reasons)
        if (r.rfind("dimension", 0) == 0) {
            rep.line("dimensions", false, r);
            dims_ok = false;
        }
    if (dims_ok) {
        rep.line("dimensions", true, "n=" + std::to_string(sys.n));
        const auto c = validate_spd(sys.C);
        rep.line("C SPD check", c.ok, c.ok ? "" : c.reason);
        const auto a = validate_spd(sys.A);
        rep.line("A SPD check", a.ok, a.ok ? "" : a.reason);
    }
    try {
        pb.config.validate();
        (void)pb.config.impedance.on(pb.config.grid);
        for (const auto& [id, spec] : pb.config.impedance_per_line) (void)spec.on(pb.config.grid);
        rep.line("run configuration", true);
    } catch (const Error& e) {
        rep.line("run configuration", false, e.what());
    }
    if (dims_ok) {
        try {
            const auto parts = split(sys, pb.partition, false);
            rep.line("partition legality", true,
                     std::to_string(parts.subs.size()) + " parts, " + std::to_string(parts.twins.size()) + " lines");
            for (const auto& tp : parts.twins) {
                const auto& bv = *std::find_if(pb.partition.boundary.begin(), pb.partition.boundary.end(),
                                               [&](const auto& b) { return b.vertex == tp.vertex; });
                const bool given = bv.f_a.has_value();
                out << "boundary " << tp.vertex << " parts " << tp.port1.part << "|" << tp.port2.part
                    << " fractions fC=" << format_real(tp.f_c) << " fA=" << format_real(tp.f_a)
                    << " fb=" << format_real(tp.f_b) << (given ? " (given)" : " (default)") << "\n";
            }
            for (const auto& s : parts.subs) {
                for (const auto& [name, m] : {std::pair{"C", &s.C}, std::pair{"A", &s.A}}) {
                    const auto chk = validate_snnd(*m);
                    std::ostringstream d;
                    d << "min eigenvalue " << format_real(chk.value);
                    rep.line("part " + std::to_string(s.part) + " " + name + " SNND check", chk.ok, d.str());
                }
            }
        } catch (const Error& e) {
            rep.line("partition legality", false, e.what());
        }
    }
    if (rep.first_failure) {
        err << "wtm: validate: " << *rep.first_failure << "\n";
        return kUsageError;
    }
    out << "all checks passed\n";
    return kConverged;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Waveform transmission method solver for SPD ODE systems"};
    app.require_subcommand(1);
    Overrides ov;
    std::string problem_path;

    auto* run_cmd = app.add_subcommand("run", "Solve a problem file");
    run_cmd->add_option("problem", problem_path, "Problem file")->required();
    add_run_flags(*run_cmd, ov);

    auto* demo_cmd = app.add_subcommand("demo", "Solve the built-in two-part RC example");
    add_run_flags(*demo_cmd, ov);

    auto* validate_cmd = app.add_subcommand("validate", "Check a problem file without solving");
    validate_cmd->add_option("problem", problem_path, "Problem file")->required();
    add_run_flags(*validate_cmd, ov);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (demo_cmd->parsed()) {
            Problem pb = demo_problem();
            apply(pb, ov);
            pb.config.with_reference = true;
            const auto dir = output_dir(ov);
            fs::create_directories(dir);
            write_text(dir / "demo.wtm", write_problem(pb));
            return execute(pb, dir, out, err);
        }
        Problem pb = load_problem(problem_path);
        apply(pb, ov);
        if (validate_cmd->parsed()) return validate(pb, out, err);
        return execute(pb, output_dir(ov), out, err);
    } catch (const std::exception& e) {
        err << "wtm: " << e.what() << "\n";
        return kUsageError;
    }
}

}  // namespace wtm::cli

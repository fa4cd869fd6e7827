#include "wtm/problem_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace wtm {

namespace {

std::vector<std::string> tokenize(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream is{std::string(line)};
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

double to_real(const std::string& tok, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected a real number, got '" + tok + "'", line);
    }
}

long long to_int(const std::string& tok, std::size_t line) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected an integer, got '" + tok + "'", line);
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct MatrixLines {
    // key (lo, hi) -> (value, stored as lower-first orientation?)
    std::map<std::pair<Index, Index>, std::pair<double, bool>> seen;
};

}  // namespace

std::string format_real(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

Problem parse_problem(std::string_view text, const std::filesystem::path& base_dir) {
    Problem pb;
    std::optional<Index> n;
    MatrixLines c_lines;
    MatrixLines a_lines;
    std::set<Index> b_seen;
    std::set<Index> x0_seen;
    std::set<Index> assigned;
    std::optional<double> t1, t2, h;

    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view raw = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const auto tok = tokenize(raw);
        if (tok.empty()) continue;
        const std::string& kw = tok[0];

        auto need = [&](std::size_t lo, std::size_t hi) {
            if (tok.size() < lo || tok.size() > hi)
                throw ParseError("'" + kw + "' takes " + std::to_string(lo - 1) +
                                     (hi != lo ? " to " + std::to_string(hi - 1) : std::string()) + " arguments",
                                 lineno);
        };
        auto need_system = [&] {
            if (!n) throw ParseError("'" + kw + "' before 'system n=<int>'", lineno);
        };
        auto vertex = [&](const std::string& t) {
            const long long v = to_int(t, lineno);
            if (v < 0 || v >= *n)
                throw ParseError("dimension mismatch: vertex " + t + " outside 0.." + std::to_string(*n - 1), lineno);
            return static_cast<Index>(v);
        };

        if (kw == "system") {
            need(2, 2);
            if (n) throw ParseError("duplicate 'system' line", lineno);
            if (tok[1].rfind("n=", 0) != 0) throw ParseError("expected 'system n=<int>'", lineno);
            const long long v = to_int(tok[1].substr(2), lineno);
            if (v < 1) throw ParseError("system needs at least one vertex", lineno);
            n = static_cast<Index>(v);
            pb.system.n = *n;
            pb.system.C = SymMatrixd(*n);
            pb.system.A = SymMatrixd(*n);
            pb.system.b = Eigen::VectorXd::Zero(*n);
            pb.system.x0 = Eigen::VectorXd::Zero(*n);
        } else if (kw == "C" || kw == "A") {
            need(4, 4);
            need_system();
            const Index i = vertex(tok[1]);
            const Index j = vertex(tok[2]);
            const double v = to_real(tok[3], lineno);
            auto& lines = kw == "C" ? c_lines : a_lines;
            auto& mat = kw == "C" ? pb.system.C : pb.system.A;
            const bool lower_first = i <= j;
            const std::pair<Index, Index> key{std::min(i, j), std::max(i, j)};
            if (auto it = lines.seen.find(key); it != lines.seen.end()) {
                if (it->second.second == lower_first || i == j)
                    throw ParseError("duplicate " + kw + " entry (" + tok[1] + "," + tok[2] + ")", lineno);
                if (it->second.first != v)
                    throw ParseError("asymmetric " + kw + " entry pair (" + tok[1] + "," + tok[2] + ")", lineno);
                continue;
            }
            lines.seen[key] = {v, lower_first};
            mat.insert(key.first, key.second, v);
        } else if (kw == "b" || kw == "x0") {
            need(3, 3);
            need_system();
            const Index i = vertex(tok[1]);
            auto& seen = kw == "b" ? b_seen : x0_seen;
            if (!seen.insert(i).second) throw ParseError("duplicate '" + kw + "' entry for vertex " + tok[1], lineno);
            (kw == "b" ? pb.system.b : pb.system.x0)[i] = to_real(tok[2], lineno);
        } else if (kw == "part") {
            need(3, 3);
            need_system();
            const Index i = vertex(tok[1]);
            if (!assigned.insert(i).second) throw ParseError("vertex " + tok[1] + " assigned twice", lineno);
            pb.partition.interior[i] = static_cast<int>(to_int(tok[2], lineno));
        } else if (kw == "boundary") {
            need(4, 7);
            need_system();
            BoundaryVertex<double> bv;
            bv.vertex = vertex(tok[1]);
            if (!assigned.insert(bv.vertex).second) throw ParseError("vertex " + tok[1] + " assigned twice", lineno);
            bv.part_a = static_cast<int>(to_int(tok[2], lineno));
            bv.part_b = static_cast<int>(to_int(tok[3], lineno));
            if (bv.part_a == bv.part_b) throw ParseError("boundary vertex needs two distinct parts", lineno);
            std::optional<double>* fracs[3] = {&bv.f_c, &bv.f_a, &bv.f_b};
            for (std::size_t f = 4; f < tok.size(); ++f) {
                const double v = to_real(tok[f], lineno);
                if (v < 0.0 || v > 1.0) throw ParseError("fraction '" + tok[f] + "' outside [0,1]", lineno);
                *fracs[f - 4] = v;
            }
            pb.partition.boundary.push_back(bv);
        } else if (kw == "parts") {
            need(2, std::size_t(-1));
            for (std::size_t f = 1; f < tok.size(); ++f)
                pb.partition.declared_parts.push_back(static_cast<int>(to_int(tok[f], lineno)));
        } else if (kw == "window") {
            need(4, 4);
            t1 = to_real(tok[1], lineno);
            t2 = to_real(tok[2], lineno);
            h = to_real(tok[3], lineno);
        } else if (kw == "impedance") {
            need(3, 3);
            if (tok[1] == "const") {
                pb.config.impedance = ImpedanceSpec<double>::constant_value(to_real(tok[2], lineno));
                pb.impedance_file.reset();
            } else if (tok[1] == "samples") {
                std::filesystem::path file(tok[2]);
                if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
                auto [t, z] = read_two_column_csv(read_file(file));
                pb.config.impedance = ImpedanceSpec<double>::sampled(std::move(t), std::move(z));
                pb.impedance_file = tok[2];
            } else {
                throw ParseError("expected 'impedance const <Z>' or 'impedance samples <file>'", lineno);
            }
        } else if (kw == "delay") {
            need(2, 2);
            const long long v = to_int(tok[1], lineno);
            if (v < 1) throw ParseError("delay must be at least 1", lineno);
            pb.config.delay = static_cast<int>(v);
        } else if (kw == "tol") {
            need(2, 2);
            pb.config.tol = to_real(tok[1], lineno);
            if (!(pb.config.tol > 0)) throw ParseError("tol must be positive", lineno);
        } else if (kw == "max_sweeps") {
            need(2, 2);
            const long long v = to_int(tok[1], lineno);
            if (v < 1) throw ParseError("max_sweeps must be at least 1", lineno);
            pb.config.max_sweeps = static_cast<int>(v);
        } else if (kw == "init") {
            need(2, 2);
            if (tok[1] == "zero")
                pb.config.init = InitialWaveformPolicy::Zero;
            else if (tok[1] == "flat_x0")
                pb.config.init = InitialWaveformPolicy::FlatX0;
            else
                throw ParseError("init must be 'zero' or 'flat_x0'", lineno);
        } else if (kw == "divergence_cap") {
            need(2, 2);
            pb.config.divergence_cap = to_real(tok[1], lineno);
            if (!(pb.config.divergence_cap > 0)) throw ParseError("divergence_cap must be positive", lineno);
        } else {
            throw ParseError("unknown keyword '" + kw + "'", lineno);
        }
    }

    if (!n) throw ParseError("missing 'system n=<int>' line", 0);
    if (pb.system.C.empty()) throw ParseError("empty C matrix section", 0);
    if (pb.system.A.empty()) throw ParseError("empty A matrix section", 0);
    if (t1) {
        try {
            pb.config.grid = TimeGridd(*t1, *t2, *h);
        } catch (const Error& e) {
            throw ParseError(std::string("window: ") + e.what(), 0);
        }
    }
    return pb;
}

Problem load_problem(const std::filesystem::path& path) {
    return parse_problem(read_file(path), path.parent_path());
}

std::string write_problem(const Problem& pb) {
    const auto& sys = pb.system;
    std::ostringstream os;
    os << "system n=" << sys.n << "\n";
    for (const auto& [key, v] : sys.C.entries()) os << "C " << key.first << " " << key.second << " " << format_real(v) << "\n";
    for (const auto& [key, v] : sys.A.entries()) os << "A " << key.first << " " << key.second << " " << format_real(v) << "\n";
    for (Index i = 0; i < sys.n; ++i)
        if (sys.b[i] != 0.0) os << "b " << i << " " << format_real(sys.b[i]) << "\n";
    for (Index i = 0; i < sys.n; ++i)
        if (sys.x0[i] != 0.0) os << "x0 " << i << " " << format_real(sys.x0[i]) << "\n";
    if (!pb.partition.declared_parts.empty()) {
        os << "parts";
        for (int p : pb.partition.declared_parts) os << " " << p;
        os << "\n";
    }
    for (const auto& [v, part] : pb.partition.interior) os << "part " << v << " " << part << "\n";
    for (const auto& bv : pb.partition.boundary) {
        os << "boundary " << bv.vertex << " " << bv.part_a << " " << bv.part_b;
        // Fractions are positional; stop at the first absent one.
        for (const auto* f : {&bv.f_c, &bv.f_a, &bv.f_b}) {
            if (!*f) break;
            os << " " << format_real(**f);
        }
        os << "\n";
    }
    const auto& cfg = pb.config;
    os << "window " << format_real(cfg.grid.t_start()) << " " << format_real(cfg.grid.t_end()) << " "
       << format_real(cfg.grid.step()) << "\n";
    if (pb.impedance_file)
        os << "impedance samples " << *pb.impedance_file << "\n";
    else
        os << "impedance const " << format_real(cfg.impedance.constant) << "\n";
    os << "delay " << cfg.delay << "\n";
    os << "tol " << format_real(cfg.tol) << "\n";
    os << "max_sweeps " << cfg.max_sweeps << "\n";
    os << "init " << (cfg.init == InitialWaveformPolicy::FlatX0 ? "flat_x0" : "zero") << "\n";
    os << "divergence_cap " << format_real(cfg.divergence_cap) << "\n";
    return os.str();
}

Problem demo_problem() {
    Problem pb;
    auto& sys = pb.system;
    sys.n = 1;
    sys.C = SymMatrixd(1);
    sys.C.insert(0, 0, 3.0);
    sys.A = SymMatrixd(1);
    sys.A.insert(0, 0, 1.5);
    sys.b = Eigen::VectorXd::Constant(1, 3.0);
    sys.x0 = Eigen::VectorXd::Zero(1);
    const double third = 1.0 / 3.0;
    pb.partition.boundary.push_back({0, 1, 2, third, third, third});
    pb.config.grid = TimeGridd(0.0, 1.0, 0.01);
    pb.config.impedance = ImpedanceSpec<double>::constant_value(1.5);
    pb.config.delay = 1;
    pb.config.tol = 1e-9;
    // At Z=1.5, h=0.01 the iteration contracts by about 0.99 per sweep and needs ~2100 sweeps.
    pb.config.max_sweeps = 5000;
    return pb;
}

std::string waveform_csv(const Waveformd& wf, std::string_view value_name) {
    std::string out = "t,";
    out += value_name;
    out += "\n";
    for (std::size_t m = 0; m < wf.size(); ++m) {
        out += format_real(wf.grid().time(m));
        out += ",";
        out += format_real(wf[m]);
        out += "\n";
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> read_two_column_csv(std::string_view text) {
    std::vector<double> t;
    std::vector<double> v;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.rfind("t,", 0) != 0) throw ParseError("CSV header must start with 't,'", lineno);
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ParseError("CSV row needs exactly two columns", lineno);
        t.push_back(to_real(line.substr(0, comma), lineno));
        v.push_back(to_real(line.substr(comma + 1), lineno));
    }
    if (header) throw ParseError("CSV is empty", 0);
    return {std::move(t), std::move(v)};
}

Waveformd read_waveform_csv(std::string_view text, const TimeGridd& grid) {
    auto [t, v] = read_two_column_csv(text);
    if (t.size() != grid.n_points()) throw GridMismatch("CSV has " + std::to_string(t.size()) + " rows, grid has " + std::to_string(grid.n_points()));
    const double slack = 1e-12 * (grid.t_end() - grid.t_start());
    Eigen::ArrayXd s(static_cast<Index>(v.size()));
    for (std::size_t m = 0; m < t.size(); ++m) {
        if (std::abs(t[m] - grid.time(m)) > slack) throw GridMismatch("CSV row " + std::to_string(m) + " is off the grid");
        s[static_cast<Index>(m)] = v[m];
    }
    return Waveformd(grid, std::move(s));
}

}  // namespace wtm

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wtm/cli.hpp"
#include "wtm/problem_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = wtm::cli::main(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("wtm_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string data(const std::string& name) { return (fs::path(WTM_DATA_DIR) / name).string(); }

std::string last_line(const std::string& text) {
    auto trimmed = text.substr(0, text.find_last_not_of('\n') + 1);
    return trimmed.substr(trimmed.rfind('\n') + 1);
}

}  // namespace

TEST_CASE("run on the demo file") {
    auto dir = scratch("run");
    auto r = call({"run", data("demo.wtm"), "--out", dir.string()});
    CHECK(r.code == 0);
    const auto conv = slurp(dir / "convergence.csv");
    CHECK(conv.rfind("sweep,successive_diff\n", 0) == 0);
    const auto last = last_line(conv);
    CHECK(std::stod(last.substr(last.find(',') + 1)) <= 1e-9);
    CHECK(slurp(dir / "solution.csv").rfind("t,v0\n0,0\n", 0) == 0);
    CHECK(slurp(dir / "twins.csv").rfind("wtl,vertex,part_a,part_b,mismatch\n0,0,1,2,", 0) == 0);

    auto again = scratch("run2");
    CHECK(call({"run", data("demo.wtm"), "--out", again.string()}).code == 0);
    for (auto f : {"solution.csv", "convergence.csv", "twins.csv"}) CHECK(slurp(dir / f) == slurp(again / f));
}

TEST_CASE("run exit codes") {
    auto dir = scratch("codes");
    auto bad = call({"run", data("not_spd.wtm"), "--out", dir.string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("SPD check") != std::string::npos);

    CHECK(call({"run", data("demo.wtm"), "--max-sweeps", "1", "--out", dir.string()}).code == 2);
    CHECK(call({"run", data("diverging.wtm"), "--out", dir.string()}).code == 3);
    CHECK(call({"run", "/nonexistent.wtm"}).code == 1);
    CHECK(call({"run", data("demo.wtm"), "--bogus"}).code == 1);
    CHECK(call({}).code == 1);
}

TEST_CASE("demo subcommand") {
    auto dir = scratch("demo");
    auto r = call({"demo", "--out", dir.string()});
    CHECK(r.code == 0);
    const auto conv = slurp(dir / "convergence.csv");
    CHECK(conv.rfind("sweep,successive_diff,ref_err_v0_p1,ref_err_v0_p2\n", 0) == 0);
    std::istringstream row(last_line(conv));
    std::string cell;
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    while (std::getline(row, cell, ',')) CHECK(std::stod(cell) < 1e-6);

    // The written problem file re-parses to the generator's system.
    auto pb = wtm::load_problem(dir / "demo.wtm");
    CHECK(pb.system == wtm::demo_problem().system);

    CHECK(call({"demo", "--z", "0.5", "--out", dir.string()}).code == 0);
    auto neg = call({"demo", "--z", "-1", "--out", dir.string()});
    CHECK(neg.code == 1);
    CHECK(neg.err.find("Z(t) > 0") != std::string::npos);
}

TEST_CASE("WTM_OUT sets the default output directory") {
    auto dir = scratch("env");
    setenv("WTM_OUT", dir.string().c_str(), 1);
    CHECK(call({"run", data("demo.wtm")}).code == 0);
    unsetenv("WTM_OUT");
    CHECK(fs::exists(dir / "solution.csv"));
}

TEST_CASE("validate subcommand") {
    auto ok = call({"validate", data("demo.wtm")});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("all checks passed") != std::string::npos);
    CHECK(ok.out.find("part 2 A SNND check: pass") != std::string::npos);

    auto bb = call({"validate", data("boundary_edge.wtm")});
    CHECK(bb.code == 1);
    CHECK(bb.err.find("partition legality") != std::string::npos);

    auto forced = call({"validate", data("chain10.wtm"), "--fraction", "0"});
    CHECK(forced.code == 1);
    CHECK(forced.err.find("SNND check") != std::string::npos);
    CHECK(call({"validate", data("chain10.wtm")}).code == 0);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "mcmfb/cli.hpp"
#include "mcmfb/io.hpp"
#include "mcmfb/radial.hpp"

using namespace mcmfb;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path sandbox(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "mcmfb-tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string quick_catenoid_cfg(int n = 100, double t_end = 0.01) {
    std::ostringstream ss;
    ss << "[problem]\nkind = exterior\nbeta = 0.5\nseed = catenoid\n"
       << "[grid]\nn_nodes = " << n << "\nr_ref = 3\n"
       << "[time]\nt_end = " << t_end << "\nsnapshot_every = 5\n"
       << "[boundary]\nouter_bc = pinned\n";
    return ss.str();
}

} // namespace

TEST_CASE("format_double: shortest round-trip") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> U(-1e3, 1e3);
    for (int i = 0; i < 2000; ++i) {
        double v = U(rng) * std::pow(10.0, int(rng() % 30) - 15);
        std::string s = io::format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(io::format_double(1.0) == "1");
}

TEST_CASE("config parsing: values, unknown keys, invariants") {
    io::Config cfg = io::parse_config(
        "[problem]\nkind = lens\nbeta = 0.25\nr0 = 2\n[grid]\nn_nodes = 64\n");
    CHECK(cfg.kind == "lens");
    CHECK(cfg.beta == 0.25);
    CHECK(cfg.n_nodes == 64);

    CHECK_THROWS_AS(io::parse_config("[problem]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(io::parse_config("[weird]\nkind = lens\n"), ConfigError);
    CHECK_THROWS_AS(io::parse_config("kind = lens\n"), ConfigError);
    try {
        io::parse_config("[problem]\nkind = lens\nbeta = 1.5\n");
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("0 < beta < 1") != std::string::npos);
    }

    for (const char* name :
         {"catenoid", "lens-extinct", "lens-prop125", "planar-symmetric"}) {
        CHECK(io::is_preset(name));
        io::Config c = io::parse_config(io::preset_text(name));
        CHECK(c.beta > 0.0);
    }
    CHECK_THROWS_AS(io::preset_text("nope"), ConfigError);
}

TEST_CASE("snapshot serialization round-trips bit-exactly") {
    fs::path dir = sandbox("snap");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-2.0, 2.0);

    Snapshot s;
    s.kind = Snapshot::Kind::Radial;
    s.lens = true;
    s.t = 0.012345678901234567;
    s.step = 17;
    s.beta = 0.5;
    s.line = LineGrid::lens_radial(32);
    s.u.resize(32);
    s.phi.resize(32);
    for (int j = 0; j < 32; ++j) {
        s.u[j] = U(rng) * std::pow(2.0, int(rng() % 20) - 10);
        s.phi[j] = s.line.r[j] + 1e-17 * U(rng);
    }
    io::write_snapshot((dir / "a.json").string(), s);
    Snapshot r = io::read_snapshot((dir / "a.json").string());
    CHECK(r.t == s.t);
    CHECK(r.step == s.step);
    for (int j = 0; j < 32; ++j) {
        CHECK(r.u[j] == s.u[j]);
        CHECK(r.phi[j] == s.phi[j]);
    }

    Snapshot p;
    p.kind = Snapshot::Kind::Planar;
    p.t = 1.0 / 3.0;
    p.beta = 0.6;
    p.disk = PolarGrid::disk(16, 32);
    p.f1.resize(p.disk.size());
    p.f2.resize(p.disk.size());
    p.fu.resize(p.disk.size());
    for (int i = 0; i < p.disk.size(); ++i) {
        p.f1[i] = U(rng);
        p.f2[i] = U(rng);
        p.fu[i] = U(rng);
    }
    io::write_snapshot((dir / "b.json").string(), p);
    Snapshot q = io::read_snapshot((dir / "b.json").string());
    for (int i = 0; i < p.disk.size(); ++i) {
        CHECK(q.f1[i] == p.f1[i]);
        CHECK(q.f2[i] == p.f2[i]);
        CHECK(q.fu[i] == p.fu[i]);
    }
}

TEST_CASE("series round-trip and deterministic replay") {
    fs::path dir = sandbox("series");
    fs::path cfgfile = dir / "cfg.txt";
    std::ofstream(cfgfile) << quick_catenoid_cfg();

    CHECK(cli::run_command(cfgfile.string(), (dir / "r1").string()) == 0);
    CHECK(cli::run_command(cfgfile.string(), (dir / "r2").string()) == 0);
    std::string a = slurp(dir / "r1" / "series.csv");
    std::string b = slurp(dir / "r2" / "series.csv");
    CHECK(a == b); // byte-identical replay
    CHECK(a.substr(0, a.find('\n')) == io::kSeriesHeader);

    auto steps = io::read_series((dir / "r1" / "series.csv").string());
    CHECK(steps.size() >= 2);
    for (size_t i = 1; i < steps.size(); ++i) CHECK(steps[i].t > steps[i - 1].t);
}

TEST_CASE("run_command exit codes") {
    fs::path dir = sandbox("codes");
    fs::path bad = dir / "bad.txt";
    std::ofstream(bad) << "[problem]\nkind = lens\nbeta = 1.5\n";
    CHECK(cli::run_command(bad.string(), (dir / "x").string()) == 2);
    CHECK(cli::run_command("no-such-file-or-preset", (dir / "y").string()) == 2);
    CHECK(cli::verify_command((dir / "nothing").string()) == 4);
    CHECK(cli::preset_command("nope") == 2);
    CHECK(cli::converge_command("catenoid", 1, (dir / "c").string()) == 2);
}

TEST_CASE("run_command reports solver errors with exit 3 and a written trace") {
    fs::path dir = sandbox("solver-error");
    fs::path cfgfile = dir / "cfg.txt";
    // extinction threshold below the explicit scheme's reach: the step
    // underflows after the lens has shrunk past every usable radius
    std::ofstream(cfgfile)
        << "[problem]\nkind = lens\nbeta = 0.5\nr0 = 1\nseed = lens\n"
           "[grid]\nn_nodes = 32\n[time]\nt_end = 1\n"
           "[boundary]\nouter_bc = none\n[run]\nextinction_radius = 0\n";
    fs::path run = dir / "run";
    CHECK(cli::run_command(cfgfile.string(), run.string()) == 3);
    io::TraceMeta meta = io::read_trace_json((run / "trace.json").string());
    CHECK(meta.exit_reason.rfind("error(", 0) == 0);
}

TEST_CASE("verify: clean catenoid passes, corrupted snapshot fails first check") {
    fs::path dir = sandbox("verify");
    fs::path cfgfile = dir / "cfg.txt";
    std::ofstream(cfgfile) << quick_catenoid_cfg(100, 0.005);
    fs::path run = dir / "run";
    REQUIRE(cli::run_command(cfgfile.string(), run.string()) == 0);
    CHECK(cli::verify_command(run.string()) == 0);
    CHECK(fs::exists(run / "verify.jsonl"));

    // corrupt one nodal value of the middle snapshot
    io::TraceMeta meta = io::read_trace_json((run / "trace.json").string());
    REQUIRE(meta.snapshot_files.size() >= 2);
    fs::path victim = run / meta.snapshot_files[meta.snapshot_files.size() / 2];
    Snapshot s = io::read_snapshot(victim.string());
    s.u[s.line.n / 2] += 1e-3;
    io::write_snapshot(victim.string(), s);
    CHECK(cli::verify_command(run.string()) == 5);
    // the first failed record is the trace identity
    std::ifstream vj(run / "verify.jsonl");
    std::string line;
    std::string first_fail;
    while (std::getline(vj, line)) {
        if (line.find("\"pass\":false") != std::string::npos) {
            first_fail = line;
            break;
        }
    }
    CHECK(first_fail.find("trace_gh_eq_H") != std::string::npos);
}

TEST_CASE("converge writes orders.csv with shrinking catenoid drift") {
    fs::path dir = sandbox("conv");
    fs::path cfgfile = dir / "cfg.txt";
    std::ofstream(cfgfile) << quick_catenoid_cfg(64, 0.004);
    REQUIRE(cli::converge_command(cfgfile.string(), 2, (dir / "out").string()) == 0);
    std::string orders = slurp(dir / "out" / "orders.csv");
    CHECK(orders.find("catenoid_drift") != std::string::npos);
    CHECK(orders.find("identity_dn_h_nn") != std::string::npos);
    CHECK(orders.find("velocity_law") != std::string::npos);
}

TEST_CASE("plot: catenoid polyline within half a pixel of the closed form") {
    fs::path dir = sandbox("plot");
    fs::path cfgfile = dir / "cfg.txt";
    std::ofstream(cfgfile) << quick_catenoid_cfg(200, 0.002);
    fs::path run = dir / "run";
    REQUIRE(cli::run_command(cfgfile.string(), run.string()) == 0);
    REQUIRE(cli::plot_command(run.string(), false) == 0);

    // the last snapshot's SVG
    io::TraceMeta meta = io::read_trace_json((run / "trace.json").string());
    Snapshot last = io::read_snapshot((run / meta.snapshot_files.back()).string());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "profile_%06d.svg", last.step);
    std::string svg = slurp(run / buf);

    // recompute the viewport transform the writer uses
    double xmax = 0.0, ymax = 0.0, ymin = 0.0;
    for (size_t j = 0; j < last.u.size(); ++j) {
        xmax = std::max(xmax, last.phi[j]);
        ymax = std::max(ymax, last.u[j]);
        ymin = std::min(ymin, last.u[j]);
    }
    double X0 = 0.0, X1 = xmax * 1.05 + 1e-12;
    double Y0 = ymin - 0.05 * (ymax - ymin), Y1 = ymax + 0.05 * (ymax - ymin);
    auto inv_x = [&](double px) { return X0 + (px - 40.0) / 720.0 * (X1 - X0); };
    auto map_y = [&](double y) { return 600.0 - 40.0 - (y - Y0) / (Y1 - Y0) * 520.0; };

    std::smatch m;
    std::regex poly("<polyline[^>]*stroke=\"#1f3f9f\" points=\"([^\"]*)\"");
    REQUIRE(std::regex_search(svg, m, poly));
    std::stringstream pts(m[1]);
    std::string pair;
    int checked = 0;
    double worst = 0.0;
    while (pts >> pair) {
        size_t comma = pair.find(',');
        double px = std::stod(pair.substr(0, comma));
        double py = std::stod(pair.substr(comma + 1));
        double rho = inv_x(px);
        if (rho < 0.9) continue;
        double py_exact = map_y(radial::catenoid_profile(rho));
        worst = std::max(worst, std::abs(py - py_exact));
        ++checked;
    }
    CHECK(checked > 100);
    CHECK(worst <= 0.5);
}

TEST_CASE("plot --triple writes mirrored curves and the junction mesh") {
    fs::path dir = sandbox("triple");
    fs::path cfgfile = dir / "cfg.txt";
    std::ofstream(cfgfile)
        << "[problem]\nkind = lens\nbeta = 0.5\nr0 = 1\nseed = lens\n"
           "[grid]\nn_nodes = 64\n[time]\nt_end = 0.003\nsnapshot_every = 100\n"
           "[boundary]\nouter_bc = none\n";
    fs::path run = dir / "run";
    REQUIRE(cli::run_command(cfgfile.string(), run.string()) == 0);
    REQUIRE(cli::plot_command(run.string(), true) == 0);

    io::TraceMeta meta = io::read_trace_json((run / "trace.json").string());
    Snapshot last = io::read_snapshot((run / meta.snapshot_files.back()).string());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "profile_%06d.svg", last.step);
    std::string svg = slurp(run / buf);
    CHECK(svg.find("#9f1f3f") != std::string::npos); // mirror curve present
    CHECK(svg.find("#1f9f3f") != std::string::npos); // plane segment present

    std::string mesh = slurp(run / "triple_junction.txt");
    CHECK(mesh.rfind("mcm-tj v1\n", 0) == 0);
    // vertex and 1-based face lines parse
    std::stringstream ms(mesh);
    std::string line;
    std::getline(ms, line);
    int nv = 0, nf = 0;
    int max_index = 0;
    while (std::getline(ms, line)) {
        if (line.rfind("v ", 0) == 0) ++nv;
        else if (line.rfind("f ", 0) == 0) {
            int a, b, c;
            REQUIRE(std::sscanf(line.c_str(), "f %d %d %d", &a, &b, &c) == 3);
            CHECK(a >= 1);
            max_index = std::max({max_index, a, b, c});
            ++nf;
        }
    }
    CHECK(nv > 0);
    CHECK(nf > 0);
    CHECK(max_index <= nv);
}

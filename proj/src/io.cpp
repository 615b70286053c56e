#include "mcmfb/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mcmfb/errors.hpp"

namespace mcmfb::io {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void Config::validate() const {
    if (kind != "lens" && kind != "exterior" && kind != "planar")
        throw ConfigError("kind must be lens, exterior, or planar (got '" + kind + "')");
    if (!(beta > 0.0 && beta < 1.0))
        throw ConfigError("0 < beta < 1 required, got " + format_double(beta));
    if (!(r0 > 0.0)) throw ConfigError("r0 > 0 required");
    if (seed != "lens" && seed != "catenoid")
        throw ConfigError("seed must be lens or catenoid");
    if (seed == "catenoid" && kind != "exterior")
        throw ConfigError("the catenoid seed lives on the exterior topology");
    if (kind == "exterior" && !(r_ref > 1.0)) throw ConfigError("r_ref > 1 required");
    if (!(cfl_sigma > 0.0 && cfl_sigma <= 0.5))
        throw ConfigError("0 < cfl_sigma <= 0.5 required");
    if (t_end < 0.0) throw ConfigError("t_end >= 0 required");
    if (snapshot_every < 0) throw ConfigError("snapshot_every >= 0 required");
    if (fixed_dt < 0.0) throw ConfigError("fixed_dt >= 0 required");
    if (kind == "planar" && (n_r < 16 || n_theta < 32 || n_theta % 2 != 0))
        throw ConfigError("planar grids need n_r >= 16 and even n_theta >= 32");
    if (kind != "planar" && n_nodes < 16) throw ConfigError("n_nodes >= 16 required");
    if (outer_bc != "pinned" && outer_bc != "vertical_wall" && outer_bc != "none")
        throw ConfigError("outer_bc must be pinned, vertical_wall, or none");
}

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"problem", {"kind", "beta", "r0", "seed"}},
    {"grid", {"n_nodes", "r_ref", "n_r", "n_theta"}},
    {"time", {"cfl_sigma", "t_end", "fixed_dt", "snapshot_every"}},
    {"boundary", {"outer_bc"}},
    {"solver", {"newton_tol", "newton_max_iters", "min_jacobian"}},
    {"run", {"extinction_radius", "svg"}},
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_num(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' needs a number, got '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    double d = to_num(key, v);
    if (d != std::floor(d)) throw ConfigError("key '" + key + "' needs an integer");
    return static_cast<int>(d);
}

} // namespace

Config parse_config(const std::string& text) {
    Config cfg;
    cfg.echo = text;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("bad section header at line " + std::to_string(lineno));
            section = trim(t.substr(1, t.size() - 2));
            if (!kSchema.count(section))
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(lineno));
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (section.empty()) throw ConfigError("key '" + key + "' outside any section");
        if (!kSchema.at(section).count(key))
            throw ConfigError("unknown key '" + key + "' in section [" + section + "]");

        if (key == "kind") cfg.kind = val;
        else if (key == "beta") cfg.beta = to_num(key, val);
        else if (key == "r0") cfg.r0 = to_num(key, val);
        else if (key == "seed") cfg.seed = val;
        else if (key == "n_nodes") cfg.n_nodes = to_int(key, val);
        else if (key == "r_ref") cfg.r_ref = to_num(key, val);
        else if (key == "n_r") cfg.n_r = to_int(key, val);
        else if (key == "n_theta") cfg.n_theta = to_int(key, val);
        else if (key == "cfl_sigma") cfg.cfl_sigma = to_num(key, val);
        else if (key == "t_end") cfg.t_end = to_num(key, val);
        else if (key == "fixed_dt") cfg.fixed_dt = to_num(key, val);
        else if (key == "snapshot_every") cfg.snapshot_every = to_int(key, val);
        else if (key == "outer_bc") cfg.outer_bc = val;
        else if (key == "newton_tol") cfg.newton_tol = to_num(key, val);
        else if (key == "newton_max_iters") cfg.newton_max_iters = to_int(key, val);
        else if (key == "min_jacobian") cfg.min_jacobian = to_num(key, val);
        else if (key == "extinction_radius") cfg.extinction_radius = to_num(key, val);
        else if (key == "svg") {
            if (val == "true") cfg.svg = true;
            else if (val == "false") cfg.svg = false;
            else throw ConfigError("key 'svg' needs true or false");
        }
    }
    cfg.validate();
    return cfg;
}

std::string preset_text(const std::string& name) {
    if (name == "catenoid")
        return "# stationary half-catenoid over the exterior domain\n"
               "[problem]\nkind = exterior\nbeta = 0.5\nseed = catenoid\n"
               "[grid]\nn_nodes = 200\nr_ref = 3\n"
               "[time]\ncfl_sigma = 0.4\nt_end = 1\nsnapshot_every = 20000\n"
               "[boundary]\nouter_bc = pinned\n";
    if (name == "lens-extinct")
        return "# concave lens shrinking to extinction\n"
               "[problem]\nkind = lens\nbeta = 0.5\nr0 = 1\nseed = lens\n"
               "[grid]\nn_nodes = 200\n"
               "[time]\ncfl_sigma = 0.4\nt_end = 1\nsnapshot_every = 20000\n"
               "[boundary]\nouter_bc = none\n";
    if (name == "lens-prop125")
        return "# shallow lens in the v <= sqrt(3) regime\n"
               "[problem]\nkind = lens\nbeta = 0.6\nr0 = 1\nseed = lens\n"
               "[grid]\nn_nodes = 200\n"
               "[time]\ncfl_sigma = 0.4\nt_end = 1\nsnapshot_every = 20000\n"
               "[boundary]\nouter_bc = none\n";
    if (name == "planar-symmetric")
        return "# two-dimensional solver on the lens seed\n"
               "[problem]\nkind = planar\nbeta = 0.5\nr0 = 1\nseed = lens\n"
               "[grid]\nn_r = 48\nn_theta = 96\n"
               "[time]\ncfl_sigma = 0.4\nt_end = 0.02\nsnapshot_every = 1000\n"
               "[boundary]\nouter_bc = none\n";
    throw ConfigError("unknown preset '" + name +
                      "' (catenoid, lens-extinct, lens-prop125, planar-symmetric)");
}

bool is_preset(const std::string& name) {
    return name == "catenoid" || name == "lens-extinct" || name == "lens-prop125" ||
           name == "planar-symmetric";
}

Config load_config(const std::string& path_or_preset) {
    namespace fs = std::filesystem;
    if (fs::exists(path_or_preset)) {
        std::ifstream in(path_or_preset);
        if (!in) throw IoError("cannot read config file " + path_or_preset);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str());
    }
    if (is_preset(path_or_preset)) return parse_config(preset_text(path_or_preset));
    throw ConfigError("no such config file or preset: " + path_or_preset);
}

// --- emitters --------------------------------------------------------------

const char* kSeriesHeader =
    "t,dt,radius,sup_v,H_min,H_max,h_eig_max,angle_res,orth_res,p_min,cont_fn";

void write_series(const std::string& path, const std::vector<StepRecord>& steps) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << kSeriesHeader << "\n";
    for (const StepRecord& s : steps) {
        out << format_double(s.t) << ',' << format_double(s.dt) << ','
            << format_double(s.radius) << ',' << format_double(s.sup_v) << ','
            << format_double(s.H_min) << ',' << format_double(s.H_max) << ','
            << format_double(s.h_eig_max) << ',' << format_double(s.angle_res) << ','
            << format_double(s.orth_res) << ',' << format_double(s.p_min) << ','
            << format_double(s.cont_fn) << "\n";
    }
}

std::vector<StepRecord> read_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line != kSeriesHeader)
        throw IoError("bad series header in " + path);
    std::vector<StepRecord> out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        StepRecord r;
        double* cols[11] = {&r.t,        &r.dt,    &r.radius,    &r.sup_v,
                            &r.H_min,    &r.H_max, &r.h_eig_max, &r.angle_res,
                            &r.orth_res, &r.p_min, &r.cont_fn};
        std::stringstream ss(line);
        std::string tok;
        for (int i = 0; i < 11; ++i) {
            if (!std::getline(ss, tok, ',')) throw IoError("short row in " + path);
            *cols[i] = std::strtod(tok.c_str(), nullptr);
        }
        out.push_back(r);
    }
    return out;
}

namespace {

json grid_to_json(const Snapshot& s) {
    json g;
    if (s.kind == Snapshot::Kind::Radial) {
        g["kind"] = s.lens ? "lens" : "uniform";
        g["n"] = s.line.n;
        if (!s.lens) {
            g["a"] = s.line.r.front();
            g["b"] = s.line.r.back();
        }
    } else {
        g["n_r"] = s.disk.n_r;
        g["n_theta"] = s.disk.n_theta;
    }
    return g;
}

} // namespace

void write_snapshot(const std::string& path, const Snapshot& snap) {
    json j;
    j["format"] = "mcm-snap v1";
    j["t"] = snap.t;
    j["step"] = snap.step;
    j["beta"] = snap.beta;
    j["grid"] = grid_to_json(snap);
    if (snap.kind == Snapshot::Kind::Radial) {
        j["kind"] = "radial";
        j["u"] = snap.u;
        j["phi"] = snap.phi;
    } else {
        j["kind"] = "planar";
        j["phi1"] = snap.f1;
        j["phi2"] = snap.f2;
        j["u"] = snap.fu;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(1) << "\n";
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("bad snapshot json in " + path + ": " + e.what());
    }
    if (j.value("format", "") != "mcm-snap v1")
        throw IoError("unknown snapshot format in " + path);
    Snapshot s;
    s.t = j.at("t").get<double>();
    s.step = j.at("step").get<int>();
    s.beta = j.at("beta").get<double>();
    if (j.at("kind") == "radial") {
        s.kind = Snapshot::Kind::Radial;
        const json& g = j.at("grid");
        if (g.at("kind") == "lens") {
            s.lens = true;
            s.line = LineGrid::lens_radial(g.at("n").get<int>());
        } else {
            s.lens = false;
            s.line = LineGrid::uniform(g.at("a").get<double>(), g.at("b").get<double>(),
                                       g.at("n").get<int>());
        }
        s.u = j.at("u").get<std::vector<double>>();
        s.phi = j.at("phi").get<std::vector<double>>();
        if (static_cast<int>(s.u.size()) != s.line.n)
            throw IoError("field/grid size mismatch in " + path);
    } else {
        s.kind = Snapshot::Kind::Planar;
        const json& g = j.at("grid");
        s.disk = PolarGrid::disk(g.at("n_r").get<int>(), g.at("n_theta").get<int>());
        s.f1 = j.at("phi1").get<std::vector<double>>();
        s.f2 = j.at("phi2").get<std::vector<double>>();
        s.fu = j.at("u").get<std::vector<double>>();
        if (static_cast<int>(s.f1.size()) != s.disk.size())
            throw IoError("field/grid size mismatch in " + path);
    }
    return s;
}

void write_trace_json(const std::string& path, const RunTrace& trace,
                      const std::string& config_echo,
                      const std::vector<std::string>& snapshot_files) {
    json j;
    j["config"] = config_echo;
    j["exit_reason"] = trace.exit_reason;
    j["error_detail"] = trace.error_detail;
    j["n_steps"] = trace.n_steps;
    j["snapshots"] = snapshot_files;
    if (!trace.steps.empty()) {
        json agg;
        double sup_v = 0.0, h_eig = -1e300;
        for (const StepRecord& s : trace.steps) {
            sup_v = std::max(sup_v, s.sup_v);
            h_eig = std::max(h_eig, s.h_eig_max);
        }
        agg["t_final"] = trace.steps.back().t;
        agg["radius_final"] = trace.steps.back().radius;
        agg["sup_v_run"] = sup_v;
        agg["h_eig_max_run"] = h_eig;
        agg["cont_fn_first"] = trace.steps.front().cont_fn;
        agg["cont_fn_last"] = trace.steps.back().cont_fn;
        j["aggregates"] = agg;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(1) << "\n";
}

TraceMeta read_trace_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("bad trace json: " + std::string(e.what()));
    }
    TraceMeta m;
    m.exit_reason = j.value("exit_reason", "");
    m.error_detail = j.value("error_detail", "");
    m.n_steps = j.value("n_steps", 0);
    for (const auto& f : j.value("snapshots", json::array()))
        m.snapshot_files.push_back(f.get<std::string>());
    return m;
}

void write_mesh(const std::string& path, const std::vector<seed::TriangleMesh>& parts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "mcm-tj v1\n";
    int base = 0;
    for (const seed::TriangleMesh& m : parts) {
        for (const Vec3& v : m.vertices)
            out << "v " << format_double(v.x) << ' ' << format_double(v.y) << ' '
                << format_double(v.z) << "\n";
        for (const auto& f : m.faces)
            out << "f " << base + f[0] + 1 << ' ' << base + f[1] + 1 << ' '
                << base + f[2] + 1 << "\n";
        base += static_cast<int>(m.vertices.size());
    }
}

namespace {

struct SvgMapper {
    double xmin, xmax, ymin, ymax;
    double W = 800.0, H = 600.0, pad = 40.0;
    double sx(double x) const { return pad + (x - xmin) / (xmax - xmin) * (W - 2 * pad); }
    double sy(double y) const {
        return H - pad - (y - ymin) / (ymax - ymin) * (H - 2 * pad);
    }
};

void polyline(std::ostream& out, const SvgMapper& m, const std::vector<Vec2>& pts,
              const char* color) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (size_t i = 0; i < pts.size(); ++i) {
        if (i) out << ' ';
        out << format_double(m.sx(pts[i].x)) << ',' << format_double(m.sy(pts[i].y));
    }
    out << "\"/>\n";
}

} // namespace

void write_profile_svg(const std::string& path, const Snapshot& snap, bool triple) {
    std::vector<Vec2> profile;
    double R = 0.0;
    if (snap.kind == Snapshot::Kind::Radial) {
        for (size_t j = 0; j < snap.u.size(); ++j)
            profile.push_back({snap.phi[j], snap.u[j]});
        R = snap.lens ? snap.phi.back() : snap.phi.front();
    } else {
        // theta = 0 cross-section of the planar state
        for (int j = 0; j < snap.disk.n_r; ++j) {
            size_t i = snap.disk.idx(j, 0);
            profile.push_back({std::hypot(snap.f1[i], snap.f2[i]), snap.fu[i]});
        }
        R = profile.back().x;
    }
    double xmax = 0.0, ymax = 0.0, ymin = 0.0;
    for (const Vec2& p : profile) {
        xmax = std::max(xmax, p.x);
        ymax = std::max(ymax, p.y);
        ymin = std::min(ymin, p.y);
    }
    if (triple) {
        ymin = std::min(ymin, -ymax);
        xmax = std::max(xmax, 1.5 * R);
    }
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
    SvgMapper m{0.0, xmax * 1.05 + 1e-12, ymin - 0.05 * (ymax - ymin),
                ymax + 0.05 * (ymax - ymin)};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
           "viewBox=\"0 0 800 600\">\n";
    out << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
    out << "<line x1=\"" << format_double(m.sx(0.0)) << "\" y1=\""
        << format_double(m.sy(0.0)) << "\" x2=\"" << format_double(m.sx(m.xmax))
        << "\" y2=\"" << format_double(m.sy(0.0)) << "\" stroke=\"#bbbbbb\"/>\n";
    polyline(out, m, profile, "#1f3f9f");
    if (triple) {
        std::vector<Vec2> mirror;
        for (const Vec2& p : profile) mirror.push_back({p.x, -p.y});
        polyline(out, m, mirror, "#9f1f3f");
        std::vector<Vec2> plane{{R, 0.0}, {1.5 * R, 0.0}};
        polyline(out, m, plane, "#1f9f3f");
    }
    out << "</svg>\n";
}

} // namespace mcmfb::io

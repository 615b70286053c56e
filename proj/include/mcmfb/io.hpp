#pragma once

#include <string>
#include <vector>

#include "mcmfb/seed.hpp"
#include "mcmfb/trace.hpp"

namespace mcmfb::io {

/// Shortest round-trip decimal of a binary64 (exact replay, diffable files).
std::string format_double(double v);

/// Flat key-value run configuration ([section] key = value; unknown keys are
/// errors).
struct Config {
    // [problem]
    std::string kind = "lens"; // lens | exterior | planar
    double beta = 0.5;
    double r0 = 1.0;
    std::string seed = "lens"; // lens | catenoid
    // [grid]
    int n_nodes = 200;
    double r_ref = 3.0;
    int n_r = 48;
    int n_theta = 96;
    // [time]
    double cfl_sigma = 0.4;
    double t_end = 1.0;
    double fixed_dt = 0.0; // 0 = adaptive
    int snapshot_every = 0;
    // [boundary]
    std::string outer_bc = "pinned"; // pinned | vertical_wall | none
    // [solver]
    double newton_tol = 1e-12;
    int newton_max_iters = 20;
    double min_jacobian = 0.05;
    // [run]
    double extinction_radius = -1.0;
    bool svg = false;

    std::string echo; // original text as parsed
    void validate() const;
};

Config parse_config(const std::string& text);
Config load_config(const std::string& path_or_preset);

/// Canonical config text of a named preset (catenoid, lens-extinct,
/// lens-prop125, planar-symmetric).
std::string preset_text(const std::string& name);
bool is_preset(const std::string& name);

// --- file emitters -------------------------------------------------------

extern const char* kSeriesHeader;

void write_series(const std::string& path, const std::vector<StepRecord>& steps);
std::vector<StepRecord> read_series(const std::string& path);

void write_snapshot(const std::string& path, const Snapshot& snap);
Snapshot read_snapshot(const std::string& path);

void write_trace_json(const std::string& path, const RunTrace& trace,
                      const std::string& config_echo,
                      const std::vector<std::string>& snapshot_files);
struct TraceMeta {
    std::string exit_reason;
    std::string error_detail;
    int n_steps = 0;
    std::vector<std::string> snapshot_files;
};
TraceMeta read_trace_json(const std::string& path);

/// Indexed triangle meshes, plain text: header "mcm-tj v1", then vertex lines
/// "v x y z" and 1-based face lines "f i j k".
void write_mesh(const std::string& path, const std::vector<seed::TriangleMesh>& parts);

/// Radial profile curve (and, with triple=true, its mirror and the plane
/// segment). Planar snapshots draw the boundary curve and the theta=0 radial
/// cross-section.
void write_profile_svg(const std::string& path, const Snapshot& snap, bool triple);

} // namespace mcmfb::io

#pragma once

#include <string>
#include <vector>

#include "mcmfb/grid.hpp"

namespace mcmfb {

/// One row of per-step diagnostics (the series.csv schema).
struct StepRecord {
    double t = 0.0;
    double dt = 0.0;
    double radius = 0.0;     // boundary radius of D(t)
    double sup_v = 0.0;      // max of sqrt(1+|Dw|^2) on the reconstructed graph
    double H_min = 0.0;
    double H_max = 0.0;
    double h_eig_max = 0.0;  // largest principal curvature (concavity monitor)
    double angle_res = 0.0;  // |beta*sqrt(phi_r^2+u_r^2) - phi_r| at contact / |N^3-beta|
    double orth_res = 0.0;   // max |<D_tau phi, d_n phi>| (0 for radial states)
    double p_min = 0.0;      // support function minimum (origin at 0)
    double cont_fn = 0.0;    // sup_Gamma(|h|_g + |grad^tan h^tan|_g)
};

/// Stored solver state at one time, either radial (u, phi on a line grid) or
/// planar (phi^1, phi^2, u on the polar disk grid).
struct Snapshot {
    enum class Kind { Radial, Planar };
    Kind kind = Kind::Radial;
    double t = 0.0;
    int step = 0;

    // radial payload
    LineGrid line;
    bool lens = false;
    std::vector<double> u;
    std::vector<double> phi;

    // planar payload
    PolarGrid disk;
    std::vector<double> f1, f2, fu;

    double beta = 0.5;
};

/// Full run record: config echo, per-step rows, snapshots, exit reason.
struct RunTrace {
    std::string config_echo;
    std::vector<StepRecord> steps;
    std::vector<Snapshot> snapshots;
    std::string exit_reason; // "t_end" | "extinction" | "error(Code)"
    std::string error_detail;
    int n_steps = 0;

    bool ok() const { return exit_reason == "t_end" || exit_reason == "extinction"; }
};

} // namespace mcmfb

// potentials.hpp — interaction potentials V (boson-boson) and W
// (boson-impurity) with the standing-assumption report.

#pragma once

#include <map>
#include <string>

#include "core/field.hpp"

namespace polaron {

enum class PotentialRole { V, W };

struct PotentialSpec {
    enum class Family { Gaussian, CosineBump };
    Family family = Family::Gaussian;
    double amplitude = 1.0;
    double width = 1.0;  // sigma for gaussian, radius for cosine-bump
    PotentialRole role = PotentialRole::V;

    static PotentialSpec gaussian(double amplitude, double sigma, PotentialRole role);
    static PotentialSpec cosine_bump(double amplitude, double radius, PotentialRole role);
};

// Real, even field in position space. For role V the transform is checked
// for positivity on the grid (Vhat >= -1e-12 everywhere, Vhat(0) > 0).
Field build_potential(const PotentialSpec& spec, const GridSpec& grid);

// Finite norms from the potential assumptions; no pass/fail thresholds since
// the corresponding constants are unspecified. Keys are norm labels.
struct AssumptionReport {
    std::map<std::string, double> entries;
    double get(const std::string& key) const;
};

AssumptionReport assumption_report(const Field& V, const Field& W, int k_max, int M_reg);

}  // namespace polaron

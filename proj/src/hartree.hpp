// hartree.hpp — condensate construction, the Hartree split-step evolution,
// the pure-phase auxiliary approximation, the polynomial localizer and the
// associated flatness/stability diagnostics.

#pragma once

#include <vector>

#include "core/field.hpp"
#include "experiments/table.hpp"

namespace polaron {

// Smooth profile eta with eta(0) = 1 and vanishing derivatives at the origin
// up to order 2*n_flat - 1. The width is fixed analytically so that the
// continuum L2 norm of eta is 1 (Constant profiles are normalized on the
// torus instead; Tilted deliberately violates flatness for checker tests).
struct FlatProfile {
    enum class Family { Constant, FlatExp, Tilted };
    Family family = Family::FlatExp;
    int n_flat = 2;
    double tilt = 0.25;

    static FlatProfile constant();
    static FlatProfile flat_exp(int n_flat);
    static FlatProfile tilted(double tilt);

    double width(int dim) const;          // unit-L2 width on R^d
    Complex eval(const double* y, int dim) const;
};

struct CondensateState {
    Field phi;        // position space, ||phi||_2 = sqrt(Lambda)
    double t = 0.0;
    double lambda = 1.0;
    double mu = 0.0;  // cached mu_t
};

// mu_t = <phi/sqrt(L), (V*|phi|^2) phi/sqrt(L)> / 2
double hartree_mu(const Field& phi, const Field& V, double lambda);

// Hartree energy functional E[phi] = int( |grad phi|^2/2 + (V*|phi|^2)|phi|^2/2 ).
double hartree_energy(const Field& phi, const Field& V);

// phi0(y) = eta(Lambda^{-1/d} y), rescaled so ||phi0||_2 = sqrt(Lambda) on the
// grid. Requires Lambda^{1/d} <= L/8 so the cloud fits the box.
CondensateState build_initial_condensate(const FlatProfile& eta, double lambda,
                                         const GridSpec& grid, const Field& V);

struct ConditionsReport {
    Table scaling;      // per |beta|: sup and L2 norms with Lambda-compensated ratios
    double phihat_l1 = 0.0;
    Table flatness;     // per |beta| <= k-1: margin ratio and flag
    bool flat_ok = true;
};

// Checks the initial-condition and flatness conditions at order k with
// localization exponent s (margins use the scale exponent 1/d - s).
ConditionsReport check_conditions(const CondensateState& state, int k, double s);

struct HartreeOptions {
    double dt = 1e-3;
    bool check_halving = false;   // rerun at dt/2 and compare final states
    double halving_tol = 1e-6;
    std::vector<double> sample_times;  // snapshot times (t_final always sampled)
};

struct HartreeTrajectory {
    Field phi0;
    Field V;
    double lambda = 1.0;
    std::vector<double> times;        // snapshot times
    std::vector<Field> snapshots;     // phi at those times
    std::vector<double> mu_times;     // integrator-step times incl. endpoints
    std::vector<double> mu_values;    // mu at those times
    double halving_error = 0.0;

    const Field& at_time(double t) const;             // exact snapshot lookup
    double mu_integral(double t) const;               // trapezoid of mu over [0, t]
    double mu_at(double t) const;                     // linear interp of the history
};

// Strang split-step evolution of i d/dt phi = (-Lap/2 + V*|phi|^2 - mu_t) phi
// with mu_t frozen within each step. Mass is conserved by both sub-flows.
HartreeTrajectory evolve_hartree(const CondensateState& initial, const Field& V,
                                 double t_final, const HartreeOptions& opts);

// Auxiliary pure-phase approximation:
//   phitilde_t = exp(-i (t V*|phi0|^2 - int_0^t mu_s ds)) phi0.
Field auxiliary_phi(const HartreeTrajectory& traj, double t);

// Localization function Theta_Lambda(x) = 1 / (1 + |Lambda^{-s} x|^{2n}).
struct Localizer {
    double s = 0.2;
    int n = 1;
    double lambda = 1.0;
    Field theta;

    static Localizer make(const GridSpec& grid, double s, int n, double lambda);
};

// Norms of phi_t - phitilde_t (and derivatives) per sample time.
// Columns: t, phi_minus_aux_L2, dphi_minus_aux_L2 ... up to k_deriv,
// phi_Linf, density_shift_1w2.
Table propagation_diagnostics(const HartreeTrajectory& traj, int k_deriv);

// Localized flatness-driven quantities per sample time. Columns:
// t, theta_density_shift_1w2, theta_meanfield_Linf, meanfield_Linf.
Table local_stability_diagnostics(const HartreeTrajectory& traj, const Field& W,
                                  const Localizer& loc, double rho);

}  // namespace polaron

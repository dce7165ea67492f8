#pragma once

#include <array>
#include <string>
#include <vector>

#include "ddspin/correlator_field.hpp"
#include "ddspin/model.hpp"

namespace ddspin {

/// Outcome of a least-squares fit. Degenerate inputs (too few points, signal
/// below the noise floor, non-decaying data) yield ok = false with a reason
/// instead of a fabricated value.
struct FitResult {
    bool ok = false;
    double value = 0.0;
    double residual = 0.0; // rms residual of the log-space fit
    int sign_changes = 0;  // modulation indicator along the fit window
    std::string message;
};

struct CorrelationFitOptions {
    int r_min = 2;            // skip R = 1 to avoid contact terms
    double r_max_frac = 0.25; // fit up to L/4 along the chosen axis
    double noise_floor = 1e-14;
    int min_points = 4;
};

/// Inverse correlation length lambda_ab from the slope of log |eta_ab(R)| vs R
/// along one lattice axis.
FitResult fit_correlation_length(const CorrelatorField& eta, int pair, int axis = 0,
                                 const CorrelationFitOptions& opt = {});

/// Sum of eta_ab over every stored displacement (R = 0 excluded by storage).
double total_correlation(const CorrelatorField& eta, int pair);

struct RelaxationFitOptions {
    double window_frac = 0.5; // fit over the trailing fraction of the series
    double noise_floor = 1e-13;
    int min_points = 10;
};

/// Asymptotic relaxation rate kappa from log |d/dt mu^2| over the late-time
/// window; kappa >= 0 on success.
FitResult fit_relaxation_rate(const std::vector<double>& times,
                              const std::vector<double>& dmu2,
                              const RelaxationFitOptions& opt = {});

/// Derived steady-state observables of a correlator field: inverse lengths,
/// total correlations, and the relaxation rate of the approach.
struct CorrelationObservables {
    std::array<FitResult, kNumPairs> lambda;
    std::array<double, kNumPairs> sigma{};
    FitResult kappa;
};

CorrelationObservables correlation_observables(const CorrelatorField& eta,
                                               const std::vector<double>& times,
                                               const std::vector<double>& dmu2,
                                               const CorrelationFitOptions& copt = {},
                                               const RelaxationFitOptions& ropt = {});

} // namespace ddspin

#include "ddspin/fits.hpp"

#include <algorithm>
#include <cmath>

namespace ddspin {

namespace {

// least squares y = a + b x; returns (b, rms residual)
std::pair<double, double> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    const double b = (n * sxy - sx * sy) / denom;
    const double a = (sy - b * sx) / n;
    double rss = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (a + b * x[i]);
        rss += r * r;
    }
    return {b, std::sqrt(rss / n)};
}

} // namespace

FitResult fit_correlation_length(const CorrelatorField& eta, int pair, int axis,
                                 const CorrelationFitOptions& opt) {
    FitResult out;
    const DisplacementTable& tab = eta.table();
    if (tab.fc_mode()) {
        out.message = "correlation length is undefined on the fully-connected class";
        return out;
    }
    const std::vector<int> ray = tab.axis_ray(axis);
    const int l = tab.lattice().sizes()[axis];
    const int r_max = std::max(opt.r_min, int(std::floor(opt.r_max_frac * l)));

    std::vector<double> xs, ys;
    int sign_changes = 0;
    double prev = 0.0;
    for (int r = opt.r_min; r <= r_max && r <= int(ray.size()); ++r) {
        const double v = eta.at(ray[r - 1], pair);
        if (std::abs(v) <= opt.noise_floor) continue;
        if (!xs.empty() && v * prev < 0) ++sign_changes;
        prev = v;
        xs.push_back(double(r));
        ys.push_back(std::log(std::abs(v)));
    }
    out.sign_changes = sign_changes;
    if (int(xs.size()) < opt.min_points) {
        out.message = "fewer than " + std::to_string(opt.min_points) +
                      " usable distances above the noise floor";
        return out;
    }
    const auto [slope, res] = line_fit(xs, ys);
    if (!(slope < 0)) {
        out.message = "correlations do not decay along the fit window";
        out.residual = res;
        return out;
    }
    out.ok = true;
    out.value = -slope;
    out.residual = res;
    return out;
}

double total_correlation(const CorrelatorField& eta, int pair) {
    double s = 0.0;
    for (int i = 0; i < eta.n_disp(); ++i) s += eta.at(i, pair);
    return s;
}

FitResult fit_relaxation_rate(const std::vector<double>& times, const std::vector<double>& dmu2,
                              const RelaxationFitOptions& opt) {
    FitResult out;
    if (times.size() != dmu2.size() || times.empty()) {
        out.message = "empty or mismatched series";
        return out;
    }

    // Converged trajectories end in an integrator-noise tail; fitting log of
    // noise flattens the slope. Estimate the floor from the trailing samples
    // and clip the series back to where the genuine signal ends.
    size_t n_signal = times.size();
    {
        const size_t m = std::min<size_t>(15, times.size());
        std::vector<double> tail(dmu2.end() - m, dmu2.end());
        for (double& v : tail) v = std::abs(v);
        std::nth_element(tail.begin(), tail.begin() + m / 2, tail.end());
        const double noise = tail[m / 2];
        double peak = 0.0;
        for (double v : dmu2) peak = std::max(peak, std::abs(v));
        if (noise > 0.0 && peak > 100.0 * noise) {
            while (n_signal > 1 && std::abs(dmu2[n_signal - 1]) < 10.0 * noise) --n_signal;
        }
    }
    const double t_final = times[n_signal - 1];
    const double t_start = t_final * (1.0 - opt.window_frac);

    std::vector<double> xs, ys;
    double max_abs = 0.0;
    int sign_changes = 0;
    double prev = 0.0;
    for (size_t i = 0; i < n_signal; ++i) {
        if (times[i] < t_start) continue;
        const double a = dmu2[i];
        max_abs = std::max(max_abs, std::abs(a));
        if (std::abs(a) < 1e-300) continue;
        if (!xs.empty() && a * prev < 0) ++sign_changes;
        prev = a;
        xs.push_back(times[i]);
        ys.push_back(std::log(std::abs(a)));
    }
    out.sign_changes = sign_changes;
    if (max_abs < opt.noise_floor) {
        out.message = "signal below noise floor (steady state already reached)";
        return out;
    }
    if (int(xs.size()) < opt.min_points) {
        out.message = "fewer than " + std::to_string(opt.min_points) + " samples in fit window";
        return out;
    }
    const auto [slope, res] = line_fit(xs, ys);
    if (!(slope < 0)) {
        out.message = "signal does not decay over the fit window";
        out.residual = res;
        return out;
    }
    out.ok = true;
    out.value = -slope;
    out.residual = res;
    return out;
}

CorrelationObservables correlation_observables(const CorrelatorField& eta,
                                               const std::vector<double>& times,
                                               const std::vector<double>& dmu2,
                                               const CorrelationFitOptions& copt,
                                               const RelaxationFitOptions& ropt) {
    CorrelationObservables obs;
    for (int c = 0; c < kNumPairs; ++c) {
        obs.lambda[c] = fit_correlation_length(eta, c, 0, copt);
        obs.sigma[c] = total_correlation(eta, c);
    }
    obs.kappa = fit_relaxation_rate(times, dmu2, ropt);
    return obs;
}

} // namespace ddspin

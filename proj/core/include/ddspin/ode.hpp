#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace ddspin {

/// Options for the adaptive Dormand-Prince 5(4) integrator.
struct OdeOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double dt_initial = 1e-3;
    double dt_min = 1e-14;
    double dt_max = std::numeric_limits<double>::infinity();
    long max_steps = 200'000'000;
    // Stop early once the max-norm of the derivative falls below this value
    // (steady state); disabled when <= 0.
    double steady_tol = 0.0;
};

enum class OdeStatus { Done, SteadyState, StepUnderflow, MaxSteps, Aborted };

inline const char* to_string(OdeStatus s) {
    switch (s) {
        case OdeStatus::Done: return "done";
        case OdeStatus::SteadyState: return "steady-state";
        case OdeStatus::StepUnderflow: return "step-underflow";
        case OdeStatus::MaxSteps: return "max-steps";
        case OdeStatus::Aborted: return "aborted";
    }
    return "?";
}

template <typename Vec>
struct OdeResult {
    OdeStatus status = OdeStatus::Done;
    double t_final = 0.0;
    Vec state;               // state at t_final (partial state on failure)
    long n_steps = 0;
    long n_rejected = 0;
    std::string message;     // diagnostic for failed/aborted runs
    bool ok() const { return status == OdeStatus::Done || status == OdeStatus::SteadyState; }
};

namespace detail {
template <typename Obs, typename Vec>
bool call_observer(Obs& obs, double t, const Vec& y, const Vec& dy) {
    if constexpr (std::is_constructible_v<bool, Obs&>) {
        if (!static_cast<bool>(obs)) return true;
        return obs(t, y, dy);
    } else {
        return obs(t, y, dy);
    }
}

template <typename Vec>
double error_norm(const Vec& err, const Vec& y0, const Vec& y1, double rtol, double atol) {
    // RMS of the componentwise error over its tolerance-derived scale
    double acc = 0.0;
    const auto n = err.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc =
            atol + rtol * std::max(std::abs(double(std::real(y0[i]))) + std::abs(double(std::imag(y0[i]))),
                                   std::abs(double(std::real(y1[i]))) + std::abs(double(std::imag(y1[i]))));
        const double e = std::abs(std::complex<double>(err[i])) / sc;
        acc += e * e;
    }
    return std::sqrt(acc / double(n));
}
} // namespace detail

/// Dormand-Prince 5(4) with PI step-size control.
///
/// rhs(t, y, dydt) evaluates the derivative. observer(t, y, dydt) is called
/// after every accepted step (pass nullptr to skip); if it returns false the
/// integration aborts and reports OdeStatus::Aborted with the current state.
template <typename Vec, typename Rhs,
          typename Observer = std::function<bool(double, const Vec&, const Vec&)>>
OdeResult<Vec> integrate_dopri5(Rhs&& rhs, Vec y, double t0, double t1,
                                const OdeOptions& opt = {}, Observer observer = nullptr) {
    // Butcher tableau (Dormand & Prince, 1980)
    static constexpr double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
    static constexpr double a21 = 1. / 5;
    static constexpr double a31 = 3. / 40, a32 = 9. / 40;
    static constexpr double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
    static constexpr double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561,
                            a54 = -212. / 729;
    static constexpr double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247,
                            a64 = 49. / 176, a65 = -5103. / 18656;
    static constexpr double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192,
                            b5 = -2187. / 6784, b6 = 11. / 84;
    static constexpr double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920,
                            e5 = -17253. / 339200, e6 = 22. / 525, e7 = -1. / 40;

    OdeResult<Vec> res;
    double t = t0;
    double dt = std::min(opt.dt_initial, t1 - t0);
    Vec k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y, ynew = y, yerr = y;

    rhs(t, y, k1);
    if (opt.steady_tol > 0 && k1.template lpNorm<Eigen::Infinity>() < opt.steady_tol) {
        res.status = OdeStatus::SteadyState;
        res.t_final = t;
        res.state = std::move(y);
        return res;
    }

    double err_prev = 1.0;
    while (t < t1) {
        if (res.n_steps >= opt.max_steps) {
            res.status = OdeStatus::MaxSteps;
            break;
        }
        dt = std::min({dt, opt.dt_max, t1 - t});
        if (dt < opt.dt_min) {
            res.status = OdeStatus::StepUnderflow;
            res.message = "step size underflow at t=" + std::to_string(t);
            break;
        }

        ytmp = y + dt * (a21 * k1);
        rhs(t + c2 * dt, ytmp, k2);
        ytmp = y + dt * (a31 * k1 + a32 * k2);
        rhs(t + c3 * dt, ytmp, k3);
        ytmp = y + dt * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * dt, ytmp, k4);
        ytmp = y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * dt, ytmp, k5);
        ytmp = y + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + dt, ytmp, k6);
        ynew = y + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + dt, ynew, k7); // FSAL
        yerr = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double err = detail::error_norm(yerr, y, ynew, opt.rtol, opt.atol);
        if (err <= 1.0) {
            t += dt;
            y.swap(ynew);
            k1.swap(k7);
            ++res.n_steps;
            if (!detail::call_observer(observer, t, y, k1)) {
                res.status = OdeStatus::Aborted;
                res.message = "observer requested abort at t=" + std::to_string(t);
                break;
            }
            if (opt.steady_tol > 0 &&
                k1.template lpNorm<Eigen::Infinity>() < opt.steady_tol) {
                res.status = OdeStatus::SteadyState;
                break;
            }
            // PI controller
            const double fac = 0.9 * std::pow(err > 0 ? err : 1e-10, -0.7 / 5.0) *
                               std::pow(err_prev > 0 ? err_prev : 1e-10, 0.4 / 5.0);
            dt *= std::clamp(fac, 0.2, 5.0);
            err_prev = std::max(err, 1e-10);
        } else {
            ++res.n_rejected;
            dt *= std::max(0.2, 0.9 * std::pow(err, -1.0 / 5.0));
        }
    }

    res.t_final = t;
    res.state = std::move(y);
    return res;
}

} // namespace ddspin

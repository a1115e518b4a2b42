#pragma once

// Homogeneous adaptive estimators: drive a certain reference model to shadow
// the uncertain plant, absorbing the unknown terms into the estimated
// modeling terms f_i*.

#include "mrbc/types.hpp"

namespace mrbc {

struct HaeConfig {
    Vec xi;      // adaptation coupling gains, > 0
    Vec lambda;  // proportional matching gains, > 0
    Vec beta;    // adaptation leakage rates, > 0

    [[nodiscard]] int order() const { return static_cast<int>(lambda.size()); }
    [[nodiscard]] bool valid() const {
        return !lambda.empty() && xi.size() == lambda.size() &&
               beta.size() == lambda.size() && all_positive(xi) &&
               all_positive(lambda) && all_positive(beta);
    }
};

struct HaeState {
    Vec x_hat;  // reference model states
    Vec psi;    // adaptation states, stay nonnegative from nonnegative start
};

/// e_i = x_i - x_hat_i
inline Vec estimation_errors(const Vec& x, const HaeState& state) {
    Vec e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = x[i] - state.x_hat[i];
    return e;
}

/// Estimated modeling term for subsystem i (1-based):
/// f_i* = f_i + xi_i*psi_i*e_i + lambda_i/2*e_i + e_{i-1}, with e_0 = 0.
inline double modeling_term(int i, double f_known, const Vec& e, double psi_i,
                            const HaeConfig& cfg) {
    const std::size_t k = static_cast<std::size_t>(i - 1);
    const double e_prev = (i > 1) ? e[k - 1] : 0.0;
    return f_known + cfg.xi[k] * psi_i * e[k] + 0.5 * cfg.lambda[k] * e[k] + e_prev;
}

/// Adaptation law: psi_dot_i = -beta_i*psi_i + xi_i*e_i^2.
inline double psi_rate(int i, double e_i, double psi_i, const HaeConfig& cfg) {
    const std::size_t k = static_cast<std::size_t>(i - 1);
    return -cfg.beta[k] * psi_i + cfg.xi[k] * e_i * e_i;
}

/// Reference model derivative: x_hat_dot_i = x_hat_{i+1} + f_i*, with the
/// saturated input in place of x_hat_{n+1}.
inline Vec reference_derivative(const HaeState& state, const Vec& f_star, double u_sat) {
    const std::size_t n = state.x_hat.size();
    Vec dx(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double next = (i + 1 < n) ? state.x_hat[i + 1] : u_sat;
        dx[i] = next + f_star[i];
    }
    return dx;
}

}  // namespace mrbc

#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <cstddef>
#include <span>
#include <vector>

#include "semsnr/error.hpp"

namespace semsnr {

/// Order-recursive solution of the symmetric Toeplitz normal equations.
///
/// `coefficients` holds a_1..a_M of the prediction-error filter
/// 1 + a_1 z^-1 + ... + a_M z^-M, so the forward predictor is
/// x[n] ~ -sum_k a_k x[n-k]. `reflection` holds R_1..R_M and
/// `errors` holds eps_0..eps_M with eps_{n+1} = eps_n (1 - R_{n+1}^2).
template <std::floating_point T>
struct LevinsonResult {
    std::vector<T> coefficients;
    std::vector<T> reflection;
    std::vector<T> errors;
};

/// Throws Errc::non_stationary when a reflection coefficient leaves the unit
/// disc. |R| = 1 is tolerated only at the final order, where it marks a
/// perfectly predictable sequence (eps_M = 0) rather than an invalid one.
template <std::floating_point T>
LevinsonResult<T> levinson_durbin(std::span<const T> acf, std::size_t order) {
    require(!acf.empty() && acf[0] > 0, Errc::domain, "acf[0] must be positive");
    require(order >= 1 && order < acf.size(), Errc::domain, "order must be in [1, len(acf))");
    constexpr T tol = T(64) * std::numeric_limits<T>::epsilon();

    LevinsonResult<T> out;
    out.errors.push_back(acf[0]);
    std::vector<T> a;  // a_1..a_n
    a.reserve(order);
    for (std::size_t n = 0; n < order; ++n) {
        T beta = acf[n + 1];
        for (std::size_t k = 1; k <= n; ++k) beta += a[k - 1] * acf[n + 1 - k];
        const T eps = out.errors.back();
        if (!(eps > 0)) fail(Errc::non_stationary, "prediction error vanished before the final order");
        T refl = -beta / eps;
        const T mag = std::abs(refl);
        if (mag > T(1) + tol || (mag >= T(1) - tol && n + 1 < order))
            fail(Errc::non_stationary, "reflection coefficient |R_" + std::to_string(n + 1) +
                                           "| = " + std::to_string(double(mag)) + " >= 1");
        if (mag > T(1)) refl = std::copysign(T(1), refl);

        std::vector<T> next(n + 1);
        for (std::size_t k = 1; k <= n; ++k) next[k - 1] = a[k - 1] + refl * a[n - k];
        next[n] = refl;
        a = std::move(next);
        out.reflection.push_back(refl);
        out.errors.push_back(std::max(T(0), eps * (T(1) - refl * refl)));
    }
    out.coefficients = std::move(a);
    return out;
}

template <std::floating_point T>
LevinsonResult<T> levinson_durbin(const std::vector<T>& acf, std::size_t order) {
    return levinson_durbin(std::span<const T>(acf), order);
}

}  // namespace semsnr

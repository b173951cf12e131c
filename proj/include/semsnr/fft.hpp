#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace semsnr::fft {

using Complex = std::complex<double>;

namespace detail {
// FFTW planning and plan destruction are not thread-safe; execution is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// In-place 2-D DFT over a row-major `width x height` grid. The inverse is
/// unnormalised, matching FFTW.
inline void transform_2d(std::vector<Complex>& grid, std::size_t width, std::size_t height,
                         bool inverse) {
    auto* buf = reinterpret_cast<fftw_complex*>(grid.data());
    fftw_plan plan;
    {
        std::lock_guard lock(detail::planner_mutex());
        plan = fftw_plan_dft_2d(static_cast<int>(height), static_cast<int>(width), buf, buf,
                                inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(plan);
}

inline std::vector<Complex> forward(const std::vector<double>& real, std::size_t width,
                                    std::size_t height) {
    std::vector<Complex> grid(real.begin(), real.end());
    transform_2d(grid, width, height, false);
    return grid;
}

/// Inverse transform returning the real part, scaled by 1/(width*height).
inline std::vector<double> inverse_real(std::vector<Complex> spectrum, std::size_t width,
                                        std::size_t height) {
    transform_2d(spectrum, width, height, true);
    const double norm = 1.0 / static_cast<double>(width * height);
    std::vector<double> out(spectrum.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = spectrum[i].real() * norm;
    return out;
}

}  // namespace semsnr::fft

#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace liketrack::detail {

namespace {

struct Plans {
    fftw_plan forward;
    fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution with new-array functions is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

Plans plans_for(int rows, int cols) {
    static std::map<std::pair<int, int>, Plans> cache;
    std::lock_guard lock(planner_mutex());
    auto it = cache.find({rows, cols});
    if (it != cache.end()) {
        return it->second;
    }
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    const std::size_t nc = static_cast<std::size_t>(rows) * (cols / 2 + 1);
    auto* real = fftw_alloc_real(n);
    auto* spec = fftw_alloc_complex(nc);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p{fftw_plan_dft_r2c_2d(rows, cols, real, spec, flags),
            fftw_plan_dft_c2r_2d(rows, cols, spec, real, flags)};
    fftw_free(real);
    fftw_free(spec);
    if (p.forward == nullptr || p.inverse == nullptr) {
        throw std::runtime_error("FFTW planning failed");
    }
    cache.emplace(std::pair{rows, cols}, p);
    return p;
}

}  // namespace

RealFft2d::RealFft2d(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("FFT dimensions must be positive");
    }
    const Plans p = plans_for(rows, cols);
    forward_plan_ = p.forward;
    inverse_plan_ = p.inverse;
}

void RealFft2d::forward(std::span<const double> in, std::span<Complex> out) const {
    if (in.size() != static_cast<std::size_t>(rows_) * cols_ || out.size() != spectrum_size()) {
        throw std::invalid_argument("FFT buffer size mismatch");
    }
    // r2c leaves its input intact; FFTW's signature is simply not const.
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft2d::inverse(std::span<const Complex> in, std::span<double> out) const {
    if (in.size() != spectrum_size() || out.size() != static_cast<std::size_t>(rows_) * cols_) {
        throw std::invalid_argument("FFT buffer size mismatch");
    }
    // c2r destroys its input.
    std::vector<Complex> scratch(in.begin(), in.end());
    fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(scratch.data()),
                         out.data());
    const double scale = 1.0 / (static_cast<double>(rows_) * cols_);
    for (double& v : out) {
        v *= scale;
    }
}

}  // namespace liketrack::detail

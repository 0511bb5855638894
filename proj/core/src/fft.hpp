#pragma once

#include <complex>
#include <span>

namespace liketrack::detail {

using Complex = std::complex<double>;

// 2-D real <-> half-spectrum transforms over a row-major rows x cols grid.
// Spectra hold rows * (cols / 2 + 1) coefficients. Plans are shared per size
// and executions are safe to run concurrently.
class RealFft2d {
public:
    RealFft2d(int rows, int cols);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int spectrum_cols() const { return cols_ / 2 + 1; }
    std::size_t spectrum_size() const { return static_cast<std::size_t>(rows_) * spectrum_cols(); }

    void forward(std::span<const double> in, std::span<Complex> out) const;
    // Normalized inverse: inverse(forward(x)) == x.
    void inverse(std::span<const Complex> in, std::span<double> out) const;

private:
    int rows_;
    int cols_;
    void* forward_plan_;
    void* inverse_plan_;
};

}  // namespace liketrack::detail

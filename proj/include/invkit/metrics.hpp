// Image quality metrics.
#ifndef INVKIT_METRICS_HPP
#define INVKIT_METRICS_HPP

#include <limits>

#include "invkit/common.hpp"

namespace invkit::bench {

// 10 log10(peak^2 / MSE); identical images report +infinity.
inline double psnr(const Image& ref, const Image& test, double peak = 1.0) {
    if (ref.height != test.height || ref.width != test.width) throw ValidationError("psnr: dimension mismatch");
    if (peak <= 0.0) throw ValidationError("psnr: peak must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        double d = ref.data[i] - test.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ref.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

// Mean local SSIM over an 8x8 sliding window with stride 1, population
// moments, C1 = (0.01 peak)^2, C2 = (0.03 peak)^2, peak = 1.
inline double ssim(const Image& ref, const Image& test) {
    if (ref.height != test.height || ref.width != test.width) throw ValidationError("ssim: dimension mismatch");
    const std::size_t win = 8;
    if (ref.height < win || ref.width < win) throw ValidationError("ssim: image smaller than the 8x8 window");
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const double inv_n = 1.0 / static_cast<double>(win * win);

    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t r0 = 0; r0 + win <= ref.height; ++r0) {
        for (std::size_t c0 = 0; c0 + win <= ref.width; ++c0) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t r = r0; r < r0 + win; ++r)
                for (std::size_t c = c0; c < c0 + win; ++c) {
                    m1 += ref.at(r, c);
                    m2 += test.at(r, c);
                }
            m1 *= inv_n;
            m2 *= inv_n;
            double v1 = 0.0, v2 = 0.0, cov = 0.0;
            for (std::size_t r = r0; r < r0 + win; ++r)
                for (std::size_t c = c0; c < c0 + win; ++c) {
                    double d1 = ref.at(r, c) - m1, d2 = test.at(r, c) - m2;
                    v1 += d1 * d1;
                    v2 += d2 * d2;
                    cov += d1 * d2;
                }
            v1 *= inv_n;
            v2 *= inv_n;
            cov *= inv_n;
            acc += ((2.0 * m1 * m2 + c1) * (2.0 * cov + c2)) / ((m1 * m1 + m2 * m2 + c1) * (v1 + v2 + c2));
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

}  // namespace invkit::bench

#endif  // INVKIT_METRICS_HPP

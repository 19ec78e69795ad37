// Core value types, error categories and the seeded random generator shared
// by every other header.
#ifndef INVKIT_COMMON_HPP
#define INVKIT_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace invkit {

// Error categories map onto the CLI exit-code contract:
// validation -> 2, io -> 3, numeric -> 4.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Deterministic splittable generator. splitmix64 streams are cheap to fork,
// so every consumer derives its own stream from (seed, tag) and stays
// bit-reproducible no matter what runs concurrently.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    // One Box-Muller draw per call; the sibling value is discarded so the
    // stream position never depends on caller history.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Rng fork(std::uint64_t tag) const {
        // hash-combine, then advance once so fork(0) differs from the parent
        Rng child(state_ ^ (0x9e3779b97f4a7c15ULL + (tag << 6) + (tag >> 2) + tag * 0xff51afd7ed558ccdULL));
        child.next_u64();
        return child;
    }

  private:
    std::uint64_t state_;
};

// ---- small dense-vector helpers used across the library ----

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::vector<double>& x, double alpha) {
    for (double& v : x) v *= alpha;
}

inline bool all_finite(const std::vector<double>& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

// 2D real-valued grid with the canonical row-major vectorized view.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    Image() = default;
    Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(h * w, fill) {}
    Image(std::size_t h, std::size_t w, std::vector<double> values) : height(h), width(w), data(std::move(values)) {
        if (data.size() != h * w) throw ValidationError("Image: data length does not equal height*width");
        if (!all_finite(data)) throw ValidationError("Image: non-finite entries");
    }

    std::size_t size() const { return height * width; }
    double& at(std::size_t r, std::size_t c) { return data[r * width + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * width + c]; }
};

// Measurement vector plus the provenance needed to interpret it.
struct MeasurementVector {
    std::vector<double> data;
    std::string operator_id;
    double noise_sigma = 0.0;

    MeasurementVector() = default;
    explicit MeasurementVector(std::vector<double> values, std::string op_id = "", double sigma = 0.0)
        : data(std::move(values)), operator_id(std::move(op_id)), noise_sigma(sigma) {}

    std::size_t size() const { return data.size(); }
};

}  // namespace invkit

#endif  // INVKIT_COMMON_HPP

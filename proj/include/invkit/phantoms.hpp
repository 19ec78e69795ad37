// Synthetic test images and operator perturbations for the experiment
// harness.
#ifndef INVKIT_PHANTOMS_HPP
#define INVKIT_PHANTOMS_HPP

#include "invkit/operators.hpp"

namespace invkit::bench {

enum class PhantomKind { shepp_logan, shapes, smooth_bump, flat };

inline PhantomKind phantom_kind_from(const std::string& s) {
    if (s == "shepp_logan") return PhantomKind::shepp_logan;
    if (s == "shapes") return PhantomKind::shapes;
    if (s == "smooth_bump") return PhantomKind::smooth_bump;
    if (s == "flat") return PhantomKind::flat;
    throw ValidationError("make_phantom: unknown kind '" + s + "'");
}

namespace detail {

struct Ellipse {
    double value, a, b, x0, y0, phi_deg;
};

// Standard Shepp-Logan ellipse parameters on the [-1,1]^2 square.
inline const std::vector<Ellipse>& shepp_logan_ellipses() {
    static const std::vector<Ellipse> e = {
        {1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},  {-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
        {-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0}, {-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
        {0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0},  {0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
        {0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0}, {0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
        {0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0}, {0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
    };
    return e;
}

}  // namespace detail

// Deterministic image in [0,1]. shapes = seeded random rectangles and
// ellipses (the training-set generator); shepp_logan is rescaled so its
// maximum is 1.
inline Image make_phantom(PhantomKind kind, std::size_t h, std::size_t w, std::uint64_t seed) {
    if (h < 8 || w < 8) throw ValidationError("make_phantom: dims must be at least 8x8");
    Image x(h, w, 0.0);
    switch (kind) {
        case PhantomKind::flat:
            for (double& v : x.data) v = 0.5;
            return x;
        case PhantomKind::shepp_logan: {
            for (std::size_t r = 0; r < h; ++r)
                for (std::size_t c = 0; c < w; ++c) {
                    double yy = 1.0 - 2.0 * (static_cast<double>(r) + 0.5) / static_cast<double>(h);
                    double xx = 2.0 * (static_cast<double>(c) + 0.5) / static_cast<double>(w) - 1.0;
                    double acc = 0.0;
                    for (const auto& e : detail::shepp_logan_ellipses()) {
                        double phi = e.phi_deg * M_PI / 180.0;
                        double dx = xx - e.x0, dy = yy - e.y0;
                        double u = std::cos(phi) * dx + std::sin(phi) * dy;
                        double v = -std::sin(phi) * dx + std::cos(phi) * dy;
                        if ((u * u) / (e.a * e.a) + (v * v) / (e.b * e.b) <= 1.0) acc += e.value;
                    }
                    x.at(r, c) = acc;
                }
            double mx = 0.0;
            for (double v : x.data) mx = std::max(mx, v);
            if (mx > 0.0)
                for (double& v : x.data) v = std::max(0.0, v / mx);
            return x;
        }
        case PhantomKind::shapes: {
            Rng rng = Rng(seed).fork(0x5a9e5);
            std::size_t count = 3 + rng.index(4);
            for (std::size_t s = 0; s < count; ++s) {
                double intensity = rng.uniform(0.25, 1.0);
                bool rect = rng.uniform() < 0.5;
                double cy = rng.uniform(0.15, 0.85) * static_cast<double>(h);
                double cx = rng.uniform(0.15, 0.85) * static_cast<double>(w);
                double ry = rng.uniform(0.08, 0.25) * static_cast<double>(h);
                double rx = rng.uniform(0.08, 0.25) * static_cast<double>(w);
                for (std::size_t r = 0; r < h; ++r)
                    for (std::size_t c = 0; c < w; ++c) {
                        double dy = static_cast<double>(r) - cy, dx = static_cast<double>(c) - cx;
                        bool inside = rect ? (std::abs(dy) <= ry && std::abs(dx) <= rx)
                                           : (dy * dy / (ry * ry) + dx * dx / (rx * rx) <= 1.0);
                        if (inside) x.at(r, c) = intensity;
                    }
            }
            return x;
        }
        case PhantomKind::smooth_bump: {
            Rng rng = Rng(seed).fork(0xb09);
            std::size_t count = 2 + rng.index(3);
            for (std::size_t s = 0; s < count; ++s) {
                double amp = rng.uniform(0.3, 0.8);
                double cy = rng.uniform(0.2, 0.8) * static_cast<double>(h);
                double cx = rng.uniform(0.2, 0.8) * static_cast<double>(w);
                double sy = rng.uniform(0.08, 0.2) * static_cast<double>(h);
                double sx = rng.uniform(0.08, 0.2) * static_cast<double>(w);
                for (std::size_t r = 0; r < h; ++r)
                    for (std::size_t c = 0; c < w; ++c) {
                        double dy = (static_cast<double>(r) - cy) / sy, dx = (static_cast<double>(c) - cx) / sx;
                        x.at(r, c) += amp * std::exp(-0.5 * (dx * dx + dy * dy));
                    }
            }
            for (double& v : x.data) v = std::min(1.0, v);
            return x;
        }
    }
    throw ValidationError("make_phantom: unknown kind");
}

inline Image make_phantom(const std::string& kind, std::size_t h, std::size_t w, std::uint64_t seed) {
    return make_phantom(phantom_kind_from(kind), h, w, seed);
}

// Copy of x with a size x size square of the given intensity written at
// (row, col); the out-of-distribution feature of the robustness experiments.
inline Image insert_feature(const Image& x, std::size_t size, double intensity, std::size_t row, std::size_t col) {
    if (size == 0) return x;
    if (row + size > x.height || col + size > x.width) throw ValidationError("insert_feature: placement out of bounds");
    Image out = x;
    for (std::size_t r = row; r < row + size; ++r)
        for (std::size_t c = col; c < col + size; ++c) out.at(r, c) = intensity;
    return out;
}

enum class PerturbKind { kernel_jitter, mask_swap, matrix_noise };

inline PerturbKind perturb_kind_from(const std::string& s) {
    if (s == "kernel_jitter") return PerturbKind::kernel_jitter;
    if (s == "mask_swap") return PerturbKind::mask_swap;
    if (s == "matrix_noise") return PerturbKind::matrix_noise;
    throw ValidationError("perturb_operator: unknown kind '" + s + "'");
}

// Test-time forward-model perturbations. eps = 0 (or fraction = 0) returns an
// operator equal to the input; all perturbed operators remain valid linear
// operators with exact adjoints.
inline ForwardOperator perturb_operator(const ForwardOperator& op, PerturbKind kind, double eps, std::uint64_t seed) {
    ForwardOperator out = op;
    Rng rng = Rng(seed).fork(0x9e27b);
    switch (kind) {
        case PerturbKind::kernel_jitter: {
            if (op.kind() != OperatorKind::convolution && op.kind() != OperatorKind::superresolution)
                throw ValidationError("kernel_jitter: operator has no convolution kernel");
            if (eps == 0.0) return out;
            std::vector<double>& k = out.mutable_kernel();
            double sum_before = 0.0;
            for (double v : k) sum_before += v;
            for (double& v : k) v += eps * rng.normal();
            double sum_after = 0.0;
            for (double v : k) sum_after += v;
            if (std::abs(sum_after) < 1e-12) throw NumericError("kernel_jitter: perturbed kernel sums to zero");
            for (double& v : k) v *= sum_before / sum_after;
            return out;
        }
        case PerturbKind::mask_swap: {
            if (op.kind() != OperatorKind::subsample && op.kind() != OperatorKind::mri)
                throw ValidationError("mask_swap: operator has no sampling mask");
            if (eps == 0.0) return out;
            std::vector<std::size_t>& keep = out.mutable_keep();
            std::size_t n = op.input_size();
            std::vector<char> selected(n, 0);
            for (std::size_t i : keep) selected[i] = 1;
            std::vector<std::size_t> unselected;
            for (std::size_t i = 0; i < n; ++i)
                if (!selected[i]) unselected.push_back(i);
            std::size_t swaps = static_cast<std::size_t>(std::round(eps * static_cast<double>(keep.size())));
            swaps = std::min({swaps, keep.size(), unselected.size()});
            for (std::size_t s = 0; s < swaps; ++s) {
                std::size_t ki = rng.index(keep.size());
                std::size_t ui = rng.index(unselected.size());
                std::swap(keep[ki], unselected[ui]);
            }
            std::sort(keep.begin(), keep.end());
            return out;
        }
        case PerturbKind::matrix_noise: {
            if (op.kind() != OperatorKind::compressive)
                throw ValidationError("matrix_noise: operator has no dense matrix");
            if (eps == 0.0) return out;
            std::vector<double>& mat = out.mutable_dense_matrix();
            double s = 1.0 / std::sqrt(static_cast<double>(op.output_size()));
            for (double& v : mat) v += eps * s * rng.normal();
            return out;
        }
    }
    throw ValidationError("perturb_operator: unknown kind");
}

inline ForwardOperator perturb_operator(const ForwardOperator& op, const std::string& kind, double eps,
                                        std::uint64_t seed) {
    return perturb_operator(op, perturb_kind_from(kind), eps, seed);
}

}  // namespace invkit::bench

#endif  // INVKIT_PHANTOMS_HPP

// Regularization functionals r(x) and their proximal maps.
#ifndef INVKIT_REGULARIZERS_HPP
#define INVKIT_REGULARIZERS_HPP

#include <algorithm>

#include "invkit/common.hpp"

namespace invkit {

enum class RegKind { zero, tikhonov, l1, tv };

inline const char* to_string(RegKind k) {
    switch (k) {
        case RegKind::zero: return "zero";
        case RegKind::tikhonov: return "tikhonov";
        case RegKind::l1: return "l1";
        case RegKind::tv: return "tv";
    }
    return "?";
}

namespace detail {

// Periodic forward differences, horizontal then vertical planes.
inline void grad2(const std::vector<double>& x, std::size_t h, std::size_t w, std::vector<double>& ph,
                  std::vector<double>& pv) {
    ph.resize(h * w);
    pv.resize(h * w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            std::size_t cn = (c + 1 == w) ? 0 : c + 1;
            std::size_t rn = (r + 1 == h) ? 0 : r + 1;
            ph[r * w + c] = x[r * w + cn] - x[r * w + c];
            pv[r * w + c] = x[rn * w + c] - x[r * w + c];
        }
}

// Transpose of grad2 (negative periodic divergence).
inline void grad2_adj(const std::vector<double>& ph, const std::vector<double>& pv, std::size_t h, std::size_t w,
                      std::vector<double>& out) {
    out.assign(h * w, 0.0);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            std::size_t cp = (c == 0) ? w - 1 : c - 1;
            std::size_t rp = (r == 0) ? h - 1 : r - 1;
            out[r * w + c] = ph[r * w + cp] - ph[r * w + c] + pv[rp * w + c] - pv[r * w + c];
        }
}

}  // namespace detail

// r(x) plus its proximal map. All kinds are immutable and pure.
class Regularizer {
  public:
    static Regularizer zero() { return Regularizer(RegKind::zero, 0.0, 0); }
    static Regularizer tikhonov(double lambda) { return checked(RegKind::tikhonov, lambda, 0); }
    static Regularizer l1(double lambda) { return checked(RegKind::l1, lambda, 0); }
    static Regularizer tv(double lambda, std::size_t inner_iters = 20) { return checked(RegKind::tv, lambda, inner_iters); }

    RegKind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    std::size_t inner_iters() const { return inner_iters_; }

    double value(const Image& x) const {
        switch (kind_) {
            case RegKind::zero: return 0.0;
            case RegKind::tikhonov: return 0.5 * lambda_ * dot(x.data, x.data);
            case RegKind::l1: {
                double s = 0.0;
                for (double v : x.data) s += std::abs(v);
                return lambda_ * s;
            }
            case RegKind::tv: {
                std::vector<double> ph, pv;
                detail::grad2(x.data, x.height, x.width, ph, pv);
                double s = 0.0;
                for (double v : ph) s += std::abs(v);
                for (double v : pv) s += std::abs(v);
                return lambda_ * s;
            }
        }
        return 0.0;
    }

    // argmin_x 1/2 ||x - z||^2 + t r(x); t = 0 is the identity.
    Image prox(const Image& z, double t) const {
        if (t < 0.0) throw ValidationError("prox: step t must be nonnegative");
        if (t == 0.0 || kind_ == RegKind::zero || lambda_ == 0.0) return z;
        Image out = z;
        switch (kind_) {
            case RegKind::tikhonov: {
                double s = 1.0 / (1.0 + t * lambda_);
                for (double& v : out.data) v *= s;
                return out;
            }
            case RegKind::l1: {
                double thr = t * lambda_;
                for (double& v : out.data) v = soft_threshold(v, thr);
                return out;
            }
            case RegKind::tv: return tv_prox(z, t);
            default: return out;
        }
    }

    static double soft_threshold(double v, double thr) {
        if (v > thr) return v - thr;
        if (v < -thr) return v + thr;
        return 0.0;
    }

  private:
    Regularizer(RegKind k, double lambda, std::size_t inner) : kind_(k), lambda_(lambda), inner_iters_(inner) {}

    static Regularizer checked(RegKind k, double lambda, std::size_t inner) {
        if (lambda < 0.0) throw ValidationError("regularizer: lambda must be nonnegative");
        if (k == RegKind::tv && inner == 0) throw ValidationError("tv: inner_iters must be positive");
        return Regularizer(k, lambda, inner);
    }

    // Projected gradient on the dual of the anisotropic TV prox, a fixed
    // number of iterations. tau = 1/8 covers ||D D^T|| for the periodic 2D
    // forward-difference operator.
    Image tv_prox(const Image& z, double t) const {
        std::size_t h = z.height, w = z.width, n = h * w;
        double alpha = t * lambda_;
        std::vector<double> ph(n, 0.0), pv(n, 0.0), x(n), gh, gv;
        const double tau = 0.125;
        for (std::size_t it = 0; it < inner_iters_; ++it) {
            detail::grad2_adj(ph, pv, h, w, x);  // x = D^T p
            for (std::size_t i = 0; i < n; ++i) x[i] = z.data[i] - x[i];
            detail::grad2(x, h, w, gh, gv);  // gradient step direction D(z - D^T p)
            for (std::size_t i = 0; i < n; ++i) {
                ph[i] = std::clamp(ph[i] + tau * gh[i], -alpha, alpha);
                pv[i] = std::clamp(pv[i] + tau * gv[i], -alpha, alpha);
            }
        }
        detail::grad2_adj(ph, pv, h, w, x);
        Image out(h, w);
        for (std::size_t i = 0; i < n; ++i) out.data[i] = z.data[i] - x[i];
        return out;
    }

    RegKind kind_;
    double lambda_;
    std::size_t inner_iters_;
};

}  // namespace invkit

#endif  // INVKIT_REGULARIZERS_HPP

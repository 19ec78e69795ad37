// Forward measurement models: construction, application, adjoints and
// Jacobian-transpose products, plus seeded Gaussian measurement noise.
#ifndef INVKIT_OPERATORS_HPP
#define INVKIT_OPERATORS_HPP

#include <algorithm>
#include <memory>
#include <sstream>
#include <variant>

#include "invkit/common.hpp"

namespace invkit {

enum class OperatorKind {
    identity,
    convolution,
    subsample,
    superresolution,
    compressive,
    mri,
    radon,
    phase_retrieval,
};

inline const char* to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::identity: return "identity";
        case OperatorKind::convolution: return "convolution";
        case OperatorKind::subsample: return "subsample";
        case OperatorKind::superresolution: return "superresolution";
        case OperatorKind::compressive: return "compressive";
        case OperatorKind::mri: return "mri";
        case OperatorKind::radon: return "radon";
        case OperatorKind::phase_retrieval: return "phase_retrieval";
    }
    return "?";
}

enum class Ensemble { gaussian, bernoulli };

namespace detail {

// Unitary 1D DFT tables for one transform size.
struct DftTable {
    std::size_t n = 0;
    std::vector<double> cos_t, sin_t;  // entries of e^{-2 pi i j k / n}

    explicit DftTable(std::size_t size) : n(size), cos_t(size * size), sin_t(size * size) {
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                double ang = -2.0 * M_PI * static_cast<double>((j * k) % n) / static_cast<double>(n);
                cos_t[j * n + k] = std::cos(ang);
                sin_t[j * n + k] = std::sin(ang);
            }
    }

    // out = T in (or T^H in), complex, unitary 1/sqrt(n) scaling.
    void apply(const double* in_re, const double* in_im, std::size_t in_stride, double* out_re, double* out_im,
               std::size_t out_stride, bool conjugate) const {
        double s = 1.0 / std::sqrt(static_cast<double>(n));
        for (std::size_t j = 0; j < n; ++j) {
            double ar = 0.0, ai = 0.0;
            const double* cr = &cos_t[j * n];
            const double* ci = &sin_t[j * n];
            for (std::size_t k = 0; k < n; ++k) {
                double si = conjugate ? -ci[k] : ci[k];
                double xr = in_re[k * in_stride], xi = in_im[k * in_stride];
                ar += cr[k] * xr - si * xi;
                ai += cr[k] * xi + si * xr;
            }
            out_re[j * out_stride] = s * ar;
            out_im[j * out_stride] = s * ai;
        }
    }
};

struct IdentityOp {};

struct ConvolutionOp {
    std::vector<double> kernel;  // kh*kw row-major, centered at (kh/2, kw/2)
    std::size_t kh = 0, kw = 0;
};

struct SubsampleOp {
    std::vector<std::size_t> keep;  // indices of sampled pixels, ascending
};

struct SuperresOp {
    ConvolutionOp blur;
    std::size_t factor = 1;
};

struct CompressiveOp {
    std::vector<double> matrix;  // m x n row-major
    std::size_t m = 0;
    std::uint64_t seed = 0;
    Ensemble ensemble = Ensemble::gaussian;
};

struct MriOp {
    std::vector<std::size_t> keep;      // selected k-space positions
    std::vector<double> sensitivity;    // n entries
    std::shared_ptr<DftTable> row_dft;  // size w
    std::shared_ptr<DftTable> col_dft;  // size h
};

struct RadonOp {
    std::size_t n_angles = 0, n_detectors = 0;
    std::vector<double> cos_a, sin_a;
};

// Periodic 2D convolution; the adjoint is correlation with the same kernel.
inline std::vector<double> convolve_periodic(const std::vector<double>& x, std::size_t h, std::size_t w,
                                             const ConvolutionOp& k, bool adjoint) {
    std::vector<double> out(h * w, 0.0);
    std::ptrdiff_t H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
    std::ptrdiff_t ci = static_cast<std::ptrdiff_t>(k.kh / 2), cj = static_cast<std::ptrdiff_t>(k.kw / 2);
    for (std::size_t i = 0; i < k.kh; ++i) {
        for (std::size_t j = 0; j < k.kw; ++j) {
            double kv = k.kernel[i * k.kw + j];
            if (kv == 0.0) continue;
            std::ptrdiff_t di = static_cast<std::ptrdiff_t>(i) - ci;
            std::ptrdiff_t dj = static_cast<std::ptrdiff_t>(j) - cj;
            if (adjoint) {
                di = -di;
                dj = -dj;
            }
            for (std::ptrdiff_t r = 0; r < H; ++r) {
                std::ptrdiff_t sr = (r - di) % H;
                if (sr < 0) sr += H;
                const double* xrow = &x[static_cast<std::size_t>(sr) * w];
                double* orow = &out[static_cast<std::size_t>(r) * w];
                for (std::ptrdiff_t c = 0; c < W; ++c) {
                    std::ptrdiff_t sc = (c - dj) % W;
                    if (sc < 0) sc += W;
                    orow[c] += kv * xrow[sc];
                }
            }
        }
    }
    return out;
}

// 2D unitary DFT (or its inverse) by row then column 1D transforms, in place.
inline void dft2(const MriOp& op, std::size_t h, std::size_t w, std::vector<double>& re, std::vector<double>& im,
                 bool conjugate) {
    std::vector<double> tr(std::max(h, w)), ti(std::max(h, w));
    for (std::size_t r = 0; r < h; ++r) {
        op.row_dft->apply(&re[r * w], &im[r * w], 1, tr.data(), ti.data(), 1, conjugate);
        std::copy_n(tr.begin(), w, re.begin() + r * w);
        std::copy_n(ti.begin(), w, im.begin() + r * w);
    }
    for (std::size_t c = 0; c < w; ++c) {
        op.col_dft->apply(&re[c], &im[c], w, tr.data(), ti.data(), 1, conjugate);
        for (std::size_t r = 0; r < h; ++r) {
            re[r * w + c] = tr[r];
            im[r * w + c] = ti[r];
        }
    }
}

// Pixel-driven parallel-beam projection. Each pixel deposits its value into
// the two detector bins bracketing its signed distance along the detector
// axis; adjoint=true gathers with the same weights, so the pair is an exact
// transpose.
inline std::vector<double> radon_pass(const std::vector<double>& in, std::size_t h, std::size_t w, const RadonOp& op,
                                      bool adjoint) {
    std::vector<double> out(adjoint ? h * w : op.n_angles * op.n_detectors, 0.0);
    double cy = 0.5 * (static_cast<double>(h) - 1.0);
    double cx = 0.5 * (static_cast<double>(w) - 1.0);
    double dc = 0.5 * (static_cast<double>(op.n_detectors) - 1.0);
    for (std::size_t a = 0; a < op.n_angles; ++a) {
        double ca = op.cos_a[a], sa = op.sin_a[a];
        for (std::size_t r = 0; r < h; ++r) {
            double y = static_cast<double>(r) - cy;
            for (std::size_t c = 0; c < w; ++c) {
                double x = static_cast<double>(c) - cx;
                double t = x * ca + y * sa + dc;
                double fl = std::floor(t);
                std::ptrdiff_t i0 = static_cast<std::ptrdiff_t>(fl);
                double w1 = t - fl;
                std::size_t px = r * w + c;
                if (!adjoint) {
                    if (i0 >= 0 && i0 < static_cast<std::ptrdiff_t>(op.n_detectors))
                        out[a * op.n_detectors + static_cast<std::size_t>(i0)] += (1.0 - w1) * in[px];
                    if (i0 + 1 >= 0 && i0 + 1 < static_cast<std::ptrdiff_t>(op.n_detectors))
                        out[a * op.n_detectors + static_cast<std::size_t>(i0 + 1)] += w1 * in[px];
                } else {
                    double acc = 0.0;
                    if (i0 >= 0 && i0 < static_cast<std::ptrdiff_t>(op.n_detectors))
                        acc += (1.0 - w1) * in[a * op.n_detectors + static_cast<std::size_t>(i0)];
                    if (i0 + 1 >= 0 && i0 + 1 < static_cast<std::ptrdiff_t>(op.n_detectors))
                        acc += w1 * in[a * op.n_detectors + static_cast<std::size_t>(i0 + 1)];
                    out[px] += acc;
                }
            }
        }
    }
    return out;
}

}  // namespace detail

class ForwardOperator {
  public:
    OperatorKind kind() const { return kind_; }
    bool is_linear() const { return kind_ != OperatorKind::phase_retrieval; }
    std::size_t input_height() const { return h_; }
    std::size_t input_width() const { return w_; }
    std::size_t input_size() const { return h_ * w_; }
    std::size_t output_size() const { return m_; }
    const std::string& id() const { return id_; }

    // ---- factories ----

    static ForwardOperator identity(std::size_t h, std::size_t w) {
        ForwardOperator op(OperatorKind::identity, h, w, h * w);
        op.impl_ = detail::IdentityOp{};
        op.id_ = op.describe();
        return op;
    }

    static ForwardOperator convolution(std::size_t h, std::size_t w, std::vector<double> kernel, std::size_t kh,
                                       std::size_t kw) {
        if (kernel.size() != kh * kw) throw ValidationError("convolution: kernel size mismatch");
        if (!all_finite(kernel)) throw ValidationError("convolution: kernel has non-finite entries");
        if (kh > h || kw > w) throw ValidationError("convolution: kernel larger than image");
        ForwardOperator op(OperatorKind::convolution, h, w, h * w);
        op.impl_ = detail::ConvolutionOp{std::move(kernel), kh, kw};
        op.id_ = op.describe();
        return op;
    }

    static ForwardOperator subsample(std::size_t h, std::size_t w, const std::vector<int>& mask) {
        if (mask.size() != h * w) throw ValidationError("subsample: mask length must equal height*width");
        detail::SubsampleOp s;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask[i] != 0 && mask[i] != 1) throw ValidationError("subsample: mask entries must be 0 or 1");
            if (mask[i]) s.keep.push_back(i);
        }
        if (s.keep.empty()) throw ValidationError("subsample: mask selects zero pixels");
        ForwardOperator op(OperatorKind::subsample, h, w, s.keep.size());
        op.impl_ = std::move(s);
        op.id_ = op.describe();
        return op;
    }

    static ForwardOperator superresolution(std::size_t h, std::size_t w, std::vector<double> kernel, std::size_t kh,
                                           std::size_t kw, std::size_t factor) {
        if (factor == 0 || h % factor != 0 || w % factor != 0)
            throw ValidationError("superresolution: factor must divide both image dimensions");
        if (kernel.size() != kh * kw) throw ValidationError("superresolution: kernel size mismatch");
        if (!all_finite(kernel)) throw ValidationError("superresolution: kernel has non-finite entries");
        ForwardOperator op(OperatorKind::superresolution, h, w, (h / factor) * (w / factor));
        op.impl_ = detail::SuperresOp{detail::ConvolutionOp{std::move(kernel), kh, kw}, factor};
        op.id_ = op.describe();
        return op;
    }

    static ForwardOperator compressive(std::size_t h, std::size_t w, std::size_t m, std::uint64_t seed,
                                       Ensemble ensemble = Ensemble::gaussian) {
        if (m == 0) throw ValidationError("compressive: m must be positive");
        std::size_t n = h * w;
        detail::CompressiveOp c;
        c.m = m;
        c.seed = seed;
        c.ensemble = ensemble;
        c.matrix.resize(m * n);
        Rng rng = Rng(seed).fork(m).fork(n);
        double s = 1.0 / std::sqrt(static_cast<double>(m));
        for (double& v : c.matrix)
            v = (ensemble == Ensemble::gaussian) ? s * rng.normal() : (rng.uniform() < 0.5 ? -s : s);
        ForwardOperator op(OperatorKind::compressive, h, w, m);
        op.impl_ = std::move(c);
        op.id_ = op.describe();
        return op;
    }

    // Single-coil Cartesian MRI A = S F D; complex measurements are stored as
    // concatenated real and imaginary parts, so m = 2 * (#selected).
    static ForwardOperator mri(std::size_t h, std::size_t w, const std::vector<int>& mask,
                               std::vector<double> sensitivity = {}) {
        if (mask.size() != h * w) throw ValidationError("mri: mask length must equal height*width");
        detail::MriOp s;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) s.keep.push_back(i);
        if (s.keep.empty()) throw ValidationError("mri: mask selects zero frequencies");
        if (sensitivity.empty()) sensitivity.assign(h * w, 1.0);
        if (sensitivity.size() != h * w) throw ValidationError("mri: sensitivity length must equal height*width");
        s.sensitivity = std::move(sensitivity);
        s.row_dft = std::make_shared<detail::DftTable>(w);
        s.col_dft = std::make_shared<detail::DftTable>(h);
        ForwardOperator op(OperatorKind::mri, h, w, 2 * s.keep.size());
        op.impl_ = std::move(s);
        op.id_ = op.describe();
        return op;
    }

    static ForwardOperator radon(std::size_t h, std::size_t w, std::size_t n_angles, std::size_t n_detectors) {
        if (n_angles < 1) throw ValidationError("radon: n_angles must be >= 1");
        if (n_detectors < 1) throw ValidationError("radon: degenerate geometry, n_detectors must be >= 1");
        detail::RadonOp r;
        r.n_angles = n_angles;
        r.n_detectors = n_detectors;
        for (std::size_t a = 0; a < n_angles; ++a) {
            double theta = M_PI * static_cast<double>(a) / static_cast<double>(n_angles);
            r.cos_a.push_back(std::cos(theta));
            r.sin_a.push_back(std::sin(theta));
        }
        ForwardOperator op(OperatorKind::radon, h, w, n_angles * n_detectors);
        op.impl_ = std::move(r);
        op.id_ = op.describe();
        return op;
    }

    static ForwardOperator phase_retrieval(ForwardOperator inner) {
        if (!inner.is_linear()) throw ValidationError("phase_retrieval: inner operator must be linear");
        ForwardOperator op(OperatorKind::phase_retrieval, inner.input_height(), inner.input_width(),
                           inner.output_size());
        op.impl_ = PhaseRetrievalHolder{std::make_shared<ForwardOperator>(std::move(inner))};
        op.id_ = op.describe() + "(" + op.inner().id() + ")";
        return op;
    }

    const ForwardOperator& inner() const {
        if (kind_ != OperatorKind::phase_retrieval)
            throw ValidationError("inner: only phase_retrieval wraps an inner operator");
        return *std::get<PhaseRetrievalHolder>(impl_).inner;
    }

    // ---- application on raw vectors ----

    std::vector<double> apply_vec(const std::vector<double>& x) const {
        if (x.size() != h_ * w_) throw ValidationError("apply: input length does not match operator input dims");
        switch (kind_) {
            case OperatorKind::identity: return x;
            case OperatorKind::convolution:
                return detail::convolve_periodic(x, h_, w_, std::get<detail::ConvolutionOp>(impl_), false);
            case OperatorKind::subsample: {
                const auto& s = std::get<detail::SubsampleOp>(impl_);
                std::vector<double> y(s.keep.size());
                for (std::size_t i = 0; i < s.keep.size(); ++i) y[i] = x[s.keep[i]];
                return y;
            }
            case OperatorKind::superresolution: {
                const auto& s = std::get<detail::SuperresOp>(impl_);
                std::vector<double> b = detail::convolve_periodic(x, h_, w_, s.blur, false);
                std::size_t oh = h_ / s.factor, ow = w_ / s.factor;
                std::vector<double> y(oh * ow);
                for (std::size_t r = 0; r < oh; ++r)
                    for (std::size_t c = 0; c < ow; ++c) y[r * ow + c] = b[(r * s.factor) * w_ + c * s.factor];
                return y;
            }
            case OperatorKind::compressive: {
                const auto& s = std::get<detail::CompressiveOp>(impl_);
                std::size_t n = h_ * w_;
                std::vector<double> y(s.m, 0.0);
                for (std::size_t i = 0; i < s.m; ++i) {
                    const double* row = &s.matrix[i * n];
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
                    y[i] = acc;
                }
                return y;
            }
            case OperatorKind::mri: {
                const auto& s = std::get<detail::MriOp>(impl_);
                std::vector<double> re(h_ * w_), im(h_ * w_, 0.0);
                for (std::size_t i = 0; i < re.size(); ++i) re[i] = s.sensitivity[i] * x[i];
                detail::dft2(s, h_, w_, re, im, false);
                std::vector<double> y(2 * s.keep.size());
                for (std::size_t i = 0; i < s.keep.size(); ++i) {
                    y[i] = re[s.keep[i]];
                    y[s.keep.size() + i] = im[s.keep[i]];
                }
                return y;
            }
            case OperatorKind::radon: return detail::radon_pass(x, h_, w_, std::get<detail::RadonOp>(impl_), false);
            case OperatorKind::phase_retrieval: {
                std::vector<double> ax = inner().apply_vec(x);
                for (double& v : ax) v = v * v;
                return ax;
            }
        }
        throw ValidationError("apply: unknown operator kind");
    }

    std::vector<double> adjoint_vec(const std::vector<double>& u) const {
        if (kind_ == OperatorKind::phase_retrieval)
            throw ValidationError("adjoint: unsupported for the nonlinear phase_retrieval operator");
        if (u.size() != m_) throw ValidationError("adjoint: input length does not match operator output dims");
        switch (kind_) {
            case OperatorKind::identity: return u;
            case OperatorKind::convolution:
                return detail::convolve_periodic(u, h_, w_, std::get<detail::ConvolutionOp>(impl_), true);
            case OperatorKind::subsample: {
                const auto& s = std::get<detail::SubsampleOp>(impl_);
                std::vector<double> x(h_ * w_, 0.0);
                for (std::size_t i = 0; i < s.keep.size(); ++i) x[s.keep[i]] = u[i];
                return x;
            }
            case OperatorKind::superresolution: {
                const auto& s = std::get<detail::SuperresOp>(impl_);
                std::size_t oh = h_ / s.factor, ow = w_ / s.factor;
                std::vector<double> up(h_ * w_, 0.0);
                for (std::size_t r = 0; r < oh; ++r)
                    for (std::size_t c = 0; c < ow; ++c) up[(r * s.factor) * w_ + c * s.factor] = u[r * ow + c];
                return detail::convolve_periodic(up, h_, w_, s.blur, true);
            }
            case OperatorKind::compressive: {
                const auto& s = std::get<detail::CompressiveOp>(impl_);
                std::size_t n = h_ * w_;
                std::vector<double> x(n, 0.0);
                for (std::size_t i = 0; i < s.m; ++i) {
                    const double* row = &s.matrix[i * n];
                    double ui = u[i];
                    if (ui == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) x[j] += row[j] * ui;
                }
                return x;
            }
            case OperatorKind::mri: {
                const auto& s = std::get<detail::MriOp>(impl_);
                std::vector<double> re(h_ * w_, 0.0), im(h_ * w_, 0.0);
                for (std::size_t i = 0; i < s.keep.size(); ++i) {
                    re[s.keep[i]] = u[i];
                    im[s.keep[i]] = u[s.keep.size() + i];
                }
                detail::dft2(s, h_, w_, re, im, true);
                std::vector<double> x(h_ * w_);
                for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.sensitivity[i] * re[i];
                return x;
            }
            case OperatorKind::radon: return detail::radon_pass(u, h_, w_, std::get<detail::RadonOp>(impl_), true);
            default: break;
        }
        throw ValidationError("adjoint: unknown operator kind");
    }

    // Jacobian-transpose-vector product; equals the adjoint for linear kinds
    // and 2 A^T(u .* Ax) for phase retrieval.
    std::vector<double> jtvp_vec(const std::vector<double>& x, const std::vector<double>& u) const {
        if (kind_ != OperatorKind::phase_retrieval) return adjoint_vec(u);
        if (x.size() != h_ * w_ || u.size() != m_) throw ValidationError("jtvp: dimension mismatch");
        std::vector<double> ax = inner().apply_vec(x);
        for (std::size_t i = 0; i < ax.size(); ++i) ax[i] = 2.0 * u[i] * ax[i];
        return inner().adjoint_vec(ax);
    }

    // ---- typed wrappers ----

    MeasurementVector apply(const Image& x) const {
        if (x.height != h_ || x.width != w_) throw ValidationError("apply: image dims do not match operator input");
        return MeasurementVector(apply_vec(x.data), id_, 0.0);
    }

    Image adjoint(const MeasurementVector& u) const {
        if (u.size() != m_) throw ValidationError("adjoint: measurement length does not match operator output");
        return Image(h_, w_, adjoint_vec(u.data));
    }

    Image jtvp(const Image& x, const MeasurementVector& u) const {
        if (x.size() != h_ * w_ || u.size() != m_) throw ValidationError("jtvp: dimension mismatch");
        return Image(h_, w_, jtvp_vec(x.data, u.data));
    }

    // ---- parameter access for perturbation experiments ----

    const std::vector<double>& dense_matrix() const { return compressive_ref().matrix; }
    std::vector<double>& mutable_dense_matrix() { return compressive_ref_mut().matrix; }

    const std::vector<double>& kernel() const { return conv_ref().kernel; }
    std::vector<double>& mutable_kernel() { return conv_ref_mut().kernel; }
    std::size_t kernel_height() const { return conv_ref().kh; }
    std::size_t kernel_width() const { return conv_ref().kw; }

    const std::vector<std::size_t>& keep_indices() const {
        if (kind_ == OperatorKind::subsample) return std::get<detail::SubsampleOp>(impl_).keep;
        if (kind_ == OperatorKind::mri) return std::get<detail::MriOp>(impl_).keep;
        throw ValidationError("keep_indices: operator has no sampling mask");
    }
    std::vector<std::size_t>& mutable_keep() {
        if (kind_ == OperatorKind::subsample) return std::get<detail::SubsampleOp>(impl_).keep;
        if (kind_ == OperatorKind::mri) return std::get<detail::MriOp>(impl_).keep;
        throw ValidationError("keep_indices: operator has no sampling mask");
    }

  private:
    ForwardOperator(OperatorKind k, std::size_t h, std::size_t w, std::size_t m) : kind_(k), h_(h), w_(w), m_(m) {}

    const detail::CompressiveOp& compressive_ref() const {
        if (kind_ != OperatorKind::compressive) throw ValidationError("dense_matrix: only compressive operators");
        return std::get<detail::CompressiveOp>(impl_);
    }
    detail::CompressiveOp& compressive_ref_mut() {
        if (kind_ != OperatorKind::compressive) throw ValidationError("dense_matrix: only compressive operators");
        return std::get<detail::CompressiveOp>(impl_);
    }
    const detail::ConvolutionOp& conv_ref() const {
        if (kind_ == OperatorKind::convolution) return std::get<detail::ConvolutionOp>(impl_);
        if (kind_ == OperatorKind::superresolution) return std::get<detail::SuperresOp>(impl_).blur;
        throw ValidationError("kernel: operator has no convolution kernel");
    }
    detail::ConvolutionOp& conv_ref_mut() {
        if (kind_ == OperatorKind::convolution) return std::get<detail::ConvolutionOp>(impl_);
        if (kind_ == OperatorKind::superresolution) return std::get<detail::SuperresOp>(impl_).blur;
        throw ValidationError("kernel: operator has no convolution kernel");
    }

    std::string describe() const {
        std::ostringstream os;
        os << to_string(kind_) << ":" << h_ << "x" << w_ << "->" << m_;
        return os.str();
    }

    OperatorKind kind_;
    std::size_t h_, w_, m_;
    std::string id_;

    struct PhaseRetrievalHolder {
        std::shared_ptr<ForwardOperator> inner;
    };
    std::variant<detail::IdentityOp, detail::ConvolutionOp, detail::SubsampleOp, detail::SuperresOp,
                 detail::CompressiveOp, detail::MriOp, detail::RadonOp, PhaseRetrievalHolder>
        impl_;
};

// Additive white Gaussian measurement noise, reproducible from the seed.
struct NoiseModel {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

inline MeasurementVector add_noise(const MeasurementVector& y, const NoiseModel& noise) {
    if (noise.sigma < 0.0) throw ValidationError("add_noise: sigma must be nonnegative");
    MeasurementVector out = y;
    out.noise_sigma = noise.sigma;
    if (noise.sigma == 0.0) return out;
    Rng rng = Rng(noise.seed).fork(0x6e6f697365ULL);  // 'noise'
    for (double& v : out.data) v += noise.sigma * rng.normal();
    return out;
}

// Parallel-beam sinogram of an image; a convenience over the radon operator.
inline MeasurementVector radon_forward(const Image& x, std::size_t n_angles, std::size_t n_detectors) {
    return ForwardOperator::radon(x.height, x.width, n_angles, n_detectors).apply(x);
}

// Normalized 2D Gaussian blur kernel, size x size taps.
inline std::vector<double> make_gaussian_kernel(std::size_t size, double sigma) {
    if (size == 0 || sigma <= 0.0) throw ValidationError("make_gaussian_kernel: size and sigma must be positive");
    std::vector<double> k(size * size);
    double c = 0.5 * (static_cast<double>(size) - 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) {
            double dy = static_cast<double>(i) - c, dx = static_cast<double>(j) - c;
            k[i * size + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            sum += k[i * size + j];
        }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace invkit

#endif  // INVKIT_OPERATORS_HPP

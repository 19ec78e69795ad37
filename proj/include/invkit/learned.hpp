// Learned reconstruction: residual and unrolled supervised models, plus the
// self-supervised SURE/GSURE and Noise2Noise training paths.
#ifndef INVKIT_LEARNED_HPP
#define INVKIT_LEARNED_HPP

#include "invkit/network.hpp"
#include "invkit/solvers.hpp"

namespace invkit::learned {

enum class RegimeKind { paired_xy, x_only, y_only_sure, y_only_gsure, noise2noise };

inline const char* to_string(RegimeKind k) {
    switch (k) {
        case RegimeKind::paired_xy: return "paired_xy";
        case RegimeKind::x_only: return "x_only";
        case RegimeKind::y_only_sure: return "y_only_sure";
        case RegimeKind::y_only_gsure: return "y_only_gsure";
        case RegimeKind::noise2noise: return "noise2noise";
    }
    return "?";
}

// ---- approximate inverses A~^-1 ----

enum class ApproxInverseKind { adjoint, cg_pseudoinverse, tikhonov };

// Linear map from measurement space back to image space: the plain adjoint,
// a CG least-squares pseudoinverse, or a Tikhonov-regularized inverse
// (A^T A + lambda I)^-1 A^T for ill-conditioned problems where the exact
// pseudoinverse amplifies noise.
class ApproxInverse {
  public:
    static ApproxInverse adjoint(ForwardOperator op) { return ApproxInverse(ApproxInverseKind::adjoint, std::move(op)); }
    static ApproxInverse cg_pseudoinverse(ForwardOperator op, double tol = 1e-10, std::size_t iters = 200) {
        ApproxInverse a(ApproxInverseKind::cg_pseudoinverse, std::move(op));
        a.tol_ = tol;
        a.iters_ = iters;
        return a;
    }
    static ApproxInverse tikhonov_inverse(ForwardOperator op, double lambda = 0.01) {
        ApproxInverse a(ApproxInverseKind::tikhonov, std::move(op));
        a.lambda_ = lambda;
        return a;
    }

    // Per-problem default: adjoint where A is near-isometric (compressive,
    // mri) and for the matched-pair radon transform; exact CG pseudoinverse
    // for inpainting (benign there); regularized inverse for deconvolution,
    // whose exact pseudoinverse is noise-amplifying.
    static ApproxInverse default_for(const ForwardOperator& op) {
        switch (op.kind()) {
            case OperatorKind::convolution:
            case OperatorKind::superresolution: return tikhonov_inverse(op);
            case OperatorKind::subsample: return cg_pseudoinverse(op);
            default: return adjoint(op);
        }
    }

    std::vector<double> apply_vec(const std::vector<double>& y) const {
        if (kind_ == ApproxInverseKind::adjoint) return op_.adjoint_vec(y);
        std::vector<double> b = op_.adjoint_vec(y);
        double lambda = kind_ == ApproxInverseKind::tikhonov ? lambda_ : 0.0;
        auto spd = [&](const std::vector<double>& v) {
            std::vector<double> out = op_.adjoint_vec(op_.apply_vec(v));
            if (lambda != 0.0) axpy(lambda, v, out);
            return out;
        };
        return detail::conjugate_gradient(spd, b, {}, tol_, iters_);
    }

    Image apply(const MeasurementVector& y) const {
        return Image(op_.input_height(), op_.input_width(), apply_vec(y.data));
    }

    const ForwardOperator& op() const { return op_; }
    ApproxInverseKind kind() const { return kind_; }

  private:
    ApproxInverse(ApproxInverseKind k, ForwardOperator op) : kind_(k), op_(std::move(op)) {}
    ApproxInverseKind kind_;
    ForwardOperator op_;
    double tol_ = 1e-10;
    std::size_t iters_ = 200;
    double lambda_ = 0.01;
};

// f(y) = g(A~^-1 y) + A~^-1 y, the residual-reconstruction structure.
inline Image residual_reconstruct(const nn::Network& g, const ApproxInverse& ainv, const MeasurementVector& y) {
    Image x0 = ainv.apply(y);
    nn::Tensor x0t = nn::Tensor::constant({1, x0.height, x0.width}, x0.data);
    nn::Tensor out = nn::add(g.forward(x0t), x0t);
    return Image(x0.height, x0.width, out.value());
}

// ---- trainable reconstruction models (forward(y) -> graph tensor) ----

// Plain image-to-image network on the measurement treated as an image; the
// denoising case A = I.
class DenoiserModel {
  public:
    DenoiserModel(nn::Network net, std::size_t h, std::size_t w) : net_(std::move(net)), h_(h), w_(w) {}

    nn::Tensor forward(const MeasurementVector& y) const {
        if (y.size() != h_ * w_) throw ValidationError("denoiser model: measurement is not an image");
        return net_.forward(nn::Tensor::constant({1, h_, w_}, y.data));
    }
    std::vector<nn::Tensor> parameters() const { return net_.parameters(); }
    const nn::Network& network() const { return net_; }
    nn::Network& network() { return net_; }
    Image reconstruct(const MeasurementVector& y) const {
        return Image(h_, w_, forward(y).value());
    }
    Denoiser as_denoiser() const {
        return [net = net_](const Image& z) {
            nn::Tensor out = net.forward(nn::Tensor::constant({1, z.height, z.width}, z.data));
            return Image(z.height, z.width, out.value());
        };
    }

  private:
    nn::Network net_;
    std::size_t h_, w_;
};

// f(y) = g(A~^-1 y) + A~^-1 y with trainable g.
class ResidualModel {
  public:
    ResidualModel(nn::Network g, ApproxInverse ainv) : g_(std::move(g)), ainv_(std::move(ainv)) {}

    nn::Tensor forward(const MeasurementVector& y) const {
        Image x0 = ainv_.apply(y);
        nn::Tensor x0t = nn::Tensor::constant({1, x0.height, x0.width}, x0.data);
        return nn::add(g_.forward(x0t), x0t);
    }
    std::vector<nn::Tensor> parameters() const { return g_.parameters(); }
    const nn::Network& network() const { return g_; }
    Image reconstruct(const MeasurementVector& y) const {
        nn::Tensor t = forward(y);
        return Image(t.shape()[1], t.shape()[2], t.value());
    }

  private:
    nn::Network g_;
    ApproxInverse ainv_;
};

// K unrolled proximal-gradient blocks with a shared trainable prox network
// and a learnable positive step size (softplus reparameterization).
// x^0 = 0, x^{k+1} = P_theta(x^k - eta A^T (A x^k - y)).
class UnrolledModel {
  public:
    UnrolledModel(ForwardOperator op, std::size_t blocks, nn::Network prox_net, double eta_init)
        : op_(std::move(op)), blocks_(blocks), prox_(std::move(prox_net)) {
        if (blocks_ < 1) throw ValidationError("unrolled: block count must be >= 1");
        if (eta_init <= 0.0) throw ValidationError("unrolled: eta must be positive");
        // softplus^-1(eta)
        double raw = eta_init > 30.0 ? eta_init : std::log(std::expm1(eta_init));
        eta_raw_ = nn::Tensor::variable({1}, {raw});
    }

    nn::Tensor forward(const MeasurementVector& y) const {
        if (y.size() != op_.output_size()) throw ValidationError("unrolled: measurement size mismatch");
        nn::Tensor yt = nn::Tensor::constant({y.size()}, y.data);
        nn::Tensor eta = nn::softplus(eta_raw_);
        nn::Tensor x = nn::Tensor::constant({1, op_.input_height(), op_.input_width()},
                                            std::vector<double>(op_.input_size(), 0.0));
        for (std::size_t k = 0; k < blocks_; ++k) {
            nn::Tensor r = nn::sub(nn::apply_operator(op_, x), yt);
            nn::Tensor g = nn::apply_adjoint(op_, r);
            nn::Tensor xt = nn::sub(x, nn::scale_by(g, eta));
            x = prox_.forward(xt);
            if (!all_finite(x.value())) throw NumericError("unrolled: non-finite activations");
        }
        return x;
    }

    Image reconstruct(const MeasurementVector& y) const {
        nn::Tensor t = forward(y);
        return Image(op_.input_height(), op_.input_width(), t.value());
    }

    std::vector<nn::Tensor> parameters() const {
        std::vector<nn::Tensor> ps = prox_.parameters();
        ps.push_back(eta_raw_);
        return ps;
    }

    double eta() const {
        double raw = eta_raw_.value()[0];
        return raw > 30.0 ? raw : std::log1p(std::exp(raw));
    }
    std::size_t blocks() const { return blocks_; }
    const ForwardOperator& op() const { return op_; }
    const nn::Network& prox_network() const { return prox_; }
    nn::Network& prox_network() { return prox_; }
    void bind(ForwardOperator op) {
        if (op.input_size() != op_.input_size() || op.output_size() != op_.output_size())
            throw ValidationError("unrolled: rebinding must preserve dims");
        op_ = std::move(op);
    }

  private:
    ForwardOperator op_;
    std::size_t blocks_;
    nn::Network prox_;
    nn::Tensor eta_raw_;
};

// ---- training loops ----

struct PairedSample {
    Image target;  // ground truth x, or the noisy proxy x~ for noise2noise
    MeasurementVector y;
};
using PairedDataset = std::vector<PairedSample>;

struct TrainResult {
    std::vector<double> loss_trace;  // mean per-sample loss per epoch
};

// Minimizes mean squared reconstruction error with one optimizer step per
// sample, seeded shuffle per epoch. Deterministic given (seed, dataset).
template <class Model>
TrainResult train_supervised(Model& model, const PairedDataset& data, nn::Optimizer& optim, std::size_t epochs,
                             std::uint64_t seed) {
    if (data.empty()) throw ValidationError("train: empty dataset");
    std::vector<nn::Tensor> params = model.parameters();
    TrainResult result;
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng rng = Rng(seed).fork(epoch);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            const PairedSample& s = data[idx];
            nn::Tensor out = model.forward(s.y);
            nn::Tensor target = nn::Tensor::constant(out.shape(), s.target.data);
            nn::Tensor loss = nn::mse(out, target);
            double lv = loss.value()[0];
            if (!std::isfinite(lv)) throw NumericError("train: loss became non-finite at epoch " + std::to_string(epoch));
            epoch_loss += lv;
            nn::Optimizer::zero_grad(params);
            nn::backward(loss, {1.0});
            optim.step(params);
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(data.size()));
    }
    return result;
}

// Noise2Noise: identical loop, targets are independent noisy proxies of the
// ground truth with E[x~ | y] = x*.
template <class Model>
TrainResult train_noise2noise(Model& model, const PairedDataset& noisy_target_data, nn::Optimizer& optim,
                              std::size_t epochs, std::uint64_t seed) {
    return train_supervised(model, noisy_target_data, optim, epochs, seed);
}

// ---- SURE / GSURE ----

struct DivergenceMode {
    enum class Kind { exact_linear, monte_carlo };
    Kind kind = Kind::monte_carlo;
    std::size_t probes = 8;
    double eps = 1e-3;
    std::uint64_t seed = 0;

    static DivergenceMode exact_linear() { return DivergenceMode{Kind::exact_linear, 0, 0.0, 0}; }
    static DivergenceMode monte_carlo(std::size_t probes, double eps, std::uint64_t seed = 0) {
        return DivergenceMode{Kind::monte_carlo, probes, eps, seed};
    }
};

using VecEstimator = std::function<std::vector<double>(const std::vector<double>&)>;

namespace detail {

// div_y f(y) = sum_i df_i/dy_i. exact_linear evaluates basis differences and
// is exact for linear estimators; monte_carlo uses seeded Rademacher probes
// b^T (f(y + eps b) - f(y)) / eps (Hutchinson trace estimate of the
// Jacobian, variance-free on the diagonal).
inline double divergence(const VecEstimator& f, const std::vector<double>& y, const std::vector<double>& fy,
                         const DivergenceMode& mode) {
    if (mode.kind == DivergenceMode::Kind::exact_linear) {
        std::vector<double> f0 = f(std::vector<double>(y.size(), 0.0));
        double div = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            std::vector<double> e(y.size(), 0.0);
            e[i] = 1.0;
            std::vector<double> fe = f(e);
            div += fe[i] - f0[i];
        }
        return div;
    }
    if (mode.probes == 0 || mode.eps <= 0.0) throw ValidationError("divergence: probes and eps must be positive");
    Rng rng = Rng(mode.seed).fork(0xd17);
    double acc = 0.0;
    for (std::size_t p = 0; p < mode.probes; ++p) {
        std::vector<double> b(y.size());
        for (double& v : b) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
        std::vector<double> yp = y;
        axpy(mode.eps, b, yp);
        std::vector<double> fp = f(yp);
        double d = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) d += b[i] * (fp[i] - fy[i]);
        acc += d / mode.eps;
    }
    return acc / static_cast<double>(mode.probes);
}

}  // namespace detail

// Stein's unbiased risk estimate of the denoising MSE:
// (1/n)||y - f(y)||^2 + (2 sigma^2/n) div_y f(y) - sigma^2.
inline double sure_loss(const VecEstimator& f, const std::vector<double>& y, double sigma,
                        const DivergenceMode& mode) {
    if (sigma <= 0.0) throw ValidationError("sure_loss: sigma must be positive in measurement-only regimes");
    std::vector<double> fy = f(y);
    if (fy.size() != y.size()) throw ValidationError("sure_loss: estimator must map R^n -> R^n");
    double n = static_cast<double>(y.size());
    double resid = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) resid += (y[i] - fy[i]) * (y[i] - fy[i]);
    double div = detail::divergence(f, y, fy, mode);
    return resid / n + 2.0 * sigma * sigma * div / n - sigma * sigma;
}

// Pseudoinverse machinery for GSURE: A^dagger via CG on the normal equations
// and the row-space projection P_A = A^dagger A.
class PinvContext {
  public:
    explicit PinvContext(const ForwardOperator& op, double tol = 1e-12, std::size_t iters = 400)
        : op_(&op), tol_(tol), iters_(iters) {
        if (!op.is_linear()) throw ValidationError("gsure: operator must be linear");
    }

    std::vector<double> pinv(const std::vector<double>& w) const {  // A^dagger w
        std::vector<double> b = op_->adjoint_vec(w);
        return solve_normal(b);
    }
    std::vector<double> project(const std::vector<double>& v) const {  // P_A v
        std::vector<double> b = op_->adjoint_vec(op_->apply_vec(v));
        return solve_normal(b);
    }
    const ForwardOperator& op() const { return *op_; }

  private:
    std::vector<double> solve_normal(const std::vector<double>& b) const {
        auto spd = [this](const std::vector<double>& v) { return op_->adjoint_vec(op_->apply_vec(v)); };
        std::vector<double> x = invkit::detail::conjugate_gradient(spd, b, {}, tol_, iters_);
        if (!all_finite(x)) throw NumericError("gsure: CG pseudoinverse failed");
        return x;
    }
    const ForwardOperator* op_;
    double tol_;
    std::size_t iters_;
};

// theta-dependent part of the GSURE functional:
// (1/n)[ ||P_A f(y)||^2 - 2 f(y)^T A^dagger y + 2 sigma^2 div ],
// where div is the Stein term div_y((A^dagger)^T f(y)); the constant
// ||P_A x*||^2 is omitted as theta-independent. For A = I this reduces to
// sure_loss minus its input-only constants.
inline double gsure_loss(const VecEstimator& f, const std::vector<double>& y, double sigma, const PinvContext& ctx,
                         const DivergenceMode& mode) {
    if (sigma <= 0.0) throw ValidationError("gsure_loss: sigma must be positive in measurement-only regimes");
    std::vector<double> fy = f(y);
    if (fy.size() != ctx.op().input_size()) throw ValidationError("gsure_loss: estimator must map into image space");
    double n = static_cast<double>(fy.size());

    std::vector<double> proj = ctx.project(fy);
    double proj_sq = dot(proj, proj);
    std::vector<double> pinv_y = ctx.pinv(y);
    double cross = dot(fy, pinv_y);

    // Stein divergence of (A^dagger)^T f(y) with respect to y.
    double div = 0.0;
    if (mode.kind == DivergenceMode::Kind::exact_linear) {
        std::vector<double> f0 = f(std::vector<double>(y.size(), 0.0));
        for (std::size_t i = 0; i < y.size(); ++i) {
            std::vector<double> e(y.size(), 0.0);
            e[i] = 1.0;
            std::vector<double> fe = f(e);
            for (std::size_t j = 0; j < fe.size(); ++j) fe[j] -= f0[j];
            std::vector<double> pe = ctx.pinv(e);
            div += dot(pe, fe);
        }
    } else {
        if (mode.probes == 0 || mode.eps <= 0.0) throw ValidationError("divergence: probes and eps must be positive");
        Rng rng = Rng(mode.seed).fork(0xd17);
        double acc = 0.0;
        for (std::size_t p = 0; p < mode.probes; ++p) {
            std::vector<double> b(y.size());
            for (double& v : b) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
            std::vector<double> yp = y;
            axpy(mode.eps, b, yp);
            std::vector<double> fp = f(yp);
            for (std::size_t j = 0; j < fp.size(); ++j) fp[j] -= fy[j];
            std::vector<double> pb = ctx.pinv(b);
            acc += dot(pb, fp) / mode.eps;
        }
        div = acc / static_cast<double>(mode.probes);
    }
    return (proj_sq - 2.0 * cross + 2.0 * sigma * sigma * div) / n;
}

// Row-space projection as a graph node; P_A is symmetric, so the backward
// rule is another projection.
inline nn::Tensor apply_projection(const PinvContext& ctx, const nn::Tensor& v) {
    std::vector<double> pv = ctx.project(v.value());
    auto vn = v.node();
    const PinvContext* cp = &ctx;
    return nn::detail::make_op(v.shape(), std::move(pv), {vn}, [vn, cp](nn::detail::Node& n) {
        vn->ensure_grad();
        std::vector<double> g = cp->project(n.grad);
        for (std::size_t i = 0; i < g.size(); ++i) vn->grad[i] += g[i];
    });
}

// Differentiable GSURE loss (theta-dependent part) for training from
// measurements alone under a general linear operator.
template <class Model>
nn::Tensor gsure_loss_graph(const Model& model, const MeasurementVector& y, double sigma, const PinvContext& ctx,
                            std::size_t probes, double eps, std::uint64_t probe_seed) {
    if (sigma <= 0.0) throw ValidationError("gsure: sigma must be positive in measurement-only regimes");
    if (probes == 0 || eps <= 0.0) throw ValidationError("gsure: probes and eps must be positive");
    nn::Tensor fy = model.forward(y);
    double n = static_cast<double>(fy.size());
    nn::Tensor proj = apply_projection(ctx, fy);
    nn::Tensor loss = nn::scale(nn::sum(nn::mul(proj, proj)), 1.0 / n);
    nn::Tensor pinv_y = nn::Tensor::constant(fy.shape(), ctx.pinv(y.data));
    loss = nn::add(loss, nn::scale(nn::sum(nn::mul(fy, pinv_y)), -2.0 / n));

    Rng rng = Rng(probe_seed).fork(0xd17);
    for (std::size_t p = 0; p < probes; ++p) {
        std::vector<double> b(y.size());
        for (double& v : b) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
        MeasurementVector yp = y;
        axpy(eps, b, yp.data);
        nn::Tensor fp = model.forward(yp);
        nn::Tensor pb = nn::Tensor::constant(fp.shape(), ctx.pinv(b));
        nn::Tensor d = nn::scale(nn::sum(nn::mul(pb, nn::sub(fp, fy))), 1.0 / eps);
        loss = nn::add(loss, nn::scale(d, 2.0 * sigma * sigma / (n * static_cast<double>(probes))));
    }
    return loss;
}

// GSURE training loop over a measurement-only dataset.
template <class Model>
TrainResult train_gsure(Model& model, const std::vector<MeasurementVector>& ys, double sigma, const PinvContext& ctx,
                        nn::Optimizer& optim, std::size_t epochs, std::uint64_t seed, std::size_t probes = 4,
                        double eps = 1e-3) {
    if (ys.empty()) throw ValidationError("train: empty dataset");
    std::vector<nn::Tensor> params = model.parameters();
    TrainResult result;
    std::vector<std::size_t> order(ys.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng rng = Rng(seed).fork(epoch);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        double epoch_loss = 0.0;
        std::size_t step_id = 0;
        for (std::size_t idx : order) {
            nn::Tensor loss = gsure_loss_graph(model, ys[idx], sigma, ctx, probes, eps,
                                               Rng(seed).fork(epoch).fork(step_id++).next_u64());
            double lv = loss.value()[0];
            if (!std::isfinite(lv)) throw NumericError("train_gsure: loss became non-finite");
            epoch_loss += lv;
            nn::Optimizer::zero_grad(params);
            nn::backward(loss, {1.0});
            optim.step(params);
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(ys.size()));
    }
    return result;
}

// Differentiable SURE loss for training a denoiser from measurements alone
// (A = I). The Monte Carlo divergence probes flow through the model graph.
template <class Model>
nn::Tensor sure_loss_graph(const Model& model, const MeasurementVector& y, double sigma, std::size_t probes,
                           double eps, std::uint64_t probe_seed) {
    if (sigma <= 0.0) throw ValidationError("sure: sigma must be positive in measurement-only regimes");
    if (probes == 0 || eps <= 0.0) throw ValidationError("sure: probes and eps must be positive");
    double n = static_cast<double>(y.size());
    nn::Tensor fy = model.forward(y);
    nn::Tensor yt = nn::Tensor::constant(fy.shape(), y.data);
    nn::Tensor loss = nn::scale(nn::sum(nn::mul(nn::sub(yt, fy), nn::sub(yt, fy))), 1.0 / n);

    Rng rng = Rng(probe_seed).fork(0xd17);
    for (std::size_t p = 0; p < probes; ++p) {
        std::vector<double> b(y.size());
        for (double& v : b) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
        MeasurementVector yp = y;
        axpy(eps, b, yp.data);
        nn::Tensor fp = model.forward(yp);
        nn::Tensor bt = nn::Tensor::constant(fp.shape(), b);
        nn::Tensor d = nn::scale(nn::sum(nn::mul(bt, nn::sub(fp, fy))), 1.0 / eps);
        loss = nn::add(loss, nn::scale(d, 2.0 * sigma * sigma / (n * static_cast<double>(probes))));
    }
    // the -sigma^2 constant is omitted from the training graph
    return loss;
}

// SURE training loop over a measurement-only dataset (denoising).
template <class Model>
TrainResult train_sure(Model& model, const std::vector<MeasurementVector>& ys, double sigma, nn::Optimizer& optim,
                       std::size_t epochs, std::uint64_t seed, std::size_t probes = 4, double eps = 1e-3) {
    if (ys.empty()) throw ValidationError("train: empty dataset");
    std::vector<nn::Tensor> params = model.parameters();
    TrainResult result;
    std::vector<std::size_t> order(ys.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng rng = Rng(seed).fork(epoch);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        double epoch_loss = 0.0;
        std::size_t step_id = 0;
        for (std::size_t idx : order) {
            nn::Tensor loss = sure_loss_graph(model, ys[idx], sigma, probes, eps,
                                              Rng(seed).fork(epoch).fork(step_id++).next_u64());
            double lv = loss.value()[0];
            if (!std::isfinite(lv)) throw NumericError("train_sure: loss became non-finite");
            epoch_loss += lv;
            nn::Optimizer::zero_grad(params);
            nn::backward(loss, {1.0});
            optim.step(params);
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(ys.size()));
    }
    return result;
}

}  // namespace invkit::learned

#endif  // INVKIT_LEARNED_HPP

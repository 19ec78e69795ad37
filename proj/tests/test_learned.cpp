#include <cmath>

#include "doctest.h"
#include "invkit/generative.hpp"

using namespace invkit;
using namespace invkit::learned;

namespace {

std::vector<double> randn(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& e : v) e = rng.normal();
    return v;
}

Image smooth_image(std::size_t h, std::size_t w, Rng& rng) {
    // sum of a few random gaussian bumps, clipped to [0,1]
    Image x(h, w, 0.0);
    for (int b = 0; b < 3; ++b) {
        double cy = rng.uniform(0.2, 0.8) * static_cast<double>(h);
        double cx = rng.uniform(0.2, 0.8) * static_cast<double>(w);
        double s = rng.uniform(1.5, 3.5);
        double amp = rng.uniform(0.3, 0.7);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) {
                double dy = static_cast<double>(r) - cy, dx = static_cast<double>(c) - cx;
                x.at(r, c) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
            }
    }
    for (double& v : x.data) v = std::min(1.0, v);
    return x;
}

double mse_to(const Image& a, const Image& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    return s / static_cast<double>(a.size());
}

}  // namespace

TEST_SUITE("learned") {

TEST_CASE("residual_reconstruct with a zeroed network returns the approximate inverse") {
    Rng rng(3);
    auto op = ForwardOperator::convolution(8, 8, make_gaussian_kernel(3, 0.8), 3, 3);
    Image truth = smooth_image(8, 8, rng);
    auto y = op.apply(truth);
    auto ainv = ApproxInverse::cg_pseudoinverse(op);

    nn::Network g;
    Rng nrng(5);
    g.add_conv2d(1, 1, 3, nrng);
    for (auto p : g.parameters()) std::fill(p.mutable_value().begin(), p.mutable_value().end(), 0.0);

    Image out = residual_reconstruct(g, ainv, y);
    Image x0 = ainv.apply(y);
    CHECK(out.data == x0.data);
}

TEST_CASE("cg pseudoinverse approximate inverse is linear") {
    Rng rng(7);
    auto op = ForwardOperator::subsample(6, 6, [] {
        std::vector<int> m(36, 0);
        for (std::size_t i = 0; i < 36; i += 2) m[i] = 1;
        return m;
    }());
    auto ainv = ApproxInverse::cg_pseudoinverse(op);
    std::vector<double> y1 = randn(op.output_size(), rng), y2 = randn(op.output_size(), rng);
    double a = 1.3, b = -0.7;
    std::vector<double> combo(y1.size());
    for (std::size_t i = 0; i < y1.size(); ++i) combo[i] = a * y1[i] + b * y2[i];
    auto r1 = ainv.apply_vec(y1);
    auto r2 = ainv.apply_vec(y2);
    auto rc = ainv.apply_vec(combo);
    for (std::size_t i = 0; i < rc.size(); ++i) CHECK(rc[i] == doctest::Approx(a * r1[i] + b * r2[i]).epsilon(1e-8));
}

TEST_CASE("trained residual denoiser beats the noisy input on held-out data") {
    Rng rng(11);
    auto op = ForwardOperator::identity(8, 8);
    PairedDataset train;
    for (int i = 0; i < 30; ++i) {
        Image x = smooth_image(8, 8, rng);
        auto y = add_noise(op.apply(x), NoiseModel{0.1, rng.next_u64()});
        train.push_back({x, y});
    }
    DenoiserModel model(nn::build_denoiser(6, 3, 17), 8, 8);
    auto optim = nn::Optimizer::adam(3e-3);
    auto result = train_supervised(model, train, optim, 12, 23);
    CHECK(result.loss_trace.back() <= result.loss_trace.front());

    Rng hrng(401);
    double net_mse = 0.0, input_mse = 0.0;
    for (int i = 0; i < 10; ++i) {
        Image x = smooth_image(8, 8, hrng);
        auto y = add_noise(op.apply(x), NoiseModel{0.1, hrng.next_u64()});
        Image den = model.reconstruct(y);
        net_mse += mse_to(den, x);
        input_mse += mse_to(Image(8, 8, y.data), x);
    }
    CHECK(net_mse < input_mse);
}

TEST_CASE("unrolled model with identity prox reproduces plain gradient descent bit for bit") {
    Rng rng(13);
    auto op = ForwardOperator::convolution(6, 6, make_gaussian_kernel(3, 1.0), 3, 3);
    Image truth = smooth_image(6, 6, rng);
    auto y = op.apply(truth);

    UnrolledModel model(op, 4, nn::Network{}, 0.5);
    Image out = model.reconstruct(y);

    double eta = model.eta();
    std::vector<double> x(op.input_size(), 0.0);
    for (int k = 0; k < 4; ++k) {
        std::vector<double> r = op.apply_vec(x);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y.data[i];
        std::vector<double> g = op.adjoint_vec(r);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= eta * g[i];
    }
    CHECK(out.data == x);
}

TEST_CASE("single unrolled block with identity prox and unit step on A=I returns y") {
    auto op = ForwardOperator::identity(2, 2);
    UnrolledModel model(op, 1, nn::Network{}, 1.0);
    MeasurementVector y({0.3, -0.4, 0.9, 0.0});
    Image out = model.reconstruct(y);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out.data[i] == doctest::Approx(y.data[i]).epsilon(1e-12));
}

TEST_CASE("training-loss gradient with respect to eta matches finite differences") {
    Rng rng(17);
    auto op = ForwardOperator::convolution(5, 5, make_gaussian_kernel(3, 0.9), 3, 3);
    Image truth = smooth_image(5, 5, rng);
    auto y = op.apply(truth);
    UnrolledModel model(op, 3, nn::Network{}, 0.4);

    auto loss_value = [&]() {
        nn::Tensor out = model.forward(y);
        nn::Tensor t = nn::Tensor::constant(out.shape(), truth.data);
        return nn::mse(out, t);
    };
    nn::Tensor loss = loss_value();
    auto params = model.parameters();  // only eta_raw (empty prox net)
    REQUIRE(params.size() == 1);
    nn::Optimizer::zero_grad(params);
    nn::backward(loss, {1.0});
    double ad = params[0].grad()[0];

    double h = 1e-6;
    double orig = params[0].value()[0];
    params[0].mutable_value()[0] = orig + h;
    double fp = loss_value().value()[0];
    params[0].mutable_value()[0] = orig - h;
    double fm = loss_value().value()[0];
    params[0].mutable_value()[0] = orig;
    double fd = (fp - fm) / (2.0 * h);
    CHECK(std::abs(ad - fd) / std::max({std::abs(fd), std::abs(ad), 1e-12}) <= 1e-4);
}

TEST_CASE("supervised memorization of the identity task drives the loss below 1e-4") {
    Rng rng(19);
    auto op = ForwardOperator::identity(6, 6);
    PairedDataset data;
    for (int i = 0; i < 8; ++i) {
        Image x = smooth_image(6, 6, rng);
        data.push_back({x, op.apply(x)});  // y = x, no noise
    }
    DenoiserModel model(nn::build_denoiser(4, 2, 29), 6, 6);
    auto optim = nn::Optimizer::adam(1e-2);
    auto result = train_supervised(model, data, optim, 40, 31);
    CHECK(result.loss_trace.back() < 1e-4);
}

TEST_CASE("training is deterministic given the seed") {
    Rng rng(23);
    auto op = ForwardOperator::identity(6, 6);
    PairedDataset data;
    for (int i = 0; i < 6; ++i) {
        Image x = smooth_image(6, 6, rng);
        auto y = add_noise(op.apply(x), NoiseModel{0.05, rng.next_u64()});
        data.push_back({x, y});
    }
    auto run = [&]() {
        DenoiserModel model(nn::build_denoiser(4, 2, 7), 6, 6);
        auto optim = nn::Optimizer::adam(1e-3);
        train_supervised(model, data, optim, 3, 99);
        return model.network().flat_parameters();
    };
    CHECK(run() == run());
    CHECK_THROWS_AS([&] {
        DenoiserModel m(nn::build_denoiser(4, 2, 7), 6, 6);
        auto opt = nn::Optimizer::adam(1e-3);
        train_supervised(m, PairedDataset{}, opt, 1, 0);
    }(), ValidationError);
}

TEST_CASE("sure_loss closed forms") {
    Rng rng(29);
    std::vector<double> y = randn(64, rng);
    double sigma = 0.3;
    VecEstimator identity_f = [](const std::vector<double>& v) { return v; };
    CHECK(sure_loss(identity_f, y, sigma, DivergenceMode::exact_linear()) ==
          doctest::Approx(sigma * sigma).epsilon(1e-12));

    VecEstimator zero_f = [](const std::vector<double>& v) { return std::vector<double>(v.size(), 0.0); };
    double expect = dot(y, y) / 64.0 - sigma * sigma;
    CHECK(sure_loss(zero_f, y, sigma, DivergenceMode::exact_linear()) == doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS(sure_loss(identity_f, y, 0.0, DivergenceMode::exact_linear()), ValidationError);
}

TEST_CASE("monte carlo divergence of a linear map is close to trace(W)") {
    Rng rng(31);
    std::size_t n = 64;
    // dominant diagonal keeps the probe variance small
    std::vector<double> W(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        W[i * n + i] = 0.6;
        W[i * n + (i + 1) % n] = 0.2;
        W[i * n + (i + n - 1) % n] = 0.2;
    }
    double trace = 0.6 * static_cast<double>(n);
    VecEstimator f = [&](const std::vector<double>& v) {
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) out[i] += W[i * n + j] * v[j];
        return out;
    };
    std::vector<double> y = randn(n, rng);
    double sigma = 0.25;
    double mc = sure_loss(f, y, sigma, DivergenceMode::monte_carlo(100, 1e-3, 7));
    double exact = sure_loss(f, y, sigma, DivergenceMode::exact_linear());
    // back out the divergence difference: loss difference = 2 sigma^2 (div_mc - trace)/n
    double div_mc = (mc - exact) * static_cast<double>(n) / (2.0 * sigma * sigma) + trace;
    CHECK(std::abs(div_mc - trace) / trace <= 0.02);
}

TEST_CASE("gsure reduces to sure up to the theta-independent constant when A = I") {
    Rng rng(37);
    std::size_t n = 36;
    auto op = ForwardOperator::identity(6, 6);
    PinvContext ctx(op);
    std::vector<double> y = randn(n, rng);
    double sigma = 0.2;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> W = randn(n * n, rng);
        VecEstimator f = [&](const std::vector<double>& v) {
            std::vector<double> out(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) out[i] += 0.1 * W[i * n + j] * v[j];
            return out;
        };
        double s = sure_loss(f, y, sigma, DivergenceMode::exact_linear());
        double g = gsure_loss(f, y, sigma, ctx, DivergenceMode::exact_linear());
        double constant = dot(y, y) / static_cast<double>(n) - sigma * sigma;
        CHECK(std::abs((s - g) - constant) <= 1e-8);
    }
}

TEST_CASE("row-space projection is idempotent") {
    Rng rng(41);
    std::vector<int> mask(36, 0);
    for (std::size_t i = 0; i < 36; i += 3) mask[i] = 1;
    auto op = ForwardOperator::subsample(6, 6, mask);
    PinvContext ctx(op);
    std::vector<double> v = randn(36, rng);
    auto pv = ctx.project(v);
    auto ppv = ctx.project(pv);
    double diff = 0.0;
    for (std::size_t i = 0; i < 36; ++i) diff += (ppv[i] - pv[i]) * (ppv[i] - pv[i]);
    CHECK(std::sqrt(diff) <= 1e-8);
}

TEST_CASE("minimizing gsure over a linear family matches supervised regression on the observed subspace") {
    // inpainting on 4x4 images, linear estimator f(y) = W y
    Rng rng(43);
    std::size_t h = 4, w = 4, n = 16;
    std::vector<int> mask = {1, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1};
    auto op = ForwardOperator::subsample(h, w, mask);
    std::size_t m = op.output_size();
    double sigma = 0.1;

    std::vector<Image> xs;
    std::vector<MeasurementVector> ys;
    for (int i = 0; i < 400; ++i) {
        Image x = smooth_image(h, w, rng);
        xs.push_back(x);
        ys.push_back(add_noise(op.apply(x), NoiseModel{sigma, rng.next_u64()}));
    }

    // supervised oracle per observed pixel row: (sum y y^T) w = sum y x_j
    std::vector<double> gram(m * m, 0.0);
    for (const auto& y : ys)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) gram[a * m + b] += y.data[a] * y.data[b];
    auto solve = [&](std::vector<double> A, std::vector<double> b) {
        std::size_t N = b.size();  // gaussian elimination with partial pivoting
        for (std::size_t col = 0; col < N; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < N; ++r)
                if (std::abs(A[r * N + col]) > std::abs(A[piv * N + col])) piv = r;
            for (std::size_t c = 0; c < N; ++c) std::swap(A[col * N + c], A[piv * N + c]);
            std::swap(b[col], b[piv]);
            for (std::size_t r = col + 1; r < N; ++r) {
                double f = A[r * N + col] / A[col * N + col];
                for (std::size_t c = col; c < N; ++c) A[r * N + c] -= f * A[col * N + c];
                b[r] -= f * b[col];
            }
        }
        std::vector<double> x(N);
        for (std::size_t r = N; r-- > 0;) {
            double acc = b[r];
            for (std::size_t c = r + 1; c < N; ++c) acc -= A[r * N + c] * x[c];
            x[r] = acc / A[r * N + r];
        }
        return x;
    };
    const auto& keep = op.keep_indices();
    std::vector<double> W_sup(n * m, 0.0);
    for (std::size_t ki = 0; ki < keep.size(); ++ki) {
        std::size_t j = keep[ki];
        std::vector<double> rhs(m, 0.0);
        for (std::size_t d = 0; d < ys.size(); ++d)
            for (std::size_t a = 0; a < m; ++a) rhs[a] += ys[d].data[a] * xs[d].data[j];
        std::vector<double> wj = solve(gram, rhs);
        for (std::size_t a = 0; a < m; ++a) W_sup[j * m + a] = wj[a];
    }

    // train the same family by minimizing empirical gsure with autodiff
    struct LinearModel {
        nn::Network net;
        nn::Tensor forward(const MeasurementVector& y) const {
            return net.forward(nn::Tensor::constant({y.size()}, y.data));
        }
        std::vector<nn::Tensor> parameters() const { return net.parameters(); }
    };
    LinearModel model;
    Rng mrng(51);
    model.net.add_dense(m, n, mrng);
    for (auto p : model.net.parameters()) std::fill(p.mutable_value().begin(), p.mutable_value().end(), 0.0);
    PinvContext ctx(op);
    auto optim = nn::Optimizer::adam(1e-2);
    train_gsure(model, ys, sigma, ctx, optim, 120, 61, 2, 1e-3);

    // compare masked predictions on held-out measurements
    Rng hrng(71);
    double num = 0.0, den = 0.0;
    for (int t = 0; t < 50; ++t) {
        Image x = smooth_image(h, w, hrng);
        auto y = add_noise(op.apply(x), NoiseModel{sigma, hrng.next_u64()});
        nn::Tensor pred = model.forward(y);
        for (std::size_t ki = 0; ki < keep.size(); ++ki) {
            std::size_t j = keep[ki];
            double sup = 0.0;
            for (std::size_t a = 0; a < m; ++a) sup += W_sup[j * m + a] * y.data[a];
            num += (pred.value()[j] - sup) * (pred.value()[j] - sup);
            den += sup * sup;
        }
    }
    CHECK(std::sqrt(num / den) <= 0.05);
}

TEST_CASE("noise2noise with zero target noise is exactly supervised training") {
    Rng rng(47);
    auto op = ForwardOperator::identity(6, 6);
    PairedDataset data;
    for (int i = 0; i < 6; ++i) {
        Image x = smooth_image(6, 6, rng);
        auto y = add_noise(op.apply(x), NoiseModel{0.1, rng.next_u64()});
        data.push_back({x, y});
    }
    DenoiserModel a(nn::build_denoiser(4, 2, 5), 6, 6);
    DenoiserModel b(nn::build_denoiser(4, 2, 5), 6, 6);
    auto o1 = nn::Optimizer::adam(1e-3);
    auto o2 = nn::Optimizer::adam(1e-3);
    auto ra = train_supervised(a, data, o1, 3, 13);
    auto rb = train_noise2noise(b, data, o2, 3, 13);
    CHECK(a.network().flat_parameters() == b.network().flat_parameters());
    CHECK(ra.loss_trace == rb.loss_trace);
}

TEST_CASE("scalar linear family: noise2noise and supervised minimizers agree within 5%") {
    Rng rng(53);
    std::size_t samples = 10000;
    double sup_num = 0.0, sup_den = 0.0, n2n_num = 0.0, n2n_den = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        double x = rng.uniform();
        double y = x + 0.1 * rng.normal();
        double xt = x + 0.1 * rng.normal();  // independent target noise, E[xt|y] = x
        sup_num += x * y;
        sup_den += y * y;
        n2n_num += xt * y;
        n2n_den += y * y;
    }
    double a_sup = sup_num / sup_den, a_n2n = n2n_num / n2n_den;
    CHECK(std::abs(a_sup - a_n2n) / std::abs(a_sup) <= 0.05);
}

TEST_CASE("train_generator memorizes a small shape dataset") {
    Rng rng(59);
    std::vector<Image> xs;
    for (int i = 0; i < 20; ++i) {
        Image x(8, 8, 0.0);
        std::size_t r0 = rng.index(4), c0 = rng.index(4);
        for (std::size_t r = r0; r < r0 + 4; ++r)
            for (std::size_t c = c0; c < c0 + 4; ++c) x.at(r, c) = 1.0;
        xs.push_back(x);
    }
    Generator gen = train_generator(xs, 16, 200, 3, 1e-2, "unit-shapes");
    CHECK(gen.train_loss < 1e-2);
    CHECK(gen.latent_dim == 16);
    Image g0 = gen.decode(std::vector<double>(16, 0.0));
    CHECK(g0.height == 8);
    CHECK(g0.width == 8);
    Generator gen2 = train_generator(xs, 16, 200, 3, 1e-2, "unit-shapes");
    CHECK(gen.decoder.flat_parameters() == gen2.decoder.flat_parameters());
    CHECK_THROWS_AS(train_generator(xs, 32, 1, 3), ValidationError);  // k > n/4
}

TEST_CASE("csgm recovers through a linear generator with identity measurements") {
    Rng rng(61);
    std::size_t h = 10, w = 10, n = 100, k = 5;
    std::vector<double> B = randn(n * k, rng);
    Generator gen = Generator::linear(h, w, k, B);
    std::vector<double> z_star = randn(k, rng);
    Image x_star = gen.decode(z_star);
    auto op = ForwardOperator::identity(h, w);
    auto y = op.apply(x_star);
    auto rec = csgm_recover(gen, op, y, 2, 1500, 0.05, 7);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (rec.reconstruction.data[i] - x_star.data[i]) * (rec.reconstruction.data[i] - x_star.data[i]);
        den += x_star.data[i] * x_star.data[i];
    }
    CHECK(std::sqrt(num / den) <= 1e-3);
    for (double r0 : rec.restart_initial_losses) CHECK(rec.final_loss <= r0);
}

TEST_CASE("csgm recovers a planted signal from m = 4k gaussian measurements") {
    Rng rng(67);
    std::size_t h = 10, w = 10, k = 5;
    std::vector<double> B = randn(100 * k, rng);
    Generator gen = Generator::linear(h, w, k, B);
    std::vector<double> z_star = randn(k, rng);
    Image x_star = gen.decode(z_star);
    auto op = ForwardOperator::compressive(h, w, 4 * k, 91);
    auto y = op.apply(x_star);
    auto rec = csgm_recover(gen, op, y, 3, 2000, 0.05, 11);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
        num += (rec.reconstruction.data[i] - x_star.data[i]) * (rec.reconstruction.data[i] - x_star.data[i]);
        den += x_star.data[i] * x_star.data[i];
    }
    CHECK(std::sqrt(num / den) <= 1e-2);
}

TEST_CASE("degenerate zero-dimensional generator returns its constant regardless of y") {
    Generator gen;
    gen.latent_dim = 0;
    gen.out_h = 2;
    gen.out_w = 2;
    Rng grng(3);
    gen.decoder.add_dense(0, 4, grng);
    auto params = gen.decoder.parameters();
    params[1].mutable_value() = {0.5, -0.25, 1.0, 0.0};
    auto op = ForwardOperator::identity(2, 2);
    auto rec1 = csgm_recover(gen, op, MeasurementVector({9.0, 9.0, 9.0, 9.0}), 1, 10, 0.1);
    auto rec2 = csgm_recover(gen, op, MeasurementVector({-3.0, 0.0, 1.0, 2.0}), 1, 10, 0.1);
    CHECK(rec1.reconstruction.data == std::vector<double>{0.5, -0.25, 1.0, 0.0});
    CHECK(rec1.reconstruction.data == rec2.reconstruction.data);
}

TEST_CASE("measurement sweep table has the right shape and improves with more measurements") {
    Rng rng(71);
    std::size_t k = 3;
    std::vector<double> B = randn(36 * k, rng);
    Generator gen = Generator::linear(6, 6, k, B);
    auto table = csgm_measurement_sweep(gen, 5, {k, 8 * k}, 5, 1, 400, 0.05);
    REQUIRE(table.size() == 2);
    CHECK(table[0].errors.size() == 5);
    CHECK(table[1].errors.size() == 5);
    CHECK(table[1].median_error <= table[0].median_error);
}

TEST_CASE("dip fits a smooth target and is deterministic") {
    Rng rng(73);
    Image target = smooth_image(16, 16, rng);
    auto op = ForwardOperator::identity(16, 16);
    auto y = op.apply(target);
    auto run = [&]() {
        return dip_reconstruct(op, y, nn::build_decoder(8, 2, 5), 8, 150, 50, 9, 1e-2);
    };
    auto r1 = run();
    auto r2 = run();
    CHECK(r1.loss_trace == r2.loss_trace);
    CHECK(r1.final.data == r2.final.data);
    CHECK(r1.loss_trace.back() < r1.loss_trace.front());
    CHECK(!r1.checkpoints.empty());
    CHECK(r1.checkpoints.front().first == 0);
}

}  // TEST_SUITE

// Generative-prior recovery (CSGM) and untrained priors (deep image prior
// with an underparameterized decoder).
#ifndef INVKIT_GENERATIVE_HPP
#define INVKIT_GENERATIVE_HPP

#include "invkit/learned.hpp"

namespace invkit::learned {

// Decoder G: R^k -> R^n with training provenance. The decoder input is a
// flat latent {k} for dense decoders.
struct Generator {
    std::size_t latent_dim = 0;
    std::size_t out_h = 0, out_w = 0;
    nn::Network decoder;
    std::string provenance;
    double train_loss = 0.0;  // mean per-sample reconstruction MSE, last epoch

    Image decode(const std::vector<double>& z) const {
        if (z.size() != latent_dim) throw ValidationError("generator: latent size mismatch");
        nn::Tensor out = decoder.forward(nn::Tensor::constant({latent_dim}, z));
        return Image(out_h, out_w, out.value());
    }

    nn::Tensor decode_graph(const nn::Tensor& z) const { return decoder.forward(z); }

    // Explicit linear generator G(z) = Bz with B {n x k}; the analytic ground
    // truth for planted-recovery experiments.
    static Generator linear(std::size_t h, std::size_t w, std::size_t k, const std::vector<double>& matrix) {
        if (matrix.size() != h * w * k) throw ValidationError("generator: matrix must be (h*w) x k");
        Generator g;
        g.latent_dim = k;
        g.out_h = h;
        g.out_w = w;
        Rng rng(0);
        g.decoder.add_dense(k, h * w, rng);
        auto params = g.decoder.parameters();  // weight {n,k}, bias {n}
        std::copy(matrix.begin(), matrix.end(), params[0].mutable_value().begin());
        std::fill(params[1].mutable_value().begin(), params[1].mutable_value().end(), 0.0);
        g.provenance = "linear";
        return g;
    }
};

// Trains a dense autoencoder on x-only data by reconstruction loss and keeps
// the decoder as G. Deterministic stand-in for adversarial/VAE training,
// which is out of scope; the provenance string records this.
inline Generator train_generator(const std::vector<Image>& xs, std::size_t k, std::size_t epochs, std::uint64_t seed,
                                 double lr = 1e-2, const std::string& dataset_id = "") {
    if (xs.empty()) throw ValidationError("train_generator: empty dataset");
    std::size_t h = xs[0].height, w = xs[0].width, n = h * w;
    if (4 * k > n) throw ValidationError("train_generator: latent dim must satisfy k <= n/4");

    Rng rng = Rng(seed).fork(0x9e4);
    nn::Network encoder;
    encoder.add_dense(n, k, rng);
    nn::Network decoder;
    decoder.add_dense(k, n, rng);

    std::vector<nn::Tensor> params = encoder.parameters();
    for (const auto& p : decoder.parameters()) params.push_back(p);
    auto optim = nn::Optimizer::adam(lr);

    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double last_epoch_loss = 0.0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng erng = Rng(seed).fork(epoch);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[erng.index(i)]);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            nn::Tensor x = nn::Tensor::constant({n}, xs[idx].data);
            nn::Tensor rec = decoder.forward(encoder.forward(x));
            nn::Tensor loss = nn::mse(rec, x);
            if (!std::isfinite(loss.value()[0])) throw NumericError("train_generator: loss became non-finite");
            epoch_loss += loss.value()[0];
            nn::Optimizer::zero_grad(params);
            nn::backward(loss, {1.0});
            optim.step(params);
        }
        last_epoch_loss = epoch_loss / static_cast<double>(xs.size());
    }

    Generator g;
    g.train_loss = last_epoch_loss;
    g.latent_dim = k;
    g.out_h = h;
    g.out_w = w;
    g.decoder = std::move(decoder);
    g.provenance = "autoencoder k=" + std::to_string(k) + " seed=" + std::to_string(seed) +
                   (dataset_id.empty() ? "" : " dataset=" + dataset_id);
    return g;
}

struct CsgmReport {
    std::vector<double> latent;  // z-hat
    Image reconstruction;        // G(z-hat)
    double final_loss = 0.0;
    std::vector<double> restart_final_losses;
    std::vector<double> restart_initial_losses;
    std::size_t best_restart = 0;
};

// z-hat = argmin_z ||A G(z) - y||^2 by Adam from seeded random starts; the
// restart with the lowest final measurement loss wins. Per-restart losses are
// reported so silent failures stay visible.
inline CsgmReport csgm_recover(const Generator& gen, const ForwardOperator& op, const MeasurementVector& y,
                               std::size_t restarts, std::size_t steps, double lr, std::uint64_t seed = 0) {
    if (restarts < 1) throw ValidationError("csgm: restarts must be >= 1");
    if (op.input_size() != gen.out_h * gen.out_w) throw ValidationError("csgm: generator/operator shape mismatch");

    auto measurement_loss = [&](const std::vector<double>& z) {
        Image x = gen.decode(z);
        std::vector<double> ax = op.apply_vec(x.data);
        double s = 0.0;
        for (std::size_t i = 0; i < ax.size(); ++i) s += (ax[i] - y.data[i]) * (ax[i] - y.data[i]);
        return s;
    };

    CsgmReport report;
    double best = std::numeric_limits<double>::infinity();
    bool any_finite = false;
    for (std::size_t restart = 0; restart < restarts; ++restart) {
        Rng rng = Rng(seed).fork(0xc56).fork(restart);
        std::vector<double> z0(gen.latent_dim);
        for (double& v : z0) v = rng.normal();
        report.restart_initial_losses.push_back(measurement_loss(z0));

        nn::Tensor z = nn::Tensor::variable({gen.latent_dim}, z0);
        auto optim = nn::Optimizer::adam(lr);
        bool finite = true;
        for (std::size_t t = 0; t < steps; ++t) {
            nn::Tensor x = gen.decode_graph(z);
            nn::Tensor ax = nn::apply_operator(op, x);
            nn::Tensor yt = nn::Tensor::constant({y.size()}, y.data);
            nn::Tensor d = nn::sub(ax, yt);
            nn::Tensor loss = nn::sum(nn::mul(d, d));
            if (!std::isfinite(loss.value()[0])) {
                finite = false;
                break;
            }
            z.zero_grad();
            nn::backward(loss, {1.0});
            optim.step({z});
        }
        if (!finite || !all_finite(z.value())) {
            report.restart_final_losses.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        double fl = measurement_loss(z.value());
        report.restart_final_losses.push_back(fl);
        any_finite = true;
        if (fl < best) {
            best = fl;
            report.latent = z.value();
            report.best_restart = restart;
        }
    }
    if (!any_finite) throw NumericError("csgm: all restarts produced non-finite iterates");
    report.final_loss = best;
    report.reconstruction = gen.decode(report.latent);
    return report;
}

struct SweepRow {
    std::size_t m = 0;
    std::vector<double> errors;  // one per trial
    double median_error = 0.0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Median relative recovery error versus measurement count for planted
// signals x* = G(z*), y = A x* noiseless, Gaussian A seeded per trial.
// Qualitative context for the recovery guarantee, not a proof.
inline std::vector<SweepRow> csgm_measurement_sweep(const Generator& gen, std::uint64_t ensemble_seed,
                                                    const std::vector<std::size_t>& m_list, std::size_t trials,
                                                    std::size_t restarts, std::size_t steps, double lr) {
    std::vector<SweepRow> table;
    for (std::size_t m : m_list) {
        SweepRow row;
        row.m = m;
        for (std::size_t trial = 0; trial < trials; ++trial) {
            Rng rng = Rng(ensemble_seed).fork(m).fork(trial);
            std::vector<double> z_star(gen.latent_dim);
            for (double& v : z_star) v = rng.normal();
            Image x_star = gen.decode(z_star);
            auto op = ForwardOperator::compressive(gen.out_h, gen.out_w, m, rng.next_u64());
            MeasurementVector y = op.apply(x_star);
            CsgmReport rec = csgm_recover(gen, op, y, restarts, steps, lr, rng.next_u64());
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < x_star.size(); ++i) {
                num += (rec.reconstruction.data[i] - x_star.data[i]) * (rec.reconstruction.data[i] - x_star.data[i]);
                den += x_star.data[i] * x_star.data[i];
            }
            row.errors.push_back(std::sqrt(num) / std::max(std::sqrt(den), 1e-300));
        }
        row.median_error = detail::median_of(row.errors);
        table.push_back(std::move(row));
    }
    return table;
}

struct DipResult {
    Image final;
    Image best;  // iterate at the first measurement-loss plateau
    std::size_t best_iteration = 0;
    bool plateau_found = false;
    std::vector<double> loss_trace;
    std::vector<std::pair<std::size_t, Image>> checkpoints;
};

// Deep image prior: fit decoder weights to a single measurement with a fixed
// random latent, Adam, recording the loss trajectory and periodic
// reconstructions. The plateau heuristic (window 50, relative change < 1e-3)
// marks the early-stopping iterate; the full trajectory is kept so callers
// can pick any other.
inline DipResult dip_reconstruct(const ForwardOperator& op, const MeasurementVector& y, nn::Network decoder,
                                 std::size_t latent_channels, std::size_t iterations, std::size_t checkpoint_every,
                                 std::uint64_t seed, double lr = 1e-2) {
    if (iterations < 1) throw ValidationError("dip: iteration budget must be >= 1");
    std::size_t H = op.input_height(), W = op.input_width();
    std::size_t up = 1;
    for (const auto& l : decoder.layers())
        if (l.kind == nn::LayerKind::upsample_nearest) up *= l.factor;
    if (H % up != 0 || W % up != 0) throw ValidationError("dip: decoder upsampling does not divide image dims");
    std::size_t h0 = H / up, w0 = W / up;

    Rng rng = Rng(seed).fork(0xd1b);
    std::vector<double> zdata(latent_channels * h0 * w0);
    for (double& v : zdata) v = 0.1 * rng.normal();
    nn::Tensor z = nn::Tensor::constant({latent_channels, h0, w0}, zdata);

    std::vector<nn::Tensor> params = decoder.parameters();
    auto optim = nn::Optimizer::adam(lr);

    DipResult result;
    const std::size_t window = 50;
    const double plateau_tol = 1e-3;
    for (std::size_t t = 0; t < iterations; ++t) {
        nn::Tensor x = decoder.forward(z);
        nn::Tensor ax = nn::apply_operator(op, x);
        nn::Tensor yt = nn::Tensor::constant({y.size()}, y.data);
        nn::Tensor d = nn::sub(ax, yt);
        nn::Tensor loss = nn::sum(nn::mul(d, d));
        double lv = loss.value()[0];
        if (!std::isfinite(lv)) throw NumericError("dip: loss became non-finite");
        result.loss_trace.push_back(lv);

        Image recon(H, W, x.value());
        if (checkpoint_every > 0 && t % checkpoint_every == 0) result.checkpoints.emplace_back(t, recon);
        if (!result.plateau_found && t >= window) {
            double past = result.loss_trace[t - window];
            if ((past - lv) / std::max(past, 1e-300) < plateau_tol) {
                result.plateau_found = true;
                result.best_iteration = t;
                result.best = recon;
            }
        }
        result.final = std::move(recon);

        nn::Optimizer::zero_grad(params);
        nn::backward(loss, {1.0});
        optim.step(params);
    }
    if (!result.plateau_found) {
        result.best = result.final;
        result.best_iteration = iterations - 1;
    }
    return result;
}

}  // namespace invkit::learned

#endif  // INVKIT_GENERATIVE_HPP

// The taxonomy/robustness experiment harness: scenario validation against
// the implemented (forward-knowledge, training-regime) cells, end-to-end
// runs, and the comparative robustness suite.
#ifndef INVKIT_SCENARIO_HPP
#define INVKIT_SCENARIO_HPP

#include <chrono>
#include <iomanip>

#include "invkit/generative.hpp"
#include "invkit/metrics.hpp"
#include "invkit/phantoms.hpp"

namespace invkit::bench {

enum class Knowledge { known_train_test, known_test_only, partial, unknown };

inline const char* to_string(Knowledge k) {
    switch (k) {
        case Knowledge::known_train_test: return "known_train_test";
        case Knowledge::known_test_only: return "known_test_only";
        case Knowledge::partial: return "partial";
        case Knowledge::unknown: return "unknown";
    }
    return "?";
}

inline Knowledge knowledge_from(const std::string& s) {
    if (s == "known_train_test") return Knowledge::known_train_test;
    if (s == "known_test_only") return Knowledge::known_test_only;
    if (s == "partial") return Knowledge::partial;
    if (s == "unknown") return Knowledge::unknown;
    throw ValidationError("scenario: unknown forward-knowledge level '" + s + "'");
}

inline learned::RegimeKind regime_from(const std::string& s) {
    if (s == "paired_xy") return learned::RegimeKind::paired_xy;
    if (s == "x_only") return learned::RegimeKind::x_only;
    if (s == "y_only_sure") return learned::RegimeKind::y_only_sure;
    if (s == "y_only_gsure") return learned::RegimeKind::y_only_gsure;
    if (s == "noise2noise") return learned::RegimeKind::noise2noise;
    throw ValidationError("scenario: unknown training regime '" + s + "'");
}

struct MethodParams {
    // classical solvers
    std::string reg = "tv:0.05";
    double rho = 1.0;
    std::size_t iters = 200;
    double tol = 1e-8;
    double eta = 0.0;
    std::size_t restarts = 2;
    // learned models
    std::size_t blocks = 5;
    std::size_t channels = 8;
    std::size_t depth = 3;
    std::size_t epochs = 10;
    double lr = 2e-3;
    std::size_t sure_probes = 4;
    double sure_eps = 1e-3;
    // csgm
    std::size_t latent = 16;
    std::size_t gen_epochs = 150;
    std::size_t csgm_steps = 600;
    double csgm_lr = 0.05;
    // dip
    std::size_t dip_iters = 400;
    std::size_t dip_channels = 16;
    std::size_t dip_stages = 3;
    std::size_t checkpoint_every = 50;
    double dip_lr = 1e-2;
};

struct Scenario {
    std::string id = "scenario";
    Knowledge knowledge = Knowledge::known_train_test;
    learned::RegimeKind regime = learned::RegimeKind::paired_xy;
    std::string method = "unrolled";

    // forward model
    std::string op_kind = "convolution";
    std::size_t image_h = 32, image_w = 32;
    std::size_t kernel_size = 5;
    double blur_sigma = 1.2;
    double mask_fraction = 0.5;
    std::size_t compressive_m = 0;  // 0 -> n/2
    std::size_t sr_factor = 2;
    std::size_t n_angles = 24, n_detectors = 47;

    // data
    std::string phantom = "shapes";
    std::size_t n_train = 80, n_test = 20;
    double noise_sigma = 0.05;

    // test-time operator perturbation (empty = none)
    std::string perturb_kind;
    double perturb_eps = 0.0;

    // out-of-distribution feature on test images (0 = none)
    std::size_t feature_size = 0;
    double feature_intensity = 1.0;

    bool record_timing = false;  // off by default so reports are byte-reproducible
    MethodParams params;
    std::uint64_t seed = 1;

    std::string canonical_string() const {
        std::ostringstream os;
        os << id << "|" << to_string(knowledge) << "|" << learned::to_string(regime) << "|" << method << "|"
           << op_kind << "|" << image_h << "x" << image_w << "|k" << kernel_size << "|bs" << blur_sigma << "|mf"
           << mask_fraction << "|m" << compressive_m << "|f" << sr_factor << "|a" << n_angles << "|d" << n_detectors
           << "|" << phantom << "|tr" << n_train << "|te" << n_test << "|ns" << noise_sigma << "|p" << perturb_kind
           << ":" << perturb_eps << "|feat" << feature_size << ":" << feature_intensity << "|t" << record_timing
           << "|seed" << seed << "|reg" << params.reg << "|K" << params.blocks << "|ch" << params.channels << "|ep"
           << params.epochs << "|lr" << params.lr;
        return os.str();
    }

    std::string config_hash() const {  // FNV-1a, hex
        std::uint64_t h = 1469598103934665603ULL;
        for (char c : canonical_string()) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << h;
        return os.str();
    }
};

// ---- taxonomy validation ----

inline bool is_classical_method(const std::string& m) {
    return m == "ml" || m == "pgd" || m == "admm" || m == "pnp" || m == "red" || m == "dip";
}

// Accepts exactly the implemented cells of the method taxonomy and rejects
// everything else with the violated cell constraint spelled out.
inline void validate_scenario(const Scenario& s) {
    const std::string cell = std::string("(") + to_string(s.knowledge) + ", " + learned::to_string(s.regime) + ")";

    if (s.knowledge == Knowledge::unknown) {
        if (s.regime != learned::RegimeKind::paired_xy)
            throw ValidationError("scenario " + cell +
                                  ": with an unknown forward model, paired (x,y) samples are the only mechanism for "
                                  "learning the measurement process; non-paired regimes are rejected");
        throw ValidationError("scenario " + cell +
                              ": fully learned black-box inversion (unknown forward model, paired data) is not "
                              "implemented in this toolkit");
    }

    if (is_classical_method(s.method)) return;  // no training data used; any regime annotation is acceptable

    if (s.method == "unrolled" || s.method == "residual" || s.method == "denoiser") {
        if (s.knowledge != Knowledge::known_train_test || s.regime != learned::RegimeKind::paired_xy)
            throw ValidationError("scenario " + cell + ": method '" + s.method +
                                  "' requires the (known_train_test, paired_xy) cell");
        return;
    }
    if (s.method == "sure") {
        if (s.knowledge != Knowledge::known_train_test || s.regime != learned::RegimeKind::y_only_sure)
            throw ValidationError("scenario " + cell + ": method 'sure' requires (known_train_test, y_only_sure)");
        if (s.op_kind != "identity")
            throw ValidationError("scenario: sure training is defined for the denoising setting A = I");
        if (s.noise_sigma <= 0.0) throw ValidationError("scenario: sure requires a known positive noise sigma");
        return;
    }
    if (s.method == "gsure") {
        if (s.knowledge != Knowledge::known_train_test || s.regime != learned::RegimeKind::y_only_gsure)
            throw ValidationError("scenario " + cell + ": method 'gsure' requires (known_train_test, y_only_gsure)");
        if (s.noise_sigma <= 0.0) throw ValidationError("scenario: gsure requires a known positive noise sigma");
        return;
    }
    if (s.method == "n2n") {
        if (s.regime != learned::RegimeKind::noise2noise)
            throw ValidationError("scenario " + cell + ": method 'n2n' requires the noise2noise regime");
        if (s.knowledge == Knowledge::unknown)
            throw ValidationError("scenario " + cell + ": noise2noise still needs a usable forward model");
        return;
    }
    if (s.method == "csgm") {
        if (s.regime != learned::RegimeKind::x_only)
            throw ValidationError("scenario " + cell + ": method 'csgm' trains a generative prior from x-only data");
        if (s.knowledge == Knowledge::unknown)
            throw ValidationError("scenario " + cell + ": csgm needs the forward model at reconstruction time");
        return;
    }
    throw ValidationError("scenario: unknown method '" + s.method + "'");
}

// ---- reports ----

struct ReportRow {
    std::string scenario_id;
    std::string method;
    std::size_t image_id = 0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double runtime_ms = 0.0;
    std::uint64_t seed = 0;
};

struct Report {
    std::vector<ReportRow> rows;
    double psnr_mean = 0.0, psnr_median = 0.0, ssim_mean = 0.0;
    std::string scenario_id, method, config_hash;
    std::uint64_t seed = 0;
    // panel / error-map material
    std::vector<Image> ground_truths, backprojections, reconstructions, error_maps;
    double feature_region_mae = -1.0;  // >= 0 only when a feature was inserted
};

namespace detail {

inline double median_of_rows(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 == 1 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

inline void format_value(std::ostringstream& os, double v, int precision) {
    if (std::isinf(v)) {
        os << (v > 0 ? "inf" : "-inf");
    } else {
        os << std::fixed << std::setprecision(precision) << v;
    }
}

}  // namespace detail

inline constexpr const char* kReportCsvHeader = "scenario_id,method,image_id,psnr_db,ssim,runtime_ms,seed\n";

inline std::string report_csv_rows(const Report& r) {
    std::ostringstream os;
    for (const auto& row : r.rows) {
        os << row.scenario_id << "," << row.method << "," << row.image_id << ",";
        detail::format_value(os, row.psnr_db, 6);
        os << ",";
        detail::format_value(os, row.ssim, 6);
        os << ",";
        detail::format_value(os, row.runtime_ms, 3);
        os << "," << row.seed << "\n";
    }
    return os.str();
}

// Per-image CSV: scenario_id, method, image_id, psnr_db, ssim, runtime_ms, seed
inline std::string report_csv(const Report& r) { return std::string(kReportCsvHeader) + report_csv_rows(r); }

// Aggregate CSV: scenario_id, method, psnr_mean, psnr_median, ssim_mean, n
inline std::string aggregate_csv(const std::vector<Report>& reports) {
    std::ostringstream os;
    os << "scenario_id,method,psnr_mean,psnr_median,ssim_mean,n\n";
    for (const auto& r : reports) {
        os << r.scenario_id << "," << r.method << ",";
        detail::format_value(os, r.psnr_mean, 6);
        os << ",";
        detail::format_value(os, r.psnr_median, 6);
        os << ",";
        detail::format_value(os, r.ssim_mean, 6);
        os << "," << r.rows.size() << "\n";
    }
    return os.str();
}

// ---- operator construction from a scenario ----

inline ForwardOperator build_operator(const Scenario& s) {
    std::size_t h = s.image_h, w = s.image_w, n = h * w;
    if (s.op_kind == "identity") return ForwardOperator::identity(h, w);
    if (s.op_kind == "convolution")
        return ForwardOperator::convolution(h, w, make_gaussian_kernel(s.kernel_size, s.blur_sigma), s.kernel_size,
                                            s.kernel_size);
    if (s.op_kind == "subsample" || s.op_kind == "mri") {
        Rng rng = Rng(s.seed).fork(0x3a5c);
        std::vector<int> mask(n, 0);
        std::size_t want = std::max<std::size_t>(1, static_cast<std::size_t>(s.mask_fraction * static_cast<double>(n)));
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
        for (std::size_t i = 0; i < want; ++i) mask[idx[i]] = 1;
        if (s.op_kind == "subsample") return ForwardOperator::subsample(h, w, mask);
        mask[0] = 1;  // always keep the DC coefficient
        return ForwardOperator::mri(h, w, mask);
    }
    if (s.op_kind == "superresolution")
        return ForwardOperator::superresolution(h, w, make_gaussian_kernel(s.kernel_size, s.blur_sigma), s.kernel_size,
                                                s.kernel_size, s.sr_factor);
    if (s.op_kind == "compressive") {
        std::size_t m = s.compressive_m ? s.compressive_m : n / 2;
        return ForwardOperator::compressive(h, w, m, Rng(s.seed).fork(0xc0fe).next_u64());
    }
    if (s.op_kind == "radon") return ForwardOperator::radon(h, w, s.n_angles, s.n_detectors);
    throw ValidationError("scenario: unknown operator kind '" + s.op_kind + "'");
}

// ---- dataset generation ----

struct ScenarioData {
    std::vector<Image> train_x, test_x;
    std::vector<MeasurementVector> train_y;  // via the train operator
};

inline ScenarioData generate_data(const Scenario& s, const ForwardOperator& train_op) {
    ScenarioData d;
    std::size_t total = s.n_train + s.n_test;
    std::vector<Image> all;
    for (std::size_t i = 0; i < total; ++i)
        all.push_back(make_phantom(s.phantom, s.image_h, s.image_w, Rng(s.seed).fork(0xda7a).fork(i).next_u64()));
    // deterministic split by seeded shuffle
    std::vector<std::size_t> idx(total);
    for (std::size_t i = 0; i < total; ++i) idx[i] = i;
    Rng srng = Rng(s.seed).fork(0x59117);
    for (std::size_t i = total; i > 1; --i) std::swap(idx[i - 1], idx[srng.index(i)]);
    for (std::size_t i = 0; i < s.n_train; ++i) d.train_x.push_back(all[idx[i]]);
    for (std::size_t i = s.n_train; i < total; ++i) d.test_x.push_back(all[idx[i]]);
    for (std::size_t i = 0; i < d.train_x.size(); ++i) {
        auto y = add_noise(train_op.apply(d.train_x[i]), NoiseModel{s.noise_sigma, Rng(s.seed).fork(0x401).fork(i).next_u64()});
        d.train_y.push_back(std::move(y));
    }
    return d;
}

// ---- method preparation (training) and evaluation ----

// A reconstruction routine bound to the operator the method ASSUMES; test
// measurements may come from a perturbed operator.
struct PreparedMethod {
    std::string name;
    std::function<Image(const MeasurementVector&)> reconstruct;
};

inline Regularizer parse_regularizer(const std::string& spec) {
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon);
    double lambda = colon == std::string::npos ? 0.0 : std::stod(spec.substr(colon + 1));
    if (kind == "zero") return Regularizer::zero();
    if (kind == "tikhonov") return Regularizer::tikhonov(lambda);
    if (kind == "l1") return Regularizer::l1(lambda);
    if (kind == "tv") return Regularizer::tv(lambda);
    throw ValidationError("regularizer: unknown kind '" + kind + "'");
}

inline PreparedMethod prepare_method(const Scenario& s, const ForwardOperator& assumed, const ScenarioData& data) {
    const MethodParams& p = s.params;
    SolveConfig cfg;
    cfg.max_iters = p.iters;
    cfg.tol = p.tol;
    cfg.eta = p.eta;
    cfg.seed = s.seed;
    auto op_ptr = std::make_shared<ForwardOperator>(assumed);  // reconstructors own the operator they assume
    const ForwardOperator& op = *op_ptr;

    if (s.method == "ml") {
        Regularizer reg = parse_regularizer(p.reg);
        double lambda = reg.kind() == RegKind::tikhonov ? reg.lambda() : 0.0;
        return {"ml", [op_ptr, lambda, cfg](const MeasurementVector& y) {
                    return ml_least_squares(*op_ptr, y, lambda, cfg).reconstruction;
                }};
    }
    if (s.method == "pgd") {
        Regularizer reg = parse_regularizer(p.reg);
        return {"pgd", [op_ptr, reg, cfg](const MeasurementVector& y) { return prox_gradient(*op_ptr, y, reg, cfg).reconstruction; }};
    }
    if (s.method == "admm") {
        Regularizer reg = parse_regularizer(p.reg);
        double rho = p.rho;
        return {"admm", [op_ptr, reg, rho, cfg](const MeasurementVector& y) { return admm(*op_ptr, y, reg, rho, cfg).reconstruction; }};
    }
    if (s.method == "pnp") {
        Regularizer reg = parse_regularizer(p.reg);
        Denoiser den = [reg](const Image& z) { return reg.prox(z, 1.0); };
        double rho = p.rho;
        return {"pnp", [op_ptr, den, rho, cfg](const MeasurementVector& y) { return pnp_admm(*op_ptr, y, den, rho, cfg).reconstruction; }};
    }
    if (s.method == "red") {
        Regularizer reg = parse_regularizer(p.reg);
        Denoiser den = [reg](const Image& z) { return reg.prox(z, 1.0); };
        double lambda = reg.lambda();
        return {"red", [op_ptr, den, lambda, cfg](const MeasurementVector& y) {
                    return red_solve(*op_ptr, y, den, lambda, cfg).reconstruction;
                }};
    }
    if (s.method == "dip") {
        auto params = p;
        std::uint64_t seed = s.seed;
        return {"dip", [op_ptr, params, seed](const MeasurementVector& y) {
                    auto dec = nn::build_decoder(params.dip_channels, params.dip_stages, seed);
                    auto res = learned::dip_reconstruct(*op_ptr, y, std::move(dec), params.dip_channels, params.dip_iters,
                                                        params.checkpoint_every, seed, params.dip_lr);
                    return res.best;
                }};
    }
    if (s.method == "unrolled") {
        auto model = std::make_shared<learned::UnrolledModel>(
            op, p.blocks, nn::build_denoiser(p.channels, p.depth, s.seed), 0.9 / std::max(estimate_op_norm_sq(op), 1e-12));
        learned::PairedDataset ds;
        for (std::size_t i = 0; i < data.train_x.size(); ++i) ds.push_back({data.train_x[i], data.train_y[i]});
        auto optim = nn::Optimizer::adam(p.lr);
        learned::train_supervised(*model, ds, optim, p.epochs, s.seed);
        return {"unrolled", [model](const MeasurementVector& y) { return model->reconstruct(y); }};
    }
    if (s.method == "residual") {
        auto model = std::make_shared<learned::ResidualModel>(nn::build_denoiser(p.channels, p.depth, s.seed),
                                                              learned::ApproxInverse::default_for(op));
        learned::PairedDataset ds;
        for (std::size_t i = 0; i < data.train_x.size(); ++i) ds.push_back({data.train_x[i], data.train_y[i]});
        auto optim = nn::Optimizer::adam(p.lr);
        learned::train_supervised(*model, ds, optim, p.epochs, s.seed);
        return {"residual", [model](const MeasurementVector& y) { return model->reconstruct(y); }};
    }
    if (s.method == "denoiser" || s.method == "n2n" || s.method == "sure") {
        auto model = std::make_shared<learned::DenoiserModel>(nn::build_denoiser(p.channels, p.depth, s.seed),
                                                              s.image_h, s.image_w);
        auto optim = nn::Optimizer::adam(p.lr);
        if (s.method == "sure") {
            learned::train_sure(*model, data.train_y, s.noise_sigma, optim, p.epochs, s.seed, p.sure_probes, p.sure_eps);
        } else if (s.method == "n2n") {
            // independent noisy proxies of the ground truth as targets
            learned::PairedDataset ds;
            for (std::size_t i = 0; i < data.train_x.size(); ++i) {
                Image noisy_target = data.train_x[i];
                Rng rng = Rng(s.seed).fork(0x2727).fork(i);
                for (double& v : noisy_target.data) v += s.noise_sigma * rng.normal();
                ds.push_back({noisy_target, data.train_y[i]});
            }
            learned::train_noise2noise(*model, ds, optim, p.epochs, s.seed);
        } else {
            learned::PairedDataset ds;
            for (std::size_t i = 0; i < data.train_x.size(); ++i) ds.push_back({data.train_x[i], data.train_y[i]});
            learned::train_supervised(*model, ds, optim, p.epochs, s.seed);
        }
        return {s.method, [model](const MeasurementVector& y) { return model->reconstruct(y); }};
    }
    if (s.method == "gsure") {
        auto model = std::make_shared<learned::ResidualModel>(nn::build_denoiser(p.channels, p.depth, s.seed),
                                                              learned::ApproxInverse::default_for(op));
        learned::PinvContext ctx(op);
        auto optim = nn::Optimizer::adam(p.lr);
        learned::train_gsure(*model, data.train_y, s.noise_sigma, ctx, optim, p.epochs, s.seed, p.sure_probes,
                             p.sure_eps);
        return {"gsure", [model](const MeasurementVector& y) { return model->reconstruct(y); }};
    }
    if (s.method == "csgm") {
        auto gen = std::make_shared<learned::Generator>(
            learned::train_generator(data.train_x, p.latent, p.gen_epochs, s.seed, 1e-2, s.id));
        auto params = p;
        std::uint64_t seed = s.seed;
        return {"csgm", [gen, op_ptr, params, seed](const MeasurementVector& y) {
                    return learned::csgm_recover(*gen, *op_ptr, y, params.restarts, params.csgm_steps, params.csgm_lr, seed)
                        .reconstruction;
                }};
    }
    throw ValidationError("scenario: unknown method '" + s.method + "'");
}

// Evaluates a prepared method on test images measured through `data_op`
// (possibly a perturbed version of the operator the method assumes).
inline Report evaluate_method(const Scenario& s, const PreparedMethod& method, const ForwardOperator& assumed_op,
                              const ForwardOperator& data_op, const std::vector<Image>& test_images) {
    Report rep;
    rep.scenario_id = s.id;
    rep.method = method.name;
    rep.config_hash = s.config_hash();
    rep.seed = s.seed;

    double mae_acc = 0.0;
    std::size_t mae_count = 0;
    std::size_t feat_r = 0, feat_c = 0;
    if (s.feature_size > 0) {
        feat_r = (s.image_h - s.feature_size) / 2;
        feat_c = (s.image_w - s.feature_size) / 2;
    }

    for (std::size_t i = 0; i < test_images.size(); ++i) {
        Image truth = test_images[i];
        if (s.feature_size > 0) truth = insert_feature(truth, s.feature_size, s.feature_intensity, feat_r, feat_c);
        std::uint64_t ns = Rng(s.seed).fork(0x7e57).fork(i).next_u64();
        MeasurementVector y = add_noise(data_op.apply(truth), NoiseModel{s.noise_sigma, ns});

        auto t0 = std::chrono::steady_clock::now();
        Image recon = method.reconstruct(y);
        auto t1 = std::chrono::steady_clock::now();

        ReportRow row;
        row.scenario_id = s.id;
        row.method = method.name;
        row.image_id = i;
        row.psnr_db = psnr(truth, recon, 1.0);
        row.ssim = ssim(truth, recon);
        row.runtime_ms = s.record_timing ? std::chrono::duration<double, std::milli>(t1 - t0).count() : 0.0;
        row.seed = ns;
        rep.rows.push_back(row);

        Image errmap(truth.height, truth.width);
        for (std::size_t px = 0; px < truth.size(); ++px) errmap.data[px] = std::abs(recon.data[px] - truth.data[px]);
        if (s.feature_size > 0) {
            for (std::size_t r = feat_r; r < feat_r + s.feature_size; ++r)
                for (std::size_t c = feat_c; c < feat_c + s.feature_size; ++c) {
                    mae_acc += errmap.at(r, c);
                    ++mae_count;
                }
        }
        rep.ground_truths.push_back(truth);
        rep.backprojections.push_back(assumed_op.is_linear() ? assumed_op.adjoint(y) : Image(truth.height, truth.width));
        rep.reconstructions.push_back(recon);
        rep.error_maps.push_back(std::move(errmap));
    }

    std::vector<double> psnrs;
    for (const auto& r : rep.rows) psnrs.push_back(r.psnr_db);
    double psum = 0.0, ssum = 0.0;
    for (const auto& r : rep.rows) {
        psum += r.psnr_db;
        ssum += r.ssim;
    }
    rep.psnr_mean = psum / static_cast<double>(rep.rows.size());
    rep.psnr_median = detail::median_of_rows(psnrs);
    rep.ssim_mean = ssum / static_cast<double>(rep.rows.size());
    if (mae_count > 0) rep.feature_region_mae = mae_acc / static_cast<double>(mae_count);
    return rep;
}

// Full pipeline: validate, generate data, train if the regime requires,
// reconstruct the test set through the (possibly perturbed) test operator,
// compute metrics. Fully reproducible from (config, seed).
inline Report run_scenario(const Scenario& s) {
    validate_scenario(s);
    ForwardOperator train_op = build_operator(s);
    ScenarioData data = generate_data(s, train_op);
    PreparedMethod method = prepare_method(s, train_op, data);
    ForwardOperator data_op =
        s.perturb_kind.empty() ? train_op
                               : perturb_operator(train_op, s.perturb_kind, s.perturb_eps, Rng(s.seed).fork(0xbad).next_u64());
    return evaluate_method(s, method, train_op, data_op, data.test_x);
}

struct RobustnessRow {
    std::string perturb_kind;
    double eps = 0.0;
    Report report;
    double psnr_drop_median = 0.0;  // baseline median minus perturbed median
};

// Trains once on the unperturbed operator, then reuses the same trained
// model for each perturbed test-time forward model. Emits a PSNR-drop table.
inline std::vector<RobustnessRow> robustness_suite(const Scenario& base,
                                                   const std::vector<std::pair<std::string, double>>& perturbations) {
    Scenario s = base;
    s.perturb_kind.clear();
    s.perturb_eps = 0.0;
    validate_scenario(s);
    ForwardOperator train_op = build_operator(s);
    ScenarioData data = generate_data(s, train_op);
    PreparedMethod method = prepare_method(s, train_op, data);

    Report baseline = evaluate_method(s, method, train_op, train_op, data.test_x);
    std::vector<RobustnessRow> rows;
    rows.push_back({"", 0.0, baseline, 0.0});
    for (const auto& [kind, eps] : perturbations) {
        ForwardOperator pert = perturb_operator(train_op, kind, eps, Rng(s.seed).fork(0xbad).next_u64());
        Report rep = evaluate_method(s, method, train_op, pert, data.test_x);
        rows.push_back({kind, eps, rep, baseline.psnr_median - rep.psnr_median});
    }
    return rows;
}

}  // namespace invkit::bench

#endif  // INVKIT_SCENARIO_HPP

// Command-line driver binding operators, solvers, learned methods and the
// benchmark harness into runnable experiments.
//
// Exit codes: 0 success, 2 config/validation, 3 I/O, 4 numerical failure.
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "invkit/config.hpp"
#include "invkit/image_io.hpp"

namespace fs = std::filesystem;
using namespace invkit;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    bool seed_given = false;
};

std::uint64_t effective_seed(const config::Config& cfg, const GlobalArgs& g) {
    if (g.seed_given) return g.seed;
    return cfg.get_u64("scenario", "seed", 1);
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir);
}

void emit_resolved_config(const config::Config& cfg, const bench::Scenario& s, const std::string& out_dir) {
    io::write_text(config::resolve(s, cfg).serialize(), out_dir + "/resolved.ini");
}

// ---- simulate ----

int cmd_simulate(const GlobalArgs& g, const std::string& input_path) {
    config::Config cfg = config::Config::load(g.config_path);
    std::uint64_t seed = effective_seed(cfg, g);
    Image x = io::read_raw_image(input_path);
    ForwardOperator op = config::operator_from_config(cfg, seed);
    if (x.height != op.input_height() || x.width != op.input_width())
        throw ValidationError("simulate: input image dims do not match the configured operator");
    double sigma = cfg.get_double("scenario", "noise_sigma", 0.0);
    MeasurementVector y = add_noise(op.apply(x), NoiseModel{sigma, Rng(seed).fork(0x401).next_u64()});

    ensure_out_dir(g.out_dir);
    std::string out = g.out_dir + "/measurement.ivk1";
    io::write_measurement(y, out);
    bench::Scenario s = config::scenario_from_config(cfg, seed);
    emit_resolved_config(cfg, s, g.out_dir);
    std::cout << "wrote " << out << " (m=" << y.size() << ", sigma=" << sigma << ")\n";
    return 0;
}

// ---- reconstruct ----

learned::Generator generator_from_checkpoint(const config::Config& cfg, const ForwardOperator& op) {
    std::string ckpt = cfg.get("model", "checkpoint", "");
    std::string manifest = cfg.get("model", "manifest", "");
    if (ckpt.empty() || manifest.empty())
        throw ValidationError("reconstruct: csgm requires [model] checkpoint and manifest paths for the generator");
    learned::Generator gen;
    gen.decoder = nn::load_checkpoint(ckpt, manifest);
    if (gen.decoder.layers().empty() || gen.decoder.layers()[0].kind != nn::LayerKind::dense)
        throw ValidationError("reconstruct: generator checkpoint must start with a dense layer");
    gen.latent_dim = gen.decoder.layers()[0].in_dim;
    gen.out_h = op.input_height();
    gen.out_w = op.input_width();
    gen.provenance = "checkpoint:" + ckpt;
    return gen;
}

int cmd_reconstruct(const GlobalArgs& g, const std::string& measurement_path, const std::string& truth_path) {
    config::Config cfg = config::Config::load(g.config_path);
    std::uint64_t seed = effective_seed(cfg, g);
    bench::Scenario s = config::scenario_from_config(cfg, seed);
    MeasurementVector y = io::read_measurement(measurement_path);
    ForwardOperator op = config::operator_from_config(cfg, seed);
    if (y.size() != op.output_size())
        throw ValidationError("reconstruct: measurement length does not match the configured operator");

    std::string method = cfg.get("scenario", "method", cfg.get("solver", "solver", "ml"));
    Image recon(op.input_height(), op.input_width());
    if (bench::is_classical_method(method)) {
        bench::ScenarioData empty;
        s.method = method;
        bench::PreparedMethod pm = bench::prepare_method(s, op, empty);
        recon = pm.reconstruct(y);
    } else if (method == "denoiser" || method == "residual") {
        std::string ckpt = cfg.get("model", "checkpoint", "");
        std::string manifest = cfg.get("model", "manifest", "");
        if (ckpt.empty() || manifest.empty())
            throw ValidationError("reconstruct: method '" + method + "' requires [model] checkpoint and manifest paths");
        nn::Network net = nn::load_checkpoint(ckpt, manifest);
        if (method == "denoiser") {
            learned::DenoiserModel model(std::move(net), op.input_height(), op.input_width());
            recon = model.reconstruct(y);
        } else {
            learned::ResidualModel model(std::move(net), learned::ApproxInverse::default_for(op));
            recon = model.reconstruct(y);
        }
    } else if (method == "csgm") {
        learned::Generator gen = generator_from_checkpoint(cfg, op);
        auto rep = learned::csgm_recover(gen, op, y, s.params.restarts, s.params.csgm_steps, s.params.csgm_lr, seed);
        recon = rep.reconstruction;
    } else {
        throw ValidationError("reconstruct: method '" + method +
                              "' is not reconstructable from a single measurement (train it via `benchmark`)");
    }

    ensure_out_dir(g.out_dir);
    io::write_raw_image(recon, g.out_dir + "/reconstruction.ivk1");
    io::write_pgm(recon, g.out_dir + "/reconstruction.pgm");
    emit_resolved_config(cfg, s, g.out_dir);

    if (!truth_path.empty()) {
        Image truth = io::read_raw_image(truth_path);
        bench::Report rep;
        bench::ReportRow row;
        row.scenario_id = s.id;
        row.method = method;
        row.image_id = 0;
        row.psnr_db = bench::psnr(truth, recon);
        row.ssim = bench::ssim(truth, recon);
        row.runtime_ms = 0.0;
        row.seed = seed;
        rep.rows.push_back(row);
        // append so repeated reconstructions accumulate into one table
        std::string path = g.out_dir + "/metrics.csv";
        bool fresh = !fs::exists(path);
        std::ofstream f(path, std::ios::app);
        if (!f) throw IoError("cannot open " + path);
        if (fresh) f << bench::kReportCsvHeader;
        f << bench::report_csv_rows(rep);
        std::cout << "psnr_db=" << row.psnr_db << " ssim=" << row.ssim << "\n";
    }
    std::cout << "wrote " << g.out_dir << "/reconstruction.ivk1 and .pgm\n";
    return 0;
}

// ---- train ----

std::vector<std::string> sorted_files_with_suffix(const std::string& dir, const std::string& suffix) {
    std::vector<std::string> out;
    if (!fs::is_directory(dir)) throw IoError("train: dataset directory not found: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string name = e.path().filename().string();
        if (name.size() > suffix.size() && name.substr(name.size() - suffix.size()) == suffix)
            out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_train(const GlobalArgs& g, const std::string& dataset_dir) {
    config::Config cfg = config::Config::load(g.config_path);
    std::uint64_t seed = effective_seed(cfg, g);
    std::string regime = cfg.get("training", "regime", "paired_xy");
    std::size_t epochs = cfg.get_size("training", "epochs", 10);
    double lr = cfg.get_double("training", "lr", 2e-3);
    std::size_t channels = cfg.get_size("model", "channels", 8);
    std::size_t depth = cfg.get_size("model", "depth", 3);
    ForwardOperator op = config::operator_from_config(cfg, seed);

    if ((regime == "y_only_sure" || regime == "y_only_gsure") && !cfg.has("training", "sigma"))
        throw ValidationError("train: regime '" + regime + "' requires the [training] sigma key");
    double sigma = cfg.get_double("training", "sigma", 0.0);

    learned::TrainResult tr;
    nn::Network trained;
    auto optim = nn::Optimizer::adam(lr);
    if (regime == "paired_xy" || regime == "noise2noise") {
        std::string target_suffix = regime == "paired_xy" ? ".x.ivk1" : ".t.ivk1";
        auto xs = sorted_files_with_suffix(dataset_dir, target_suffix);
        auto ys = sorted_files_with_suffix(dataset_dir, ".y.ivk1");
        if (xs.empty() || xs.size() != ys.size())
            throw ValidationError("train: regime '" + regime + "' needs matched *" + target_suffix +
                                  " and *.y.ivk1 files");
        learned::PairedDataset data;
        for (std::size_t i = 0; i < xs.size(); ++i)
            data.push_back({io::read_raw_image(xs[i]), io::read_measurement(ys[i])});
        if (op.kind() == OperatorKind::identity) {
            learned::DenoiserModel model(nn::build_denoiser(channels, depth, seed), op.input_height(), op.input_width());
            tr = learned::train_supervised(model, data, optim, epochs, seed);
            trained = model.network();
        } else {
            learned::ResidualModel model(nn::build_denoiser(channels, depth, seed), learned::ApproxInverse::default_for(op));
            tr = learned::train_supervised(model, data, optim, epochs, seed);
            trained = model.network();
        }
    } else if (regime == "y_only_sure" || regime == "y_only_gsure") {
        auto ys = sorted_files_with_suffix(dataset_dir, ".y.ivk1");
        if (ys.empty()) throw ValidationError("train: regime '" + regime + "' needs *.y.ivk1 measurement files");
        std::vector<MeasurementVector> data;
        for (const auto& p : ys) data.push_back(io::read_measurement(p));
        std::size_t probes = 4;
        double eps = 1e-3;
        std::string div = cfg.get("training", "div", "mc:4:1e-3");
        if (div.rfind("mc:", 0) == 0) {
            auto a = div.find(':'), b = div.find(':', a + 1);
            if (b == std::string::npos) throw ValidationError("train: div must be 'mc:<probes>:<eps>' or 'exact'");
            probes = static_cast<std::size_t>(std::stoull(div.substr(a + 1, b - a - 1)));
            eps = std::stod(div.substr(b + 1));
        }
        if (regime == "y_only_sure") {
            if (op.kind() != OperatorKind::identity)
                throw ValidationError("train: sure regime is defined for the denoising operator A = I");
            learned::DenoiserModel model(nn::build_denoiser(channels, depth, seed), op.input_height(), op.input_width());
            tr = learned::train_sure(model, data, sigma, optim, epochs, seed, probes, eps);
            trained = model.network();
        } else {
            learned::ResidualModel model(nn::build_denoiser(channels, depth, seed), learned::ApproxInverse::default_for(op));
            learned::PinvContext ctx(op);
            tr = learned::train_gsure(model, data, sigma, ctx, optim, epochs, seed, probes, eps);
            trained = model.network();
        }
    } else if (regime == "x_only") {
        auto xs = sorted_files_with_suffix(dataset_dir, ".x.ivk1");
        if (xs.empty()) throw ValidationError("train: regime 'x_only' needs *.x.ivk1 image files");
        std::vector<Image> data;
        for (const auto& p : xs) data.push_back(io::read_raw_image(p));
        std::size_t latent = cfg.get_size("model", "latent", 16);
        std::size_t gen_epochs = cfg.get_size("training", "gen_epochs", 150);
        learned::Generator gen = learned::train_generator(data, latent, gen_epochs, seed, lr, dataset_dir);
        trained = gen.decoder;
        tr.loss_trace.assign(1, gen.train_loss);  // final-epoch reconstruction loss
    } else {
        throw ValidationError("train: unknown regime '" + regime + "'");
    }

    ensure_out_dir(g.out_dir);
    nn::save_checkpoint(trained, g.out_dir + "/model.ivkw", g.out_dir + "/model.manifest");
    std::ostringstream losses;
    losses << "epoch,loss\n";
    for (std::size_t e = 0; e < tr.loss_trace.size(); ++e)
        losses << e << "," << std::setprecision(12) << tr.loss_trace[e] << "\n";
    io::write_text(losses.str(), g.out_dir + "/loss.csv");
    bench::Scenario s = config::scenario_from_config(cfg, seed);
    emit_resolved_config(cfg, s, g.out_dir);
    std::cout << "wrote " << g.out_dir << "/model.ivkw (" << trained.parameter_count() << " parameters)\n";
    return 0;
}

// ---- benchmark ----

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

int cmd_benchmark(const GlobalArgs& g) {
    config::Config cfg = config::Config::load(g.config_path);
    std::uint64_t seed = effective_seed(cfg, g);
    std::string methods_csv = cfg.get("scenario", "methods", cfg.get("scenario", "method", ""));
    std::vector<std::string> methods = split_list(methods_csv);
    if (methods.empty()) throw ValidationError("benchmark: empty scenario list ([scenario] methods)");

    ensure_out_dir(g.out_dir);
    std::size_t panels = cfg.get_size("output", "panels", 2);
    std::vector<bench::Report> all;
    std::string rob_csv = "scenario_id,method,perturb,eps,psnr_median,psnr_drop_median\n";
    bool any_rob = false;

    auto flush = [&]() {
        std::string rows = bench::kReportCsvHeader;
        for (const auto& r : all) rows += bench::report_csv_rows(r);
        io::write_text(rows, g.out_dir + "/report.csv");
        io::write_text(bench::aggregate_csv(all), g.out_dir + "/aggregate.csv");
        if (any_rob) io::write_text(rob_csv, g.out_dir + "/robustness.csv");
    };

    for (const std::string& method : methods) {
        bench::Scenario s = config::scenario_from_config(cfg, seed, method);
        try {
            std::string eps_list = cfg.get("scenario", "perturb_eps_list", "");
            if (!eps_list.empty() && !s.perturb_kind.empty()) {
                std::vector<std::pair<std::string, double>> perts;
                for (const std::string& e : split_list(eps_list)) perts.emplace_back(s.perturb_kind, std::stod(e));
                auto rows = bench::robustness_suite(s, perts);
                any_rob = true;
                for (const auto& row : rows) {
                    all.push_back(row.report);
                    std::ostringstream line;
                    line << s.id << "," << method << "," << (row.perturb_kind.empty() ? "baseline" : row.perturb_kind)
                         << "," << row.eps << "," << std::fixed << std::setprecision(6) << row.report.psnr_median
                         << "," << row.psnr_drop_median << "\n";
                    rob_csv += line.str();
                }
            } else {
                all.push_back(bench::run_scenario(s));
            }
        } catch (const std::exception&) {
            flush();  // partial results stay on disk
            throw;
        }

        const bench::Report& rep = all.back();
        for (std::size_t i = 0; i < std::min(panels, rep.reconstructions.size()); ++i) {
            auto panel = io::hstack_panel(
                {rep.ground_truths[i], io::normalize_for_display(rep.backprojections[i]), rep.reconstructions[i]});
            std::ostringstream name;
            name << g.out_dir << "/panel_" << s.id << "_" << method << "_" << i << ".pgm";
            io::write_pgm(panel, name.str());
        }
        if (s.feature_size > 0) {
            for (std::size_t i = 0; i < std::min(panels, rep.error_maps.size()); ++i) {
                std::ostringstream name;
                name << g.out_dir << "/errmap_" << s.id << "_" << method << "_" << i << ".pgm";
                io::write_pgm(io::normalize_for_display(rep.error_maps[i]), name.str());
            }
            std::cout << method << ": feature_region_mae=" << rep.feature_region_mae << "\n";
        }
        flush();
        emit_resolved_config(cfg, s, g.out_dir);
        if (any_rob)
            std::cout << method << ": robustness rows written (baseline and per-eps medians in robustness.csv)\n";
        else
            std::cout << method << ": psnr_median=" << rep.psnr_median << " ssim_mean=" << rep.ssim_mean << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"invkit: forward-operator simulation, classical and learned reconstruction, benchmark harness"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    app.add_option("--config", g.config_path, "path to the structured text config")->required();
    app.add_option("--out", g.out_dir, "output directory (default .)");
    auto* seed_opt = app.add_option("--seed", g.seed, "override the config seed");

    std::string input_path, measurement_path, truth_path, dataset_dir;
    auto* sim = app.add_subcommand("simulate", "apply the configured forward operator to an image");
    sim->add_option("input", input_path, "input image (.ivk1)")->required();
    auto* rec = app.add_subcommand("reconstruct", "reconstruct an image from a measurement file");
    rec->add_option("measurement", measurement_path, "measurement file (.ivk1)")->required();
    rec->add_option("--truth", truth_path, "ground-truth image for metrics");
    auto* trn = app.add_subcommand("train", "train a model per the configured regime");
    trn->add_option("dataset", dataset_dir, "dataset directory of .ivk1 files")->required();
    app.add_subcommand("benchmark", "run the configured scenario suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        g.seed_given = seed_opt->count() > 0;
        if (sim->parsed()) return cmd_simulate(g, input_path);
        if (rec->parsed()) return cmd_reconstruct(g, measurement_path, truth_path);
        if (trn->parsed()) return cmd_train(g, dataset_dir);
        return cmd_benchmark(g);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

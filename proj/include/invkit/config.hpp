// Structured text configuration: [section] headers with flat key = value
// lines. Unknown sections or keys are rejected; every run re-emits the fully
// resolved document so outputs are reproducible from the file alone.
#ifndef INVKIT_CONFIG_HPP
#define INVKIT_CONFIG_HPP

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "invkit/scenario.hpp"

namespace invkit::config {

namespace detail {

inline const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"operator",
         {"kind", "height", "width", "kernel_size", "blur_sigma", "mask_fraction", "m", "factor", "n_angles",
          "n_detectors", "ensemble", "seed"}},
        {"regularizer", {"reg"}},
        {"solver", {"solver", "eta", "rho", "iters", "tol", "restarts"}},
        {"model",
         {"blocks", "channels", "depth", "latent", "stages", "checkpoint", "manifest", "dip_iters", "dip_lr",
          "checkpoint_every", "csgm_steps", "csgm_lr"}},
        {"training", {"regime", "epochs", "lr", "sigma", "div", "gen_epochs"}},
        {"scenario",
         {"id", "knowledge", "regime", "method", "methods", "phantom", "n_train", "n_test", "noise_sigma", "perturb",
          "perturb_eps", "perturb_eps_list", "feature_size", "feature_intensity", "timing", "seed"}},
        {"output", {"dir", "panels"}},
    };
    return s;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

class Config {
  public:
    static Config parse(const std::string& text) {
        Config cfg;
        std::istringstream is(text);
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            std::string t = detail::trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']') throw ValidationError("config line " + std::to_string(lineno) + ": unterminated section");
                section = detail::trim(t.substr(1, t.size() - 2));
                if (detail::schema().find(section) == detail::schema().end())
                    throw ValidationError("config: unknown section [" + section + "]");
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
            std::string key = detail::trim(t.substr(0, eq));
            std::string value = detail::trim(t.substr(eq + 1));
            if (!value.empty() && value.front() == '"' && value.back() == '"' && value.size() >= 2)
                value = value.substr(1, value.size() - 2);
            if (section.empty()) throw ValidationError("config: key '" + key + "' outside any section");
            const auto& allowed = detail::schema().at(section);
            if (allowed.find(key) == allowed.end())
                throw ValidationError("config: unknown key '" + key + "' in section [" + section + "]");
            cfg.values_[section][key] = value;
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw IoError("config: cannot open " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string& section, const std::string& key) const {
        auto s = values_.find(section);
        return s != values_.end() && s->second.count(key) > 0;
    }

    std::string get(const std::string& section, const std::string& key, const std::string& fallback) const {
        auto s = values_.find(section);
        if (s == values_.end()) return fallback;
        auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        try {
            return std::stod(get(section, key, ""));
        } catch (const std::exception&) {
            throw ValidationError("config: key '" + key + "' in [" + section + "] is not a number");
        }
    }

    std::size_t get_size(const std::string& section, const std::string& key, std::size_t fallback) const {
        if (!has(section, key)) return fallback;
        try {
            long long v = std::stoll(get(section, key, ""));
            if (v < 0) throw ValidationError("config: key '" + key + "' must be nonnegative");
            return static_cast<std::size_t>(v);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError("config: key '" + key + "' in [" + section + "] is not an integer");
        }
    }

    std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) const {
        if (!has(section, key)) return fallback;
        try {
            return std::stoull(get(section, key, ""));
        } catch (const std::exception&) {
            throw ValidationError("config: key '" + key + "' in [" + section + "] is not an integer");
        }
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        std::string v = get(section, key, "");
        if (v == "true" || v == "1" || v == "on") return true;
        if (v == "false" || v == "0" || v == "off") return false;
        throw ValidationError("config: key '" + key + "' in [" + section + "] is not a boolean");
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        if (detail::schema().find(section) == detail::schema().end())
            throw ValidationError("config: unknown section [" + section + "]");
        if (detail::schema().at(section).find(key) == detail::schema().at(section).end())
            throw ValidationError("config: unknown key '" + key + "' in section [" + section + "]");
        values_[section][key] = value;
    }

    // Sections and keys in sorted order, so the serialization is canonical.
    std::string serialize() const {
        std::ostringstream os;
        for (const auto& [section, kv] : values_) {
            os << "[" << section << "]\n";
            for (const auto& [key, value] : kv) os << key << " = " << value << "\n";
            os << "\n";
        }
        return os.str();
    }

  private:
    std::map<std::string, std::map<std::string, std::string>> values_;
};

// ---- config -> domain objects ----

inline ForwardOperator operator_from_config(const Config& cfg, std::uint64_t seed) {
    bench::Scenario s;  // reuse the scenario operator builder
    s.op_kind = cfg.get("operator", "kind", "identity");
    s.image_h = cfg.get_size("operator", "height", 32);
    s.image_w = cfg.get_size("operator", "width", 32);
    s.kernel_size = cfg.get_size("operator", "kernel_size", 5);
    s.blur_sigma = cfg.get_double("operator", "blur_sigma", 1.2);
    s.mask_fraction = cfg.get_double("operator", "mask_fraction", 0.5);
    s.compressive_m = cfg.get_size("operator", "m", 0);
    s.sr_factor = cfg.get_size("operator", "factor", 2);
    s.n_angles = cfg.get_size("operator", "n_angles", 24);
    s.n_detectors = cfg.get_size("operator", "n_detectors", 47);
    s.seed = cfg.get_u64("operator", "seed", seed);
    return bench::build_operator(s);
}

// Fills a Scenario from the config plus the global seed; defaults mirror the
// Scenario struct.
inline bench::Scenario scenario_from_config(const Config& cfg, std::uint64_t seed, const std::string& method_override = "") {
    bench::Scenario s;
    s.id = cfg.get("scenario", "id", "scenario");
    s.knowledge = bench::knowledge_from(cfg.get("scenario", "knowledge", "known_train_test"));
    s.regime = bench::regime_from(cfg.get("scenario", "regime", "paired_xy"));
    s.method = method_override.empty() ? cfg.get("scenario", "method", "unrolled") : method_override;

    s.op_kind = cfg.get("operator", "kind", "convolution");
    s.image_h = cfg.get_size("operator", "height", 32);
    s.image_w = cfg.get_size("operator", "width", 32);
    s.kernel_size = cfg.get_size("operator", "kernel_size", 5);
    s.blur_sigma = cfg.get_double("operator", "blur_sigma", 1.2);
    s.mask_fraction = cfg.get_double("operator", "mask_fraction", 0.5);
    s.compressive_m = cfg.get_size("operator", "m", 0);
    s.sr_factor = cfg.get_size("operator", "factor", 2);
    s.n_angles = cfg.get_size("operator", "n_angles", 24);
    s.n_detectors = cfg.get_size("operator", "n_detectors", 47);

    s.phantom = cfg.get("scenario", "phantom", "shapes");
    s.n_train = cfg.get_size("scenario", "n_train", 80);
    s.n_test = cfg.get_size("scenario", "n_test", 20);
    s.noise_sigma = cfg.get_double("scenario", "noise_sigma", 0.05);
    s.perturb_kind = cfg.get("scenario", "perturb", "");
    s.perturb_eps = cfg.get_double("scenario", "perturb_eps", 0.0);
    s.feature_size = cfg.get_size("scenario", "feature_size", 0);
    s.feature_intensity = cfg.get_double("scenario", "feature_intensity", 1.0);
    s.record_timing = cfg.get_bool("scenario", "timing", false);
    s.seed = cfg.get_u64("scenario", "seed", seed);

    s.params.reg = cfg.get("regularizer", "reg", "tv:0.05");
    s.params.rho = cfg.get_double("solver", "rho", 1.0);
    s.params.iters = cfg.get_size("solver", "iters", 200);
    s.params.tol = cfg.get_double("solver", "tol", 1e-8);
    s.params.eta = cfg.get_double("solver", "eta", 0.0);
    s.params.restarts = cfg.get_size("solver", "restarts", 2);

    s.params.blocks = cfg.get_size("model", "blocks", 5);
    s.params.channels = cfg.get_size("model", "channels", 8);
    s.params.depth = cfg.get_size("model", "depth", 3);
    s.params.latent = cfg.get_size("model", "latent", 16);
    s.params.dip_stages = cfg.get_size("model", "stages", 3);
    s.params.dip_iters = cfg.get_size("model", "dip_iters", 400);
    s.params.dip_lr = cfg.get_double("model", "dip_lr", 1e-2);
    s.params.checkpoint_every = cfg.get_size("model", "checkpoint_every", 50);
    s.params.csgm_steps = cfg.get_size("model", "csgm_steps", 600);
    s.params.csgm_lr = cfg.get_double("model", "csgm_lr", 0.05);

    s.params.epochs = cfg.get_size("training", "epochs", 10);
    s.params.lr = cfg.get_double("training", "lr", 2e-3);
    s.params.gen_epochs = cfg.get_size("training", "gen_epochs", 150);
    std::string div = cfg.get("training", "div", "mc:4:1e-3");
    if (div.rfind("mc:", 0) == 0) {
        auto first = div.find(':'), second = div.find(':', first + 1);
        if (second == std::string::npos) throw ValidationError("config: div must be 'mc:<probes>:<eps>' or 'exact'");
        s.params.sure_probes = static_cast<std::size_t>(std::stoull(div.substr(first + 1, second - first - 1)));
        s.params.sure_eps = std::stod(div.substr(second + 1));
    } else if (div != "exact") {
        throw ValidationError("config: div must be 'mc:<probes>:<eps>' or 'exact'");
    }
    return s;
}

// Resolved config with every default filled in, for emission next to outputs.
inline Config resolve(const bench::Scenario& s, const Config& base) {
    Config out = base;
    auto num = [](double v) {
        std::ostringstream os;
        os << std::setprecision(17) << v;
        return os.str();
    };
    out.set("scenario", "id", s.id);
    out.set("scenario", "knowledge", bench::to_string(s.knowledge));
    out.set("scenario", "regime", learned::to_string(s.regime));
    out.set("scenario", "method", s.method);
    out.set("scenario", "phantom", s.phantom);
    out.set("scenario", "n_train", std::to_string(s.n_train));
    out.set("scenario", "n_test", std::to_string(s.n_test));
    out.set("scenario", "noise_sigma", num(s.noise_sigma));
    if (!s.perturb_kind.empty()) {
        out.set("scenario", "perturb", s.perturb_kind);
        out.set("scenario", "perturb_eps", num(s.perturb_eps));
    }
    out.set("scenario", "feature_size", std::to_string(s.feature_size));
    out.set("scenario", "feature_intensity", num(s.feature_intensity));
    out.set("scenario", "timing", s.record_timing ? "true" : "false");
    out.set("scenario", "seed", std::to_string(s.seed));

    out.set("operator", "kind", s.op_kind);
    out.set("operator", "height", std::to_string(s.image_h));
    out.set("operator", "width", std::to_string(s.image_w));
    out.set("operator", "kernel_size", std::to_string(s.kernel_size));
    out.set("operator", "blur_sigma", num(s.blur_sigma));
    out.set("operator", "mask_fraction", num(s.mask_fraction));
    out.set("operator", "m", std::to_string(s.compressive_m));
    out.set("operator", "factor", std::to_string(s.sr_factor));
    out.set("operator", "n_angles", std::to_string(s.n_angles));
    out.set("operator", "n_detectors", std::to_string(s.n_detectors));

    out.set("regularizer", "reg", s.params.reg);
    out.set("solver", "iters", std::to_string(s.params.iters));
    out.set("solver", "rho", num(s.params.rho));
    out.set("solver", "tol", num(s.params.tol));
    out.set("solver", "eta", num(s.params.eta));
    out.set("solver", "restarts", std::to_string(s.params.restarts));

    out.set("model", "blocks", std::to_string(s.params.blocks));
    out.set("model", "channels", std::to_string(s.params.channels));
    out.set("model", "depth", std::to_string(s.params.depth));
    out.set("model", "latent", std::to_string(s.params.latent));
    out.set("model", "stages", std::to_string(s.params.dip_stages));
    out.set("model", "dip_iters", std::to_string(s.params.dip_iters));
    out.set("model", "dip_lr", num(s.params.dip_lr));
    out.set("model", "checkpoint_every", std::to_string(s.params.checkpoint_every));
    out.set("model", "csgm_steps", std::to_string(s.params.csgm_steps));
    out.set("model", "csgm_lr", num(s.params.csgm_lr));

    out.set("training", "epochs", std::to_string(s.params.epochs));
    out.set("training", "lr", num(s.params.lr));
    out.set("training", "gen_epochs", std::to_string(s.params.gen_epochs));
    {
        std::ostringstream div;
        div << "mc:" << s.params.sure_probes << ":" << num(s.params.sure_eps);
        out.set("training", "div", div.str());
    }
    return out;
}

}  // namespace invkit::config

#endif  // INVKIT_CONFIG_HPP

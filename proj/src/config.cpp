#include "dss/config.hpp"

#include <fstream>
#include <stdexcept>

namespace dss {

namespace {

void check_keys(const nlohmann::json& section, const char* name,
                std::initializer_list<const char*> allowed) {
    if (!section.is_object())
        throw std::invalid_argument(std::string("config section '") + name +
                                    "' must be an object");
    for (const auto& [key, value] : section.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok)
            throw std::invalid_argument("unknown key '" + key + "' in config section '" +
                                        name + "'");
    }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

ScheduleSpec parse_schedule(const nlohmann::json& j, const char* name,
                            ScheduleSpec defaults) {
    check_keys(j, name, {"base", "switch", "decay", "floor"});
    ScheduleSpec s = defaults;
    maybe(j, "base", s.base);
    maybe(j, "switch", s.switch_step);
    maybe(j, "decay", s.decay_steps);
    maybe(j, "floor", s.floor_fraction);
    if (s.decay_steps < 1) throw std::invalid_argument("schedule decay must be >= 1");
    return s;
}

nlohmann::json schedule_json(const ScheduleSpec& s) {
    return {{"base", s.base},
            {"switch", s.switch_step},
            {"decay", s.decay_steps},
            {"floor", s.floor_fraction}};
}

double& coupling_ref(ModelSection& m, const std::string& name) {
    if (name == "g") return m.g;
    if (name == "V") return m.V;
    if (name == "gamma") return m.gamma;
    if (name == "Jx") return m.J[0];
    if (name == "Jy") return m.J[1];
    if (name == "Jz") return m.J[2];
    if (name == "Bx") return m.B[0];
    if (name == "By") return m.B[1];
    if (name == "Bz") return m.B[2];
    throw std::invalid_argument("unknown sweep parameter: " + name);
}

}  // namespace

int model_sites(const ModelSection& m) {
    return m.kind == "tfi_grid" ? m.rows * m.cols : m.sites;
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
    check_keys(doc, "(root)",
               {"model", "ansatz", "sampler", "optimizer", "sweep", "output_dir", "seed"});
    ExperimentConfig cfg;

    if (auto it = doc.find("model"); it != doc.end()) {
        const auto& j = *it;
        check_keys(j, "model",
                   {"kind", "sites", "rows", "cols", "V", "g", "J", "B", "gamma"});
        maybe(j, "kind", cfg.model.kind);
        maybe(j, "sites", cfg.model.sites);
        maybe(j, "rows", cfg.model.rows);
        maybe(j, "cols", cfg.model.cols);
        maybe(j, "V", cfg.model.V);
        maybe(j, "g", cfg.model.g);
        maybe(j, "J", cfg.model.J);
        maybe(j, "B", cfg.model.B);
        maybe(j, "gamma", cfg.model.gamma);
    }
    if (cfg.model.kind != "tfi_chain" && cfg.model.kind != "tfi_grid" &&
        cfg.model.kind != "heisenberg_chain")
        throw std::invalid_argument("unknown model kind: " + cfg.model.kind);
    if (cfg.model.gamma <= 0.0)
        throw std::invalid_argument("gamma must be positive");

    cfg.ansatz.sites = model_sites(cfg.model);
    if (auto it = doc.find("ansatz"); it != doc.end()) {
        const auto& j = *it;
        check_keys(j, "ansatz",
                   {"conv1_channels", "conv2_channels", "heads", "activation", "seed"});
        maybe(j, "conv1_channels", cfg.ansatz.conv1_channels);
        maybe(j, "conv2_channels", cfg.ansatz.conv2_channels);
        maybe(j, "heads", cfg.ansatz.heads);
        maybe(j, "activation", cfg.ansatz.activation);
        maybe(j, "seed", cfg.ansatz.seed);
    }

    if (auto it = doc.find("sampler"); it != doc.end()) {
        const auto& j = *it;
        check_keys(j, "sampler",
                   {"n_chains", "burn_in", "thinning", "samples_per_chain",
                    "eval_samples_per_chain"});
        maybe(j, "n_chains", cfg.sampler.n_chains);
        maybe(j, "burn_in", cfg.sampler.burn_in);
        maybe(j, "thinning", cfg.sampler.thinning);
        maybe(j, "samples_per_chain", cfg.sampler.samples_per_chain);
        maybe(j, "eval_samples_per_chain", cfg.eval_samples_per_chain);
    }

    if (auto it = doc.find("optimizer"); it != doc.end()) {
        const auto& j = *it;
        check_keys(j, "optimizer",
                   {"kind", "iterations", "checkpoint_every", "learning_rate",
                    "diagonal_shift"});
        maybe(j, "kind", cfg.optimizer.kind);
        maybe(j, "iterations", cfg.optimizer.iterations);
        maybe(j, "checkpoint_every", cfg.optimizer.checkpoint_every);
        if (auto s = j.find("learning_rate"); s != j.end())
            cfg.optimizer.learning_rate =
                parse_schedule(*s, "learning_rate", cfg.optimizer.learning_rate);
        if (auto s = j.find("diagonal_shift"); s != j.end())
            cfg.optimizer.diagonal_shift =
                parse_schedule(*s, "diagonal_shift", cfg.optimizer.diagonal_shift);
    }
    if (cfg.optimizer.kind != "sgd" && cfg.optimizer.kind != "adam")
        throw std::invalid_argument("unknown optimizer kind: " + cfg.optimizer.kind);

    if (auto it = doc.find("sweep"); it != doc.end()) {
        const auto& j = *it;
        check_keys(j, "sweep", {"parameter", "values"});
        maybe(j, "parameter", cfg.sweep.parameter);
        maybe(j, "values", cfg.sweep.values);
        if (!cfg.sweep.parameter.empty()) {
            ModelSection probe = cfg.model;
            coupling_ref(probe, cfg.sweep.parameter);  // validates the name
        } else if (!cfg.sweep.values.empty()) {
            throw std::invalid_argument("sweep values given without a parameter name");
        }
    }

    maybe(doc, "output_dir", cfg.output_dir);
    maybe(doc, "seed", cfg.seed);

    // Canonical document with every default made explicit, so the
    // manifest hash covers the effective configuration.
    cfg.raw = {
        {"model",
         {{"kind", cfg.model.kind},
          {"sites", cfg.model.sites},
          {"rows", cfg.model.rows},
          {"cols", cfg.model.cols},
          {"V", cfg.model.V},
          {"g", cfg.model.g},
          {"J", cfg.model.J},
          {"B", cfg.model.B},
          {"gamma", cfg.model.gamma}}},
        {"ansatz",
         {{"conv1_channels", cfg.ansatz.conv1_channels},
          {"conv2_channels", cfg.ansatz.conv2_channels},
          {"heads", cfg.ansatz.heads},
          {"activation", cfg.ansatz.activation},
          {"seed", cfg.ansatz.seed}}},
        {"sampler",
         {{"n_chains", cfg.sampler.n_chains},
          {"burn_in", cfg.sampler.burn_in},
          {"thinning", cfg.sampler.thinning},
          {"samples_per_chain", cfg.sampler.samples_per_chain},
          {"eval_samples_per_chain", cfg.eval_samples_per_chain}}},
        {"optimizer",
         {{"kind", cfg.optimizer.kind},
          {"iterations", cfg.optimizer.iterations},
          {"checkpoint_every", cfg.optimizer.checkpoint_every},
          {"learning_rate", schedule_json(cfg.optimizer.learning_rate)},
          {"diagonal_shift", schedule_json(cfg.optimizer.diagonal_shift)}}},
        {"sweep", {{"parameter", cfg.sweep.parameter}, {"values", cfg.sweep.values}}},
        {"output_dir", cfg.output_dir},
        {"seed", cfg.seed},
    };
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    return parse_experiment_config(doc);
}

HamiltonianSpec build_hamiltonian(const ModelSection& base,
                                  const std::string& sweep_parameter,
                                  double sweep_value) {
    ModelSection m = base;
    if (!sweep_parameter.empty()) coupling_ref(m, sweep_parameter) = sweep_value;
    if (m.kind == "tfi_chain") return build_tfi_chain(m.sites, m.V, m.g);
    if (m.kind == "tfi_grid") return build_tfi_grid(m.rows, m.cols, m.V, m.g);
    if (m.kind == "heisenberg_chain")
        return build_heisenberg_chain(m.sites, m.J, m.B);
    throw std::invalid_argument("unknown model kind: " + m.kind);
}

SuperOperator build_superoperator(const ModelSection& base,
                                  const std::string& sweep_parameter,
                                  double sweep_value) {
    ModelSection m = base;
    if (!sweep_parameter.empty()) coupling_ref(m, sweep_parameter) = sweep_value;
    const HamiltonianSpec h = build_hamiltonian(m);
    return vectorized_lindbladian(h, build_lowering_jumps(model_sites(m), m.gamma));
}

std::string config_hash(const nlohmann::json& doc) {
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace dss

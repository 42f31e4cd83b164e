#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dss/checkpoint.hpp"
#include "dss/driver.hpp"

using namespace dss;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("dss_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

nlohmann::json tiny_config() {
    return {
        {"model", {{"kind", "tfi_chain"}, {"sites", 2}, {"V", 2.0}, {"g", 1.0}}},
        {"ansatz", {{"conv1_channels", 4}, {"conv2_channels", 8}, {"heads", 2}}},
        {"sampler", {{"n_chains", 4}, {"samples_per_chain", 16}}},
        {"optimizer",
         {{"kind", "sgd"},
          {"iterations", 5},
          {"learning_rate", {{"base", 0.01}, {"switch", 100}, {"decay", 50}}},
          {"diagonal_shift", {{"base", 0.01}, {"switch", 100}, {"decay", 50}}}}},
        {"seed", 11},
    };
}

}  // namespace

TEST_CASE("csv schemas are locked") {
    CHECK(std::string(kExactCsvHeader) ==
          "parameter,value,solver,sigma_x,sigma_y,sigma_z,purity,residual,wall_seconds");
    CHECK(std::string(kEvaluateCsvHeader) == "observable,mean,mc_error,n_samples");
    CHECK(std::string(kBenchmarkCsvHeader) ==
          "parameter,value,observable,ansatz_mean,mc_error,exact,abs_dev,tolerance,pass");
}

TEST_CASE("config parsing applies defaults and rejects unknown keys") {
    const ExperimentConfig cfg = parse_experiment_config(tiny_config());
    CHECK(cfg.model.kind == "tfi_chain");
    CHECK(cfg.ansatz.sites == 2);
    CHECK(cfg.ansatz.conv1_channels == 4);
    CHECK(cfg.optimizer.learning_rate.base == 0.01);
    CHECK(cfg.optimizer.learning_rate.floor_fraction == 0.001);  // default kept
    CHECK(cfg.seed == 11);
    CHECK(cfg.sweep.parameter.empty());

    // published schedule defaults when the section is absent
    const ExperimentConfig bare = parse_experiment_config(
        {{"model", {{"kind", "tfi_chain"}, {"sites", 2}}}});
    CHECK(bare.optimizer.learning_rate.base == 0.0061);
    CHECK(bare.optimizer.learning_rate.switch_step == 30000);
    CHECK(bare.optimizer.diagonal_shift.base == 0.004);
    CHECK(bare.optimizer.diagonal_shift.floor_fraction == 0.01);

    nlohmann::json bad = tiny_config();
    bad["model"]["coupling_typo"] = 1.0;
    CHECK_THROWS(parse_experiment_config(bad));
    nlohmann::json bad_kind = tiny_config();
    bad_kind["model"]["kind"] = "xy_chain";
    CHECK_THROWS(parse_experiment_config(bad_kind));
    nlohmann::json bad_sweep = tiny_config();
    bad_sweep["sweep"] = {{"parameter", "q"}, {"values", {1.0}}};
    CHECK_THROWS(parse_experiment_config(bad_sweep));
}

TEST_CASE("sweep overrides reach the hamiltonian") {
    ModelSection m;
    m.kind = "tfi_chain";
    m.sites = 2;
    m.V = 2.0;
    m.g = 1.0;
    const HamiltonianSpec base = build_hamiltonian(m);
    const HamiltonianSpec swept = build_hamiltonian(m, "g", 3.0);
    // transverse-field terms carry g/2
    double base_g = 0.0, swept_g = 0.0;
    for (const auto& t : base.terms)
        if (t.sites.size() == 1) base_g = t.coefficient.real();
    for (const auto& t : swept.terms)
        if (t.sites.size() == 1) swept_g = t.coefficient.real();
    CHECK(swept_g == doctest::Approx(3.0 * base_g).epsilon(1e-12));
}

TEST_CASE("checkpoints round trip") {
    const fs::path dir = temp_dir("ckpt");
    TrainState state;
    state.model.sites = 3;
    state.model.conv1_channels = 4;
    state.model.conv2_channels = 8;
    state.model.heads = 2;
    state.model.seed = 5;
    state.params = Eigen::VectorXd::LinSpaced(10, 0.0, 9.0);
    state.moment1 = Eigen::VectorXd::Constant(10, 0.25);
    state.moment2 = Eigen::VectorXd::Constant(10, 0.5);
    state.step = 42;
    state.master_seed = 77;
    state.optimizer_kind = "adam";

    const std::string path = (dir / "state.bin").string();
    save_checkpoint(path, state);
    const TrainState back = load_checkpoint(path);
    CHECK(back.model.sites == 3);
    CHECK(back.model.conv2_channels == 8);
    CHECK((back.params - state.params).norm() == 0.0);
    CHECK((back.moment1 - state.moment1).norm() == 0.0);
    CHECK((back.moment2 - state.moment2).norm() == 0.0);
    CHECK(back.step == 42);
    CHECK(back.master_seed == 77);
    CHECK(back.optimizer_kind == "adam");

    CHECK_THROWS(load_checkpoint((dir / "missing.bin").string()));
    std::ofstream junk(dir / "junk.bin", std::ios::binary);
    junk << "not a checkpoint";
    junk.close();
    CHECK_THROWS(load_checkpoint((dir / "junk.bin").string()));
}

TEST_CASE("exact runs are reproducible and write a manifest") {
    nlohmann::json doc = tiny_config();
    doc["sweep"] = {{"parameter", "g"}, {"values", {0.5, 1.0}}};
    const ExperimentConfig cfg = parse_experiment_config(doc);

    const fs::path dir_a = temp_dir("exact_a");
    const fs::path dir_b = temp_dir("exact_b");
    DriverOptions opt_a, opt_b;
    opt_a.out_dir = dir_a.string();
    opt_b.out_dir = dir_b.string();
    run_exact(cfg, opt_a);
    run_exact(cfg, opt_b);

    // wall_seconds is diagnostic; every other column must reproduce
    auto strip_wall = [](const std::string& text) {
        std::istringstream in(text);
        std::string out;
        for (std::string line; std::getline(in, line);)
            out += line.substr(0, line.rfind(',')) + "\n";
        return out;
    };
    const std::string csv_a = read_file(dir_a / "exact.csv");
    CHECK(strip_wall(csv_a) == strip_wall(read_file(dir_b / "exact.csv")));
    CHECK(csv_a.substr(0, csv_a.find('\n')) == kExactCsvHeader);
    // header + 2 sweep rows
    CHECK(std::count(csv_a.begin(), csv_a.end(), '\n') == 3);

    const auto manifest = nlohmann::json::parse(read_file(dir_a / "manifest.json"));
    CHECK(manifest.at("command") == "exact");
    CHECK(manifest.at("seed") == 11);
    CHECK(manifest.at("config_hash") ==
          nlohmann::json::parse(read_file(dir_b / "manifest.json")).at("config_hash"));

    // a seed override changes the manifest hash
    DriverOptions opt_c;
    opt_c.out_dir = dir_a.string();
    opt_c.seed_override = 12;
    run_exact(cfg, opt_c);
    const auto overridden = nlohmann::json::parse(read_file(dir_a / "manifest.json"));
    CHECK(overridden.at("seed") == 12);
    CHECK(overridden.at("config_hash") != manifest.at("config_hash"));
}

TEST_CASE("train and evaluate drivers produce their artifacts") {
    const ExperimentConfig cfg = parse_experiment_config(tiny_config());
    const fs::path dir = temp_dir("train");
    DriverOptions opt;
    opt.out_dir = dir.string();
    run_train(cfg, opt);

    CHECK(fs::exists(dir / "checkpoint.bin"));
    const std::string log = read_file(dir / "train_log.jsonl");
    CHECK(std::count(log.begin(), log.end(), '\n') == 5);
    const auto first = nlohmann::json::parse(log.substr(0, log.find('\n')));
    for (const char* key : {"step", "cost", "cost_err", "accept", "lr", "shift"})
        CHECK(first.contains(key));

    DriverOptions eval_opt;
    eval_opt.out_dir = (dir / "eval").string();
    eval_opt.resume_path = (dir / "checkpoint.bin").string();
    run_evaluate(cfg, eval_opt);
    const std::string csv = read_file(dir / "eval" / "evaluate.csv");
    CHECK(csv.substr(0, csv.find('\n')) == kEvaluateCsvHeader);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + x, y, z

    DriverOptions missing;
    missing.out_dir = dir.string();
    CHECK_THROWS(run_evaluate(cfg, missing));
}

TEST_CASE("cli binary wires the subcommands") {
#ifdef DSS_CLI_PATH
    const fs::path dir = temp_dir("cli");
    const fs::path config = dir / "config.json";
    {
        std::ofstream out(config);
        out << tiny_config().dump();
    }
    const std::string cmd = std::string(DSS_CLI_PATH) + " exact --config " +
                            config.string() + " --out " + dir.string();
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "exact.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(std::system((std::string(DSS_CLI_PATH) + " exact --config /nonexistent.json")
                          .c_str()) != 0);
    CHECK(std::system((std::string(DSS_CLI_PATH) + " bogus").c_str()) != 0);
#endif
}

#include "dss/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace dss {

namespace {

constexpr char kMagic[8] = {'D', 'S', 'S', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_doubles(std::ostream& out, const Eigen::VectorXd& v) {
    // Assumes a little-endian host with IEEE-754 doubles.
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Eigen::VectorXd read_doubles(std::istream& in, Eigen::Index n) {
    Eigen::VectorXd v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint truncated");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& state) {
    const bool has_moments = state.moment1.size() > 0;
    nlohmann::json header = {
        {"model",
         {{"sites", state.model.sites},
          {"conv1_channels", state.model.conv1_channels},
          {"conv2_channels", state.model.conv2_channels},
          {"heads", state.model.heads},
          {"activation", state.model.activation},
          {"seed", state.model.seed}}},
        {"step", state.step},
        {"master_seed", state.master_seed},
        {"optimizer_kind", state.optimizer_kind},
        {"param_count", state.params.size()},
        {"has_moments", has_moments},
    };
    const std::string header_text = header.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open checkpoint file: " + tmp);
        out.write(kMagic, sizeof(kMagic));
        write_u32(out, kVersion);
        write_u32(out, static_cast<std::uint32_t>(header_text.size()));
        out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
        write_doubles(out, state.params);
        if (has_moments) {
            write_doubles(out, state.moment1);
            write_doubles(out, state.moment2);
        }
        if (!out) throw std::runtime_error("checkpoint write failed: " + tmp);
    }
    // Replace atomically so a crash mid-write never leaves a corrupt file.
    std::remove(path.c_str());
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move checkpoint into place: " + path);
}

TrainState load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    if (read_u32(in) != kVersion)
        throw std::runtime_error("unsupported checkpoint version: " + path);

    const std::uint32_t header_len = read_u32(in);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), header_len);
    if (!in) throw std::runtime_error("checkpoint truncated: " + path);
    const nlohmann::json header = nlohmann::json::parse(header_text);

    TrainState state;
    const auto& model = header.at("model");
    state.model.sites = model.at("sites").get<int>();
    state.model.conv1_channels = model.at("conv1_channels").get<int>();
    state.model.conv2_channels = model.at("conv2_channels").get<int>();
    state.model.heads = model.at("heads").get<int>();
    state.model.activation = model.at("activation").get<std::string>();
    state.model.seed = model.at("seed").get<std::uint64_t>();
    state.step = header.at("step").get<long>();
    state.master_seed = header.at("master_seed").get<std::uint64_t>();
    state.optimizer_kind = header.at("optimizer_kind").get<std::string>();

    const auto n = header.at("param_count").get<Eigen::Index>();
    state.params = read_doubles(in, n);
    if (header.at("has_moments").get<bool>()) {
        state.moment1 = read_doubles(in, n);
        state.moment2 = read_doubles(in, n);
    }
    return state;
}

}  // namespace dss

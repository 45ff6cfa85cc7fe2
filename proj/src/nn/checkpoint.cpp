#include "ball3d/nn/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "ball3d/errors.hpp"

namespace ball3d::nn {
namespace {

constexpr std::array<char, 8> kMagic = {'B', 'A', 'L', 'L', '3', 'D', 'C', 'K'};

void write_matrix(std::ostream& out, const Matrix& m) {
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void read_matrix(std::istream& in, Matrix& m, const std::string& what) {
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw CheckpointError("checkpoint truncated while reading " + what);
}

struct Opened {
    std::ifstream in;
    nlohmann::json header;
};

Opened open_checkpoint(const std::filesystem::path& path) {
    Opened o;
    o.in.open(path, std::ios::binary);
    if (!o.in) throw CheckpointError("cannot open checkpoint " + path.string());
    std::array<char, 8> magic{};
    std::uint32_t version = 0;
    std::uint64_t length = 0;
    o.in.read(magic.data(), magic.size());
    o.in.read(reinterpret_cast<char*>(&version), sizeof version);
    o.in.read(reinterpret_cast<char*>(&length), sizeof length);
    if (!o.in || magic != kMagic) throw CheckpointError(path.string() + " is not a checkpoint file");
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    std::string text(length, '\0');
    o.in.read(text.data(), static_cast<std::streamsize>(length));
    if (!o.in) throw CheckpointError("checkpoint header truncated");
    try {
        o.header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
    }
    return o;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const nlohmann::json& metadata, const AdamState* adam) {
    nlohmann::json header;
    header["parameters"] = nlohmann::json::array();
    for (const Parameter& p : params) {
        header["parameters"].push_back({{"name", p.name}, {"shape", p.tensor.shape}});
    }
    header["metadata"] = metadata;
    header["optimizer"] = nullptr;
    if (adam != nullptr) {
        if (adam->m.size() != static_cast<std::size_t>(params.size())) {
            throw ShapeMismatch("optimizer state does not match the parameter set");
        }
        header["optimizer"] = {{"lr", adam->lr}, {"beta1", adam->beta1}, {"beta2", adam->beta2},
                               {"eps", adam->eps}, {"step", adam->step}};
    }
    const std::string text = header.dump();

    // Write to a sibling file first so an interrupted save never clobbers a good checkpoint.
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
        const std::uint32_t version = kCheckpointVersion;
        const std::uint64_t length = text.size();
        out.write(kMagic.data(), kMagic.size());
        out.write(reinterpret_cast<const char*>(&version), sizeof version);
        out.write(reinterpret_cast<const char*>(&length), sizeof length);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const Parameter& p : params) write_matrix(out, p.tensor.values);
        if (adam != nullptr) {
            for (const Matrix& m : adam->m) write_matrix(out, m);
            for (const Matrix& v : adam->v) write_matrix(out, v);
        }
        if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
    return open_checkpoint(path).header;
}

nlohmann::json load_checkpoint(const std::filesystem::path& path, ParameterSet& params, AdamState* adam) {
    Opened o = open_checkpoint(path);
    const nlohmann::json& list = o.header.at("parameters");
    if (list.size() != static_cast<std::size_t>(params.size())) {
        throw CheckpointError("checkpoint holds " + std::to_string(list.size()) + " tensors, model expects " +
                              std::to_string(params.size()));
    }
    for (int id = 0; id < params.size(); ++id) {
        const auto& entry = list[static_cast<std::size_t>(id)];
        const Parameter& p = params[id];
        if (entry.at("name").get<std::string>() != p.name ||
            entry.at("shape").get<std::vector<Index>>() != p.tensor.shape) {
            throw CheckpointError("checkpoint tensor " + entry.at("name").get<std::string>() +
                                  " does not match model tensor " + p.name);
        }
    }
    for (int id = 0; id < params.size(); ++id) read_matrix(o.in, params.value(id), params[id].name);

    if (adam != nullptr && !o.header.at("optimizer").is_null()) {
        const auto& opt = o.header["optimizer"];
        AdamState s(params, opt.at("lr").get<double>());
        s.beta1 = opt.at("beta1").get<double>();
        s.beta2 = opt.at("beta2").get<double>();
        s.eps = opt.at("eps").get<double>();
        s.step = opt.at("step").get<std::int64_t>();
        for (auto& m : s.m) read_matrix(o.in, m, "optimizer moments");
        for (auto& v : s.v) read_matrix(o.in, v, "optimizer moments");
        *adam = std::move(s);
    }
    return o.header.at("metadata");
}

}  // namespace ball3d::nn

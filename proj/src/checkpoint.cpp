#include "fgl/checkpoint.hpp"

#include <cstdint>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fgl/error.hpp"

namespace fgl::nn {

namespace {
constexpr char kMagic[4] = {'F', 'G', 'L', '1'};
using json = nlohmann::json;
}  // namespace

void save_checkpoint(const std::string& path, const Params& params) {
    json index;
    index["dtype"] = "f64";
    index["params"] = json::array();
    std::uint64_t offset = 0;
    for (const auto& p : params.items()) {
        json e;
        e["name"] = p.name;
        e["shape"] = p.node->value.shape;
        e["offset"] = offset;
        e["trainable"] = p.trainable;
        index["params"].push_back(e);
        offset += p.node->value.data.size() * sizeof(double);
    }
    const std::string idx = index.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    const std::uint64_t len = idx.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(idx.data(), static_cast<std::streamsize>(idx.size()));
    for (const auto& p : params.items()) {
        const auto& d = p.node->value.data;
        out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    }
    if (!out) throw IoError("write failure: " + path);
}

std::map<std::string, Tensor> read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kMagic, 4))
        throw FormatError("not a FGL1 checkpoint: " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string idx(len, '\0');
    in.read(idx.data(), static_cast<std::streamsize>(len));
    if (!in) throw FormatError("truncated checkpoint index: " + path);

    json index;
    try {
        index = json::parse(idx);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad checkpoint index: ") + e.what());
    }
    if (index.value("dtype", "") != "f64") throw FormatError("unsupported checkpoint dtype");

    const std::streampos payload = in.tellg();
    std::map<std::string, Tensor> out;
    for (const auto& e : index.at("params")) {
        const std::string name = e.at("name").get<std::string>();
        const std::vector<int> shape = e.at("shape").get<std::vector<int>>();
        const std::uint64_t offset = e.at("offset").get<std::uint64_t>();
        Tensor t = Tensor::zeros(shape);
        in.seekg(payload + static_cast<std::streamoff>(offset));
        in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) throw FormatError("truncated checkpoint payload: " + path);
        out.emplace(name, std::move(t));
    }
    return out;
}

void load_checkpoint(const std::string& path, Params& params) {
    auto tensors = read_checkpoint(path);
    for (const auto& p : params.items()) {
        auto it = tensors.find(p.name);
        if (it == tensors.end()) throw FormatError("checkpoint missing parameter: " + p.name);
        if (it->second.shape != p.node->value.shape)
            throw ShapeError("checkpoint shape mismatch for " + p.name);
        p.node->value = it->second;
    }
}

}  // namespace fgl::nn

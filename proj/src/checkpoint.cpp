#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "unitok/checkpoint.h"
#include "unitok/error.h"

namespace unitok {

namespace {
constexpr char kMagic[8] = {'U', 'T', 'O', 'K', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;
}  // namespace

void save_container(const std::string& path, const Container& c) {
    nlohmann::json header;
    header["kind"] = c.kind;
    header["config_text"] = c.config_text;
    header["config_hash"] = c.config_hash;
    header["seed"] = c.seed;
    header["step"] = c.step;
    header["semantic_hash"] = c.semantic_hash;
    header["meta"] = c.meta;
    nlohmann::json dir = nlohmann::json::array();
    uint64_t offset = 0;
    for (const auto& [name, t] : c.tensors) {
        dir.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}, {"count", t.numel()}});
        offset += t.numel();
    }
    header["tensors"] = dir;
    const std::string hs = header.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError(tmp + ": cannot open for write");
        f.write(kMagic, 8);
        uint32_t v = kVersion;
        f.write(reinterpret_cast<char*>(&v), 4);
        uint64_t hlen = hs.size();
        f.write(reinterpret_cast<char*>(&hlen), 8);
        f.write(hs.data(), std::streamsize(hs.size()));
        for (const auto& [name, t] : c.tensors)
            f.write(reinterpret_cast<const char*>(t.data.data()),
                    std::streamsize(t.data.size() * sizeof(float)));
        if (!f) throw DataError(tmp + ": write failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataError(path + ": atomic rename failed");
}

Container load_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path + ": cannot open checkpoint");
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError(path + ": not a checkpoint container");
    uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    if (version != kVersion)
        throw DataError(path + ": unsupported container version " + std::to_string(version));
    uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    std::string hs(hlen, '\0');
    if (!f.read(hs.data(), std::streamsize(hlen))) throw DataError(path + ": truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const std::exception& e) {
        throw DataError(path + ": bad header json: " + e.what());
    }
    Container c;
    c.kind = header.value("kind", "");
    c.config_text = header.value("config_text", "");
    c.config_hash = header.value("config_hash", "");
    c.seed = header.value("seed", uint64_t(0));
    c.step = header.value("step", (long long)0);
    c.semantic_hash = header.value("semantic_hash", "");
    if (header.contains("meta"))
        c.meta = header["meta"].get<std::map<std::string, std::string>>();
    const std::streampos payload = f.tellg();
    for (const auto& e : header["tensors"]) {
        const std::string name = e["name"].get<std::string>();
        const std::vector<int> shape = e["shape"].get<std::vector<int>>();
        const uint64_t offset = e["offset"].get<uint64_t>();
        const uint64_t count = e["count"].get<uint64_t>();
        Tensor t(shape);
        if (t.numel() != count) throw DataError(path + ": tensor size mismatch for " + name);
        f.seekg(payload + std::streampos(offset * sizeof(float)));
        if (!f.read(reinterpret_cast<char*>(t.data.data()), std::streamsize(count * sizeof(float))))
            throw DataError(path + ": truncated tensor " + name);
        c.tensors.emplace(name, std::move(t));
    }
    return c;
}

}  // namespace unitok

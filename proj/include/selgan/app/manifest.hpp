#pragma once

#include <array>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include <openssl/evp.h>

#include <json.hpp>

#include "selgan/error.hpp"

namespace selgan::app {

inline std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw FormatError("SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write '" + path + "'");
    out << bytes;
}

inline std::string file_sha256(const std::string& path) { return sha256_hex(read_file(path)); }

struct StageRecord {
    std::string key;                            // hash of the stage's inputs
    std::map<std::string, std::string> outputs; // file name -> SHA-256
};

/// Config snapshot, seeds and per-stage artifact hashes of one output
/// directory. Contains no timings, so equal runs give equal manifests.
struct Manifest {
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json seeds = nlohmann::json::object();
    std::map<std::string, StageRecord> stages;

    nlohmann::json to_json() const {
        nlohmann::json st = nlohmann::json::object();
        for (const auto& [name, rec] : stages) st[name] = {{"key", rec.key}, {"outputs", rec.outputs}};
        return {{"format", "selgan-manifest"}, {"version", 1}, {"config", config}, {"seeds", seeds}, {"stages", st}};
    }

    static Manifest from_json(const nlohmann::json& j) {
        Manifest m;
        try {
            m.config = j.at("config");
            m.seeds = j.at("seeds");
            for (const auto& [name, rec] : j.at("stages").items()) {
                m.stages[name] = {rec.at("key").get<std::string>(),
                                  rec.at("outputs").get<std::map<std::string, std::string>>()};
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("malformed manifest: ") + e.what());
        }
        return m;
    }
};

} // namespace selgan::app

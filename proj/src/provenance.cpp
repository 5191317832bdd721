#include "ceph/provenance.hpp"

#include <array>
#include <memory>

#include "json.hpp"
#include <openssl/evp.h>

#include "ceph/error.hpp"
#include "ceph/io.hpp"

namespace ceph::provenance {

std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
        throw Error(Errc::IoError, "sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(io::read_file(path)); }

std::string serialize(const Manifest& m) {
    nlohmann::ordered_json j;
    j["tool_version"] = m.tool_version;
    j["config"] = m.config;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    return j.dump(2) + "\n";
}

Manifest parse(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        Manifest m;
        m.tool_version = j.at("tool_version").get<std::string>();
        m.config = j.value("config", std::map<std::string, std::string>{});
        m.inputs = j.value("inputs", std::map<std::string, std::string>{});
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, std::string("provenance manifest: ") + e.what());
    }
}

VerifyResult verify(const std::filesystem::path& bundle, const Manifest& m) {
    VerifyResult r;
    for (const auto& [rel, digest] : m.outputs) {
        const auto path = bundle / rel;
        if (!std::filesystem::exists(path)) {
            r.missing.push_back(rel);
            r.ok = false;
            continue;
        }
        if (sha256_file(path) != digest) {
            r.mismatched.push_back(rel);
            r.ok = false;
        }
    }
    return r;
}

}  // namespace ceph::provenance

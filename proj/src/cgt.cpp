#include "ceph/cgt.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

#include "ceph/error.hpp"
#include "ceph/io.hpp"
#include "json.hpp"

namespace ceph::cgt {

namespace {

static_assert(std::endian::native == std::endian::little, "CGT I/O assumes a little-endian host");

void check_shape(const Tensor& t, const std::string& context) {
    if (t.channel_names.size() != t.channels) {
        throw Error(Errc::ShapeMismatch, "channel_names has " + std::to_string(t.channel_names.size()) +
                                             " entries for " + std::to_string(t.channels) + " channels",
                    context);
    }
    if (t.data.size() != t.channels * t.height * t.width) {
        throw Error(Errc::ShapeMismatch, "payload size does not match shape", context);
    }
}

}  // namespace

std::string encode(const Tensor& tensor) {
    check_shape(tensor, "tensor");
    nlohmann::json header;
    header["dtype"] = "f32";
    header["shape"] = {tensor.channels, tensor.height, tensor.width};
    header["channel_names"] = tensor.channel_names;
    const std::string text = header.dump();
    const auto len = static_cast<std::uint32_t>(text.size());

    std::string out;
    out.reserve(kMagic.size() + 4 + text.size() + tensor.data.size() * sizeof(float));
    out.append(kMagic);
    char len_bytes[4];
    std::memcpy(len_bytes, &len, 4);
    out.append(len_bytes, 4);
    out.append(text);
    out.append(reinterpret_cast<const char*>(tensor.data.data()), tensor.data.size() * sizeof(float));
    return out;
}

Tensor decode(std::string_view bytes, const std::string& context) {
    if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic) {
        throw Error(Errc::ParseError, "not a CGT tensor file (bad magic)", context);
    }
    std::uint32_t len = 0;
    std::memcpy(&len, bytes.data() + kMagic.size(), 4);
    const std::size_t header_at = kMagic.size() + 4;
    if (bytes.size() < header_at + len) throw Error(Errc::ParseError, "truncated CGT header", context);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(header_at, len));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, std::string("bad CGT header: ") + e.what(), context);
    }
    Tensor t;
    try {
        if (header.at("dtype").get<std::string>() != "f32") {
            throw Error(Errc::ParseError, "unsupported CGT dtype", context);
        }
        const auto shape = header.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 3) throw Error(Errc::ParseError, "CGT shape must be [C,H,W]", context);
        t.channels = shape[0];
        t.height = shape[1];
        t.width = shape[2];
        t.channel_names = header.value("channel_names", std::vector<std::string>(t.channels));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, std::string("bad CGT header: ") + e.what(), context);
    }
    const std::size_t count = t.channels * t.height * t.width;
    const std::size_t payload_at = header_at + len;
    if (bytes.size() != payload_at + count * sizeof(float)) {
        throw Error(Errc::ParseError, "CGT payload size does not match shape", context);
    }
    t.data.resize(count);
    std::memcpy(t.data.data(), bytes.data() + payload_at, count * sizeof(float));
    check_shape(t, context);
    return t;
}

void write(const std::filesystem::path& path, const Tensor& tensor) { io::write_file_atomic(path, encode(tensor)); }

Tensor read(const std::filesystem::path& path) { return decode(io::read_file(path), path.string()); }

}  // namespace ceph::cgt

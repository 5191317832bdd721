#include "ceph/io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "ceph/error.hpp"

namespace ceph::io {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoError, "cannot open file for reading: " + path.string(), path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw Error(Errc::IoError, "read failed: " + path.string(), path.string());
    }
    return std::move(buffer).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw Error(Errc::IoError, "cannot create directory " + path.parent_path().string(), path.string());
        }
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(Errc::IoError, "cannot open file for writing: " + tmp.string(), path.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            throw Error(Errc::IoError, "write failed: " + tmp.string(), path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(Errc::IoError, "cannot rename into place: " + path.string(), path.string());
    }
}

}  // namespace ceph::io

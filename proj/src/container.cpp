#include "clat/container.hpp"

#include <cstdint>
#include <fstream>

#include "clat/error.hpp"

namespace clat {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void write_u32_le(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in) {
    unsigned char b[4] = {0, 0, 0, 0};
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

bool Blob::has_block(const std::string& name) const {
    for (const auto& [n, m] : blocks)
        if (n == name) return true;
    return false;
}

const Eigen::MatrixXd& Blob::block(const std::string& name) const {
    for (const auto& [n, m] : blocks)
        if (n == name) return m;
    throw data_error("container has no block named '" + name + "'");
}

void write_container(const std::filesystem::path& path, const Blob& blob) {
    ordered_json header;
    header["meta"] = blob.meta;
    header["blocks"] = ordered_json::array();
    for (const auto& [name, m] : blob.blocks) {
        header["blocks"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    }
    const std::string htext = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open '" + path.string() + "' for writing");
    out.write(kContainerMagic.data(), static_cast<std::streamsize>(kContainerMagic.size()));
    write_u32_le(out, static_cast<std::uint32_t>(htext.size()));
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& [name, m] : blob.blocks) {
        const RowMajor rm = m;
        out.write(reinterpret_cast<const char*>(rm.data()),
                  static_cast<std::streamsize>(sizeof(double)) * rm.size());
    }
    if (!out) throw data_error("short write to '" + path.string() + "'");
}

Blob read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open '" + path.string() + "'");

    char magic[8] = {};
    in.read(magic, 8);
    if (in.gcount() != 8 || std::string_view(magic, 8) != kContainerMagic)
        throw data_error("'" + path.string() + "' is not a container file (bad magic)");

    const std::uint32_t hlen = read_u32_le(in);
    if (!in) throw data_error("'" + path.string() + "' is truncated (missing header length)");
    std::string htext(hlen, '\0');
    in.read(htext.data(), hlen);
    if (in.gcount() != static_cast<std::streamsize>(hlen))
        throw data_error("'" + path.string() + "' is truncated (incomplete header)");

    ordered_json header;
    try {
        header = ordered_json::parse(htext);
    } catch (const nlohmann::json::exception& e) {
        throw data_error("'" + path.string() + "' has a malformed header: " + e.what());
    }
    if (!header.contains("blocks") || !header["blocks"].is_array())
        throw data_error("'" + path.string() + "' header lacks a blocks list");

    Blob blob;
    blob.meta = header.value("meta", ordered_json::object());
    for (const auto& desc : header["blocks"]) {
        const std::string name = desc.at("name").get<std::string>();
        const auto rows = desc.at("rows").get<Eigen::Index>();
        const auto cols = desc.at("cols").get<Eigen::Index>();
        if (rows < 0 || cols < 0)
            throw data_error("'" + path.string() + "' block '" + name + "' has negative shape");
        RowMajor rm(rows, cols);
        in.read(reinterpret_cast<char*>(rm.data()),
                static_cast<std::streamsize>(sizeof(double)) * rm.size());
        if (in.gcount() != static_cast<std::streamsize>(sizeof(double)) * rm.size())
            throw data_error("'" + path.string() + "' is truncated in block '" + name + "'");
        blob.blocks.emplace_back(name, Eigen::MatrixXd(rm));
    }
    return blob;
}

} // namespace clat

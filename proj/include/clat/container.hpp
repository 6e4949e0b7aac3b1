#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace clat {

using ordered_json = nlohmann::ordered_json;

// On-disk container shared by every binary artifact (models, Gaussians,
// centers, image sets): 8-byte magic, little-endian u32 header length, JSON
// header, then raw row-major float64 blocks in header order. Readers and
// writers assume a little-endian host.
inline constexpr std::string_view kContainerMagic = "CLATMDL1";

struct Blob {
    ordered_json meta;  // free-form; holds a "type" key by convention
    std::vector<std::pair<std::string, Eigen::MatrixXd>> blocks;

    bool has_block(const std::string& name) const;
    const Eigen::MatrixXd& block(const std::string& name) const;  // data_error if absent
};

void write_container(const std::filesystem::path& path, const Blob& blob);
Blob read_container(const std::filesystem::path& path);

} // namespace clat

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "iosvqa/geometry.hpp"

namespace iosvqa {

// IOSPC v1: a fixed 59-byte little-endian header followed by point_count rows
// of six f32 values. See docs/iospc_format.md for the byte layout.
inline constexpr std::size_t kPcHeaderSize = 59;
inline constexpr std::size_t kPcRowSize = 24;
inline constexpr std::uint16_t kPcVersion = 1;

constexpr std::size_t pointcloud_file_size(std::size_t point_count) { return kPcHeaderSize + kPcRowSize * point_count; }

std::vector<std::uint8_t> encode_pointcloud(const PointCloud& cloud);

// Returns the number of bytes written. Throws SinkFailure if the stream fails.
std::size_t write_pointcloud(const PointCloud& cloud, std::ostream& sink);

struct PcReadOptions {
    // Strict: GCP values outside [0,1] (beyond 1e-6) raise InvariantViolation.
    // Lenient: they are counted in PcReadReport instead.
    bool strict = true;
};

struct PcReadReport {
    std::size_t gcp_out_of_range = 0;
};

PointCloud read_pointcloud(std::span<const std::uint8_t> bytes, const PcReadOptions& options = {},
                           PcReadReport* report = nullptr);
PointCloud read_pointcloud(std::istream& source, const PcReadOptions& options = {}, PcReadReport* report = nullptr);

// Writes via a temporary sibling file and rename, so a partially written
// file never appears under `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace iosvqa

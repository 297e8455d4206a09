#include "iosvqa/pc_format.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <system_error>
#include <unistd.h>

#include "iosvqa/error.hpp"

namespace iosvqa {

namespace {

constexpr std::uint8_t kMagic[6] = {'I', 'O', 'S', 'P', 'C', 0};
constexpr std::uint8_t kTags[6] = {'X', 'Y', 'Z', 'G', 'G', 'G'};
constexpr double kGcpTolerance = 1e-6;

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    template <typename T>
    void put(T value) {
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        const U bits = std::bit_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }

    void put_bytes(const std::uint8_t* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }

private:
    std::vector<std::uint8_t>& out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    template <typename T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        if (in_.size() - pos_ < sizeof(T)) throw Error(ErrorCode::Truncated, "unexpected end of data");
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }

    std::span<const std::uint8_t> take(std::size_t n) {
        if (in_.size() - pos_ < n) throw Error(ErrorCode::Truncated, "unexpected end of data");
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_pointcloud(const PointCloud& cloud) {
    if (cloud.points.size() > UINT32_MAX) throw Error(ErrorCode::InvalidArgument, "too many points for IOSPC v1");
    std::vector<std::uint8_t> out;
    out.reserve(pointcloud_file_size(cloud.points.size()));
    ByteWriter w(out);
    w.put_bytes(kMagic, sizeof(kMagic));
    w.put<std::uint16_t>(kPcVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cloud.points.size()));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(kPointChannels));
    w.put_bytes(kTags, sizeof(kTags));
    w.put<std::uint64_t>(cloud.seed);
    for (int i = 0; i < 3; ++i) w.put<double>(cloud.normalization.centroid[i]);
    w.put<double>(cloud.normalization.scale);
    for (const auto& row : cloud.points)
        for (float v : row) w.put<float>(v);
    return out;
}

std::size_t write_pointcloud(const PointCloud& cloud, std::ostream& sink) {
    const auto bytes = encode_pointcloud(cloud);
    sink.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!sink) throw Error(ErrorCode::SinkFailure, "stream rejected " + std::to_string(bytes.size()) + " bytes");
    return bytes.size();
}

PointCloud read_pointcloud(std::span<const std::uint8_t> bytes, const PcReadOptions& options, PcReadReport* report) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw Error(ErrorCode::BadMagic, "not an IOSPC file");
    ByteReader r(bytes);
    r.take(sizeof(kMagic));
    const auto version = r.get<std::uint16_t>();
    if (version != kPcVersion) throw Error(ErrorCode::UnsupportedVersion, "IOSPC version " + std::to_string(version));
    const auto count = r.get<std::uint32_t>();
    const auto channels = r.get<std::uint8_t>();
    if (channels != kPointChannels)
        throw Error(ErrorCode::InvariantViolation, "channel count " + std::to_string(channels));
    const auto tags = r.take(sizeof(kTags));
    if (std::memcmp(tags.data(), kTags, sizeof(kTags)) != 0)
        throw Error(ErrorCode::InvariantViolation, "channel tags are not XYZGGG");

    PointCloud cloud;
    cloud.seed = r.get<std::uint64_t>();
    for (int i = 0; i < 3; ++i) cloud.normalization.centroid[i] = r.get<double>();
    cloud.normalization.scale = r.get<double>();
    if (!cloud.normalization.centroid.allFinite() || !std::isfinite(cloud.normalization.scale) ||
        !(cloud.normalization.scale > 0.0))
        throw Error(ErrorCode::InvariantViolation, "invalid normalization record");

    const std::size_t expected = pointcloud_file_size(count);
    if (bytes.size() < expected)
        throw Error(ErrorCode::Truncated, "expected " + std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));
    if (bytes.size() > expected)
        throw Error(ErrorCode::InvariantViolation, std::to_string(bytes.size() - expected) + " trailing bytes");

    std::size_t out_of_range = 0;
    cloud.points.resize(count);
    for (auto& row : cloud.points) {
        for (std::size_t c = 0; c < kPointChannels; ++c) {
            const float v = r.get<float>();
            if (!std::isfinite(v)) throw Error(ErrorCode::InvariantViolation, "non-finite value");
            if (c >= 3 && (v < -kGcpTolerance || v > 1.0 + kGcpTolerance)) {
                if (options.strict) throw Error(ErrorCode::InvariantViolation, "GCP channel outside [0,1]");
                ++out_of_range;
            }
            row[c] = v;
        }
    }
    if (report) report->gcp_out_of_range = out_of_range;
    return cloud;
}

PointCloud read_pointcloud(std::istream& source, const PcReadOptions& options, PcReadReport* report) {
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
    return read_pointcloud(bytes, options, report);
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot create " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw Error(ErrorCode::SinkFailure, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::Io, "cannot rename onto " + path.string());
    }
}

} // namespace iosvqa

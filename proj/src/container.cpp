#include "relhoi/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

#include "relhoi/error.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "scene-model/container";
constexpr std::uint8_t kMagic[4] = {'C', 'R', 'L', 'N'};

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xff));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            fail(ErrorKind::Format, kModule,
                 std::string("truncated container while reading ") + what + " at offset " + std::to_string(pos_));
        }
    }

    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }

    std::uint16_t u16(const char* what) {
        need(2, what);
        const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void skip(std::size_t n, const char* what) {
        need(n, what);
        pos_ += n;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

ContainerListing walk(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorKind::Format, kModule, "bad magic (expected \"CRLN\")");
    r.skip(4, "magic");
    ContainerListing listing;
    listing.version = r.u32("version");
    if (listing.version != kContainerVersion) {
        fail(ErrorKind::Format, kModule, "unsupported container version " + std::to_string(listing.version));
    }
    const std::uint32_t count = r.u32("tensor count");
    std::set<std::string> seen;
    for (std::uint32_t t = 0; t < count; ++t) {
        ContainerEntry e;
        const std::uint16_t name_len = r.u16("name length");
        e.name = r.str(name_len, "name");
        if (!seen.insert(e.name).second) fail(ErrorKind::Format, kModule, "duplicate tensor name '" + e.name + "'");
        const std::uint8_t ndim = r.u8("ndim");
        std::size_t elems = 1;
        for (std::uint8_t d = 0; d < ndim; ++d) {
            const std::uint32_t dim = r.u32("dims");
            e.dims.push_back(dim);
            if (dim != 0 && elems > std::numeric_limits<std::size_t>::max() / 4 / dim) {
                fail(ErrorKind::Format, kModule, "tensor '" + e.name + "' is implausibly large");
            }
            elems *= dim;
        }
        e.payload_offset = r.offset();
        e.payload_bytes = elems * 4;
        r.skip(e.payload_bytes, "payload");
        listing.entries.push_back(std::move(e));
    }
    if (r.offset() != bytes.size()) {
        fail(ErrorKind::Format, kModule,
             std::to_string(bytes.size() - r.offset()) + " trailing bytes after last tensor");
    }
    listing.total_bytes = bytes.size();
    return listing;
}

}  // namespace

std::vector<std::uint8_t> encode_container(const NamedTensors& tensors) {
    std::set<std::string> seen;
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kContainerVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        if (!seen.insert(name).second) fail(ErrorKind::Format, kModule, "duplicate tensor name '" + name + "'");
        if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
            fail(ErrorKind::Format, kModule, "tensor name too long");
        }
        if (tensor.rank() > std::numeric_limits<std::uint8_t>::max()) {
            fail(ErrorKind::Format, kModule, "tensor '" + name + "' has too many dims");
        }
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u8(out, static_cast<std::uint8_t>(tensor.rank()));
        for (std::size_t d : tensor.dims()) put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : tensor.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

ContainerListing list_container(std::span<const std::uint8_t> bytes) { return walk(bytes); }

NamedTensors decode_container(std::span<const std::uint8_t> bytes) {
    const ContainerListing listing = walk(bytes);
    NamedTensors out;
    out.reserve(listing.entries.size());
    for (const auto& e : listing.entries) {
        std::vector<float> data(e.payload_bytes / 4);
        for (std::size_t i = 0; i < data.size(); ++i) {
            const std::uint8_t* p = bytes.data() + e.payload_offset + 4 * i;
            const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                                       (static_cast<std::uint32_t>(p[2]) << 16) |
                                       (static_cast<std::uint32_t>(p[3]) << 24);
            data[i] = std::bit_cast<float>(bits);
        }
        try {
            out.emplace_back(e.name, Tensor(e.dims, std::move(data)));
        } catch (const Error& err) {
            fail(ErrorKind::Validation, kModule, "tensor '" + e.name + "': " + err.detail());
        }
    }
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, kModule, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, kModule, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, kModule, "short write to " + path.string());
}

void write_tensor_container(const std::filesystem::path& path, const NamedTensors& tensors) {
    write_file_bytes(path, encode_container(tensors));
}

NamedTensors read_tensor_container(const std::filesystem::path& path) {
    return decode_container(read_file_bytes(path));
}

std::string fnv1a_hex(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

const Tensor* find_tensor(const NamedTensors& tensors, const std::string& name) {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

}  // namespace relhoi

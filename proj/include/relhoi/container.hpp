#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relhoi/tensor.hpp"

namespace relhoi {

// Binary tensor container, little-endian, no padding:
//   "CRLN" | version u32 | count u32 |
//   per tensor: name_len u16 | name bytes | ndim u8 | dims u32 x ndim | f32 payload
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 12;

using NamedTensor = std::pair<std::string, Tensor>;
using NamedTensors = std::vector<NamedTensor>;

std::vector<std::uint8_t> encode_container(const NamedTensors& tensors);
NamedTensors decode_container(std::span<const std::uint8_t> bytes);

void write_tensor_container(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors read_tensor_container(const std::filesystem::path& path);

// Header-level listing used by `inspect`; does not materialize payloads.
struct ContainerEntry {
    std::string name;
    Dims dims;
    std::size_t payload_offset = 0;
    std::size_t payload_bytes = 0;
};

struct ContainerListing {
    std::uint32_t version = 0;
    std::vector<ContainerEntry> entries;
    std::size_t total_bytes = 0;
};

ContainerListing list_container(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// FNV-1a 64-bit digest as 16 lowercase hex characters.
std::string fnv1a_hex(std::span<const std::uint8_t> bytes);

// Finds a tensor by name; nullptr if absent.
const Tensor* find_tensor(const NamedTensors& tensors, const std::string& name);

}  // namespace relhoi

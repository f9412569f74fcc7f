#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace pdm {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// 16 lowercase hex digits.
std::string hex_digest(std::uint64_t h);

std::string content_hash(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

}  // namespace pdm

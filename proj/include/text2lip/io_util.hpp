#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace t2l {

// Writes via a temp file in the same directory followed by a rename, so
// readers never observe a partially written file.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& bytes);

std::string read_file(const std::filesystem::path& path);

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string to_hex(std::uint64_t v);

void append_f64_le(std::string& out, const double* vals, std::size_t n);
void read_f64_le(const std::string& in, std::size_t offset, double* vals,
                 std::size_t n);
void append_u64_le(std::string& out, std::uint64_t v);
std::uint64_t read_u64_le(const std::string& in, std::size_t offset);

// printf-style %.*f / %.17g formatting helpers used wherever output files
// must be byte-stable across runs
std::string fmt_fixed(double v, int decimals);
std::string fmt_g17(double v);

}  // namespace t2l

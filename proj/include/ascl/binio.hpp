#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ascl::binio {

// Explicit little-endian encoding, independent of host byte order.
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_i32(std::ostream& os, std::int32_t v);
void write_f64(std::ostream& os, double v);
void write_f64s(std::ostream& os, std::span<const double> v);
void write_string(std::ostream& os, std::string_view s);  // u64 length + bytes
void write_magic(std::ostream& os, std::string_view magic);

std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
std::int32_t read_i32(std::istream& is);
double read_f64(std::istream& is);
std::vector<double> read_f64s(std::istream& is, std::size_t n);
std::string read_string(std::istream& is);
void expect_magic(std::istream& is, std::string_view magic);

}  // namespace ascl::binio

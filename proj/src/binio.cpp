#include "ascl/binio.hpp"

#include <bit>
#include <istream>
#include <ostream>

#include "ascl/error.hpp"

namespace ascl::binio {

namespace {

template <class U>
void put(std::ostream& os, U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        buf[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    os.write(reinterpret_cast<const char*>(buf), sizeof(U));
    if (!os) {
        fail(ErrorCode::Io, "write failed");
    }
}

template <class U>
U get(std::istream& is) {
    unsigned char buf[sizeof(U)];
    is.read(reinterpret_cast<char*>(buf), sizeof(U));
    if (!is) {
        fail(ErrorCode::Format, "unexpected end of file");
    }
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        v |= static_cast<U>(buf[i]) << (8 * i);
    }
    return v;
}

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { put(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put(os, v); }
void write_i32(std::ostream& os, std::int32_t v) { put(os, static_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& os, double v) { put(os, std::bit_cast<std::uint64_t>(v)); }

void write_f64s(std::ostream& os, std::span<const double> v) {
    for (double x : v) {
        write_f64(os, x);
    }
}

void write_string(std::ostream& os, std::string_view s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_magic(std::ostream& os, std::string_view magic) {
    os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

std::uint32_t read_u32(std::istream& is) { return get<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get<std::uint64_t>(is); }
std::int32_t read_i32(std::istream& is) { return static_cast<std::int32_t>(get<std::uint32_t>(is)); }
double read_f64(std::istream& is) { return std::bit_cast<double>(get<std::uint64_t>(is)); }

std::vector<double> read_f64s(std::istream& is, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = read_f64(is);
    }
    return v;
}

std::string read_string(std::istream& is) {
    const std::uint64_t n = read_u64(is);
    if (n > (std::uint64_t{1} << 32)) {
        fail(ErrorCode::Format, "string length out of range");
    }
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) {
        fail(ErrorCode::Format, "unexpected end of file");
    }
    return s;
}

void expect_magic(std::istream& is, std::string_view magic) {
    std::string got(magic.size(), '\0');
    is.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!is || got != magic) {
        fail(ErrorCode::Format, "bad magic: expected " + std::string(magic));
    }
}

}  // namespace ascl::binio

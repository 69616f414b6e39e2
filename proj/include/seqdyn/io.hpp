#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "seqdyn/core.hpp"

namespace seqdyn {

/// Insertion-ordered JSON so summaries serialize with stable key order.
using json = nlohmann::ordered_json;

/// Shortest round-trip decimal form of a double, locale-independent ('.'
/// radix always).  Used for every numeric field we write, so re-running an
/// experiment with the same seed reproduces output files byte for byte.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// One CSV cell: integer, real, or verbatim text.
using csv_cell = std::variant<long, double, std::string>;

/// Minimal CSV emitter: mandatory header, LF line endings, no quoting (cell
/// text must not contain commas or newlines — ours never does).
class csv_writer {
public:
    csv_writer(const std::filesystem::path& path, std::vector<std::string> header)
        : out_(path, std::ios::binary) {
        require(out_.good(), errc::io_error, "cannot open " + path.string());
        require(!header.empty(), errc::io_error, "csv header must be non-empty");
        columns_ = header.size();
        std::string line;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) line += ',';
            line += header[i];
        }
        out_ << line << '\n';
    }

    void row(const std::vector<csv_cell>& cells) {
        require(cells.size() == columns_, errc::io_error, "csv row arity mismatch");
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            if (auto* l = std::get_if<long>(&cells[i]))
                line += std::to_string(*l);
            else if (auto* d = std::get_if<double>(&cells[i]))
                line += format_double(*d);
            else
                line += std::get<std::string>(cells[i]);
        }
        out_ << line << '\n';
    }

    void close() {
        out_.close();
        require(out_.good(), errc::io_error, "csv write failed");
    }

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), errc::io_error, "cannot open " + path.string());
    out << text;
    out.close();
    require(out.good(), errc::io_error, "write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), errc::io_error, "cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return text;
}

/// FNV-1a 64-bit over a byte string.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // offset basis
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;  // prime
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

} // namespace seqdyn

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "seqdyn/io.hpp"

using namespace seqdyn;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("format_double round-trips and is locale-free") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-13, 6.283185307179586, 1e300, 0.0}) {
        std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
        CHECK(s.find(',') == std::string::npos);
    }
    // Shortest form: integers print without an exponent or trailing zeros.
    CHECK(format_double(42.0) == "42");
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv_writer emits header, LF endings, and checks arity") {
    auto path = temp_file("seqdyn_test_io.csv");
    {
        csv_writer csv(path, {"n", "value", "tag"});
        csv.row({long{1}, 0.25, std::string("ok")});
        csv.row({long{2}, 1.0 / 3.0, std::string("x")});
        CHECK_THROWS_AS(csv.row({long{3}, 0.5}), error);
        csv.close();
    }
    std::string text = read_text(path);
    CHECK(text == "n,value,tag\n1,0.25,ok\n2," + format_double(1.0 / 3.0) + ",x\n");
    CHECK(text.find('\r') == std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("write_text/read_text round-trip bytes") {
    auto path = temp_file("seqdyn_test_io.txt");
    std::string payload = "line one\nline two\n";
    write_text(path, payload);
    CHECK(read_text(path) == payload);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_text(path), error);
}

TEST_CASE("fnv1a64 matches the reference vectors") {
    // Published FNV-1a 64-bit test vectors.
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("hex64 is fixed-width lowercase") {
    CHECK(hex64(0) == "0000000000000000");
    CHECK(hex64(0xdeadbeefull) == "00000000deadbeef");
    CHECK(hex64(0xffffffffffffffffull) == "ffffffffffffffff");
}

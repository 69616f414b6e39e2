#include <catch2/catch_amalgamated.hpp>

#include "seqdyn/config.hpp"
#include "seqdyn/io.hpp"

using namespace seqdyn;

namespace {

experiment_config parse_ok(const std::string& text) { return experiment_config::parse(text); }

errc parse_code(const std::string& text) {
    try {
        experiment_config::parse(text);
    } catch (const error& e) {
        return e.code();
    }
    FAIL("expected a parse error");
    return errc::config_parse;
}

} // namespace

TEST_CASE("config parses sections, comments, and whitespace") {
    auto cfg = parse_ok("# leading comment\n"
                        "[experiment]\n"
                        "preset = entropy   ; trailing comment\n"
                        "seed=7\n"
                        "\n"
                        "[entropy]\n"
                        "  eps = 0.125, 0.0625 \n");
    CHECK(cfg.has("experiment", "preset"));
    CHECK(cfg.get_string("experiment", "preset", "") == "entropy");
    CHECK(cfg.get_u64("experiment", "seed", 0) == 7);
    CHECK(cfg.get_doubles("entropy", "eps", {}) == std::vector<double>{0.125, 0.0625});
    CHECK_FALSE(cfg.has("entropy", "n"));
    CHECK(cfg.get_long("entropy", "n", 42) == 42);
}

TEST_CASE("config rejects malformed input with line numbers") {
    try {
        experiment_config::parse("[experiment]\npreset = entropy\nnot a pair\n");
        FAIL("expected a parse error");
    } catch (const error& e) {
        CHECK(e.code() == errc::config_parse);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK(parse_code("key = before any section\n") == errc::config_parse);
    CHECK(parse_code("[experiment\npreset = x\n") == errc::config_parse);
    CHECK(parse_code("[a]\nk =\n") == errc::config_parse);
}

TEST_CASE("config rejects duplicate keys and sections") {
    CHECK(parse_code("[a]\nk = 1\nk = 2\n") == errc::config_parse);
    CHECK(parse_code("[a]\nk = 1\n[a]\nj = 2\n") == errc::config_parse);
}

TEST_CASE("config typed getters validate the full token") {
    auto cfg = parse_ok("[s]\nx = 1.5\nn = 12\nlist = 1, 2, 3\nbad = 1.5z\nword = abc\n");
    CHECK(cfg.get_double("s", "x", 0.0) == 1.5);
    CHECK(cfg.get_long("s", "n", 0) == 12);
    CHECK(cfg.get_longs("s", "list", {}) == std::vector<long>{1, 2, 3});
    CHECK_THROWS_AS(cfg.get_double("s", "bad", 0.0), error);
    CHECK_THROWS_AS(cfg.get_long("s", "word", 0), error);
    CHECK_THROWS_AS(cfg.get_doubles("s", "word", {}), error);
}

TEST_CASE("config schema validation rejects unknown names") {
    auto cfg = parse_ok("[experiment]\npreset = entropy\n[entropy]\ngrid = 1024\n");
    std::set<std::string> schema = {"experiment.preset", "entropy.grid"};
    CHECK_NOTHROW(cfg.validate(schema));

    auto bad_key = parse_ok("[experiment]\npreset = entropy\n[entropy]\ngrids = 1024\n");
    CHECK_THROWS_AS(bad_key.validate(schema), error);

    auto bad_section = parse_ok("[experiment]\npreset = entropy\n[entorpy]\ngrid = 1024\n");
    try {
        bad_section.validate(schema);
        FAIL("expected unknown-section error");
    } catch (const error& e) {
        CHECK(e.code() == errc::config_parse);
        CHECK(std::string(e.what()).find("entorpy") != std::string::npos);
    }
}

TEST_CASE("config canonical form is order-insensitive") {
    auto a = parse_ok("[b]\ny = 2\nx = 1\n[a]\nk = 0\n");
    auto b = parse_ok("# same content, different order and comments\n"
                      "[a]\nk = 0\n[b]\nx = 1\ny = 2   # note\n");
    CHECK(a.canonical() == b.canonical());
    CHECK(a.canonical() == "[a]\nk=0\n[b]\nx=1\ny=2\n");
    CHECK(fnv1a64(a.canonical()) == fnv1a64(b.canonical()));

    auto c = parse_ok("[a]\nk = 1\n[b]\nx = 1\ny = 2\n");
    CHECK(fnv1a64(a.canonical()) != fnv1a64(c.canonical()));
}

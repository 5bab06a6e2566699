#include "bencode.hpp"
#include "error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <chrono>
#include <filesystem>

using namespace tg;
using namespace tg::bencode;

namespace {

Errc code_of(std::string_view input) {
    try {
        decode_all(input);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("decoded without error: " << std::string(input));
    return Errc::invalid_argument;
}

}  // namespace

TEST_SUITE("bencode") {

TEST_CASE("integers") {
    CHECK(decode_all("i42e").as_integer() == 42);
    CHECK(decode_all("i-42e").as_integer() == -42);
    CHECK(decode_all("i0e").as_integer() == 0);
    CHECK(decode_all("i9223372036854775807e").as_integer() == INT64_MAX);
    CHECK(decode_all("i-9223372036854775808e").as_integer() == INT64_MIN);
    CHECK(encode(Value(-7)) == "i-7e");
}

TEST_CASE("strings lists dicts") {
    CHECK(decode_all("4:spam").as_string() == "spam");
    CHECK(decode_all("0:").as_string().empty());
    auto l = decode_all("l4:spami3ee");
    REQUIRE(l.as_list().size() == 2);
    CHECK(l.as_list()[1].as_integer() == 3);
    auto d = decode_all("d3:cow3:moo4:spam4:eggse");
    CHECK(d.find("cow")->as_string() == "moo");
    CHECK(d.find("nope") == nullptr);
    CHECK(encode(d) == "d3:cow3:moo4:spam4:eggse");
}

TEST_CASE("error classes") {
    CHECK(code_of("i03e") == Errc::malformed);
    CHECK(code_of("i-0e") == Errc::malformed);
    CHECK(code_of("ie") == Errc::malformed);
    CHECK(code_of("i1x2e") == Errc::malformed);
    CHECK(code_of("i9223372036854775808e") == Errc::malformed);
    CHECK(code_of("05:hello") == Errc::malformed);
    CHECK(code_of("x") == Errc::malformed);
    CHECK(code_of("i42") == Errc::truncated);
    CHECK(code_of("5:abc") == Errc::truncated);
    CHECK(code_of("l4:spam") == Errc::truncated);
    CHECK(code_of("d3:cow") == Errc::truncated);
    CHECK(code_of("") == Errc::truncated);
    CHECK(code_of("d1:bi1e1:ai2ee") == Errc::duplicate_key);
    CHECK(code_of("d1:ai1e1:ai2ee") == Errc::duplicate_key);
    CHECK(code_of("di1e1:ae") == Errc::malformed);
    CHECK(code_of("i1ei2e") == Errc::malformed);
    CHECK(code_of(std::string(300, 'l') + std::string(300, 'e')) == Errc::malformed);
}

TEST_CASE("decode leaves trailing bytes to the caller") {
    auto d = decode("i1eXYZ");
    CHECK(d.value.as_integer() == 1);
    CHECK(d.consumed == 3);
}

TEST_CASE("dict keys order as raw bytes") {
    Dict d{{"\xff", 1}, {"a", 2}, {"B", 3}, {"", 4}};
    CHECK(encode(d) == std::string("d0:i4e1:Bi3e1:ai2e1:\xffi1ee"));
    CHECK(decode_all(encode(d)) == Value(d));
}

TEST_CASE("member span covers the raw value bytes") {
    std::string doc = "d4:infod1:ai1ee4:zzzzi0ee";
    auto span = find_member_span(doc, "info");
    REQUIRE(span);
    CHECK(doc.substr(span->offset, span->length) == "d1:ai1ee");
    CHECK_FALSE(find_member_span(doc, "missing"));
}

TEST_CASE("10,000 generated values are decode-encode stable") {
    std::mt19937_64 rng(20110313);
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 10'000; ++i) {
        Value v = oracle::random_value(rng);
        std::string bytes = encode(v);
        Value back = decode_all(bytes);
        REQUIRE(back == v);
        REQUIRE(encode(back) == bytes);
    }
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
}

TEST_CASE("canonical fixtures re-encode byte for byte") {
    int seen = 0;
    for (const auto& entry : std::filesystem::directory_iterator(oracle::fixture_dir() / "bencode")) {
        std::string bytes = oracle::read_file(entry.path());
        CAPTURE(entry.path().filename().string());
        CHECK(encode(decode_all(bytes)) == bytes);
        ++seen;
    }
    CHECK(seen >= 10);
}

}

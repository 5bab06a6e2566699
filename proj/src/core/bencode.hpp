#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tg::bencode {

class Value;

using Integer = std::int64_t;
using ByteString = std::string;
using List = std::vector<Value>;
// std::string compares through char_traits<char>, which orders as unsigned
// char, so iteration order is the canonical raw-byte key order.
using Dict = std::map<std::string, Value>;

class Value {
public:
    Value() : data_(Integer{0}) {}
    Value(Integer i) : data_(i) {}
    Value(int i) : data_(Integer{i}) {}
    Value(ByteString s) : data_(std::move(s)) {}
    Value(const char* s) : data_(ByteString(s)) {}
    Value(List l) : data_(std::move(l)) {}
    Value(Dict d) : data_(std::move(d)) {}

    bool is_integer() const { return std::holds_alternative<Integer>(data_); }
    bool is_string() const { return std::holds_alternative<ByteString>(data_); }
    bool is_list() const { return std::holds_alternative<List>(data_); }
    bool is_dict() const { return std::holds_alternative<Dict>(data_); }

    // Throw Error(malformed) on type mismatch.
    Integer as_integer() const;
    const ByteString& as_string() const;
    const List& as_list() const;
    const Dict& as_dict() const;
    List& as_list();
    Dict& as_dict();

    /// Dict member lookup; nullptr when absent or when this is not a dict.
    const Value* find(std::string_view key) const;

    bool operator==(const Value& other) const { return data_ == other.data_; }

private:
    std::variant<Integer, ByteString, List, Dict> data_;
};

struct Decoded {
    Value value;
    std::size_t consumed = 0;
};

/// Decodes one value from the front of `input`. Trailing bytes are left for
/// the caller. Dicts must already be canonical: unsorted or repeated keys are
/// rejected with Errc::duplicate_key.
Decoded decode(std::string_view input);

/// Like decode(), but trailing bytes are an error.
Value decode_all(std::string_view input);

std::string encode(const Value& value);

/// Byte range of a top-level dict member's value, located while decoding the
/// enclosing dict. Used to hash the info dict exactly as it appears on disk.
struct Span {
    std::size_t offset = 0;
    std::size_t length = 0;
};
std::optional<Span> find_member_span(std::string_view dict_bytes, std::string_view key);

}  // namespace tg::bencode

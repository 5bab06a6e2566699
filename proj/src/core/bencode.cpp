#include "bencode.hpp"

#include "error.hpp"

#include <limits>

namespace tg::bencode {

Integer Value::as_integer() const {
    if (auto p = std::get_if<Integer>(&data_)) return *p;
    fail(Errc::malformed, "bencode: expected integer");
}

const ByteString& Value::as_string() const {
    if (auto p = std::get_if<ByteString>(&data_)) return *p;
    fail(Errc::malformed, "bencode: expected byte string");
}

const List& Value::as_list() const {
    if (auto p = std::get_if<List>(&data_)) return *p;
    fail(Errc::malformed, "bencode: expected list");
}

const Dict& Value::as_dict() const {
    if (auto p = std::get_if<Dict>(&data_)) return *p;
    fail(Errc::malformed, "bencode: expected dict");
}

List& Value::as_list() {
    if (auto p = std::get_if<List>(&data_)) return *p;
    fail(Errc::malformed, "bencode: expected list");
}

Dict& Value::as_dict() {
    if (auto p = std::get_if<Dict>(&data_)) return *p;
    fail(Errc::malformed, "bencode: expected dict");
}

const Value* Value::find(std::string_view key) const {
    auto p = std::get_if<Dict>(&data_);
    if (!p) return nullptr;
    auto it = p->find(std::string(key));
    return it == p->end() ? nullptr : &it->second;
}

namespace {

constexpr int max_depth = 256;

class Decoder {
public:
    explicit Decoder(std::string_view in) : in_(in) {}

    Value value(int depth) {
        if (depth > max_depth) fail(Errc::malformed, "bencode: nesting too deep");
        char c = peek();
        if (c == 'i') return integer();
        if (c == 'l') return list(depth);
        if (c == 'd') return dict(depth);
        if (c >= '0' && c <= '9') return string();
        fail(Errc::malformed, "bencode: unexpected byte at offset " + std::to_string(pos_));
    }

    std::string string() {
        std::size_t len = length_prefix();
        if (in_.size() - pos_ < len) fail(Errc::truncated, "bencode: string runs past end of input");
        std::string s(in_.substr(pos_, len));
        pos_ += len;
        return s;
    }

    std::size_t pos() const { return pos_; }

private:
    char peek() const {
        if (pos_ >= in_.size()) fail(Errc::truncated, "bencode: unexpected end of input");
        return in_[pos_];
    }

    static bool is_digit(char c) { return c >= '0' && c <= '9'; }

    std::size_t length_prefix() {
        std::size_t start = pos_;
        std::uint64_t len = 0;
        while (is_digit(peek())) {
            if (len > (std::numeric_limits<std::uint64_t>::max() - 9) / 10)
                fail(Errc::malformed, "bencode: string length overflow");
            len = len * 10 + static_cast<std::uint64_t>(in_[pos_] - '0');
            ++pos_;
        }
        if (pos_ - start > 1 && in_[start] == '0')
            fail(Errc::malformed, "bencode: leading zero in string length");
        if (peek() != ':') fail(Errc::malformed, "bencode: expected ':' after string length");
        ++pos_;
        return static_cast<std::size_t>(len);
    }

    Value integer() {
        ++pos_;  // 'i'
        bool negative = false;
        if (peek() == '-') {
            negative = true;
            ++pos_;
        }
        std::size_t digits_start = pos_;
        // Accumulate as a negative number so INT64_MIN fits.
        Integer acc = 0;
        constexpr Integer min = std::numeric_limits<Integer>::min();
        while (is_digit(peek())) {
            Integer d = in_[pos_] - '0';
            if (acc < (min + d) / 10) fail(Errc::malformed, "bencode: integer out of 64-bit range");
            acc = acc * 10 - d;
            ++pos_;
        }
        std::size_t ndigits = pos_ - digits_start;
        if (ndigits == 0) fail(Errc::malformed, "bencode: integer without digits");
        if (peek() != 'e') fail(Errc::malformed, "bencode: non-digit in integer");
        if (ndigits > 1 && in_[digits_start] == '0') fail(Errc::malformed, "bencode: leading zero in integer");
        if (negative && acc == 0) fail(Errc::malformed, "bencode: negative zero");
        ++pos_;
        if (negative) return acc;
        if (acc == min) fail(Errc::malformed, "bencode: integer out of 64-bit range");
        return -acc;
    }

    Value list(int depth) {
        ++pos_;  // 'l'
        List out;
        while (peek() != 'e') out.push_back(value(depth + 1));
        ++pos_;
        return out;
    }

    Value dict(int depth) {
        ++pos_;  // 'd'
        Dict out;
        const std::string* prev = nullptr;
        while (peek() != 'e') {
            if (!is_digit(peek())) fail(Errc::malformed, "bencode: dict key must be a byte string");
            std::string key = string();
            if (prev && !(*prev < key)) {
                fail(Errc::duplicate_key,
                     *prev == key ? "bencode: duplicate dict key" : "bencode: dict keys not sorted");
            }
            Value v = value(depth + 1);
            auto it = out.emplace_hint(out.end(), std::move(key), std::move(v));
            prev = &it->first;
        }
        ++pos_;
        return out;
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

void encode_into(const Value& v, std::string& out) {
    if (v.is_integer()) {
        out += 'i';
        out += std::to_string(v.as_integer());
        out += 'e';
    } else if (v.is_string()) {
        const auto& s = v.as_string();
        out += std::to_string(s.size());
        out += ':';
        out += s;
    } else if (v.is_list()) {
        out += 'l';
        for (const auto& item : v.as_list()) encode_into(item, out);
        out += 'e';
    } else {
        out += 'd';
        for (const auto& [key, item] : v.as_dict()) {
            out += std::to_string(key.size());
            out += ':';
            out += key;
            encode_into(item, out);
        }
        out += 'e';
    }
}

}  // namespace

Decoded decode(std::string_view input) {
    if (input.empty()) fail(Errc::truncated, "bencode: empty input");
    Decoder d(input);
    Value v = d.value(0);
    return {std::move(v), d.pos()};
}

Value decode_all(std::string_view input) {
    auto [value, consumed] = decode(input);
    if (consumed != input.size()) fail(Errc::malformed, "bencode: trailing bytes after value");
    return std::move(value);
}

std::string encode(const Value& value) {
    std::string out;
    encode_into(value, out);
    return out;
}

std::optional<Span> find_member_span(std::string_view dict_bytes, std::string_view key) {
    if (dict_bytes.empty() || dict_bytes.front() != 'd') fail(Errc::malformed, "bencode: expected dict");
    std::size_t pos = 1;
    while (true) {
        if (pos >= dict_bytes.size()) fail(Errc::truncated, "bencode: unexpected end of input");
        if (dict_bytes[pos] == 'e') return std::nullopt;
        auto k = decode(dict_bytes.substr(pos));
        if (!k.value.is_string()) fail(Errc::malformed, "bencode: dict key must be a byte string");
        pos += k.consumed;
        if (pos >= dict_bytes.size()) fail(Errc::truncated, "bencode: unexpected end of input");
        auto v = decode(dict_bytes.substr(pos));
        if (k.value.as_string() == key) return Span{pos, v.consumed};
        pos += v.consumed;
    }
}

}  // namespace tg::bencode

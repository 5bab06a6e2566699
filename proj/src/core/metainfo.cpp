#include "metainfo.hpp"

#include "bencode.hpp"
#include "error.hpp"

#include <openssl/evp.h>

#include <algorithm>

namespace tg {

InfoHash compute_infohash(std::string_view raw_info_bytes) {
    std::array<std::uint8_t, InfoHash::size> digest{};
    unsigned int len = 0;
    if (EVP_Digest(raw_info_bytes.data(), raw_info_bytes.size(), digest.data(), &len, EVP_sha1(), nullptr) != 1 ||
        len != InfoHash::size) {
        fail(Errc::invalid_argument, "sha1 digest failed");
    }
    return InfoHash(digest);
}

namespace {

std::uint64_t positive(const bencode::Value& v, const char* field) {
    auto i = v.as_integer();
    if (i < 0) fail(Errc::malformed, std::string("torrent: negative ") + field);
    return static_cast<std::uint64_t>(i);
}

const bencode::Value& require(const bencode::Value& dict, const char* key) {
    const auto* v = dict.find(key);
    if (!v) fail(Errc::missing_field, std::string("torrent: missing '") + key + "'");
    return *v;
}

void add_url(std::vector<std::string>& urls, const std::string& url) {
    if (!url.empty() && std::find(urls.begin(), urls.end(), url) == urls.end()) urls.push_back(url);
}

}  // namespace

Metainfo parse_torrent(std::string_view input) {
    bencode::Value root;
    try {
        root = bencode::decode_all(input);
    } catch (const Error& e) {
        if (e.code() == Errc::duplicate_key) throw;
        fail(Errc::malformed, e.what());
    }
    if (!root.is_dict()) fail(Errc::malformed, "torrent: top level is not a dict");

    Metainfo m;
    if (const auto* a = root.find("announce")) add_url(m.announce_urls, a->as_string());
    if (const auto* list = root.find("announce-list")) {
        for (const auto& tier : list->as_list())
            for (const auto& url : tier.as_list()) add_url(m.announce_urls, url.as_string());
    }
    if (!root.find("announce") && !root.find("announce-list"))
        fail(Errc::missing_field, "torrent: missing 'announce'");

    const auto& info = require(root, "info");
    if (!info.is_dict()) fail(Errc::malformed, "torrent: 'info' is not a dict");
    auto span = bencode::find_member_span(input, "info");
    m.raw_info_bytes = std::string(input.substr(span->offset, span->length));
    m.infohash = compute_infohash(m.raw_info_bytes);

    m.name = require(info, "name").as_string();
    m.piece_length = positive(require(info, "piece length"), "piece length");
    if (m.piece_length == 0) fail(Errc::malformed, "torrent: zero piece length");

    const auto& pieces = require(info, "pieces").as_string();
    if (pieces.empty() || pieces.size() % 20 != 0)
        fail(Errc::bad_pieces, "torrent: 'pieces' length " + std::to_string(pieces.size()) +
                                   " is not a positive multiple of 20");
    m.piece_count = pieces.size() / 20;

    if (const auto* length = info.find("length")) {
        m.total_length = positive(*length, "length");
    } else if (const auto* files = info.find("files")) {
        for (const auto& f : files->as_list()) m.total_length += positive(require(f, "length"), "length");
    } else {
        fail(Errc::missing_field, "torrent: info has neither 'length' nor 'files'");
    }

    std::uint64_t expected = (m.total_length + m.piece_length - 1) / m.piece_length;
    if (expected != m.piece_count)
        fail(Errc::bad_pieces, "torrent: " + std::to_string(m.piece_count) + " piece hashes for " +
                                   std::to_string(expected) + " pieces");
    return m;
}

std::string percent_encode(std::string_view bytes) {
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : bytes) {
        if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.' ||
            c == '_' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(digits[c >> 4]);
            out.push_back(digits[c & 0x0f]);
        }
    }
    return out;
}

std::string percent_decode(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '%' && i + 2 < text.size()) {
            if (auto b = from_hex(text.substr(i + 1, 2))) {
                out += *b;
                i += 2;
                continue;
            }
        }
        out.push_back(text[i] == '+' ? ' ' : text[i]);
    }
    return out;
}

namespace {
constexpr char base32_alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
}

std::optional<std::string> base32_decode(std::string_view text) {
    std::string out;
    std::uint32_t buffer = 0;
    int bits = 0;
    for (char c : text) {
        char u = (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
        const char* p = std::find(base32_alphabet, base32_alphabet + 32, u);
        if (p == base32_alphabet + 32) return std::nullopt;
        buffer = (buffer << 5) | static_cast<std::uint32_t>(p - base32_alphabet);
        bits += 5;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<char>((buffer >> bits) & 0xff));
        }
    }
    return out;
}

std::string base32_encode(std::string_view bytes) {
    std::string out;
    std::uint32_t buffer = 0;
    int bits = 0;
    for (unsigned char c : bytes) {
        buffer = (buffer << 8) | c;
        bits += 8;
        while (bits >= 5) {
            bits -= 5;
            out.push_back(base32_alphabet[(buffer >> bits) & 0x1f]);
        }
    }
    if (bits > 0) out.push_back(base32_alphabet[(buffer << (5 - bits)) & 0x1f]);
    return out;
}

MagnetLink parse_magnet(std::string_view uri) {
    constexpr std::string_view scheme = "magnet:?";
    if (uri.substr(0, scheme.size()) != scheme) fail(Errc::malformed, "magnet: missing 'magnet:?' prefix");
    std::string_view query = uri.substr(scheme.size());

    MagnetLink link;
    bool have_hash = false;
    while (!query.empty()) {
        auto amp = query.find('&');
        std::string_view param = query.substr(0, amp);
        query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
        auto eq = param.find('=');
        if (eq == std::string_view::npos) continue;
        std::string_view key = param.substr(0, eq);
        std::string value = percent_decode(param.substr(eq + 1));

        if (key == "xt" && !have_hash) {
            constexpr std::string_view urn = "urn:btih:";
            if (value.compare(0, urn.size(), urn) != 0) continue;
            std::string token = value.substr(urn.size());
            std::optional<InfoHash> h;
            if (token.size() == 40) {
                h = InfoHash::from_hex(token);
            } else if (token.size() == 32) {
                if (auto raw = base32_decode(token)) h = InfoHash::from_bytes(*raw);
            } else {
                fail(Errc::bad_length, "magnet: btih token has " + std::to_string(token.size()) +
                                           " characters, expected 40 hex or 32 base32");
            }
            if (!h) fail(Errc::no_infohash, "magnet: btih token is not decodable");
            link.infohash = *h;
            have_hash = true;
        } else if (key == "dn") {
            link.display_name = value;
        } else if (key == "tr") {
            link.trackers.push_back(value);
        }
    }
    if (!have_hash) fail(Errc::no_infohash, "magnet: no urn:btih xt parameter");
    return link;
}

std::string render_magnet(const MagnetLink& link) {
    std::string out = "magnet:?xt=urn:btih:" + link.infohash.hex();
    if (link.display_name) out += "&dn=" + percent_encode(*link.display_name);
    for (const auto& tr : link.trackers) out += "&tr=" + percent_encode(tr);
    return out;
}

}  // namespace tg

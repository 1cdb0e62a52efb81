#include "malfam/xml.hpp"

#include "malfam/error.hpp"

#include <cstdint>

namespace malfam::xml {

const Element* Element::child(std::string_view tag) const {
    for (const auto& c : children) {
        if (c.name == tag) return &c;
    }
    return nullptr;
}

const Attribute* Element::attribute(std::string_view key) const {
    for (const auto& a : attributes) {
        if (a.name == key) return &a;
    }
    return nullptr;
}

namespace {

bool is_name_start(unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || c == ':' || c >= 0x80;
}

bool is_name_char(unsigned char c) {
    return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

class Reader {
public:
    explicit Reader(std::string_view text) : s_(text) {}

    Element document() {
        if (s_.substr(0, 3) == "\xEF\xBB\xBF") advance(3);
        prolog();
        if (at_end() || peek() != '<') fail("expected root element");
        Element root = element();
        misc();
        if (!at_end()) fail("content after root element");
        return root;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, col_); }

    bool at_end() const { return pos_ >= s_.size(); }
    char peek() const { return s_[pos_]; }
    bool starts_with(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

    void advance(std::size_t n = 1) {
        for (std::size_t i = 0; i < n && pos_ < s_.size(); ++i, ++pos_) {
            if (s_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
        }
    }

    void expect(std::string_view p) {
        if (!starts_with(p)) fail("expected '" + std::string(p) + "'");
        advance(p.size());
    }

    void skip_space() {
        while (!at_end() && is_space(peek())) advance();
    }

    void skip_until(std::string_view terminator, const char* what) {
        auto found = s_.find(terminator, pos_);
        if (found == std::string_view::npos) fail(std::string("unterminated ") + what);
        advance(found + terminator.size() - pos_);
    }

    // Whitespace, comments and processing instructions between markup.
    void misc() {
        for (;;) {
            skip_space();
            if (starts_with("<!--")) {
                skip_until("-->", "comment");
            } else if (starts_with("<?")) {
                skip_until("?>", "processing instruction");
            } else {
                return;
            }
        }
    }

    void prolog() {
        misc();
        if (starts_with("<!DOCTYPE")) {
            auto close = s_.find('>', pos_);
            auto bracket = s_.find('[', pos_);
            if (bracket != std::string_view::npos && bracket < close) fail("DOCTYPE internal subset not supported");
            skip_until(">", "DOCTYPE");
            misc();
        }
    }

    std::string name() {
        if (at_end() || !is_name_start(static_cast<unsigned char>(peek()))) fail("expected a name");
        std::size_t start = pos_;
        while (!at_end() && is_name_char(static_cast<unsigned char>(peek()))) advance();
        return std::string(s_.substr(start, pos_ - start));
    }

    void reference(std::string& out) {
        std::size_t line = line_, col = col_;
        advance();  // '&'
        auto semi = s_.find(';', pos_);
        if (semi == std::string_view::npos || semi - pos_ > 10) throw ParseError("unterminated entity reference", line, col);
        std::string_view ent = s_.substr(pos_, semi - pos_);
        if (ent == "amp") {
            out.push_back('&');
        } else if (ent == "lt") {
            out.push_back('<');
        } else if (ent == "gt") {
            out.push_back('>');
        } else if (ent == "quot") {
            out.push_back('"');
        } else if (ent == "apos") {
            out.push_back('\'');
        } else if (ent.size() > 1 && ent[0] == '#') {
            std::uint32_t cp = 0;
            bool hex = ent[1] == 'x';
            std::string_view digits = ent.substr(hex ? 2 : 1);
            if (digits.empty()) throw ParseError("empty character reference", line, col);
            for (char c : digits) {
                unsigned v;
                if (c >= '0' && c <= '9') {
                    v = static_cast<unsigned>(c - '0');
                } else if (hex && c >= 'a' && c <= 'f') {
                    v = static_cast<unsigned>(c - 'a' + 10);
                } else if (hex && c >= 'A' && c <= 'F') {
                    v = static_cast<unsigned>(c - 'A' + 10);
                } else {
                    throw ParseError("bad character reference", line, col);
                }
                cp = cp * (hex ? 16 : 10) + v;
                if (cp > 0x10FFFF) throw ParseError("character reference out of range", line, col);
            }
            if (cp == 0) throw ParseError("character reference to NUL", line, col);
            append_utf8(out, cp);
        } else {
            throw ParseError("unknown entity '" + std::string(ent) + "'", line, col);
        }
        advance(semi + 1 - pos_);
    }

    std::string attribute_value() {
        if (at_end() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
        char quote = peek();
        advance();
        std::string value;
        for (;;) {
            if (at_end()) fail("unterminated attribute value");
            char c = peek();
            if (c == quote) {
                advance();
                return value;
            }
            if (c == '<') fail("'<' in attribute value");
            if (c == '&') {
                reference(value);
                continue;
            }
            // attribute-value normalization for literal whitespace
            value.push_back(is_space(c) ? ' ' : c);
            advance();
        }
    }

    Element element() {
        Element e;
        e.line = line_;
        e.column = col_;
        expect("<");
        e.name = name();
        for (;;) {
            bool had_space = !at_end() && is_space(peek());
            skip_space();
            if (at_end()) fail("unterminated start tag <" + e.name + ">");
            if (starts_with("/>")) {
                advance(2);
                return e;
            }
            if (peek() == '>') {
                advance();
                break;
            }
            if (!had_space) fail("expected whitespace before attribute");
            std::size_t line = line_, col = col_;
            std::string key = name();
            skip_space();
            expect("=");
            skip_space();
            std::string value = attribute_value();
            if (e.attribute(key) != nullptr) throw ParseError("duplicate attribute '" + key + "'", line, col);
            e.attributes.push_back({std::move(key), std::move(value)});
        }
        content(e);
        return e;
    }

    void content(Element& e) {
        for (;;) {
            if (at_end()) fail("missing end tag </" + e.name + ">");
            char c = peek();
            if (c == '<') {
                if (starts_with("</")) {
                    advance(2);
                    std::size_t line = line_, col = col_;
                    std::string closing = name();
                    if (closing != e.name) {
                        throw ParseError("mismatched end tag </" + closing + "> for <" + e.name + ">", line, col);
                    }
                    skip_space();
                    expect(">");
                    return;
                }
                if (starts_with("<!--")) {
                    skip_until("-->", "comment");
                } else if (starts_with("<![CDATA[")) {
                    advance(9);
                    auto end = s_.find("]]>", pos_);
                    if (end == std::string_view::npos) fail("unterminated CDATA section");
                    e.text.append(s_.substr(pos_, end - pos_));
                    advance(end + 3 - pos_);
                } else if (starts_with("<?")) {
                    skip_until("?>", "processing instruction");
                } else {
                    e.children.push_back(element());
                }
            } else if (c == '&') {
                reference(e.text);
            } else {
                e.text.push_back(c);
                advance();
            }
        }
    }
};

}  // namespace

Element parse(std::string_view text) { return Reader(text).document(); }

std::string escape(std::string_view raw, bool attribute) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"':
                if (attribute) {
                    out += "&quot;";
                } else {
                    out.push_back(c);
                }
                break;
            case '\t':
            case '\n':
            case '\r':
                if (attribute) {
                    out += "&#" + std::to_string(static_cast<int>(c)) + ";";
                } else {
                    out.push_back(c);
                }
                break;
            default: out.push_back(c);
        }
    }
    return out;
}

bool is_name(std::string_view s) {
    if (s.empty() || !is_name_start(static_cast<unsigned char>(s[0]))) return false;
    for (char c : s) {
        if (!is_name_char(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace malfam::xml

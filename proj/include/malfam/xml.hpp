#pragma once

// Minimal XML reader for profile documents: elements, attributes, character
// data, the five predefined entities and numeric character references.
// Comments, processing instructions, CDATA and a DOCTYPE without an internal
// subset are accepted. Namespaces and DTD validation are not supported.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace malfam::xml {

struct Attribute {
    std::string name;
    std::string value;
};

struct Element {
    std::string name;
    std::vector<Attribute> attributes;  // document order
    std::vector<Element> children;
    std::string text;                   // concatenated character data
    std::size_t line = 0;
    std::size_t column = 0;

    const Element* child(std::string_view tag) const;
    const Attribute* attribute(std::string_view key) const;
};

/// Parses a complete document and returns its root element.
/// Throws ParseError with the 1-based line/column of the first fault.
Element parse(std::string_view text);

/// Escapes character data. Attribute mode also escapes quotes and
/// whitespace control characters so values survive normalization.
std::string escape(std::string_view raw, bool attribute = false);

bool is_name(std::string_view s);

}  // namespace malfam::xml

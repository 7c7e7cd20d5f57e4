#pragma once

#include <string>

#include "vgb/vgdl/types.hpp"

namespace vgb::vgdl {

// Parses the full text of a game description file. Throws ParseError with a
// line number on any malformed or unsupported construct.
GameSpec parse_game(const std::string& source);

// Parses a level layout against an already validated spec. Rows shorter than
// the widest one are padded with ' ' (the empty-cell character) and a warning
// is recorded on the returned grid. Throws UnknownTile / EmptyLevel.
LevelGrid parse_level(const GameSpec& spec, const std::string& source);

// Renders a spec back to canonical text. Reparsing the output yields a spec
// that compares equal to the input.
std::string render_game(const GameSpec& spec);

} // namespace vgb::vgdl

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vgb/common/error.hpp"

namespace vgb::vgdl {

// Supported sprite classes. A sprite line may omit the class, in which case
// it is resolved from the nearest ancestor; if no ancestor declares one the
// sprite is an abstract group usable only in rules and terminations.
enum class SpriteClass {
    None,
    Immovable,
    Passive,
    Missile,
    Bomber,
    RandomNpc,
    Chaser,
    Fleeing,
    Flicker,
    Resource,
    Portal,
    SpawnPoint,
    Door,
    MovingAvatar,
    OrientedAvatar,
    ShootAvatar,
    FlakAvatar,
};

const char* sprite_class_name(SpriteClass cls);
std::optional<SpriteClass> sprite_class_from_name(const std::string& name);
bool is_avatar_class(SpriteClass cls);

// Ordered key=value list. Raw values are kept verbatim so a spec can be
// rendered back to text without reformatting.
using ParamList = std::vector<std::pair<std::string, std::string>>;

struct SpriteDef {
    std::string name;
    std::string declared_class;   // as written; empty when omitted
    std::string parent;           // empty for top-level sprites
    ParamList params;             // parent params overridden by own params

    // Resolved during validation (deterministic from the fields above).
    SpriteClass cls = SpriteClass::None;
    int parent_index = -1;
    int depth = 0;

    bool concrete() const { return cls != SpriteClass::None; }
    bool is_avatar() const { return is_avatar_class(cls); }

    std::optional<std::string> param(const std::string& key) const;
    double num_param(const std::string& key, double fallback) const;
    int int_param(const std::string& key, int fallback) const;
    bool bool_param(const std::string& key, bool fallback) const;

    bool operator==(const SpriteDef& o) const {
        return name == o.name && declared_class == o.declared_class &&
               parent == o.parent && params == o.params;
    }
};

enum class Effect {
    StepBack,
    UndoAll,
    BounceForward,
    KillSprite,
    KillBoth,
    TransformTo,
    CollectResource,
    KillIfOtherHasMore,
    KillIfFromAbove,
    TurnAround,
};

const char* effect_name(Effect e);
std::optional<Effect> effect_from_name(const std::string& name);

// One (actor, collider) -> effect rule. Multi-collider source lines are
// expanded into one rule per collider, preserving declaration order.
struct InteractionRule {
    std::string actor;
    std::string collider;   // sprite name or "EOS"
    Effect effect = Effect::KillSprite;
    ParamList params;
    int line = 0;

    bool is_eos() const { return collider == "EOS"; }
    double score_change() const;
    std::optional<std::string> param(const std::string& key) const;
    int int_param(const std::string& key, int fallback) const;
    bool bool_param(const std::string& key, bool fallback) const;

    bool operator==(const InteractionRule& o) const {
        return actor == o.actor && collider == o.collider && effect == o.effect &&
               params == o.params;
    }
};

enum class TerminationKind { SpriteCounter, MultiSpriteCounter, Timeout };

struct TerminationRule {
    TerminationKind kind = TerminationKind::Timeout;
    std::vector<std::string> stypes;   // empty for Timeout
    int limit = 0;
    bool win = false;
    int line = 0;

    bool operator==(const TerminationRule& o) const {
        return kind == o.kind && stypes == o.stypes && limit == o.limit && win == o.win;
    }
};

struct MappingEntry {
    char ch = ' ';
    std::vector<std::string> sprites;
    int line = 0;

    bool operator==(const MappingEntry& o) const {
        return ch == o.ch && sprites == o.sprites;
    }
};

struct GameSpec {
    std::string name;                       // taken from the file name by loaders
    ParamList game_params;                  // params on the BasicGame line
    std::vector<SpriteDef> sprites;         // declaration order, nesting flattened
    std::vector<MappingEntry> level_mapping;
    std::vector<InteractionRule> interactions;
    std::vector<TerminationRule> terminations;
    std::vector<std::string> warnings;

    int sprite_index(const std::string& name) const;   // -1 when absent
    const SpriteDef* find_sprite(const std::string& name) const;

    // True when def `idx` is `name` or has it as an ancestor.
    bool is_a(int idx, const std::string& name) const;

    // Index of the root of the avatar lineage.
    int avatar_head = -1;

    bool operator==(const GameSpec& o) const {
        return game_params == o.game_params && sprites == o.sprites &&
               level_mapping == o.level_mapping && interactions == o.interactions &&
               terminations == o.terminations;
    }
};

struct LevelGrid {
    int width = 0;
    int height = 0;
    std::vector<std::string> cells;        // height rows of width chars
    std::vector<std::string> source;       // raw text lines
    std::vector<std::string> warnings;

    char at(int row, int col) const { return cells[row][col]; }
};

// --- Errors ---

struct ParseError : Error {
    int line;
    ParseError(int line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line(line) {}
};

struct UnknownTile : ParseError {
    char ch;
    int row, col;
    UnknownTile(char ch, int row, int col)
        : ParseError(row + 1, std::string("unknown tile '") + ch + "' at (" +
                                  std::to_string(row) + ", " + std::to_string(col) + ")"),
          ch(ch), row(row), col(col) {}
};

struct EmptyLevel : ParseError {
    EmptyLevel() : ParseError(1, "level file has no content") {}
};

} // namespace vgb::vgdl

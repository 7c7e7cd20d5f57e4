#include "vgb/vgdl/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "vgb/common/strings.hpp"

namespace vgb::vgdl {

namespace {

struct ClassEntry {
    const char* name;
    SpriteClass cls;
};

constexpr ClassEntry kClasses[] = {
    {"Immovable", SpriteClass::Immovable},
    {"Passive", SpriteClass::Passive},
    {"Missile", SpriteClass::Missile},
    {"Bomber", SpriteClass::Bomber},
    {"RandomNPC", SpriteClass::RandomNpc},
    {"Chaser", SpriteClass::Chaser},
    {"Fleeing", SpriteClass::Fleeing},
    {"Flicker", SpriteClass::Flicker},
    {"Resource", SpriteClass::Resource},
    {"Portal", SpriteClass::Portal},
    {"SpawnPoint", SpriteClass::SpawnPoint},
    {"Door", SpriteClass::Door},
    {"MovingAvatar", SpriteClass::MovingAvatar},
    {"OrientedAvatar", SpriteClass::OrientedAvatar},
    {"ShootAvatar", SpriteClass::ShootAvatar},
    {"FlakAvatar", SpriteClass::FlakAvatar},
};

constexpr const char* kEffectNames[] = {
    "stepBack",       "undoAll",         "bounceForward",      "killSprite",
    "killBoth",       "transformTo",     "collectResource",    "killIfOtherHasMore",
    "killIfFromAbove", "turnAround",
};

// Keys the parser accepts; anything else fails loudly.
const std::set<std::string> kSpriteKeys = {
    "orientation", "speed", "cooldown", "prob", "stype", "limit",
    "total", "value", "color", "singleton", "resource",
};
const std::set<std::string> kInteractionKeys = {
    "scoreChange", "stype", "killSecond", "resource", "limit", "value",
};
const std::set<std::string> kGameKeys = {"square_size", "key_handler", "no_players"};

// Sprite params that must be finite and non-negative when present.
const std::set<std::string> kNumericSpriteKeys = {
    "speed", "cooldown", "prob", "limit", "total", "value",
};

struct Line {
    int no = 0;       // 1-based
    int indent = 0;
    std::string text; // trimmed payload
};

int measure_indent(const std::string& raw, std::string& payload) {
    int indent = 0;
    size_t i = 0;
    for (; i < raw.size(); ++i) {
        if (raw[i] == ' ') indent += 1;
        else if (raw[i] == '\t') indent += 4;   // tabs normalized to 4 spaces
        else break;
    }
    payload = raw.substr(i);
    return indent;
}

std::vector<Line> lex(const std::string& source) {
    std::vector<Line> lines;
    int no = 0;
    for (const std::string& raw : split_lines(source)) {
        ++no;
        std::string payload;
        int indent = measure_indent(raw, payload);
        size_t hash = payload.find('#');
        if (hash != std::string::npos) payload = payload.substr(0, hash);
        payload = std::string(trim(payload));
        if (payload.empty()) continue;
        lines.push_back({no, indent, payload});
    }
    return lines;
}

bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
    });
}

std::pair<std::string, std::string> parse_kv(const std::string& tok, int line) {
    size_t eq = tok.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 > tok.size())
        throw ParseError(line, "malformed key=value pair '" + tok + "'");
    std::string key = tok.substr(0, eq);
    std::string value = tok.substr(eq + 1);
    if (!is_identifier(key)) throw ParseError(line, "malformed key=value pair '" + tok + "'");
    if (value.empty()) throw ParseError(line, "empty value in '" + tok + "'");
    return {key, value};
}

ParamList parse_params(const std::vector<std::string>& toks, size_t from,
                       const std::set<std::string>& allowed, int line) {
    ParamList out;
    for (size_t i = from; i < toks.size(); ++i) {
        auto [key, value] = parse_kv(toks[i], line);
        if (!allowed.count(key))
            throw ParseError(line, "unsupported parameter '" + key + "'");
        bool replaced = false;
        for (auto& kv : out)
            if (kv.first == key) { kv.second = value; replaced = true; }
        if (!replaced) out.emplace_back(key, value);
    }
    return out;
}

double parse_number(const std::string& value, const std::string& key, int line) {
    double d = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), d);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        throw ParseError(line, "parameter '" + key + "' expects a number, got '" + value + "'");
    if (!std::isfinite(d))
        throw ParseError(line, "parameter '" + key + "' must be finite");
    return d;
}

// --- Block assembly ---

struct RawSprite {
    SpriteDef def;
    int line = 0;
    int indent = 0;
};

class GameParser {
public:
    explicit GameParser(const std::string& source) : lines_(lex(source)) {
        eof_line_ = lines_.empty() ? 1 : lines_.back().no + 1;
    }

    GameSpec parse() {
        if (lines_.empty()) throw ParseError(1, "empty game file");
        parse_header();
        parse_blocks();
        require_blocks();
        resolve();
        return std::move(spec_);
    }

private:
    std::vector<Line> lines_;
    size_t pos_ = 1;
    int eof_line_ = 1;
    GameSpec spec_;
    std::vector<int> sprite_lines_;
    bool saw_sprites_ = false, saw_mapping_ = false, saw_interactions_ = false,
         saw_terminations_ = false;

    void parse_header() {
        const Line& head = lines_.front();
        auto toks = split_ws(head.text);
        if (toks.empty() || toks[0] != "BasicGame")
            throw ParseError(head.no, "expected 'BasicGame' header");
        spec_.game_params = parse_params(toks, 1, kGameKeys, head.no);
    }

    void parse_blocks() {
        int header_indent = lines_.front().indent;
        while (pos_ < lines_.size()) {
            const Line& block = lines_[pos_];
            if (block.indent <= header_indent)
                throw ParseError(block.no, "unexpected content at header indentation");
            ++pos_;
            std::vector<Line> body;
            while (pos_ < lines_.size() && lines_[pos_].indent > block.indent)
                body.push_back(lines_[pos_++]);
            if (block.text == "SpriteSet") { parse_sprites(body, block.indent); saw_sprites_ = true; }
            else if (block.text == "LevelMapping") { parse_mapping(body); saw_mapping_ = true; }
            else if (block.text == "InteractionSet") { parse_interactions(body); saw_interactions_ = true; }
            else if (block.text == "TerminationSet") { parse_terminations(body); saw_terminations_ = true; }
            else throw ParseError(block.no, "unknown block '" + block.text + "'");
        }
    }

    void require_blocks() const {
        const char* missing = nullptr;
        if (!saw_sprites_) missing = "SpriteSet";
        else if (!saw_mapping_) missing = "LevelMapping";
        else if (!saw_interactions_) missing = "InteractionSet";
        else if (!saw_terminations_) missing = "TerminationSet";
        if (missing)
            throw ParseError(eof_line_, std::string("missing block: ") + missing);
    }

    void parse_sprites(const std::vector<Line>& body, int /*block_indent*/) {
        // Open nesting levels; the first sprite at a depth fixes the indent
        // every sibling at that depth must use.
        std::vector<int> level_indents;
        std::vector<int> level_sprites;
        for (const Line& ln : body) {
            if (level_indents.empty() || ln.indent > level_indents.back()) {
                level_indents.push_back(ln.indent);
                level_sprites.push_back(-1);
            } else {
                while (!level_indents.empty() && level_indents.back() > ln.indent) {
                    level_indents.pop_back();
                    level_sprites.pop_back();
                }
                if (level_indents.empty() || level_indents.back() != ln.indent)
                    throw ParseError(ln.no, "bad indentation");
            }
            int parent = level_indents.size() >= 2
                             ? level_sprites[level_indents.size() - 2]
                             : -1;

            size_t gt = ln.text.find('>');
            if (gt == std::string::npos)
                throw ParseError(ln.no, "sprite line must contain '>'");
            std::string name(trim(ln.text.substr(0, gt)));
            if (!is_identifier(name))
                throw ParseError(ln.no, "bad sprite name '" + name + "'");
            if (name == "EOS" || name == "avatarless")
                throw ParseError(ln.no, "reserved sprite name '" + name + "'");
            for (const auto& d : spec_.sprites)
                if (d.name == name)
                    throw ParseError(ln.no, "duplicate sprite name '" + name + "'");

            auto toks = split_ws(ln.text.substr(gt + 1));
            SpriteDef def;
            def.name = name;
            def.parent = parent >= 0 ? spec_.sprites[parent].name : "";
            def.parent_index = parent;
            size_t param_start = 0;
            if (!toks.empty() && toks[0].find('=') == std::string::npos) {
                auto cls = sprite_class_from_name(toks[0]);
                if (!cls)
                    throw ParseError(ln.no, "unknown sprite class '" + toks[0] + "'");
                def.declared_class = toks[0];
                param_start = 1;
            }
            ParamList own = parse_params(toks, param_start, kSpriteKeys, ln.no);
            // inherit parent params, own values override
            if (parent >= 0) def.params = spec_.sprites[parent].params;
            for (const auto& [k, v] : own) {
                bool replaced = false;
                for (auto& kv : def.params)
                    if (kv.first == k) { kv.second = v; replaced = true; }
                if (!replaced) def.params.emplace_back(k, v);
            }
            for (const auto& [k, v] : def.params)
                if (kNumericSpriteKeys.count(k)) {
                    double d = parse_number(v, k, ln.no);
                    if (d < 0)
                        throw ParseError(ln.no, "parameter '" + k + "' must be non-negative");
                }

            spec_.sprites.push_back(std::move(def));
            sprite_lines_.push_back(ln.no);
            level_sprites.back() = static_cast<int>(spec_.sprites.size()) - 1;
        }
    }

    void parse_mapping(const std::vector<Line>& body) {
        for (const Line& ln : body) {
            size_t gt = ln.text.find('>');
            if (gt == std::string::npos)
                throw ParseError(ln.no, "mapping line must contain '>'");
            std::string lhs(trim(ln.text.substr(0, gt)));
            if (lhs.size() != 1)
                throw ParseError(ln.no, "mapping key must be a single character, got '" + lhs + "'");
            char ch = lhs[0];
            if (ch == ' ')
                throw ParseError(ln.no, "' ' is reserved for empty cells");
            auto names = split_ws(ln.text.substr(gt + 1));
            if (names.empty())
                throw ParseError(ln.no, "mapping line lists no sprites");
            auto dup = std::find_if(spec_.level_mapping.begin(), spec_.level_mapping.end(),
                                    [&](const MappingEntry& e) { return e.ch == ch; });
            if (dup != spec_.level_mapping.end()) {
                spec_.warnings.push_back("line " + std::to_string(ln.no) +
                                         ": duplicate mapping for '" + std::string(1, ch) +
                                         "', last definition wins");
                dup->sprites = names;
            } else {
                spec_.level_mapping.push_back({ch, names, ln.no});
            }
        }
    }

    void parse_interactions(const std::vector<Line>& body) {
        for (const Line& ln : body) {
            size_t gt = ln.text.find('>');
            if (gt == std::string::npos)
                throw ParseError(ln.no, "interaction line must contain '>'");
            auto lhs = split_ws(ln.text.substr(0, gt));
            if (lhs.size() < 2)
                throw ParseError(ln.no, "interaction needs an actor and at least one collider");
            auto rhs = split_ws(ln.text.substr(gt + 1));
            if (rhs.empty())
                throw ParseError(ln.no, "interaction line names no effect");
            auto effect = effect_from_name(rhs[0]);
            if (!effect)
                throw ParseError(ln.no, "unknown effect '" + rhs[0] + "'");
            ParamList params = parse_params(rhs, 1, kInteractionKeys, ln.no);
            if (*effect == Effect::TransformTo && params_missing(params, "stype"))
                throw ParseError(ln.no, "transformTo requires stype=");
            if (*effect == Effect::KillIfOtherHasMore &&
                (params_missing(params, "resource") || params_missing(params, "limit")))
                throw ParseError(ln.no, "killIfOtherHasMore requires resource= and limit=");
            if (lhs[0] == "EOS")
                throw ParseError(ln.no, "EOS cannot be the acting sprite");
            for (size_t i = 1; i < lhs.size(); ++i) {
                InteractionRule rule;
                rule.actor = lhs[0];
                rule.collider = lhs[i];
                rule.effect = *effect;
                rule.params = params;
                rule.line = ln.no;
                spec_.interactions.push_back(std::move(rule));
            }
        }
    }

    static bool params_missing(const ParamList& params, const std::string& key) {
        return std::none_of(params.begin(), params.end(),
                            [&](const auto& kv) { return kv.first == key; });
    }

    void parse_terminations(const std::vector<Line>& body) {
        for (const Line& ln : body) {
            auto toks = split_ws(ln.text);
            TerminationRule rule;
            rule.line = ln.no;
            if (toks[0] == "SpriteCounter") rule.kind = TerminationKind::SpriteCounter;
            else if (toks[0] == "MultiSpriteCounter") rule.kind = TerminationKind::MultiSpriteCounter;
            else if (toks[0] == "Timeout") rule.kind = TerminationKind::Timeout;
            else throw ParseError(ln.no, "unknown termination '" + toks[0] + "'");

            bool saw_win = false;
            for (size_t i = 1; i < toks.size(); ++i) {
                auto [key, value] = parse_kv(toks[i], ln.no);
                if (key == "stype" || key == "stype1" || key == "stype2" || key == "stype3") {
                    rule.stypes.push_back(value);
                } else if (key == "limit") {
                    double d = parse_number(value, key, ln.no);
                    if (d < 0 || d != std::floor(d))
                        throw ParseError(ln.no, "limit must be a non-negative integer");
                    rule.limit = static_cast<int>(d);
                } else if (key == "win") {
                    if (value == "True") rule.win = true;
                    else if (value == "False") rule.win = false;
                    else throw ParseError(ln.no, "win expects True or False");
                    saw_win = true;
                } else {
                    throw ParseError(ln.no, "unsupported parameter '" + key + "'");
                }
            }
            if (!saw_win) throw ParseError(ln.no, "termination requires win=");
            if (rule.kind == TerminationKind::Timeout) {
                if (!rule.stypes.empty())
                    throw ParseError(ln.no, "Timeout takes no stype");
                if (rule.limit <= 0)
                    throw ParseError(ln.no, "Timeout requires a positive limit");
            } else if (rule.stypes.empty()) {
                throw ParseError(ln.no, "counter termination requires stype=");
            }
            spec_.terminations.push_back(std::move(rule));
        }
    }

    // --- Validation / resolution ---

    void resolve() {
        if (spec_.sprites.empty())
            throw ParseError(eof_line_, "SpriteSet declares no sprites");

        for (size_t i = 0; i < spec_.sprites.size(); ++i) {
            SpriteDef& d = spec_.sprites[i];
            d.depth = d.parent_index < 0 ? 0 : spec_.sprites[d.parent_index].depth + 1;
            if (!d.declared_class.empty()) {
                d.cls = *sprite_class_from_name(d.declared_class);
            } else if (d.parent_index >= 0) {
                d.cls = spec_.sprites[d.parent_index].cls;
            }
            check_class_params(d, sprite_lines_[i]);
        }

        // exactly one avatar lineage: a unique avatar-class sprite none of
        // whose ancestors is avatar-classed
        std::vector<int> heads;
        for (size_t i = 0; i < spec_.sprites.size(); ++i) {
            const SpriteDef& d = spec_.sprites[i];
            if (!d.is_avatar()) continue;
            bool ancestor_avatar = false;
            for (int p = d.parent_index; p >= 0; p = spec_.sprites[p].parent_index)
                if (spec_.sprites[p].is_avatar()) ancestor_avatar = true;
            if (!ancestor_avatar) heads.push_back(static_cast<int>(i));
        }
        if (heads.empty())
            throw ParseError(eof_line_, "no avatar sprite declared");
        if (heads.size() > 1)
            throw ParseError(sprite_lines_[heads[1]], "more than one avatar lineage");
        spec_.avatar_head = heads[0];

        for (const auto& entry : spec_.level_mapping)
            for (const auto& name : entry.sprites) {
                int idx = spec_.sprite_index(name);
                if (idx < 0)
                    throw ParseError(entry.line, "level mapping references unknown sprite '" +
                                                     name + "'");
                if (!spec_.sprites[idx].concrete())
                    throw ParseError(entry.line, "level mapping references abstract sprite '" +
                                                     name + "'");
            }

        for (const auto& rule : spec_.interactions) {
            if (spec_.sprite_index(rule.actor) < 0)
                throw ParseError(rule.line, "unknown sprite '" + rule.actor + "'");
            if (!rule.is_eos() && spec_.sprite_index(rule.collider) < 0)
                throw ParseError(rule.line, "unknown sprite '" + rule.collider + "'");
            if (auto sc = rule.param("scoreChange"))
                parse_number(*sc, "scoreChange", rule.line);
            if (auto st = rule.param("stype"); st && spec_.sprite_index(*st) < 0)
                throw ParseError(rule.line, "unknown sprite '" + *st + "'");
        }

        for (const auto& t : spec_.terminations)
            for (const auto& s : t.stypes)
                if (spec_.sprite_index(s) < 0)
                    throw ParseError(t.line, "unknown sprite '" + s + "'");
    }

    void check_class_params(const SpriteDef& d, int line) {
        auto require = [&](const char* key) {
            if (!d.param(key))
                throw ParseError(line, d.name + ": class " +
                                           std::string(sprite_class_name(d.cls)) +
                                           " requires " + key + "=");
        };
        switch (d.cls) {
            case SpriteClass::Missile:
            case SpriteClass::Bomber:
                require("orientation");
                if (d.cls == SpriteClass::Bomber) require("stype");
                break;
            case SpriteClass::Chaser:
            case SpriteClass::Fleeing:
            case SpriteClass::SpawnPoint:
            case SpriteClass::ShootAvatar:
            case SpriteClass::FlakAvatar:
                require("stype");
                break;
            default:
                break;
        }
        if (auto o = d.param("orientation")) {
            if (*o != "UP" && *o != "DOWN" && *o != "LEFT" && *o != "RIGHT")
                throw ParseError(line, "orientation expects UP, DOWN, LEFT or RIGHT");
        }
        if (auto p = d.param("prob")) {
            if (parse_number(*p, "prob", line) > 1.0)
                throw ParseError(line, "prob must be at most 1");
        }
        if (auto c = d.param("cooldown")) {
            double v = parse_number(*c, "cooldown", line);
            if (v < 1 || v != std::floor(v))
                throw ParseError(line, "cooldown must be a positive integer");
        }
    }
};

} // namespace

// --- Public symbols ---

const char* sprite_class_name(SpriteClass cls) {
    for (const auto& e : kClasses)
        if (e.cls == cls) return e.name;
    return "";
}

std::optional<SpriteClass> sprite_class_from_name(const std::string& name) {
    for (const auto& e : kClasses)
        if (name == e.name) return e.cls;
    return std::nullopt;
}

bool is_avatar_class(SpriteClass cls) {
    return cls == SpriteClass::MovingAvatar || cls == SpriteClass::OrientedAvatar ||
           cls == SpriteClass::ShootAvatar || cls == SpriteClass::FlakAvatar;
}

const char* effect_name(Effect e) { return kEffectNames[static_cast<int>(e)]; }

std::optional<Effect> effect_from_name(const std::string& name) {
    for (size_t i = 0; i < std::size(kEffectNames); ++i)
        if (name == kEffectNames[i]) return static_cast<Effect>(i);
    return std::nullopt;
}

std::optional<std::string> SpriteDef::param(const std::string& key) const {
    for (const auto& [k, v] : params)
        if (k == key) return v;
    return std::nullopt;
}

double SpriteDef::num_param(const std::string& key, double fallback) const {
    auto v = param(key);
    return v ? std::stod(*v) : fallback;
}

int SpriteDef::int_param(const std::string& key, int fallback) const {
    auto v = param(key);
    return v ? static_cast<int>(std::stod(*v)) : fallback;
}

bool SpriteDef::bool_param(const std::string& key, bool fallback) const {
    auto v = param(key);
    if (!v) return fallback;
    return *v == "True" || *v == "true";
}

double InteractionRule::score_change() const {
    auto v = param("scoreChange");
    return v ? std::stod(*v) : 0.0;
}

std::optional<std::string> InteractionRule::param(const std::string& key) const {
    for (const auto& [k, v] : params)
        if (k == key) return v;
    return std::nullopt;
}

int InteractionRule::int_param(const std::string& key, int fallback) const {
    auto v = param(key);
    return v ? static_cast<int>(std::stod(*v)) : fallback;
}

bool InteractionRule::bool_param(const std::string& key, bool fallback) const {
    auto v = param(key);
    if (!v) return fallback;
    return *v == "True" || *v == "true";
}

int GameSpec::sprite_index(const std::string& name) const {
    for (size_t i = 0; i < sprites.size(); ++i)
        if (sprites[i].name == name) return static_cast<int>(i);
    return -1;
}

const SpriteDef* GameSpec::find_sprite(const std::string& name) const {
    int idx = sprite_index(name);
    return idx < 0 ? nullptr : &sprites[idx];
}

bool GameSpec::is_a(int idx, const std::string& name) const {
    for (int i = idx; i >= 0; i = sprites[i].parent_index)
        if (sprites[i].name == name) return true;
    return false;
}

GameSpec parse_game(const std::string& source) {
    return GameParser(source).parse();
}

LevelGrid parse_level(const GameSpec& spec, const std::string& source) {
    LevelGrid grid;
    grid.source = split_lines(source);
    // drop trailing blank lines
    while (!grid.source.empty() && trim(grid.source.back()).empty())
        grid.source.pop_back();
    if (grid.source.empty()) throw EmptyLevel();

    size_t width = 0;
    for (const auto& row : grid.source) width = std::max(width, row.size());
    if (width == 0) throw EmptyLevel();

    grid.height = static_cast<int>(grid.source.size());
    grid.width = static_cast<int>(width);
    for (int r = 0; r < grid.height; ++r) {
        std::string row = grid.source[r];
        if (row.size() < width) {
            grid.warnings.push_back("row " + std::to_string(r) + " padded from " +
                                    std::to_string(row.size()) + " to " +
                                    std::to_string(width) + " cells");
            row.resize(width, ' ');
        }
        for (int c = 0; c < grid.width; ++c) {
            char ch = row[c];
            if (ch == ' ') continue;
            bool known = std::any_of(spec.level_mapping.begin(), spec.level_mapping.end(),
                                     [&](const MappingEntry& e) { return e.ch == ch; });
            if (!known) throw UnknownTile(ch, r, c);
        }
        grid.cells.push_back(std::move(row));
    }
    return grid;
}

std::string render_game(const GameSpec& spec) {
    std::ostringstream out;
    auto emit_params = [&](const ParamList& params) {
        for (const auto& [k, v] : params) out << ' ' << k << '=' << v;
    };

    out << "BasicGame";
    emit_params(spec.game_params);
    out << '\n';

    out << "    SpriteSet\n";
    for (const auto& d : spec.sprites) {
        out << std::string(8 + 4 * d.depth, ' ') << d.name << " >";
        if (!d.declared_class.empty()) out << ' ' << d.declared_class;
        emit_params(d.params);
        out << '\n';
    }

    out << "    LevelMapping\n";
    for (const auto& e : spec.level_mapping) {
        out << "        " << e.ch << " >";
        for (const auto& s : e.sprites) out << ' ' << s;
        out << '\n';
    }

    out << "    InteractionSet\n";
    for (const auto& r : spec.interactions) {
        out << "        " << r.actor << ' ' << r.collider << " > " << effect_name(r.effect);
        emit_params(r.params);
        out << '\n';
    }

    out << "    TerminationSet\n";
    for (const auto& t : spec.terminations) {
        out << "        ";
        switch (t.kind) {
            case TerminationKind::SpriteCounter:
                out << "SpriteCounter stype=" << t.stypes[0];
                break;
            case TerminationKind::MultiSpriteCounter:
                out << "MultiSpriteCounter";
                for (size_t i = 0; i < t.stypes.size(); ++i)
                    out << " stype" << i + 1 << '=' << t.stypes[i];
                break;
            case TerminationKind::Timeout:
                out << "Timeout";
                break;
        }
        out << " limit=" << t.limit << " win=" << (t.win ? "True" : "False") << '\n';
    }
    return out.str();
}

} // namespace vgb::vgdl

#include "vgb/engine/engine.hpp"

#include <algorithm>
#include <climits>
#include <set>
#include <tuple>
#include <unordered_map>

namespace vgb::engine {

using vgdl::Effect;
using vgdl::GameSpec;
using vgdl::SpriteClass;
using vgdl::SpriteDef;

const char* action_name(Action a) {
    switch (a) {
        case Action::Nil:   return "NIL";
        case Action::Left:  return "LEFT";
        case Action::Right: return "RIGHT";
        case Action::Down:  return "DOWN";
        case Action::Up:    return "UP";
        case Action::Use:   return "USE";
    }
    return "?";
}

namespace {

Vec orientation_from_name(const std::string& name) {
    if (name == "UP") return {-1, 0};
    if (name == "DOWN") return {1, 0};
    if (name == "LEFT") return {0, -1};
    return {0, 1};
}

Vec initial_orientation(const SpriteDef& def) {
    if (auto o = def.param("orientation")) return orientation_from_name(*o);
    // Oriented avatars face right by default; everything else is unoriented.
    if (def.cls == SpriteClass::OrientedAvatar || def.cls == SpriteClass::ShootAvatar)
        return {0, 1};
    return {0, 0};
}

constexpr Vec kDirs[4] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};

bool class_acts(SpriteClass c) {
    switch (c) {
        case SpriteClass::Missile:
        case SpriteClass::Bomber:
        case SpriteClass::RandomNpc:
        case SpriteClass::Chaser:
        case SpriteClass::Fleeing:
        case SpriteClass::Flicker:
        case SpriteClass::SpawnPoint:
            return true;
        default:
            return false;
    }
}

} // namespace

// --- Runtime ---

Runtime Runtime::compile(const GameSpec& spec) {
    Runtime rt;
    rt.spec_ = spec;
    const size_t n = spec.sprites.size();
    if (n > 64) throw Error("sprite set too large (max 64 definitions)");

    auto mask_for = [&](const std::string& name) {
        uint64_t m = 0;
        for (size_t i = 0; i < n; ++i)
            if (spec.is_a(static_cast<int>(i), name)) m |= 1ULL << i;
        return m;
    };

    for (const auto& rule : spec.interactions) {
        rt.actor_masks_.push_back(mask_for(rule.actor));
        rt.collider_masks_.push_back(rule.is_eos() ? 0 : mask_for(rule.collider));
        rt.participant_mask_ |= rt.actor_masks_.back() | rt.collider_masks_.back();
    }
    for (const auto& t : spec.terminations) {
        uint64_t m = 0;
        for (const auto& s : t.stypes) m |= mask_for(s);
        std::vector<int> defs;
        for (size_t i = 0; i < n; ++i)
            if (m & (1ULL << i)) defs.push_back(static_cast<int>(i));
        rt.termination_defs_.push_back(std::move(defs));
        rt.participant_mask_ |= m;
    }
    if (spec.avatar_head >= 0) rt.participant_mask_ |= 1ULL << spec.avatar_head;

    // Sprites that can change at all: anything a rule touches, anything that
    // acts on its own, avatars, and spawn/transform targets. Everything else
    // is scenery and skipped by the change detector.
    rt.mutable_mask_ = rt.participant_mask_;
    for (size_t i = 0; i < n; ++i) {
        const auto& d = spec.sprites[i];
        if (class_acts(d.cls) || d.is_avatar()) rt.mutable_mask_ |= 1ULL << i;
        if (auto st = d.param("stype")) rt.mutable_mask_ |= mask_for(*st);
    }
    for (const auto& rule : spec.interactions)
        if (auto st = rule.param("stype")) rt.mutable_mask_ |= mask_for(*st);
    return rt;
}

bool Runtime::matches(int def_index, int rule_index, bool collider) const {
    uint64_t m = collider ? collider_masks_[rule_index] : actor_masks_[rule_index];
    return (m >> def_index) & 1ULL;
}

bool Runtime::participates(int def_index) const {
    return (participant_mask_ >> def_index) & 1ULL;
}

bool Runtime::mutable_def(int def_index) const {
    return (mutable_mask_ >> def_index) & 1ULL;
}

const std::vector<int>& Runtime::termination_defs(int termination_index) const {
    return termination_defs_[termination_index];
}

// --- init ---

namespace {

SpriteInstance* spawn_sprite(GameState& st, const Runtime& rt, int def_index, Vec pos) {
    const SpriteDef& def = rt.spec().sprites[def_index];
    if (def.bool_param("singleton", false)) {
        for (const auto& s : st.sprites)
            if (s.def_index == def_index) return nullptr;
    }
    SpriteInstance inst;
    inst.id = st.next_id++;
    inst.def_index = def_index;
    inst.pos = pos;
    inst.orient = initial_orientation(def);
    inst.birth_tick = st.tick;
    st.sprites.push_back(std::move(inst));
    return &st.sprites.back();
}

} // namespace

GameState init_state(const Runtime& rt, const vgdl::LevelGrid& level, uint64_t seed) {
    const GameSpec& spec = rt.spec();
    GameState st;
    st.width = level.width;
    st.height = level.height;
    st.rng = Rng(seed);

    for (int r = 0; r < level.height; ++r) {
        for (int c = 0; c < level.width; ++c) {
            char ch = level.at(r, c);
            if (ch == ' ') continue;
            auto entry = std::find_if(spec.level_mapping.begin(), spec.level_mapping.end(),
                                      [&](const vgdl::MappingEntry& e) { return e.ch == ch; });
            if (entry == spec.level_mapping.end()) throw vgdl::UnknownTile(ch, r, c);
            for (const auto& name : entry->sprites) {
                int def_index = spec.sprite_index(name);
                SpriteInstance* inst = spawn_sprite(st, rt, def_index, {r, c});
                if (inst && spec.sprites[def_index].is_avatar()) {
                    if (st.avatar_id >= 0) throw MultipleAvatars();
                    st.avatar_id = inst->id;
                    st.last_avatar_pos = inst->pos;
                }
            }
        }
    }
    if (st.avatar_id < 0) throw NoAvatar();
    return st;
}

// --- step ---

namespace {

struct StartRecord {
    int id;
    Vec pos;
    Vec orient;
};

struct TickCtx {
    std::vector<StartRecord> start;          // ascending id, includes spawns
    std::vector<std::pair<int, Vec>> eos;    // sprite id, attempted direction

    const StartRecord* start_of(int id) const {
        auto it = std::lower_bound(start.begin(), start.end(), id,
                                   [](const StartRecord& r, int v) { return r.id < v; });
        return (it != start.end() && it->id == id) ? &*it : nullptr;
    }
    void record(const SpriteInstance& s) { start.push_back({s.id, s.pos, s.orient}); }
};

struct VisibleRow {
    int id;
    int def_index;
    Vec pos;
    std::vector<std::pair<std::string, int>> resources;
    bool operator==(const VisibleRow&) const = default;
};

std::vector<VisibleRow> visible_snapshot(const GameState& st, const Runtime& rt) {
    std::vector<VisibleRow> rows;
    rows.reserve(32);
    for (const auto& s : st.sprites)
        if (rt.mutable_def(s.def_index))
            rows.push_back({s.id, s.def_index, s.pos, s.resources});
    return rows;
}

void kill_sprite(GameState& st, int id) {
    if (id == st.avatar_id) {
        if (const SpriteInstance* a = st.find(id)) st.last_avatar_pos = a->pos;
        st.avatar_id = -1;
    }
    std::erase_if(st.sprites, [id](const SpriteInstance& s) { return s.id == id; });
}

void try_move(GameState& st, TickCtx& ctx, SpriteInstance& s, Vec dir) {
    Vec dest = s.pos + dir;
    if (!st.in_bounds(dest)) {
        ctx.eos.emplace_back(s.id, dir);
        return;
    }
    s.pos = dest;
}

SpriteInstance* spawn_in_tick(GameState& st, const Runtime& rt, TickCtx& ctx,
                              int def_index, Vec pos) {
    SpriteInstance* inst = spawn_sprite(st, rt, def_index, pos);
    if (inst) ctx.record(*inst);
    return inst;
}

void avatar_act(GameState& st, const Runtime& rt, TickCtx& ctx, Action action) {
    SpriteInstance* av = st.find(st.avatar_id);
    if (!av) return;
    const SpriteDef& def = rt.spec().sprites[av->def_index];
    Vec dir = action_dir(action);

    switch (def.cls) {
        case SpriteClass::MovingAvatar:
            if (!dir.zero()) try_move(st, ctx, *av, dir);
            break;
        case SpriteClass::OrientedAvatar:
        case SpriteClass::ShootAvatar:
            if (!dir.zero()) {
                // first press rotates, repeating the direction moves
                if (av->orient == dir) try_move(st, ctx, *av, dir);
                else av->orient = dir;
            } else if (action == Action::Use && def.cls == SpriteClass::ShootAvatar) {
                int stype = rt.spec().sprite_index(*def.param("stype"));
                Vec at = av->pos + av->orient;
                if (st.in_bounds(at)) {
                    SpriteInstance* shot = spawn_in_tick(st, rt, ctx, stype, at);
                    if (shot && shot->orient.zero()) shot->orient = av->orient;
                }
            }
            break;
        case SpriteClass::FlakAvatar:
            if (action == Action::Left || action == Action::Right) {
                try_move(st, ctx, *av, dir);
            } else if (action == Action::Use) {
                int stype = rt.spec().sprite_index(*def.param("stype"));
                spawn_in_tick(st, rt, ctx, stype, av->pos);
            }
            break;
        default:
            break;
    }
    if (SpriteInstance* a = st.find(st.avatar_id)) st.last_avatar_pos = a->pos;
}

void move_with_speed(GameState& st, TickCtx& ctx, SpriteInstance& s, double speed) {
    s.move_acc += speed;
    int steps = static_cast<int>(s.move_acc);
    s.move_acc -= steps;
    for (int i = 0; i < steps; ++i) try_move(st, ctx, s, s.orient);
}

void npc_act(GameState& st, const Runtime& rt, TickCtx& ctx, int id) {
    SpriteInstance* s = st.find(id);
    if (!s) return;
    const SpriteDef& def = rt.spec().sprites[s->def_index];
    int cooldown = def.int_param("cooldown", 1);
    if (st.tick % cooldown != 0) return;

    switch (def.cls) {
        case SpriteClass::Missile:
            move_with_speed(st, ctx, *s, def.num_param("speed", 1.0));
            break;
        case SpriteClass::Bomber: {
            if (st.rng.chance(def.num_param("prob", 1.0))) {
                int stype = rt.spec().sprite_index(*def.param("stype"));
                spawn_in_tick(st, rt, ctx, stype, s->pos);
                s = st.find(id);   // spawn may reallocate
                if (!s) return;
            }
            move_with_speed(st, ctx, *s, def.num_param("speed", 1.0));
            break;
        }
        case SpriteClass::RandomNpc:
            try_move(st, ctx, *s, kDirs[st.rng.below(4)]);
            break;
        case SpriteClass::Chaser:
        case SpriteClass::Fleeing: {
            bool flee = def.cls == SpriteClass::Fleeing;
            const std::string target = *def.param("stype");
            const SpriteInstance* nearest = nullptr;
            int best = INT_MAX;
            for (const auto& other : st.sprites) {
                if (other.id == s->id || !rt.spec().is_a(other.def_index, target)) continue;
                int d = std::abs(other.pos.row - s->pos.row) +
                        std::abs(other.pos.col - s->pos.col);
                if (d < best) { best = d; nearest = &other; }
            }
            std::vector<Vec> options;
            if (nearest) {
                for (Vec dir : kDirs) {
                    Vec dest = s->pos + dir;
                    int d = std::abs(nearest->pos.row - dest.row) +
                            std::abs(nearest->pos.col - dest.col);
                    if (flee ? d > best : d < best) options.push_back(dir);
                }
            }
            if (options.empty()) options.assign(std::begin(kDirs), std::end(kDirs));
            Vec dir = options[st.rng.below(static_cast<int>(options.size()))];
            try_move(st, ctx, *s, dir);
            break;
        }
        case SpriteClass::Flicker: {
            int limit = def.int_param("limit", 1);
            if (st.tick - s->birth_tick >= limit) kill_sprite(st, id);
            break;
        }
        case SpriteClass::SpawnPoint: {
            if (st.rng.chance(def.num_param("prob", 1.0))) {
                int stype = rt.spec().sprite_index(*def.param("stype"));
                Vec at = s->pos;
                if (spawn_in_tick(st, rt, ctx, stype, at)) {
                    s = st.find(id);
                    if (!s) return;
                    s->spawned += 1;
                }
            }
            int total = def.int_param("total", 0);
            if (total > 0 && s->spawned >= total) kill_sprite(st, id);
            break;
        }
        default:
            break;
    }
}

// Applies one rule to one (actor, collider) pair. Returns true when the
// effect actually fired; scoreChange is credited only then.
bool apply_effect(GameState& st, const Runtime& rt, const vgdl::InteractionRule& rule,
                  TickCtx& ctx, int actor_id, int collider_id) {
    SpriteInstance* sa = st.find(actor_id);
    if (!sa) return false;
    SpriteInstance* sb = collider_id >= 0 ? st.find(collider_id) : nullptr;
    bool fired = false;

    switch (rule.effect) {
        case Effect::KillSprite:
            kill_sprite(st, actor_id);
            fired = true;
            break;
        case Effect::KillBoth:
            kill_sprite(st, actor_id);
            if (sb) kill_sprite(st, collider_id);
            fired = true;
            break;
        case Effect::StepBack: {
            const StartRecord* rec = ctx.start_of(actor_id);
            if (rec && !(sa->pos == rec->pos)) {
                sa->pos = rec->pos;
                fired = true;
            }
            break;
        }
        case Effect::UndoAll: {
            for (const StartRecord& rec : ctx.start) {
                SpriteInstance* s = st.find(rec.id);
                if (s && (!(s->pos == rec.pos) || !(s->orient == rec.orient))) {
                    s->pos = rec.pos;
                    s->orient = rec.orient;
                    fired = true;
                }
            }
            break;
        }
        case Effect::BounceForward: {
            if (!sb) break;
            const StartRecord* rec = ctx.start_of(collider_id);
            if (!rec) break;
            Vec dir = sb->pos - rec->pos;
            dir.row = dir.row > 0 ? 1 : dir.row < 0 ? -1 : 0;
            dir.col = dir.col > 0 ? 1 : dir.col < 0 ? -1 : 0;
            if (dir.zero()) break;
            Vec dest = sa->pos + dir;
            if (!st.in_bounds(dest)) break;
            sa->pos = dest;
            fired = true;
            break;
        }
        case Effect::TransformTo: {
            int def_index = rt.spec().sprite_index(*rule.param("stype"));
            const SpriteDef& target = rt.spec().sprites[def_index];
            sa->def_index = def_index;
            sa->birth_tick = st.tick;
            if (auto o = target.param("orientation"))
                sa->orient = orientation_from_name(*o);
            fired = true;
            if (rule.bool_param("killSecond", false) && sb) kill_sprite(st, collider_id);
            break;
        }
        case Effect::CollectResource: {
            if (!sb) break;
            const SpriteDef& res = rt.spec().sprites[sa->def_index];
            std::string rname = res.param("resource").value_or(res.name);
            int value = res.int_param("value", 1);
            int cap = res.int_param("limit", INT_MAX);
            sb->add_resource(rname, value, cap);
            kill_sprite(st, actor_id);
            fired = true;
            break;
        }
        case Effect::KillIfOtherHasMore: {
            if (!sb) break;
            std::string rname = *rule.param("resource");
            if (sb->resource(rname) >= rule.int_param("limit", 0)) {
                kill_sprite(st, actor_id);
                fired = true;
            }
            break;
        }
        case Effect::KillIfFromAbove: {
            if (!sb) break;
            const StartRecord* rec = ctx.start_of(collider_id);
            if (rec && sb->pos - rec->pos == Vec{1, 0}) {
                kill_sprite(st, actor_id);
                fired = true;
            }
            break;
        }
        case Effect::TurnAround: {
            sa->orient = -sa->orient;
            Vec dest = sa->pos + Vec{1, 0};
            if (st.in_bounds(dest)) sa->pos = dest;
            fired = true;
            break;
        }
    }

    if (fired) st.score += rule.score_change();
    return fired;
}

void resolve_interactions(GameState& st, const Runtime& rt, TickCtx& ctx) {
    const auto& rules = rt.spec().interactions;
    std::set<std::tuple<int, int, int>> applied;
    std::sort(ctx.eos.begin(), ctx.eos.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    constexpr int kMaxPasses = 10;
    for (int pass = 0; pass < kMaxPasses; ++pass) {
        // cells holding two or more rule participants
        std::unordered_map<int, std::vector<int>> occupancy;
        for (const auto& s : st.sprites)
            if (rt.participates(s.def_index))
                occupancy[s.pos.row * st.width + s.pos.col].push_back(s.id);
        std::vector<const std::vector<int>*> crowded;
        for (const auto& [cell, ids] : occupancy)
            if (ids.size() >= 2) crowded.push_back(&ids);

        bool any = false;
        for (size_t ri = 0; ri < rules.size(); ++ri) {
            const auto& rule = rules[ri];
            if (rule.is_eos()) {
                for (const auto& [id, dir] : ctx.eos) {
                    const SpriteInstance* s = st.find(id);
                    if (!s || !rt.matches(s->def_index, static_cast<int>(ri), false)) continue;
                    if (!applied.emplace(static_cast<int>(ri), id, -1).second) continue;
                    any |= apply_effect(st, rt, rule, ctx, id, -1);
                }
                continue;
            }
            std::vector<std::pair<int, int>> pairs;
            for (const auto* ids : crowded) {
                for (int a : *ids) {
                    const SpriteInstance* sa = st.find(a);
                    if (!sa || !rt.matches(sa->def_index, static_cast<int>(ri), false)) continue;
                    for (int b : *ids) {
                        if (a == b) continue;
                        const SpriteInstance* sb = st.find(b);
                        if (!sb || !rt.matches(sb->def_index, static_cast<int>(ri), true))
                            continue;
                        if (!(sa->pos == sb->pos)) continue;
                        pairs.emplace_back(a, b);
                    }
                }
            }
            std::sort(pairs.begin(), pairs.end());
            for (auto [a, b] : pairs) {
                const SpriteInstance* sa = st.find(a);
                const SpriteInstance* sb = st.find(b);
                if (!sa || !sb || !(sa->pos == sb->pos)) continue;
                if (!applied.emplace(static_cast<int>(ri), a, b).second) continue;
                any |= apply_effect(st, rt, rule, ctx, a, b);
            }
        }
        if (!any) break;
    }
}

void check_terminations(GameState& st, const Runtime& rt, int ending_tick) {
    const auto& terms = rt.spec().terminations;
    for (size_t ti = 0; ti < terms.size(); ++ti) {
        const auto& t = terms[ti];
        if (t.kind == vgdl::TerminationKind::Timeout) {
            if (ending_tick >= t.limit) {
                st.outcome = t.win ? Outcome::Win : Outcome::Loss;
                st.end_reason = "timeout";
                return;
            }
            continue;
        }
        const auto& defs = rt.termination_defs(static_cast<int>(ti));
        int count = 0;
        for (const auto& s : st.sprites)
            if (std::find(defs.begin(), defs.end(), s.def_index) != defs.end()) ++count;
        if (count <= t.limit) {
            st.outcome = t.win ? Outcome::Win : Outcome::Loss;
            st.end_reason = "counter";
            return;
        }
    }
    if (st.avatar_id < 0) {
        st.outcome = Outcome::Loss;
        st.end_reason = "avatar_destroyed";
    }
}

} // namespace

StepResult step(GameState& st, const Runtime& rt, Action action) {
    if (!st.ongoing()) throw SteppedTerminal();

    const double score_before = st.score;
    const auto before = visible_snapshot(st, rt);

    TickCtx ctx;
    ctx.start.reserve(st.sprites.size() + 4);
    for (const auto& s : st.sprites) ctx.record(s);

    std::vector<int> movers;
    movers.reserve(16);
    for (const auto& s : st.sprites)
        if (s.id != st.avatar_id && class_acts(rt.cls(s.def_index)))
            movers.push_back(s.id);

    if (st.avatar_id >= 0) avatar_act(st, rt, ctx, action);
    for (int id : movers) npc_act(st, rt, ctx, id);

    resolve_interactions(st, rt, ctx);
    if (SpriteInstance* a = st.find(st.avatar_id)) st.last_avatar_pos = a->pos;

    check_terminations(st, rt, st.tick + 1);
    st.tick += 1;

    StepResult res;
    res.reward_delta = st.score - score_before;
    res.changed = !(visible_snapshot(st, rt) == before);
    return res;
}

std::vector<Action> legal_actions(const GameState& st, const Runtime& rt) {
    int def_index = rt.avatar_head();
    if (const SpriteInstance* av = st.avatar()) def_index = av->def_index;
    switch (rt.cls(def_index)) {
        case SpriteClass::FlakAvatar:
            return {Action::Nil, Action::Left, Action::Right, Action::Use};
        case SpriteClass::ShootAvatar:
            return {Action::Nil, Action::Left, Action::Right, Action::Down, Action::Up,
                    Action::Use};
        default:
            return {Action::Nil, Action::Left, Action::Right, Action::Down, Action::Up};
    }
}

} // namespace vgb::engine

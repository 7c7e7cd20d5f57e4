#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vgb/common/rng.hpp"

namespace vgb::engine {

// Integer codes are part of the wire format exposed to agents.
enum class Action : int { Nil = 0, Left = 1, Right = 2, Down = 3, Up = 4, Use = 5 };

const char* action_name(Action a);
inline int action_code(Action a) { return static_cast<int>(a); }

enum class Outcome { Ongoing, Win, Loss };

struct Vec {
    int row = 0;
    int col = 0;

    Vec operator+(Vec o) const { return {row + o.row, col + o.col}; }
    Vec operator-(Vec o) const { return {row - o.row, col - o.col}; }
    Vec operator-() const { return {-row, -col}; }
    bool operator==(const Vec&) const = default;
    bool zero() const { return row == 0 && col == 0; }
};

inline Vec action_dir(Action a) {
    switch (a) {
        case Action::Left:  return {0, -1};
        case Action::Right: return {0, 1};
        case Action::Down:  return {1, 0};
        case Action::Up:    return {-1, 0};
        default:            return {0, 0};
    }
}

struct SpriteInstance {
    int id = 0;
    int def_index = 0;
    Vec pos;
    Vec orient;          // {0,0} when the sprite has no orientation
    int birth_tick = 0;
    int spawned = 0;     // SpawnPoint bookkeeping
    double move_acc = 0; // fractional-speed accumulator
    std::vector<std::pair<std::string, int>> resources;

    int resource(const std::string& name) const {
        for (const auto& [k, v] : resources)
            if (k == name) return v;
        return 0;
    }
    void add_resource(const std::string& name, int delta, int cap) {
        for (auto& [k, v] : resources)
            if (k == name) {
                v = std::min(cap, v + delta);
                return;
            }
        resources.emplace_back(name, std::min(cap, delta));
    }
};

// Whole-world snapshot with value semantics: copying a GameState yields a
// fully independent forward model, rng included.
struct GameState {
    int tick = 0;
    int width = 0;
    int height = 0;
    std::vector<SpriteInstance> sprites;   // alive sprites, ascending id
    int avatar_id = -1;
    Vec last_avatar_pos;                   // survives avatar death
    double score = 0.0;
    Outcome outcome = Outcome::Ongoing;
    std::string end_reason;                // "counter", "timeout", "avatar_destroyed"
    Rng rng;
    int next_id = 0;

    bool ongoing() const { return outcome == Outcome::Ongoing; }
    bool in_bounds(Vec p) const {
        return p.row >= 0 && p.row < height && p.col >= 0 && p.col < width;
    }
    // sprites stay sorted by id (ids are assigned in increasing order)
    const SpriteInstance* find(int id) const {
        auto it = std::lower_bound(sprites.begin(), sprites.end(), id,
                                   [](const SpriteInstance& s, int v) { return s.id < v; });
        return (it != sprites.end() && it->id == id) ? &*it : nullptr;
    }
    SpriteInstance* find(int id) {
        auto it = std::lower_bound(sprites.begin(), sprites.end(), id,
                                   [](const SpriteInstance& s, int v) { return s.id < v; });
        return (it != sprites.end() && it->id == id) ? &*it : nullptr;
    }
    const SpriteInstance* avatar() const {
        return avatar_id < 0 ? nullptr : find(avatar_id);
    }
};

} // namespace vgb::engine

#pragma once

#include <cstdint>
#include <vector>

#include "vgb/engine/game_state.hpp"
#include "vgb/vgdl/types.hpp"

namespace vgb::engine {

struct NoAvatar : Error {
    NoAvatar() : Error("level places no avatar") {}
};
struct MultipleAvatars : Error {
    MultipleAvatars() : Error("level places more than one avatar") {}
};
struct SteppedTerminal : Error {
    SteppedTerminal() : Error("step called on a finished state") {}
};

// Spec compiled into the lookup tables the simulation loop needs. Build once
// per game; it is immutable and shared freely across threads and clones.
class Runtime {
public:
    static Runtime compile(const vgdl::GameSpec& spec);

    const vgdl::GameSpec& spec() const { return spec_; }

    bool matches(int def_index, int rule_index, bool collider) const;
    bool participates(int def_index) const;   // appears in any rule or termination
    bool mutable_def(int def_index) const;    // can move, die, spawn or transform
    const std::vector<int>& termination_defs(int termination_index) const;
    vgdl::SpriteClass cls(int def_index) const { return spec_.sprites[def_index].cls; }
    int avatar_head() const { return spec_.avatar_head; }

private:
    vgdl::GameSpec spec_;
    std::vector<uint64_t> actor_masks_;     // per rule: defs matching the actor
    std::vector<uint64_t> collider_masks_;  // per rule: defs matching the collider
    uint64_t participant_mask_ = 0;
    uint64_t mutable_mask_ = 0;
    std::vector<std::vector<int>> termination_defs_;
};

struct StepResult {
    double reward_delta = 0.0;
    bool changed = false;
};

// Instantiates every mapped sprite and seeds the state's rng.
// Throws NoAvatar / MultipleAvatars.
GameState init_state(const Runtime& rt, const vgdl::LevelGrid& level, uint64_t seed);

// Advances one tick: avatar action, autonomous sprites, interactions,
// terminations. Throws SteppedTerminal on a finished state.
StepResult step(GameState& state, const Runtime& rt, Action action);

// The avatar class's action set plus NIL; independent of position and of
// whether the game has ended.
std::vector<Action> legal_actions(const GameState& state, const Runtime& rt);

// GameState has value semantics; provided for contract clarity.
inline GameState clone(const GameState& state) { return state; }

} // namespace vgb::engine

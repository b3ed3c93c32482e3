#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vcat/errors.hpp"
#include "vcat/geometry.hpp"
#include "vcat/rollout.hpp"
#include "vcat/stats.hpp"

namespace vcat {

inline double crash_rate(const std::vector<TerminalKind>& window) {
    if (window.empty()) throw UsageError("crash_rate: empty window");
    int c = 0;
    for (TerminalKind t : window)
        if (t == TerminalKind::collision) ++c;
    return static_cast<double>(c) / static_cast<double>(window.size());
}

enum class CrashCategory { frontal, rear, side_left, side_right };

inline std::string to_string(CrashCategory c) {
    switch (c) {
        case CrashCategory::frontal: return "frontal";
        case CrashCategory::rear: return "rear";
        case CrashCategory::side_left: return "side-left";
        case CrashCategory::side_right: return "side-right";
    }
    return "frontal";
}

struct CrashRecord {
    int episode_id = 0;
    TerminalKind terminal = TerminalKind::collision;
    Vec2 impact_victim_frame;
    double relative_heading = 0.0;
    CrashCategory category = CrashCategory::frontal;
};

// Category by the quadrant of the deepest-penetration contact point in the
// victim frame, boundaries at +-45 degrees off the longitudinal axis;
// boundary angles resolve to frontal/rear.
inline CrashCategory categorize_crash(const VehicleState& victim, const VehicleState& attacker) {
    if (!check_collision(victim, attacker))
        throw UsageError("categorize_crash: vehicles do not overlap");
    const Vec2 impact = obb_contact_point(victim.footprint(), attacker.footprint());
    const Vec2 d = impact - victim.pos();
    const double c = std::cos(victim.heading), s = std::sin(victim.heading);
    const double lx = d.x * c + d.y * s;
    const double ly = -d.x * s + d.y * c;
    const double ang = std::atan2(ly, lx);
    if (std::abs(ang) <= M_PI / 4.0) return CrashCategory::frontal;
    if (std::abs(ang) >= 3.0 * M_PI / 4.0) return CrashCategory::rear;
    return ang > 0.0 ? CrashCategory::side_left : CrashCategory::side_right;
}

inline CrashRecord make_crash_record(int episode_id, const VehicleState& victim,
                                     const VehicleState& attacker) {
    CrashRecord r;
    r.episode_id = episode_id;
    r.terminal = TerminalKind::collision;
    const Vec2 impact = obb_contact_point(victim.footprint(), attacker.footprint());
    const Vec2 d = impact - victim.pos();
    const double c = std::cos(victim.heading), s = std::sin(victim.heading);
    r.impact_victim_frame = {d.x * c + d.y * s, -d.x * s + d.y * c};
    r.relative_heading = wrap_angle(attacker.heading - victim.heading);
    r.category = categorize_crash(victim, attacker);
    return r;
}

struct ActionRow {
    int episode = 0;
    int step = 0;
    std::vector<double> action;
};

struct EvalOutcome {
    int episodes = 0;
    int collisions = 0;
    int goals = 0;
    int timeouts = 0;
    int off_roads = 0;
    std::vector<TerminalKind> terminals;
    std::vector<CrashRecord> crash_records;
    std::vector<ActionRow> victim_actions; // filled when requested

    double crash_rate() const {
        return episodes == 0 ? 0.0
                             : static_cast<double>(collisions) / static_cast<double>(episodes);
    }
    double non_crash_rate() const { return 1.0 - crash_rate(); }
    double goal_rate() const {
        return episodes == 0 ? 0.0 : static_cast<double>(goals) / static_cast<double>(episodes);
    }
};

// Frozen-policy evaluation. Episode i runs on the stream derived from tag i,
// so the outcome is independent of scheduling and batch splits.
inline EvalOutcome evaluate(const ScenarioSpec& spec, const Actor& victim,
                            const Actor& attacker, int episodes, Rng& rng,
                            bool record_actions = false,
                            const RewardWeights& weights = {}) {
    if (episodes < 1) throw UsageError("evaluate: episodes must be >= 1");
    EvalOutcome out;
    for (int i = 0; i < episodes; ++i) {
        Rng ep_rng = rng.derive(static_cast<std::uint64_t>(i));
        RolloutBuffer buf = collect_rollouts(spec, victim, attacker, 1, ep_rng, weights, 1);
        const EpisodeSummary& e = buf.episodes.front();
        out.episodes += 1;
        out.terminals.push_back(e.terminal);
        switch (e.terminal) {
            case TerminalKind::collision:
                out.collisions += 1;
                out.crash_records.push_back(
                    make_crash_record(i, e.victim_at_end, e.attacker_at_end));
                break;
            case TerminalKind::victim_goal: out.goals += 1; break;
            case TerminalKind::timeout: out.timeouts += 1; break;
            case TerminalKind::off_road: out.off_roads += 1; break;
            case TerminalKind::running: break;
        }
        if (record_actions)
            for (const Transition& t : buf.transitions)
                out.victim_actions.push_back(ActionRow{i, t.step_index, t.act_victim});
    }
    return out;
}

struct EvalMatrixCell {
    std::string train_method;
    std::string eval_method;
    double non_crash_mean = 0.0;
    double non_crash_std = 0.0;
    std::vector<double> per_seed;
};

struct NamedVictim {
    std::string train_method; // how this victim was hardened
    const GaussianPolicy* policy = nullptr;
};

struct NamedAttack {
    std::string eval_method;
    Actor actor;
};

// Non-crash matrix: every victim against every validation attack, episodes
// per seed; cells report mean +- std over seeds.
inline std::vector<EvalMatrixCell> cross_evaluate(const std::vector<NamedVictim>& victims,
                                                  const std::vector<NamedAttack>& attacks,
                                                  int episodes,
                                                  const std::vector<std::uint64_t>& seeds,
                                                  const RewardWeights& weights = {},
                                                  const ScenarioSpec* spec = nullptr) {
    if (!spec) throw UsageError("cross_evaluate: scenario required");
    if (seeds.empty()) throw UsageError("cross_evaluate: seeds required");
    std::vector<EvalMatrixCell> cells;
    for (const NamedVictim& v : victims) {
        for (const NamedAttack& a : attacks) {
            EvalMatrixCell cell;
            cell.train_method = v.train_method;
            cell.eval_method = a.eval_method;
            for (std::uint64_t seed : seeds) {
                Rng rng(seed);
                Rng cell_rng =
                    rng.derive(hash_tag(v.train_method + "|" + a.eval_method));
                const EvalOutcome o = evaluate(*spec, Actor::policy_mean(*v.policy), a.actor,
                                               episodes, cell_rng, false, weights);
                cell.per_seed.push_back(o.non_crash_rate());
            }
            cell.non_crash_mean = mean_of(cell.per_seed);
            cell.non_crash_std = std_of(cell.per_seed);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

} // namespace vcat

#pragma once

// Checkpoint persistence with JSON sidecars, victim pretraining, action
// export with a PCA projection, and the staged experiment pipeline behind
// the `run` subcommand.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vcat/baselines.hpp"
#include "vcat/config.hpp"
#include "vcat/controller.hpp"
#include "vcat/io.hpp"
#include "vcat/metrics.hpp"
#include "vcat/pca.hpp"
#include "vcat/stats.hpp"
#include "vcat/trainer.hpp"

namespace vcat {

// ---------------------------------------------------------------------------
// Checkpoints

struct CkptMeta {
    std::string role;
    std::string scenario;
    std::uint64_t seed = 0;
    std::int64_t training_step = 0;
    nlohmann::json extra = nlohmann::json::object();
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& ckpt) {
    std::filesystem::path p = ckpt;
    p += ".json";
    return p;
}

inline void write_sidecar(const std::filesystem::path& ckpt, const CkptMeta& meta) {
    nlohmann::json j;
    j["role"] = meta.role;
    j["scenario"] = meta.scenario;
    j["seed"] = meta.seed;
    j["training_step"] = meta.training_step;
    if (!meta.extra.empty()) j["extra"] = meta.extra;
    write_json(sidecar_path(ckpt), j);
}

inline CkptMeta read_sidecar(const std::filesystem::path& ckpt) {
    const nlohmann::json j = read_json(sidecar_path(ckpt));
    CkptMeta m;
    try {
        m.role = j.at("role").get<std::string>();
        m.scenario = j.at("scenario").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.training_step = j.at("training_step").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad sidecar for " + ckpt.string() + ": " + e.what());
    }
    if (j.contains("extra")) m.extra = j["extra"];
    return m;
}

inline void save_policy(const GaussianPolicy& p, const std::filesystem::path& path,
                        const CkptMeta& meta) {
    net_save(p.trunk, path.string());
    write_sidecar(path, meta);
}

inline GaussianPolicy load_policy(const std::filesystem::path& path) {
    GaussianPolicy p;
    p.trunk = net_load(path.string());
    if (p.trunk.out_dim() % 2 != 0)
        throw FormatError("policy checkpoint " + path.string() + " has odd output width " +
                          std::to_string(p.trunk.out_dim()));
    p.action_dim = p.trunk.out_dim() / 2;
    return p;
}

// ---------------------------------------------------------------------------
// Victim pretraining

struct PretrainSettings {
    int demo_samples = 30000;  // expert transitions collected for cloning
    double demo_noise = 0.3;   // action noise injected while collecting
    int clone_epochs = 40;
    int clone_batch = 128;
    double clone_lr = 1e-3;
    double init_log_std = -0.5;
    int eval_episodes = 300;
    double goal_rate_floor = 0.9;
    bool timing = false;

    static PretrainSettings from(const RunConfig& rc) {
        PretrainSettings s;
        s.demo_samples = rc.pretrain_demo_samples;
        s.demo_noise = rc.pretrain_demo_noise;
        s.clone_epochs = rc.pretrain_clone_epochs;
        s.clone_batch = rc.pretrain_clone_batch;
        s.clone_lr = rc.pretrain_clone_lr;
        s.init_log_std = rc.pretrain_init_log_std;
        s.eval_episodes = rc.pretrain_eval_episodes;
        s.goal_rate_floor = rc.pretrain_goal_rate_floor;
        s.timing = rc.timing;
        return s;
    }
};

struct PretrainArtifacts {
    GaussianPolicy victim;
    std::vector<MetricsRow> metrics; // one row per cloning epoch
    double clone_loss = 0.0;
    double goal_rate = 0.0;  // deterministic eval against route traffic
    double crash_rate = 0.0;
    int demo_samples = 0;
};

// The victim driving policy is distilled from the scripted junction driver:
// demonstrations against route-following traffic with injected action noise
// (so the dataset covers recovery states), then minibatch regression of the
// squashed action means onto the demonstrated commands. A clipped-surrogate
// stage from scratch stalls here: the sparse goal term is tens of steps away
// from the spawn, and exploration noise strong enough to find the junction
// is strong enough to leave the road.
inline PretrainArtifacts pretrain_victim(const ScenarioSpec& spec, const PretrainSettings& s,
                                         Rng& rng) {
    if (s.demo_samples < 1 || s.clone_epochs < 1 || s.clone_batch < 1 || s.eval_episodes < 1)
        throw ConfigError("pretrain settings: budgets must be positive");
    if (!(s.clone_lr > 0.0) || s.demo_noise < 0.0)
        throw ConfigError("pretrain settings: clone_lr must be positive and demo_noise "
                          "non-negative");

    const ConflictGeometry geom = find_conflict(spec.victim_route, spec.attacker_route);
    const YieldConfig yc;

    Rng rng_policy = rng.derive(0xB1);
    Rng rng_collect = rng.derive(0xB3);
    Rng rng_update = rng.derive(0xB4);
    Rng rng_eval = rng.derive(0xB5);

    PretrainArtifacts art;
    art.victim = policy_init(kObsDim, 2, rng_policy, s.init_log_std);

    std::vector<std::vector<double>> demo_obs;
    std::vector<std::vector<double>> demo_act;
    demo_obs.reserve(static_cast<std::size_t>(s.demo_samples));
    demo_act.reserve(static_cast<std::size_t>(s.demo_samples));
    while (static_cast<int>(demo_obs.size()) < s.demo_samples) {
        WorldState w = reset(spec, AttackerInit::sampled(), rng_collect);
        const double traffic_speed = w.attacker.speed;
        while (!w.done()) {
            const Action expert = yield_driver_action(w, geom, spec, yc);
            demo_obs.push_back(observe(w, Role::victim));
            demo_act.push_back({expert.accel_cmd, expert.steer_cmd});
            const Action noisy{expert.accel_cmd + s.demo_noise * rng_collect.normal(),
                               expert.steer_cmd + s.demo_noise * rng_collect.normal()};
            const Action traffic = pure_pursuit_action(w.attacker, spec.attacker_route,
                                                       traffic_speed, spec);
            w = step(w, clamp_action(noisy), traffic);
        }
    }
    art.demo_samples = static_cast<int>(demo_obs.size());

    for (int epoch = 0; epoch < s.clone_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        art.clone_loss = fit_behavior_clone(art.victim, demo_obs, demo_act, 1, s.clone_batch,
                                            s.clone_lr, rng_update);
        MetricsRow row;
        row.iteration = epoch;
        row.episodes = art.demo_samples;
        row.policy_loss = art.clone_loss;
        row.wall_time_ms = s.timing ? detail::elapsed_ms(t0) : 0;
        art.metrics.push_back(row);
    }

    const EvalOutcome ev = evaluate(spec, Actor::policy_mean(art.victim),
                                    Actor::route_follower(), s.eval_episodes, rng_eval);
    art.goal_rate = ev.goal_rate();
    art.crash_rate = static_cast<double>(ev.collisions) / static_cast<double>(ev.episodes);
    if (!art.metrics.empty()) art.metrics.back().crash_rate = art.crash_rate;
    if (art.goal_rate < s.goal_rate_floor)
        throw TrainingError("victim pretraining reached goal rate " +
                            format_double(art.goal_rate) + ", below the floor " +
                            format_double(s.goal_rate_floor));
    return art;
}

// ---------------------------------------------------------------------------
// Action export

struct ActionExportRow {
    std::string method;
    std::uint64_t seed = 0;
    int episode = 0;
    int step = 0;
    std::vector<double> action;
};

struct HullArea {
    std::string method;
    std::uint64_t seed = 0;
    double area = 0.0;
};

struct ActionExport {
    PcaResult pca;
    std::vector<HullArea> hulls;
};

// Writes the raw victim action vectors, their 2-D PCA projection, and the
// explained-variance ratios; returns the projection plus the convex-hull
// area of the projected cloud per (method, seed) group.
inline ActionExport export_actions(const std::vector<ActionExportRow>& rows,
                                   const std::filesystem::path& out_dir) {
    if (rows.empty()) throw UsageError("export_actions: no action rows");
    const std::size_t dim = rows.front().action.size();
    if (dim == 0) throw UsageError("export_actions: empty action vectors");
    for (const ActionExportRow& r : rows)
        if (r.action.size() != dim) throw UsageError("export_actions: ragged action vectors");
    ensure_dir(out_dir);

    {
        std::vector<std::string> header = {"method", "seed", "episode", "step"};
        if (dim == 2) {
            header.push_back("accel_cmd");
            header.push_back("steer_cmd");
        } else {
            for (std::size_t d = 0; d < dim; ++d) header.push_back("a" + std::to_string(d));
        }
        CsvWriter csv(out_dir / "actions.csv", header);
        for (const ActionExportRow& r : rows) {
            std::vector<std::string> cells = {r.method, std::to_string(r.seed),
                                              std::to_string(r.episode),
                                              std::to_string(r.step)};
            for (double a : r.action) cells.push_back(format_double(a));
            csv.write_row(cells);
        }
    }

    std::vector<std::vector<double>> mat;
    mat.reserve(rows.size());
    for (const ActionExportRow& r : rows) mat.push_back(r.action);
    const std::size_t k = std::min<std::size_t>(2, dim);
    ActionExport out;
    out.pca = pca_project(mat, static_cast<int>(k));

    {
        CsvWriter csv(out_dir / "actions_pca.csv",
                      {"method", "seed", "episode", "step", "pc1", "pc2"});
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::vector<double>& p = out.pca.projected[i];
            csv.write_row({rows[i].method, std::to_string(rows[i].seed),
                           std::to_string(rows[i].episode), std::to_string(rows[i].step),
                           format_double(p[0]), format_double(k > 1 ? p[1] : 0.0)});
        }
    }
    {
        CsvWriter csv(out_dir / "pca_variance.csv", {"component", "explained_variance_ratio"});
        for (std::size_t c = 0; c < out.pca.explained_variance_ratio.size(); ++c)
            csv.write_row({std::to_string(c), format_double(out.pca.explained_variance_ratio[c])});
    }

    std::map<std::pair<std::string, std::uint64_t>, std::vector<Vec2>> groups;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::vector<double>& p = out.pca.projected[i];
        groups[{rows[i].method, rows[i].seed}].push_back(Vec2{p[0], k > 1 ? p[1] : 0.0});
    }
    for (const auto& [key, pts] : groups)
        out.hulls.push_back(HullArea{key.first, key.second, convex_hull_area(pts)});
    return out;
}

// ---------------------------------------------------------------------------
// Staged pipeline

struct RunPaths {
    std::filesystem::path root;

    std::filesystem::path victim_dir() const { return root / "victim"; }
    std::filesystem::path victim_policy() const { return victim_dir() / "policy.bin"; }
    std::filesystem::path victim_metrics() const { return victim_dir() / "metrics.csv"; }

    std::filesystem::path attack_dir(const std::string& method, std::uint64_t seed) const {
        return root / "attack" / method / ("seed" + std::to_string(seed));
    }
    std::filesystem::path attacker_policy(const std::string& m, std::uint64_t s) const {
        return attack_dir(m, s) / "attacker.bin";
    }
    std::filesystem::path attack_metrics(const std::string& m, std::uint64_t s) const {
        return attack_dir(m, s) / "metrics.csv";
    }

    std::filesystem::path defense_dir(std::uint64_t seed) const {
        return root / "defense" / ("seed" + std::to_string(seed));
    }
    std::filesystem::path hardened_policy(std::uint64_t s) const {
        return defense_dir(s) / "hardened.bin";
    }
    std::filesystem::path defense_metrics(std::uint64_t s) const {
        return defense_dir(s) / "metrics.csv";
    }

    std::filesystem::path eval_dir() const { return root / "eval"; }
    std::filesystem::path attack_eval_csv() const { return eval_dir() / "attack_eval.csv"; }
    std::filesystem::path defense_eval_csv() const { return eval_dir() / "defense_eval.csv"; }

    std::filesystem::path actions_dir() const { return root / "actions"; }
    std::filesystem::path summary_json() const { return root / "summary.json"; }
};

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

// Runs one pipeline stage, stamping any failure with the stage name and the
// resolved config hash so a multi-stage run points at the broken piece.
template <typename F>
inline auto run_stage(const std::string& name, std::uint64_t cfg_hash, F&& fn)
    -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError("stage '" + name + "' failed (config " + hash_hex(cfg_hash) +
                          "): " + e.what());
    } catch (const std::exception& e) {
        throw TrainingError("stage '" + name + "' failed (config " + hash_hex(cfg_hash) +
                            "): " + e.what());
    }
}

inline double last_crash_rate(const std::filesystem::path& metrics_csv) {
    const CsvTable t = read_csv(metrics_csv);
    if (t.header != metrics_csv_header())
        throw FormatError("unexpected metrics schema in " + metrics_csv.string());
    if (t.rows.empty()) throw FormatError("no metrics rows in " + metrics_csv.string());
    return std::stod(t.rows.back()[2]);
}

namespace detail {

inline nlohmann::json rate_block(const std::vector<std::uint64_t>& seeds,
                                 const std::map<std::uint64_t, double>& per_seed) {
    nlohmann::json j;
    std::vector<double> vals;
    for (std::uint64_t s : seeds) {
        const double v = per_seed.at(s);
        j["per_seed"][std::to_string(s)] = v;
        vals.push_back(v);
    }
    j["mean"] = mean_of(vals);
    j["std"] = vals.size() > 1 ? std_of(vals) : 0.0;
    return j;
}

inline std::vector<double> rates_in_seed_order(const std::vector<std::uint64_t>& seeds,
                                               const std::map<std::uint64_t, double>& per_seed) {
    std::vector<double> v;
    for (std::uint64_t s : seeds) v.push_back(per_seed.at(s));
    return v;
}

}  // namespace detail

// Full staged experiment: pretrain the victim, train every learned attack
// method per seed, evaluate the attack ladder, harden the victim against the
// strongest attacker per seed, evaluate the defense, export action clouds,
// and write a machine-readable summary. Stages that already left their
// artifacts on disk are loaded instead of re-run.
inline nlohmann::json run_experiment(const RunConfig& rc) {
    rc.validate();
    const ScenarioSpec spec = ScenarioSpec::make(rc.scenario);
    const std::uint64_t chash = config_hash(rc);
    const RunPaths paths{rc.out_dir};
    ensure_dir(paths.root);

    nlohmann::json summary;
    summary["scenario"] = to_string(rc.scenario);
    summary["config_hash"] = hash_hex(chash);
    summary["seeds"] = rc.seeds;
    summary["eval_episodes"] = rc.eval_episodes;

    // Stage: victim pretraining (shared by every seed).
    GaussianPolicy victim = run_stage("pretrain", chash, [&]() -> GaussianPolicy {
        if (std::filesystem::exists(paths.victim_policy()))
            return load_policy(paths.victim_policy());
        if (!rc.victim_ckpt.empty()) {
            if (!std::filesystem::exists(rc.victim_ckpt))
                throw ConfigError("victim checkpoint not found: " + rc.victim_ckpt);
            return load_policy(rc.victim_ckpt);
        }
        ensure_dir(paths.victim_dir());
        const PretrainSettings ps = PretrainSettings::from(rc);
        Rng seed_rng(rc.seeds.front());
        Rng stage_rng = seed_rng.derive(hash_tag("pretrain"));
        PretrainArtifacts art = pretrain_victim(spec, ps, stage_rng);
        write_metrics_csv(paths.victim_metrics(), art.metrics);
        CkptMeta meta{"victim", to_string(rc.scenario), rc.seeds.front(), art.demo_samples};
        meta.extra["goal_rate"] = art.goal_rate;
        save_policy(art.victim, paths.victim_policy(), meta);
        return art.victim;
    });
    if (std::filesystem::exists(sidecar_path(paths.victim_policy()))) {
        const CkptMeta m = read_sidecar(paths.victim_policy());
        summary["pretrain"]["samples"] = m.training_step;
        if (m.extra.contains("goal_rate")) summary["pretrain"]["goal_rate"] = m.extra["goal_rate"];
    }

    // Stage: attack training per (method, seed). MC has nothing to train; its
    // trailing-window crash rate comes from a fresh evaluation instead.
    const std::vector<AttackMethod> trained = {AttackMethod::ppo, AttackMethod::ppo_va,
                                               AttackMethod::proposed};
    std::map<std::string, std::map<std::uint64_t, GaussianPolicy>> attackers;
    std::map<std::string, std::map<std::uint64_t, double>> final_rates;

    for (AttackMethod m : trained) {
        const std::string name = to_string(m);
        for (std::uint64_t seed : rc.seeds) {
            run_stage("attack:" + name + ":seed" + std::to_string(seed), chash, [&]() {
                const std::filesystem::path ckpt = paths.attacker_policy(name, seed);
                if (std::filesystem::exists(ckpt)) {
                    attackers[name][seed] = load_policy(ckpt);
                    final_rates[name][seed] = last_crash_rate(paths.attack_metrics(name, seed));
                    return;
                }
                ensure_dir(paths.attack_dir(name, seed));
                const StageConfig cfg = build_attacker(m, rc.attack_stage());
                Rng seed_rng(seed);
                Rng stage_rng = seed_rng.derive(hash_tag("attack|" + name));
                AttackArtifacts art = train_attack(victim, spec, cfg, stage_rng);
                write_metrics_csv(paths.attack_metrics(name, seed), art.metrics);
                CkptMeta meta{"attacker", to_string(rc.scenario), seed, art.episodes_total};
                meta.extra["method"] = name;
                save_policy(art.attacker, ckpt, meta);
                attackers[name][seed] = std::move(art.attacker);
                final_rates[name][seed] = art.metrics.back().crash_rate;
            });
        }
    }
    for (std::uint64_t seed : rc.seeds) {
        run_stage("attack:mc:seed" + std::to_string(seed), chash, [&]() {
            Rng seed_rng(seed);
            Rng stage_rng = seed_rng.derive(hash_tag("attack|mc"));
            const EvalOutcome out = evaluate(spec, Actor::from_policy(victim),
                                             Actor::route_follower(), detail::kCrashWindow,
                                             stage_rng, false, rc.weights);
            final_rates["mc"][seed] = out.crash_rate();
        });
    }

    {
        nlohmann::json atk;
        for (const auto& [name, per_seed] : final_rates)
            atk["final_crash_rate"][name] = detail::rate_block(rc.seeds, per_seed);
        const std::vector<double> r_prop =
            detail::rates_in_seed_order(rc.seeds, final_rates.at("proposed"));
        const std::vector<double> r_ppo =
            detail::rates_in_seed_order(rc.seeds, final_rates.at("ppo"));
        const std::vector<double> r_va =
            detail::rates_in_seed_order(rc.seeds, final_rates.at("ppo-va"));
        const std::vector<double> r_mc =
            detail::rates_in_seed_order(rc.seeds, final_rates.at("mc"));
        atk["mw_p"]["proposed_gt_ppo"] = mann_whitney_p_greater(r_prop, r_ppo);
        atk["mw_p"]["ppo_gt_mc"] = mann_whitney_p_greater(r_ppo, r_mc);
        atk["mw_p"]["ppo_va_vs_ppo_two_sided"] = mann_whitney_p_two_sided(r_va, r_ppo);
        const double mean_ppo = mean_of(r_ppo);
        atk["gap_ratio_proposed_over_ppo"] =
            mean_ppo > 0.0 ? mean_of(r_prop) / mean_ppo : 0.0;
        summary["attack"] = atk;
    }

    // Stage: frozen-policy evaluation of the attack ladder.
    std::map<std::string, std::map<std::uint64_t, double>> eval_non_crash;
    run_stage("eval:attack", chash, [&]() {
        ensure_dir(paths.eval_dir());
        CsvWriter csv(paths.attack_eval_csv(),
                      {"method", "seed", "episodes", "collisions", "goals", "timeouts",
                       "off_roads", "crash_rate", "non_crash_rate"});
        const std::vector<std::string> methods = {"mc", "ppo", "ppo-va", "proposed"};
        for (const std::string& name : methods) {
            for (std::uint64_t seed : rc.seeds) {
                Rng seed_rng(seed);
                Rng cell_rng = seed_rng.derive(hash_tag("eval|" + name));
                const Actor attack_actor = name == "mc"
                                               ? Actor::route_follower()
                                               : Actor::policy_mean(attackers.at(name).at(seed));
                const EvalOutcome out =
                    evaluate(spec, Actor::policy_mean(victim), attack_actor, rc.eval_episodes,
                             cell_rng, false, rc.weights);
                eval_non_crash[name][seed] = out.non_crash_rate();
                csv.write_row({name, std::to_string(seed), std::to_string(out.episodes),
                               std::to_string(out.collisions), std::to_string(out.goals),
                               std::to_string(out.timeouts), std::to_string(out.off_roads),
                               format_double(out.crash_rate()),
                               format_double(out.non_crash_rate())});
            }
        }
    });
    for (const auto& [name, per_seed] : eval_non_crash)
        summary["eval"]["non_crash_rate"][name] = detail::rate_block(rc.seeds, per_seed);

    // Stage: defense per seed against that seed's strongest attacker.
    std::map<std::uint64_t, GaussianPolicy> hardened;
    for (std::uint64_t seed : rc.seeds) {
        run_stage("defense:seed" + std::to_string(seed), chash, [&]() {
            const std::filesystem::path ckpt = paths.hardened_policy(seed);
            if (std::filesystem::exists(ckpt)) {
                hardened[seed] = load_policy(ckpt);
                return;
            }
            ensure_dir(paths.defense_dir(seed));
            Rng seed_rng(seed);
            Rng stage_rng = seed_rng.derive(hash_tag("defense"));
            DefenseArtifacts art = train_defense(attackers.at("proposed").at(seed), victim,
                                                 spec, rc.defense_stage(), stage_rng);
            write_metrics_csv(paths.defense_metrics(seed), art.metrics);
            CkptMeta meta{"victim_hardened", to_string(rc.scenario), seed, art.episodes_total};
            save_policy(art.victim, ckpt, meta);
            hardened[seed] = std::move(art.victim);
        });
    }

    // Stage: defense evaluation. Pre-defense rows give the paired baseline.
    std::map<std::string, std::map<std::uint64_t, double>> defense_non_crash;
    run_stage("eval:defense", chash, [&]() {
        ensure_dir(paths.eval_dir());
        CsvWriter csv(paths.defense_eval_csv(),
                      {"victim", "attack", "seed", "episodes", "collisions", "crash_rate",
                       "non_crash_rate"});
        struct Cell {
            const char* victim_name;
            const char* attack_name;
        };
        const std::vector<Cell> cells = {{"hardened", "mc"},
                                         {"hardened", "proposed"},
                                         {"base", "proposed"}};
        for (const Cell& c : cells) {
            for (std::uint64_t seed : rc.seeds) {
                const GaussianPolicy& v =
                    std::string(c.victim_name) == "hardened" ? hardened.at(seed) : victim;
                const Actor attack_actor =
                    std::string(c.attack_name) == "mc"
                        ? Actor::route_follower()
                        : Actor::policy_mean(attackers.at("proposed").at(seed));
                Rng seed_rng(seed);
                Rng cell_rng = seed_rng.derive(hash_tag(
                    std::string("defense_eval|") + c.victim_name + "|" + c.attack_name));
                const EvalOutcome out = evaluate(spec, Actor::policy_mean(v), attack_actor,
                                                 rc.eval_episodes, cell_rng, false, rc.weights);
                const std::string key = std::string(c.victim_name) + "_vs_" + c.attack_name;
                defense_non_crash[key][seed] = out.non_crash_rate();
                csv.write_row({c.victim_name, c.attack_name, std::to_string(seed),
                               std::to_string(out.episodes), std::to_string(out.collisions),
                               format_double(out.crash_rate()),
                               format_double(out.non_crash_rate())});
            }
        }
    });
    {
        nlohmann::json d;
        for (const auto& [key, per_seed] : defense_non_crash)
            d["non_crash_rate"][key] = detail::rate_block(rc.seeds, per_seed);
        d["mw_p_hardened_gt_base_vs_proposed"] = mann_whitney_p_greater(
            detail::rates_in_seed_order(rc.seeds, defense_non_crash.at("hardened_vs_proposed")),
            detail::rates_in_seed_order(rc.seeds, defense_non_crash.at("base_vs_proposed")));
        summary["defense"] = d;
    }

    // Stage: action export. A fixed-size evaluation per (method, seed) keeps
    // the clouds comparable across methods; one PCA basis is fit jointly.
    run_stage("export", chash, [&]() {
        const int export_episodes = std::min(rc.eval_episodes, 100);
        std::vector<ActionExportRow> rows;
        const std::vector<std::string> methods = {"mc", "ppo", "ppo-va", "proposed"};
        for (const std::string& name : methods) {
            for (std::uint64_t seed : rc.seeds) {
                Rng seed_rng(seed);
                Rng cell_rng = seed_rng.derive(hash_tag("export|" + name));
                const Actor attack_actor = name == "mc"
                                               ? Actor::route_follower()
                                               : Actor::policy_mean(attackers.at(name).at(seed));
                const EvalOutcome out =
                    evaluate(spec, Actor::policy_mean(victim), attack_actor, export_episodes,
                             cell_rng, true, rc.weights);
                for (const ActionRow& a : out.victim_actions)
                    rows.push_back(ActionExportRow{name, seed, a.episode, a.step, a.action});
            }
        }
        const ActionExport exp = export_actions(rows, paths.actions_dir());
        nlohmann::json p;
        p["explained_variance_ratio"] = exp.pca.explained_variance_ratio;
        for (const HullArea& h : exp.hulls)
            p["hull_area"][h.method][std::to_string(h.seed)] = h.area;
        int proposed_wins = 0;
        for (std::uint64_t seed : rc.seeds) {
            const double a_prop = p["hull_area"]["proposed"][std::to_string(seed)];
            const double a_ppo = p["hull_area"]["ppo"][std::to_string(seed)];
            if (a_prop >= a_ppo) ++proposed_wins;
        }
        p["proposed_hull_ge_ppo_seeds"] = proposed_wins;
        summary["pca"] = p;
    });

    write_json(paths.summary_json(), summary);
    return summary;
}

}  // namespace vcat

// Command-line front end: victim pretraining, attack/defense training,
// evaluation, the cross-training matrix, action export, and the full staged
// pipeline. Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vcat/harness.hpp"

namespace {

using namespace vcat;

struct CliArgs {
    std::string config_path;
    std::string out_dir;
    std::string method;
    std::string scenario;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common_options(CLI::App* sub, CliArgs& a) {
    sub->add_option("--config", a.config_path, "INI run configuration file");
    sub->add_option("--seed", a.seed, "Override the seed list with a single seed");
    sub->add_option("--out", a.out_dir, "Output directory root");
    sub->add_option("--method", a.method, "Attack method: mc, ppo, ppo-va, proposed");
    sub->add_option("--scenario", a.scenario, "Scenario: nsjcr, sjrt, sjlt");
}

RunConfig resolve_config(const CliArgs& a) {
    RunConfig rc;
    if (!a.config_path.empty()) rc = load_run_config(a.config_path);
    if (!a.out_dir.empty()) rc.out_dir = a.out_dir;
    if (!a.method.empty()) rc.method = method_from_string(a.method);
    if (!a.scenario.empty()) rc.scenario = scenario_from_string(a.scenario);
    if (a.seed_given) rc.seeds = {a.seed};
    rc.validate();
    return rc;
}

GaussianPolicy load_victim(const RunConfig& rc, const RunPaths& paths) {
    if (!rc.victim_ckpt.empty()) {
        if (!std::filesystem::exists(rc.victim_ckpt))
            throw ConfigError("victim checkpoint not found: " + rc.victim_ckpt);
        return load_policy(rc.victim_ckpt);
    }
    if (std::filesystem::exists(paths.victim_policy()))
        return load_policy(paths.victim_policy());
    throw ConfigError("no victim checkpoint: run pretrain-victim first or set "
                      "[paths] victim_ckpt");
}

std::filesystem::path attacker_ckpt_for(const RunConfig& rc, const RunPaths& paths,
                                        std::uint64_t seed) {
    if (!rc.attacker_ckpt.empty()) {
        if (!std::filesystem::exists(rc.attacker_ckpt))
            throw ConfigError("attacker checkpoint not found: " + rc.attacker_ckpt);
        return rc.attacker_ckpt;
    }
    const std::filesystem::path p = paths.attacker_policy(to_string(rc.method), seed);
    if (!std::filesystem::exists(p))
        throw ConfigError("no attacker checkpoint for method " + to_string(rc.method) +
                          ", seed " + std::to_string(seed) +
                          ": run train-attack first or set [paths] attacker_ckpt");
    return p;
}

int cmd_pretrain(const RunConfig& rc) {
    const ScenarioSpec spec = ScenarioSpec::make(rc.scenario);
    const RunPaths paths{rc.out_dir};
    ensure_dir(paths.victim_dir());
    const PretrainSettings ps = PretrainSettings::from(rc);
    Rng seed_rng(rc.seeds.front());
    Rng rng = seed_rng.derive(hash_tag("pretrain"));
    PretrainArtifacts art = pretrain_victim(spec, ps, rng);
    write_metrics_csv(paths.victim_metrics(), art.metrics);
    CkptMeta meta{"victim", to_string(rc.scenario), rc.seeds.front(), art.demo_samples};
    meta.extra["goal_rate"] = art.goal_rate;
    save_policy(art.victim, paths.victim_policy(), meta);
    std::cout << "victim: " << paths.victim_policy().string() << "\n"
              << "goal_rate: " << format_double(art.goal_rate) << "\n"
              << "samples: " << art.demo_samples << "\n";
    return 0;
}

int cmd_train_attack(const RunConfig& rc) {
    if (rc.method == AttackMethod::mc)
        throw ConfigError("the mc baseline has no trainable attacker");
    const ScenarioSpec spec = ScenarioSpec::make(rc.scenario);
    const RunPaths paths{rc.out_dir};
    const GaussianPolicy victim = load_victim(rc, paths);
    const std::string name = to_string(rc.method);
    for (std::uint64_t seed : rc.seeds) {
        ensure_dir(paths.attack_dir(name, seed));
        const StageConfig cfg = build_attacker(rc.method, rc.attack_stage());
        Rng seed_rng(seed);
        Rng rng = seed_rng.derive(hash_tag("attack|" + name));
        AttackArtifacts art = train_attack(victim, spec, cfg, rng);
        write_metrics_csv(paths.attack_metrics(name, seed), art.metrics);
        CkptMeta meta{"attacker", to_string(rc.scenario), seed, art.episodes_total};
        meta.extra["method"] = name;
        save_policy(art.attacker, paths.attacker_policy(name, seed), meta);
        std::cout << name << " seed " << seed << ": crash_rate "
                  << format_double(art.metrics.back().crash_rate) << " over "
                  << art.episodes_total << " episodes\n";
    }
    return 0;
}

int cmd_train_defense(const RunConfig& rc) {
    const ScenarioSpec spec = ScenarioSpec::make(rc.scenario);
    const RunPaths paths{rc.out_dir};
    const GaussianPolicy victim = load_victim(rc, paths);
    for (std::uint64_t seed : rc.seeds) {
        const GaussianPolicy attacker = load_policy(attacker_ckpt_for(rc, paths, seed));
        ensure_dir(paths.defense_dir(seed));
        Rng seed_rng(seed);
        Rng rng = seed_rng.derive(hash_tag("defense"));
        DefenseArtifacts art = train_defense(attacker, victim, spec, rc.defense_stage(), rng);
        write_metrics_csv(paths.defense_metrics(seed), art.metrics);
        CkptMeta meta{"victim_hardened", to_string(rc.scenario), seed, art.episodes_total};
        save_policy(art.victim, paths.hardened_policy(seed), meta);
        std::cout << "hardened seed " << seed << ": crash_rate "
                  << format_double(art.metrics.back().crash_rate) << " over "
                  << art.episodes_total << " episodes\n";
    }
    return 0;
}

int cmd_evaluate(const RunConfig& rc) {
    const ScenarioSpec spec = ScenarioSpec::make(rc.scenario);
    const RunPaths paths{rc.out_dir};
    const GaussianPolicy victim = load_victim(rc, paths);
    const std::string name = to_string(rc.method);
    ensure_dir(paths.eval_dir());
    CsvWriter csv(paths.eval_dir() / ("evaluate_" + name + ".csv"),
                  {"method", "seed", "episodes", "collisions", "goals", "timeouts",
                   "off_roads", "crash_rate", "non_crash_rate"});
    std::vector<double> rates;
    for (std::uint64_t seed : rc.seeds) {
        GaussianPolicy attacker_policy;
        Actor attack_actor = Actor::route_follower();
        if (rc.method != AttackMethod::mc) {
            attacker_policy = load_policy(attacker_ckpt_for(rc, paths, seed));
            attack_actor = Actor::policy_mean(attacker_policy);
        }
        Rng seed_rng(seed);
        Rng rng = seed_rng.derive(hash_tag("eval|" + name));
        const EvalOutcome out = evaluate(spec, Actor::policy_mean(victim), attack_actor,
                                         rc.eval_episodes, rng, false, rc.weights);
        rates.push_back(out.crash_rate());
        csv.write_row({name, std::to_string(seed), std::to_string(out.episodes),
                       std::to_string(out.collisions), std::to_string(out.goals),
                       std::to_string(out.timeouts), std::to_string(out.off_roads),
                       format_double(out.crash_rate()), format_double(out.non_crash_rate())});
        std::cout << name << " seed " << seed << ": crash_rate "
                  << format_double(out.crash_rate()) << " (" << out.collisions << "/"
                  << out.episodes << ")\n";
    }
    std::cout << name << " mean crash_rate: " << format_double(mean_of(rates)) << " +- "
              << format_double(std_of(rates)) << "\n";
    return 0;
}

int cmd_cross_eval(const RunConfig& rc) {
    const ScenarioSpec spec = ScenarioSpec::make(rc.scenario);
    const RunPaths paths{rc.out_dir};

    std::map<std::string, GaussianPolicy> victim_store;
    victim_store["base"] = load_victim(rc, paths);
    std::filesystem::path hardened = rc.hardened_ckpt;
    if (hardened.empty()) {
        const std::filesystem::path tree = paths.hardened_policy(rc.seeds.front());
        if (std::filesystem::exists(tree)) hardened = tree;
    } else if (!std::filesystem::exists(hardened)) {
        throw ConfigError("hardened checkpoint not found: " + hardened.string());
    }
    if (!hardened.empty()) victim_store["proposed"] = load_policy(hardened);

    std::vector<NamedVictim> victims;
    for (const auto& [tag, policy] : victim_store)
        victims.push_back(NamedVictim{tag, &policy});

    std::map<std::string, GaussianPolicy> attack_store;
    std::vector<NamedAttack> attacks;
    attacks.push_back(NamedAttack{"mc", Actor::route_follower()});
    if (rc.method != AttackMethod::mc) {
        const std::string name = to_string(rc.method);
        attack_store[name] = load_policy(attacker_ckpt_for(rc, paths, rc.seeds.front()));
        attacks.push_back(NamedAttack{name, Actor::policy_mean(attack_store.at(name))});
    }

    const std::vector<EvalMatrixCell> cells =
        cross_evaluate(victims, attacks, rc.eval_episodes, rc.seeds, rc.weights, &spec);

    ensure_dir(paths.root);
    CsvWriter csv(paths.root / "cross_eval.csv",
                  {"train_method", "eval_method", "non_crash_mean", "non_crash_std"});
    for (const EvalMatrixCell& c : cells) {
        csv.write_row({c.train_method, c.eval_method, format_double(c.non_crash_mean),
                       format_double(c.non_crash_std)});
        std::cout << "victim[" << c.train_method << "] vs attack[" << c.eval_method
                  << "]: non_crash " << format_double(c.non_crash_mean) << " +- "
                  << format_double(c.non_crash_std) << "\n";
    }
    return 0;
}

int cmd_export_actions(const RunConfig& rc) {
    const ScenarioSpec spec = ScenarioSpec::make(rc.scenario);
    const RunPaths paths{rc.out_dir};
    const GaussianPolicy victim = load_victim(rc, paths);
    const std::string name = to_string(rc.method);
    const int episodes = std::min(rc.eval_episodes, 100);

    std::vector<ActionExportRow> rows;
    for (std::uint64_t seed : rc.seeds) {
        GaussianPolicy attacker_policy;
        Actor attack_actor = Actor::route_follower();
        if (rc.method != AttackMethod::mc) {
            attacker_policy = load_policy(attacker_ckpt_for(rc, paths, seed));
            attack_actor = Actor::policy_mean(attacker_policy);
        }
        Rng seed_rng(seed);
        Rng rng = seed_rng.derive(hash_tag("export|" + name));
        const EvalOutcome out = evaluate(spec, Actor::policy_mean(victim), attack_actor,
                                         episodes, rng, true, rc.weights);
        for (const ActionRow& a : out.victim_actions)
            rows.push_back(ActionExportRow{name, seed, a.episode, a.step, a.action});
    }
    const ActionExport exp = export_actions(rows, paths.actions_dir());
    std::cout << "wrote " << rows.size() << " action rows to "
              << paths.actions_dir().string() << "\n";
    for (std::size_t c = 0; c < exp.pca.explained_variance_ratio.size(); ++c)
        std::cout << "pc" << c + 1 << " variance ratio: "
                  << format_double(exp.pca.explained_variance_ratio[c]) << "\n";
    for (const HullArea& h : exp.hulls)
        std::cout << h.method << " seed " << h.seed
                  << " hull area: " << format_double(h.area) << "\n";
    return 0;
}

int cmd_run(const RunConfig& rc) {
    const nlohmann::json summary = run_experiment(rc);
    const RunPaths paths{rc.out_dir};
    std::cout << "summary: " << paths.summary_json().string() << "\n";
    std::cout << summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-vehicle intersection lab: adversarial traffic agents against a "
                 "learned driving policy"};
    app.require_subcommand(1);
    CliArgs a;

    CLI::App* sub_pretrain =
        app.add_subcommand("pretrain-victim", "Train the base driving policy");
    CLI::App* sub_attack =
        app.add_subcommand("train-attack", "Train an attacker against the frozen victim");
    CLI::App* sub_defense =
        app.add_subcommand("train-defense", "Harden the victim against a frozen attacker");
    CLI::App* sub_eval =
        app.add_subcommand("evaluate", "Frozen-policy evaluation of one attack method");
    CLI::App* sub_cross =
        app.add_subcommand("cross-eval", "Non-crash matrix across victims and attacks");
    CLI::App* sub_export =
        app.add_subcommand("export-actions", "Export victim action vectors with a PCA view");
    CLI::App* sub_run = app.add_subcommand("run", "Full staged pipeline");
    for (CLI::App* sub : {sub_pretrain, sub_attack, sub_defense, sub_eval, sub_cross,
                          sub_export, sub_run})
        add_common_options(sub, a);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    CLI::App* chosen = app.get_subcommands().front();
    a.seed_given = chosen->count("--seed") > 0;

    try {
        const RunConfig rc = resolve_config(a);
        if (chosen == sub_pretrain) return cmd_pretrain(rc);
        if (chosen == sub_attack) return cmd_train_attack(rc);
        if (chosen == sub_defense) return cmd_train_defense(rc);
        if (chosen == sub_eval) return cmd_evaluate(rc);
        if (chosen == sub_cross) return cmd_cross_eval(rc);
        if (chosen == sub_export) return cmd_export_actions(rc);
        if (chosen == sub_run) return cmd_run(rc);
        throw UsageError("unhandled subcommand");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

#pragma once

// INI-style run configuration. Parsing is fail-fast: unknown sections or
// keys, duplicate keys, and malformed values all raise ConfigError so a
// typo cannot silently fall back to a default.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vcat/baselines.hpp"
#include "vcat/errors.hpp"
#include "vcat/io.hpp"
#include "vcat/ppo.hpp"
#include "vcat/scenario.hpp"
#include "vcat/trainer.hpp"
#include "vcat/vuln.hpp"

namespace vcat {

struct ParsedConfig {
    // section -> key -> value, verbatim strings
    std::map<std::string, std::map<std::string, std::string>> sections;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

inline double parse_double_value(const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        double v = std::stod(raw, &used);
        if (used != raw.size()) throw ConfigError("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + raw + "'");
    }
}

inline long long parse_int_value(const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(raw, &used);
        if (used != raw.size()) throw ConfigError("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + raw + "'");
    }
}

inline bool parse_bool_value(const std::string& key, const std::string& raw) {
    if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + raw + "'");
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& raw) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("config key '" + key + "': empty seed entry");
        try {
            std::size_t used = 0;
            unsigned long long v = std::stoull(item, &used);
            if (used != item.size()) throw ConfigError("");
            seeds.push_back(static_cast<std::uint64_t>(v));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': bad seed '" + item + "'");
        }
    }
    if (seeds.empty()) throw ConfigError("config key '" + key + "': no seeds given");
    return seeds;
}

}  // namespace detail

inline ParsedConfig parse_ini(std::istream& in, const std::string& origin) {
    ParsedConfig cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        std::string where = origin + ":" + std::to_string(lineno);
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3)
                throw ConfigError(where + ": malformed section header '" + t + "'");
            section = detail::trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value', got '" + t + "'");
        if (section.empty())
            throw ConfigError(where + ": key appears before any [section]");
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        auto& sec = cfg.sections[section];
        if (sec.count(key))
            throw ConfigError(where + ": duplicate key '" + key + "' in [" + section + "]");
        sec[key] = value;
    }
    return cfg;
}

inline ParsedConfig parse_ini_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_ini(in, path.filename().string());
}

// Everything a full run needs: scenario, method, seeds, stage budgets, and
// the optimizer settings shared by all learned components.
struct RunConfig {
    ScenarioId scenario = ScenarioId::nsjcr;
    AttackMethod method = AttackMethod::proposed;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string out_dir = "out";
    bool timing = false;

    PpoConfig ppo;
    RewardWeights weights;

    int attack_episode_budget = 2000;
    int attack_max_iterations = 10000;
    int attack_prior_demo_samples = 4000;
    double attack_prior_demo_noise = 0.3;
    int attack_prior_clone_epochs = 20;
    int attack_prior_clone_batch = 128;
    double attack_prior_clone_lr = 1e-3;

    int defense_episode_budget = 2000;
    int defense_max_iterations = 10000;
    bool defense_early_stop = true;
    int defense_early_stop_window = 10;
    double defense_early_stop_delta = 0.02;
    int defense_early_stop_min_iters = 15;

    int pretrain_demo_samples = 30000;
    double pretrain_demo_noise = 0.3;
    int pretrain_clone_epochs = 40;
    int pretrain_clone_batch = 128;
    double pretrain_clone_lr = 1e-3;
    double pretrain_init_log_std = -0.5;
    int pretrain_eval_episodes = 300;
    double pretrain_goal_rate_floor = 0.9;

    int eval_episodes = 200;

    std::string victim_ckpt;
    std::string attacker_ckpt;
    std::string hardened_ckpt;

    void validate() const {
        ppo.validate();
        weights.validate();
        if (seeds.empty()) throw ConfigError("run config: seeds must be non-empty");
        if (eval_episodes < 100)
            throw ConfigError("run config: eval episodes must be >= 100, got " +
                              std::to_string(eval_episodes));
        if (attack_episode_budget < 1 || defense_episode_budget < 1)
            throw ConfigError("run config: episode budgets must be positive");
        if (attack_max_iterations < 1 || defense_max_iterations < 1)
            throw ConfigError("run config: iteration caps must be positive");
        if (attack_prior_demo_samples < 0)
            throw ConfigError("run config: attack prior_demo_samples must be >= 0");
        if (attack_prior_demo_samples > 0 &&
            (attack_prior_clone_epochs < 1 || attack_prior_clone_batch < 1 ||
             !(attack_prior_clone_lr > 0.0) || attack_prior_demo_noise < 0.0))
            throw ConfigError("run config: attack prior clone settings must be positive and "
                              "noise non-negative");
        if (pretrain_demo_samples < 1 || pretrain_clone_epochs < 1 ||
            pretrain_clone_batch < 1 || pretrain_eval_episodes < 1)
            throw ConfigError("run config: pretrain budgets must be positive");
        if (!(pretrain_clone_lr > 0.0) || pretrain_demo_noise < 0.0)
            throw ConfigError("run config: pretrain clone_lr must be positive and "
                              "demo_noise non-negative");
        if (!(pretrain_goal_rate_floor >= 0.0 && pretrain_goal_rate_floor <= 1.0))
            throw ConfigError("run config: goal-rate floor must lie in [0, 1]");
    }

    StageConfig attack_stage() const {
        StageConfig s;
        s.ppo = ppo;
        s.weights = weights;
        s.episode_budget = attack_episode_budget;
        s.max_iterations = attack_max_iterations;
        s.prior_demo_samples = attack_prior_demo_samples;
        s.prior_demo_noise = attack_prior_demo_noise;
        s.prior_clone_epochs = attack_prior_clone_epochs;
        s.prior_clone_batch = attack_prior_clone_batch;
        s.prior_clone_lr = attack_prior_clone_lr;
        s.timing = timing;
        return s;
    }

    StageConfig defense_stage() const {
        StageConfig s;
        s.ppo = ppo;
        s.weights = weights;
        s.episode_budget = defense_episode_budget;
        s.max_iterations = defense_max_iterations;
        s.prior_demo_samples = 0; // the defense victim starts from its pretrained weights
        s.early_stop = defense_early_stop;
        s.early_stop_window = defense_early_stop_window;
        s.early_stop_delta = defense_early_stop_delta;
        s.early_stop_min_iters = defense_early_stop_min_iters;
        s.timing = timing;
        return s;
    }
};

namespace detail {

template <typename F>
inline void consume_keys(const ParsedConfig& cfg, const std::string& section, F&& handler) {
    auto it = cfg.sections.find(section);
    if (it == cfg.sections.end()) return;
    for (const auto& [key, value] : it->second)
        if (!handler(key, value))
            throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
}

}  // namespace detail

inline RunConfig run_config_from(const ParsedConfig& cfg) {
    static const std::vector<std::string> known_sections = {
        "run", "ppo", "rewards", "attack", "defense", "pretrain", "eval", "paths"};
    for (const auto& [name, _] : cfg.sections) {
        bool known = false;
        for (const std::string& s : known_sections) known |= (s == name);
        if (!known) throw ConfigError("config: unknown section [" + name + "]");
    }

    RunConfig rc;
    detail::consume_keys(cfg, "run", [&](const std::string& k, const std::string& v) {
        if (k == "scenario") rc.scenario = scenario_from_string(v);
        else if (k == "method") rc.method = method_from_string(v);
        else if (k == "seeds") rc.seeds = detail::parse_seed_list(k, v);
        else if (k == "out_dir") rc.out_dir = v;
        else if (k == "timing") rc.timing = detail::parse_bool_value(k, v);
        else return false;
        return true;
    });
    detail::consume_keys(cfg, "ppo", [&](const std::string& k, const std::string& v) {
        PpoConfig& p = rc.ppo;
        if (k == "clip_eps") p.clip_eps = detail::parse_double_value(k, v);
        else if (k == "gamma") p.gamma = detail::parse_double_value(k, v);
        else if (k == "lambda_curiosity") p.lambda_curiosity = detail::parse_double_value(k, v);
        else if (k == "epochs_per_update")
            p.epochs_per_update = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "batch_size") p.batch_size = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "buffer_capacity")
            p.buffer_capacity = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "lr_policy") p.lr_policy = detail::parse_double_value(k, v);
        else if (k == "lr_value") p.lr_value = detail::parse_double_value(k, v);
        else if (k == "lr_van") p.lr_van = detail::parse_double_value(k, v);
        else if (k == "lr_rnd") p.lr_rnd = detail::parse_double_value(k, v);
        else if (k == "value_epochs")
            p.value_epochs = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "normalize_advantages")
            p.normalize_advantages = detail::parse_bool_value(k, v);
        else if (k == "intrinsic_uses_victim_reward")
            p.intrinsic_uses_victim_reward = detail::parse_bool_value(k, v);
        else if (k == "init_log_std") p.init_log_std = detail::parse_double_value(k, v);
        else return false;
        return true;
    });
    detail::consume_keys(cfg, "rewards", [&](const std::string& k, const std::string& v) {
        if (k == "lambda1") rc.weights.lambda1 = detail::parse_double_value(k, v);
        else if (k == "lambda2") rc.weights.lambda2 = detail::parse_double_value(k, v);
        else if (k == "lambda3") rc.weights.lambda3 = detail::parse_double_value(k, v);
        else return false;
        return true;
    });
    detail::consume_keys(cfg, "attack", [&](const std::string& k, const std::string& v) {
        if (k == "episode_budget")
            rc.attack_episode_budget = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "max_iterations")
            rc.attack_max_iterations = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "prior_demo_samples")
            rc.attack_prior_demo_samples = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "prior_demo_noise")
            rc.attack_prior_demo_noise = detail::parse_double_value(k, v);
        else if (k == "prior_clone_epochs")
            rc.attack_prior_clone_epochs = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "prior_clone_batch")
            rc.attack_prior_clone_batch = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "prior_clone_lr")
            rc.attack_prior_clone_lr = detail::parse_double_value(k, v);
        else return false;
        return true;
    });
    detail::consume_keys(cfg, "defense", [&](const std::string& k, const std::string& v) {
        if (k == "episode_budget")
            rc.defense_episode_budget = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "max_iterations")
            rc.defense_max_iterations = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "early_stop") rc.defense_early_stop = detail::parse_bool_value(k, v);
        else if (k == "early_stop_window")
            rc.defense_early_stop_window = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "early_stop_delta")
            rc.defense_early_stop_delta = detail::parse_double_value(k, v);
        else if (k == "early_stop_min_iters")
            rc.defense_early_stop_min_iters = static_cast<int>(detail::parse_int_value(k, v));
        else return false;
        return true;
    });
    detail::consume_keys(cfg, "pretrain", [&](const std::string& k, const std::string& v) {
        if (k == "demo_samples")
            rc.pretrain_demo_samples = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "demo_noise")
            rc.pretrain_demo_noise = detail::parse_double_value(k, v);
        else if (k == "clone_epochs")
            rc.pretrain_clone_epochs = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "clone_batch")
            rc.pretrain_clone_batch = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "clone_lr") rc.pretrain_clone_lr = detail::parse_double_value(k, v);
        else if (k == "init_log_std")
            rc.pretrain_init_log_std = detail::parse_double_value(k, v);
        else if (k == "eval_episodes")
            rc.pretrain_eval_episodes = static_cast<int>(detail::parse_int_value(k, v));
        else if (k == "goal_rate_floor")
            rc.pretrain_goal_rate_floor = detail::parse_double_value(k, v);
        else return false;
        return true;
    });
    detail::consume_keys(cfg, "eval", [&](const std::string& k, const std::string& v) {
        if (k == "episodes") rc.eval_episodes = static_cast<int>(detail::parse_int_value(k, v));
        else return false;
        return true;
    });
    detail::consume_keys(cfg, "paths", [&](const std::string& k, const std::string& v) {
        if (k == "victim_ckpt") rc.victim_ckpt = v;
        else if (k == "attacker_ckpt") rc.attacker_ckpt = v;
        else if (k == "hardened_ckpt") rc.hardened_ckpt = v;
        else return false;
        return true;
    });
    rc.validate();
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from(parse_ini_file(path));
}

// Stable fingerprint of the fully-resolved configuration, reported alongside
// stage failures and in the run summary.
inline std::uint64_t config_hash(const RunConfig& rc) {
    std::ostringstream os;
    os << to_string(rc.scenario) << '|' << to_string(rc.method) << '|';
    for (std::uint64_t s : rc.seeds) os << s << ',';
    os << '|' << rc.timing << '|' << format_double(rc.ppo.clip_eps) << '|'
       << format_double(rc.ppo.gamma) << '|' << format_double(rc.ppo.lambda_curiosity) << '|'
       << rc.ppo.epochs_per_update << '|' << rc.ppo.batch_size << '|' << rc.ppo.buffer_capacity
       << '|' << format_double(rc.ppo.lr_policy) << '|' << format_double(rc.ppo.lr_value) << '|'
       << format_double(rc.ppo.lr_van) << '|' << format_double(rc.ppo.lr_rnd) << '|'
       << rc.ppo.value_epochs << '|' << rc.ppo.normalize_advantages << '|'
       << rc.ppo.intrinsic_uses_victim_reward << '|' << format_double(rc.ppo.init_log_std) << '|'
       << format_double(rc.weights.lambda1) << '|' << format_double(rc.weights.lambda2) << '|'
       << format_double(rc.weights.lambda3) << '|' << rc.attack_episode_budget << '|'
       << rc.attack_max_iterations << '|' << rc.attack_prior_demo_samples << '|'
       << format_double(rc.attack_prior_demo_noise) << '|' << rc.attack_prior_clone_epochs << '|'
       << rc.attack_prior_clone_batch << '|' << format_double(rc.attack_prior_clone_lr) << '|'
       << rc.defense_episode_budget << '|'
       << rc.defense_max_iterations << '|' << rc.defense_early_stop << '|'
       << rc.defense_early_stop_window << '|' << format_double(rc.defense_early_stop_delta) << '|'
       << rc.defense_early_stop_min_iters << '|' << rc.pretrain_demo_samples << '|'
       << format_double(rc.pretrain_demo_noise) << '|' << rc.pretrain_clone_epochs << '|'
       << rc.pretrain_clone_batch << '|' << format_double(rc.pretrain_clone_lr) << '|'
       << format_double(rc.pretrain_init_log_std) << '|' << rc.pretrain_eval_episodes << '|'
       << format_double(rc.pretrain_goal_rate_floor) << '|' << rc.eval_episodes;
    return hash_tag(os.str());
}

}  // namespace vcat

#include "vrftlab/config.hpp"

#include <charconv>
#include <cstdlib>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "vrftlab/csv.hpp"
#include "vrftlab/error.hpp"

namespace vrftlab {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
    throw Error(ErrorKind::ConfigError, key + " = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& value) {
    try {
        return parse_double(value);
    } catch (const Error&) {
        bad(key, value, "not a number");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const std::string v = trim(value);
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        bad(key, value, "not a non-negative integer");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "true") return true;
    if (v == "false") return false;
    bad(key, value, "expected true or false");
}

// Section -> key -> setter. Keeps the schema in one place.
using Setter = void (*)(ExperimentConfig&, const std::string&, const std::string&);

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> s{
        {"study",
         {
             {"master_seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.master_seed = to_u64(k, v); }},
             {"n_seeds", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.n_seeds = to_u64(k, v); }},
             {"scenarios",
              [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                  c.scenarios.clear();
                  for (const auto& item : split(v, ',')) {
                      try {
                          c.scenarios.push_back(scenario_from_string(item));
                      } catch (const Error&) {
                          bad(k, v, "scenarios are A and/or B");
                      }
                  }
              }},
             {"n_points",
              [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                  c.n_points.clear();
                  for (const auto& item : split(v, ',')) c.n_points.push_back(to_u64(k, item));
              }},
             {"shared_weather", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.shared_weather = to_bool(k, v); }},
             {"output_dir", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = trim(v); }},
             {"training_u0", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.training_u0 = to_double(k, v); }},
         }},
        {"plant",
         {
             {"c_air", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.plant.c_air = to_double(k, v); }},
             {"c_wall", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.plant.c_wall = to_double(k, v); }},
             {"r_aw", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.plant.r_aw = to_double(k, v); }},
             {"r_wo", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.plant.r_wo = to_double(k, v); }},
             {"t_supply", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.plant.t_supply = to_double(k, v); }},
             {"q_max", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.plant.q_max = to_double(k, v); }},
             {"q_person", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.plant.q_person = to_double(k, v); }},
             {"ts", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.plant.ts = to_double(k, v); }},
             {"substeps", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.plant.substeps = static_cast<int>(to_u64(k, v)); }},
         }},
        {"weather",
         {
             {"mean", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.weather.mean = to_double(k, v); }},
             {"amplitude", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.weather.amplitude = to_double(k, v); }},
             {"coldest_hour", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.weather.coldest_hour = to_double(k, v); }},
             {"ar_coefficient", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.weather.ar_coefficient = to_double(k, v); }},
             {"ar_sigma", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.weather.ar_sigma = to_double(k, v); }},
             {"csv", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.weather_csv = trim(v); }},
         }},
        {"reference",
         {
             {"omega0", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.omega0 = to_double(k, v); }},
         }},
        {"validation",
         {
             {"setpoint", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.validation.setpoint = to_double(k, v); }},
             {"steps", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.validation.steps = to_u64(k, v); }},
             {"welch_segment", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.validation.welch.segment_length = to_u64(k, v); }},
             {"welch_overlap", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.validation.welch.overlap = to_double(k, v); }},
         }},
        {"attack",
         {
             {"grid",
              [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                  c.attack.grid.clear();
                  for (const auto& item : split(v, ',')) {
                      const auto pair = split(item, ':');
                      if (pair.size() != 2) bad(k, v, "grid entries are eps_u:eps_y");
                      c.attack.grid.emplace_back(to_double(k, pair[0]), to_double(k, pair[1]));
                  }
              }},
             {"budget_y_reference",
              [](ExperimentConfig& c, const std::string&, const std::string& v) { c.attack.y_reference = budget_reference_from_string(trim(v)); }},
             {"max_iter", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.attack.max_iter = to_u64(k, v); }},
             {"restarts", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.attack.restarts = to_u64(k, v); }},
             {"eta", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.attack.eta = to_double(k, v); }},
             {"runs", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.attack.runs = to_u64(k, v); }},
         }},
    };
    return s;
}

void apply_env(ExperimentConfig& cfg) {
    if (const char* dir = std::getenv("VRFT_LAB_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
        cfg.output_dir = dir;
    }
}

}  // namespace

char to_char(Scenario s) noexcept { return s == Scenario::A ? 'A' : 'B'; }

Scenario scenario_from_string(std::string_view text) {
    if (text == "A" || text == "a") return Scenario::A;
    if (text == "B" || text == "b") return Scenario::B;
    throw Error(ErrorKind::ConfigError, "unknown scenario '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
    const auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); };
    if (n_seeds < 1) fail("n_seeds must be at least 1");
    if (scenarios.empty()) fail("at least one scenario is required");
    if (n_points.empty()) fail("at least one record length is required");
    for (const std::size_t n : n_points) {
        if (n < kMinDatasetLength) fail("record lengths must be at least 10");
    }
    if (!(training_u0 >= 0.0 && training_u0 <= 1.0)) fail("training_u0 must lie in [0, 1]");
    try {
        plant.validate();
    } catch (const Error& e) {
        fail(std::string("plant: ") + e.what());
    }
    if (!(omega0 > 0.0) || !(omega0 * plant.ts < 10.0)) fail("reference omega0 must be positive with omega0*ts < 10");
    if (!(weather.ar_coefficient > -1.0 && weather.ar_coefficient < 1.0) || !(weather.ar_sigma >= 0.0)) {
        fail("weather AR coefficient must lie in (-1, 1) and its sigma must be non-negative");
    }
    if (validation.steps < 16) fail("validation needs at least 16 steps");
    if (validation.welch.segment_length < 8 || !(validation.welch.overlap >= 0.0 && validation.welch.overlap < 1.0)) {
        fail("Welch segment must be >= 8 samples with overlap in [0, 1)");
    }
    for (const auto& [eu, ey] : attack.grid) {
        if (!(eu >= 0.0 && eu <= 1.0 && ey >= 0.0 && ey <= 1.0)) fail("attack grid budgets must lie in [0, 1]");
    }
    if (attack.max_iter < 1 || attack.restarts < 1) fail("attack max_iter and restarts must be positive");
    if (!(attack.eta >= 0.0)) fail("attack eta must be non-negative");
}

ExperimentConfig parse_config(std::string_view text) {
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorKind::ConfigError, std::string("malformed config: ") + e.what());
    }
    ExperimentConfig cfg;
    const auto& sch = schema();
    for (const auto& [section, body] : tree) {
        const auto sec = sch.find(section);
        if (sec == sch.end() || body.empty()) {
            throw Error(ErrorKind::ConfigError, "unknown section [" + section + "]");
        }
        for (const auto& [key, node] : body) {
            const auto setter = sec->second.find(key);
            if (setter == sec->second.end()) {
                throw Error(ErrorKind::ConfigError, "unknown key " + section + "." + key);
            }
            setter->second(cfg, section + "." + key, node.get_value<std::string>());
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }
    ExperimentConfig cfg = parse_config(text);
    apply_env(cfg);
    return cfg;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    apply_env(cfg);
    return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json scen = nlohmann::json::array();
    for (const Scenario s : cfg.scenarios) scen.push_back(std::string(1, to_char(s)));
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& [eu, ey] : cfg.attack.grid) grid.push_back({eu, ey});
    // output_dir is left out on purpose: moving a study must not change its hash.
    return {
        {"study",
         {{"master_seed", cfg.master_seed},
          {"n_seeds", cfg.n_seeds},
          {"scenarios", scen},
          {"n_points", cfg.n_points},
          {"shared_weather", cfg.shared_weather},
          {"training_u0", cfg.training_u0}}},
        {"plant",
         {{"c_air", cfg.plant.c_air},
          {"c_wall", cfg.plant.c_wall},
          {"r_aw", cfg.plant.r_aw},
          {"r_wo", cfg.plant.r_wo},
          {"t_supply", cfg.plant.t_supply},
          {"q_max", cfg.plant.q_max},
          {"q_person", cfg.plant.q_person},
          {"ts", cfg.plant.ts},
          {"substeps", cfg.plant.substeps}}},
        {"weather",
         {{"mean", cfg.weather.mean},
          {"amplitude", cfg.weather.amplitude},
          {"coldest_hour", cfg.weather.coldest_hour},
          {"ar_coefficient", cfg.weather.ar_coefficient},
          {"ar_sigma", cfg.weather.ar_sigma},
          {"csv", cfg.weather_csv.generic_string()}}},
        {"reference", {{"omega0", cfg.omega0}, {"ts", cfg.plant.ts}}},
        {"validation",
         {{"setpoint", cfg.validation.setpoint}, {"steps", cfg.validation.steps}, {"welch", to_json(cfg.validation.welch)}}},
        {"attack",
         {{"grid", grid},
          {"budget_y_reference", to_string(cfg.attack.y_reference)},
          {"max_iter", cfg.attack.max_iter},
          {"restarts", cfg.attack.restarts},
          {"eta", cfg.attack.eta},
          {"runs", cfg.attack.runs}}},
    };
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::InvalidArgument, "SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(to_json(cfg).dump()); }

}  // namespace vrftlab

#include "gsde/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <sstream>

namespace gsde {

namespace {

const std::vector<std::string> kSections = {"system",        "verify",    "simulate", "stationarity",
                                            "fokker_planck", "transform", "sweep",    "output"};

const std::map<std::string, std::vector<std::string>> kSchema = {
    {"system",
     {"kind", "dim", "E", "S", "m", "bounds", "mass", "gamma", "potential", "entropy", "lambda", "casimir_entropy",
      "inertia", "dof", "S_tilde", "active_T"}},
    {"verify", {"n_points", "seed", "tol", "m2"}},
    {"simulate",
     {"dt", "steps", "horizon", "n_traj", "seed", "scheme", "project_energy", "record_every", "temperature", "x0"}},
    {"stationarity", {"n_bumps", "seed", "bump_power", "nodes", "rule", "box", "h", "tol", "control"}},
    {"fokker_planck", {"nodes", "box", "h", "margin", "evolve_steps", "export_csv", "max_memory_mb"}},
    {"transform", {"forward", "inverse", "jacobian", "n_points", "seed", "tol"}},
    {"sweep", {"T_list", "dt", "horizon", "n_traj", "seed", "x0", "record_every"}},
    {"output", {"directory", "plots", "trajectories"}},
};

bool key_allowed(const std::string& section, const std::string& key) {
    auto it = kSchema.find(section);
    if (it == kSchema.end()) return false;
    if (std::find(it->second.begin(), it->second.end(), key) != it->second.end()) return true;
    if (section == "system") {
        static const std::regex pattern(R"((J|K|K_tilde)[1-9][1-9]|frame[1-9])");
        return std::regex_match(key, pattern);
    }
    return false;
}

std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, e - b + 1);
}

std::string strip_quotes(std::string s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

double parse_number(const std::string& section, const std::string& key, const std::string& text) {
    std::string t = trim(text);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError("[" + section + "] " + key + ": expected a number, got '" + text + "'");
    return v;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------

void ConfigSection::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool ConfigSection::has(const std::string& key) const { return values_.count(key) != 0; }

std::vector<std::string> ConfigSection::keys() const {
    std::vector<std::string> k;
    for (const auto& [key, value] : values_) k.push_back(key);
    return k;
}

const std::string* ConfigSection::raw(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    read_[key] = true;
    return &it->second;
}

void ConfigSection::record(const std::string& key, const std::string& value) {
    for (const auto& kv : resolved_)
        if (kv.first == key) return;
    resolved_.emplace_back(key, value);
}

std::string ConfigSection::get_string(const std::string& key) {
    const std::string* v = raw(key);
    if (!v) throw ConfigError("[" + name_ + "] missing required key '" + key + "'");
    record(key, *v);
    return *v;
}

std::string ConfigSection::get_string(const std::string& key, const std::string& fallback) {
    const std::string* v = raw(key);
    std::string r = v ? *v : fallback;
    record(key, r);
    return r;
}

double ConfigSection::get_double(const std::string& key) {
    return parse_number(name_, key, get_string(key));
}

double ConfigSection::get_double(const std::string& key, double fallback) {
    const std::string* v = raw(key);
    if (!v) {
        record(key, format_double(fallback));
        return fallback;
    }
    record(key, *v);
    return parse_number(name_, key, *v);
}

long long ConfigSection::get_int(const std::string& key) {
    std::string t = trim(get_string(key));
    long long v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError("[" + name_ + "] " + key + ": expected an integer, got '" + t + "'");
    return v;
}

long long ConfigSection::get_int(const std::string& key, long long fallback) {
    if (!has(key)) {
        record(key, std::to_string(fallback));
        return fallback;
    }
    return get_int(key);
}

std::uint64_t ConfigSection::get_u64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) {
        record(key, std::to_string(fallback));
        return fallback;
    }
    std::string t = trim(get_string(key));
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError("[" + name_ + "] " + key + ": expected an unsigned integer, got '" + t + "'");
    return v;
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) {
    if (!has(key)) {
        record(key, fallback ? "true" : "false");
        return fallback;
    }
    std::string t = trim(get_string(key));
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("[" + name_ + "] " + key + ": expected true or false, got '" + t + "'");
}

std::vector<double> ConfigSection::get_list(const std::string& key) {
    std::string t = get_string(key);
    std::vector<double> out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(name_, key, item));
    if (out.empty()) throw ConfigError("[" + name_ + "] " + key + ": empty list");
    return out;
}

std::vector<double> ConfigSection::get_list(const std::string& key, const std::vector<double>& fallback) {
    if (has(key)) return get_list(key);
    std::string text;
    for (std::size_t i = 0; i < fallback.size(); ++i) text += (i ? ", " : "") + format_double(fallback[i]);
    record(key, text);
    return fallback;
}

std::optional<std::string> ConfigSection::get_untracked(const std::string& key) {
    const std::string* v = raw(key);
    if (!v) return std::nullopt;
    return *v;
}

std::vector<std::string> ConfigSection::get_strings(const std::string& key) {
    std::stringstream ss(get_string(key));
    std::vector<std::string> out;
    std::string item;
    while (std::getline(ss, item, ';')) out.push_back(trim(item));
    if (out.empty() || (out.size() == 1 && out[0].empty()))
        throw ConfigError("[" + name_ + "] " + key + ": empty list");
    return out;
}

std::optional<std::vector<Interval>> ConfigSection::get_box(const std::string& key, int dim) {
    if (!has(key)) return std::nullopt;
    std::string t = get_string(key);
    std::vector<Interval> box;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ';')) {
        std::stringstream is(item);
        std::string lo, hi, extra;
        if (!(is >> lo >> hi) || (is >> extra))
            throw ConfigError("[" + name_ + "] " + key + ": each axis needs 'lo hi', got '" + trim(item) + "'");
        Interval iv{parse_number(name_, key, lo), parse_number(name_, key, hi)};
        if (!(iv.lo < iv.hi)) throw ConfigError("[" + name_ + "] " + key + ": lower bound must be below upper bound");
        box.push_back(iv);
    }
    if (static_cast<int>(box.size()) != dim)
        throw ConfigError("[" + name_ + "] " + key + ": expected " + std::to_string(dim) + " axes, got " +
                          std::to_string(box.size()));
    return box;
}

void ConfigSection::reject_unread() const {
    for (const auto& [key, value] : values_) {
        auto it = read_.find(key);
        if (it == read_.end() || !it->second)
            throw ConfigError("[" + name_ + "] unknown or unused key '" + key + "'");
    }
}

// ---------------------------------------------------------------------------

Config Config::parse_string(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    Config cfg;
    for (const auto& [name, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("key '" + name + "' appears outside any section");
        if (std::find(kSections.begin(), kSections.end(), name) == kSections.end())
            throw ConfigError("unknown section [" + name + "]");
        ConfigSection sec(name);
        for (const auto& [key, value] : body) {
            if (!key_allowed(name, key)) throw ConfigError("[" + name + "] unknown key '" + key + "'");
            sec.set(key, strip_quotes(trim(value.data())));
        }
        cfg.sections_[name] = std::move(sec);
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

ConfigSection& Config::section(const std::string& name) {
    if (std::find(kSections.begin(), kSections.end(), name) == kSections.end())
        throw ConfigError("unknown section [" + name + "]");
    if (std::find(access_order_.begin(), access_order_.end(), name) == access_order_.end())
        access_order_.push_back(name);
    auto it = sections_.find(name);
    if (it == sections_.end()) it = sections_.emplace(name, ConfigSection(name)).first;
    return it->second;
}

bool Config::has_section(const std::string& name) const { return sections_.count(name) != 0; }

void Config::reject_unread() const {
    for (const auto& name : access_order_) sections_.at(name).reject_unread();
}

std::string Config::resolved_text() const {
    std::string out;
    for (const auto& name : access_order_) {
        const auto& sec = sections_.at(name);
        if (sec.resolved().empty()) continue;
        if (!out.empty()) out += '\n';
        out += '[' + name + "]\n";
        for (const auto& [key, value] : sec.resolved()) out += key + " = " + value + '\n';
    }
    return out;
}

} // namespace gsde

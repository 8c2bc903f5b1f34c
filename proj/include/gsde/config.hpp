#pragma once

// INI-style run configuration: named sections of key = value pairs.
//
// Every value a run reads is recorded, including defaults, so the resolved
// configuration can be echoed next to the outputs and replayed.

#include "gsde/common.hpp"
#include "gsde/fields.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gsde {

class ConfigSection {
public:
    ConfigSection() = default;
    explicit ConfigSection(std::string name) : name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;
    std::vector<std::string> keys() const;

    std::string get_string(const std::string& key);
    std::string get_string(const std::string& key, const std::string& fallback);
    double get_double(const std::string& key);
    double get_double(const std::string& key, double fallback);
    long long get_int(const std::string& key);
    long long get_int(const std::string& key, long long fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    bool get_bool(const std::string& key, bool fallback);
    /// Comma-separated list of numbers.
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback);
    std::vector<double> get_list(const std::string& key);
    /// Marks the key as read without echoing it in resolved().
    std::optional<std::string> get_untracked(const std::string& key);
    /// Semicolon-separated strings (expression lists), trimmed.
    std::vector<std::string> get_strings(const std::string& key);
    /// Box as "lo hi; lo hi; ...".
    std::optional<std::vector<Interval>> get_box(const std::string& key, int dim);

    /// Throws ConfigError naming the first key that was present but never read.
    void reject_unread() const;

    /// Keys in the order they were first read, with the value that was used.
    const std::vector<std::pair<std::string, std::string>>& resolved() const noexcept { return resolved_; }

private:
    const std::string* raw(const std::string& key);
    void record(const std::string& key, const std::string& value);

    std::string name_;
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> read_;
    std::vector<std::pair<std::string, std::string>> resolved_;
};

class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    /// Section by name; an absent section reads as empty.
    ConfigSection& section(const std::string& name);
    bool has_section(const std::string& name) const;

    /// Throws ConfigError for unread keys in every section that was accessed.
    void reject_unread() const;

    /// The resolved configuration as INI text (sections in access order).
    std::string resolved_text() const;

private:
    std::map<std::string, ConfigSection> sections_;
    std::vector<std::string> access_order_;
};

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

} // namespace gsde

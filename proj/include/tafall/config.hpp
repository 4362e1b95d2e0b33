#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tafall/camera.hpp"
#include "tafall/detector.hpp"
#include "tafall/motion.hpp"
#include "tafall/thermal.hpp"

namespace tafall {

// Plain-text "key = value" files, '#' comments. Unknown keys are rejected so
// typos surface immediately.
class KeyValueFile {
  public:
    static KeyValueFile load(const std::string& path);
    static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;  // whitespace-separated

    const std::map<std::string, std::string>& values() const { return values_; }
    std::vector<std::string> unused_keys() const;

  private:
    std::string origin_;
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, bool> touched_;
};

// Runtime knobs shared by the CLI commands and the streaming service.
struct RuntimeConfig {
    DetectorConfig detector;
    MhiParams mhi;
    PresenceParams presence;
    double ambient_c = 22.0;
    size_t queue_capacity = 64;
    uint32_t reorder_window = 8;
    double drain_deadline_s = 2.0;
};

RuntimeConfig load_runtime_config(const std::string& path);
RuntimeConfig runtime_config_from(const KeyValueFile& kv);

// Scene file for the simulator: pose script source, camera, thermal profile,
// noise, and static hot objects.
struct Scene {
    std::string script_path;     // pose JSONL; empty when scenario is set
    std::string scenario_name;   // generated script instead of a file
    uint64_t scenario_seed = 1;

    CameraModel camera;
    std::string profile_path;    // thermal profile (empty -> built-in default path)
    std::string table_path;      // anthropometric table (empty -> default path)
    double sigma_noise_c = 0.0;
    double tau_camera_s = 0.10;
    uint64_t seed = 1;
    std::vector<HotRect> hot_objects;
};

Scene load_scene(const std::string& path);

// Paths of the data files shipped with the project.
std::string default_table_path();
std::string default_profile_path();

}  // namespace tafall

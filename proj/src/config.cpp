#include "tafall/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tafall {

KeyValueFile KeyValueFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const size_t eq = line.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        if (eq == std::string::npos) {
            if (!trim(line).empty())
                throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                         ": expected 'key = value'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
        if (key == "hot_rect") {
            // repeatable key; store indexed
            size_t n = 0;
            for (const auto& [k, _] : kv.values_) {
                if (k.rfind("hot_rect.", 0) == 0) ++n;
            }
            kv.values_["hot_rect." + std::to_string(n)] = value;
        } else {
            kv.values_[key] = value;
        }
    }
    return kv;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    touched_[key] = true;
    return it == values_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    touched_[key] = true;
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw std::runtime_error(origin_ + ": bad number for '" + key + "': " + it->second);
    }
}

int KeyValueFile::get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    touched_[key] = true;
    if (it == values_.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw std::runtime_error(origin_ + ": bad integer for '" + key + "': " + it->second);
    }
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    touched_[key] = true;
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw std::runtime_error(origin_ + ": bad bool for '" + key + "': " + it->second);
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
    auto it = values_.find(key);
    touched_[key] = true;
    std::vector<double> out;
    if (it == values_.end()) return out;
    std::istringstream ss(it->second);
    double v;
    while (ss >> v) out.push_back(v);
    return out;
}

std::vector<std::string> KeyValueFile::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, _] : values_) {
        if (!touched_.count(key)) out.push_back(key);
    }
    return out;
}

RuntimeConfig runtime_config_from(const KeyValueFile& kv) {
    RuntimeConfig cfg;
    cfg.detector.window_len = kv.get_int("detector.window_len", cfg.detector.window_len);
    cfg.detector.stride = kv.get_int("detector.stride", cfg.detector.stride);
    cfg.detector.p_fall_threshold =
        kv.get_double("detector.p_fall_threshold", cfg.detector.p_fall_threshold);
    cfg.detector.presence_threshold =
        kv.get_double("detector.presence_threshold", cfg.detector.presence_threshold);
    cfg.detector.lob_persistence = kv.get_int("detector.lob_persistence", cfg.detector.lob_persistence);
    cfg.detector.gis_height = kv.get_double("detector.gis_height", cfg.detector.gis_height);
    cfg.detector.contact_epsilon =
        kv.get_double("detector.contact_epsilon", cfg.detector.contact_epsilon);
    cfg.detector.w_deficit = kv.get_double("detector.w_deficit", cfg.detector.w_deficit);
    cfg.detector.w_duration = kv.get_double("detector.w_duration", cfg.detector.w_duration);
    cfg.detector.w_descent = kv.get_double("detector.w_descent", cfg.detector.w_descent);
    cfg.detector.score_bias = kv.get_double("detector.score_bias", cfg.detector.score_bias);
    cfg.detector.deficit_scale_m =
        kv.get_double("detector.deficit_scale_m", cfg.detector.deficit_scale_m);
    cfg.detector.descent_scale_mps =
        kv.get_double("detector.descent_scale_mps", cfg.detector.descent_scale_mps);
    cfg.detector.truncation_descent_mps =
        kv.get_double("detector.truncation_descent_mps", cfg.detector.truncation_descent_mps);
    cfg.detector.match_tolerance_s =
        kv.get_double("detector.match_tolerance_s", cfg.detector.match_tolerance_s);
    cfg.detector.include_absent_windows_in_far = kv.get_bool(
        "detector.include_absent_windows_in_far", cfg.detector.include_absent_windows_in_far);

    cfg.mhi.k = kv.get_double("mhi.k", cfg.mhi.k);
    cfg.mhi.theta = kv.get_double("mhi.theta", cfg.mhi.theta);
    cfg.mhi.gamma = kv.get_double("mhi.gamma", cfg.mhi.gamma);

    cfg.presence.min_delta_c = kv.get_double("presence.min_delta_c", cfg.presence.min_delta_c);
    cfg.presence.min_area_px = kv.get_int("presence.min_area_px", cfg.presence.min_area_px);
    cfg.presence.expected_body_area_px =
        kv.get_double("presence.expected_body_area_px", cfg.presence.expected_body_area_px);

    cfg.ambient_c = kv.get_double("ambient_c", cfg.ambient_c);
    cfg.queue_capacity = static_cast<size_t>(kv.get_int("queue_capacity", static_cast<int>(cfg.queue_capacity)));
    cfg.reorder_window = static_cast<uint32_t>(kv.get_int("reorder_window", static_cast<int>(cfg.reorder_window)));
    cfg.drain_deadline_s = kv.get_double("drain_deadline_s", cfg.drain_deadline_s);

    const auto unused = kv.unused_keys();
    if (!unused.empty()) throw std::runtime_error("unknown config key: " + unused.front());
    cfg.detector.validate();
    cfg.mhi.validate();
    return cfg;
}

RuntimeConfig load_runtime_config(const std::string& path) {
    return runtime_config_from(KeyValueFile::load(path));
}

Scene load_scene(const std::string& path) {
    const KeyValueFile kv = KeyValueFile::load(path);
    Scene scene;
    scene.script_path = kv.get_string("script", "");
    scene.scenario_name = kv.get_string("scenario", "");
    scene.scenario_seed = static_cast<uint64_t>(kv.get_int("scenario_seed", 1));
    if (scene.script_path.empty() == scene.scenario_name.empty())
        throw std::runtime_error(path + ": exactly one of 'script' or 'scenario' is required");

    const auto pos = kv.get_doubles("camera.pos");
    const auto look = kv.get_doubles("camera.look_at");
    const Vec3 cam_pos = pos.size() == 3 ? Vec3{pos[0], pos[1], pos[2]} : Vec3{0.0, -2.6, 1.4};
    const Vec3 cam_tgt = look.size() == 3 ? Vec3{look[0], look[1], look[2]} : Vec3{0.0, 0.0, 0.9};
    scene.camera = CameraModel::look_at(
        cam_pos, cam_tgt, kv.get_int("camera.width", 80), kv.get_int("camera.height", 62),
        kv.get_double("camera.hfov_deg", 90.0), kv.get_double("camera.vfov_deg", 67.0));

    scene.profile_path = kv.get_string("profile", "");
    scene.table_path = kv.get_string("table", "");
    scene.sigma_noise_c = kv.get_double("sigma_noise", 0.0);
    scene.tau_camera_s = kv.get_double("tau_camera", 0.10);
    scene.seed = static_cast<uint64_t>(kv.get_int("seed", 1));

    for (const auto& [key, value] : kv.values()) {
        if (key.rfind("hot_rect.", 0) != 0) continue;
        std::istringstream ss(value);
        HotRect rect;
        if (!(ss >> rect.x0 >> rect.y0 >> rect.x1 >> rect.y1 >> rect.temp_c))
            throw std::runtime_error(path + ": hot_rect needs 'x0 y0 x1 y1 temp_c'");
        scene.hot_objects.push_back(rect);
    }
    return scene;
}

std::string default_table_path() {
    return std::string(TAFALL_DATA_DIR) + "/anthropometry_default.tab";
}

std::string default_profile_path() {
    return std::string(TAFALL_DATA_DIR) + "/thermal_profile_default.tab";
}

}  // namespace tafall

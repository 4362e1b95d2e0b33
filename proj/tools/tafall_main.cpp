// tafall command-line front end: scenario generation, thermal simulation,
// offline detection, evaluation, streaming service, record and replay.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tafall/config.hpp"
#include "tafall/losses.hpp"
#include "tafall/motion.hpp"
#include "tafall/pose_io.hpp"
#include "tafall/scenario.hpp"
#include "tafall/server.hpp"
#include "tafall/thermal.hpp"

namespace {

using namespace tafall;

std::atomic<bool> g_interrupted{false};
void on_sigint(int) { g_interrupted.store(true); }

std::vector<std::optional<double>> load_smob_csv_column(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv: " + path);
    std::vector<std::optional<double>> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first && line.find("smob") != std::string::npos) {
            first = false;
            continue;  // header
        }
        first = false;
        std::istringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');  // t
        if (!std::getline(ss, cell, ',')) throw std::runtime_error(path + ": missing smob column");
        if (cell == "nan" || cell.empty()) {
            out.push_back(std::nullopt);
        } else {
            out.push_back(std::stod(cell));
        }
    }
    return out;
}

struct SceneAssets {
    Scene scene;
    SkeletonTopology topology;
    AnthropometricTable table;
    BodyThermalProfile profile;
    PoseSequence script;
};

SceneAssets load_scene_assets(const std::string& scene_path) {
    SceneAssets assets;
    assets.scene = load_scene(scene_path);
    assets.topology = default_skeleton();

    if (!assets.scene.scenario_name.empty()) {
        assets.script =
            make_scenario(assets.scene.scenario_name, assets.scene.scenario_seed).poses;
    } else {
        assets.script = load_pose_sequence(assets.scene.script_path);
        if (assets.script.space != PoseSpace::World)
            throw std::runtime_error("scene script must be a world-space pose file");
    }
    assets.topology = assets.script.topology;

    const std::string table_path =
        assets.scene.table_path.empty() ? default_table_path() : assets.scene.table_path;
    assets.table = load_anthropometric_table(table_path, assets.topology);
    const std::string profile_path =
        assets.scene.profile_path.empty() ? default_profile_path() : assets.scene.profile_path;
    assets.profile = load_thermal_profile(profile_path, assets.topology);
    return assets;
}

int cmd_scenario(const std::string& name, uint64_t seed, double duration,
                 const std::string& poses_out, const std::string& truth_out) {
    if (name == "daily") {
        const PoseSequence seq = daily_activity_script(duration, seed);
        write_pose_sequence(seq, poses_out);
        if (!truth_out.empty()) {
            TruthScenario truth;
            truth.duration_s = seq.frames.back().t;
            write_truth_json(truth, truth_out);
        }
        std::cout << "wrote " << seq.frames.size() << " frames to " << poses_out << "\n";
        return 0;
    }
    const Scenario sc = make_scenario(name, seed);
    write_pose_sequence(sc.poses, poses_out);
    if (!truth_out.empty()) write_truth_json(sc.truth, truth_out);
    std::cout << sc.name << ": " << sc.poses.frames.size() << " frames";
    if (sc.is_fall) std::cout << ", scripted impact at " << sc.scripted_impact_t << " s";
    std::cout << "\n";
    return 0;
}

int cmd_sim(const std::string& scene_path, const std::string& out_path, uint16_t sensor_id,
            const std::string& poses_out, const std::string& truth_out,
            const std::string& smob_out, const std::string& mhi_out) {
    SceneAssets assets = load_scene_assets(scene_path);

    SimParams params;
    params.sigma_noise_c = assets.scene.sigma_noise_c;
    params.tau_camera_s = assets.scene.tau_camera_s;
    params.seed = assets.scene.seed;

    const SimOutput sim = simulate_sequence(assets.script, assets.scene.camera, assets.profile,
                                            assets.table, assets.scene.hot_objects, params);

    RecordingHeader header;
    header.sensor_id = sensor_id;
    header.frame_rate = assets.script.frame_rate;
    Recording rec;
    rec.header = header;
    for (size_t i = 0; i < sim.frames.size(); ++i) {
        rec.packets.push_back(encode_frame(sim.frames[i], sensor_id, static_cast<uint32_t>(i)));
    }
    rec.save(out_path);
    std::cout << "wrote " << rec.packets.size() << " frames to " << out_path << "\n";

    if (!poses_out.empty()) write_pose_sequence(sim.pose25d, poses_out);
    if (!smob_out.empty()) write_smob_csv(sim.trajectory, smob_out);
    if (!truth_out.empty() && !assets.scene.scenario_name.empty()) {
        const Scenario sc = make_scenario(assets.scene.scenario_name, assets.scene.scenario_seed);
        write_truth_json(sc.truth, truth_out);
    }
    if (!mhi_out.empty()) {
        MhiParams mp;
        std::vector<MotionHistoryImage> history;
        MotionHistoryImage mhi =
            MotionHistoryImage::zeros(assets.scene.camera.width, assets.scene.camera.height);
        MotionGrid prev_mask;
        prev_mask.width = assets.scene.camera.width;
        prev_mask.height = assets.scene.camera.height;
        prev_mask.values.assign(mhi.grid.values.size(), 0.0);
        for (size_t i = 0; i < sim.frames.size(); ++i) {
            mhi = mhi_update(mhi, prev_mask, mp.gamma, sim.frames[i].timestamp);
            if (i > 0) prev_mask = soft_motion_mask(sim.frames[i], sim.frames[i - 1], mp);
            history.push_back(mhi);
        }
        record_mhi_sequence(history, sensor_id, assets.script.frame_rate).save(mhi_out);
    }
    return 0;
}

int cmd_detect(const std::string& input, const std::string& config_path,
               const std::string& events_out, const std::string& windows_out,
               const std::string& table_path) {
    const PoseSequence poses = load_pose_sequence(input);
    if (poses.space != PoseSpace::World)
        throw std::runtime_error("detect expects world-space poses; run them through a scene/serve "
                                 "pipeline for 2.5D input");

    RuntimeConfig cfg;
    if (!config_path.empty()) cfg = load_runtime_config(config_path);
    const AnthropometricTable table = load_anthropometric_table(
        table_path.empty() ? default_table_path() : table_path, poses.topology);

    const DetectionResult result = detect_stream(poses, {}, table, cfg.detector);
    std::cout << result.events.size() << " event(s), " << result.windows.size()
              << " window(s) evaluated\n";
    for (const FallEvent& e : result.events) {
        std::cout << "  onset " << e.t_onset << " s";
        if (e.t_impact) std::cout << ", impact " << *e.t_impact << " s";
        std::cout << ", deficit " << e.peak_deficit_m << " m, confidence " << e.confidence << "\n";
    }
    if (!events_out.empty()) write_events_jsonl(result.events, events_out);
    if (!windows_out.empty()) write_window_log_jsonl(result.windows, windows_out);
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path,
             const std::string& windows_path, double tolerance) {
    DetectionResult result;
    result.events = load_events_jsonl(pred_path);
    if (!windows_path.empty()) {
        std::ifstream in(windows_path);
        if (!in) throw std::runtime_error("cannot open window log: " + windows_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto rec = nlohmann::json::parse(line);
            WindowRecord w;
            w.start_frame = rec.value("start_frame", 0);
            w.t_start = rec.at("t_start").get<double>();
            w.t_end = rec.at("t_end").get<double>();
            w.presence_fraction = rec.value("presence_fraction", 1.0);
            w.evaluated = rec.value("evaluated", true);
            w.p = rec.value("p", 0.0);
            w.fired = rec.value("fired", false);
            result.windows.push_back(w);
        }
    }
    const TruthScenario truth = load_truth_json(truth_path);
    DetectorConfig cfg;
    const DetectionReport report = evaluate(result, truth, cfg, tolerance);

    std::cout << "matched " << report.matched_events << "/" << report.total_true_falls
              << " true falls";
    if (report.dr) std::cout << "  DR = " << *report.dr;
    std::cout << "\n";
    std::cout << "false windows " << report.false_windows << "/" << report.total_nonfall_windows;
    if (report.far) std::cout << "  FAR = " << *report.far;
    std::cout << "\n";
    return 0;
}

int cmd_eval_loss(const std::string& pred_path, const std::string& truth_path) {
    const auto pred = load_smob_csv_column(pred_path);
    const auto truth = load_smob_csv_column(truth_path);
    std::cout << "balance mse = " << balance_mse(pred, truth) << "\n";
    return 0;
}

int cmd_serve(const std::string& listen, const std::string& config_path,
              const std::string& scene_path, const std::string& poses_path,
              const std::string& events_out, double duration_s) {
    RuntimeConfig runtime;
    if (!config_path.empty()) runtime = load_runtime_config(config_path);

    PipelineConfig config;
    config.topology = default_skeleton();
    config.camera = CameraModel::look_at({0, -2.6, 1.4}, {0, 0.3, 0.9});
    if (!scene_path.empty()) {
        SceneAssets assets = load_scene_assets(scene_path);
        config.topology = assets.topology;
        config.table = assets.table;
        config.camera = assets.scene.camera;
    } else {
        config.table = load_anthropometric_table(default_table_path(), config.topology);
    }
    config.detector = runtime.detector;
    config.mhi = runtime.mhi;
    config.presence = runtime.presence;
    config.ambient_c = runtime.ambient_c;
    config.queue_capacity = runtime.queue_capacity;
    config.reorder_window = runtime.reorder_window;
    config.drain_deadline_s = runtime.drain_deadline_s;

    StreamServer::ProviderFactory factory;  // empty: ingest + stats only
    if (!poses_path.empty()) {
        PoseSequence provider_seq = load_pose_sequence(poses_path);
        if (provider_seq.space != PoseSpace::Image25d)
            throw std::runtime_error("serve expects a 2.5D pose file for the pose provider");
        factory = [provider_seq](uint16_t) {
            return std::make_shared<RecordedPoseProvider>(provider_seq);
        };
    } else {
        std::cerr << "serve: no --poses given; ingesting frames without fall detection\n";
    }

    const size_t colon = listen.rfind(':');
    if (colon == std::string::npos) throw std::runtime_error("listen must be host:port");
    const std::string host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));

    StreamServer server(config, factory);
    server.start(host, port);
    std::cout << "listening on " << host << ":" << server.port() << "\n";

    std::signal(SIGINT, on_sigint);
    const auto deadline = duration_s > 0
                              ? std::chrono::steady_clock::now() +
                                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                        std::chrono::duration<double>(duration_s))
                              : std::chrono::steady_clock::time_point::max();
    while (!g_interrupted.load() && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    server.stop();

    size_t total_events = 0;
    std::vector<FallEvent> all_events;
    for (auto& [sensor, result] : server.take_results()) {
        const PipelineStats stats = server.stats(sensor);
        std::cout << "sensor " << sensor << ": received " << stats.frames_received << ", dropped "
                  << stats.frames_dropped << ", out-of-order " << stats.out_of_order
                  << ", crc failures " << stats.crc_failures << ", events "
                  << result.events.size() << "\n";
        total_events += result.events.size();
        all_events.insert(all_events.end(), result.events.begin(), result.events.end());
    }
    if (!events_out.empty()) write_events_jsonl(all_events, events_out);
    std::cout << total_events << " event(s)\n";
    return 0;
}

int cmd_replay(const std::string& rec_path, const std::string& to, double rate) {
    const Recording rec = Recording::load(rec_path);
    const size_t colon = to.rfind(':');
    if (colon == std::string::npos) throw std::runtime_error("--to must be host:port");
    replay_recording(rec, to.substr(0, colon), std::stoi(to.substr(colon + 1)), rate);
    std::cout << "replayed " << rec.packets.size() << " packets\n";
    return 0;
}

int cmd_record(const std::string& listen, const std::string& out_path, double duration) {
    const size_t colon = listen.rfind(':');
    if (colon == std::string::npos) throw std::runtime_error("--listen must be host:port");
    const size_t n =
        run_packet_recorder(listen.substr(0, colon), std::stoi(listen.substr(colon + 1)), out_path,
                            duration, static_cast<size_t>(-1));
    std::cout << "recorded " << n << " packets to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermal-array fall detection toolkit"};
    app.require_subcommand(1);

    // scenario
    std::string sc_name, sc_poses = "poses.jsonl", sc_truth;
    uint64_t sc_seed = 1;
    double sc_duration = 60.0;
    auto* scenario_cmd = app.add_subcommand("scenario", "generate a scripted pose sequence");
    scenario_cmd->add_option("name", sc_name, "scenario name or 'daily'")->required();
    scenario_cmd->add_option("-o,--output", sc_poses, "pose JSONL output");
    scenario_cmd->add_option("--truth", sc_truth, "truth JSON output");
    scenario_cmd->add_option("--seed", sc_seed, "random seed");
    scenario_cmd->add_option("--duration", sc_duration, "duration for 'daily' (s)");

    // sim
    std::string sim_scene, sim_out = "rec.taf", sim_poses, sim_truth, sim_smob, sim_mhi;
    uint16_t sim_sensor = 1;
    auto* sim_cmd = app.add_subcommand("sim", "simulate thermal frames for a scene");
    sim_cmd->add_option("scene", sim_scene, "scene file")->required();
    sim_cmd->add_option("-o,--output", sim_out, ".taf recording output");
    sim_cmd->add_option("--sensor-id", sim_sensor, "sensor id for packets");
    sim_cmd->add_option("--poses-out", sim_poses, "2.5D ground-truth pose JSONL");
    sim_cmd->add_option("--truth-out", sim_truth, "truth JSON (scenario scenes)");
    sim_cmd->add_option("--smob-out", sim_smob, "balance-margin CSV");
    sim_cmd->add_option("--mhi-out", sim_mhi, "motion-history .taf recording");

    // detect
    std::string det_input, det_config, det_events, det_windows, det_table;
    auto* det_cmd = app.add_subcommand("detect", "offline detection over a pose file");
    det_cmd->add_option("-i,--input", det_input, "world-space pose JSONL")->required();
    det_cmd->add_option("--config", det_config, "runtime config file");
    det_cmd->add_option("--events", det_events, "events JSONL output");
    det_cmd->add_option("--windows", det_windows, "window log output");
    det_cmd->add_option("--table", det_table, "anthropometric table");

    // eval
    std::string ev_pred, ev_truth, ev_windows;
    double ev_tol = 1.0;
    auto* ev_cmd = app.add_subcommand("eval", "score events against scenario truth");
    ev_cmd->add_option("--pred", ev_pred, "events JSONL")->required();
    ev_cmd->add_option("--truth", ev_truth, "truth JSON")->required();
    ev_cmd->add_option("--windows", ev_windows, "window log for FAR");
    ev_cmd->add_option("--tolerance", ev_tol, "match tolerance (s)");

    // eval-loss
    std::string el_pred, el_truth;
    auto* el_cmd = app.add_subcommand("eval-loss", "balance regression MSE over CSV series");
    el_cmd->add_option("--pred", el_pred, "predicted smob CSV")->required();
    el_cmd->add_option("--truth", el_truth, "ground-truth smob CSV")->required();

    // serve
    std::string sv_listen = "127.0.0.1:7700", sv_config, sv_scene, sv_poses, sv_events;
    double sv_duration = 0.0;
    auto* sv_cmd = app.add_subcommand("serve", "ingest sensor streams and detect falls");
    sv_cmd->add_option("--listen", sv_listen, "host:port");
    sv_cmd->add_option("--config", sv_config, "runtime config file");
    sv_cmd->add_option("--scene", sv_scene, "scene file (camera + tables)");
    sv_cmd->add_option("--poses", sv_poses, "2.5D pose file for the pose provider");
    sv_cmd->add_option("--events", sv_events, "events JSONL output");
    sv_cmd->add_option("--duration", sv_duration, "stop after this many seconds (0 = SIGINT)");

    // replay
    std::string rp_path, rp_to = "127.0.0.1:7700";
    double rp_rate = 1.0;
    auto* rp_cmd = app.add_subcommand("replay", "stream a recording to a server");
    rp_cmd->add_option("recording", rp_path, ".taf recording")->required();
    rp_cmd->add_option("--to", rp_to, "host:port");
    rp_cmd->add_option("--rate", rp_rate, "rate multiplier (<=0: no pacing)");

    // record
    std::string rc_listen = "127.0.0.1:7701", rc_out = "rec.taf";
    double rc_duration = 60.0;
    auto* rc_cmd = app.add_subcommand("record", "capture an incoming stream to a .taf file");
    rc_cmd->add_option("--listen", rc_listen, "host:port");
    rc_cmd->add_option("-o,--output", rc_out, ".taf output");
    rc_cmd->add_option("--duration", rc_duration, "max capture time (s)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scenario_cmd->parsed())
            return cmd_scenario(sc_name, sc_seed, sc_duration, sc_poses, sc_truth);
        if (sim_cmd->parsed())
            return cmd_sim(sim_scene, sim_out, sim_sensor, sim_poses, sim_truth, sim_smob, sim_mhi);
        if (det_cmd->parsed())
            return cmd_detect(det_input, det_config, det_events, det_windows, det_table);
        if (ev_cmd->parsed()) return cmd_eval(ev_pred, ev_truth, ev_windows, ev_tol);
        if (el_cmd->parsed()) return cmd_eval_loss(el_pred, el_truth);
        if (sv_cmd->parsed())
            return cmd_serve(sv_listen, sv_config, sv_scene, sv_poses, sv_events, sv_duration);
        if (rp_cmd->parsed()) return cmd_replay(rp_path, rp_to, rp_rate);
        if (rc_cmd->parsed()) return cmd_record(rc_listen, rc_out, rc_duration);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

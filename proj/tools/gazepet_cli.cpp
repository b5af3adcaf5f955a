// gazepet: batch tools and the workbench server.
#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "gazepet/agreement.hpp"
#include "gazepet/calibration.hpp"
#include "gazepet/coco_export.hpp"
#include "gazepet/error.hpp"
#include "gazepet/file_util.hpp"
#include "gazepet/gateway/codec.hpp"
#include "gazepet/gateway/config.hpp"
#include "gazepet/gateway/server.hpp"
#include "gazepet/heatmap.hpp"
#include "gazepet/mip.hpp"
#include "gazepet/nifti.hpp"
#include "gazepet/phantom.hpp"
#include "gazepet/pseudoseg.hpp"
#include "gazepet/seg_metrics.hpp"
#include "gazepet/session.hpp"
#include "gazepet/session_driver.hpp"
#include "gazepet/simulate.hpp"

namespace fs = std::filesystem;
using namespace gazepet;
using nlohmann::json;

namespace {

gateway::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->request_stop();
}

ScalarVolume load_pet(const fs::path& study) {
    return load_volume(study / "SUV.nii.gz", ModalityKind::PET_SUV);
}

PhantomSpec read_spec(const fs::path& study) {
    const auto p = study / "phantom.json";
    if (!fs::exists(p)) throw IoError("no phantom.json in " + study.string());
    try {
        return json::parse(read_file(p)).get<PhantomSpec>();
    } catch (const json::exception& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

// Non-overlapping spheres inside the volume. Only raw mt19937_64 output is
// used, so the layout is the same with every standard library.
PhantomSpec seeded_spec(std::uint64_t seed, int spheres, int nz, double noise) {
    PhantomSpec s;
    s.dims = {512, 512, nz};
    s.spacing_mm = {2.0, 2.0, 3.0};
    s.noise_sigma = noise;
    s.seed = seed;
    std::mt19937_64 rng(seed);
    const auto uni = [&](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(rng() >> 11) / 9007199254740992.0;
    };
    const double zmax = (nz - 1) * 3.0;
    for (int tries = 0; static_cast<int>(s.spheres.size()) < spheres; ++tries) {
        if (tries > 10000) throw SpecError("could not place " + std::to_string(spheres) + " spheres");
        PhantomSphere p;
        p.radius_mm = uni(6, 14);
        p.peak_suv = uni(4, 10);
        if (zmax - 2 * (p.radius_mm + 2) <= 0) throw SpecError("volume too thin for the spheres");
        p.center_mm = {uni(60, 960), uni(60, 960), uni(p.radius_mm + 2, zmax - p.radius_mm - 2)};
        bool ok = true;
        for (const auto& q : s.spheres) {
            double d2 = 0;
            for (int i = 0; i < 3; ++i) d2 += (p.center_mm[i] - q.center_mm[i]) * (p.center_mm[i] - q.center_mm[i]);
            if (std::sqrt(d2) < p.radius_mm + q.radius_mm + 12) ok = false;
        }
        if (ok) s.spheres.push_back(p);
    }
    return s;
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

int cmd_phantom(const fs::path& out, const std::string& spec_path, std::uint64_t seed, int spheres,
                int nz, double noise) {
    const PhantomSpec spec = spec_path.empty() ? seeded_spec(seed, spheres, nz, noise)
                                               : json::parse(read_file(spec_path)).get<PhantomSpec>();
    const auto ph = generate_phantom(spec);
    save_volume(ph.pet, out / "SUV.nii.gz");
    save_volume(ph.ct, out / "CTres.nii.gz");
    save_volume(ph.truth.to_scalar(), out / "SEG.nii.gz");
    write_file_atomic(out / "phantom.json", json(spec).dump(2) + "\n");
    std::cout << "phantom: " << spec.spheres.size() << " spheres, " << spec.dims.nx << "x" << spec.dims.ny << "x"
              << spec.dims.nz << " -> " << out.string() << "\n";
    return 0;
}

int cmd_simulate(const fs::path& study, const fs::path& out, std::uint64_t seed) {
    const auto spec = read_spec(study);
    const auto ph = generate_phantom(spec);
    SimulationOptions opt;
    opt.seed = seed;
    const auto rec = simulate_read(ph, spec, opt);
    emit_session(rec, out);
    std::cout << "simulated read: " << rec.tobii_cam.size() << " ticks, " << rec.key_events.size()
              << " keys, " << rec.lesions.size() << " lesions -> " << out.string() << "\n";
    return 0;
}

int cmd_replay(const fs::path& session, const fs::path& study, bool check_pauses) {
    const auto rec = parse_session(session);
    const auto pet = load_pet(study);
    ReplayOptions opt;
    opt.check_pauses = check_pauses;
    try {
        const auto state = replay(rec, pet, opt);
        std::cout << "replay OK: " << rec.tobii_cam.size() << " ticks, " << rec.key_events.size() << " keys, "
                  << state.accepted.size() << " lesions, " << state.rejected_boxes.size() << " rejected boxes\n";
        return 0;
    } catch (const ReplayMismatchError& e) {
        std::cerr << "replay mismatch: " << e.what() << "\n";
        return 1;
    }
}

int cmd_heatmap(const fs::path& session, const fs::path& study, const fs::path& out, const std::string& role) {
    const auto rec = parse_session(session);
    const auto pet = load_pet(study);
    const auto hm = build_heatmap(rec, pet.dims(), pet.spacing());
    save_volume(hm.counts.to_scalar(), out / derived_volume_name("GAZE", role));
    const auto stack = heatmap_mip(hm);
    save_volume(mip_stack_to_volume(stack, pet.spacing()), out / derived_volume_name("GAZE_MIP", role));
    const auto& r = hm.report;
    std::cout << json{{"ticks", r.ticks},
                      {"contributed", r.contributed},
                      {"no_gaze", r.no_gaze},
                      {"mip_ticks", r.mip_ticks},
                      {"slice_out_of_range", r.slice_out_of_range},
                      {"total", hm.total()}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_pseudoseg(const fs::path& session, const fs::path& study, const fs::path& out, const fs::path& report) {
    const auto rec = parse_session(session);
    const auto pet = load_pet(study);
    const auto seg = build_pseudo_seg(rec.lesions, pet);
    save_volume(seg.mask.to_scalar(), out);
    const auto rep = seg.report().dump(2);
    if (!report.empty()) write_file_atomic(report, rep + "\n");
    for (const auto& w : seg.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "pseudo-segmentation: " << seg.label_to_lesion_id.size() << " lesions, "
              << seg.mask.count_nonzero() << " voxels -> " << out.string() << "\n";
    return 0;
}

int cmd_mip(const fs::path& study, const fs::path& out, const fs::path& png_dir, double norm_max) {
    const auto pet = load_pet(study);
    const auto stack = mip_stack(pet);
    save_volume(mip_stack_to_volume(stack, pet.spacing()), out);
    if (!png_dir.empty()) {
        for (std::size_t i = 0; i < stack.projections.size(); ++i) {
            const auto& p = stack.projections[i];
            const auto img = window_image(p.values, p.width, p.height, DisplayWindow{0, norm_max, std::nullopt});
            char name[32];
            std::snprintf(name, sizeof name, "mip_%03d.png", static_cast<int>(stack.angles_deg[i]));
            write_file_atomic(png_dir / name, gateway::encode_png(img));
        }
    }
    std::cout << "MIP: " << stack.projections.size() << " angles, " << stack.projections[0].width << "x"
              << stack.projections[0].height << " -> " << out.string() << "\n";
    return 0;
}

int cmd_export(const fs::path& metadata, const fs::path& data_root, const fs::path& out, std::uint64_t seed) {
    const auto reads = read_metadata_csv(metadata);
    ExportOptions opt;
    opt.seed = seed;
    opt.data_root = data_root;
    const auto summary = export_coco(reads, out, opt);
    validate_coco_export(out);
    std::cout << "exported " << summary.reads << " reads, " << summary.lesions << " lesions, " << summary.slices
              << " slices, " << summary.gaze_rows << " gaze rows\n";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(out)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::cout << gateway::sha256_hex(read_file(f)) << "  " << f.filename().string() << "\n";
    }
    return 0;
}

ViewingGeometry read_geometry(const std::string& path) {
    if (path.empty()) return {};
    return json::parse(read_file(path)).get<ViewingGeometry>();
}

int cmd_calib(const std::vector<std::string>& sessions, const std::string& geometry, double window_ms,
              const fs::path& json_out) {
    const auto geom = read_geometry(geometry);
    std::vector<CalibrationReport> reports;
    for (const auto& s : sessions) {
        try {
            reports.push_back(calibration_metrics(parse_session(s), geom,
                                                  static_cast<std::int64_t>(window_ms * 1000)));
        } catch (const EmptyReportError& e) {
            std::cerr << "warning: " << s << ": " << e.what() << "\n";
        }
    }
    const auto merged = merge_reports(reports);
    if (!json_out.empty()) write_file_atomic(json_out, merged.to_json().dump(2) + "\n");
    std::cout << merged.to_csv();
    return 0;
}

int cmd_agree(const std::vector<std::string>& sets, std::vector<std::string> names, const fs::path& csv_out,
              const fs::path& json_out) {
    if (names.empty()) {
        for (const auto& s : sets) names.push_back(fs::path(s).filename().string());
    }
    if (names.size() != sets.size()) throw InvalidArgument("--names needs one name per set");
    std::vector<std::vector<LesionAnnotation>> lesions;
    for (const auto& s : sets) lesions.push_back(parse_session(s).lesions);
    const auto rep = agree_sets(names, lesions);
    for (const auto& p : rep.pairs) {
        const auto& a = p.agreement;
        std::cout << p.name_a << " vs " << p.name_b << ": precision " << fixed3(a.precision) << " recall "
                  << fixed3(a.recall) << " pct " << fixed3(a.pct_agreement) << " icc "
                  << (p.icc ? fixed3(*p.icc) : "n/a (" + p.icc_note + ")") << "\n";
    }
    if (!csv_out.empty()) write_file_atomic(csv_out, rep.to_csv());
    if (!json_out.empty()) write_file_atomic(json_out, rep.to_json().dump(2) + "\n");
    return 0;
}

// Predictions: [{"lesion_id": 1, "predicted": [x, y]}, ...] in 512-px image
// space. The reference mask is the pseudo-segmentation of that lesion on its
// root slice; the gaze to beat is the one recorded at selection.
int cmd_eval(const fs::path& session, const fs::path& study, const fs::path& predictions, const std::string& geometry) {
    const auto rec = parse_session(session);
    const auto pet = load_pet(study);
    const auto seg = build_pseudo_seg(rec.lesions, pet);
    const auto preds = json::parse(read_file(predictions));
    if (!preds.is_array()) throw FormatError("predictions must be a JSON array");
    const double sx = 512.0 / pet.dims().nx, sy = 512.0 / pet.dims().ny;
    std::vector<CorrectionCase> cases;
    for (const auto& p : preds) {
        const int id = p.at("lesion_id").get<int>();
        const auto it = std::find(seg.label_to_lesion_id.begin(), seg.label_to_lesion_id.end(), id);
        if (it == seg.label_to_lesion_id.end()) throw InvalidArgument("unknown lesion_id " + std::to_string(id));
        const int label = static_cast<int>(it - seg.label_to_lesion_id.begin()) + 1;
        const auto& lesion = *std::find_if(rec.lesions.begin(), rec.lesions.end(),
                                           [&](const LesionAnnotation& l) { return l.lesion_id == id; });
        CorrectionCase c;
        c.predicted = {p.at("predicted")[0].get<double>(), p.at("predicted")[1].get<double>()};
        c.last_gaze = lesion.selection.gaze;
        c.display = lesion.selection.display;
        for (int y = 0; y < pet.dims().ny; ++y)
            for (int x = 0; x < pet.dims().nx; ++x)
                if (seg.mask.at(x, y, lesion.root_slice) == label) c.mask_pixels.push_back({x * sx, y * sy});
        if (c.mask_pixels.empty()) {
            std::cerr << "warning: lesion " << id << " has an empty mask on its root slice, skipped\n";
            continue;
        }
        cases.push_back(std::move(c));
    }
    const auto r = gaze_correction_eval(cases, read_geometry(geometry));
    std::cout << json{{"cases", r.cases},
                      {"on_mask_pct", r.on_mask_pct},
                      {"improved_pct", r.improved_pct},
                      {"mean_angle_deg", r.mean_angle_deg}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_serve(const std::string& config, int port, const std::string& data_root, const std::string& static_dir) {
    auto c = gateway::load_config(config);
    if (port >= 0) c.port = port;
    if (!data_root.empty()) c.data_root = data_root;
    if (!static_dir.empty()) c.static_dir = static_dir;
    gateway::Server server(c);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const int bound = server.start();
    std::cout << "serving " << c.host << ":" << bound << " (data root " << c.data_root.string() << ")" << std::endl;
    server.run();
    g_server = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gazepet: gaze-assisted PET/CT annotation tools"};
    app.require_subcommand(1);

    std::string out, spec, session, study, role = "trainee", report, png_dir, metadata, data_root, geometry,
                                   json_out, csv_out, predictions, config, static_dir;
    std::uint64_t seed = 0;
    int spheres = 5, nz = 24, port = -1;
    double noise = 0.0, window_ms = 250.0, norm_max = 6.0;
    bool no_pause_check = false;
    std::vector<std::string> sessions, names;

    auto* phantom = app.add_subcommand("phantom", "generate a synthetic PET/CT study");
    phantom->add_option("--out", out, "study directory")->required();
    phantom->add_option("--spec", spec, "phantom spec JSON (default: seeded random spheres)");
    phantom->add_option("--seed", seed, "layout and noise seed");
    phantom->add_option("--spheres", spheres, "number of spheres")->check(CLI::Range(1, 50));
    phantom->add_option("--slices", nz, "axial slices")->check(CLI::Range(8, 400));
    phantom->add_option("--noise", noise, "Gaussian noise sigma (SUV)")->check(CLI::NonNegativeNumber);

    auto* simulate = app.add_subcommand("simulate", "record a scripted read of a phantom study");
    simulate->add_option("study", study, "phantom study directory")->required();
    simulate->add_option("--out", out, "session directory")->required();
    simulate->add_option("--seed", seed, "reader seed");

    auto* replay_cmd = app.add_subcommand("replay", "replay a session and compare its annotations");
    replay_cmd->add_option("session", session, "session directory")->required();
    replay_cmd->add_option("study", study, "study directory")->required();
    replay_cmd->add_flag("--no-pause-check", no_pause_check, "ignore pause-flag differences");

    auto* heatmap = app.add_subcommand("heatmap", "3D gaze heatmap and its MIP");
    heatmap->add_option("session", session)->required();
    heatmap->add_option("study", study)->required();
    heatmap->add_option("--out", out, "output directory")->required();
    heatmap->add_option("--role", role, "trainee or experienced")->check(CLI::IsMember({"trainee", "experienced"}));

    auto* pseudoseg = app.add_subcommand("pseudoseg", "pseudo-segmentation from accepted boxes");
    pseudoseg->add_option("session", session)->required();
    pseudoseg->add_option("study", study)->required();
    pseudoseg->add_option("--out", out, "label volume (.nii.gz)")->required();
    pseudoseg->add_option("--report", report, "JSON report path");

    auto* mip = app.add_subcommand("mip", "12-angle PET MIP stack");
    mip->add_option("study", study)->required();
    mip->add_option("--out", out, "stack volume (.nii.gz)")->required();
    mip->add_option("--png-dir", png_dir, "also write windowed PNGs here");
    mip->add_option("--norm-max", norm_max, "PNG window maximum (SUV)")->check(CLI::PositiveNumber);

    auto* exp = app.add_subcommand("export-coco", "COCO-style export with a seeded split");
    exp->add_option("--metadata", metadata, "metadata.csv of study reads")->required()->check(CLI::ExistingFile);
    exp->add_option("--data-root", data_root, "root of the study directories")->required();
    exp->add_option("--out", out, "output directory")->required();
    exp->add_option("--seed", seed, "split seed")->required();

    auto* calib = app.add_subcommand("calib", "gaze accuracy/precision before each selection");
    calib->add_option("sessions", sessions, "session directories")->required();
    calib->add_option("--geometry", geometry, "viewing geometry JSON");
    calib->add_option("--window-ms", window_ms, "window before the select key")->check(CLI::PositiveNumber);
    calib->add_option("--json", json_out, "also write the full report");

    auto* agree = app.add_subcommand("agree", "inter-reader agreement between 2 or 3 sessions");
    agree->add_option("sets", sessions, "session directories")->required()->expected(2, 3);
    agree->add_option("--names", names, "display names")->delimiter(',');
    agree->add_option("--csv", csv_out, "CSV output");
    agree->add_option("--json", json_out, "JSON output");

    auto* eval = app.add_subcommand("eval-gaze-correction", "score predicted gaze points against lesion masks");
    eval->add_option("session", session)->required();
    eval->add_option("study", study)->required();
    eval->add_option("--predictions", predictions, "predictions JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--geometry", geometry, "viewing geometry JSON");

    auto* serve = app.add_subcommand("serve", "run the workbench gateway");
    serve->add_option("--config", config, "gateway config JSON");
    serve->add_option("--port", port, "listen port (0 = any)")->check(CLI::Range(0, 65535));
    serve->add_option("--data-root", data_root, "study root (overrides config and environment)");
    serve->add_option("--static", static_dir, "UI asset directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return e.get_exit_code() == 0 ? rc : 2;
    }

    try {
        if (*phantom) return cmd_phantom(out, spec, seed, spheres, nz, noise);
        if (*simulate) return cmd_simulate(study, out, seed);
        if (*replay_cmd) return cmd_replay(session, study, !no_pause_check);
        if (*heatmap) return cmd_heatmap(session, study, out, role);
        if (*pseudoseg) return cmd_pseudoseg(session, study, out, report);
        if (*mip) return cmd_mip(study, out, png_dir, norm_max);
        if (*exp) return cmd_export(metadata, data_root, out, seed);
        if (*calib) return cmd_calib(sessions, geometry, window_ms, json_out);
        if (*agree) return cmd_agree(sessions, names, csv_out, json_out);
        if (*eval) return cmd_eval(session, study, predictions, geometry);
        if (*serve) return cmd_serve(config, port, data_root, static_dir);
    } catch (const Error& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

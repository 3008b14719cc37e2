#include "sbn/cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sbn/baselines.hpp"
#include "sbn/detect.hpp"
#include "sbn/evaluate.hpp"
#include "sbn/metrics.hpp"
#include "sbn/registration.hpp"
#include "sbn/stack_io.hpp"
#include "sbn/synth.hpp"
#include "sbn/track.hpp"

namespace sbn::cli {

using nlohmann::json;
namespace fs = std::filesystem;

WindowedDecomposition decompose_windowed(const FrameStack& stack, const SolverConfig& cfg,
                                         std::size_t window_len, int jobs) {
    const std::size_t f = stack.frames();
    if (window_len == 0 || window_len > f) window_len = f;

    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (std::size_t start = 0; start < f; start += window_len)
        spans.push_back({start, std::min(window_len, f - start)});

    std::vector<WindowResult> results(spans.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= spans.size()) break;
            const auto [start, len] = spans[i];
            const FrameStack sub = window(stack, start, len);
            results[i] = {start, len, decompose(matricize(sub), cfg)};
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(spans.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    WindowedDecomposition out{FrameStack(stack.height(), stack.width(), f),
                              FrameStack(stack.height(), stack.width(), f),
                              FrameStack(stack.height(), stack.width(), f),
                              {}};
    for (const WindowResult& wr : results) {
        MatricizedVideo mv;
        mv.pixels_per_frame = wr.result.shadow.rows();
        mv.frames = wr.result.shadow.cols();
        auto paste = [&](const Eigen::MatrixXd& m, FrameStack& dst) {
            mv.matrix = m;
            const FrameStack sub = tensorize(mv, stack.height(), stack.width());
            for (std::size_t t = 0; t < wr.length; ++t)
                std::copy(sub.frame_data(t), sub.frame_data(t) + stack.pixels_per_frame(),
                          dst.frame_data(wr.start + t));
        };
        paste(wr.result.shadow, out.S);
        paste(wr.result.background, out.B);
        paste(wr.result.noise, out.N);
    }
    out.windows = std::move(results);
    return out;
}

namespace {

void write_trace_csv(const std::vector<WindowResult>& windows, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "iter,mu,rel_error,objective\n";
    out.precision(12);
    for (const WindowResult& w : windows)
        for (const IterationRecord& r : w.result.trace)
            out << r.iter << "," << r.mu << "," << r.rel_error << "," << r.objective << "\n";
}

struct SolverFlags {
    double xi = -1.0, gamma = -1.0, mu0 = -1.0;
    double rho = 1.5, tol = 1e-3;
    int max_iter = 100;

    SolverConfig to_config() const {
        SolverConfig cfg;
        if (xi >= 0.0) cfg.xi = xi;
        if (gamma >= 0.0) cfg.gamma = gamma;
        if (mu0 > 0.0) cfg.mu0 = mu0;
        cfg.rho = rho;
        cfg.tol = tol;
        cfg.max_iter = max_iter;
        return cfg;
    }
};

std::vector<PixelOffset> parse_offsets(const std::string& text) {
    std::vector<PixelOffset> offsets;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto comma = item.find(',');
        if (comma == std::string::npos)
            throw CLI::ValidationError("--offsets", "expected dy,dx pairs separated by ';'");
        offsets.push_back({std::stoi(item.substr(0, comma)), std::stoi(item.substr(comma + 1))});
    }
    if (offsets.empty())
        throw CLI::ValidationError("--offsets", "no offsets given");
    return offsets;
}

int run_impl(const std::vector<std::string>& args) {
    CLI::App app{"sparse shadow / low-rank background / Gaussian noise video decomposition"};
    app.require_subcommand(1);

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic scene with ground truth");
    std::string synth_spec = "canonical";
    std::string synth_out, synth_gt, synth_spec_out;
    std::vector<std::string> synth_components;
    std::uint64_t synth_seed = 0;
    std::string synth_noise_kind;
    double synth_noise_scale = -1.0;
    std::size_t synth_frames = 0;
    synth->add_option("--spec", synth_spec, "'canonical' or a scene spec JSON file");
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--out", synth_out, "output SBNT stack (D)")->required();
    synth->add_option("--gt", synth_gt, "ground-truth JSON output");
    synth->add_option("--components", synth_components,
                      "S, B, N SBNT output paths")->expected(3);
    synth->add_option("--noise-kind", synth_noise_kind,
                      "override noise kind: none|gaussian|rayleigh|exponential");
    synth->add_option("--noise-scale", synth_noise_scale, "override noise scale");
    synth->add_option("--frames", synth_frames, "override frame count");
    synth->add_option("--spec-out", synth_spec_out, "write the resolved spec as JSON");

    // ---- register -------------------------------------------------------
    auto* reg = app.add_subcommand("register", "translation-align frames against a reference");
    std::string reg_in, reg_out, reg_report;
    std::size_t reg_reference = 0;
    int reg_max_shift = -1;
    reg->add_option("--in", reg_in, "input SBNT stack")->required();
    reg->add_option("--out", reg_out, "registered SBNT output")->required();
    reg->add_option("--reference", reg_reference, "reference frame index");
    reg->add_option("--report", reg_report, "per-frame shift CSV output");
    reg->add_option("--max-shift", reg_max_shift, "search radius (default min(H,W)/4)");

    // ---- decompose ------------------------------------------------------
    auto* dec = app.add_subcommand("decompose", "split a stack into shadow+background+noise");
    std::string dec_in, dec_outdir;
    SolverFlags dec_flags;
    std::size_t dec_window = 100;
    int dec_jobs = 1;
    bool dec_strict = false;
    dec->add_option("--in", dec_in, "input SBNT stack")->required();
    dec->add_option("--out-dir", dec_outdir, "output directory")->required();
    dec->add_option("--xi", dec_flags.xi, "low-rank weight (default sqrt(max(Nc,f)))");
    dec->add_option("--gamma", dec_flags.gamma, "noise weight (default auto from noise estimate)");
    dec->add_option("--rho", dec_flags.rho, "penalty growth factor");
    dec->add_option("--mu0", dec_flags.mu0, "initial penalty (default 1.25/sigma1)");
    dec->add_option("--tol", dec_flags.tol, "relative-error stopping threshold");
    dec->add_option("--max-iter", dec_flags.max_iter, "iteration cap");
    dec->add_option("--window", dec_window, "frames per sub-video window (0 = whole stack)");
    dec->add_option("--jobs", dec_jobs, "windows decomposed in parallel");
    dec->add_flag("--strict", dec_strict, "exit 3 if any window fails to converge");

    // ---- metrics --------------------------------------------------------
    auto* met = app.add_subcommand("metrics", "contrast / entropy / EPI quality metrics");
    std::string met_in, met_ref, met_out, met_offsets, met_crop;
    met->add_option("--in", met_in, "stack to evaluate")->required();
    met->add_option("--ref", met_ref, "reference stack (enables EPI)");
    met->add_option("--out", met_out, "report JSON output");
    met->add_option("--offsets", met_offsets, "contrast offsets, e.g. '0,1;1,0'");
    met->add_option("--crop", met_crop, "crop rectangle x,y,w,h");

    // ---- cdf ------------------------------------------------------------
    auto* cdf = app.add_subcommand("cdf", "singular-value CDF of the matricized stack");
    std::string cdf_in, cdf_out;
    cdf->add_option("--in", cdf_in, "input SBNT stack")->required();
    cdf->add_option("--out", cdf_out, "CSV output (k_percent,cdf)");

    // ---- detect ---------------------------------------------------------
    auto* det = app.add_subcommand("detect", "threshold + connected-component detector");
    std::string det_in, det_out, det_polarity = "dark";
    double det_threshold = 0.5;
    std::size_t det_min_area = 4;
    bool det_absnorm = false;
    det->add_option("--in", det_in, "input SBNT stack")->required();
    det->add_option("--out", det_out, "detections CSV output")->required();
    det->add_option("--threshold", det_threshold, "binarization threshold");
    det->add_option("--min-area", det_min_area, "minimum component area in pixels");
    det->add_option("--polarity", det_polarity, "dark|bright")
        ->check(CLI::IsMember({"dark", "bright"}));
    det->add_flag("--abs-normalize", det_absnorm,
                  "detect on |v|/max|v| (for signed component stacks)");

    // ---- track ----------------------------------------------------------
    auto* trk = app.add_subcommand("track", "greedy IoU association of detections");
    std::string trk_det, trk_out;
    double trk_iou = 0.3;
    int trk_max_missed = 3;
    trk->add_option("--det", trk_det, "detections CSV input")->required();
    trk->add_option("--out", trk_out, "tracked detections CSV output")->required();
    trk->add_option("--iou", trk_iou, "association IoU threshold");
    trk->add_option("--max-missed", trk_max_missed, "frames a track may go unmatched");

    // ---- evaluate -------------------------------------------------------
    auto* ev = app.add_subcommand("evaluate", "AP / MOTA against ground truth");
    std::string ev_det, ev_gt, ev_metric = "ap";
    double ev_iou = 0.5;
    ev->add_option("--det", ev_det, "detections/tracks CSV input")->required();
    ev->add_option("--gt", ev_gt, "ground-truth JSON")->required();
    ev->add_option("--metric", ev_metric, "ap|mota")->check(CLI::IsMember({"ap", "mota"}));
    ev->add_option("--iou", ev_iou, "matching IoU threshold");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (synth->parsed()) {
        SceneSpec spec;
        if (synth_spec == "canonical") {
            spec = canonical_scene();
        } else {
            std::ifstream in(synth_spec);
            if (!in)
                throw FormatError(synth_spec + ": cannot open scene spec");
            std::stringstream ss;
            ss << in.rdbuf();
            spec = SceneSpec::from_json(ss.str());
        }
        if (!synth_noise_kind.empty()) {
            if (synth_noise_kind == "none") spec.noise.kind = NoiseKind::kNone;
            else if (synth_noise_kind == "gaussian") spec.noise.kind = NoiseKind::kGaussian;
            else if (synth_noise_kind == "rayleigh") spec.noise.kind = NoiseKind::kRayleigh;
            else if (synth_noise_kind == "exponential") spec.noise.kind = NoiseKind::kExponential;
            else throw CLI::ValidationError("--noise-kind", "unknown kind " + synth_noise_kind);
        }
        if (synth_noise_scale > 0.0) spec.noise.scale = synth_noise_scale;
        if (synth_frames > 0) spec.frames = synth_frames;

        SceneData scene = generate_scene(spec, synth_seed);
        save_stack(scene.D, synth_out);
        if (!synth_gt.empty()) scene.gt.save(synth_gt);
        if (!synth_components.empty()) {
            save_stack(scene.S, synth_components[0]);
            save_stack(scene.B, synth_components[1]);
            save_stack(scene.N, synth_components[2]);
        }
        if (!synth_spec_out.empty()) {
            std::ofstream out(synth_spec_out, std::ios::trunc);
            out << spec.to_json() << "\n";
        }
        json summary{{"command", "synth"},
                     {"height", spec.height},
                     {"width", spec.width},
                     {"frames", spec.frames},
                     {"targets", spec.targets.size()},
                     {"seed", synth_seed},
                     {"out", synth_out}};
        std::cout << summary.dump() << "\n";
        return 0;
    }

    if (reg->parsed()) {
        const FrameStack stack = load_stack(reg_in);
        RegistrationResult res = register_translation(stack, reg_reference, reg_max_shift);
        save_stack(res.stack, reg_out);
        if (!reg_report.empty()) {
            std::ofstream out(reg_report, std::ios::trunc);
            if (!out)
                throw std::runtime_error(reg_report + ": cannot open for writing");
            out << "frame,dy,dx,score\n";
            out.precision(9);
            for (std::size_t f = 0; f < res.report.shifts.size(); ++f) {
                const auto& s = res.report.shifts[f];
                out << f << "," << s.dy << "," << s.dx << "," << s.score << "\n";
            }
        }
        json summary{{"command", "register"},
                     {"frames", stack.frames()},
                     {"reference", reg_reference},
                     {"out", reg_out}};
        std::cout << summary.dump() << "\n";
        return 0;
    }

    if (dec->parsed()) {
        const FrameStack stack = load_stack(dec_in);
        const SolverConfig cfg = dec_flags.to_config();
        WindowedDecomposition wd = decompose_windowed(stack, cfg, dec_window, dec_jobs);

        fs::create_directories(dec_outdir);
        const fs::path dir(dec_outdir);
        save_stack(wd.S, dir / "S.sbnt");
        save_stack(wd.B, dir / "B.sbnt");
        save_stack(wd.N, dir / "N.sbnt");
        write_trace_csv(wd.windows, dir / "trace.csv");

        bool all_converged = true;
        json jwindows = json::array();
        for (const WindowResult& w : wd.windows) {
            all_converged = all_converged && w.result.converged;
            jwindows.push_back({{"start", w.start},
                                {"frames", w.length},
                                {"iterations", w.result.trace.size()},
                                {"converged", w.result.converged},
                                {"rel_error", w.result.trace.back().rel_error},
                                {"objective", w.result.trace.back().objective},
                                {"xi", w.result.xi_used},
                                {"gamma", w.result.gamma_used},
                                {"mu0", w.result.mu0_used}});
        }
        json summary{{"command", "decompose"},
                     {"windows", jwindows},
                     {"converged", all_converged},
                     {"out_dir", dec_outdir}};
        std::cout << summary.dump() << "\n";
        if (dec_strict && !all_converged) {
            std::cerr << "decompose: at least one window did not converge\n";
            return 3;
        }
        return 0;
    }

    if (met->parsed()) {
        const FrameStack stack = load_stack(met_in);
        std::optional<FrameStack> ref;
        if (!met_ref.empty()) ref = load_stack(met_ref);
        MetricsOptions opts;
        if (!met_offsets.empty()) opts.offsets = parse_offsets(met_offsets);
        if (!met_crop.empty()) {
            std::size_t x, y, w, h;
            if (std::sscanf(met_crop.c_str(), "%zu,%zu,%zu,%zu", &x, &y, &w, &h) != 4)
                throw CLI::ValidationError("--crop", "expected x,y,w,h");
            opts.has_crop = true;
            opts.crop_x = x; opts.crop_y = y; opts.crop_w = w; opts.crop_h = h;
        }
        const MetricsReport rep = stack_metrics(stack, ref ? &*ref : nullptr, opts);
        if (!met_out.empty()) {
            std::ofstream out(met_out, std::ios::trunc);
            if (!out)
                throw std::runtime_error(met_out + ": cannot open for writing");
            out << rep.to_json() << "\n";
        }
        json summary{{"command", "metrics"},
                     {"contrast", rep.contrast_mean},
                     {"entropy", rep.entropy_mean}};
        if (rep.has_epi) summary["epi"] = rep.epi_mean;
        std::cout << summary.dump() << "\n";
        return 0;
    }

    if (cdf->parsed()) {
        const FrameStack stack = load_stack(cdf_in);
        const MatricizedVideo mat = matricize(stack);
        const std::vector<double> curve = singular_value_cdf_curve(mat);
        if (!cdf_out.empty()) {
            std::ofstream out(cdf_out, std::ios::trunc);
            if (!out)
                throw std::runtime_error(cdf_out + ": cannot open for writing");
            out << "k_percent,cdf\n";
            out.precision(12);
            for (std::size_t k = 1; k <= curve.size(); ++k)
                out << k << "," << curve[k - 1] << "\n";
        }
        json summary{{"command", "cdf"},
                     {"cdf5", curve[4]},
                     {"cdf10", curve[9]},
                     {"cdf50", curve[49]},
                     {"cdf100", curve[99]}};
        std::cout << summary.dump() << "\n";
        return 0;
    }

    if (det->parsed()) {
        const FrameStack stack = load_stack(det_in);
        DetectorConfig cfg;
        cfg.threshold = det_threshold;
        cfg.min_area = det_min_area;
        cfg.polarity = det_polarity == "dark" ? Polarity::kDark : Polarity::kBright;
        cfg.abs_normalize = det_absnorm;
        const std::vector<Detection> dets = detect_shadows(stack, cfg);
        save_detections_csv(dets, det_out);
        json summary{{"command", "detect"}, {"detections", dets.size()}, {"out", det_out}};
        std::cout << summary.dump() << "\n";
        return 0;
    }

    if (trk->parsed()) {
        const std::vector<Detection> dets = load_detections_csv(trk_det);
        TrackerConfig cfg;
        cfg.iou_threshold = trk_iou;
        cfg.max_missed = trk_max_missed;
        const std::vector<Track> tracks = associate_tracks(dets, cfg);
        std::vector<Detection> out;
        for (const Track& t : tracks)
            out.insert(out.end(), t.observations.begin(), t.observations.end());
        std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
            if (a.frame != b.frame) return a.frame < b.frame;
            if (a.box.x != b.box.x) return a.box.x < b.box.x;
            return a.box.y < b.box.y;
        });
        save_detections_csv(out, trk_out);
        json summary{{"command", "track"}, {"tracks", tracks.size()}, {"out", trk_out}};
        std::cout << summary.dump() << "\n";
        return 0;
    }

    if (ev->parsed()) {
        const std::vector<Detection> dets = load_detections_csv(ev_det);
        const GroundTruth gt = GroundTruth::load(ev_gt);
        json summary;
        if (ev_metric == "ap") {
            const DetectionEval e = average_precision(dets, gt, ev_iou);
            summary = json::parse(e.to_json());
        } else {
            std::map<int, Track> by_id;
            for (const Detection& d : dets) {
                if (d.id < 0)
                    throw std::runtime_error("evaluate --metric mota: detections carry no track ids");
                Track& t = by_id[d.id];
                t.id = d.id;
                t.observations.push_back(d);
            }
            std::vector<Track> tracks;
            for (auto& [id, t] : by_id) {
                std::sort(t.observations.begin(), t.observations.end(),
                          [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
                tracks.push_back(std::move(t));
            }
            const TrackingEval e = mota(tracks, gt, ev_iou);
            summary = json::parse(e.to_json());
        }
        std::cout << summary.dump() << "\n";
        return 0;
    }

    return 1;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    try {
        return run_impl(args);
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace sbn::cli

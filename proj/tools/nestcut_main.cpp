#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <type_traits>

#include <CLI11.hpp>
#include <json.hpp>

#include "nestcut/phantom.hpp"
#include "nestcut/pipeline.hpp"
#include "nestcut/render.hpp"
#include "nestcut/volume.hpp"

namespace {

using nestcut::BinaryMask;
using nestcut::IntensityVolume;
using nestcut::LabelVolume;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// NESTCUT_SEED wins over any seed found in a config or spec file
bool seed_override(std::uint64_t& seed) {
    const char* env = std::getenv("NESTCUT_SEED");
    if (!env) return false;
    const std::string text(env);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw std::runtime_error("NESTCUT_SEED must be an unsigned integer");
    seed = value;
    return true;
}

nestcut::PhantomSpec parse_phantom_spec(const std::string& json_text) {
    const nlohmann::json doc = nlohmann::json::parse(json_text);
    if (!doc.is_object()) throw std::invalid_argument("phantom spec must be a JSON object");
    nestcut::PhantomSpec spec;
    const auto triple = [](const nlohmann::json& v, auto& out) {
        if (!v.is_array() || v.size() != 3)
            throw std::invalid_argument("phantom spec: expected an array of 3 values");
        for (int i = 0; i < 3; ++i)
            out[static_cast<std::size_t>(i)] =
                v[static_cast<std::size_t>(i)]
                    .get<std::remove_reference_t<decltype(out[0])>>();
    };
    for (const auto& [key, value] : doc.items()) {
        if (key == "dims") triple(value, spec.dims);
        else if (key == "spacing") triple(value, spec.spacing);
        else if (key == "depth_axis") spec.depth_axis = value.get<int>();
        else if (key == "center") triple(value, spec.center);
        else if (key == "core_semi") triple(value, spec.core_semi);
        else if (key == "shell_thickness") spec.shell_thickness = value.get<double>();
        else if (key == "base_pbs") spec.base_pbs = value.get<double>();
        else if (key == "base_fat") spec.base_fat = value.get<double>();
        else if (key == "base_lnp") spec.base_lnp = value.get<double>();
        else if (key == "attenuation") spec.attenuation = value.get<double>();
        else if (key == "lateral_gradient") spec.lateral_gradient = value.get<double>();
        else if (key == "speckle") spec.speckle = value.get<bool>();
        else if (key == "blur_sigma") spec.blur_sigma = value.get<double>();
        else if (key == "seed") spec.seed = value.get<std::uint64_t>();
        else throw std::invalid_argument("unknown phantom spec key: " + key);
    }
    return spec;
}

LabelVolume mask_as_labels(const BinaryMask& mask, const std::array<double, 3>& spacing,
                           int depth_axis) {
    LabelVolume out;
    out.dims = mask.dims;
    out.spacing = spacing;
    out.depth_axis = depth_axis;
    out.data.assign(mask.data.begin(), mask.data.end());
    return out;
}

std::string sniff_dtype(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string line;
    for (int i = 0; i < 6 && std::getline(in, line); ++i)
        if (line.rfind("dtype ", 0) == 0) return line.substr(6);
    throw std::runtime_error(path + ": no dtype line in header");
}

struct SegmentArgs {
    std::string input, output, config_path, dump_profiles, trace_dir;
    bool verbose = false;
};

void write_trace(const std::string& dir, const nestcut::PipelineTrace& trace,
                 const IntensityVolume& original, const LabelVolume& final_labels) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::array<double, 3> ws = original.spacing;
    for (double& s : ws) s *= trace.downsample_factor;
    const int axis = original.depth_axis;
    const auto path = [&dir](const std::string& name) { return dir + "/" + name; };

    nestcut::write_labels(path("initial_labels.ncvol"), trace.initial_labels);
    nestcut::write_labels(path("ln_mask.ncvol"), mask_as_labels(trace.ln_mask, ws, axis));
    for (std::size_t i = 0; i < trace.fat_by_k.size(); ++i) {
        std::ostringstream name;
        name << "fat_k_" << trace.swept_k[i] << ".ncvol";
        nestcut::write_labels(path(name.str()), mask_as_labels(trace.fat_by_k[i], ws, axis));
    }
    nestcut::write_labels(path("confident_fat_r1.ncvol"),
                          mask_as_labels(trace.confident_fat_r1, ws, axis));
    nestcut::write_labels(path("confident_lnp_r1.ncvol"),
                          mask_as_labels(trace.confident_lnp_r1, ws, axis));
    nestcut::write_labels(path("confident_fat_r2.ncvol"),
                          mask_as_labels(trace.confident_fat_r2, ws, axis));
    nestcut::write_labels(path("confident_lnp_r2.ncvol"),
                          mask_as_labels(trace.confident_lnp_r2, ws, axis));
    nestcut::write_labels(path("seeds_fat.ncvol"), mask_as_labels(trace.seeds.fat, ws, axis));
    nestcut::write_labels(path("seeds_lnp.ncvol"), mask_as_labels(trace.seeds.lnp, ws, axis));

    IntensityVolume votes;
    votes.dims = trace.working_dims;
    votes.spacing = ws;
    votes.depth_axis = axis;
    votes.data.resize(trace.votes.size());
    for (std::size_t i = 0; i < trace.votes.size(); ++i)
        votes.data[i] = static_cast<float>(trace.votes[i]);
    nestcut::write_volume(path("votes.ncvol"), votes);

    nestcut::write_labels(path("refined_labels.ncvol"), trace.refined_labels);
    nestcut::write_labels(path("final_labels.ncvol"), final_labels);

    nlohmann::json ratios = nlohmann::json::array();
    for (std::size_t i = 0; i < trace.swept_k.size(); ++i)
        ratios.push_back({{"k", trace.swept_k[i]}, {"ratio", trace.fat_ratios[i]}});
    std::ofstream out(path("fat_ratios.json"), std::ios::trunc);
    if (!out) throw std::runtime_error(path("fat_ratios.json") + ": cannot open for writing");
    out << ratios.dump(2) << "\n";
}

int run_segment(const SegmentArgs& args) {
    nestcut::PipelineConfig cfg;
    if (!args.config_path.empty()) cfg = nestcut::parse_config(read_text_file(args.config_path));
    seed_override(cfg.rng_seed);

    const IntensityVolume vol = nestcut::read_volume(args.input);
    const nestcut::SegmentationResult result = nestcut::segment(vol, cfg);
    nestcut::write_labels(args.output, result.labels);

    if (!args.dump_profiles.empty()) {
        std::ofstream out(args.dump_profiles, std::ios::trunc);
        if (!out) throw std::runtime_error(args.dump_profiles + ": cannot open for writing");
        out << "depth class mean std\n";
        const nestcut::DepthProfile& p = result.trace.profile_r2;
        for (int d = 0; d < p.depth_extent(); ++d) {
            const std::size_t i = static_cast<std::size_t>(d);
            out << d << " lnp " << p.mu_lnp[i] << " " << p.sigma_lnp[i] << "\n";
            out << d << " fat " << p.mu_fat[i] << " " << p.sigma_fat[i] << "\n";
        }
    }
    if (!args.trace_dir.empty()) write_trace(args.trace_dir, result.trace, vol, result.labels);

    nlohmann::json report;
    report["selected_k"] = result.trace.selected_k;
    nlohmann::json ratios = nlohmann::json::array();
    for (std::size_t i = 0; i < result.trace.swept_k.size(); ++i)
        ratios.push_back({{"k", result.trace.swept_k[i]}, {"ratio", result.trace.fat_ratios[i]}});
    report["fat_ratios"] = ratios;
    report["runtime_seconds"] = result.trace.runtime_seconds;
    report["downsample_factor"] = result.trace.downsample_factor;
    nlohmann::json stages = nlohmann::json::object();
    for (const auto& [stage, seconds] : result.trace.stage_seconds) stages[stage] = seconds;
    report["stage_seconds"] = stages;
    std::cout << report.dump(2) << "\n";

    if (args.verbose) {
        for (const auto& [stage, seconds] : result.trace.stage_seconds)
            std::cerr << stage << ": " << seconds << " s\n";
        for (const std::string& note : result.trace.notes) std::cerr << "note: " << note << "\n";
    }
    return 0;
}

int run_evaluate(const std::string& path_a, const std::string& path_b) {
    const LabelVolume a = nestcut::read_labels(path_a);
    const LabelVolume b = nestcut::read_labels(path_b);
    const nestcut::SegReport rep = nestcut::seg_report(a, b);
    nlohmann::json out;
    out["dice"] = {{"pbs", rep.dice[0]}, {"fat", rep.dice[1]}, {"lnp", rep.dice[2]}};
    out["nested"] = rep.nested;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_phantom(const std::string& spec_path, const std::string& out_vol,
                const std::string& out_truth) {
    nestcut::PhantomSpec spec = parse_phantom_spec(read_text_file(spec_path));
    seed_override(spec.seed);
    const nestcut::Phantom phantom = nestcut::generate_phantom(spec);
    nestcut::write_volume(out_vol, phantom.vol);
    nestcut::write_labels(out_truth, phantom.truth);
    return 0;
}

int run_render(const std::string& input, const std::string& output, int axis, int index) {
    const std::string dtype = sniff_dtype(input);
    nestcut::RgbImage img;
    if (dtype == "u8") {
        img = nestcut::render_labels_slice(nestcut::read_labels(input), axis, index);
    } else if (dtype == "f32le") {
        img = nestcut::render_intensity_slice(nestcut::read_volume(input), axis, index);
    } else {
        throw std::runtime_error(input + ": unsupported dtype " + dtype);
    }
    nestcut::write_png(output, img);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nested bath/shell/core segmentation of 3D amplitude volumes"};
    app.require_subcommand(1);

    SegmentArgs seg;
    CLI::App* c_segment = app.add_subcommand("segment", "segment a volume into nested regions");
    c_segment->add_option("input", seg.input, "input amplitude volume (.ncvol)")->required();
    c_segment->add_option("output", seg.output, "output label volume (.ncvol)")->required();
    c_segment->add_option("--config", seg.config_path, "JSON pipeline configuration");
    c_segment->add_option("--dump-profiles", seg.dump_profiles,
                          "write final depth profiles as a 4-column text table");
    c_segment->add_option("--trace-dir", seg.trace_dir, "write per-stage volumes here");
    c_segment->add_flag("-v,--verbose", seg.verbose, "stage timings on stderr");

    std::string eval_a, eval_b;
    CLI::App* c_eval = app.add_subcommand("evaluate", "per-class overlap of two label volumes");
    c_eval->add_option("labels_a", eval_a, "label volume (nestedness is reported for this one)")
        ->required();
    c_eval->add_option("labels_b", eval_b, "label volume to compare against")->required();

    std::string ph_spec, ph_vol, ph_truth;
    CLI::App* c_phantom = app.add_subcommand("phantom", "generate a synthetic volume + truth");
    c_phantom->add_option("spec", ph_spec, "JSON phantom description")->required();
    c_phantom->add_option("out_volume", ph_vol, "output amplitude volume")->required();
    c_phantom->add_option("out_truth", ph_truth, "output ground-truth labels")->required();

    std::string r_in, r_out;
    int r_axis = 2, r_index = 0;
    CLI::App* c_render = app.add_subcommand("render", "write one slice as a PNG image");
    c_render->add_option("input", r_in, "amplitude or label volume (.ncvol)")->required();
    c_render->add_option("output", r_out, "output PNG path")->required();
    c_render->add_option("--axis", r_axis, "slice axis 0, 1 or 2 (default 2)");
    c_render->add_option("--index", r_index, "slice index along the axis")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_segment->parsed()) return run_segment(seg);
        if (c_eval->parsed()) return run_evaluate(eval_a, eval_b);
        if (c_phantom->parsed()) return run_phantom(ph_spec, ph_vol, ph_truth);
        if (c_render->parsed()) return run_render(r_in, r_out, r_axis, r_index);
    } catch (const nestcut::StageError& e) {
        std::cerr << "stage " << e.stage << " failed: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

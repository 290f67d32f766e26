#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dstyle/errors.hpp"
#include "dstyle/pipeline.hpp"

namespace {

enum Exit : int { kOk = 0, kOther = 1, kValidation = 2, kNumeric = 3 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driving-style identification and headway personalization pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::string out_dir = "dstyle_out";
    app.add_option("--seed", seed, "Master seed (overrides the config)");
    app.add_option("--config", config_path, "JSON config file; absent keys keep their defaults");
    app.add_option("--out-dir", out_dir, "Artifact directory")->capture_default_str();

    auto* gen = app.add_subcommand("gen", "Generate the synthetic cohort");
    auto* segment = app.add_subcommand("segment", "Trips to segment manifest");
    auto* features = app.add_subcommand("features", "Segments to feature table and scaler");
    auto* cluster = app.add_subcommand("cluster", "Features to cluster model, labeled features and planes");
    auto* train = app.add_subcommand("train", "Labeled features to classifier bank and confusion matrix");
    auto* quantize = app.add_subcommand("quantize", "Classifier bank to HWA1 binary and LUT fidelity report");

    auto* hwsim = app.add_subcommand("hwsim", "Run the fixed-point accelerator model");
    std::vector<double> hw_x;
    int sweep = 0;
    bool compare_float = false;
    std::string trace_path;
    auto* x_opt = hwsim->add_option("--x", hw_x, "Normalized input triple, e.g. 0.2,0.5,0.7")->expected(3)->delimiter(',');
    hwsim->add_option("--sweep", sweep, "Number of random input codes (default from config)")->excludes(x_opt);
    hwsim->add_flag("--compare-float", compare_float, "Compare against the float bank; fails above 2^-6");
    hwsim->add_option("--trace", trace_path, "Write the control trace CSV of the first input");

    auto* pers = app.add_subcommand("personalize", "Emit a headway setpoint for one trip");
    std::string trip_path;
    int window = 0;
    std::string pipe_path;
    pers->add_option("--trip", trip_path, "Trip CSV")->required();
    pers->add_option("--window", window, "Learning window in segments (default from config, 5)");
    pers->add_option("--pipe", pipe_path, "Append the setpoint line to this file or named pipe instead of stdout");

    auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write the summary JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        dstyle::PipelineConfig cfg;
        if (!config_path.empty()) cfg = dstyle::load_config(config_path);
        if (seed) cfg.seed = *seed;
        dstyle::finalize(cfg);
        std::filesystem::create_directories(out_dir);

        dstyle::Json out;
        if (gen->parsed()) {
            out = dstyle::cmd_gen(cfg, out_dir);
        } else if (segment->parsed()) {
            out = dstyle::cmd_segment(cfg, out_dir);
        } else if (features->parsed()) {
            out = dstyle::cmd_features(cfg, out_dir);
        } else if (cluster->parsed()) {
            out = dstyle::cmd_cluster(cfg, out_dir);
        } else if (train->parsed()) {
            out = dstyle::cmd_train(cfg, out_dir);
        } else if (quantize->parsed()) {
            out = dstyle::cmd_quantize(cfg, out_dir);
        } else if (hwsim->parsed()) {
            dstyle::HwsimOptions opts;
            if (!hw_x.empty()) opts.x = dstyle::Vec3{hw_x[0], hw_x[1], hw_x[2]};
            opts.sweep = sweep;
            opts.compare_float = compare_float;
            if (!trace_path.empty()) opts.trace = trace_path;
            out = dstyle::cmd_hwsim(cfg, out_dir, opts);
        } else if (pers->parsed()) {
            const auto r = dstyle::cmd_personalize(cfg, out_dir, {trip_path, window});
            if (pipe_path.empty()) {
                std::fputs(r.line.c_str(), stdout);
                std::fflush(stdout);
            } else {
                std::ofstream pipe(pipe_path, std::ios::app);
                if (!pipe) throw dstyle::ValidationError("cannot open " + pipe_path);
                pipe << r.line << std::flush;
            }
            return kOk;
        } else if (pipeline->parsed()) {
            out = dstyle::cmd_pipeline(cfg, out_dir)["headline"];
        }
        std::cout << out.dump(2) << '\n';
        return kOk;
    } catch (const dstyle::NumericError& e) {
        std::cerr << "dstyle: numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const dstyle::ValidationError& e) {
        std::cerr << "dstyle: " << e.what() << '\n';
        return kValidation;
    } catch (const dstyle::ParseError& e) {
        std::cerr << "dstyle: parse error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "dstyle: " << e.what() << '\n';
        return kOther;
    }
}

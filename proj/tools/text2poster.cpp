#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "t2p/compose.hpp"
#include "t2p/dataset_synth.hpp"
#include "t2p/kernels.hpp"

namespace fs = std::filesystem;
using namespace t2p;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 2;
constexpr int kExitMissingResource = 3;
constexpr int kExitInternal = 4;

struct CommonModelArgs {
    std::string g1_path;
    std::string g2_path;
    int refine_iters = 5;
    std::uint64_t seed = 7;
};

std::vector<Layout> read_layout_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw MissingResourceError("eval: not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InvalidInputError("eval: no .json layouts in " + dir.string());
    std::vector<Layout> layouts;
    for (const auto& f : files) {
        std::ifstream is(f);
        nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
        if (j.is_discarded()) throw LoadError("eval: invalid JSON in " + f.string());
        const auto& arr = j.contains("layout") ? j.at("layout") : j.at("boxes");
        Layout l;
        for (const auto& b : arr) {
            l.boxes.push_back({b.at("x").get<double>(), b.at("y").get<double>(),
                               b.at("width").get<double>(), b.at("height").get<double>()});
        }
        if (!l.boxes.empty()) layouts.push_back(std::move(l));
    }
    return layouts;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << content;
}

int run(int argc, char** argv) {
    CLI::App app{"text2poster: poster generation from text"};
    app.require_subcommand(1);
    bool serial = false;
    app.add_flag("--serial", serial, "disable OpenMP kernels (serial reference path)");

    // --- saliency ---------------------------------------------------------
    auto* cmd_sal = app.add_subcommand("saliency", "compute the spectral-residual saliency map");
    std::string sal_image, sal_out = "map.png";
    int sal_ww = 64;
    cmd_sal->add_option("image", sal_image)->required();
    cmd_sal->add_option("-o,--out", sal_out);
    cmd_sal->add_option("--working-width", sal_ww);

    // --- regions ----------------------------------------------------------
    auto* cmd_reg = app.add_subcommand("regions", "detect smooth regions; writes overlay and binary map");
    std::string reg_image, reg_overlay = "overlay.png", reg_map;
    int reg_w = 60, reg_h = 80;
    double reg_lambda = 5.0, reg_tf = 1.4, reg_iou = 0.05;
    cmd_reg->add_option("image", reg_image)->required();
    cmd_reg->add_option("-o,--out", reg_overlay);
    cmd_reg->add_option("--map", reg_map, "write the binary smooth-region map here");
    cmd_reg->add_option("--map-width", reg_w);
    cmd_reg->add_option("--map-height", reg_h);
    cmd_reg->add_option("--lambda", reg_lambda);
    cmd_reg->add_option("--threshold-factor", reg_tf);
    cmd_reg->add_option("--nms-iou", reg_iou);

    // --- index ------------------------------------------------------------
    auto* cmd_index = app.add_subcommand("index", "embedding index");
    auto* cmd_index_build = cmd_index->add_subcommand("build", "embed images and write the manifest");
    std::string ib_manifest, ib_images;
    int ib_dim = 256;
    cmd_index_build->add_option("manifest", ib_manifest, "output manifest path")->required();
    cmd_index_build->add_option("--images", ib_images, "directory of images")->required();
    cmd_index_build->add_option("--dim", ib_dim);
    auto* cmd_index_validate = cmd_index->add_subcommand("validate", "load a manifest and report");
    std::string iv_manifest;
    cmd_index_validate->add_option("manifest", iv_manifest)->required();

    // --- retrieve ---------------------------------------------------------
    auto* cmd_ret = app.add_subcommand("retrieve", "rank index images against a text query");
    std::string ret_text, ret_index;
    int ret_k = 5;
    cmd_ret->add_option("--text", ret_text)->required();
    cmd_ret->add_option("--index", ret_index)->required();
    cmd_ret->add_option("-k", ret_k);

    // --- styles -----------------------------------------------------------
    auto* cmd_styles = app.add_subcommand("styles", "style library");
    auto* cmd_styles_build = cmd_styles->add_subcommand("build", "cluster tuples into a style library");
    std::string sb_tuples, sb_out = "styles.json";
    int sb_m = 16;
    std::uint64_t sb_seed = 1;
    cmd_styles_build->add_option("--tuples", sb_tuples)->required();
    cmd_styles_build->add_option("-M,--clusters", sb_m);
    cmd_styles_build->add_option("--seed", sb_seed);
    cmd_styles_build->add_option("-o,--out", sb_out);
    auto* cmd_styles_match = cmd_styles->add_subcommand("match", "match a text/background to a style");
    std::string sm_styles, sm_text, sm_bg = "#808080";
    double sm_w = 0.7;
    cmd_styles_match->add_option("--styles", sm_styles)->required();
    cmd_styles_match->add_option("--text", sm_text)->required();
    cmd_styles_match->add_option("--background", sm_bg);
    cmd_styles_match->add_option("-w,--weight", sm_w);
    auto* cmd_styles_synth = cmd_styles->add_subcommand("synth", "write a synthetic tuples corpus");
    std::string ss_out = "tuples.json";
    int ss_n = 200, ss_styles = 8;
    std::uint64_t ss_seed = 1;
    double ss_jitter = 0.05;
    cmd_styles_synth->add_option("-n,--count", ss_n);
    cmd_styles_synth->add_option("--styles", ss_styles);
    cmd_styles_synth->add_option("--seed", ss_seed);
    cmd_styles_synth->add_option("--jitter", ss_jitter);
    cmd_styles_synth->add_option("-o,--out", ss_out);

    // --- dataset ----------------------------------------------------------
    auto* cmd_ds = app.add_subcommand("dataset", "synthetic dataset");
    auto* cmd_ds_build = cmd_ds->add_subcommand("build", "generate a synthetic poster dataset");
    std::string db_out = "dataset";
    int db_n = 200;
    std::uint64_t db_seed = 1;
    cmd_ds_build->add_option("-n,--count", db_n);
    cmd_ds_build->add_option("--seed", db_seed);
    cmd_ds_build->add_option("-o,--out", db_out);

    // --- train-g1 / train-g2 ----------------------------------------------
    auto* cmd_tg1 = app.add_subcommand("train-g1", "train the layout-distribution auto-encoder");
    auto* cmd_tg2 = app.add_subcommand("train-g2", "train the refinement auto-encoder");
    struct TrainArgs {
        std::string dataset, out;
        double lr = 0.005;
        int batch = 32, epochs = 3, max_steps = 0;
        std::uint64_t seed = 7;
        double delta = 0.1;
        double target = 0.0;
        bool verbose = false;
    } tg1, tg2;
    for (auto [cmd, args] : {std::pair{cmd_tg1, &tg1}, std::pair{cmd_tg2, &tg2}}) {
        cmd->add_option("--dataset", args->dataset, "dataset manifest.json")->required();
        cmd->add_option("-o,--out", args->out, "checkpoint path")->required();
        cmd->add_option("--lr", args->lr);
        cmd->add_option("--batch", args->batch);
        cmd->add_option("--epochs", args->epochs);
        cmd->add_option("--max-steps", args->max_steps);
        cmd->add_option("--seed", args->seed);
        cmd->add_option("--target", args->target, "stop once validation reaches this");
        cmd->add_flag("--verbose", args->verbose);
    }
    cmd_tg2->add_option("--delta", tg2.delta, "perturbation radius");

    // --- layout -----------------------------------------------------------
    auto* cmd_layout = app.add_subcommand("layout", "predict a layout for texts on an image");
    std::string lay_image, lay_texts, lay_out = "layout.json", lay_overlay;
    CommonModelArgs lay_models;
    cmd_layout->add_option("image", lay_image)->required();
    cmd_layout->add_option("texts", lay_texts)->required();
    cmd_layout->add_option("--g1", lay_models.g1_path)->required();
    cmd_layout->add_option("--g2", lay_models.g2_path)->required();
    cmd_layout->add_option("-K,--iterations", lay_models.refine_iters);
    cmd_layout->add_option("--seed", lay_models.seed);
    cmd_layout->add_option("-o,--out", lay_out);
    cmd_layout->add_option("--overlay", lay_overlay, "write a box overlay image");

    // --- generate -----------------------------------------------------------
    auto* cmd_gen = app.add_subcommand("generate", "full pipeline: texts in, poster out");
    std::string gen_texts, gen_index, gen_styles_path, gen_out = "poster.png", gen_spec;
    CommonModelArgs gen_models;
    cmd_gen->add_option("--texts", gen_texts)->required();
    cmd_gen->add_option("--index", gen_index)->required();
    cmd_gen->add_option("--g1", gen_models.g1_path)->required();
    cmd_gen->add_option("--g2", gen_models.g2_path)->required();
    cmd_gen->add_option("--styles", gen_styles_path)->required();
    cmd_gen->add_option("-K,--iterations", gen_models.refine_iters);
    cmd_gen->add_option("--seed", gen_models.seed);
    cmd_gen->add_option("-o,--out", gen_out);
    cmd_gen->add_option("--spec", gen_spec, "write the structured poster spec JSON");

    // --- eval ---------------------------------------------------------------
    auto* cmd_eval = app.add_subcommand("eval", "Fréchet layout distance between two layout sets");
    std::string ev_generated, ev_reference;
    cmd_eval->add_option("--generated", ev_generated)->required();
    cmd_eval->add_option("--reference", ev_reference)->required();

    CLI11_PARSE(app, argc, argv);
    if (serial) kernels::set_parallel(false);

    if (cmd_sal->parsed()) {
        SaliencyConfig cfg;
        cfg.working_width = sal_ww;
        const auto map = spectral_residual(load_image(sal_image), cfg);
        save_png(sal_out, map_to_image(map));
        std::cout << "wrote " << sal_out << " (" << map.width << "x" << map.height << ")\n";
        return kExitOk;
    }

    if (cmd_reg->parsed()) {
        SmoothRegionConfig cfg = SmoothRegionConfig::defaults();
        cfg.lambda = reg_lambda;
        cfg.threshold_factor = reg_tf;
        cfg.nms_iou = reg_iou;
        const auto image = load_image(reg_image);
        const auto sal = spectral_residual(image);
        const auto sal_map = resize_map(sal, reg_w, reg_h);
        const auto smooth = detect_smooth_regions(sal_map, cfg);
        save_png(reg_overlay, region_overlay(image, sal, smooth));
        if (!reg_map.empty()) save_png(reg_map, map_to_image(smooth));
        std::cout << "wrote " << reg_overlay << (reg_map.empty() ? "" : " and " + reg_map) << "\n";
        return kExitOk;
    }

    if (cmd_index_build->parsed()) {
        if (!fs::is_directory(ib_images)) {
            throw MissingResourceError("index build: not a directory: " + ib_images);
        }
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(ib_images)) {
            const auto ext = e.path().extension().string();
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw InvalidInputError("index build: no images in " + ib_images);
        ThumbnailProjectionImageEmbedder embedder(ib_dim);
        EmbeddingIndex index(ib_dim);
        for (const auto& f : files) {
            index.add(f.stem().string(), f.string(), embedder.embed(load_image(f)));
        }
        index.save(ib_manifest);
        std::cout << "indexed " << index.size() << " images (dim " << ib_dim << ") -> " << ib_manifest
                  << "\n";
        return kExitOk;
    }

    if (cmd_index_validate->parsed()) {
        const auto index = EmbeddingIndex::load(iv_manifest);
        std::cout << "ok: " << index.size() << " entries, dim " << index.dim() << "\n";
        return kExitOk;
    }

    if (cmd_ret->parsed()) {
        const auto index = EmbeddingIndex::load(ret_index);
        HashedNgramTextEmbedder embedder(index.dim());
        const auto ranked = index.top_k(embedder.embed(ret_text), ret_k);
        for (const auto& [id, score] : ranked) {
            std::cout << id << "\t" << score << "\t" << index.path_for(id) << "\n";
        }
        return kExitOk;
    }

    if (cmd_styles_build->parsed()) {
        HashedNgramTextEmbedder embedder;
        const auto tuples = load_style_tuples(sb_tuples, embedder);
        const auto lib = build_library(tuples, sb_m, sb_seed);
        lib.save(sb_out);
        std::cout << "built " << lib.cluster_count() << " style centers -> " << sb_out << "\n";
        return kExitOk;
    }

    if (cmd_styles_match->parsed()) {
        const auto lib = StyleLibrary::load(sm_styles);
        HashedNgramTextEmbedder embedder(static_cast<int>(lib.centers[0].embedding.size()));
        const auto choice = match_style(lib, embedder.embed(sm_text), rgb_from_hex(sm_bg), sm_w);
        nlohmann::ordered_json j{{"text_color", rgb_to_hex(choice.text_color)},
                                 {"font", choice.font},
                                 {"contrast_flipped", choice.contrast_flipped}};
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    }

    if (cmd_styles_synth->parsed()) {
        HashedNgramTextEmbedder embedder;
        const auto fonts = FontRegistry::builtin();
        save_style_tuples(ss_out, synth_style_corpus(ss_n, ss_styles, ss_seed, embedder, fonts, ss_jitter));
        std::cout << "wrote " << ss_n << " tuples (" << ss_styles << " planted styles) -> " << ss_out
                  << "\n";
        return kExitOk;
    }

    if (cmd_ds_build->parsed()) {
        const auto manifest = build_dataset(db_n, db_seed, db_out);
        std::cout << "dataset: " << manifest.count << " samples (" << manifest.train_ids.size()
                  << " train / " << manifest.val_ids.size() << " val) -> " << db_out << "\n";
        return kExitOk;
    }

    if (cmd_tg1->parsed() || cmd_tg2->parsed()) {
        const TrainArgs& args = cmd_tg1->parsed() ? tg1 : tg2;
        const auto manifest = load_dataset_manifest(args.dataset);
        const auto data = load_training_set(manifest);
        TrainHyper hyper;
        hyper.lr = args.lr;
        hyper.batch = args.batch;
        hyper.epochs = args.epochs;
        hyper.max_steps = args.max_steps;
        hyper.seed = args.seed;
        hyper.delta_x = hyper.delta_y = args.delta;
        hyper.target_val_loss = args.target;
        hyper.verbose = args.verbose;
        if (cmd_tg1->parsed()) {
            G1Model model({manifest.map_w, manifest.map_h});
            const auto report = train_g1(model, data, hyper);
            model.save(args.out);
            std::cout << "g1: " << report.steps << " steps, val mse " << report.val_loss << " (baseline "
                      << constant_predictor_mse(data, 0.5) << "), " << report.seconds << " s -> "
                      << args.out << "\n";
        } else {
            G2Model model({manifest.map_w, manifest.map_h});
            const auto report = train_g2(model, data, hyper);
            model.save(args.out);
            const auto ev = eval_g2_positions(model, data, 1, hyper.delta_x, hyper.delta_y, 99);
            double me = 0.0, be = 0.0;
            for (size_t i = 0; i < ev.model_err.size(); ++i) {
                me += ev.model_err[i];
                be += ev.baseline_err[i];
            }
            me /= static_cast<double>(ev.model_err.size());
            be /= static_cast<double>(ev.model_err.size());
            std::cout << "g2: " << report.steps << " steps, val pos err " << me << " (baseline " << be
                      << "), " << report.seconds << " s -> " << args.out << "\n";
        }
        return kExitOk;
    }

    if (cmd_layout->parsed()) {
        const auto texts = load_texts_json(lay_texts);
        const auto g1 = G1Model::load(lay_models.g1_path);
        const auto g2 = G2Model::load(lay_models.g2_path);
        const auto image = load_image(lay_image);
        const auto& mc = g1.config();
        const auto sal = spectral_residual(image);
        const auto sal_map = resize_map(sal, mc.map_w, mc.map_h);
        const auto smooth = detect_smooth_regions(sal_map, SmoothRegionConfig::defaults());
        const auto dist = g1.predict(smooth);
        const Layout p0 = sample_initial_layout(dist, texts, lay_models.seed);
        std::vector<TextAttribute> attrs;
        for (const auto& t : texts) attrs.push_back(t.attribute);
        const Layout refined = g2.refine(smooth, dist, p0, attrs, lay_models.refine_iters);
        std::vector<double> shifts;
        const Layout final_layout = separate_boxes(refined, 0.05, &shifts);

        nlohmann::ordered_json j;
        j["version"] = 1;
        j["seed"] = lay_models.seed;
        j["refine_iters"] = lay_models.refine_iters;
        auto& jt = j["texts"] = nlohmann::ordered_json::array();
        for (const auto& t : texts) {
            jt.push_back({{"text", t.text}, {"attribute", attribute_name(t.attribute)}});
        }
        auto& jl = j["layout"] = nlohmann::ordered_json::array();
        for (const auto& b : final_layout.boxes) {
            jl.push_back({{"x", b.x}, {"y", b.y}, {"width", b.width}, {"height", b.height}});
        }
        j["separation_shift"] = shifts;
        write_text_file(lay_out, j.dump(2) + "\n");
        if (!lay_overlay.empty()) {
            RasterImage overlay = region_overlay(image, sal, resize_map(smooth, image.width, image.height));
            for (const auto& b : final_layout.boxes) {
                const int x0 = static_cast<int>(b.x * image.width);
                const int y0 = static_cast<int>(b.y * image.height);
                const int x1 = std::min(image.width - 1, static_cast<int>((b.x + b.width) * image.width));
                const int y1 = std::min(image.height - 1, static_cast<int>((b.y + b.height) * image.height));
                for (int x = x0; x <= x1; ++x) {
                    overlay.at(x, y0, 1) = 1.0;
                    overlay.at(x, y1, 1) = 1.0;
                }
                for (int y = y0; y <= y1; ++y) {
                    overlay.at(x0, y, 1) = 1.0;
                    overlay.at(x1, y, 1) = 1.0;
                }
            }
            save_png(lay_overlay, overlay);
        }
        std::cout << "wrote " << lay_out << "\n";
        return kExitOk;
    }

    if (cmd_gen->parsed()) {
        const auto texts = load_texts_json(gen_texts);
        const auto index = EmbeddingIndex::load(gen_index);
        const auto g1 = G1Model::load(gen_models.g1_path);
        const auto g2 = G2Model::load(gen_models.g2_path);
        const auto styles = StyleLibrary::load(gen_styles_path);
        const auto fonts = FontRegistry::builtin();
        HashedNgramTextEmbedder embedder(index.dim());
        PipelineConfig cfg;
        cfg.refine_iters = gen_models.refine_iters;
        cfg.seed = gen_models.seed;
        cfg.map_w = g1.config().map_w;
        cfg.map_h = g1.config().map_h;
        const auto result = generate(texts, index, embedder, g1, g2, styles, fonts, cfg);
        save_png(gen_out, result.poster);
        if (!gen_spec.empty()) write_text_file(gen_spec, result.spec.to_json());
        std::cout << "poster: background " << result.spec.background_id << ", " << texts.size()
                  << " texts -> " << gen_out << "\n";
        return kExitOk;
    }

    if (cmd_eval->parsed()) {
        const auto generated = read_layout_dir(ev_generated);
        const auto reference = read_layout_dir(ev_reference);
        const auto fg = layout_features_batch(generated);
        const auto fr = layout_features_batch(reference);
        const double d = frechet_distance(fg, fr);
        auto means = [](const std::vector<LayoutFeatureVector>& f) {
            std::vector<double> m(kLayoutFeatureDim, 0.0);
            for (const auto& v : f) {
                for (int i = 0; i < kLayoutFeatureDim; ++i) m[static_cast<size_t>(i)] += v[static_cast<size_t>(i)];
            }
            for (auto& x : m) x /= static_cast<double>(f.size());
            return m;
        };
        nlohmann::ordered_json j;
        j["metric"] = "frechet_layout_distance";
        j["generated_count"] = generated.size();
        j["reference_count"] = reference.size();
        j["distance"] = d;
        j["generated_feature_means"] = means(fg);
        j["reference_feature_means"] = means(fr);
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    }

    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const InvalidInputError& e) {
        std::cerr << "error (invalid input): " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const ConfigError& e) {
        std::cerr << "error (invalid input): " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const MissingResourceError& e) {
        std::cerr << "error (missing resource): " << e.what() << "\n";
        return kExitMissingResource;
    } catch (const LoadError& e) {
        std::cerr << "error (invalid input): " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}

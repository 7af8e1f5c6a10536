// Command-line front end: eigen-distortion synthesis, rendering, training,
// evaluation, observer simulation and the dense reference solver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "eigdist/error.hpp"
#include "eigdist/fisher.hpp"
#include "eigdist/fixtures.hpp"
#include "eigdist/io.hpp"
#include "eigdist/observer.hpp"
#include "eigdist/oracle.hpp"
#include "eigdist/random.hpp"
#include "eigdist/trainer.hpp"
#include "eigdist/zoo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eigdist;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNonConvergence = 3;

struct Options {
    std::string model = "mse";
    std::string params;
    std::vector<std::string> images;
    std::string manifest;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    double tol = 1e-6;
    std::size_t max_iters = 10000;
    double sigma = 1e-6;
    std::size_t trials = 120;

    // render
    std::string vector;
    double alpha = 1.0;
    std::string gallery;
    std::string name = "distorted";

    // train
    std::size_t epochs = 10;
    double lr = 1e-3;
    std::size_t batch_size = 16;
    double holdout = 0.2;
    double weight_decay = 1e-4;

    // simulate
    std::string reference = "onoff";
    std::string ref_params;
    std::size_t subjects = 3;
    bool analytic = false;

    // fixture
    std::size_t size = 32;
    std::string format = "pgm16";
    std::string out;

    // dataset
    std::size_t records = 200;
    double score_noise = 0.0;
    bool relative_noise = false;
};

struct NonConvergence {
    std::string what;
};

std::optional<ParamsFile> maybe_params(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return load_params(path);
}

ZooModel build(const std::string& type, const std::optional<ParamsFile>& params, std::size_t h, std::size_t w) {
    return model_for(parse_model_type(type), h, w, params ? &*params : nullptr);
}

const std::string& single_image(const Options& o) {
    if (o.images.size() != 1) throw InputDomainError("exactly one --image is required");
    return o.images.front();
}

std::string file_name(const std::string& p) { return fs::path(p).filename().string(); }

json base_config(const std::string& command, const Options& o) {
    json images = json::array();
    for (const auto& i : o.images) images.push_back(file_name(i));
    return {{"command", command}, {"model", o.model},   {"params", file_name(o.params)},
            {"images", images},   {"seed", o.seed},     {"tol", o.tol},
            {"max_iters", o.max_iters}};
}

json fit_json(const PsychometricFit& f) {
    return {{"threshold", json_number(f.threshold)},
            {"location", json_number(f.location)},
            {"slope", json_number(f.slope)},
            {"log_likelihood", json_number(f.log_likelihood)},
            {"converged", f.converged},
            {"censored", f.censored},
            {"alphas", f.alphas},
            {"proportions", f.proportions},
            {"trials", f.trials}};
}

int run_synth(const Options& o) {
    const Grid2 x = load_image(single_image(o));
    const ZooModel m = build(o.model, maybe_params(o.params), x.height(), x.width());
    const IterationConfig cfg{o.tol, o.max_iters, o.seed};
    const EigenResult r = synthesize(m.chain(), x, cfg);
    const fs::path dir(o.out_dir);
    save_image(r.e_max, dir / "e_max.raw", ImageFormat::raw_f32, {{"vector", "e_max"}});
    save_image(r.e_min, dir / "e_min.raw", ImageFormat::raw_f32, {{"vector", "e_min"}});
    json j = eigen_result_to_json(r);
    j["model_type"] = o.model;
    j["image"] = file_name(single_image(o));
    j["height"] = x.height();
    j["width"] = x.width();
    j["vectors"] = {{"e_max", "e_max.raw"}, {"e_min", "e_min.raw"}};
    add_provenance(j, o.seed, base_config("synth", o));
    write_json(dir / "eigen.json", j);
    std::printf("lambda_max=%.10g lambda_min=%.10g iterations=%zu/%zu\n", r.lambda_max, r.lambda_min, r.iterations_max,
                r.iterations_min);
    if (!r.converged()) throw NonConvergence{"iteration limit reached before the tolerance was met"};
    return kExitOk;
}

int run_render(const Options& o) {
    const Grid2 x = load_image(single_image(o));
    const fs::path dir(o.out_dir);
    json cfg = base_config("render", o);
    json j;
    if (!o.gallery.empty()) {
        if (!o.vector.empty()) throw InputDomainError("--gallery and --vector are exclusive");
        const fs::path g(o.gallery);
        const Grid2 e_max = load_image(g / "e_max.raw");
        const Grid2 e_min = load_image(g / "e_min.raw");
        const auto files = render_gallery(x, e_max, e_min, dir);
        json names = json::array();
        for (const auto& f : files) names.push_back(f.filename().string());
        j = {{"mode", "gallery"}, {"files", names}, {"alpha_max", kGalleryAlphaMax}, {"alpha_min", kGalleryAlphaMin}};
        cfg["gallery"] = "gallery";
    } else {
        if (o.vector.empty()) throw InputDomainError("render needs --vector or --gallery");
        const Grid2 e = load_image(o.vector);
        const RenderResult r = render_distorted(x, e, o.alpha, dir, o.name);
        j = {{"mode", "single"},
             {"files", {r.clipped_path.filename().string(), r.raw_path.filename().string()}},
             {"alpha", o.alpha},
             {"clipped_count", r.clipped}};
        cfg["vector"] = file_name(o.vector);
        cfg["alpha"] = o.alpha;
    }
    add_provenance(j, o.seed, cfg);
    write_json(dir / "render.json", j);
    return kExitOk;
}

int run_train(const Options& o) {
    if (o.manifest.empty()) throw InputDomainError("train needs --manifest");
    const Manifest man = load_manifest(o.manifest);
    if (man.records.empty()) throw SizeError("manifest has no records");
    const Grid2& first = man.records.front().reference;
    const ZooModel init = build(o.model, maybe_params(o.params), first.height(), first.width());
    TrainConfig tc;
    tc.learning_rate = o.lr;
    tc.epochs = o.epochs;
    tc.batch_size = o.batch_size;
    tc.holdout_fraction = o.holdout;
    tc.weight_decay = o.weight_decay;
    tc.seed = o.seed;
    const TrainResult res = train(init, man.records, tc);

    json cfg = base_config("train", o);
    cfg.update({{"manifest", file_name(o.manifest)},
                {"epochs", o.epochs},
                {"lr", o.lr},
                {"batch_size", o.batch_size},
                {"holdout", o.holdout},
                {"weight_decay", o.weight_decay}});
    const fs::path dir(o.out_dir);
    json p = params_to_json(res.model);
    p["best_epoch"] = res.best_epoch;
    p["best_rho_holdout"] = json_number(res.best_rho_holdout);
    add_provenance(p, o.seed, cfg);
    write_json(dir / "params.json", p);
    std::string log;
    for (const auto& e : res.log) {
        log += json{{"epoch", e.epoch}, {"rho_train", json_number(e.rho_train)}, {"rho_holdout", json_number(e.rho_holdout)}}
                   .dump() +
               "\n";
    }
    fs::create_directories(dir);
    std::ofstream(dir / "train_log.jsonl", std::ios::binary | std::ios::trunc) << log;
    std::printf("best_epoch=%zu rho_holdout=%.6f\n", res.best_epoch, res.best_rho_holdout);
    return kExitOk;
}

int run_eval(const Options& o) {
    if (o.manifest.empty()) throw InputDomainError("eval needs --manifest");
    const Manifest man = load_manifest(o.manifest);
    if (man.records.size() < 3) throw SizeError("eval needs at least 3 records");
    const auto params = maybe_params(o.params);
    // One model per image size; TID-style corpora share a size.
    std::vector<double> d(man.records.size()), s(man.records.size());
    std::map<std::pair<std::size_t, std::size_t>, ZooModel> models;
    for (std::size_t i = 0; i < man.records.size(); ++i) {
        const Grid2& ref = man.records[i].reference;
        const auto key = std::make_pair(ref.height(), ref.width());
        auto it = models.find(key);
        if (it == models.end()) it = models.emplace(key, build(o.model, params, key.first, key.second)).first;
        d[i] = perceptual_distance(it->second.chain(), ref, man.records[i].distorted);
        s[i] = man.records[i].score;
    }
    const double rho = pearson(d, s);
    std::printf("rho=%.6f\n", rho);
    if (o.out_dir != ".") {
        json j = {{"rho", json_number(rho)}, {"records", man.records.size()}, {"model_type", o.model}};
        json cfg = base_config("eval", o);
        cfg["manifest"] = file_name(o.manifest);
        add_provenance(j, o.seed, cfg);
        write_json(fs::path(o.out_dir) / "eval.json", j);
    }
    return kExitOk;
}

int run_simulate(const Options& o) {
    if (o.images.empty()) throw InputDomainError("simulate needs at least one --image");
    std::vector<Grid2> images;
    for (const auto& p : o.images) images.push_back(load_image(p));
    const auto params = maybe_params(o.params);
    const auto ref_params = maybe_params(o.ref_params);
    ObserverConfig oc;
    oc.sigma = o.sigma;
    oc.trials_per_vector = o.trials;
    oc.seed = o.seed;
    oc.validate();

    std::vector<DistortionPair> pairs;
    json per_image = json::array();
    std::vector<ModelChain> refs;
    bool all_converged = true;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const Grid2& x = images[i];
        const ZooModel test = build(o.model, params, x.height(), x.width());
        const IterationConfig ic{o.tol, o.max_iters, derive_seed(o.seed, {1000, i})};
        const EigenResult r = synthesize(test.chain(), x, ic);
        all_converged = all_converged && r.converged();
        pairs.push_back({r.e_max, r.e_min});
        per_image.push_back({{"image_id", file_name(o.images[i])}, {"eigen", eigen_result_to_json(r)}});
    }
    // Each image is judged by a reference observer built for its size.
    DReport total;
    double sum = 0.0;
    bool infinite = false;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const ZooModel ref = build(o.reference, ref_params, images[i].height(), images[i].width());
        ObserverConfig cfg = oc;
        cfg.seed = derive_seed(o.seed, {i});
        const DReport rep = empirical_D(std::span(&pairs[i], 1), ref.chain(), std::span(&images[i], 1), cfg,
                                        o.subjects, o.analytic);
        json entries = json::array();
        for (DEntry e : rep.entries) {
            e.image = i;
            entries.push_back({{"subject", e.subject},
                               {"thresholds", {{"max", json_number(e.threshold_max)}, {"min", json_number(e.threshold_min)}}},
                               {"log_ratio", json_number(e.log_ratio)},
                               {"censored", e.censored},
                               {"fits", {{"max", fit_json(e.fit_max)}, {"min", fit_json(e.fit_min)}}},
                               {"seeds", {{"image", e.seed}, {"stream_max", 2 * e.subject}, {"stream_min", 2 * e.subject + 1}}}});
            total.entries.push_back(e);
            if (e.censored) {
                ++total.n_censored;
                infinite = infinite || e.log_ratio > 0;
            } else {
                ++total.n_finite;
                sum += e.log_ratio;
            }
        }
        per_image[i]["entries"] = entries;
    }
    total.D_finite = total.n_finite > 0 ? sum / static_cast<double>(total.n_finite) : std::nan("");
    total.D = infinite ? kInfiniteThreshold : total.D_finite;

    json censored = json::array();
    for (const auto& e : total.entries) {
        if (e.censored) censored.push_back({{"image", e.image}, {"subject", e.subject}, {"log_ratio", json_number(e.log_ratio)}});
    }
    json j = {{"model_id", o.model},
              {"reference_id", o.reference},
              {"sigma", o.sigma},
              {"criterion", oc.criterion},
              {"trials_per_vector", o.trials},
              {"subjects", o.subjects},
              {"analytic", o.analytic},
              {"images", per_image},
              {"D", json_number(total.D)},
              {"D_finite", json_number(total.D_finite)},
              {"censored", {{"count", total.n_censored}, {"entries", censored}}}};
    json cfg = base_config("simulate", o);
    cfg.update({{"reference", o.reference}, {"ref_params", file_name(o.ref_params)}, {"sigma", o.sigma},
                {"trials", o.trials}, {"subjects", o.subjects}, {"analytic", o.analytic}});
    add_provenance(j, o.seed, cfg);
    write_json(fs::path(o.out_dir) / "report.json", j);
    std::printf("D=%s\n", json_number(total.D).dump().c_str());
    if (!all_converged) throw NonConvergence{"eigen-distortion synthesis hit the iteration limit"};
    return kExitOk;
}

int run_oracle(const Options& o) {
    const Grid2 x = load_image(single_image(o));
    if (x.size() > kDenseJacobianLimit) {
        throw SizeError("oracle supports at most " + std::to_string(kDenseJacobianLimit) + " pixels");
    }
    const ZooModel m = build(o.model, maybe_params(o.params), x.height(), x.width());
    const DenseEigenReport d = dense_fisher_eigen(m.chain(), x, default_fd_step(x));
    const fs::path dir(o.out_dir);
    Grid2 e_max = d.e_max, e_min = d.e_min;
    canonicalize_sign(e_max);
    canonicalize_sign(e_min);
    save_image(e_max, dir / "oracle_e_max.raw", ImageFormat::raw_f32, {{"vector", "e_max"}});
    save_image(e_min, dir / "oracle_e_min.raw", ImageFormat::raw_f32, {{"vector", "e_min"}});
    json j = {{"model_type", o.model},
              {"image", file_name(single_image(o))},
              {"lambda_max", json_number(d.lambda_max)},
              {"lambda_min", json_number(d.lambda_min)},
              {"lambda_second_max", json_number(d.lambda_second_max)},
              {"lambda_second_min", json_number(d.lambda_second_min)},
              {"spectrum", d.spectrum},
              {"vectors", {{"e_max", "oracle_e_max.raw"}, {"e_min", "oracle_e_min.raw"}}}};
    add_provenance(j, o.seed, base_config("oracle", o));
    write_json(dir / "oracle.json", j);
    std::printf("lambda_max=%.10g lambda_min=%.10g\n", d.lambda_max, d.lambda_min);
    return kExitOk;
}

int run_dataset(const Options& o) {
    if (o.images.empty()) throw InputDomainError("dataset needs at least one --image");
    std::vector<Grid2> bases;
    for (const auto& p : o.images) bases.push_back(load_image(p));
    for (const auto& b : bases) {
        if (b.height() != bases[0].height() || b.width() != bases[0].width()) {
            throw ShapeError("dataset base images must share one size");
        }
    }
    const ZooModel truth = build(o.model, maybe_params(o.params), bases[0].height(), bases[0].width());
    SyntheticConfig sc;
    sc.n_records = o.records;
    sc.score_noise = o.score_noise;
    sc.relative_noise = o.relative_noise;
    sc.seed = o.seed;
    const SyntheticDataset ds = generate_synthetic_dataset(truth.chain(), bases, sc);

    const fs::path dir(o.out_dir);
    Manifest man;
    char buf[64];
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        std::size_t base = 0;
        while (!(bases[base] == ds.records[i].reference)) ++base;
        std::snprintf(buf, sizeof buf, "images/ref_%03zu.raw", base);
        man.ref_paths.push_back(buf);
        std::snprintf(buf, sizeof buf, "images/dist_%04zu.raw", i);
        man.dist_paths.push_back(buf);
        save_image(ds.records[i].distorted, dir / buf, ImageFormat::raw_f32);
        man.records.push_back(ds.records[i]);
    }
    for (std::size_t b = 0; b < bases.size(); ++b) {
        std::snprintf(buf, sizeof buf, "images/ref_%03zu.raw", b);
        save_image(bases[b], dir / buf, ImageFormat::raw_f32);
    }
    save_manifest(dir / "manifest.csv", man);
    json j = {{"model_type", o.model},
              {"records", o.records},
              {"score_noise", o.score_noise},
              {"relative_noise", o.relative_noise},
              {"noise_sd", json_number(ds.noise_sd)},
              {"score_gain", sc.score_gain},
              {"score_offset", sc.score_offset},
              {"true_distances", ds.true_distances}};
    json cfg = base_config("dataset", o);
    cfg.update({{"records", o.records}, {"score_noise", o.score_noise}, {"relative_noise", o.relative_noise}});
    add_provenance(j, o.seed, cfg);
    write_json(dir / "dataset.json", j);
    return kExitOk;
}

int run_fixture(const Options& o) {
    if (o.size < 8) throw ShapeError("fixture images need size >= 8");
    const Grid2 x = fixture_image(o.seed, o.size, o.size);
    save_image(x, o.out, parse_image_format(o.format), {{"fixture_seed", o.seed}});
    return kExitOk;
}

void add_common(CLI::App* cmd, Options& o, bool needs_image) {
    cmd->add_option("--model", o.model, "mse, ln, lg, lgg, onoff or cnn")->capture_default_str();
    cmd->add_option("--params", o.params, "parameter JSON (default: built-in fixture parameters)");
    auto* img = cmd->add_option("--image", o.images, "input image (PGM P5 or RAW-F32 with sidecar)");
    if (needs_image) img->required();
    cmd->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
    cmd->add_option("--tol", o.tol, "relative eigenvalue tolerance")->capture_default_str();
    cmd->add_option("--max-iters", o.max_iters, "iteration limit per eigenpair")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Eigen-distortion synthesis and perceptual model toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    Options o;

    auto* synth = app.add_subcommand("synth", "extremal Fisher eigen-distortions of a model at an image");
    add_common(synth, o, true);

    auto* render = app.add_subcommand("render", "render x + alpha e, or a two-distortion gallery");
    add_common(render, o, true);
    render->add_option("--vector", o.vector, "distortion vector (RAW-F32)");
    render->add_option("--alpha", o.alpha, "amplitude")->capture_default_str();
    render->add_option("--gallery", o.gallery, "directory holding e_max.raw and e_min.raw from synth");
    render->add_option("--name", o.name, "output stem for single renders")->capture_default_str();

    auto* trn = app.add_subcommand("train", "fit a model to a rated manifest");
    add_common(trn, o, false);
    trn->add_option("--manifest", o.manifest, "CSV manifest")->required();
    trn->add_option("--epochs", o.epochs)->capture_default_str();
    trn->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
    trn->add_option("--batch-size", o.batch_size)->capture_default_str();
    trn->add_option("--holdout", o.holdout, "holdout fraction")->capture_default_str();
    trn->add_option("--weight-decay", o.weight_decay)->capture_default_str();

    auto* ev = app.add_subcommand("eval", "Pearson correlation of model distances with manifest scores");
    add_common(ev, o, false);
    ev->add_option("--manifest", o.manifest, "CSV manifest")->required();

    auto* sim = app.add_subcommand("simulate", "simulated 2AFC thresholds for a model's eigen-distortions");
    add_common(sim, o, true);
    sim->add_option("--sigma", o.sigma, "observer response-noise sd")->capture_default_str();
    sim->add_option("--trials", o.trials, "trials per distortion vector")->capture_default_str();
    sim->add_option("--reference", o.reference, "reference observer model type")->capture_default_str();
    sim->add_option("--ref-params", o.ref_params, "reference observer parameter JSON");
    sim->add_option("--subjects", o.subjects, "simulated subjects")->capture_default_str();
    sim->add_flag("--analytic", o.analytic, "use analytic thresholds instead of simulated trials");

    auto* orc = app.add_subcommand("oracle", "dense finite-difference Fisher eigenpairs (small images)");
    add_common(orc, o, true);

    auto* dat = app.add_subcommand("dataset", "synthetic rated dataset from a ground-truth model");
    add_common(dat, o, true);
    dat->add_option("--records", o.records)->capture_default_str();
    dat->add_option("--score-noise", o.score_noise, "score noise sd")->capture_default_str();
    dat->add_flag("--relative-noise", o.relative_noise, "score noise as a fraction of std(D_true)");

    auto* fix = app.add_subcommand("fixture", "write a seeded synthetic test image");
    fix->add_option("--seed", o.seed, "fixture seed")->capture_default_str();
    fix->add_option("--size", o.size, "side length in pixels")->capture_default_str();
    fix->add_option("--format", o.format, "pgm8, pgm16 or raw")->capture_default_str();
    fix->add_option("--out", o.out, "output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "error:usage: %s\n", e.what());
        return kExitInput;
    }

    try {
        if (*synth) return run_synth(o);
        if (*render) return run_render(o);
        if (*trn) return run_train(o);
        if (*ev) return run_eval(o);
        if (*sim) return run_simulate(o);
        if (*orc) return run_oracle(o);
        if (*dat) return run_dataset(o);
        if (*fix) return run_fixture(o);
    } catch (const NonConvergence& e) {
        std::fprintf(stderr, "error:non-convergence: %s\n", e.what.c_str());
        return kExitNonConvergence;
    } catch (const Error& e) {
        std::fprintf(stderr, "error:%s: %s\n", e.category().c_str(), e.what());
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error:io: %s\n", e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error:internal: %s\n", e.what());
        return 1;
    }
    return kExitOk;
}

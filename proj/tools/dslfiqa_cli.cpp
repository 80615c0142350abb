#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dslfiqa/data/dataset.hpp"
#include "dslfiqa/data/embeddings.hpp"
#include "dslfiqa/data/toy_faces.hpp"
#include "dslfiqa/dsl/train.hpp"
#include "dslfiqa/io/image_io.hpp"
#include "dslfiqa/iqa/gfiqa.hpp"
#include "dslfiqa/metrics/metrics.hpp"

namespace fs = std::filesystem;
using namespace dslfiqa;

namespace {

constexpr const char* kVersion = "0.1.0";

// 0 success, 2 usage, 3 io, 4 numeric failure, 5 bad input data
int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::IOFailure: return 3;
    case ErrorCode::NonFiniteLoss: return 4;
    case ErrorCode::BadConfig: return 2;
    default: return 5;
  }
}

void stamp_run(const fs::path& dir, const CLI::App* sub, uint64_t seed) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  nlohmann::json j;
  j["command"] = sub->get_name();
  j["version"] = kVersion;
  j["seed"] = seed;
  nlohmann::json opts = nlohmann::json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
    if (name.empty() || name == "help") continue;
    if (!opt->results().empty())
      opts[name] = opt->results().size() == 1 ? nlohmann::json(opt->results().front()) : nlohmann::json(opt->results());
    else
      opts[name] = opt->get_default_str();
  }
  j["resolved_options"] = opts;
  std::ofstream out(dir / "run_config.json", std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) fail(ErrorCode::IOFailure, "cannot write run stamp in '" + dir.string() + "'");
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) fail(ErrorCode::IOFailure, "cannot write '" + path + "'");
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

struct GenDataArgs {
  int n = 200;
  uint64_t seed = 1;
  std::string out;
  std::string mode = "regression";
  int image_size = 96;
  int gallery_n = 300;
  int query_n = 100;
};

int run_gen_data(const GenDataArgs& a, const CLI::App* sub) {
  stamp_run(a.out, sub, a.seed);
  if (a.mode == "regression") {
    data::ToyDatasetOptions opt;
    opt.n_images = a.n;
    opt.seed = a.seed;
    opt.image_size = a.image_size;
    data::generate_toy_dataset(opt, a.out);
    std::cout << (fs::path(a.out) / "manifest.jsonl").string() << "\n";
  } else {
    data::RetrievalBenchmarkOptions opt;
    opt.n_train = a.n;
    opt.n_gallery = a.gallery_n;
    opt.n_queries = a.query_n;
    opt.image_size = a.image_size;
    opt.seed = a.seed;
    data::generate_retrieval_benchmark(opt, a.out);
    for (const char* part : {"train", "gallery", "queries"})
      std::cout << (fs::path(a.out) / part / "manifest.jsonl").string() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// train-encoder
// ---------------------------------------------------------------------------

struct TrainEncoderArgs {
  std::string regime = "dsl";
  std::string manifest;
  std::string out;
  double clean_mos_threshold = 0.95;
  dsl::EncoderConfig cfg;
};

int run_train_encoder(TrainEncoderArgs& a, const CLI::App* sub) {
  const auto ds = data::load_dataset(a.manifest);
  auto train_idx = ds.split_indices(data::Split::kTrain);
  if (train_idx.empty())
    for (size_t i = 0; i < ds.manifest.records.size(); ++i) train_idx.push_back(i);

  bool has_labels = false;
  for (const size_t i : train_idx) has_labels = has_labels || ds.manifest.records[i].label.has_value();

  std::vector<Image> clean_pool;
  degrade::RPool r_pool;
  for (const size_t i : train_idx) {
    const auto& rec = ds.manifest.records[i];
    if (!rec.mos) continue;
    const bool clean = has_labels ? (rec.label && *rec.label == "clean") : (*rec.mos >= a.clean_mos_threshold);
    if (clean) clean_pool.push_back(ds.images[i]);
    r_pool.images.push_back(ds.images[i]);
    r_pool.mos.push_back(static_cast<float>(*rec.mos));
  }
  if (!r_pool.images.empty()) a.cfg.input_size = r_pool.images.front().height();

  auto trained = dsl::train_encoder(dsl::regime_from_name(a.regime), clean_pool, r_pool, a.cfg);

  stamp_run(a.out, sub, a.cfg.seed);
  dsl::save_encoder(trained, (fs::path(a.out) / "encoder.ckpt").string());
  dsl::write_loss_log_csv((fs::path(a.out) / "loss_log.csv").string(), trained.loss_log);
  std::cout << (fs::path(a.out) / "encoder.ckpt").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train-iqa
// ---------------------------------------------------------------------------

struct TrainIqaArgs {
  std::string manifest;
  std::string encoder_ckpt;
  std::string out;
  iqa::ModelConfig cfg;
};

int run_train_iqa(const TrainIqaArgs& a, const CLI::App* sub) {
  const auto ds = data::load_dataset(a.manifest);
  auto encoder = dsl::load_encoder(a.encoder_ckpt);
  iqa::ModelConfig cfg = a.cfg;
  cfg.deg_dim = encoder.config.repr_dim;

  auto trained = iqa::train_gfiqa(ds, encoder, cfg);

  stamp_run(a.out, sub, cfg.seed);
  iqa::save_gfiqa(trained, (fs::path(a.out) / "model.ckpt").string());
  dsl::write_loss_log_csv((fs::path(a.out) / "loss_log.csv").string(), trained.loss_log);
  std::cout << (fs::path(a.out) / "model.ckpt").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string model_ckpt;
  std::string encoder_ckpt;
  std::string image;
  std::string manifest;
  std::string landmarks_file;
  std::string out;
  bool emit_confidence_map = false;
};

nlohmann::json prediction_to_json(const std::string& path, const iqa::QualityPrediction& pred) {
  nlohmann::json per_patch = nlohmann::json::array();
  for (const auto& p : pred.per_patch)
    per_patch.push_back({{"rect", {p.rect.x0, p.rect.y0, p.rect.w, p.rect.h}}, {"patch_mos", p.patch_mos}});
  return {{"path", path}, {"mos", pred.mos}, {"per_patch", per_patch}};
}

int run_score(const ScoreArgs& a, const CLI::App* sub) {
  auto model = iqa::load_gfiqa(a.model_ckpt);
  auto encoder = dsl::load_encoder(a.encoder_ckpt);

  struct Item {
    std::string path;
    Image image;
    lm::LandmarkSet landmarks;
  };
  std::vector<Item> items;
  if (!a.image.empty()) {
    Item item;
    item.path = a.image;
    try {
      item.image = read_image(a.image);
    } catch (const Error&) {
      std::cerr << "cannot read image '" << a.image << "'\n";
      return 5;
    }
    if (!a.landmarks_file.empty())
      for (auto& [id, set] : lm::read_landmark_file(a.landmarks_file))
        if (id == a.image || fs::path(id).filename() == fs::path(a.image).filename()) item.landmarks = set;
    items.push_back(std::move(item));
  } else if (!a.manifest.empty()) {
    const auto ds = data::load_dataset(a.manifest);
    for (size_t i = 0; i < ds.images.size(); ++i)
      items.push_back({ds.manifest.records[i].image_path, ds.images[i], ds.landmarks[i]});
  } else {
    fail(ErrorCode::BadConfig, "score needs --image or --manifest");
  }

  std::ofstream results_file;
  if (!a.out.empty()) {
    stamp_run(a.out, sub, model.config.seed);
    results_file.open(fs::path(a.out) / "scores.jsonl", std::ios::trunc);
  }
  for (auto& item : items) {
    const auto pred = iqa::score_image(item.image, model, encoder, item.landmarks);
    const auto line = prediction_to_json(item.path, pred).dump();
    std::cout << line << "\n";
    if (results_file.is_open()) results_file << line << "\n";
    if (a.emit_confidence_map) {
      const auto map =
          iqa::export_confidence_map(pred, item.image.height(), item.image.width(), model.config.token_size);
      const fs::path base = a.out.empty() ? fs::path(item.path).parent_path() : fs::path(a.out);
      const std::string prefix = (base / (fs::path(item.path).stem().string() + "_confidence")).string();
      iqa::write_confidence_map(prefix, map);
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model_ckpt;
  std::string encoder_ckpt;
  std::string manifest;
  std::string split = "test";
  std::string out;
  std::string per_image_csv;
};

int run_eval(const EvalArgs& a, const CLI::App* sub) {
  auto model = iqa::load_gfiqa(a.model_ckpt);
  auto encoder = dsl::load_encoder(a.encoder_ckpt);
  const auto ds = data::load_dataset(a.manifest);
  const auto idx = ds.split_indices(data::split_from_name(a.split));
  if (idx.empty()) fail(ErrorCode::InsufficientImages, "split '" + a.split + "' holds no records");

  metrics::ScorePairs pairs;
  std::vector<std::pair<std::string, std::pair<double, double>>> per_image;
  for (const size_t i : idx) {
    const auto& rec = ds.manifest.records[i];
    if (!rec.mos) fail(ErrorCode::BadConfig, "record '" + rec.image_path + "' lacks a MOS value");
    const auto pred = iqa::score_image(ds.images[i], model, encoder, ds.landmarks[i]);
    pairs.actual.push_back(*rec.mos);
    pairs.predicted.push_back(pred.mos);
    per_image.emplace_back(rec.image_path, std::make_pair(*rec.mos, pred.mos));
  }
  nlohmann::json report = {{"plcc", metrics::plcc(pairs)},
                           {"srcc", metrics::srcc(pairs)},
                           {"n", pairs.actual.size()},
                           {"split", a.split}};
  std::cout << report.dump(2) << "\n";
  if (!a.out.empty()) {
    write_json_file(a.out, report);
    const fs::path parent = fs::path(a.out).parent_path();
    stamp_run(parent.empty() ? fs::path(".") : parent, sub, model.config.seed);
  }
  if (!a.per_image_csv.empty()) {
    std::ofstream csv(a.per_image_csv, std::ios::trunc);
    csv << "path,gt_mos,pred_mos\n";
    char buf[64];
    for (const auto& [path, scores] : per_image) {
      std::snprintf(buf, sizeof(buf), ",%.9g,%.9g\n", scores.first, scores.second);
      csv << path << buf;
    }
    if (!csv) fail(ErrorCode::IOFailure, "cannot write '" + a.per_image_csv + "'");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// retrieve
// ---------------------------------------------------------------------------

struct RetrieveArgs {
  std::string encoder_ckpt;
  std::string queries;
  std::string gallery;
  int k = 5;
  std::string out;
};

int run_retrieve(const RetrieveArgs& a, const CLI::App* sub) {
  auto encoder = dsl::load_encoder(a.encoder_ckpt);

  const auto encode_set = [&](const std::string& manifest_path, Eigen::MatrixXf& reps,
                              std::vector<std::string>& labels) {
    const auto ds = data::load_dataset(manifest_path);
    reps.resize(static_cast<Eigen::Index>(ds.images.size()), encoder.config.repr_dim);
    for (size_t i = 0; i < ds.images.size(); ++i) {
      if (!ds.manifest.records[i].label)
        fail(ErrorCode::BadConfig, "record '" + ds.manifest.records[i].image_path + "' lacks a label");
      reps.row(static_cast<Eigen::Index>(i)) = encoder.encode(ds.images[i]).transpose();
      labels.push_back(*ds.manifest.records[i].label);
    }
  };
  Eigen::MatrixXf qreps, greps;
  std::vector<std::string> qlabels, glabels;
  encode_set(a.queries, qreps, qlabels);
  encode_set(a.gallery, greps, glabels);

  const auto result = metrics::retrieval_experiment(qreps, qlabels, greps, glabels, a.k);
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& q : result.per_query)
    per_query.push_back({{"query_label", q.query_label}, {"retrieved_labels", q.retrieved_labels}, {"ap", q.ap}});
  nlohmann::json report = {{"map", result.map}, {"k", a.k}, {"per_query", per_query}};
  std::cout << nlohmann::json({{"map", result.map}, {"k", a.k}, {"queries", qlabels.size()}}).dump() << "\n";
  if (!a.out.empty()) {
    write_json_file(a.out, report);
    const fs::path parent = fs::path(a.out).parent_path();
    stamp_run(parent.empty() ? fs::path(".") : parent, sub, encoder.config.seed);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// export-embeddings
// ---------------------------------------------------------------------------

struct ExportArgs {
  std::string encoder_ckpt;
  std::string manifest;
  std::string out;
  std::string split = "all";
};

int run_export_embeddings(const ExportArgs& a, const CLI::App* sub) {
  auto encoder = dsl::load_encoder(a.encoder_ckpt);
  const auto ds = data::load_dataset(a.manifest);
  std::vector<size_t> idx;
  if (a.split == "all")
    for (size_t i = 0; i < ds.images.size(); ++i) idx.push_back(i);
  else
    idx = ds.split_indices(data::split_from_name(a.split));

  data::EmbeddingTable table;
  table.reps.resize(static_cast<Eigen::Index>(idx.size()), encoder.config.repr_dim);
  for (size_t t = 0; t < idx.size(); ++t) {
    table.reps.row(static_cast<Eigen::Index>(t)) = encoder.encode(ds.images[idx[t]]).transpose();
    const auto& rec = ds.manifest.records[idx[t]];
    table.labels.push_back(rec.label ? *rec.label : "unknown");
  }
  data::write_embeddings_tsv(a.out, table);
  const fs::path parent = fs::path(a.out).parent_path();
  stamp_run(parent.empty() ? fs::path(".") : parent, sub, encoder.config.seed);
  std::cout << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dslfiqa: face image quality assessment with dual-set degradation learning"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.allow_config_extras(false);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a procedural toy dataset");
  gen_cmd->add_option("--n", gen.n, "Number of images")->check(CLI::Range(10, 1000000))->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Root RNG seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--mode", gen.mode, "regression | retrieval")
      ->check(CLI::IsMember({"regression", "retrieval"}))
      ->capture_default_str();
  gen_cmd->add_option("--image-size", gen.image_size, "Image side in pixels")
      ->check(CLI::Range(16, 4096))
      ->capture_default_str();
  gen_cmd->add_option("--gallery-n", gen.gallery_n, "Gallery size (retrieval mode)")->capture_default_str();
  gen_cmd->add_option("--query-n", gen.query_n, "Query count (retrieval mode)")->capture_default_str();

  TrainEncoderArgs te;
  CLI::App* te_cmd = app.add_subcommand("train-encoder", "Train the degradation encoder");
  te_cmd->set_config("--config", "", "INI config file (keys are the long option names)");
  te_cmd->add_option("--regime", te.regime, "dsl | patch | naive")
      ->check(CLI::IsMember({"dsl", "patch", "naive"}))
      ->required();
  te_cmd->add_option("--manifest", te.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  te_cmd->add_option("--out", te.out, "Output directory")->required();
  te_cmd->add_option("--iterations", te.cfg.iterations, "Optimization iterations")->capture_default_str();
  te_cmd->add_option("--lr", te.cfg.learning_rate, "Adam learning rate")->capture_default_str();
  te_cmd->add_option("--seed", te.cfg.seed, "Root RNG seed")->capture_default_str();
  te_cmd->add_option("--repr-dim", te.cfg.repr_dim, "Representation dimension")->capture_default_str();
  te_cmd->add_option("--mlp-hidden", te.cfg.mlp_hidden, "MLP hidden width")->capture_default_str();
  te_cmd->add_option("--set-r-size", te.cfg.set_r_size, "Set R size per iteration")->capture_default_str();
  te_cmd->add_option("--temperature", te.cfg.temperature, "Contrastive temperature")->capture_default_str();
  te_cmd->add_flag("--include-positive", te.cfg.include_positive,
                   "Include the positive term in contrastive denominators");
  te_cmd->add_option("--patch-size", te.cfg.patch_size, "Crop side for the patch regime")->capture_default_str();
  te_cmd->add_option("--patch-batch-images", te.cfg.patch_batch_images, "Images per patch-regime batch")
      ->capture_default_str();
  te_cmd->add_option("--naive-sources", te.cfg.naive_sources, "Set S count per naive-regime batch")
      ->capture_default_str();
  te_cmd->add_option("--clean-mos-threshold", te.clean_mos_threshold, "Clean-pool MOS cutoff without labels")
      ->capture_default_str();

  TrainIqaArgs ti;
  CLI::App* ti_cmd = app.add_subcommand("train-iqa", "Train the quality regressor on a frozen encoder");
  ti_cmd->set_config("--config", "", "INI config file (keys are the long option names)");
  ti_cmd->add_option("--manifest", ti.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  ti_cmd->add_option("--encoder-ckpt", ti.encoder_ckpt, "Frozen encoder checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  ti_cmd->add_option("--out", ti.out, "Output directory")->required();
  ti_cmd->add_option("--iterations", ti.cfg.iterations, "Optimization steps")->capture_default_str();
  ti_cmd->add_option("--lr", ti.cfg.learning_rate, "Adam learning rate")->capture_default_str();
  ti_cmd->add_option("--batch", ti.cfg.batch, "Crops per step")->capture_default_str();
  ti_cmd->add_option("--seed", ti.cfg.seed, "Root RNG seed")->capture_default_str();
  ti_cmd->add_option("--patch-input", ti.cfg.patch_input, "Crop side P")->capture_default_str();
  ti_cmd->add_option("--token-size", ti.cfg.token_size, "Token side in pixels")->capture_default_str();
  ti_cmd->add_option("--embed-dim", ti.cfg.embed_dim, "Token embedding width")->capture_default_str();
  ti_cmd->add_option("--heads", ti.cfg.heads, "Attention heads")->capture_default_str();
  ti_cmd->add_option("--window", ti.cfg.window, "Window side in tokens")->capture_default_str();
  ti_cmd->add_option("--refine-blocks", ti.cfg.refine_blocks, "Windowed attention blocks")->capture_default_str();
  ti_cmd->add_option("--decoder-blocks", ti.cfg.decoder_blocks, "Cross-attention decoder blocks")
      ->capture_default_str();
  ti_cmd->add_option("--head-hidden", ti.cfg.head_hidden, "Regression head hidden width")->capture_default_str();
  ti_cmd->add_option("--charbonnier-eps", ti.cfg.charbonnier_eps, "Charbonnier epsilon")->capture_default_str();
  ti_cmd->add_option("--landmark-bands", ti.cfg.landmark_bands, "Sinusoidal frequency bands")->capture_default_str();
  ti_cmd->add_flag("!--no-landmarks", ti.cfg.use_landmarks, "Disable landmark guidance");

  ScoreArgs sc;
  CLI::App* sc_cmd = app.add_subcommand("score", "Score images");
  sc_cmd->add_option("--model-ckpt", sc.model_ckpt, "Quality model checkpoint")->required()->check(CLI::ExistingFile);
  sc_cmd->add_option("--encoder-ckpt", sc.encoder_ckpt, "Degradation encoder checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  CLI::Option* sc_image = sc_cmd->add_option("--image", sc.image, "Single image to score");
  sc_cmd->add_option("--manifest", sc.manifest, "Manifest of images to score")->excludes(sc_image);
  sc_cmd->add_option("--landmarks", sc.landmarks_file, "Landmark JSONL for --image");
  sc_cmd->add_option("--out", sc.out, "Directory for scores.jsonl and confidence maps");
  sc_cmd->add_flag("--emit-confidence-map", sc.emit_confidence_map, "Write per-image confidence maps");

  EvalArgs ev;
  CLI::App* ev_cmd = app.add_subcommand("eval", "Evaluate PLCC/SRCC on a split");
  ev_cmd->add_option("--model-ckpt", ev.model_ckpt, "Quality model checkpoint")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--encoder-ckpt", ev.encoder_ckpt, "Degradation encoder checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  ev_cmd->add_option("--manifest", ev.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--split", ev.split, "train | val | test")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  ev_cmd->add_option("--out", ev.out, "Report JSON path");
  ev_cmd->add_option("--per-image-csv", ev.per_image_csv, "Optional per-image CSV path");

  RetrieveArgs re;
  CLI::App* re_cmd = app.add_subcommand("retrieve", "Degradation retrieval benchmark");
  re_cmd->add_option("--encoder-ckpt", re.encoder_ckpt, "Degradation encoder checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  re_cmd->add_option("--queries", re.queries, "Query manifest")->required()->check(CLI::ExistingFile);
  re_cmd->add_option("--gallery", re.gallery, "Gallery manifest")->required()->check(CLI::ExistingFile);
  re_cmd->add_option("--k", re.k, "Retrieval depth")->check(CLI::Range(1, 1000))->capture_default_str();
  re_cmd->add_option("--out", re.out, "Report JSON path");

  ExportArgs ex;
  CLI::App* ex_cmd = app.add_subcommand("export-embeddings", "Export degradation representations as TSV");
  ex_cmd->add_option("--encoder-ckpt", ex.encoder_ckpt, "Degradation encoder checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  ex_cmd->add_option("--manifest", ex.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--out", ex.out, "Output TSV path")->required();
  ex_cmd->add_option("--split", ex.split, "all | train | val | test")
      ->check(CLI::IsMember({"all", "train", "val", "test"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen_cmd->parsed()) return run_gen_data(gen, gen_cmd);
    if (te_cmd->parsed()) return run_train_encoder(te, te_cmd);
    if (ti_cmd->parsed()) return run_train_iqa(ti, ti_cmd);
    if (sc_cmd->parsed()) return run_score(sc, sc_cmd);
    if (ev_cmd->parsed()) return run_eval(ev, ev_cmd);
    if (re_cmd->parsed()) return run_retrieve(re, re_cmd);
    if (ex_cmd->parsed()) return run_export_embeddings(ex, ex_cmd);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

#include "maskcontrast/commands.h"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "maskcontrast/config.h"
#include "maskcontrast/dataset.h"
#include "maskcontrast/eval.h"
#include "maskcontrast/retrieval.h"
#include "maskcontrast/synth.h"
#include "maskcontrast/trainer.h"

MC_NAMESPACE_BEGIN

namespace fs = std::filesystem;

namespace {

RunConfig resolve_config(const std::optional<fs::path>& file,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  if (file) {
    for (const auto& [k, v] : read_config_file(*file)) cfg.set(k, v);
  }
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error("write failed: " + path.string());
}

void fit_input_size(RunConfig& cfg, const Dataset& data) {
  if (cfg.input_size_set) return;
  const auto& img = data.samples.front().image;
  cfg.model.input_height = static_cast<int>(img.dim(1));
  cfg.model.input_width = static_cast<int>(img.dim(2));
}

}  // namespace

void cmd_synth(const SynthOptions& options) {
  SynthConfig cfg;
  cfg.images = options.images;
  cfg.classes = options.classes;
  cfg.size = options.size;
  cfg.seed = options.seed;
  write_synthetic_dataset(options.out, cfg);
}

void cmd_train(const TrainOptions& options, std::ostream& log) {
  RunConfig cfg = resolve_config(options.config_file, options.overrides);
  const Dataset data = load_dataset(options.data, false);
  fit_input_size(cfg, data);
  cfg.validate();
  const ModelParams init = init_model(cfg.model, cfg.trainer.seed);
  const TrainResult result = train(data, init, cfg.augment, cfg.loss, cfg.trainer, [&](const EpochMetrics& m) {
    log << "epoch " << m.epoch << "/" << cfg.trainer.epochs << " contrastive " << m.contrastive_loss << " aux "
        << m.aux_loss << " lr " << m.lr << '\n';
  });
  if (result.skipped_steps > 0) log_warning(std::to_string(result.skipped_steps) + " steps skipped");
  save_model(options.out, result.query);
  fs::path metrics = options.metrics.value_or(fs::path(options.out).replace_extension(".csv"));
  write_metrics_csv(metrics, result.metrics);
}

std::string cmd_eval(const EvalOptions& options) {
  const ModelParams params = load_model(options.checkpoint);
  const Dataset data = load_dataset(options.data, true);
  const MaskSource source = options.saliency_from_file ? MaskSource::kFile : MaskSource::kPredicted;
  const std::vector<ImageEmbedding> images = embed_dataset(params, data, source);

  EvalReport report;
  if (options.mode == EvalMode::kLinear) {
    std::vector<Tensor> emb;
    std::vector<LabelMap> labels;
    for (std::size_t i = 0; i < images.size(); ++i) {
      emb.push_back(images[i].embeddings);
      labels.push_back(*data.samples[i].labels);
    }
    ProbeConfig pc;
    pc.epochs = options.probe_epochs;
    pc.seed = options.seed;
    pc.lr_drop_epoch = options.probe_epochs * 2 / 3;
    report = linear_probe(emb, labels, data.max_label() + 1, pc).report;
  } else {
    ClusterProtocol proto;
    proto.clusters = options.clusters > 0 ? options.clusters : data.max_label();
    proto.runs = options.runs;
    proto.seed = options.seed;
    proto.mode = options.mode == EvalMode::kKMeans ? MatchMode::kHungarian : MatchMode::kMajority;
    proto.mask_source = source;
    proto.foreground_only = options.foreground_only;
    report = evaluate_clustering(images, data, proto);
  }
  const std::string json = report_json(report);
  if (options.out) write_text(*options.out, json);
  return json;
}

void cmd_index(const IndexOptions& options) {
  const ModelParams params = load_model(options.checkpoint);
  const Dataset data = load_dataset(options.data, false);
  const auto images = embed_dataset(params, data, options.predicted_masks ? MaskSource::kPredicted : MaskSource::kFile);
  save_index(options.out, build_index(images, data, options.split));
}

std::string cmd_retrieve(const RetrieveOptions& options) {
  const SegmentIndex index = load_index(options.index);
  SegmentIndex queries;
  bool leave_one_out = false;
  if (fs::is_regular_file(options.query)) {
    queries = load_index(options.query);
  } else {
    queries = SegmentIndex(index.dim(), index.split());
    bool found = false;
    for (const auto& e : index.entries()) {
      if (e.image_id != options.query) continue;
      queries.add(e.image_id, e.cls, e.embedding);
      found = true;
    }
    if (!found) throw DataError("query '" + options.query + "' is neither an index file nor an id in the index");
    // The ranked list shows the query itself; precision does not count it.
    leave_one_out = true;
  }

  nlohmann::ordered_json j;
  j["topk"] = options.topk;
  nlohmann::ordered_json results = nlohmann::ordered_json::array();
  for (const auto& q : queries.entries()) {
    nlohmann::ordered_json r;
    r["id"] = q.image_id;
    r["class"] = q.cls;
    nlohmann::ordered_json nn = nlohmann::ordered_json::array();
    for (const auto& n : query(index, q.embedding, options.topk)) {
      nn.push_back({{"id", index[n.index].image_id}, {"class", index[n.index].cls}, {"similarity", n.similarity}});
    }
    r["neighbors"] = nn;
    results.push_back(r);
  }
  const RetrievalScore score = retrieval_score(index, queries, options.topk, leave_one_out);
  j["precision"] = score.precision;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [cls, p] : score.per_class) per[std::to_string(cls)] = p;
  j["per_class_precision"] = per;
  j["queries"] = results;
  const std::string text = j.dump(2) + "\n";
  if (options.out) write_text(*options.out, text);
  return text;
}

void cmd_finetune(const FinetuneOptions& options, std::ostream& log) {
  RunConfig cfg = resolve_config(options.config_file, options.overrides);
  const ModelParams pretrained = load_model(options.checkpoint);
  const Dataset data = load_dataset(options.data, true);
  FinetuneConfig fc;
  fc.trainer = cfg.trainer;
  fc.label_fraction = options.fraction;
  const FinetuneResult res = supervised_finetune(data, pretrained, fc);
  for (const auto& m : res.metrics) {
    log << "epoch " << m.epoch << " loss " << m.loss << " pixel_accuracy " << m.pixel_accuracy << '\n';
  }
  save_classifier(options.out, res.model);
}

int run_guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return 0;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

MC_NAMESPACE_END

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "neurocap/errors.hpp"

namespace {

using namespace neurocap;
using namespace neurocap::cli;

enum ExitCode : int { kOk = 0, kOther = 1, kUsage = 2, kData = 3, kNumeric = 4 };

void add_records(CLI::App* cmd, RecordSource& source, const std::string& flag, const std::string& what) {
  cmd->add_option(flag, source.path, what + ": dataset directory or .ncmx matrix")->required();
  cmd->add_option("--split", source.split, "Dataset rows to use: train, test, unlabeled or all")
      ->check(CLI::IsMember({"train", "test", "unlabeled", "all"}))
      ->capture_default_str();
  cmd->add_option("--ids", source.ids, "Id list file restricting the dataset rows");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Caption generation from brain activity: data synthesis, training, decoding and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "neurocap 0.1.0");

  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic paired dataset");
  synth_cmd->add_option("--out", synth.out, "Output dataset directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--preset", synth.preset, "Named preset (paper-scale-ratio)");
  synth_cmd->add_option("--n", synth.n_train, "Number of captioned records");
  synth_cmd->add_option("--n-unlabeled", synth.n_unlabeled, "Number of brain-only records");
  synth_cmd->add_option("--brain-dim", synth.brain_dim, "Voxels per brain record");
  synth_cmd->add_option("--feature-dim", synth.feature_dim, "Image feature width");
  synth_cmd->add_option("--noise", synth.noise_std, "Brain noise standard deviation");
  synth_cmd->add_option("--clusters", synth.clusters, "Number of latent scene clusters");
  synth_cmd->add_option("--cluster-spread", synth.cluster_spread, "Feature spread within a cluster");
  synth_cmd->add_option("--templates", synth.templates, "Caption templates per cluster");
  synth_cmd->add_option("--ar1", synth.ar1, "AR(1) coefficient of the voxel noise");
  synth_cmd->add_option("--train-fraction", synth.train_fraction, "Share of captioned records in the train split")
      ->capture_default_str();

  TrainOptions train;
  std::string train_kind;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model from a TOML config");
  train_cmd->add_option("kind", train_kind, "Model kind")
      ->required()
      ->check(CLI::IsMember({"ridge", "mlp3", "dnn5", "ae", "lm"}));
  train_cmd->add_option("--config", train.config, "TOML config file")->required();
  train_cmd->add_option("--out", train.out, "Output directory (default: <output>/<kind> from the config)");
  train_cmd->add_option("--seed", train.seed, "Override the config seed");
  train_cmd->add_option("--init", train.init, "Autoencoder checkpoint initialising dnn5");
  train_cmd->add_option("--resume", train.resume, "Continue training from a checkpoint");
  train_cmd->add_flag("--paper-init", train.paper_init, "Unscaled standard-normal initial weights");

  cli::DecodeOptions decode;
  CLI::App* decode_cmd = app.add_subcommand("decode", "Generate captions from brain records");
  add_records(decode_cmd, decode.input, "--input", "Brain records");
  decode_cmd->add_option("--regressor", decode.regressor, "Regressor checkpoint");
  decode_cmd->add_flag("--from-features", decode.from_features, "Decode the stored image features directly");
  decode_cmd->add_option("--lm", decode.lm, "Language model checkpoint")->required();
  decode_cmd->add_option("--beam", decode.beam, "Beam width (greedy when omitted)");
  decode_cmd->add_option("--max-len", decode.max_len, "Maximum caption length")->capture_default_str();
  decode_cmd->add_flag("--allow-unk", decode.allow_unk, "Allow the unknown-word token in captions");
  decode_cmd->add_option("--out", decode.out, "Output JSONL file")->required();

  RetrieveOptions retrieve;
  CLI::App* retrieve_cmd = app.add_subcommand("retrieve", "Rank database images by feature MSE");
  add_records(retrieve_cmd, retrieve.queries, "--queries", "Query records");
  retrieve_cmd->add_option("--db", retrieve.db, "Feature database (.ncfd) or dataset directory")->required();
  retrieve_cmd->add_option("--regressor", retrieve.regressor, "Regressor mapping brain queries to features");
  retrieve_cmd->add_option("--k", retrieve.k, "Neighbours per query")->capture_default_str();
  retrieve_cmd->add_option("--out", retrieve.out, "Output JSONL file")->required();

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score decoded captions with BLEU-4 and METEOR");
  eval_cmd->add_option("--candidates", eval.candidates, "Decode output JSONL")->required();
  eval_cmd->add_option("--references", eval.references, "Reference JSONL: {\"id\", \"references\": [...]}");
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset whose captions (or features) give the references");
  eval_cmd->add_option("--pseudo-lm", eval.pseudo_lm, "Language model producing pseudo ground truth");
  eval_cmd->add_option("--width", eval.width, "Pseudo ground-truth beam width")->capture_default_str();
  eval_cmd->add_option("--max-len", eval.max_len, "Pseudo ground-truth maximum length")->capture_default_str();
  eval_cmd->add_option("--ids", eval.ids, "Id list restricting the evaluated samples");
  eval_cmd->add_option("--out", eval.out, "Output report directory")->required();

  MaskOptions mask;
  CLI::App* mask_cmd = app.add_subcommand("mask", "Select voxels whose score exceeds a threshold");
  mask_cmd->add_option("--scores", mask.scores, "Voxel score file")->required();
  mask_cmd->add_option("--threshold", mask.threshold, "Strict lower bound on the score")->required();
  mask_cmd->add_option("--out", mask.out, "Output mask file")->required();

  ReportOptions report;
  CLI::App* report_cmd = app.add_subcommand("report", "Render training logs and metric CSVs as SVG plots");
  report_cmd->add_option("inputs", report.inputs, "log.csv or metric CSV files")->required();
  report_cmd->add_option("--out", report.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return kOk;
    std::cerr << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kUsage;
  }

  try {
    if (*synth_cmd) {
      run_synth(synth);
    } else if (*train_cmd) {
      train.kind = parse_model_kind(train_kind);
      run_train(train);
    } else if (*decode_cmd) {
      run_decode(decode);
    } else if (*retrieve_cmd) {
      run_retrieve(retrieve);
    } else if (*eval_cmd) {
      run_eval(eval);
    } else if (*mask_cmd) {
      run_mask(mask);
    } else if (*report_cmd) {
      run_report(report);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const SolverError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOk;
}

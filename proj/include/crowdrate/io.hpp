#ifndef CROWDRATE_IO_HPP
#define CROWDRATE_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdrate/dataset.hpp"
#include "crowdrate/datagen.hpp"
#include "crowdrate/error.hpp"
#include "crowdrate/evaluate.hpp"
#include "crowdrate/model_spec.hpp"
#include "crowdrate/params.hpp"
#include "crowdrate/sampler.hpp"

namespace crowdrate {

namespace io {

using nlohmann::json;

// 17 significant digits: doubles round-trip exactly through the text form.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// All artifacts are written to a temporary file and renamed into place.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline void check_plain_id(const std::string& id) {
  for (char ch : id) {
    if (ch == ',' || ch == '\n' || ch == '"')
      throw DataError("id \"" + id + "\" contains a character the CSV format cannot carry");
  }
}

// ---------------------------------------------------------------------------
// ratings CSV: header exactly `item,rater,rating`; rating in {0,1}
// ---------------------------------------------------------------------------

inline RatingDataset load_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + " is empty");
  {
    auto header = split_csv_line(line);
    if (header.size() != 3 || header[0] != "item" || header[1] != "rater" ||
        header[2] != "rating")
      throw DataError(path.string() + ": header must be exactly `item,rater,rating`");
  }
  std::vector<RatingRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": expected 3 fields, got " + std::to_string(fields.size()));
    if (fields[2] != "0" && fields[2] != "1")
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": rating \"" +
                      fields[2] + "\" is not 0 or 1");
    rows.push_back({fields[0], fields[1], fields[2][0] - '0'});
  }
  if (rows.empty()) throw DataError(path.string() + " has no rating rows");
  return validate_dataset(rows);
}

inline std::string ratings_csv_text(const RatingDataset& data) {
  std::string out = "item,rater,rating\n";
  for (int n = 0; n < data.num_ratings(); ++n) {
    const std::string& item = data.item_ids[data.item[n]];
    const std::string& rater = data.rater_ids[data.rater[n]];
    check_plain_id(item);
    check_plain_id(rater);
    out += item;
    out += ',';
    out += rater;
    out += ',';
    out += static_cast<char>('0' + data.rating[n]);
    out += '\n';
  }
  return out;
}

inline void write_ratings_csv(const std::filesystem::path& path, const RatingDataset& data) {
  atomic_write(path, ratings_csv_text(data));
}

// index -> original id sidecars, 1-based to match the draw column names
inline void write_id_map(const std::filesystem::path& path, const std::string& kind,
                         const std::vector<std::string>& ids) {
  std::string out = "index," + kind + "\n";
  for (std::size_t k = 0; k < ids.size(); ++k) {
    check_plain_id(ids[k]);
    out += std::to_string(k + 1) + "," + ids[k] + "\n";
  }
  atomic_write(path, out);
}

// ---------------------------------------------------------------------------
// fit artifacts: draws CSV + manifest JSON + diagnostics JSON
// ---------------------------------------------------------------------------

struct FitArtifacts {
  ModelSpec spec;
  int num_items = 0;
  int num_raters = 0;
  std::vector<ParamBlock> draws;
};

inline void write_draws_csv(const std::filesystem::path& path, const ModelSpec& spec,
                            const ParamLayout& layout, const DrawsStore& store) {
  const auto names = param_column_names(layout);
  std::string out = "chain,iter";
  for (const auto& n : names) out += "," + n;
  out += '\n';
  std::vector<double> c;
  for (int chain = 0; chain < store.chains; ++chain) {
    for (int i = 0; i < store.iters; ++i) {
      constrain_vec(spec, layout, store.draw(chain, i), c);
      out += std::to_string(chain + 1);
      out += ',';
      out += std::to_string(i + 1);
      for (double v : c) {
        out += ',';
        out += fmt_double(v);
      }
      out += '\n';
    }
  }
  atomic_write(path, out);
}

inline void write_manifest(const std::filesystem::path& path, const ModelSpec& spec,
                           const RatingDataset& data, const SamplerConfig& cfg,
                           const ParamLayout& layout, const DrawsStore& store) {
  json j;
  j["model"] = spec.name;
  j["allow_adversarial"] = spec.allow_adversarial;
  j["num_items"] = data.num_items;
  j["num_raters"] = data.num_raters;
  j["chains"] = store.chains;
  j["sampling_iters"] = store.iters;
  j["dimension"] = layout.dimension;
  j["columns"] = param_column_names(layout);
  j["seed"] = cfg.seed;
  j["warmup_iters"] = cfg.warmup_iters;
  j["target_accept"] = cfg.target_accept;
  j["max_tree_depth"] = cfg.max_tree_depth;
  j["step_size"] = store.step_size;
  j["space"] = "constrained";
  atomic_write(path, j.dump(2) + "\n");
}

inline void write_diagnostics(const std::filesystem::path& path, const Diagnostics& diag) {
  json j;
  j["param_names"] = diag.param_names;
  j["split_rhat"] = diag.split_rhat;    // NaN serializes as null
  j["ess_bulk"] = diag.ess_bulk;
  j["max_split_rhat"] = diag.max_split_rhat;
  j["divergences"] = diag.divergences;
  j["max_depth_hits"] = diag.max_depth_hits;
  j["warnings"] = diag.warnings;
  atomic_write(path, j.dump(2) + "\n");
}

inline FitArtifacts load_fit(const std::filesystem::path& dir) {
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  FitArtifacts art;
  auto parsed = parse_model_name(manifest.at("model").get<std::string>());
  art.spec = parsed.spec;
  art.spec.allow_adversarial = manifest.at("allow_adversarial").get<bool>();
  art.num_items = manifest.at("num_items").get<int>();
  art.num_raters = manifest.at("num_raters").get<int>();
  const auto layout = make_layout(art.spec, art.num_items, art.num_raters);

  std::ifstream in(dir / "draws.csv");
  if (!in) throw DataError("cannot open " + (dir / "draws.csv").string());
  std::string line;
  std::getline(in, line);  // header
  const auto header = split_csv_line(line);
  if (static_cast<int>(header.size()) != 2 + layout.dimension)
    throw DataError("draws.csv does not match the manifest dimension");
  std::vector<double> c(layout.dimension);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != 2 + layout.dimension)
      throw DataError("draws.csv row with wrong field count");
    for (int d = 0; d < layout.dimension; ++d) c[d] = std::stod(fields[2 + d]);
    art.draws.push_back(param_block_from_flat(layout, c));
  }
  if (art.draws.empty()) throw DataError("draws.csv has no draws");
  return art;
}

inline void write_category_posterior(const std::filesystem::path& path,
                                     const RatingDataset& data,
                                     const std::vector<double>& mean_prob) {
  std::string out = "item,pr_z1\n";
  for (int i = 0; i < data.num_items; ++i) {
    out += data.item_ids[i] + "," + fmt_double(mean_prob[i]) + "\n";
  }
  atomic_write(path, out);
}

// ---------------------------------------------------------------------------
// evaluation reports
// ---------------------------------------------------------------------------

inline json ppc_report_json(const PpcReport& rep) {
  json j;
  j["rater_p_value"] = rep.rater_p_value;
  j["ratings_p_value"] = rep.ratings_p_value;
  j["rater"]["observed_discrepancy"] = rep.rater_trace.observed;
  j["rater"]["replicated_discrepancy"] = rep.rater_trace.replicated;
  j["item"]["observed_discrepancy"] = rep.item_trace.observed;
  j["item"]["replicated_discrepancy"] = rep.item_trace.replicated;
  j["observed_positive_per_rater"] = rep.observed_positive_per_rater;
  j["observed_positive_per_item"] = rep.observed_positive_per_item;
  j["vote_histogram"]["k"] = rep.histogram.k;
  j["vote_histogram"]["observed"] = rep.histogram.observed;
  j["vote_histogram"]["replicate_mean"] = rep.histogram.replicate_mean;
  j["vote_histogram"]["lo90"] = rep.histogram.lo90;
  j["vote_histogram"]["hi90"] = rep.histogram.hi90;
  return j;
}

inline std::string histogram_csv_text(const VoteHistogram& h) {
  std::string out = "k,observed,replicate_mean,lo90,hi90\n";
  for (std::size_t b = 0; b < h.k.size(); ++b) {
    out += std::to_string(h.k[b]) + "," + fmt_double(h.observed[b]) + "," +
           fmt_double(h.replicate_mean[b]) + "," + fmt_double(h.lo90[b]) + "," +
           fmt_double(h.hi90[b]) + "\n";
  }
  return out;
}

inline json loo_report_json(const LooReport& rep) {
  json j;
  j["unit"] = rep.unit == LooUnit::rating ? "rating" : "item";
  j["elpd_loo"] = rep.elpd_loo;
  j["pointwise"] = rep.pointwise;
  j["pareto_k"] = rep.pareto_k;  // NaN -> null for degenerate tails
  j["n_high_k"] = rep.n_high_k;
  j["high_k_threshold"] = LooReport::high_k_threshold;
  return j;
}

// ---------------------------------------------------------------------------
// model comparison table
// ---------------------------------------------------------------------------

struct ComparisonRow {
  std::string model;
  bool failed = false;
  std::string error;
  double rater_p_value = 0.0;
  double ratings_p_value = 0.0;
  double elpd_loo = 0.0;
  int divergences = 0;
  double max_split_rhat = 0.0;
};

inline std::string comparison_csv_text(const std::vector<ComparisonRow>& rows) {
  std::string out = "model,status,rater_p_value,ratings_p_value,elpd_loo,divergences,max_split_rhat\n";
  for (const auto& r : rows) {
    out += r.model;
    if (r.failed) {
      out += ",failed,,,,,\n";
    } else {
      out += ",ok," + fmt_double(r.rater_p_value) + "," + fmt_double(r.ratings_p_value) + "," +
             fmt_double(r.elpd_loo) + "," + std::to_string(r.divergences) + "," +
             fmt_double(r.max_split_rhat) + "\n";
    }
  }
  return out;
}

inline json comparison_json(const std::vector<ComparisonRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j;
    j["model"] = r.model;
    j["status"] = r.failed ? "failed" : "ok";
    if (r.failed) {
      j["error"] = r.error;
    } else {
      j["rater_p_value"] = r.rater_p_value;
      j["ratings_p_value"] = r.ratings_p_value;
      j["elpd_loo"] = r.elpd_loo;
      j["divergences"] = r.divergences;
      j["max_split_rhat"] = r.max_split_rhat;
    }
    arr.push_back(j);
  }
  return arr;
}

// ---------------------------------------------------------------------------
// simulation sidecars
// ---------------------------------------------------------------------------

inline void write_truth_z(const std::filesystem::path& path, const RatingDataset& data,
                          const std::vector<int>& z) {
  std::string out = "item,true_z\n";
  for (int i = 0; i < data.num_items; ++i)
    out += data.item_ids[i] + "," + std::to_string(z[i]) + "\n";
  atomic_write(path, out);
}

inline void write_truth_params(const std::filesystem::path& path, const ModelSpec& spec,
                               const ParamBlock& p) {
  json j;
  j["model"] = spec.name;
  j["pi"] = p.pi;
  if (!p.alpha_sens.empty()) {
    j["alpha_sens"] = p.alpha_sens;
    j["alpha_spec"] = p.alpha_spec;
  }
  if (!p.beta.empty()) j["beta"] = p.beta;
  if (!p.delta.empty()) j["delta"] = p.delta;
  if (!p.lambda.empty()) j["lambda"] = p.lambda;
  atomic_write(path, j.dump(2) + "\n");
}

}  // namespace io

// Command-level configuration for a single fit.
struct RunConfig {
  std::string model = "Full";
  SamplerConfig sampler;
  std::filesystem::path data_path;
  std::filesystem::path out_dir;
  bool allow_adversarial = false;
  LooUnit loo_unit = LooUnit::rating;
};

// Runs a fit and persists the artifact set into out_dir:
//   draws.csv, manifest.json, diagnostics.json, category_posterior.csv,
//   item_ids.csv, rater_ids.csv
inline FitResult cli_fit(const RunConfig& cfg, const RatingDataset& data) {
  auto parsed = parse_model_name(cfg.model);
  ModelSpec spec = parsed.spec;
  spec.allow_adversarial = cfg.allow_adversarial;
  FitResult result = fit(spec, data, cfg.sampler);

  const auto layout = make_layout(spec, data.num_items, data.num_raters);
  std::filesystem::create_directories(cfg.out_dir);
  io::write_draws_csv(cfg.out_dir / "draws.csv", spec, layout, result.draws);
  io::write_manifest(cfg.out_dir / "manifest.json", spec, data, cfg.sampler, layout,
                     result.draws);
  io::write_diagnostics(cfg.out_dir / "diagnostics.json", result.diagnostics);
  io::write_id_map(cfg.out_dir / "item_ids.csv", "item", data.item_ids);
  io::write_id_map(cfg.out_dir / "rater_ids.csv", "rater", data.rater_ids);

  // posterior mean Pr[z_i = 1], averaged over constrained draws
  const auto blocks = constrained_draws(spec, layout, result.draws);
  std::vector<double> mean_prob(static_cast<std::size_t>(data.num_items), 0.0);
  for (const auto& p : blocks) {
    const auto post = category_posterior(spec, p, data);
    for (int i = 0; i < data.num_items; ++i) mean_prob[i] += post[i];
  }
  for (auto& v : mean_prob) v /= static_cast<double>(blocks.size());
  io::write_category_posterior(cfg.out_dir / "category_posterior.csv", data, mean_prob);
  return result;
}

}  // namespace crowdrate

#endif

#include "playseg/report.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <optional>

#include <json.hpp>

#include "playseg/config.hpp"
#include "playseg/dataset_io.hpp"
#include "playseg/error.hpp"
#include "playseg/pipeline.hpp"
#include "playseg/policy.hpp"

namespace playseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<json> try_json(const fs::path& file) {
  if (!fs::exists(file)) return std::nullopt;
  try {
    return json::parse(read_text_file(file));
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Csv {
  std::string text;
  explicit Csv(const std::string& header) : text(header + "\n") {}
  template <typename... Cells>
  void row(const Cells&... cells) {
    std::string line;
    ((line += (line.empty() ? "" : ","), line += cells), ...);
    text += line + "\n";
  }
};

struct SeedStats {
  std::vector<double> rates;
  double mean = 0.0;
  std::optional<double> stddev;
};

SeedStats seed_stats(std::vector<double> rates) {
  SeedStats s;
  s.rates = std::move(rates);
  if (s.rates.empty()) return s;
  for (double r : s.rates) s.mean += r;
  s.mean /= static_cast<double>(s.rates.size());
  if (s.rates.size() >= 2) {
    double ss = 0.0;
    for (double r : s.rates) ss += (r - s.mean) * (r - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.rates.size() - 1));
  }
  return s;
}

PolicyEval pooled_eval(const std::vector<json>& evals) {
  PolicyEval p;
  for (const auto& e : evals) {
    p.episodes += e.at("episodes").get<std::int64_t>();
    p.successes += e.at("successes").get<std::int64_t>();
    const auto te = e.at("task_episodes").get<std::vector<std::int64_t>>();
    const auto ts = e.at("task_successes").get<std::vector<std::int64_t>>();
    for (std::size_t k = 0; k < te.size() && k < p.task_episodes.size(); ++k) {
      p.task_episodes[k] += te[k];
      p.task_successes[k] += ts[k];
    }
  }
  return p;
}

std::string start_condition(SplitTag tag) {
  return tag == SplitTag::kFull ? "gt-100" : "gt-" + std::string(split_tag_name(tag));
}

}  // namespace

ReportBundle build_report(const fs::path& run_dir) {
  ReportBundle out;
  json summary = json::object();
  auto missing = [&out](const std::string& what) { out.missing.push_back(what); };
  const auto cfg_json = try_json(run_dir / "config.json");
  if (!cfg_json) missing("config");
  const ExperimentConfig cfg =
      cfg_json ? parse_experiment_config(cfg_json->dump()) : default_experiment_config();

  if (auto run = try_json(run_dir / "run.json")) summary["run"] = *run;

  if (auto train = try_json(run_dir / "scorer" / "train.json")) {
    summary["scorer"] = {{"best_epoch", train->at("best_epoch")},
                         {"val_label_accuracy", train->at("val_label_accuracy")},
                         {"val_segment_accuracy", train->at("val_segment_accuracy")},
                         {"t_min", train->at("t_min")},
                         {"t_max", train->at("t_max")}};
    Csv csv("epoch,train_loss,val_loss");
    const auto& tl = train->at("loss_curve");
    const auto& vl = train->at("val_loss_curve");
    for (std::size_t e = 0; e < tl.size(); ++e) {
      csv.row(std::to_string(e + 1), num(tl[e].get<double>()),
              e < vl.size() ? num(vl[e].get<double>()) : std::string());
    }
    out.series.emplace_back("scorer_loss.csv", csv.text);
  } else {
    missing("scorer");
  }

  if (auto t = try_json(run_dir / "scorer" / "threshold" / "threshold.json")) {
    summary["threshold"] = *t;
  } else {
    missing("threshold");
  }

  Csv lengths("source,length,count");
  Csv labels("source,label,count");
  auto add_hist = [&](const std::string& source, const json& stats) {
    for (const auto& [len, n] : stats.at("lengths").items()) {
      lengths.row(source, len, std::to_string(n.get<std::int64_t>()));
    }
    const auto& lh = stats.at("labels");
    for (std::size_t k = 0; k < lh.size(); ++k) {
      labels.row(source, std::to_string(k), std::to_string(lh[k].get<std::int64_t>()));
    }
  };

  json extraction = json::object();
  for (const char* m : kExtractionMethods) {
    auto metrics = try_json(run_dir / "extract" / m / "metrics.json");
    if (!metrics) {
      if (std::string(m) != "gt-relabel") missing("extract/" + std::string(m));
      continue;
    }
    if (metrics->contains("model")) {
      (*metrics)["model"].erase("loss_curve");
      (*metrics)["model"].erase("val_loss_curve");
    }
    add_hist(std::string("extract/") + m, metrics->at("stats"));
    metrics->erase("stats");
    extraction[m] = *metrics;
  }
  summary["extraction"] = extraction;

  if (extraction.contains("ps")) {
    const auto& ps = extraction["ps"];
    summary["segmenter_deviations"] = {
        {"stalls", ps.value("stalls", 0)},
        {"gaps", ps.value("gaps", 0)},
        {"gap_transitions", ps.value("gap_transitions", 0)},
        {"forced_advance", ps.value("stalls", 0) > 0}};
  }

  json augmentation = json::object();
  std::map<std::string, std::vector<std::int64_t>> added_by_label;
  for (const auto& c : cfg.policy.conditions) {
    if (c.rfind("gt-", 0) == 0 && c != "gt-relabel") continue;
    auto a = try_json(run_dir / "augment" / c / "augment.json");
    if (!a) {
      missing("augment/" + c);
      continue;
    }
    add_hist("augment/" + c, a->at("added_stats"));
    added_by_label[c] = a->at("added_stats").at("labels").get<std::vector<std::int64_t>>();
    a->erase("added_stats");
    augmentation[c] = *a;
  }
  summary["augmentation"] = augmentation;
  out.series.emplace_back("length_histogram.csv", lengths.text);
  out.series.emplace_back("label_histogram.csv", labels.text);

  json policy = json::object();
  Csv runs("condition,seed,success_rate");
  std::map<std::string, SeedStats> stats;
  std::map<std::string, std::vector<json>> evals;
  for (const auto& c : cfg.policy.conditions) {
    std::vector<double> rates;
    for (auto s : cfg.policy.seeds) {
      auto e = try_json(run_dir / "eval" / c / policy_file_name(s) / "eval.json");
      if (!e) {
        missing("eval/" + c + "/" + policy_file_name(s));
        continue;
      }
      const double r = e->at("success_rate").get<double>();
      rates.push_back(r);
      runs.row(c, std::to_string(s), num(r));
      evals[c].push_back(*e);
    }
    if (rates.empty()) continue;
    const SeedStats st = seed_stats(rates);
    stats[c] = st;
    policy[c] = {{"seeds", st.rates.size()},
                 {"mean", st.mean},
                 {"std", st.stddev ? json(*st.stddev) : json(nullptr)},
                 {"success_rates", st.rates}};
  }
  summary["policy"] = policy;
  out.series.emplace_back("policy_conditions.csv", runs.text);

  const std::string start = start_condition(cfg.starting_split);
  summary["starting_condition"] = start;
  auto mean_of = [&stats](const std::string& c) -> std::optional<double> {
    auto it = stats.find(c);
    return it == stats.end() ? std::nullopt : std::optional<double>(it->second.mean);
  };
  json orderings = json::object();
  auto order = [&](const std::string& name, const std::string& a, const std::string& b,
                   bool strict) {
    const auto ma = mean_of(a);
    const auto mb = mean_of(b);
    if (!ma || !mb) return;
    orderings[name] = {{"lhs", a}, {"rhs", b}, {"lhs_mean", *ma}, {"rhs_mean", *mb},
                       {"holds", strict ? *ma > *mb : *ma <= *mb}};
  };
  order("more_annotation_helps", "gt-100", "gt-10", true);
  order("ps_augmentation_helps", "ps", start, true);
  order("random_augmentation_does_not_help", "random", start, false);
  summary["orderings"] = orderings;

  if (evals.contains("ps") && evals.contains(start) && added_by_label.contains("ps")) {
    const PolicyEval base = pooled_eval(evals[start]);
    const PolicyEval aug = pooled_eval(evals["ps"]);
    const ImprovementTable t = per_task_improvement(base, aug, added_by_label["ps"]);
    Csv csv("label,base,augmented,improvement,added");
    json rows = json::array();
    for (const auto& r : t.rows) {
      csv.row(std::to_string(r.label), num(r.base), num(r.augmented), num(r.improvement),
              std::to_string(r.added));
      rows.push_back({{"label", r.label},
                      {"base", r.base},
                      {"augmented", r.augmented},
                      {"improvement", r.improvement},
                      {"added", r.added}});
    }
    summary["per_task_improvement"] = {
        {"base", start},
        {"augmented", "ps"},
        {"rows", rows},
        {"spearman", t.rank_correlation ? json(*t.rank_correlation) : json(nullptr)}};
    out.series.emplace_back("per_task_improvement.csv", csv.text);
  } else {
    missing("per_task_improvement");
  }

  summary["missing"] = out.missing;
  out.summary = summary.dump(2) + "\n";
  return out;
}

void write_report(const ReportBundle& bundle, const fs::path& out_dir) {
  write_text_file(out_dir / "summary.json", bundle.summary);
  for (const auto& [name, text] : bundle.series) write_text_file(out_dir / "series" / name, text);
}

ReportBundle emit_report(const fs::path& run_dir) {
  ReportBundle b = build_report(run_dir);
  write_report(b, run_dir / "report");
  return b;
}

}  // namespace playseg

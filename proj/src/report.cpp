#include "degenbranch/report.hpp"

#include <ctime>
#include <fmt/format.h>
#include <sstream>

#include "degenbranch/error.hpp"
#include "degenbranch/rng.hpp"

namespace degenbranch {

namespace {

std::string g17(double x) { return fmt::format("{:.17g}", x); }

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json interval_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

Json constant_json(const ConstantResult& c) {
  Json out = {{"value", c.value},
              {"method", std::string(to_string(c.method))},
              {"est_abs_error", c.est_abs_error},
              {"regime", std::string(to_string(c.regime))}};
  if (c.cross_check) out["cross_check"] = *c.cross_check;
  if (c.truncation_radius) out["truncation_radius"] = *c.truncation_radius;
  return out;
}

Json box_json(const BoxSummary& box) {
  Json cells = Json::array();
  for (const auto& c : box.cells) {
    cells.push_back({{"t", c.t},
                     {"mean", c.mean},
                     {"sd", c.sd},
                     {"mean_se", c.mean_se},
                     {"variance", c.variance.variance},
                     {"variance_ci", interval_json(c.variance.ci)},
                     {"centering_integral", c.centering_integral}});
  }
  Json out = {{"L", box.half_width}, {"cells", cells}};
  out["correlation"] = box.correlation.empty() ? Json(nullptr) : Json(box.correlation);
  return out;
}

}  // namespace

std::string tool_version() { return DEGENBRANCH_VERSION; }

std::string sample_jsonl(const FluctuationSample& s) {
  return fmt::format(
      "{{\"n\":{},\"t\":{},\"replicate\":{},\"value\":{},\"L\":{},\"centering_mode\":\"{}\","
      "\"accuracy_flag\":{}}}",
      g17(s.n), g17(s.t), s.replicate_id, g17(s.value), g17(s.half_widths.at(0)),
      to_string(s.centering_mode), s.accuracy_flag ? "true" : "false");
}

std::string sample_csv_header() { return "n,t,replicate,value,L,centering_mode,accuracy_flag"; }

std::string sample_csv(const FluctuationSample& s) {
  return fmt::format("{},{},{},{},{},{},{}", g17(s.n), g17(s.t), s.replicate_id, g17(s.value),
                     g17(s.half_widths.at(0)), to_string(s.centering_mode),
                     s.accuracy_flag ? 1 : 0);
}

Json summary_to_json(const SummaryReport& r) {
  Json scales = Json::array();
  for (const auto& s : r.scales) {
    Json scale = {{"n", s.n},
                  {"delta_n", s.delta_n},
                  {"F_n", s.fn},
                  {"mean_roots", s.mean_roots},
                  {"mean_particles", s.mean_particles},
                  {"primary", box_json(s.primary)},
                  {"secondary", box_json(s.secondary)},
                  {"refinement",
                   {{"refined_replicates", s.refined_replicates},
                    {"flagged_replicates", s.flagged_replicates},
                    {"max_gap", s.max_refinement_gap}}}};
    Json ratios = Json::array();
    for (std::size_t j = 0; j < s.primary.cells.size(); ++j) {
      const double big = s.primary.cells[j].variance.variance;
      ratios.push_back(big > 0.0 ? s.secondary.cells[j].variance.variance / big : 0.0);
    }
    scale["truncation_variance_ratio"] = ratios;
    if (s.normality) {
      scale["normality"] = {{"t", s.primary.cells.back().t},
                            {"ks_statistic", s.normality->ks_statistic},
                            {"p_value", s.normality->p_value},
                            {"skewness", s.normality->skewness},
                            {"excess_kurtosis", s.normality->excess_kurtosis}};
    }
    scales.push_back(scale);
  }

  Json fits = Json::array();
  for (std::size_t j = 0; j < r.exponent_fits.size(); ++j) {
    const auto& f = r.exponent_fits[j];
    if (!f) continue;
    Json fit = {{"t", r.config.t_grid[j]},
                {"slope", f->slope},
                {"intercept", f->intercept},
                {"stderr", f->stderr_slope},
                {"residual_se", f->residual_se}};
    fit["ci"] = f->ci ? interval_json(*f->ci) : Json(nullptr);
    fits.push_back(fit);
  }

  Json prediction = {{"exponent", r.prediction.exponent},
                     {"constant_name", r.prediction.constant_name},
                     {"limit_variance", r.prediction.limit_variance},
                     {"provenance", r.prediction.provenance}};
  if (r.prediction.constant) prediction["constant"] = constant_json(*r.prediction.constant);

  Json gates = Json::array();
  for (const auto& g : r.gates) {
    gates.push_back(
        {{"name", g.name}, {"passed", g.passed}, {"enforced", g.enforced}, {"detail", g.detail}});
  }

  Json out = {{"tool_version", tool_version()},
              {"name", r.config.name},
              {"master_seed", r.config.master_seed},
              {"stream_rule", std::string(kStreamDerivationRule)},
              {"regime", std::string(to_string(r.regime))},
              {"bar_alpha", r.bar_alpha},
              {"replicates", r.config.replicates},
              {"t_grid", r.config.t_grid},
              {"prediction", prediction},
              {"scales", scales},
              {"exponent_fits", fits}};
  if (r.log_corrected_fit) {
    out["log_corrected_fit"] = {{"intercept", r.log_corrected_fit->intercept},
                                {"residual_se", r.log_corrected_fit->residual_se}};
  }
  out["degenerate"] = r.degenerate;
  out["gates"] = gates;
  out["all_gates_passed"] = r.all_gates_passed();
  return out;
}

std::string variance_table_csv(const SummaryReport& r) {
  std::string out = "n,t,L,box,variance,ci_lo,ci_hi,unnormalized_variance\n";
  for (const auto& s : r.scales) {
    for (const auto* box : {&s.primary, &s.secondary}) {
      const char* which = box == &s.primary ? "primary" : "secondary";
      for (const auto& c : box->cells) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", g17(s.n), g17(c.t), g17(box->half_width),
                           which, g17(c.variance.variance), g17(c.variance.ci.lo),
                           g17(c.variance.ci.hi), g17(s.fn * s.fn * c.variance.variance));
      }
    }
  }
  return out;
}

RunWriter::RunWriter(std::filesystem::path dir, SampleFormat format,
                     const ExperimentConfig& config, std::size_t workers)
    : dir_(std::move(dir)),
      format_(format),
      config_(config),
      workers_(workers),
      started_(utc_now()),
      t0_(std::chrono::steady_clock::now()) {
  std::filesystem::create_directories(dir_);
  write_manifest(false, Json::object());
  samples_.open(samples_path(), std::ios::binary | std::ios::trunc);
  if (!samples_) throw Error("cannot open " + samples_path().string());
  if (format_ == SampleFormat::Csv) samples_ << sample_csv_header() << '\n';
  samples_.flush();
}

std::filesystem::path RunWriter::samples_path() const {
  return dir_ / (format_ == SampleFormat::Jsonl ? "samples.jsonl" : "samples.csv");
}

void RunWriter::write_samples(const std::vector<FluctuationSample>& samples) {
  for (const auto& s : samples) {
    samples_ << (format_ == SampleFormat::Jsonl ? sample_jsonl(s) : sample_csv(s)) << '\n';
  }
  samples_.flush();
}

void RunWriter::finish(const SummaryReport& report) {
  samples_.close();
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error("cannot write " + (dir_ / name).string());
  };
  write("summary.json", format_json(summary_to_json(report)) + "\n");
  write("variances.csv", variance_table_csv(report));
  Json digests = Json::object();
  for (const auto& p : {samples_path(), dir_ / "summary.json", dir_ / "variances.csv"}) {
    digests[p.filename().string()] = sha256_file(p);
  }
  write_manifest(true, digests);
}

void RunWriter::write_manifest(bool complete, const Json& digests) {
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  Json m = {{"tool_version", tool_version()},
            {"complete", complete},
            {"master_seed", config_.master_seed},
            {"stream_rule", std::string(kStreamDerivationRule)},
            {"workers", workers_},
            {"started_utc", started_},
            {"finished_utc", complete ? Json(utc_now()) : Json(nullptr)},
            {"runtime_seconds", complete ? Json(seconds) : Json(nullptr)},
            {"config", config_to_json(config_)},
            {"digests", digests}};
  const auto path = dir_ / "manifest.json";
  const auto tmp = dir_ / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << format_json(m) << '\n';
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace degenbranch
